//! Extending a fixed center set by `s` near-optimal additions.
//!
//! The fixed centers are contracted into a single synthetic super-point
//! `u*`, turning "add s centers to U" into an (s+1)-median instance over the
//! contracted metric. A huge weight on `u*` forces any decent solver to keep
//! it open; the additions it returns lift back to the original metric with
//! the same cost.

use std::collections::HashMap;

use rand::Rng;

use crate::error::{Error, Result};
use crate::metric::{CenterSet, Metric, PointId, PointSet, SYNTHETIC_ID};
use crate::solvers::{static_kmedian, SolverConfig};

/// Cap on the super-point weight; beyond this the value is clamped (the
/// force-include step makes the exact magnitude immaterial).
const MAX_STAR_WEIGHT: f64 = 1e300;

/// Contracted view of a base metric: the center set `U` collapses to the
/// synthetic point `u*` with `d'(x, u*) = d(x, U)` and
/// `d'(x, y) = min(d'(x, u*) + d'(y, u*), d(x, y))`.
pub struct ContractedSpace<'a, M: Metric> {
    base: &'a M,
    to_centers: HashMap<u64, f64>,
    star: PointId,
}

impl<'a, M: Metric> ContractedSpace<'a, M> {
    pub fn star(&self) -> PointId {
        self.star
    }

    fn d_star(&self, x: PointId) -> f64 {
        self.to_centers[&x.0]
    }
}

impl<M: Metric> Metric for ContractedSpace<'_, M> {
    fn dist(&self, a: PointId, b: PointId) -> f64 {
        if a == b {
            return 0.0;
        }
        if a == self.star {
            return self.d_star(b);
        }
        if b == self.star {
            return self.d_star(a);
        }
        let via_star = self.d_star(a) + self.d_star(b);
        via_star.min(self.base.dist(a, b))
    }
}

/// A contraction: the derived metric plus the contracted point set
/// `P' = (P - U) + u*`.
pub struct Contraction<'a, M: Metric> {
    pub space: ContractedSpace<'a, M>,
    pub pprime: PointSet,
    pub star_weight: f64,
}

/// Contract `centers` to the synthetic super-point. `d'(x, u*)` is
/// materialized for every member of `points` (centers included), so distance
/// queries stay O(1). The super-point weight is
/// `beta_target * |P| * max_weight * delta`, clamped to a finite cap.
pub fn contract<'a, M: Metric>(
    base: &'a M,
    points: &PointSet,
    centers: &CenterSet,
    beta_target: f64,
    delta: f64,
) -> Result<Contraction<'a, M>> {
    if centers.is_empty() {
        return Err(Error::EmptyCenters);
    }
    let mut to_centers = HashMap::with_capacity(points.len());
    let mut max_w: f64 = 0.0;
    for (p, w) in points.iter() {
        let mut best = f64::INFINITY;
        for &c in centers {
            let d = base.dist(p, c);
            if d < best {
                best = d;
            }
        }
        to_centers.insert(p.0, best);
        max_w = max_w.max(w);
    }
    let star = SYNTHETIC_ID;
    to_centers.insert(star.0, 0.0);
    let star_weight = (beta_target * points.len().max(1) as f64 * max_w.max(1.0) * delta)
        .min(MAX_STAR_WEIGHT);
    let mut pprime = PointSet::new();
    for (p, w) in points.iter() {
        if !centers.contains(&p) {
            pprime.insert_new(p, w)?;
        }
    }
    pprime.insert_new(star, star_weight)?;
    Ok(Contraction {
        space: ContractedSpace {
            base,
            to_centers,
            star,
        },
        pprime,
        star_weight,
    })
}

/// Extend `centers` by at most `s` points of `points`, approximately
/// minimizing the joint cost. Runs the static solver for `s + 1` centers on
/// the contraction and lifts the result back; the super-point is structurally
/// force-included in case solver slack ever drops it.
pub fn develop_centers<M: Metric>(
    base: &M,
    points: &PointSet,
    centers: &CenterSet,
    s: usize,
    delta: f64,
    cfg: &SolverConfig,
    rng: &mut impl Rng,
) -> Result<CenterSet> {
    if s == 0 {
        return Ok(centers.clone());
    }
    let contraction = contract(base, points, centers, cfg.beta_target, delta)?;
    let cands: Vec<PointId> = contraction.pprime.ids().collect();
    let mut f = static_kmedian(
        &contraction.space,
        &contraction.pprime,
        s + 1,
        &cands,
        cfg,
        rng,
    );
    let star = contraction.space.star();
    if !f.contains(&star) {
        if f.len() > s {
            drop_least_marginal(&contraction.space, &contraction.pprime, &mut f)?;
        }
        f.insert(star);
    }
    let mut out = centers.clone();
    for c in f {
        if c != star {
            out.insert(c);
        }
    }
    Ok(out)
}

/// Remove the center whose deletion increases the contracted cost least
/// (ties to the smallest id).
fn drop_least_marginal<M: Metric>(
    m: &M,
    points: &PointSet,
    centers: &mut CenterSet,
) -> Result<()> {
    let state = crate::local_search::AssignmentState::new(m, points, centers)?;
    let (victim, _) = crate::local_search::best_deletion(&state)?;
    centers.remove(&victim);
    Ok(())
}
