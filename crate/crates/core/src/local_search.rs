//! Randomized local search for shrinking a center set, plus the shared
//! nearest/second-nearest assignment bookkeeping it runs on.

use rand::Rng;

use crate::error::{Error, Result};
use crate::metric::{CenterSet, Metric, PointId, PointSet};
use crate::solvers::SolverConfig;

/// Per-point nearest and second-nearest center, with a running total cost.
///
/// Supports O(n) center insertion and O(n + |cluster| * k) center removal,
/// which is what the swap loops need: evaluating "delete z" for every z in
/// one pass reduces to per-center loss accumulation.
pub struct AssignmentState<'a, M: Metric> {
    metric: &'a M,
    pts: Vec<(PointId, f64)>,
    centers: CenterSet,
    // (center, distance); second is None while only one center exists.
    near: Vec<(PointId, f64)>,
    second: Vec<Option<(PointId, f64)>>,
    total: f64,
}

impl<'a, M: Metric> AssignmentState<'a, M> {
    pub fn new(metric: &'a M, points: &PointSet, centers: &CenterSet) -> Result<Self> {
        if centers.is_empty() && !points.is_empty() {
            return Err(Error::EmptyCenters);
        }
        let pts: Vec<(PointId, f64)> = points.iter().collect();
        let mut state = Self {
            metric,
            pts,
            centers: CenterSet::new(),
            near: Vec::new(),
            second: Vec::new(),
            total: 0.0,
        };
        state.rebuild(centers);
        Ok(state)
    }

    fn rebuild(&mut self, centers: &CenterSet) {
        self.centers = centers.clone();
        self.near.clear();
        self.second.clear();
        self.total = 0.0;
        for &(p, w) in &self.pts {
            let (n, s) = self.scan_two(p);
            self.total += w * n.1;
            self.near.push(n);
            self.second.push(s);
        }
    }

    /// Best and second-best center for `p`, ties by smallest id (centers are
    /// iterated in id order, and only strict improvements replace).
    fn scan_two(&self, p: PointId) -> ((PointId, f64), Option<(PointId, f64)>) {
        let mut best: Option<(PointId, f64)> = None;
        let mut second: Option<(PointId, f64)> = None;
        for &c in &self.centers {
            let d = self.metric.dist(p, c);
            match best {
                Some((_, bd)) if d >= bd => match second {
                    Some((_, sd)) if d >= sd => {}
                    _ => second = Some((c, d)),
                },
                _ => {
                    second = best;
                    best = Some((c, d));
                }
            }
        }
        (best.expect("at least one center"), second)
    }

    pub fn centers(&self) -> &CenterSet {
        &self.centers
    }

    pub fn cost(&self) -> f64 {
        self.total
    }

    /// From-scratch recomputation; test/debug oracle for the ledger.
    pub fn recompute_cost(&self) -> f64 {
        self.pts
            .iter()
            .map(|&(p, w)| {
                let mut best = f64::INFINITY;
                for &c in &self.centers {
                    best = best.min(self.metric.dist(p, c));
                }
                if best.is_finite() {
                    w * best
                } else {
                    0.0
                }
            })
            .sum()
    }

    pub fn insert_center(&mut self, v: PointId) {
        if !self.centers.insert(v) {
            return;
        }
        for i in 0..self.pts.len() {
            let (p, w) = self.pts[i];
            let d = self.metric.dist(p, v);
            let (nc, nd) = self.near[i];
            if d < nd || (d == nd && v < nc) {
                self.total += w * (d - nd);
                self.second[i] = Some((nc, nd));
                self.near[i] = (v, d);
            } else {
                match self.second[i] {
                    Some((sc, sd)) if d > sd || (d == sd && v > sc) => {}
                    _ => self.second[i] = Some((v, d)),
                }
            }
        }
    }

    pub fn remove_center(&mut self, z: PointId) -> Result<()> {
        if !self.centers.remove(&z) {
            return Err(Error::InvalidArgument(format!("{z} is not a center")));
        }
        if self.centers.is_empty() && !self.pts.is_empty() {
            self.centers.insert(z);
            return Err(Error::EmptyCenters);
        }
        for i in 0..self.pts.len() {
            let (p, w) = self.pts[i];
            if self.near[i].0 == z {
                let (n, s) = self.scan_two(p);
                self.total += w * (n.1 - self.near[i].1);
                self.near[i] = n;
                self.second[i] = s;
            } else if self.second[i].map(|(c, _)| c) == Some(z) {
                let (_, s) = self.scan_two(p);
                self.second[i] = s;
            }
        }
        Ok(())
    }

    /// Cost increase incurred by deleting each current center: for center c,
    /// the sum over its cluster of (second nearest - nearest), weighted.
    /// Equals a from-scratch recomputation of `cost(centers - c)` minus the
    /// current cost.
    pub fn deletion_losses(&self) -> Vec<(PointId, f64)> {
        let mut loss: std::collections::BTreeMap<PointId, f64> =
            self.centers.iter().map(|&c| (c, 0.0)).collect();
        for i in 0..self.pts.len() {
            let (_, w) = self.pts[i];
            let (nc, nd) = self.near[i];
            if let Some((_, sd)) = self.second[i] {
                *loss.get_mut(&nc).unwrap() += w * (sd - nd);
            } else if !self.pts.is_empty() {
                // Single center: deleting it is not a valid move.
                *loss.get_mut(&nc).unwrap() = f64::INFINITY;
            }
        }
        loss.into_iter().collect()
    }

    #[cfg(debug_assertions)]
    fn debug_check_ledger(&self) {
        if self.pts.len() <= 64 && self.centers.len() <= 16 {
            let fresh = self.recompute_cost();
            debug_assert!(
                (self.total - fresh).abs() <= 1e-6 * fresh.abs().max(1.0),
                "assignment ledger drifted: {} vs {}",
                self.total,
                fresh
            );
        }
    }

    #[cfg(not(debug_assertions))]
    fn debug_check_ledger(&self) {}
}

/// Center of `state` whose deletion increases total cost the least, with the
/// resulting total. Ties break to the smallest id. Deleting the only center
/// of a nonempty point set is an error.
pub fn best_deletion<M: Metric>(state: &AssignmentState<'_, M>) -> Result<(PointId, f64)> {
    if state.centers.len() <= 1 && !state.pts.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot delete the only center of a nonempty point set".into(),
        ));
    }
    let mut best: Option<(f64, PointId)> = None;
    for (c, l) in state.deletion_losses() {
        match best {
            Some((bl, _)) if l >= bl => {}
            _ => best = Some((l, c)),
        }
    }
    let (loss, c) = best.ok_or_else(|| Error::InvalidArgument("no centers".into()))?;
    Ok((c, state.total + loss))
}

/// Shrink `u` by `s` centers via randomized insert-then-best-delete swaps.
///
/// Starts from `u` minus its `s` smallest ids and runs
/// `ls_iteration_multiplier * s * ceil(log2(n + 2))` iterations; each samples
/// a held-out center `v` uniformly, inserts it, and deletes the center whose
/// removal costs least (possibly `v` itself, so a swap never increases the
/// ledger). Deterministic given the rng.
pub fn rand_local_search<M: Metric>(
    metric: &M,
    points: &PointSet,
    u: &CenterSet,
    s: usize,
    cfg: &SolverConfig,
    rng: &mut impl Rng,
) -> Result<CenterSet> {
    if u.is_empty() || s + 1 > u.len() {
        return Err(Error::InvalidArgument(format!(
            "rand_local_search needs 0 <= s <= |U| - 1, got s={s} |U|={}",
            u.len()
        )));
    }
    if s == 0 {
        return Ok(u.clone());
    }
    if points.is_empty() {
        // Any subset costs zero; take the deterministic one.
        return Ok(u.iter().copied().take(u.len() - s).collect());
    }

    let mut held_out: Vec<PointId> = u.iter().copied().take(s).collect();
    let start: CenterSet = u.iter().copied().skip(s).collect();
    let mut state = AssignmentState::new(metric, points, &start)?;

    let n = points.len();
    let iters = cfg.ls_iteration_multiplier * s * ((n as f64 + 2.0).log2().ceil() as usize);
    for _ in 0..iters {
        let v = held_out[rng.random_range(0..held_out.len())];
        let before = state.cost();
        state.insert_center(v);
        let (z, after) = best_deletion(&state)?;
        state.remove_center(z)?;
        debug_assert!(after <= before + 1e-9 * before.abs().max(1.0));
        let _ = after;
        if z != v {
            let idx = held_out.binary_search(&v).expect("v came from the pool");
            held_out.remove(idx);
            let idx = held_out.binary_search(&z).unwrap_err();
            held_out.insert(idx, z);
        }
        state.debug_check_ledger();
    }
    Ok(state.centers().clone())
}
