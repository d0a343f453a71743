//! Static primitives the dynamic engine leans on: a sampled 1-median and a
//! swap-based static k-median solver.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::local_search::AssignmentState;
use crate::metric::{cost_single, CenterSet, Metric, PointId, PointSet};

/// How 1-median subproblems are solved inside robustification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum OneMedianKind {
    /// Weighted sampling with an argmin over the sampled candidates.
    #[default]
    Sampled,
    /// Deterministic argmin over the whole ball plus the anchor; used by the
    /// verification paths and by exact-mode replays.
    Exact,
}

/// Tunables for the static solvers and the randomized local search.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Samples per 1-median call are `sample_count_multiplier * ceil(log2 n)`,
    /// floored at one sample.
    pub sample_count_multiplier: usize,
    /// Target (and empirically validated) approximation factor of the static
    /// k-median solver; also sizes the contraction super-point weight.
    pub beta_target: f64,
    /// Root seed for components that derive their own rng streams.
    pub rng_seed: u64,
    /// A swap is accepted only when it improves cost by a factor of at least
    /// `(1 - swap_improvement_factor / k)`.
    pub swap_improvement_factor: f64,
    /// Iteration budget multiplier for `rand_local_search`.
    pub ls_iteration_multiplier: usize,
    /// 1-median strategy.
    pub one_median: OneMedianKind,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            sample_count_multiplier: 3,
            beta_target: 6.0,
            rng_seed: 0,
            swap_improvement_factor: 0.2,
            ls_iteration_multiplier: 8,
            one_median: OneMedianKind::Sampled,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sample_count_multiplier < 1 {
            return Err(Error::InvalidConfig("sample_count_multiplier < 1".into()));
        }
        if !(self.beta_target > 1.0) {
            return Err(Error::InvalidConfig("beta_target must exceed 1".into()));
        }
        if !(self.swap_improvement_factor > 0.0 && self.swap_improvement_factor < 1.0) {
            return Err(Error::InvalidConfig(
                "swap_improvement_factor must lie in (0, 1)".into(),
            ));
        }
        if self.ls_iteration_multiplier < 1 {
            return Err(Error::InvalidConfig("ls_iteration_multiplier < 1".into()));
        }
        Ok(())
    }

    pub fn exact(mut self) -> Self {
        self.one_median = OneMedianKind::Exact;
        self
    }
}

/// Draw one member of `points` with probability `w(p) / w(points)`, via the
/// inverse CDF over the id ordering.
pub fn weighted_sample(points: &PointSet, rng: &mut impl Rng) -> Option<PointId> {
    if points.is_empty() {
        return None;
    }
    let total = points.total_weight();
    let r: f64 = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = None;
    for (id, w) in points.iter() {
        acc += w;
        last = Some(id);
        if acc >= r {
            return last;
        }
    }
    last // rounding pushed r past the final prefix sum
}

/// Sampled 1-median: candidates are `Theta(log n)` weighted draws from `b`
/// plus the anchor; returns the candidate of minimum cost against `b`
/// (ties to the smallest id). Empty `b` returns the anchor.
pub fn fast_one_median<M: Metric>(
    m: &M,
    b: &PointSet,
    anchor: PointId,
    cfg: &SolverConfig,
    rng: &mut impl Rng,
) -> PointId {
    if b.is_empty() {
        return anchor;
    }
    let samples = (cfg.sample_count_multiplier
        * ((b.len() as f64 + 1.0).log2().ceil() as usize))
        .max(1);
    let mut cands = CenterSet::new();
    cands.insert(anchor);
    for _ in 0..samples {
        if let Some(p) = weighted_sample(b, rng) {
            cands.insert(p);
        }
    }
    argmin_cost(m, b, cands.iter().copied())
}

/// Deterministic 1-median over `b + anchor` (exact proper argmin).
pub fn exact_one_median<M: Metric>(m: &M, b: &PointSet, anchor: PointId) -> PointId {
    if b.is_empty() {
        return anchor;
    }
    let cands = b.ids().chain(std::iter::once(anchor));
    argmin_cost(m, b, cands)
}

/// Dispatch on the configured 1-median strategy.
pub fn one_median<M: Metric>(
    m: &M,
    b: &PointSet,
    anchor: PointId,
    cfg: &SolverConfig,
    rng: &mut impl Rng,
) -> PointId {
    match cfg.one_median {
        OneMedianKind::Sampled => fast_one_median(m, b, anchor, cfg, rng),
        OneMedianKind::Exact => exact_one_median(m, b, anchor),
    }
}

fn argmin_cost<M: Metric>(
    m: &M,
    b: &PointSet,
    cands: impl Iterator<Item = PointId>,
) -> PointId {
    let mut best: Option<(f64, PointId)> = None;
    for c in cands {
        let cc = cost_single(m, c, b);
        match best {
            Some((bc, bid)) if (cc, c) >= (bc, bid) => {}
            _ => best = Some((cc, c)),
        }
    }
    best.expect("nonempty candidates").1
}

/// Static k-median by weighted single-swap local search over `candidates`.
///
/// Seeds with distance-weighted sampling, then repeatedly applies the first
/// swap found (in a seeded random scan order) that improves the objective by
/// a factor of at least `(1 - swap_improvement_factor / k)`; terminates once
/// a full scan finds none. Returns at most `k` centers. Deterministic given
/// the rng.
///
/// Oracle-checkable instances (`n * |candidates|` up to two million distance
/// evaluations) get the full scan-to-quiescence treatment. Past that the
/// scans subsample candidates and run under a total work budget, trading
/// the termination certificate for bounded time.
pub fn static_kmedian<M: Metric>(
    m: &M,
    points: &PointSet,
    k: usize,
    candidates: &[PointId],
    cfg: &SolverConfig,
    rng: &mut impl Rng,
) -> CenterSet {
    let mut cands: Vec<PointId> = candidates.to_vec();
    cands.sort_unstable();
    cands.dedup();
    if cands.is_empty() || k == 0 {
        return CenterSet::new();
    }
    if k >= cands.len() {
        return cands.into_iter().collect();
    }
    if points.is_empty() {
        return cands.into_iter().take(k).collect();
    }
    let support = points.id_set();
    if k >= support.len() && support.iter().all(|id| cands.binary_search(id).is_ok()) {
        return support;
    }

    let seeds = seed_by_distance(m, points, k, &cands, rng);
    let mut state = AssignmentState::new(m, points, &seeds).expect("seeding is nonempty");

    let n = points.len();
    let full_scan = n.saturating_mul(cands.len()) <= 2_000_000;
    let per_pass = if full_scan {
        cands.len()
    } else {
        cands.len().min(512.max(4 * k))
    };
    let mut eval_budget: usize = if full_scan {
        usize::MAX
    } else {
        2_000_000.max(24 * n)
    };

    let mut order: Vec<PointId> = cands.clone();
    let threshold_factor = 1.0 - cfg.swap_improvement_factor / k as f64;
    let max_passes = 64 + 8 * k;
    'passes: for _ in 0..max_passes {
        if state.cost() <= 0.0 {
            break;
        }
        partial_shuffle(&mut order, per_pass, rng);
        let mut improved = false;
        for &v in &order[..per_pass] {
            if state.centers().contains(&v) {
                continue;
            }
            eval_budget = eval_budget.saturating_sub(n);
            let before = state.cost();
            state.insert_center(v);
            let (z, after) = match crate::local_search::best_deletion(&state) {
                Ok(r) => r,
                Err(_) => {
                    // Single-center corner: keep v only if it helps.
                    if state.cost() < before {
                        improved = true;
                        continue;
                    }
                    state.remove_center(v).expect("v was just inserted");
                    continue;
                }
            };
            if after <= threshold_factor * before {
                state.remove_center(z).expect("z is a center");
                improved = true;
            } else {
                state.remove_center(v).expect("v was just inserted");
            }
            if eval_budget == 0 {
                break 'passes;
            }
        }
        if !improved {
            break;
        }
    }
    state.centers().clone()
}

/// Distance-weighted seeding: iteratively sample candidates proportionally to
/// `w(p) * d(p, chosen)` among candidates that are current points; falls back
/// to smallest unchosen ids when no weighted mass remains.
fn seed_by_distance<M: Metric>(
    m: &M,
    points: &PointSet,
    k: usize,
    cands: &[PointId],
    rng: &mut impl Rng,
) -> CenterSet {
    let in_points: Vec<(PointId, f64)> = points
        .iter()
        .filter(|(id, _)| cands.binary_search(id).is_ok())
        .collect();
    let mut chosen = CenterSet::new();
    if in_points.is_empty() {
        chosen.insert(cands[0]);
        return chosen;
    }
    // First seed: weight-proportional.
    let total: f64 = in_points.iter().map(|&(_, w)| w).sum();
    let mut r = rng.random::<f64>() * total;
    let mut first = in_points[0].0;
    for &(id, w) in &in_points {
        r -= w;
        first = id;
        if r <= 0.0 {
            break;
        }
    }
    chosen.insert(first);
    let mut dcur: Vec<f64> = in_points.iter().map(|&(id, _)| m.dist(id, first)).collect();
    while chosen.len() < k {
        let mass: f64 = in_points
            .iter()
            .zip(&dcur)
            .map(|(&(_, w), &d)| w * d)
            .sum();
        if mass <= 0.0 {
            break; // every candidate point already coincides with a seed
        }
        let mut r = rng.random::<f64>() * mass;
        let mut pick = None;
        for (i, &(id, w)) in in_points.iter().enumerate() {
            r -= w * dcur[i];
            if r <= 0.0 {
                pick = Some((i, id));
                break;
            }
        }
        let (pi, pick) = pick.unwrap_or((in_points.len() - 1, in_points.last().unwrap().0));
        if !chosen.insert(pick) {
            dcur[pi] = 0.0;
            continue;
        }
        for (i, &(id, _)) in in_points.iter().enumerate() {
            dcur[i] = dcur[i].min(m.dist(id, pick));
        }
    }
    chosen
}

/// Partial Fisher-Yates: after the call, the first `take` slots hold a
/// uniform sample without replacement (hand-rolled so the deterministic path
/// does not depend on rand's slice adapters).
fn partial_shuffle<T>(v: &mut [T], take: usize, rng: &mut impl Rng) {
    let take = take.min(v.len());
    for i in 0..take {
        let j = rng.random_range(i..v.len());
        v.swap(i, j);
    }
}
