//! The dynamic engine: epoch lifecycle, lazy updates, the per-point
//! nearest-center index, recourse bookkeeping, and the improper-to-proper
//! projection.
//!
//! While the input has at most `k` points the engine simply mirrors it
//! (bootstrap). Past that it runs in epochs: at an epoch open, a doubling
//! search measures how many centers can be shed before the objective blows
//! past a threshold, which fixes the epoch length `ell + 1` and shrinks the
//! working set to `k - ell` centers. Updates inside the epoch are handled
//! lazily (insertions become centers, deletions change nothing). The
//! close-out extends the epoch-start solution near-optimally, folds in the
//! epoch's insertions, shrinks back to `k` by randomized local search, and
//! robustifies the result, which restores the start-of-epoch invariant.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::develop::develop_centers;
use crate::error::{Error, Result};
use crate::local_search::rand_local_search;
use crate::metric::{cost, CenterSet, Metric, MetricSpace, PointId, PointSet};
use crate::oracles::{best_extension, opt_exact};
use crate::robustify::{robustify, CenterRecord, RobustSolution, RobustifyStats};
use crate::solvers::{static_kmedian, OneMedianKind, SolverConfig};

/// One stream element.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum UpdateEvent {
    Insert { id: PointId, weight: f64 },
    Delete { id: PointId },
}

/// Engine tunables. `paper_constants` reproduces the analysis constants
/// exactly; `practical` substitutes defaults small enough that epochs
/// actually stretch at benchmark sizes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EngineConfig {
    pub k: usize,
    pub gamma: f64,
    /// Epoch-shrink divisor: `ell = floor(l' / big_c)`.
    pub big_c: f64,
    /// Cost multiplier at which the center-removal doubling search stops.
    pub removal_threshold: f64,
    /// Stability threshold carried for diagnostics and oracle tests.
    pub stability_eta: f64,
    /// Centers added at close-out per epoch update: `s = ceil(mult * (ell+1))`.
    pub develop_slack_multiplier: f64,
    pub practical_mode: bool,
    /// Replace randomized subroutines by exact enumeration where budgets
    /// allow (verification replays).
    pub exact_mode: bool,
    pub seed: u64,
    pub delta: f64,
    /// Subset budget for exact-mode enumeration before falling back to the
    /// randomized subroutines.
    pub enumeration_budget: u64,
    pub solver: SolverConfig,
}

impl EngineConfig {
    /// The analysis constants: gamma = 4000, C = 12 * 3e5 * gamma * beta^2,
    /// removal threshold 14 * 400 * gamma * beta, slack 8C + 2.
    pub fn paper_constants(k: usize, delta: f64) -> Self {
        let solver = SolverConfig::default();
        let gamma = 4000.0;
        let beta = solver.beta_target;
        let big_c = 12.0 * 3e5 * gamma * beta * beta;
        Self {
            k,
            gamma,
            big_c,
            removal_threshold: 14.0 * 400.0 * gamma * beta,
            stability_eta: 400.0 * gamma * beta,
            develop_slack_multiplier: 8.0 * big_c + 2.0,
            practical_mode: false,
            exact_mode: false,
            seed: 0,
            delta,
            enumeration_budget: crate::oracles::DEFAULT_ENUMERATION_BUDGET,
            solver,
        }
    }

    /// Usable defaults for benchmarking; the analysis constants exist for
    /// proofs, not for runs.
    pub fn practical(k: usize, delta: f64) -> Self {
        Self {
            gamma: 4.0,
            big_c: 12.0,
            removal_threshold: 14.0,
            stability_eta: 216.0,
            develop_slack_multiplier: 10.0,
            practical_mode: true,
            ..Self::paper_constants(k, delta)
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.solver.rng_seed = seed;
        self
    }

    /// Exact subroutines: enumeration in place of local search where the
    /// budget allows, and deterministic 1-medians inside robustification.
    pub fn exact(mut self) -> Self {
        self.exact_mode = true;
        self.solver.one_median = OneMedianKind::Exact;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidConfig("k must be positive".into()));
        }
        if !(self.gamma >= 1.0) || !(self.big_c >= 1.0) {
            return Err(Error::InvalidConfig("gamma and big_c must be >= 1".into()));
        }
        if !(self.delta >= 1.0) {
            return Err(Error::InvalidConfig("delta must be >= 1".into()));
        }
        if !(self.removal_threshold >= 1.0) {
            return Err(Error::InvalidConfig("removal_threshold must be >= 1".into()));
        }
        if !(self.develop_slack_multiplier >= 1.0) {
            return Err(Error::InvalidConfig(
                "develop_slack_multiplier must be >= 1".into(),
            ));
        }
        self.solver.validate()
    }
}

/// Exact per-update diff of the maintained solution.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RecourseReport {
    pub added: CenterSet,
    pub removed: CenterSet,
    pub makerobust_calls: usize,
    pub epoch_boundary: bool,
}

impl RecourseReport {
    pub fn recourse(&self) -> usize {
        self.added.len() + self.removed.len()
    }
}

/// Detail recorded when an update closed an epoch (or left bootstrap).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochCloseStats {
    pub epoch_id: u64,
    pub ell: usize,
    pub from_bootstrap: bool,
    pub robustify: RobustifyStats,
    /// `|W (+) U_init|` before robustification.
    pub pre_robustify_diff: usize,
    /// The configured bound `2s + 2(ell + 1)` on that diff.
    pub pre_robustify_diff_bound: usize,
}

/// Cumulative counters across the run.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct EngineTotals {
    pub updates: u64,
    pub recourse: u64,
    pub epochs: u64,
    pub makerobust_type1: u64,
    pub makerobust_type2: u64,
    pub makerobust_type3: u64,
    pub max_contamination_per_point: usize,
    pub repeat_rebuild_violations: u64,
}

impl EngineTotals {
    pub fn makerobust_total(&self) -> u64 {
        self.makerobust_type1 + self.makerobust_type2 + self.makerobust_type3
    }
}

/// Where the engine is in its lifecycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PhaseInfo {
    Bootstrap,
    Epoch {
        ell: usize,
        updates_seen: usize,
    },
}

#[derive(Debug, Clone)]
struct EpochState {
    p0: PointSet,
    u_init: RobustSolution,
    ell: usize,
    updates_seen: usize,
    /// cost(U^(0), P^(0)) right after the epoch opened.
    cost0: f64,
}

#[derive(Debug, Clone)]
enum Phase {
    Bootstrap,
    Epoch(EpochState),
}

/// Total-order f64 key for the ordered index.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Dist(f64);

impl Eq for Dist {}

impl PartialOrd for Dist {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dist {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Per-point ordered structure over the current centers, keyed by distance.
/// Tracked for every live point and every center (a center deleted from the
/// input keeps its structure for as long as it remains a center).
#[derive(Debug, Clone, Default)]
pub struct NearestCenterIndex {
    trees: std::collections::BTreeMap<PointId, std::collections::BTreeSet<(Dist, PointId)>>,
    centers: CenterSet,
}

impl NearestCenterIndex {
    fn tracked_ids(&self) -> Vec<PointId> {
        self.trees.keys().copied().collect()
    }

    fn track<M: Metric>(&mut self, m: &M, p: PointId) {
        if self.trees.contains_key(&p) {
            return;
        }
        let tree = self
            .centers
            .iter()
            .map(|&c| (Dist(m.dist(p, c)), c))
            .collect();
        self.trees.insert(p, tree);
    }

    fn untrack(&mut self, p: PointId) {
        self.trees.remove(&p);
    }

    /// Apply a center diff; every tracked structure is updated and newly
    /// added centers become tracked themselves.
    pub fn apply_center_diff<M: Metric>(
        &mut self,
        m: &M,
        added: &CenterSet,
        removed: &CenterSet,
        live: &PointSet,
    ) -> Result<()> {
        for u in removed {
            if !self.centers.contains(u) {
                return Err(Error::InvalidArgument(format!(
                    "index diff removes non-center {u}"
                )));
            }
        }
        for u in added {
            if self.centers.contains(u) {
                return Err(Error::InvalidArgument(format!(
                    "index diff adds existing center {u}"
                )));
            }
        }
        for &u in removed {
            self.centers.remove(&u);
            for (&p, tree) in self.trees.iter_mut() {
                // Recomputing the key gives an O(log k) removal; the distance
                // function is pure, so the key matches the inserted one.
                let present = tree.remove(&(Dist(m.dist(p, u)), u));
                debug_assert!(present, "center {u} missing from tree of {p}");
            }
            if !live.contains(u) {
                self.untrack(u);
            }
        }
        for &u in added {
            self.centers.insert(u);
            for (&p, tree) in self.trees.iter_mut() {
                tree.insert((Dist(m.dist(p, u)), u));
            }
            self.track(m, u);
        }
        Ok(())
    }

    /// Nearest current center to `p` (`p` itself when it is a center).
    pub fn nearest(&self, p: PointId) -> Option<(PointId, f64)> {
        self.trees
            .get(&p)
            .and_then(|t| t.first())
            .map(|&(d, c)| (c, d.0))
    }

    pub fn centers(&self) -> &CenterSet {
        &self.centers
    }

    fn rebuild<M: Metric>(&mut self, m: &M, live: &PointSet, centers: &CenterSet) {
        self.trees.clear();
        self.centers = centers.clone();
        for id in live.ids().chain(centers.iter().copied()) {
            self.track(m, id);
        }
    }
}

/// The dynamic k-median engine.
pub struct Engine {
    space: MetricSpace,
    cfg: EngineConfig,
    live: PointSet,
    sol: RobustSolution,
    index: NearestCenterIndex,
    phase: Phase,
    epoch_id: u64,
    totals: EngineTotals,
    last_close: Option<EpochCloseStats>,
    rng_ls: ChaCha8Rng,
    rng_om: ChaCha8Rng,
    rng_mon: ChaCha8Rng,
}

impl Engine {
    pub fn new(space: MetricSpace, cfg: EngineConfig) -> Result<Self> {
        cfg.validate()?;
        let seed = cfg.seed;
        Ok(Self {
            space,
            cfg,
            live: PointSet::new(),
            sol: RobustSolution::new(),
            index: NearestCenterIndex::default(),
            phase: Phase::Bootstrap,
            epoch_id: 0,
            totals: EngineTotals::default(),
            last_close: None,
            rng_ls: ChaCha8Rng::seed_from_u64(seed ^ 0x6c6f_6361_6c73),
            rng_om: ChaCha8Rng::seed_from_u64(seed ^ 0x6f6e_656d_6564),
            rng_mon: ChaCha8Rng::seed_from_u64(seed ^ 0x6d6f_6e69_746f),
        })
    }

    pub fn space(&self) -> &MetricSpace {
        &self.space
    }

    /// Register a ground point (coordinate-backed spaces) ahead of its
    /// first insertion.
    pub fn register_ground_point(&mut self, id: PointId, coords: Vec<f64>) -> Result<()> {
        self.space.register_point(id, coords)
    }

    pub fn config(&self) -> &EngineConfig {
        &self.cfg
    }

    pub fn live(&self) -> &PointSet {
        &self.live
    }

    pub fn current_solution(&self) -> CenterSet {
        self.sol.centers()
    }

    pub fn records(&self) -> &RobustSolution {
        &self.sol
    }

    pub fn totals(&self) -> EngineTotals {
        self.totals
    }

    pub fn epoch_id(&self) -> u64 {
        self.epoch_id
    }

    pub fn last_close(&self) -> Option<&EpochCloseStats> {
        self.last_close.as_ref()
    }

    pub fn phase_info(&self) -> PhaseInfo {
        match &self.phase {
            Phase::Bootstrap => PhaseInfo::Bootstrap,
            Phase::Epoch(st) => PhaseInfo::Epoch {
                ell: st.ell,
                updates_seen: st.updates_seen,
            },
        }
    }

    /// cost(U^(0), P^(0)) of the open epoch, if one is open.
    pub fn epoch_start_cost(&self) -> Option<f64> {
        match &self.phase {
            Phase::Epoch(st) => Some(st.cost0),
            Phase::Bootstrap => None,
        }
    }

    /// Maintained objective against the current input, via the index.
    pub fn current_cost(&self) -> f64 {
        self.live
            .iter()
            .map(|(p, w)| w * self.index.nearest(p).map(|(_, d)| d).unwrap_or(0.0))
            .sum()
    }

    pub fn index(&self) -> &NearestCenterIndex {
        &self.index
    }

    /// Map every maintained center to its nearest current input point
    /// (ties to the smallest id) and collapse duplicates.
    pub fn project_to_proper(&self) -> Result<CenterSet> {
        if self.live.is_empty() {
            return Err(Error::InvalidArgument(
                "cannot project onto an empty input".into(),
            ));
        }
        let mut out = CenterSet::new();
        for rec in self.sol.iter() {
            let mut best: Option<(f64, PointId)> = None;
            for (p, _) in self.live.iter() {
                let d = self.space.dist(rec.center, p);
                match best {
                    Some((bd, bp)) if (d, p) >= (bd, bp) => {}
                    _ => best = Some((d, p)),
                }
            }
            out.insert(best.expect("live is nonempty").1);
        }
        Ok(out)
    }

    /// Periodic objective estimate for monitoring: a fresh static solve on
    /// the current input, fed by an rng stream independent of the
    /// algorithm's own streams.
    pub fn estimate_opt(&mut self) -> f64 {
        if self.live.is_empty() {
            return 0.0;
        }
        let cands: Vec<PointId> = self.live.ids().collect();
        let centers = static_kmedian(
            &self.space,
            &self.live,
            self.cfg.k,
            &cands,
            &self.cfg.solver,
            &mut self.rng_mon,
        );
        cost(&self.space, &centers, &self.live).unwrap_or(0.0)
    }

    /// Apply one update and return the exact solution diff it caused.
    pub fn apply_update(&mut self, ev: UpdateEvent) -> Result<RecourseReport> {
        match ev {
            UpdateEvent::Insert { id, weight } => {
                if !self.space.contains(id) {
                    return Err(Error::UnknownPoint(id));
                }
                if self.live.contains(id) {
                    return Err(Error::InvalidUpdate(format!("insert of present id {id}")));
                }
                self.live.insert_new(id, weight)?;
                self.index.track(&self.space, id);
            }
            UpdateEvent::Delete { id } => {
                if !self.live.contains(id) {
                    return Err(Error::InvalidUpdate(format!("delete of absent id {id}")));
                }
                self.live.remove(id)?;
                if !self.sol.contains(id) {
                    self.index.untrack(id);
                }
            }
        }

        let before = self.sol.centers();
        let mut epoch_boundary = false;
        self.last_close = None;

        match std::mem::replace(&mut self.phase, Phase::Bootstrap) {
            Phase::Bootstrap => {
                self.phase = Phase::Bootstrap;
                match ev {
                    UpdateEvent::Insert { id, .. } => {
                        if !self.sol.contains(id) {
                            self.sol.insert(CenterRecord::provisional(id));
                            self.apply_index_add(id)?;
                        }
                    }
                    UpdateEvent::Delete { id } => {
                        if self.sol.contains(id) {
                            self.sol.remove(id);
                            self.apply_index_remove(id)?;
                        }
                    }
                }
                if self.live.len() > self.cfg.k {
                    self.promote_from_bootstrap()?;
                    epoch_boundary = true;
                }
            }
            Phase::Epoch(mut st) => {
                st.updates_seen += 1;
                if let UpdateEvent::Insert { id, .. } = ev {
                    // Lazy rule: the fresh point becomes a center. Deletions
                    // leave the solution untouched.
                    if !self.sol.contains(id) {
                        self.sol.insert(CenterRecord::provisional(id));
                        self.apply_index_add(id)?;
                    }
                }
                if self.live.len() <= self.cfg.k {
                    // The improper objective hits zero only if centers mirror
                    // the input; fall back to bootstrap until it regrows.
                    self.reenter_bootstrap()?;
                } else if st.updates_seen == st.ell + 1 {
                    self.close_epoch(st)?;
                    epoch_boundary = true;
                } else {
                    debug_assert!(self.sol.len() <= self.cfg.k);
                    self.phase = Phase::Epoch(st);
                }
            }
        }

        let after = self.sol.centers();
        let added: CenterSet = after.difference(&before).copied().collect();
        let removed: CenterSet = before.difference(&after).copied().collect();
        let makerobust_calls = self
            .last_close
            .as_ref()
            .map(|c| c.robustify.total_calls())
            .unwrap_or(0);
        self.totals.updates += 1;
        self.totals.recourse += (added.len() + removed.len()) as u64;
        Ok(RecourseReport {
            added,
            removed,
            makerobust_calls,
            epoch_boundary,
        })
    }

    fn apply_index_add(&mut self, id: PointId) -> Result<()> {
        let added: CenterSet = [id].into_iter().collect();
        self.index
            .apply_center_diff(&self.space, &added, &CenterSet::new(), &self.live)
    }

    fn apply_index_remove(&mut self, id: PointId) -> Result<()> {
        let removed: CenterSet = [id].into_iter().collect();
        self.index
            .apply_center_diff(&self.space, &CenterSet::new(), &removed, &self.live)
    }

    fn swap_solution(&mut self, new_sol: RobustSolution) -> Result<()> {
        let old = self.sol.centers();
        let new = new_sol.centers();
        let added: CenterSet = new.difference(&old).copied().collect();
        let removed: CenterSet = old.difference(&new).copied().collect();
        self.index
            .apply_center_diff(&self.space, &added, &removed, &self.live)?;
        self.sol = new_sol;
        Ok(())
    }

    fn reenter_bootstrap(&mut self) -> Result<()> {
        let target = RobustSolution::from_provisional(&self.live.id_set());
        self.swap_solution(target)?;
        self.phase = Phase::Bootstrap;
        Ok(())
    }

    fn promote_from_bootstrap(&mut self) -> Result<()> {
        let cands: Vec<PointId> = self.live.ids().collect();
        let w_set = if self.cfg.exact_mode {
            match opt_exact(
                &self.space,
                &self.live,
                self.cfg.k,
                &cands,
                self.cfg.enumeration_budget,
            ) {
                Ok((_, w)) => w,
                Err(Error::BudgetExceeded { .. }) => static_kmedian(
                    &self.space,
                    &self.live,
                    self.cfg.k,
                    &cands,
                    &self.cfg.solver,
                    &mut self.rng_ls,
                ),
                Err(e) => return Err(e),
            }
        } else {
            static_kmedian(
                &self.space,
                &self.live,
                self.cfg.k,
                &cands,
                &self.cfg.solver,
                &mut self.rng_ls,
            )
        };
        let w_records = RobustSolution::from_provisional(&w_set);
        let fresh = RobustSolution::new();
        let (u_final, rstats) = robustify(
            &self.space,
            &self.live,
            &self.live,
            w_records,
            &fresh,
            self.cfg.delta,
            &self.cfg.solver,
            &mut self.rng_om,
        )?;
        self.swap_solution(u_final)?;
        self.record_close(rstats, 0, w_set.len(), 2 * w_set.len() + 2, true);
        self.open_epoch()?;
        Ok(())
    }

    /// Doubling search for the number of centers that can be shed: walk
    /// r in {0, 1, 2, 4, ...}, shrink the epoch-start solution by r, and stop
    /// once the shrunken cost exceeds `removal_threshold` times the start
    /// cost (an infeasible r, at least the solution size, counts as infinite
    /// cost). The epoch length derives from the stopping r.
    fn remove_centers(&mut self) -> Result<(CenterSet, usize)> {
        let u_init = self.sol.clone();
        let k_eff = u_init.len();
        let centers = u_init.centers();
        let cost_init = cost(&self.space, &centers, &self.live)?;
        let mut radii: Vec<usize> = vec![0];
        let mut r = 1usize;
        while r <= k_eff {
            radii.push(r);
            r *= 2;
        }
        let mut r_break = 0;
        for &r in &radii {
            r_break = r;
            if r >= k_eff {
                break; // shedding everything is never affordable
            }
            let shrunk = self.shrink(&centers, r)?;
            let c = cost(&self.space, &shrunk, &self.live)?;
            if c > self.cfg.removal_threshold * cost_init {
                break;
            }
        }
        let l_prime = r_break / 2;
        let ell = (l_prime as f64 / self.cfg.big_c).floor() as usize;
        let u0 = self.shrink(&centers, ell)?;
        Ok((u0, ell))
    }

    /// Best (|u| - s)-subset of `u`: exact when configured and affordable,
    /// randomized local search otherwise.
    fn shrink(&mut self, u: &CenterSet, s: usize) -> Result<CenterSet> {
        if s == 0 {
            return Ok(u.clone());
        }
        if self.cfg.exact_mode {
            let cands: Vec<PointId> = u.iter().copied().collect();
            match opt_exact(
                &self.space,
                &self.live,
                u.len() - s,
                &cands,
                self.cfg.enumeration_budget,
            ) {
                Ok((_, w)) => return Ok(w),
                Err(Error::BudgetExceeded { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        rand_local_search(
            &self.space,
            &self.live,
            u,
            s,
            &self.cfg.solver,
            &mut self.rng_ls,
        )
    }

    fn open_epoch(&mut self) -> Result<()> {
        let p0 = self.live.clone();
        let u_init = self.sol.clone();
        let (u0, ell) = self.remove_centers()?;
        let mut shrunk = RobustSolution::new();
        for &c in &u0 {
            shrunk.insert(*u_init.get(c).expect("shrink returns a subset"));
        }
        self.swap_solution(shrunk)?;
        let cost0 = cost(&self.space, &u0, &self.live)?;
        self.epoch_id += 1;
        self.totals.epochs += 1;
        self.phase = Phase::Epoch(EpochState {
            p0,
            u_init,
            ell,
            updates_seen: 0,
            cost0,
        });
        Ok(())
    }

    fn close_epoch(&mut self, st: EpochState) -> Result<()> {
        let p1 = self.live.clone();
        let u_init_centers = st.u_init.centers();
        let s = (self.cfg.develop_slack_multiplier * (st.ell + 1) as f64)
            .ceil()
            .min(1e18) as usize;
        let utilde = self.develop(&st.p0, &u_init_centers, s)?;
        let mut v = utilde;
        for id in p1.diff_from(&st.p0) {
            v.insert(id);
        }
        let w_set = if v.len() <= self.cfg.k {
            v
        } else {
            let surplus = v.len() - self.cfg.k;
            if self.cfg.exact_mode {
                let cands: Vec<PointId> = v.iter().copied().collect();
                match opt_exact(
                    &self.space,
                    &p1,
                    self.cfg.k,
                    &cands,
                    self.cfg.enumeration_budget,
                ) {
                    Ok((_, w)) => w,
                    Err(Error::BudgetExceeded { .. }) => rand_local_search(
                        &self.space,
                        &p1,
                        &v,
                        surplus,
                        &self.cfg.solver,
                        &mut self.rng_ls,
                    )?,
                    Err(e) => return Err(e),
                }
            } else {
                rand_local_search(
                    &self.space,
                    &p1,
                    &v,
                    surplus,
                    &self.cfg.solver,
                    &mut self.rng_ls,
                )?
            }
        };
        let diff = w_set.symmetric_difference(&u_init_centers).count();
        let diff_bound = 2 * s + 2 * (st.ell + 1);
        let mut w_records = RobustSolution::new();
        for &id in &w_set {
            w_records.insert(
                st.u_init
                    .get(id)
                    .copied()
                    .unwrap_or_else(|| CenterRecord::provisional(id)),
            );
        }
        let (u_final, rstats) = robustify(
            &self.space,
            &st.p0,
            &p1,
            w_records,
            &st.u_init,
            self.cfg.delta,
            &self.cfg.solver,
            &mut self.rng_om,
        )?;
        self.swap_solution(u_final)?;
        self.record_close(rstats, st.ell, diff, diff_bound, false);
        self.open_epoch()?;
        Ok(())
    }

    /// Extend `base` by at most `s` input points, minimizing joint cost:
    /// exact enumeration when configured and affordable, otherwise the
    /// contracted-metric static solve.
    fn develop(&mut self, p0: &PointSet, base: &CenterSet, s: usize) -> Result<CenterSet> {
        if self.cfg.exact_mode {
            let pool: Vec<PointId> = p0.ids().filter(|id| !base.contains(id)).collect();
            if s >= pool.len() {
                // Adding every remaining input point is optimal outright.
                let mut out = base.clone();
                out.extend(pool);
                return Ok(out);
            }
            match best_extension(&self.space, p0, base, &pool, s, self.cfg.enumeration_budget) {
                Ok((_, out)) => return Ok(out),
                Err(Error::BudgetExceeded { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        develop_centers(
            &self.space,
            p0,
            base,
            s,
            self.cfg.delta,
            &self.cfg.solver,
            &mut self.rng_ls,
        )
    }

    fn record_close(
        &mut self,
        rstats: RobustifyStats,
        ell: usize,
        diff: usize,
        diff_bound: usize,
        from_bootstrap: bool,
    ) {
        self.totals.makerobust_type1 += rstats.type1_calls as u64;
        self.totals.makerobust_type2 += rstats.type2_calls as u64;
        self.totals.makerobust_type3 += rstats.type3_calls as u64;
        self.totals.max_contamination_per_point = self
            .totals
            .max_contamination_per_point
            .max(rstats.max_contamination_per_point);
        self.totals.repeat_rebuild_violations += rstats.repeat_rebuild_violations as u64;
        self.last_close = Some(EpochCloseStats {
            epoch_id: self.epoch_id,
            ell,
            from_bootstrap,
            robustify: rstats,
            pre_robustify_diff: diff,
            pre_robustify_diff_bound: diff_bound,
        });
    }

    /// Rebuild the index from scratch; test support for validating the
    /// incremental maintenance.
    pub fn rebuild_index(&mut self) {
        let centers = self.sol.centers();
        self.index.rebuild(&self.space, &self.live, &centers);
    }

    /// Index self-check: tracked set must be exactly live points plus
    /// centers, and each tree's minimum must equal a linear scan.
    pub fn index_consistent(&self) -> bool {
        let mut expect: CenterSet = self.live.ids().collect();
        expect.extend(self.sol.centers());
        let tracked: CenterSet = self.index.tracked_ids().into_iter().collect();
        if expect != tracked {
            return false;
        }
        let centers = self.sol.centers();
        for p in self.index.tracked_ids() {
            let from_index = self.index.nearest(p);
            let from_scan = centers
                .iter()
                .map(|&c| (Dist(self.space.dist(p, c)), c))
                .min();
            match (from_index, from_scan) {
                (None, None) => {}
                (Some((c, d)), Some((Dist(sd), sc))) => {
                    if d != sd || c != sc {
                        return false;
                    }
                }
                _ => return false,
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::MetricSpace;

    fn grid_space(n: usize, seed: u64, span: u32) -> (MetricSpace, Vec<PointId>) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cells = std::collections::BTreeSet::new();
        while cells.len() < n {
            cells.insert((rng.random_range(0..span), rng.random_range(0..span)));
        }
        let pts: Vec<(PointId, Vec<f64>)> = cells
            .into_iter()
            .enumerate()
            .map(|(i, (x, y))| (PointId(i as u64), vec![2.0 * x as f64, 2.0 * y as f64]))
            .collect();
        let ids = pts.iter().map(|&(id, _)| id).collect();
        (MetricSpace::from_coords(&pts, 2.0, 1e4).unwrap(), ids)
    }

    fn insert(id: PointId) -> UpdateEvent {
        UpdateEvent::Insert { id, weight: 1.0 }
    }

    #[test]
    fn bootstrap_mirrors_input() {
        let (space, ids) = grid_space(10, 1, 20);
        let mut eng = Engine::new(space, EngineConfig::practical(3, 1e4)).unwrap();
        assert_eq!(eng.current_cost(), 0.0);
        for &id in ids.iter().take(3) {
            let rep = eng.apply_update(insert(id)).unwrap();
            assert_eq!(rep.added.len(), 1);
            assert!(!rep.epoch_boundary);
        }
        assert_eq!(eng.current_solution().len(), 3);
        assert_eq!(eng.current_cost(), 0.0);
        // Deleting one keeps the mirror.
        eng.apply_update(UpdateEvent::Delete { id: ids[0] }).unwrap();
        assert_eq!(eng.current_solution().len(), 2);
        assert_eq!(eng.phase_info(), PhaseInfo::Bootstrap);
    }

    #[test]
    fn update_validation() {
        let (space, ids) = grid_space(4, 2, 10);
        let mut eng = Engine::new(space, EngineConfig::practical(2, 1e4)).unwrap();
        eng.apply_update(insert(ids[0])).unwrap();
        assert!(eng.apply_update(insert(ids[0])).is_err());
        assert!(eng
            .apply_update(UpdateEvent::Delete { id: ids[3] })
            .is_err());
        assert!(eng.apply_update(insert(PointId(999))).is_err());
    }

    #[test]
    fn promotion_establishes_robust_solution() {
        let (space, ids) = grid_space(8, 3, 30);
        let cfg = EngineConfig::practical(3, 1e4).exact();
        let mut eng = Engine::new(space, cfg).unwrap();
        for &id in ids.iter().take(4) {
            eng.apply_update(insert(id)).unwrap();
        }
        assert_eq!(eng.current_solution().len(), 3);
        assert!(matches!(eng.phase_info(), PhaseInfo::Epoch { .. }));
        assert!(crate::robustify::verify_robust(
            eng.space(),
            &eng.space().ground_ids(),
            eng.live(),
            eng.records(),
            eng.config().delta,
        ));
    }

    #[test]
    fn lazy_updates_mid_epoch() {
        // big_c = 1 and a huge removal threshold stretch epochs so mid-epoch
        // states are observable.
        let (space, ids) = grid_space(16, 4, 12);
        let mut cfg = EngineConfig::practical(8, 1e4);
        cfg.big_c = 1.0;
        cfg.removal_threshold = 1e12;
        let mut eng = Engine::new(space, cfg).unwrap();
        for &id in ids.iter().take(9) {
            eng.apply_update(insert(id)).unwrap();
        }
        let PhaseInfo::Epoch { ell, .. } = eng.phase_info() else {
            panic!("epoch should be open");
        };
        assert!(ell >= 1, "ell = {ell}");
        let cost0 = eng.epoch_start_cost().unwrap();
        // Mid-epoch insertion: the new point becomes a center.
        let rep = eng.apply_update(insert(ids[9])).unwrap();
        assert!(rep.added.contains(&ids[9]) && rep.removed.is_empty());
        assert!(eng.current_solution().len() <= 8);
        assert!(eng.current_cost() <= cost0 + 1e-9);
        // Mid-epoch deletion: no solution change.
        let PhaseInfo::Epoch { updates_seen, .. } = eng.phase_info() else {
            panic!();
        };
        if updates_seen < ell {
            let rep = eng.apply_update(UpdateEvent::Delete { id: ids[2] }).unwrap();
            assert!(rep.added.is_empty() && rep.removed.is_empty());
        }
    }

    #[test]
    fn tight_blob_never_breaks_removal_search() {
        // A blob where one center is nearly as good as many: the doubling
        // search runs to its sentinel and ell follows the hand trace
        // floor(floor(2^floor(log2 k) / 2) / big_c).
        let (space, ids) = grid_space(8, 5, 4);
        let mut cfg = EngineConfig::practical(4, 1e4);
        cfg.big_c = 1.0;
        cfg.removal_threshold = 1e12;
        let mut eng = Engine::new(space, cfg).unwrap();
        for &id in ids.iter().take(5) {
            eng.apply_update(insert(id)).unwrap();
        }
        let PhaseInfo::Epoch { ell, .. } = eng.phase_info() else {
            panic!();
        };
        assert_eq!(ell, 2); // r_break = 4 (= k sentinel), l' = 2, big_c = 1
    }

    #[test]
    fn shrinking_input_reenters_bootstrap() {
        let (space, ids) = grid_space(8, 6, 25);
        let cfg = EngineConfig::practical(3, 1e4);
        let mut eng = Engine::new(space, cfg).unwrap();
        for &id in ids.iter().take(5) {
            eng.apply_update(insert(id)).unwrap();
        }
        assert!(matches!(eng.phase_info(), PhaseInfo::Epoch { .. }));
        eng.apply_update(UpdateEvent::Delete { id: ids[0] }).unwrap();
        eng.apply_update(UpdateEvent::Delete { id: ids[1] }).unwrap();
        assert_eq!(eng.phase_info(), PhaseInfo::Bootstrap);
        assert_eq!(eng.current_solution(), eng.live().id_set());
        assert_eq!(eng.current_cost(), 0.0);
        // Growing back promotes again.
        eng.apply_update(insert(ids[0])).unwrap();
        assert!(matches!(eng.phase_info(), PhaseInfo::Epoch { .. }));
    }

    #[test]
    fn solution_size_never_exceeds_k() {
        let (space, ids) = grid_space(30, 7, 25);
        let cfg = EngineConfig::practical(4, 1e4).with_seed(9);
        let mut eng = Engine::new(space, cfg).unwrap();
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut live: Vec<PointId> = Vec::new();
        let mut pool: Vec<PointId> = ids.clone();
        for _ in 0..120 {
            if !pool.is_empty() && (live.len() < 2 || rng.random::<f64>() < 0.6) {
                let id = pool.swap_remove(rng.random_range(0..pool.len()));
                eng.apply_update(insert(id)).unwrap();
                live.push(id);
            } else {
                let id = live.swap_remove(rng.random_range(0..live.len()));
                eng.apply_update(UpdateEvent::Delete { id }).unwrap();
                pool.push(id);
            }
            assert!(eng.current_solution().len() <= 4);
            if eng.phase_info() == PhaseInfo::Bootstrap {
                assert_eq!(eng.current_cost(), 0.0);
            }
        }
        assert_eq!(eng.totals().repeat_rebuild_violations, 0);
    }

    #[test]
    fn deterministic_given_seed_and_stream() {
        let (_, ids) = grid_space(20, 8, 25);
        let stream: Vec<UpdateEvent> = {
            use rand::Rng;
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            let mut live: Vec<PointId> = Vec::new();
            let mut pool = ids.clone();
            let mut evs = Vec::new();
            for _ in 0..80 {
                if !pool.is_empty() && (live.len() < 3 || rng.random::<f64>() < 0.6) {
                    let id = pool.swap_remove(rng.random_range(0..pool.len()));
                    evs.push(insert(id));
                    live.push(id);
                } else {
                    let id = live.swap_remove(rng.random_range(0..live.len()));
                    evs.push(UpdateEvent::Delete { id });
                    pool.push(id);
                }
            }
            evs
        };
        let run = |space: MetricSpace| {
            let mut eng = Engine::new(space, EngineConfig::practical(3, 1e4).with_seed(5)).unwrap();
            stream
                .iter()
                .map(|&ev| eng.apply_update(ev).unwrap())
                .collect::<Vec<_>>()
        };
        let (s1, _) = grid_space(20, 8, 25);
        let (s2, _) = grid_space(20, 8, 25);
        assert_eq!(run(s1), run(s2));
    }

    #[test]
    fn index_stays_consistent_through_run() {
        let (space, ids) = grid_space(18, 10, 20);
        let cfg = EngineConfig::practical(3, 1e4);
        let mut eng = Engine::new(space, cfg).unwrap();
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut live: Vec<PointId> = Vec::new();
        let mut pool = ids.clone();
        for step in 0..60 {
            if !pool.is_empty() && (live.len() < 2 || rng.random::<f64>() < 0.65) {
                let id = pool.swap_remove(rng.random_range(0..pool.len()));
                eng.apply_update(insert(id)).unwrap();
                live.push(id);
            } else {
                let id = live.swap_remove(rng.random_range(0..live.len()));
                eng.apply_update(UpdateEvent::Delete { id }).unwrap();
                pool.push(id);
            }
            if step % 7 == 0 {
                assert!(eng.index_consistent(), "index drifted at step {step}");
            }
        }
    }

    #[test]
    fn index_tree_kept_for_deleted_center_point() {
        let (space, ids) = grid_space(8, 11, 25);
        let cfg = EngineConfig::practical(3, 1e4);
        let mut eng = Engine::new(space, cfg).unwrap();
        for &id in ids.iter().take(3) {
            eng.apply_update(insert(id)).unwrap();
        }
        // Bootstrap: all three are centers. Delete one point; it leaves the
        // solution too (bootstrap mirrors), so its tree is dropped.
        eng.apply_update(UpdateEvent::Delete { id: ids[0] }).unwrap();
        assert!(eng.index.nearest(ids[0]).is_none());
        // Grow past k so centers detach from the input, then delete a
        // non-center point: centers keep their trees.
        for &id in ids.iter().take(6).skip(3) {
            eng.apply_update(insert(id)).unwrap();
        }
        let centers = eng.current_solution();
        let non_center = eng
            .live()
            .ids()
            .find(|id| !centers.contains(id))
            .expect("live exceeds k, some point is not a center");
        eng.apply_update(UpdateEvent::Delete { id: non_center }).unwrap();
        assert!(eng.index.nearest(non_center).is_none());
        for &c in &eng.current_solution() {
            assert!(eng.index.nearest(c).is_some());
        }
    }

    #[test]
    fn projection_identity_and_ratio() {
        let (space, ids) = grid_space(14, 12, 25);
        let cfg = EngineConfig::practical(3, 1e4);
        let mut eng = Engine::new(space, cfg).unwrap();
        for &id in ids.iter().take(8) {
            eng.apply_update(insert(id)).unwrap();
        }
        let proper = eng.project_to_proper().unwrap();
        assert!(proper.iter().all(|p| eng.live().contains(*p)));
        let improper_cost = eng.current_cost();
        let proper_cost = cost(eng.space(), &proper, eng.live()).unwrap();
        assert!(proper_cost <= 2.0 * improper_cost + 1e-9);
        // All centers present in the input: projection is the identity.
        if eng.current_solution().iter().all(|c| eng.live().contains(*c)) {
            assert_eq!(proper, eng.current_solution());
        }
    }
}
