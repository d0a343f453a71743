//! Run orchestration: benchmark replays with CSV/JSON reporting, and the
//! oracle-backed `check` replay that asserts every maintained guarantee.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use anyhow::Context;
use dynkmedian::engine::{Engine, EngineConfig, PhaseInfo};
use dynkmedian::metric::{cost, CenterSet, PointId, PointSet};
use dynkmedian::oracles::{
    check_double_sided_stability, check_lazy_updates_lemma, check_projection_lemma, opt_exact,
};
use dynkmedian::robustify::verify_robust;
use serde::{Deserialize, Serialize};

use crate::stream::{apply_event_prelude, StreamFile};

/// Options shared by `run` and `check`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunOptions {
    pub k: usize,
    pub seed: u64,
    /// Analysis constants instead of the practical defaults.
    pub paper_constants: bool,
    /// Exact subroutines (enumeration within budget, deterministic
    /// 1-medians).
    pub exact: bool,
    /// Steps between fresh objective estimates in `run` mode.
    pub monitor_interval: usize,
    /// Write zero into the wall-time column (byte-stable output for
    /// determinism comparisons).
    pub zero_time: bool,
    /// Subset budget for exact oracles.
    pub budget: u64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            k: 4,
            seed: 0,
            paper_constants: false,
            exact: false,
            monitor_interval: 25,
            zero_time: false,
            budget: dynkmedian::oracles::DEFAULT_ENUMERATION_BUDGET,
        }
    }
}

/// Optional file-based overrides for the engine constants.
#[derive(Debug, Clone, Default, Deserialize)]
pub struct ConfigOverrides {
    pub gamma: Option<f64>,
    pub big_c: Option<f64>,
    pub removal_threshold: Option<f64>,
    pub stability_eta: Option<f64>,
    pub develop_slack_multiplier: Option<f64>,
    pub sample_count_multiplier: Option<usize>,
    pub beta_target: Option<f64>,
    pub swap_improvement_factor: Option<f64>,
    pub ls_iteration_multiplier: Option<usize>,
}

impl ConfigOverrides {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).context("parsing config overrides")
    }

    fn apply(&self, cfg: &mut EngineConfig) {
        if let Some(v) = self.gamma {
            cfg.gamma = v;
        }
        if let Some(v) = self.big_c {
            cfg.big_c = v;
        }
        if let Some(v) = self.removal_threshold {
            cfg.removal_threshold = v;
        }
        if let Some(v) = self.stability_eta {
            cfg.stability_eta = v;
        }
        if let Some(v) = self.develop_slack_multiplier {
            cfg.develop_slack_multiplier = v;
        }
        if let Some(v) = self.sample_count_multiplier {
            cfg.solver.sample_count_multiplier = v;
        }
        if let Some(v) = self.beta_target {
            cfg.solver.beta_target = v;
        }
        if let Some(v) = self.swap_improvement_factor {
            cfg.solver.swap_improvement_factor = v;
        }
        if let Some(v) = self.ls_iteration_multiplier {
            cfg.solver.ls_iteration_multiplier = v;
        }
    }
}

pub fn engine_config(stream: &StreamFile, opts: &RunOptions, ov: &ConfigOverrides) -> EngineConfig {
    let delta = stream.delta();
    let mut cfg = if opts.paper_constants {
        EngineConfig::paper_constants(opts.k, delta)
    } else {
        EngineConfig::practical(opts.k, delta)
    };
    cfg = cfg.with_seed(opts.seed);
    cfg.enumeration_budget = opts.budget;
    if opts.exact {
        cfg = cfg.exact();
    }
    ov.apply(&mut cfg);
    cfg
}

/// One CSV row per applied update.
#[derive(Debug, Clone, Serialize)]
pub struct StepRecord {
    pub step: usize,
    pub n: usize,
    pub cost: f64,
    pub opt_est: f64,
    pub added: usize,
    pub removed: usize,
    pub mr_type1: usize,
    pub mr_type2: usize,
    pub mr_type3: usize,
    pub epoch: u64,
    pub ns: u128,
}

pub const CSV_HEADER: &str = "step,n,cost,opt_est,added,removed,mr_type1,mr_type2,mr_type3,epoch,ns";

pub fn to_csv(records: &[StepRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            r.step,
            r.n,
            r.cost,
            r.opt_est,
            r.added,
            r.removed,
            r.mr_type1,
            r.mr_type2,
            r.mr_type3,
            r.epoch,
            r.ns
        ));
    }
    out
}

/// Aggregates recomputable from the CSV rows.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunSummary {
    pub steps: usize,
    pub final_n: usize,
    pub final_cost: f64,
    pub total_recourse: u64,
    pub amortized_recourse: f64,
    pub makerobust_total: u64,
    pub mr_type1: u64,
    pub mr_type2: u64,
    pub mr_type3: u64,
    pub epochs: u64,
    pub max_cost_ratio: f64,
    pub wall_ns_total: u128,
    pub k: usize,
    pub seed: u64,
}

pub fn summarize(records: &[StepRecord], k: usize, seed: u64) -> RunSummary {
    let total_recourse: u64 = records.iter().map(|r| (r.added + r.removed) as u64).sum();
    let mr1: u64 = records.iter().map(|r| r.mr_type1 as u64).sum();
    let mr2: u64 = records.iter().map(|r| r.mr_type2 as u64).sum();
    let mr3: u64 = records.iter().map(|r| r.mr_type3 as u64).sum();
    let max_cost_ratio = records
        .iter()
        .filter(|r| r.opt_est > 1e-12)
        .map(|r| r.cost / r.opt_est)
        .fold(0.0f64, f64::max);
    RunSummary {
        steps: records.len(),
        final_n: records.last().map(|r| r.n).unwrap_or(0),
        final_cost: records.last().map(|r| r.cost).unwrap_or(0.0),
        total_recourse,
        amortized_recourse: if records.is_empty() {
            0.0
        } else {
            total_recourse as f64 / records.len() as f64
        },
        makerobust_total: mr1 + mr2 + mr3,
        mr_type1: mr1,
        mr_type2: mr2,
        mr_type3: mr3,
        epochs: records.last().map(|r| r.epoch).unwrap_or(0),
        max_cost_ratio,
        wall_ns_total: records.iter().map(|r| r.ns).sum(),
        k,
        seed,
    }
}

/// Replay a stream through the engine, recording one row per update.
pub fn run_stream(
    stream: &StreamFile,
    base_dir: &Path,
    opts: &RunOptions,
    overrides: &ConfigOverrides,
) -> anyhow::Result<(Vec<StepRecord>, RunSummary)> {
    let space = stream.build_space(base_dir)?;
    let cfg = engine_config(stream, opts, overrides);
    let mut engine = Engine::new(space, cfg)?;
    let mut records = Vec::with_capacity(stream.events.len());
    let mut opt_est = 0.0;
    for (i, ev) in stream.events.iter().enumerate() {
        let started = Instant::now();
        let update = apply_event_prelude(&mut engine, ev)?;
        let report = engine
            .apply_update(update)
            .with_context(|| format!("applying event {} (line {})", i, i + 2))?;
        let ns = if opts.zero_time {
            0
        } else {
            started.elapsed().as_nanos()
        };
        if i % opts.monitor_interval.max(1) == 0 || report.epoch_boundary {
            opt_est = engine.estimate_opt();
        }
        let close = engine.last_close();
        records.push(StepRecord {
            step: i,
            n: engine.live().len(),
            cost: engine.current_cost(),
            opt_est,
            added: report.added.len(),
            removed: report.removed.len(),
            mr_type1: close.map(|c| c.robustify.type1_calls).unwrap_or(0),
            mr_type2: close.map(|c| c.robustify.type2_calls).unwrap_or(0),
            mr_type3: close.map(|c| c.robustify.type3_calls).unwrap_or(0),
            epoch: engine.epoch_id(),
            ns,
        });
    }
    let summary = summarize(&records, opts.k, opts.seed);
    Ok((records, summary))
}

/// Per-assertion-class pass/fail counters from a `check` replay.
#[derive(Debug, Clone, Default, Serialize)]
pub struct CheckReport {
    pub classes: BTreeMap<String, (u64, u64)>,
}

impl CheckReport {
    fn pass(&mut self, class: &str) {
        self.classes.entry(class.to_string()).or_default().0 += 1;
    }

    fn record(&mut self, class: &str, ok: bool) {
        if ok {
            self.pass(class);
        } else {
            self.classes.entry(class.to_string()).or_default().1 += 1;
        }
    }

    pub fn ok(&self) -> bool {
        self.classes.values().all(|&(_, fail)| fail == 0)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (class, (pass, fail)) in &self.classes {
            out.push_str(&format!(
                "{}: {} [{} pass / {} fail]\n",
                if *fail == 0 { "PASS" } else { "FAIL" },
                class,
                pass,
                fail
            ));
        }
        out
    }
}

/// Replay a stream with exact subroutines and assert every maintained
/// guarantee against the brute-force oracles. Refuses (errors) when the
/// ground space exceeds the enumeration budget.
pub fn check_stream(
    stream: &StreamFile,
    base_dir: &Path,
    opts: &RunOptions,
    overrides: &ConfigOverrides,
) -> anyhow::Result<CheckReport> {
    let space = stream.build_space(base_dir)?;
    let mut run_opts = opts.clone();
    run_opts.exact = true;
    run_opts.paper_constants = true;
    let cfg = engine_config(stream, &run_opts, overrides);
    let gamma = cfg.gamma;
    let delta = cfg.delta;
    let k = cfg.k;
    let budget = run_opts.budget;
    let contamination_bound = (delta.log10().ceil() as usize) + 2;
    let mid_epoch_factor = 32.0 + 432.0 * gamma;

    let mut engine = Engine::new(space, cfg)?;
    let mut report = CheckReport::default();
    let mut snapshots: Vec<PointSet> = vec![engine.live().clone()];

    for (i, ev) in stream.events.iter().enumerate() {
        let update = apply_event_prelude(&mut engine, ev)?;
        let step_report = engine
            .apply_update(update)
            .with_context(|| format!("applying event {i}"))?;

        let live = engine.live().clone();
        let sol = engine.current_solution();
        let ground = engine.space().ground_ids();
        let current = cost(engine.space(), &sol, &live).unwrap_or(0.0);

        report.record("solution-size", sol.len() <= k);

        let (opt_k, _) = opt_exact(engine.space(), &live, k, &ground, budget)?;
        match engine.phase_info() {
            PhaseInfo::Bootstrap => {
                report.record("bootstrap-zero-cost", current <= 1e-9);
            }
            PhaseInfo::Epoch { .. } if step_report.epoch_boundary => {
                report.record(
                    "boundary-cost-8opt",
                    current <= 8.0 * opt_k + 1e-9 * opt_k.max(1.0),
                );
                report.record(
                    "robust-at-boundary",
                    verify_robust(engine.space(), &ground, &live, engine.records(), delta),
                );
            }
            PhaseInfo::Epoch { .. } => {
                report.record(
                    "midepoch-cost-bound",
                    current <= mid_epoch_factor * opt_k + 1e-9 * opt_k.max(1.0),
                );
                if let Some(cost0) = engine.epoch_start_cost() {
                    report.record(
                        "lazy-cost-monotone",
                        current <= cost0 + 1e-9 * cost0.max(1.0),
                    );
                }
            }
        }

        if let Some(close) = engine.last_close() {
            report.record(
                "contamination-bound",
                close.robustify.max_contamination_per_point <= contamination_bound,
            );
            if !close.from_bootstrap {
                report.record(
                    "epoch-diff-bound",
                    close.pre_robustify_diff <= close.pre_robustify_diff_bound,
                );
            }
            report.record(
                "rebuild-uniqueness",
                close.robustify.repeat_rebuild_violations == 0,
            );
        }

        if !live.is_empty() && !sol.is_empty() {
            let proper = engine.project_to_proper()?;
            let proper_cost = cost(engine.space(), &proper, &live)?;
            report.record(
                "projection-2approx",
                proper_cost <= 2.0 * current + 1e-9 * current.max(1.0),
            );
        }

        // Lemma checkers on sampled snapshots.
        if i % 25 == 24 {
            let prev = &snapshots[snapshots.len().min(2) - 1];
            if prev.sym_diff(&live).len() <= 8 {
                report.record(
                    "lemma-lazy-updates",
                    check_lazy_updates_lemma(engine.space(), prev, &live, k, &ground, budget)?,
                );
            }
            if sol.len() >= k && !live.is_empty() {
                report.record(
                    "lemma-projection",
                    check_projection_lemma(engine.space(), &live, &sol, k, &ground, budget)?,
                );
            }
            if k >= 2 {
                let st = check_double_sided_stability(
                    engine.space(),
                    &live,
                    k,
                    1,
                    2.0,
                    &ground,
                    budget,
                )?;
                report.record("lemma-stability", st.holds);
            }
            snapshots.push(live.clone());
            if snapshots.len() > 2 {
                snapshots.remove(0);
            }
        }
    }

    let totals = engine.totals();
    let bound = 100.0
        * ((delta.log10().ceil() + 2.0) * (delta.log10().ceil() + 2.0))
        * totals.updates as f64;
    report.record("amortized-recourse", (totals.recourse as f64) <= bound);
    report.record("rebuild-uniqueness", totals.repeat_rebuild_violations == 0);
    Ok(report)
}

/// Aggregate several run summaries into one comparison table.
pub fn report_table(summaries: &[(String, RunSummary)]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<28} {:>7} {:>6} {:>4} {:>10} {:>10} {:>10} {:>12}\n",
        "run", "steps", "n", "k", "recourse", "rec/step", "mr/step", "ns/step"
    ));
    for (name, s) in summaries {
        let per_step = |v: f64| v / s.steps.max(1) as f64;
        out.push_str(&format!(
            "{:<28} {:>7} {:>6} {:>4} {:>10} {:>10.3} {:>10.3} {:>12.0}\n",
            name,
            s.steps,
            s.final_n,
            s.k,
            s.total_recourse,
            s.amortized_recourse,
            per_step(s.makerobust_total as f64),
            per_step(s.wall_ns_total as f64),
        ));
    }
    out
}

/// Recompute a summary from CSV text; consistency oracle for `summarize`.
pub fn summary_from_csv(text: &str, k: usize, seed: u64) -> anyhow::Result<RunSummary> {
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            anyhow::ensure!(line == CSV_HEADER, "unexpected CSV header");
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        anyhow::ensure!(f.len() == 11, "line {}: expected 11 columns", i + 1);
        records.push(StepRecord {
            step: f[0].parse()?,
            n: f[1].parse()?,
            cost: f[2].parse()?,
            opt_est: f[3].parse()?,
            added: f[4].parse()?,
            removed: f[5].parse()?,
            mr_type1: f[6].parse()?,
            mr_type2: f[7].parse()?,
            mr_type3: f[8].parse()?,
            epoch: f[9].parse()?,
            ns: f[10].parse()?,
        });
    }
    Ok(summarize(&records, k, seed))
}

/// Convenience wrapper used by the CLI and tests: nearest point projection
/// ratio for the current engine state.
pub fn projection_ratio(engine: &Engine) -> anyhow::Result<Option<f64>> {
    if engine.live().is_empty() || engine.current_solution().is_empty() {
        return Ok(None);
    }
    let proper = engine.project_to_proper()?;
    let proper_cost = cost(engine.space(), &proper, engine.live())?;
    let improper_cost = engine.current_cost();
    if improper_cost <= 1e-12 {
        return Ok(Some(if proper_cost <= 1e-12 { 1.0 } else { f64::INFINITY }));
    }
    Ok(Some(proper_cost / improper_cost))
}

/// Exact improper optimum for the engine's current input.
pub fn exact_opt_now(engine: &Engine, budget: u64) -> anyhow::Result<(f64, CenterSet)> {
    let ground: Vec<PointId> = engine.space().ground_ids();
    opt_exact(
        engine.space(),
        engine.live(),
        engine.config().k,
        &ground,
        budget,
    )
    .map_err(Into::into)
}
