//! Exact brute-force solvers and lemma checkers.
//!
//! Everything here is ground truth for the test suites and the `check`
//! harness mode; nothing is on the engine's hot path. Optima are computed by
//! exhaustive subset enumeration behind an explicit budget -- the oracle
//! refuses rather than silently approximating.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::metric::{dist_to_others, CenterSet, Metric, PointId, PointSet};

/// Default cap on the number of candidate subsets an exact solve may visit.
pub const DEFAULT_ENUMERATION_BUDGET: u64 = 2_000_000;

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
        if acc > u128::MAX / (n as u128 + 1) {
            return u128::MAX;
        }
    }
    acc
}

/// Exact optimum over all subsets of `candidates` of size at most `k`.
///
/// Returns the optimal cost and the lexicographically least witness among
/// the optima. Refuses when `C(|candidates|, k)` exceeds `budget`.
pub fn opt_exact<M: Metric>(
    m: &M,
    points: &PointSet,
    k: usize,
    candidates: &[PointId],
    budget: u64,
) -> Result<(f64, CenterSet)> {
    if k == 0 {
        return Err(Error::InvalidArgument("opt_exact with k = 0".into()));
    }
    let mut cands: Vec<PointId> = candidates.to_vec();
    cands.sort_unstable();
    cands.dedup();
    if cands.is_empty() {
        return Err(Error::InvalidArgument("opt_exact with no candidates".into()));
    }
    let kk = k.min(cands.len());
    let subsets = binomial(cands.len(), kk);
    if subsets > budget as u128 {
        return Err(Error::BudgetExceeded {
            subsets,
            budget,
        });
    }

    // Distance table candidates x points, so the inner enumeration touches
    // only flat arrays.
    let pts: Vec<(PointId, f64)> = points.iter().collect();
    let np = pts.len();
    let mut table = vec![0.0f64; cands.len() * np];
    for (ci, &c) in cands.iter().enumerate() {
        for (pi, &(p, _)) in pts.iter().enumerate() {
            table[ci * np + pi] = m.dist(c, p);
        }
    }
    let weights: Vec<f64> = pts.iter().map(|&(_, w)| w).collect();

    let eval = |sel: &[usize], cutoff: f64| -> f64 {
        let mut total = 0.0;
        for pi in 0..np {
            let mut best = f64::INFINITY;
            for &ci in sel {
                let d = table[ci * np + pi];
                if d < best {
                    best = d;
                }
            }
            total += weights[pi] * best;
            if total >= cutoff {
                return f64::INFINITY;
            }
        }
        total
    };

    // Lexicographic combination walk; ties keep the earlier (lex-least) set.
    let mut sel: Vec<usize> = (0..kk).collect();
    let mut best_cost = f64::INFINITY;
    let mut best_sel = sel.clone();
    loop {
        let c = eval(&sel, best_cost);
        if c < best_cost {
            best_cost = c;
            best_sel = sel.clone();
        }
        // Advance.
        let mut i = kk;
        loop {
            if i == 0 {
                let centers = best_sel.iter().map(|&ci| cands[ci]).collect();
                // np == 0 leaves best_cost at +inf from the cutoff path.
                return Ok((if np == 0 { 0.0 } else { best_cost }, centers));
            }
            i -= 1;
            if sel[i] != i + cands.len() - kk {
                sel[i] += 1;
                for j in (i + 1)..kk {
                    sel[j] = sel[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Exact best extension: minimum of `cost(base + F, points)` over all
/// `F` drawn from `pool` with `|F| <= s`. Returns the extended set. The
/// enumeration visits `sum_{j<=s} C(|pool|, j)` subsets, budget-guarded.
pub fn best_extension<M: Metric>(
    m: &M,
    points: &PointSet,
    base: &CenterSet,
    pool: &[PointId],
    s: usize,
    budget: u64,
) -> Result<(f64, CenterSet)> {
    let mut pool: Vec<PointId> = pool.to_vec();
    pool.sort_unstable();
    pool.dedup();
    pool.retain(|p| !base.contains(p));
    let s = s.min(pool.len());
    let mut total: u128 = 0;
    for j in 0..=s {
        total = total.saturating_add(binomial(pool.len(), j));
    }
    if total > budget as u128 {
        return Err(Error::BudgetExceeded {
            subsets: total,
            budget,
        });
    }
    let pts: Vec<(PointId, f64)> = points.iter().collect();
    let base_d: Vec<f64> = pts
        .iter()
        .map(|&(p, _)| {
            base.iter()
                .map(|&c| m.dist(p, c))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let pool_d: Vec<Vec<f64>> = pool
        .iter()
        .map(|&f| pts.iter().map(|&(p, _)| m.dist(p, f)).collect())
        .collect();
    let eval = |sel: &[usize]| -> f64 {
        pts.iter()
            .enumerate()
            .map(|(pi, &(_, w))| {
                let mut best = base_d[pi];
                for &fi in sel {
                    best = best.min(pool_d[fi][pi]);
                }
                w * best
            })
            .sum()
    };
    let mut best_cost = eval(&[]);
    let mut best_sel: Vec<usize> = Vec::new();
    for j in 1..=s {
        let mut sel: Vec<usize> = (0..j).collect();
        loop {
            let c = eval(&sel);
            if c < best_cost {
                best_cost = c;
                best_sel = sel.clone();
            }
            let mut i = j;
            let mut done = true;
            while i > 0 {
                i -= 1;
                if sel[i] != i + pool.len() - j {
                    sel[i] += 1;
                    for q in (i + 1)..j {
                        sel[q] = sel[q - 1] + 1;
                    }
                    done = false;
                    break;
                }
            }
            if done {
                break;
            }
        }
    }
    let mut out = base.clone();
    out.extend(best_sel.iter().map(|&fi| pool[fi]));
    Ok((best_cost, out))
}

/// Exact optima for a range of center counts, with witnesses.
#[derive(Debug, Clone)]
pub struct OptCurve {
    pub values: BTreeMap<usize, f64>,
    pub witnesses: BTreeMap<usize, CenterSet>,
}

impl OptCurve {
    pub fn value(&self, m: usize) -> Option<f64> {
        self.values.get(&m).copied()
    }

    /// Optimal cost is nonincreasing in the number of centers.
    pub fn is_monotone(&self) -> bool {
        let vals: Vec<f64> = self.values.values().copied().collect();
        vals.windows(2).all(|w| w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0))
    }
}

pub fn opt_curve<M: Metric>(
    m: &M,
    points: &PointSet,
    k_min: usize,
    k_max: usize,
    candidates: &[PointId],
    budget: u64,
) -> Result<OptCurve> {
    if k_min == 0 || k_min > k_max {
        return Err(Error::InvalidArgument(format!(
            "bad curve range [{k_min}, {k_max}]"
        )));
    }
    let mut values = BTreeMap::new();
    let mut witnesses = BTreeMap::new();
    for kk in k_min..=k_max {
        let (v, w) = opt_exact(m, points, kk, candidates, budget)?;
        values.insert(kk, v);
        witnesses.insert(kk, w);
    }
    Ok(OptCurve { values, witnesses })
}

/// Well-separated pair test: `d(u, U - u) >= gamma * d(u, v)` and
/// `d(v, V - v) >= gamma * d(u, v)`. A singleton side is treated as
/// infinitely separated.
pub fn is_well_separated<M: Metric>(
    m: &M,
    u: PointId,
    uset: &CenterSet,
    v: PointId,
    vset: &CenterSet,
    gamma: f64,
) -> bool {
    let duv = m.dist(u, v);
    dist_to_others(m, u, uset) >= gamma * duv && dist_to_others(m, v, vset) >= gamma * duv
}

/// Lazy-updates inequality: with `s = |P (+) P'|` (weight changes count),
/// `OPT_{k+s}(P') <= OPT_k(P)`. This is a theorem; a `false` indicates a bug
/// in the oracle or the metric validation.
pub fn check_lazy_updates_lemma<M: Metric>(
    m: &M,
    p: &PointSet,
    p_prime: &PointSet,
    k: usize,
    ground: &[PointId],
    budget: u64,
) -> Result<bool> {
    let s = p.sym_diff(p_prime).len();
    let (opt_k, _) = opt_exact(m, p, k, ground, budget)?;
    let (opt_ks, _) = opt_exact(m, p_prime, k + s, ground, budget)?;
    Ok(opt_ks <= opt_k + rel_slack(opt_k))
}

/// Outcome of the conditional stability check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StabilityCheck {
    /// Conclusion holds (vacuously true when the hypothesis is unmet).
    pub holds: bool,
    /// Whether the hypothesis `OPT_{k-r} <= eta * OPT_k` was satisfied.
    pub hypothesis_met: bool,
}

/// Double-sided stability: if `OPT_{k-r}(P) <= eta * OPT_k(P)` then
/// `OPT_k(P) <= 4 * OPT_{k + floor(r / (12 eta))}(P)`.
pub fn check_double_sided_stability<M: Metric>(
    m: &M,
    p: &PointSet,
    k: usize,
    r: usize,
    eta: f64,
    ground: &[PointId],
    budget: u64,
) -> Result<StabilityCheck> {
    if k == 0 || r + 1 > k {
        return Err(Error::InvalidArgument(format!(
            "stability check needs 0 <= r <= k-1, got k={k} r={r}"
        )));
    }
    if !(eta >= 1.0) {
        return Err(Error::InvalidArgument(format!("eta {eta} < 1")));
    }
    let (opt_k, _) = opt_exact(m, p, k, ground, budget)?;
    let (opt_kr, _) = opt_exact(m, p, k - r, ground, budget)?;
    if opt_kr > eta * opt_k + rel_slack(opt_k) {
        return Ok(StabilityCheck {
            holds: true,
            hypothesis_met: false,
        });
    }
    let bump = (r as f64 / (12.0 * eta)).floor() as usize;
    let (opt_plus, _) = opt_exact(m, p, k + bump, ground, budget)?;
    Ok(StabilityCheck {
        holds: opt_k <= 4.0 * opt_plus + rel_slack(opt_plus),
        hypothesis_met: true,
    })
}

/// Projection inequality: for `|U| >= k`,
/// `OPT_k^U(P) <= cost(U, P) + 2 * OPT_k(P)`.
pub fn check_projection_lemma<M: Metric>(
    m: &M,
    p: &PointSet,
    uset: &CenterSet,
    k: usize,
    ground: &[PointId],
    budget: u64,
) -> Result<bool> {
    if uset.len() < k {
        return Err(Error::InvalidArgument(format!(
            "projection check needs |U| >= k, got {} < {k}",
            uset.len()
        )));
    }
    let ucands: Vec<PointId> = uset.iter().copied().collect();
    let (lhs, _) = opt_exact(m, p, k, &ucands, budget)?;
    let cost_u = crate::metric::cost(m, uset, p)?;
    let (opt_k, _) = opt_exact(m, p, k, ground, budget)?;
    let rhs = cost_u + 2.0 * opt_k;
    Ok(lhs <= rhs + rel_slack(rhs))
}

fn rel_slack(x: f64) -> f64 {
    1e-9 * x.abs().max(1.0)
}
