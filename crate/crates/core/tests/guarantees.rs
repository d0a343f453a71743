//! Oracle-backed checks of the subroutine guarantees at desk scale: the
//! local-search cost bound, the sampled 1-median expectation, the
//! well-separated replacement bound, and the removal search's stability
//! inequalities.

use dynkmedian::local_search::rand_local_search;
use dynkmedian::metric::{
    cost, cost_single, dist_to_others, CenterSet, Metric, MetricSpace, PointId, PointSet,
};
use dynkmedian::oracles::{is_well_separated, opt_exact};
use dynkmedian::robustify::{robustify, RobustSolution};
use dynkmedian::solvers::{weighted_sample, SolverConfig};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn grid(n: usize, seed: u64, span: u32, unit_weights: bool) -> (MetricSpace, PointSet) {
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
    let space = MetricSpace::from_coords(&pts, 2.0, 1e4).unwrap();
    let mut set = PointSet::new();
    for (id, _) in &pts {
        let w = if unit_weights {
            1.0
        } else {
            0.5 + rng.random::<f64>() * 2.5
        };
        set.insert_new(*id, w).unwrap();
    }
    (space, set)
}

#[test]
fn rand_local_search_cost_bound_holds_with_margin() {
    // cost(U*) <= 2 cost(U) + 12 OPT_{|U|-s}; sampled at a reduced trial
    // count here, the full battery runs in the acceptance suite.
    let cfg = SolverConfig::default();
    let mut violations = 0;
    for seed in 0..40u64 {
        let (space, pts) = grid(12, 500 + seed, 12, true);
        let u: CenterSet = pts.ids().take(6).collect();
        let cost_u = cost(&space, &u, &pts).unwrap();
        for s in 1..=3usize {
            let mut rng = ChaCha8Rng::seed_from_u64(seed * 10 + s as u64);
            let out = rand_local_search(&space, &pts, &u, s, &cfg, &mut rng).unwrap();
            let got = cost(&space, &out, &pts).unwrap();
            let (opt, _) = opt_exact(&space, &pts, 6 - s, &space.ground_ids(), 1 << 21).unwrap();
            if got > 2.0 * cost_u + 12.0 * opt + 1e-9 {
                violations += 1;
            }
        }
    }
    assert_eq!(violations, 0);
}

#[test]
fn fast_one_median_mean_single_sample_ratio() {
    // A single weighted draw is a 2-approximation in expectation; the
    // empirical mean over many draws stays under 2.2.
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut total_ratio = 0.0;
    let mut count = 0usize;
    for seed in 0..20u64 {
        let (space, pts) = grid(20, 700 + seed, 20, false);
        let (opt1, _) = opt_exact(&space, &pts, 1, &space.ground_ids(), 1 << 20).unwrap();
        if opt1 <= 0.0 {
            continue;
        }
        for _ in 0..500 {
            let y = weighted_sample(&pts, &mut rng).unwrap();
            total_ratio += cost_single(&space, y, &pts) / opt1;
            count += 1;
        }
    }
    let mean = total_ratio / count as f64;
    assert!(mean <= 2.2, "mean single-sample ratio {mean}");
}

#[test]
fn well_separated_replacement_bound() {
    // For a robust U and any V, each well-separated (u, v) admits replacing
    // v by u at factor <= 5 on v's cluster.
    let cfg = SolverConfig::default().exact();
    let mut checked = 0;
    for seed in 0..30u64 {
        let (space, pts) = grid(14, 900 + seed, 40, true);
        let ids: Vec<PointId> = pts.ids().collect();
        let ucand: CenterSet = ids.iter().step_by(3).copied().collect();
        let empty = RobustSolution::new();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (urob, _) = robustify(
            &space,
            &pts,
            &pts,
            RobustSolution::from_provisional(&ucand),
            &empty,
            space.delta(),
            &cfg,
            &mut rng,
        )
        .unwrap();
        let uset = urob.centers();
        let vset: CenterSet = ids.iter().skip(1).step_by(4).copied().collect();
        for &u in &uset {
            for &v in &vset {
                if !is_well_separated(&space, u, &uset, v, &vset, 4000.0) {
                    continue;
                }
                // Cluster of v under V.
                let cluster: Vec<(PointId, f64)> = pts
                    .iter()
                    .filter(|&(p, _)| {
                        let dv = space.dist(p, v);
                        vset.iter().all(|&v2| {
                            let d2 = space.dist(p, v2);
                            dv < d2 || (dv == d2 && v <= v2)
                        })
                    })
                    .collect();
                if cluster.is_empty() {
                    continue;
                }
                let cluster = PointSet::from_pairs(cluster).unwrap();
                let by_u = cost_single(&space, u, &cluster);
                let by_v = cost_single(&space, v, &cluster);
                assert!(
                    by_u <= 5.0 * by_v + 1e-9,
                    "seed {seed}: {by_u} > 5 * {by_v} (d(u,v) = {}, sep_u = {}, sep_v = {})",
                    space.dist(u, v),
                    dist_to_others(&space, u, &uset),
                    dist_to_others(&space, v, &vset),
                );
                checked += 1;
            }
        }
    }
    // Well-separated pairs at gamma = 4000 are rare; make sure the loop is
    // not vacuous across the seed sweep.
    assert!(checked > 0, "no well-separated pairs exercised");
}

#[test]
fn removal_search_stability_inequalities() {
    // After an exact-mode removal search picks ell, the start-of-epoch
    // optimum is sandwiched: OPT_{k-ell} <= eta' * OPT_k (the search's
    // acceptance implies it) and OPT_k <= 4 * OPT_{k+ell}.
    use dynkmedian::engine::{Engine, EngineConfig, UpdateEvent};
    for seed in 0..8u64 {
        let (space, pts) = grid(14, 1200 + seed, 30, true);
        let mut cfg = EngineConfig::practical(4, space.delta()).exact();
        cfg.big_c = 1.0;
        cfg.removal_threshold = 1e9;
        let mut eng = Engine::new(space.clone(), cfg.clone()).unwrap();
        for (id, w) in pts.iter() {
            eng.apply_update(UpdateEvent::Insert { id, weight: w }).unwrap();
        }
        let dynkmedian::engine::PhaseInfo::Epoch { ell, .. } = eng.phase_info() else {
            panic!("epoch should be open");
        };
        let ground = space.ground_ids();
        let (opt_k, _) = opt_exact(&space, &pts, 4, &ground, 1 << 21).unwrap();
        let (opt_plus, _) = opt_exact(&space, &pts, 4 + ell, &ground, 1 << 21).unwrap();
        if ell > 0 {
            assert!(
                opt_k <= 4.0 * opt_plus + 1e-9,
                "seed {seed}: OPT_k {opt_k} > 4 * OPT_(k+{ell}) {opt_plus}"
            );
        }
        let (opt_minus, _) = opt_exact(&space, &pts, 4 - ell.min(3), &ground, 1 << 21).unwrap();
        assert!(opt_k <= opt_minus + 1e-9);
    }
}

#[test]
fn projection_lemma_on_maintained_solutions() {
    use dynkmedian::oracles::check_projection_lemma;
    for seed in 0..10u64 {
        let (space, pts) = grid(12, 1500 + seed, 25, false);
        let uset: CenterSet = pts.ids().take(5).collect();
        assert!(check_projection_lemma(
            &space,
            &pts,
            &uset,
            3,
            &space.ground_ids(),
            1 << 21
        )
        .unwrap());
    }
}
