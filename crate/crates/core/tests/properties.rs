use nadim::cutset::{k_delta, min_cut_cost, CutSetProblem};
use nadim::geometry::{box_count, geometric_scales, mass_distribution, realize_attractor, Placement};
use nadim::infinite::truncate_level;
use nadim::logspace::log_sum_exp;
use nadim::pressure::{jump_points, moran_exponent, LevelTable};
use nadim::system::{AnalyticFamily, LevelSpec, SystemSpec, TailRule};
use proptest::prelude::*;

/// Levels of 2..=3 maps; each inner vector is scaled so its ratios sum below 0.95.
fn levels(max_levels: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(0.3f64..1.0, 2..=3), 1..=max_levels)
}

fn spec_from(raw: &[Vec<f64>]) -> SystemSpec<f64> {
    let mut ls: Vec<LevelSpec<f64>> = raw
        .iter()
        .map(|r| {
            let n = r.len() as f64;
            let pairs: Vec<(f64, u64)> = r.iter().map(|&u| (u * 0.95 / n, 1)).collect();
            LevelSpec::from_ratios(&pairs).unwrap()
        })
        .collect();
    let last = ls.pop().unwrap();
    SystemSpec::builder("prop", TailRule::Periodic(vec![last]))
        .prefix(ls)
        .build()
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn pressure_strict_decrease_bound(raw in levels(8), t1 in 0.0f64..2.0, dt in 0.0f64..2.0) {
        let spec = spec_from(&raw);
        let t2 = t1 + dt;
        let table = LevelTable::new(&spec, 40).unwrap();
        let a = table.log_partition_sums(t1);
        let b = table.log_partition_sums(t2);
        let slope = -spec.log_c_max();
        for k in 1..=40 {
            let drop = a[k - 1] - b[k - 1];
            let bound = k as f64 * dt * slope;
            prop_assert!(drop >= bound - 1e-9 * (1.0 + bound), "k={k}: {drop} < {bound}");
        }
    }

    #[test]
    fn min_cost_monotone_in_theta_and_t(
        raw in levels(4),
        depth in 1.0f64..3.0,
        th in 0.2f64..1.0,
        dth in 0.0f64..0.5,
        t in 0.0f64..1.5,
        dt in 0.0f64..0.5,
    ) {
        let spec = spec_from(&raw);
        let th2 = (th + dth).min(1.0);
        let delta = (spec.log_c_max() * depth).exp();
        let cost = |theta: f64, t: f64| {
            min_cut_cost(&spec, &CutSetProblem::new(&spec, delta, theta, t)).unwrap().min_cost_log
        };
        // larger theta narrows the admissible band, so the minimum cannot drop
        prop_assert!(cost(th, t) <= cost(th2, t) + 1e-12);
        // every cut element has diameter below |J|
        prop_assert!(cost(th, t + dt) <= cost(th, t) + 1e-12);
    }

    #[test]
    fn k_delta_monotone(raw in levels(6), a in 0.01f64..0.9, f in 0.01f64..1.0) {
        let spec = spec_from(&raw);
        let b = a * f;
        prop_assert!(k_delta(&spec, b).unwrap() >= k_delta(&spec, a).unwrap());
    }

    #[test]
    fn jump_points_ordered_and_bounded(raw in levels(6)) {
        let spec = spec_from(&raw);
        let j = jump_points(&spec, 64, 32, 1e-8).unwrap();
        prop_assert!(j.s_lower <= j.s_upper + 2e-8);
        prop_assert!(j.s_lower >= 0.0 && j.s_upper <= 1.0);
        let s = moran_exponent(&spec, 64, 1e-10).unwrap();
        prop_assert!((0.0..=1.0).contains(&s));
    }

    #[test]
    fn mass_distribution_is_normalized(raw in levels(4), depth in 1usize..7, t in 0.0f64..1.0) {
        let spec = spec_from(&raw);
        let r = realize_attractor(&spec, depth, Placement::OscLeftPacked, 1 << 16).unwrap();
        let mu = mass_distribution(&r, t, 1).unwrap();
        prop_assert!(mu.weights.iter().all(|&w| w >= 0.0));
        prop_assert!((mu.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn box_counts_monotone_on_nested_grids(raw in levels(4), depth in 2usize..7) {
        let spec = spec_from(&raw);
        let r = realize_attractor(&spec, depth, Placement::SscUniformGaps { gap: None }, 1 << 16).unwrap();
        // only nested grids give monotone counts; 2^-j scales nest
        let counts = box_count(&r, &geometric_scales(0.5, 0.5f64.powi(16), 16));
        for w in counts.windows(2) {
            prop_assert!(w[0].count <= w[1].count);
        }
    }

    #[test]
    fn truncation_is_minimal_and_covers(
        log_decay in -3.0f64..-0.05,
        t in 0.05f64..1.0,
        slack in 1e-4f64..1.0,
    ) {
        let fam = AnalyticFamily::Geometric { log_scale: -1.0, log_decay };
        let level = LevelSpec::Analytic(fam);
        let k = truncate_level(&level, t, slack).unwrap() as usize;
        let full = fam.log_power_sum(t);
        let kept = |k: usize| log_sum_exp((1..=k).map(|j| t * fam.log_ratio(j)));
        prop_assert!(full <= slack.ln_1p() + kept(k) + 1e-12);
        if k > 1 {
            prop_assert!(full > slack.ln_1p() + kept(k - 1) - 1e-12);
        }
    }
}
