//! The class DP against exhaustive enumeration of cut sets.

mod common;

use std::time::Instant;

use nadim::cutset::{brute_force_min_cut, min_cut_cost, CutSetProblem};
use nadim::Error;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const WANTED: usize = 200;

#[test]
fn dp_matches_brute_force() {
    let started = Instant::now();
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let mut compared = 0;
    let mut skipped = 0;
    let mut worst: f64 = 0.0;
    while compared < WANTED {
        assert!(skipped < 20 * WANTED, "too few instances small enough to enumerate");
        let spec = common::random_spec(&mut rng, 6, 3);
        let theta = [0.3, 0.5, 1.0][rng.random_range(0..3)];
        let t = rng.random_range(0.0..1.5);
        // floor delta^{1/theta} within c_max^6 of 1; draws too deep to enumerate are skipped
        let log_c = spec.log_c_max();
        let log_delta = theta * log_c * rng.random_range(1.0..6.0);
        let problem = CutSetProblem::new(&spec, log_delta.exp(), theta, t);
        let bf = match brute_force_min_cut(&spec, &problem) {
            Ok(r) => r,
            Err(Error::InstanceTooLarge(_)) => {
                skipped += 1;
                continue;
            }
            Err(e) => panic!("{e}"),
        };
        let dp = min_cut_cost(&spec, &problem).unwrap();
        let err = (dp.min_cost_log - bf.min_cost_log).abs();
        assert!(
            err < 1e-10,
            "theta={theta} t={t} delta={}: dp={} brute={}",
            problem.delta,
            dp.min_cost_log,
            bf.min_cost_log
        );
        assert_eq!(dp.k_delta, bf.k_delta);
        worst = worst.max(err);
        compared += 1;
    }
    let elapsed = started.elapsed();
    println!("{compared} instances ({skipped} too large), worst |dp - brute| = {worst:.2e}, {elapsed:?}");
    assert!(elapsed.as_secs_f64() < 60.0);
}

#[test]
fn dp_matches_brute_force_on_presets() {
    for name in ["middle-third", "full-interval", "block-alternating"] {
        let spec = nadim::system::presets::by_name::<f64>(name).unwrap();
        for &theta in &[0.3, 0.5, 1.0] {
            for &t in &[0.0, 0.4, 0.63, 1.0, 1.5] {
                let delta = spec.c_max().powf(1.5 * theta);
                let p = CutSetProblem::new(&spec, delta, theta, t);
                let bf = brute_force_min_cut(&spec, &p).unwrap();
                let dp = min_cut_cost(&spec, &p).unwrap();
                assert!((dp.min_cost_log - bf.min_cost_log).abs() < 1e-10, "{name} {theta} {t}");
            }
        }
    }
}
