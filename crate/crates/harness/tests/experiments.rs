use gsqg_core::spectral::{Field, TorusGrid};
use gsqg_harness::experiments::mollify::mollified;
use gsqg_harness::experiments::noise_check::{self, NoiseCheckParams};
use gsqg_harness::experiments::pathwise::{slack_verdict, violation};
use gsqg_harness::experiments::product::{admissible, product_ratio, single_mode_ratio};
use gsqg_harness::experiments::viscosity::coupled_defaults;
use gsqg_harness::report::Status;
use gsqg_harness::stats::Estimate;
use gsqg_core::solver::{run_simulation, SimulationConfig};

#[test]
fn tiny_mollification_reproduces_the_reference_run() {
    let reference = SimulationConfig {
        horizon: 0.02,
        ..coupled_defaults(32)
    };
    let a = run_simulation(&reference).unwrap().final_state.theta;
    let b = run_simulation(&mollified(&reference, 1e-12)).unwrap().final_state.theta;
    let diff = a.physical().iter().zip(b.physical()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(diff <= 1e-12 * a.max_abs(), "{diff}");
}

#[test]
fn single_mode_product_ratio_matches_closed_form() {
    let (alpha, beta, p) = (0.45, 0.6, 4.0);
    assert!(admissible(alpha, beta, p));
    let grid = TorusGrid::periodic(32).unwrap();
    for (k1, k2) in [(3i64, 0i64), (2, 1), (1, 3)] {
        let f = Field::from_fn(grid, |x, y| (k1 as f64 * x + k2 as f64 * y).cos());
        let r = ((k1 * k1 + k2 * k2) as f64).sqrt();
        let numeric = product_ratio(&f, &f, alpha, beta, p).unwrap().unwrap();
        let exact = single_mode_ratio(r, grid.length(), alpha, beta, p).unwrap();
        assert!((numeric - exact).abs() <= 1e-10 * exact, "{k1},{k2}: {numeric} vs {exact}");
    }
    assert!(single_mode_ratio(1.0, 1.0, alpha, beta, 2.5).is_none());
    assert!(product_ratio(&Field::zeros(grid), &Field::zeros(grid), alpha, beta, p).unwrap().is_none());
}

#[test]
fn degenerate_noise_has_zero_covariance() {
    let params = NoiseCheckParams {
        degenerate: true,
        samples: 1000,
        ..NoiseCheckParams::default()
    };
    let out = noise_check::run(&params).unwrap();
    assert_eq!(out.report.status, Status::Pass);
    let v = out.report.verdicts.iter().find(|v| v.name == "degenerate_covariance").unwrap();
    assert_eq!(v.value, 0.0);
}

fn est(mean: f64, std_error: f64) -> Estimate {
    Estimate {
        mean,
        std_error,
        count: 16,
    }
}

#[test]
fn slack_verdict_policy() {
    assert_eq!(violation(1.0, 2.0), 0.0);
    assert_eq!(violation(2.5, 2.0), 0.5);
    let (v, note) = slack_verdict("s", &est(0.0, 0.0), &est(0.0, 0.0), 2.0);
    assert_eq!(v.status, Status::Pass);
    assert!(note.is_some());
    assert_eq!(slack_verdict("s", &est(4.0, 0.1), &est(1.9, 0.1), 2.0).0.status, Status::Pass);
    assert_eq!(slack_verdict("s", &est(3.0, 0.5), &est(1.9, 0.2), 2.0).0.status, Status::Inconclusive);
    assert_eq!(slack_verdict("s", &est(2.0, 0.01), &est(1.9, 0.01), 2.0).0.status, Status::Fail);
}
