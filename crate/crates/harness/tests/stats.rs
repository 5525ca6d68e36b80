use gsqg_harness::stats::{estimate, fit_line};
use proptest::prelude::*;

/// Textbook two-pass mean and standard error.
fn two_pass(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

proptest! {
    #[test]
    fn welford_matches_two_pass(values in prop::collection::vec(-1e3f64..1e3, 2..200), shift in -1e6f64..1e6) {
        let shifted: Vec<f64> = values.iter().map(|v| v + shift).collect();
        let e = estimate(&shifted);
        let (mean, se) = two_pass(&shifted);
        prop_assert_eq!(e.count, shifted.len());
        prop_assert!((e.mean - mean).abs() <= 1e-9 * mean.abs().max(1.0));
        prop_assert!((e.std_error - se).abs() <= 1e-6 * se.max(1e-3));
        prop_assert!((e.bar() - 2.0 * e.std_error).abs() == 0.0);
    }

    #[test]
    fn line_fit_recovers_exact_lines(slope in -5.0f64..5.0, intercept in -5.0f64..5.0, n in 2usize..30) {
        let x: Vec<f64> = (0..n).map(|i| i as f64 * 0.37 - 2.0).collect();
        let y: Vec<f64> = x.iter().map(|v| slope * v + intercept).collect();
        let fit = fit_line(&x, &y).unwrap();
        prop_assert!((fit.slope - slope).abs() <= 1e-10);
        prop_assert!((fit.intercept - intercept).abs() <= 1e-10);
    }
}

#[test]
fn degenerate_samples() {
    assert!(estimate(&[]).mean.is_nan());
    let one = estimate(&[3.0]);
    assert_eq!(one.mean, 3.0);
    assert!(one.std_error.is_nan());
    let same = estimate(&[2.0; 5]);
    assert_eq!(same.std_error, 0.0);
    assert!(fit_line(&[1.0, 1.0], &[0.0, 1.0]).is_none());
    assert!(fit_line(&[1.0], &[0.0]).is_none());
}
