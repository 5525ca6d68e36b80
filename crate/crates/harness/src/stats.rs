//! Ensemble statistics and fits.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub count: usize,
}

impl Estimate {
    /// Half-width of the 2σ error bar.
    pub fn bar(&self) -> f64 {
        2.0 * self.std_error
    }
}

/// One-pass (Welford) mean and standard error.
pub fn estimate(values: &[f64]) -> Estimate {
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (i, &x) in values.iter().enumerate() {
        let d = x - mean;
        mean += d / (i + 1) as f64;
        m2 += d * (x - mean);
    }
    let n = values.len();
    let std_error = if n > 1 {
        (m2 / (n - 1) as f64 / n as f64).sqrt()
    } else {
        f64::NAN
    };
    Estimate {
        mean: if n == 0 { f64::NAN } else { mean },
        std_error,
        count: n,
    }
}

/// Ordinary least-squares line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Some(LineFit {
        slope,
        intercept: my - slope * mx,
    })
}

/// Log-log slope of `y` against `x` with a bootstrap standard error.
///
/// `samples[i][j]` is the value of realization `j` at abscissa `i`;
/// realizations are resampled jointly so that the correlation between
/// abscissae sharing noise is kept. `reduce` maps one resampled set of
/// realizations to the ordinate.
pub fn bootstrap_log_slope(
    x: &[f64],
    samples: &[Vec<Vec<f64>>],
    reduce: impl Fn(&[&Vec<f64>]) -> f64,
    resamples: usize,
    seed: u64,
) -> Option<(f64, f64)> {
    let m = samples.first()?.len();
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ordinate = |idx: &[usize]| -> Vec<f64> {
        samples
            .iter()
            .map(|runs| {
                let chosen: Vec<&Vec<f64>> = idx.iter().map(|&j| &runs[j]).collect();
                reduce(&chosen).ln()
            })
            .collect()
    };
    let all: Vec<usize> = (0..m).collect();
    let slope = fit_line(&lx, &ordinate(&all))?.slope;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut boots = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        let idx: Vec<usize> = (0..m).map(|_| rng.gen_range(0..m)).collect();
        if let Some(f) = fit_line(&lx, &ordinate(&idx)) {
            if f.slope.is_finite() {
                boots.push(f.slope);
            }
        }
    }
    let se = estimate(&boots).std_error * (boots.len() as f64).sqrt();
    Some((slope, se))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_fit_exact() {
        let f = fit_line(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-15 && (f.intercept - 1.0).abs() < 1e-15);
        assert!(fit_line(&[1.0, 1.0], &[0.0, 1.0]).is_none());
    }

    #[test]
    fn bootstrap_of_exact_power_law() {
        let x = [1.0, 2.0, 4.0];
        let samples: Vec<Vec<Vec<f64>>> = x
            .iter()
            .map(|v: &f64| (0..6).map(|j| vec![v.powf(1.5) * (1.0 + 0.1 * j as f64)]).collect())
            .collect();
        let mean = |runs: &[&Vec<f64>]| runs.iter().map(|r| r[0]).sum::<f64>() / runs.len() as f64;
        let (slope, se) = bootstrap_log_slope(&x, &samples, mean, 100, 1).unwrap();
        assert!((slope - 1.5).abs() < 1e-12);
        assert!(se < 1e-12);
    }
}
