//! Empirical constant of the product estimate
//! `‖fg‖_{Ḣ^{α−β/2}} ≲ ‖Λ^{1−β} f‖_{L^p} ‖g‖_{Ḣ^{1−α−β/2}}` when
//! `α + β/2 = 1 − 1/p`.

use std::time::Instant;

use gsqg_core::spectral::{fractional_laplacian, lebesgue_norm, random_band_limited, sobolev_norm_fluctuation, Field, TorusGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::keyvalue::ConfigFile;
use crate::report::{ExperimentOutput, ExperimentReport, Series, Verdict};
use crate::HarnessError;

#[derive(Debug, Clone, Serialize)]
pub struct ProductParams {
    pub n: usize,
    pub alpha: f64,
    pub beta: f64,
    pub p: f64,
    /// Smallest sample count `S`; the maxima over `S`, `2S` and `4S` samples
    /// are compared.
    pub samples: usize,
    pub seed: u64,
    /// Allowed relative growth of the maximum from `2S` to `4S` samples.
    pub stability: f64,
}

impl Default for ProductParams {
    fn default() -> Self {
        Self {
            n: 64,
            alpha: 0.4,
            beta: 0.4,
            p: 2.5,
            samples: 200,
            seed: 2024,
            stability: 0.1,
        }
    }
}

impl ProductParams {
    pub fn from_config(file: &ConfigFile) -> Result<Self, HarnessError> {
        let d = Self::default();
        Ok(Self {
            n: file.get_or("n", d.n)?,
            alpha: file.get_or("alpha", d.alpha)?,
            beta: file.get_or("beta", d.beta)?,
            p: file.get_or("p", d.p)?,
            samples: file.get_or("samples", d.samples)?,
            seed: file.get_or("seed", d.seed)?,
            stability: file.get_or("stability", d.stability)?,
        })
    }
}

/// Whether `α + β/2 = 1 − 1/p`.
pub fn admissible(alpha: f64, beta: f64, p: f64) -> bool {
    p > 1.0 && (alpha + beta / 2.0 - (1.0 - 1.0 / p)).abs() <= 1e-12
}

/// `‖fg‖_{Ḣ^{α−β/2}} / (‖Λ^{1−β} f‖_{L^p} ‖g‖_{Ḣ^{1−α−β/2}})`, or `None`
/// when the denominator vanishes. The product is taken pointwise without
/// dealiasing, so it is exact when both bands stay below `N/4`.
pub fn product_ratio(f: &Field, g: &Field, alpha: f64, beta: f64, p: f64) -> Result<Option<f64>, HarnessError> {
    let lf = lebesgue_norm(&fractional_laplacian(f, 1.0 - beta)?, p)?;
    let ng = sobolev_norm_fluctuation(g, 1.0 - alpha - beta / 2.0);
    let den = lf * ng;
    if !(den > 0.0) {
        return Ok(None);
    }
    let samples: Vec<f64> = f.physical().iter().zip(g.physical()).map(|(a, b)| a * b).collect();
    let fg = Field::from_physical(*f.grid(), samples)?;
    Ok(Some(sobolev_norm_fluctuation(&fg, alpha - beta / 2.0) / den))
}

/// Closed-form ratio for `f = g = cos(k·x)` with `|k| = r` (physical units),
/// `2k` resolved, and even integer `p`.
pub fn single_mode_ratio(r: f64, length: f64, alpha: f64, beta: f64, p: f64) -> Option<f64> {
    let e = p.round();
    if (p - e).abs() > 1e-12 || e < 2.0 || e as i64 % 2 != 0 {
        return None;
    }
    // mean of cos^p is (p−1)!!/p!!
    let mut mean = 1.0;
    let mut j = e as i64;
    while j > 0 {
        mean *= (j - 1) as f64 / j as f64;
        j -= 2;
    }
    let area = length * length;
    let lp = r.powf(1.0 - beta) * (mean * area).powf(1.0 / p);
    let hg = r.powf(1.0 - alpha - beta / 2.0) * length / 2f64.sqrt();
    // cos² = ½ + ½ cos(2k·x); the mean drops out of the homogeneous norm
    let hfg = (2.0 * r).powf(alpha - beta / 2.0) * 0.5 * length / 2f64.sqrt();
    Some(hfg / (lp * hg))
}

fn random_pair(grid: TorusGrid, seed: u64, index: u64) -> (Field, Field) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let top = (grid.n() as i64 / 4 - 1).max(1);
    let draw = |rng: &mut ChaCha8Rng| {
        let band = rng.gen_range(1..=top);
        let decay = rng.gen_range(0.5..2.5);
        random_band_limited(grid, band, decay, rng)
    };
    let f = draw(&mut rng);
    let g = draw(&mut rng);
    (f, g)
}

pub fn run(params: &ProductParams) -> Result<ExperimentOutput, HarnessError> {
    let started = Instant::now();
    let (alpha, beta, p) = (params.alpha, params.beta, params.p);
    if !admissible(alpha, beta, p) {
        return Err(HarnessError::Precondition(format!(
            "(alpha, beta, p) = ({alpha}, {beta}, {p}) violates alpha + beta/2 = 1 - 1/p"
        )));
    }
    if params.samples < 1 {
        return Err(HarnessError::Precondition("need at least one sample".into()));
    }
    let grid = TorusGrid::periodic(params.n)?;
    let total = 4 * params.samples;
    let ratios = (0..total as u64)
        .into_par_iter()
        .map(|i| {
            let (f, g) = random_pair(grid, params.seed, i);
            product_ratio(&f, &g, alpha, beta, p)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut report = ExperimentReport::new("product-check", params)?;
    let skipped = ratios.iter().filter(|r| r.is_none()).count();
    if skipped > 0 {
        report.note(format!("{skipped} samples with a vanishing denominator were skipped"));
    }
    let maxima: Vec<f64> = [1, 2, 4]
        .iter()
        .map(|m| {
            ratios[..m * params.samples]
                .iter()
                .flatten()
                .copied()
                .fold(0.0, f64::max)
        })
        .collect();
    let growth = maxima[2] / maxima[1] - 1.0;
    report.aggregate("maxima", json!(maxima));
    report.aggregate("empirical_constant", json!(maxima[2]));
    report.verdict(Verdict::judge(
        "maximum_finite",
        maxima[2],
        f64::INFINITY,
        maxima[2].is_finite() && maxima[2] > 0.0,
        "PASS if the empirical maximum is finite and positive",
    ));
    report.verdict(Verdict::at_most("maximum_growth", growth, params.stability));
    report.steps = total as u64;
    report.finish(started);
    let mut out = ExperimentOutput::new(report);
    out.series.push(Series::new(
        "ratios",
        "sample,ratio",
        ratios
            .iter()
            .enumerate()
            .filter_map(|(i, r)| r.map(|r| vec![i as f64, r])),
    ));
    out.series.push(Series::new(
        "maxima",
        "samples,maximum",
        [1, 2, 4].iter().zip(&maxima).map(|(m, v)| vec![(m * params.samples) as f64, *v]),
    ));
    Ok(out)
}
