//! Monte Carlo check of the noise covariance `E[W(x) ⊗ W(y)] = Q(x − y) Δt`.

use std::f64::consts::PI;
use std::time::Instant;

use gsqg_core::mollifier::Mollifier;
use gsqg_core::noise::{build_spectrum, evaluate_covariance, increment_at, sample_increment, NoiseSpectrum};
use gsqg_core::spectral::TorusGrid;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::keyvalue::{parse_mollifier, ConfigFile};
use crate::report::{ExperimentOutput, ExperimentReport, Series, Verdict};
use crate::HarnessError;

#[derive(Debug, Clone, Serialize)]
pub struct NoiseCheckParams {
    pub n: usize,
    pub length: f64,
    pub alpha: f64,
    pub cutoff: f64,
    pub delta: f64,
    pub mollifier: Mollifier,
    pub samples: usize,
    pub seed: u64,
    pub probes: Vec<(f64, f64)>,
    /// Entries must lie within `factor/√M` standard deviations of a product.
    pub factor: f64,
    /// Check the spectrum with no modes instead.
    pub degenerate: bool,
}

impl Default for NoiseCheckParams {
    fn default() -> Self {
        Self {
            n: 64,
            length: 2.0 * PI,
            alpha: 0.4,
            cutoff: 8.0,
            delta: 0.0,
            mollifier: Mollifier::Gaussian,
            samples: 10_000,
            seed: 2024,
            probes: vec![(0.0, 0.0), (PI, 0.0)],
            factor: 4.0,
            degenerate: false,
        }
    }
}

fn parse_coordinate(w: &str) -> Result<f64, String> {
    match w {
        "pi" => Ok(PI),
        "-pi" => Ok(-PI),
        _ => w.parse().map_err(|_| format!("invalid coordinate `{w}`")),
    }
}

/// `x y; x y; …`, with `pi` accepted as a coordinate.
pub fn parse_probes(v: &str) -> Result<Vec<(f64, f64)>, String> {
    v.split(';')
        .map(|p| {
            let w: Vec<&str> = p.split_whitespace().collect();
            match w.as_slice() {
                [x, y] => Ok((parse_coordinate(x)?, parse_coordinate(y)?)),
                _ => Err(format!("probe `{}` is not a pair `x y`", p.trim())),
            }
        })
        .collect()
}

impl NoiseCheckParams {
    pub fn from_config(file: &ConfigFile) -> Result<Self, HarnessError> {
        let d = Self::default();
        Ok(Self {
            n: file.get_or("n", d.n)?,
            length: file.get_or("length", d.length)?,
            alpha: file.get_or("alpha", d.alpha)?,
            cutoff: file.get_or("cutoff", d.cutoff)?,
            delta: file.get_or("noise_delta", d.delta)?,
            mollifier: file.get_with("mollifier", parse_mollifier)?.unwrap_or(d.mollifier),
            samples: file.get_or("samples", d.samples)?,
            seed: file.get_or("seed", d.seed)?,
            probes: file.get_with("probes", parse_probes)?.unwrap_or(d.probes),
            factor: file.get_or("factor", d.factor)?,
            degenerate: file.flag("degenerate")?.unwrap_or(d.degenerate),
        })
    }

    pub fn spectrum(&self) -> Result<NoiseSpectrum, HarnessError> {
        let grid = TorusGrid::new(self.n, self.length)?;
        if self.degenerate {
            return Ok(NoiseSpectrum::empty(grid, self.alpha));
        }
        Ok(build_spectrum(grid, self.alpha, self.cutoff, self.delta, self.mollifier)?)
    }
}

/// Empirical `E[W_i(x_a) W_j(x_b)]` for every ordered probe pair, from
/// increments at `Δt = 1`.
pub fn empirical_covariances(
    spec: &NoiseSpectrum,
    probes: &[(f64, f64)],
    samples: usize,
    seed: u64,
) -> Result<Vec<Vec<[[f64; 2]; 2]>>, HarnessError> {
    let p = probes.len();
    let zero = || vec![vec![[[0.0; 2]; 2]; p]; p];
    let sums = (0..samples as u64)
        .into_par_iter()
        .map(|m| -> Result<_, HarnessError> {
            let inc = sample_increment(spec, 1.0, seed, m)?;
            let w = probes
                .iter()
                .map(|x| increment_at(spec, &inc, *x))
                .collect::<Result<Vec<_>, _>>()?;
            let mut acc = zero();
            for a in 0..p {
                for b in 0..p {
                    let (wa, wb) = ([w[a].0, w[a].1], [w[b].0, w[b].1]);
                    for i in 0..2 {
                        for j in 0..2 {
                            acc[a][b][i][j] = wa[i] * wb[j];
                        }
                    }
                }
            }
            Ok(acc)
        })
        .try_reduce(zero, |mut x, y| {
            for a in 0..p {
                for b in 0..p {
                    for i in 0..2 {
                        for j in 0..2 {
                            x[a][b][i][j] += y[a][b][i][j];
                        }
                    }
                }
            }
            Ok(x)
        })?;
    let scale = 1.0 / samples.max(1) as f64;
    Ok(sums
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(|m| [[m[0][0] * scale, m[0][1] * scale], [m[1][0] * scale, m[1][1] * scale]])
                .collect()
        })
        .collect())
}

pub fn run(params: &NoiseCheckParams) -> Result<ExperimentOutput, HarnessError> {
    let started = Instant::now();
    if params.samples < 1000 {
        return Err(HarnessError::Precondition("need at least 1000 samples".into()));
    }
    if params.probes.is_empty() {
        return Err(HarnessError::Precondition("need at least one probe point".into()));
    }
    let spec = params.spectrum()?;
    let mut report = ExperimentReport::new("noise-check", params)?;
    report.aggregate("spectrum", serde_json::to_value(spec.summary())?);
    let emp = empirical_covariances(&spec, &params.probes, params.samples, params.seed)?;
    report.steps = params.samples as u64;
    let q0 = evaluate_covariance(&spec, (0.0, 0.0));
    let root_m = (params.samples as f64).sqrt();

    let mut rows = Vec::new();
    let mut max_z = 0.0f64;
    let mut max_sym = 0.0f64;
    let mut max_abs = 0.0f64;
    let p = params.probes.len();
    for a in 0..p {
        for b in 0..p {
            let (xa, xb) = (params.probes[a], params.probes[b]);
            let q = evaluate_covariance(&spec, (xa.0 - xb.0, xa.1 - xb.1));
            for i in 0..2 {
                for j in 0..2 {
                    // standard deviation of a product of two centred Gaussians
                    let sd = (q0[i][i] * q0[j][j] + q[i][j] * q[i][j]).sqrt();
                    let diff = (emp[a][b][i][j] - q[i][j]).abs();
                    max_abs = max_abs.max(diff.max(emp[a][b][i][j].abs()));
                    let z = if sd > 0.0 { diff * root_m / sd } else if diff == 0.0 { 0.0 } else { f64::INFINITY };
                    max_z = max_z.max(z);
                    let sym = (emp[a][b][i][j] - emp[b][a][i][j]).abs();
                    let zs = if sd > 0.0 { sym * root_m / (2f64.sqrt() * sd) } else if sym == 0.0 { 0.0 } else { f64::INFINITY };
                    max_sym = max_sym.max(zs);
                    rows.push(vec![
                        xa.0, xa.1, xb.0, xb.1, i as f64, j as f64, emp[a][b][i][j], q[i][j], z,
                    ]);
                }
            }
        }
    }
    report.aggregate("max_z_score", json!(max_z));
    report.aggregate("max_symmetry_z_score", json!(max_sym));
    report.aggregate("corrector", json!(spec.summary().corrector));
    report.verdict(Verdict::at_most("covariance_z_score", max_z, params.factor));
    report.verdict(Verdict::at_most("symmetry_z_score", max_sym, params.factor));
    if spec.is_empty() {
        report.verdict(Verdict::at_most("degenerate_covariance", max_abs, 0.0));
    }
    report.finish(started);
    let mut out = ExperimentOutput::new(report);
    out.series.push(Series::new(
        "covariance",
        "x1,x2,y1,y2,i,j,empirical,analytic,z_score",
        rows,
    ));
    Ok(out)
}
