//! Sampling of `F(n)` and the fit of `F(n) ≤ −K|n|^{β−2α} + C|n|^{β−2}`,
//! with the adaptive quadrature cross-checked against a fixed-grid sum.

use std::time::Instant;

use gsqg_core::coercivity::{build_profile, f_delta, fixed_grid_estimate, MollifierSpec, QuadSettings};
use gsqg_core::mollifier::CutoffProfile;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::keyvalue::ConfigFile;
use crate::report::{ExperimentOutput, ExperimentReport, Series, Verdict};
use crate::HarnessError;

#[derive(Debug, Clone, Serialize)]
pub struct CoercivityParams {
    /// `(α, β)` pairs.
    pub pairs: Vec<(f64, f64)>,
    pub radii: Vec<f64>,
    pub tolerance: f64,
    pub max_panels: usize,
    pub profile: CutoffProfile,
    /// Radius `|n|` of the fixed-grid cross-check.
    pub check_radius: f64,
    pub check_deltas: Vec<f64>,
    pub grid_step: f64,
    pub grid_radius: f64,
}

/// `count` log-spaced points in `[lo, hi]`.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let step = (hi / lo).ln() / (count - 1) as f64;
    (0..count).map(|i| lo * (step * i as f64).exp()).collect()
}

impl Default for CoercivityParams {
    fn default() -> Self {
        Self {
            pairs: vec![(0.4, 0.6), (0.3, 0.4)],
            radii: log_spaced(1.0, 64.0, 8),
            tolerance: 1e-4,
            max_panels: 4000,
            profile: CutoffProfile::BumpIntegral,
            check_radius: 2.0,
            check_deltas: vec![0.1, 0.05, 0.025],
            grid_step: 0.02,
            grid_radius: 200.0,
        }
    }
}

fn parse_pairs(v: &str) -> Result<Vec<(f64, f64)>, String> {
    v.split(';')
        .map(|p| {
            let w: Vec<f64> = p
                .split_whitespace()
                .map(|x| x.parse().map_err(|_| format!("invalid number `{x}` in pairs")))
                .collect::<Result<_, _>>()?;
            match w.as_slice() {
                [a, b] => Ok((*a, *b)),
                _ => Err(format!("pair `{}` is not `alpha beta`", p.trim())),
            }
        })
        .collect()
}

fn parse_profile(v: &str) -> Result<CutoffProfile, String> {
    match v {
        "bump" => Ok(CutoffProfile::BumpIntegral),
        "logistic" => Ok(CutoffProfile::Logistic),
        _ => Err(format!("unknown profile `{v}` (expected bump or logistic)")),
    }
}

impl CoercivityParams {
    pub fn from_config(file: &ConfigFile) -> Result<Self, HarnessError> {
        let d = Self::default();
        Ok(Self {
            pairs: file.get_with("pairs", parse_pairs)?.unwrap_or(d.pairs),
            radii: file.list_or("radii", d.radii)?,
            tolerance: file.get_or("tolerance", d.tolerance)?,
            max_panels: file.get_or("max_panels", d.max_panels)?,
            profile: file.get_with("profile", parse_profile)?.unwrap_or(d.profile),
            check_radius: file.get_or("check_radius", d.check_radius)?,
            check_deltas: file.list_or("check_deltas", d.check_deltas)?,
            grid_step: file.get_or("grid_step", d.grid_step)?,
            grid_radius: file.get_or("grid_radius", d.grid_radius)?,
        })
    }
}

pub fn run(params: &CoercivityParams) -> Result<ExperimentOutput, HarnessError> {
    let started = Instant::now();
    if params.pairs.is_empty() || params.radii.is_empty() {
        return Err(HarnessError::Precondition("need at least one (alpha, beta) pair and one radius".into()));
    }
    if !(params.tolerance > 0.0) {
        return Err(HarnessError::Precondition("tolerance must be positive".into()));
    }
    let quad = QuadSettings {
        tolerance: params.tolerance,
        max_panels: params.max_panels,
    };
    let mut report = ExperimentReport::new("coercivity", params)?;
    let mut out_series = Vec::new();
    let mut check_rows = Vec::new();
    for &(alpha, beta) in &params.pairs {
        let tag = format!("a{alpha}_b{beta}");
        if !(beta / 2.0 < alpha && alpha < 0.5) {
            report.note(format!(
                "(alpha, beta) = ({alpha}, {beta}) is outside beta/2 < alpha < 1/2; K > 0 is not expected"
            ));
        }
        let profile = build_profile(alpha, beta, &params.radii, params.profile, &quad)?;
        let (k, c) = profile.fit.map(|f| (f.k, f.c)).unwrap_or((f64::NAN, f64::NAN));
        report.runs.push(json!({
            "alpha": alpha,
            "beta": beta,
            "samples": profile.samples(),
            "errors": profile.rows.iter().map(|r| r.limit.error).collect::<Vec<_>>(),
            "K": k,
            "C": c,
        }));
        report.verdict(Verdict::judge(
            &format!("fitted_K_positive_{tag}"),
            k,
            0.0,
            k > 0.0,
            "PASS if the fitted K > 0",
        ));
        out_series.push(Series {
            name: format!("coercivity_{tag}"),
            csv: profile.to_csv(),
        });

        // adaptive quadrature against the fixed-grid sum
        let checks = params
            .check_deltas
            .par_iter()
            .map(|&d| {
                let m = MollifierSpec::with_profile(d, params.profile);
                let adaptive = f_delta((params.check_radius, 0.0), alpha, beta, &m, &quad)?;
                let grid = fixed_grid_estimate(params.check_radius, alpha, beta, &m, params.grid_step, params.grid_radius)?;
                Ok((d, adaptive, grid))
            })
            .collect::<Result<Vec<_>, HarnessError>>()?;
        let mut worst = 0.0f64;
        for (d, a, g) in checks {
            let excess = (a.value - g.value).abs() / (a.error + g.error);
            worst = worst.max(excess);
            check_rows.push(vec![alpha, beta, d, a.value, a.error, g.value, g.error]);
        }
        report.verdict(Verdict::judge(
            &format!("fixed_grid_agreement_{tag}"),
            worst,
            1.0,
            worst <= 1.0,
            "PASS if |adaptive − fixed grid| <= adaptive error + fixed-grid error",
        ));
    }
    report.finish(started);
    let mut out = ExperimentOutput::new(report);
    out.series.extend(out_series);
    out.series.push(Series::new(
        "fixed_grid_check",
        "alpha,beta,delta,adaptive,adaptive_error,grid,grid_error",
        check_rows,
    ));
    Ok(out)
}
