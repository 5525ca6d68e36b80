//! Rate of the vanishing-viscosity limit with shared noise.

use std::time::Instant;

use gsqg_core::solver::{AnalyticField, InitialCondition, NoiseConfig, Simulation, SimulationConfig};
use gsqg_core::spectral::sobolev_norm_fluctuation;
use serde::Serialize;
use serde_json::json;

use super::{ensemble, lockstep, realization, require_uniqueness};
use crate::keyvalue::{simulation_config, ConfigFile};
use crate::report::{ExperimentOutput, ExperimentReport, Series, Status, Verdict};
use crate::stats::{bootstrap_log_slope, estimate};
use crate::HarnessError;

#[derive(Debug, Clone, Serialize)]
pub struct ViscosityParams {
    /// Inviscid reference; its `viscosity` is ignored.
    pub sim: SimulationConfig,
    pub viscosities: Vec<f64>,
    pub ensemble: usize,
    /// Allowed shortfall of the slope below `2 − β/2 − α`.
    pub slope_margin: f64,
    pub resamples: usize,
}

/// Shared defaults of the coupled stochastic experiments.
pub fn coupled_defaults(n: usize) -> SimulationConfig {
    SimulationConfig {
        n,
        beta: 0.45,
        noise: NoiseConfig {
            enabled: true,
            alpha: 0.4,
            cutoff: 8.0,
            delta: 0.0,
        },
        dt: 1e-3,
        horizon: 0.5,
        initial: InitialCondition::Analytic(AnalyticField::RandomBand {
            band: 6,
            decay: 1.0,
            norm: 2.0,
            seed: 7,
        }),
        diagnostics_every: 10,
        p: 4.0,
        seed: 2024,
        ..SimulationConfig::default()
    }
}

impl Default for ViscosityParams {
    fn default() -> Self {
        Self {
            sim: coupled_defaults(128),
            viscosities: vec![1e-3, 3e-3, 1e-2, 3e-2],
            ensemble: 8,
            slope_margin: 0.3,
            resamples: 400,
        }
    }
}

impl ViscosityParams {
    pub fn from_config(file: &ConfigFile) -> Result<Self, HarnessError> {
        let d = Self::default();
        Ok(Self {
            sim: simulation_config(file, d.sim)?,
            viscosities: file.list_or("viscosities", d.viscosities)?,
            ensemble: file.get_or("ensemble", d.ensemble)?,
            slope_margin: file.get_or("slope_margin", d.slope_margin)?,
            resamples: file.get_or("resamples", d.resamples)?,
        })
    }
}

/// Three-way verdict on a fitted slope against a lower threshold with a 2σ
/// bar: INCONCLUSIVE when the bar reaches a zero slope or covers the
/// threshold from below.
pub fn slope_verdict(name: &str, slope: f64, bar: f64, threshold: f64) -> Verdict {
    let rule = "PASS if slope >= threshold; INCONCLUSIVE if slope - bar <= 0 or slope + bar >= threshold; else FAIL";
    let status = if !(slope - bar > 0.0) {
        Status::Inconclusive
    } else if slope >= threshold {
        Status::Pass
    } else if slope + bar >= threshold {
        Status::Inconclusive
    } else {
        Status::Fail
    };
    Verdict::with_status(name, status, slope, threshold, rule)
}

pub fn run(params: &ViscosityParams) -> Result<ExperimentOutput, HarnessError> {
    let started = Instant::now();
    let nus = &params.viscosities;
    if nus.len() < 4 {
        return Err(HarnessError::Precondition("need at least 4 viscosities".into()));
    }
    if nus.iter().any(|v| !(*v > 0.0)) || nus.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(HarnessError::Precondition(
            "viscosities must be positive and strictly increasing".into(),
        ));
    }
    if params.ensemble < 2 {
        return Err(HarnessError::Precondition("need at least 2 realizations".into()));
    }
    let base = SimulationConfig {
        viscosity: 0.0,
        ..params.sim.clone()
    };
    require_uniqueness(&base)?;
    let steps = base.steps()?;
    let every = base.diagnostics_every as u64;
    let s = base.beta / 2.0 - 1.0;
    let mut report = ExperimentReport::new("viscosity", params)?;

    // errors[r][i][t] = ‖θ^{ν_i}_t − θ_t‖² for realization r
    let per_run = ensemble(params.ensemble, |r| {
        let reference = realization(&base, r);
        let mut sims = vec![Simulation::new(&reference)?];
        for &nu in nus {
            sims.push(Simulation::new(&SimulationConfig {
                viscosity: nu,
                ..reference.clone()
            })?);
        }
        let mut times = Vec::new();
        let mut errors = vec![Vec::new(); nus.len()];
        lockstep(&mut sims, steps, every, |sims| {
            let theta = &sims[0].state().theta;
            times.push(sims[0].state().time);
            for (i, sim) in sims[1..].iter().enumerate() {
                let d = sim.state().theta.sub(theta)?;
                errors[i].push(sobolev_norm_fluctuation(&d, s).powi(2));
            }
            Ok(())
        })?;
        Ok((times, errors))
    })?;
    report.steps = steps * (nus.len() as u64 + 1) * params.ensemble as u64;
    let times = per_run[0].0.clone();

    // samples[i][r] = time series of realization r at viscosity i
    let samples: Vec<Vec<Vec<f64>>> = (0..nus.len())
        .map(|i| per_run.iter().map(|(_, e)| e[i].clone()).collect())
        .collect();
    let sup_of_mean = |runs: &[&Vec<f64>]| {
        (0..runs[0].len())
            .map(|t| runs.iter().map(|r| r[t]).sum::<f64>() / runs.len() as f64)
            .fold(0.0, f64::max)
    };
    let mut rows = Vec::new();
    for (i, &nu) in nus.iter().enumerate() {
        let runs: Vec<&Vec<f64>> = samples[i].iter().collect();
        let sup = sup_of_mean(&runs);
        let t_star = (0..times.len())
            .max_by(|&a, &b| {
                let ma = runs.iter().map(|r| r[a]).sum::<f64>();
                let mb = runs.iter().map(|r| r[b]).sum::<f64>();
                ma.total_cmp(&mb)
            })
            .unwrap_or(0);
        let at_star = estimate(&runs.iter().map(|r| r[t_star]).collect::<Vec<_>>());
        report.runs.push(json!({
            "viscosity": nu,
            "sup_mean_error": sup,
            "error_bar": at_star.bar(),
            "time_of_sup": times[t_star],
        }));
        rows.push(vec![nu, sup, at_star.bar(), times[t_star]]);
    }
    let target = 2.0 - base.beta / 2.0 - base.noise.alpha;
    let threshold = target - params.slope_margin;
    let (slope, se) = bootstrap_log_slope(nus, &samples, sup_of_mean, params.resamples, base.seed)
        .ok_or_else(|| HarnessError::Precondition("slope undefined".into()))?;
    report.aggregate("slope", json!(slope));
    report.aggregate("slope_error_bar", json!(2.0 * se));
    report.aggregate("target_exponent", json!(target));
    report.aggregate("admissibility", serde_json::to_value(base.admissibility())?);
    report.verdict(slope_verdict("slope", slope, 2.0 * se, threshold));

    let mut out = ExperimentOutput::new({
        report.finish(started);
        report
    });
    out.series.push(Series::new("viscosity", "viscosity,sup_mean_error,error_bar,time_of_sup", rows));
    let mut header = String::from("time");
    for nu in nus {
        header.push_str(&format!(",nu_{nu:e}"));
    }
    out.series.push(Series::new(
        "viscosity_time",
        &header,
        (0..times.len()).map(|t| {
            let mut row = vec![times[t]];
            for runs in &samples {
                row.push(runs.iter().map(|r| r[t]).sum::<f64>() / runs.len() as f64);
            }
            row
        }),
    ));
    Ok(out)
}
