//! Convergence of the mollified model to the unmollified one with shared
//! noise, and of the mollified corrector `c_δ` to `c₀`.

use std::time::Instant;

use gsqg_core::mollifier::Mollifier;
use gsqg_core::solver::{Simulation, SimulationConfig};
use gsqg_core::spectral::inhomogeneous_sobolev_norm;
use serde::Serialize;
use serde_json::json;

use super::viscosity::coupled_defaults;
use super::{ensemble, lockstep, realization};
use crate::keyvalue::{simulation_config, ConfigFile};
use crate::report::{ExperimentOutput, ExperimentReport, Series, Verdict};
use crate::stats::estimate;
use crate::HarnessError;

#[derive(Debug, Clone, Serialize)]
pub struct MollifyParams {
    /// Unmollified reference; its mollification scales are ignored.
    pub sim: SimulationConfig,
    /// Strictly decreasing.
    pub deltas: Vec<f64>,
    pub ensemble: usize,
    /// Order of the negative norm `H^{−ε}`.
    pub epsilon: f64,
    /// Bound on the error at the smallest δ, relative to
    /// `sup_t ‖θ_t‖_{H^{−ε}}` of the reference run.
    pub tolerance: f64,
}

impl Default for MollifyParams {
    fn default() -> Self {
        Self {
            sim: coupled_defaults(64),
            deltas: vec![0.5, 0.25, 0.125, 0.0625],
            ensemble: 4,
            epsilon: 0.1,
            tolerance: 0.1,
        }
    }
}

impl MollifyParams {
    pub fn from_config(file: &ConfigFile) -> Result<Self, HarnessError> {
        let d = Self::default();
        Ok(Self {
            sim: simulation_config(file, d.sim)?,
            deltas: file.list_or("deltas", d.deltas)?,
            ensemble: file.get_or("ensemble", d.ensemble)?,
            epsilon: file.get_or("epsilon", d.epsilon)?,
            tolerance: file.get_or("tolerance", d.tolerance)?,
        })
    }
}

/// The reference config with every mollification scale set to `delta`.
pub fn mollified(config: &SimulationConfig, delta: f64) -> SimulationConfig {
    let mut c = config.clone();
    c.kernel_delta = delta;
    c.data_delta = delta;
    c.noise.delta = delta;
    c.mollifier = Mollifier::Gaussian;
    c
}

pub fn run(params: &MollifyParams) -> Result<ExperimentOutput, HarnessError> {
    let started = Instant::now();
    let deltas = &params.deltas;
    if deltas.is_empty() || deltas.iter().any(|d| !(*d > 0.0)) || deltas.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(HarnessError::Precondition(
            "deltas must be positive and strictly decreasing".into(),
        ));
    }
    if params.ensemble < 1 {
        return Err(HarnessError::Precondition("need at least one realization".into()));
    }
    if !(params.epsilon >= 0.0) {
        return Err(HarnessError::Precondition("epsilon must be nonnegative".into()));
    }
    let base = mollified(&params.sim, 0.0);
    base.validate()?;
    let steps = base.steps()?;
    let every = base.diagnostics_every as u64;
    let s = -params.epsilon;
    let mut report = ExperimentReport::new("mollify", params)?;

    // sups[r][k] = sup_t ‖θ^{δ_k}_t − θ_t‖_{H^{−ε}}
    let per_run = ensemble(params.ensemble, |r| {
        let reference = realization(&base, r);
        let mut sims = vec![Simulation::new(&reference)?];
        for &d in deltas {
            sims.push(Simulation::new(&mollified(&reference, d))?);
        }
        let mut sups = vec![0.0f64; deltas.len()];
        let mut curves = vec![Vec::new(); deltas.len()];
        let mut times = Vec::new();
        let mut size = 0.0f64;
        lockstep(&mut sims, steps, every, |sims| {
            times.push(sims[0].state().time);
            let theta = &sims[0].state().theta;
            size = size.max(inhomogeneous_sobolev_norm(theta, s));
            for (k, sim) in sims[1..].iter().enumerate() {
                let e = inhomogeneous_sobolev_norm(&sim.state().theta.sub(theta)?, s);
                sups[k] = sups[k].max(e);
                curves[k].push(e);
            }
            Ok(())
        })?;
        let correctors: Vec<f64> = sims.iter().map(|s| s.model().corrector()).collect();
        Ok((sups, curves, times, correctors, size))
    })?;
    report.steps = steps * (deltas.len() as u64 + 1) * params.ensemble as u64;

    let correctors = &per_run[0].3;
    let c0 = correctors[0];
    let mut rows = Vec::new();
    let mut errs = Vec::new();
    for (k, &d) in deltas.iter().enumerate() {
        let e = estimate(&per_run.iter().map(|p| p.0[k]).collect::<Vec<_>>());
        let c = correctors[k + 1];
        report.runs.push(json!({
            "delta": d,
            "error": e.mean,
            "error_bar": e.bar(),
            "corrector": c,
        }));
        rows.push(vec![d, e.mean, e.bar(), c, c0]);
        errs.push(e);
    }

    // monotone decrease: each step down may not exceed the combined 2σ bars
    let worst_increase = errs
        .windows(2)
        .map(|w| w[1].mean - w[0].mean - (w[0].bar() + w[1].bar()))
        .fold(f64::NEG_INFINITY, f64::max);
    if deltas.len() > 1 {
        report.verdict(Verdict::judge(
            "error_monotone",
            worst_increase,
            0.0,
            worst_increase <= 0.0,
            "PASS if e(δ_{k+1}) − e(δ_k) <= combined 2σ bars for every k",
        ));
    }
    let size = estimate(&per_run.iter().map(|p| p.4).collect::<Vec<_>>()).mean;
    let last = errs.last().expect("nonempty").mean / size;
    report.aggregate("reference_size", json!(size));
    report.verdict(Verdict::at_most("relative_error_at_smallest_delta", last, params.tolerance));

    // c_δ nondecreasing as δ decreases and bounded by c₀
    let cs = &correctors[1..];
    let corrector_ok = cs.windows(2).all(|w| w[1] >= w[0]) && cs.iter().all(|c| *c <= c0 * (1.0 + 1e-12));
    let gap = c0 - cs.last().copied().unwrap_or(c0);
    report.verdict(Verdict::judge(
        "corrector_increasing_to_c0",
        gap,
        0.0,
        corrector_ok,
        "PASS if c_δ is nondecreasing as δ decreases and c_δ <= c₀",
    ));
    report.aggregate("c0", json!(c0));
    report.aggregate(
        "errors",
        json!(errs.iter().map(|e| e.mean).collect::<Vec<_>>()),
    );
    report.finish(started);

    let mut out = ExperimentOutput::new(report);
    out.series.push(Series::new(
        "mollify",
        "delta,error,error_bar,c_delta,c0",
        rows,
    ));
    let times = &per_run[0].2;
    let mut header = String::from("time");
    for d in deltas {
        header.push_str(&format!(",delta_{d:e}"));
    }
    out.series.push(Series::new(
        "mollify_time",
        &header,
        (0..times.len()).map(|t| {
            let mut row = vec![times[t]];
            row.extend((0..deltas.len()).map(|k| {
                per_run.iter().map(|p| p.1[k][t]).sum::<f64>() / per_run.len() as f64
            }));
            row
        }),
    ));
    Ok(out)
}
