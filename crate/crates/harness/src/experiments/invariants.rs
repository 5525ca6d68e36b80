//! Conservation of `∫θ`, `‖θ‖_{L²}` and `‖θ‖_{Ḣ^{β/2−1}}` by the
//! deterministic integrator under step halving.

use std::time::Instant;

use gsqg_core::solver::{
    diagnostics_csv, run_simulation, AnalyticField, InitialCondition, NoiseConfig, Scheme, SimulationConfig,
    SolverError,
};
use serde::Serialize;
use serde_json::json;

use crate::keyvalue::{simulation_config, ConfigFile};
use crate::report::{ExperimentOutput, ExperimentReport, Series, Status, Verdict};
use crate::HarnessError;

#[derive(Debug, Clone, Serialize)]
pub struct InvariantsParams {
    /// Coarsest run; `dt` is halved `levels − 1` times.
    pub sim: SimulationConfig,
    pub levels: usize,
    pub min_order: f64,
    /// Relative drift allowed at the finest step.
    pub max_drift: f64,
    /// Relative drifts below this are round-off and carry no order.
    pub floor: f64,
}

impl Default for InvariantsParams {
    fn default() -> Self {
        Self {
            sim: SimulationConfig {
                n: 256,
                beta: 0.5,
                dt: 4e-3,
                horizon: 1.0,
                scheme: Scheme::DeterministicRk4,
                noise: NoiseConfig {
                    enabled: false,
                    ..NoiseConfig::default()
                },
                initial: InitialCondition::Analytic(AnalyticField::TwoMode { amplitude: 5.0 }),
                diagnostics_every: 25,
                ..SimulationConfig::default()
            },
            levels: 3,
            min_order: 3.5,
            max_drift: 1e-6,
            floor: 1e-13,
        }
    }
}

impl InvariantsParams {
    pub fn from_config(file: &ConfigFile) -> Result<Self, HarnessError> {
        let d = Self::default();
        Ok(Self {
            sim: simulation_config(file, d.sim)?,
            levels: file.get_or("levels", d.levels)?,
            min_order: file.get_or("min_order", d.min_order)?,
            max_drift: file.get_or("max_drift", d.max_drift)?,
            floor: file.get_or("floor", d.floor)?,
        })
    }
}

/// Relative drifts of one run.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Drift {
    pub dt: f64,
    pub l2: f64,
    pub energy: f64,
    /// Absolute change of the mean.
    pub mean: f64,
}

/// Orders `log₂(d_k / d_{k+1})` over consecutive levels whose drifts are
/// both above `floor`.
pub fn pairwise_orders(drifts: &[f64], floor: f64) -> Vec<f64> {
    drifts
        .windows(2)
        .filter(|w| w[0] > floor && w[1] > floor)
        .map(|w| (w[0] / w[1]).log2())
        .collect()
}

pub fn run(params: &InvariantsParams) -> Result<ExperimentOutput, HarnessError> {
    let started = Instant::now();
    if params.sim.scheme != Scheme::DeterministicRk4 || params.sim.noise.enabled {
        return Err(HarnessError::Precondition(
            "the invariants experiment needs scheme = deterministic-rk4 and noise = off".into(),
        ));
    }
    if params.levels < 2 {
        return Err(HarnessError::Precondition("need at least two step sizes".into()));
    }
    let mut report = ExperimentReport::new("invariants", params)?;
    let mut out_series = Vec::new();
    let mut drifts = Vec::new();
    for k in 0..params.levels {
        let scale = 1u64 << k;
        let cfg = SimulationConfig {
            dt: params.sim.dt / scale as f64,
            diagnostics_every: params.sim.diagnostics_every * scale as usize,
            ..params.sim.clone()
        };
        let traj = match run_simulation(&cfg) {
            Ok(t) => t,
            Err(e) => {
                let cfl = match &e {
                    SolverError::AtTime { source, .. } => matches!(**source, SolverError::Cfl { .. }),
                    SolverError::Cfl { .. } => true,
                    _ => false,
                };
                if !cfl {
                    return Err(e.into());
                }
                report.note(format!("dt = {}: {e}", cfg.dt));
                report.verdict(Verdict::with_status(
                    "stability",
                    Status::Fail,
                    cfg.dt,
                    cfg.cfl_max,
                    "Courant number must stay below the hard CFL limit",
                ));
                report.finish(started);
                let mut out = ExperimentOutput::new(report);
                out.series = out_series;
                return Ok(out);
            }
        };
        report.steps += traj.steps;
        let first = traj.diagnostics[0];
        let rel = |f: fn(&gsqg_core::solver::DiagnosticRow) -> f64| {
            let base = f(&first);
            traj.diagnostics
                .iter()
                .map(|r| if base > 0.0 { (f(r) - base).abs() / base } else { (f(r) - base).abs() })
                .fold(0.0, f64::max)
        };
        let mean0 = {
            let cfg0 = gsqg_core::solver::Simulation::new(&cfg)?;
            cfg0.state().theta.mean()
        };
        let drift = Drift {
            dt: cfg.dt,
            l2: rel(|r| r.l2),
            energy: rel(|r| r.h_neg1bh),
            mean: (traj.final_state.theta.mean() - mean0).abs(),
        };
        report.runs.push(json!({
            "dt": cfg.dt,
            "steps": traj.steps,
            "max_courant": traj.max_courant,
            "drift_l2": drift.l2,
            "drift_energy": drift.energy,
            "drift_mean": drift.mean,
        }));
        out_series.push(Series {
            name: format!("invariants_dt{k}"),
            csv: diagnostics_csv(&traj.diagnostics),
        });
        drifts.push(drift);
    }
    out_series.push(Series::new(
        "invariants_drift",
        "dt,drift_l2,drift_energy,drift_mean",
        drifts.iter().map(|d| vec![d.dt, d.l2, d.energy, d.mean]),
    ));
    let finest = drifts[drifts.len() - 1];
    report.verdict(Verdict::at_most("drift_l2_finest", finest.l2, params.max_drift));
    report.verdict(Verdict::at_most("drift_energy_finest", finest.energy, params.max_drift));
    report.verdict(Verdict::at_most("drift_mean_finest", finest.mean, 1e-10));
    for (name, series) in [
        ("order_l2", drifts.iter().map(|d| d.l2).collect::<Vec<_>>()),
        ("order_energy", drifts.iter().map(|d| d.energy).collect()),
    ] {
        let orders = pairwise_orders(&series, params.floor);
        report.aggregate(name, json!(orders));
        match orders.iter().copied().reduce(f64::min) {
            Some(o) => report.verdict(Verdict::at_least(name, o, params.min_order)),
            None => report.verdict(Verdict::with_status(
                name,
                Status::Pass,
                f64::NAN,
                params.min_order,
                "drift at the round-off floor for every step size; order not measurable",
            )),
        }
    }
    report.aggregate("drifts", serde_json::to_value(&drifts)?);
    report.finish(started);
    let mut out = ExperimentOutput::new(report);
    out.series = out_series;
    Ok(out)
}
