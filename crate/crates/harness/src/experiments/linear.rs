//! Pathwise stability of linear transport by a drift recorded from a gSQG
//! run: `‖ζ¹_t − ζ²_t‖ ≤ ‖ζ¹₀ − ζ²₀‖ + ∫₀ᵗ ‖f¹_s − f²_s‖ ds` in `L¹ ∩ L²`,
//! with the slack measured under joint refinement of `dt` and `N`.

use std::time::Instant;

use gsqg_core::solver::{linear_transport_step, AnalyticField, RecordedDrift, Simulation, SimulationConfig};
use gsqg_core::spectral::{lebesgue_norm, sobolev_norm_fluctuation, Field};
use serde::Serialize;
use serde_json::json;

use super::pathwise::{slack_verdict, violation};
use super::viscosity::coupled_defaults;
use super::{ensemble, realization};
use crate::keyvalue::{simulation_config, ConfigFile};
use crate::report::{ExperimentOutput, ExperimentReport, Series, Verdict};
use crate::stats::{estimate, Estimate};
use crate::HarnessError;

/// Norm of `L¹ ∩ L²`, taken as the sum of the two norms.
pub fn l1_l2_norm(f: &Field) -> Result<f64, HarnessError> {
    Ok(lebesgue_norm(f, 1.0)? + lebesgue_norm(f, 2.0)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct LinearParams {
    /// gSQG run that supplies the drift, at the coarse level.
    pub sim: SimulationConfig,
    pub ensemble: usize,
    /// `ζ²₀ − ζ¹₀`.
    pub initial_difference: AnalyticField,
    /// `f² − f¹`, constant in time.
    pub forcing_difference: AnalyticField,
    pub min_reduction: f64,
    pub divergence_tolerance: f64,
}

impl Default for LinearParams {
    fn default() -> Self {
        Self {
            sim: SimulationConfig {
                beta: 0.5,
                dt: 1e-4,
                horizon: 0.05,
                ..coupled_defaults(64)
            },
            ensemble: 8,
            initial_difference: AnalyticField::RandomBand {
                band: 4,
                decay: 1.0,
                norm: 0.5,
                seed: 13,
            },
            forcing_difference: AnalyticField::RandomBand {
                band: 3,
                decay: 1.0,
                norm: 0.5,
                seed: 17,
            },
            min_reduction: 2.0,
            divergence_tolerance: 1e-10,
        }
    }
}

impl LinearParams {
    pub fn from_config(file: &ConfigFile) -> Result<Self, HarnessError> {
        let d = Self::default();
        let field = |key: &str, default: AnalyticField| -> Result<AnalyticField, HarnessError> {
            Ok(file.get_with(key, |v| v.parse::<AnalyticField>())?.unwrap_or(default))
        };
        Ok(Self {
            sim: simulation_config(file, d.sim)?,
            ensemble: file.get_or("ensemble", d.ensemble)?,
            initial_difference: field("initial_difference", d.initial_difference)?,
            forcing_difference: field("forcing_difference", d.forcing_difference)?,
            min_reduction: file.get_or("min_reduction", d.min_reduction)?,
            divergence_tolerance: file.get_or("divergence_tolerance", d.divergence_tolerance)?,
        })
    }
}

struct RunResult {
    slack: f64,
    divergence: f64,
    drift_regularity: f64,
    series: Vec<[f64; 3]>,
}

fn one_run(cfg: &SimulationConfig, params: &LinearParams) -> Result<RunResult, HarnessError> {
    let drift = RecordedDrift::record(cfg)?;
    let divergence = drift
        .velocities()
        .iter()
        .map(|b| b.divergence_defect())
        .fold(0.0, f64::max);
    let gamma = cfg.gamma();
    let drift_regularity = drift
        .velocities()
        .iter()
        .map(|b| sobolev_norm_fluctuation(&b.u1, gamma).hypot(sobolev_norm_fluctuation(&b.u2, gamma)))
        .fold(0.0, f64::max);
    if divergence > params.divergence_tolerance {
        return Ok(RunResult {
            slack: f64::NAN,
            divergence,
            drift_regularity,
            series: Vec::new(),
        });
    }

    let sim = Simulation::new(cfg)?;
    let grid = cfg.grid()?;
    let mut z1 = sim.state().theta.clone();
    let mut z2 = z1.add(&params.initial_difference.build(grid).dealiased())?;
    let df = params.forcing_difference.build(grid).dealiased();
    let df_norm = l1_l2_norm(&df)?;
    let d0 = l1_l2_norm(&z2.sub(&z1)?)?;
    let steps = cfg.steps()?;
    let every = cfg.diagnostics_every as u64;
    let mut slack = 0.0f64;
    let mut series = vec![[0.0, d0, d0]];
    for k in 0..steps {
        let t = k as f64 * cfg.dt;
        let b = &drift.velocities()[k as usize];
        let inc = sim.increment(k)?;
        let f1 = sim.forcing_at(t);
        let f2 = match &f1 {
            Some(f) => f.add(&df)?,
            None => df.clone(),
        };
        z1 = linear_transport_step(&z1, b, sim.model(), f1.as_ref(), inc.as_ref())?;
        z2 = linear_transport_step(&z2, b, sim.model(), Some(&f2), inc.as_ref())?;
        let now = (k + 1) as f64 * cfg.dt;
        let norm = l1_l2_norm(&z2.sub(&z1)?)?;
        let bound = d0 + now * df_norm;
        slack = slack.max(violation(norm, bound));
        if (k + 1) % every == 0 || k + 1 == steps {
            series.push([now, norm, bound]);
        }
    }
    Ok(RunResult {
        slack,
        divergence,
        drift_regularity,
        series,
    })
}

pub fn run(params: &LinearParams) -> Result<ExperimentOutput, HarnessError> {
    let started = Instant::now();
    if params.ensemble < 2 {
        return Err(HarnessError::Precondition("need at least 2 realizations".into()));
    }
    let coarse = params.sim.clone();
    coarse.validate()?;
    // both levels see the same Brownian path
    let fine = SimulationConfig {
        n: coarse.n * 2,
        dt: coarse.dt / 2.0,
        diagnostics_every: coarse.diagnostics_every * 2,
        ..params.sim.clone()
    };
    let coarse = SimulationConfig {
        brownian_substeps: fine.brownian_substeps * 2,
        ..coarse
    };
    let mut report = ExperimentReport::new("linear", params)?;
    let adm = coarse.admissibility();
    report.aggregate("gamma", json!(adm.gamma));
    report.aggregate("linear_regime", json!(adm.linear_transport));
    if !adm.linear_transport {
        report.note(format!(
            "alpha = {} is outside the linear-transport regime alpha < (gamma + 1)/2 - 1/p",
            coarse.noise.alpha
        ));
    }

    let levels = [coarse, fine];
    let mut slacks: Vec<Estimate> = Vec::new();
    let mut divergence = 0.0f64;
    let mut series = Vec::new();
    for (level, cfg) in levels.iter().enumerate() {
        let runs = ensemble(params.ensemble, |r| one_run(&realization(cfg, r), params))?;
        report.steps += 3 * cfg.steps()? * params.ensemble as u64;
        divergence = runs.iter().map(|r| r.divergence).fold(divergence, f64::max);
        let regularity = runs.iter().map(|r| r.drift_regularity).fold(0.0, f64::max);
        let est = estimate(&runs.iter().map(|r| r.slack).collect::<Vec<_>>());
        report.runs.push(json!({
            "n": cfg.n,
            "dt": cfg.dt,
            "slack": est.mean,
            "slack_bar": est.bar(),
            "drift_h_gamma": regularity,
        }));
        slacks.push(est);
        if let Some(first) = runs.first() {
            series.push(Series::new(
                format!("linear_level{level}"),
                "time,difference,bound",
                first.series.iter().map(|r| r.to_vec()),
            ));
        }
    }
    report.aggregate("drift_divergence", json!(divergence));
    report.verdict(Verdict::at_most(
        "drift_divergence",
        divergence,
        params.divergence_tolerance,
    ));
    if divergence <= params.divergence_tolerance {
        let (v, note) = slack_verdict("slack_reduction", &slacks[0], &slacks[1], params.min_reduction);
        report.verdict(v);
        if let Some(n) = note {
            report.note(n);
        }
    }
    report.finish(started);
    let mut out = ExperimentOutput::new(report);
    out.series.extend(series);
    Ok(out)
}
