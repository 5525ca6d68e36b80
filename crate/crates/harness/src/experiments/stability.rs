//! Continuous dependence on the initial data or the forcing with shared
//! noise.

use std::time::Instant;

use gsqg_core::solver::{AnalyticField, ForcingSpec, Simulation, SimulationConfig};
use gsqg_core::spectral::sobolev_norm_fluctuation;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::viscosity::coupled_defaults;
use super::{ensemble, lockstep, realization, require_uniqueness};
use crate::keyvalue::{simulation_config, ConfigFile};
use crate::report::{ExperimentOutput, ExperimentReport, Series, Verdict};
use crate::stats::estimate;
use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// `θ²₀ = θ¹₀ + εη`.
    Initial,
    /// `f² = f¹ + εη`.
    Forcing,
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityParams {
    pub sim: SimulationConfig,
    pub epsilons: Vec<f64>,
    pub ensemble: usize,
    pub variant: Variant,
    pub perturbation: AnalyticField,
    /// Allowed relative spread `max/min − 1` of `g(ε)/ε`.
    pub ratio_tolerance: f64,
}

impl Default for StabilityParams {
    fn default() -> Self {
        Self {
            sim: coupled_defaults(64),
            epsilons: vec![1e-3, 1e-2, 1e-1],
            ensemble: 8,
            variant: Variant::Initial,
            perturbation: AnalyticField::RandomBand {
                band: 4,
                decay: 1.0,
                norm: 1.0,
                seed: 11,
            },
            ratio_tolerance: 0.5,
        }
    }
}

impl StabilityParams {
    pub fn from_config(file: &ConfigFile) -> Result<Self, HarnessError> {
        let d = Self::default();
        let variant = file
            .get_with("variant", |v| match v {
                "initial" => Ok(Variant::Initial),
                "forcing" => Ok(Variant::Forcing),
                _ => Err(format!("unknown variant `{v}` (expected initial or forcing)")),
            })?
            .unwrap_or(d.variant);
        Ok(Self {
            sim: simulation_config(file, d.sim)?,
            epsilons: file.list_or("epsilons", d.epsilons)?,
            ensemble: file.get_or("ensemble", d.ensemble)?,
            variant,
            perturbation: file
                .get_with("perturbation", |v| v.parse::<AnalyticField>())?
                .unwrap_or(d.perturbation),
            ratio_tolerance: file.get_or("ratio_tolerance", d.ratio_tolerance)?,
        })
    }
}

fn perturbed_forcing(base: &ForcingSpec, eps: f64, eta: &AnalyticField) -> Result<ForcingSpec, HarnessError> {
    let mut terms = match base {
        ForcingSpec::Zero => Vec::new(),
        ForcingSpec::Steady(f) => vec![(1.0, f.clone())],
        ForcingSpec::Superposed(t) => t.clone(),
        _ => {
            return Err(HarnessError::Precondition(
                "the forcing variant needs a zero, steady or superposed base forcing".into(),
            ))
        }
    };
    terms.push((eps, eta.clone()));
    Ok(ForcingSpec::Superposed(terms))
}

pub fn run(params: &StabilityParams) -> Result<ExperimentOutput, HarnessError> {
    let started = Instant::now();
    let base = &params.sim;
    require_uniqueness(base)?;
    if params.epsilons.is_empty() || params.epsilons.iter().any(|e| !(*e >= 0.0)) {
        return Err(HarnessError::Precondition("epsilons must be nonnegative".into()));
    }
    if params.ensemble < 1 {
        return Err(HarnessError::Precondition("need at least one realization".into()));
    }
    let steps = base.steps()?;
    let every = base.diagnostics_every as u64;
    let s = base.beta / 2.0 - 1.0;
    let grid = base.grid()?;
    let mut report = ExperimentReport::new("stability", params)?;

    // ‖η‖ after the same preparation as the initial data
    let eta = Simulation::with_fields(
        &SimulationConfig {
            passive: Vec::new(),
            ..base.clone()
        },
        params.perturbation.build(grid),
        Vec::new(),
    )?
    .state()
    .theta
    .clone();
    let eta_norm = sobolev_norm_fluctuation(&eta, s);
    if !(eta_norm > 0.0) {
        return Err(HarnessError::Precondition("perturbation has zero norm".into()));
    }

    // errors[r][k][t] = ‖θ^{ε_k}_t − θ_t‖²
    let per_run = ensemble(params.ensemble, |r| {
        let reference = realization(base, r);
        let first = Simulation::new(&reference)?;
        let theta0 = first.state().theta.clone();
        let mut sims = vec![first];
        for &eps in &params.epsilons {
            let sim = match params.variant {
                Variant::Initial => {
                    let mut t = theta0.clone();
                    t.axpy(eps, &eta)?;
                    Simulation::with_fields(&reference, t, Vec::new())?
                }
                Variant::Forcing => Simulation::new(&SimulationConfig {
                    forcing: perturbed_forcing(&reference.forcing, eps, &params.perturbation)?,
                    ..reference.clone()
                })?,
            };
            sims.push(sim);
        }
        let mut times = Vec::new();
        let mut errors = vec![Vec::new(); params.epsilons.len()];
        lockstep(&mut sims, steps, every, |sims| {
            times.push(sims[0].state().time);
            let theta = &sims[0].state().theta;
            for (k, sim) in sims[1..].iter().enumerate() {
                let d = sim.state().theta.sub(theta)?;
                errors[k].push(sobolev_norm_fluctuation(&d, s).powi(2));
            }
            Ok(())
        })?;
        Ok((times, errors))
    })?;
    report.steps = steps * (params.epsilons.len() as u64 + 1) * params.ensemble as u64;
    let times = per_run[0].0.clone();

    // reference size of the perturbation at time t
    let scale = |t: f64| match params.variant {
        Variant::Initial => eta_norm,
        Variant::Forcing => t * eta_norm,
    };
    let mut rows = Vec::new();
    let mut ratios = Vec::new();
    let mut curves = Vec::new();
    for (k, &eps) in params.epsilons.iter().enumerate() {
        let mean_t: Vec<f64> = (0..times.len())
            .map(|t| estimate(&per_run.iter().map(|(_, e)| e[k][t]).collect::<Vec<_>>()).mean)
            .collect();
        let g = mean_t.iter().fold(0.0f64, |m, v| m.max(*v)).sqrt();
        let ratio = if eps > 0.0 { g / (eps * scale(base.horizon)) } else { f64::NAN };
        let g_final = mean_t.last().copied().unwrap_or(0.0).sqrt();
        report.runs.push(json!({ "epsilon": eps, "g": g, "ratio": ratio, "g_final": g_final }));
        rows.push(vec![eps, g, ratio]);
        if eps > 0.0 {
            ratios.push(ratio);
        } else {
            report.verdict(Verdict::at_most("g_at_zero_epsilon", g, 0.0));
        }
        curves.push(mean_t);
    }
    if !ratios.is_empty() {
        let max = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let spread = max / min - 1.0;
        report.aggregate("ratio_spread", json!(spread));
        report.verdict(Verdict::at_most("ratio_spread", spread, params.ratio_tolerance));

        // growth rate fitted on the smallest positive ε
        let (k0, eps0) = params
            .epsilons
            .iter()
            .enumerate()
            .filter(|(_, e)| **e > 0.0)
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, e)| (k, *e))
            .expect("positive epsilon");
        let c_hat = times
            .iter()
            .zip(&curves[k0])
            .filter(|(t, _)| **t > 0.0)
            .map(|(t, e)| (e.sqrt() / (eps0 * scale(*t))).ln() / t)
            .fold(0.0, f64::max);
        report.aggregate("fitted_growth_rate", json!(c_hat));
        let worst = params
            .epsilons
            .iter()
            .zip(&rows)
            .filter(|(e, _)| **e > 0.0)
            .map(|(e, row)| row[1] / ((c_hat * base.horizon).exp() * e * scale(base.horizon)))
            .fold(0.0, f64::max);
        report.aggregate("bound_ratio", json!(worst));
        report.verdict(Verdict::at_most(
            "bound_exp_ct",
            worst,
            1.0 + params.ratio_tolerance,
        ));
    }
    report.aggregate("perturbation_norm", json!(eta_norm));
    report.finish(started);
    let mut out = ExperimentOutput::new(report);
    out.series.push(Series::new("stability", "epsilon,g,ratio", rows));
    let mut header = String::from("time");
    for e in &params.epsilons {
        header.push_str(&format!(",eps_{e:e}"));
    }
    out.series.push(Series::new(
        "stability_time",
        &header,
        (0..times.len()).map(|t| {
            let mut row = vec![times[t]];
            row.extend(curves.iter().map(|c| c[t].sqrt()));
            row
        }),
    ));
    Ok(out)
}
