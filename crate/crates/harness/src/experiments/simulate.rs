//! Plain integration of one configuration with diagnostics output.

use std::time::Instant;

use gsqg_core::solver::{diagnostics_csv, run_simulation, SimulationConfig};
use serde::Serialize;
use serde_json::json;

use crate::keyvalue::{simulation_config, ConfigFile};
use crate::report::{ExperimentOutput, ExperimentReport, Series};
use crate::HarnessError;

#[derive(Debug, Clone, Serialize)]
pub struct SimulateParams {
    pub sim: SimulationConfig,
    /// Write snapshots of `θ`, every `snapshot_every` steps or, when that is
    /// 0, at every diagnostics time.
    pub snapshots: bool,
}

impl Default for SimulateParams {
    fn default() -> Self {
        Self {
            sim: SimulationConfig::default(),
            snapshots: false,
        }
    }
}

impl SimulateParams {
    pub fn from_config(file: &ConfigFile) -> Result<Self, HarnessError> {
        Ok(Self {
            sim: simulation_config(file, SimulationConfig::default())?,
            snapshots: false,
        })
    }
}

pub fn run(params: &SimulateParams) -> Result<ExperimentOutput, HarnessError> {
    let started = Instant::now();
    let mut cfg = params.sim.clone();
    cfg.snapshot_every = match (params.snapshots, cfg.snapshot_every) {
        (false, _) => 0,
        (true, 0) => cfg.diagnostics_every,
        (true, k) => k,
    };
    let mut report = ExperimentReport::new("simulate", params)?;
    let traj = run_simulation(&cfg)?;
    report.steps = traj.steps;
    report.aggregate("admissibility", serde_json::to_value(traj.admissibility)?);
    report.aggregate("corrector", json!(traj.corrector));
    report.aggregate("max_courant", json!(traj.max_courant));
    if let (Some(first), Some(last)) = (traj.diagnostics.first(), traj.diagnostics.last()) {
        report.aggregate("initial_l2", json!(first.l2));
        report.aggregate("final_l2", json!(last.l2));
    }
    if let Some(worst) = traj.decomposition.iter().map(|r| r.defect).reduce(f64::max) {
        report.aggregate("max_decomposition_defect", json!(worst));
    }
    report.finish(started);

    let mut out = ExperimentOutput::new(report);
    out.series.push(Series {
        name: "diagnostics".into(),
        csv: diagnostics_csv(&traj.diagnostics),
    });
    for (i, rows) in traj.passive_diagnostics.iter().enumerate() {
        out.series.push(Series {
            name: format!("passive_{i}"),
            csv: diagnostics_csv(rows),
        });
    }
    if !traj.decomposition.is_empty() {
        out.series.push(Series::new(
            "decomposition",
            "time,defect,high_Lp,low_Linf",
            traj.decomposition
                .iter()
                .map(|r| vec![r.time, r.defect, r.high_lp, r.low_linf]),
        ));
    }
    for (k, s) in traj.snapshots.iter().enumerate() {
        out.snapshots.push((format!("theta_{k:05}"), s.clone()));
    }
    Ok(out)
}
