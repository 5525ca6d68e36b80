//! Command line: one subcommand per experiment.
//!
//! Exit status 0 for PASS or COMPLETE, 1 for FAIL or INCONCLUSIVE and 2 for
//! usage, configuration and precondition errors.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::experiments::coercivity::CoercivityParams;
use crate::experiments::invariants::InvariantsParams;
use crate::experiments::linear::LinearParams;
use crate::experiments::mollify::MollifyParams;
use crate::experiments::noise_check::NoiseCheckParams;
use crate::experiments::product::ProductParams;
use crate::experiments::simulate::SimulateParams;
use crate::experiments::stability::StabilityParams;
use crate::experiments::viscosity::ViscosityParams;
use crate::experiments;
use crate::keyvalue::ConfigFile;
use crate::report::{ExperimentOutput, Status};
use crate::HarnessError;

#[derive(Debug, Parser)]
#[command(name = "gsqg", version, about = "Pseudo-spectral gSQG laboratory with Kraichnan transport noise")]
#[command(arg_required_else_help = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct Common {
    /// Config file of `key = value` lines; defaults apply when omitted.
    pub config: Option<PathBuf>,
    /// Overrides the seed of the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory, `out/<command>` by default.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write binary snapshots of the solution.
    #[arg(long)]
    pub snapshots: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate one configuration and write its diagnostics.
    Simulate(Common),
    /// Conservation laws of the deterministic integrator under step halving.
    Invariants(Common),
    /// Rate of the vanishing-viscosity limit.
    Viscosity(Common),
    /// Continuous dependence on the data with shared noise.
    Stability(Common),
    /// Convergence of the mollified model.
    Mollify(Common),
    /// Pathwise stability of linear transport by a recorded drift.
    Linear(Common),
    /// Monte Carlo check of the noise covariance.
    NoiseCheck(Common),
    /// Coercivity profile and fitted bound.
    Coercivity(Common),
    /// Empirical constant of the product estimate.
    ProductCheck(Common),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Invariants(_) => "invariants",
            Command::Viscosity(_) => "viscosity",
            Command::Stability(_) => "stability",
            Command::Mollify(_) => "mollify",
            Command::Linear(_) => "linear",
            Command::NoiseCheck(_) => "noise-check",
            Command::Coercivity(_) => "coercivity",
            Command::ProductCheck(_) => "product-check",
        }
    }

    pub fn common(&self) -> &Common {
        match self {
            Command::Simulate(c)
            | Command::Invariants(c)
            | Command::Viscosity(c)
            | Command::Stability(c)
            | Command::Mollify(c)
            | Command::Linear(c)
            | Command::NoiseCheck(c)
            | Command::Coercivity(c)
            | Command::ProductCheck(c) => c,
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<ConfigFile, HarnessError> {
    match path {
        None => Ok(ConfigFile::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| {
                HarnessError::Precondition(format!("cannot read config {}: {e}", p.display()))
            })?;
            Ok(ConfigFile::parse(&text)?)
        }
    }
}

/// Runs a parsed command and returns its output without writing it.
pub fn execute(command: &Command) -> Result<ExperimentOutput, HarnessError> {
    let common = command.common();
    let file = load_config(common.config.as_deref())?;
    let seed = common.seed;
    let output = match command {
        Command::Simulate(_) => {
            let mut p = SimulateParams::from_config(&file)?;
            file.finish()?;
            p.snapshots = common.snapshots;
            if let Some(s) = seed {
                p.sim.seed = s;
            }
            experiments::simulate::run(&p)?
        }
        Command::Invariants(_) => {
            let mut p = InvariantsParams::from_config(&file)?;
            file.finish()?;
            if let Some(s) = seed {
                p.sim.seed = s;
            }
            experiments::invariants::run(&p)?
        }
        Command::Viscosity(_) => {
            let mut p = ViscosityParams::from_config(&file)?;
            file.finish()?;
            if let Some(s) = seed {
                p.sim.seed = s;
            }
            experiments::viscosity::run(&p)?
        }
        Command::Stability(_) => {
            let mut p = StabilityParams::from_config(&file)?;
            file.finish()?;
            if let Some(s) = seed {
                p.sim.seed = s;
            }
            experiments::stability::run(&p)?
        }
        Command::Mollify(_) => {
            let mut p = MollifyParams::from_config(&file)?;
            file.finish()?;
            if let Some(s) = seed {
                p.sim.seed = s;
            }
            experiments::mollify::run(&p)?
        }
        Command::Linear(_) => {
            let mut p = LinearParams::from_config(&file)?;
            file.finish()?;
            if let Some(s) = seed {
                p.sim.seed = s;
            }
            experiments::linear::run(&p)?
        }
        Command::NoiseCheck(_) => {
            let mut p = NoiseCheckParams::from_config(&file)?;
            file.finish()?;
            if let Some(s) = seed {
                p.seed = s;
            }
            experiments::noise_check::run(&p)?
        }
        Command::Coercivity(_) => {
            let p = CoercivityParams::from_config(&file)?;
            file.finish()?;
            // deterministic quadrature: the seed has nothing to key
            experiments::coercivity::run(&p)?
        }
        Command::ProductCheck(_) => {
            let mut p = ProductParams::from_config(&file)?;
            file.finish()?;
            if let Some(s) = seed {
                p.seed = s;
            }
            experiments::product::run(&p)?
        }
    };
    Ok(output)
}

/// Exit status of a finished report.
pub fn exit_code(status: Status) -> i32 {
    match status {
        Status::Pass | Status::Complete => 0,
        Status::Fail | Status::Inconclusive => 1,
    }
}

/// Parses `args` (program name first), runs the command, writes the output
/// directory and returns the exit status.
pub fn main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return if e.kind() == clap::error::ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                2
            } else {
                code
            };
        }
    };
    let name = cli.command.name();
    let out_dir = cli
        .command
        .common()
        .out
        .clone()
        .unwrap_or_else(|| Path::new("out").join(name));
    let result = execute(&cli.command).and_then(|out| {
        out.write(&out_dir)?;
        Ok(out)
    });
    match result {
        Ok(out) => {
            let r = &out.report;
            let mut stdout = std::io::stdout().lock();
            for v in &r.verdicts {
                let _ = writeln!(
                    stdout,
                    "{:<13} {} = {:e} (tolerance {:e}; {})",
                    format!("{:?}", v.status).to_uppercase(),
                    v.name,
                    v.value,
                    v.tolerance,
                    v.rule
                );
            }
            for n in &r.notes {
                let _ = writeln!(stdout, "note: {n}");
            }
            let _ = writeln!(
                stdout,
                "{name}: {} in {:.1}s, output in {}",
                format!("{:?}", r.status).to_uppercase(),
                r.wall_clock_seconds,
                out_dir.display()
            );
            exit_code(r.status)
        }
        Err(e) => {
            eprintln!("{name}: {e}");
            if e.is_usage() {
                2
            } else {
                1
            }
        }
    }
}
