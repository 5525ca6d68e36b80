//! Experiment drivers.

pub mod coercivity;
pub mod invariants;
pub mod linear;
pub mod mollify;
pub mod noise_check;
pub mod pathwise;
pub mod product;
pub mod simulate;
pub mod stability;
pub mod viscosity;

use gsqg_core::solver::{Simulation, SimulationConfig};
use rayon::prelude::*;

use crate::HarnessError;

/// Runs `f` for realizations `0..count` in parallel, keeping the order.
pub fn ensemble<T, F>(count: usize, f: F) -> Result<Vec<T>, HarnessError>
where
    T: Send,
    F: Fn(u64) -> Result<T, HarnessError> + Sync + Send,
{
    (0..count as u64).into_par_iter().map(f).collect()
}

/// Steps coupled simulations in lockstep, calling `observe` at step 0, every
/// `every` steps and at the last step. Returns the number of steps taken by
/// each simulation.
pub fn lockstep(
    sims: &mut [Simulation],
    steps: u64,
    every: u64,
    mut observe: impl FnMut(&[Simulation]) -> Result<(), HarnessError>,
) -> Result<u64, HarnessError> {
    for k in 0..=steps {
        if k % every == 0 || k == steps {
            observe(sims)?;
        }
        if k == steps {
            break;
        }
        for s in sims.iter_mut() {
            s.step()?;
        }
    }
    Ok(steps)
}

/// Config of realization `r`.
pub fn realization(config: &SimulationConfig, r: u64) -> SimulationConfig {
    SimulationConfig {
        realization: r,
        ..config.clone()
    }
}

/// Uniqueness-regime guard shared by the coupled experiments.
pub fn require_uniqueness(config: &SimulationConfig) -> Result<(), HarnessError> {
    let a = config.admissibility();
    if !a.uniqueness {
        return Err(HarnessError::Precondition(format!(
            "(alpha, beta, p) = ({}, {}, {}) is outside the uniqueness regime beta/2 < alpha < 1/2, beta/2 + alpha <= 1 - 1/p",
            config.noise.alpha, config.beta, config.p
        )));
    }
    Ok(())
}
