//! Pseudo-spectral laboratory for the generalised SQG equation driven by
//! incompressible Kraichnan transport noise.
//!
//! * [`spectral`]: torus grids, fields, Fourier multipliers and norms.
//! * [`mollifier`]: radial mollifier profiles and their Fourier transforms.
//! * [`noise`]: the Kraichnan spectrum, covariance, Itô corrector and
//!   Brownian increments.
//! * [`quadrature`]: adaptive Gauss–Kronrod rules.
//! * [`coercivity`]: the mollified coercivity functional and its fits.
//! * [`solver`]: configuration, time stepping, diagnostics and snapshots.

pub mod spectral;
pub mod mollifier;
pub mod noise;
pub mod quadrature;
pub mod coercivity;
pub mod solver;
