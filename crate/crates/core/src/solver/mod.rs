//! Time integration of the stochastic gSQG equation in Itô form.
//!
//! One step of the stochastic schemes advances
//!
//! `dθ = [−∇·(uθ) + (c + ν)Δθ + f] dt − ΔW·∇θ`
//!
//! where `u = K_β^δ ∗ θ` and `c` is the Itô corrector of the configured
//! noise. The same update, with the same velocity and noise increment, is
//! applied to the pieces of a level-set decomposition and to passive scalars.

mod config;
mod run;
mod snapshot;

use std::borrow::Cow;

use rustfft::num_complex::Complex64;
use thiserror::Error;

pub use config::{
    admissibility, Admissibility, AnalyticField, ForcingSpec, InitialCondition, NoiseConfig, PassiveSpec, Scheme,
    SimulationConfig,
};
pub use run::{
    field_diagnostics, integrate_linear_transport, run_simulation, DecompositionRow, DriftProvider, RecordedDrift, Simulation,
    SimulationState, Trajectory,
};
pub use snapshot::{
    decode_snapshot, diagnostics_csv, encode_snapshot, parse_diagnostics_csv, read_snapshot, write_snapshot,
    DiagnosticRow, Snapshot, DIAGNOSTICS_HEADER, SNAPSHOT_MAGIC,
};

use crate::mollifier::Mollifier;
use crate::noise::{build_spectrum, ito_corrector, transport_term, NoiseError, NoiseIncrement, NoiseSpectrum};
use crate::spectral::{divergence_of, fields_from_physical_pair, fields_from_spectral_pair, Field, SpectralError, TorusGrid, VectorField};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error("CFL violation: Courant number {courant:.3} exceeds {limit} (max speed {speed:.4e})")]
    Cfl { courant: f64, limit: f64, speed: f64 },
    #[error("drift is not divergence free (relative defect {0:e})")]
    NotDivergenceFree(f64),
    #[error("solution became non-finite")]
    NonFinite,
    #[error("malformed file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("at t = {time}: {source}")]
    AtTime {
        time: f64,
        #[source]
        source: Box<SolverError>,
    },
}

/// Relative divergence defect accepted for prescribed drifts.
pub const DRIFT_DIVERGENCE_TOLERANCE: f64 = 1e-10;

/// Velocity `K_β^δ ∗ θ`, the Biot–Savart multiplier damped by `ρ̂(δ|n|)`.
pub fn mollified_velocity(theta: &Field, beta: f64, delta: f64, mollifier: Mollifier) -> Result<VectorField, SolverError> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(SpectralError::InvalidBeta(beta).into());
    }
    theta.ensure_finite()?;
    let weights = kernel_weights(theta.grid(), beta, delta, mollifier);
    Ok(velocity_from_weights(theta, &weights))
}

/// `∇·[(K_β^δ ∗ θ) θ]` with the Gaussian mollifier, dealiased.
pub fn gsqg_nonlinearity(theta: &Field, beta: f64, delta: f64) -> Result<Field, SolverError> {
    let u = mollified_velocity(theta, beta, delta, Mollifier::Gaussian)?;
    transport_divergence(&u, theta)
}

/// Dealiased `∇·(u φ)` from one physical product.
pub fn transport_divergence(u: &VectorField, phi: &Field) -> Result<Field, SolverError> {
    if !u.grid().same_as(phi.grid()) {
        return Err(SpectralError::GridMismatch.into());
    }
    let grid = *phi.grid();
    let (u1, u2) = u.physical_pair();
    let p = phi.physical();
    let a: Vec<f64> = u1.iter().zip(p).map(|(x, y)| x * y).collect();
    let b: Vec<f64> = u2.iter().zip(p).map(|(x, y)| x * y).collect();
    let (fa, fb) = fields_from_physical_pair(grid, a, b);
    Ok(divergence_of(&fa, &fb).dealiased())
}

/// `(low, high)` with `high = φ 1_{|φ| > R}` and `low = φ − high`.
pub fn levelset_split(phi: &Field, level: f64) -> (Field, Field) {
    let grid = *phi.grid();
    let mut low = Vec::with_capacity(grid.len());
    let mut high = Vec::with_capacity(grid.len());
    for &v in phi.physical() {
        if v.abs() > level {
            low.push(0.0);
            high.push(v);
        } else {
            low.push(v);
            high.push(0.0);
        }
    }
    let (l, h) = fields_from_physical_pair(grid, low, high);
    (l, h)
}

fn kernel_weights(grid: &TorusGrid, beta: f64, delta: f64, mollifier: Mollifier) -> Vec<f64> {
    (0..grid.len())
        .map(|idx| {
            if idx == 0 || grid.is_nyquist_index(idx) {
                return 0.0;
            }
            let (n1, n2) = grid.wavevector(idx);
            let r = (n1 * n1 + n2 * n2).sqrt();
            r.powf(beta - 2.0) * mollifier.transform(delta, r)
        })
        .collect()
}

/// `u = -∇⊥ (w θ)` for a precomputed radial multiplier `w`.
fn velocity_from_weights(theta: &Field, weights: &[f64]) -> VectorField {
    let grid = *theta.grid();
    let i = Complex64::new(0.0, 1.0);
    let mut a = vec![Complex64::new(0.0, 0.0); grid.len()];
    let mut b = vec![Complex64::new(0.0, 0.0); grid.len()];
    for (idx, (c, w)) in theta.spectral().iter().zip(weights).enumerate() {
        if *w == 0.0 {
            continue;
        }
        let (n1, n2) = grid.wavevector(idx);
        let t = c * w;
        a[idx] = i * n2 * t;
        b[idx] = -i * n1 * t;
    }
    let (u1, u2) = fields_from_spectral_pair(grid, a, b);
    VectorField::new_divergence_free(u1, u2)
}

/// Operators of one configuration, precomputed once.
#[derive(Debug, Clone)]
pub struct Model {
    grid: TorusGrid,
    beta: f64,
    dt: f64,
    scheme: Scheme,
    viscosity: f64,
    nonlinear: bool,
    corrector: f64,
    spectrum: NoiseSpectrum,
    noise_enabled: bool,
    kernel: Vec<f64>,
    /// `-|n|²`.
    laplacian: Vec<f64>,
    /// `exp(−(c + ν)|n|² dt)`.
    factor: Vec<f64>,
    cfl_warn: f64,
    cfl_max: f64,
}

impl Model {
    pub fn new(config: &SimulationConfig) -> Result<Self, SolverError> {
        config.validate()?;
        let grid = config.grid()?;
        let nc = &config.noise;
        let spectrum = if nc.enabled {
            build_spectrum(grid, nc.alpha, nc.cutoff, nc.delta, config.mollifier)?
        } else {
            NoiseSpectrum::empty(grid, nc.alpha)
        };
        let corrector = if nc.enabled { ito_corrector(&spectrum) } else { 0.0 };
        let laplacian: Vec<f64> = (0..grid.len())
            .map(|idx| {
                let (n1, n2) = grid.wavevector(idx);
                -(n1 * n1 + n2 * n2)
            })
            .collect();
        let diffusion = corrector + config.viscosity;
        let factor = laplacian.iter().map(|l| (diffusion * l * config.dt).exp()).collect();
        Ok(Self {
            grid,
            beta: config.beta,
            dt: config.dt,
            scheme: config.scheme,
            viscosity: config.viscosity,
            nonlinear: config.nonlinear,
            corrector,
            noise_enabled: nc.enabled,
            kernel: kernel_weights(&grid, config.beta, config.kernel_delta, config.mollifier),
            spectrum,
            laplacian,
            factor,
            cfl_warn: config.cfl_warn,
            cfl_max: config.cfl_max,
        })
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    /// Itô corrector `c` of the noise, 0 when it is disabled.
    pub fn corrector(&self) -> f64 {
        self.corrector
    }

    pub fn spectrum(&self) -> &NoiseSpectrum {
        &self.spectrum
    }

    pub fn noise_enabled(&self) -> bool {
        self.noise_enabled
    }

    /// Velocity of `θ`, zero when the nonlinearity is disabled.
    pub fn velocity(&self, theta: &Field) -> VectorField {
        if self.nonlinear {
            velocity_from_weights(theta, &self.kernel)
        } else {
            VectorField::zeros(self.grid)
        }
    }

    /// Courant number `dt ‖u‖_∞ N / L`, logged above the advisory limit
    /// and rejected above the hard one.
    pub fn check_cfl(&self, u: &VectorField) -> Result<f64, SolverError> {
        let speed = u.max_speed();
        let courant = self.dt * speed * self.grid.n() as f64 / self.grid.length();
        if !courant.is_finite() {
            return Err(SolverError::NonFinite);
        }
        if courant > self.cfl_max {
            return Err(SolverError::Cfl {
                courant,
                limit: self.cfl_max,
                speed,
            });
        }
        if courant > self.cfl_warn {
            log::warn!("Courant number {courant:.3} above advisory limit {}", self.cfl_warn);
        }
        Ok(courant)
    }

    fn apply_multiplier(field: &mut Field, m: &[f64]) {
        for (c, w) in field.spectral_mut().iter_mut().zip(m) {
            *c *= *w;
        }
    }

    /// One Itô step of `dφ = [−∇·(uφ) + (c+ν)Δφ + f] dt − ΔW·∇φ`.
    pub fn advance(
        &self,
        phi: &Field,
        u: &VectorField,
        forcing: Option<&Field>,
        increment: Option<&NoiseIncrement>,
    ) -> Result<Field, SolverError> {
        let dt = self.dt;
        let mut next = phi.clone();
        if self.nonlinear {
            next.axpy(-dt, &transport_divergence(u, phi)?)?;
        }
        if let Some(f) = forcing {
            next.axpy(dt, f)?;
        }
        if let (true, Some(inc)) = (self.noise_enabled, increment) {
            next.axpy(-1.0, &transport_term(phi, &self.spectrum, inc)?)?;
        }
        match self.scheme {
            Scheme::ItoEuler => {
                let d = (self.corrector + self.viscosity) * dt;
                let mut lap = phi.clone();
                Self::apply_multiplier(&mut lap, &self.laplacian);
                next.axpy(d, &lap)?;
            }
            Scheme::ItoIntegratingFactor => Self::apply_multiplier(&mut next, &self.factor),
            Scheme::DeterministicRk4 => {
                return Err(SolverError::Config("advance called with the deterministic scheme".into()))
            }
        }
        Ok(next)
    }

    /// `−∇·(uφ) + νΔφ + f`, the deterministic right-hand side.
    fn rhs(&self, phi: &Field, u: &VectorField, forcing: Option<&Field>) -> Result<Field, SolverError> {
        let mut out = if self.nonlinear {
            transport_divergence(u, phi)?.scaled(-1.0)
        } else {
            Field::zeros(self.grid)
        };
        if self.viscosity > 0.0 {
            let mut lap = phi.clone();
            Self::apply_multiplier(&mut lap, &self.laplacian);
            out.axpy(self.viscosity, &lap)?;
        }
        if let Some(f) = forcing {
            out.axpy(1.0, f)?;
        }
        Ok(out)
    }

    /// Classical RK4 step of a system whose first component drives the
    /// velocity of all of them. `forcing(t)` returns one optional forcing per
    /// component. Returns the Courant number of the first stage.
    pub fn rk4<'a, F>(&self, components: &[Field], t: f64, forcing: F) -> Result<(Vec<Field>, f64), SolverError>
    where
        F: Fn(f64) -> Result<Vec<Option<Cow<'a, Field>>>, SolverError>,
    {
        let dt = self.dt;
        let eval = |state: &[Field], time: f64, check: bool| -> Result<(Vec<Field>, f64), SolverError> {
            let u = self.velocity(&state[0]);
            let courant = if check { self.check_cfl(&u)? } else { 0.0 };
            let f = forcing(time)?;
            let k = state
                .iter()
                .zip(f.iter())
                .map(|(phi, fi)| self.rhs(phi, &u, fi.as_deref()))
                .collect::<Result<Vec<_>, _>>()?;
            Ok((k, courant))
        };
        let shifted = |k: &[Field], h: f64| -> Result<Vec<Field>, SolverError> {
            components
                .iter()
                .zip(k)
                .map(|(c, ki)| {
                    let mut s = c.clone();
                    s.axpy(h, ki)?;
                    Ok(s)
                })
                .collect()
        };
        let (k1, courant) = eval(components, t, true)?;
        let (k2, _) = eval(&shifted(&k1, 0.5 * dt)?, t + 0.5 * dt, false)?;
        let (k3, _) = eval(&shifted(&k2, 0.5 * dt)?, t + 0.5 * dt, false)?;
        let (k4, _) = eval(&shifted(&k3, dt)?, t + dt, false)?;
        let mut out = components.to_vec();
        for (i, o) in out.iter_mut().enumerate() {
            o.axpy(dt / 6.0, &k1[i])?;
            o.axpy(dt / 3.0, &k2[i])?;
            o.axpy(dt / 3.0, &k3[i])?;
            o.axpy(dt / 6.0, &k4[i])?;
        }
        Ok((out, courant))
    }
}

/// One Itô step of a passive scalar transported by a prescribed drift `b`,
/// `dζ = [−∇·(bζ) + (c+ν)Δζ + f] dt − ΔW·∇ζ`.
pub fn linear_transport_step(
    zeta: &Field,
    drift: &VectorField,
    model: &Model,
    forcing: Option<&Field>,
    increment: Option<&NoiseIncrement>,
) -> Result<Field, SolverError> {
    let defect = drift.divergence_defect();
    if defect > DRIFT_DIVERGENCE_TOLERANCE {
        return Err(SolverError::NotDivergenceFree(defect));
    }
    model.check_cfl(drift)?;
    let dt = model.dt;
    let mut next = zeta.clone();
    next.axpy(-dt, &transport_divergence(drift, zeta)?)?;
    if let Some(f) = forcing {
        next.axpy(dt, f)?;
    }
    if let (true, Some(inc)) = (model.noise_enabled, increment) {
        next.axpy(-1.0, &transport_term(zeta, &model.spectrum, inc)?)?;
    }
    match model.scheme {
        Scheme::ItoEuler => {
            let mut lap = zeta.clone();
            Model::apply_multiplier(&mut lap, &model.laplacian);
            next.axpy((model.corrector + model.viscosity) * dt, &lap)?;
        }
        Scheme::ItoIntegratingFactor => Model::apply_multiplier(&mut next, &model.factor),
        Scheme::DeterministicRk4 => {
            return Err(SolverError::Config("linear transport uses the Itô schemes".into()))
        }
    }
    Ok(next)
}
