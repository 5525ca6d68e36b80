//! Simulation configuration and the named fields it refers to.

use std::path::PathBuf;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::snapshot::read_snapshot;
use super::SolverError;
use crate::mollifier::Mollifier;
use crate::spectral::{lebesgue_norm, random_band_limited, Field, TorusGrid};

/// Time integration scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    ItoEuler,
    #[default]
    ItoIntegratingFactor,
    DeterministicRk4,
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ito-euler" => Ok(Scheme::ItoEuler),
            "ito-integrating-factor" => Ok(Scheme::ItoIntegratingFactor),
            "deterministic-rk4" => Ok(Scheme::DeterministicRk4),
            _ => Err(format!(
                "unknown scheme `{s}` (expected ito-euler, ito-integrating-factor or deterministic-rk4)"
            )),
        }
    }
}

/// Transport noise parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub enabled: bool,
    pub alpha: f64,
    /// Largest retained integer wavenumber modulus.
    pub cutoff: f64,
    /// Mollification scale of the noise modes.
    pub delta: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            alpha: 0.4,
            cutoff: 8.0,
            delta: 0.0,
        }
    }
}

/// Analytic fields usable as initial data or forcing profiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AnalyticField {
    Zero,
    /// `a cos(k·x + φ)`.
    Mode { k1: i64, k2: i64, amplitude: f64, phase: f64 },
    /// `a [cos(x₁) + ½ cos(2x₂ + 1)]` on the `2π` torus, rescaled otherwise.
    TwoMode { amplitude: f64 },
    /// Gaussian random field on the band `1 ≤ |k|_∞ ≤ band` with spectral
    /// decay `|k|^-decay`, scaled to the given `L²` norm.
    RandomBand { band: i64, decay: f64, norm: f64, seed: u64 },
}

impl AnalyticField {
    pub fn build(&self, grid: TorusGrid) -> Field {
        let k0 = grid.base_wavenumber();
        match *self {
            AnalyticField::Zero => Field::zeros(grid),
            AnalyticField::Mode {
                k1,
                k2,
                amplitude,
                phase,
            } => Field::from_fn(grid, |x, y| {
                amplitude * (k0 * (k1 as f64 * x + k2 as f64 * y) + phase).cos()
            }),
            AnalyticField::TwoMode { amplitude } => Field::from_fn(grid, |x, y| {
                amplitude * ((k0 * x).cos() + 0.5 * (2.0 * k0 * y + 1.0).cos())
            }),
            AnalyticField::RandomBand {
                band,
                decay,
                norm,
                seed,
            } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let f = random_band_limited(grid, band, decay, &mut rng);
                let l2 = lebesgue_norm(&f, 2.0).unwrap_or(0.0);
                if l2 > 0.0 {
                    f.scaled(norm / l2)
                } else {
                    f
                }
            }
        }
    }
}

fn parse_numbers<T: FromStr>(words: &[&str], what: &str) -> Result<Vec<T>, String> {
    words
        .iter()
        .map(|w| w.parse::<T>().map_err(|_| format!("invalid number `{w}` in {what}")))
        .collect()
}

impl FromStr for AnalyticField {
    type Err = String;

    /// `zero`, `mode k1 k2 amplitude [phase]`, `two-mode amplitude` or
    /// `random band decay norm seed`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let words: Vec<&str> = s.split_whitespace().collect();
        match words.as_slice() {
            ["zero"] => Ok(AnalyticField::Zero),
            ["mode", k1, k2, amp, rest @ ..] if rest.len() <= 1 => {
                let k: Vec<i64> = parse_numbers(&[k1, k2], "mode")?;
                let a: Vec<f64> = parse_numbers(&[amp], "mode")?;
                let phase = parse_numbers::<f64>(rest, "mode")?.first().copied().unwrap_or(0.0);
                Ok(AnalyticField::Mode {
                    k1: k[0],
                    k2: k[1],
                    amplitude: a[0],
                    phase,
                })
            }
            ["two-mode", amp] => Ok(AnalyticField::TwoMode {
                amplitude: parse_numbers::<f64>(&[amp], "two-mode")?[0],
            }),
            ["random", band, decay, norm, seed] => Ok(AnalyticField::RandomBand {
                band: parse_numbers::<i64>(&[band], "random")?[0],
                decay: parse_numbers::<f64>(&[decay], "random")?[0],
                norm: parse_numbers::<f64>(&[norm], "random")?[0],
                seed: parse_numbers::<u64>(&[seed], "random")?[0],
            }),
            _ => Err(format!(
                "cannot parse field `{s}` (expected zero, mode k1 k2 a [phase], two-mode a, or random band decay norm seed)"
            )),
        }
    }
}

/// Initial condition: a named field or a snapshot file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialCondition {
    Analytic(AnalyticField),
    Snapshot(PathBuf),
}

impl Default for InitialCondition {
    fn default() -> Self {
        InitialCondition::Analytic(AnalyticField::TwoMode { amplitude: 1.0 })
    }
}

impl InitialCondition {
    pub fn build(&self, grid: TorusGrid) -> Result<Field, SolverError> {
        match self {
            InitialCondition::Analytic(a) => Ok(a.build(grid)),
            InitialCondition::Snapshot(path) => {
                let snap = read_snapshot(path)?;
                if snap.field.grid().n() != grid.n() {
                    return Err(SolverError::Config(format!(
                        "snapshot {} has resolution {}, configured {}",
                        path.display(),
                        snap.field.grid().n(),
                        grid.n()
                    )));
                }
                Ok(Field::from_physical(grid, snap.field.physical().to_vec())?)
            }
        }
    }
}

impl FromStr for InitialCondition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().strip_prefix("snapshot ") {
            Some(path) => Ok(InitialCondition::Snapshot(PathBuf::from(path.trim()))),
            None => s.parse().map(InitialCondition::Analytic),
        }
    }
}

/// Forcing `f(t, x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ForcingSpec {
    #[default]
    Zero,
    /// Time-independent profile.
    Steady(AnalyticField),
    /// `cos(ωt) g(x)`.
    Pulsating { field: AnalyticField, frequency: f64 },
    /// Piecewise constant in time: snapshot `i` applies from its time on.
    Snapshots(Vec<(f64, PathBuf)>),
    /// Time-independent weighted sum of profiles.
    Superposed(Vec<(f64, AnalyticField)>),
}

impl FromStr for ForcingSpec {
    type Err = String;

    /// `zero`, `steady FIELD`, `pulsating OMEGA FIELD`,
    /// `snapshots t0 path0 t1 path1 ...` or `sum w0 FIELD0; w1 FIELD1 ...`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "zero" {
            return Ok(ForcingSpec::Zero);
        }
        if let Some(rest) = s.strip_prefix("steady ") {
            return rest.parse().map(ForcingSpec::Steady);
        }
        if let Some(rest) = s.strip_prefix("pulsating ") {
            let rest = rest.trim_start();
            let (omega, field) = rest.split_once(char::is_whitespace).ok_or("pulsating needs a frequency and a field")?;
            let frequency = omega
                .parse::<f64>()
                .map_err(|_| format!("invalid frequency `{omega}`"))?;
            return Ok(ForcingSpec::Pulsating {
                field: field.parse()?,
                frequency,
            });
        }
        if let Some(rest) = s.strip_prefix("snapshots ") {
            let words: Vec<&str> = rest.split_whitespace().collect();
            if words.is_empty() || words.len() % 2 != 0 {
                return Err("snapshots needs pairs of time and path".into());
            }
            let mut list = Vec::new();
            for pair in words.chunks(2) {
                let t = pair[0]
                    .parse::<f64>()
                    .map_err(|_| format!("invalid snapshot time `{}`", pair[0]))?;
                list.push((t, PathBuf::from(pair[1])));
            }
            return Ok(ForcingSpec::Snapshots(list));
        }
        if let Some(rest) = s.strip_prefix("sum ") {
            let mut terms = Vec::new();
            for term in rest.split(';') {
                let term = term.trim();
                let (w, field) = term.split_once(char::is_whitespace).ok_or("sum terms need a weight and a field")?;
                let w = w.parse::<f64>().map_err(|_| format!("invalid weight `{w}`"))?;
                terms.push((w, field.parse()?));
            }
            return Ok(ForcingSpec::Superposed(terms));
        }
        Err(format!(
            "cannot parse forcing `{s}` (expected zero, steady FIELD, pulsating OMEGA FIELD, snapshots ... or sum ...)"
        ))
    }
}

/// A passive scalar advected by the velocity of the running gSQG solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassiveSpec {
    pub initial: InitialCondition,
    pub forcing: ForcingSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    /// Grid resolution per side.
    pub n: usize,
    /// Side length of the torus.
    pub length: f64,
    pub beta: f64,
    pub noise: NoiseConfig,
    /// Viscosity `ν ≥ 0`.
    pub viscosity: f64,
    /// Mollification of the velocity kernel.
    pub kernel_delta: f64,
    /// Mollification applied to the initial condition and the forcing.
    pub data_delta: f64,
    pub mollifier: Mollifier,
    /// Whether the gSQG nonlinearity is active.
    pub nonlinear: bool,
    pub dt: f64,
    pub horizon: f64,
    pub scheme: Scheme,
    pub seed: u64,
    /// Realization id; the noise stream is keyed by `(seed, realization)`.
    pub realization: u64,
    pub initial: InitialCondition,
    pub forcing: ForcingSpec,
    /// Level `R` of the co-evolved decomposition, 0 to disable.
    pub decomposition_level: f64,
    pub passive: Vec<PassiveSpec>,
    /// Record diagnostics every this many steps.
    pub diagnostics_every: usize,
    /// Record snapshots every this many steps, 0 to disable.
    pub snapshot_every: usize,
    /// Integrability exponent `p` of the diagnostics and regime flags.
    pub p: f64,
    /// Drift regularity `γ`, defaulting to `1 − β`.
    pub gamma: Option<f64>,
    /// Courant number above which a warning is logged.
    pub cfl_warn: f64,
    /// Courant number above which a step fails.
    pub cfl_max: f64,
    /// Each step's Brownian increment is the sum of this many increments
    /// over sub-intervals of length `dt / brownian_substeps`. A run with
    /// `k` substeps then sees the same Brownian path as a run with step
    /// `dt / k` and one substep.
    pub brownian_substeps: u32,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            n: 64,
            length: 2.0 * std::f64::consts::PI,
            beta: 0.5,
            noise: NoiseConfig::default(),
            viscosity: 0.0,
            kernel_delta: 0.0,
            data_delta: 0.0,
            mollifier: Mollifier::Gaussian,
            nonlinear: true,
            dt: 1e-3,
            horizon: 0.1,
            scheme: Scheme::ItoIntegratingFactor,
            seed: 0,
            realization: 0,
            initial: InitialCondition::default(),
            forcing: ForcingSpec::Zero,
            decomposition_level: 0.0,
            passive: Vec::new(),
            diagnostics_every: 10,
            snapshot_every: 0,
            p: 4.0,
            gamma: None,
            cfl_warn: 1.0,
            cfl_max: 2.0,
            brownian_substeps: 1,
        }
    }
}

/// Parameter regimes of the configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Admissibility {
    /// `β/2 < α < 1/2` and `β/2 + α ≤ 1 − 1/p`.
    pub uniqueness: bool,
    /// `α < (γ + 1)/2 − 1/p`.
    pub linear_transport: bool,
    /// Critical exponent with `1/𝔭 = 1 − α − β/2`, infinite when `α + β/2 ≥ 1`.
    pub critical_p: f64,
    pub gamma: f64,
}

pub fn admissibility(alpha: f64, beta: f64, p: f64, gamma: f64) -> Admissibility {
    let inv_p = 1.0 / p;
    let uniqueness = beta / 2.0 < alpha && alpha < 0.5 && beta / 2.0 + alpha <= 1.0 - inv_p + 1e-12;
    let linear_transport = alpha < (gamma + 1.0) / 2.0 - inv_p;
    let r = 1.0 - alpha - beta / 2.0;
    Admissibility {
        uniqueness,
        linear_transport,
        critical_p: if r > 0.0 { 1.0 / r } else { f64::INFINITY },
        gamma,
    }
}

impl SimulationConfig {
    pub fn grid(&self) -> Result<TorusGrid, SolverError> {
        Ok(TorusGrid::new(self.n, self.length)?)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma.unwrap_or(1.0 - self.beta)
    }

    pub fn admissibility(&self) -> Admissibility {
        admissibility(self.noise.alpha, self.beta, self.p, self.gamma())
    }

    /// Number of steps to reach the horizon.
    pub fn steps(&self) -> Result<u64, SolverError> {
        self.validate()?;
        if self.horizon == 0.0 {
            return Ok(0);
        }
        let steps = (self.horizon / self.dt).round();
        if (steps * self.dt - self.horizon).abs() > 1e-9 * self.horizon {
            return Err(SolverError::Config(format!(
                "horizon {} is not a whole number of steps of {}",
                self.horizon, self.dt
            )));
        }
        Ok(steps as u64)
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |m: String| Err(SolverError::Config(m));
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return bad(format!("beta must lie in (0, 1), got {}", self.beta));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.horizon == 0.0 || self.horizon >= self.dt * (1.0 - 1e-12)) {
            return bad(format!("horizon {} must be 0 or at least dt {}", self.horizon, self.dt));
        }
        if !(self.viscosity.is_finite() && self.viscosity >= 0.0) {
            return bad(format!("viscosity must be nonnegative, got {}", self.viscosity));
        }
        for (name, d) in [("kernel_delta", self.kernel_delta), ("data_delta", self.data_delta)] {
            if !(d.is_finite() && d >= 0.0) {
                return bad(format!("{name} must be nonnegative, got {d}"));
            }
        }
        if !(self.p >= 1.0) {
            return bad(format!("p must be at least 1, got {}", self.p));
        }
        if self.diagnostics_every == 0 {
            return bad("diagnostics_every must be positive".into());
        }
        if self.decomposition_level < 0.0 || !self.decomposition_level.is_finite() {
            return bad(format!("decomposition level must be nonnegative, got {}", self.decomposition_level));
        }
        if self.scheme == Scheme::DeterministicRk4 && self.noise.enabled {
            return bad("the deterministic scheme requires noise to be disabled".into());
        }
        if self.noise.enabled {
            let limit = self.grid()?.dealias_limit();
            if !(self.noise.cutoff >= 1.0 && self.noise.cutoff <= limit as f64) {
                return bad(format!(
                    "noise cutoff {} outside [1, {limit}] for resolution {}",
                    self.noise.cutoff, self.n
                ));
            }
        }
        if self.brownian_substeps == 0 {
            return bad("brownian_substeps must be positive".into());
        }
        if !(self.cfl_warn > 0.0 && self.cfl_max >= self.cfl_warn) {
            return bad("CFL thresholds must satisfy 0 < cfl_warn ≤ cfl_max".into());
        }
        Ok(())
    }
}
