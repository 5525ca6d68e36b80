//! Simulation state, the integration loop and drift providers.

use std::borrow::Cow;

use rustfft::num_complex::Complex64;

use super::config::{ForcingSpec, SimulationConfig};
use super::snapshot::{read_snapshot, DiagnosticRow, Snapshot};
use super::{levelset_split, linear_transport_step, Admissibility, Model, Scheme, SolverError};
use crate::mollifier::Mollifier;
use crate::noise::{realization_seed, sample_increment, NoiseIncrement};
use crate::spectral::{lebesgue_norm, sobolev_norm_fluctuation, Field, TorusGrid, VectorField};

/// Forcing resolved on the grid.
#[derive(Debug, Clone)]
enum Forcing {
    Zero,
    Steady(Field),
    Pulsating(Field, f64),
    Sequence(Vec<(f64, Field)>),
}

fn prepare(field: Field, delta: f64, mollifier: Mollifier) -> Field {
    let f = if delta > 0.0 {
        field.map_spectral(|n1, n2| Complex64::new(mollifier.transform(delta, (n1 * n1 + n2 * n2).sqrt()), 0.0))
    } else {
        field
    };
    f.dealiased()
}

impl Forcing {
    fn build(spec: &ForcingSpec, grid: TorusGrid, delta: f64, mollifier: Mollifier) -> Result<Self, SolverError> {
        let p = |f: Field| prepare(f, delta, mollifier);
        Ok(match spec {
            ForcingSpec::Zero => Forcing::Zero,
            ForcingSpec::Steady(a) => Forcing::Steady(p(a.build(grid))),
            ForcingSpec::Pulsating { field, frequency } => Forcing::Pulsating(p(field.build(grid)), *frequency),
            ForcingSpec::Snapshots(list) => {
                let mut seq = Vec::with_capacity(list.len());
                for (t, path) in list {
                    let snap = read_snapshot(path)?;
                    if snap.field.grid().n() != grid.n() {
                        return Err(SolverError::Config(format!(
                            "forcing snapshot {} has resolution {}, configured {}",
                            path.display(),
                            snap.field.grid().n(),
                            grid.n()
                        )));
                    }
                    let f = Field::from_physical(grid, snap.field.physical().to_vec())?;
                    seq.push((*t, p(f)));
                }
                seq.sort_by(|a, b| a.0.total_cmp(&b.0));
                Forcing::Sequence(seq)
            }
            ForcingSpec::Superposed(terms) => {
                let mut sum = Field::zeros(grid);
                for (w, a) in terms {
                    sum.axpy(*w, &a.build(grid))?;
                }
                Forcing::Steady(p(sum))
            }
        })
    }

    fn at(&self, t: f64) -> Option<Cow<'_, Field>> {
        match self {
            Forcing::Zero => None,
            Forcing::Steady(f) => Some(Cow::Borrowed(f)),
            Forcing::Pulsating(f, omega) => Some(Cow::Owned(f.clone().scaled((omega * t).cos()))),
            Forcing::Sequence(seq) => seq
                .iter()
                .rev()
                .find(|(ts, _)| *ts <= t + 1e-12)
                .map(|(_, f)| Cow::Borrowed(f)),
        }
    }
}

/// Everything that evolves.
#[derive(Debug, Clone)]
pub struct SimulationState {
    pub time: f64,
    pub step: u64,
    pub theta: Field,
    /// `(θ^<, θ^>)` when the decomposition is enabled.
    pub decomposition: Option<(Field, Field)>,
    /// Passive scalars advected by `u(θ)`.
    pub passive: Vec<Field>,
    /// `u(θ)` at the current time.
    pub velocity: VectorField,
    /// Largest Courant number seen so far.
    pub max_courant: f64,
}

/// A stepper owning one realization.
#[derive(Debug, Clone)]
pub struct Simulation {
    config: SimulationConfig,
    model: Model,
    forcing: Forcing,
    passive_forcing: Vec<Forcing>,
    noise_seed: u64,
    state: SimulationState,
}

impl Simulation {
    pub fn new(config: &SimulationConfig) -> Result<Self, SolverError> {
        let grid = config.grid()?;
        let theta = config.initial.build(grid)?;
        let passive = config
            .passive
            .iter()
            .map(|p| p.initial.build(grid))
            .collect::<Result<Vec<_>, _>>()?;
        Self::with_fields(config, theta, passive)
    }

    /// Starts from the given fields instead of the configured initial
    /// conditions. All fields are mollified by `data_delta` and dealiased.
    pub fn with_fields(config: &SimulationConfig, theta: Field, passive: Vec<Field>) -> Result<Self, SolverError> {
        let model = Model::new(config)?;
        let grid = *model.grid();
        if !theta.grid().same_as(&grid) || passive.iter().any(|p| !p.grid().same_as(&grid)) {
            return Err(SolverError::Config("initial fields do not live on the configured grid".into()));
        }
        if passive.len() != config.passive.len() {
            return Err(SolverError::Config(format!(
                "{} passive fields given, {} configured",
                passive.len(),
                config.passive.len()
            )));
        }
        theta.ensure_finite()?;
        let prep = |f: Field| prepare(f, config.data_delta, config.mollifier);
        let theta = prep(theta);
        let passive: Vec<Field> = passive.into_iter().map(prep).collect();
        let forcing = Forcing::build(&config.forcing, grid, config.data_delta, config.mollifier)?;
        let passive_forcing = config
            .passive
            .iter()
            .map(|p| Forcing::build(&p.forcing, grid, config.data_delta, config.mollifier))
            .collect::<Result<Vec<_>, _>>()?;
        let decomposition = (config.decomposition_level > 0.0).then(|| levelset_split(&theta, config.decomposition_level));
        let velocity = model.velocity(&theta);
        Ok(Self {
            noise_seed: realization_seed(config.seed, config.realization),
            config: config.clone(),
            model,
            forcing,
            passive_forcing,
            state: SimulationState {
                time: 0.0,
                step: 0,
                theta,
                decomposition,
                passive,
                velocity,
                max_courant: 0.0,
            },
        })
    }

    pub fn config(&self) -> &SimulationConfig {
        &self.config
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn state(&self) -> &SimulationState {
        &self.state
    }

    /// Seed of the noise stream of this realization.
    pub fn noise_seed(&self) -> u64 {
        self.noise_seed
    }

    /// Forcing of `θ` at time `t`.
    pub fn forcing_at(&self, t: f64) -> Option<Field> {
        self.forcing.at(t).map(Cow::into_owned)
    }

    /// Forcing of passive scalar `i` at time `t`.
    pub fn passive_forcing_at(&self, i: usize, t: f64) -> Option<Field> {
        self.passive_forcing.get(i)?.at(t).map(Cow::into_owned)
    }

    /// Noise increment of step `step`, `None` without noise.
    pub fn increment(&self, step: u64) -> Result<Option<NoiseIncrement>, SolverError> {
        if !self.model.noise_enabled() || self.model.spectrum().is_empty() {
            return Ok(None);
        }
        let k = u64::from(self.config.brownian_substeps);
        let spec = self.model.spectrum();
        if k == 1 {
            return Ok(Some(sample_increment(spec, self.model.dt(), self.noise_seed, step)?));
        }
        let mut total = NoiseIncrement::zeros(spec, self.model.dt());
        for j in 0..k {
            let part = sample_increment(spec, self.model.dt() / k as f64, self.noise_seed, step * k + j)?;
            for (a, b) in total.cosine.iter_mut().zip(&part.cosine) {
                *a += b;
            }
            for (a, b) in total.sine.iter_mut().zip(&part.sine) {
                *a += b;
            }
        }
        Ok(Some(total))
    }

    /// Forcing of every component at time `t`, in the order
    /// `θ, θ^<, θ^>, ζ₁, …`.
    fn component_forcing(&self, t: f64) -> Vec<Option<Cow<'_, Field>>> {
        let f = self.forcing.at(t);
        let mut out = Vec::new();
        if self.state.decomposition.is_some() {
            let (lo, hi) = match &f {
                Some(f) => {
                    let (l, h) = levelset_split(f, self.config.decomposition_level);
                    (Some(Cow::Owned(l)), Some(Cow::Owned(h)))
                }
                None => (None, None),
            };
            out.push(f);
            out.push(lo);
            out.push(hi);
        } else {
            out.push(f);
        }
        out.extend(self.passive_forcing.iter().map(|p| p.at(t)));
        out
    }

    fn components(&self) -> Vec<Field> {
        let s = &self.state;
        let mut out = vec![s.theta.clone()];
        if let Some((lo, hi)) = &s.decomposition {
            out.push(lo.clone());
            out.push(hi.clone());
        }
        out.extend(s.passive.iter().cloned());
        out
    }

    fn set_components(&mut self, mut c: Vec<Field>) {
        let passive = c.split_off(if self.state.decomposition.is_some() { 3 } else { 1 });
        let mut it = c.into_iter();
        self.state.theta = it.next().expect("theta");
        if self.state.decomposition.is_some() {
            let lo = it.next().expect("low part");
            let hi = it.next().expect("high part");
            self.state.decomposition = Some((lo, hi));
        }
        self.state.passive = passive;
    }

    /// Advances one step; errors carry the time of the failing step.
    pub fn step(&mut self) -> Result<(), SolverError> {
        let t = self.state.time;
        self.try_step().map_err(|e| SolverError::AtTime {
            time: t,
            source: Box::new(e),
        })
    }

    fn try_step(&mut self) -> Result<(), SolverError> {
        let t = self.state.time;
        let components = self.components();
        let (next, courant) = match self.model.scheme() {
            Scheme::DeterministicRk4 => {
                let forcing = self.forcing.clone();
                let passive_forcing = self.passive_forcing.clone();
                let level = self.config.decomposition_level;
                let split = self.state.decomposition.is_some();
                self.model.rk4(&components, t, move |time| {
                    let f = forcing.at(time).map(Cow::into_owned);
                    let mut out: Vec<Option<Cow<'_, Field>>> = Vec::new();
                    if split {
                        let parts = f.as_ref().map(|f| levelset_split(f, level));
                        out.push(f.map(Cow::Owned));
                        out.push(parts.as_ref().map(|p| Cow::Owned(p.0.clone())));
                        out.push(parts.map(|p| Cow::Owned(p.1)));
                    } else {
                        out.push(f.map(Cow::Owned));
                    }
                    out.extend(passive_forcing.iter().map(|p| p.at(time).map(Cow::into_owned).map(Cow::Owned)));
                    Ok(out)
                })?
            }
            Scheme::ItoEuler | Scheme::ItoIntegratingFactor => {
                let u = &self.state.velocity;
                let courant = self.model.check_cfl(u)?;
                let inc = self.increment(self.state.step)?;
                let forcing = self.component_forcing(t);
                let next = components
                    .iter()
                    .zip(&forcing)
                    .map(|(phi, f)| self.model.advance(phi, u, f.as_deref(), inc.as_ref()))
                    .collect::<Result<Vec<_>, _>>()?;
                (next, courant)
            }
        };
        if !next.iter().all(Field::is_finite) {
            return Err(SolverError::NonFinite);
        }
        self.set_components(next);
        self.state.step += 1;
        self.state.time = self.state.step as f64 * self.model.dt();
        self.state.velocity = self.model.velocity(&self.state.theta);
        self.state.max_courant = self.state.max_courant.max(courant);
        Ok(())
    }

    /// Diagnostics of `θ` at the current time.
    pub fn diagnostics(&self) -> DiagnosticRow {
        field_diagnostics(&self.state.theta, self.state.time, &self.config)
    }

    /// `‖θ − θ^< − θ^>‖_∞ / ‖θ‖_∞`.
    pub fn decomposition_defect(&self) -> Option<f64> {
        let (lo, hi) = self.state.decomposition.as_ref()?;
        let theta = self.state.theta.physical();
        let (l, h) = (lo.physical(), hi.physical());
        let mut defect: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for j in 0..theta.len() {
            defect = defect.max((theta[j] - l[j] - h[j]).abs());
            scale = scale.max(theta[j].abs());
        }
        Some(if scale > 0.0 { defect / scale } else { defect })
    }
}

/// Norms of one field as a diagnostics row.
pub fn field_diagnostics(f: &Field, time: f64, config: &SimulationConfig) -> DiagnosticRow {
    let norm = |q: f64| lebesgue_norm(f, q).unwrap_or(f64::NAN);
    DiagnosticRow {
        time,
        l1: norm(1.0),
        l2: norm(2.0),
        lp: norm(config.p),
        linf: norm(f64::INFINITY),
        h_neg1bh: sobolev_norm_fluctuation(f, config.beta / 2.0 - 1.0),
        hba: sobolev_norm_fluctuation(f, config.beta / 2.0 - config.noise.alpha),
        h0: sobolev_norm_fluctuation(f, 0.0),
    }
}

/// Decomposition diagnostics at one recording time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecompositionRow {
    pub time: f64,
    /// `‖θ − θ^< − θ^>‖_∞ / ‖θ‖_∞`.
    pub defect: f64,
    /// `‖θ^>‖_{L^p}`.
    pub high_lp: f64,
    /// `‖θ^<‖_{L^∞}`.
    pub low_linf: f64,
}

/// Output of [`run_simulation`].
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub admissibility: Admissibility,
    pub corrector: f64,
    pub steps: u64,
    pub diagnostics: Vec<DiagnosticRow>,
    pub passive_diagnostics: Vec<Vec<DiagnosticRow>>,
    pub decomposition: Vec<DecompositionRow>,
    pub snapshots: Vec<Snapshot>,
    pub max_courant: f64,
    pub final_state: SimulationState,
}

impl Simulation {
    /// Integrates to the horizon, recording diagnostics every
    /// `diagnostics_every` steps and at the final time.
    pub fn run(mut self) -> Result<Trajectory, SolverError> {
        let steps = self.config.steps()?;
        let every = self.config.diagnostics_every as u64;
        let snap_every = self.config.snapshot_every as u64;
        let mut out = Trajectory {
            admissibility: self.config.admissibility(),
            corrector: self.model.corrector(),
            steps,
            diagnostics: Vec::new(),
            passive_diagnostics: vec![Vec::new(); self.config.passive.len()],
            decomposition: Vec::new(),
            snapshots: Vec::new(),
            max_courant: 0.0,
            final_state: self.state.clone(),
        };
        loop {
            let k = self.state.step;
            if k % every == 0 || k == steps {
                self.record(&mut out);
            }
            if snap_every > 0 && (k % snap_every == 0 || k == steps) {
                out.snapshots.push(Snapshot {
                    time: self.state.time,
                    beta: self.config.beta,
                    field: self.state.theta.clone(),
                });
            }
            if k == steps {
                break;
            }
            self.step()?;
        }
        out.max_courant = self.state.max_courant;
        out.final_state = self.state;
        Ok(out)
    }

    fn record(&self, out: &mut Trajectory) {
        out.diagnostics.push(self.diagnostics());
        for (i, z) in self.state.passive.iter().enumerate() {
            out.passive_diagnostics[i].push(field_diagnostics(z, self.state.time, &self.config));
        }
        if let (Some(defect), Some((lo, hi))) = (self.decomposition_defect(), &self.state.decomposition) {
            out.decomposition.push(DecompositionRow {
                time: self.state.time,
                defect,
                high_lp: lebesgue_norm(hi, self.config.p).unwrap_or(f64::NAN),
                low_linf: lo.max_abs(),
            });
        }
    }
}

/// Integrates `config` to its horizon. Deterministic given the seed.
pub fn run_simulation(config: &SimulationConfig) -> Result<Trajectory, SolverError> {
    Simulation::new(config)?.run()
}

/// Source of a divergence-free drift `b(t)` for linear transport; must be a
/// pure function of time and realization id.
pub trait DriftProvider: Sync {
    fn drift(&self, t: f64, realization: u64) -> Result<VectorField, SolverError>;
}

impl<F> DriftProvider for F
where
    F: Fn(f64, u64) -> Result<VectorField, SolverError> + Sync,
{
    fn drift(&self, t: f64, realization: u64) -> Result<VectorField, SolverError> {
        self(t, realization)
    }
}

/// Velocity of a gSQG run recorded at the start of every step and held
/// constant over the step.
#[derive(Debug, Clone)]
pub struct RecordedDrift {
    dt: f64,
    realization: u64,
    velocities: Vec<VectorField>,
}

impl RecordedDrift {
    /// Runs `config` and records `u(θ)` at every step.
    pub fn record(config: &SimulationConfig) -> Result<Self, SolverError> {
        let steps = config.steps()?;
        let mut sim = Simulation::new(config)?;
        let mut velocities = Vec::with_capacity(steps as usize + 1);
        velocities.push(sim.state().velocity.clone());
        for _ in 0..steps {
            sim.step()?;
            velocities.push(sim.state().velocity.clone());
        }
        Ok(Self {
            dt: config.dt,
            realization: config.realization,
            velocities,
        })
    }

    pub fn len(&self) -> usize {
        self.velocities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.velocities.is_empty()
    }

    /// Recorded velocities, one per step start plus the final one.
    pub fn velocities(&self) -> &[VectorField] {
        &self.velocities
    }
}

impl DriftProvider for RecordedDrift {
    fn drift(&self, t: f64, realization: u64) -> Result<VectorField, SolverError> {
        if realization != self.realization {
            return Err(SolverError::Config(format!(
                "drift recorded for realization {}, requested {realization}",
                self.realization
            )));
        }
        let k = ((t / self.dt) + 1e-9).floor().max(0.0) as usize;
        self.velocities
            .get(k.min(self.velocities.len().saturating_sub(1)))
            .cloned()
            .ok_or_else(|| SolverError::Config("empty drift record".into()))
    }
}

/// Advances `ζ` over `steps` steps of linear transport by `drift`, with the
/// noise of `config`'s realization and forcing `forcing(t)`.
pub fn integrate_linear_transport<D: DriftProvider + ?Sized>(
    config: &SimulationConfig,
    zeta0: Field,
    drift: &D,
    forcing: impl Fn(f64) -> Option<Field>,
    mut observe: impl FnMut(f64, &Field),
) -> Result<Field, SolverError> {
    let steps = config.steps()?;
    let sim = Simulation::with_fields(config, zeta0, vec![Field::zeros(config.grid()?); config.passive.len()])?;
    let mut zeta = sim.state().theta.clone();
    observe(0.0, &zeta);
    for k in 0..steps {
        let t = k as f64 * config.dt;
        let b = drift.drift(t, config.realization)?;
        let inc = sim.increment(k)?;
        zeta = linear_transport_step(&zeta, &b, sim.model(), forcing(t).as_ref(), inc.as_ref()).map_err(|e| {
            SolverError::AtTime {
                time: t,
                source: Box::new(e),
            }
        })?;
        observe((k + 1) as f64 * config.dt, &zeta);
    }
    Ok(zeta)
}
