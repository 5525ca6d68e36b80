//! Incompressible Kraichnan transport noise on the torus.
//!
//! The noise is a finite sum of real trigonometric modes, one pair of
//! channels per wavevector `k` in the half lattice `K⁺` (`k₁ > 0`, or
//! `k₁ = 0` and `k₂ > 0`):
//!
//! `ΔW(x) = Σ_{k∈K⁺} a(k) e(k) [cos(k·x) ΔB^c_k + sin(k·x) ΔB^s_k]`
//!
//! with `a(k) = √(2q(k)) ρ̂(δ|k|)`, `q(k) = (1 + |k|²)^{-1-α}` and the
//! tangent `e(k) = k⊥/|k|`. The induced covariance is
//! `Q(z) = Σ_{K⁺} a(k)² e(k)⊗e(k) cos(k·z)` and the Itô corrector is
//! `c = Tr Q(0) / 4`.

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mollifier::Mollifier;
use crate::spectral::{fields_from_physical_pair, fields_from_spectral_pair, gradient, Field, TorusGrid};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NoiseError {
    #[error("alpha must lie in (0, 1], got {0}")]
    InvalidAlpha(f64),
    #[error("cutoff {cutoff} outside [1, {limit}] for this grid")]
    InvalidCutoff { cutoff: f64, limit: i64 },
    #[error("mollification scale must be finite and nonnegative, got {0}")]
    InvalidDelta(f64),
    #[error("time step must be finite and nonnegative, got {0}")]
    InvalidStep(f64),
    #[error("increment has {got} modes, spectrum has {expected}")]
    IncrementMismatch { expected: usize, got: usize },
    #[error("field grid does not match the noise grid")]
    GridMismatch,
}

/// One retained wavevector of `K⁺`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseMode {
    /// Integer wavevector.
    pub k: (i64, i64),
    /// Physical wavevector.
    pub wavevector: (f64, f64),
    /// `q(k)`.
    pub q: f64,
    /// `ρ̂(δ|k|)²`.
    pub damping: f64,
    /// `a(k) = √(2 q(k)) ρ̂(δ|k|)`.
    pub amplitude: f64,
    /// `e(k) = k⊥/|k|`.
    pub tangent: (f64, f64),
}

#[derive(Debug, Clone)]
pub struct NoiseSpectrum {
    grid: TorusGrid,
    alpha: f64,
    cutoff: f64,
    delta: f64,
    mollifier: Mollifier,
    modes: Vec<NoiseMode>,
    corrector: f64,
}

/// Serializable summary for experiment manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSummary {
    pub alpha: f64,
    pub cutoff: f64,
    pub delta: f64,
    pub mollifier: Mollifier,
    pub corrector: f64,
    pub modes: usize,
}

/// Kraichnan spectral density `(1 + |k|²)^{-1-α}`.
#[inline]
pub fn kraichnan_density(k_sq: f64, alpha: f64) -> f64 {
    (1.0 + k_sq).powf(-1.0 - alpha)
}

/// Builds the spectrum retaining `0 < |k| ≤ cutoff · 2π/L`.
pub fn build_spectrum(
    grid: TorusGrid,
    alpha: f64,
    cutoff: f64,
    delta: f64,
    mollifier: Mollifier,
) -> Result<NoiseSpectrum, NoiseError> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(NoiseError::InvalidAlpha(alpha));
    }
    let limit = grid.dealias_limit();
    if !(cutoff >= 1.0 && cutoff <= limit as f64) {
        return Err(NoiseError::InvalidCutoff { cutoff, limit });
    }
    if !(delta.is_finite() && delta >= 0.0) {
        return Err(NoiseError::InvalidDelta(delta));
    }
    let kmax = cutoff.floor() as i64;
    let k0 = grid.base_wavenumber();
    let mut modes = Vec::new();
    for k1 in 0..=kmax {
        for k2 in -kmax..=kmax {
            if k1 == 0 && k2 <= 0 {
                continue;
            }
            let int_sq = (k1 * k1 + k2 * k2) as f64;
            if int_sq > cutoff * cutoff {
                continue;
            }
            let (w1, w2) = (k0 * k1 as f64, k0 * k2 as f64);
            let modulus = (w1 * w1 + w2 * w2).sqrt();
            let q = kraichnan_density(modulus * modulus, alpha);
            let rho = mollifier.transform(delta, modulus);
            modes.push(NoiseMode {
                k: (k1, k2),
                wavevector: (w1, w2),
                q,
                damping: rho * rho,
                amplitude: (2.0 * q).sqrt() * rho,
                tangent: (-w2 / modulus, w1 / modulus),
            });
        }
    }
    // Σ over the full lattice of q·m / 4, i.e. half the K⁺ sum
    let corrector = 0.5 * modes.iter().map(|m| m.q * m.damping).sum::<f64>();
    Ok(NoiseSpectrum {
        grid,
        alpha,
        cutoff,
        delta,
        mollifier,
        modes,
        corrector,
    })
}

impl NoiseSpectrum {
    /// Spectrum with no modes; transport and corrector vanish.
    pub fn empty(grid: TorusGrid, alpha: f64) -> Self {
        Self {
            grid,
            alpha,
            cutoff: 0.0,
            delta: 0.0,
            mollifier: Mollifier::Gaussian,
            modes: Vec::new(),
            corrector: 0.0,
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn mollifier(&self) -> Mollifier {
        self.mollifier
    }

    pub fn modes(&self) -> &[NoiseMode] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn summary(&self) -> NoiseSummary {
        NoiseSummary {
            alpha: self.alpha,
            cutoff: self.cutoff,
            delta: self.delta,
            mollifier: self.mollifier,
            corrector: self.corrector,
            modes: self.modes.len(),
        }
    }
}

/// Itô–Stratonovich corrector `c = Tr Q(0)/4`.
pub fn ito_corrector(spec: &NoiseSpectrum) -> f64 {
    spec.corrector
}

/// `Q(z) = Σ_{K⁺} a(k)² e(k)⊗e(k) cos(k·z)` as `[[Q11, Q12], [Q21, Q22]]`.
pub fn evaluate_covariance(spec: &NoiseSpectrum, z: (f64, f64)) -> [[f64; 2]; 2] {
    let mut q = [[0.0; 2]; 2];
    for m in &spec.modes {
        let c = (m.wavevector.0 * z.0 + m.wavevector.1 * z.1).cos();
        let w = m.amplitude * m.amplitude * c;
        let (e1, e2) = m.tangent;
        q[0][0] += w * e1 * e1;
        q[0][1] += w * e1 * e2;
        q[1][1] += w * e2 * e2;
    }
    q[1][0] = q[0][1];
    q
}

/// Structure function `Tr(Q(0) − Q(z))`.
pub fn structure_function(spec: &NoiseSpectrum, z: (f64, f64)) -> f64 {
    spec.modes
        .iter()
        .map(|m| {
            let c = (m.wavevector.0 * z.0 + m.wavevector.1 * z.1).cos();
            m.amplitude * m.amplitude * (1.0 - c)
        })
        .sum()
}

/// Brownian increments of every channel over one step.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseIncrement {
    pub dt: f64,
    /// `ΔB^c_k`, one per mode of the spectrum.
    pub cosine: Vec<f64>,
    /// `ΔB^s_k`.
    pub sine: Vec<f64>,
}

impl NoiseIncrement {
    pub fn zeros(spec: &NoiseSpectrum, dt: f64) -> Self {
        Self {
            dt,
            cosine: vec![0.0; spec.len()],
            sine: vec![0.0; spec.len()],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.cosine.iter().chain(&self.sine).all(|v| v.is_finite())
    }

    fn check(&self, spec: &NoiseSpectrum) -> Result<(), NoiseError> {
        if self.cosine.len() != spec.len() || self.sine.len() != spec.len() {
            return Err(NoiseError::IncrementMismatch {
                expected: spec.len(),
                got: self.cosine.len().min(self.sine.len()),
            });
        }
        Ok(())
    }
}

/// Seed of realization `id` derived from a base seed (SplitMix64 finalizer).
pub fn realization_seed(base: u64, id: u64) -> u64 {
    let mut z = base ^ id.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform in `(0, 1]` from the top 53 bits.
#[inline]
fn open_unit(bits: u64) -> f64 {
    ((bits >> 11) as f64 + 1.0) * (1.0 / (1u64 << 53) as f64)
}

/// Draws the increment of step `step` for realization `seed`.
///
/// The generator is keyed by the seed and uses the step as its stream, so
/// any step can be sampled independently of the others. Channel `j` of mode
/// `i` always consumes words `4i + 2j` and `4i + 2j + 1` of the stream.
pub fn sample_increment(spec: &NoiseSpectrum, dt: f64, seed: u64, step: u64) -> Result<NoiseIncrement, NoiseError> {
    if !(dt.is_finite() && dt >= 0.0) {
        return Err(NoiseError::InvalidStep(dt));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(step);
    let scale = dt.sqrt();
    let mut draw = || {
        let u1 = open_unit(rng.next_u64());
        let u2 = open_unit(rng.next_u64());
        scale * (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    };
    let mut cosine = Vec::with_capacity(spec.len());
    let mut sine = Vec::with_capacity(spec.len());
    for _ in 0..spec.len() {
        cosine.push(draw());
        sine.push(draw());
    }
    Ok(NoiseIncrement { dt, cosine, sine })
}

/// Spectral coefficients of the increment velocity `ΔW`.
fn increment_spectra(spec: &NoiseSpectrum, inc: &NoiseIncrement) -> (Vec<Complex64>, Vec<Complex64>) {
    let grid = spec.grid;
    let mut a = vec![Complex64::new(0.0, 0.0); grid.len()];
    let mut b = vec![Complex64::new(0.0, 0.0); grid.len()];
    for (i, m) in spec.modes.iter().enumerate() {
        // cos(k·x)B^c + sin(k·x)B^s = Re[(B^c − iB^s) e^{ik·x}]
        let c = Complex64::new(inc.cosine[i], -inc.sine[i]) * (0.5 * m.amplitude);
        let idx = grid.flat_index(m.k.0, m.k.1);
        let neg = grid.flat_index(-m.k.0, -m.k.1);
        a[idx] += c * m.tangent.0;
        b[idx] += c * m.tangent.1;
        a[neg] += c.conj() * m.tangent.0;
        b[neg] += c.conj() * m.tangent.1;
    }
    (a, b)
}

/// Physical samples of the increment velocity `ΔW(x_j)`.
pub fn increment_velocity(spec: &NoiseSpectrum, inc: &NoiseIncrement) -> Result<(Vec<f64>, Vec<f64>), NoiseError> {
    inc.check(spec)?;
    let (a, b) = increment_spectra(spec, inc);
    let (w1, w2) = fields_from_spectral_pair(spec.grid, a, b);
    Ok((w1.physical().to_vec(), w2.physical().to_vec()))
}

/// `ΔW(x)` at an arbitrary point by direct summation.
pub fn increment_at(spec: &NoiseSpectrum, inc: &NoiseIncrement, x: (f64, f64)) -> Result<(f64, f64), NoiseError> {
    inc.check(spec)?;
    let mut w = (0.0, 0.0);
    for (i, m) in spec.modes.iter().enumerate() {
        let phase = m.wavevector.0 * x.0 + m.wavevector.1 * x.1;
        let s = m.amplitude * (phase.cos() * inc.cosine[i] + phase.sin() * inc.sine[i]);
        w.0 += s * m.tangent.0;
        w.1 += s * m.tangent.1;
    }
    Ok(w)
}

/// `ΔW·∇θ = ∇·(ΔW θ)`, computed in divergence form and dealiased.
pub fn transport_term(theta: &Field, spec: &NoiseSpectrum, inc: &NoiseIncrement) -> Result<Field, NoiseError> {
    inc.check(spec)?;
    if !theta.grid().same_as(&spec.grid) {
        return Err(NoiseError::GridMismatch);
    }
    let grid = spec.grid;
    if spec.is_empty() {
        return Ok(Field::zeros(grid));
    }
    let (a, b) = increment_spectra(spec, inc);
    let (w1, w2) = fields_from_spectral_pair(grid, a, b);
    let th = theta.physical();
    let p1: Vec<f64> = w1.physical().iter().zip(th).map(|(w, t)| w * t).collect();
    let p2: Vec<f64> = w2.physical().iter().zip(th).map(|(w, t)| w * t).collect();
    let (f1, f2) = fields_from_physical_pair(grid, p1, p2);
    Ok(crate::spectral::divergence_of(&f1, &f2).dealiased())
}

/// Pointwise quadratic variation `Σ_{K⁺} a(k)² (cos² + sin²)(k·x) |e(k)·∇θ(x)|²`
/// and the corrector prediction `2c|∇θ(x)|²` at every grid point.
pub fn quadratic_variation(theta: &Field, spec: &NoiseSpectrum) -> (Vec<f64>, Vec<f64>) {
    let grid = theta.grid();
    let (g1, g2) = gradient(theta).physical_pair();
    let mut qv = vec![0.0; grid.len()];
    let mut predicted = vec![0.0; grid.len()];
    let c = spec.corrector;
    for j in 0..grid.len() {
        let (x1, x2) = grid.point(j);
        let mut acc = 0.0;
        for m in &spec.modes {
            let phase = m.wavevector.0 * x1 + m.wavevector.1 * x2;
            let (s, co) = phase.sin_cos();
            let d = m.tangent.0 * g1[j] + m.tangent.1 * g2[j];
            acc += m.amplitude * m.amplitude * (co * co + s * s) * d * d;
        }
        qv[j] = acc;
        predicted[j] = 2.0 * c * (g1[j] * g1[j] + g2[j] * g2[j]);
    }
    (qv, predicted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mollifier::CutoffProfile;
    use crate::spectral::random_band_limited;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn grid(n: usize) -> TorusGrid {
        TorusGrid::periodic(n).unwrap()
    }

    fn spec(n: usize, alpha: f64, cutoff: f64) -> NoiseSpectrum {
        build_spectrum(grid(n), alpha, cutoff, 0.0, Mollifier::Gaussian).unwrap()
    }

    #[test]
    fn unit_cutoff_corrector() {
        let s = spec(16, 0.5, 1.0);
        assert_eq!(s.len(), 2);
        for m in s.modes() {
            assert_relative_eq!(m.q, 2f64.powf(-1.5), max_relative = 1e-15);
        }
        assert_relative_eq!(ito_corrector(&s), 0.353_553_390_593_273_8, max_relative = 1e-14);
        assert_relative_eq!(ito_corrector(&spec(16, 1.0, 1.0)), 0.25, max_relative = 1e-15);
        assert!(build_spectrum(grid(16), 0.0, 1.0, 0.0, Mollifier::Gaussian).is_err());
        assert!(build_spectrum(grid(16), 1.2, 1.0, 0.0, Mollifier::Gaussian).is_err());
    }

    #[test]
    fn cutoff_validation() {
        assert!(build_spectrum(grid(16), 0.5, 6.0, 0.0, Mollifier::Gaussian).is_err());
        assert!(build_spectrum(grid(16), 0.5, 5.0, 0.0, Mollifier::Gaussian).is_ok());
        assert!(build_spectrum(grid(16), 0.5, 0.5, 0.0, Mollifier::Gaussian).is_err());
    }

    #[test]
    fn compact_mollifier_kills_band() {
        let s = build_spectrum(
            grid(32),
            0.4,
            8.0,
            1.0e3,
            Mollifier::Cutoff(CutoffProfile::BumpIntegral),
        )
        .unwrap();
        assert!(s.modes().iter().all(|m| m.amplitude == 0.0));
        assert_eq!(ito_corrector(&s), 0.0);
    }

    #[test]
    fn empty_spectrum() {
        let s = NoiseSpectrum::empty(grid(16), 0.4);
        assert_eq!(ito_corrector(&s), 0.0);
        assert_eq!(evaluate_covariance(&s, (0.3, 0.1)), [[0.0; 2]; 2]);
    }

    #[test]
    fn corrector_increases_as_delta_decreases() {
        let g = grid(64);
        let c0 = ito_corrector(&build_spectrum(g, 0.4, 16.0, 0.0, Mollifier::Gaussian).unwrap());
        let cs: Vec<f64> = [0.5, 0.25, 0.125]
            .iter()
            .map(|&d| ito_corrector(&build_spectrum(g, 0.4, 16.0, d, Mollifier::Gaussian).unwrap()))
            .collect();
        // direct summation oracle over the full lattice
        let oracle = |d: f64| {
            let mut acc = 0.0;
            for k1 in -16i64..=16 {
                for k2 in -16i64..=16 {
                    let r2 = (k1 * k1 + k2 * k2) as f64;
                    if r2 == 0.0 || r2 > 256.0 {
                        continue;
                    }
                    acc += (1.0 + r2).powf(-1.4) * (-d * d * r2).exp();
                }
            }
            acc / 4.0
        };
        for (c, d) in cs.iter().zip([0.5, 0.25, 0.125]) {
            assert_relative_eq!(*c, oracle(d), max_relative = 1e-12);
        }
        assert!(cs[0] < cs[1] && cs[1] < cs[2] && cs[2] < c0);
        let gaps: Vec<f64> = cs.iter().map(|c| c0 - c).collect();
        assert!(gaps[1] < 0.75 * gaps[0] && gaps[2] < 0.75 * gaps[1]);
    }

    #[test]
    fn covariance_examples() {
        let s = spec(16, 0.5, 1.0);
        let q0 = evaluate_covariance(&s, (0.0, 0.0));
        let c = ito_corrector(&s);
        assert_relative_eq!(q0[0][0], 2.0 * c, max_relative = 1e-14);
        assert_relative_eq!(q0[1][1], 2.0 * c, max_relative = 1e-14);
        assert_eq!(q0[0][1], 0.0);
        assert_relative_eq!(q0[0][0] + q0[1][1], 4.0 * c, max_relative = 1e-14);
        // z = (π, 0): mode (1,0) has e = (0,1) and cos = −1, mode (0,1) has e = (−1,0) and cos = 1
        let q = evaluate_covariance(&s, (PI, 0.0));
        let w = 2.0 * 2f64.powf(-1.5);
        assert_relative_eq!(q[0][0], w, max_relative = 1e-14);
        assert_relative_eq!(q[1][1], -w, max_relative = 1e-14);
        assert!(q[0][1].abs() < 1e-15);
    }

    #[test]
    fn covariance_symmetry_and_isotropy() {
        let s = spec(64, 0.4, 21.0);
        let q0 = evaluate_covariance(&s, (0.0, 0.0));
        let c = ito_corrector(&s);
        assert!(q0[0][1].abs() < 1e-12);
        assert_relative_eq!(q0[0][0], 2.0 * c, max_relative = 1e-10);
        assert_relative_eq!(q0[1][1], 2.0 * c, max_relative = 1e-10);
        let z = (0.37, -1.2);
        let a = evaluate_covariance(&s, z);
        let b = evaluate_covariance(&s, (-z.0, -z.1));
        assert_eq!(a, b);
        assert_eq!(a[0][1], a[1][0]);
    }

    #[test]
    fn tangents_are_divergence_free() {
        let s = spec(64, 0.3, 21.0);
        for m in s.modes() {
            let dot = m.k.0 as f64 * m.tangent.0 + m.k.1 as f64 * m.tangent.1;
            let norm = ((m.k.0 * m.k.0 + m.k.1 * m.k.1) as f64).sqrt();
            assert!(dot.abs() <= 1e-15 * norm);
        }
    }

    #[test]
    fn increments_are_reproducible() {
        let s = spec(32, 0.4, 8.0);
        let a = sample_increment(&s, 0.01, 42, 7).unwrap();
        let b = sample_increment(&s, 0.01, 42, 7).unwrap();
        assert_eq!(a, b);
        let c = sample_increment(&s, 0.01, 42, 8).unwrap();
        assert_ne!(a, c);
        let z = sample_increment(&s, 0.0, 42, 7).unwrap();
        assert!(z.cosine.iter().chain(&z.sine).all(|v| *v == 0.0));
        assert!(sample_increment(&s, -1.0, 0, 0).is_err());
    }

    #[test]
    fn empirical_covariance_at_origin() {
        let s = spec(16, 0.5, 3.0);
        let q0 = evaluate_covariance(&s, (0.0, 0.0));
        let m = 10_000u64;
        let mut acc = [[0.0; 2]; 2];
        for step in 0..m {
            let inc = sample_increment(&s, 1.0, 3, step).unwrap();
            let w = increment_at(&s, &inc, (0.0, 0.0)).unwrap();
            acc[0][0] += w.0 * w.0;
            acc[0][1] += w.0 * w.1;
            acc[1][1] += w.1 * w.1;
        }
        let bound = 3.0 / (m as f64).sqrt();
        for (i, j) in [(0, 0), (0, 1), (1, 1)] {
            let emp = acc[i][j] / m as f64;
            // entries measured in units of the diagonal
            assert!((emp - q0[i][j]).abs() <= bound * q0[0][0], "entry {i}{j}: {emp} vs {}", q0[i][j]);
        }
    }

    #[test]
    fn increment_velocity_matches_direct_sum() {
        let g = grid(16);
        let s = build_spectrum(g, 0.4, 5.0, 0.0, Mollifier::Gaussian).unwrap();
        let inc = sample_increment(&s, 0.1, 1, 2).unwrap();
        let (w1, w2) = increment_velocity(&s, &inc).unwrap();
        for j in [0usize, 17, 100, 255] {
            let (d1, d2) = increment_at(&s, &inc, g.point(j)).unwrap();
            assert!((w1[j] - d1).abs() < 1e-13 && (w2[j] - d2).abs() < 1e-13);
        }
    }

    #[test]
    fn transport_trivial_cases() {
        let g = grid(16);
        let s = spec(16, 0.4, 4.0);
        let inc = sample_increment(&s, 0.1, 1, 0).unwrap();
        let t = transport_term(&Field::constant(g, 2.0), &s, &inc).unwrap();
        assert!(t.max_abs() < 1e-14);
        let theta = Field::from_fn(g, |x, y| (x + y).sin());
        let t = transport_term(&theta, &s, &NoiseIncrement::zeros(&s, 0.1)).unwrap();
        assert_eq!(t.max_abs(), 0.0);
        let bad = NoiseIncrement {
            dt: 0.1,
            cosine: vec![0.0],
            sine: vec![0.0],
        };
        assert!(matches!(
            transport_term(&theta, &s, &bad),
            Err(NoiseError::IncrementMismatch { .. })
        ));
    }

    #[test]
    fn single_mode_transport() {
        let g = grid(16);
        let s = spec(16, 0.5, 1.0);
        // only mode k = (1,0) active, tangent e = (0, 1)
        let idx = s.modes().iter().position(|m| m.k == (1, 0)).unwrap();
        let mut inc = NoiseIncrement::zeros(&s, 0.1);
        inc.cosine[idx] = 0.3;
        let theta = Field::from_fn(g, |_, y| y.cos());
        let t = transport_term(&theta, &s, &inc).unwrap();
        let a = s.modes()[idx].amplitude;
        for j in 0..g.len() {
            let (x1, x2) = g.point(j);
            let expect = a * 0.3 * x1.cos() * (-x2.sin());
            assert!((t.physical()[j] - expect).abs() < 1e-12);
        }
        assert!(t.mean().abs() < 1e-16);
    }

    #[test]
    fn corrector_identity_pointwise() {
        let g = grid(32);
        let s = spec(32, 0.4, 10.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let theta = random_band_limited(g, 8, 1.0, &mut rng);
        let (qv, pred) = quadratic_variation(&theta, &s);
        let scale = pred.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
        for (a, b) in qv.iter().zip(&pred) {
            assert!((a - b).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn structure_function_slope() {
        let g = grid(256);
        for alpha in [0.25, 0.4] {
            let s = build_spectrum(g, alpha, (256 / 3) as f64, 0.0, Mollifier::Gaussian).unwrap();
            let radii: Vec<f64> = (0..9).map(|i| 0.15 * 4f64.powf(i as f64 / 8.0)).collect();
            let pts: Vec<(f64, f64)> = radii
                .iter()
                .map(|&r| {
                    // average over directions removes the lattice anisotropy
                    let v: f64 = (0..8)
                        .map(|j| {
                            let th = j as f64 * PI / 16.0;
                            structure_function(&s, (r * th.cos(), r * th.sin()))
                        })
                        .sum::<f64>()
                        / 8.0;
                    (r.ln(), v.ln())
                })
                .collect();
            let slope = fit_slope(&pts);
            assert!((slope - 2.0 * alpha).abs() < 0.15, "alpha {alpha}: slope {slope}");
        }
    }

    fn fit_slope(pts: &[(f64, f64)]) -> f64 {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    }

    #[test]
    fn summary_serializes() {
        let s = spec(16, 0.5, 1.0);
        let json = serde_json::to_string(&s.summary()).unwrap();
        let back: NoiseSummary = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s.summary());
        assert_eq!(back.modes, 2);
    }
}
