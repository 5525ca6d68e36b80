//! Spectral algebra on the periodic square.
//!
//! Conventions: `f̂(n) = N^-2 Σ_j f(x_j) e^{-i n·x_j}`, so that
//! `‖f‖²_{L²} = L² Σ_n |f̂(n)|²`. Homogeneous multipliers `|n|^s` annihilate
//! the zero mode whenever `s ≠ 0`.

mod fft;
mod field;
mod grid;

use rand::Rng;
use rustfft::num_complex::Complex64;
use thiserror::Error;

pub use field::{Field, VectorField};
pub(crate) use field::{fields_from_physical_pair, fields_from_spectral_pair};
pub use grid::{TorusGrid, DEFAULT_DEALIAS_FRACTION};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("field contains non-finite values")]
    NonFinite,
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("multiplier exponent {0} outside [-3, 3]")]
    ExponentOutOfRange(f64),
    #[error("homogeneous norm of order {order} undefined for a field with mean {mean:e}")]
    NonzeroMean { order: f64, mean: f64 },
    #[error("Lebesgue exponent must be at least 1, got {0}")]
    InvalidLebesgueExponent(f64),
    #[error("beta must lie in (0, 1), got {0}")]
    InvalidBeta(f64),
    #[error("vector field is not divergence free (relative defect {defect:e})")]
    NotDivergenceFree { defect: f64 },
}

/// Relative size below which a mean is treated as zero for homogeneous norms.
const MEAN_TOLERANCE: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
fn modulus(n1: f64, n2: f64) -> f64 {
    (n1 * n1 + n2 * n2).sqrt()
}

/// `Λ^s f` with `Λ = (-Δ)^{1/2}`.
pub fn fractional_laplacian(f: &Field, s: f64) -> Result<Field, SpectralError> {
    if !(-3.0..=3.0).contains(&s) {
        return Err(SpectralError::ExponentOutOfRange(s));
    }
    f.ensure_finite()?;
    if s == 0.0 {
        return Ok(f.clone());
    }
    Ok(f.map_spectral(|n1, n2| {
        let r = modulus(n1, n2);
        if r == 0.0 {
            ZERO
        } else {
            Complex64::new(r.powf(s), 0.0)
        }
    }))
}

/// Velocity `u = -∇⊥ Λ^{β-2} θ`.
pub fn biot_savart_velocity(theta: &Field, beta: f64) -> Result<VectorField, SpectralError> {
    biot_savart_with(theta, beta, |_, _| 1.0)
}

/// Biot–Savart law with the kernel multiplier scaled by `damping(n)`.
pub(crate) fn biot_savart_with(
    theta: &Field,
    beta: f64,
    damping: impl Fn(f64, f64) -> f64,
) -> Result<VectorField, SpectralError> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(SpectralError::InvalidBeta(beta));
    }
    theta.ensure_finite()?;
    let grid = *theta.grid();
    let len = grid.len();
    let mut a = vec![ZERO; len];
    let mut b = vec![ZERO; len];
    let src = theta.spectral();
    for idx in 0..len {
        if idx == 0 || grid.is_nyquist_index(idx) {
            continue;
        }
        let (n1, n2) = grid.wavevector(idx);
        let w = modulus(n1, n2).powf(beta - 2.0) * damping(n1, n2);
        // -i (-n2, n1) w θ̂
        let t = src[idx] * w;
        a[idx] = I * n2 * t;
        b[idx] = -I * n1 * t;
    }
    let (u1, u2) = fields_from_spectral_pair(grid, a, b);
    Ok(VectorField::new_divergence_free(u1, u2))
}

/// Homogeneous Sobolev norm `‖f‖_{Ḣ^s}` as a lattice sum.
pub fn sobolev_norm(f: &Field, s: f64) -> Result<f64, SpectralError> {
    f.ensure_finite()?;
    if s < 0.0 {
        let scale = f.spectral().iter().map(|c| c.norm()).fold(0.0, f64::max);
        let mean = f.mean();
        if mean.abs() > MEAN_TOLERANCE * scale.max(f64::MIN_POSITIVE) && mean != 0.0 {
            return Err(SpectralError::NonzeroMean { order: s, mean });
        }
    }
    Ok(sobolev_norm_fluctuation(f, s))
}

/// `Ḣ^s` norm of `f − mean(f)`; never fails.
pub fn sobolev_norm_fluctuation(f: &Field, s: f64) -> f64 {
    let grid = f.grid();
    let sum: f64 = f
        .spectral()
        .iter()
        .enumerate()
        .skip(1)
        .map(|(idx, c)| {
            let (n1, n2) = grid.wavevector(idx);
            let r2 = n1 * n1 + n2 * n2;
            let w = if s == 0.0 { 1.0 } else { r2.powf(s) };
            w * c.norm_sqr()
        })
        .sum();
    (sum * grid.area()).sqrt()
}

/// Inhomogeneous norm `‖f‖_{H^s}` with weight `(1 + |n|²)^s`.
pub fn inhomogeneous_sobolev_norm(f: &Field, s: f64) -> f64 {
    let grid = f.grid();
    let sum: f64 = f
        .spectral()
        .iter()
        .enumerate()
        .map(|(idx, c)| {
            let (n1, n2) = grid.wavevector(idx);
            (1.0 + n1 * n1 + n2 * n2).powf(s) * c.norm_sqr()
        })
        .sum();
    (sum * grid.area()).sqrt()
}

/// `‖f‖_{L^q}` by equal-weight quadrature; `q = ∞` gives the sample maximum.
pub fn lebesgue_norm(f: &Field, q: f64) -> Result<f64, SpectralError> {
    if q.is_nan() || q < 1.0 {
        return Err(SpectralError::InvalidLebesgueExponent(q));
    }
    f.ensure_finite()?;
    let samples = f.physical();
    if q.is_infinite() {
        return Ok(samples.iter().fold(0.0, |m, v| m.max(v.abs())));
    }
    let area = f.grid().cell_area();
    let sum: f64 = if q == 1.0 {
        samples.iter().map(|v| v.abs()).sum()
    } else if q == 2.0 {
        samples.iter().map(|v| v * v).sum()
    } else {
        samples.iter().map(|v| v.abs().powf(q)).sum()
    };
    Ok((sum * area).powf(1.0 / q))
}

/// Pointwise product with the 2/3 rule applied before and after multiplication.
pub fn dealias_product(a: &Field, b: &Field) -> Result<Field, SpectralError> {
    a.check_grid(b)?;
    let grid = *a.grid();
    let fa = a.clone().dealiased();
    let fb = b.clone().dealiased();
    let (pa, pb) = field::fields_from_spectral_pair(grid, fa.into_spectral(), fb.into_spectral());
    let prod: Vec<f64> = pa
        .physical()
        .iter()
        .zip(pb.physical())
        .map(|(x, y)| x * y)
        .collect();
    Ok(Field::from_physical(grid, prod)?.dealiased())
}

/// `∇f` (no divergence-free flag).
pub fn gradient(f: &Field) -> VectorField {
    let grid = *f.grid();
    let len = grid.len();
    let mut a = vec![ZERO; len];
    let mut b = vec![ZERO; len];
    for (idx, c) in f.spectral().iter().enumerate() {
        if grid.is_nyquist_index(idx) {
            continue;
        }
        let (n1, n2) = grid.wavevector(idx);
        a[idx] = I * n1 * c;
        b[idx] = I * n2 * c;
    }
    let (u1, u2) = fields_from_spectral_pair(grid, a, b);
    VectorField::new(u1, u2).expect("same grid")
}

/// Spectral divergence `i n·v̂`, zero mean by construction.
pub fn divergence_of(v1: &Field, v2: &Field) -> Field {
    let grid = *v1.grid();
    let a = v1.spectral();
    let b = v2.spectral();
    let coeffs = (0..grid.len())
        .map(|idx| {
            if grid.is_nyquist_index(idx) {
                return ZERO;
            }
            let (n1, n2) = grid.wavevector(idx);
            I * (a[idx] * n1 + b[idx] * n2)
        })
        .collect();
    Field::from_spectral(grid, coeffs).expect("grid length")
}

pub fn laplacian(f: &Field) -> Field {
    f.map_spectral(|n1, n2| Complex64::new(-(n1 * n1 + n2 * n2), 0.0))
}

/// `ρ^δ ∗ f` with the Gaussian mollifier.
pub fn mollify(f: &Field, delta: f64) -> Field {
    if delta == 0.0 {
        return f.clone();
    }
    f.map_spectral(|n1, n2| Complex64::new(crate::mollifier::gaussian(delta * modulus(n1, n2)), 0.0))
}

/// Random real field with independent Gaussian coefficients on the integer
/// shell `1 ≤ |k|_∞ ≤ band`, amplitude decaying like `|k|^-decay`, zero mean.
pub fn random_band_limited<R: Rng + ?Sized>(grid: TorusGrid, band: i64, decay: f64, rng: &mut R) -> Field {
    let mut f = Field::zeros(grid);
    let band = band.min(grid.dealias_limit());
    for k1 in 0..=band {
        for k2 in -band..=band {
            if k1 == 0 && k2 <= 0 {
                continue;
            }
            let r = ((k1 * k1 + k2 * k2) as f64).sqrt();
            let amp = r.powf(-decay);
            let c = Complex64::new(normal(rng), normal(rng)) * amp;
            f.set_coefficient(k1, k2, c);
            f.set_coefficient(-k1, -k2, c.conj());
        }
    }
    f
}

/// Standard normal draw by Box–Muller from two uniforms.
pub(crate) fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn grid(n: usize) -> TorusGrid {
        TorusGrid::periodic(n).unwrap()
    }

    fn max_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn unit_mode_unchanged_by_any_power() {
        let g = grid(32);
        let f = Field::from_fn(g, |x, _| x.cos());
        let out = fractional_laplacian(&f, -1.0).unwrap();
        assert!(max_diff(out.physical(), f.physical()) < 1e-13);
    }

    #[test]
    fn constant_is_annihilated() {
        let g = grid(16);
        let f = Field::constant(g, 3.0);
        let out = fractional_laplacian(&f, 0.5).unwrap();
        assert!(out.max_abs() == 0.0);
    }

    #[test]
    fn second_power_matches_fd_stencil() {
        let g = grid(32);
        let f = Field::from_fn(g, |x, _| (2.0 * x).cos());
        let out = fractional_laplacian(&f, 2.0).unwrap();
        let expect = Field::from_fn(g, |x, _| 4.0 * (2.0 * x).cos());
        assert!(max_diff(out.physical(), expect.physical()) < 1e-12);
        // -Δ by centred differences approaches the same field as h → 0
        let mut prev = f64::INFINITY;
        for n in [64usize, 128, 256] {
            let h = 2.0 * PI / n as f64;
            let err = (0..n)
                .map(|j| {
                    let x = j as f64 * h;
                    let fd = -((2.0 * (x + h)).cos() - 2.0 * (2.0 * x).cos() + (2.0 * (x - h)).cos()) / (h * h);
                    (fd - 4.0 * (2.0 * x).cos()).abs()
                })
                .fold(0.0, f64::max);
            assert!(err < prev);
            prev = err;
        }
        assert!(prev < 1e-2);
    }

    #[test]
    fn exponent_range_and_finiteness() {
        let g = grid(16);
        let f = Field::from_fn(g, |x, _| x.sin());
        assert!(matches!(
            fractional_laplacian(&f, 3.5),
            Err(SpectralError::ExponentOutOfRange(_))
        ));
        let mut bad = f.clone();
        bad.set_coefficient(1, 0, Complex64::new(f64::NAN, 0.0));
        assert_eq!(fractional_laplacian(&bad, 1.0).unwrap_err(), SpectralError::NonFinite);
    }

    #[test]
    fn biot_savart_of_cosine() {
        let g = grid(32);
        let theta = Field::from_fn(g, |x, _| x.cos());
        for beta in [0.1, 0.5, 0.9] {
            let u = biot_savart_velocity(&theta, beta).unwrap();
            let (u1, u2) = u.physical_pair();
            assert!(u1.iter().all(|v| v.abs() < 1e-14));
            let expect: Vec<f64> = (0..g.len()).map(|i| g.point(i).0.sin()).collect();
            assert!(max_diff(&u2, &expect) < 1e-13);
        }
        // cross-check: streamfunction ψ = Λ^{β-2}θ, u = (∂₂ψ, -∂₁ψ) by finite differences
        let beta = 0.5;
        let psi = fractional_laplacian(&theta, beta - 2.0).unwrap();
        let n = g.n();
        let h = g.spacing();
        let p = psi.physical();
        let u = biot_savart_velocity(&theta, beta).unwrap();
        let (_, u2) = u.physical_pair();
        for j1 in 0..n {
            let fd = -(p[((j1 + 1) % n) * n] - p[((j1 + n - 1) % n) * n]) / (2.0 * h);
            assert!((fd - u2[j1 * n]).abs() < 1e-2);
        }
    }

    #[test]
    fn biot_savart_zero_and_divergence() {
        let g = grid(32);
        let u = biot_savart_velocity(&Field::zeros(g), 0.3).unwrap();
        assert_eq!(u.max_speed(), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let theta = random_band_limited(g, 8, 1.0, &mut rng);
        let u = biot_savart_velocity(&theta, 0.5).unwrap();
        assert!(u.is_flagged_divergence_free());
        let a = u.u1.spectral();
        let b = u.u2.spectral();
        let worst = (0..g.len())
            .map(|idx| {
                let (n1, n2) = g.wavevector(idx);
                (a[idx] * n1 + b[idx] * n2).norm()
            })
            .fold(0.0, f64::max);
        assert!(worst < 1e-12);
        assert!(biot_savart_velocity(&theta, 1.0).is_err());
    }

    #[test]
    fn sobolev_examples() {
        let g = grid(32);
        let f = Field::from_fn(g, |x, _| x.cos());
        let l2 = sobolev_norm(&f, 0.0).unwrap();
        assert_relative_eq!(l2, (2.0 * PI * PI).sqrt(), max_relative = 1e-12);
        for s in [-0.7, 0.3, 1.5] {
            assert_relative_eq!(sobolev_norm(&f, s).unwrap(), l2, max_relative = 1e-12);
        }
        let f2 = Field::from_fn(g, |x, _| (2.0 * x).cos());
        assert_relative_eq!(sobolev_norm(&f2, -1.0).unwrap(), 0.5 * l2, max_relative = 1e-12);
        let with_mean = Field::from_fn(g, |x, _| 1.0 + x.cos());
        assert!(matches!(
            sobolev_norm(&with_mean, -0.5),
            Err(SpectralError::NonzeroMean { .. })
        ));
        assert!(sobolev_norm(&with_mean, 0.5).is_ok());
    }

    #[test]
    fn lebesgue_examples() {
        let g = grid(32);
        let two = Field::constant(g, 2.0);
        assert_relative_eq!(lebesgue_norm(&two, 1.0).unwrap(), 8.0 * PI * PI, max_relative = 1e-13);
        let f = Field::from_fn(g, |x, _| x.cos());
        assert_relative_eq!(lebesgue_norm(&f, f64::INFINITY).unwrap(), 1.0, max_relative = 1e-14);
        assert_relative_eq!(
            lebesgue_norm(&f, 2.0).unwrap(),
            sobolev_norm(&f, 0.0).unwrap(),
            max_relative = 1e-12
        );
        assert!(lebesgue_norm(&f, 0.5).is_err());
    }

    #[test]
    fn product_to_sum() {
        let g = grid(32);
        let f = Field::from_fn(g, |x, _| x.cos());
        let p = dealias_product(&f, &f).unwrap();
        let expect = Field::from_fn(g, |x, _| 0.5 * (1.0 + (2.0 * x).cos()));
        assert!(max_diff(p.physical(), expect.physical()) < 1e-13);
        let z = dealias_product(&Field::zeros(g), &f).unwrap();
        assert!(z.max_abs() < 1e-15);
        let other = Field::zeros(grid(16));
        assert_eq!(dealias_product(&f, &other).unwrap_err(), SpectralError::GridMismatch);
    }

    #[test]
    fn product_matches_direct_convolution() {
        let g = grid(16);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let lim = g.dealias_limit();
        let a = random_band_limited(g, lim, 0.5, &mut rng);
        let b = random_band_limited(g, lim, 0.5, &mut rng);
        let p = dealias_product(&a, &b).unwrap();
        // direct convolution of the retained spectra, truncated to the band
        let mut worst: f64 = 0.0;
        for n1 in -lim..=lim {
            for n2 in -lim..=lim {
                let mut acc = Complex64::new(0.0, 0.0);
                for k1 in -lim..=lim {
                    for k2 in -lim..=lim {
                        let (m1, m2) = (n1 - k1, n2 - k2);
                        if m1.abs() <= lim && m2.abs() <= lim {
                            acc += a.coefficient(k1, k2) * b.coefficient(m1, m2);
                        }
                    }
                }
                worst = worst.max((acc - p.coefficient(n1, n2)).norm());
            }
        }
        assert!(worst < 1e-12, "worst {worst}");
    }

    #[test]
    fn gradient_and_divergence() {
        let g = grid(16);
        let f = Field::from_fn(g, |x, y| (x + 2.0 * y).sin());
        let grad = gradient(&f);
        let (g1, g2) = grad.physical_pair();
        for idx in 0..g.len() {
            let (x, y) = g.point(idx);
            assert!((g1[idx] - (x + 2.0 * y).cos()).abs() < 1e-12);
            assert!((g2[idx] - 2.0 * (x + 2.0 * y).cos()).abs() < 1e-12);
        }
        let div = divergence_of(&grad.u1, &grad.u2);
        let lap = laplacian(&f);
        assert!(max_diff(div.physical(), lap.physical()) < 1e-11);
    }
}
