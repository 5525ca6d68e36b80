use std::sync::OnceLock;

use rustfft::num_complex::Complex64;

use super::fft::{forward_real, forward_real_pair, inverse_real, inverse_real_pair, negated_index};
use super::{SpectralError, TorusGrid};

/// Real scalar field on the torus.
///
/// Spectral coefficients are the canonical state; physical samples are
/// produced on first access and cached until the next mutation.
#[derive(Debug, Clone)]
pub struct Field {
    grid: TorusGrid,
    coeffs: Vec<Complex64>,
    physical: OnceLock<Vec<f64>>,
}

impl Field {
    pub fn zeros(grid: TorusGrid) -> Self {
        Self {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.len()],
            physical: OnceLock::new(),
        }
    }

    pub fn constant(grid: TorusGrid, value: f64) -> Self {
        let mut f = Self::zeros(grid);
        f.coeffs[0] = Complex64::new(value, 0.0);
        f
    }

    pub fn from_physical(grid: TorusGrid, samples: Vec<f64>) -> Result<Self, SpectralError> {
        if samples.len() != grid.len() {
            return Err(SpectralError::LengthMismatch {
                expected: grid.len(),
                got: samples.len(),
            });
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(SpectralError::NonFinite);
        }
        let coeffs = forward_real(&samples, grid.n());
        let physical = OnceLock::new();
        let _ = physical.set(samples);
        Ok(Self {
            grid,
            coeffs,
            physical,
        })
    }

    pub fn from_spectral(grid: TorusGrid, coeffs: Vec<Complex64>) -> Result<Self, SpectralError> {
        if coeffs.len() != grid.len() {
            return Err(SpectralError::LengthMismatch {
                expected: grid.len(),
                got: coeffs.len(),
            });
        }
        Ok(Self {
            grid,
            coeffs,
            physical: OnceLock::new(),
        })
    }

    /// Samples `f(x₁, x₂)` at the grid points.
    pub fn from_fn(grid: TorusGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let samples: Vec<f64> = (0..grid.len())
            .map(|idx| {
                let (x1, x2) = grid.point(idx);
                f(x1, x2)
            })
            .collect();
        let coeffs = forward_real(&samples, grid.n());
        let physical = OnceLock::new();
        let _ = physical.set(samples);
        Self {
            grid,
            coeffs,
            physical,
        }
    }

    #[inline]
    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    #[inline]
    pub fn spectral(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Mutable access to the coefficients; drops the cached physical samples.
    pub fn spectral_mut(&mut self) -> &mut [Complex64] {
        self.physical = OnceLock::new();
        &mut self.coeffs
    }

    pub fn into_spectral(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn physical(&self) -> &[f64] {
        self.physical
            .get_or_init(|| inverse_real(&self.coeffs, self.grid.n()))
    }

    /// Coefficient at integer wavevector `(k1, k2)`.
    pub fn coefficient(&self, k1: i64, k2: i64) -> Complex64 {
        self.coeffs[self.grid.flat_index(k1, k2)]
    }

    pub fn set_coefficient(&mut self, k1: i64, k2: i64, value: Complex64) {
        let idx = self.grid.flat_index(k1, k2);
        self.spectral_mut()[idx] = value;
    }

    /// Spatial mean, i.e. the zero mode.
    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub(crate) fn ensure_finite(&self) -> Result<(), SpectralError> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(SpectralError::NonFinite)
        }
    }

    pub(crate) fn check_grid(&self, other: &Field) -> Result<(), SpectralError> {
        if self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(SpectralError::GridMismatch)
        }
    }

    /// Largest violation of `f̂(-n) = conj(f̂(n))`.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.grid.n();
        (0..self.coeffs.len())
            .filter(|&idx| !self.grid.is_nyquist_index(idx))
            .map(|idx| (self.coeffs[idx] - self.coeffs[negated_index(idx, n)].conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Zeroes every mode outside the retained band.
    pub fn dealias(&mut self) {
        let grid = self.grid;
        for (idx, c) in self.spectral_mut().iter_mut().enumerate() {
            if !grid.is_retained_index(idx) {
                *c = Complex64::new(0.0, 0.0);
            }
        }
    }

    pub fn dealiased(mut self) -> Self {
        self.dealias();
        self
    }

    pub fn is_band_limited(&self) -> bool {
        self.coeffs
            .iter()
            .enumerate()
            .all(|(idx, c)| self.grid.is_retained_index(idx) || c.norm() == 0.0)
    }

    pub fn scale(&mut self, a: f64) {
        for c in self.spectral_mut() {
            *c *= a;
        }
    }

    pub fn scaled(mut self, a: f64) -> Self {
        self.scale(a);
        self
    }

    /// `self += a · other`.
    pub fn axpy(&mut self, a: f64, other: &Field) -> Result<(), SpectralError> {
        self.check_grid(other)?;
        for (c, o) in self.spectral_mut().iter_mut().zip(&other.coeffs) {
            *c += a * o;
        }
        Ok(())
    }

    pub fn sub(&self, other: &Field) -> Result<Field, SpectralError> {
        let mut out = self.clone();
        out.axpy(-1.0, other)?;
        Ok(out)
    }

    pub fn add(&self, other: &Field) -> Result<Field, SpectralError> {
        let mut out = self.clone();
        out.axpy(1.0, other)?;
        Ok(out)
    }

    /// Multiplies coefficient `n` by `m(n)` where `m` sees the physical wavevector.
    pub fn map_spectral(&self, m: impl Fn(f64, f64) -> Complex64) -> Field {
        let grid = self.grid;
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(idx, c)| {
                let (n1, n2) = grid.wavevector(idx);
                c * m(n1, n2)
            })
            .collect();
        Field {
            grid,
            coeffs,
            physical: OnceLock::new(),
        }
    }

    /// Largest absolute sample.
    pub fn max_abs(&self) -> f64 {
        self.physical().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `Σ |f̂(n)|²`, so that `L² · Σ|f̂|² = ‖f‖²_{L²}`.
    pub fn spectral_energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// Pair of scalar components `(u₁, u₂)`.
#[derive(Debug, Clone)]
pub struct VectorField {
    pub u1: Field,
    pub u2: Field,
    divergence_free: bool,
}

impl VectorField {
    pub fn new(u1: Field, u2: Field) -> Result<Self, SpectralError> {
        u1.check_grid(&u2)?;
        Ok(Self {
            u1,
            u2,
            divergence_free: false,
        })
    }

    pub(crate) fn new_divergence_free(u1: Field, u2: Field) -> Self {
        Self {
            u1,
            u2,
            divergence_free: true,
        }
    }

    pub fn zeros(grid: TorusGrid) -> Self {
        Self::new_divergence_free(Field::zeros(grid), Field::zeros(grid))
    }

    pub fn grid(&self) -> &TorusGrid {
        self.u1.grid()
    }

    pub fn is_flagged_divergence_free(&self) -> bool {
        self.divergence_free
    }

    /// Sets the flag after checking `max |n·û(n)| ≤ tol · max |n||û(n)|`.
    pub fn mark_divergence_free(&mut self, tol: f64) -> Result<(), SpectralError> {
        let defect = self.divergence_defect();
        if defect <= tol {
            self.divergence_free = true;
            Ok(())
        } else {
            Err(SpectralError::NotDivergenceFree { defect })
        }
    }

    /// `max_n |n·û(n)| / max_n |n||û(n)|`, zero for the zero field.
    pub fn divergence_defect(&self) -> f64 {
        let grid = self.grid();
        let a = self.u1.spectral();
        let b = self.u2.spectral();
        let mut num: f64 = 0.0;
        let mut den: f64 = 0.0;
        for idx in 0..grid.len() {
            if grid.is_nyquist_index(idx) {
                continue;
            }
            let (n1, n2) = grid.wavevector(idx);
            let d = (a[idx] * n1 + b[idx] * n2).norm();
            let s = (n1 * n1 + n2 * n2).sqrt() * (a[idx].norm_sqr() + b[idx].norm_sqr()).sqrt();
            num = num.max(d);
            den = den.max(s);
        }
        if den == 0.0 {
            0.0
        } else {
            num / den
        }
    }

    /// Physical samples of both components from one packed transform.
    pub fn physical_pair(&self) -> (Vec<f64>, Vec<f64>) {
        if let (Some(a), Some(b)) = (self.u1.physical.get(), self.u2.physical.get()) {
            return (a.clone(), b.clone());
        }
        inverse_real_pair(self.u1.spectral(), self.u2.spectral(), self.grid().n())
    }

    /// `max_x |u(x)|`.
    pub fn max_speed(&self) -> f64 {
        let (a, b) = self.physical_pair();
        a.iter()
            .zip(&b)
            .map(|(x, y)| (x * x + y * y).sqrt())
            .fold(0.0, f64::max)
    }

    pub fn scale(&mut self, a: f64) {
        self.u1.scale(a);
        self.u2.scale(a);
    }
}

/// Builds two fields from physical samples with one packed forward transform.
pub(crate) fn fields_from_physical_pair(grid: TorusGrid, x: Vec<f64>, y: Vec<f64>) -> (Field, Field) {
    let (fx, fy) = forward_real_pair(&x, &y, grid.n());
    (
        Field {
            grid,
            coeffs: fx,
            physical: OnceLock::from(x),
        },
        Field {
            grid,
            coeffs: fy,
            physical: OnceLock::from(y),
        },
    )
}

pub(crate) fn fields_from_spectral_pair(grid: TorusGrid, a: Vec<Complex64>, b: Vec<Complex64>) -> (Field, Field) {
    let (pa, pb) = inverse_real_pair(&a, &b, grid.n());
    (
        Field {
            grid,
            coeffs: a,
            physical: OnceLock::from(pa),
        },
        Field {
            grid,
            coeffs: b,
            physical: OnceLock::from(pb),
        },
    )
}
