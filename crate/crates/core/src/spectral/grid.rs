use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::SpectralError;

/// Uniform discretization of the periodic square `[0, L)²`.
///
/// Wavevectors are `(2π/L)·(k1, k2)` with integer components in `[-N/2, N/2)`.
/// A mode is retained by the dealiasing filter when both `|k_i|` are at most
/// `dealias_fraction · N/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusGrid {
    n: usize,
    length: f64,
    dealias_fraction: f64,
}

pub const DEFAULT_DEALIAS_FRACTION: f64 = 2.0 / 3.0;

impl TorusGrid {
    pub fn new(n: usize, length: f64) -> Result<Self, SpectralError> {
        Self::with_dealias(n, length, DEFAULT_DEALIAS_FRACTION)
    }

    pub fn with_dealias(n: usize, length: f64, dealias_fraction: f64) -> Result<Self, SpectralError> {
        if n < 8 || n % 2 != 0 {
            return Err(SpectralError::InvalidGrid(format!(
                "resolution must be even and at least 8, got {n}"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(SpectralError::InvalidGrid(format!(
                "side length must be positive, got {length}"
            )));
        }
        if !(dealias_fraction > 0.0 && dealias_fraction <= 1.0) {
            return Err(SpectralError::InvalidGrid(format!(
                "dealias fraction must lie in (0, 1], got {dealias_fraction}"
            )));
        }
        Ok(Self {
            n,
            length,
            dealias_fraction,
        })
    }

    /// The `2π`-periodic grid most examples and tests use.
    pub fn periodic(n: usize) -> Result<Self, SpectralError> {
        Self::new(n, 2.0 * PI)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn length(&self) -> f64 {
        self.length
    }

    #[inline]
    pub fn dealias_fraction(&self) -> f64 {
        self.dealias_fraction
    }

    /// Grid spacing `L/N`.
    #[inline]
    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    #[inline]
    pub fn cell_area(&self) -> f64 {
        self.spacing() * self.spacing()
    }

    #[inline]
    pub fn area(&self) -> f64 {
        self.length * self.length
    }

    /// Fundamental wavenumber `2π/L`.
    #[inline]
    pub fn base_wavenumber(&self) -> f64 {
        2.0 * PI / self.length
    }

    /// Signed integer wavenumber stored at array index `i`.
    #[inline]
    pub fn integer_wavenumber(&self, i: usize) -> i64 {
        let n = self.n as i64;
        let i = i as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    /// Array index holding integer wavenumber `k` (taken modulo `N`).
    #[inline]
    pub fn index_of(&self, k: i64) -> usize {
        k.rem_euclid(self.n as i64) as usize
    }

    #[inline]
    pub fn flat_index(&self, k1: i64, k2: i64) -> usize {
        self.index_of(k1) * self.n + self.index_of(k2)
    }

    /// Integer wavevector at flat index `idx`.
    #[inline]
    pub fn integer_wavevector(&self, idx: usize) -> (i64, i64) {
        (
            self.integer_wavenumber(idx / self.n),
            self.integer_wavenumber(idx % self.n),
        )
    }

    /// Physical wavevector at flat index `idx`.
    #[inline]
    pub fn wavevector(&self, idx: usize) -> (f64, f64) {
        let (k1, k2) = self.integer_wavevector(idx);
        let k0 = self.base_wavenumber();
        (k0 * k1 as f64, k0 * k2 as f64)
    }

    /// Largest integer `|k_i|` kept by the dealiasing filter.
    pub fn dealias_limit(&self) -> i64 {
        (self.dealias_fraction * (self.n / 2) as f64 + 1e-12).floor() as i64
    }

    #[inline]
    pub fn is_retained(&self, k1: i64, k2: i64) -> bool {
        let lim = self.dealias_limit();
        k1.abs() <= lim && k2.abs() <= lim
    }

    #[inline]
    pub fn is_retained_index(&self, idx: usize) -> bool {
        let (k1, k2) = self.integer_wavevector(idx);
        self.is_retained(k1, k2)
    }

    /// Whether index `idx` lies on the Nyquist row or column.
    #[inline]
    pub fn is_nyquist_index(&self, idx: usize) -> bool {
        let half = self.n / 2;
        idx / self.n == half || idx % self.n == half
    }

    /// Physical coordinate of sample `j` along either axis.
    #[inline]
    pub fn coordinate(&self, j: usize) -> f64 {
        j as f64 * self.spacing()
    }

    /// Physical point of flat sample index `idx` (row index runs along `x₁`).
    #[inline]
    pub fn point(&self, idx: usize) -> (f64, f64) {
        (self.coordinate(idx / self.n), self.coordinate(idx % self.n))
    }

    pub fn same_as(&self, other: &TorusGrid) -> bool {
        self.n == other.n
            && (self.length - other.length).abs() <= 1e-14 * self.length
            && (self.dealias_fraction - other.dealias_fraction).abs() <= 1e-14
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_resolution() {
        assert!(TorusGrid::periodic(6).is_err());
        assert!(TorusGrid::periodic(9).is_err());
        assert!(TorusGrid::new(16, 0.0).is_err());
        assert!(TorusGrid::new(16, -1.0).is_err());
    }

    #[test]
    fn wavenumber_layout() {
        let g = TorusGrid::periodic(8).unwrap();
        let ks: Vec<i64> = (0..8).map(|i| g.integer_wavenumber(i)).collect();
        assert_eq!(ks, vec![0, 1, 2, 3, -4, -3, -2, -1]);
        assert_eq!(g.index_of(-1), 7);
        assert_eq!(g.flat_index(1, -1), 8 + 7);
    }

    #[test]
    fn retained_set_is_symmetric() {
        for n in [8usize, 16, 64, 256] {
            let g = TorusGrid::periodic(n).unwrap();
            for idx in 0..g.len() {
                let (k1, k2) = g.integer_wavevector(idx);
                if g.is_retained(k1, k2) {
                    assert!(g.is_retained(-k1, -k2));
                    assert!(!g.is_nyquist_index(idx));
                }
            }
        }
    }

    #[test]
    fn dealias_limits() {
        assert_eq!(TorusGrid::periodic(64).unwrap().dealias_limit(), 21);
        assert_eq!(TorusGrid::periodic(256).unwrap().dealias_limit(), 85);
        assert_eq!(TorusGrid::periodic(128).unwrap().dealias_limit(), 42);
    }
}
