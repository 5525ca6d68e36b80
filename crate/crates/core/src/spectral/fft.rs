//! Two-dimensional FFT on square grids, built from `rustfft` row transforms.
//!
//! Plans are cached per thread, so a workspace is never shared between
//! threads. Forward transforms are normalized by `N^-2`, inverse transforms
//! are not normalized.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub(crate) struct Fft2 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
}

impl Fft2 {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Self {
            n,
            forward,
            inverse,
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
        }
    }

    fn run(&mut self, buf: &mut [Complex64], inverse: bool) {
        debug_assert_eq!(buf.len(), self.n * self.n);
        let plan = if inverse { &self.inverse } else { &self.forward };
        // rows, then columns through a transpose
        plan.process_with_scratch(buf, &mut self.scratch);
        transpose_square(buf, self.n);
        plan.process_with_scratch(buf, &mut self.scratch);
        transpose_square(buf, self.n);
    }

    /// Physical samples to spectral coefficients, `f̂(n) = N^-2 Σ f(x_j) e^{-i n·x_j}`.
    pub(crate) fn forward(&mut self, buf: &mut [Complex64]) {
        self.run(buf, false);
        let scale = 1.0 / (self.n * self.n) as f64;
        for c in buf.iter_mut() {
            *c *= scale;
        }
    }

    pub(crate) fn inverse(&mut self, buf: &mut [Complex64]) {
        self.run(buf, true);
    }
}

fn transpose_square(buf: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            buf.swap(i * n + j, j * n + i);
        }
    }
}

thread_local! {
    static PLANS: RefCell<HashMap<usize, Fft2>> = RefCell::new(HashMap::new());
}

/// Runs `f` with this thread's cached transform for resolution `n`.
pub(crate) fn with_fft<R>(n: usize, f: impl FnOnce(&mut Fft2) -> R) -> R {
    PLANS.with(|plans| {
        let mut plans = plans.borrow_mut();
        let plan = plans.entry(n).or_insert_with(|| Fft2::new(n));
        f(plan)
    })
}

/// Index of the wavevector `-n` for flat index `idx` on an `n × n` grid.
#[inline]
pub(crate) fn negated_index(idx: usize, n: usize) -> usize {
    let i1 = idx / n;
    let i2 = idx % n;
    ((n - i1) % n) * n + (n - i2) % n
}

/// Inverse transform of two Hermitian spectra in a single complex pass.
pub(crate) fn inverse_real_pair(a: &[Complex64], b: &[Complex64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let i = Complex64::new(0.0, 1.0);
    let mut buf: Vec<Complex64> = a.iter().zip(b).map(|(x, y)| x + i * y).collect();
    with_fft(n, |fft| fft.inverse(&mut buf));
    let re = buf.iter().map(|z| z.re).collect();
    let im = buf.iter().map(|z| z.im).collect();
    (re, im)
}

pub(crate) fn inverse_real(a: &[Complex64], n: usize) -> Vec<f64> {
    let mut buf = a.to_vec();
    with_fft(n, |fft| fft.inverse(&mut buf));
    buf.into_iter().map(|z| z.re).collect()
}

pub(crate) fn forward_real(x: &[f64], n: usize) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    with_fft(n, |fft| fft.forward(&mut buf));
    buf
}

/// Forward transform of two real arrays in a single complex pass.
pub(crate) fn forward_real_pair(x: &[f64], y: &[f64], n: usize) -> (Vec<Complex64>, Vec<Complex64>) {
    let mut buf: Vec<Complex64> = x
        .iter()
        .zip(y)
        .map(|(&a, &b)| Complex64::new(a, b))
        .collect();
    with_fft(n, |fft| fft.forward(&mut buf));
    let len = buf.len();
    let mut fx = vec![Complex64::new(0.0, 0.0); len];
    let mut fy = vec![Complex64::new(0.0, 0.0); len];
    for idx in 0..len {
        let z = buf[idx];
        let zc = buf[negated_index(idx, n)].conj();
        fx[idx] = 0.5 * (z + zc);
        fy[idx] = Complex64::new(0.0, -0.5) * (z - zc);
    }
    (fx, fy)
}
