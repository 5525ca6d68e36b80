//! Coercivity function of the noise acting on negative Sobolev norms.
//!
//! For a radial cutoff `χ̂` the mollified Green multiplier is
//! `Ĝ^δ(k) = (2π)^{-1} χ̂(δ|k|)² |k|^{β-2}` and
//!
//! `F^δ(n) = ∫ ⟨n−k⟩^{-2-2α} |P⊥_{n−k} n|² (Ĝ^δ(k) − Ĝ^δ(n)) dk`,
//!
//! the Fourier symbol of `κ^δ = Tr((Q(0) − Q) D²G^δ)`, so that
//! `⟨κ^δ ∗ ξ, ξ⟩ = ∫ F^δ |ξ̂|²` and `F^δ < 0` at large `|n|`.
//!
//! The `Ĝ^δ(n)` part integrates in closed form to `Ĝ^δ(n) |n|² π/(2α)`. The
//! remainder `B(n) = ∫ ⟨n−k⟩^{-2-2α} (n×k)²/|n−k|² Ĝ^δ(k) dk` is supported in
//! `|k| ≤ 2/δ` and is computed by nested adaptive quadrature in polar
//! coordinates centred at `k = 0`, where its integrand is `O(|k|^β)`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mollifier::CutoffProfile;
use crate::quadrature::{integrate, integrate_with_error, QuadControls, QuadratureError};
use crate::spectral::Field;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoercivityError {
    #[error("Green multiplier is singular at n = 0")]
    Singular,
    #[error("quadrature did not converge: value {partial} with error {error:e} (tolerance {tolerance:e})")]
    Quadrature { partial: f64, error: f64, tolerance: f64 },
    #[error("delta sequence must be strictly decreasing, positive and of length at least 3")]
    InvalidDeltaSequence,
    #[error("F^delta is not monotone in delta beyond its error bars at delta = {delta}")]
    NonMonotone { delta: f64 },
    #[error("need at least {needed} samples spanning {decades} decades")]
    InsufficientSamples { needed: usize, decades: f64 },
    #[error("no positive K is feasible")]
    Infeasible,
    #[error("field must have zero mean")]
    NonzeroMean,
    #[error("parameters out of range: {0}")]
    InvalidParameters(String),
}

/// Rescaled cutoff `χ̂(δ·)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MollifierSpec {
    pub delta: f64,
    pub profile: CutoffProfile,
}

impl MollifierSpec {
    pub fn new(delta: f64) -> Self {
        Self {
            delta,
            profile: CutoffProfile::default(),
        }
    }

    pub fn with_profile(delta: f64, profile: CutoffProfile) -> Self {
        Self { delta, profile }
    }

    #[inline]
    pub fn cutoff(&self, r: f64) -> f64 {
        self.profile.eval(self.delta * r)
    }

    /// Radius beyond which `χ̂(δ|k|)` vanishes.
    pub fn support(&self) -> f64 {
        2.0 / self.delta
    }
}

#[inline]
fn green_radial(r: f64, beta: f64, m: Option<&MollifierSpec>) -> f64 {
    let base = r.powf(beta - 2.0) / (2.0 * PI);
    match m {
        None => base,
        Some(m) => {
            let c = m.cutoff(r);
            if c == 0.0 {
                0.0
            } else {
                c * c * base
            }
        }
    }
}

/// `Ĝ(n) = (2π)^{-1}|n|^{β-2}`, or `Ĝ^δ(n) = χ̂(δ|n|)² Ĝ(n)`.
pub fn green_multiplier(n: (f64, f64), beta: f64, m: Option<&MollifierSpec>) -> Result<f64, CoercivityError> {
    let r = n.0.hypot(n.1);
    if r == 0.0 {
        return Err(CoercivityError::Singular);
    }
    Ok(green_radial(r, beta, m))
}

/// Tolerance and budget for one evaluation of `F^δ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadSettings {
    /// Absolute error target for `F^δ(n)`.
    pub tolerance: f64,
    pub max_panels: usize,
}

impl Default for QuadSettings {
    fn default() -> Self {
        Self {
            tolerance: 1e-6,
            max_panels: 2000,
        }
    }
}

/// Value with an absolute error bar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl Estimate {
    pub const ZERO: Estimate = Estimate { value: 0.0, error: 0.0 };
}

fn check_parameters(alpha: f64, beta: f64) -> Result<(), CoercivityError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(CoercivityError::InvalidParameters(format!("alpha = {alpha}")));
    }
    if !(beta > 0.0 && beta < 2.0) {
        return Err(CoercivityError::InvalidParameters(format!("beta = {beta}")));
    }
    Ok(())
}

/// Angular integral `∫₀^π ⟨n−k⟩^{-2-2α} (n×k)²/|n−k|² dφ` for `|k| = r`,
/// with `φ` measured from the direction of `n`.
fn angular(rn: f64, r: f64, alpha: f64, tolerance: f64, max_panels: usize) -> (f64, f64) {
    let f = |phi: f64| {
        let (s, c) = phi.sin_cos();
        let d2 = (rn * rn + r * r - 2.0 * rn * r * c).max(0.0);
        let cross = rn * r * s;
        if d2 == 0.0 {
            // (n×k)²/|n−k|² → |n|²(1+cos φ)/2 along the ray k = n
            return rn * rn;
        }
        (1.0 + d2).powf(-1.0 - alpha) * cross * cross / d2
    };
    // the integrand concentrates near φ = 0 on a width |r − |n||/|n|
    let width = ((r - rn).abs() / rn).max(1e-6);
    let mut points = vec![0.0];
    let mut p = width;
    while p < PI {
        points.push(p);
        p *= 4.0;
    }
    points.push(PI);
    let controls = QuadControls { tolerance, max_panels };
    match integrate(f, &points, controls) {
        Ok(res) => (res.value, res.error),
        Err(QuadratureError::Budget { partial, error, .. }) => (partial, error),
        Err(QuadratureError::NonFinite(_)) => (f64::NAN, f64::INFINITY),
    }
}

/// `F^δ(n)` with its quadrature error.
pub fn f_delta(
    n: (f64, f64),
    alpha: f64,
    beta: f64,
    m: &MollifierSpec,
    quad: &QuadSettings,
) -> Result<Estimate, CoercivityError> {
    check_parameters(alpha, beta)?;
    f_delta_radial(n.0.hypot(n.1), alpha, beta, m, quad)
}

/// `F^δ` as a function of `|n|`.
pub fn f_delta_radial(
    rn: f64,
    alpha: f64,
    beta: f64,
    m: &MollifierSpec,
    quad: &QuadSettings,
) -> Result<Estimate, CoercivityError> {
    check_parameters(alpha, beta)?;
    if rn == 0.0 {
        return Ok(Estimate::ZERO);
    }
    if !(m.delta > 0.0 && m.delta.is_finite()) {
        return Err(CoercivityError::InvalidParameters(format!("delta = {}", m.delta)));
    }
    let analytic = green_radial(rn, beta, Some(m)) * rn * rn * PI / (2.0 * alpha);
    let support = m.support();
    // inner errors may use a twentieth of the budget, spread uniformly over the radii
    let inner_budget = 0.05 * quad.tolerance / support;
    let outer = |r: f64| {
        if r == 0.0 {
            return (0.0, 0.0);
        }
        let weight = 2.0 * r * green_radial(r, beta, Some(m));
        if weight == 0.0 {
            return (0.0, 0.0);
        }
        let tol = (inner_budget / weight).max(1e-15);
        let (v, e) = angular(rn, r, alpha, tol, quad.max_panels);
        (weight * v, weight * e)
    };
    let mut points = vec![0.0, support, 0.5 * support];
    for off in [-3.0, -1.0, 0.0, 1.0, 3.0] {
        let p = rn + off;
        if p > 0.0 && p < support {
            points.push(p);
        }
    }
    let controls = QuadControls {
        tolerance: 0.95 * quad.tolerance,
        max_panels: quad.max_panels,
    };
    match integrate_with_error(outer, &points, controls) {
        Ok(res) => Ok(Estimate {
            value: res.value - analytic,
            error: res.error,
        }),
        Err(QuadratureError::Budget { partial, error, .. }) => Err(CoercivityError::Quadrature {
            partial: partial - analytic,
            error,
            tolerance: quad.tolerance,
        }),
        Err(QuadratureError::NonFinite(_)) => Err(CoercivityError::Quadrature {
            partial: f64::NAN,
            error: f64::INFINITY,
            tolerance: quad.tolerance,
        }),
    }
}

/// Midpoint rule for `F^δ((r, 0))` on the grid `h(Z + 1/2)²` in `m = n − k`
/// over the disc `|m| ≤ radius`, plus the closed-form tail of the `Ĝ^δ(n)`
/// part outside it.
pub fn fixed_grid_sum(rn: f64, alpha: f64, beta: f64, m: &MollifierSpec, h: f64, radius: f64) -> f64 {
    let cells = (radius / h).round() as i64;
    let g_n = green_radial(rn, beta, Some(m));
    let (mut plain, mut weighted) = (0.0, 0.0);
    for i in -cells..cells {
        let m1 = (i as f64 + 0.5) * h;
        for j in 0..cells {
            let m2 = (j as f64 + 0.5) * h;
            let m_sq = m1 * m1 + m2 * m2;
            if m_sq > radius * radius {
                break;
            }
            let w = (1.0 + m_sq).powf(-1.0 - alpha) * rn * rn * m2 * m2 / m_sq;
            plain += w;
            let k = (rn - m1).hypot(m2);
            weighted += w * green_radial(k, beta, Some(m));
        }
    }
    let tail = g_n * rn * rn * PI * (1.0 + radius * radius).powf(-alpha) / (2.0 * alpha);
    2.0 * h * h * (weighted - g_n * plain) - tail
}

/// [`fixed_grid_sum`] at `h`, with `|S_h − S_{2h}|` as the error.
pub fn fixed_grid_estimate(rn: f64, alpha: f64, beta: f64, m: &MollifierSpec, h: f64, radius: f64) -> Result<Estimate, CoercivityError> {
    check_parameters(alpha, beta)?;
    if !(h > 0.0 && radius > h) {
        return Err(CoercivityError::InvalidParameters(format!("grid step {h}, radius {radius}")));
    }
    let fine = fixed_grid_sum(rn, alpha, beta, m, h, radius);
    let coarse = fixed_grid_sum(rn, alpha, beta, m, 2.0 * h, radius);
    Ok(Estimate {
        value: fine,
        error: (fine - coarse).abs(),
    })
}

/// Rate at which `F^δ(n)` approaches its limit once `δ|n| ≤ 1`.
pub fn richardson_exponent(alpha: f64, beta: f64) -> f64 {
    2.0 + 2.0 * alpha - beta
}

/// Extrapolated limit together with the values it was built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitEstimate {
    pub value: f64,
    pub error: f64,
    /// `(δ, F^δ, error)` per level.
    pub levels: Vec<(f64, f64, f64)>,
}

/// `F(n) = lim_{δ→0} F^δ(n)` by Richardson extrapolation over `deltas`.
pub fn f_limit(
    n: (f64, f64),
    alpha: f64,
    beta: f64,
    deltas: &[f64],
    profile: CutoffProfile,
    quad: &QuadSettings,
) -> Result<LimitEstimate, CoercivityError> {
    check_parameters(alpha, beta)?;
    if deltas.len() < 3 || deltas.iter().any(|d| !(*d > 0.0)) || deltas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(CoercivityError::InvalidDeltaSequence);
    }
    let rn = n.0.hypot(n.1);
    if rn == 0.0 {
        return Ok(LimitEstimate {
            value: 0.0,
            error: 0.0,
            levels: deltas.iter().map(|&d| (d, 0.0, 0.0)).collect(),
        });
    }
    let levels = deltas
        .iter()
        .map(|&d| {
            let est = f_delta_radial(rn, alpha, beta, &MollifierSpec::with_profile(d, profile), quad)?;
            Ok((d, est.value, est.error))
        })
        .collect::<Result<Vec<_>, CoercivityError>>()?;
    extrapolate(levels, richardson_exponent(alpha, beta))
}

fn extrapolate(levels: Vec<(f64, f64, f64)>, p: f64) -> Result<LimitEstimate, CoercivityError> {
    // the increments must keep one sign unless they are within the error bars
    let mut sign = 0.0;
    for w in levels.windows(2) {
        let d = w[1].1 - w[0].1;
        if d.abs() <= w[0].2 + w[1].2 {
            continue;
        }
        if sign != 0.0 && d.signum() != sign {
            return Err(CoercivityError::NonMonotone { delta: w[1].0 });
        }
        sign = d.signum();
    }
    let extrapolants: Vec<(f64, f64)> = levels
        .windows(2)
        .map(|w| {
            let factor = (w[0].0 / w[1].0).powf(p);
            let value = w[1].1 + (w[1].1 - w[0].1) / (factor - 1.0);
            let error = (factor * w[1].2 + w[0].2) / (factor - 1.0);
            (value, error)
        })
        .collect();
    let last = extrapolants[extrapolants.len() - 1];
    let prev = extrapolants[extrapolants.len() - 2];
    Ok(LimitEstimate {
        value: last.0,
        error: (last.0 - prev.0).abs() + last.1,
        levels,
    })
}

/// Fitted constants of `F(r) ≤ −K r^{β−2α} + C r^{β−2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoercivityFit {
    pub k: f64,
    pub c: f64,
    pub r_min: f64,
    pub r_max: f64,
}

/// Largest `K` compatible with a given `C`: `min_i (C s_i + t_i)` with
/// `s_i = r_i^{2α−2}`, `t_i = −F_i r_i^{2α−β}`.
pub fn implied_k(samples: &[(f64, f64)], alpha: f64, beta: f64, c: f64) -> f64 {
    samples
        .iter()
        .map(|&(r, f)| c * r.powf(2.0 * alpha - 2.0) - f * r.powf(2.0 * alpha - beta))
        .fold(f64::INFINITY, f64::min)
}

/// Fits `(K, C)` to samples `(|n|, F)`.
///
/// `K(C)` is concave, piecewise linear and increasing; past the point where
/// the largest radius becomes the binding constraint it only grows with the
/// smallest slope. The fit returns that knee: the smallest `C` from which
/// the large-radius decay alone limits `K`.
pub fn fit_coercivity(samples: &[(f64, f64)], alpha: f64, beta: f64) -> Result<CoercivityFit, CoercivityError> {
    check_parameters(alpha, beta)?;
    let decades = 1.5;
    let r_min = samples.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let r_max = samples.iter().map(|s| s.0).fold(0.0, f64::max);
    if samples.len() < 5 || !(r_min > 0.0) || (r_max / r_min).log10() < decades - 1e-12 {
        return Err(CoercivityError::InsufficientSamples { needed: 5, decades });
    }
    if samples.iter().all(|s| s.1 > 0.0) {
        return Err(CoercivityError::Infeasible);
    }
    let st: Vec<(f64, f64)> = samples
        .iter()
        .map(|&(r, f)| (r.powf(2.0 * alpha - 2.0), -f * r.powf(2.0 * alpha - beta)))
        .collect();
    let far = samples
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .0.total_cmp(&b.1 .0))
        .map(|(i, _)| i)
        .expect("nonempty");
    let (s_far, t_far) = st[far];
    let c = st
        .iter()
        .filter(|(s, _)| *s > s_far)
        .map(|(s, t)| (t_far - t) / (s - s_far))
        .fold(0.0, f64::max);
    let k = implied_k(samples, alpha, beta, c);
    if !(k > 0.0) {
        return Err(CoercivityError::Infeasible);
    }
    Ok(CoercivityFit { k, c, r_min, r_max })
}

/// One sampled radius of a profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub radius: f64,
    pub limit: LimitEstimate,
}

/// Sampled `F^δ` and `F` with the fitted bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoercivityProfile {
    pub alpha: f64,
    pub beta: f64,
    pub profile: CutoffProfile,
    pub tolerance: f64,
    pub rows: Vec<ProfileRow>,
    pub fit: Option<CoercivityFit>,
}

/// `δ`-levels used for radius `r`: `δ₀/max(1, r)` halved `levels − 1` times.
pub fn delta_levels(r: f64, delta0: f64, levels: usize) -> Vec<f64> {
    let top = delta0 / r.max(1.0);
    (0..levels).map(|j| top * 0.5f64.powi(j as i32)).collect()
}

/// Samples `F` at `radii` (in parallel) and fits `(K, C)`.
pub fn build_profile(
    alpha: f64,
    beta: f64,
    radii: &[f64],
    profile: CutoffProfile,
    quad: &QuadSettings,
) -> Result<CoercivityProfile, CoercivityError> {
    check_parameters(alpha, beta)?;
    let rows = radii
        .par_iter()
        .map(|&r| {
            let limit = f_limit((r, 0.0), alpha, beta, &delta_levels(r, 0.5, 3), profile, quad)?;
            Ok(ProfileRow { radius: r, limit })
        })
        .collect::<Result<Vec<_>, CoercivityError>>()?;
    let samples: Vec<(f64, f64)> = rows.iter().map(|r| (r.radius, r.limit.value)).collect();
    let fit = fit_coercivity(&samples, alpha, beta).ok();
    Ok(CoercivityProfile {
        alpha,
        beta,
        profile,
        tolerance: quad.tolerance,
        rows,
        fit,
    })
}

impl CoercivityProfile {
    /// CSV with one line per `(radius, δ)` level.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("radius,delta,F_delta,error,F_limit,limit_error\n");
        for row in &self.rows {
            for &(d, v, e) in &row.limit.levels {
                out.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    row.radius, d, v, e, row.limit.value, row.limit.error
                ));
            }
        }
        out
    }

    pub fn samples(&self) -> Vec<(f64, f64)> {
        self.rows.iter().map(|r| (r.radius, r.limit.value)).collect()
    }
}

/// `F^δ` evaluator with a radius-keyed cache shared between threads.
pub struct CoercivityEvaluator {
    alpha: f64,
    beta: f64,
    mollifier: MollifierSpec,
    quad: QuadSettings,
    cache: Mutex<HashMap<u64, Estimate>>,
}

impl CoercivityEvaluator {
    pub fn new(alpha: f64, beta: f64, mollifier: MollifierSpec, quad: QuadSettings) -> Result<Self, CoercivityError> {
        check_parameters(alpha, beta)?;
        Ok(Self {
            alpha,
            beta,
            mollifier,
            quad,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn f_delta(&self, r: f64) -> Result<Estimate, CoercivityError> {
        let key = r.to_bits();
        if let Some(e) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(*e);
        }
        let est = f_delta_radial(r, self.alpha, self.beta, &self.mollifier, &self.quad)?;
        self.cache.lock().expect("cache lock").insert(key, est);
        Ok(est)
    }

    pub fn cached_radii(&self) -> usize {
        self.cache.lock().expect("cache lock").len()
    }

    /// `Σ_n F^δ(n) |ξ̂(n)|² L²` over the retained modes.
    pub fn pairing(&self, xi: &Field) -> Result<Estimate, CoercivityError> {
        let grid = *xi.grid();
        let scale = xi.spectral().iter().map(|c| c.norm()).fold(0.0, f64::max);
        if xi.mean().abs() > 1e-12 * scale.max(f64::MIN_POSITIVE) {
            return Err(CoercivityError::NonzeroMean);
        }
        // group modes by integer radius so each F^δ is evaluated once
        let mut weights: HashMap<i64, f64> = HashMap::new();
        for (idx, c) in xi.spectral().iter().enumerate() {
            if idx == 0 || !grid.is_retained_index(idx) || c.norm_sqr() == 0.0 {
                continue;
            }
            let (k1, k2) = grid.integer_wavevector(idx);
            *weights.entry(k1 * k1 + k2 * k2).or_default() += c.norm_sqr();
        }
        let k0 = grid.base_wavenumber();
        let mut keys: Vec<i64> = weights.keys().copied().collect();
        keys.sort_unstable();
        let values = keys
            .par_iter()
            .map(|&key| self.f_delta(k0 * (key as f64).sqrt()))
            .collect::<Result<Vec<_>, CoercivityError>>()?;
        let mut total = Estimate::ZERO;
        for (key, est) in keys.iter().zip(values) {
            let w = weights[key] * grid.area();
            total.value += est.value * w;
            total.error += est.error * w;
        }
        Ok(total)
    }
}

/// `⟨κ^δ ∗ ξ, ξ⟩` in its Fourier form.
pub fn kappa_pairing(
    xi: &Field,
    alpha: f64,
    beta: f64,
    m: &MollifierSpec,
    quad: &QuadSettings,
) -> Result<Estimate, CoercivityError> {
    CoercivityEvaluator::new(alpha, beta, *m, *quad)?.pairing(xi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn green_examples() {
        assert_relative_eq!(green_multiplier((1.0, 0.0), 0.5, None).unwrap(), 1.0 / (2.0 * PI));
        assert_eq!(green_multiplier((0.0, 0.0), 0.5, None), Err(CoercivityError::Singular));
        let m = MollifierSpec::new(0.1);
        assert_eq!(green_multiplier((20.0, 0.0), 0.5, Some(&m)).unwrap(), 0.0);
        assert_eq!(green_multiplier((30.0, 1.0), 0.5, Some(&m)).unwrap(), 0.0);
        for n in [(1.0, 2.0), (0.0, 10.0), (6.0, -8.0)] {
            assert_eq!(
                green_multiplier(n, 0.5, Some(&m)).unwrap(),
                green_multiplier(n, 0.5, None).unwrap()
            );
        }
    }

    #[test]
    fn zero_wavevector() {
        let m = MollifierSpec::new(0.1);
        let q = QuadSettings::default();
        assert_eq!(f_delta((0.0, 0.0), 0.4, 0.6, &m, &q).unwrap(), Estimate::ZERO);
        let lim = f_limit((0.0, 0.0), 0.4, 0.6, &[0.1, 0.05, 0.025], CutoffProfile::default(), &q).unwrap();
        assert_eq!(lim.value, 0.0);
    }

    #[test]
    fn rotation_invariance() {
        let m = MollifierSpec::new(0.05);
        let q = QuadSettings {
            tolerance: 1e-6,
            max_panels: 2000,
        };
        let a = f_delta((2.0, 0.0), 0.4, 0.6, &m, &q).unwrap();
        let b = f_delta((0.0, 2.0), 0.4, 0.6, &m, &q).unwrap();
        let c = f_delta((2f64.sqrt(), -(2f64.sqrt())), 0.4, 0.6, &m, &q).unwrap();
        assert!((a.value - b.value).abs() <= 2.0 * q.tolerance);
        assert!((a.value - c.value).abs() <= 2.0 * q.tolerance);
    }

    #[test]
    fn tolerance_doubling_is_consistent() {
        let m = MollifierSpec::new(0.1);
        for tol in [1e-5, 1e-6] {
            let fine = QuadSettings {
                tolerance: tol,
                max_panels: 2000,
            };
            let coarse = QuadSettings {
                tolerance: 2.0 * tol,
                max_panels: 2000,
            };
            let a = f_delta((3.0, 1.0), 0.3, 0.4, &m, &fine).unwrap();
            let b = f_delta((3.0, 1.0), 0.3, 0.4, &m, &coarse).unwrap();
            assert!((a.value - b.value).abs() <= a.error + b.error);
            assert!(a.error <= tol && b.error <= 2.0 * tol);
        }
    }

    #[test]
    fn brute_force_polar_cross_check() {
        // plain midpoint rule in polar coordinates around k = 0 for B, checked
        // against the adaptive value at a small |n|
        let (alpha, beta, rn) = (0.4, 0.6, 1.0);
        let m = MollifierSpec::new(0.5);
        let q = QuadSettings {
            tolerance: 1e-7,
            max_panels: 4000,
        };
        let adaptive = f_delta((rn, 0.0), alpha, beta, &m, &q).unwrap();
        let (nr, nphi) = (4000usize, 2000usize);
        let (hr, hphi) = (4.0 / nr as f64, PI / nphi as f64);
        let mut b = 0.0;
        for i in 0..nr {
            let r = (i as f64 + 0.5) * hr;
            let g = green_radial(r, beta, Some(&m));
            let mut row = 0.0;
            for j in 0..nphi {
                let phi = (j as f64 + 0.5) * hphi;
                let d2 = rn * rn + r * r - 2.0 * rn * r * phi.cos();
                let cross = rn * r * phi.sin();
                row += (1.0 + d2).powf(-1.0 - alpha) * cross * cross / d2;
            }
            b += 2.0 * r * g * row * hphi * hr;
        }
        let brute = b - green_radial(rn, beta, Some(&m)) * rn * rn * PI / (2.0 * alpha);
        assert!((brute - adaptive.value).abs() < 1e-4, "{brute} vs {}", adaptive.value);
    }

    #[test]
    fn fit_recovers_synthetic_constants() {
        let (alpha, beta) = (0.4, 0.6);
        let samples: Vec<(f64, f64)> = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0]
            .iter()
            .map(|&r: &f64| (r, -2.0 * r.powf(beta - 2.0 * alpha) + 3.0 * r.powf(beta - 2.0)))
            .collect();
        let fit = fit_coercivity(&samples, alpha, beta).unwrap();
        assert_relative_eq!(fit.c, 3.0, max_relative = 1e-12);
        assert!(fit.k >= 2.0 - 1e-12);
        // every sample satisfies the fitted bound
        for &(r, f) in &samples {
            assert!(f <= -fit.k * r.powf(beta - 2.0 * alpha) + fit.c * r.powf(beta - 2.0) + 1e-12);
        }
        // the scanned K(C) is increasing and changes slope at the knee
        let grid: Vec<f64> = (0..=600).map(|i| i as f64 * 0.01).collect();
        let ks: Vec<f64> = grid.iter().map(|&c| implied_k(&samples, alpha, beta, c)).collect();
        assert!(ks.windows(2).all(|w| w[1] >= w[0]));
        let s_far = 64f64.powf(2.0 * alpha - 2.0);
        for (c, k) in grid.iter().zip(&ks) {
            if *c >= 3.0 {
                assert_relative_eq!(*k, fit.k + (c - 3.0) * s_far, max_relative = 1e-9);
            } else {
                assert!(*k < fit.k + (c - 3.0) * s_far + 1e-12);
            }
        }
    }

    #[test]
    fn fit_rejects_positive_or_sparse_samples() {
        let pos: Vec<(f64, f64)> = (0..6).map(|i| (2f64.powi(i), 1.0)).collect();
        assert_eq!(fit_coercivity(&pos, 0.4, 0.6), Err(CoercivityError::Infeasible));
        let few: Vec<(f64, f64)> = (0..4).map(|i| (2f64.powi(i), -1.0)).collect();
        assert!(matches!(
            fit_coercivity(&few, 0.4, 0.6),
            Err(CoercivityError::InsufficientSamples { .. })
        ));
        let narrow: Vec<(f64, f64)> = (0..6).map(|i| (1.0 + i as f64, -1.0)).collect();
        assert!(fit_coercivity(&narrow, 0.4, 0.6).is_err());
    }

    #[test]
    fn extrapolation_of_exact_power_law() {
        let p = 2.5;
        let levels: Vec<(f64, f64, f64)> = [0.1, 0.05, 0.025]
            .iter()
            .map(|&d: &f64| (d, -1.0 + 3.0 * d.powf(p), 0.0))
            .collect();
        let lim = extrapolate(levels, p).unwrap();
        assert!((lim.value + 1.0).abs() < 1e-13);
        let bumpy = vec![(0.1, 1.0, 1e-6), (0.05, 0.5, 1e-6), (0.025, 0.9, 1e-6)];
        assert!(matches!(extrapolate(bumpy, p), Err(CoercivityError::NonMonotone { .. })));
    }

    #[test]
    fn delta_sequence_validation() {
        let q = QuadSettings::default();
        assert_eq!(
            f_limit((1.0, 0.0), 0.4, 0.6, &[0.1, 0.2, 0.05], CutoffProfile::default(), &q),
            Err(CoercivityError::InvalidDeltaSequence)
        );
        assert_eq!(
            f_limit((1.0, 0.0), 0.4, 0.6, &[0.1, 0.05], CutoffProfile::default(), &q),
            Err(CoercivityError::InvalidDeltaSequence)
        );
    }

    #[test]
    fn csv_layout() {
        let prof = CoercivityProfile {
            alpha: 0.4,
            beta: 0.6,
            profile: CutoffProfile::default(),
            tolerance: 1e-4,
            rows: vec![ProfileRow {
                radius: 2.0,
                limit: LimitEstimate {
                    value: -0.5,
                    error: 1e-4,
                    levels: vec![(0.1, -0.4, 1e-5), (0.05, -0.45, 1e-5)],
                },
            }],
            fit: None,
        };
        let csv = prof.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "radius,delta,F_delta,error,F_limit,limit_error");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("2,0.1,-0.4,"));
    }
}
