//! Radial Fourier profiles of mollifiers.
//!
//! [`gaussian`] is the transform of a Gaussian density. [`CutoffProfile`]
//! describes smooth, compactly supported profiles equal to 1 on `[0, 1]` and
//! 0 on `[2, ∞)`.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::quadrature::{integrate, QuadControls};

/// `exp(-r²/2)`.
#[inline]
pub fn gaussian(r: f64) -> f64 {
    (-0.5 * r * r).exp()
}

/// Transition from 1 to 0 over `[1, 2]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CutoffProfile {
    /// One minus the normalized running integral of the bump `exp(-1/(1-u²))`.
    #[default]
    BumpIntegral,
    /// `1 - g(t)/(g(t) + g(1-t))` with `g(t) = exp(-1/t)`.
    Logistic,
}

impl CutoffProfile {
    pub fn eval(self, r: f64) -> f64 {
        let r = r.abs();
        if r <= 1.0 {
            return 1.0;
        }
        if r >= 2.0 {
            return 0.0;
        }
        let t = r - 1.0;
        match self {
            CutoffProfile::BumpIntegral => 1.0 - bump_cdf(t),
            CutoffProfile::Logistic => {
                let a = smooth_ramp(t);
                let b = smooth_ramp(1.0 - t);
                b / (a + b)
            }
        }
    }
}

#[inline]
fn smooth_ramp(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

/// Bump on `[0, 1]`, centred at 1/2.
#[inline]
fn bump(t: f64) -> f64 {
    let u = 2.0 * t - 1.0;
    if u.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - u * u)).exp()
    }
}

const TABLE_CELLS: usize = 8192;

struct BumpTable {
    cumulative: Vec<f64>,
    total: f64,
}

fn bump_table() -> &'static BumpTable {
    static TABLE: OnceLock<BumpTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let h = 1.0 / TABLE_CELLS as f64;
        let controls = QuadControls {
            tolerance: 1e-17,
            max_panels: 64,
        };
        let mut cumulative = Vec::with_capacity(TABLE_CELLS + 1);
        let mut acc = 0.0;
        cumulative.push(0.0);
        for i in 0..TABLE_CELLS {
            let a = i as f64 * h;
            let piece = integrate(bump, &[a, a + h], controls)
                .map(|r| r.value)
                .unwrap_or_else(|e| match e {
                    crate::quadrature::QuadratureError::Budget { partial, .. } => partial,
                    crate::quadrature::QuadratureError::NonFinite(_) => 0.0,
                });
            acc += piece;
            cumulative.push(acc);
        }
        BumpTable {
            total: acc,
            cumulative,
        }
    })
}

/// Normalized running integral of the bump, by cubic Hermite interpolation
/// of a precomputed table.
fn bump_cdf(t: f64) -> f64 {
    let table = bump_table();
    let h = 1.0 / TABLE_CELLS as f64;
    let x = (t / h).clamp(0.0, TABLE_CELLS as f64);
    let i = (x.floor() as usize).min(TABLE_CELLS - 1);
    let s = x - i as f64;
    let y0 = table.cumulative[i];
    let y1 = table.cumulative[i + 1];
    let d0 = bump(i as f64 * h) * h;
    let d1 = bump((i + 1) as f64 * h) * h;
    let s2 = s * s;
    let s3 = s2 * s;
    let v = (2.0 * s3 - 3.0 * s2 + 1.0) * y0
        + (s3 - 2.0 * s2 + s) * d0
        + (-2.0 * s3 + 3.0 * s2) * y1
        + (s3 - s2) * d1;
    (v / table.total).clamp(0.0, 1.0)
}

/// Fourier profile of the mollifier used for the noise and the velocity kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Mollifier {
    #[default]
    Gaussian,
    Cutoff(CutoffProfile),
}

impl Mollifier {
    /// `ρ̂(δ|ξ|)`, identically 1 when `δ = 0`.
    pub fn transform(self, delta: f64, xi: f64) -> f64 {
        if delta == 0.0 {
            return 1.0;
        }
        let r = delta * xi;
        match self {
            Mollifier::Gaussian => gaussian(r),
            Mollifier::Cutoff(p) => p.eval(r),
        }
    }
}
