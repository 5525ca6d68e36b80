//! Adaptive quadrature of the coercivity function against a brute-force
//! midpoint rule on a uniform grid in `m = n − k`.

use std::f64::consts::PI;

use gsqg_core::coercivity::{f_delta, f_limit, fit_coercivity, kappa_pairing, richardson_exponent, MollifierSpec, QuadSettings};
use gsqg_core::mollifier::CutoffProfile;
use gsqg_core::spectral::{random_band_limited, sobolev_norm, Field, TorusGrid};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const ALPHA: f64 = 0.4;
const BETA: f64 = 0.6;
const DELTAS: [f64; 3] = [0.1, 0.05, 0.025];

/// Oracle values of `F^δ((2, 0))` at `h = 0.01`, with `|S_h − S_{2h}|` as the error.
const ORACLE: [(f64, f64); 3] = [
    (-3.611039510990e-1, 2.290e-8),
    (-3.587628005731e-1, 2.290e-8),
    (-3.582606377830e-1, 2.290e-8),
];

fn green(r: f64, delta: f64) -> f64 {
    let c = CutoffProfile::BumpIntegral.eval(delta * r);
    c * c * r.powf(BETA - 2.0) / (2.0 * PI)
}

/// Midpoint sum over the disc `|m| ≤ radius` plus the exact tail of the
/// `Ĝ(n)` part outside it, for every δ at once.
fn riemann(n1: f64, h: f64, radius: f64) -> Vec<f64> {
    let cells = (radius / h).round() as i64;
    let g_n = green(n1, DELTAS[0]);
    let mut plain = 0.0;
    let mut weighted = [0.0; 3];
    for i in -cells..cells {
        let m1 = (i as f64 + 0.5) * h;
        let mut row = 0.0;
        let mut row_w = [0.0; 3];
        for j in 0..cells {
            let m2 = (j as f64 + 0.5) * h;
            let m_sq = m1 * m1 + m2 * m2;
            if m_sq > radius * radius {
                break;
            }
            // |P⊥_m n|² for n = (n1, 0)
            let proj = n1 * n1 * m2 * m2 / m_sq;
            let w = (1.0 + m_sq).powf(-1.0 - ALPHA) * proj;
            row += w;
            let k1 = n1 - m1;
            let k = (k1 * k1 + m2 * m2).sqrt();
            for (d, acc) in DELTAS.iter().zip(row_w.iter_mut()) {
                if k < 2.0 / d {
                    *acc += w * green(k, *d);
                }
            }
        }
        plain += row;
        for (a, r) in weighted.iter_mut().zip(row_w) {
            *a += r;
        }
    }
    let tail = g_n * n1 * n1 * PI * (1.0 + radius * radius).powf(-ALPHA) / (2.0 * ALPHA);
    // factor 2 for the mirrored half plane m2 < 0
    weighted
        .iter()
        .map(|w| 2.0 * h * h * (w - g_n * plain) - tail)
        .collect()
}

#[test]
#[ignore = "brute-force oracle, about a minute in release"]
fn recompute_oracle() {
    let fine = riemann(2.0, 0.01, 200.0);
    let coarse = riemann(2.0, 0.02, 200.0);
    for ((d, f), c) in DELTAS.iter().zip(&fine).zip(&coarse) {
        println!("delta {d}: ({f:.12e}, {:.3e})", (f - c).abs());
    }
    for (k, (f, c)) in fine.iter().zip(&coarse).enumerate() {
        assert!((f - ORACLE[k].0).abs() < 1e-12);
        assert!(((f - c).abs() - ORACLE[k].1).abs() < 1e-10);
    }
}

fn quad() -> QuadSettings {
    QuadSettings {
        tolerance: 1e-6,
        max_panels: 4000,
    }
}

#[test]
fn adaptive_matches_oracle() {
    for (d, (value, err)) in DELTAS.iter().zip(ORACLE) {
        let est = f_delta((2.0, 0.0), ALPHA, BETA, &MollifierSpec::new(*d), &quad()).unwrap();
        assert!(
            (est.value - value).abs() <= est.error + err,
            "delta {d}: {} vs {value}",
            est.value
        );
    }
}

#[test]
fn limit_matches_extrapolated_oracle() {
    let p = richardson_exponent(ALPHA, BETA);
    let ext = |a: (f64, f64), b: (f64, f64)| {
        let r = 2f64.powf(p);
        (b.0 + (b.0 - a.0) / (r - 1.0), (r * b.1 + a.1) / (r - 1.0))
    };
    let e1 = ext(ORACLE[0], ORACLE[1]);
    let e2 = ext(ORACLE[1], ORACLE[2]);
    let oracle_err = (e2.0 - e1.0).abs() + e2.1;
    let lim = f_limit((2.0, 0.0), ALPHA, BETA, &DELTAS, CutoffProfile::BumpIntegral, &quad()).unwrap();
    assert!((lim.value - e2.0).abs() <= lim.error + oracle_err, "{} vs {}", lim.value, e2.0);
    // successive differences shrink geometrically
    let d1 = (ORACLE[1].0 - ORACLE[0].0).abs();
    let d2 = (ORACLE[2].0 - ORACLE[1].0).abs();
    assert!(d2 < 0.5 * d1);
}

#[test]
fn limit_independent_of_transition_profile() {
    for r in [1.0, 4.0, 16.0] {
        let deltas: Vec<f64> = (0..4).map(|j| 0.5 / r * 0.5f64.powi(j)).collect();
        let a = f_limit((r, 0.0), ALPHA, BETA, &deltas, CutoffProfile::BumpIntegral, &quad()).unwrap();
        let b = f_limit((r, 0.0), ALPHA, BETA, &deltas, CutoffProfile::Logistic, &quad()).unwrap();
        assert!((a.value - b.value).abs() <= a.error + b.error, "r {r}: {a:?} vs {b:?}");
    }
}

#[test]
fn negative_at_sampled_radii() {
    for r in [1.0, 2.0, 4.0, 8.0, 16.0] {
        let deltas: Vec<f64> = (0..3).map(|j| 0.5 / r * 0.5f64.powi(j)).collect();
        let lim = f_limit((r, 0.0), ALPHA, BETA, &deltas, CutoffProfile::BumpIntegral, &quad()).unwrap();
        assert!(lim.value + lim.error < 0.0, "r {r}: {lim:?}");
    }
}

#[test]
fn pairing_examples() {
    let grid = TorusGrid::periodic(32).unwrap();
    let m = MollifierSpec::new(0.05);
    let zero = kappa_pairing(&Field::zeros(grid), ALPHA, BETA, &m, &quad()).unwrap();
    assert_eq!(zero.value, 0.0);
    let xi = Field::from_fn(grid, |x, y| (3.0 * x + 4.0 * y).cos());
    let pairing = kappa_pairing(&xi, ALPHA, BETA, &m, &quad()).unwrap();
    let f5 = f_delta((5.0, 0.0), ALPHA, BETA, &m, &quad()).unwrap();
    let l2 = sobolev_norm(&xi, 0.0).unwrap();
    assert!((pairing.value - f5.value * l2 * l2).abs() <= 1e-10 * l2 * l2 + 2.0 * pairing.error);
    assert!(kappa_pairing(&Field::constant(grid, 1.0), ALPHA, BETA, &m, &quad()).is_err());
}

#[test]
fn pairing_respects_fitted_bound() {
    let grid = TorusGrid::periodic(32).unwrap();
    let m = MollifierSpec::new(0.02);
    let radii: Vec<f64> = (0..8).map(|i| 64f64.powf(i as f64 / 7.0)).collect();
    let samples: Vec<(f64, f64)> = radii
        .iter()
        .map(|&r| (r, f_delta((r, 0.0), ALPHA, BETA, &m, &quad()).unwrap().value))
        .collect();
    let fit = fit_coercivity(&samples, ALPHA, BETA).unwrap();
    let tol = 0.05;
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut violations = 0;
    for _ in 0..5 {
        let xi = random_band_limited(grid, 10, 1.0, &mut rng);
        let pairing = kappa_pairing(&xi, ALPHA, BETA, &m, &quad()).unwrap();
        let lo = sobolev_norm(&xi, BETA / 2.0 - ALPHA).unwrap();
        let hi = sobolev_norm(&xi, BETA / 2.0 - 1.0).unwrap();
        let bound = -fit.k * lo * lo * (1.0 - tol) + fit.c * hi * hi * (1.0 + tol);
        if pairing.value > bound {
            violations += 1;
        }
    }
    assert_eq!(violations, 0);
}
