use gsqg_core::mollifier::Mollifier;
use gsqg_core::noise::{build_spectrum, evaluate_covariance, ito_corrector, quadratic_variation, sample_increment};
use gsqg_core::solver::levelset_split;
use gsqg_core::spectral::{
    biot_savart_velocity, fractional_laplacian, gradient, lebesgue_norm, random_band_limited, Field, TorusGrid,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn field(n: usize, band: i64, seed: u64) -> Field {
    let grid = TorusGrid::periodic(n).unwrap();
    random_band_limited(grid, band, 1.0, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn fft_round_trip(seed in any::<u64>(), n in prop::sample::select(vec![16usize, 32, 64])) {
        let grid = TorusGrid::periodic(n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples: Vec<f64> = (0..grid.len()).map(|_| rand::Rng::gen_range(&mut rng, -1.0..1.0)).collect();
        let f = Field::from_physical(grid, samples.clone()).unwrap();
        let back = Field::from_spectral(grid, f.spectral().to_vec()).unwrap();
        let err = back.physical().iter().zip(&samples).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-12 * max_abs(&samples));
    }

    #[test]
    fn parseval(seed in any::<u64>(), band in 1i64..10) {
        let f = field(32, band, seed);
        let physical = lebesgue_norm(&f, 2.0).unwrap().powi(2);
        let spectral = f.grid().area() * f.spectral_energy();
        prop_assert!((physical - spectral).abs() <= 1e-12 * physical);
    }

    #[test]
    fn multipliers_compose(seed in any::<u64>(), s in -2.0f64..1.5, t in -1.0f64..1.5) {
        let f = field(32, 8, seed);
        let two = fractional_laplacian(&fractional_laplacian(&f, s).unwrap(), t).unwrap();
        let one = fractional_laplacian(&f, s + t).unwrap();
        let scale = one.max_abs().max(1e-300);
        let err = two.physical().iter().zip(one.physical()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-12 * scale);
    }

    #[test]
    fn velocity_is_divergence_free_and_orthogonal_to_the_stream_gradient(
        seed in any::<u64>(),
        beta in 0.05f64..0.95,
    ) {
        let theta = field(32, 10, seed);
        let u = biot_savart_velocity(&theta, beta).unwrap();
        prop_assert!(u.divergence_defect() <= 1e-12);
        let g = gradient(&fractional_laplacian(&theta, beta - 2.0).unwrap());
        let (u1, u2) = u.physical_pair();
        let (g1, g2) = g.physical_pair();
        let scale = u.max_speed() * g.max_speed();
        let worst = (0..u1.len()).map(|j| (u1[j] * g1[j] + u2[j] * g2[j]).abs()).fold(0.0, f64::max);
        prop_assert!(worst <= 1e-12 * scale);
    }

    #[test]
    fn covariance_is_even_and_starts_at_twice_the_corrector(
        alpha in 0.05f64..1.0,
        cutoff in 1.0f64..10.0,
        z1 in -3.0f64..3.0,
        z2 in -3.0f64..3.0,
    ) {
        let spec = build_spectrum(TorusGrid::periodic(32).unwrap(), alpha, cutoff, 0.0, Mollifier::Gaussian).unwrap();
        let c = ito_corrector(&spec);
        let q0 = evaluate_covariance(&spec, (0.0, 0.0));
        prop_assert!((q0[0][0] - 2.0 * c).abs() <= 1e-12 * c);
        prop_assert!((q0[1][1] - 2.0 * c).abs() <= 1e-12 * c);
        prop_assert!(q0[0][1].abs() <= 1e-12 * c);
        let a = evaluate_covariance(&spec, (z1, z2));
        let b = evaluate_covariance(&spec, (-z1, -z2));
        for i in 0..2 {
            for j in 0..2 {
                prop_assert!((a[i][j] - b[i][j]).abs() <= 1e-12 * c);
                // |Q_ij(z)| ≤ Q(0) for a positive definite kernel
                prop_assert!(a[i][j].abs() <= 2.0 * c * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn quadratic_variation_matches_the_corrector(seed in any::<u64>(), alpha in 0.1f64..0.9) {
        let theta = field(32, 6, seed);
        let spec = build_spectrum(*theta.grid(), alpha, 6.0, 0.0, Mollifier::Gaussian).unwrap();
        let (qv, predicted) = quadratic_variation(&theta, &spec);
        let scale = max_abs(&predicted);
        for (a, b) in qv.iter().zip(&predicted) {
            prop_assert!((a - b).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn increments_depend_only_on_seed_and_step(seed in any::<u64>(), step in any::<u64>()) {
        let spec = build_spectrum(TorusGrid::periodic(16).unwrap(), 0.5, 3.0, 0.0, Mollifier::Gaussian).unwrap();
        let a = sample_increment(&spec, 1e-3, seed, step).unwrap();
        let b = sample_increment(&spec, 1e-3, seed, step).unwrap();
        let c = sample_increment(&spec, 1e-3, seed, step.wrapping_add(1)).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_ne!(&a, &c);
        prop_assert!(a.is_finite());
    }

    #[test]
    fn levelset_pieces_sum_to_the_field(seed in any::<u64>(), level in 0.0f64..2.0) {
        let phi = field(32, 8, seed);
        let (lo, hi) = levelset_split(&phi, level);
        for ((p, l), h) in phi.physical().iter().zip(lo.physical()).zip(hi.physical()) {
            prop_assert!((p - l - h).abs() <= 1e-12 * phi.max_abs());
            prop_assert!(l.abs() <= level + 1e-12 * phi.max_abs());
        }
    }
}
