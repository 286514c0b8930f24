use loopdyn::spectral::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn grid(n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |j| 2.0 * PI * j as f64 / n as f64)
}

fn random_state(seed: u64, m: usize, k: f64) -> FourierState {
    FourierState::random(&mut ChaCha8Rng::seed_from_u64(seed), m, k, 0.0).unwrap()
}

#[test]
fn zero_delta_is_the_heat_kernel() {
    let s = random_state(1, 32, 2.0);
    let e = evolve_model(&s, 0.3).unwrap();
    for n in 0..=32 {
        assert_eq!(e.sine(n), s.sine(n) * (-((n * n) as f64) * 0.3).exp());
        assert_eq!(e.cosine(n), s.cosine(n) * (-((n * n) as f64) * 0.3).exp());
    }
}

#[test]
fn constant_mode_is_invariant() {
    let s = random_state(2, 16, 1.0).with_delta(0.1).unwrap();
    for t in [0.0, 1.0, 1e3] {
        assert_eq!(evolve_model(&s, t).unwrap().cosine(0), s.cosine(0));
    }
}

#[test]
fn high_modes_decay_at_rate_one_over_delta() {
    let t = 0.05;
    for delta in [1e-1, 1e-2, 1e-3] {
        let n = (100.0f64 / delta).sqrt().ceil() as usize;
        let rate = decay_factor(n, delta, t).ln();
        assert!((rate + t / delta).abs() < 1e-2 * t / delta, "{delta}: {rate}");
        // Never faster than 1/δ: the resolvent caps the smoothing.
        for m in [1, n, 10 * n, 1000 * n] {
            assert!(decay_factor(m, delta, t) >= (-t / delta).exp());
        }
    }
}

#[test]
fn semigroup_is_exact() {
    let s = random_state(3, 64, 2.0).with_delta(0.05).unwrap();
    let (t1, t2) = (0.125, 0.375);
    let a = evolve_model(&evolve_model(&s, t1).unwrap(), t2).unwrap();
    let b = evolve_model(&s, t1 + t2).unwrap();
    assert_eq!(a, b);
    assert!(evolve_model(&s, -1.0).is_err());
    assert!(evolve_model(&s, f64::NAN).is_err());
}

#[test]
fn samples_match_the_series() {
    let s = FourierState::new(vec![0.0, 1.0, 0.0], vec![0.5, 0.0, 2.0], 0.0).unwrap();
    for (x, v) in grid(8).zip(s.samples(8)) {
        assert!((v - (0.5 + x.sin() + 2.0 * (2.0 * x).cos())).abs() < 1e-14);
    }
}

#[test]
fn hk_table_oracles() {
    let t = 0.1;
    for k in 0..3u32 {
        let s = FourierState::sine_mode(5, 32, 0.0).unwrap();
        let rows = hk_convergence(&s, &[0.0, 0.1, 0.01], t, k).unwrap();
        assert_eq!(rows[0].distance, 0.0);
        for r in &rows[1..] {
            let closed = 5f64.powi(k as i32) * ((-25.0 * t / (1.0 + 25.0 * r.delta)).exp() - (-25.0 * t).exp()).abs();
            assert!((r.distance - closed).abs() < 1e-14 * closed.max(1e-300), "k {k} δ {}", r.delta);
        }
    }
}

#[test]
fn hk_distances_decrease_with_delta() {
    for seed in 0..5 {
        let s = random_state(seed, 512, 2.5);
        for k in 0..=2 {
            let rows = hk_convergence(&s, &[1e-1, 1e-2, 1e-3], 0.05, k).unwrap();
            assert!(rows[0].distance > rows[1].distance && rows[1].distance > rows[2].distance, "seed {seed} k {k}");
        }
    }
}

#[test]
fn resolvent_keeps_constants() {
    let f = vec![0.75; 64];
    let ops = [
        Operator::laplacian(),
        Operator::Constant { a: 2.0, symbol: Symbol::Exact },
        Operator::Variable { a: grid(64).map(|x| 1.0 + 0.5 * x.sin()).collect(), b: Some(grid(64).map(|x| x.cos()).collect()) },
    ];
    for op in &ops {
        let u = resolvent_solve(&f, 0.3, op).unwrap();
        for v in u {
            assert!((v - 0.75).abs() < 1e-14);
        }
    }
}

#[test]
fn resolvent_eigenfunctions() {
    let n = 256;
    let h = 2.0 * PI / n as f64;
    let delta = 1e-2;
    for mode in [1.0, 4.0, 11.0] {
        let f: Vec<f64> = grid(n).map(|x| (mode * x).cos()).collect();
        let exact = resolvent_solve(&f, delta, &Operator::Constant { a: 1.0, symbol: Symbol::Exact }).unwrap();
        let fd = resolvent_solve(&f, delta, &Operator::laplacian()).unwrap();
        let fd_factor = 1.0 / (1.0 + delta * (2.0 - 2.0 * (mode * h).cos()) / (h * h));
        for i in 0..n {
            assert!((exact[i] - f[i] / (1.0 + delta * mode * mode)).abs() < 1e-13);
            assert!((fd[i] - f[i] * fd_factor).abs() < 1e-13);
        }
    }
}

#[test]
fn banded_and_spectral_routes_agree_for_constant_coefficients() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (f, _) = random_holder_function(&mut rng, 128, 64);
    for delta in [1e-3, 1e-1, 10.0] {
        let spectral = resolvent_solve(&f, delta, &Operator::Constant { a: 1.5, symbol: Symbol::FiniteDifference }).unwrap();
        let banded = resolvent_solve(&f, delta, &Operator::Variable { a: vec![1.5; 128], b: None }).unwrap();
        for (p, q) in spectral.iter().zip(&banded) {
            assert!((p - q).abs() < 1e-12 * sup_norm(&f));
        }
    }
}

#[test]
fn residuals_are_small() {
    let n = 512;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (f, _) = random_holder_function(&mut rng, n, 256);
    let ops = [
        Operator::laplacian(),
        Operator::Constant { a: 0.3, symbol: Symbol::Exact },
        Operator::Variable { a: grid(n).map(|x| 1.0 + 0.9 * (3.0 * x).cos()).collect(), b: None },
        Operator::Variable {
            a: grid(n).map(|x| 2.0 + x.sin()).collect(),
            b: Some(grid(n).map(|x| 5.0 * (2.0 * x).sin()).collect()),
        },
    ];
    for op in &ops {
        for delta in [1e-4, 1e-2, 1.0] {
            let u = resolvent_solve(&f, delta, op).unwrap();
            let r = resolvent_residual(&f, &u, delta, op).unwrap();
            assert!(r <= 1e-10, "{op:?} {delta}: {r:e}");
        }
    }
}

#[test]
fn ellipticity_is_checked() {
    let mut a = vec![1.0; 32];
    a[7] = -0.1;
    let err = resolvent_solve(&[0.0; 32], 0.1, &Operator::Variable { a, b: None }).unwrap_err();
    assert_eq!(err.code(), "ellipticity");
    assert!(matches!(err, loopdyn::Error::Ellipticity { index: 7, .. }));
    let err = resolvent_solve(&[0.0; 32], 0.1, &Operator::Constant { a: 0.0, symbol: Symbol::Exact }).unwrap_err();
    assert_eq!(err.code(), "ellipticity");
    assert_eq!(resolvent_solve(&[0.0; 32], 0.0, &Operator::laplacian()).unwrap_err().code(), "invalid-input");
}

#[test]
fn sup_and_holder_bounds_on_seeded_inputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..100 {
        let (f, alpha) = random_holder_function(&mut rng, 256, 128);
        let delta = 10f64.powf(rng.random_range(-4.0..0.0));
        let u = resolvent_solve(&f, delta, &Operator::laplacian()).unwrap();
        assert!(sup_norm(&u) <= sup_norm(&f) + 1e-12);
        assert!(holder_seminorm(&u, alpha) <= holder_seminorm(&f, alpha) + 1e-10);
    }
}

#[test]
fn variable_coefficients_keep_the_maximum_principle() {
    let n = 256;
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..20 {
        let (f, _) = random_holder_function(&mut rng, n, 128);
        let phase = rng.random_range(0.0..2.0 * PI);
        let op = Operator::Variable {
            a: grid(n).map(|x| 1.0 + 0.8 * (x + phase).sin()).collect(),
            b: Some(grid(n).map(|x| 3.0 * (2.0 * x - phase).cos()).collect()),
        };
        let u = resolvent_solve(&f, 0.05, &op).unwrap();
        assert!(sup_norm(&u) <= sup_norm(&f) + 1e-12);
    }
}

#[test]
fn exact_symbol_can_overshoot_a_jump() {
    // Gibbs oscillation: the exact symbol breaks the maximum principle on a
    // square wave, the three-point symbol does not.
    let n = 256;
    let f: Vec<f64> = (0..n).map(|j| if j < n / 2 { 1.0 } else { -1.0 }).collect();
    let exact = resolvent_solve(&f, 1e-5, &Operator::Constant { a: 1.0, symbol: Symbol::Exact }).unwrap();
    let fd = resolvent_solve(&f, 1e-5, &Operator::laplacian()).unwrap();
    assert!(sup_norm(&exact) > 1.0 + 1e-3);
    assert!(sup_norm(&fd) <= 1.0 + 1e-12);
}

#[test]
fn weierstrass_input_has_the_prescribed_regularity() {
    assert_eq!(lacunary_levels(512), 9);
    let f = weierstrass(1024, 0.5, 9, &[]);
    let half = holder_seminorm(&f, 0.5);
    let more = holder_seminorm(&f, 0.8);
    assert!(half.is_finite() && half < 10.0);
    // The seminorm for a larger exponent grows with resolution.
    let coarse = holder_seminorm(&weierstrass(256, 0.5, 7, &[]), 0.8);
    assert!(more > 1.5 * coarse, "{more} {coarse}");
}

#[test]
fn holder_rate_matches_half_alpha() {
    let deltas = [1e-1, 1e-2, 1e-3, 1e-4];
    let study = holder_rate_study(0.5, &deltas, 512, &Operator::laplacian()).unwrap();
    assert!(study.exponent >= 0.5 / 2.0 - 0.1, "{}", study.exponent);
    for w in study.rows.windows(2) {
        assert!(w[1].sup_error < w[0].sup_error);
    }
    assert!(holder_rate_study(1.5, &deltas, 512, &Operator::laplacian()).is_err());
}

#[test]
fn exponent_fit_recovers_a_power_law() {
    let x = [1e-1, 1e-2, 1e-3];
    let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(0.37)).collect();
    assert!((fit_exponent(&x, &y) - 0.37).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn resolvent_never_exceeds_the_data(seed in any::<u64>(), log_delta in -5.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (f, _) = random_holder_function(&mut rng, 128, 64);
        let u = resolvent_solve(&f, 10f64.powf(log_delta), &Operator::laplacian()).unwrap();
        prop_assert!(sup_norm(&u) <= sup_norm(&f) + 1e-12);
    }

    #[test]
    fn evolution_is_a_contraction_in_every_hk(seed in any::<u64>(), delta in 0.0f64..1.0, t in 0.0f64..1.0) {
        let s = random_state(seed, 64, 2.0).with_delta(delta).unwrap();
        let zero = FourierState::new(vec![0.0; 65], vec![0.0; 65], delta).unwrap();
        let e = evolve_model(&s, t).unwrap();
        for k in 0..3 {
            prop_assert!(hk_distance(&e, &zero, k) <= hk_distance(&s, &zero, k));
        }
    }
}
