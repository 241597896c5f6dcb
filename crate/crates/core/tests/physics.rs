use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use nalgebra::Matrix4;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nonlocal_core::bell::{chsh_s, optimal_chsh_settings, ChshSettings};
use nonlocal_core::measurement::{
    fringe, joint_prob, outcome_probs, visibility_of, AnalyzerSetting,
};
use nonlocal_core::states::{
    apply_noise, pure_state, state_from_gamma, DensityMatrix, NoiseModel, PureTwoQubit,
};

/// Random mixture of random pure states.
fn random_state(rng: &mut ChaCha8Rng) -> DensityMatrix {
    let n = rng.random_range(1..=4);
    let mut acc = Matrix4::<Complex64>::zeros();
    for _ in 0..n {
        let v = nalgebra::Vector4::from_fn(|_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let v = v / Complex64::from(v.norm());
        acc += v * v.adjoint() * Complex64::from(rng.random::<f64>());
    }
    let tr = acc.trace();
    DensityMatrix::new(acc.map(|z| z / tr)).unwrap()
}

#[test]
fn tsirelson_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..1000 {
        let (_, s) = optimal_chsh_settings(&random_state(&mut rng));
        assert!(s <= 2.0 * SQRT_2 + 1e-9, "{s}");
    }
}

#[test]
fn outcome_probabilities_sum_to_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..500 {
        let rho = random_state(&mut rng);
        let s = AnalyzerSetting::new(rng.random_range(-PI..PI), rng.random_range(-PI..PI));
        let o = outcome_probs(&rho, s);
        assert!((o.total() - 1.0).abs() < 1e-10);
        assert_eq!(joint_prob(&rho, s), o.pp);
    }
}

#[test]
fn visibility_threshold_marks_chsh_boundary_for_white_noise() {
    let phi = PureTwoQubit::phi_minus();
    let grid: Vec<f64> = (0..=180).map(|i| (i as f64).to_radians()).collect();
    for i in 1..=40 {
        let v = i as f64 / 40.0;
        if (v - FRAC_1_SQRT_2).abs() < 1e-3 {
            continue;
        }
        let rho = apply_noise(&phi, &NoiseModel::white(v).unwrap());
        let probs: Vec<f64> = fringe(&rho, PI / 4.0, &grid)
            .unwrap()
            .into_iter()
            .map(|(_, p)| p)
            .collect();
        let vis = visibility_of(&probs).unwrap();
        let (_, s) = optimal_chsh_settings(&rho);
        assert_eq!(
            vis > FRAC_1_SQRT_2,
            s > 2.0,
            "V={v}: visibility {vis}, S {s}"
        );
    }
}

proptest! {
    #[test]
    fn joint_prob_matches_amplitude(gamma in 0.0..=1.0f64, phi in -PI..PI, ta in -PI..PI, tb in -PI..PI) {
        let p = state_from_gamma(gamma, phi).unwrap();
        let amp = Complex64::from(p.alpha() * ta.cos() * tb.cos())
            + Complex64::from_polar(p.beta(), phi) * (ta.sin() * tb.sin());
        let got = joint_prob(&pure_state(&p), AnalyzerSetting::new(ta, tb));
        prop_assert!((got - amp.norm_sqr()).abs() < 1e-12);
    }

    #[test]
    fn chsh_is_pi_periodic_per_angle(a in 0.0..PI, ap in 0.0..PI, b in 0.0..PI, bp in 0.0..PI, which in 0usize..4, v in 0.0..=1.0f64) {
        prop_assume!((a - ap).abs() > 1e-3 && (b - bp).abs() > 1e-3);
        let rho = apply_noise(&PureTwoQubit::phi_minus(), &NoiseModel::colored(v).unwrap());
        let mut angles = [a, ap, b, bp];
        let s0 = chsh_s(&rho, &ChshSettings::new(a, ap, b, bp).unwrap());
        angles[which] += PI;
        let s1 = chsh_s(&rho, &ChshSettings::new(angles[0], angles[1], angles[2], angles[3]).unwrap());
        prop_assert!((s0 - s1).abs() < 1e-12);
    }
}
