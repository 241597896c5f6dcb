//! Ideal linear-polarizer projections and joint detection probabilities.
//!
//! Angles are in radians with H at 0 and V at π/2. A polarizer at `θ`
//! passes `|θ> = cos θ|H> + sin θ|V>`; "block" is the orthogonal outcome,
//! which is the pass state of a polarizer at `θ + π/2`.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::Vector4;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::states::DensityMatrix;

/// Reduces an angle to `[0, π)`.
pub fn canonical_angle(theta: f64) -> f64 {
    let r = theta.rem_euclid(PI);
    if r >= PI {
        0.0
    } else {
        r
    }
}

/// Distance between two polarizer angles modulo π.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(PI);
    d.min(PI - d)
}

/// `θ⊥ = θ + π/2`.
pub fn perp(theta: f64) -> f64 {
    theta + FRAC_PI_2
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyzerSetting {
    pub theta_a: f64,
    pub theta_b: f64,
}

impl AnalyzerSetting {
    pub fn new(theta_a: f64, theta_b: f64) -> Self {
        Self { theta_a, theta_b }
    }

    pub fn from_degrees(a_deg: f64, b_deg: f64) -> Self {
        Self::new(a_deg.to_radians(), b_deg.to_radians())
    }

    /// Both angles reduced to `[0, π)`.
    pub fn canonical(&self) -> Self {
        Self::new(canonical_angle(self.theta_a), canonical_angle(self.theta_b))
    }

    /// True when both angles agree modulo π within `tol`.
    pub fn matches(&self, other: &AnalyzerSetting, tol: f64) -> bool {
        angle_distance(self.theta_a, other.theta_a) <= tol
            && angle_distance(self.theta_b, other.theta_b) <= tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutcomeProbs {
    pub pp: f64,
    pub pb: f64,
    pub bp: f64,
    pub bb: f64,
}

impl OutcomeProbs {
    pub fn total(&self) -> f64 {
        self.pp + self.pb + self.bp + self.bb
    }

    pub fn correlation(&self) -> f64 {
        self.pp - self.pb - self.bp + self.bb
    }
}

fn product_vector(theta_a: f64, theta_b: f64) -> Vector4<Complex64> {
    let (sa, ca) = theta_a.sin_cos();
    let (sb, cb) = theta_b.sin_cos();
    Vector4::new(
        Complex64::new(ca * cb, 0.0),
        Complex64::new(ca * sb, 0.0),
        Complex64::new(sa * cb, 0.0),
        Complex64::new(sa * sb, 0.0),
    )
}

/// `Tr[ρ (|θ_A><θ_A| ⊗ |θ_B><θ_B|)]`.
pub fn joint_prob(rho: &DensityMatrix, s: AnalyzerSetting) -> f64 {
    let v = product_vector(s.theta_a, s.theta_b);
    let value = (v.adjoint() * rho.entries() * v)[(0, 0)].re;
    value.clamp(0.0, 1.0)
}

pub fn outcome_probs(rho: &DensityMatrix, s: AnalyzerSetting) -> OutcomeProbs {
    let (a, b) = (s.theta_a, s.theta_b);
    OutcomeProbs {
        pp: joint_prob(rho, AnalyzerSetting::new(a, b)),
        pb: joint_prob(rho, AnalyzerSetting::new(a, perp(b))),
        bp: joint_prob(rho, AnalyzerSetting::new(perp(a), b)),
        bb: joint_prob(rho, AnalyzerSetting::new(perp(a), perp(b))),
    }
}

/// `E(θ_A, θ_B) = pp − pb − bp + bb`.
pub fn correlation(rho: &DensityMatrix, s: AnalyzerSetting) -> f64 {
    outcome_probs(rho, s).correlation()
}

/// Joint probability at fixed `theta_b` across a grid of `theta_a`.
pub fn fringe(rho: &DensityMatrix, theta_b: f64, theta_a_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    if theta_a_grid.is_empty() {
        return Err(Error::Coverage("fringe needs a nonempty angle grid".into()));
    }
    Ok(theta_a_grid
        .iter()
        .map(|&a| (a, joint_prob(rho, AnalyzerSetting::new(a, theta_b))))
        .collect())
}

/// `(max − min)/(max + min)`.
pub fn visibility_of(series: &[f64]) -> Result<f64> {
    let max = series.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = series.iter().copied().fold(f64::INFINITY, f64::min);
    if series.is_empty() || max + min <= 0.0 {
        return Err(Error::UndefinedVisibility);
    }
    Ok(((max - min) / (max + min)).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{apply_noise, pure_state, state_from_gamma, NoiseModel, PureTwoQubit};
    use approx::assert_abs_diff_eq;

    fn phi_minus() -> DensityMatrix {
        pure_state(&PureTwoQubit::phi_minus())
    }

    fn deg(a: f64, b: f64) -> AnalyzerSetting {
        AnalyzerSetting::from_degrees(a, b)
    }

    /// Amplitude route: |α cosθ_A cosθ_B + e^{iφ} β sinθ_A sinθ_B|².
    fn amplitude_prob(p: &PureTwoQubit, s: AnalyzerSetting) -> f64 {
        let (sa, ca) = s.theta_a.sin_cos();
        let (sb, cb) = s.theta_b.sin_cos();
        (Complex64::new(p.alpha() * ca * cb, 0.0)
            + Complex64::from_polar(p.beta() * sa * sb, p.phi()))
        .norm_sqr()
    }

    #[test]
    fn joint_prob_examples() {
        assert_abs_diff_eq!(
            joint_prob(&phi_minus(), deg(45.0, 45.0)),
            0.0,
            epsilon = 1e-15
        );
        let p = PureTwoQubit::new(0.6, 0.8, PI).unwrap();
        assert_abs_diff_eq!(
            joint_prob(&pure_state(&p), deg(0.0, 0.0)),
            0.36,
            epsilon = 1e-15
        );

        let s = deg(30.0, 60.0);
        let by_amplitude = amplitude_prob(&p, s);
        assert_abs_diff_eq!(by_amplitude, 0.0075, epsilon = 1e-15);
        assert_abs_diff_eq!(joint_prob(&pure_state(&p), s), 0.0075, epsilon = 1e-14);
    }

    #[test]
    fn outcome_probs_examples() {
        let hh = pure_state(&PureTwoQubit::new(1.0, 0.0, 0.0).unwrap());
        let o = outcome_probs(&hh, deg(0.0, 0.0));
        assert_abs_diff_eq!(o.pp, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(o.pb + o.bp + o.bb, 0.0, epsilon = 1e-15);

        for s in [deg(0.0, 0.0), deg(17.0, 123.0)] {
            let o = outcome_probs(&DensityMatrix::maximally_mixed(), s);
            for x in [o.pp, o.pb, o.bp, o.bb] {
                assert_abs_diff_eq!(x, 0.25, epsilon = 1e-15);
            }
        }
        let o = outcome_probs(&phi_minus(), deg(0.0, 45.0));
        for x in [o.pp, o.pb, o.bp, o.bb] {
            assert_abs_diff_eq!(x, 0.25, epsilon = 1e-15);
        }
    }

    #[test]
    fn correlation_examples() {
        let rho = phi_minus();
        assert_abs_diff_eq!(correlation(&rho, deg(0.0, 0.0)), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(correlation(&rho, deg(0.0, 45.0)), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(correlation(&rho, deg(15.0, 15.0)), 0.5, epsilon = 1e-14);
        for (a, b) in [(3.0f64, 71.0f64), (100.0, -20.0), (45.0, 170.0)] {
            let closed = (2.0 * (a + b)).to_radians().cos();
            assert_abs_diff_eq!(correlation(&rho, deg(a, b)), closed, epsilon = 1e-13);
        }
    }

    #[test]
    fn perp_examples() {
        assert_abs_diff_eq!(perp(0.0), FRAC_PI_2, epsilon = 1e-15);
        assert_abs_diff_eq!(perp(PI / 4.0), 3.0 * PI / 4.0, epsilon = 1e-15);
        assert_abs_diff_eq!(canonical_angle(perp(-PI / 3.0)), PI / 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(canonical_angle(-PI / 3.0), 2.0 * PI / 3.0, epsilon = 1e-15);
        assert!(canonical_angle(-1e-300) < PI);
    }

    #[test]
    fn fringe_examples() {
        let grid: Vec<f64> = [45.0f64, 90.0, 135.0]
            .iter()
            .map(|d| d.to_radians())
            .collect();
        let f = fringe(&phi_minus(), 45f64.to_radians(), &grid).unwrap();
        let probs: Vec<f64> = f.iter().map(|(_, p)| *p).collect();
        assert_abs_diff_eq!(probs[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(probs[1], 0.25, epsilon = 1e-15);
        // ½cos²(θ_A + 45°) peaks at θ_A = 135°; the fringe period in θ_A is π.
        assert_abs_diff_eq!(probs[2], 0.5, epsilon = 1e-15);

        let hh = pure_state(&PureTwoQubit::new(1.0, 0.0, 0.0).unwrap());
        let grid: Vec<f64> = (0..37).map(|i| (i as f64 * 5.0).to_radians()).collect();
        for (a, p) in fringe(&hh, 0.0, &grid).unwrap() {
            assert_abs_diff_eq!(p, a.cos().powi(2), epsilon = 1e-14);
        }
        assert!(fringe(&hh, 0.0, &[]).is_err());
    }

    #[test]
    fn colored_fringe_visibility_is_v() {
        let grid: Vec<f64> = (0..=900)
            .map(|i| (45.0 + i as f64 * 0.1).to_radians())
            .collect();
        for v in [0.0, 0.3, 0.70, 0.94, 1.0] {
            let rho = apply_noise(&PureTwoQubit::phi_minus(), &NoiseModel::colored(v).unwrap());
            let series: Vec<f64> = fringe(&rho, 45f64.to_radians(), &grid)
                .unwrap()
                .into_iter()
                .map(|(_, p)| p)
                .collect();
            let min = series.iter().copied().fold(f64::INFINITY, f64::min);
            assert_abs_diff_eq!(min, (1.0 - v) / 4.0, epsilon = 1e-12);
            assert_abs_diff_eq!(visibility_of(&series).unwrap(), v, epsilon = 1e-9);
        }
    }

    #[test]
    fn white_fringe_visibility_is_v() {
        let grid: Vec<f64> = (0..=900)
            .map(|i| (45.0 + i as f64 * 0.1).to_radians())
            .collect();
        for v in [0.2, 0.7, 0.94] {
            let rho = apply_noise(&PureTwoQubit::phi_minus(), &NoiseModel::white(v).unwrap());
            let series: Vec<f64> = fringe(&rho, 45f64.to_radians(), &grid)
                .unwrap()
                .into_iter()
                .map(|(_, p)| p)
                .collect();
            assert_abs_diff_eq!(visibility_of(&series).unwrap(), v, epsilon = 1e-9);
        }
    }

    #[test]
    fn visibility_edge_cases() {
        assert_eq!(visibility_of(&[0.3, 0.3, 0.3]).unwrap(), 0.0);
        assert_eq!(visibility_of(&[0.0, 0.1, 0.4]).unwrap(), 1.0);
        assert!(matches!(
            visibility_of(&[0.0, 0.0]),
            Err(Error::UndefinedVisibility)
        ));
        assert!(matches!(
            visibility_of(&[]),
            Err(Error::UndefinedVisibility)
        ));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn outcomes_sum_to_one(
                gamma in 0.0f64..2.0, phi in -4.0f64..4.0, v in 0.0f64..=1.0,
                a in -4.0f64..4.0, b in -4.0f64..4.0,
            ) {
                let p = state_from_gamma(gamma, phi).unwrap();
                let rho = apply_noise(&p, &NoiseModel::white(v).unwrap());
                let s = AnalyzerSetting::new(a, b);
                let o = outcome_probs(&rho, s);
                prop_assert!((o.total() - 1.0).abs() <= 1e-10);
                prop_assert_eq!(joint_prob(&rho, s), o.pp);
            }

            #[test]
            fn trace_matches_amplitude(
                gamma in 0.0f64..3.0, phi in -4.0f64..4.0,
                a in -4.0f64..4.0, b in -4.0f64..4.0,
            ) {
                let p = state_from_gamma(gamma, phi).unwrap();
                let s = AnalyzerSetting::new(a, b);
                prop_assert!((joint_prob(&pure_state(&p), s) - amplitude_prob(&p, s)).abs() <= 1e-12);
            }
        }
    }
}
