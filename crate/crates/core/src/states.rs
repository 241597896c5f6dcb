//! Two-qubit polarization states.
//!
//! Every matrix in the crate uses the basis order `(HH, HV, VH, VV)`; the
//! index constants below name those positions.

use nalgebra::{Matrix4, SymmetricEigen, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const HH: usize = 0;
pub const HV: usize = 1;
pub const VH: usize = 2;
pub const VV: usize = 3;

/// Structural tolerance for Hermiticity, trace and positivity.
pub const STRUCTURE_TOL: f64 = 1e-10;
/// Tolerance on `alpha² + beta² = 1`.
pub const NORM_TOL: f64 = 1e-12;

/// The pure state `alpha|HH> + e^{i phi} beta|VV>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PureTwoQubit {
    alpha: f64,
    beta: f64,
    phi: f64,
}

impl PureTwoQubit {
    pub fn new(alpha: f64, beta: f64, phi: f64) -> Result<Self> {
        if !(alpha.is_finite() && beta.is_finite() && phi.is_finite()) {
            return Err(Error::InvalidState("non-finite amplitude or phase".into()));
        }
        if alpha < 0.0 || beta < 0.0 {
            return Err(Error::InvalidState(format!(
                "amplitudes must be nonnegative (alpha = {alpha}, beta = {beta})"
            )));
        }
        let norm = alpha * alpha + beta * beta;
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!(
                "alpha² + beta² = {norm}, expected 1"
            )));
        }
        Ok(Self { alpha, beta, phi })
    }

    /// Maximally entangled `(|HH> - |VV>)/√2`.
    pub fn phi_minus() -> Self {
        let a = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            alpha: a,
            beta: a,
            phi: std::f64::consts::PI,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// Same amplitudes with a different relative phase.
    pub fn with_phase(&self, phi: f64) -> Self {
        Self { phi, ..*self }
    }

    pub fn state_vector(&self) -> Vector4<Complex64> {
        Vector4::new(
            Complex64::new(self.alpha, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::from_polar(self.beta, self.phi),
        )
    }
}

/// A validated 4×4 two-qubit density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: Matrix4<Complex64>,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity at [`STRUCTURE_TOL`].
    pub fn new(entries: Matrix4<Complex64>) -> Result<Self> {
        for i in 0..4 {
            for j in 0..4 {
                let d = entries[(i, j)] - entries[(j, i)].conj();
                if d.norm() > STRUCTURE_TOL {
                    return Err(Error::InvalidState(format!(
                        "not Hermitian at ({i}, {j}): deviation {}",
                        d.norm()
                    )));
                }
            }
        }
        let tr = entries.trace();
        if (tr.re - 1.0).abs() > STRUCTURE_TOL || tr.im.abs() > STRUCTURE_TOL {
            return Err(Error::InvalidState(format!("trace = {tr}, expected 1")));
        }
        let min_eig = min_eigenvalue(&entries);
        if min_eig < -STRUCTURE_TOL {
            return Err(Error::InvalidState(format!(
                "not positive semidefinite (smallest eigenvalue {min_eig})"
            )));
        }
        Ok(Self { entries })
    }

    /// Skips validation; for matrices that are valid by construction.
    pub(crate) fn from_trusted(entries: Matrix4<Complex64>) -> Self {
        debug_assert!(
            Self::new(entries).is_ok(),
            "trusted matrix failed validation"
        );
        Self { entries }
    }

    pub fn maximally_mixed() -> Self {
        Self {
            entries: Matrix4::identity() * Complex64::new(0.25, 0.0),
        }
    }

    /// Convex combination `Σ wᵢ ρᵢ / Σ wᵢ`.
    pub fn mixture(components: &[(f64, DensityMatrix)]) -> Result<Self> {
        let total: f64 = components.iter().map(|(w, _)| *w).sum();
        if components.iter().any(|(w, _)| *w < 0.0 || !w.is_finite()) || total <= 0.0 {
            return Err(Error::InvalidState(
                "mixture weights must be nonnegative with positive sum".into(),
            ));
        }
        let mut acc = Matrix4::zeros();
        for (w, rho) in components {
            acc += rho.entries * Complex64::new(w / total, 0.0);
        }
        Self::new(acc)
    }

    pub fn entries(&self) -> &Matrix4<Complex64> {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[(row, col)]
    }

    pub fn eigenvalues(&self) -> [f64; 4] {
        let eig = SymmetricEigen::new(self.entries).eigenvalues;
        let mut out = [eig[0], eig[1], eig[2], eig[3]];
        out.sort_by(|a, b| a.total_cmp(b));
        out
    }
}

fn min_eigenvalue(m: &Matrix4<Complex64>) -> f64 {
    // Hermitize first so the eigen solver sees an exactly Hermitian input.
    let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    SymmetricEigen::new(h)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    /// Damps only the HH↔VV coherence.
    #[default]
    Colored,
    /// Mixes with the maximally mixed state.
    White,
}

impl std::str::FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "colored" | "coloured" => Ok(NoiseKind::Colored),
            "white" => Ok(NoiseKind::White),
            other => Err(Error::InvalidState(format!("unknown noise kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    visibility: f64,
    kind: NoiseKind,
}

impl NoiseModel {
    pub fn new(visibility: f64, kind: NoiseKind) -> Result<Self> {
        if !(0.0..=1.0).contains(&visibility) {
            return Err(Error::out_of_range("visibility", visibility, "[0, 1]"));
        }
        Ok(Self { visibility, kind })
    }

    pub fn noiseless() -> Self {
        Self {
            visibility: 1.0,
            kind: NoiseKind::Colored,
        }
    }

    pub fn colored(visibility: f64) -> Result<Self> {
        Self::new(visibility, NoiseKind::Colored)
    }

    pub fn white(visibility: f64) -> Result<Self> {
        Self::new(visibility, NoiseKind::White)
    }

    pub fn visibility(&self) -> f64 {
        self.visibility
    }

    pub fn kind(&self) -> NoiseKind {
        self.kind
    }
}

pub fn pure_state(p: &PureTwoQubit) -> DensityMatrix {
    let v = p.state_vector();
    DensityMatrix::from_trusted(v * v.adjoint())
}

pub fn apply_noise(p: &PureTwoQubit, noise: &NoiseModel) -> DensityMatrix {
    let v = noise.visibility;
    match noise.kind {
        NoiseKind::Colored => {
            let mut m = Matrix4::zeros();
            m[(HH, HH)] = Complex64::new(p.alpha * p.alpha, 0.0);
            m[(VV, VV)] = Complex64::new(p.beta * p.beta, 0.0);
            let coherence = Complex64::from_polar(v * p.alpha * p.beta, -p.phi);
            m[(HH, VV)] = coherence;
            m[(VV, HH)] = coherence.conj();
            DensityMatrix::from_trusted(m)
        }
        NoiseKind::White => {
            let pure = pure_state(p).entries;
            let m = pure * Complex64::new(v, 0.0)
                + Matrix4::identity() * Complex64::new((1.0 - v) / 4.0, 0.0);
            DensityMatrix::from_trusted(m)
        }
    }
}

/// `Tr ρ²`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    // Tr(ρ²) = Σ |ρ_ij|² for Hermitian ρ.
    rho.entries.iter().map(|z| z.norm_sqr()).sum()
}

/// Entanglement degree `γ = α/β`.
pub fn gamma_of(p: &PureTwoQubit) -> Result<f64> {
    if p.beta == 0.0 {
        return Err(Error::DegenerateState(
            "beta = 0, entanglement degree undefined".into(),
        ));
    }
    Ok(p.alpha / p.beta)
}

/// Entanglement degree set by the pump waveplate angle: `γ = cos 2θ_p`.
pub fn gamma_from_pump_angle(theta_p: f64) -> Result<f64> {
    if !(0.0..=std::f64::consts::FRAC_PI_4).contains(&theta_p) {
        return Err(Error::out_of_range("theta_p", theta_p, "[0, π/4]"));
    }
    Ok((2.0 * theta_p).cos().clamp(0.0, 1.0))
}

/// `α = γ/√(1+γ²)`, `β = 1/√(1+γ²)`. Values of γ above 1 are accepted for
/// exploratory sweeps; negative or non-finite γ is rejected.
pub fn state_from_gamma(gamma: f64, phi: f64) -> Result<PureTwoQubit> {
    if !(gamma.is_finite() && gamma >= 0.0) {
        return Err(Error::out_of_range("gamma", gamma, "[0, ∞)"));
    }
    let n = (1.0 + gamma * gamma).sqrt();
    Ok(PureTwoQubit {
        alpha: gamma / n,
        beta: 1.0 / n,
        phi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn max_entry_diff(a: &DensityMatrix, b: &DensityMatrix) -> f64 {
        (a.entries() - b.entries())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn phi_minus_projector() {
        let p = PureTwoQubit::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2, PI).unwrap();
        let rho = pure_state(&p);
        assert_abs_diff_eq!(rho.get(HH, HH).re, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(rho.get(VV, VV).re, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(rho.get(HH, VV).re, -0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(rho.get(VV, HH).re, -0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(rho.get(HH, VV).im, 0.0, epsilon = 1e-12);
        assert!(max_entry_diff(&rho, &pure_state(&PureTwoQubit::phi_minus())) < 1e-15);
    }

    #[test]
    fn product_and_partial_states() {
        let hh = pure_state(&PureTwoQubit::new(1.0, 0.0, 0.0).unwrap());
        assert_eq!(hh.get(HH, HH), c(1.0));
        assert_eq!(purity(&hh), 1.0);
        for (i, j) in [(HV, HV), (VH, VH), (VV, VV), (HH, VV)] {
            assert_eq!(hh.get(i, j).norm(), 0.0);
        }

        let rho = pure_state(&PureTwoQubit::new(0.6, 0.8, 0.0).unwrap());
        assert_abs_diff_eq!(rho.get(HH, HH).re, 0.36, epsilon = 1e-12);
        assert_abs_diff_eq!(rho.get(VV, VV).re, 0.64, epsilon = 1e-12);
        assert_abs_diff_eq!(rho.get(HH, VV).re, 0.48, epsilon = 1e-12);
    }

    #[test]
    fn normalization_violation_rejected() {
        assert!(PureTwoQubit::new(0.6, 0.6, 0.0).is_err());
        assert!(PureTwoQubit::new(-0.6, 0.8, 0.0).is_err());
        assert!(PureTwoQubit::new(f64::NAN, 0.8, 0.0).is_err());
    }

    #[test]
    fn density_matrix_validation() {
        assert!(DensityMatrix::new(Matrix4::identity() * c(0.25)).is_ok());
        assert!(DensityMatrix::new(Matrix4::identity() * c(0.3)).is_err());
        let mut not_psd = Matrix4::zeros();
        not_psd[(HH, HH)] = c(1.5);
        not_psd[(VV, VV)] = c(-0.5);
        assert!(DensityMatrix::new(not_psd).is_err());
        let mut not_herm = Matrix4::identity() * c(0.25);
        not_herm[(HH, VV)] = Complex64::new(0.0, 0.1);
        assert!(DensityMatrix::new(not_herm).is_err());
    }

    #[test]
    fn noise_endpoints() {
        let p = PureTwoQubit::phi_minus();
        for kind in [NoiseKind::Colored, NoiseKind::White] {
            let rho = apply_noise(&p, &NoiseModel::new(1.0, kind).unwrap());
            assert!(max_entry_diff(&rho, &pure_state(&p)) <= 1e-14);
        }
        let deph = apply_noise(&p, &NoiseModel::colored(0.0).unwrap());
        let mut expected = Matrix4::zeros();
        expected[(HH, HH)] = c(0.5);
        expected[(VV, VV)] = c(0.5);
        assert!(max_entry_diff(&deph, &DensityMatrix::new(expected).unwrap()) < 1e-15);
        let white = apply_noise(&p, &NoiseModel::white(0.0).unwrap());
        assert!(max_entry_diff(&white, &DensityMatrix::maximally_mixed()) < 1e-15);
        assert!(NoiseModel::colored(1.01).is_err());
    }

    #[test]
    fn colored_noise_purity() {
        // Tr ρ² by explicit matrix product, independent of the Σ|ρ_ij|² shortcut.
        let rho = apply_noise(
            &PureTwoQubit::phi_minus(),
            &NoiseModel::colored(0.9).unwrap(),
        );
        let sq = rho.entries() * rho.entries();
        assert_abs_diff_eq!(sq.trace().re, 0.905, epsilon = 1e-12);
        assert_abs_diff_eq!(purity(&rho), 0.905, epsilon = 1e-12);
        assert_abs_diff_eq!(
            purity(&DensityMatrix::maximally_mixed()),
            0.25,
            epsilon = 1e-15
        );
    }

    #[test]
    fn gamma_helpers() {
        assert_abs_diff_eq!(
            gamma_of(&PureTwoQubit::phi_minus()).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            gamma_of(&PureTwoQubit::new(0.6, 0.8, 0.0).unwrap()).unwrap(),
            0.75,
            epsilon = 1e-15
        );
        assert_eq!(
            gamma_of(&PureTwoQubit::new(0.0, 1.0, 0.0).unwrap()).unwrap(),
            0.0
        );
        assert!(matches!(
            gamma_of(&PureTwoQubit::new(1.0, 0.0, 0.0).unwrap()),
            Err(Error::DegenerateState(_))
        ));

        assert_abs_diff_eq!(gamma_from_pump_angle(0.0).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            gamma_from_pump_angle(PI / 4.0).unwrap(),
            0.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            gamma_from_pump_angle(PI / 6.0).unwrap(),
            0.5,
            epsilon = 1e-15
        );
        assert!(gamma_from_pump_angle(-0.1).is_err());
        assert!(gamma_from_pump_angle(1.0).is_err());

        let s = state_from_gamma(1.0, PI).unwrap();
        assert_abs_diff_eq!(s.alpha(), FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(s.beta(), FRAC_1_SQRT_2, epsilon = 1e-15);
        let s = state_from_gamma(0.0, PI).unwrap();
        assert_eq!((s.alpha(), s.beta()), (0.0, 1.0));
        let s = state_from_gamma(0.5, PI).unwrap();
        assert_abs_diff_eq!(s.alpha(), 1.0 / 5f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(s.beta(), 2.0 / 5f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn colored_purity_monotone_in_visibility() {
        let p = state_from_gamma(0.7, PI).unwrap();
        let mut last = 0.0;
        for i in 0..=100 {
            let v = i as f64 / 100.0;
            let pu = purity(&apply_noise(&p, &NoiseModel::colored(v).unwrap()));
            assert!(pu >= last - 1e-15);
            last = pu;
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn constructed_states_are_valid(
                gamma in 0.0f64..3.0,
                phi in -7.0f64..7.0,
                v in 0.0f64..=1.0,
                white in any::<bool>(),
            ) {
                let p = state_from_gamma(gamma, phi).unwrap();
                let kind = if white { NoiseKind::White } else { NoiseKind::Colored };
                let rho = apply_noise(&p, &NoiseModel::new(v, kind).unwrap());
                prop_assert!(DensityMatrix::new(*rho.entries()).is_ok());
                prop_assert!(DensityMatrix::new(*pure_state(&p).entries()).is_ok());
            }

            #[test]
            fn gamma_round_trip(gamma in 1e-6f64..=1.0, phi in -4.0f64..4.0) {
                let back = gamma_of(&state_from_gamma(gamma, phi).unwrap()).unwrap();
                prop_assert!((back - gamma).abs() <= 1e-12);
            }
        }
    }
}
