//! Discretized mode-pair ensemble of the down-conversion ring.
//!
//! Each mode pair carries a relative emission weight and the polarization
//! phase it acquires. An aperture accepts a pair with some probability; the
//! post-selected polarization state is the weighted mixture of the accepted
//! pairs' pure states, so any phase spread among accepted pairs shows up as
//! reduced HH↔VV coherence.

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::Matrix4;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::states::{pure_state, DensityMatrix, PureTwoQubit};

/// Default number of discrete mode pairs.
pub const DEFAULT_MODES: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModePair {
    pub weight: f64,
    pub phase: f64,
}

impl ModePair {
    pub fn new(weight: f64, phase: f64) -> Result<Self> {
        if !(weight.is_finite() && weight >= 0.0) {
            return Err(Error::out_of_range("weight", weight, "[0, ∞)"));
        }
        if !phase.is_finite() {
            return Err(Error::out_of_range("phase", phase, "finite"));
        }
        Ok(Self { weight, phase })
    }
}

/// `n` equal-weight modes with phases `j·span/n`, `j = 0..n`.
pub fn linear_phase_ramp(n: usize, span: f64) -> Vec<ModePair> {
    (0..n)
        .map(|j| ModePair {
            weight: 1.0,
            phase: span * j as f64 / n as f64,
        })
        .collect()
}

/// `n` equal-weight modes with phases spread symmetrically over
/// `[-span/2, span/2]` (cell midpoints), so that an aperture centred on the
/// middle of the ensemble selects the smallest phase spread.
pub fn centered_phase_ramp(n: usize, span: f64) -> Vec<ModePair> {
    (0..n)
        .map(|j| ModePair {
            weight: 1.0,
            phase: span * ((j as f64 + 0.5) / n as f64 - 0.5),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aperture {
    acceptance: Vec<f64>,
}

impl Aperture {
    pub fn new(acceptance: Vec<f64>) -> Result<Self> {
        if let Some(&a) = acceptance.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(Error::out_of_range("acceptance", a, "[0, 1]"));
        }
        Ok(Self { acceptance })
    }

    pub fn open(n: usize) -> Self {
        Self {
            acceptance: vec![1.0; n],
        }
    }

    /// Accepts only mode `index`.
    pub fn single(n: usize, index: usize) -> Self {
        let mut acceptance = vec![0.0; n];
        if index < n {
            acceptance[index] = 1.0;
        }
        Self { acceptance }
    }

    /// Accepts the central `fraction` of the ensemble (at least one mode).
    pub fn central(n: usize, fraction: f64) -> Result<Self> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(Error::out_of_range("fraction", fraction, "(0, 1]"));
        }
        let keep = ((n as f64 * fraction).round() as usize).clamp(1, n.max(1));
        let start = (n - keep.min(n)) / 2;
        let acceptance = (0..n)
            .map(|i| {
                if i >= start && i < start + keep {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        Ok(Self { acceptance })
    }

    pub fn acceptance(&self) -> &[f64] {
        &self.acceptance
    }

    pub fn len(&self) -> usize {
        self.acceptance.len()
    }

    pub fn is_empty(&self) -> bool {
        self.acceptance.is_empty()
    }
}

fn check_lengths(modes: &[ModePair], ap: &Aperture) -> Result<()> {
    if modes.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if modes.len() != ap.len() {
        return Err(Error::LengthMismatch {
            modes: modes.len(),
            acceptance: ap.len(),
        });
    }
    Ok(())
}

fn collected_weights(modes: &[ModePair], ap: &Aperture) -> Result<(Vec<f64>, f64)> {
    check_lengths(modes, ap)?;
    let w: Vec<f64> = modes
        .iter()
        .zip(&ap.acceptance)
        .map(|(m, a)| m.weight * a)
        .collect();
    let total = w.iter().sum();
    Ok((w, total))
}

/// `Σ wᵢaᵢ / Σ wᵢ`.
pub fn collection_efficiency(modes: &[ModePair], ap: &Aperture) -> Result<f64> {
    let (_, collected) = collected_weights(modes, ap)?;
    let emitted: f64 = modes.iter().map(|m| m.weight).sum();
    if emitted <= 0.0 {
        return Err(Error::DegenerateSelection);
    }
    Ok((collected / emitted).clamp(0.0, 1.0))
}

/// Post-selected polarization state. Mode phases add to `p`'s own phase.
pub fn collected_state(
    modes: &[ModePair],
    ap: &Aperture,
    p: &PureTwoQubit,
) -> Result<DensityMatrix> {
    let (w, total) = collected_weights(modes, ap)?;
    if total <= 0.0 {
        return Err(Error::DegenerateSelection);
    }
    let mut acc = Matrix4::zeros();
    for (m, wi) in modes.iter().zip(&w) {
        if *wi == 0.0 {
            continue;
        }
        let rho = pure_state(&p.with_phase(p.phi() + m.phase));
        acc += rho.entries() * Complex64::new(wi / total, 0.0);
    }
    DensityMatrix::new(acc)
}

/// `|Σ wᵢaᵢ e^{iφᵢ}| / Σ wᵢaᵢ`.
pub fn effective_visibility(modes: &[ModePair], ap: &Aperture) -> Result<f64> {
    let (w, total) = collected_weights(modes, ap)?;
    if total <= 0.0 {
        return Err(Error::DegenerateSelection);
    }
    let phasor: Complex64 = modes
        .iter()
        .zip(&w)
        .map(|(m, wi)| Complex64::from_polar(*wi, m.phase))
        .sum();
    Ok((phasor.norm() / total).clamp(0.0, 1.0))
}

fn csv_reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    Ok(csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)?)
}

fn parse_field(record: &csv::StringRecord, idx: usize, line: u64) -> Result<f64> {
    let raw = record.get(idx).ok_or_else(|| Error::Parse {
        line,
        message: format!("missing column {}", idx + 1),
    })?;
    raw.parse::<f64>().map_err(|_| Error::Parse {
        line,
        message: format!("not a number: {raw:?}"),
    })
}

fn is_header(record: &csv::StringRecord) -> bool {
    record.get(0).is_some_and(|f| f.parse::<f64>().is_err())
}

/// Two columns `weight, phase_radians`; an optional non-numeric header row
/// is skipped.
pub fn load_modes(path: &Path) -> Result<Vec<ModePair>> {
    let mut out = Vec::new();
    for (i, row) in csv_reader(path)?.records().enumerate() {
        let row = row?;
        let line = row.position().map_or(i as u64 + 1, |p| p.line());
        if i == 0 && is_header(&row) {
            continue;
        }
        let weight = parse_field(&row, 0, line)?;
        let phase = parse_field(&row, 1, line)?;
        out.push(ModePair::new(weight, phase).map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?);
    }
    if out.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(out)
}

/// One column of acceptance values.
pub fn load_aperture(path: &Path) -> Result<Aperture> {
    let mut values = Vec::new();
    for (i, row) in csv_reader(path)?.records().enumerate() {
        let row = row?;
        let line = row.position().map_or(i as u64 + 1, |p| p.line());
        if i == 0 && is_header(&row) {
            continue;
        }
        let a = parse_field(&row, 0, line)?;
        if !(0.0..=1.0).contains(&a) {
            return Err(Error::Parse {
                line,
                message: format!("acceptance {a} outside [0, 1]"),
            });
        }
        values.push(a);
    }
    if values.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Aperture::new(values)
}

/// Default ensemble: [`DEFAULT_MODES`] modes over a quarter-turn phase spread.
pub fn default_ensemble() -> Vec<ModePair> {
    centered_phase_ramp(DEFAULT_MODES, PI / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{apply_noise, purity, NoiseModel, HH, VV};
    use approx::assert_abs_diff_eq;
    use std::io::Write;

    fn equal_modes(phases: &[f64]) -> Vec<ModePair> {
        phases
            .iter()
            .map(|&p| ModePair::new(1.0, p).unwrap())
            .collect()
    }

    #[test]
    fn efficiency_examples() {
        let modes = equal_modes(&[0.0, 1.0, 2.0]);
        assert_eq!(
            collection_efficiency(&modes, &Aperture::open(3)).unwrap(),
            1.0
        );
        let closed = Aperture::new(vec![0.0; 3]).unwrap();
        assert_eq!(collection_efficiency(&modes, &closed).unwrap(), 0.0);
        let two = equal_modes(&[0.0, 0.0]);
        let half = Aperture::new(vec![1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(
            collection_efficiency(&two, &half).unwrap(),
            0.5,
            epsilon = 1e-15
        );
        assert!(matches!(
            collection_efficiency(&two, &Aperture::open(3)),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(Aperture::new(vec![1.2]).is_err());
    }

    #[test]
    fn coherent_and_cancelling_ensembles() {
        let p = PureTwoQubit::phi_minus();
        let same = equal_modes(&[0.3; 5]);
        let rho = collected_state(&same, &Aperture::open(5), &p).unwrap();
        assert_abs_diff_eq!(purity(&rho), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            effective_visibility(&same, &Aperture::open(5)).unwrap(),
            1.0,
            epsilon = 1e-12
        );

        let opposite = equal_modes(&[0.0, PI]);
        let rho = collected_state(&opposite, &Aperture::open(2), &p).unwrap();
        assert_abs_diff_eq!(purity(&rho), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(
            effective_visibility(&opposite, &Aperture::open(2)).unwrap(),
            0.0,
            epsilon = 1e-12
        );

        let closed = Aperture::new(vec![0.0, 0.0]).unwrap();
        assert!(matches!(
            collected_state(&opposite, &closed, &p),
            Err(Error::DegenerateSelection)
        ));
        assert!(matches!(
            effective_visibility(&opposite, &closed),
            Err(Error::DegenerateSelection)
        ));
    }

    #[test]
    fn ramp_visibility_matches_phasor_sum() {
        let modes = linear_phase_ramp(64, PI / 2.0);
        // Oracle: straight sum of cos and sin over the 64 phases.
        let (c, s) = (0..64).fold((0.0, 0.0), |(c, s), j| {
            let ph = (PI / 2.0) * j as f64 / 64.0;
            (c + ph.cos(), s + ph.sin())
        });
        let oracle = (c * c + s * s).sqrt() / 64.0;
        assert_abs_diff_eq!(oracle, 0.9003, epsilon = 1e-4);
        let v = effective_visibility(&modes, &Aperture::open(64)).unwrap();
        assert_abs_diff_eq!(v, oracle, epsilon = 1e-12);
    }

    #[test]
    fn collected_state_matches_colored_noise() {
        let p = crate::states::state_from_gamma(0.6, PI).unwrap();
        let modes = centered_phase_ramp(128, 1.3);
        let ap = Aperture::central(128, 0.7).unwrap();
        let v = effective_visibility(&modes, &ap).unwrap();
        let rho = collected_state(&modes, &ap, &p).unwrap();
        let reference = apply_noise(&p, &NoiseModel::colored(v).unwrap());
        for (i, j) in [(HH, HH), (HH, VV), (VV, HH), (VV, VV)] {
            assert_abs_diff_eq!(
                rho.get(i, j).norm(),
                reference.get(i, j).norm(),
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn narrower_aperture_raises_visibility() {
        let modes = default_ensemble();
        let mut last_v = 0.0;
        let mut last_eff = 2.0;
        for frac in [1.0, 0.75, 0.5, 0.25, 0.1] {
            let ap = Aperture::central(modes.len(), frac).unwrap();
            let v = effective_visibility(&modes, &ap).unwrap();
            let eff = collection_efficiency(&modes, &ap).unwrap();
            assert!(v >= last_v);
            assert!(eff <= last_eff);
            last_v = v;
            last_eff = eff;
        }
    }

    #[test]
    fn loads_csv_files() {
        let mut modes = tempfile::NamedTempFile::new().unwrap();
        writeln!(modes, "weight,phase_radians\n1.0,0.0\n2.0,0.5\r\n0.5,-0.25").unwrap();
        let loaded = load_modes(modes.path()).unwrap();
        assert_eq!(loaded.len(), 3);
        assert_eq!(loaded[1], ModePair::new(2.0, 0.5).unwrap());

        let mut ap = tempfile::NamedTempFile::new().unwrap();
        writeln!(ap, "1\n0.5\n0").unwrap();
        assert_eq!(
            load_aperture(ap.path()).unwrap().acceptance(),
            &[1.0, 0.5, 0.0]
        );

        let mut bad = tempfile::NamedTempFile::new().unwrap();
        writeln!(bad, "1.0,0.0\n-1.0,0.2").unwrap();
        match load_modes(bad.path()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        let empty = tempfile::NamedTempFile::new().unwrap();
        assert!(matches!(load_modes(empty.path()), Err(Error::EmptyDataset)));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn ensemble() -> impl Strategy<Value = Vec<ModePair>> {
            prop::collection::vec((0.01f64..5.0, -PI..PI), 1..40).prop_map(|v| {
                v.into_iter()
                    .map(|(w, p)| ModePair::new(w, p).unwrap())
                    .collect()
            })
        }

        proptest! {
            #[test]
            fn single_mode_is_pure(modes in ensemble(), pick in 0usize..40, gamma in 0.05f64..1.0) {
                let idx = pick % modes.len();
                let ap = Aperture::single(modes.len(), idx);
                let p = crate::states::state_from_gamma(gamma, PI).unwrap();
                let rho = collected_state(&modes, &ap, &p).unwrap();
                prop_assert!((purity(&rho) - 1.0).abs() <= 1e-10);
            }

            #[test]
            fn purity_law_for_balanced_state(
                modes in ensemble(),
                acc in prop::collection::vec(0.0f64..=1.0, 40),
            ) {
                let ap = Aperture::new(acc[..modes.len()].to_vec()).unwrap();
                prop_assume!(collection_efficiency(&modes, &ap).unwrap() > 1e-6);
                let v = effective_visibility(&modes, &ap).unwrap();
                let rho = collected_state(&modes, &ap, &PureTwoQubit::phi_minus()).unwrap();
                prop_assert!((purity(&rho) - (1.0 + v * v) / 2.0).abs() <= 1e-10);
            }

            #[test]
            fn efficiency_monotone_in_acceptance(
                modes in ensemble(),
                acc in prop::collection::vec(0.0f64..=1.0, 40),
                bump in prop::collection::vec(0.0f64..=1.0, 40),
            ) {
                let n = modes.len();
                let lo = Aperture::new(acc[..n].to_vec()).unwrap();
                let hi_vals: Vec<f64> = acc[..n].iter().zip(&bump).map(|(a, b)| a + (1.0 - a) * b).collect();
                let hi = Aperture::new(hi_vals).unwrap();
                let e_lo = collection_efficiency(&modes, &lo).unwrap();
                let e_hi = collection_efficiency(&modes, &hi).unwrap();
                prop_assert!(e_hi + 1e-12 >= e_lo);
            }
        }
    }
}
