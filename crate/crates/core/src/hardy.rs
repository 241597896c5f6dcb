//! Hardy's ladder and its Clauser-Horne-type inequality.
//!
//! For a ladder of height `K` the analyzer angles are
//! `θ_k = (−1)^k arctan(γ^{k+1/2})`, `k = 0..=K`, and the inequality reads
//!
//! ```text
//! P(θ_K, θ_K) ≤ P(θ_0, θ_0) + Σ_{k=1..K} [P(θ_k, θ_{k−1}⊥) + P(θ_{k−1}⊥, θ_k)] = 𝒫
//! ```
//!
//! Local realism forces the margin `P_K − 𝒫` to be nonpositive. For the
//! pure state `α|HH> − β|VV>` with `γ = α/β` every term of `𝒫` vanishes
//! while `P_K > 0`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measured::Measured;
use crate::measurement::{joint_prob, perp, AnalyzerSetting};
use crate::optimize::{scan_and_refine, SearchMethod};
use crate::states::{apply_noise, state_from_gamma, DensityMatrix, NoiseModel};

/// Points in the bracketing scan of [`optimize_gamma`].
pub const SCAN_POINTS: usize = 64;
/// Grid size used when the bracketing scan is not unimodal.
pub const FALLBACK_POINTS: usize = 20_000;
/// Final bracket width of the golden-section refinement.
pub const GAMMA_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderSpec {
    k: usize,
    gamma: f64,
}

impl LadderSpec {
    /// Ladder with `K ≥ 1` and `0 < γ < 1`.
    pub fn new(k: usize, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::out_of_range("gamma", gamma, "(0, 1)"));
        }
        Self::closed(k, gamma)
    }

    /// Like [`LadderSpec::new`] but also admits the endpoints `γ = 0` and
    /// `γ = 1`, where the ladder exists but cannot show a violation.
    pub fn closed(k: usize, gamma: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::out_of_range("K", 0.0, "K ≥ 1"));
        }
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::out_of_range("gamma", gamma, "[0, 1]"));
        }
        Ok(Self { k, gamma })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn setting_count(&self) -> usize {
        2 * self.k + 2
    }
}

/// `θ_k = (−1)^k arctan(γ^{k+1/2})` for `k = 0..=K`.
pub fn ladder_angles(spec: &LadderSpec) -> Vec<f64> {
    (0..=spec.k)
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign * spec.gamma.powf(k as f64 + 0.5).atan()
        })
        .collect()
}

/// A polarizer angle of the ladder: `θ_k` or `θ_k⊥`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LadderAngle {
    Rung(usize),
    Perp(usize),
}

/// What a setting contributes to the inequality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LadderRole {
    /// `P(θ_K, θ_K)`, the left-hand side.
    Top,
    /// `P(θ_0, θ_0)`.
    Base,
    /// `P(θ_k, θ_{k−1}⊥)`.
    RungA(usize),
    /// `P(θ_{k−1}⊥, θ_k)`.
    RungB(usize),
}

/// The 2K+2 settings as (site A angle, site B angle, role), in the order
/// top, base, then `RungA(k)`, `RungB(k)` for `k = 1..=K`.
pub fn ladder_plan(k: usize) -> Vec<(LadderAngle, LadderAngle, LadderRole)> {
    let mut plan = Vec::with_capacity(2 * k + 2);
    plan.push((LadderAngle::Rung(k), LadderAngle::Rung(k), LadderRole::Top));
    plan.push((LadderAngle::Rung(0), LadderAngle::Rung(0), LadderRole::Base));
    for j in 1..=k {
        plan.push((
            LadderAngle::Rung(j),
            LadderAngle::Perp(j - 1),
            LadderRole::RungA(j),
        ));
        plan.push((
            LadderAngle::Perp(j - 1),
            LadderAngle::Rung(j),
            LadderRole::RungB(j),
        ));
    }
    plan
}

fn resolve(angle: LadderAngle, thetas: &[f64]) -> f64 {
    match angle {
        LadderAngle::Rung(k) => thetas[k],
        LadderAngle::Perp(k) => perp(thetas[k]),
    }
}

/// Settings in [`ladder_plan`] order.
pub fn ladder_settings(spec: &LadderSpec) -> Vec<AnalyzerSetting> {
    let thetas = ladder_angles(spec);
    ladder_plan(spec.k)
        .into_iter()
        .map(|(a, b, _)| AnalyzerSetting::new(resolve(a, &thetas), resolve(b, &thetas)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderResult {
    pub k: usize,
    pub gamma: f64,
    /// `P(θ_K, θ_K)`.
    pub p_k: f64,
    /// `𝒫`, the sum of `terms`.
    pub script_p: f64,
    /// The 2K+1 right-hand-side probabilities in [`ladder_plan`] order
    /// (base first).
    pub terms: Vec<f64>,
    pub margin: f64,
    pub settings: Vec<AnalyzerSetting>,
}

impl LadderResult {
    pub fn violated(&self) -> bool {
        self.margin > 0.0
    }
}

/// Assembles the inequality from any joint-probability source.
pub fn evaluate_ladder_with<F>(spec: &LadderSpec, mut prob: F) -> LadderResult
where
    F: FnMut(AnalyzerSetting) -> f64,
{
    let settings = ladder_settings(spec);
    let probs: Vec<f64> = settings.iter().map(|&s| prob(s)).collect();
    let p_k = probs[0];
    let terms = probs[1..].to_vec();
    let script_p: f64 = terms.iter().sum();
    LadderResult {
        k: spec.k,
        gamma: spec.gamma,
        p_k,
        script_p,
        margin: p_k - script_p,
        terms,
        settings,
    }
}

pub fn evaluate_ladder(rho: &DensityMatrix, spec: &LadderSpec) -> LadderResult {
    evaluate_ladder_with(spec, |s| joint_prob(rho, s))
}

/// Closed form of `P_K` for the pure state at `φ = π`:
/// `γ²(1 − γ^{2K})² / [(1 + γ²)(1 + γ^{2K+1})²]`.
pub fn pk_ideal(spec: &LadderSpec) -> f64 {
    let g = spec.gamma;
    let k = spec.k as i32;
    let g2k = g.powi(2 * k);
    let num = g * g * (1.0 - g2k).powi(2);
    let den = (1.0 + g * g) * (1.0 + g2k * g).powi(2);
    num / den
}

/// State family explored by the optimizer: `state_from_gamma(γ, φ)` passed
/// through a noise model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderState {
    pub phi: f64,
    pub noise: NoiseModel,
}

impl Default for LadderState {
    fn default() -> Self {
        Self {
            phi: PI,
            noise: NoiseModel::noiseless(),
        }
    }
}

impl LadderState {
    pub fn ideal() -> Self {
        Self::default()
    }

    pub fn density(&self, gamma: f64) -> DensityMatrix {
        let p = state_from_gamma(gamma, self.phi).expect("gamma validated by caller");
        apply_noise(&p, &self.noise)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LadderObjective {
    #[default]
    PK,
    Margin,
}

impl std::str::FromStr for LadderObjective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "p_k" | "pk" | "p-k" => Ok(Self::PK),
            "margin" => Ok(Self::Margin),
            other => Err(Error::InvalidState(format!("unknown objective {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaOptimum {
    pub k: usize,
    pub gamma: f64,
    pub value: f64,
    pub method: SearchMethod,
    pub evaluations: usize,
}

/// Maximizes `P_K` or the margin over `γ ∈ (0, 1)`.
pub fn optimize_gamma(
    k: usize,
    state: &LadderState,
    objective: LadderObjective,
) -> Result<GammaOptimum> {
    LadderSpec::closed(k, 0.5)?;
    let eval = |gamma: f64| {
        let spec = LadderSpec { k, gamma };
        let r = evaluate_ladder(&state.density(gamma), &spec);
        match objective {
            LadderObjective::PK => r.p_k,
            LadderObjective::Margin => r.margin,
        }
    };
    let m = scan_and_refine(eval, 0.0, 1.0, SCAN_POINTS, FALLBACK_POINTS, GAMMA_TOL);
    Ok(GammaOptimum {
        k,
        gamma: m.x,
        value: m.value,
        method: m.method,
        evaluations: m.evaluations,
    })
}

/// `(P_K − 𝒫) / √(σ_PK² + σ_𝒫²)`.
pub fn violation_sigma(p_k: Measured, script_p: Measured) -> Result<f64> {
    let sigma = p_k.sigma.hypot(script_p.sigma);
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(Error::out_of_range("combined sigma", sigma, "(0, ∞)"));
    }
    Ok((p_k.value - script_p.value) / sigma)
}

/// Outcome of enumerating deterministic local assignments for a ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalRealismCheck {
    pub k: usize,
    pub assignments: u64,
    pub max_margin: f64,
    pub violations: u64,
}

/// Largest ladder height accepted by [`local_realism_check`].
pub const MAX_ENUMERATED_K: usize = 8;

/// Enumerates every deterministic local hidden-variable model: each site
/// assigns pass or block to each rung angle `θ_k`, and the polarizer at
/// `θ_k⊥` gives the complementary outcome. A setting's joint probability is
/// 1 exactly when both sites pass.
pub fn local_realism_check(k: usize) -> Result<LocalRealismCheck> {
    if k == 0 || k > MAX_ENUMERATED_K {
        return Err(Error::out_of_range("K", k as f64, "1..=8 for enumeration"));
    }
    let passes = |bits: u64, a: LadderAngle| match a {
        LadderAngle::Rung(j) => (bits >> j) & 1 == 1,
        LadderAngle::Perp(j) => (bits >> j) & 1 == 0,
    };
    let plan = ladder_plan(k);
    let per_site = 1u64 << (k + 1);
    let mut max_margin = f64::NEG_INFINITY;
    let mut violations = 0;
    for site_a in 0..per_site {
        for site_b in 0..per_site {
            let mut margin = 0i64;
            for &(a, b, role) in &plan {
                if passes(site_a, a) && passes(site_b, b) {
                    margin += if role == LadderRole::Top { 1 } else { -1 };
                }
            }
            if margin > 0 {
                violations += 1;
            }
            max_margin = max_margin.max(margin as f64);
        }
    }
    Ok(LocalRealismCheck {
        k,
        assignments: per_site * per_site,
        max_margin,
        violations,
    })
}
