//! CHSH test: `S = |E(a,b) − E(a,b′)| + |E(a′,b) + E(a′,b′)|`.

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measured::Measured;
use crate::measurement::{angle_distance, correlation, AnalyzerSetting};
use crate::states::DensityMatrix;

/// Local-realist bound on S.
pub const LOCAL_BOUND: f64 = 2.0;
/// Step of the coarse settings grid.
pub const GRID_STEP: f64 = PI / 24.0;
/// Pattern-search refinement stops below this step.
pub const REFINE_TOL: f64 = 1e-6;

const DISTINCT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshSettings {
    pub a: f64,
    pub a_prime: f64,
    pub b: f64,
    pub b_prime: f64,
}

impl ChshSettings {
    /// Rejects settings whose two angles at a site coincide modulo π.
    pub fn new(a: f64, a_prime: f64, b: f64, b_prime: f64) -> Result<Self> {
        if angle_distance(a, a_prime) < DISTINCT_TOL || angle_distance(b, b_prime) < DISTINCT_TOL {
            return Err(Error::InvalidState(
                "CHSH settings need two distinct angles (mod π) at each site".into(),
            ));
        }
        Ok(Self {
            a,
            a_prime,
            b,
            b_prime,
        })
    }

    pub fn from_degrees(a: f64, a_prime: f64, b: f64, b_prime: f64) -> Result<Self> {
        Self::new(
            a.to_radians(),
            a_prime.to_radians(),
            b.to_radians(),
            b_prime.to_radians(),
        )
    }

    /// `(a,b)`, `(a,b′)`, `(a′,b)`, `(a′,b′)`.
    pub fn pairs(&self) -> [AnalyzerSetting; 4] {
        [
            AnalyzerSetting::new(self.a, self.b),
            AnalyzerSetting::new(self.a, self.b_prime),
            AnalyzerSetting::new(self.a_prime, self.b),
            AnalyzerSetting::new(self.a_prime, self.b_prime),
        ]
    }

    fn as_array(&self) -> [f64; 4] {
        [self.a, self.a_prime, self.b, self.b_prime]
    }
}

/// S from the four correlations in [`ChshSettings::pairs`] order.
pub fn combine(e: [f64; 4]) -> f64 {
    (e[0] - e[1]).abs() + (e[2] + e[3]).abs()
}

/// S with uncertainty from four measured correlations.
pub fn combine_measured(e: [Measured; 4]) -> Measured {
    let value = combine([e[0].value, e[1].value, e[2].value, e[3].value]);
    let sigma = e.iter().map(|m| m.sigma * m.sigma).sum::<f64>().sqrt();
    Measured::new(value, sigma)
}

pub fn chsh_s(rho: &DensityMatrix, settings: &ChshSettings) -> f64 {
    combine(settings.pairs().map(|s| correlation(rho, s)))
}

/// `(S − 2)/σ_S`.
pub fn sigma_violation(s: Measured) -> Result<f64> {
    if s.sigma.is_nan() || s.sigma <= 0.0 {
        return Err(Error::out_of_range("sigma_S", s.sigma, "(0, ∞)"));
    }
    Ok((s.value - LOCAL_BOUND) / s.sigma)
}

fn s_raw(rho: &DensityMatrix, x: [f64; 4]) -> f64 {
    chsh_s(
        rho,
        &ChshSettings {
            a: x[0],
            a_prime: x[1],
            b: x[2],
            b_prime: x[3],
        },
    )
}

/// Lexicographic comparison for deterministic tie-breaking.
fn better(cand: (f64, [usize; 4]), best: (f64, [usize; 4])) -> bool {
    cand.0 > best.0 || (cand.0 == best.0 && cand.1 < best.1)
}

/// Maximizes S by an exhaustive grid over `[0, π)⁴` with step
/// [`GRID_STEP`], then a deterministic pattern search that halves its step
/// down to [`REFINE_TOL`].
pub fn optimal_chsh_settings(rho: &DensityMatrix) -> (ChshSettings, f64) {
    let n = (PI / GRID_STEP).round() as usize;
    let angle = |i: usize| i as f64 * GRID_STEP;
    // E only depends on the (site A, site B) angle pair.
    let table: Vec<f64> = (0..n * n)
        .map(|ij| correlation(rho, AnalyzerSetting::new(angle(ij / n), angle(ij % n))))
        .collect();
    let e = |i: usize, j: usize| table[i * n + j];

    let (best_s, best_idx) = (0..n)
        .into_par_iter()
        .map(|ia| {
            let mut best = (f64::NEG_INFINITY, [usize::MAX; 4]);
            for ia2 in 0..n {
                if ia2 == ia {
                    continue;
                }
                for ib in 0..n {
                    for ib2 in 0..n {
                        if ib2 == ib {
                            continue;
                        }
                        let s = combine([e(ia, ib), e(ia, ib2), e(ia2, ib), e(ia2, ib2)]);
                        let cand = (s, [ia, ia2, ib, ib2]);
                        if better(cand, best) {
                            best = cand;
                        }
                    }
                }
            }
            best
        })
        .reduce(
            || (f64::NEG_INFINITY, [usize::MAX; 4]),
            |x, y| if better(y, x) { y } else { x },
        );

    let mut x = best_idx.map(angle);
    let mut fx = best_s;
    let mut step = GRID_STEP / 2.0;
    while step >= REFINE_TOL {
        let mut improved = false;
        for coord in 0..4 {
            for dir in [1.0, -1.0] {
                let mut trial = x;
                trial[coord] += dir * step;
                let ft = s_raw(rho, trial);
                if ft > fx + 1e-15 {
                    x = trial;
                    fx = ft;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            step /= 2.0;
        }
    }
    let x = x.map(|t| t.rem_euclid(PI));
    let settings = ChshSettings {
        a: x[0],
        a_prime: x[1],
        b: x[2],
        b_prime: x[3],
    };
    let s = chsh_s(rho, &settings);
    (settings, s)
}

/// Settings attaining 2√2 on `(|HH> − |VV>)/√2`: 0°, 45°, 157.5°, 112.5°.
pub fn phi_minus_optimal_settings() -> ChshSettings {
    ChshSettings {
        a: 0.0,
        a_prime: PI / 4.0,
        b: 7.0 * PI / 8.0,
        b_prime: 5.0 * PI / 8.0,
    }
}

/// The site angles of a CHSH measurement together with their orthogonal
/// partners, which is the set of polarizer positions a four-outcome
/// experiment has to visit.
pub fn outcome_settings(settings: &ChshSettings) -> Vec<AnalyzerSetting> {
    let mut out = Vec::with_capacity(16);
    for s in settings.pairs() {
        for (da, db) in [
            (0.0, 0.0),
            (0.0, FRAC_PI_2),
            (FRAC_PI_2, 0.0),
            (FRAC_PI_2, FRAC_PI_2),
        ] {
            out.push(AnalyzerSetting::new(s.theta_a + da, s.theta_b + db));
        }
    }
    out
}

impl ChshSettings {
    pub fn degrees(&self) -> [f64; 4] {
        self.as_array().map(f64::to_degrees)
    }
}
