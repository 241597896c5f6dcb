//! Counting experiments: Poisson simulation of coincidence counts and the
//! estimators that turn counts back into probabilities, inequality values
//! and significances.
//!
//! A [`CountRecord`] holds the coincidences at one polarizer setting plus
//! the two normalization counts taken in the H/H and V/V bases over the
//! same duration. Probabilities are estimated as `N / (N_HH + N_VV)`.

use std::io::{Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bell::{combine_measured, outcome_settings, sigma_violation, ChshSettings};
use crate::error::{Error, Result};
use crate::hardy::{
    evaluate_ladder_with, ladder_settings, violation_sigma, LadderResult, LadderSpec,
};
use crate::measured::Measured;
use crate::measurement::{joint_prob, AnalyzerSetting};
use crate::states::DensityMatrix;
use std::f64::consts::FRAC_PI_2;

/// Record-to-setting matching tolerance, radians (modulo π).
pub const ANGLE_MATCH_TOL: f64 = 1e-6;
/// Column names of the count file, in order.
pub const CSV_HEADER: [&str; 6] = [
    "theta_a_deg",
    "theta_b_deg",
    "duration_s",
    "count",
    "n_hh",
    "n_vv",
];
pub const DEFAULT_PAIR_RATE: f64 = 4000.0;
pub const DEFAULT_BOOTSTRAP_RESAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Coincidences per second over the full ring at unit detection efficiency.
    pub pair_rate: f64,
    /// Seconds per setting.
    pub duration: f64,
    pub dqe_a: f64,
    pub dqe_b: f64,
    /// Spurious coincidences per second.
    pub accidental_rate: f64,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            pair_rate: DEFAULT_PAIR_RATE,
            duration: 60.0,
            dqe_a: 1.0,
            dqe_b: 1.0,
            accidental_rate: 0.0,
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("pair_rate", self.pair_rate),
            ("duration", self.duration),
            ("accidental_rate", self.accidental_rate),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::out_of_range(name, v, "[0, ∞)"));
            }
        }
        for (name, v) in [("dqe_a", self.dqe_a), ("dqe_b", self.dqe_b)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::out_of_range(name, v, "[0, 1]"));
            }
        }
        Ok(())
    }

    /// Mean coincidences at a setting with joint probability `p`.
    pub fn expected_count(&self, p: f64) -> f64 {
        self.pair_rate * self.duration * self.dqe_a * self.dqe_b * p
            + self.accidental_rate * self.duration
    }

    /// Mean accidental coincidences in one setting.
    pub fn expected_accidentals(&self) -> f64 {
        self.accidental_rate * self.duration
    }
}

/// Default per-setting integration time for a ladder of height `k`:
/// 60 s up to K = 5, 120 s up to K = 10, 180 s beyond.
pub fn default_ladder_duration(k: usize) -> f64 {
    match k {
        0..=5 => 60.0,
        6..=10 => 120.0,
        _ => 180.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountRecord {
    pub theta_a: f64,
    pub theta_b: f64,
    pub duration: f64,
    pub count: u64,
    pub n_hh: u64,
    pub n_vv: u64,
}

impl CountRecord {
    pub fn setting(&self) -> AnalyzerSetting {
        AnalyzerSetting::new(self.theta_a, self.theta_b)
    }

    pub fn normalization(&self) -> u64 {
        self.n_hh + self.n_vv
    }
}

/// Random stream for setting `index`: ChaCha8 seeded from `seed`, stream
/// number `index`. Fixed so that parallel simulation is reproducible.
pub fn setting_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn poisson_draw(mean: f64, rng: &mut ChaCha8Rng) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    // Poisson::new only fails for non-positive or non-finite means.
    Poisson::new(mean)
        .expect("positive finite mean")
        .sample(rng) as u64
}

const HH_SETTING: AnalyzerSetting = AnalyzerSetting {
    theta_a: 0.0,
    theta_b: 0.0,
};
const VV_SETTING: AnalyzerSetting = AnalyzerSetting {
    theta_a: FRAC_PI_2,
    theta_b: FRAC_PI_2,
};

/// Poisson counts for every setting. Each record draws its coincidence
/// count, then `n_hh`, then `n_vv` from [`setting_rng`]`(seed, index)`.
pub fn simulate_counts(
    rho: &DensityMatrix,
    settings: &[AnalyzerSetting],
    cfg: &ExperimentConfig,
) -> Result<Vec<CountRecord>> {
    cfg.validate()?;
    let mu_hh = cfg.expected_count(joint_prob(rho, HH_SETTING));
    let mu_vv = cfg.expected_count(joint_prob(rho, VV_SETTING));
    Ok(settings
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let mut rng = setting_rng(cfg.seed, i);
            let mu = cfg.expected_count(joint_prob(rho, *s));
            CountRecord {
                theta_a: s.theta_a,
                theta_b: s.theta_b,
                duration: cfg.duration,
                count: poisson_draw(mu, &mut rng),
                n_hh: poisson_draw(mu_hh, &mut rng),
                n_vv: poisson_draw(mu_vv, &mut rng),
            }
        })
        .collect())
}

/// Noise-free records holding the rounded mean counts.
pub fn expected_counts(
    rho: &DensityMatrix,
    settings: &[AnalyzerSetting],
    cfg: &ExperimentConfig,
) -> Result<Vec<CountRecord>> {
    cfg.validate()?;
    let round = |p: f64| cfg.expected_count(p).round() as u64;
    let n_hh = round(joint_prob(rho, HH_SETTING));
    let n_vv = round(joint_prob(rho, VV_SETTING));
    Ok(settings
        .iter()
        .map(|s| CountRecord {
            theta_a: s.theta_a,
            theta_b: s.theta_b,
            duration: cfg.duration,
            count: round(joint_prob(rho, *s)),
            n_hh,
            n_vv,
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ErrorModel {
    /// First-order propagation of independent Poisson counts.
    Propagation,
    /// Standard deviation of `p̂` over Poisson resamples of the observed counts.
    Bootstrap { resamples: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateOptions {
    /// Accidental rate (1/s) to subtract from every count; `None` disables
    /// subtraction.
    pub subtract_accidentals: Option<f64>,
    pub error_model: ErrorModel,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        Self {
            subtract_accidentals: None,
            error_model: ErrorModel::Propagation,
        }
    }
}

/// `p̂ = N/(N_HH + N_VV)` with propagated Poisson uncertainty; for `N = 0`
/// the uncertainty is `1/(N_HH + N_VV)`.
pub fn estimate_probability(rec: &CountRecord) -> Result<Measured> {
    estimate_probability_with(rec, &EstimateOptions::default())
}

pub fn estimate_probability_with(rec: &CountRecord, opts: &EstimateOptions) -> Result<Measured> {
    let accidentals = opts
        .subtract_accidentals
        .map_or(0.0, |rate| rate * rec.duration);
    let point = |n: f64, hh: f64, vv: f64| -> Option<f64> {
        let num = (n - accidentals).max(0.0);
        let den = (hh - accidentals).max(0.0) + (vv - accidentals).max(0.0);
        (den > 0.0).then(|| num / den)
    };
    let (n, hh, vv) = (rec.count as f64, rec.n_hh as f64, rec.n_vv as f64);
    let p = point(n, hh, vv).ok_or(Error::UndefinedProbability)?;
    let sigma = match opts.error_model {
        ErrorModel::Propagation => {
            let num = (n - accidentals).max(0.0);
            let den = (hh - accidentals).max(0.0) + (vv - accidentals).max(0.0);
            if num == 0.0 {
                1.0 / den
            } else {
                // Var(N) = N and Var(N_HH + N_VV) = N_HH + N_VV for Poisson counts.
                p * (n / (num * num) + (hh + vv) / (den * den)).sqrt()
            }
        }
        ErrorModel::Bootstrap { resamples, seed } => bootstrap_sigma(rec, resamples, seed, point)?,
    };
    Ok(Measured::new(p, sigma))
}

fn bootstrap_sigma<F>(rec: &CountRecord, resamples: usize, seed: u64, point: F) -> Result<f64>
where
    F: Fn(f64, f64, f64) -> Option<f64>,
{
    if resamples < 2 {
        return Err(Error::out_of_range("resamples", resamples as f64, "≥ 2"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        let n = poisson_draw(rec.count as f64, &mut rng) as f64;
        let hh = poisson_draw(rec.n_hh as f64, &mut rng) as f64;
        let vv = poisson_draw(rec.n_vv as f64, &mut rng) as f64;
        if let Some(p) = point(n, hh, vv) {
            values.push(p);
        }
    }
    if values.len() < 2 {
        return Err(Error::UndefinedProbability);
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (values.len() - 1) as f64;
    Ok(var.sqrt())
}

fn fmt_setting(s: &AnalyzerSetting) -> String {
    format!(
        "({:.6}°, {:.6}°)",
        s.theta_a.to_degrees(),
        s.theta_b.to_degrees()
    )
}

/// Assigns each expected setting exactly one record. Missing, duplicated and
/// unmatched records are all reported in one coverage error.
pub fn match_records<'a>(
    records: &'a [CountRecord],
    settings: &[AnalyzerSetting],
) -> Result<Vec<&'a CountRecord>> {
    let mut problems = Vec::new();
    let mut matched = Vec::with_capacity(settings.len());
    let mut used = vec![false; records.len()];
    for s in settings {
        let hits: Vec<usize> = records
            .iter()
            .enumerate()
            .filter(|(_, r)| r.setting().matches(s, ANGLE_MATCH_TOL))
            .map(|(i, _)| i)
            .collect();
        match hits.as_slice() {
            [] => problems.push(format!("missing {}", fmt_setting(s))),
            [i] => {
                used[*i] = true;
                matched.push(&records[*i]);
            }
            many => {
                problems.push(format!(
                    "duplicate {} ({} records)",
                    fmt_setting(s),
                    many.len()
                ));
                for i in many {
                    used[*i] = true;
                }
            }
        }
    }
    for (r, u) in records.iter().zip(&used) {
        if !u {
            problems.push(format!("unexpected {}", fmt_setting(&r.setting())));
        }
    }
    if !problems.is_empty() {
        return Err(Error::Coverage(problems.join("; ")));
    }
    Ok(matched)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderAnalysis {
    /// Point estimates assembled into the inequality.
    pub result: LadderResult,
    pub p_k: Measured,
    pub script_p: Measured,
    /// Per-term estimates in the order of `result.terms`.
    pub terms: Vec<Measured>,
    pub margin: Measured,
    pub sigma_violation: f64,
}

/// Estimates every ladder probability from records and forms `P_K ± σ`,
/// `𝒫 ± σ` (quadrature over terms) and the σ-violation.
pub fn analyze_ladder(
    records: &[CountRecord],
    spec: &LadderSpec,
    opts: &EstimateOptions,
) -> Result<LadderAnalysis> {
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let settings = ladder_settings(spec);
    let matched = match_records(records, &settings)?;
    let estimates = matched
        .iter()
        .map(|r| estimate_probability_with(r, opts))
        .collect::<Result<Vec<_>>>()?;
    let mut values = estimates.iter().map(|m| m.value);
    let result = evaluate_ladder_with(spec, |_| values.next().expect("one estimate per setting"));
    let p_k = estimates[0];
    let terms = estimates[1..].to_vec();
    let script_p = Measured::quadrature_sum(terms.iter().copied());
    let margin = Measured::new(p_k.value - script_p.value, p_k.sigma.hypot(script_p.sigma));
    let sigma_violation = violation_sigma(p_k, script_p)?;
    Ok(LadderAnalysis {
        result,
        p_k,
        script_p,
        terms,
        margin,
        sigma_violation,
    })
}

/// Four-outcome coincidence counts at one CHSH setting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChshCounts {
    pub pp: u64,
    pub pb: u64,
    pub bp: u64,
    pub bb: u64,
}

impl ChshCounts {
    pub fn total(&self) -> u64 {
        self.pp + self.pb + self.bp + self.bb
    }

    /// `Ê = (N_pp − N_pb − N_bp + N_bb)/ΣN` with `σ² = (1 − Ê²)/ΣN`.
    pub fn correlation(&self) -> Result<Measured> {
        let n = self.total();
        if n == 0 {
            return Err(Error::Coverage("CHSH setting with no coincidences".into()));
        }
        let n = n as f64;
        let e = (self.pp as f64 - self.pb as f64 - self.bp as f64 + self.bb as f64) / n;
        Ok(Measured::new(e, ((1.0 - e * e).max(0.0) / n).sqrt()))
    }
}

/// Groups 16 records (each CHSH pair and its perpendicular partners) into
/// four-outcome tables in [`ChshSettings::pairs`] order.
pub fn group_chsh(records: &[CountRecord], settings: &ChshSettings) -> Result<[ChshCounts; 4]> {
    let matched = match_records(records, &outcome_settings(settings))?;
    let table = |i: usize| ChshCounts {
        pp: matched[4 * i].count,
        pb: matched[4 * i + 1].count,
        bp: matched[4 * i + 2].count,
        bb: matched[4 * i + 3].count,
    };
    Ok([table(0), table(1), table(2), table(3)])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshAnalysis {
    pub correlations: [Measured; 4],
    pub s: Measured,
    /// `None` when σ_S is zero.
    pub sigma_violation: Option<f64>,
}

pub fn analyze_chsh(tables: &[ChshCounts; 4]) -> Result<ChshAnalysis> {
    let correlations = [
        tables[0].correlation()?,
        tables[1].correlation()?,
        tables[2].correlation()?,
        tables[3].correlation()?,
    ];
    let s = combine_measured(correlations);
    Ok(ChshAnalysis {
        correlations,
        s,
        sigma_violation: sigma_violation(s).ok(),
    })
}

/// How the CHSH acquisition time is distributed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChshTiming {
    /// The configured duration applies to each of the 16 polarizer settings.
    #[default]
    PerSetting,
    /// The configured duration is the whole run, split evenly over the 16.
    Total,
}

impl std::str::FromStr for ChshTiming {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per-setting" => Ok(Self::PerSetting),
            "total" => Ok(Self::Total),
            other => Err(Error::InvalidState(format!(
                "unknown CHSH timing {other:?}"
            ))),
        }
    }
}

/// Simulates the 16 polarizer settings of a CHSH run.
pub fn simulate_chsh(
    rho: &DensityMatrix,
    settings: &ChshSettings,
    cfg: &ExperimentConfig,
    timing: ChshTiming,
) -> Result<Vec<CountRecord>> {
    let all = outcome_settings(settings);
    let mut cfg = *cfg;
    if timing == ChshTiming::Total {
        cfg.duration /= all.len() as f64;
    }
    simulate_counts(rho, &all, &cfg)
}

fn parse_f64(raw: &str, line: u64, column: &str) -> Result<f64> {
    raw.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Parse {
            line,
            message: format!("{column}: not a finite number: {raw:?}"),
        })
}

fn parse_count(raw: &str, line: u64, column: &str) -> Result<u64> {
    raw.parse::<u64>().map_err(|_| {
        let message = match raw.parse::<i64>() {
            Ok(v) if v < 0 => format!("{column}: negative count {v}"),
            _ => format!("{column}: not a nonnegative integer: {raw:?}"),
        };
        Error::Parse { line, message }
    })
}

/// Reads the count-file format (header mandatory; see [`CSV_HEADER`]).
pub fn read_csv<R: Read>(reader: R) -> Result<Vec<CountRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().all(|h| h.is_empty()) {
        return Err(Error::EmptyDataset);
    }
    let missing: Vec<&str> = CSV_HEADER
        .iter()
        .copied()
        .filter(|c| !headers.iter().any(|h| h == *c))
        .collect();
    if !missing.is_empty() {
        return Err(Error::Parse {
            line: 1,
            message: format!("missing columns: {}", missing.join(", ")),
        });
    }
    let idx: Vec<usize> = CSV_HEADER
        .iter()
        .map(|c| headers.iter().position(|h| h == *c).expect("checked above"))
        .collect();

    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        if row.iter().all(|f| f.is_empty()) {
            continue;
        }
        let field = |i: usize| -> Result<&str> {
            row.get(idx[i]).ok_or_else(|| Error::Parse {
                line,
                message: format!("missing value for {}", CSV_HEADER[i]),
            })
        };
        let theta_a = parse_f64(field(0)?, line, CSV_HEADER[0])?.to_radians();
        let theta_b = parse_f64(field(1)?, line, CSV_HEADER[1])?.to_radians();
        let duration = parse_f64(field(2)?, line, CSV_HEADER[2])?;
        if duration < 0.0 {
            return Err(Error::Parse {
                line,
                message: format!("duration_s: negative duration {duration}"),
            });
        }
        out.push(CountRecord {
            theta_a,
            theta_b,
            duration,
            count: parse_count(field(3)?, line, CSV_HEADER[3])?,
            n_hh: parse_count(field(4)?, line, CSV_HEADER[4])?,
            n_vv: parse_count(field(5)?, line, CSV_HEADER[5])?,
        });
    }
    if out.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(out)
}

pub fn ingest_csv(path: &Path) -> Result<Vec<CountRecord>> {
    read_csv(std::fs::File::open(path)?)
}

/// Writes records in the count-file format. Angles are written in degrees
/// with shortest round-trip formatting.
pub fn write_csv<W: Write>(writer: W, records: &[CountRecord]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.theta_a.to_degrees().to_string(),
            r.theta_b.to_degrees().to_string(),
            r.duration.to_string(),
            r.count.to_string(),
            r.n_hh.to_string(),
            r.n_vv.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
