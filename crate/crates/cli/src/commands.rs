//! Subcommand implementations. Each returns a [`RunReport`]; printing and
//! file output happen in `main`.

use std::f64::consts::PI;
use std::path::Path;

use serde_json::json;

use nonlocal_core::bell::{self, ChshSettings};
use nonlocal_core::hardy::{
    evaluate_ladder, ladder_settings, optimize_gamma, pk_ideal, violation_sigma, LadderObjective,
    LadderSpec, LadderState,
};
use nonlocal_core::measurement::{fringe, joint_prob, visibility_of, AnalyzerSetting};
use nonlocal_core::source::{
    centered_phase_ramp, collected_state, collection_efficiency, effective_visibility,
    load_aperture, load_modes, Aperture,
};
use nonlocal_core::states::{
    apply_noise, purity, state_from_gamma, DensityMatrix, NoiseKind, NoiseModel,
};
use nonlocal_core::stats::{
    analyze_chsh, analyze_ladder, default_ladder_duration, group_chsh, ingest_csv, simulate_chsh,
    simulate_counts, write_csv, ChshTiming, CountRecord, ErrorModel, EstimateOptions,
    ExperimentConfig,
};
use nonlocal_core::Measured;

use crate::args::*;
use crate::report::{RunReport, Table};
use crate::CliError;

/// CSV written by `--out`, when the command produces one.
pub enum CsvOutput {
    Table(Table),
    Counts(Vec<CountRecord>),
}

pub struct Outcome {
    pub report: RunReport,
    pub csv: Option<CsvOutput>,
}

impl Outcome {
    fn new(report: RunReport) -> Self {
        Self { report, csv: None }
    }

    fn with_table(report: RunReport, table: Table) -> Self {
        Self {
            report,
            csv: Some(CsvOutput::Table(table)),
        }
    }
}

impl CsvOutput {
    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let file = std::fs::File::create(path)
            .map_err(|e| CliError::Internal(format!("cannot create {}: {e}", path.display())))?;
        match self {
            CsvOutput::Table(t) => t
                .write_csv(std::io::BufWriter::new(file))
                .map_err(|e| CliError::Internal(e.to_string())),
            CsvOutput::Counts(records) => write_csv(std::io::BufWriter::new(file), records)
                .map_err(|e| CliError::Internal(e.to_string())),
        }
    }
}

fn noise_kind(n: NoiseArg) -> NoiseKind {
    match n {
        NoiseArg::Colored => NoiseKind::Colored,
        NoiseArg::White => NoiseKind::White,
    }
}

fn noise_model(state: &StateArgs, noise: NoiseArg) -> Result<NoiseModel, CliError> {
    Ok(NoiseModel::new(state.visibility, noise_kind(noise))?)
}

fn density(
    state: &StateArgs,
    noise: NoiseArg,
    default_gamma: f64,
) -> Result<DensityMatrix, CliError> {
    let p = state_from_gamma(
        state.gamma.unwrap_or(default_gamma),
        state.phi_deg.to_radians(),
    )?;
    Ok(apply_noise(&p, &noise_model(state, noise)?))
}

fn ladder_state(state: &StateArgs, noise: NoiseArg) -> Result<LadderState, CliError> {
    Ok(LadderState {
        phi: state.phi_deg.to_radians(),
        noise: noise_model(state, noise)?,
    })
}

fn state_params(state: &StateArgs, noise: NoiseArg) -> serde_json::Value {
    json!({
        "gamma": state.gamma,
        "phi_deg": state.phi_deg,
        "phi_rad": state.phi_deg.to_radians(),
        "visibility": state.visibility,
        "noise": format!("{:?}", noise).to_lowercase(),
    })
}

fn experiment_config(
    e: &ExperimentArgs,
    default_duration: f64,
) -> Result<ExperimentConfig, CliError> {
    let cfg = ExperimentConfig {
        pair_rate: e.pair_rate,
        duration: e.duration_s.unwrap_or(default_duration),
        dqe_a: e.dqe_a,
        dqe_b: e.dqe_b,
        accidental_rate: e.accidental_rate,
        seed: e.seed,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn measured_pair(v: &Option<Vec<f64>>, flag: &str) -> Result<Measured, CliError> {
    match v.as_deref() {
        Some([value, sigma]) => Ok(Measured::new(*value, *sigma)),
        _ => Err(CliError::Input(format!(
            "--{flag} VALUE,SIGMA (exactly two numbers) is required in summary mode"
        ))),
    }
}

fn chsh_settings_from(v: &[f64]) -> Result<ChshSettings, CliError> {
    match v {
        [a, ap, b, bp] => Ok(ChshSettings::from_degrees(*a, *ap, *b, *bp)?),
        _ => Err(CliError::Input(
            "--settings needs four angles a,a',b,b'".into(),
        )),
    }
}

pub fn predict(args: &PredictArgs) -> Result<Outcome, CliError> {
    let rho = density(&args.state, args.noise, 1.0)?;
    let angles: Vec<f64> = if args.fringe {
        if args.step.is_nan() || args.step <= 0.0 || args.to < args.from {
            return Err(CliError::Input(
                "fringe needs --step > 0 and --to ≥ --from".into(),
            ));
        }
        let n = ((args.to - args.from) / args.step + 1e-9).floor() as usize;
        (0..=n).map(|i| args.from + i as f64 * args.step).collect()
    } else if args.theta_a.is_empty() {
        return Err(CliError::Input("give --theta-a or --fringe".into()));
    } else {
        args.theta_a.clone()
    };
    let grid: Vec<f64> = angles.iter().map(|a| a.to_radians()).collect();
    let series = fringe(&rho, args.theta_b.to_radians(), &grid)?;

    let mut table = Table::new(
        "joint detection probabilities",
        &[
            "theta_a_deg",
            "theta_b_deg",
            "theta_a_rad",
            "theta_b_rad",
            "probability",
        ],
    );
    for (deg, (rad, p)) in angles.iter().zip(&series) {
        table.push(vec![
            *deg,
            args.theta_b,
            *rad,
            args.theta_b.to_radians(),
            *p,
        ]);
    }
    let mut report = RunReport::new(json!({
        "state": state_params(&args.state, args.noise),
        "theta_b_deg": args.theta_b,
        "theta_a_deg": angles,
    }));
    if series.len() == 1 {
        report.value("probability", series[0].1);
    }
    if args.fringe {
        let probs: Vec<f64> = series.iter().map(|(_, p)| *p).collect();
        match visibility_of(&probs) {
            Ok(v) => {
                report.value("fringe_visibility", v);
            }
            Err(_) => {
                report.note("fringe visibility undefined (all-zero series)");
            }
        }
    }
    report.tables.push(table.clone());
    Ok(Outcome::with_table(report, table))
}

fn settings_table(result: &nonlocal_core::hardy::LadderResult) -> Table {
    let mut t = Table::new(
        "ladder settings (first row: P_K; then 𝒫 terms)",
        &["theta_a_deg", "theta_b_deg", "probability"],
    );
    let probs = std::iter::once(result.p_k).chain(result.terms.iter().copied());
    for (s, p) in result.settings.iter().zip(probs) {
        t.push(vec![s.theta_a.to_degrees(), s.theta_b.to_degrees(), p]);
    }
    t
}

fn resolve_gamma(
    k: usize,
    state: &StateArgs,
    lstate: &LadderState,
    report: &mut RunReport,
) -> Result<f64, CliError> {
    match state.gamma {
        Some(g) => {
            LadderSpec::new(k, g)?;
            Ok(g)
        }
        None => {
            let opt = optimize_gamma(k, lstate, LadderObjective::PK)?;
            report.note(format!(
                "γ chosen by maximizing P_{k}: γ* = {:.8} ({:?}, {} evaluations)",
                opt.gamma, opt.method, opt.evaluations
            ));
            Ok(opt.gamma)
        }
    }
}

pub fn ladder(args: &LadderArgs) -> Result<Outcome, CliError> {
    let k = args.k;
    let mut report = RunReport::new(json!({
        "k": k,
        "mode": format!("{:?}", args.mode).to_lowercase(),
        "state": state_params(&args.state, args.noise),
    }));
    if args.mode == LadderMode::Summary {
        let pk = measured_pair(&args.pk, "pk")?;
        let sp = measured_pair(&args.script_p, "script-p")?;
        let sigma = violation_sigma(pk, sp)?;
        report.measured("P_K", pk).measured("script_P", sp);
        report.violation("ladder inequality", sigma);
        return Ok(Outcome::new(report));
    }

    let lstate = ladder_state(&args.state, args.noise)?;
    let gamma = resolve_gamma(k, &args.state, &lstate, &mut report)?;
    let spec = LadderSpec::new(k, gamma)?;
    let rho = lstate.density(gamma);
    let exact = evaluate_ladder(&rho, &spec);
    report.value("K", k as f64).value("gamma", gamma);

    match args.mode {
        LadderMode::Analytic => {
            report
                .value("P_K", exact.p_k)
                .value("script_P", exact.script_p)
                .value("margin", exact.margin);
            if args.state.visibility == 1.0 && (args.state.phi_deg - 180.0).abs() < 1e-12 {
                report.value("P_K_closed_form", pk_ideal(&spec));
            }
            report.note(if exact.violated() {
                "inequality violated"
            } else {
                "no violation"
            });
            let t = settings_table(&exact);
            report.tables.push(t.clone());
            Ok(Outcome::with_table(report, t))
        }
        LadderMode::Simulate => {
            let cfg = experiment_config(&args.experiment, default_ladder_duration(k))?;
            report.provenance.seed = Some(cfg.seed);
            report.parameters["experiment"] = serde_json::to_value(cfg).expect("serializable");
            let records = simulate_counts(&rho, &ladder_settings(&spec), &cfg)?;
            let a = analyze_ladder(&records, &spec, &EstimateOptions::default())?;
            report
                .measured("P_K", a.p_k)
                .measured("script_P", a.script_p)
                .measured("margin", a.margin)
                .value("P_K_theory", exact.p_k)
                .value("script_P_theory", exact.script_p);
            report.violation("ladder inequality", a.sigma_violation);
            report.note(verdict(a.margin.value, a.sigma_violation));
            Ok(Outcome {
                report,
                csv: Some(CsvOutput::Counts(records)),
            })
        }
        LadderMode::Summary => unreachable!("handled above"),
    }
}

fn verdict(margin: f64, sigma: f64) -> String {
    if margin > 0.0 {
        format!("violation: local realism bound exceeded by {sigma:.1}σ")
    } else {
        "no violation".to_string()
    }
}

pub fn optimize(args: &OptimizeArgs) -> Result<Outcome, CliError> {
    let lstate = ladder_state(&args.state, args.noise)?;
    let objective = match args.objective {
        ObjectiveArg::Pk => LadderObjective::PK,
        ObjectiveArg::Margin => LadderObjective::Margin,
    };
    let mut table = Table::new("optimal entanglement degree", &["K", "gamma_star", "value"]);
    let mut fallbacks = Vec::new();
    for &k in &args.k {
        let opt = optimize_gamma(k, &lstate, objective)?;
        if opt.method != nonlocal_core::optimize::SearchMethod::GoldenSection {
            fallbacks.push(k);
        }
        table.push(vec![k as f64, opt.gamma, opt.value]);
    }
    let mut report = RunReport::new(json!({
        "k": args.k,
        "objective": format!("{:?}", args.objective).to_lowercase(),
        "state": state_params(&args.state, args.noise),
    }));
    if !fallbacks.is_empty() {
        report.note(format!(
            "non-unimodal scan, dense-grid fallback used for K = {fallbacks:?}"
        ));
    }
    report.tables.push(table.clone());
    Ok(Outcome::with_table(report, table))
}

/// `P_K(γ)` on `points` evenly spaced γ values in `[0, 1]`, one column per K.
pub fn sweep_table(ks: &[usize], points: usize, lstate: &LadderState) -> Result<Table, CliError> {
    if points < 2 {
        return Err(CliError::Input("--points must be at least 2".into()));
    }
    let names: Vec<String> = std::iter::once("gamma".to_string())
        .chain(ks.iter().map(|k| format!("P_{k}")))
        .collect();
    let cols: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut table = Table::new("P_K versus entanglement degree", &cols);
    for i in 0..points {
        let gamma = i as f64 / (points - 1) as f64;
        let rho = lstate.density(gamma);
        let mut row = vec![gamma];
        for &k in ks {
            row.push(evaluate_ladder(&rho, &LadderSpec::closed(k, gamma)?).p_k);
        }
        table.push(row);
    }
    Ok(table)
}

pub fn sweep(args: &SweepArgs) -> Result<Outcome, CliError> {
    let lstate = ladder_state(&args.state, args.noise)?;
    let table = sweep_table(&args.k, args.points, &lstate)?;
    let mut report = RunReport::new(json!({
        "k": args.k,
        "points": args.points,
        "state": state_params(&args.state, args.noise),
    }));
    let mut maxima = Table::new(
        "curve maxima (grid and optimizer)",
        &["K", "grid_gamma", "grid_P_K", "gamma_star", "P_K_star"],
    );
    let gammas = table.column("gamma").expect("gamma column");
    for &k in &args.k {
        let col = table.column(&format!("P_{k}")).expect("K column");
        let (i, p) = col
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &p)| {
                if p > best.1 {
                    (i, p)
                } else {
                    best
                }
            });
        let opt = optimize_gamma(k, &lstate, LadderObjective::PK)?;
        maxima.push(vec![k as f64, gammas[i], p, opt.gamma, opt.value]);
    }
    report.tables.push(maxima);
    if args.points <= 41 {
        report.tables.push(table.clone());
    } else {
        report.note(format!(
            "{} sweep rows; use --out to save the plot data",
            args.points
        ));
    }
    Ok(Outcome::with_table(report, table))
}

pub fn bell_cmd(args: &BellArgs) -> Result<Outcome, CliError> {
    let mut report = RunReport::new(json!({
        "mode": format!("{:?}", args.mode).to_lowercase(),
        "state": state_params(&args.state, args.noise),
    }));
    if args.mode == BellMode::Summary {
        let s = measured_pair(&args.s, "s")?;
        report.measured("S", s);
        report.violation("CHSH", bell::sigma_violation(s)?);
        return Ok(Outcome::new(report));
    }
    let rho = density(&args.state, args.noise, 1.0)?;
    let (settings, s_exact) = match &args.settings {
        Some(v) => {
            let set = chsh_settings_from(v)?;
            (set, bell::chsh_s(&rho, &set))
        }
        None => bell::optimal_chsh_settings(&rho),
    };
    let deg = settings.degrees();
    report.parameters["settings_deg"] = json!(deg);
    report.parameters["settings_rad"] =
        json!([settings.a, settings.a_prime, settings.b, settings.b_prime]);
    let mut table = Table::new(
        "CHSH settings",
        &["a_deg", "a_prime_deg", "b_deg", "b_prime_deg"],
    );
    table.push(deg.to_vec());
    report.tables.push(table);

    match args.mode {
        BellMode::Analytic => {
            report.value("S", s_exact);
            report.note(if s_exact > bell::LOCAL_BOUND {
                "CHSH inequality violated"
            } else {
                "no violation"
            });
            Ok(Outcome::new(report))
        }
        BellMode::Simulate => {
            let cfg = experiment_config(&args.experiment, 180.0)?;
            report.provenance.seed = Some(cfg.seed);
            report.parameters["experiment"] = serde_json::to_value(cfg).expect("serializable");
            let timing = match args.chsh_timing {
                ChshTimingArg::PerSetting => ChshTiming::PerSetting,
                ChshTimingArg::Total => ChshTiming::Total,
            };
            report.parameters["chsh_timing"] = json!(timing);
            let records = simulate_chsh(&rho, &settings, &cfg, timing)?;
            let a = analyze_chsh(&group_chsh(&records, &settings)?)?;
            for (name, e) in ["E(a,b)", "E(a,b')", "E(a',b)", "E(a',b')"]
                .iter()
                .zip(a.correlations)
            {
                report.measured(name, e);
            }
            report.measured("S", a.s).value("S_theory", s_exact);
            if let Some(sigma) = a.sigma_violation {
                report.violation("CHSH", sigma);
                report.note(verdict(a.s.value - bell::LOCAL_BOUND, sigma));
            }
            Ok(Outcome {
                report,
                csv: Some(CsvOutput::Counts(records)),
            })
        }
        BellMode::Summary => unreachable!("handled above"),
    }
}

/// γ from the base row `(θ_0, θ_0)`: among rows with equal angles at both
/// sites it has the largest |θ|, and `γ = tan² θ_0`.
pub fn infer_gamma(records: &[CountRecord]) -> Result<f64, CliError> {
    let fold = |t: f64| {
        let r = t.rem_euclid(PI);
        if r > PI / 2.0 {
            r - PI
        } else {
            r
        }
    };
    records
        .iter()
        .filter(|r| nonlocal_core::measurement::angle_distance(r.theta_a, r.theta_b) < 1e-6)
        .map(|r| fold(r.theta_a).abs())
        .fold(None, |best: Option<f64>, t| {
            Some(best.map_or(t, |b| b.max(t)))
        })
        .map(|t| t.tan().powi(2))
        .filter(|g| *g > 0.0 && *g < 1.0)
        .ok_or_else(|| CliError::Input("cannot infer γ from the file; pass --gamma".into()))
}

pub fn analyze(args: &AnalyzeArgs) -> Result<Outcome, CliError> {
    let records = ingest_csv(&args.csv)?;
    let opts = EstimateOptions {
        subtract_accidentals: args.subtract_accidentals,
        error_model: match args.bootstrap {
            Some(resamples) => ErrorModel::Bootstrap {
                resamples,
                seed: args.seed,
            },
            None => ErrorModel::Propagation,
        },
    };
    let mut report = RunReport::new(json!({
        "csv": args.csv.display().to_string(),
        "test": format!("{:?}", args.test).to_lowercase(),
        "records": records.len(),
        "estimate": opts,
    }));
    if args.bootstrap.is_some() {
        report.provenance.seed = Some(args.seed);
    }
    match args.test {
        TestArg::Ladder => {
            let k = match args.k {
                Some(k) => k,
                None if records.len() >= 4 && records.len() % 2 == 0 => (records.len() - 2) / 2,
                None => {
                    return Err(CliError::Input(
                        "cannot infer K from the record count; pass --k".into(),
                    ))
                }
            };
            let gamma = match args.gamma {
                Some(g) => g,
                None => infer_gamma(&records)?,
            };
            let spec = LadderSpec::new(k, gamma)?;
            report.parameters["k"] = json!(k);
            report.parameters["gamma"] = json!(gamma);
            let a = analyze_ladder(&records, &spec, &opts)?;
            report
                .value("K", k as f64)
                .value("gamma", gamma)
                .measured("P_K", a.p_k)
                .measured("script_P", a.script_p)
                .measured("margin", a.margin);
            report.violation("ladder inequality", a.sigma_violation);
            report.note(verdict(a.margin.value, a.sigma_violation));
            let mut t = Table::new(
                "per-setting estimates",
                &["theta_a_deg", "theta_b_deg", "p_hat", "sigma"],
            );
            let all = std::iter::once(a.p_k).chain(a.terms.iter().copied());
            for (s, m) in a.result.settings.iter().zip(all) {
                t.push(vec![
                    s.theta_a.to_degrees(),
                    s.theta_b.to_degrees(),
                    m.value,
                    m.sigma,
                ]);
            }
            report.tables.push(t.clone());
            Ok(Outcome::with_table(report, t))
        }
        TestArg::Chsh => {
            let settings = chsh_settings_from(args.settings.as_deref().ok_or_else(|| {
                CliError::Input("--test chsh needs --settings a,a',b,b'".into())
            })?)?;
            let a = analyze_chsh(&group_chsh(&records, &settings)?)?;
            for (name, e) in ["E(a,b)", "E(a,b')", "E(a',b)", "E(a',b')"]
                .iter()
                .zip(a.correlations)
            {
                report.measured(name, e);
            }
            report.measured("S", a.s);
            match a.sigma_violation {
                Some(sigma) => {
                    report.violation("CHSH", sigma);
                    report.note(verdict(a.s.value - bell::LOCAL_BOUND, sigma));
                }
                None => {
                    report.note(if a.s.value > bell::LOCAL_BOUND {
                        "S > 2 (σ undefined)"
                    } else {
                        "no violation"
                    });
                }
            }
            Ok(Outcome::new(report))
        }
    }
}

pub fn simulate_source(args: &SourceArgs) -> Result<Outcome, CliError> {
    let modes = match &args.modes_csv {
        Some(p) => load_modes(p)?,
        None => {
            if args.modes == 0 {
                return Err(CliError::Input("--modes must be positive".into()));
            }
            centered_phase_ramp(args.modes, args.phase_span_deg.to_radians())
        }
    };
    let aperture = match &args.aperture_csv {
        Some(p) => load_aperture(p)?,
        None => Aperture::central(modes.len(), args.aperture_fraction)?,
    };
    let p = state_from_gamma(
        args.state.gamma.unwrap_or(1.0),
        args.state.phi_deg.to_radians(),
    )?;
    let eff = collection_efficiency(&modes, &aperture)?;
    let v = effective_visibility(&modes, &aperture)?;
    let rho = collected_state(&modes, &aperture, &p)?;
    let mut report = RunReport::new(json!({
        "modes": modes.len(),
        "phase_span_deg": args.phase_span_deg,
        "aperture_fraction": args.aperture_fraction,
        "modes_csv": args.modes_csv.as_ref().map(|p| p.display().to_string()),
        "aperture_csv": args.aperture_csv.as_ref().map(|p| p.display().to_string()),
        "gamma": args.state.gamma.unwrap_or(1.0),
        "phi_deg": args.state.phi_deg,
    }));
    report
        .value("collection_efficiency", eff)
        .value("effective_visibility", v)
        .value("purity", purity(&rho));
    let fringe_grid: Vec<f64> = (0..=180)
        .map(|i| (45.0 + i as f64 * 0.5).to_radians())
        .collect();
    let probs: Vec<f64> = fringe_grid
        .iter()
        .map(|&a| joint_prob(&rho, AnalyzerSetting::new(a, 45f64.to_radians())))
        .collect();
    if let Ok(fv) = visibility_of(&probs) {
        report.value("fringe_visibility_theta_b_45", fv);
    }
    let mut csv = None;
    if args.scan && args.aperture_csv.is_none() {
        let mut t = Table::new(
            "aperture scan",
            &[
                "aperture_fraction",
                "collection_efficiency",
                "effective_visibility",
                "purity",
            ],
        );
        for i in (1..=20).rev() {
            let frac = i as f64 / 20.0;
            let ap = Aperture::central(modes.len(), frac)?;
            let rho = collected_state(&modes, &ap, &p)?;
            t.push(vec![
                frac,
                collection_efficiency(&modes, &ap)?,
                effective_visibility(&modes, &ap)?,
                purity(&rho),
            ]);
        }
        report.tables.push(t.clone());
        csv = Some(CsvOutput::Table(t));
    }
    Ok(Outcome { report, csv })
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Predict(a) => predict(a),
        Command::Ladder(a) => ladder(a),
        Command::Optimize(a) => optimize(a),
        Command::Sweep(a) => sweep(a),
        Command::Bell(a) => bell_cmd(a),
        Command::Analyze(a) => analyze(a),
        Command::SimulateSource(a) => simulate_source(a),
    }
}
