use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Two-photon polarization nonlocality simulator: joint probabilities,
/// Hardy ladder and CHSH tests, counting statistics.
///
/// Angles are given in degrees on the command line.
#[derive(Debug, Parser)]
#[command(name = "nonlocal", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Print the run report as JSON.
    #[arg(long, global = true)]
    pub json: bool,

    /// Write CSV output (plot data, tables or simulated counts) to this path.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Joint detection probabilities for a state at given analyzer angles.
    Predict(PredictArgs),
    /// Evaluate Hardy's ladder inequality (analytic, simulated or from summary values).
    Ladder(LadderArgs),
    /// Optimal entanglement degree for a list of ladder heights.
    Optimize(OptimizeArgs),
    /// P_K as a function of the entanglement degree (plot data).
    Sweep(SweepArgs),
    /// CHSH Bell test.
    Bell(BellArgs),
    /// Analyze a coincidence count file.
    Analyze(AnalyzeArgs),
    /// Collection efficiency and post-selected purity of the mode-pair source model.
    SimulateSource(SourceArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NoiseArg {
    Colored,
    White,
}

#[derive(Debug, Clone, Args)]
pub struct StateArgs {
    /// Entanglement degree γ = α/β (1 = maximally entangled).
    #[arg(long)]
    pub gamma: Option<f64>,

    /// Relative phase φ of the |VV> amplitude, degrees.
    #[arg(long = "phi-deg", default_value_t = 180.0, allow_hyphen_values = true)]
    pub phi_deg: f64,

    /// Coherence factor V of the noise model.
    #[arg(long, default_value_t = 1.0)]
    pub visibility: f64,
}

#[derive(Debug, Clone, Args)]
pub struct ExperimentArgs {
    /// RNG seed for simulated counts.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Integration time per setting, seconds.
    #[arg(long = "duration-s")]
    pub duration_s: Option<f64>,

    /// Coincidence rate over the ring, 1/s.
    #[arg(long = "pair-rate", default_value_t = 4000.0)]
    pub pair_rate: f64,

    #[arg(long = "dqe-a", default_value_t = 1.0)]
    pub dqe_a: f64,

    #[arg(long = "dqe-b", default_value_t = 1.0)]
    pub dqe_b: f64,

    /// Accidental coincidences per second.
    #[arg(long = "accidental-rate", default_value_t = 0.0)]
    pub accidental_rate: f64,
}

#[derive(Debug, Clone, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub state: StateArgs,

    #[arg(long, value_enum, default_value_t = NoiseArg::Colored)]
    pub noise: NoiseArg,

    /// Site A polarizer angle(s), degrees. Ignored with --fringe.
    #[arg(long = "theta-a", value_delimiter = ',', allow_hyphen_values = true)]
    pub theta_a: Vec<f64>,

    /// Site B polarizer angle, degrees.
    #[arg(long = "theta-b", default_value_t = 45.0, allow_hyphen_values = true)]
    pub theta_b: f64,

    /// Scan θ_A from --from to --to in --step increments at fixed θ_B.
    #[arg(long)]
    pub fringe: bool,

    #[arg(long, default_value_t = 45.0, allow_hyphen_values = true)]
    pub from: f64,

    #[arg(long, default_value_t = 135.0, allow_hyphen_values = true)]
    pub to: f64,

    #[arg(long, default_value_t = 5.0)]
    pub step: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LadderMode {
    Analytic,
    Simulate,
    /// σ-violation from pre-aggregated --pk and --script-p values.
    Summary,
}

#[derive(Debug, Clone, Args)]
pub struct LadderArgs {
    /// Ladder height K.
    #[arg(long, default_value_t = 20)]
    pub k: usize,

    #[command(flatten)]
    pub state: StateArgs,

    #[arg(long, value_enum, default_value_t = NoiseArg::Colored)]
    pub noise: NoiseArg,

    #[arg(long, value_enum, default_value_t = LadderMode::Analytic)]
    pub mode: LadderMode,

    #[command(flatten)]
    pub experiment: ExperimentArgs,

    /// P_K as VALUE,SIGMA (summary mode).
    #[arg(long, value_delimiter = ',')]
    pub pk: Option<Vec<f64>>,

    /// 𝒫 as VALUE,SIGMA (summary mode).
    #[arg(long = "script-p", value_delimiter = ',')]
    pub script_p: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ObjectiveArg {
    /// Maximize P_K.
    Pk,
    /// Maximize P_K − 𝒫.
    Margin,
}

#[derive(Debug, Clone, Args)]
pub struct OptimizeArgs {
    /// Ladder heights, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = vec![1, 2, 4, 5, 10, 20])]
    pub k: Vec<usize>,

    #[command(flatten)]
    pub state: StateArgs,

    #[arg(long, value_enum, default_value_t = NoiseArg::Colored)]
    pub noise: NoiseArg,

    #[arg(long, value_enum, default_value_t = ObjectiveArg::Pk)]
    pub objective: ObjectiveArg,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// Ladder heights, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = vec![4, 5, 10, 20])]
    pub k: Vec<usize>,

    /// Number of γ grid points over [0, 1], endpoints included.
    #[arg(long, default_value_t = 201)]
    pub points: usize,

    #[command(flatten)]
    pub state: StateArgs,

    #[arg(long, value_enum, default_value_t = NoiseArg::Colored)]
    pub noise: NoiseArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BellMode {
    Analytic,
    Simulate,
    /// σ-violation from a pre-aggregated --s value.
    Summary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ChshTimingArg {
    PerSetting,
    Total,
}

#[derive(Debug, Clone, Args)]
pub struct BellArgs {
    #[command(flatten)]
    pub state: StateArgs,

    #[arg(long, value_enum, default_value_t = NoiseArg::White)]
    pub noise: NoiseArg,

    #[arg(long, value_enum, default_value_t = BellMode::Analytic)]
    pub mode: BellMode,

    /// Settings a,a',b,b' in degrees; default searches for the optimum.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub settings: Option<Vec<f64>>,

    #[command(flatten)]
    pub experiment: ExperimentArgs,

    /// Whether --duration-s is per polarizer setting or for the whole run.
    #[arg(long = "chsh-timing", value_enum, default_value_t = ChshTimingArg::PerSetting)]
    pub chsh_timing: ChshTimingArg,

    /// S as VALUE,SIGMA (summary mode).
    #[arg(long, value_delimiter = ',')]
    pub s: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TestArg {
    Ladder,
    Chsh,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    /// Count file (theta_a_deg,theta_b_deg,duration_s,count,n_hh,n_vv).
    pub csv: PathBuf,

    #[arg(long, value_enum, default_value_t = TestArg::Ladder)]
    pub test: TestArg,

    /// Ladder height K.
    #[arg(long)]
    pub k: Option<usize>,

    /// Entanglement degree defining the ladder angles; inferred from the
    /// (θ_0, θ_0) row when omitted.
    #[arg(long)]
    pub gamma: Option<f64>,

    /// CHSH settings a,a',b,b' in degrees (required for --test chsh).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub settings: Option<Vec<f64>>,

    /// Subtract this accidental rate (1/s) from every count.
    #[arg(long = "subtract-accidentals")]
    pub subtract_accidentals: Option<f64>,

    /// Use a Poisson bootstrap with this many resamples for σ.
    #[arg(long)]
    pub bootstrap: Option<usize>,

    /// Seed of the bootstrap resampler.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct SourceArgs {
    /// Number of discrete mode pairs.
    #[arg(long, default_value_t = 256)]
    pub modes: usize,

    /// Total phase spread across the ensemble, degrees.
    #[arg(long = "phase-span-deg", default_value_t = 90.0)]
    pub phase_span_deg: f64,

    /// Central fraction of the ensemble passed by the aperture.
    #[arg(long = "aperture-fraction", default_value_t = 1.0)]
    pub aperture_fraction: f64,

    /// Mode ensemble CSV (weight,phase_radians); overrides --modes/--phase-span-deg.
    #[arg(long = "modes-csv")]
    pub modes_csv: Option<PathBuf>,

    /// Aperture CSV (one acceptance per line); overrides --aperture-fraction.
    #[arg(long = "aperture-csv")]
    pub aperture_csv: Option<PathBuf>,

    /// Also tabulate efficiency and visibility over aperture fractions.
    #[arg(long)]
    pub scan: bool,

    #[command(flatten)]
    pub state: StateArgs,
}
