use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;

use nonlocal_cli::args::Cli;
use nonlocal_cli::commands;
use nonlocal_cli::{CliError, EXIT_INPUT};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT as u8 } else { 0 });
        }
    };
    let start = Instant::now();
    match run(&cli, start) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: &Cli, start: Instant) -> Result<(), CliError> {
    let mut outcome = commands::run(cli)?;
    if let (Some(path), Some(csv)) = (&cli.out, &outcome.csv) {
        csv.write(path)?;
        outcome.report.note(format!("wrote {}", path.display()));
    }
    let report = &mut outcome.report;
    report.command = std::env::args().collect();
    report.timing_ms = start.elapsed().as_secs_f64() * 1e3;
    if cli.json {
        let text =
            serde_json::to_string_pretty(report).map_err(|e| CliError::Internal(e.to_string()))?;
        println!("{text}");
    } else {
        print!("{}", report.render_text());
    }
    Ok(())
}
