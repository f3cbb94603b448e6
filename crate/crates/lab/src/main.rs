use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use noma_lab::config::{load_config, ExperimentConfig};
use noma_lab::experiments::{self, Command};
use noma_lab::results::write_csv;
use noma_lab::validate::{run_suite, SuiteSettings};
use noma_lab::LabError;

/// Multi-antenna NOMA experiments: Monte Carlo, closed-form rates and
/// resource allocation.
#[derive(Debug, Parser)]
#[command(name = "noma-lab", version)]
struct Cli {
    /// simulate, analytic, optimize-power, optimize-feedback, select-mode,
    /// joint, fig2 ... fig7 or validate.
    command: Command,
    /// TOML experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Monte Carlo trials, overriding the configuration.
    #[arg(long)]
    trials: Option<u64>,
    /// Master seed, overriding the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, overriding the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn write_text(path: &Path, text: &str) -> Result<(), LabError> {
    std::fs::write(path, text).map_err(|e| LabError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn settings(cli: &Cli) -> Result<ExperimentConfig, LabError> {
    let mut config = load_config(&cli.config)?;
    if let Some(t) = cli.trials {
        if t == 0 {
            return Err(LabError::config("--trials", "must be positive"));
        }
        config.trials = t;
    }
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    if let Some(o) = &cli.out {
        config.out_dir = o.clone();
    }
    Ok(config)
}

fn run(cli: &Cli) -> Result<(), LabError> {
    let config = settings(cli)?;
    if cli.command == Command::Validate {
        let report = run_suite(&SuiteSettings {
            trials: config.trials,
            seed: config.seed,
        });
        for line in report.lines() {
            println!("{line}");
        }
        println!("{} checks in {:.1}s", report.checks.len(), report.elapsed.as_secs_f64());
        return match report.failed() {
            0 => Ok(()),
            failed => Err(LabError::Validation {
                failed,
                total: report.checks.len(),
            }),
        };
    }
    let output = experiments::run(cli.command, &config)?;
    std::fs::create_dir_all(&config.out_dir).map_err(|e| LabError::Io {
        path: config.out_dir.clone(),
        source: e,
    })?;
    let csv = config.out_dir.join(format!("{}.csv", cli.command));
    write_csv(&csv, &output.rows)?;
    for line in &output.summary {
        println!("{line}");
    }
    println!("wrote {} rows to {}", output.rows.len(), csv.display());
    if let Some(script) = &output.plot {
        let py = config.out_dir.join(format!("{}.py", cli.command));
        write_text(&py, script)?;
        println!("wrote plot script {}", py.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("noma-lab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
