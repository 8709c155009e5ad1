use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use ris_crb::experiments::{run, Rows};
use ris_crb::{ExperimentConfig, ExperimentKind, OutputFormat};
use ris_crb_cli::{emit, exit_code, render, EXIT_CONFIG, EXIT_IO, EXIT_NUMERICAL};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Experiment {
    CrbVsN,
    CrbVsR,
    Spectrum,
    Moments,
    Validate,
}

impl From<Experiment> for ExperimentKind {
    fn from(e: Experiment) -> Self {
        match e {
            Experiment::CrbVsN => ExperimentKind::CrbVsN,
            Experiment::CrbVsR => ExperimentKind::CrbVsR,
            Experiment::Spectrum => ExperimentKind::Spectrum,
            Experiment::Moments => ExperimentKind::Moments,
            Experiment::Validate => ExperimentKind::Validate,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

/// Cramér-Rao bound experiments for DoA estimation through a random RIS.
#[derive(Debug, Parser)]
#[command(name = "ris-crb", version)]
struct Cli {
    experiment: Experiment,
    /// JSON object whose keys override the experiment preset.
    #[arg(long)]
    config: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo trials per sweep point.
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<String>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Hold one RIS draw for all slots of a trial.
    #[arg(long)]
    fixed_ris: bool,
    /// Draw target and sensor angles from the seed.
    #[arg(long)]
    random_angles: bool,
    /// Spectrum at N = 2000 instead of the desk-scale default.
    #[arg(long)]
    full_scale: bool,
}

fn load(cli: &Cli) -> Result<ExperimentConfig, (i32, String)> {
    let kind = ExperimentKind::from(cli.experiment);
    let mut config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| (EXIT_IO, format!("cannot read {path}: {e}")))?;
            ExperimentConfig::from_json_overrides(kind, &text).map_err(|e| (EXIT_CONFIG, e.to_string()))?
        }
        None => ExperimentConfig::preset(kind),
    };
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    if let Some(t) = cli.trials {
        config.n_trials = t;
    }
    if let Some(w) = cli.workers {
        config.workers = Some(w);
    }
    if let Some(o) = &cli.out {
        config.output_path = Some(o.clone());
    }
    if let Some(f) = cli.format {
        config.output_format = match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        };
    }
    config.fixed_ris |= cli.fixed_ris;
    config.random_angles |= cli.random_angles;
    config.full_scale |= cli.full_scale;
    config.validate().map_err(|e| (EXIT_CONFIG, e.to_string()))?;
    Ok(config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match load(&cli) {
        Ok(c) => c,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(code as u8);
        }
    };
    let rows = match run(&config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e) as u8);
        }
    };
    let bytes = match render(&config, &rows, config.output_format) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_IO as u8);
        }
    };
    if let Err(e) = emit(&bytes, config.output_path.as_deref()) {
        eprintln!("error: cannot write output: {e}");
        return ExitCode::from(EXIT_IO as u8);
    }
    if let Rows::Checks(checks) = &rows {
        let mut failed = false;
        for c in checks {
            eprintln!(
                "{:<34} {}  observed {:.3e}  tolerance {:.1e}  {:.1} ms",
                c.name,
                if c.passed { "pass" } else { "FAIL" },
                c.observed,
                c.tolerance,
                c.runtime_ms
            );
            failed |= !c.passed;
        }
        if failed {
            return ExitCode::from(EXIT_NUMERICAL as u8);
        }
    }
    ExitCode::SUCCESS
}
