use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use qdamp::experiment::{
    run_experiment, run_verify, ExperimentConfig, ExperimentKind, OutputFormat, DEFAULT_AVE, DEFAULT_SEED,
    DEFAULT_SHOTS,
};
use qdamp::Error;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Experiment {
    Single,
    Collective,
    Verify,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
    Json,
}

/// Simulate and verify amplitude-damping circuits.
#[derive(Debug, Parser)]
#[command(name = "qdamp", version)]
struct Cli {
    #[arg(long, value_enum)]
    experiment: Experiment,
    /// Initial condition 1..6 (collective only).
    #[arg(long, default_value_t = 3)]
    initial: u8,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long, default_value_t = DEFAULT_SHOTS)]
    shots: u64,
    #[arg(long, default_value_t = DEFAULT_AVE)]
    ave: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Use exact outcome probabilities instead of sampling.
    #[arg(long)]
    exact: bool,
}

fn open_output(path: Option<&PathBuf>) -> Result<Box<dyn Write>, Error> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Error::Config(format!("cannot create {}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(cli: Cli) -> Result<(), Error> {
    let format = match cli.format {
        Format::Csv => OutputFormat::Csv,
        Format::Json => OutputFormat::Json,
    };
    if let Experiment::Verify = cli.experiment {
        let report = run_verify()?;
        let mut out = open_output(cli.out.as_ref())?;
        match format {
            OutputFormat::Csv => writeln!(out, "{report}")?,
            OutputFormat::Json => {
                writeln!(out, "{}", serde_json::to_string_pretty(&report).map_err(|e| Error::Io(e.to_string()))?)?
            }
        }
        out.flush()?;
        if !report.passed() {
            let n = report.failures().count();
            return Err(Error::Verification(format!("{n} check(s) failed")));
        }
        return Ok(());
    }
    let cfg = ExperimentConfig {
        experiment: match cli.experiment {
            Experiment::Single => ExperimentKind::Single,
            _ => ExperimentKind::Collective,
        },
        initial: cli.initial,
        gamma: cli.gamma,
        n_shots: cli.shots,
        n_ave: cli.ave,
        seed: cli.seed,
        format,
        exact: cli.exact,
    };
    cfg.validate()?;
    let result = run_experiment(&cfg)?;
    let mut out = open_output(cli.out.as_ref())?;
    result.write(format, &mut out)?;
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qdamp: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
