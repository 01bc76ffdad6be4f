use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use gatequbit::io::format::write_json;
use gatequbit::io::{cmd_extract, cmd_fit, cmd_synth, read_report, render_report, ExtractSettings, RunConfig};
use gatequbit::{Error, Result};

/// Synthesize, fit and extract parameters of gate-tunable circuit-QED qubits.
#[derive(Debug, Parser)]
#[command(name = "gatequbit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate synthetic maps and traces from a run configuration.
    Synth {
        /// Run configuration (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed in the configuration.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (defaults to `output.dir` in the configuration, else `out`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Extract device parameters from a directory of data files.
    Extract {
        /// Run configuration supplying the gap and the extraction settings.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Directory holding the data files (defaults to --out).
        #[arg(long)]
        input: Option<PathBuf>,
        /// Directory receiving the report and the plot data.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Accept inputs produced from different configurations.
        #[arg(long)]
        force_mixed_hash: bool,
    },
    /// Fit a model to a trace file.
    Fit {
        #[arg(long)]
        model: String,
        #[arg(long)]
        input: PathBuf,
        /// Comma-separated starting values, one per model parameter.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        init: Option<Vec<f64>>,
        /// Output JSON file; printed to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a summary of a report file.
    Report {
        #[arg(long)]
        input: PathBuf,
    },
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(path)?;
    if seed.is_some() {
        cfg.seed = seed;
        cfg.validate()?;
    }
    Ok(cfg)
}

fn out_dir(out: Option<PathBuf>, cfg: Option<&RunConfig>) -> PathBuf {
    out.or_else(|| cfg.and_then(|c| c.output.dir.clone()))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth { config, seed, out } => {
            let cfg = load_config(&config, seed)?;
            let dir = out_dir(out, Some(&cfg));
            for path in cmd_synth(&cfg, &dir)? {
                println!("{}", path.display());
            }
        }
        Command::Extract {
            config,
            input,
            out,
            force_mixed_hash,
        } => {
            let cfg = config.as_deref().map(RunConfig::load).transpose()?;
            let dir = out_dir(out, cfg.as_ref());
            let input = input.unwrap_or_else(|| dir.clone());
            let settings = ExtractSettings::from_config(cfg.as_ref(), force_mixed_hash);
            let outcome = cmd_extract(&input, &dir, &settings)?;
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            print!("{}", render_report(&outcome.report));
        }
        Command::Fit {
            model,
            input,
            init,
            out,
        } => {
            let result = cmd_fit(&model, &input, init.as_deref())?;
            match out {
                Some(path) => write_json(&path, &result)?,
                None => {
                    let mut s = serde_json::to_string_pretty(&result)?;
                    s.push('\n');
                    print!("{s}");
                }
            }
            if !result.converged {
                eprintln!("warning: fit did not converge: {}", result.message);
            }
        }
        Command::Report { input } => {
            let report = read_report(&input)?;
            print!("{}", render_report(&report));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            let mut source = std::error::Error::source(&err);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(exit_code(&err))
        }
    }
}

fn exit_code(err: &Error) -> u8 {
    err.exit_code().clamp(1, 255) as u8
}
