use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use frade_cli::run::{apply_overrides, run_config, run_file, Outcome, RunError};
use frade_cli::{presets, ConfigError};

#[derive(Parser)]
#[command(name = "frade", version, about = "Experiments for time-fractional advection-diffusion equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a config file or a built-in preset.
    Run {
        /// Config file in the flat `key = value` format.
        #[arg(required_unless_present = "preset", conflicts_with = "preset")]
        config: Option<PathBuf>,
        #[arg(long)]
        preset: Option<String>,
        /// Output directory; required with --preset.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// List built-in presets.
    Presets,
}

fn init_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("FRADE_THREADS") else {
        return Ok(());
    };
    let n: usize =
        v.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| format!("FRADE_THREADS must be a positive integer, got '{v}'"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn execute(config: Option<PathBuf>, preset: Option<String>, out: Option<PathBuf>, seed: Option<u64>) -> Result<Outcome, RunError> {
    match (config, preset) {
        (Some(path), _) => run_file(&path, out.as_deref(), seed),
        (None, Some(name)) => {
            let p = presets::find(&name)
                .ok_or_else(|| ConfigError { line: 0, message: format!("unknown preset '{name}'; run `frade presets` for the list") })?;
            let Some(dir) = out else {
                return Err(ConfigError { line: 0, message: "--out is required with --preset".into() }.into());
            };
            let mut cfg = p.parse()?;
            apply_overrides(&mut cfg, Some(&dir), seed);
            run_config(&cfg)
        }
        (None, None) => Err(ConfigError { line: 0, message: "give a config file or --preset".into() }.into()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    match cli.command {
        Command::Presets => {
            print!("{}", presets::listing());
            ExitCode::SUCCESS
        }
        Command::Run { config, preset, out, seed } => match execute(config, preset, out, seed) {
            Ok(outcome) => {
                for line in &outcome.lines {
                    println!("{line}");
                }
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(e.exit_code() as u8)
            }
        },
    }
}
