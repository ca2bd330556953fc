use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use scint_cli::config::parse_override;
use scint_cli::{exit, parse_config, CliError, RunConfig};

#[derive(Parser)]
#[command(name = "scint", version, about = "Scintillation index of laser beams in atmospheric turbulence")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the sweep and write the CSV table and its metadata.
    Run(Common),
    /// Validate the configuration and print the resolved values.
    Check(Common),
}

#[derive(Args)]
struct Common {
    /// Configuration file (TOML).
    config: PathBuf,
    /// Override a key, e.g. `--set turbulence.cn2=2.5e-14`. Repeatable.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core. Defaults to $SCINT_WORKERS.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, value_parser = ["correlated", "multiplicative", "both"])]
    mode: Option<String>,
    /// CSV output path; metadata goes to the same path plus `.json`.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn resolve(c: &Common) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(&c.config).map_err(|e| CliError::Io {
        path: c.config.display().to_string(),
        source: e,
    })?;
    let mut overrides = c.set.iter().map(|s| parse_override(s)).collect::<Result<Vec<_>, _>>()?;
    let mut flag = |s: &str| -> Result<(), CliError> {
        overrides.push(parse_override(s)?);
        Ok(())
    };
    if let Some(s) = c.seed {
        flag(&format!("integration.seed={s}"))?;
    }
    if let Some(w) = c.workers {
        flag(&format!("integration.workers={w}"))?;
    }
    if let Some(m) = &c.mode {
        flag(&format!("sweep.modes=\"{m}\""))?;
    }
    let mut cfg = parse_config(&text, &overrides)?;
    if let Some(o) = &c.output {
        cfg.output.path = o.clone();
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Check(c) => match resolve(&c) {
            Ok(cfg) => {
                println!("{cfg:#?}");
                exit::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                e.exit_code()
            }
        },
        Command::Run(c) => match resolve(&c).and_then(|cfg| {
            let mut err = std::io::stderr();
            scint_cli::run::run(&cfg, &mut err)
        }) {
            Ok(summary) => {
                eprintln!(
                    "{} points in {:.1} s, {} with failures",
                    summary.points.len(),
                    summary.wall_time_s,
                    summary.failed_points
                );
                if summary.failed_points > 0 {
                    exit::POINT_FAILURE
                } else {
                    exit::SUCCESS
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                e.exit_code()
            }
        },
    };
    ExitCode::from(code as u8)
}
