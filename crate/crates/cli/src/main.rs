use clap::Parser;
use std::path::PathBuf;
use std::process::ExitCode;
use vitalkit_cli::{emit, execute, render, CliError, Command, Format, RunConfig};

/// Vitality mortality models: survival, fitting, pricing, causes of death,
/// lifecycle policies and disability probabilities.
#[derive(Debug, Parser)]
#[command(name = "vitalkit", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every random stream; required by sampling commands.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file (default: stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv, global = true)]
    format: Format,
}

fn set_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("VITALKIT_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::config("VITALKIT_THREADS", format!("not a non-negative integer: {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::config("VITALKIT_THREADS", e.to_string()))
}

fn run(args: &Args) -> Result<(), CliError> {
    set_threads()?;
    let path = args.config.as_ref().ok_or_else(|| CliError::config("--config", "required"))?;
    let cfg = RunConfig::load(path)?;
    let output = execute(args.command, &cfg, args.seed)?;
    emit(&render(&output, args.format)?, args.out.as_deref())
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
