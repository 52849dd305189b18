use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use zevca::config::{parse_config, preset, ExperimentConfig, PRESETS};
use zevca::output::OrderResult;
use zevca::runner::{run, RunOptions};
use zevca::{Result, ZevcaError};

const EXIT_OTHER: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_ALL_BLOWN_UP: u8 = 3;
const EXIT_ORACLE: u8 = 4;

#[derive(Parser)]
#[command(name = "zevca", version, about = "Zero-velocity complex action propagation and grid reference runs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a TOML config or a bundled preset.
    Run(RunArgs),
    /// List the bundled presets.
    Presets,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Experiment configuration (TOML).
    #[arg(required_unless_present = "preset", conflicts_with = "preset")]
    config: Option<PathBuf>,

    /// Output directory. Takes precedence over ZEVCA_OUT and the config.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Bundled configuration to run instead of a file.
    #[arg(long)]
    preset: Option<String>,

    /// Comma-separated truncation orders, replacing the config's n_list.
    #[arg(long, value_delimiter = ',')]
    n_list: Option<Vec<usize>>,

    /// Omit wall-clock timings so repeated runs give identical files.
    #[arg(long)]
    seedless_deterministic: bool,
}

fn load(args: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = match (&args.config, &args.preset) {
        (_, Some(name)) => preset(name)?,
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)?;
            parse_config(&text)?
        }
        (None, None) => unreachable!("clap requires a config or a preset"),
    };
    if let Some(list) = &args.n_list {
        cfg.n_list = list.clone();
    }
    if let Ok(dir) = std::env::var("ZEVCA_OUT") {
        if !dir.is_empty() {
            cfg.output_dir = dir.into();
        }
    }
    if let Some(dir) = &args.out {
        cfg.output_dir = dir.clone();
    }
    cfg.validate()
        .map_err(|(_, msg)| ZevcaError::Config { line: None, message: msg })?;
    Ok(cfg)
}

fn describe(r: &OrderResult) -> String {
    let value = match (r.value, r.relative_error) {
        (Some(v), Some(e)) => format!("{v:.10e}  rel.err {:.4}%", 100.0 * e),
        _ => String::new(),
    };
    let status = if let Some(b) = &r.blow_up {
        format!("blow-up at t = {}", b.time)
    } else if let Some(f) = &r.failure {
        format!("failed: {f}")
    } else if r.converged {
        "converged".into()
    } else {
        "not converged".into()
    };
    format!("N = {:>2}  {value}  [{status}]", r.order)
}

fn exit_code(err: &ZevcaError) -> u8 {
    match err {
        ZevcaError::Config { .. } => EXIT_CONFIG,
        ZevcaError::Oracle(_) => EXIT_ORACLE,
        _ => EXIT_OTHER,
    }
}

fn run_command(args: &RunArgs) -> std::result::Result<(), u8> {
    let fail = |e: ZevcaError| {
        eprintln!("error: {e}");
        exit_code(&e)
    };
    let cfg = load(args).map_err(fail)?;
    let opts = RunOptions {
        deterministic: args.seedless_deterministic,
    };
    let out = run(&cfg, opts).map_err(fail)?;
    out.write(&cfg.output_dir).map_err(fail)?;

    let s = &out.summary;
    for w in &s.warnings {
        eprintln!("warning: {}", serde_json::to_string(w).unwrap_or_default());
    }
    println!("oracle reference {:.10e}", s.reference);
    for r in &s.results {
        println!("{}", describe(r));
    }
    println!("wrote {}", cfg.output_dir.display());
    if s.all_orders_failed() {
        eprintln!("error: every truncation order stopped early");
        return Err(EXIT_ALL_BLOWN_UP);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Presets => {
            for name in PRESETS {
                println!("{name}");
            }
            ExitCode::SUCCESS
        }
        Command::Run(args) => match run_command(&args) {
            Ok(()) => ExitCode::SUCCESS,
            Err(code) => ExitCode::from(code),
        },
    }
}
