//! Command-line front end: configuration, artifacts, metrics and rendering.

pub mod artifact;
pub mod commands;
pub mod config;
pub mod error;
pub mod metrics;
pub mod render;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;
use crate::error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(
    name = "dotreg",
    version,
    about = "Dynamic reconstruction regularized by unbalanced optimal transport",
    after_help = "Any config field can be overridden with --section.field=value (values are parsed as JSON, \
                  falling back to a string), and the output directory with --output DIR."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON run configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the ground-truth phantom triple.
    Phantom(Common),
    /// Write the sampling pattern and coil maps.
    Sample(Common),
    /// Simulate noisy data from a phantom.
    Forward {
        #[command(flatten)]
        common: Common,
        /// Directory of the triple to sample (default: <output>/phantom).
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Reconstruct a triple from data.
    Reconstruct {
        #[command(flatten)]
        common: Common,
        /// Data array (default: <output>/forward/data).
        #[arg(long)]
        data: Option<PathBuf>,
        /// Phantom directory for the relative error (default: <output>/phantom).
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Run a stability or vanishing-noise study.
    Study {
        #[command(flatten)]
        common: Common,
        /// Exact data (default: the noiseless forward data of the phantom).
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Render a real array as PGM images, one per time slice.
    Render {
        /// Array to render (path of the .bin or .json file, or their stem).
        #[arg(long)]
        input: PathBuf,
        /// Output directory (default: the directory of the input).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a triple against data and phantom.
    Metrics {
        #[command(flatten)]
        common: Common,
        /// Triple directory (default: <output>/reconstruct).
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        truth: Option<PathBuf>,
    },
}

/// `--section.field=value` and `--output[=]DIR` go to the config; the rest to clap.
fn split_overrides(args: Vec<String>) -> (Vec<String>, Vec<String>) {
    let mut cli = Vec::new();
    let mut overrides = Vec::new();
    let mut args = args.into_iter().enumerate();
    while let Some((n, a)) = args.next() {
        if n > 0 && a == "--output" {
            match args.next() {
                Some((_, dir)) => overrides.push(format!("--output={dir}")),
                None => cli.push(a),
            }
            continue;
        }
        let key = a.strip_prefix("--").and_then(|b| b.split_once('=')).map(|(k, _)| k);
        match key {
            Some(k) if n > 0 && (k.contains('.') || k == "output") => overrides.push(a),
            _ => cli.push(a),
        }
    }
    (cli, overrides)
}

fn load(common: &Common, overrides: &[String]) -> Result<RunConfig> {
    RunConfig::load(common.config.as_deref(), overrides)
}

fn dispatch(command: Command, overrides: &[String]) -> Result<Vec<PathBuf>> {
    use commands::*;
    Ok(match command {
        Command::Phantom(c) => vec![cmd_phantom(&load(&c, overrides)?)?],
        Command::Sample(c) => vec![cmd_sample(&load(&c, overrides)?)?],
        Command::Forward { common, input } => vec![cmd_forward(&load(&common, overrides)?, input.as_deref())?],
        Command::Reconstruct { common, data, truth } => {
            vec![cmd_reconstruct(&load(&common, overrides)?, data.as_deref(), truth.as_deref())?]
        }
        Command::Study { common, data } => vec![cmd_study(&load(&common, overrides)?, data.as_deref())?],
        Command::Render { input, out } => {
            if !overrides.is_empty() {
                return Err(CliError::Usage("render takes no config overrides".into()));
            }
            let out = out.unwrap_or_else(|| input.parent().map(PathBuf::from).unwrap_or_default());
            cmd_render(&input, &out)?
        }
        Command::Metrics {
            common,
            input,
            data,
            truth,
        } => vec![cmd_metrics(&load(&common, overrides)?, input.as_deref(), data.as_deref(), truth.as_deref())?],
    })
}

/// Run with full argv (program name first) and return the exit code.
pub fn run(args: Vec<String>) -> i32 {
    let (cli_args, overrides) = split_overrides(args);
    let cli = match Cli::try_parse_from(cli_args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            eprintln!("{}", CliError::Usage(first.to_string()).to_line());
            return 1;
        }
    };
    match dispatch(cli.command, &overrides) {
        Ok(paths) => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            for p in paths {
                // a closed pipe is not a failure of the command
                let _ = writeln!(stdout, "{}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("{}", e.to_line());
            e.exit_code()
        }
    }
}
