//! Command-line front end for the `normflow` solvers.

pub mod commands;
pub mod config;
pub mod output;
pub mod suite;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::commands::{CliError, Outcome, EXIT_CONFIG, EXIT_OK};
use crate::config::{parse_config, Config, ConfigError, Format};

#[derive(Debug, Parser)]
#[command(name = "normflow", version, about = "Normalized solutions of quasilinear elliptic problems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Summary format; overrides `output.format`.
    #[arg(long, global = true, value_enum)]
    pub format: Option<FormatArg>,
    /// Also write SVG plots.
    #[arg(long, global = true)]
    pub plot: bool,
    /// Override a configuration key, `section.key=value`.
    #[arg(long = "set", global = true, value_name = "SECTION.KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Ground state at one mass.
    Solve,
    /// Ground states over `sweep.rhos` with subadditivity checks.
    Sweep,
    /// Kwong profile and its identities.
    Kwong,
    /// Gagliardo–Nirenberg constants.
    Gn,
    /// Critical masses of a family.
    Thresholds,
    /// Mountain-pass solution in the supercritical regime.
    Mpass,
    /// Born–Infeld solution by truncation continuation.
    Borninfeld,
    /// Invariant battery.
    Check,
}

fn load_config(cli: &Cli) -> Result<Config, ConfigError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| ConfigError::Invalid(format!("cannot read {}: {e}", path.display())))?;
            parse_config(&text)?
        }
        None => Config::default(),
    };
    for o in &cli.overrides {
        cfg.apply_override(o)?;
    }
    if let Some(dir) = &cli.out {
        cfg.output.dir = Some(dir.display().to_string());
    }
    if let Some(f) = cli.format {
        cfg.output.format = match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        };
    }
    if cli.plot {
        cfg.output.plot = true;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn dispatch(cmd: Command, cfg: &Config, err: &mut dyn Write) -> Result<Outcome, CliError> {
    match cmd {
        Command::Solve => commands::solve(cfg),
        Command::Sweep => commands::sweep(cfg),
        Command::Kwong => commands::kwong(cfg),
        Command::Gn => commands::gn(cfg),
        Command::Thresholds => commands::thresholds(cfg),
        Command::Mpass => commands::mpass(cfg),
        Command::Borninfeld => commands::borninfeld(cfg),
        Command::Check => commands::check(cfg, |c| {
            let _ = writeln!(err, "{}", c.line());
        }),
    }
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    let cfg = match load_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_CONFIG;
        }
    };
    let outcome = match dispatch(cli.command, &cfg, err) {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return e.exit_code();
        }
    };
    let _ = write!(out, "{}", outcome.summary);
    if let Some(dir) = &cfg.output.dir {
        if let Err(e) = output::write_all(std::path::Path::new(dir), &outcome.artifacts) {
            let _ = writeln!(err, "error: cannot write to {dir}: {e}");
            return EXIT_CONFIG;
        }
    }
    outcome.exit
}
