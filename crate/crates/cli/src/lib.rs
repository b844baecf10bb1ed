//! `martlab`: batch front-end for the martensite energy lab.
//!
//! Subcommands `generate`, `energy`, `sweep`, `verify` and `report` share one flag set.
//! Exit codes: 0 success, 1 failed check, 2 usage, config or parameter error.

pub mod commands;
pub mod config;
pub mod verify;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{ExperimentConfig, Kind};

pub const VERSION: &str = martensite::VERSION;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("invalid parameters: {0}")]
    Core(#[from] martensite::Error),
    #[error("i/o: {0}")]
    Io(String),
    #[error("{0} check(s) failed")]
    ChecksFailed(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ChecksFailed(_) => 1,
            _ => 2,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "martlab", version, about = "Four-well martensite microstructure lab")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Write a microstructure as CSV plus a PGM preview.
    Generate(Opts),
    /// Energy breakdown of a field file, one JSON object per eta.
    Energy(Opts),
    /// Rigidity reports over members and eta values, as CSV.
    Sweep(Opts),
    /// Run the invariant suite.
    Verify(Opts),
    /// Full rigidity report of a field file as JSON.
    Report(Opts),
}

/// Every flag mirrors the config key of the same name (dashes become underscores).
#[derive(Args, Debug, Default)]
struct Opts {
    /// Field file for `energy` and `report`.
    input: Option<PathBuf>,
    /// Plain key=value file or any output file of this tool.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    n2: Option<String>,
    /// Comma-separated list.
    #[arg(long, allow_hyphen_values = true)]
    eta: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    phase: Option<String>,
    #[arg(long)]
    mu: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    beta: Option<String>,
    #[arg(long)]
    n_gen: Option<String>,
    #[arg(long)]
    w1: Option<String>,
    #[arg(long)]
    axis: Option<String>,
    #[arg(long)]
    periods: Option<String>,
    #[arg(long)]
    fraction: Option<String>,
    #[arg(long)]
    inner_periods: Option<String>,
    #[arg(long)]
    inner_fraction: Option<String>,
    #[arg(long)]
    phase_a: Option<String>,
    #[arg(long)]
    phase_b: Option<String>,
    /// Comma-separated counterexample indices.
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    feature_scale: Option<String>,
    #[arg(long)]
    perturb: Option<String>,
    /// Comma-separated band-flip heights in rows.
    #[arg(long)]
    flip_rows: Option<String>,
}

impl Opts {
    fn overrides(&self) -> Vec<(&'static str, &String)> {
        let pairs: [(&'static str, &Option<String>); 22] = [
            ("kind", &self.kind),
            ("grid", &self.grid),
            ("n2", &self.n2),
            ("eta", &self.eta),
            ("seed", &self.seed),
            ("out", &self.out),
            ("phase", &self.phase),
            ("mu", &self.mu),
            ("lambda", &self.lambda),
            ("beta", &self.beta),
            ("n_gen", &self.n_gen),
            ("w1", &self.w1),
            ("axis", &self.axis),
            ("periods", &self.periods),
            ("fraction", &self.fraction),
            ("inner_periods", &self.inner_periods),
            ("inner_fraction", &self.inner_fraction),
            ("phase_a", &self.phase_a),
            ("phase_b", &self.phase_b),
            ("k", &self.k),
            ("feature_scale", &self.feature_scale),
            ("perturb", &self.perturb),
        ];
        let mut v: Vec<_> = pairs.into_iter().filter_map(|(k, o)| o.as_ref().map(|x| (k, x))).collect();
        if let Some(x) = &self.flip_rows {
            v.push(("flip_rows", x));
        }
        v
    }

    fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = ExperimentConfig::default();
        if let Some(path) = &self.config {
            let bytes = std::fs::read(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            cfg.apply_source(&bytes)?;
        }
        for (k, v) in self.overrides() {
            cfg.set(k, v)?;
        }
        if let Some(p) = &self.input {
            cfg.input = Some(p.clone());
        }
        Ok(cfg)
    }
}

fn no_input(opts: &Opts, command: &str) -> Result<(), CliError> {
    match &opts.input {
        Some(p) => Err(CliError::Usage(format!("{command} takes no field file, got '{}'", p.display()))),
        None => Ok(()),
    }
}

fn dispatch(cmd: Cmd) -> Result<String, CliError> {
    match cmd {
        Cmd::Generate(o) => {
            no_input(&o, "generate")?;
            let files = commands::cmd_generate(&o.resolve()?)?;
            Ok(files.iter().map(|f| format!("wrote {}\n", f.display())).collect())
        }
        Cmd::Energy(o) => commands::cmd_energy(&o.resolve()?),
        Cmd::Report(o) => commands::cmd_report(&o.resolve()?),
        Cmd::Sweep(o) => {
            no_input(&o, "sweep")?;
            Ok(format!("wrote {}\n", commands::cmd_sweep(&o.resolve()?)?.display()))
        }
        Cmd::Verify(o) => {
            no_input(&o, "verify")?;
            let cfg = o.resolve()?;
            let checks = verify::run_checks(cfg.seed)?;
            let mut s: String = checks.iter().map(|c| c.line() + "\n").collect();
            let failed = checks.iter().filter(|c| !c.pass).count();
            if failed > 0 {
                print!("{s}");
                return Err(CliError::ChecksFailed(failed));
            }
            s.push_str(&format!("all {} checks passed\n", checks.len()));
            Ok(s)
        }
    }
}

/// Parses arguments, runs the command, prints its output and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.cmd) {
        Ok(out) => {
            print!("{out}");
            0
        }
        Err(e) => {
            eprintln!("martlab: {e}");
            e.exit_code()
        }
    }
}
