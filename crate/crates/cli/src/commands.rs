//! Subcommand implementations. Each returns the text it wants on stdout.

use std::fs;
use std::path::{Path, PathBuf};

use martensite::energy::{total_energy, EnergyBreakdown};
use martensite::fields::{from_modified, to_modified};
use martensite::io::{phase_from_bytes, phase_from_csv, phase_to_csv, phase_to_pgm, scalar_to_csv};
use martensite::microstructures::{
    branching_bound, gen_branching, gen_constant, gen_counterexample, gen_crossing_twin, gen_laminate,
    gen_random_partition, perturb_band, perturb_random, square_profile, BranchingParams,
};
use martensite::rigidity::{fit_loglog, rigidity_report, RigidityReport, SlopeFit};
use martensite::{Axis, Grid, PhaseField, ScalarField};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, Kind};
use crate::CliError;

/// A generated configuration plus what is worth recording about it.
pub struct Built {
    pub field: PhaseField,
    pub potential: Option<ScalarField>,
    /// Derived quantities, written as extra header lines.
    pub derived: Vec<String>,
}

pub fn branching_params(cfg: &ExperimentConfig, eta: f64, n1: usize) -> Result<BranchingParams, CliError> {
    Ok(match (cfg.n_gen, cfg.w1) {
        (None, None) => BranchingParams::auto(cfg.mu, cfg.lambda, cfg.beta, eta, n1)?,
        (Some(n), Some(w1)) => BranchingParams::new(cfg.mu, cfg.lambda, cfg.beta, n, w1, eta)?,
        _ => return Err(CliError::Usage("n_gen and w1 must both be given or both be auto".into())),
    })
}

/// Builds one member: the generator selected by `kind`, then the band flip, then the random perturbation.
pub fn build(cfg: &ExperimentConfig, eta: f64, k: u32, flip: usize) -> Result<Built, CliError> {
    let grid = Grid::new(cfg.grid, cfg.n2())?;
    let (along, across) = match cfg.axis {
        Axis::Y1 => (grid.n1, grid.n2),
        Axis::Y2 => (grid.n2, grid.n1),
    };
    let mut derived = Vec::new();
    let mut potential = None;
    let mut field = match cfg.kind {
        Kind::Constant => gen_constant(cfg.phase, grid)?,
        Kind::Laminate => {
            gen_laminate(grid, cfg.axis, &square_profile(along, cfg.periods, cfg.fraction)?, cfg.phase_a, cfg.phase_b)?
        }
        Kind::CrossingTwin => {
            let f = square_profile(along, cfg.periods, cfg.fraction)?;
            let g = square_profile(across, cfg.inner_periods, cfg.inner_fraction)?;
            gen_crossing_twin(cfg.axis, &f, &g, grid)?
        }
        Kind::Branching => {
            let p = branching_params(cfg, eta, grid.n1)?;
            derived.push(format!(
                "derived n_gen={} w1={} w1_lower={} bound={}",
                p.n_gen,
                p.w1,
                p.w1_lower,
                branching_bound(&p)?
            ));
            gen_branching(&p, grid)?
        }
        Kind::Counterexample => {
            let (m, u) = gen_counterexample(k, grid)?;
            potential = Some(u);
            from_modified(&m)?
        }
        Kind::Random => gen_random_partition(cfg.seed, grid, cfg.feature_scale)?,
    };
    if flip > 0 {
        field = from_modified(&perturb_band(&to_modified(&field), flip)?)?;
    }
    if cfg.perturb > 0.0 {
        // Offset so the perturbation stream differs from the random generator's.
        field = perturb_random(&field, cfg.perturb, cfg.seed.wrapping_add(0x9e37_79b9))?;
    }
    Ok(Built { field, potential, derived })
}

fn single<T: Copy>(xs: &[T], key: &str) -> Result<T, CliError> {
    match xs {
        [x] => Ok(*x),
        _ => Err(CliError::Usage(format!("generate takes exactly one value for '{key}', got {}", xs.len()))),
    }
}

fn write(path: PathBuf, bytes: &[u8]) -> Result<PathBuf, CliError> {
    fs::write(&path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(path)
}

fn ensure_out(cfg: &ExperimentConfig) -> Result<(), CliError> {
    fs::create_dir_all(&cfg.out).map_err(|e| CliError::Io(format!("{}: {e}", cfg.out.display())))
}

/// Writes `<kind>.csv`, `<kind>.pgm` and, for the counterexample, `<kind>_potential.csv`.
pub fn cmd_generate(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>, CliError> {
    let eta = if cfg.kind == Kind::Branching { single(&cfg.eta, "eta")? } else { 1.0 };
    let k = if cfg.kind == Kind::Counterexample { single(&cfg.k, "k")? } else { 0 };
    let built = build(cfg, eta, k, single(&cfg.flip_rows, "flip_rows")?)?;
    let mut header = cfg.header("generate");
    header.extend(built.derived.iter().cloned());
    let theta = martensite::fields::volume_fractions(&built.field);
    header.push(format!("derived theta={},{},{},{}", theta[0], theta[1], theta[2], theta[3]));

    ensure_out(cfg)?;
    let name = cfg.kind.name();
    let mut files = vec![
        write(cfg.out.join(format!("{name}.csv")), phase_to_csv(&built.field, &header).as_bytes())?,
        write(cfg.out.join(format!("{name}.pgm")), &phase_to_pgm(&built.field, &header))?,
    ];
    if let Some(u) = &built.potential {
        files.push(write(cfg.out.join(format!("{name}_potential.csv")), scalar_to_csv(u, &header).as_bytes())?);
    }
    Ok(files)
}

/// Reads a CSV or binary phase dump.
pub fn load_field(path: &Path) -> Result<PhaseField, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    if bytes.starts_with(b"MPF1") {
        return Ok(phase_from_bytes(&bytes)?);
    }
    let text = String::from_utf8(bytes).map_err(|_| CliError::Usage(format!("{}: not a text field dump", path.display())))?;
    Ok(phase_from_csv(&text)?.0)
}

fn input_field(cfg: &ExperimentConfig) -> Result<PhaseField, CliError> {
    let path = cfg.input.as_ref().ok_or_else(|| CliError::Usage("a field file is required".into()))?;
    load_field(path)
}

fn nonempty_eta(cfg: &ExperimentConfig) -> Result<(), CliError> {
    if cfg.eta.is_empty() {
        return Err(CliError::Usage("the eta list is empty".into()));
    }
    Ok(())
}

fn json_document<T: serde::Serialize>(cfg: &ExperimentConfig, command: &str, results: &[T]) -> Result<String, CliError> {
    let doc = serde_json::json!({
        "martlab": crate::VERSION,
        "command": command,
        "config": cfg.config_json(),
        "results": results,
    });
    let mut s = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn json_lines<T: serde::Serialize>(items: &[T]) -> Result<String, CliError> {
    let mut s = String::new();
    for it in items {
        s.push_str(&serde_json::to_string(it).map_err(|e| CliError::Io(e.to_string()))?);
        s.push('\n');
    }
    Ok(s)
}

/// One flat breakdown object per eta on stdout; `energy.json` in the output directory.
pub fn cmd_energy(cfg: &ExperimentConfig) -> Result<String, CliError> {
    nonempty_eta(cfg)?;
    let p = input_field(cfg)?;
    let results = cfg.eta.iter().map(|&eta| total_energy(&p, eta, None)).collect::<Result<Vec<EnergyBreakdown>, _>>()?;
    ensure_out(cfg)?;
    write(cfg.out.join("energy.json"), json_document(cfg, "energy", &results)?.as_bytes())?;
    json_lines(&results)
}

/// One rigidity report per eta on stdout; `report.json` in the output directory.
pub fn cmd_report(cfg: &ExperimentConfig) -> Result<String, CliError> {
    nonempty_eta(cfg)?;
    let p = input_field(cfg)?;
    let results = cfg.eta.iter().map(|&eta| rigidity_report(&p, eta)).collect::<Result<Vec<RigidityReport>, _>>()?;
    ensure_out(cfg)?;
    write(cfg.out.join("report.json"), json_document(cfg, "report", &results)?.as_bytes())?;
    json_lines(&results)
}

pub const SWEEP_COLUMNS: &str =
    "member,eta,E_elast,E_surf,E,theta1,theta2,theta3,theta4,d14,d12,outer_defect,inner_defect";

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub member: String,
    pub report: RigidityReport,
}

impl SweepRow {
    fn csv(&self) -> String {
        let r = &self.report;
        let e = &r.energies;
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.member,
            r.eta,
            e.elastic,
            e.surface,
            e.total,
            r.theta[0],
            r.theta[1],
            r.theta[2],
            r.theta[3],
            r.incompat_defect_14,
            r.incompat_defect_12,
            r.outer.defect_l1,
            r.inner.defect_l2
        )
    }
}

/// Rows in (k, flip, eta) order, computed in parallel and collected in order.
pub fn sweep_rows(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>, CliError> {
    nonempty_eta(cfg)?;
    if cfg.flip_rows.is_empty() {
        return Err(CliError::Usage("the flip_rows list is empty".into()));
    }
    let ks: Vec<u32> = if cfg.kind == Kind::Counterexample { cfg.k.clone() } else { vec![0] };
    if ks.is_empty() {
        return Err(CliError::Usage("the k list is empty".into()));
    }
    let mut tasks = Vec::new();
    for &k in &ks {
        for &flip in &cfg.flip_rows {
            for &eta in &cfg.eta {
                tasks.push((k, flip, eta));
            }
        }
    }
    tasks
        .par_iter()
        .map(|&(k, flip, eta)| {
            let built = build(cfg, eta, k, flip)?;
            let member = match cfg.kind {
                Kind::Counterexample => format!("k={k}"),
                _ => format!("flip={flip}"),
            };
            Ok(SweepRow { member, report: rigidity_report(&built.field, eta)? })
        })
        .collect()
}

fn fit_line(name: &str, fit: Option<SlopeFit>) -> String {
    match fit {
        Some(f) => format!(
            "fit {name} slope={} intercept={} stderr={} points={}",
            f.slope, f.intercept, f.stderr, f.points
        ),
        None => format!("fit {name} unavailable"),
    }
}

/// Fitted slopes over all rows, plus the spread of the total energy.
pub fn sweep_footer(rows: &[SweepRow]) -> Vec<String> {
    let col = |f: &dyn Fn(&RigidityReport) -> f64| rows.iter().map(|r| f(&r.report)).collect::<Vec<_>>();
    let e = col(&|r| r.energies.total);
    let eta = col(&|r| r.eta);
    let (lo, hi) = e.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    vec![
        fit_line("outer_defect~E", fit_loglog(&e, &col(&|r| r.outer.defect_l1))),
        fit_line("d14~E", fit_loglog(&e, &col(&|r| r.incompat_defect_14))),
        fit_line("inner_defect~E", fit_loglog(&e, &col(&|r| r.inner.defect_l2))),
        fit_line("E~eta", fit_loglog(&eta, &e)),
        format!("E max/min={}", hi / lo),
    ]
}

pub fn sweep_csv(cfg: &ExperimentConfig, rows: &[SweepRow]) -> String {
    let mut s = String::new();
    for h in cfg.header("sweep") {
        s.push_str(&format!("# {h}\n"));
    }
    s.push_str(SWEEP_COLUMNS);
    s.push('\n');
    for r in rows {
        s.push_str(&r.csv());
        s.push('\n');
    }
    for f in sweep_footer(rows) {
        s.push_str(&format!("# {f}\n"));
    }
    s
}

/// Writes `sweep.csv` and returns its path.
pub fn cmd_sweep(cfg: &ExperimentConfig) -> Result<PathBuf, CliError> {
    let rows = sweep_rows(cfg)?;
    ensure_out(cfg)?;
    write(cfg.out.join("sweep.csv"), sweep_csv(cfg, &rows).as_bytes())
}
