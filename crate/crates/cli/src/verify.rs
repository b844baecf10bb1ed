//! Invariant suite behind `martlab verify`: named checks with explicit tolerances.

use std::f64::consts::PI;

use martensite::energy::relaxed_elastic_energy;
use martensite::fields::{from_modified, to_modified};
use martensite::microstructures::{
    gen_branching, gen_counterexample, gen_crossing_twin, gen_laminate, gen_random_partition, square_profile,
    BranchingParams,
};
use martensite::model::{phase_of_tuple, phase_tuple};
use martensite::rigidity::{incompatibility_defect, mixed_difference_sup, wave_decompose};
use martensite::spectral::{
    curl, gradient, helmholtz_potential, leray_project, neg_sobolev_norm, permode_elastic_oracle, NegNorm,
};
use martensite::{Axis, Grid, PhaseField, ScalarField, VectorField2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    /// Measured quantity; `pass` compares it against `tol` in the sense given by `relation`.
    pub value: f64,
    pub tol: f64,
    pub relation: &'static str,
    pub pass: bool,
}

impl Check {
    fn at_most(name: &'static str, value: f64, tol: f64) -> Self {
        Check { name, value, tol, relation: "<=", pass: value <= tol }
    }

    fn at_least(name: &'static str, value: f64, tol: f64) -> Self {
        Check { name, value, tol, relation: ">=", pass: value >= tol }
    }

    pub fn line(&self) -> String {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        format!("{verdict} {} value={:e} {} {:e}", self.name, self.value, self.relation, self.tol)
    }
}

fn random_field(grid: Grid, rng: &mut ChaCha8Rng) -> ScalarField {
    let values = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    ScalarField::new(grid, values).expect("sized to the grid")
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

fn multiplier_vs_oracle(seed: u64) -> Result<Check, CliError> {
    let g = Grid::square(32)?;
    let mut worst = 0.0f64;
    for i in 0..50 {
        // One-cell blocks: every cell draws its own phase.
        let m = to_modified(&gen_random_partition(seed.wrapping_add(i), g, 1.0 / 32.0)?);
        worst = worst.max(rel(relaxed_elastic_energy(&m), permode_elastic_oracle(&m)));
    }
    Ok(Check::at_most("multiplier_vs_oracle_32", worst, 1e-10))
}

fn pq_mean_identity(seed: u64) -> Result<Check, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for n in [32usize, 33] {
        let g = Grid::square(n)?;
        let w = VectorField2::new(random_field(g, &mut rng), random_field(g, &mut rng))?;
        let p = leray_project(&w);
        let q = gradient(&helmholtz_potential(&w));
        let [m1, m2] = w.mean();
        let split = p.l2_norm_sq() + q.l2_norm_sq() + m1 * m1 + m2 * m2;
        worst = worst.max(rel(w.l2_norm_sq(), split));
    }
    Ok(Check::at_most("leray_helmholtz_mean_energy_split", worst, 1e-10))
}

fn leray_curl_identity(seed: u64) -> Result<Check, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let g = Grid::new(33, 31)?;
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let w = VectorField2::new(random_field(g, &mut rng), random_field(g, &mut rng))?;
        let lhs = 2.0 * PI * leray_project(&w).l2_norm();
        let rhs = neg_sobolev_norm(&curl(&w), NegNorm::H1)?;
        worst = worst.max(rel(lhs, rhs));
    }
    Ok(Check::at_most("leray_norm_equals_curl_hminus1", worst, 1e-10))
}

fn laminate_zero() -> Result<Check, CliError> {
    let g = Grid::square(64)?;
    let mut worst = 0.0f64;
    // Pairs sharing chi1~ are compatible across y1-normal interfaces.
    for (a, b) in [(1u8, 4u8), (4, 1), (2, 3)] {
        let p = gen_laminate(g, Axis::Y1, &square_profile(64, 4, 0.25)?, a, b)?;
        worst = worst.max(relaxed_elastic_energy(&to_modified(&p)));
    }
    Ok(Check::at_most("laminate_relaxed_energy", worst, 1e-12))
}

fn branching_counts() -> Result<Check, CliError> {
    let n = 512usize;
    let p = BranchingParams::new(0.25, 0.25, 1.5, 2, 0.125, 1e-2)?;
    let field = gen_branching(&p, Grid::square(n)?)?;
    let want = [3 * n * n / 16, n * n / 16, 3 * n * n / 16, 9 * n * n / 16];
    let off: usize = field.counts().iter().zip(want).map(|(c, w)| c.abs_diff(w)).sum();
    Ok(Check::at_most("branching_volume_fraction_cells_off", off as f64, 0.0))
}

fn bijection() -> Result<Check, CliError> {
    let mut bad = 0usize;
    for phase in 1..=4u8 {
        if phase_of_tuple(phase_tuple(phase)?) != Some(phase) {
            bad += 1;
        }
    }
    let mut admissible = 0usize;
    for bits in 0..8u8 {
        let t = [0, 1, 2].map(|i| if bits >> i & 1 == 1 { 1i8 } else { -1 });
        if phase_of_tuple(t).is_some() {
            admissible += 1;
            if t[1] != t[0] * t[2] {
                bad += 1;
            }
        }
    }
    bad += admissible.abs_diff(4);
    let g = Grid::new(4, 4)?;
    let p = PhaseField::new(g, (0..16).map(|i| (i % 4) as u8 + 1).collect())?;
    if from_modified(&to_modified(&p))? != p {
        bad += 1;
    }
    Ok(Check::at_most("indicator_bijection_mismatches", bad as f64, 0.0))
}

fn counterexample_identity() -> Result<Check, CliError> {
    let (m, _) = gen_counterexample(2, Grid::square(64)?)?;
    let bad = (0..m.grid.len()).filter(|&i| m.chi2t[i] != m.chi3t[i] * m.chi1t[i]).count();
    Ok(Check::at_most("counterexample_chi2_minus_chi3_chi1", bad as f64, 0.0))
}

fn wave_inequality(seed: u64) -> Result<Check, CliError> {
    let g = Grid::square(24)?;
    let twin = gen_crossing_twin(Axis::Y1, &square_profile(24, 1, 0.5)?, &square_profile(24, 2, 0.5)?, g)?;
    let fields = [twin, gen_random_partition(seed, g, 0.125)?, gen_random_partition(seed, g, 1.0 / 24.0)?];
    let mut worst = 0.0f64;
    for p in &fields {
        for f in to_modified(p).as_scalar() {
            let sup = mixed_difference_sup(&f);
            let r = wave_decompose(&f).residual_l1;
            worst = worst.max(if sup > 0.0 { r / (4.0 * sup) } else if r > 0.0 { f64::INFINITY } else { 0.0 });
        }
    }
    Ok(Check::at_most("wave_residual_over_4_sup_difference", worst, 1.0))
}

fn incompatibility_maximum() -> Result<Check, CliError> {
    let mu = (3.0 - 3f64.sqrt()) / 6.0;
    let theta = [mu * (1.0 - mu), mu * mu, (1.0 - mu) * mu, (1.0 - mu) * (1.0 - mu)];
    let (d14, _) = incompatibility_defect(theta)?;
    Ok(Check::at_least("incompatibility_defect_at_optimum", d14, 0.09))
}

pub fn run_checks(seed: u64) -> Result<Vec<Check>, CliError> {
    Ok(vec![
        multiplier_vs_oracle(seed)?,
        pq_mean_identity(seed)?,
        leray_curl_identity(seed)?,
        laminate_zero()?,
        branching_counts()?,
        bijection()?,
        counterexample_identity()?,
        wave_inequality(seed)?,
        incompatibility_maximum()?,
    ])
}
