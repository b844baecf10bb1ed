//! Elastic, surface and total energies, compatibility residuals and the
//! interpolation-inequality evaluator.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{to_modified, total_variation, variation, Grid, ModifiedIndicators, PhaseField, ScalarField, SymStrainField};
use crate::model::{target_matrix, Diagonal};
use crate::spectral::{forward, inv_gradient, SpectralField};

/// `total = eta^{1/3} surface + eta^{-2/3} elastic`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub eta: f64,
    pub elastic: f64,
    pub surface: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    pub fn new(eta: f64, elastic: f64, surface: f64) -> Result<Self> {
        check_eta(eta)?;
        Ok(Self { eta, elastic, surface, total: combine(eta, elastic, surface) })
    }

    pub fn recomputed_total(&self) -> f64 {
        combine(self.eta, self.elastic, self.surface)
    }
}

fn combine(eta: f64, elastic: f64, surface: f64) -> f64 {
    eta.cbrt() * surface + elastic / (eta.cbrt() * eta.cbrt())
}

fn check_eta(eta: f64) -> Result<()> {
    if eta.is_finite() && eta > 0.0 {
        Ok(())
    } else {
        Err(Error::Param(format!("eta must be positive and finite, got {eta}")))
    }
}

/// Closed-form multiplier `2|k|^{-4}(|k|^2 |k2 X2 - k1 X1|^2 + 2 k1^2 k2^2 |X3|^2)` summed over `k != 0`.
fn closed_form_sum(f1: &SpectralField, f2: &SpectralField, f3: &SpectralField) -> f64 {
    let mut total = 0.0;
    for k in 0..f1.coeffs.len() {
        let (k1, k2) = f1.wavevector(k);
        if k1 == 0 && k2 == 0 {
            continue;
        }
        let (a, b) = (k1 as f64, k2 as f64);
        let kk = a * a + b * b;
        let t1 = (f2.coeffs[k] * b - f1.coeffs[k] * a).norm_sqr();
        let t3 = f3.coeffs[k].norm_sqr();
        total += 2.0 * (kk * t1 + 2.0 * a * a * b * b * t3) / (kk * kk);
    }
    total
}

/// Exact relaxed elastic energy of admissible indicators.
pub fn relaxed_elastic_energy(m: &ModifiedIndicators) -> f64 {
    let [c1, c2, c3] = m.as_scalar();
    closed_form_sum(&forward(&c1), &forward(&c2), &forward(&c3))
}

/// Closed-form multiplier applied to arbitrary real triples `(chi1~, chi2~, chi3~)`.
pub fn relaxed_elastic_energy_raw(c1: &ScalarField, c2: &ScalarField, c3: &ScalarField) -> Result<f64> {
    c1.grid.ensure_same(&c2.grid)?;
    c1.grid.ensure_same(&c3.grid)?;
    Ok(closed_form_sum(&forward(c1), &forward(c2), &forward(c3)))
}

/// General multiplier for a symmetric target `U`:
/// `|k|^{-4}(|k|^4 |FU|^2 - 2|k|^2 |FU k|^2 + |k.FU k|^2)` with `k = (k1, k2, 0)`.
pub fn relaxed_elastic_energy_general(u: &SymStrainField) -> f64 {
    let grid = u.grid;
    let spec: Vec<SpectralField> = (0..6)
        .map(|c| forward(&ScalarField { grid, values: u.comps[c].clone() }))
        .collect();
    let entry = |k: usize, i: usize, j: usize| -> Complex64 {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        let slot = SymStrainField::ORDER.iter().position(|&p| p == (a, b)).expect("valid index");
        spec[slot].coeffs[k]
    };
    let mut total = 0.0;
    for k in 0..grid.len() {
        let (k1, k2) = spec[0].wavevector(k);
        if k1 == 0 && k2 == 0 {
            continue;
        }
        let kv = [k1 as f64, k2 as f64, 0.0];
        let kk = kv[0] * kv[0] + kv[1] * kv[1];
        let mut frob = 0.0;
        let mut uk = [Complex64::new(0.0, 0.0); 3];
        for i in 0..3 {
            for j in 0..3 {
                let v = entry(k, i, j);
                frob += v.norm_sqr();
                uk[i] += v * kv[j];
            }
        }
        let uk_sq: f64 = uk.iter().map(|c| c.norm_sqr()).sum();
        let kuk = uk[0] * kv[0] + uk[1] * kv[1];
        total += (kk * kk * frob - 2.0 * kk * uk_sq + kuk.norm_sqr()) / (kk * kk);
    }
    total
}

/// Off-diagonal target tensor `U0` of the indicators, diagonal zero.
pub fn indicator_tensor(m: &ModifiedIndicators) -> SymStrainField {
    let [c1, c2, c3] = m.as_scalar();
    let mut u = SymStrainField::zeros(m.grid);
    u.comps[1] = c3.values;
    u.comps[2] = c2.values;
    u.comps[4] = c1.values;
    u
}

/// `int |e - T(chi~)|^2` by the midpoint rule, `T` the unit-amplitude target matrix.
pub fn elastic_energy_pointwise(e: &SymStrainField, m: &ModifiedIndicators, diag: &Diagonal) -> Result<f64> {
    e.grid.ensure_same(&m.grid)?;
    let mut acc = 0.0;
    for k in 0..e.grid.len() {
        let t = target_matrix(diag, [m.chi1t[k] as f64, m.chi2t[k] as f64, m.chi3t[k] as f64]);
        for (c, &(i, j)) in SymStrainField::ORDER.iter().enumerate() {
            let d = e.comps[c][k] - t[i][j];
            acc += if i == j { d * d } else { 2.0 * d * d };
        }
    }
    Ok(acc * e.grid.cell_area())
}

/// Sum over the four phases of the grid-aligned perimeter of each indicator.
pub fn surface_energy(p: &PhaseField) -> f64 {
    (1..=4u8)
        .map(|ph| total_variation(&p.indicator(ph)).expect("indicators are binary"))
        .sum()
}

/// Total energy with the default diagonal constants.
pub fn total_energy(p: &PhaseField, eta: f64, e: Option<&SymStrainField>) -> Result<EnergyBreakdown> {
    total_energy_with(p, eta, e, &Diagonal::default())
}

/// Relaxed elastic part when `e` is absent, pointwise part otherwise.
pub fn total_energy_with(
    p: &PhaseField,
    eta: f64,
    e: Option<&SymStrainField>,
    diag: &Diagonal,
) -> Result<EnergyBreakdown> {
    check_eta(eta)?;
    let m = to_modified(p);
    let elastic = match e {
        Some(e) => elastic_energy_pointwise(e, &m, diag)?,
        None => relaxed_elastic_energy(&m),
    };
    EnergyBreakdown::new(eta, elastic, surface_energy(p))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualDecomposition {
    /// `(e22 - d2) / 2`.
    pub rho11: ScalarField,
    /// `chi3~ - e12`.
    pub rho12: ScalarField,
    /// `(e11 - d1) / 2`.
    pub rho22: ScalarField,
    /// `chi1~ - e23`.
    pub second23: ScalarField,
    /// `chi2~ - e13`.
    pub second13: ScalarField,
    /// Sum of the squared L2 norms of all five residual fields.
    pub rho_l2_sq: f64,
    /// `H^{-2}` norm of `d1 d2 chi3~ - d11 rho11 - d12 rho12 - d22 rho22`.
    pub identity_residual: f64,
}

pub fn compute_residuals(e: &SymStrainField, m: &ModifiedIndicators, diag: &Diagonal) -> Result<ResidualDecomposition> {
    e.grid.ensure_same(&m.grid)?;
    let grid = e.grid;
    let [c1, c2, c3] = m.as_scalar();
    let comp = |i, j| e.component(i, j);
    let rho11 = comp(1, 1).map(|v| 0.5 * (v - diag.d2));
    let rho22 = comp(0, 0).map(|v| 0.5 * (v - diag.d1));
    let rho12 = c3.sub(&comp(0, 1))?;
    let second23 = c1.sub(&comp(1, 2))?;
    let second13 = c2.sub(&comp(0, 2))?;
    let rho_l2_sq = [&rho11, &rho12, &rho22, &second23, &second13].iter().map(|f| f.l2_norm_sq()).sum();
    let identity_residual = identity_h2_residual(grid, &c3, &rho11, &rho12, &rho22);
    Ok(ResidualDecomposition { rho11, rho12, rho22, second23, second13, rho_l2_sq, identity_residual })
}

/// Modes on Nyquist lines are skipped, matching the derivative convention.
fn identity_h2_residual(grid: Grid, c3: &ScalarField, r11: &ScalarField, r12: &ScalarField, r22: &ScalarField) -> f64 {
    let (x3, a, b, c) = (forward(c3), forward(r11), forward(r12), forward(r22));
    let mut acc = 0.0;
    for k in 0..grid.len() {
        let (k1, k2) = x3.wavevector(k);
        if (k1 == 0 && k2 == 0) || x3.on_nyquist_line(k) {
            continue;
        }
        let (p, q) = (k1 as f64, k2 as f64);
        let d = (x3.coeffs[k] * (p * q) - a.coeffs[k] * (p * p) - b.coeffs[k] * (p * q) - c.coeffs[k] * (q * q))
            * (4.0 * PI * PI);
        let kk = p * p + q * q;
        acc += d.norm_sqr() / (kk * kk);
    }
    acc.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterpolationGap {
    /// `int f^2`.
    pub lhs: f64,
    /// `eta^{1/3} int|grad f| sup|f| + eta^{-2/3} int ||grad|^{-1} f|^2`.
    pub rhs: f64,
    /// `lhs / rhs`, defined as 0 when both vanish.
    pub ratio: f64,
}

pub fn interpolation_gap(f: &ScalarField, eta: f64) -> Result<InterpolationGap> {
    check_eta(eta)?;
    let ig = inv_gradient(f)?;
    let lhs = f.l2_norm_sq();
    let c = eta.cbrt();
    let rhs = c * variation(f) * f.max_abs() + ig.l2_norm_sq() / (c * c);
    let ratio = if rhs == 0.0 { 0.0 } else { lhs / rhs };
    Ok(InterpolationGap { lhs, rhs, ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::ModifiedIndicators;
    use crate::model::PHASE_TUPLES;
    use crate::spectral::{derivative, permode_elastic_oracle};
    use crate::Axis;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_indicators(grid: Grid, seed: u64) -> ModifiedIndicators {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = grid.len();
        let (mut a, mut b, mut c) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        for _ in 0..n {
            let t = PHASE_TUPLES[rng.gen_range(0..4)];
            a.push(t[0]);
            b.push(t[1]);
            c.push(t[2]);
        }
        ModifiedIndicators::new(grid, a, b, c).unwrap()
    }

    fn random_smooth(grid: Grid, seed: u64, modes: i64) -> ScalarField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut terms = Vec::new();
        for p in -modes..=modes {
            for q in -modes..=modes {
                terms.push((p as f64, q as f64, rng.gen_range(-1.0..1.0), rng.gen_range(0.0..2.0 * PI)));
            }
        }
        ScalarField::from_fn(grid, |y1, y2| {
            terms.iter().map(|&(p, q, a, ph)| a * (2.0 * PI * (p * y1 + q * y2) + ph).cos()).sum()
        })
    }

    fn true_strain(grid: Grid, seed: u64) -> SymStrainField {
        let u: Vec<ScalarField> = (0..3).map(|i| random_smooth(grid, seed + i, 3)).collect();
        let d = |f: &ScalarField, ax| derivative(f, ax);
        let mut e = SymStrainField::zeros(grid);
        e.set_component(0, 0, &d(&u[0], Axis::Y1)).unwrap();
        e.set_component(1, 1, &d(&u[1], Axis::Y2)).unwrap();
        e.set_component(0, 1, &d(&u[1], Axis::Y1).add(&d(&u[0], Axis::Y2)).unwrap().scale(0.5)).unwrap();
        e.set_component(0, 2, &d(&u[2], Axis::Y1).scale(0.5)).unwrap();
        e.set_component(1, 2, &d(&u[2], Axis::Y2).scale(0.5)).unwrap();
        e
    }

    #[test]
    fn constant_indicators_zero() {
        let g = Grid::square(8).unwrap();
        for t in PHASE_TUPLES {
            let n = g.len();
            let m = ModifiedIndicators::new(g, vec![t[0]; n], vec![t[1]; n], vec![t[2]; n]).unwrap();
            assert_eq!(relaxed_elastic_energy(&m), 0.0);
        }
    }

    #[test]
    fn cosine_raw_value() {
        let g = Grid::square(16).unwrap();
        let z = ScalarField::zeros(g);
        let c = ScalarField::from_fn(g, |y1, _| (2.0 * PI * y1).cos());
        let e = relaxed_elastic_energy_raw(&c, &z, &z).unwrap();
        assert!((e - 1.0).abs() < 1e-12);
    }

    #[test]
    fn matches_oracle_and_general_form() {
        let g = Grid::new(12, 16).unwrap();
        for seed in 0..5 {
            let m = random_indicators(g, seed);
            let a = relaxed_elastic_energy(&m);
            let b = permode_elastic_oracle(&m);
            let c = relaxed_elastic_energy_general(&indicator_tensor(&m));
            assert!((a - b).abs() <= 1e-10 * a);
            assert!((a - c).abs() <= 1e-10 * a);
        }
    }

    #[test]
    fn general_form_ignores_constant_diagonal() {
        let g = Grid::square(8).unwrap();
        let m = random_indicators(g, 9);
        let mut u = indicator_tensor(&m);
        let base = relaxed_elastic_energy_general(&u);
        u.comps[0].iter_mut().for_each(|v| *v = -1.0 / 3.0);
        u.comps[3].iter_mut().for_each(|v| *v = 24.0);
        assert!((relaxed_elastic_energy_general(&u) - base).abs() < 1e-10 * base);
    }

    #[test]
    fn sign_flip_invariance() {
        let g = Grid::square(8).unwrap();
        let m = random_indicators(g, 3);
        let neg = |v: &Vec<i8>| v.iter().map(|x| -x).collect::<Vec<_>>();
        let flipped = ModifiedIndicators { grid: g, chi1t: neg(&m.chi1t), chi2t: neg(&m.chi2t), chi3t: neg(&m.chi3t) };
        assert!((relaxed_elastic_energy(&m) - relaxed_elastic_energy(&flipped)).abs() < 1e-12);
    }

    #[test]
    fn pointwise_values() {
        let g = Grid::square(4).unwrap();
        let diag = Diagonal::default();
        let n = g.len();
        let m = ModifiedIndicators::new(g, vec![1; n], vec![1; n], vec![1; n]).unwrap();
        let t = target_matrix(&diag, [1.0, 1.0, 1.0]);
        let e = SymStrainField::constant(g, &t);
        assert_eq!(elastic_energy_pointwise(&e, &m, &diag).unwrap(), 0.0);
        let zero = elastic_energy_pointwise(&SymStrainField::zeros(g), &m, &diag).unwrap();
        let expect = diag.d1.powi(2) + diag.d2.powi(2) + diag.d3.powi(2) + 6.0;
        assert!((zero - expect).abs() < 1e-12 * expect);
        assert!(elastic_energy_pointwise(&SymStrainField::zeros(Grid::square(5).unwrap()), &m, &diag).is_err());
    }

    #[test]
    fn relaxed_below_pointwise_for_true_strains() {
        let g = Grid::square(16).unwrap();
        let diag = Diagonal::default();
        let m = random_indicators(g, 11);
        let relaxed = relaxed_elastic_energy(&m);
        for seed in 0..3 {
            let e = true_strain(g, 100 + 10 * seed);
            assert!(relaxed <= elastic_energy_pointwise(&e, &m, &diag).unwrap());
        }
    }

    #[test]
    fn surface_of_laminate() {
        let g = Grid::square(16).unwrap();
        let labels = (0..g.len()).map(|k| if (k / 16) < 8 { 1 } else { 3 }).collect();
        let p = PhaseField::new(g, labels).unwrap();
        assert_eq!(surface_energy(&p), 4.0);
        assert_eq!(surface_energy(&PhaseField::constant(g, 2).unwrap()), 0.0);
    }

    #[test]
    fn total_energy_scaling() {
        let g = Grid::square(16).unwrap();
        let labels = (0..g.len()).map(|k| if (k % 16) < 5 { 2 } else { 3 }).collect();
        let p = PhaseField::new(g, labels).unwrap();
        let a = total_energy(&p, 1e-3, None).unwrap();
        let b = total_energy(&p, 8e-3, None).unwrap();
        assert!((b.surface * b.eta.cbrt() - 2.0 * a.surface * a.eta.cbrt()).abs() < 1e-12);
        assert!((a.total - a.recomputed_total()).abs() <= 1e-12 * a.total);
        assert!(total_energy(&p, 0.0, None).is_err());
    }

    #[test]
    fn residuals_vanish_on_target() {
        let g = Grid::square(8).unwrap();
        let diag = Diagonal::default();
        let n = g.len();
        let m = ModifiedIndicators::new(g, vec![-1; n], vec![1; n], vec![-1; n]).unwrap();
        let e = SymStrainField::constant(g, &target_matrix(&diag, [-1.0, 1.0, -1.0]));
        let r = compute_residuals(&e, &m, &diag).unwrap();
        assert_eq!(r.rho_l2_sq, 0.0);
        assert_eq!(r.identity_residual, 0.0);
    }

    #[test]
    fn residual_identity_for_true_strains() {
        let g = Grid::square(32).unwrap();
        let diag = Diagonal::default();
        let m = random_indicators(g, 5);
        let e = true_strain(g, 40);
        let r = compute_residuals(&e, &m, &diag).unwrap();
        assert!(r.identity_residual <= 1e-8, "{}", r.identity_residual);
        assert!(r.rho_l2_sq <= elastic_energy_pointwise(&e, &m, &diag).unwrap());
    }

    #[test]
    fn interpolation_gap_cosine() {
        let g = Grid::square(64).unwrap();
        let f = ScalarField::from_fn(g, |y1, _| (2.0 * PI * y1).cos());
        let r = interpolation_gap(&f, 1.0).unwrap();
        assert!((r.lhs - 0.5).abs() < 1e-12);
        let tv = variation(&f);
        assert!((tv - 4.0 * (PI / 64.0).cos()).abs() < 1e-12);
        let expect = tv * f.max_abs() + 1.0 / (8.0 * PI * PI);
        assert!((r.rhs - expect).abs() < 1e-12);
        assert!((r.ratio - 0.124).abs() < 2e-3);
        let z = interpolation_gap(&ScalarField::zeros(g), 1.0).unwrap();
        assert_eq!((z.lhs, z.rhs, z.ratio), (0.0, 0.0, 0.0));
        assert!(interpolation_gap(&ScalarField::constant(g, 1.0), 1.0).is_err());
    }
}
