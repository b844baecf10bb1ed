//! Defect functionals measuring how far a configuration is from a crossing twin.

use serde::{Deserialize, Serialize};

use crate::energy::{total_energy, EnergyBreakdown};
use crate::error::{Error, Result};
use crate::fields::{
    finite_difference, shear_resample, to_modified, volume_fractions, Axis, Grid, ModifiedIndicators, PhaseField,
    ScalarField, VectorField2,
};
use crate::microstructures::cumulative_shifts;
use crate::spectral::{derivative, forward, helmholtz_potential, neg_sobolev_norm_sq_spectral, NegNorm};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuterProfile {
    pub axis: Axis,
    /// Sign of the transverse average of `chi3~` per line along `axis` (ties give +1).
    pub f: Vec<i8>,
    /// `int |chi3~ - f|`.
    pub defect_l1: f64,
    /// `F = int_0 f` at the left edge of each line, in transverse cell units.
    pub cumulative: Vec<f64>,
}

impl OuterProfile {
    /// Integer shifts when the shear is grid-exact.
    pub fn shifts(&self) -> Result<Vec<i64>> {
        self.cumulative
            .iter()
            .map(|&c| {
                if (c - c.round()).abs() > 1e-9 {
                    Err(Error::Domain(format!("shear of {c} cells is not grid-aligned")))
                } else {
                    Ok(c.round() as i64)
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InnerProfile {
    /// Average of the pulled-back inner indicator along each sheared line.
    pub g: Vec<f64>,
    /// `||chi_in o Phi - g||^2`, where `chi_in` is `chi1~` for axis `y1` and `chi2~` for `y2`.
    pub defect_l2: f64,
    /// `||chi_out o Phi - (f o Phi) g||`, with `chi_out` the remaining indicator.
    pub defect_chi2: f64,
}

/// Transposes a field onto the `(n2, n1)` grid.
fn transpose(f: &ScalarField) -> ScalarField {
    let Grid { n1, n2 } = f.grid;
    let grid = Grid { n1: n2, n2: n1 };
    ScalarField::from_index_fn(grid, |a, b| f.at(b, a))
}

/// Profile along `y1` of a field whose lines are the columns `i1`.
fn outer_along_y1(c3: &ScalarField) -> (Vec<i8>, f64) {
    let avg = c3.average_over_y2();
    let f: Vec<i8> = avg.iter().map(|&a| if a >= 0.0 { 1 } else { -1 }).collect();
    let n2 = c3.grid.n2;
    let mut acc = 0.0;
    for (i1, &fi) in f.iter().enumerate() {
        acc += c3.values[i1 * n2..(i1 + 1) * n2].iter().map(|v| (v - fi as f64).abs()).sum::<f64>();
    }
    (f, acc * c3.grid.cell_area())
}

pub fn extract_outer(m: &ModifiedIndicators) -> OuterProfile {
    let c3 = m.chi3();
    let (f1, d1) = outer_along_y1(&c3);
    let (f2, d2) = outer_along_y1(&transpose(&c3));
    let (axis, f, defect_l1, na, nb) = if d1 <= d2 {
        (Axis::Y1, f1, d1, m.grid.n1, m.grid.n2)
    } else {
        (Axis::Y2, f2, d2, m.grid.n2, m.grid.n1)
    };
    let ratio = nb as f64 / na as f64;
    let cumulative = cumulative_shifts(&f, 1).into_iter().map(|s| s as f64 * ratio).collect();
    OuterProfile { axis, f, defect_l1, cumulative }
}

/// Pulls back through the shear and averages along sheared lines.
pub fn extract_inner(m: &ModifiedIndicators, outer: &OuterProfile) -> Result<InnerProfile> {
    let shifts = outer.shifts()?;
    let (inner, other) = match outer.axis {
        Axis::Y1 => (m.chi1(), m.chi2()),
        Axis::Y2 => (transpose(&m.chi2()), transpose(&m.chi1())),
    };
    if shifts.len() != inner.grid.n1 || outer.f.len() != inner.grid.n1 {
        return Err(Error::Domain("outer profile does not match the indicator grid".into()));
    }
    let back: Vec<i64> = shifts.iter().map(|s| -s).collect();
    let pulled = shear_resample(&inner, &back)?;
    let pulled_other = shear_resample(&other, &back)?;
    let g = pulled.average_over_y1();
    let gf = ScalarField::from_y2_profile(pulled.grid, &g)?;
    let defect_l2 = pulled.sub(&gf)?.l2_norm_sq();
    let fg = ScalarField::from_index_fn(pulled.grid, |a, b| outer.f[a] as f64 * g[b]);
    let defect_chi2 = pulled_other.sub(&fg)?.l2_norm();
    Ok(InnerProfile { g, defect_l2, defect_chi2 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveDecomposition {
    /// Column averages minus half the mean, indexed by `i1`.
    pub g100: Vec<f64>,
    /// Row averages minus half the mean, indexed by `i2`.
    pub g010: Vec<f64>,
    /// `int |f - g100 - g010|`.
    pub residual_l1: f64,
}

pub fn wave_decompose(f: &ScalarField) -> WaveDecomposition {
    let half = 0.5 * f.mean();
    let g100: Vec<f64> = f.average_over_y2().into_iter().map(|a| a - half).collect();
    let g010: Vec<f64> = f.average_over_y1().into_iter().map(|a| a - half).collect();
    let n2 = f.grid.n2;
    let residual: f64 = f.values.iter().enumerate().map(|(k, v)| (v - g100[k / n2] - g010[k % n2]).abs()).sum();
    WaveDecomposition { g100, g010, residual_l1: residual * f.grid.cell_area() }
}

/// `sup_{h1, h2} int |d1^{h1} d2^{h2} f|` over all integer cell offsets.
pub fn mixed_difference_sup(f: &ScalarField) -> f64 {
    let Grid { n1, n2 } = f.grid;
    let mut best = 0.0f64;
    for h1 in 0..n1 {
        let d1 = finite_difference(f, [1, 0], h1 as i64);
        for h2 in 0..n2 {
            let mut acc = 0.0;
            for i1 in 0..n1 {
                let row = &d1.values[i1 * n2..(i1 + 1) * n2];
                for i2 in 0..n2 {
                    acc += (row[(i2 + h2) % n2] - row[i2]).abs();
                }
            }
            best = best.max(acc);
        }
    }
    best * f.grid.cell_area()
}

/// `(|theta1 (theta2 + theta4) - theta4 (theta1 + theta3)|, |theta1 (theta2 + theta4) - theta2 (theta1 + theta3)|)`.
pub fn incompatibility_defect(theta: [f64; 4]) -> Result<(f64, f64)> {
    let sum: f64 = theta.iter().sum();
    if theta.iter().any(|t| !t.is_finite() || *t < -1e-12) || (sum - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!("volume fractions {theta:?} are not a simplex point")));
    }
    let [t1, t2, t3, t4] = theta;
    let d14 = (t1 * (t2 + t4) - t4 * (t1 + t3)).abs();
    let d12 = (t1 * (t2 + t4) - t2 * (t1 + t3)).abs();
    Ok((d14, d12))
}

/// `<f g> - <f><g>`.
pub fn uncorrelatedness_gap(f: &ScalarField, g: &ScalarField) -> Result<f64> {
    let fg = f.mul(g)?;
    Ok(fg.mean() - f.mean() * g.mean())
}

/// `||d1 u - f d2 u||` for axis `y1`, `||d2 u - f d1 u||` for axis `y2`, spectral derivatives.
pub fn characteristic_residual(u: &ScalarField, outer: &OuterProfile) -> Result<f64> {
    let (along, across) = match outer.axis {
        Axis::Y1 => (derivative(u, Axis::Y1), derivative(u, Axis::Y2)),
        Axis::Y2 => (derivative(u, Axis::Y2), derivative(u, Axis::Y1)),
    };
    let n_line = match outer.axis {
        Axis::Y1 => u.grid.n1,
        Axis::Y2 => u.grid.n2,
    };
    if outer.f.len() != n_line {
        return Err(Error::Domain("outer profile does not match the potential grid".into()));
    }
    let fa = match outer.axis {
        Axis::Y1 => ScalarField::from_index_fn(u.grid, |i1, _| outer.f[i1] as f64),
        Axis::Y2 => ScalarField::from_index_fn(u.grid, |_, i2| outer.f[i2] as f64),
    };
    Ok(along.sub(&fa.mul(&across)?)?.l2_norm())
}

/// `||d_s (u o shear^{-1})||`: the potential is pulled back by the integer shifts of the
/// outer profile, so characteristics become grid lines and no staircase error enters.
pub fn sheared_characteristic_residual(u: &ScalarField, outer: &OuterProfile) -> Result<f64> {
    let shifts = outer.shifts()?;
    let t = match outer.axis {
        Axis::Y1 => u.clone(),
        Axis::Y2 => transpose(u),
    };
    if shifts.len() != t.grid.n1 {
        return Err(Error::Domain("outer profile does not match the potential grid".into()));
    }
    let back: Vec<i64> = shifts.iter().map(|s| -s).collect();
    Ok(derivative(&shear_resample(&t, &back)?, Axis::Y1).l2_norm())
}

/// Inner profile pushed forward to unsheared coordinates: `g(y2 + F(y1))` for axis `y1`.
fn sheared_inner(grid: Grid, outer: &OuterProfile, inner: &InnerProfile) -> Result<ScalarField> {
    let shifts = outer.shifts()?;
    let tgrid = match outer.axis {
        Axis::Y1 => grid,
        Axis::Y2 => Grid { n1: grid.n2, n2: grid.n1 },
    };
    let t = ScalarField::from_y2_profile(tgrid, &inner.g)?;
    let s = shear_resample(&t, &shifts)?;
    Ok(match outer.axis {
        Axis::Y1 => s,
        Axis::Y2 => transpose(&s),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigidityReport {
    pub eta: f64,
    pub energies: EnergyBreakdown,
    pub theta: [f64; 4],
    pub outer: OuterProfile,
    pub inner: InnerProfile,
    pub incompat_defect_14: f64,
    pub incompat_defect_12: f64,
    /// Characteristic residual of the Helmholtz potential of `(chi2~, chi1~)`.
    pub characteristic_residual: f64,
    /// `H^{-1}_full` distance of `(chi2~, chi1~)` from `(f dg, dg)`, `dg` the sheared inner profile.
    pub hminus1_defect: f64,
}

pub fn rigidity_report(p: &PhaseField, eta: f64) -> Result<RigidityReport> {
    let energies = total_energy(p, eta, None)?;
    let theta = volume_fractions(p);
    let m = to_modified(p);
    let outer = extract_outer(&m);
    let inner = extract_inner(&m, &outer)?;
    let (incompat_defect_14, incompat_defect_12) = incompatibility_defect(theta)?;
    let w = VectorField2::new(m.chi2(), m.chi1())?;
    let u = helmholtz_potential(&w);
    let characteristic_residual = characteristic_residual(&u, &outer)?;

    let dg = sheared_inner(p.grid, &outer, &inner)?;
    let f_field = match outer.axis {
        Axis::Y1 => ScalarField::from_index_fn(p.grid, |i1, _| outer.f[i1] as f64),
        Axis::Y2 => ScalarField::from_index_fn(p.grid, |_, i2| outer.f[i2] as f64),
    };
    // The sheared inner profile approximates the inner indicator; the outer profile times it the other one.
    let (inner_ind, other_ind) = match outer.axis {
        Axis::Y1 => (m.chi1(), m.chi2()),
        Axis::Y2 => (m.chi2(), m.chi1()),
    };
    let r_inner = inner_ind.sub(&dg)?;
    let r_other = other_ind.sub(&f_field.mul(&dg)?)?;
    let hminus1_defect = (neg_sobolev_norm_sq_spectral(&forward(&r_inner), NegNorm::H1Full)
        + neg_sobolev_norm_sq_spectral(&forward(&r_other), NegNorm::H1Full))
    .sqrt();

    Ok(RigidityReport {
        eta,
        energies,
        theta,
        outer,
        inner,
        incompat_defect_14,
        incompat_defect_12,
        characteristic_residual,
        hminus1_defect,
    })
}

/// Least-squares line `log y = slope log x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope; zero for two points.
    pub stderr: f64,
    pub points: usize,
}

impl SlopeFit {
    /// Prefactor `C = exp(intercept)` of `y = C x^slope`.
    pub fn prefactor(&self) -> f64 {
        self.intercept.exp()
    }
}

/// Fits on pairs with both coordinates positive; needs at least two distinct `x`.
pub fn fit_loglog(x: &[f64], y: &[f64]) -> Option<SlopeFit> {
    let pts: Vec<(f64, f64)> =
        x.iter().zip(y).filter(|(a, b)| **a > 0.0 && **b > 0.0).map(|(a, b)| (a.ln(), b.ln())).collect();
    let n = pts.len();
    if n < 2 {
        return None;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n as f64;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n as f64;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let stderr = if n > 2 {
        let rss: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
        (rss / (n as f64 - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Some(SlopeFit { slope, intercept, stderr, points: n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::microstructures::{crossing_twin_indicators, gen_crossing_twin, square_profile};

    fn twin(grid: Grid) -> ModifiedIndicators {
        let f = square_profile(grid.n1, 2, 0.5).unwrap();
        let g = square_profile(grid.n2, 4, 0.5).unwrap();
        crossing_twin_indicators(Axis::Y1, &f, &g, grid).unwrap()
    }

    #[test]
    fn outer_of_y1_function() {
        let g = Grid::square(16).unwrap();
        let m = twin(g);
        let o = extract_outer(&m);
        assert_eq!(o.axis, Axis::Y1);
        assert_eq!(o.defect_l1, 0.0);
        assert_eq!(o.f, square_profile(16, 2, 0.5).unwrap());
        assert_eq!(o.cumulative[8], 0.0);
    }

    #[test]
    fn inner_of_crossing_twin_is_exact() {
        for grid in [Grid::square(16).unwrap(), Grid::new(8, 32).unwrap()] {
            let m = twin(grid);
            let o = extract_outer(&m);
            let i = extract_inner(&m, &o).unwrap();
            assert_eq!(i.defect_l2, 0.0);
            assert_eq!(i.defect_chi2, 0.0);
        }
    }

    #[test]
    fn y2_axis_twin() {
        let grid = Grid::new(32, 8).unwrap();
        let f = square_profile(8, 2, 0.5).unwrap();
        let g = square_profile(32, 4, 0.25).unwrap();
        let p = gen_crossing_twin(Axis::Y2, &f, &g, grid).unwrap();
        let r = rigidity_report(&p, 1.0).unwrap();
        assert_eq!(r.outer.axis, Axis::Y2);
        assert_eq!(r.outer.defect_l1, 0.0);
        assert_eq!(r.inner.defect_l2, 0.0);
        assert_eq!(r.inner.defect_chi2, 0.0);
        assert!(r.incompat_defect_12 < 1e-15);
        assert!(r.hminus1_defect < 1e-12);
    }

    #[test]
    fn wave_decomposition_cases() {
        let g = Grid::square(16).unwrap();
        let f = ScalarField::from_fn(g, |y1, y2| y1.sin() + (3.0 * y2).cos() + 0.7);
        assert!(wave_decompose(&f).residual_l1 < 1e-12);
        let sq = |x: f64| if x < 0.0 { 1.0 } else { -1.0 };
        let f = ScalarField::from_fn(g, |y1, y2| sq(y1) * sq(y2));
        let w = wave_decompose(&f);
        assert!((w.residual_l1 - f.l1_norm()).abs() < 1e-12);
        assert!(w.residual_l1 <= 4.0 * mixed_difference_sup(&f));
    }

    #[test]
    fn incompatibility_cases() {
        assert_eq!(incompatibility_defect([0.25; 4]).unwrap(), (0.0, 0.0));
        let m = (3.0 - 3f64.sqrt()) / 6.0;
        let th = [m * (1.0 - m), m * m, (1.0 - m) * m, (1.0 - m) * (1.0 - m)];
        let (a, b) = incompatibility_defect(th).unwrap();
        assert!((a - 3f64.sqrt() / 18.0).abs() < 1e-12);
        assert!((b - 3f64.sqrt() / 18.0).abs() < 1e-12);
        assert!(incompatibility_defect([0.5, 0.5, 0.5, -0.5]).is_err());
    }

    #[test]
    fn uncorrelatedness_cases() {
        let g = Grid::square(16).unwrap();
        let sq = ScalarField::from_fn(g, |y1, _| if y1 < 0.0 { 1.0 } else { -1.0 });
        assert!((uncorrelatedness_gap(&sq, &sq).unwrap() - 1.0).abs() < 1e-15);
        let c = ScalarField::constant(g, 0.3);
        assert!(uncorrelatedness_gap(&c, &sq).unwrap().abs() < 1e-15);
    }

    #[test]
    fn characteristic_residual_cases() {
        let g = Grid::square(32).unwrap();
        let o = OuterProfile { axis: Axis::Y1, f: vec![1; 32], defect_l1: 0.0, cumulative: vec![0.0; 32] };
        assert_eq!(characteristic_residual(&ScalarField::zeros(g), &o).unwrap(), 0.0);
        let u = ScalarField::from_fn(g, |_, y2| (2.0 * std::f64::consts::PI * y2).sin());
        let r = characteristic_residual(&u, &o).unwrap();
        assert!((r - derivative(&u, Axis::Y2).l2_norm()).abs() < 1e-12);
    }

    #[test]
    fn slope_fit_recovers_power_law() {
        let x = [1e-4, 1e-3, 1e-2, 1e-1];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(0.5)).collect();
        let s = fit_loglog(&x, &y).unwrap();
        assert!((s.slope - 0.5).abs() < 1e-12);
        assert!((s.prefactor() - 3.0).abs() < 1e-10);
        assert!(fit_loglog(&[1.0], &[1.0]).is_none());
    }

    #[test]
    fn counterexample_potential_has_small_characteristic_residual() {
        let g = Grid::square(256).unwrap();
        for k in [2u32, 4] {
            let (m, u) = crate::microstructures::gen_counterexample(k, g).unwrap();
            let outer = extract_outer(&m);
            assert_eq!(outer.axis, Axis::Y1);
            assert_eq!(outer.defect_l1, 0.0);
            let r = sheared_characteristic_residual(&u, &outer).unwrap();
            assert!(r * (k as f64) <= 1.05, "k = {k}: residual {r}");
            assert!(characteristic_residual(&u, &outer).unwrap() > r);
            // Pulled back, the inner indicator is d_t u_k, far from any t-only profile.
            let inner = extract_inner(&m, &outer).unwrap();
            assert!(inner.defect_l2 >= 1.0 / 64.0, "k = {k}: {}", inner.defect_l2);
        }
    }
}
