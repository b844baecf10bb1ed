//! Discrete Fourier analysis on the torus.
//!
//! Conventions: `F f(k) = (1/N) sum_x f(x) e^{-2 pi i k.x}` with integer wavevectors
//! `k in {-n/2, ..., n/2 - 1}`. Negative Sobolev weights use `|k|` without `2 pi`;
//! derivative multipliers are `2 pi i k`. Modes on a Nyquist line are kept in norms,
//! zeroed by derivatives, and left untouched by the Leray projection.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{Axis, Grid, ModifiedIndicators, ScalarField, VectorField2};

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    pub grid: Grid,
    /// Coefficients in DFT index order, flat index `i1 * n2 + i2`.
    pub coeffs: Vec<Complex64>,
}

/// Signed integer wavenumber of DFT index `i` on `n` points.
#[inline]
pub fn wavenumber(i: usize, n: usize) -> i64 {
    if i < n.div_ceil(2) {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

#[inline]
pub fn is_nyquist(i: usize, n: usize) -> bool {
    n % 2 == 0 && i == n / 2
}

impl SpectralField {
    /// Integer wavevector of flat index `k`.
    #[inline]
    pub fn wavevector(&self, k: usize) -> (i64, i64) {
        let Grid { n1, n2 } = self.grid;
        (wavenumber(k / n2, n1), wavenumber(k % n2, n2))
    }

    #[inline]
    pub fn on_nyquist_line(&self, k: usize) -> bool {
        let Grid { n1, n2 } = self.grid;
        is_nyquist(k / n2, n1) || is_nyquist(k % n2, n2)
    }

    /// `sum_k |F f(k)|^2`, equal to the mean square of the sampled field.
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Applies a multiplier `m(k1, k2, index)` mode by mode.
    pub fn apply(&self, m: impl Fn(i64, i64, usize) -> Complex64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| {
                let (k1, k2) = self.wavevector(k);
                c * m(k1, k2, k)
            })
            .collect();
        Self { grid: self.grid, coeffs }
    }
}

fn transpose(data: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); data.len()];
    const B: usize = 32;
    for r0 in (0..rows).step_by(B) {
        for c0 in (0..cols).step_by(B) {
            for r in r0..(r0 + B).min(rows) {
                for c in c0..(c0 + B).min(cols) {
                    out[c * rows + r] = data[r * cols + c];
                }
            }
        }
    }
    out
}

fn fft2(data: &mut Vec<Complex64>, grid: Grid, inverse: bool) {
    let Grid { n1, n2 } = grid;
    let mut planner = FftPlanner::<f64>::new();
    let (p2, p1) = if inverse {
        (planner.plan_fft_inverse(n2), planner.plan_fft_inverse(n1))
    } else {
        (planner.plan_fft_forward(n2), planner.plan_fft_forward(n1))
    };
    p2.process(data);
    let mut t = transpose(data, n1, n2);
    p1.process(&mut t);
    *data = transpose(&t, n2, n1);
}

pub fn forward(f: &ScalarField) -> SpectralField {
    let mut data: Vec<Complex64> = f.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft2(&mut data, f.grid, false);
    let norm = 1.0 / f.grid.len() as f64;
    data.iter_mut().for_each(|c| *c *= norm);
    SpectralField { grid: f.grid, coeffs: data }
}

/// Inverse transform; returns the real part.
pub fn inverse(s: &SpectralField) -> ScalarField {
    let mut data = s.coeffs.clone();
    fft2(&mut data, s.grid, true);
    ScalarField { grid: s.grid, values: data.iter().map(|c| c.re).collect() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NegNorm {
    /// Weight `|k|^{-2}`, `k = 0` excluded.
    H1,
    /// Weight `|k|^{-4}`, `k = 0` excluded.
    H2,
    /// Weight `1 / (1 + |k|^2)`, `k = 0` included.
    H1Full,
}

fn ensure_zero_mean(f: &ScalarField, what: &str) -> Result<()> {
    let m = f.mean();
    let scale = f.max_abs().max(1.0);
    if m.abs() > 1e-10 * scale {
        return Err(Error::Domain(format!("{what} needs a zero-mean field, mean is {m:e}")));
    }
    Ok(())
}

/// Weighted coefficient sum for an already transformed field (no mean check).
pub fn neg_sobolev_norm_sq_spectral(s: &SpectralField, which: NegNorm) -> f64 {
    let mut acc = 0.0;
    for (k, c) in s.coeffs.iter().enumerate() {
        let (k1, k2) = s.wavevector(k);
        let kk = (k1 * k1 + k2 * k2) as f64;
        let w = match which {
            NegNorm::H1 if kk == 0.0 => 0.0,
            NegNorm::H2 if kk == 0.0 => 0.0,
            NegNorm::H1 => 1.0 / kk,
            NegNorm::H2 => 1.0 / (kk * kk),
            NegNorm::H1Full => 1.0 / (1.0 + kk),
        };
        acc += w * c.norm_sqr();
    }
    acc
}

pub fn neg_sobolev_norm(f: &ScalarField, which: NegNorm) -> Result<f64> {
    if which != NegNorm::H1Full {
        ensure_zero_mean(f, "negative Sobolev norm")?;
    }
    Ok(neg_sobolev_norm_sq_spectral(&forward(f), which).sqrt())
}

/// Spectral derivative along `axis` (multiplier `2 pi i k`, own-axis Nyquist zeroed).
pub fn derivative(f: &ScalarField, axis: Axis) -> ScalarField {
    inverse(&derivative_spectral(&forward(f), axis))
}

pub fn derivative_spectral(s: &SpectralField, axis: Axis) -> SpectralField {
    let Grid { n1, n2 } = s.grid;
    s.apply(|k1, k2, k| {
        let (kc, nyq) = match axis {
            Axis::Y1 => (k1, is_nyquist(k / n2, n1)),
            Axis::Y2 => (k2, is_nyquist(k % n2, n2)),
        };
        if nyq {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, 2.0 * PI * kc as f64)
        }
    })
}

pub fn gradient(u: &ScalarField) -> VectorField2 {
    let s = forward(u);
    VectorField2 {
        c1: inverse(&derivative_spectral(&s, Axis::Y1)),
        c2: inverse(&derivative_spectral(&s, Axis::Y2)),
    }
}

/// `curl w = d1 w2 - d2 w1`.
pub fn curl(w: &VectorField2) -> ScalarField {
    let a = derivative_spectral(&forward(&w.c2), Axis::Y1);
    let b = derivative_spectral(&forward(&w.c1), Axis::Y2);
    let coeffs = a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| x - y).collect();
    inverse(&SpectralField { grid: w.grid(), coeffs })
}

/// `|grad|^{-1} f`: coefficients divided by `2 pi |k|`, zero at `k = 0`.
pub fn inv_gradient(f: &ScalarField) -> Result<ScalarField> {
    ensure_zero_mean(f, "inverse gradient")?;
    let s = forward(f).apply(|k1, k2, _| {
        let kk = ((k1 * k1 + k2 * k2) as f64).sqrt();
        if kk == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(1.0 / (2.0 * PI * kk), 0.0)
        }
    });
    Ok(inverse(&s))
}

/// Divergence-free part: `F(Pw) = Fw - (k.Fw / |k|^2) k` for `k != 0`; the mean is removed.
pub fn leray_project(w: &VectorField2) -> VectorField2 {
    let grid = w.grid();
    let a = forward(&w.c1);
    let b = forward(&w.c2);
    let zero = Complex64::new(0.0, 0.0);
    let mut p1 = vec![zero; grid.len()];
    let mut p2 = vec![zero; grid.len()];
    for k in 0..grid.len() {
        let (k1, k2) = a.wavevector(k);
        if k1 == 0 && k2 == 0 {
            continue;
        }
        if a.on_nyquist_line(k) {
            p1[k] = a.coeffs[k];
            p2[k] = b.coeffs[k];
            continue;
        }
        let (k1, k2) = (k1 as f64, k2 as f64);
        let proj = (a.coeffs[k] * k1 + b.coeffs[k] * k2) / (k1 * k1 + k2 * k2);
        p1[k] = a.coeffs[k] - proj * k1;
        p2[k] = b.coeffs[k] - proj * k2;
    }
    VectorField2 {
        c1: inverse(&SpectralField { grid, coeffs: p1 }),
        c2: inverse(&SpectralField { grid, coeffs: p2 }),
    }
}

/// Zero-mean potential `u` with `F u = k.Fw / (2 pi i |k|^2)`, so that `grad u = Q w`.
pub fn helmholtz_potential(w: &VectorField2) -> ScalarField {
    let grid = w.grid();
    let a = forward(&w.c1);
    let b = forward(&w.c2);
    let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.len()];
    for (k, c) in coeffs.iter_mut().enumerate() {
        let (k1, k2) = a.wavevector(k);
        if (k1 == 0 && k2 == 0) || a.on_nyquist_line(k) {
            continue;
        }
        let (k1, k2) = (k1 as f64, k2 as f64);
        let num = a.coeffs[k] * k1 + b.coeffs[k] * k2;
        *c = num / Complex64::new(0.0, 2.0 * PI * (k1 * k1 + k2 * k2));
    }
    inverse(&SpectralField { grid, coeffs })
}

type C3 = [Complex64; 3];

/// Solves the Hermitian 3x3 system by complete pivoting; free variables are set to zero.
fn solve3(mut a: [[Complex64; 3]; 3], mut b: C3) -> C3 {
    let zero = Complex64::new(0.0, 0.0);
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.norm()));
    let tol = 1e-13 * scale.max(f64::MIN_POSITIVE);
    let mut perm = [0usize, 1, 2];
    let mut rank = 0;
    for col in 0..3 {
        let (mut pr, mut pc, mut best) = (col, col, 0.0);
        for (r, row) in a.iter().enumerate().skip(col) {
            for (c, v) in row.iter().enumerate().skip(col) {
                if v.norm() > best {
                    (pr, pc, best) = (r, c, v.norm());
                }
            }
        }
        if best <= tol {
            break;
        }
        a.swap(col, pr);
        b.swap(col, pr);
        for row in a.iter_mut() {
            row.swap(col, pc);
        }
        perm.swap(col, pc);
        for r in col + 1..3 {
            let f = a[r][col] / a[col][col];
            for c in col..3 {
                let v = a[col][c];
                a[r][c] -= f * v;
            }
            let v = b[col];
            b[r] -= f * v;
        }
        rank += 1;
    }
    let mut x = [zero; 3];
    for r in (0..rank).rev() {
        let mut s = b[r];
        for c in r + 1..rank {
            s -= a[r][c] * x[c];
        }
        x[r] = s / a[r][r];
    }
    let mut out = [zero; 3];
    for (i, &p) in perm.iter().enumerate() {
        out[p] = x[i];
    }
    out
}

/// Least-squares residual of `min_u |sym(a (x) u) - B|_F^2` over `u in C^3`.
fn permode_residual(a: C3, bmat: [[Complex64; 3]; 3]) -> f64 {
    let zero = Complex64::new(0.0, 0.0);
    // Column j of the 9x3 design matrix: vec of sym(a (x) e_j).
    let col = |j: usize| -> [[Complex64; 3]; 3] {
        let mut m = [[zero; 3]; 3];
        for (r, row) in m.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                let mut s = zero;
                if c == j {
                    s += a[r];
                }
                if r == j {
                    s += a[c];
                }
                *v = 0.5 * s;
            }
        }
        m
    };
    let cols = [col(0), col(1), col(2)];
    let inner = |x: &[[Complex64; 3]; 3], y: &[[Complex64; 3]; 3]| -> Complex64 {
        let mut s = zero;
        for r in 0..3 {
            for c in 0..3 {
                s += x[r][c].conj() * y[r][c];
            }
        }
        s
    };
    let mut ata = [[zero; 3]; 3];
    let mut atb = [zero; 3];
    for i in 0..3 {
        for j in 0..3 {
            ata[i][j] = inner(&cols[i], &cols[j]);
        }
        atb[i] = inner(&cols[i], &bmat);
    }
    let u = solve3(ata, atb);
    let mut res = 0.0;
    for r in 0..3 {
        for c in 0..3 {
            let fit = cols[0][r][c] * u[0] + cols[1][r][c] * u[1] + cols[2][r][c] * u[2];
            res += (fit - bmat[r][c]).norm_sqr();
        }
    }
    res
}

/// Brute-force relaxed elastic energy: per-mode complex least squares over displacements.
pub fn permode_elastic_oracle_raw(c1: &ScalarField, c2: &ScalarField, c3: &ScalarField) -> Result<f64> {
    c1.grid.ensure_same(&c2.grid)?;
    c1.grid.ensure_same(&c3.grid)?;
    let (f1, f2, f3) = (forward(c1), forward(c2), forward(c3));
    let zero = Complex64::new(0.0, 0.0);
    let mut total = 0.0;
    for k in 0..c1.grid.len() {
        let (k1, k2) = f1.wavevector(k);
        if k1 == 0 && k2 == 0 {
            continue;
        }
        let a = [
            Complex64::new(0.0, 2.0 * PI * k1 as f64),
            Complex64::new(0.0, 2.0 * PI * k2 as f64),
            zero,
        ];
        let (x1, x2, x3) = (f1.coeffs[k], f2.coeffs[k], f3.coeffs[k]);
        let b = [[zero, x3, x2], [x3, zero, x1], [x2, x1, zero]];
        total += permode_residual(a, b);
    }
    Ok(total)
}

pub fn permode_elastic_oracle(m: &ModifiedIndicators) -> f64 {
    let [c1, c2, c3] = m.as_scalar();
    permode_elastic_oracle_raw(&c1, &c2, &c3).expect("indicator components share a grid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(grid: Grid, seed: u64) -> ScalarField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ScalarField { grid, values: (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect() }
    }

    fn cos_y1(grid: Grid) -> ScalarField {
        ScalarField::from_fn(grid, |y1, _| (2.0 * PI * y1).cos())
    }

    #[test]
    fn wavenumbers() {
        assert_eq!((0..4).map(|i| wavenumber(i, 4)).collect::<Vec<_>>(), vec![0, 1, -2, -1]);
        assert_eq!((0..5).map(|i| wavenumber(i, 5)).collect::<Vec<_>>(), vec![0, 1, 2, -2, -1]);
        assert!(is_nyquist(2, 4));
        assert!(!is_nyquist(2, 5));
    }

    #[test]
    fn roundtrip_and_parseval() {
        let g = Grid::new(12, 10).unwrap();
        let f = random_field(g, 1);
        let s = forward(&f);
        let back = inverse(&s);
        for (a, b) in f.values.iter().zip(&back.values) {
            assert!((a - b).abs() < 1e-12);
        }
        let ms = f.values.iter().map(|v| v * v).sum::<f64>() / g.len() as f64;
        assert!((s.energy() - ms).abs() < 1e-12 * ms);
    }

    #[test]
    fn hermitian_symmetry_of_real_input() {
        let g = Grid::new(6, 8).unwrap();
        let s = forward(&random_field(g, 2));
        for i1 in 0..6 {
            for i2 in 0..8 {
                let a = s.coeffs[g.idx(i1, i2)];
                let b = s.coeffs[g.idx((6 - i1) % 6, (8 - i2) % 8)];
                assert!((a - b.conj()).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn cosine_norms() {
        let g = Grid::square(16).unwrap();
        let f = cos_y1(g);
        let h1 = neg_sobolev_norm(&f, NegNorm::H1).unwrap();
        assert!((h1 - 0.5f64.sqrt()).abs() < 1e-12);
        assert_eq!(neg_sobolev_norm(&ScalarField::zeros(g), NegNorm::H2).unwrap(), 0.0);
        let full = neg_sobolev_norm(&f, NegNorm::H1Full).unwrap();
        assert!((full - 0.25f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn nonzero_mean_rejected() {
        let g = Grid::square(8).unwrap();
        let f = ScalarField::constant(g, 1.0);
        assert!(neg_sobolev_norm(&f, NegNorm::H1).is_err());
        assert!(neg_sobolev_norm(&f, NegNorm::H2).is_err());
        assert!(neg_sobolev_norm(&f, NegNorm::H1Full).is_ok());
        assert!(inv_gradient(&f).is_err());
    }

    #[test]
    fn inv_gradient_of_cosine() {
        let g = Grid::square(16).unwrap();
        let f = cos_y1(g);
        let u = inv_gradient(&f).unwrap();
        for (a, b) in u.values.iter().zip(&f.values) {
            assert!((a - b / (2.0 * PI)).abs() < 1e-13);
        }
    }

    #[test]
    fn laplacian_undoes_double_inv_gradient() {
        let g = Grid::square(15).unwrap();
        let f = random_field(g, 3).minus_mean();
        let u = inv_gradient(&inv_gradient(&f).unwrap()).unwrap();
        let s = forward(&u).apply(|k1, k2, _| {
            Complex64::new(4.0 * PI * PI * (k1 * k1 + k2 * k2) as f64, 0.0)
        });
        let back = inverse(&s);
        for (a, b) in back.values.iter().zip(&f.values) {
            assert!((a - b).abs() < 1e-11);
        }
    }

    #[test]
    fn derivative_of_sine() {
        let g = Grid::square(32).unwrap();
        let f = ScalarField::from_fn(g, |_, y2| (2.0 * PI * 3.0 * y2).sin());
        let d = derivative(&f, Axis::Y2);
        let expect = ScalarField::from_fn(g, |_, y2| 6.0 * PI * (6.0 * PI * y2).cos());
        for (a, b) in d.values.iter().zip(&expect.values) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(derivative(&f, Axis::Y1).max_abs() < 1e-12);
    }

    #[test]
    fn leray_kills_gradients_keeps_solenoidal() {
        let g = Grid::square(17).unwrap();
        let u = random_field(g, 4);
        let p = leray_project(&gradient(&u));
        assert!(p.l2_norm() < 1e-10);

        let psi = random_field(g, 5);
        let grad = gradient(&psi);
        let w = VectorField2 { c1: grad.c2.scale(-1.0), c2: grad.c1.clone() };
        let pw = leray_project(&w);
        assert!(pw.sub(&w).unwrap().l2_norm() < 1e-10 * w.l2_norm());
    }

    #[test]
    fn helmholtz_recovers_potential() {
        let g = Grid::square(15).unwrap();
        let v = random_field(g, 6).minus_mean();
        let u = helmholtz_potential(&gradient(&v));
        for (a, b) in u.values.iter().zip(&v.values) {
            assert!((a - b).abs() < 1e-10);
        }
        let psi = random_field(g, 7);
        let grad = gradient(&psi);
        let w = VectorField2 { c1: grad.c2.scale(-1.0), c2: grad.c1 };
        assert!(helmholtz_potential(&w).max_abs() < 1e-10);
    }

    #[test]
    fn oracle_constant_and_y2_only() {
        let g = Grid::square(8).unwrap();
        let n = g.len();
        let m = ModifiedIndicators::new(g, vec![1; n], vec![1; n], vec![1; n]).unwrap();
        assert!(permode_elastic_oracle(&m) < 1e-24);
        let c1: Vec<i8> = (0..n).map(|k| if (k % 8) < 4 { 1 } else { -1 }).collect();
        let m = ModifiedIndicators::new(g, c1, vec![1; n], vec![-1; n]).unwrap();
        assert!(permode_elastic_oracle(&m) < 1e-24);
    }

    #[test]
    fn oracle_cosine_value() {
        let g = Grid::square(16).unwrap();
        let z = ScalarField::zeros(g);
        let e = permode_elastic_oracle_raw(&cos_y1(g), &z, &z).unwrap();
        assert!((e - 1.0).abs() < 1e-12);
    }

    #[test]
    fn solve3_degenerate_gives_consistent_solution() {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let a = [[one, zero, zero], [zero, zero, zero], [zero, zero, one]];
        let x = solve3(a, [one, zero, 2.0 * one]);
        assert_eq!(x, [one, zero, 2.0 * one]);
    }
}
