//! Deterministic generators for laminates, crossing twins, the branching
//! construction and the rigidity counterexample, plus a seeded random partition.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{from_modified, Axis, Grid, ModifiedIndicators, PhaseField, ScalarField};

pub fn gen_constant(phase: u8, grid: Grid) -> Result<PhaseField> {
    PhaseField::constant(grid, phase)
}

/// Periodic `+-1` square wave with `periods` repetitions on `n` cells; the first
/// `fraction` of each period is `+1`. Requires `n` divisible by `periods` and the
/// `+1` part to be a whole number of cells.
pub fn square_profile(n: usize, periods: usize, fraction: f64) -> Result<Vec<i8>> {
    if periods == 0 || n % periods != 0 {
        return Err(Error::Param(format!("{periods} periods do not divide {n} cells")));
    }
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::Param(format!("fraction must lie in [0, 1], got {fraction}")));
    }
    let p = n / periods;
    let plus = fraction * p as f64;
    if (plus - plus.round()).abs() > 1e-9 {
        return Err(Error::Param(format!("fraction {fraction} is not grid-aligned on a period of {p} cells")));
    }
    let plus = plus.round() as usize;
    Ok((0..n).map(|i| if i % p < plus { 1 } else { -1 }).collect())
}

/// Two-phase laminate whose interfaces are normal to `axis`: phase `a` where the
/// profile along `axis` is `+1`, phase `b` elsewhere.
pub fn gen_laminate(grid: Grid, axis: Axis, profile: &[i8], a: u8, b: u8) -> Result<PhaseField> {
    let n = match axis {
        Axis::Y1 => grid.n1,
        Axis::Y2 => grid.n2,
    };
    if profile.len() != n {
        return Err(Error::Param(format!("laminate profile needs {n} entries, got {}", profile.len())));
    }
    let labels = (0..grid.len())
        .map(|k| {
            let i = match axis {
                Axis::Y1 => k / grid.n2,
                Axis::Y2 => k % grid.n2,
            };
            if profile[i] > 0 {
                a
            } else {
                b
            }
        })
        .collect();
    PhaseField::new(grid, labels)
}

fn check_pm1(v: &[i8], what: &str) -> Result<()> {
    match v.iter().position(|x| *x != 1 && *x != -1) {
        Some(i) => Err(Error::Param(format!("{what} must be +-1, entry {i} is {}", v[i]))),
        None => Ok(()),
    }
}

/// Per-line integer shifts `S_j`, the grid value of `F = int_0 f` at the left edge of
/// line `j` in units of transverse cells. `S = 0` on the line whose left edge is 0.
pub fn cumulative_shifts(f: &[i8], ratio: i64) -> Vec<i64> {
    let n = f.len();
    let j0 = n / 2;
    let mut s = vec![0i64; n];
    for j in j0 + 1..n {
        s[j] = s[j - 1] + f[j - 1] as i64 * ratio;
    }
    for j in (0..j0).rev() {
        s[j] = s[j + 1] - f[j] as i64 * ratio;
    }
    s
}

/// Crossing twin. For `axis = Y1`: `chi3~ = f(y1)`, `chi1~ = g(y2 + F(y1))`,
/// `chi2~ = chi3~ chi1~`. For `axis = Y2` the roles of `y1, y2` and of `chi1~, chi2~` swap.
pub fn gen_crossing_twin(axis: Axis, f: &[i8], g: &[i8], grid: Grid) -> Result<PhaseField> {
    from_modified(&crossing_twin_indicators(axis, f, g, grid)?)
}

pub fn crossing_twin_indicators(axis: Axis, f: &[i8], g: &[i8], grid: Grid) -> Result<ModifiedIndicators> {
    check_pm1(f, "outer profile")?;
    check_pm1(g, "inner profile")?;
    let (na, nb) = match axis {
        Axis::Y1 => (grid.n1, grid.n2),
        Axis::Y2 => (grid.n2, grid.n1),
    };
    if f.len() != na || g.len() != nb {
        return Err(Error::Param(format!(
            "profiles need lengths ({na}, {nb}), got ({}, {})",
            f.len(),
            g.len()
        )));
    }
    if nb % na != 0 {
        return Err(Error::Param(format!(
            "shear is not grid-exact: transverse count {nb} is not a multiple of {na}"
        )));
    }
    let ratio = (nb / na) as i64;
    let shifts = cumulative_shifts(f, ratio);
    let total = shifts[na - 1] + f[na - 1] as i64 * ratio - shifts[0];
    let wrap = total.rem_euclid(nb as i64) as usize;
    if (0..nb).any(|i| g[(i + wrap) % nb] != g[i]) {
        return Err(Error::Param(format!(
            "inner profile is not invariant under the total shear of {total} cells; the crossing twin is not periodic"
        )));
    }
    let n = grid.len();
    let (mut c1, mut c2, mut c3) = (vec![0i8; n], vec![0i8; n], vec![0i8; n]);
    for a in 0..na {
        let s = shifts[a].rem_euclid(nb as i64) as usize;
        for b in 0..nb {
            let inner = g[(b + s) % nb];
            let k = match axis {
                Axis::Y1 => grid.idx(a, b),
                Axis::Y2 => grid.idx(b, a),
            };
            c3[k] = f[a];
            match axis {
                Axis::Y1 => {
                    c1[k] = inner;
                    c2[k] = f[a] * inner;
                }
                Axis::Y2 => {
                    c2[k] = inner;
                    c1[k] = f[a] * inner;
                }
            }
        }
    }
    ModifiedIndicators::new(grid, c1, c2, c3)
}

/// Parameters of the two-band branching construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchingParams {
    pub mu: f64,
    pub lambda: f64,
    pub beta: f64,
    /// Number of generations `N`.
    pub n_gen: u32,
    /// Coarsest cell width of the upper band `(lambda, 1)`.
    pub w1: f64,
    /// Coarsest cell width of the lower band `(0, lambda)`.
    pub w1_lower: f64,
    pub eta: f64,
}

/// Geometry of one band: generation widths and heights.
#[derive(Debug, Clone, PartialEq)]
pub struct BandGeometry {
    pub widths: Vec<f64>,
    pub heights: Vec<f64>,
}

impl BandGeometry {
    pub fn new(w1: f64, band_height: f64, beta: f64, n_gen: u32) -> Self {
        let n = n_gen as usize;
        let ratio: f64 = (0..n).map(|i| 2f64.powf(-beta * i as f64)).sum();
        let l1 = 0.5 * band_height / ratio;
        Self {
            widths: (0..n).map(|i| w1 * 2f64.powi(-(i as i32))).collect(),
            heights: (0..n).map(|i| l1 * 2f64.powf(-beta * i as f64)).collect(),
        }
    }

    fn finest(&self) -> f64 {
        *self.widths.last().expect("at least one generation")
    }

    fn check(&self, lambda: f64, name: &str) -> Result<()> {
        for (n, (w, l)) in self.widths.iter().zip(&self.heights).enumerate() {
            if *w > *l * (1.0 + 1e-12) {
                return Err(Error::Param(format!(
                    "{name} band: generation {} violates w_n <= l_n ({w:.6} > {l:.6})",
                    n + 1
                )));
            }
        }
        let next = self.finest() / 2.0;
        if next > lambda / 2.0 * (1.0 + 1e-12) {
            return Err(Error::Param(format!(
                "{name} band: w_(N+1) = {next:.6} exceeds lambda/2 = {:.6}",
                lambda / 2.0
            )));
        }
        Ok(())
    }
}

fn reciprocal_integer(x: f64, what: &str) -> Result<u64> {
    let r = 1.0 / x;
    if !(x > 0.0 && x <= 1.0) || (r - r.round()).abs() > 1e-9 * r {
        return Err(Error::Param(format!("{what} must be the reciprocal of a positive integer, got {x}")));
    }
    Ok(r.round() as u64)
}

impl BranchingParams {
    /// Explicit parameters; the lower-band width follows the default rounding rule.
    pub fn new(mu: f64, lambda: f64, beta: f64, n_gen: u32, w1: f64, eta: f64) -> Result<Self> {
        let w1_lower = lower_width(w1, lambda);
        let p = Self { mu, lambda, beta, n_gen, w1, w1_lower, eta };
        p.validate()?;
        Ok(p)
    }

    /// Auto-tuned parameters for a grid with `n1` columns: `w1 ~ eta^{1/3}(1 - lambda)`
    /// rounded to the nearest power-of-two reciprocal, and the largest `N` with
    /// `2^{-N} >= eta^{2/3}` that keeps both bands admissible and exactly resolvable.
    pub fn auto(mu: f64, lambda: f64, beta: f64, eta: f64, n1: usize) -> Result<Self> {
        check_open_unit(mu, "mu")?;
        check_open_unit(lambda, "lambda")?;
        check_positive(eta, "eta")?;
        let target = 1.0 / (eta.cbrt() * (1.0 - lambda));
        let w1 = 2f64.powi(-(target.log2().round().max(0.0) as i32));
        let w1_lower = lower_width(w1, lambda);
        let n_max = ((-(2.0 / 3.0) * eta.log2()).floor() as i64).max(1) as u32;
        let mut best = None;
        for n_gen in 1..=n_max {
            let p = Self { mu, lambda, beta, n_gen, w1, w1_lower, eta };
            if p.validate().is_ok() && p.resolved_exactly(n1) {
                best = Some(p);
            }
        }
        best.ok_or_else(|| {
            Error::Param(format!(
                "no admissible generation count for eta = {eta}, mu = {mu}, lambda = {lambda} on {n1} columns"
            ))
        })
    }

    /// Every cell edge and every `sigma = -1` interval width is a whole number of columns.
    pub fn resolved_exactly(&self, n1: usize) -> bool {
        let whole = |x: f64| x >= 1.0 - 1e-9 && (x - x.round()).abs() < 1e-9;
        [self.upper().finest(), self.lower().finest()]
            .iter()
            .all(|&w| whole(w * n1 as f64) && whole(self.mu * w * n1 as f64 / 2.0) && n1 as f64 >= 4.0 / w - 1e-9)
    }

    pub fn upper(&self) -> BandGeometry {
        BandGeometry::new(self.w1, 1.0 - self.lambda, self.beta, self.n_gen)
    }

    pub fn lower(&self) -> BandGeometry {
        BandGeometry::new(self.w1_lower, self.lambda, self.beta, self.n_gen)
    }

    pub fn validate(&self) -> Result<()> {
        check_open_unit(self.mu, "mu")?;
        check_open_unit(self.lambda, "lambda")?;
        check_positive(self.beta, "beta")?;
        check_positive(self.eta, "eta")?;
        if self.n_gen == 0 {
            return Err(Error::Param("number of generations must be at least 1".into()));
        }
        reciprocal_integer(self.w1, "w1")?;
        reciprocal_integer(self.w1_lower, "lower-band w1")?;
        self.upper().check(self.lambda, "upper")?;
        self.lower().check(self.lambda, "lower")
    }
}

/// Upper width scaled by the band-height ratio `lambda / (1 - lambda)`, rounded down
/// to a power-of-two reciprocal.
fn lower_width(w1: f64, lambda: f64) -> f64 {
    let cells = (1.0 - lambda) / (w1 * lambda);
    2f64.powi(-((cells.log2() - 1e-9).ceil().max(0.0) as i32))
}

fn check_open_unit(x: f64, name: &str) -> Result<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(Error::Param(format!("{name} must lie in (0, 1), got {x}")))
    }
}

fn check_positive(x: f64, name: &str) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::Param(format!("{name} must be positive and finite, got {x}")))
    }
}

/// Branching sign `sigma` at horizontal position `x in [0, 1)` and distance `dist`
/// from the band mid-line. Within a cell of width `w` at height fraction `tau`
/// (0 on the coarse side) `sigma = -1` on `[a, a + mu w/2) U [(1 - mu/2) w, w)`
/// with `a = (1 - mu) w (1 - tau/2)`.
fn branching_sigma(geom: &BandGeometry, mu: f64, x: f64, dist: f64) -> i8 {
    let mut start = 0.0;
    let last = geom.widths.len() - 1;
    for (n, (&w, &l)) in geom.widths.iter().zip(&geom.heights).enumerate() {
        if dist < start + l || n == last {
            let tau = ((dist - start) / l).clamp(0.0, 1.0);
            let xc = x.rem_euclid(w);
            let a = (1.0 - mu) * w * (1.0 - tau / 2.0);
            let minus = (xc >= a && xc < a + mu * w / 2.0) || xc >= (1.0 - mu / 2.0) * w;
            return if minus { -1 } else { 1 };
        }
        start += l;
    }
    unreachable!("loop returns on the last generation")
}

fn check_aligned(x: f64, what: &str) -> Result<()> {
    if (x - x.round()).abs() > 1e-9 {
        Err(Error::Param(format!("{what} is not grid-aligned ({x} cells)")))
    } else {
        Ok(())
    }
}

pub fn gen_branching(p: &BranchingParams, grid: Grid) -> Result<PhaseField> {
    from_modified(&branching_indicators(p, grid)?)
}

/// Upper band `(lambda, 1)`: `chi1~ = 1`, `chi2~ = chi3~ = -sigma` (phases 4 and 1).
/// Lower band `(0, lambda)`: `chi1~ = -1`, `chi2~ = -sigma`, `chi3~ = sigma` (phases 3 and 2).
/// The `y2` coordinate is measured from the bottom edge of the torus.
pub fn branching_indicators(p: &BranchingParams, grid: Grid) -> Result<ModifiedIndicators> {
    p.validate()?;
    let (upper, lower) = (p.upper(), p.lower());
    for (g, name) in [(&upper, "upper"), (&lower, "lower")] {
        let finest = g.finest();
        check_aligned(finest * grid.n1 as f64, &format!("{name} finest cell width"))?;
        if (grid.n1 as f64) < 4.0 / finest - 1e-9 {
            return Err(Error::Param(format!(
                "grid with {} columns cannot resolve {name} finest width {finest} (needs >= {})",
                grid.n1,
                (4.0 / finest).ceil()
            )));
        }
    }
    check_aligned(p.lambda * grid.n2 as f64, "band split lambda")?;
    let split = (p.lambda * grid.n2 as f64).round() as usize;
    let n = grid.len();
    let (mut c1, mut c2, mut c3) = (vec![0i8; n], vec![0i8; n], vec![0i8; n]);
    for i1 in 0..grid.n1 {
        let x = (i1 as f64 + 0.5) / grid.n1 as f64;
        for i2 in 0..grid.n2 {
            let y = (i2 as f64 + 0.5) / grid.n2 as f64;
            let k = grid.idx(i1, i2);
            if i2 >= split {
                let mid = 0.5 * (p.lambda + 1.0);
                let s = branching_sigma(&upper, p.mu, x, (y - mid).abs());
                (c1[k], c2[k], c3[k]) = (1, -s, -s);
            } else {
                let mid = 0.5 * p.lambda;
                let s = branching_sigma(&lower, p.mu, x, (y - mid).abs());
                (c1[k], c2[k], c3[k]) = (-1, -s, s);
            }
        }
    }
    ModifiedIndicators::new(grid, c1, c2, c3)
}

/// `sum_n (eta^{1/3} l_n / w_n + eta^{-2/3} w_n^2 / l_n) + eta^{1/3} + 2^{-(N+1)} eta^{-2/3} w1`,
/// evaluated on the upper band.
pub fn branching_bound(p: &BranchingParams) -> Result<f64> {
    p.validate()?;
    let g = p.upper();
    let c = p.eta.cbrt();
    let sum: f64 = g.widths.iter().zip(&g.heights).map(|(w, l)| c * l / w + w * w / (l * c * c)).sum();
    Ok(sum + c + 2f64.powi(-(p.n_gen as i32 + 1)) * p.w1 / (c * c))
}

/// Base potential on `[-1/2, 1/2)^2`, extended periodically: `|s| + t` below the V,
/// `-|s| - t` in the middle band, `|s| + t - 1` above the inverted V. Values lie in `[-1/2, 0]`.
pub fn zigzag_potential(s: f64, t: f64) -> f64 {
    let s = (s + 0.5).rem_euclid(1.0) - 0.5;
    let t = (t + 0.5).rem_euclid(1.0) - 0.5;
    let a = s.abs();
    if t < -a {
        a + t
    } else if t < 0.5 - a {
        -a - t
    } else {
        a + t - 1.0
    }
}

/// `d/dt` of the base potential, `+-1` with lower/left-closed regions.
pub fn zigzag_dt(s: f64, t: f64) -> i8 {
    let s = (s + 0.5).rem_euclid(1.0) - 0.5;
    let t = (t + 0.5).rem_euclid(1.0) - 0.5;
    let a = s.abs();
    if t < -a || t >= 0.5 - a {
        1
    } else {
        -1
    }
}

/// Default outer profile for the counterexample: `+1` on `y1 < 0`, `-1` on `y1 >= 0`.
pub fn two_stripe_profile(n: usize) -> Vec<i8> {
    (0..n).map(|i| if 2 * i < n { 1 } else { -1 }).collect()
}

pub fn gen_counterexample(k: u32, grid: Grid) -> Result<(ModifiedIndicators, ScalarField)> {
    gen_counterexample_with(k, grid, &two_stripe_profile(grid.n1))
}

/// Member `k` of the counterexample family in physical coordinates. With
/// `u_k(s, t) = k^{-2} u(k s, k^2 t)` and the shear `(s, t) = (y1, y2 + F(y1))`,
/// `chi1~ = d_t u_k`, `chi3~ = f(y1)`, `chi2~ = f chi1~`. The returned potential is
/// `u_k` composed with the shear, so its characteristic derivative is `d_s u_k`.
pub fn gen_counterexample_with(k: u32, grid: Grid, f: &[i8]) -> Result<(ModifiedIndicators, ScalarField)> {
    if k == 0 {
        return Err(Error::Param("counterexample index k must be positive".into()));
    }
    let kk = (k as usize) * (k as usize);
    if grid.n2 < 8 * kk || grid.n2 % kk != 0 {
        return Err(Error::Param(format!(
            "grid cannot resolve member k = {k}: needs n2 >= {} rows and a multiple of {kk}, got {}",
            8 * kk,
            grid.n2
        )));
    }
    if grid.n2 % grid.n1 != 0 {
        return Err(Error::Param(format!(
            "shear is not grid-exact: n2 = {} is not a multiple of n1 = {}",
            grid.n2, grid.n1
        )));
    }
    if f.len() != grid.n1 {
        return Err(Error::Param(format!("outer profile needs {} entries, got {}", grid.n1, f.len())));
    }
    check_pm1(f, "outer profile")?;
    let ratio = (grid.n2 / grid.n1) as i64;
    let shifts = cumulative_shifts(f, ratio);
    let total = shifts[grid.n1 - 1] + f[grid.n1 - 1] as i64 * ratio - shifts[0];
    // u_k has period n2 / k^2 cells in t.
    if total.rem_euclid((grid.n2 / kk) as i64) != 0 {
        return Err(Error::Param(format!(
            "total shear of {total} cells breaks the t-periodicity of member k = {k}"
        )));
    }
    let kf = k as f64;
    let n = grid.len();
    let mut u = vec![0.0; n];
    let (mut c1, mut c2, mut c3) = (vec![0i8; n], vec![0i8; n], vec![0i8; n]);
    for i1 in 0..grid.n1 {
        let s = grid.y1(i1);
        let sh = shifts[i1].rem_euclid(grid.n2 as i64) as usize;
        for i2 in 0..grid.n2 {
            let t = grid.y2((i2 + sh) % grid.n2);
            let idx = grid.idx(i1, i2);
            let d = zigzag_dt(kf * s, kf * kf * t);
            (c1[idx], c2[idx], c3[idx]) = (d, f[i1] * d, f[i1]);
            u[idx] = zigzag_potential(kf * s, kf * kf * t) / (kf * kf);
        }
    }
    Ok((ModifiedIndicators::new(grid, c1, c2, c3)?, ScalarField::new(grid, u)?))
}

/// Blocky random four-phase field: square blocks of side `feature_scale` (in torus
/// units, at least one cell) each carry a uniformly drawn phase.
pub fn gen_random_partition(seed: u64, grid: Grid, feature_scale: f64) -> Result<PhaseField> {
    check_positive(feature_scale, "feature_scale")?;
    let b1 = ((feature_scale * grid.n1 as f64).round() as usize).max(1);
    let b2 = ((feature_scale * grid.n2 as f64).round() as usize).max(1);
    let (m1, m2) = (grid.n1.div_ceil(b1), grid.n2.div_ceil(b2));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let blocks: Vec<u8> = (0..m1 * m2).map(|_| rng.gen_range(1..=4)).collect();
    let labels = (0..grid.len()).map(|k| blocks[(k / grid.n2 / b1) * m2 + (k % grid.n2) / b2]).collect();
    PhaseField::new(grid, labels)
}

/// Flips `chi3~` and `chi1~` on the rows `i2 < rows`; `chi2~ = chi3~ chi1~` is unchanged,
/// so admissibility is preserved.
pub fn perturb_band(m: &ModifiedIndicators, rows: usize) -> Result<ModifiedIndicators> {
    if rows > m.grid.n2 {
        return Err(Error::Param(format!("band of {rows} rows exceeds the {} available", m.grid.n2)));
    }
    let (mut c1, mut c3) = (m.chi1t.clone(), m.chi3t.clone());
    for i1 in 0..m.grid.n1 {
        for i2 in 0..rows {
            let k = m.grid.idx(i1, i2);
            c1[k] = -c1[k];
            c3[k] = -c3[k];
        }
    }
    ModifiedIndicators::new(m.grid, c1, m.chi2t.clone(), c3)
}

/// Replaces each cell independently with probability `p` by a uniformly drawn phase.
pub fn perturb_random(field: &PhaseField, p: f64, seed: u64) -> Result<PhaseField> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Param(format!("perturbation probability must lie in [0, 1], got {p}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels = field
        .labels
        .iter()
        .map(|&l| {
            let hit = rng.gen_bool(p);
            let draw = rng.gen_range(1..=4u8);
            if hit {
                draw
            } else {
                l
            }
        })
        .collect();
    PhaseField::new(field.grid, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::relaxed_elastic_energy;
    use crate::fields::{to_modified, volume_fractions};
    use crate::rigidity::incompatibility_defect;

    #[test]
    fn square_profile_alignment() {
        assert_eq!(square_profile(8, 2, 0.5).unwrap(), vec![1, 1, -1, -1, 1, 1, -1, -1]);
        assert!(square_profile(8, 3, 0.5).is_err());
        assert!(square_profile(8, 2, 0.3).is_err());
    }

    #[test]
    fn constant_generator() {
        let g = Grid::square(4).unwrap();
        let p = gen_constant(1, g).unwrap();
        assert_eq!(volume_fractions(&p), [1.0, 0.0, 0.0, 0.0]);
        assert!(gen_constant(5, g).is_err());
    }

    #[test]
    fn laminate_has_zero_relaxed_energy() {
        let g = Grid::square(32).unwrap();
        let prof = square_profile(32, 4, 0.25).unwrap();
        let p = gen_laminate(g, Axis::Y1, &prof, 1, 4).unwrap();
        assert!(relaxed_elastic_energy(&to_modified(&p)) <= 1e-12);
        let p = gen_laminate(g, Axis::Y2, &prof, 1, 2).unwrap();
        assert!(relaxed_elastic_energy(&to_modified(&p)) <= 1e-12);
    }

    #[test]
    fn crossing_twin_fractions_and_defects() {
        let g = Grid::new(16, 64).unwrap();
        let f = square_profile(16, 2, 0.5).unwrap();
        let gi = square_profile(64, 4, 0.25).unwrap();
        let p = gen_crossing_twin(Axis::Y1, &f, &gi, g).unwrap();
        let c = p.counts();
        assert!(c.iter().all(|&x| x > 0));
        // chi1~ = +1 on phases 1 and 4: the same count in every column.
        let th = volume_fractions(&p);
        let (d14, _) = incompatibility_defect(th).unwrap();
        assert!(d14 < 1e-12);
        // y2 axis: the crossing-twin fraction identity, exact on counts.
        let g2 = Grid::new(64, 16).unwrap();
        let p = gen_crossing_twin(Axis::Y2, &f, &gi, g2).unwrap();
        let c = p.counts();
        assert_eq!(c[0] * (c[1] + c[3]), c[1] * (c[0] + c[2]));
    }

    #[test]
    fn crossing_twin_rejects_bad_input() {
        let g = Grid::new(16, 24).unwrap();
        let f = vec![1i8; 16];
        let gi = vec![1i8; 24];
        assert!(gen_crossing_twin(Axis::Y1, &f, &gi, g).is_err());
        let g = Grid::new(16, 32).unwrap();
        // Mean 1/2 outer profile: total shear of 16 cells, half the inner period.
        let f = square_profile(16, 1, 0.75).unwrap();
        let mut gi = square_profile(32, 1, 0.5).unwrap();
        assert!(gen_crossing_twin(Axis::Y1, &f, &gi, g).is_err());
        assert!(gen_crossing_twin(Axis::Y1, &f, &square_profile(32, 2, 0.5).unwrap(), g).is_ok());
        gi[0] = 0;
        assert!(gen_crossing_twin(Axis::Y1, &square_profile(16, 2, 0.5).unwrap(), &gi, g).is_err());
    }

    #[test]
    fn crossing_twin_with_constant_g_is_laminate() {
        let g = Grid::new(16, 32).unwrap();
        let f = square_profile(16, 2, 0.5).unwrap();
        let m = crossing_twin_indicators(Axis::Y1, &f, &[1; 32], g).unwrap();
        assert!(m.chi1t.iter().all(|&v| v == 1));
        assert!(relaxed_elastic_energy(&m) <= 1e-12);
    }

    #[test]
    fn branching_exact_fractions() {
        let g = Grid::square(512).unwrap();
        let p = BranchingParams::new(0.25, 0.25, 1.5, 2, 0.125, 1e-2).unwrap();
        let f = gen_branching(&p, g).unwrap();
        let c = f.counts();
        let n = g.len();
        assert_eq!(c, [3 * n / 16, n / 16, 3 * n / 16, 9 * n / 16]);
    }

    #[test]
    fn branching_single_generation() {
        let g = Grid::square(64).unwrap();
        let p = BranchingParams::new(0.25, 0.5, 1.5, 1, 0.25, 1.0).unwrap();
        let m = branching_indicators(&p, g).unwrap();
        assert!(m.is_admissible());
        // One generation: sigma does not depend on the row inside a cell row at tau = 0.
        assert!((branching_bound(&p).unwrap()).is_finite());
    }

    #[test]
    fn branching_rejects_inadmissible() {
        assert!(BranchingParams::new(0.25, 0.25, 1.5, 1, 1.0, 1.0).is_err());
        let p = BranchingParams::new(0.25, 0.25, 1.5, 2, 0.125, 1e-2).unwrap();
        assert!(gen_branching(&p, Grid::square(60).unwrap()).is_err());
        assert!(gen_branching(&p, Grid::square(16).unwrap()).is_err());
    }

    #[test]
    fn auto_params_are_admissible() {
        for eta in [1e-2, 1e-3, 1e-4, 1e-5] {
            let p = BranchingParams::auto(0.25, 0.25, 1.5, eta, 2048).unwrap();
            p.validate().unwrap();
            assert!(2f64.powi(-(p.n_gen as i32)) >= eta.powf(2.0 / 3.0) * (1.0 - 1e-12));
        }
    }

    #[test]
    fn zigzag_properties() {
        for i in 0..50 {
            for j in 0..50 {
                let (s, t) = (i as f64 / 50.0 - 0.5, j as f64 / 50.0 - 0.5);
                let u = zigzag_potential(s, t);
                assert!((-0.5 - 1e-12..=1e-12).contains(&u));
                assert!((zigzag_potential(s + 1.0, t) - u).abs() < 1e-12);
                assert!((zigzag_potential(s, t + 1.0) - u).abs() < 1e-12);
                let h = 1e-7;
                let d = (zigzag_potential(s, t + h) - zigzag_potential(s, t - h)) / (2.0 * h);
                if (d.abs() - 1.0).abs() < 1e-5 {
                    assert_eq!(d.signum() as i8, zigzag_dt(s, t));
                }
            }
        }
    }

    #[test]
    fn counterexample_structure() {
        let g = Grid::square(64).unwrap();
        let (m, u) = gen_counterexample(2, g).unwrap();
        assert!(m.is_admissible());
        assert!(u.max_abs() <= 0.5 / 4.0 + 1e-12);
        assert!(gen_counterexample(3, g).is_err());
    }

    #[test]
    fn band_perturbation() {
        let g = Grid::square(16).unwrap();
        let m = to_modified(&PhaseField::constant(g, 1).unwrap());
        let q = perturb_band(&m, 3).unwrap();
        assert!(q.is_admissible());
        assert_eq!(from_modified(&q).unwrap().counts(), [16 * 13, 16 * 3, 0, 0]);
        assert_eq!(perturb_band(&m, 0).unwrap(), m);
        assert!(perturb_band(&m, 17).is_err());
    }

    #[test]
    fn random_partition_deterministic() {
        let g = Grid::square(32).unwrap();
        let a = gen_random_partition(7, g, 0.125).unwrap();
        let b = gen_random_partition(7, g, 0.125).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, gen_random_partition(8, g, 0.125).unwrap());
        let q = perturb_random(&a, 0.0, 1).unwrap();
        assert_eq!(q, a);
    }
}
