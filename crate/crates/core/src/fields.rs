//! Periodic grid fields on the unit torus and the phase/indicator algebra.
//!
//! Samples sit at cell centers `((i + 1/2)/n - 1/2)`. Storage is row-major with
//! flat index `i1 * n2 + i2`, where `i1` runs along `y1` and `i2` along `y2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{phase_of_tuple, PHASE_TUPLES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Grid {
    pub n1: usize,
    pub n2: usize,
}

impl Grid {
    pub fn new(n1: usize, n2: usize) -> Result<Self> {
        if n1 < 2 || n2 < 2 {
            return Err(Error::Param(format!("grid needs n1, n2 >= 2, got {n1}x{n2}")));
        }
        Ok(Self { n1, n2 })
    }

    pub fn square(n: usize) -> Result<Self> {
        Self::new(n, n)
    }

    pub fn len(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self) -> (f64, f64) {
        (1.0 / self.n1 as f64, 1.0 / self.n2 as f64)
    }

    pub fn cell_area(&self) -> f64 {
        1.0 / self.len() as f64
    }

    #[inline]
    pub fn idx(&self, i1: usize, i2: usize) -> usize {
        i1 * self.n2 + i2
    }

    /// Cell-center coordinate along `y1` in `[-1/2, 1/2)`.
    pub fn y1(&self, i1: usize) -> f64 {
        (i1 as f64 + 0.5) / self.n1 as f64 - 0.5
    }

    /// Cell-center coordinate along `y2` in `[-1/2, 1/2)`.
    pub fn y2(&self, i2: usize) -> f64 {
        (i2 as f64 + 0.5) / self.n2 as f64 - 0.5
    }

    pub fn ensure_same(&self, other: &Grid) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch {
                left: format!("{}x{}", self.n1, self.n2),
                right: format!("{}x{}", other.n1, other.n2),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    Y1,
    Y2,
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Axis::Y1 => "y1",
            Axis::Y2 => "y2",
        })
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "y1" | "1" => Ok(Axis::Y1),
            "y2" | "2" => Ok(Axis::Y2),
            _ => Err(Error::Parse(format!("unknown axis '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Domain(format!(
                "expected {} samples for a {}x{} grid, got {}",
                grid.len(),
                grid.n1,
                grid.n2,
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { grid, values: vec![0.0; grid.len()] }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self { grid, values: vec![c; grid.len()] }
    }

    /// Samples `f(y1, y2)` at cell centers.
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        Self::from_index_fn(grid, |i1, i2| f(grid.y1(i1), grid.y2(i2)))
    }

    pub fn from_index_fn(grid: Grid, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for i1 in 0..grid.n1 {
            for i2 in 0..grid.n2 {
                values.push(f(i1, i2));
            }
        }
        Self { grid, values }
    }

    #[inline]
    pub fn at(&self, i1: usize, i2: usize) -> f64 {
        self.values[self.grid.idx(i1, i2)]
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Midpoint-rule integral over the unit torus.
    pub fn integral(&self) -> f64 {
        self.mean()
    }

    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum::<f64>() * self.grid.cell_area()
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>() * self.grid.cell_area()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_with(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        Ok(Self {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn sub(&self, other: &ScalarField) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &ScalarField) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn mul(&self, other: &ScalarField) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| v * c)
    }

    pub fn minus_mean(&self) -> Self {
        let m = self.mean();
        self.map(|v| v - m)
    }

    /// Average over `y2` for each `i1` (function of `y1`).
    pub fn average_over_y2(&self) -> Vec<f64> {
        let n2 = self.grid.n2;
        self.values.chunks(n2).map(|c| c.iter().sum::<f64>() / n2 as f64).collect()
    }

    /// Average over `y1` for each `i2` (function of `y2`).
    pub fn average_over_y1(&self) -> Vec<f64> {
        let Grid { n1, n2 } = self.grid;
        let mut out = vec![0.0; n2];
        for row in self.values.chunks(n2) {
            for (o, v) in out.iter_mut().zip(row) {
                *o += v;
            }
        }
        out.iter_mut().for_each(|o| *o /= n1 as f64);
        out
    }

    /// Field `a(y1)` broadcast along `y2`.
    pub fn from_y1_profile(grid: Grid, a: &[f64]) -> Result<Self> {
        if a.len() != grid.n1 {
            return Err(Error::Domain(format!("y1 profile needs {} entries, got {}", grid.n1, a.len())));
        }
        Ok(Self::from_index_fn(grid, |i1, _| a[i1]))
    }

    /// Field `b(y2)` broadcast along `y1`.
    pub fn from_y2_profile(grid: Grid, b: &[f64]) -> Result<Self> {
        if b.len() != grid.n2 {
            return Err(Error::Domain(format!("y2 profile needs {} entries, got {}", grid.n2, b.len())));
        }
        Ok(Self::from_index_fn(grid, |_, i2| b[i2]))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorField2 {
    pub c1: ScalarField,
    pub c2: ScalarField,
}

impl VectorField2 {
    pub fn new(c1: ScalarField, c2: ScalarField) -> Result<Self> {
        c1.grid.ensure_same(&c2.grid)?;
        Ok(Self { c1, c2 })
    }

    pub fn grid(&self) -> Grid {
        self.c1.grid
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.c1.l2_norm_sq() + self.c2.l2_norm_sq()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    pub fn mean(&self) -> [f64; 2] {
        [self.c1.mean(), self.c2.mean()]
    }

    pub fn sub(&self, other: &VectorField2) -> Result<Self> {
        Ok(Self { c1: self.c1.sub(&other.c1)?, c2: self.c2.sub(&other.c2)? })
    }

    pub fn add(&self, other: &VectorField2) -> Result<Self> {
        Ok(Self { c1: self.c1.add(&other.c1)?, c2: self.c2.add(&other.c2)? })
    }

    /// L2 pairing `int w . v`.
    pub fn dot(&self, other: &VectorField2) -> Result<f64> {
        let a = self.c1.mul(&other.c1)?.integral();
        let b = self.c2.mul(&other.c2)?.integral();
        Ok(a + b)
    }
}

/// Symmetric 3x3 tensor field of `(y1, y2)`; only the upper triangle is stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymStrainField {
    pub grid: Grid,
    /// Components in the order `e11, e12, e13, e22, e23, e33`.
    pub comps: [Vec<f64>; 6],
}

impl SymStrainField {
    pub const ORDER: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

    pub fn zeros(grid: Grid) -> Self {
        Self { grid, comps: std::array::from_fn(|_| vec![0.0; grid.len()]) }
    }

    pub fn from_components(comps: [ScalarField; 6]) -> Result<Self> {
        let grid = comps[0].grid;
        for c in &comps[1..] {
            grid.ensure_same(&c.grid)?;
        }
        Ok(Self { grid, comps: comps.map(|c| c.values) })
    }

    /// Constant field equal to `m` everywhere (symmetrized).
    pub fn constant(grid: Grid, m: &crate::model::Mat3) -> Self {
        let mut s = Self::zeros(grid);
        for (c, &(i, j)) in Self::ORDER.iter().enumerate() {
            let v = 0.5 * (m[i][j] + m[j][i]);
            s.comps[c].iter_mut().for_each(|x| *x = v);
        }
        s
    }

    fn slot(i: usize, j: usize) -> usize {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        Self::ORDER.iter().position(|&p| p == (a, b)).expect("index in 0..3")
    }

    /// Component `(i, j)` with zero-based indices; symmetric by construction.
    pub fn component(&self, i: usize, j: usize) -> ScalarField {
        ScalarField { grid: self.grid, values: self.comps[Self::slot(i, j)].clone() }
    }

    pub fn component_slice(&self, i: usize, j: usize) -> &[f64] {
        &self.comps[Self::slot(i, j)]
    }

    pub fn set_component(&mut self, i: usize, j: usize, f: &ScalarField) -> Result<()> {
        self.grid.ensure_same(&f.grid)?;
        self.comps[Self::slot(i, j)] = f.values.clone();
        Ok(())
    }
}

/// Periodic field of martensite labels in `1..=4`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseField {
    pub grid: Grid,
    pub labels: Vec<u8>,
}

impl PhaseField {
    pub fn new(grid: Grid, labels: Vec<u8>) -> Result<Self> {
        if labels.len() != grid.len() {
            return Err(Error::Domain(format!("expected {} labels, got {}", grid.len(), labels.len())));
        }
        if let Some(pos) = labels.iter().position(|l| !(1..=4).contains(l)) {
            let (i1, i2) = (pos / grid.n2, pos % grid.n2);
            return Err(Error::Domain(format!("label {} at cell ({i1}, {i2}) not in 1..=4", labels[pos])));
        }
        Ok(Self { grid, labels })
    }

    pub fn constant(grid: Grid, phase: u8) -> Result<Self> {
        Self::new(grid, vec![phase; grid.len()])
    }

    #[inline]
    pub fn at(&self, i1: usize, i2: usize) -> u8 {
        self.labels[self.grid.idx(i1, i2)]
    }

    /// Indicator `chi_phase` as a 0/1 field.
    pub fn indicator(&self, phase: u8) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.labels.iter().map(|&l| if l == phase { 1.0 } else { 0.0 }).collect(),
        }
    }

    /// Cell counts of phases 1..=4.
    pub fn counts(&self) -> [usize; 4] {
        let mut c = [0usize; 4];
        for &l in &self.labels {
            c[l as usize - 1] += 1;
        }
        c
    }
}

/// Modified indicators `(chi1~, chi2~, chi3~)` with values in `{-1, +1}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModifiedIndicators {
    pub grid: Grid,
    pub chi1t: Vec<i8>,
    pub chi2t: Vec<i8>,
    pub chi3t: Vec<i8>,
}

impl ModifiedIndicators {
    /// Checks the `{-1, +1}` range only; admissibility is checked by [`from_modified`].
    pub fn new(grid: Grid, chi1t: Vec<i8>, chi2t: Vec<i8>, chi3t: Vec<i8>) -> Result<Self> {
        for (name, v) in [("chi1t", &chi1t), ("chi2t", &chi2t), ("chi3t", &chi3t)] {
            if v.len() != grid.len() {
                return Err(Error::Domain(format!("{name}: expected {} samples, got {}", grid.len(), v.len())));
            }
            if let Some(pos) = v.iter().position(|&x| x != 1 && x != -1) {
                return Err(Error::Domain(format!(
                    "{name}: value {} at cell ({}, {}) is not +-1",
                    v[pos],
                    pos / grid.n2,
                    pos % grid.n2
                )));
            }
        }
        Ok(Self { grid, chi1t, chi2t, chi3t })
    }

    /// Builds the triple from `chi3~` and `chi1~`, setting `chi2~ = chi3~ chi1~`.
    pub fn from_chi3_chi1(grid: Grid, chi3t: Vec<i8>, chi1t: Vec<i8>) -> Result<Self> {
        if chi3t.len() != chi1t.len() {
            return Err(Error::Domain("chi3t and chi1t lengths differ".into()));
        }
        let chi2t = chi3t.iter().zip(&chi1t).map(|(a, b)| a * b).collect();
        Self::new(grid, chi1t, chi2t, chi3t)
    }

    pub fn as_scalar(&self) -> [ScalarField; 3] {
        let conv = |v: &Vec<i8>| ScalarField { grid: self.grid, values: v.iter().map(|&x| x as f64).collect() };
        [conv(&self.chi1t), conv(&self.chi2t), conv(&self.chi3t)]
    }

    pub fn chi1(&self) -> ScalarField {
        self.as_scalar()[0].clone()
    }

    pub fn chi2(&self) -> ScalarField {
        self.as_scalar()[1].clone()
    }

    pub fn chi3(&self) -> ScalarField {
        self.as_scalar()[2].clone()
    }

    /// First cell violating `chi2~ = chi3~ chi1~`.
    pub fn first_inadmissible(&self) -> Option<(usize, usize)> {
        (0..self.grid.len())
            .find(|&k| self.chi2t[k] != self.chi3t[k] * self.chi1t[k])
            .map(|k| (k / self.grid.n2, k % self.grid.n2))
    }

    pub fn is_admissible(&self) -> bool {
        self.first_inadmissible().is_none()
    }
}

pub fn to_modified(p: &PhaseField) -> ModifiedIndicators {
    let n = p.grid.len();
    let (mut c1, mut c2, mut c3) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for &l in &p.labels {
        let t = PHASE_TUPLES[l as usize - 1];
        c1.push(t[0]);
        c2.push(t[1]);
        c3.push(t[2]);
    }
    ModifiedIndicators { grid: p.grid, chi1t: c1, chi2t: c2, chi3t: c3 }
}

pub fn from_modified(m: &ModifiedIndicators) -> Result<PhaseField> {
    let mut labels = Vec::with_capacity(m.grid.len());
    for k in 0..m.grid.len() {
        let t = [m.chi1t[k], m.chi2t[k], m.chi3t[k]];
        match phase_of_tuple(t) {
            Some(p) => labels.push(p),
            None => {
                return Err(Error::Domain(format!(
                    "inadmissible tuple {t:?} at cell ({}, {})",
                    k / m.grid.n2,
                    k % m.grid.n2
                )))
            }
        }
    }
    Ok(PhaseField { grid: m.grid, labels })
}

/// Reconstructs `chi_i = 1/4 (1 +- chi2~ +- chi3~ +- chi1~)` for `i = 1..=4`.
pub fn original_indicators(m: &ModifiedIndicators) -> [ScalarField; 4] {
    let [c1, c2, c3] = m.as_scalar();
    let f = |s2: f64, s3: f64, s1: f64| {
        ScalarField::from_index_fn(m.grid, |i1, i2| {
            let k = m.grid.idx(i1, i2);
            0.25 * (1.0 + s2 * c2.values[k] + s3 * c3.values[k] + s1 * c1.values[k])
        })
    };
    [f(1.0, 1.0, 1.0), f(1.0, -1.0, -1.0), f(-1.0, 1.0, -1.0), f(-1.0, -1.0, 1.0)]
}

/// Volume fractions `theta_i = count_i / (n1 n2)`.
pub fn volume_fractions(p: &PhaseField) -> [f64; 4] {
    let n = p.grid.len() as f64;
    p.counts().map(|c| c as f64 / n)
}

/// Exact periodic difference `f(x + h v) - f(x)` for a lattice direction `v`.
pub fn finite_difference(f: &ScalarField, v: [i64; 2], h: i64) -> ScalarField {
    let Grid { n1, n2 } = f.grid;
    let s1 = (h * v[0]).rem_euclid(n1 as i64) as usize;
    let s2 = (h * v[1]).rem_euclid(n2 as i64) as usize;
    ScalarField::from_index_fn(f.grid, |i1, i2| f.at((i1 + s1) % n1, (i2 + s2) % n2) - f.at(i1, i2))
}

/// Anisotropic variation `sum |jumps along y1| dy2 + |jumps along y2| dy1` of any real field.
pub fn variation(f: &ScalarField) -> f64 {
    let Grid { n1, n2 } = f.grid;
    let (h1, h2) = f.grid.spacing();
    let mut along1 = 0.0;
    let mut along2 = 0.0;
    for i1 in 0..n1 {
        let next1 = (i1 + 1) % n1;
        for i2 in 0..n2 {
            let v = f.at(i1, i2);
            along1 += (f.at(next1, i2) - v).abs();
            along2 += (f.at(i1, (i2 + 1) % n2) - v).abs();
        }
    }
    along1 * h2 + along2 * h1
}

/// Grid-aligned perimeter of a `{0, 1}` field.
pub fn total_variation(chi: &ScalarField) -> Result<f64> {
    if let Some(pos) = chi.values.iter().position(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::Domain(format!(
            "total variation needs a binary field; value {} at cell ({}, {})",
            chi.values[pos],
            pos / chi.grid.n2,
            pos % chi.grid.n2
        )));
    }
    Ok(variation(chi))
}

/// Circularly shifts line `i1` along `y2`: `out(i1, i2) = f(i1, i2 + shifts[i1])`.
pub fn shear_resample(f: &ScalarField, shifts: &[i64]) -> Result<ScalarField> {
    let Grid { n1, n2 } = f.grid;
    if shifts.len() != n1 {
        return Err(Error::Domain(format!("shear needs {n1} shifts, got {}", shifts.len())));
    }
    let mut values = Vec::with_capacity(f.grid.len());
    for (i1, &s) in shifts.iter().enumerate() {
        let s = s.rem_euclid(n2 as i64) as usize;
        let row = &f.values[i1 * n2..(i1 + 1) * n2];
        values.extend_from_slice(&row[s..]);
        values.extend_from_slice(&row[..s]);
    }
    Ok(ScalarField { grid: f.grid, values })
}
