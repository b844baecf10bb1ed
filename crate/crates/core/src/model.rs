//! Material parameters, stress-free wells and the nondimensional parameter eta.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Mat3 = [[f64; 3]; 3];

/// Physical material parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams {
    /// Transformation strain magnitude (dimensionless).
    pub epsilon: f64,
    /// Shear parameter of the orthorhombic wells (dimensionless).
    pub delta: f64,
    /// Surface energy density, J/m^2.
    pub kappa: f64,
    /// Lame constant, J/m^3.
    pub mu: f64,
    /// Sample size, m.
    pub length: f64,
}

impl Default for MaterialParams {
    fn default() -> Self {
        Self { epsilon: 0.01, delta: 0.25, kappa: 0.1, mu: 1e9, length: 0.01 }
    }
}

impl MaterialParams {
    pub fn new(epsilon: f64, delta: f64, kappa: f64, mu: f64, length: f64) -> Result<Self> {
        let p = Self { epsilon, delta, kappa, mu, length };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("epsilon", self.epsilon),
            ("delta", self.delta),
            ("kappa", self.kappa),
            ("mu", self.mu),
            ("length", self.length),
        ];
        for (name, v) in checks {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Param(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(())
    }

    /// `d = 1 / (6 delta^2)`.
    pub fn d(&self) -> f64 {
        1.0 / (6.0 * self.delta * self.delta)
    }

    pub fn diagonal(&self) -> Diagonal {
        Diagonal::from_delta(self.delta)
    }
}

/// Diagonal constants `(d1, d2, d3)` of the renormalized wells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagonal {
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

impl Diagonal {
    pub fn from_delta(delta: f64) -> Self {
        Self { d1: -1.0 / 3.0, d2: 3.0 / (2.0 * delta * delta), d3: -1.0 / 3.0 }
    }
}

impl Default for Diagonal {
    fn default() -> Self {
        Self::from_delta(MaterialParams::default().delta)
    }
}

/// Admissible modified-indicator tuples `(chi1~, chi2~, chi3~)` of phases 1..=4.
pub const PHASE_TUPLES: [[i8; 3]; 4] = [[1, 1, 1], [-1, 1, -1], [-1, -1, 1], [1, -1, -1]];

/// Tuple of phase `phase` (1-based).
pub fn phase_tuple(phase: u8) -> Result<[i8; 3]> {
    match phase {
        1..=4 => Ok(PHASE_TUPLES[phase as usize - 1]),
        _ => Err(Error::Param(format!("phase must be in 1..=4, got {phase}"))),
    }
}

/// Phase (1-based) carrying the given tuple, if admissible.
pub fn phase_of_tuple(t: [i8; 3]) -> Option<u8> {
    PHASE_TUPLES.iter().position(|&p| p == t).map(|i| i as u8 + 1)
}

/// Unit-amplitude target strain for a tuple: diagonal `(d1,d2,d3)`, off-diagonals
/// `e23 = chi1~`, `e13 = chi2~`, `e12 = chi3~`.
pub fn target_matrix(diag: &Diagonal, t: [f64; 3]) -> Mat3 {
    let [c1, c2, c3] = t;
    [[diag.d1, c3, c2], [c3, diag.d2, c1], [c2, c1, diag.d3]]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WellSet {
    /// The six orthorhombic wells `e(1)..e(6)`.
    pub original: [Mat3; 6],
    /// The four renormalized wells of the planar model.
    pub renormalized: [Mat3; 4],
    /// Change-of-coordinates matrix, stored as data only.
    pub change_of_coords: Mat3,
}

pub fn make_wells(params: &MaterialParams) -> Result<WellSet> {
    params.validate()?;
    let (eps, dl) = (params.epsilon, params.delta);
    let scale = |m: Mat3, s: f64| m.map(|row| row.map(|v| v * s));
    let original = [
        [[1.0, dl, 0.0], [dl, 1.0, 0.0], [0.0, 0.0, -2.0]],
        [[1.0, -dl, 0.0], [-dl, 1.0, 0.0], [0.0, 0.0, -2.0]],
        [[1.0, 0.0, dl], [0.0, -2.0, 0.0], [dl, 0.0, 1.0]],
        [[1.0, 0.0, -dl], [0.0, -2.0, 0.0], [-dl, 0.0, 1.0]],
        [[-2.0, 0.0, 0.0], [0.0, 1.0, dl], [0.0, dl, 1.0]],
        [[-2.0, 0.0, 0.0], [0.0, 1.0, -dl], [0.0, -dl, 1.0]],
    ]
    .map(|m| scale(m, eps));

    let amp = eps / (2.0 * params.d());
    let diag = params.diagonal();
    let renormalized = PHASE_TUPLES.map(|t| {
        scale(target_matrix(&diag, [t[0] as f64, t[1] as f64, t[2] as f64]), amp)
    });

    let r2 = 2f64.sqrt();
    let r3 = 3f64.sqrt();
    let left = [[0.0, 1.0, 1.0], [r2, 0.0, 0.0], [0.0, 1.0, -1.0]];
    let right = [1.0 / r3, r3 / (r2 * dl), 1.0 / r3];
    let pre = 6f64.sqrt() * dl / r2;
    let mut change_of_coords = [[0.0; 3]; 3];
    for (i, row) in change_of_coords.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = pre * left[i][j] * right[j];
        }
    }

    Ok(WellSet { original, renormalized, change_of_coords })
}

/// Nondimensional parameter `eta = 2 d^2 kappa / (epsilon^2 mu L)`.
pub fn eta(params: &MaterialParams) -> Result<f64> {
    params.validate()?;
    let d = params.d();
    Ok(2.0 * d * d * params.kappa / (params.epsilon * params.epsilon * params.mu * params.length))
}

pub fn trace(m: &Mat3) -> f64 {
    m[0][0] + m[1][1] + m[2][2]
}

pub fn is_symmetric(m: &Mat3) -> bool {
    (0..3).all(|i| (0..3).all(|j| m[i][j] == m[j][i]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_well_matches_literal() {
        let w = make_wells(&MaterialParams::default()).unwrap();
        let e1 = [[0.01, 0.0025, 0.0], [0.0025, 0.01, 0.0], [0.0, 0.0, -0.02]];
        assert_eq!(w.original[0], e1);
    }

    #[test]
    fn original_wells_symmetric_tracefree() {
        let w = make_wells(&MaterialParams::new(0.03, 0.7, 1.0, 1.0, 1.0).unwrap()).unwrap();
        for m in &w.original {
            assert!(is_symmetric(m));
            assert!(trace(m).abs() < 1e-15);
        }
    }

    #[test]
    fn renormalized_amplitude() {
        let w = make_wells(&MaterialParams::default()).unwrap();
        let amp = 0.01 * 3.0 * 0.25 * 0.25;
        assert!((amp - 0.001875f64).abs() < 1e-18);
        for k in 0..3 {
            for l in 0..3 {
                if k != l {
                    assert!((w.renormalized[0][k][l] - amp).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn renormalized_sign_pattern_matches_tuples() {
        let w = make_wells(&MaterialParams::default()).unwrap();
        for (m, t) in w.renormalized.iter().zip(PHASE_TUPLES) {
            assert_eq!(m[1][2].signum() as i8, t[0]);
            assert_eq!(m[0][2].signum() as i8, t[1]);
            assert_eq!(m[0][1].signum() as i8, t[2]);
        }
    }

    #[test]
    fn eta_examples() {
        let p = MaterialParams::new(1.0, 1.0 / 6f64.sqrt(), 1.0, 1.0, 2.0).unwrap();
        assert!((p.d() - 1.0).abs() < 1e-12);
        assert!((eta(&p).unwrap() - 1.0).abs() < 1e-12);

        let p = MaterialParams::default();
        let expected = 2.0 * (8.0f64 / 3.0).powi(2) * 0.1 / (1e-4 * 1e9 * 0.01);
        assert!((eta(&p).unwrap() - expected).abs() < 1e-15);
        assert!((eta(&p).unwrap() - 1.422e-3).abs() < 1e-6);
    }

    #[test]
    fn eta_homogeneity() {
        let p = MaterialParams::default();
        let e0 = eta(&p).unwrap();
        let e_kappa = eta(&MaterialParams { kappa: 2.0 * p.kappa, ..p }).unwrap();
        let e_len = eta(&MaterialParams { length: 3.0 * p.length, ..p }).unwrap();
        let e_eps = eta(&MaterialParams { epsilon: 2.0 * p.epsilon, ..p }).unwrap();
        assert!((e_kappa / e0 - 2.0).abs() < 1e-12);
        assert!((e_len / e0 - 1.0 / 3.0).abs() < 1e-12);
        assert!((e_eps / e0 - 0.25).abs() < 1e-12);
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(MaterialParams::new(0.0, 0.25, 1.0, 1.0, 1.0).is_err());
        assert!(MaterialParams::new(0.01, -0.25, 1.0, 1.0, 1.0).is_err());
        assert!(MaterialParams::new(0.01, 0.25, 1.0, f64::NAN, 1.0).is_err());
        let bad = MaterialParams { length: 0.0, ..MaterialParams::default() };
        assert!(make_wells(&bad).is_err());
        assert!(eta(&bad).is_err());
    }

    #[test]
    fn phase_tuple_roundtrip() {
        for p in 1..=4u8 {
            assert_eq!(phase_of_tuple(phase_tuple(p).unwrap()), Some(p));
        }
        assert!(phase_tuple(0).is_err());
        assert_eq!(phase_of_tuple([1, 1, -1]), None);
    }
}
