//! Constant anisotropy matrix `A`, its regime, and the weight matrices of the
//! mixed bilinear forms.
//!
//! With `P = (A^-1 - I)^-1` (when every eigenvalue of `A` is below one) or
//! `Q = (A - I)^-1` (when every eigenvalue is above one), the linear mixed
//! problem couples a P1 field, a P0^d vector field and a second P1 field
//! through three weighted forms. Eliminating the vector field leaves forms
//! weighted by simple functions of `A` alone.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// All eigenvalues of `A` below one.
    I,
    /// All eigenvalues of `A` above one.
    II,
}

/// Weights `(W_grad, W_cross, W_mass)` of the three forms in the full system:
/// `(W_grad grad u, grad v)`, `(W_cross w, grad v)` and `(W_mass w, z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights {
    pub grad: Mat,
    pub cross: Mat,
    pub mass: Mat,
}

/// Weights of the directly assembled reduced blocks `K_hat`, `F_hat`, `G_hat`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectWeights {
    pub k: Mat,
    pub f: Mat,
    pub g: Mat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaterialModel {
    a: Mat,
    kappa_star: f64,
    kappa_sup: f64,
    regime: Regime,
    /// `P` in regime I, `Q` in regime II.
    transform: Mat,
    weights: Weights,
}

pub const PRESET_NAMES: [&str; 8] = ["A1", "A2", "A3", "A4", "A5", "A6", "A7", "A8"];

/// Named anisotropy matrices used by the benchmark problems.
pub fn preset_matrix(name: &str) -> Result<Mat> {
    let m = match name.to_ascii_uppercase().as_str() {
        "A1" => Mat::from_diagonal_element(2, 2, 0.25),
        "A2" => Mat::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.125]),
        "A3" => Mat::from_row_slice(2, 2, &[1.0 / 6.0, 0.0, 0.0, 0.125]),
        "A4" => Mat::from_row_slice(2, 2, &[0.1372, 0.0189, 0.0189, 0.1545]),
        "A5" => Mat::from_diagonal_element(3, 3, 11.0),
        "A6" => Mat::from_diagonal_element(3, 3, 0.25),
        "A7" => Mat::from_row_slice(3, 3, &[0.25, 0.0, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0, 0.125]),
        "A8" => Mat::from_row_slice(
            3,
            3,
            &[0.25, -0.125, 0.0, -0.125, 0.375, -0.125, 0.0, -0.125, 0.25],
        ),
        _ => return Err(Error::InvalidMaterial(format!("unknown material preset `{name}`"))),
    };
    Ok(m)
}

impl MaterialModel {
    /// Classifies `A` and precomputes its transform and weights.
    pub fn new(a: Mat) -> Result<MaterialModel> {
        let d = a.nrows();
        if a.ncols() != d || !(d == 2 || d == 3) {
            return Err(Error::InvalidMaterial(format!(
                "A must be 2x2 or 3x3, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if a.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidMaterial("A has non-finite entries".into()));
        }
        let scale = a.amax();
        if (&a - a.transpose()).amax() > 1e-14 * scale.max(1.0) {
            return Err(Error::InvalidMaterial("A is not symmetric".into()));
        }
        let a = (&a + a.transpose()) * 0.5;
        let eig = SymmetricEigen::new(a.clone()).eigenvalues;
        let kappa_star = eig.min();
        let kappa_sup = eig.max();
        if kappa_star <= 0.0 {
            return Err(Error::InvalidMaterial(format!(
                "A is not positive definite (smallest eigenvalue {kappa_star})"
            )));
        }
        let id = Mat::identity(d, d);
        let (regime, transform, weights) = if kappa_sup < 1.0 {
            let a_inv = invert(&a)?;
            let p = invert(&(a_inv - &id))?;
            let w = Weights { grad: p.clone(), cross: p.clone(), mass: &id + &p };
            (Regime::I, p, w)
        } else if kappa_star > 1.0 {
            let q = invert(&(&a - &id))?;
            let w = Weights { grad: &id + &q, cross: q.clone(), mass: q.clone() };
            (Regime::II, q, w)
        } else {
            return Err(Error::OutOfTheory { kappa_min: kappa_star, kappa_max: kappa_sup });
        };
        Ok(MaterialModel { a, kappa_star, kappa_sup, regime, transform, weights })
    }

    pub fn preset(name: &str) -> Result<MaterialModel> {
        Self::new(preset_matrix(name)?)
    }

    /// Row-major `d*d` entries.
    pub fn from_row_major(values: &[f64]) -> Result<MaterialModel> {
        let d = match values.len() {
            4 => 2,
            9 => 3,
            n => return Err(Error::InvalidMaterial(format!("expected 4 or 9 entries, got {n}"))),
        };
        Self::new(Mat::from_row_slice(d, d, values))
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &Mat {
        &self.a
    }

    pub fn kappa_star(&self) -> f64 {
        self.kappa_star
    }

    pub fn kappa_sup(&self) -> f64 {
        self.kappa_sup
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn p(&self) -> Option<&Mat> {
        (self.regime == Regime::I).then_some(&self.transform)
    }

    pub fn q(&self) -> Option<&Mat> {
        (self.regime == Regime::II).then_some(&self.transform)
    }

    pub fn weights(&self) -> &Weights {
        &self.weights
    }

    /// Weights for assembling the reduced pencil without forming any Schur
    /// complement: `(A, A, A - I)` in regime I, `(I, I, I - A)` in regime II.
    pub fn direct_weights(&self) -> DirectWeights {
        let d = self.dim();
        let id = Mat::identity(d, d);
        match self.regime {
            Regime::I => DirectWeights { k: self.a.clone(), f: self.a.clone(), g: &self.a - &id },
            Regime::II => DirectWeights { k: id.clone(), f: id.clone(), g: &id - &self.a },
        }
    }

    /// Factor in the lower bound `lambda >= kappa_1 * bound`: the smallest
    /// eigenvalue of `A` in regime I, one in regime II.
    pub fn eigenvalue_bound(&self) -> f64 {
        match self.regime {
            Regime::I => self.kappa_star,
            Regime::II => 1.0,
        }
    }
}

pub(crate) fn invert(m: &Mat) -> Result<Mat> {
    m.clone()
        .try_inverse()
        .ok_or_else(|| Error::InvalidMaterial("matrix is singular".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn close(a: &Mat, b: &Mat, tol: f64) -> bool {
        (a - b).amax() <= tol
    }

    #[test]
    fn scalar_regime_one() {
        let m = MaterialModel::preset("A1").unwrap();
        assert_eq!(m.regime(), Regime::I);
        assert_relative_eq!(m.kappa_star(), 0.25, epsilon = 1e-15);
        assert_relative_eq!(m.kappa_sup(), 0.25, epsilon = 1e-15);
        let id = Mat::identity(2, 2);
        assert!(close(m.p().unwrap(), &(&id / 3.0), 1e-15));
        let w = m.weights();
        assert!(close(&w.grad, &(&id / 3.0), 1e-15));
        assert!(close(&w.cross, &(&id / 3.0), 1e-15));
        assert!(close(&w.mass, &(&id * (4.0 / 3.0)), 1e-15));
        let dw = m.direct_weights();
        assert!(close(&dw.k, &(&id * 0.25), 1e-15));
        assert!(close(&dw.g, &(&id * -0.75), 1e-15));
        assert_eq!(dw.k, dw.f);
    }

    #[test]
    fn scalar_regime_two() {
        let m = MaterialModel::preset("A5").unwrap();
        assert_eq!(m.regime(), Regime::II);
        assert!(m.p().is_none());
        let id = Mat::identity(3, 3);
        assert!(close(m.q().unwrap(), &(&id / 10.0), 1e-15));
        let dw = m.direct_weights();
        assert!(close(&dw.k, &id, 0.0));
        assert!(close(&dw.f, &id, 0.0));
        assert!(close(&dw.g, &(&id * -10.0), 1e-14));
        assert_eq!(m.eigenvalue_bound(), 1.0);
    }

    #[test]
    fn diagonal_transform() {
        let m = MaterialModel::preset("A2").unwrap();
        let p = m.p().unwrap();
        assert_relative_eq!(p[(0, 0)], 1.0, epsilon = 1e-14);
        assert_relative_eq!(p[(1, 1)], 1.0 / 7.0, epsilon = 1e-14);
        assert_eq!(p[(0, 1)], 0.0);
    }

    #[test]
    fn all_presets_classify() {
        for name in PRESET_NAMES {
            let m = MaterialModel::preset(name).unwrap();
            let expect = if name == "A5" { Regime::II } else { Regime::I };
            assert_eq!(m.regime(), expect, "{name}");
        }
        assert!(MaterialModel::preset("A9").is_err());
    }

    #[test]
    fn rejects_bad_input() {
        let straddle = Mat::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 2.0]);
        assert!(matches!(MaterialModel::new(straddle), Err(Error::OutOfTheory { .. })));
        let indefinite = Mat::from_row_slice(2, 2, &[0.5, 0.0, 0.0, -0.1]);
        assert!(matches!(MaterialModel::new(indefinite), Err(Error::InvalidMaterial(_))));
        let skew = Mat::from_row_slice(2, 2, &[0.5, 0.1, 0.0, 0.5]);
        assert!(matches!(MaterialModel::new(skew), Err(Error::InvalidMaterial(_))));
        let unit = Mat::identity(3, 3);
        assert!(matches!(MaterialModel::new(unit), Err(Error::OutOfTheory { .. })));
        assert!(MaterialModel::from_row_major(&[1.0, 2.0, 3.0]).is_err());
    }

    fn random_spd(d: usize, seed: &[f64], lo: f64, hi: f64) -> Mat {
        // orthogonal factor from QR of a random matrix, eigenvalues in (lo, hi)
        let g = Mat::from_row_slice(d, d, &seed[..d * d]);
        let q = g.qr().q();
        let lam = Mat::from_diagonal(&nalgebra::DVector::from_iterator(
            d,
            seed[d * d..d * d + d].iter().map(|t| lo + (hi - lo) * t),
        ));
        let a = &q * lam * q.transpose();
        (&a + a.transpose()) * 0.5
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn resolvent_identity(
            d in 2usize..=3,
            seed in proptest::collection::vec(-1.0f64..1.0, 12),
            spread in proptest::collection::vec(0.02f64..0.98, 3),
        ) {
            let mut s = seed.clone();
            s[d * d..d * d + d].copy_from_slice(&spread[..d]);
            let a = random_spd(d, &s, 0.0, 1.0);
            let m = MaterialModel::new(a.clone()).unwrap();
            prop_assert_eq!(m.regime(), Regime::I);
            let id = Mat::identity(d, d);
            let lhs = invert(&(&id + m.p().unwrap())).unwrap();
            let rhs = &id - &a;
            prop_assert!((lhs - &rhs).norm() <= 1e-12 * rhs.norm());
        }

        #[test]
        fn regime_two_inverse(
            d in 2usize..=3,
            seed in proptest::collection::vec(-1.0f64..1.0, 12),
            spread in proptest::collection::vec(0.02f64..0.98, 3),
        ) {
            let mut s = seed.clone();
            s[d * d..d * d + d].copy_from_slice(&spread[..d]);
            let a = random_spd(d, &s, 1.5, 20.0);
            let m = MaterialModel::new(a.clone()).unwrap();
            prop_assert_eq!(m.regime(), Regime::II);
            let id = Mat::identity(d, d);
            let back = invert(m.q().unwrap()).unwrap();
            let want = &a - &id;
            prop_assert!((back - &want).norm() <= 1e-12 * want.norm());
        }
    }
}
