use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::DenseMatrix;
use crate::error::{GinvError, Result};

/// Entrywise 1-norm: sum of absolute values.
pub fn norm_1(m: &DenseMatrix) -> f64 {
    dense_l1(m.as_matrix())
}

/// 2,1-norm: sum over rows of the row's Euclidean norm.
pub fn norm_21(m: &DenseMatrix) -> f64 {
    dense_l21(m.as_matrix())
}

/// Largest Euclidean row norm.
pub fn max_row_norm(m: &DenseMatrix) -> f64 {
    row_norms(m.as_matrix()).fold(0.0, f64::max)
}

/// Number of entries with magnitude above `zero_tol`.
pub fn norm_0(m: &DenseMatrix, zero_tol: f64) -> usize {
    m.as_matrix().iter().filter(|x| x.abs() > zero_tol).count()
}

/// Number of rows holding at least one entry above `zero_tol`.
pub fn nonzero_rows(m: &DenseMatrix, zero_tol: f64) -> usize {
    m.as_matrix()
        .row_iter()
        .filter(|row| row.iter().any(|x| x.abs() > zero_tol))
        .count()
}

pub(crate) fn dense_l1(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|x| x.abs()).sum()
}

pub(crate) fn dense_l21(m: &DMatrix<f64>) -> f64 {
    row_norms(m).sum()
}

pub(crate) fn row_norms(m: &DMatrix<f64>) -> impl Iterator<Item = f64> + '_ {
    m.row_iter().map(|row| row.norm())
}

/// Frobenius norms of the four Penrose defects of `H` as an inverse of `A`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyResiduals {
    /// `‖AHA − A‖_F`
    pub p1: f64,
    /// `‖HAH − H‖_F`
    pub p2: f64,
    /// `‖AH − (AH)ᵀ‖_F`
    pub p3: f64,
    /// `‖HA − (HA)ᵀ‖_F`
    pub p4: f64,
}

impl PropertyResiduals {
    pub fn as_array(&self) -> [f64; 4] {
        [self.p1, self.p2, self.p3, self.p4]
    }

    pub fn max(&self) -> f64 {
        self.as_array().into_iter().fold(0.0, f64::max)
    }

    /// Which properties hold at absolute tolerance `tol`.
    pub fn satisfied(&self, tol: f64) -> [bool; 4] {
        self.as_array().map(|r| r <= tol)
    }
}

pub fn property_residuals(a: &DenseMatrix, h: &DenseMatrix) -> Result<PropertyResiduals> {
    let (m, n) = a.shape();
    if h.shape() != (n, m) {
        return Err(GinvError::dim(format!(
            "H is {}x{} but A is {m}x{n}; expected H {n}x{m}",
            h.rows(),
            h.cols()
        )));
    }
    let a = a.as_matrix();
    let h = h.as_matrix();
    let ah = a * h;
    let ha = h * a;
    Ok(PropertyResiduals {
        p1: (&ah * a - a).norm(),
        p2: (&ha * h - h).norm(),
        p3: (&ah - ah.transpose()).norm(),
        p4: (&ha - ha.transpose()).norm(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mat(rows: &[&[f64]]) -> DenseMatrix {
        DenseMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn quarter_ones() {
        let m = DenseMatrix::filled(2, 2, 0.25).unwrap();
        assert!((norm_1(&m) - 1.0).abs() < 1e-15);
        // each row norm is 0.25·√2
        assert!((norm_21(&m) - 0.5 * 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn one_zero_row() {
        let m = mat(&[&[0.5, 0.5], &[0.0, 0.0]]);
        assert_eq!(norm_0(&m, 1e-5), 2);
        assert_eq!(nonzero_rows(&m, 1e-5), 1);
    }

    #[test]
    fn zero_matrix_metrics() {
        let z = DenseMatrix::zeros(3, 4);
        assert_eq!(norm_1(&z), 0.0);
        assert_eq!(norm_21(&z), 0.0);
        assert_eq!(norm_0(&z, 1e-5), 0);
        assert_eq!(nonzero_rows(&z, 1e-5), 0);
    }

    #[test]
    fn threshold_is_strict() {
        let m = mat(&[&[1e-5, 2e-5]]);
        assert_eq!(norm_0(&m, 1e-5), 1);
    }

    #[test]
    fn residuals_of_row_sparse_inverse() {
        // HA = [[1,1],[0,0]] is not symmetric; its antisymmetric part has
        // Frobenius norm √2.
        let a = DenseMatrix::filled(2, 2, 1.0).unwrap();
        let h = mat(&[&[0.5, 0.5], &[0.0, 0.0]]);
        let r = property_residuals(&a, &h).unwrap();
        assert!(r.p1 < 1e-15 && r.p2 < 1e-15 && r.p3 < 1e-15);
        assert!((r.p4 - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn residuals_of_zero_inverse() {
        let a = mat(&[&[1.0, 2.0, 0.0], &[0.0, 1.0, 3.0]]);
        let r = property_residuals(&a, &DenseMatrix::zeros(3, 2)).unwrap();
        assert!((r.p1 - a.frobenius_norm()).abs() < 1e-15);
        assert_eq!([r.p2, r.p3, r.p4], [0.0, 0.0, 0.0]);
    }

    #[test]
    fn residual_shape_mismatch() {
        let a = DenseMatrix::zeros(2, 3);
        assert!(matches!(
            property_residuals(&a, &DenseMatrix::zeros(2, 3)),
            Err(GinvError::Dimension(_))
        ));
    }

    proptest! {
        #[test]
        fn norm_inequalities(rows in 1usize..6, cols in 1usize..6, seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let m = DenseMatrix::from_nalgebra(
                DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-3.0..3.0))).unwrap();
            let n21 = norm_21(&m);
            prop_assert!(n21 <= norm_1(&m) + 1e-12);
            prop_assert!(n21 + 1e-12 >= max_row_norm(&m));
        }
    }
}
