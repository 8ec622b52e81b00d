//! Dense real matrices, norms, the full SVD, the Moore–Penrose
//! pseudoinverse and the four Penrose property residuals.

mod io;
mod norms;
mod pivot;
mod svd;

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{GinvError, Result};

pub use io::{
    read_csv, read_matrix, read_mtx, read_mtx_from, write_csv, write_matrix, write_mtx,
    write_mtx_to, MtxFormat,
};
pub(crate) use norms::{dense_l1, dense_l21};
pub(crate) use pivot::{pivot_columns, pivot_prefix};
pub use norms::{
    max_row_norm, nonzero_rows, norm_0, norm_1, norm_21, property_residuals, PropertyResiduals,
};
pub use svd::{mp_pseudoinverse, svd, svd_with_rank, SvdFactors};

/// Real `rows x cols` matrix with finite entries.
///
/// Wraps a column-major `nalgebra` matrix; the public constructors take
/// row-major data and reject NaN or infinite entries.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix(DMatrix<f64>);

impl DenseMatrix {
    pub fn from_row_major(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(GinvError::dim(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        Self::from_nalgebra(DMatrix::from_row_slice(rows, cols, &entries))
    }

    /// Builds a matrix from nested rows; all rows must have the same length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(GinvError::dim("ragged rows"));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::from_row_major(rows.len(), cols, flat)
    }

    pub fn from_nalgebra(m: DMatrix<f64>) -> Result<Self> {
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                if !m[(i, j)].is_finite() {
                    return Err(GinvError::NonFinite { row: i, col: j });
                }
            }
        }
        Ok(DenseMatrix(m))
    }

    /// Wraps an internally computed matrix. Finiteness is only checked in
    /// debug builds.
    pub(crate) fn wrap(m: DMatrix<f64>) -> Self {
        debug_assert!(m.iter().all(|x| x.is_finite()), "non-finite entry");
        DenseMatrix(m)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        DenseMatrix(DMatrix::identity(n, n))
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Result<Self> {
        Self::from_nalgebra(DMatrix::from_element(rows, cols, value))
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.0.shape()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn to_row_major(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                out.push(self.0[(i, j)]);
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        DenseMatrix(self.0.transpose())
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols() != other.rows() {
            return Err(GinvError::dim(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows(),
                self.cols(),
                other.rows(),
                other.cols()
            )));
        }
        Ok(DenseMatrix(&self.0 * &other.0))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0.0)
    }

    /// Submatrix with the given rows and columns, in the given order.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> DenseMatrix {
        DenseMatrix(DMatrix::from_fn(rows.len(), cols.len(), |i, j| {
            self.0[(rows[i], cols[j])]
        }))
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DenseMatrix {}x{} {:?}", self.rows(), self.cols(), self.to_row_major())
    }
}

impl From<DenseMatrix> for DMatrix<f64> {
    fn from(m: DenseMatrix) -> Self {
        m.0
    }
}

/// Numerical tolerances shared by every stage.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToleranceConfig {
    /// Relative singular-value cutoff; `None` means `max(m, n) * f64::EPSILON`.
    pub rank_tol: Option<f64>,
    /// Entries with magnitude at or below this count as zero.
    pub zero_tol: f64,
    /// Relative tolerance for Penrose property checks.
    pub residual_tol: f64,
    /// Convergence tolerance handed to the optimization solvers.
    pub solver_tol: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        ToleranceConfig {
            rank_tol: None,
            zero_tol: 1e-5,
            residual_tol: 1e-8,
            solver_tol: 1e-8,
        }
    }
}

impl ToleranceConfig {
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("rank_tol", self.rank_tol.unwrap_or(1.0)),
            ("zero_tol", self.zero_tol),
            ("residual_tol", self.residual_tol),
            ("solver_tol", self.solver_tol),
        ];
        for (name, v) in named {
            if !(v > 0.0 && v.is_finite()) {
                return Err(GinvError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// The relative singular-value cutoff used for an `m x n` matrix.
    pub fn rank_cutoff(&self, m: usize, n: usize) -> f64 {
        self.rank_tol
            .unwrap_or_else(|| m.max(n).max(1) as f64 * f64::EPSILON)
    }
}
