//! The block view `Γ = Vᵀ H U` of a candidate inverse.
//!
//! With `Γ = [[X, Y], [Z, W]]` partitioned at the rank `r`, the Penrose
//! properties read: P1 iff `X = D⁻¹`; given P1, P2 iff `Z D Y = W`, P3 iff
//! `Y = 0` and P4 iff `Z = 0`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{GinvError, Result};
use crate::matcore::{DenseMatrix, SvdFactors};

/// The four blocks of `Γ = Vᵀ H U`.
///
/// Shapes: `X` is `r x r`, `Y` is `r x (m−r)`, `Z` is `(n−r) x r` and `W` is
/// `(n−r) x (m−r)`. Blocks may have zero rows or columns.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockGamma {
    pub x: DMatrix<f64>,
    pub y: DMatrix<f64>,
    pub z: DMatrix<f64>,
    pub w: DMatrix<f64>,
}

impl BlockGamma {
    /// The reduced-form blocks `[[D⁻¹, 0], [Z, 0]]`.
    pub fn reduced(f: &SvdFactors, z: DMatrix<f64>) -> Result<Self> {
        let (m, n, r) = (f.m(), f.n(), f.rank());
        check_z(f, &z)?;
        Ok(BlockGamma {
            x: f.dinv(),
            y: DMatrix::zeros(r, m - r),
            z,
            w: DMatrix::zeros(n - r, m - r),
        })
    }

    /// Reassembles the full `n x m` matrix `Γ`.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        let (r, mr, nr) = (self.x.nrows(), self.y.ncols(), self.z.nrows());
        let mut g = DMatrix::zeros(r + nr, r + mr);
        g.view_mut((0, 0), (r, r)).copy_from(&self.x);
        g.view_mut((0, r), (r, mr)).copy_from(&self.y);
        g.view_mut((r, 0), (nr, r)).copy_from(&self.z);
        g.view_mut((r, r), (nr, mr)).copy_from(&self.w);
        g
    }

    fn check_shapes(&self, f: &SvdFactors) -> Result<()> {
        let (m, n, r) = (f.m(), f.n(), f.rank());
        let want = [(r, r), (r, m - r), (n - r, r), (n - r, m - r)];
        let got = [self.x.shape(), self.y.shape(), self.z.shape(), self.w.shape()];
        if want != got {
            return Err(GinvError::dim(format!(
                "block shapes {got:?} do not match (m, n, r) = ({m}, {n}, {r})"
            )));
        }
        Ok(())
    }
}

pub(crate) fn check_z(f: &SvdFactors, z: &DMatrix<f64>) -> Result<()> {
    let want = (f.n() - f.rank(), f.rank());
    if z.shape() != want {
        return Err(GinvError::dim(format!(
            "Z is {}x{}, expected {}x{}",
            z.nrows(),
            z.ncols(),
            want.0,
            want.1
        )));
    }
    Ok(())
}

pub fn gamma_from_h(f: &SvdFactors, h: &DenseMatrix) -> Result<BlockGamma> {
    let (m, n, r) = (f.m(), f.n(), f.rank());
    if h.shape() != (n, m) {
        return Err(GinvError::dim(format!(
            "H is {}x{}, expected {n}x{m}",
            h.rows(),
            h.cols()
        )));
    }
    let g = f.v().transpose() * h.as_matrix() * f.u();
    Ok(BlockGamma {
        x: g.view((0, 0), (r, r)).into_owned(),
        y: g.view((0, r), (r, m - r)).into_owned(),
        z: g.view((r, 0), (n - r, r)).into_owned(),
        w: g.view((r, r), (n - r, m - r)).into_owned(),
    })
}

/// `H = V Γ Uᵀ`.
pub fn h_from_gamma(f: &SvdFactors, gamma: &BlockGamma) -> Result<DenseMatrix> {
    gamma.check_shapes(f)?;
    Ok(DenseMatrix::wrap(f.v() * gamma.to_matrix() * f.u().transpose()))
}

/// `H = G + V₂ Z U₁ᵀ`, the inverse whose blocks are `[[D⁻¹, 0], [Z, 0]]`.
pub fn h_from_z(f: &SvdFactors, z: &DenseMatrix) -> Result<DenseMatrix> {
    check_z(f, z.as_matrix())?;
    Ok(DenseMatrix::wrap(assemble_h(f, z.as_matrix())))
}

pub(crate) fn assemble_h(f: &SvdFactors, z: &DMatrix<f64>) -> DMatrix<f64> {
    let mut h = f.g().clone();
    if z.nrows() > 0 && z.ncols() > 0 {
        h += f.v2() * (z * f.u1().transpose());
    }
    h
}

/// Frobenius norms of the block defects.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockResiduals {
    /// `‖X − D⁻¹‖_F`
    pub p1: f64,
    /// `‖Z D Y − W‖_F`
    pub p2: f64,
    /// `‖Y‖_F`
    pub p3: f64,
    /// `‖Z‖_F`
    pub p4: f64,
}

impl BlockResiduals {
    pub fn as_array(&self) -> [f64; 4] {
        [self.p1, self.p2, self.p3, self.p4]
    }
}

pub fn block_residuals(f: &SvdFactors, gamma: &BlockGamma) -> Result<BlockResiduals> {
    gamma.check_shapes(f)?;
    let zdy = &gamma.z * f.d() * &gamma.y;
    Ok(BlockResiduals {
        p1: (&gamma.x - f.dinv()).norm(),
        p2: (zdy - &gamma.w).norm(),
        p3: gamma.y.norm(),
        p4: gamma.z.norm(),
    })
}
