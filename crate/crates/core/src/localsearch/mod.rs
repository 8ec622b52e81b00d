//! Determinant local search for a row-sparse ah-symmetric reflexive
//! inverse.
//!
//! Fix `r` linearly independent rows `S`. A column set `T` is a local
//! maximizer when no single swap of a column of `T` with one outside it
//! increases `|det A[S,T]|` by more than a factor `κ`. With `Â = A[:,T]`,
//! the matrix that places `Â† = (ÂᵀÂ)⁻¹Âᵀ` in rows `T` and zeros elsewhere
//! is an ah-symmetric reflexive inverse with exactly `r` nonzero rows, and
//! at a local maximizer (`κ = 1`) its 1-norm is within a factor `r` of the
//! smallest 1-norm over all ah-symmetric reflexive inverses.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{GinvError, Result};
use crate::formulations::SolveStatus;
use crate::matcore::{pivot_columns, svd, DenseMatrix, ToleranceConfig};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LsConfig {
    /// A swap is accepted only if it multiplies `|det|` by more than this.
    pub kappa: f64,
    pub max_swaps: usize,
    /// Swaps between recomputations of the inverse from scratch.
    pub refresh_every: usize,
    /// Rank of `A`; taken from the SVD when `None`.
    pub rank: Option<usize>,
    pub tol: ToleranceConfig,
    /// Record every accepted swap.
    pub trace: bool,
}

impl Default for LsConfig {
    fn default() -> Self {
        LsConfig {
            kappa: 1.0 + 1e-10,
            max_swaps: 100_000,
            refresh_every: 50,
            rank: None,
            tol: ToleranceConfig::default(),
            trace: false,
        }
    }
}

impl LsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa >= 1.0 && self.kappa.is_finite()) {
            return Err(GinvError::Config(format!("kappa must be >= 1, got {}", self.kappa)));
        }
        if self.refresh_every == 0 {
            return Err(GinvError::Config("refresh_every must be positive".into()));
        }
        if self.rank == Some(0) {
            return Err(GinvError::Config("rank must be positive".into()));
        }
        self.tol.validate()
    }
}

fn cutoff(tol: &ToleranceConfig, m: usize, n: usize) -> f64 {
    tol.rank_cutoff(m, n).max(1e-12)
}

/// `r` linearly independent rows of `A`, in pivot order of a
/// column-pivoted QR of `Aᵀ`.
pub fn select_rows(a: &DenseMatrix, rank: usize, tol: &ToleranceConfig) -> Result<Vec<usize>> {
    let (m, n) = a.shape();
    pivot_columns(&a.as_matrix().transpose(), rank, cutoff(tol, m, n))
}

/// `r` columns making `A[S,T]` nonsingular, from a column-pivoted QR of
/// `A[S,:]`.
pub fn initial_t(a: &DenseMatrix, s: &[usize], tol: &ToleranceConfig) -> Result<Vec<usize>> {
    let rows = a.as_matrix().select_rows(s.iter());
    let (m, n) = a.shape();
    pivot_columns(&rows, s.len(), cutoff(tol, m, n))
}

/// Search state. `A[S,:]` is kept alongside so ratios need no access to
/// the full matrix.
#[derive(Clone, Debug)]
pub struct LsState {
    s: Vec<usize>,
    t: Vec<usize>,
    atil: DMatrix<f64>,
    absdet: f64,
    atil_inv: DMatrix<f64>,
    rows: DMatrix<f64>,
    /// `Atil⁻¹ A[S,:]`, whose entry `(j, k)` is the swap ratio.
    coords: DMatrix<f64>,
}

impl LsState {
    pub fn new(a: &DenseMatrix, s: &[usize], t: &[usize]) -> Result<Self> {
        let (m, n) = a.shape();
        if s.len() != t.len() || s.is_empty() {
            return Err(GinvError::dim(format!(
                "S and T must be nonempty and of equal length, got {} and {}",
                s.len(),
                t.len()
            )));
        }
        if s.iter().any(|&i| i >= m) || t.iter().any(|&j| j >= n) {
            return Err(GinvError::dim(format!("index out of range for a {m}x{n} matrix")));
        }
        let rows = a.as_matrix().select_rows(s.iter());
        let mut state = LsState {
            s: s.to_vec(),
            t: t.to_vec(),
            atil: DMatrix::zeros(0, 0),
            absdet: 0.0,
            atil_inv: DMatrix::zeros(0, 0),
            rows,
            coords: DMatrix::zeros(0, 0),
        };
        state.refresh()?;
        Ok(state)
    }

    fn refresh(&mut self) -> Result<()> {
        self.atil = self.rows.select_columns(self.t.iter());
        let lu = self.atil.clone().lu();
        self.absdet = lu.determinant().abs();
        self.atil_inv = lu
            .try_inverse()
            .filter(|_| self.absdet > 0.0 && self.absdet.is_finite())
            .ok_or_else(|| GinvError::Rank("A[S,T] is singular".into()))?;
        self.coords = &self.atil_inv * &self.rows;
        Ok(())
    }

    pub fn s(&self) -> &[usize] {
        &self.s
    }

    pub fn t(&self) -> &[usize] {
        &self.t
    }

    pub fn atil(&self) -> &DMatrix<f64> {
        &self.atil
    }

    pub fn atil_inv(&self) -> &DMatrix<f64> {
        &self.atil_inv
    }

    pub fn absdet(&self) -> f64 {
        self.absdet
    }

    /// `|det|` after / before replacing position `j` of `T` by column `k`.
    pub fn swap_ratio(&self, j: usize, k: usize) -> Result<f64> {
        if j >= self.t.len() || k >= self.rows.ncols() {
            return Err(GinvError::dim(format!(
                "swap ({j}, {k}) out of range for |T| = {} and {} columns",
                self.t.len(),
                self.rows.ncols()
            )));
        }
        Ok(self.coords[(j, k)].abs())
    }

    /// Replaces position `j` of `T` by column `k` with a rank-one update.
    fn swap(&mut self, j: usize, k: usize) {
        let mut w: DVector<f64> = self.coords.column(k).into_owned();
        let wj = w[j];
        w[j] = 0.0;
        for mat in [&mut self.atil_inv, &mut self.coords] {
            let pivot_row = (mat.row(j) / wj).transpose();
            mat.ger(-1.0, &w, &pivot_row, 1.0);
            mat.set_row(j, &pivot_row.transpose());
        }
        self.atil.set_column(j, &self.rows.column(k));
        self.t[j] = k;
        self.absdet *= wj.abs();
    }
}

/// One accepted swap.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwapRecord {
    pub iteration: usize,
    pub j: usize,
    pub k: usize,
    pub ratio: f64,
    pub absdet: f64,
}

#[derive(Clone, Debug)]
pub struct LsOutcome {
    pub state: LsState,
    pub swaps: usize,
    /// `Optimal` at a `κ`-local maximizer, `IterLimit` otherwise.
    pub status: SolveStatus,
    pub trace: Vec<SwapRecord>,
}

/// Best-improvement swaps from `state` until no swap gains more than `κ`.
/// Ties go to the smallest position `j`, then the smallest column `k`.
pub fn local_search_from(mut state: LsState, cfg: &LsConfig) -> Result<LsOutcome> {
    cfg.validate()?;
    let mut trace = Vec::new();
    let mut swaps = 0;
    let r = state.t.len();
    let n = state.rows.ncols();
    let mut in_t = vec![false; n];
    for &c in &state.t {
        in_t[c] = true;
    }
    loop {
        let mut best = (0, 0, cfg.kappa);
        for j in 0..r {
            for k in 0..n {
                if in_t[k] {
                    continue;
                }
                let ratio = state.coords[(j, k)].abs();
                if ratio > best.2 {
                    best = (j, k, ratio);
                }
            }
        }
        if best.2 <= cfg.kappa {
            return Ok(LsOutcome {
                state,
                swaps,
                status: SolveStatus::Optimal,
                trace,
            });
        }
        if swaps == cfg.max_swaps {
            return Ok(LsOutcome {
                state,
                swaps,
                status: SolveStatus::IterLimit,
                trace,
            });
        }
        let (j, k, ratio) = best;
        in_t[state.t[j]] = false;
        in_t[k] = true;
        state.swap(j, k);
        swaps += 1;
        if swaps % cfg.refresh_every == 0 {
            state.refresh()?;
        }
        if cfg.trace {
            trace.push(SwapRecord {
                iteration: swaps,
                j,
                k,
                ratio,
                absdet: state.absdet,
            });
        }
    }
}

/// Picks `S` and an initial `T`, then runs [`local_search_from`].
pub fn local_search(a: &DenseMatrix, cfg: &LsConfig) -> Result<LsOutcome> {
    cfg.validate()?;
    if a.is_zero() {
        return Err(GinvError::ZeroMatrix);
    }
    let rank = match cfg.rank {
        Some(r) => r,
        None => svd(a, &cfg.tol)?.rank(),
    };
    let s = select_rows(a, rank, &cfg.tol)?;
    let t = initial_t(a, &s, &cfg.tol)?;
    local_search_from(LsState::new(a, &s, &t)?, cfg)
}

/// The `n x m` inverse with `Â† = (ÂᵀÂ)⁻¹Âᵀ` in rows `T`, `Â = A[:,T]`.
pub fn build_ah_symmetric(a: &DenseMatrix, t: &[usize]) -> Result<DenseMatrix> {
    let (m, n) = a.shape();
    if t.is_empty() || t.iter().any(|&j| j >= n) {
        return Err(GinvError::dim(format!("column set {t:?} invalid for {n} columns")));
    }
    let ahat = a.as_matrix().select_columns(t.iter());
    let r = t.len();
    if r > m {
        return Err(GinvError::Rank(format!("{r} columns cannot be independent in {m} rows")));
    }
    let qr = ahat.qr();
    let (q, rf) = (qr.q(), qr.r());
    let diag: Vec<f64> = (0..r).map(|i| rf[(i, i)].abs()).collect();
    let dmax = diag.iter().copied().fold(0.0, f64::max);
    if diag.iter().any(|&d| d <= dmax * m as f64 * f64::EPSILON) {
        return Err(GinvError::Rank("A[:,T] is rank deficient".into()));
    }
    let pinv = rf
        .solve_upper_triangular(&q.transpose())
        .ok_or_else(|| GinvError::Rank("A[:,T] is rank deficient".into()))?;
    let mut h = DMatrix::zeros(n, m);
    for (p, &row) in t.iter().enumerate() {
        h.set_row(row, &pinv.row(p));
    }
    Ok(DenseMatrix::wrap(h))
}
