//! The unreduced 1-norm LP over all of `H`:
//!
//! `min ‖H‖₁  s.t.  A H A = A,  A H = (A H)ᵀ,  H A H = H`.
//!
//! Given the first two families, `H` is reflexive exactly when its rows lie
//! in the column space of `A`, i.e. when `H = L Cᵀ` for `C = A[:,T]`, any `r`
//! linearly independent columns of `A` (picked by a column-pivoted QR), and
//! some `n x r` matrix `L`. Without this family the LP optimum can drop
//! below the reflexive one.
//!
//! Substituting `h = M l` (`h`, `l` the row-major vectors of `H`, `L`)
//! turns the first two families into `E M l = e`, and the dual is
//! `max eᵀμ  s.t.  (E M)ᵀμ = Mᵀλ,  −1 ≤ λ ≤ 1`. It is solved with the
//! bounded simplex starting from `μ = 0, λ = 0`; the row multipliers are `l`.

use std::time::Instant;

use nalgebra::DMatrix;

use super::simplex::{maximize, SimplexOptions, SimplexStatus};
use super::SolverConfig;
use crate::error::{GinvError, Result};
use crate::formulations::{Solution, SolveStatus};
use crate::matcore::{pivot_prefix, property_residuals, svd, DenseMatrix, ToleranceConfig};
use crate::structure::gamma_from_h;

struct FullLp {
    /// Rows: the `n r` entries of `L`. Columns: `μ` for every equation of
    /// `A H A = A` and of the strict upper triangle of `A H = (A H)ᵀ`, then
    /// `λ` for every entry of `H`.
    matrix: DMatrix<f64>,
    cost: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    num_mu: usize,
}

fn build(a: &DMatrix<f64>, c: &DMatrix<f64>) -> FullLp {
    let (m, n) = a.shape();
    let r = c.ncols();
    let nm = n * m;
    let l = |i: usize, t: usize| i * r + t;
    let num_mu = m * n + m * m.saturating_sub(1) / 2;
    let mut mat = DMatrix::zeros(n * r, num_mu + nm);
    let mut cost = Vec::with_capacity(num_mu + nm);
    let cta = c.tr_mul(a);

    let mut col = 0;
    // (A L Cᵀ A)_pq = A_pq
    for p in 0..m {
        for q in 0..n {
            for i in 0..n {
                let api = a[(p, i)];
                if api == 0.0 {
                    continue;
                }
                for t in 0..r {
                    mat[(l(i, t), col)] = api * cta[(t, q)];
                }
            }
            cost.push(a[(p, q)]);
            col += 1;
        }
    }
    // (A L Cᵀ)_pq − (A L Cᵀ)_qp = 0 for p < q
    for p in 0..m {
        for q in p + 1..m {
            for i in 0..n {
                for t in 0..r {
                    mat[(l(i, t), col)] = a[(p, i)] * c[(q, t)] - a[(q, i)] * c[(p, t)];
                }
            }
            cost.push(0.0);
            col += 1;
        }
    }
    // −Mᵀλ, with H_ij = Σ_t L_it C_jt
    for i in 0..n {
        for j in 0..m {
            for t in 0..r {
                mat[(l(i, t), col)] = -c[(j, t)];
            }
            cost.push(0.0);
            col += 1;
        }
    }

    let mut lower = vec![f64::NEG_INFINITY; num_mu];
    let mut upper = vec![f64::INFINITY; num_mu];
    lower.extend(std::iter::repeat_n(-1.0, nm));
    upper.extend(std::iter::repeat_n(1.0, nm));
    FullLp {
        matrix: mat,
        cost,
        lower,
        upper,
        num_mu,
    }
}

/// Minimizes `‖H‖₁` over reflexive ah-symmetric generalized inverses
/// without using the SVD reduction.
///
/// The reported `z` is the `Z` block of `Vᵀ H U`, computed after the solve.
pub fn solve_p123_full(a: &DenseMatrix, cfg: &SolverConfig) -> Result<Solution> {
    cfg.validate()?;
    if a.is_zero() {
        return Err(GinvError::ZeroMatrix);
    }
    let (m, n) = a.shape();
    if n * m > cfg.full_cap {
        return Err(GinvError::SizeCap {
            size: n * m,
            cap: cfg.full_cap,
        });
    }
    let start = Instant::now();
    let tol = ToleranceConfig::default();
    let basis_cols = pivot_prefix(a.as_matrix(), m.min(n), tol.rank_cutoff(m, n));
    let c = a.as_matrix().select_columns(basis_cols.iter());
    let lp = build(a.as_matrix(), &c);
    let ncols = lp.cost.len();
    // Free multipliers first: they are basic at any optimum.
    let priority: Vec<usize> = (0..ncols).collect();
    let opts = SimplexOptions {
        max_iters: cfg.max_pivots,
        deadline: cfg.deadline(start),
        ..SimplexOptions::default()
    };
    let res = maximize(
        &lp.matrix,
        &lp.cost,
        &lp.lower,
        &lp.upper,
        &vec![0.0; ncols],
        &priority,
        &opts,
    );
    let lmat = DMatrix::from_row_slice(n, c.ncols(), res.y.as_slice());
    let h = lmat * c.transpose();
    let dual_value: f64 = lp.cost[..lp.num_mu]
        .iter()
        .zip(&res.x[..lp.num_mu])
        .map(|(c, x)| c * x)
        .sum();
    let solve_time = start.elapsed().as_secs_f64();

    let h = DenseMatrix::from_nalgebra(h)?;
    let objective = crate::matcore::norm_1(&h);
    let status = match res.status {
        SimplexStatus::Optimal => SolveStatus::Optimal,
        SimplexStatus::TimeLimit => SolveStatus::TimeLimit,
        SimplexStatus::IterLimit => SolveStatus::IterLimit,
        SimplexStatus::Unbounded | SimplexStatus::Singular => {
            return Err(GinvError::Verification(format!(
                "unreduced LP ended in state {:?}",
                res.status
            )))
        }
    };

    if status == SolveStatus::Optimal {
        let scale = a.frobenius_norm();
        let res = property_residuals(a, &h)?;
        if res.p1 > 1e-6 * scale || res.p2 > 1e-6 * scale || res.p3 > 1e-6 * scale {
            return Err(GinvError::Verification(format!(
                "unreduced LP solution violates P1-P3: {res:?}"
            )));
        }
    }

    let f = svd(a, &tol)?;
    let z = gamma_from_h(&f, &h)?.z;
    Ok(Solution {
        z: DenseMatrix::wrap(z),
        objective,
        h,
        status,
        iterations: res.iterations(),
        solve_time,
        lower_bound: Some(dual_value),
        trace: Vec::new(),
    })
}
