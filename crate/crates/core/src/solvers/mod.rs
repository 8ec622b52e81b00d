//! Solvers for the reduced problems, the unreduced 1-norm LP and a grid
//! oracle for tiny instances.
//!
//! * `P21` is solved by ADMM on the splitting `X = V [D⁻¹; Z]`, stopped by a
//!   duality-gap certificate.
//! * `P123` is warm-started by ADMM on `X = G + V₂ Z U₁ᵀ`; when the variable
//!   block is small enough a bounded simplex on the dual LP then finishes
//!   it exactly.
//! * `P21L1` is solved by ADMM with two auxiliary copies (entrywise and
//!   row-wise) and a feasibility repair toward the `P21` solution.

mod admm;
mod exact;
mod full;
mod lp;
mod oracle;
mod simplex;

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{GinvError, Result};
use crate::formulations::{self, ProblemKind, Solution};
use crate::matcore::{svd, DenseMatrix, ToleranceConfig};

pub use admm::{solve_p21, solve_p21_l1};
pub use exact::solve_p123;
pub use full::solve_p123_full;
pub use lp::{solve_mps, LpSolution};
pub use oracle::{oracle_small, OracleGrid};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Iteration cap for splitting methods.
    pub max_iters: usize,
    /// Relative duality-gap target, `gap ≤ solver_tol · (1 + |objective|)`.
    pub solver_tol: f64,
    /// Penalty `ρ` relative to the mean magnitude of the fixed data.
    pub rho: f64,
    /// Iterations between gap certificates.
    pub check_every: usize,
    /// ADMM iterations spent warm-starting the `P123` simplex.
    pub warm_iters: usize,
    /// Largest `(n − r)·r` for which `P123` is finished by the simplex.
    pub exact_max_vars: usize,
    pub max_pivots: usize,
    /// Largest `n·m` accepted by [`solve_p123_full`].
    pub full_cap: usize,
    /// Wall-clock cap per solve, in seconds.
    pub time_limit: Option<f64>,
    /// Record a per-iteration trace in the solution.
    pub trace: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iters: 20_000,
            solver_tol: 1e-8,
            rho: 1.0,
            check_every: 10,
            warm_iters: 2_000,
            exact_max_vars: 1_000,
            max_pivots: 1_000_000,
            full_cap: 1_600,
            time_limit: None,
            trace: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 || self.check_every == 0 || self.max_pivots == 0 {
            return Err(GinvError::Config("iteration limits must be positive".into()));
        }
        if !(self.solver_tol > 0.0 && self.solver_tol.is_finite()) {
            return Err(GinvError::Config(format!(
                "solver_tol must be positive, got {}",
                self.solver_tol
            )));
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(GinvError::Config(format!("rho must be positive, got {}", self.rho)));
        }
        if let Some(t) = self.time_limit {
            if !(t > 0.0) {
                return Err(GinvError::Config(format!("time limit must be positive, got {t}")));
            }
        }
        Ok(())
    }

    pub(crate) fn deadline(&self, start: Instant) -> Option<Instant> {
        self.time_limit
            .map(|t| start + Duration::from_secs_f64(t.min(1e9)))
    }
}

pub(crate) fn expired(deadline: Option<Instant>) -> bool {
    deadline.is_some_and(|t| Instant::now() >= t)
}

pub(crate) fn converged(objective: f64, bound: f64, tol: f64) -> bool {
    objective - bound <= tol * (1.0 + objective.abs())
}

/// Column-sparse counterpart of [`solve_p21`]: solves the row problem on
/// `Aᵀ` and transposes the result.
///
/// The returned `H` satisfies P1, P2 and P4; `objective` is the sum of its
/// column norms and `z` is the variable block of the transposed problem.
pub fn column_variant(
    a: &DenseMatrix,
    tol: &ToleranceConfig,
    cfg: &SolverConfig,
) -> Result<Solution> {
    let at = a.transpose();
    let f = svd(&at, tol)?;
    let problem = formulations::build(ProblemKind::P21, &f, None)?;
    let mut sol = solve_p21(&problem, cfg)?;
    sol.h = sol.h.transpose();
    Ok(sol)
}
