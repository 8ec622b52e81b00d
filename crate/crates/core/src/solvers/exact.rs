//! Exact solution of `min ‖G + V₂ Z U₁ᵀ‖₁` through its dual LP
//!
//! `max ⟨Λ, G⟩  s.t.  V₂ᵀ Λ U₁ = 0,  −1 ≤ Λ ≤ 1`,
//!
//! whose constraint matrix is `Mᵀ` with `M = V₂ ⊗ U₁` (`vec` taken row by
//! row). The simplex multipliers of an optimal basis are `−vec(Z)`, and the
//! reduced costs are the entries of `H` itself.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use super::admm::{finish, l1_run};
use super::simplex::{maximize, LpMatrix, SimplexOptions, SimplexStatus};
use super::{converged, SolverConfig};
use crate::error::{GinvError, Result};
use crate::formulations::{ProblemKind, ReducedProblem, Solution, SolveStatus, TraceRecord};
use crate::matcore::{dense_l1, SvdFactors};
use crate::structure::assemble_h;

/// `Mᵀ` for `M = V₂ ⊗ U₁`: rows indexed by `a·r + b` (entries of `Z`),
/// columns by `i·m + j` (entries of `H`).
struct KronRows<'a> {
    v2: &'a DMatrix<f64>,
    u1: &'a DMatrix<f64>,
}

impl KronRows<'_> {
    fn dims(&self) -> (usize, usize, usize, usize) {
        (self.v2.nrows(), self.u1.nrows(), self.v2.ncols(), self.u1.ncols())
    }
}

impl LpMatrix for KronRows<'_> {
    fn nrows(&self) -> usize {
        self.v2.ncols() * self.u1.ncols()
    }

    fn ncols(&self) -> usize {
        self.v2.nrows() * self.u1.nrows()
    }

    fn column(&self, idx: usize, out: &mut DVector<f64>) {
        let (_, m, k, r) = self.dims();
        let (i, j) = (idx / m, idx % m);
        for a in 0..k {
            let va = self.v2[(i, a)];
            for b in 0..r {
                out[a * r + b] = va * self.u1[(j, b)];
            }
        }
    }

    fn tr_mul(&self, y: &DVector<f64>, out: &mut DVector<f64>) {
        let (n, m, k, r) = self.dims();
        let z = DMatrix::from_row_slice(k, r, y.as_slice());
        let p = (self.v2 * z) * self.u1.transpose();
        for i in 0..n {
            for j in 0..m {
                out[i * m + j] = p[(i, j)];
            }
        }
    }

    fn mul(&self, x: &DVector<f64>, out: &mut DVector<f64>) {
        let (n, m, k, r) = self.dims();
        let w = DMatrix::from_row_slice(n, m, x.as_slice());
        let t = self.v2.tr_mul(&(w * self.u1));
        for a in 0..k {
            for b in 0..r {
                out[a * r + b] = t[(a, b)];
            }
        }
    }
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let mut v = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        v.extend(m.row(i).iter());
    }
    v
}

/// Lower bound `⟨Λ, G⟩` after making `Λ` exactly dual feasible.
fn certify(f: &SvdFactors, lam: &mut DMatrix<f64>) -> f64 {
    let (v2, u1) = (f.v2(), f.u1());
    let t = v2.tr_mul(&(&*lam * u1));
    *lam -= (v2 * t) * u1.transpose();
    let scale = lam.amax().max(1.0);
    *lam /= scale;
    lam.dot(f.g())
}

struct Exact {
    z: DMatrix<f64>,
    objective: f64,
    bound: f64,
    status: SimplexStatus,
    iterations: usize,
}

fn simplex_finish(
    f: &SvdFactors,
    warm_z: &DMatrix<f64>,
    warm_dual: Option<&DMatrix<f64>>,
    cfg: &SolverConfig,
    deadline: Option<Instant>,
) -> Exact {
    let (n, m, r, k) = (f.n(), f.m(), f.rank(), f.n() - f.rank());
    let lp = KronRows {
        v2: f.v2(),
        u1: f.u1(),
    };
    let c = row_major(f.g());
    let x0 = warm_dual.map_or_else(|| vec![0.0; n * m], row_major);

    // Entries of H that are nearly zero at the warm start are the likely
    // basic ones.
    let resid = row_major(&assemble_h(f, warm_z));
    let mut priority: Vec<usize> = (0..n * m).collect();
    priority.sort_by(|&a, &b| resid[a].abs().total_cmp(&resid[b].abs()).then(a.cmp(&b)));

    let opts = SimplexOptions {
        max_iters: cfg.max_pivots,
        deadline,
        long_step: true,
        ..SimplexOptions::default()
    };
    let res = maximize(&lp, &c, &vec![-1.0; n * m], &vec![1.0; n * m], &x0, &priority, &opts);

    let z = DMatrix::from_row_slice(k, r, res.y.as_slice()) * -1.0;
    let objective = dense_l1(&assemble_h(f, &z));
    let mut lam = DMatrix::from_row_slice(n, m, &res.x);
    let bound = certify(f, &mut lam);
    Exact {
        z,
        objective,
        bound,
        status: res.status,
        iterations: res.iterations(),
    }
}

/// Minimizes the 1-norm of `H = G + V₂ Z U₁ᵀ`.
pub fn solve_p123(problem: &ReducedProblem, cfg: &SolverConfig) -> Result<Solution> {
    if problem.kind() != ProblemKind::P123 {
        return Err(GinvError::Config(format!(
            "expected a P123 problem, got {}",
            problem.kind()
        )));
    }
    cfg.validate()?;
    let start = Instant::now();
    let deadline = cfg.deadline(start);
    let f = problem.factors();
    let use_exact = problem.num_vars() <= cfg.exact_max_vars;

    let warm_iters = if use_exact {
        cfg.warm_iters.max(cfg.check_every)
    } else {
        cfg.max_iters
    };
    let warm = l1_run(f, cfg, warm_iters, deadline);
    let mut trace = warm.trace;
    let warm_bound = warm.bound.is_finite().then_some(warm.bound);

    let splitting_status = |s: SolveStatus| match s {
        SolveStatus::Optimal | SolveStatus::TimeLimit => s,
        _ => SolveStatus::IterLimit,
    };
    if warm.status == SolveStatus::Optimal || !use_exact || warm.status == SolveStatus::TimeLimit {
        return Ok(finish(
            f,
            warm.z,
            warm.objective,
            splitting_status(warm.status),
            warm.iterations,
            warm_bound,
            trace,
            start,
        ));
    }

    let ex = simplex_finish(f, &warm.z, warm.dual.as_ref(), cfg, deadline);
    let iterations = warm.iterations + ex.iterations;
    let bound = ex.bound.max(warm.bound);
    if cfg.trace {
        trace.push(TraceRecord {
            stage: "simplex".into(),
            iteration: iterations,
            objective: ex.objective,
            residual: 0.0,
            bound,
            merit: f64::NAN,
        });
    }
    let (z, objective) = if ex.objective <= warm.objective {
        (ex.z, ex.objective)
    } else {
        (warm.z, warm.objective)
    };
    let status = if converged(objective, bound, cfg.solver_tol) {
        SolveStatus::Optimal
    } else if ex.status == SimplexStatus::TimeLimit {
        SolveStatus::TimeLimit
    } else {
        SolveStatus::IterLimit
    };
    Ok(finish(f, z, objective, status, iterations, Some(bound), trace, start))
}
