//! ADMM for the 2,1 problem, the 1-norm problem and the budgeted 1-norm
//! problem, each with a duality-gap certificate built from the scaled dual.

use std::time::Instant;

use nalgebra::DMatrix;

use super::{converged, expired, SolverConfig};
use crate::error::{GinvError, Result};
use crate::formulations::{ProblemKind, ReducedProblem, Solution, SolveStatus, TraceRecord};
use crate::matcore::{dense_l1, dense_l21, DenseMatrix, SvdFactors};
use crate::structure::assemble_h;

pub(crate) struct AdmmRun {
    pub z: DMatrix<f64>,
    pub objective: f64,
    /// Best certified lower bound (`-∞` if none yet).
    pub bound: f64,
    /// Dual certificate attaining `bound` (1-norm problem only).
    pub dual: Option<DMatrix<f64>>,
    pub status: SolveStatus,
    pub iterations: usize,
    pub trace: Vec<TraceRecord>,
}

fn record(stage: &str, iteration: usize, objective: f64, residual: f64, bound: f64, merit: f64) -> TraceRecord {
    TraceRecord {
        stage: stage.to_string(),
        iteration,
        objective,
        residual,
        bound,
        merit,
    }
}

/// Shrinks each row toward zero by `t` in Euclidean norm.
fn row_shrink(v: &mut DMatrix<f64>, t: f64) {
    for i in 0..v.nrows() {
        let norm = v.row(i).norm();
        let scale = if norm <= t { 0.0 } else { 1.0 - t / norm };
        v.row_mut(i).scale_mut(scale);
    }
}

fn soft_threshold(v: &mut DMatrix<f64>, t: f64) {
    v.apply(|x| *x = x.signum() * (x.abs() - t).max(0.0));
}

/// Euclidean projection onto `{x ≥ 0 : Σ x ≤ radius}` for nonnegative `x`.
fn project_simplex_ball(x: &[f64], radius: f64) -> Vec<f64> {
    if x.iter().sum::<f64>() <= radius {
        return x.to_vec();
    }
    let mut sorted = x.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &v) in sorted.iter().enumerate() {
        cum += v;
        let t = (cum - radius) / (k + 1) as f64;
        if v - t > 0.0 {
            theta = t;
        } else {
            break;
        }
    }
    x.iter().map(|&v| (v - theta).max(0.0)).collect()
}

/// Projection onto the 2,1-norm ball of the given radius.
pub(crate) fn project_l21_ball(v: &mut DMatrix<f64>, radius: f64) {
    let norms: Vec<f64> = (0..v.nrows()).map(|i| v.row(i).norm()).collect();
    let target = project_simplex_ball(&norms, radius);
    for i in 0..v.nrows() {
        if norms[i] > 0.0 {
            v.row_mut(i).scale_mut(target[i] / norms[i]);
        }
    }
}

fn max_row_norm(v: &DMatrix<f64>) -> f64 {
    (0..v.nrows()).map(|i| v.row(i).norm()).fold(0.0, f64::max)
}

fn mean_row_norm(v: &DMatrix<f64>) -> f64 {
    dense_l21(v) / v.nrows().max(1) as f64
}

fn mean_abs(v: &DMatrix<f64>) -> f64 {
    dense_l1(v) / (v.len().max(1)) as f64
}

fn check_kind(problem: &ReducedProblem, want: ProblemKind) -> Result<()> {
    if problem.kind() != want {
        return Err(GinvError::Config(format!(
            "expected a {want} problem, got {}",
            problem.kind()
        )));
    }
    Ok(())
}

pub(crate) fn finish(
    f: &SvdFactors,
    z: DMatrix<f64>,
    objective: f64,
    status: SolveStatus,
    iterations: usize,
    lower_bound: Option<f64>,
    trace: Vec<TraceRecord>,
    start: Instant,
) -> Solution {
    let h = assemble_h(f, &z);
    Solution {
        z: DenseMatrix::wrap(z),
        objective,
        h: DenseMatrix::wrap(h),
        status,
        iterations,
        solve_time: start.elapsed().as_secs_f64(),
        lower_bound,
        trace,
    }
}

/// ADMM on `min ‖X‖₂,₁ s.t. X = B + Q Z` with `B = V₁D⁻¹`, `Q = V₂`.
pub(crate) fn p21_run(f: &SvdFactors, cfg: &SolverConfig, deadline: Option<Instant>) -> AdmmRun {
    let b = f.v1_dinv();
    let q = f.v2();
    let (n, r, k) = (f.n(), f.rank(), f.n() - f.rank());
    if k == 0 {
        let obj = dense_l21(&b);
        return AdmmRun {
            z: DMatrix::zeros(0, r),
            objective: obj,
            bound: obj,
            dual: None,
            status: SolveStatus::Optimal,
            iterations: 0,
            trace: Vec::new(),
        };
    }

    let rho = cfg.rho / mean_row_norm(&b);
    let mut z = DMatrix::zeros(k, r);
    let mut qz = DMatrix::zeros(n, r);
    let mut u = DMatrix::zeros(n, r);
    let mut bound = f64::NEG_INFINITY;
    let mut objective = dense_l21(&b);
    let mut trace = Vec::new();
    let mut status = SolveStatus::IterLimit;
    let mut iterations = 0;

    for it in 1..=cfg.max_iters {
        iterations = it;
        let mut x = &b + &qz - &u;
        row_shrink(&mut x, 1.0 / rho);
        let z_new = q.tr_mul(&(&x + &u - &b));
        let qz_new = q * &z_new;
        let resid = &x - &b - &qz_new;
        let dz = (&z_new - &z).norm_squared();
        let du = resid.norm_squared();
        u += &resid;
        z = z_new;
        qz = qz_new;

        let last = it == cfg.max_iters;
        let check = it % cfg.check_every == 0 || last;
        if check || cfg.trace {
            objective = dense_l21(&(&b + &qz));
        }
        if check {
            // Λ = −ρU, made feasible for QᵀΛ = 0 and row norms ≤ 1.
            let mut lam = &u * -rho;
            let qtl = q.tr_mul(&lam);
            lam -= q * qtl;
            let scale = max_row_norm(&lam).max(1.0);
            let lb = lam.dot(&b) / scale;
            bound = bound.max(lb);
        }
        if cfg.trace {
            trace.push(record("admm", it, objective, du.sqrt(), bound, (rho * (dz + du)).sqrt()));
        }
        if check && converged(objective, bound, cfg.solver_tol) {
            status = SolveStatus::Optimal;
            break;
        }
        if it % 16 == 0 && expired(deadline) {
            objective = dense_l21(&(&b + &qz));
            status = SolveStatus::TimeLimit;
            break;
        }
    }
    AdmmRun {
        z,
        objective,
        bound,
        dual: None,
        status,
        iterations,
        trace,
    }
}

/// Minimizes the 2,1-norm of `H = G + V₂ Z U₁ᵀ`.
pub fn solve_p21(problem: &ReducedProblem, cfg: &SolverConfig) -> Result<Solution> {
    check_kind(problem, ProblemKind::P21)?;
    cfg.validate()?;
    let start = Instant::now();
    let f = problem.factors();
    let run = p21_run(f, cfg, cfg.deadline(start));
    let objective = dense_l21(&crate::formulations::stacked_rows(f, &run.z));
    Ok(finish(
        f,
        run.z,
        objective,
        run.status,
        run.iterations,
        run.bound.is_finite().then_some(run.bound),
        run.trace,
        start,
    ))
}

/// `V₂ Z U₁ᵀ`.
fn lift(v2: &DMatrix<f64>, z: &DMatrix<f64>, u1: &DMatrix<f64>) -> DMatrix<f64> {
    (v2 * z) * u1.transpose()
}

/// `V₂ᵀ W U₁`.
fn restrict(v2: &DMatrix<f64>, w: &DMatrix<f64>, u1: &DMatrix<f64>) -> DMatrix<f64> {
    v2.tr_mul(&(w * u1))
}

/// ADMM on `min ‖X‖₁ s.t. X = G + V₂ Z U₁ᵀ`.
pub(crate) fn l1_run(
    f: &SvdFactors,
    cfg: &SolverConfig,
    max_iters: usize,
    deadline: Option<Instant>,
) -> AdmmRun {
    let g = f.g();
    let (v2, u1) = (f.v2(), f.u1());
    let (r, k) = (f.rank(), f.n() - f.rank());
    if k == 0 {
        let obj = dense_l1(g);
        return AdmmRun {
            z: DMatrix::zeros(0, r),
            objective: obj,
            bound: obj,
            dual: None,
            status: SolveStatus::Optimal,
            iterations: 0,
            trace: Vec::new(),
        };
    }

    let rho = cfg.rho / mean_abs(g);
    let mut z = DMatrix::zeros(k, r);
    let mut p = DMatrix::zeros(g.nrows(), g.ncols());
    let mut u = DMatrix::zeros(g.nrows(), g.ncols());
    let mut bound = f64::NEG_INFINITY;
    let mut dual = None;
    let mut objective = dense_l1(g);
    let mut trace = Vec::new();
    let mut status = SolveStatus::IterLimit;
    let mut iterations = 0;

    for it in 1..=max_iters {
        iterations = it;
        let mut x = g + &p - &u;
        soft_threshold(&mut x, 1.0 / rho);
        let z_new = restrict(v2, &(&x + &u - g), u1);
        let p_new = lift(v2, &z_new, u1);
        let resid = &x - g - &p_new;
        let dz = (&z_new - &z).norm_squared();
        let du = resid.norm_squared();
        u += &resid;
        z = z_new;
        p = p_new;

        let last = it == max_iters;
        let check = it % cfg.check_every == 0 || last;
        if check || cfg.trace {
            objective = dense_l1(&(g + &p));
        }
        if check {
            let mut lam = &u * -rho;
            let t = restrict(v2, &lam, u1);
            lam -= lift(v2, &t, u1);
            let scale = lam.amax().max(1.0);
            lam /= scale;
            let lb = lam.dot(g);
            if lb > bound {
                bound = lb;
                dual = Some(lam);
            }
        }
        if cfg.trace {
            trace.push(record("admm", it, objective, du.sqrt(), bound, (rho * (dz + du)).sqrt()));
        }
        if check && converged(objective, bound, cfg.solver_tol) {
            status = SolveStatus::Optimal;
            break;
        }
        if it % 16 == 0 && expired(deadline) {
            objective = dense_l1(&(g + &p));
            status = SolveStatus::TimeLimit;
            break;
        }
    }
    AdmmRun {
        z,
        objective,
        bound,
        dual,
        status,
        iterations,
        trace,
    }
}

/// Minimizes the 1-norm of `H` subject to the 2,1 budget.
///
/// The iterates of ADMM are only asymptotically feasible, so every
/// candidate is pulled back along the segment toward the `P21` solution
/// until it fits the budget; the best feasible point seen is returned.
pub fn solve_p21_l1(problem: &ReducedProblem, cfg: &SolverConfig) -> Result<Solution> {
    check_kind(problem, ProblemKind::P21L1)?;
    cfg.validate()?;
    let start = Instant::now();
    let deadline = cfg.deadline(start);
    let f = problem.factors();
    let beta = problem.budget().expect("P21_L1 carries a budget");
    let (r, k) = (f.rank(), f.n() - f.rank());

    let b = f.v1_dinv();
    let g = f.g();
    let q = f.v2();
    let u1 = f.u1();
    let l21_of = |z: &DMatrix<f64>| dense_l21(&(&b + q * z));
    let l1_of = |z: &DMatrix<f64>| dense_l1(&assemble_h(f, z));

    let anchor = p21_run(f, cfg, deadline);
    let mut iterations = anchor.iterations;
    if anchor.bound > beta {
        let obj = l1_of(&anchor.z);
        return Ok(finish(f, anchor.z, obj, SolveStatus::Infeasible, iterations, None, Vec::new(), start));
    }
    let anchor_ok = l21_of(&anchor.z) <= beta;
    if k == 0 {
        let status = if anchor_ok {
            SolveStatus::Optimal
        } else {
            SolveStatus::Infeasible
        };
        let obj = l1_of(&anchor.z);
        return Ok(finish(f, anchor.z, obj, status, iterations, Some(obj), Vec::new(), start));
    }

    // Pulls z toward the anchor until it satisfies the budget.
    let repair = |z: &DMatrix<f64>| -> Option<DMatrix<f64>> {
        if l21_of(z) <= beta {
            return Some(z.clone());
        }
        if !anchor_ok {
            return None;
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..50 {
            let mid = 0.5 * (lo + hi);
            let zt = z * (1.0 - mid) + &anchor.z * mid;
            if l21_of(&zt) <= beta {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Some(z * (1.0 - hi) + &anchor.z * hi)
    };

    let mut best: Option<(f64, DMatrix<f64>)> = anchor_ok.then(|| (l1_of(&anchor.z), anchor.z.clone()));
    let mut bound = f64::NEG_INFINITY;
    let rho = cfg.rho / mean_abs(g);
    let mut z = anchor.z.clone();
    let mut uh = DMatrix::zeros(g.nrows(), g.ncols());
    let mut ux = DMatrix::zeros(f.n(), r);
    let mut y = &b + q * &z;
    let mut trace = Vec::new();
    let mut status = SolveStatus::IterLimit;

    for it in 1..=cfg.max_iters {
        iterations += 1;
        let hz = &y * u1.transpose();
        let mut ht = &hz - &uh;
        soft_threshold(&mut ht, 1.0 / rho);
        let mut xt = &y - &ux;
        project_l21_ball(&mut xt, beta);

        let avg = ((&ht + &uh) * u1 + &xt + &ux) * 0.5 - &b;
        let z_new = q.tr_mul(&avg);
        let y_new = &b + q * &z_new;
        let h_new = &y_new * u1.transpose();
        let rh = &ht - &h_new;
        let rx = &xt - &y_new;
        let dz = (&z_new - &z).norm_squared();
        let du = rh.norm_squared() + rx.norm_squared();
        uh += &rh;
        ux += &rx;
        z = z_new;
        y = y_new;

        let last = it == cfg.max_iters;
        let check = it % cfg.check_every == 0 || last;
        if check {
            if let Some(zc) = repair(&z) {
                let obj = l1_of(&zc);
                if best.as_ref().is_none_or(|(bo, _)| obj < *bo) {
                    best = Some((obj, zc));
                }
            }
            // Weak duality: for |Λh| ≤ 1, rows of Λx ≤ μ and
            // Vᵀ-orthogonality Qᵀ(Λh U₁ + Λx) = 0, the optimum is at least
            // ⟨Λh U₁ + Λx, B⟩ − μβ.
            let lam_h = (&uh * -rho).map(|v| v.clamp(-1.0, 1.0));
            let ph = &lam_h * u1;
            let mut lam_x = &ux * -rho;
            let s = &ph + &lam_x;
            lam_x -= q * q.tr_mul(&s);
            let mu = max_row_norm(&lam_x);
            let lb = (&ph + &lam_x).dot(&b) - mu * beta;
            bound = bound.max(lb);
        }
        if cfg.trace {
            let objective = best.as_ref().map_or(f64::NAN, |(o, _)| *o);
            trace.push(record("admm", iterations, objective, du.sqrt(), bound, (rho * (dz + du)).sqrt()));
        }
        if check {
            if let Some((obj, _)) = &best {
                if converged(*obj, bound, cfg.solver_tol) {
                    status = SolveStatus::Optimal;
                    break;
                }
            }
        }
        if it % 16 == 0 && expired(deadline) {
            status = SolveStatus::TimeLimit;
            break;
        }
    }

    let lower_bound = bound.is_finite().then_some(bound);
    Ok(match best {
        Some((obj, zb)) => finish(f, zb, obj, status, iterations, lower_bound, trace, start),
        None => {
            let obj = l1_of(&z);
            finish(f, z, obj, status, iterations, lower_bound, trace, start)
        }
    })
}
