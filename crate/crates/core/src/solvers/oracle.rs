//! Brute-force minimization for variable blocks with at most two entries.
//!
//! A uniform grid over a box is followed by repeated zooming around the best
//! grid point. All three objectives are convex, so the zoom keeps the
//! minimizer inside the search window. For the budgeted problem, points
//! over budget count as infinitely bad; while none is feasible the search
//! zooms toward the smallest 2,1-norm instead.

use nalgebra::DMatrix;

use crate::error::{GinvError, Result};
use crate::formulations::{objective_p21, ReducedProblem};
use crate::matcore::DenseMatrix;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleGrid {
    /// The first grid covers `[−half_width, half_width]` per coordinate.
    pub half_width: f64,
    /// Points per coordinate in the first grid.
    pub points: usize,
    /// Points per coordinate in each zoomed grid.
    pub zoom_points: usize,
    pub rounds: usize,
}

impl Default for OracleGrid {
    fn default() -> Self {
        OracleGrid {
            half_width: 10.0,
            points: 401,
            zoom_points: 21,
            rounds: 40,
        }
    }
}

/// Ranks a point: feasible points by objective, infeasible ones after all
/// feasible ones by their 2,1-norm.
fn score(problem: &ReducedProblem, z: &DenseMatrix) -> Result<(bool, f64)> {
    match problem.budget() {
        Some(beta) => {
            let l21 = objective_p21(problem.factors(), z)?;
            if l21 <= beta {
                Ok((true, problem.objective(z)?))
            } else {
                Ok((false, l21))
            }
        }
        None => Ok((true, problem.objective(z)?)),
    }
}

fn better(a: (bool, f64), b: (bool, f64)) -> bool {
    match (a.0, b.0) {
        (true, false) => true,
        (false, true) => false,
        _ => a.1 < b.1,
    }
}

/// Grid-search minimum of the problem's objective.
pub fn oracle_small(problem: &ReducedProblem, grid: &OracleGrid) -> Result<f64> {
    let (rows, cols) = problem.dims();
    let dim = rows * cols;
    if dim > 2 {
        return Err(GinvError::dim(format!(
            "oracle handles at most 2 variables, problem has {dim}"
        )));
    }
    if grid.points < 3 || grid.zoom_points < 3 {
        return Err(GinvError::Config("oracle grids need at least 3 points".into()));
    }
    let to_z = |p: &[f64]| DenseMatrix::wrap(DMatrix::from_row_slice(rows, cols, p));
    if dim == 0 {
        let (ok, v) = score(problem, &to_z(&[]))?;
        return Ok(if ok { v } else { f64::INFINITY });
    }

    let mut center = vec![0.0; dim];
    let mut radius = grid.half_width;
    let mut points = grid.points;
    let mut best = score(problem, &to_z(&center))?;
    for _ in 0..=grid.rounds {
        let step = 2.0 * radius / (points - 1) as f64;
        let mut best_pt = center.clone();
        let axis = |c: f64, k: usize| c - radius + step * k as f64;
        let second = if dim == 2 { points } else { 1 };
        for i in 0..points {
            for j in 0..second {
                let mut p = vec![axis(center[0], i)];
                if dim == 2 {
                    p.push(axis(center[1], j));
                }
                let s = score(problem, &to_z(&p))?;
                if better(s, best) {
                    best = s;
                    best_pt = p;
                }
            }
        }
        center = best_pt;
        radius = 2.0 * step;
        points = grid.zoom_points;
    }
    Ok(if best.0 { best.1 } else { f64::INFINITY })
}
