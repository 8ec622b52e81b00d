//! Solving a parsed MPS model through its dual.
//!
//! Supported models: minimize `cᵀx` over rows of any sense, where every
//! column is either nonnegative (with `c_j ≥ 0`) or free (with `c_j = 0`).
//! For this class `y = 0` is dual feasible, so the bounded simplex can start
//! on the dual `max bᵀy s.t. Aᵀy + s = c` right away. The exported 1-norm
//! LP is of this kind.

use nalgebra::DMatrix;

use super::simplex::{maximize, SimplexOptions, SimplexStatus};
use crate::error::{GinvError, Result};
use crate::formulations::{MpsModel, RowSense, SolveStatus};

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: SolveStatus,
    pub objective: f64,
    pub x: Vec<f64>,
    /// Value of the dual objective at the final dual point.
    pub dual_objective: f64,
}

pub fn solve_mps(model: &MpsModel, max_pivots: usize) -> Result<LpSolution> {
    let nrows = model.rows.len();
    let ncols = model.columns.len();
    let mut slack_of = Vec::with_capacity(ncols);
    let mut nslack = 0;
    for col in &model.columns {
        let free = col.lower == f64::NEG_INFINITY && col.upper == f64::INFINITY;
        let nonneg = col.lower == 0.0 && col.upper == f64::INFINITY;
        if nonneg && col.cost >= 0.0 {
            slack_of.push(Some(nrows + nslack));
            nslack += 1;
        } else if free && col.cost == 0.0 {
            slack_of.push(None);
        } else {
            return Err(GinvError::Config(format!(
                "column '{}' is outside the supported class (bounds [{}, {}], cost {})",
                col.name, col.lower, col.upper, col.cost
            )));
        }
    }

    // Dual rows are primal columns; dual columns are y (one per primal row)
    // then the slacks of the nonnegative columns.
    let mut a = DMatrix::zeros(ncols, nrows + nslack);
    for (j, col) in model.columns.iter().enumerate() {
        for &(i, v) in &col.entries {
            a[(j, i)] += v;
        }
        if let Some(s) = slack_of[j] {
            a[(j, s)] = 1.0;
        }
    }
    let mut cost: Vec<f64> = model.rows.iter().map(|r| r.rhs).collect();
    cost.extend(std::iter::repeat_n(0.0, nslack));
    let mut lower = Vec::with_capacity(nrows + nslack);
    let mut upper = Vec::with_capacity(nrows + nslack);
    for row in &model.rows {
        let (l, u) = match row.sense {
            RowSense::Ge => (0.0, f64::INFINITY),
            RowSense::Le => (f64::NEG_INFINITY, 0.0),
            RowSense::Eq => (f64::NEG_INFINITY, f64::INFINITY),
        };
        lower.push(l);
        upper.push(u);
    }
    lower.extend(std::iter::repeat_n(0.0, nslack));
    upper.extend(std::iter::repeat_n(f64::INFINITY, nslack));

    let mut x0 = vec![0.0; nrows];
    for (j, col) in model.columns.iter().enumerate() {
        if slack_of[j].is_some() {
            x0.push(col.cost);
        }
    }
    let priority: Vec<usize> = (nrows..nrows + nslack).chain(0..nrows).collect();
    let opts = SimplexOptions {
        max_iters: max_pivots,
        ..SimplexOptions::default()
    };
    let res = maximize(&a, &cost, &lower, &upper, &x0, &priority, &opts);
    let status = match res.status {
        SimplexStatus::Optimal => SolveStatus::Optimal,
        SimplexStatus::IterLimit => SolveStatus::IterLimit,
        SimplexStatus::TimeLimit => SolveStatus::TimeLimit,
        SimplexStatus::Unbounded => SolveStatus::Infeasible,
        SimplexStatus::Singular => {
            return Err(GinvError::Verification("singular basis in LP solve".into()))
        }
    };
    let x: Vec<f64> = res.y.iter().copied().collect();
    let objective = model.columns.iter().zip(&x).map(|(c, v)| c.cost * v).sum();
    let dual_objective = cost.iter().zip(&res.x).map(|(c, v)| c * v).sum();
    Ok(LpSolution {
        status,
        objective,
        x,
        dual_objective,
    })
}
