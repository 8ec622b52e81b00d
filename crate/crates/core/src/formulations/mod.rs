//! The reduced optimization problems over the free block `Z` of
//! `Γ = [[D⁻¹, 0], [Z, 0]]`, their objectives, and an LP export.
//!
//! Every inverse of the form `H = G + V₂ Z U₁ᵀ` satisfies P1, P2 and P3, so
//! the three problems differ only in their objective:
//!
//! * `P21`: minimize the 2,1-norm of `H`,
//! * `P21L1`: minimize the 1-norm of `H` among inverses whose 2,1-norm stays
//!   within a budget (normally the `P21` optimum),
//! * `P123`: minimize the 1-norm of `H`.

mod mps;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{GinvError, Result};
use crate::matcore::{dense_l1, dense_l21, DenseMatrix, SvdFactors};
use crate::structure::{assemble_h, check_z};

pub use mps::{read_mps, write_mps, MpsModel, RowSense};

/// Relative enlargement of the 2,1 budget, `β = z_budget · (1 + δ)`.
pub const BUDGET_SLACK: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProblemKind {
    #[serde(rename = "P21")]
    P21,
    #[serde(rename = "P21_L1")]
    P21L1,
    #[serde(rename = "P123")]
    P123,
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProblemKind::P21 => "P21",
            ProblemKind::P21L1 => "P21_L1",
            ProblemKind::P123 => "P123",
        })
    }
}

impl FromStr for ProblemKind {
    type Err = GinvError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "").as_str() {
            "p21" => Ok(ProblemKind::P21),
            "p21l1" => Ok(ProblemKind::P21L1),
            "p123" => Ok(ProblemKind::P123),
            _ => Err(GinvError::Config(format!("unknown problem kind '{s}'"))),
        }
    }
}

/// A reduced problem bound to the SVD of its matrix.
#[derive(Clone, Debug)]
pub struct ReducedProblem<'a> {
    kind: ProblemKind,
    factors: &'a SvdFactors,
    z_budget: Option<f64>,
}

impl<'a> ReducedProblem<'a> {
    pub fn kind(&self) -> ProblemKind {
        self.kind
    }

    pub fn factors(&self) -> &'a SvdFactors {
        self.factors
    }

    /// The 2,1 budget as supplied (before the `1 + δ` enlargement).
    pub fn z_budget(&self) -> Option<f64> {
        self.z_budget
    }

    /// The enforced budget `z_budget · (1 + δ)`.
    pub fn budget(&self) -> Option<f64> {
        self.z_budget.map(|b| b * (1.0 + BUDGET_SLACK))
    }

    /// Shape `(n − r, r)` of the variable block.
    pub fn dims(&self) -> (usize, usize) {
        (self.factors.n() - self.factors.rank(), self.factors.rank())
    }

    pub fn num_vars(&self) -> usize {
        let (p, q) = self.dims();
        p * q
    }

    pub fn objective(&self, z: &DenseMatrix) -> Result<f64> {
        match self.kind {
            ProblemKind::P21 => objective_p21(self.factors, z),
            ProblemKind::P21L1 | ProblemKind::P123 => objective_p1(self.factors, z),
        }
    }

    /// Amount by which `z` exceeds the enforced 2,1 budget (0 if feasible
    /// or unconstrained).
    pub fn violation(&self, z: &DenseMatrix) -> Result<f64> {
        match self.budget() {
            Some(beta) => Ok((objective_p21(self.factors, z)? - beta).max(0.0)),
            None => {
                check_z(self.factors, z.as_matrix())?;
                Ok(0.0)
            }
        }
    }
}

pub fn build<'a>(
    kind: ProblemKind,
    factors: &'a SvdFactors,
    z_budget: Option<f64>,
) -> Result<ReducedProblem<'a>> {
    match (kind, z_budget) {
        (ProblemKind::P21L1, None) => Err(GinvError::Config(
            "P21_L1 needs a 2,1 budget (normally the P21 optimum)".into(),
        )),
        (ProblemKind::P21L1, Some(b)) if !(b > 0.0 && b.is_finite()) => Err(GinvError::Config(
            format!("2,1 budget must be positive and finite, got {b}"),
        )),
        (ProblemKind::P21 | ProblemKind::P123, Some(_)) => Err(GinvError::Config(format!(
            "{kind} takes no 2,1 budget"
        ))),
        _ => Ok(ReducedProblem {
            kind,
            factors,
            z_budget,
        }),
    }
}

/// `Σᵢ ‖eᵢᵀ V [D⁻¹; Z]‖₂`, equal to the 2,1-norm of `G + V₂ Z U₁ᵀ`.
pub fn objective_p21(f: &SvdFactors, z: &DenseMatrix) -> Result<f64> {
    check_z(f, z.as_matrix())?;
    Ok(dense_l21(&stacked_rows(f, z.as_matrix())))
}

/// `‖G + V₂ Z U₁ᵀ‖₁`.
pub fn objective_p1(f: &SvdFactors, z: &DenseMatrix) -> Result<f64> {
    check_z(f, z.as_matrix())?;
    Ok(dense_l1(&assemble_h(f, z.as_matrix())))
}

/// `V [D⁻¹; Z] = V₁ D⁻¹ + V₂ Z` (`n x r`).
pub(crate) fn stacked_rows(f: &SvdFactors, z: &DMatrix<f64>) -> DMatrix<f64> {
    let mut x = f.v1_dinv();
    if z.nrows() > 0 {
        x += f.v2() * z;
    }
    x
}

/// Writes the 1-norm LP of the reduced problem in MPS format.
///
/// Variables are `F` (`n x m`, nonnegative) and `Z` (free); rows are
/// `F − V₂ Z U₁ᵀ ≥ G` and `F + V₂ Z U₁ᵀ ≥ −G`, and the objective is `Σ F`.
pub fn export_lp(f: &SvdFactors, path: impl AsRef<Path>) -> Result<()> {
    let model = MpsModel::reduced_l1(f);
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    write_mps(&mut w, &model)?;
    std::io::Write::flush(&mut w)?;
    Ok(())
}

/// Outcome of a solve.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    IterLimit,
    Infeasible,
    TimeLimit,
}

impl SolveStatus {
    pub fn is_optimal(self) -> bool {
        self == SolveStatus::Optimal
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveStatus::Optimal => "Optimal",
            SolveStatus::IterLimit => "IterLimit",
            SolveStatus::Infeasible => "Infeasible",
            SolveStatus::TimeLimit => "TimeLimit",
        })
    }
}

/// One row of a solver trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub stage: String,
    pub iteration: usize,
    pub objective: f64,
    /// Primal residual for splitting stages; largest eligible reduced cost
    /// for simplex stages.
    pub residual: f64,
    /// Certified lower bound on the optimum, when one is available.
    pub bound: f64,
    /// Fixed-point residual `√(ρ(‖ΔZ‖² + ‖ΔU‖²))` of splitting stages;
    /// nonincreasing across iterations.
    pub merit: f64,
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub z: DenseMatrix,
    pub objective: f64,
    pub h: DenseMatrix,
    pub status: SolveStatus,
    pub iterations: usize,
    /// Wall-clock seconds spent inside the solver.
    pub solve_time: f64,
    /// Best certified lower bound on the optimal value, if any.
    pub lower_bound: Option<f64>,
    pub trace: Vec<TraceRecord>,
}

impl Solution {
    /// Relative gap `(objective − lower_bound) / (1 + |objective|)`.
    pub fn relative_gap(&self) -> Option<f64> {
        self.lower_bound
            .map(|lb| ((self.objective - lb) / (1.0 + self.objective.abs())).max(0.0))
    }
}
