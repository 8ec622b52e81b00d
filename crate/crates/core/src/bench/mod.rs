//! Random instances, the method-by-instance experiment grid and its
//! reports.

use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GinvError, Result};
use crate::formulations::{self, ProblemKind, Solution, SolveStatus, TraceRecord};
use crate::localsearch::{build_ah_symmetric, local_search, LsConfig};
use crate::matcore::{
    mp_pseudoinverse, norm_0, norm_1, norm_21, nonzero_rows, property_residuals, svd, svd_with_rank, DenseMatrix,
    ToleranceConfig,
};
use crate::solvers::{solve_p123, solve_p123_full, solve_p21, solve_p21_l1, SolverConfig};

/// Reseeds tried by [`generate`] before giving up.
pub const MAX_ATTEMPTS: u64 = 10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub m: usize,
    pub n: usize,
    pub r: usize,
    /// Fraction of nonzero entries in each random factor.
    pub density: f64,
    pub seed: u64,
}

impl InstanceSpec {
    pub fn new(m: usize, n: usize, r: usize, seed: u64) -> Self {
        InstanceSpec {
            m,
            n,
            r,
            density: 1.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 || self.r == 0 || self.r > self.m.min(self.n) {
            return Err(GinvError::Config(format!(
                "need 1 <= r <= min(m, n), got (m, n, r) = ({}, {}, {})",
                self.m, self.n, self.r
            )));
        }
        if !(self.density > 0.0 && self.density <= 1.0) {
            return Err(GinvError::Config(format!(
                "density must lie in (0, 1], got {}",
                self.density
            )));
        }
        Ok(())
    }

    /// Short label, e.g. `40x20x10-s1`.
    pub fn label(&self) -> String {
        format!("{}x{}x{}-s{}", self.m, self.n, self.r, self.seed)
    }
}

/// Parses `MxNxR`.
impl FromStr for InstanceSpec {
    type Err = GinvError;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split('x').collect();
        let nums: Option<Vec<usize>> = parts.iter().map(|p| p.parse().ok()).collect();
        match nums.as_deref() {
            Some(&[m, n, r]) => Ok(InstanceSpec::new(m, n, r, 0)),
            _ => Err(GinvError::Config(format!("size '{s}' is not of the form MxNxR"))),
        }
    }
}

fn sprand(rows: usize, cols: usize, density: f64, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            if rng.gen::<f64>() < density {
                out[(i, j)] = rng.gen::<f64>();
            }
        }
    }
    out
}

/// `A = B C` with sparse uniform `B` (`m x r`) and `C` (`r x n`).
///
/// If the product does not have numerical rank `r`, the seed is
/// incremented and the draw repeated, at most [`MAX_ATTEMPTS`] times.
pub fn generate(spec: &InstanceSpec) -> Result<DenseMatrix> {
    spec.validate()?;
    let tol = ToleranceConfig::default();
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed.wrapping_add(attempt));
        let b = sprand(spec.m, spec.r, spec.density, &mut rng);
        let c = sprand(spec.r, spec.n, spec.density, &mut rng);
        let a = DenseMatrix::from_nalgebra(b * c)?;
        if a.is_zero() {
            continue;
        }
        if svd(&a, &tol)?.rank() == spec.r {
            return Ok(a);
        }
    }
    Err(GinvError::Rank(format!(
        "no rank-{} instance after {MAX_ATTEMPTS} seeds starting at {}",
        spec.r, spec.seed
    )))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "P21")]
    P21,
    #[serde(rename = "P21_L1")]
    P21L1,
    #[serde(rename = "P123")]
    P123,
    #[serde(rename = "P123_FULL")]
    P123Full,
    #[serde(rename = "LS")]
    Ls,
    #[serde(rename = "MP")]
    Mp,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::P21,
        Method::P21L1,
        Method::P123,
        Method::P123Full,
        Method::Ls,
        Method::Mp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::P21 => "P21",
            Method::P21L1 => "P21_L1",
            Method::P123 => "P123",
            Method::P123Full => "P123_FULL",
            Method::Ls => "LS",
            Method::Mp => "MP",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = GinvError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "").as_str() {
            "p21" => Ok(Method::P21),
            "p21l1" => Ok(Method::P21L1),
            "p123" => Ok(Method::P123),
            "p123full" => Ok(Method::P123Full),
            "ls" => Ok(Method::Ls),
            "mp" => Ok(Method::Mp),
            _ => Err(GinvError::Config(format!("unknown method '{s}'"))),
        }
    }
}

/// Outcome of one cell. `SizeCap` marks an instance too large for the
/// unreduced LP; such cells carry no matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellStatus {
    Optimal,
    IterLimit,
    Infeasible,
    TimeLimit,
    SizeCap,
}

impl From<SolveStatus> for CellStatus {
    fn from(s: SolveStatus) -> Self {
        match s {
            SolveStatus::Optimal => CellStatus::Optimal,
            SolveStatus::IterLimit => CellStatus::IterLimit,
            SolveStatus::Infeasible => CellStatus::Infeasible,
            SolveStatus::TimeLimit => CellStatus::TimeLimit,
        }
    }
}

impl fmt::Display for CellStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CellStatus::Optimal => "Optimal",
            CellStatus::IterLimit => "IterLimit",
            CellStatus::Infeasible => "Infeasible",
            CellStatus::TimeLimit => "TimeLimit",
            CellStatus::SizeCap => "SizeCap",
        })
    }
}

/// Metrics of one (instance, method) cell. Serialized keys follow the
/// field order; the two timing fields come last.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InverseReport {
    pub instance: String,
    pub m: usize,
    pub n: usize,
    pub r: usize,
    pub method: Method,
    pub status: CellStatus,
    pub nzr: Option<usize>,
    pub norm0: Option<usize>,
    pub norm1: Option<f64>,
    pub norm21: Option<f64>,
    pub rp1: Option<f64>,
    pub rp2: Option<f64>,
    pub rp3: Option<f64>,
    pub rp4: Option<f64>,
    /// Seconds inside the solver proper.
    pub time_s: f64,
    /// Seconds including the SVD, model setup and assembly of `H`.
    pub total_s: f64,
}

impl InverseReport {
    /// Fills the metrics from `h`.
    pub fn measure(
        instance: &str,
        a: &DenseMatrix,
        rank: usize,
        method: Method,
        h: &DenseMatrix,
        status: CellStatus,
        zero_tol: f64,
    ) -> Result<Self> {
        let res = property_residuals(a, h)?;
        Ok(InverseReport {
            instance: instance.to_string(),
            m: a.rows(),
            n: a.cols(),
            r: rank,
            method,
            status,
            nzr: Some(nonzero_rows(h, zero_tol)),
            norm0: Some(norm_0(h, zero_tol)),
            norm1: Some(norm_1(h)),
            norm21: Some(norm_21(h)),
            rp1: Some(res.p1),
            rp2: Some(res.p2),
            rp3: Some(res.p3),
            rp4: Some(res.p4),
            time_s: 0.0,
            total_s: 0.0,
        })
    }

    fn empty(instance: &str, a: &DenseMatrix, rank: usize, method: Method, status: CellStatus) -> Self {
        InverseReport {
            instance: instance.to_string(),
            m: a.rows(),
            n: a.cols(),
            r: rank,
            method,
            status,
            nzr: None,
            norm0: None,
            norm1: None,
            norm21: None,
            rp1: None,
            rp2: None,
            rp3: None,
            rp4: None,
            time_s: 0.0,
            total_s: 0.0,
        }
    }

    pub fn to_json_line(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json_line(line: &str) -> Result<Self> {
        Ok(serde_json::from_str(line)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BenchConfig {
    pub tol: ToleranceConfig,
    pub solver: SolverConfig,
    pub ls: LsConfig,
    /// Wall-clock cap per solve, in seconds.
    pub time_cap: f64,
    /// Rank to assume instead of the numerical rank.
    pub rank: Option<usize>,
    /// Worker threads; `None` reads `GINV_THREADS`, else uses all cores.
    pub threads: Option<usize>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            tol: ToleranceConfig::default(),
            solver: SolverConfig::default(),
            ls: LsConfig::default(),
            time_cap: 300.0,
            rank: None,
            threads: None,
        }
    }
}

impl BenchConfig {
    fn worker_count(&self, cells: usize) -> usize {
        let env = std::env::var("GINV_THREADS")
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&t| t > 0);
        let cap = self
            .threads
            .or(env)
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
        cap.clamp(1, cells.max(1))
    }
}

/// A solved cell: the report and, when one was produced, the inverse.
#[derive(Clone, Debug)]
pub struct CellResult {
    pub report: InverseReport,
    pub h: Option<DenseMatrix>,
    /// Solver trace, filled when `cfg.solver.trace` is set.
    pub trace: Vec<TraceRecord>,
}

/// Runs one method on one matrix.
pub fn run_method(
    instance: &str,
    a: &DenseMatrix,
    method: Method,
    cfg: &BenchConfig,
) -> Result<CellResult> {
    let total = Instant::now();
    let solver = SolverConfig {
        time_limit: Some(cfg.solver.time_limit.map_or(cfg.time_cap, |t| t.min(cfg.time_cap))),
        ..cfg.solver
    };
    let factors = match cfg.rank {
        Some(r) => svd_with_rank(a, r)?,
        None => svd(a, &cfg.tol)?,
    };
    let rank = factors.rank();
    let reduced = |kind: ProblemKind, budget: Option<f64>| -> Result<Solution> {
        let problem = formulations::build(kind, &factors, budget)?;
        match kind {
            ProblemKind::P21 => solve_p21(&problem, &solver),
            ProblemKind::P21L1 => solve_p21_l1(&problem, &solver),
            ProblemKind::P123 => solve_p123(&problem, &solver),
        }
    };

    let mut trace = Vec::new();
    let mut from_solution = |sol: Solution| {
        trace = sol.trace;
        (sol.h, CellStatus::from(sol.status), sol.solve_time)
    };
    let (h, status, solve_time) = match method {
        Method::P21 => from_solution(reduced(ProblemKind::P21, None)?),
        Method::P123 => from_solution(reduced(ProblemKind::P123, None)?),
        Method::P21L1 => {
            let anchor = reduced(ProblemKind::P21, None)?;
            from_solution(reduced(ProblemKind::P21L1, Some(anchor.objective))?)
        }
        Method::P123Full => match solve_p123_full(a, &solver) {
            Ok(sol) => from_solution(sol),
            Err(GinvError::SizeCap { .. }) => {
                let mut report = InverseReport::empty(instance, a, rank, method, CellStatus::SizeCap);
                report.total_s = total.elapsed().as_secs_f64();
                return Ok(CellResult {
                    report,
                    h: None,
                    trace: Vec::new(),
                });
            }
            Err(e) => return Err(e),
        },
        Method::Ls => {
            let ls_cfg = LsConfig {
                rank: Some(rank),
                ..cfg.ls
            };
            let start = Instant::now();
            let out = local_search(a, &ls_cfg)?;
            let h = build_ah_symmetric(a, out.state.t())?;
            (h, out.status.into(), start.elapsed().as_secs_f64())
        }
        Method::Mp => {
            let start = Instant::now();
            let h = mp_pseudoinverse(&factors);
            (h, CellStatus::Optimal, start.elapsed().as_secs_f64())
        }
    };
    let mut report = InverseReport::measure(instance, a, rank, method, &h, status, cfg.tol.zero_tol)?;
    report.time_s = solve_time;
    report.total_s = total.elapsed().as_secs_f64();
    Ok(CellResult {
        report,
        h: Some(h),
        trace,
    })
}

/// Generates every instance and runs every method on it, in parallel
/// across cells. Reports come back in spec order, then method order.
pub fn run_suite(
    specs: &[InstanceSpec],
    methods: &[Method],
    cfg: &BenchConfig,
) -> Result<Vec<InverseReport>> {
    let instances = specs.iter().map(generate).collect::<Result<Vec<_>>>()?;
    let cells: Vec<(usize, Method)> = (0..specs.len())
        .flat_map(|i| methods.iter().map(move |&m| (i, m)))
        .collect();
    let slots: Vec<Mutex<Option<Result<InverseReport>>>> =
        cells.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..cfg.worker_count(cells.len()) {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(i, method)) = cells.get(idx) else {
                    break;
                };
                let out = run_method(&specs[i].label(), &instances[i], method, cfg)
                    .map(|c| c.report);
                *slots[idx].lock().expect("poisoned result slot") = Some(out);
            });
        }
    });
    slots
        .into_iter()
        .map(|s| s.into_inner().expect("poisoned result slot").expect("cell not run"))
        .collect()
}

fn fmt_opt<T: fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(|| "*".to_string(), |x| x.to_string())
}

fn fmt_real(v: Option<f64>) -> String {
    v.map_or_else(|| "*".to_string(), |x| format!("{x:.3}"))
}

/// Plain-text table with one row per report.
pub fn render_table(reports: &[InverseReport]) -> String {
    let header = [
        "instance", "method", "NZR", "||H||_0", "||H||_1", "||H||_2,1", "time_s", "total_s",
        "status",
    ];
    let rows: Vec<[String; 9]> = reports
        .iter()
        .map(|r| {
            [
                r.instance.clone(),
                r.method.to_string(),
                fmt_opt(r.nzr),
                fmt_opt(r.norm0),
                fmt_real(r.norm1),
                fmt_real(r.norm21),
                format!("{:.2}", r.time_s),
                format!("{:.2}", r.total_s),
                r.status.to_string(),
            ]
        })
        .collect();
    let mut widths = header.map(str::len);
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cells: &[&str]| {
        for (i, (cell, w)) in cells.iter().zip(widths).enumerate() {
            if i < 2 {
                let _ = write!(out, "{cell:<w$}  ");
            } else {
                let _ = write!(out, "{cell:>w$}  ");
            }
        }
        out.truncate(out.trim_end().len());
        out.push('\n');
    };
    line(&mut out, &header);
    for row in &rows {
        let cells: Vec<&str> = row.iter().map(String::as_str).collect();
        line(&mut out, &cells);
    }
    out
}

/// LS-to-P123 1-norm ratio of one instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub instance: String,
    pub r: usize,
    pub ratio: f64,
    /// Whether the ratio is below the typical value 1.6.
    pub below_typical: bool,
}

/// Ratios `‖H_LS‖₁ / ‖H_P123‖₁` per instance, in first-seen order.
///
/// Fails if an instance has only one of the two methods, or if a ratio
/// exceeds the rank (the local-search guarantee).
pub fn ratio_study(reports: &[InverseReport]) -> Result<Vec<RatioRow>> {
    let mut order: Vec<&str> = Vec::new();
    for rep in reports {
        if (rep.method == Method::Ls || rep.method == Method::P123) && !order.contains(&rep.instance.as_str()) {
            order.push(&rep.instance);
        }
    }
    let find = |inst: &str, method: Method| {
        reports
            .iter()
            .find(|r| r.instance == inst && r.method == method)
            .and_then(|r| r.norm1.map(|v| (v, r.r)))
    };
    let mut rows = Vec::with_capacity(order.len());
    for inst in order {
        let (Some((ls, r)), Some((p123, _))) = (find(inst, Method::Ls), find(inst, Method::P123))
        else {
            return Err(GinvError::MissingPair(format!(
                "instance {inst} needs both LS and P123 reports with a 1-norm"
            )));
        };
        let ratio = ls / p123;
        if ratio > r as f64 * (1.0 + 1e-6) {
            return Err(GinvError::Verification(format!(
                "instance {inst}: LS/P123 ratio {ratio} exceeds r = {r}"
            )));
        }
        rows.push(RatioRow {
            instance: inst.to_string(),
            r,
            ratio,
            below_typical: ratio < 1.6,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests;
