//! Command-line front end.
//!
//! Exit codes: 0 success, 2 invalid input or flags, 3 a solver stopped
//! without certifying optimality (outputs are still written), 4 I/O.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::bench::{
    generate, ratio_study, render_table, run_method, run_suite, BenchConfig, CellStatus, InstanceSpec,
    InverseReport, Method,
};
use crate::error::{GinvError, Result};
use crate::formulations::export_lp;
use crate::localsearch::{build_ah_symmetric, local_search, LsConfig};
use crate::matcore::{
    property_residuals, read_matrix, svd, svd_with_rank, write_csv, write_matrix, DenseMatrix, SvdFactors,
    ToleranceConfig,
};
use crate::solvers::SolverConfig;

#[derive(Debug, Parser)]
#[command(name = "ginv", version, about = "Sparse generalized inverses of real matrices")]
pub struct Cli {
    #[command(flatten)]
    pub tol: TolArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct TolArgs {
    /// Entries with magnitude at or below this count as zero.
    #[arg(long, global = true, default_value_t = 1e-5)]
    pub zero_tol: f64,
    /// Relative singular-value cutoff [default: max(m, n) * eps].
    #[arg(long, global = true)]
    pub rank_tol: Option<f64>,
    /// Use this rank instead of the numerical rank.
    #[arg(long, global = true)]
    pub rank: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Relative duality-gap target.
    #[arg(long, default_value_t = 1e-8)]
    pub solver_tol: f64,
    /// Iteration cap for the splitting methods.
    #[arg(long, default_value_t = 20_000)]
    pub max_iters: usize,
    /// Wall-clock limit per solve, in seconds.
    #[arg(long)]
    pub time_limit: Option<f64>,
    /// Swap threshold of the local search.
    #[arg(long, default_value_t = 1.0 + 1e-10)]
    pub kappa: f64,
    /// Polynomial-time local search with this swap threshold (e.g. 1.01).
    #[arg(long, conflicts_with = "kappa")]
    pub poly_kappa: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a random instance `A = B C` of known rank.
    Gen {
        /// Size as MxNxR.
        #[arg(long)]
        size: InstanceSpec,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Fraction of nonzeros in each factor.
        #[arg(long, default_value_t = 1.0)]
        density: f64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Compute a generalized inverse.
    Solve {
        #[arg(long)]
        method: Method,
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Write the report as one JSON line.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Write the solver or swap trace as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[command(flatten)]
        solve: SolveArgs,
    },
    /// Penrose property residuals of an `(A, H)` pair.
    Check {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short = 'H', long = "inverse")]
        inverse: PathBuf,
        /// Residuals at or below this times `||A||_F` count as satisfied.
        #[arg(long, default_value_t = 1e-8)]
        residual_tol: f64,
    },
    /// Write the 1-norm LP of the reduced problem in MPS format.
    ExportLp {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Also write G, V2 and U1 as CSV files into this directory.
        #[arg(long)]
        dump_blocks: Option<PathBuf>,
    },
    /// Run methods over generated instances and print a table.
    Bench {
        /// Comma-separated sizes, each MxNxR.
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<InstanceSpec>,
        #[arg(long, value_delimiter = ',', default_values_t = Method::ALL)]
        methods: Vec<Method>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        density: f64,
        /// Wall-clock cap per cell, in seconds.
        #[arg(long, default_value_t = 300.0)]
        time_cap: f64,
        /// Worker threads [default: GINV_THREADS, else all cores].
        #[arg(long)]
        threads: Option<usize>,
        /// Write reports as JSON lines.
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        solve: SolveArgs,
    },
    /// LS-to-P123 1-norm ratios from a JSON-lines report file.
    Ratio {
        #[arg(short, long)]
        input: PathBuf,
    },
}

/// Parses `argv`, runs the command and maps the outcome to an exit code.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let stdout = io::stdout();
    match run(&cli, &mut stdout.lock()) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::NotConverged(status)) => {
            eprintln!("ginv: solver stopped with status {status}");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("ginv: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Done,
    NotConverged(CellStatus),
}

pub fn exit_code(e: &GinvError) -> u8 {
    match e {
        GinvError::Io(_) => 4,
        GinvError::Csv(e) if matches!(e.kind(), csv::ErrorKind::Io(_)) => 4,
        GinvError::Json(e) if e.is_io() => 4,
        GinvError::Verification(_) => 3,
        _ => 2,
    }
}

impl TolArgs {
    fn config(&self) -> Result<ToleranceConfig> {
        let tol = ToleranceConfig {
            zero_tol: self.zero_tol,
            rank_tol: self.rank_tol,
            ..ToleranceConfig::default()
        };
        tol.validate()?;
        if self.rank == Some(0) {
            return Err(GinvError::Config("rank must be positive".into()));
        }
        Ok(tol)
    }

    fn factors(&self, a: &DenseMatrix, tol: &ToleranceConfig) -> Result<SvdFactors> {
        match self.rank {
            Some(r) => svd_with_rank(a, r),
            None => svd(a, tol),
        }
    }
}

impl SolveArgs {
    fn configs(&self, tol: ToleranceConfig, rank: Option<usize>, trace: bool) -> Result<(SolverConfig, LsConfig)> {
        let solver = SolverConfig {
            solver_tol: self.solver_tol,
            max_iters: self.max_iters,
            time_limit: self.time_limit,
            trace,
            ..SolverConfig::default()
        };
        solver.validate()?;
        let ls = LsConfig {
            kappa: self.poly_kappa.unwrap_or(self.kappa),
            rank,
            tol,
            trace,
            ..LsConfig::default()
        };
        ls.validate()?;
        Ok((solver, ls))
    }
}

/// Runs a parsed command, writing human-readable output to `out`.
pub fn run(cli: &Cli, out: &mut impl Write) -> Result<Outcome> {
    let tol = cli.tol.config()?;
    match &cli.command {
        Command::Gen {
            size,
            seed,
            density,
            output,
        } => {
            let spec = InstanceSpec {
                seed: *seed,
                density: *density,
                ..*size
            };
            let a = generate(&spec)?;
            write_matrix(output, &a)?;
            writeln!(out, "wrote {} ({}x{}, rank {})", output.display(), spec.m, spec.n, spec.r)?;
            Ok(Outcome::Done)
        }
        Command::Solve {
            method,
            input,
            output,
            report,
            trace,
            solve,
        } => {
            let (solver, ls) = solve.configs(tol, cli.tol.rank, trace.is_some())?;
            let a = read_matrix(input)?;
            let instance = input.file_stem().map_or("A".into(), |s| s.to_string_lossy().into_owned());
            let (h, rep) = solve_one(&instance, &a, *method, &cli.tol, tol, solver, ls, trace.as_deref())?;
            if let Some(h) = &h {
                write_matrix(output, h)?;
            }
            if let Some(path) = report {
                let mut w = BufWriter::new(File::create(path)?);
                writeln!(w, "{}", rep.to_json_line()?)?;
                w.flush()?;
            }
            out.write_all(render_table(std::slice::from_ref(&rep)).as_bytes())?;
            Ok(outcome(&[rep]))
        }
        Command::Check {
            input,
            inverse,
            residual_tol,
        } => {
            if !(*residual_tol > 0.0 && residual_tol.is_finite()) {
                return Err(GinvError::Config(format!("residual_tol must be positive, got {residual_tol}")));
            }
            let a = read_matrix(input)?;
            let h = read_matrix(inverse)?;
            let res = property_residuals(&a, &h)?;
            let ok = res.satisfied(residual_tol * a.frobenius_norm());
            for (i, (v, sat)) in res.as_array().iter().zip(ok).enumerate() {
                writeln!(out, "P{}  {v:.3e}  {}", i + 1, if sat { "yes" } else { "no" })?;
            }
            Ok(Outcome::Done)
        }
        Command::ExportLp {
            input,
            output,
            dump_blocks,
        } => {
            let a = read_matrix(input)?;
            let f = cli.tol.factors(&a, &tol)?;
            export_lp(&f, output)?;
            if let Some(dir) = dump_blocks {
                std::fs::create_dir_all(dir)?;
                for (name, block) in [("G", f.g()), ("V2", f.v2()), ("U1", f.u1())] {
                    write_csv(dir.join(format!("{name}.csv")), &DenseMatrix::from_nalgebra(block.clone())?)?;
                }
            }
            writeln!(out, "wrote {}", output.display())?;
            Ok(Outcome::Done)
        }
        Command::Bench {
            sizes,
            methods,
            seed,
            density,
            time_cap,
            threads,
            report,
            solve,
        } => {
            let (solver, ls) = solve.configs(tol, cli.tol.rank, false)?;
            if !(*time_cap > 0.0) {
                return Err(GinvError::Config(format!("time cap must be positive, got {time_cap}")));
            }
            if *threads == Some(0) {
                return Err(GinvError::Config("threads must be positive".into()));
            }
            let specs: Vec<InstanceSpec> = sizes
                .iter()
                .map(|s| InstanceSpec {
                    seed: *seed,
                    density: *density,
                    ..*s
                })
                .collect();
            for spec in &specs {
                spec.validate()?;
            }
            let cfg = BenchConfig {
                tol,
                solver,
                ls,
                time_cap: *time_cap,
                rank: cli.tol.rank,
                threads: *threads,
            };
            let reports = run_suite(&specs, methods, &cfg)?;
            if let Some(path) = report {
                write_reports(path, &reports)?;
            }
            out.write_all(render_table(&reports).as_bytes())?;
            Ok(outcome(&reports))
        }
        Command::Ratio { input } => {
            let text = std::fs::read_to_string(input)?;
            let reports = text
                .lines()
                .filter(|l| !l.trim().is_empty())
                .map(InverseReport::from_json_line)
                .collect::<Result<Vec<_>>>()?;
            let rows = ratio_study(&reports)?;
            writeln!(out, "instance\tr\tratio\tbelow_1.6")?;
            for row in rows {
                writeln!(out, "{}\t{}\t{:.6}\t{}", row.instance, row.r, row.ratio, row.below_typical)?;
            }
            Ok(Outcome::Done)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn solve_one(
    instance: &str,
    a: &DenseMatrix,
    method: Method,
    targs: &TolArgs,
    tol: ToleranceConfig,
    solver: SolverConfig,
    ls: LsConfig,
    trace: Option<&Path>,
) -> Result<(Option<DenseMatrix>, InverseReport)> {
    if let (Method::Ls, Some(path)) = (method, trace) {
        let rank = targs.factors(a, &tol)?.rank();
        let out = local_search(a, &LsConfig { rank: Some(rank), ..ls })?;
        let h = build_ah_symmetric(a, out.state.t())?;
        write_trace(path, &out.trace)?;
        let rep = InverseReport::measure(instance, a, rank, method, &h, out.status.into(), tol.zero_tol)?;
        return Ok((Some(h), rep));
    }
    let cfg = BenchConfig {
        tol,
        solver,
        ls,
        time_cap: f64::INFINITY,
        rank: targs.rank,
        threads: Some(1),
    };
    let cell = run_method(instance, a, method, &cfg)?;
    if cell.report.status == CellStatus::SizeCap {
        return Err(GinvError::SizeCap {
            size: a.rows() * a.cols(),
            cap: solver.full_cap,
        });
    }
    if let Some(path) = trace {
        write_trace(path, &cell.trace)?;
    }
    Ok((cell.h, cell.report))
}

fn write_trace<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

fn write_reports(path: &Path, reports: &[InverseReport]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for rep in reports {
        writeln!(w, "{}", rep.to_json_line()?)?;
    }
    w.flush()?;
    Ok(())
}

fn outcome(reports: &[InverseReport]) -> Outcome {
    reports
        .iter()
        .map(|r| r.status)
        .find(|s| !matches!(s, CellStatus::Optimal | CellStatus::SizeCap))
        .map_or(Outcome::Done, Outcome::NotConverged)
}
