//! End-to-end acceptance checks. Each test prints one PASS/FAIL line.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use ginv::bench::{generate, ratio_study, run_suite, BenchConfig, InstanceSpec, InverseReport, Method};
use ginv::formulations::{build, ProblemKind, SolveStatus};
use ginv::localsearch::{build_ah_symmetric, initial_t, local_search, select_rows, LsConfig, LsState};
use ginv::matcore::{
    norm_1, nonzero_rows, property_residuals, svd, DenseMatrix, SvdFactors, ToleranceConfig,
};
use ginv::solvers::{
    column_variant, oracle_small, solve_p123, solve_p123_full, solve_p21, solve_p21_l1, OracleGrid,
    SolverConfig,
};
use ginv::structure::{block_residuals, h_from_gamma, BlockGamma};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn verdict(name: &str, ok: bool, detail: &str) {
    println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "{name}: {detail}");
}

fn tol() -> ToleranceConfig {
    ToleranceConfig::default()
}

fn factors(a: &DenseMatrix) -> SvdFactors {
    svd(a, &tol()).unwrap()
}

fn uniform(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
}

/// Random sizes with `m >= n`, bounded by `(max_m, max_n, max_r)`.
fn instances(count: usize, max: (usize, usize, usize), seed: u64) -> Vec<(InstanceSpec, DenseMatrix)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![];
    let first = InstanceSpec::new(max.0, max.1, max.2, seed);
    out.push((first, generate(&first).unwrap()));
    while out.len() < count {
        let n = rng.gen_range(2..=max.1);
        let m = rng.gen_range(n..=max.0);
        let r = rng.gen_range(1..=max.2.min(n));
        let spec = InstanceSpec::new(m, n, r, rng.gen());
        out.push((spec, generate(&spec).unwrap()));
    }
    out
}

#[test]
fn structure_equivalence() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut mismatches = vec![];
    for case in 0..100 {
        let m = rng.gen_range(1..=40);
        let n = rng.gen_range(1..=40);
        let r = rng.gen_range(1..=m.min(n));
        let a = DenseMatrix::from_nalgebra(uniform(m, r, &mut rng) * uniform(r, n, &mut rng)).unwrap();
        let f = factors(&a);
        let r = f.rank();
        let pick = |rng: &mut ChaCha8Rng, rows, cols| {
            if rng.gen_bool(0.5) {
                uniform(rows, cols, rng)
            } else {
                DMatrix::zeros(rows, cols)
            }
        };
        let y = pick(&mut rng, r, m - r);
        let z = pick(&mut rng, n - r, r);
        let w = match rng.gen_range(0..3) {
            0 => DMatrix::zeros(n - r, m - r),
            1 => &z * f.d() * &y,
            _ => uniform(n - r, m - r, &mut rng),
        };
        let gamma = BlockGamma { x: f.dinv(), y, z, w };
        let h = h_from_gamma(&f, &gamma).unwrap();
        let cut = 1e-8 * a.frobenius_norm();
        let by_matrix = property_residuals(&a, &h).unwrap().satisfied(cut);
        let by_block = block_residuals(&f, &gamma).unwrap().as_array().map(|v| v <= cut);
        if by_matrix != by_block {
            mismatches.push((case, by_matrix, by_block));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        "structure equivalence",
        mismatches.is_empty() && secs < 10.0,
        &format!("100 instances, {} mismatches {:?}, {secs:.2} s", mismatches.len(), mismatches.first()),
    );
}

#[test]
fn p21_and_column_variant_residuals() {
    let start = Instant::now();
    let cfg = SolverConfig::default();
    let mut worst_row = 0.0_f64;
    let mut worst_col = 0.0_f64;
    for (_, a) in instances(50, (80, 40, 20), 21) {
        let scale = a.frobenius_norm();
        let f = factors(&a);
        let sol = solve_p21(&build(ProblemKind::P21, &f, None).unwrap(), &cfg).unwrap();
        let res = property_residuals(&a, &sol.h).unwrap();
        worst_row = worst_row.max(res.p1.max(res.p2).max(res.p3) / scale);
        let col = column_variant(&a, &tol(), &cfg).unwrap();
        let res = property_residuals(&a, &col.h).unwrap();
        worst_col = worst_col.max(res.p1.max(res.p2).max(res.p4) / scale);
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        "row-sparse P1-P3",
        worst_row <= 1e-6 && secs < 60.0,
        &format!("50 instances, worst residual {worst_row:.2e} ||A||_F, {secs:.2} s"),
    );
    verdict(
        "column-sparse P1, P2, P4",
        worst_col <= 1e-6,
        &format!("50 instances, worst residual {worst_col:.2e} ||A||_F"),
    );
}

#[test]
fn oracle_agreement() {
    let grid = OracleGrid::default();
    let cfg = SolverConfig::default();
    let check = |a: &DenseMatrix| -> [(f64, f64); 3] {
        let f = factors(a);
        let p21 = build(ProblemKind::P21, &f, None).unwrap();
        let s21 = solve_p21(&p21, &cfg).unwrap().objective;
        let p123 = build(ProblemKind::P123, &f, None).unwrap();
        let s123 = solve_p123(&p123, &cfg).unwrap().objective;
        let pl1 = build(ProblemKind::P21L1, &f, Some(s21)).unwrap();
        let sl1 = solve_p21_l1(&pl1, &cfg).unwrap().objective;
        [
            (s21, oracle_small(&p21, &grid).unwrap()),
            (s123, oracle_small(&p123, &grid).unwrap()),
            (sl1, oracle_small(&pl1, &grid).unwrap()),
        ]
    };

    let ones = DenseMatrix::filled(2, 2, 1.0).unwrap();
    let d20 = DenseMatrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 0.0]]).unwrap();
    let [o21, o123, _] = check(&ones);
    let [d21, d123, _] = check(&d20);
    let known = [
        (o21, 0.5f64.sqrt()),
        (o123, 1.0),
        (d21, 0.5),
        (d123, 0.5),
    ];
    let mut worst = 0.0_f64;
    for ((solver, oracle), want) in known {
        worst = worst.max((solver - want).abs()).max((oracle - want).abs());
    }

    // Every rank-one u vᵀ with entries of u and v in {-1, 0, 1, 2}.
    let vals = [-1.0, 0.0, 1.0, 2.0];
    let vectors = |len: usize| -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = vec![vec![]];
        for _ in 0..len {
            out = out
                .into_iter()
                .flat_map(|p| vals.iter().map(move |&v| [p.clone(), vec![v]].concat()))
                .collect();
        }
        out.retain(|v| v.iter().any(|&x| x != 0.0));
        out
    };
    let mut cases = 0;
    for m in [2, 3] {
        for u in vectors(m) {
            for v in vectors(2) {
                let a = DenseMatrix::from_nalgebra(DMatrix::from_fn(m, 2, |i, j| u[i] * v[j])).unwrap();
                for (solver, oracle) in check(&a) {
                    worst = worst.max((solver - oracle).abs());
                }
                cases += 1;
            }
        }
    }
    verdict(
        "oracle agreement",
        worst <= 1e-4,
        &format!("{cases} rank-one 2x2 and 3x2 cases plus known values, worst gap {worst:.2e}"),
    );
}

#[test]
fn reduced_matches_full_lp() {
    let mut sizes = vec![(40, 20, 10); 5];
    sizes.extend([(30, 15, 5); 3]);
    sizes.extend([(20, 10, 5); 3]);
    sizes.extend([(12, 8, 4); 3]);
    sizes.extend([(6, 4, 2); 3]);
    sizes.extend([(40, 20, 15), (36, 18, 9), (10, 10, 5)]);
    let cfg = SolverConfig::default();
    let mut worst = 0.0_f64;
    let mut slower = vec![];
    let mut not_optimal = 0;
    for (i, &(m, n, r)) in sizes.iter().enumerate() {
        let spec = InstanceSpec::new(m, n, r, 500 + i as u64);
        let a = generate(&spec).unwrap();
        let f = factors(&a);
        let reduced = solve_p123(&build(ProblemKind::P123, &f, None).unwrap(), &cfg).unwrap();
        let full = solve_p123_full(&a, &cfg).unwrap();
        if reduced.status != SolveStatus::Optimal || full.status != SolveStatus::Optimal {
            not_optimal += 1;
        }
        worst = worst.max((reduced.objective - full.objective).abs() / (1.0 + full.objective.abs()));
        if m >= 40 && n >= 20 && r >= 10 && reduced.solve_time >= full.solve_time {
            slower.push((spec.label(), reduced.solve_time, full.solve_time));
        }
    }
    verdict(
        "reduced vs full LP",
        worst <= 1e-6 && slower.is_empty() && not_optimal == 0,
        &format!(
            "20 instances, worst relative gap {worst:.2e}, {not_optimal} not optimal, reduced slower on {slower:?}"
        ),
    );
}

#[test]
fn local_search_guarantees() {
    let mut specs = vec![];
    for (i, &(m, n, r)) in [(80, 40, 20), (80, 40, 20), (40, 20, 10), (40, 20, 10), (40, 20, 10)]
        .iter()
        .chain(&[(20, 10, 5), (20, 10, 5), (20, 10, 5), (12, 6, 3), (12, 6, 3)])
        .enumerate()
    {
        specs.push(InstanceSpec::new(m, n, r, 700 + i as u64));
    }
    let cfg = BenchConfig::default();
    let reports = run_suite(&specs, &[Method::P123, Method::Ls], &cfg).unwrap();
    let bad_nzr: Vec<_> = reports
        .iter()
        .filter(|r| r.method == Method::Ls && r.nzr != Some(r.r))
        .map(|r| r.instance.clone())
        .collect();
    let ratios = ratio_study(&reports);
    let (ratio_ok, below, max_ratio) = match &ratios {
        Ok(rows) => (
            rows.iter().all(|row| row.ratio <= row.r as f64),
            rows.iter().filter(|row| row.below_typical).count(),
            rows.iter().map(|row| row.ratio).fold(0.0, f64::max),
        ),
        Err(_) => (false, 0, f64::NAN),
    };

    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut worst = 0.0_f64;
    let mut swaps = 0;
    while swaps < 1000 {
        let r = rng.gen_range(1..8);
        let n = r + rng.gen_range(1..8);
        let m = r + rng.gen_range(0..6);
        let a = DenseMatrix::from_nalgebra(uniform(m, r, &mut rng) * uniform(r, n, &mut rng)).unwrap();
        let s = select_rows(&a, r, &tol()).unwrap();
        let t = initial_t(&a, &s, &tol()).unwrap();
        let state = LsState::new(&a, &s, &t).unwrap();
        for _ in 0..10 {
            let (j, k) = (rng.gen_range(0..r), rng.gen_range(0..n));
            let mut t2 = t.clone();
            t2[j] = k;
            let det = a.select(&s, &t2).as_matrix().determinant().abs() / state.absdet();
            let ratio = state.swap_ratio(j, k).unwrap();
            worst = worst.max((ratio - det).abs() / det.max(1.0));
            swaps += 1;
        }
    }
    verdict(
        "local search guarantees",
        bad_nzr.is_empty() && ratio_ok && worst <= 1e-10,
        &format!(
            "nzr != r on {bad_nzr:?}; max 1-norm ratio {max_ratio:.3} (below 1.6 on {below} of {}); \
             worst swap-ratio error {worst:.2e} over {swaps} swaps",
            specs.len()
        ),
    );
}

#[test]
fn optimality_orderings() {
    let mut sizes = vec![(120, 60, 30)];
    sizes.extend([(80, 40, 20); 3]);
    sizes.extend([(40, 20, 10); 6]);
    sizes.extend([(20, 10, 5); 5]);
    sizes.extend([(10, 6, 3); 5]);
    let specs: Vec<InstanceSpec> = sizes
        .iter()
        .enumerate()
        .map(|(i, &(m, n, r))| InstanceSpec::new(m, n, r, 900 + i as u64))
        .collect();
    let methods = [Method::P21, Method::P21L1, Method::P123, Method::Ls, Method::Mp];
    let reports = run_suite(&specs, &methods, &BenchConfig::default()).unwrap();
    let slack = 1e-6;
    let mut violations = vec![];
    for cell in reports.chunks(methods.len()) {
        let get = |m: Method| cell.iter().find(|r| r.method == m).unwrap();
        let (p21, l1, p123) = (get(Method::P21), get(Method::P21L1), get(Method::P123));
        let n21 = |r: &InverseReport| r.norm21.unwrap();
        let n1 = |r: &InverseReport| r.norm1.unwrap();
        for other in cell {
            if n21(p21) > n21(other) + slack {
                violations.push(format!("{}: 2,1 P21 > {}", other.instance, other.method));
            }
            if n1(p123) > n1(other) + slack {
                violations.push(format!("{}: 1 P123 > {}", other.instance, other.method));
            }
        }
        if n1(l1) > n1(p21) + slack {
            violations.push(format!("{}: 1 P21_L1 > P21", l1.instance));
        }
    }
    verdict(
        "optimality orderings",
        violations.is_empty(),
        &format!("20 instances up to 120x60x30, violations {violations:?}"),
    );
}

#[test]
fn desk_scale_performance() {
    let a = generate(&InstanceSpec::new(200, 100, 50, 1)).unwrap();
    let start = Instant::now();
    let f = factors(&a);
    let sol = solve_p21(&build(ProblemKind::P21, &f, None).unwrap(), &SolverConfig::default()).unwrap();
    let p21_secs = start.elapsed().as_secs_f64();
    let res = property_residuals(&a, &sol.h).unwrap();
    let p21_ok = p21_secs < 60.0 && res.p1.max(res.p3) <= 1e-6 * a.frobenius_norm();

    let a = generate(&InstanceSpec::new(1000, 500, 250, 1)).unwrap();
    let start = Instant::now();
    let out = local_search(&a, &LsConfig::default()).unwrap();
    let h = build_ah_symmetric(&a, out.state.t()).unwrap();
    let ls_secs = start.elapsed().as_secs_f64();
    let ls_ok = ls_secs < 120.0 && nonzero_rows(&h, tol().zero_tol) == 250;
    verdict(
        "desk-scale performance",
        p21_ok && ls_ok,
        &format!(
            "P21 200x100x50 {p21_secs:.2} s ({}), LS 1000x500x250 {ls_secs:.2} s, {} swaps, 1-norm {:.3}",
            sol.status,
            out.swaps,
            norm_1(&h)
        ),
    );
}

fn ginv(dir: &Path, args: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_ginv"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
        .status
        .code()
        .unwrap()
}

/// Report lines with the timing fields zeroed.
fn untimed(path: &Path) -> Vec<InverseReport> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| InverseReport {
            time_s: 0.0,
            total_s: 0.0,
            ..InverseReport::from_json_line(l).unwrap()
        })
        .collect()
}

#[test]
fn determinism() {
    let runs: Vec<_> = (0..2).map(|_| tempfile::tempdir().unwrap()).collect();
    let mut codes = vec![];
    for dir in &runs {
        let d = dir.path();
        codes.push(ginv(d, &["gen", "--size", "40x20x10", "--seed", "3", "-o", "A.mtx"]));
        for method in ["p21", "p21l1", "p123", "p123full", "ls", "mp"] {
            let (h, rep) = (format!("H_{method}.mtx"), format!("{method}.json"));
            codes.push(ginv(d, &["solve", "--method", method, "-i", "A.mtx", "-o", &h, "--report", &rep]));
        }
        codes.push(ginv(
            d,
            &["bench", "--sizes", "12x8x3,20x10x5", "--seed", "4", "--report", "bench.jsonl", "--threads", "3"],
        ));
    }
    let (a, b) = (runs[0].path(), runs[1].path());
    let mut differ = vec![];
    let mut files: Vec<String> = vec!["A.mtx".into()];
    for method in ["p21", "p21l1", "p123", "p123full", "ls", "mp"] {
        files.push(format!("H_{method}.mtx"));
    }
    for file in &files {
        if std::fs::read(a.join(file)).unwrap() != std::fs::read(b.join(file)).unwrap() {
            differ.push(file.clone());
        }
    }
    for method in ["p21", "p21l1", "p123", "p123full", "ls", "mp"] {
        let file = format!("{method}.json");
        if untimed(&a.join(&file)) != untimed(&b.join(&file)) {
            differ.push(file);
        }
    }
    if untimed(&a.join("bench.jsonl")) != untimed(&b.join("bench.jsonl")) {
        differ.push("bench.jsonl".into());
    }
    // Exit 3 only from P21_L1, whose gap is not certified.
    let codes_ok = codes.iter().all(|&c| c == 0 || c == 3);
    verdict(
        "determinism",
        differ.is_empty() && codes_ok,
        &format!("{} files compared, differing {differ:?}, exit codes {codes:?}", files.len() + 7),
    );
}
