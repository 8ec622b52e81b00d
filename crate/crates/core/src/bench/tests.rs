use super::*;

fn cfg() -> BenchConfig {
    BenchConfig {
        threads: Some(2),
        ..BenchConfig::default()
    }
}

fn close(a: Option<f64>, b: f64, tol: f64) -> bool {
    a.is_some_and(|v| (v - b).abs() <= tol)
}

#[test]
fn generate_examples() {
    let spec = InstanceSpec::new(4, 3, 2, 7);
    let a = generate(&spec).unwrap();
    assert_eq!(a.shape(), (4, 3));
    assert_eq!(svd(&a, &ToleranceConfig::default()).unwrap().rank(), 2);
    assert_eq!(a, generate(&spec).unwrap());

    let spec = InstanceSpec {
        density: 0.5,
        ..InstanceSpec::new(40, 20, 10, 1)
    };
    let a = generate(&spec).unwrap();
    assert_eq!(svd(&a, &ToleranceConfig::default()).unwrap().rank(), 10);
}

#[test]
fn generate_gives_up_on_impossible_density() {
    let spec = InstanceSpec {
        density: 1e-9,
        ..InstanceSpec::new(6, 6, 3, 0)
    };
    assert!(matches!(generate(&spec), Err(GinvError::Rank(_))));
    assert!(generate(&InstanceSpec::new(3, 3, 4, 0)).is_err());
}

#[test]
fn spec_and_method_parsing() {
    let s: InstanceSpec = "40x20x10".parse().unwrap();
    assert_eq!((s.m, s.n, s.r), (40, 20, 10));
    assert!("40x20".parse::<InstanceSpec>().is_err());
    assert_eq!("p21l1".parse::<Method>().unwrap(), Method::P21L1);
    assert_eq!("P123_FULL".parse::<Method>().unwrap(), Method::P123Full);
    assert!("foo".parse::<Method>().is_err());
}

#[test]
fn ones_and_identity_cells() {
    let ones = DenseMatrix::filled(2, 2, 1.0).unwrap();
    let ls = run_method("ones", &ones, Method::Ls, &cfg()).unwrap().report;
    assert_eq!(ls.nzr, Some(1));
    assert!(close(ls.norm1, 1.0, 1e-12));
    assert!(close(ls.norm21, 0.5f64.sqrt(), 1e-12));

    let eye = DenseMatrix::identity(2);
    for method in Method::ALL {
        let rep = run_method("eye", &eye, method, &cfg()).unwrap().report;
        assert_eq!(rep.nzr, Some(2), "{method}");
        assert!(close(rep.norm1, 2.0, 1e-9), "{method}");
    }
}

#[test]
fn report_metrics_round_trip() {
    let a = generate(&InstanceSpec::new(12, 8, 3, 4)).unwrap();
    let zero_tol = ToleranceConfig::default().zero_tol;
    for method in Method::ALL {
        let cell = run_method("x", &a, method, &cfg()).unwrap();
        let h = cell.h.unwrap();
        let again = InverseReport::measure("x", &a, 3, method, &h, cell.report.status, zero_tol).unwrap();
        assert_eq!(
            InverseReport {
                time_s: cell.report.time_s,
                total_s: cell.report.total_s,
                ..again
            },
            cell.report
        );
        let line = cell.report.to_json_line().unwrap();
        assert_eq!(InverseReport::from_json_line(&line).unwrap(), cell.report);
        assert!(line.starts_with("{\"instance\":\"x\",\"m\":12,\"n\":8,\"r\":3,\"method\":"));
        assert!(cell.report.rp1.unwrap() <= 1e-6 * a.frobenius_norm());
    }
}

#[test]
fn suite_patterns_and_order() {
    let specs = [InstanceSpec::new(40, 20, 10, 1), InstanceSpec::new(10, 6, 3, 2)];
    let methods = [Method::P21, Method::P123, Method::Ls, Method::Mp];
    let reports = run_suite(&specs, &methods, &cfg()).unwrap();
    assert_eq!(reports.len(), 8);
    for (i, rep) in reports.iter().enumerate() {
        assert_eq!(rep.instance, specs[i / 4].label());
        assert_eq!(rep.method, methods[i % 4]);
    }
    for chunk in reports.chunks(4) {
        let (p21, p123, ls) = (&chunk[0], &chunk[1], &chunk[2]);
        let r = ls.r;
        assert!(p21.nzr.unwrap() >= r);
        assert_eq!(ls.nzr, Some(r));
        let slack = 1e-6;
        assert!(p21.norm21.unwrap() <= p123.norm21.unwrap() + slack);
        assert!(p123.norm1.unwrap() <= p21.norm1.unwrap() + slack);
    }
    let table = render_table(&reports);
    assert_eq!(table.lines().count(), 9);
    assert!(table.starts_with("instance"));
    let ratios = ratio_study(&reports).unwrap();
    assert_eq!(ratios.len(), 2);
    for row in ratios {
        assert!(row.ratio >= 1.0 - 1e-9 && row.ratio <= row.r as f64);
    }
}

#[test]
fn full_lp_cells_over_the_cap_are_skipped() {
    let a = generate(&InstanceSpec::new(50, 40, 5, 3)).unwrap();
    let rep = run_method("big", &a, Method::P123Full, &cfg()).unwrap().report;
    assert_eq!(rep.status, CellStatus::SizeCap);
    assert!(rep.norm1.is_none());
    assert!(render_table(&[rep]).contains('*'));
}

#[test]
fn ratio_examples() {
    let ones = DenseMatrix::filled(2, 2, 1.0).unwrap();
    let eye = DenseMatrix::identity(2);
    let mut reports = Vec::new();
    for (name, a) in [("ones", &ones), ("eye", &eye)] {
        for method in [Method::Ls, Method::P123] {
            reports.push(run_method(name, a, method, &cfg()).unwrap().report);
        }
    }
    let rows = ratio_study(&reports).unwrap();
    assert!((rows[0].ratio - 1.0).abs() < 1e-8);
    assert!((rows[1].ratio - 1.0).abs() < 1e-12);
    assert!(rows.iter().all(|r| r.below_typical));

    let missing = vec![reports[0].clone()];
    assert!(matches!(ratio_study(&missing), Err(GinvError::MissingPair(_))));
}

#[test]
fn tiny_time_cap_is_reported() {
    let a = generate(&InstanceSpec::new(80, 40, 20, 5)).unwrap();
    let cfg = BenchConfig {
        time_cap: 1e-6,
        ..cfg()
    };
    let rep = run_method("t", &a, Method::P21, &cfg).unwrap().report;
    assert_eq!(rep.status, CellStatus::TimeLimit);
}
