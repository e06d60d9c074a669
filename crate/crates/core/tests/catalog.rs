use qecheck::cli::{catalog, run, FIXTURES};

#[test]
fn every_fixture_behaves_as_documented() {
    for f in FIXTURES {
        let (_, cfg) = catalog(f.name).unwrap();
        let rep = run(&cfg).unwrap();
        assert!(!rep.entries.is_empty(), "{} declares no checks", f.name);
        let failed: Vec<&str> = rep.entries.iter().filter(|e| !e.pass).map(|e| e.check.as_str()).collect();
        if f.positive {
            assert!(rep.pass, "{} failed {:?}", f.name, failed);
        } else {
            assert!(!rep.pass, "{} passed", f.name);
            let mut got = failed.clone();
            got.sort_unstable();
            got.dedup();
            let mut want = f.expected_failures.to_vec();
            want.sort_unstable();
            assert_eq!(got, want, "{}", f.name);
        }
    }
}

#[test]
fn negative_controls_fail_by_a_wide_margin() {
    for f in FIXTURES.iter().filter(|f| !f.positive) {
        let (_, cfg) = catalog(f.name).unwrap();
        let rep = run(&cfg).unwrap();
        let qe = rep.entries.iter().find(|e| e.check == "qe_residual").unwrap();
        assert!(qe.metric.unwrap() > 1e-3, "{}", f.name);
    }
}

#[test]
fn required_fixtures_exist() {
    for name in [
        "flat_trivial",
        "round_sphere_trivial",
        "cosh_line",
        "hyperbolic_exponential",
        "gaussian_soliton",
        "product_kahler_qe",
        "m1_family",
    ] {
        assert!(FIXTURES.iter().any(|f| f.name == name), "{}", name);
        let broken = FIXTURES.iter().filter(|f| !f.positive).any(|f| f.name.starts_with(name.split('_').next().unwrap()));
        assert!(broken, "no negative control for {}", name);
    }
}
