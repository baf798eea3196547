use std::process::Command;

use normflow_cli::config::{parse_config, Config, FamilyName, Format, InitSpec, MetricName};
use normflow_cli::run;
use proptest::prelude::*;
use serde_json::Value;

fn invoke(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut argv = vec!["normflow"];
    argv.extend_from_slice(args);
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn kwong_reports_delta_and_identities() {
    let (code, out, _) = invoke(&["kwong", "--set", "problem.N=3", "--set", "problem.p=4"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["delta_p"].as_f64().unwrap(), 0.75);
    assert_eq!(v["kwong_identity_ok"], true);
    for key in [
        "N", "p", "q", "delta_p", "nu_pq", "C_Np", "K_Np", "W_mass", "rho_star", "rho_star_upper", "rho_hat_star",
        "rho_hat_star_upper",
    ] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn unknown_subcommand_exits_with_usage() {
    let (code, _, err) = invoke(&["frobnicate"]);
    assert_eq!(code, 2);
    assert!(err.contains("Usage"));
}

#[test]
fn invalid_configuration_exits_2() {
    assert_eq!(invoke(&["solve", "--set", "problem.rho=-1"]).0, 2);
    assert_eq!(invoke(&["solve", "--set", "grid.bogus=1"]).0, 2);
    // missing keys
    assert_eq!(invoke(&["solve"]).0, 2);
    assert_eq!(invoke(&["sweep", "--set", "problem.family=two_q", "--set", "problem.q=3", "--set", "problem.p=3"]).0, 2);
    // outside the supercritical regime
    let (code, _, err) = invoke(&[
        "mpass", "--set", "problem.family=two_q", "--set", "problem.q=3", "--set", "problem.p=3", "--set", "problem.rho=1",
    ]);
    assert_eq!(code, 2, "{err}");
}

#[test]
fn config_file_errors_carry_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.ini");
    std::fs::write(&path, "[problem]\np = 3\n# again\np = 4\n").unwrap();
    let (code, _, err) = invoke(&["kwong", "--config", path.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("line 4") && err.contains("duplicate"), "{err}");
}

#[test]
fn non_convergence_exits_3() {
    let (code, out, _) = invoke(&[
        "solve", "--set", "problem.family=two_q", "--set", "problem.q=3", "--set", "problem.p=3", "--set",
        "problem.rho=6", "--set", "grid.rmax=50", "--set", "grid.n=512", "--set", "solver.max_iter=2",
    ]);
    assert_eq!(code, 3);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["converged"], false);
}

#[test]
fn sweep_files_are_reproducible() {
    let args = |dir: &str| {
        vec![
            "sweep".to_string(),
            "--format=csv".into(),
            "--plot".into(),
            "--out".into(),
            dir.to_string(),
            "--set=problem.family=two_q".into(),
            "--set=problem.q=3".into(),
            "--set=problem.p=3".into(),
            "--set=sweep.rhos=5,7".into(),
            "--set=grid.rmax=50".into(),
            "--set=grid.n=512".into(),
        ]
    };
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_normflow");
    for d in [&a, &b] {
        let st = Command::new(bin).args(args(d.path().to_str().unwrap())).output().unwrap();
        assert!(st.status.success(), "{}", String::from_utf8_lossy(&st.stderr));
    }
    for f in ["mass_curve.csv", "splits.csv", "mass_curve.svg"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert_eq!(x, y, "{f} differs");
    }
    let text = std::fs::read_to_string(a.path().join("mass_curve.csv")).unwrap();
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "rho,m,lambda,grad2sq,gradqq,grad_linf,pohozaev,grad_res,iters,converged");
}

#[test]
fn mountain_pass_json_schema() {
    let (code, out, err) = invoke(&[
        "mpass", "--set", "problem.family=two_q", "--set", "problem.q=2.5", "--set", "problem.p=5", "--set", "problem.rho=1",
    ]);
    assert_eq!(code, 0, "{err}");
    let v: Value = serde_json::from_str(&out).unwrap();
    for key in ["m_upper", "lambda", "pohozaev", "eta", "I_u0", "I_u1", "Q_u0", "Q_u1", "sigma_star", "converged"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert!(v["lambda"].as_f64().unwrap() > 0.0);
}

#[test]
fn born_infeld_profile_columns() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, err) = invoke(&[
        "borninfeld", "--out", dir.path().to_str().unwrap(), "--set", "problem.p=3", "--set", "problem.rho=8", "--set",
        "grid.rmax=40", "--set", "grid.n=2048",
    ]);
    assert_eq!(code, 0, "{err}");
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["promoted"], true);
    let text = std::fs::read_to_string(dir.path().join("borninfeld_profile.csv")).unwrap();
    assert_eq!(text.lines().find(|l| !l.starts_with('#')).unwrap(), "r,u,du,flux");
}

fn arb_config() -> impl Strategy<Value = Config> {
    let f = || prop::option::of(0.01f64..100.0);
    (
        (prop::option::of(prop_oneof![Just(FamilyName::TwoQ), Just(FamilyName::BornInfeld)]), 3usize..6, prop::option::of(2.01f64..6.0), prop::option::of(1.01f64..6.0), f()),
        (16usize..10_000, 0.1f64..1e4),
        (prop::option::of(1e-12f64..1e-2), prop::option::of(1usize..100_000), f(), prop::option::of(prop_oneof![Just(MetricName::H1), Just(MetricName::L2)]), prop::option::of(prop_oneof![(0.1f64..9.0).prop_map(InitSpec::Gaussian), (0.1f64..9.0).prop_map(InitSpec::Plateau)]), any::<u64>()),
        (prop::option::of("[a-z][a-z0-9_/]{0,12}"), prop_oneof![Just(Format::Csv), Just(Format::Json)], any::<bool>()),
        prop::option::of(prop::collection::vec(0.01f64..50.0, 1..5)),
    )
        .prop_map(|((family, dim, p, q, rho), (n, rmax), (tol, max_iter, step, metric, init, seed), (dir, format, plot), rhos)| {
            let mut c = Config::default();
            c.problem.family = family;
            c.problem.dim = dim;
            c.problem.p = p;
            c.problem.q = q;
            c.problem.rho = rho;
            c.grid.n = n;
            c.grid.rmax = rmax;
            if let Some(t) = tol {
                c.solver.tol = t;
                c.solver.tol_set = true;
            }
            c.solver.max_iter = max_iter;
            c.solver.step = step;
            c.solver.metric = metric;
            c.solver.init = init;
            c.solver.seed = seed;
            c.output.dir = dir;
            c.output.format = format;
            c.output.plot = plot;
            c.sweep.rhos = rhos;
            c
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn config_round_trips(c in arb_config()) {
        let text = c.serialize();
        let back = parse_config(&text).unwrap();
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(back.serialize(), text);
    }
}
