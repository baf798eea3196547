//! Acceptance battery: one PASS/FAIL line per criterion.
//!
//! Criteria 1–10 run in-process with timings; criterion 11 runs the `check`
//! binary with the same seed and compares its files byte for byte with the
//! in-process results. Runs without the libtest harness so the lines are
//! never captured.

use std::process::Command;
use std::time::{Duration, Instant};

use normflow_cli::config::Config;
use normflow_cli::suite::{self, Criterion, SuiteReport};

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed())
}

/// Adds a runtime gate and prints the line.
fn report(mut c: Criterion, elapsed: Duration, limit: Duration, out: &mut Vec<Criterion>) {
    let secs = elapsed.as_secs_f64();
    if elapsed > limit {
        c.pass = false;
        c.note.push_str(&format!("; runtime {secs:.1}s over {}s", limit.as_secs()));
    }
    println!("{} runtime={secs:.2}s", c.line());
    out.push(c);
}

fn main() {
    let cfg = Config::default();
    let seed = cfg.solver.seed;
    let minute = Duration::from_secs(60);
    let mut done = Vec::new();

    let (c, t) = timed(|| suite::c1_discrete_gradient(seed).unwrap());
    report(c, t, minute, &mut done);
    // three profiles, 5 s each
    let (c, t) = timed(|| suite::c2_kwong_identities().unwrap());
    report(c, t, Duration::from_secs(15), &mut done);
    let (c, t) = timed(|| suite::c3_gn_certification(seed).unwrap());
    report(c, t, minute, &mut done);
    let ((a, b), t) = timed(|| suite::subcritical_curves().unwrap());
    report(suite::c4_subcritical(&a, &b), t, 2 * minute, &mut done);
    report(suite::c5_subadditivity(&a), Duration::ZERO, minute, &mut done);
    let (c, t) = timed(|| suite::c6_scaling().unwrap());
    report(c, t, minute, &mut done);
    let (c, t) = timed(|| suite::c7_monotone(seed).unwrap());
    report(c, t, minute, &mut done);
    let (c, t) = timed(|| suite::c8_thresholds().unwrap());
    report(c, t, minute, &mut done);
    let (c, t) = timed(|| suite::c9_mountain_pass().unwrap());
    report(c, t, 5 * minute, &mut done);
    let ((x, y), t) = timed(|| suite::born_infeld_runs().unwrap());
    report(suite::c10_born_infeld(&x, &y), t, 5 * minute, &mut done);

    // strip runtime notes so the report matches what `check` serializes
    let in_process = SuiteReport {
        seed,
        criteria: done
            .iter()
            .map(|c| {
                let mut c = c.clone();
                if let Some(i) = c.note.find("; runtime") {
                    c.note.truncate(i);
                }
                c
            })
            .collect(),
        mass_curve: Some(a),
    };
    let expected = in_process.artifacts(&cfg.echo());

    let dir = tempfile::tempdir().unwrap();
    let (run, t) = timed(|| {
        Command::new(env!("CARGO_BIN_EXE_normflow"))
            .args(["check", "--out", dir.path().to_str().unwrap()])
            .output()
            .unwrap()
    });
    let mut c11 = Criterion {
        id: 11,
        name: "determinism",
        pass: true,
        metrics: Vec::new(),
        note: String::new(),
    };
    let mut differing = 0;
    for art in &expected {
        let got = std::fs::read(dir.path().join(&art.name)).unwrap_or_default();
        if got != art.contents.as_bytes() {
            differing += 1;
            c11.note.push_str(&format!("{} differs; ", art.name));
        }
    }
    c11.metrics.push(suite::Metric {
        name: "files".into(),
        value: expected.len() as f64,
    });
    c11.metrics.push(suite::Metric {
        name: "differing".into(),
        value: differing as f64,
    });
    c11.pass = differing == 0 && run.status.code() == Some(if in_process.all_pass() { 0 } else { 4 });
    println!("{} runtime={:.2}s", c11.line(), t.as_secs_f64());
    done.push(c11);

    let failed: Vec<u8> = done.iter().filter(|c| !c.pass).map(|c| c.id).collect();
    if failed.is_empty() {
        println!("acceptance: all {} criteria pass", done.len());
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
