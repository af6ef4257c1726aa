//! Acceptance suite: one PASS/FAIL line per criterion, with the measured numbers underneath.
//!
//! Runs without the libtest harness so the report is always printed. A criterion listed in
//! `EXPECTED_FAILURES` is still reported as FAIL, but only fails the run if a check outside the
//! listed clauses fails too. Any other failing criterion exits nonzero.

use std::path::Path;
use std::process::{Command, ExitCode, Output};
use std::time::{Duration, Instant};

use ptqgt::verify::{check_adiabatic, check_dispersion, check_ridges, check_stokes, cross_identity_checks, Check};

const BIN: &str = env!("CARGO_BIN_EXE_ptqgt");

/// Clauses that cannot pass as worded, with the reason printed next to the verdict.
const EXPECTED_FAILURES: &[(&str, &str)] = &[
    ("2b", "g22 decreases toward -inf as |eta| -> eta_c; the divergence is real but its sign is negative (README, Acceptance)"),
    ("2c", "the published intensity has no divergence across the pseudo-isotropic annulus (README, Acceptance)"),
];

struct Outcome {
    number: usize,
    title: &'static str,
    checks: Vec<Check>,
    elapsed: Duration,
}

impl Outcome {
    fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    /// Failing checks outside the expected-failure list.
    fn unexpected(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed() && !EXPECTED_FAILURES.iter().any(|(id, _)| *id == c.id)).collect()
    }
}

fn ptqgt(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("the ptqgt binary runs")
}

fn timed(number: usize, title: &'static str, run: impl FnOnce() -> Vec<Check>) -> Outcome {
    let start = Instant::now();
    let checks = run();
    Outcome { number, title, checks, elapsed: start.elapsed() }
}

fn json_field(v: &serde_json::Value, key: &str) -> f64 {
    v[key].as_f64().unwrap_or(f64::NAN)
}

fn criterion_1() -> Vec<Check> {
    let cases: [(&str, &str, [f64; 3], &str); 2] = [
        ("anisotropic", "1,1/2,1/3,1/6", [35f64.sqrt() / 3.0, 5f64.sqrt() / 3.0, 1.0], "anisotropic"),
        ("pseudo-isotropic", "1,1/2,1/4,1/2", [3f64.sqrt(), 3f64.sqrt() / 2.0, 1.0], "pseudo_isotropic"),
    ];
    let mut out = Vec::new();
    for (label, params, expect, case) in cases {
        let o = ptqgt(&["critical", "--params", params, "--json"]);
        let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap_or_default();
        let got = [json_field(&v, "r_c1"), json_field(&v, "r_c2"), json_field(&v, "eta_c")];
        let err = got.iter().zip(expect).map(|(g, e)| (g - e).abs()).fold(0.0, f64::max);
        let err = if o.status.success() && v["case"] == case { err } else { f64::INFINITY };
        out.push(
            Check::at_most("1", format!("{label}: max |(r_c1, r_c2, eta_c) - closed form|"), err, 1e-12)
                .with_detail(format!("reported {got:?}, case {}", v["case"])),
        );
    }
    out
}

fn criterion_4() -> Vec<Check> {
    let mut out = cross_identity_checks(42);
    for seed in ["42", "43"] {
        let start = Instant::now();
        let o = ptqgt(&["verify", "--suite", "fast", "--seed", seed]);
        let secs = start.elapsed().as_secs_f64();
        let report = String::from_utf8_lossy(&o.stdout);
        let failed = report.lines().filter(|l| l.starts_with("FAIL")).count();
        let checks = report.lines().filter(|l| l.starts_with("PASS") || l.starts_with("FAIL")).count();
        let failed = if o.status.success() && checks > 0 { failed as f64 } else { f64::INFINITY };
        out.push(
            Check::at_most("4", format!("ptqgt verify --suite fast --seed {seed}: failing checks"), failed, 0.0)
                .with_detail(format!("{checks} checks, {}", o.status)),
        );
        out.push(Check::at_most("4", format!("ptqgt verify --suite fast --seed {seed}: wall time (s)"), secs, 60.0));
    }
    out
}

fn with_runtime(mut checks: Vec<Check>, id: &'static str, start: Instant, limit: f64) -> Vec<Check> {
    checks.push(Check::at_most(id, "runtime (s)", start.elapsed().as_secs_f64(), limit));
    checks
}

fn scan_csv(dir: &Path, workers: &str) -> Result<Vec<u8>, String> {
    let out = dir.join(format!("scan_w{workers}.csv"));
    let o = ptqgt(&[
        "scan",
        "--params",
        "1,1/2,1/3,1/6",
        "--h-range",
        "0,3,41",
        "--eta-range",
        "-0.95,0.95,41",
        "--n-quad",
        "65",
        "--workers",
        workers,
        "--out",
        out.to_str().expect("utf-8 temp path"),
    ]);
    if !o.status.success() {
        return Err(String::from_utf8_lossy(&o.stderr).into_owned());
    }
    std::fs::read(&out).map_err(|e| e.to_string())
}

fn criterion_7() -> Vec<Check> {
    let dir = tempfile::tempdir().expect("temporary directory");
    match (scan_csv(dir.path(), "1"), scan_csv(dir.path(), "8")) {
        (Ok(a), Ok(b)) => {
            let differing = a.iter().zip(&b).filter(|(x, y)| x != y).count() + a.len().abs_diff(b.len());
            vec![Check::at_most("7", "differing bytes between workers = 1 and workers = 8", differing as f64, 0.0)
                .with_detail(format!("{} bytes, {} lines", a.len(), a.iter().filter(|&&c| c == b'\n').count()))]
        }
        (Err(e), _) | (_, Err(e)) => vec![Check::at_most("7", "scan", f64::NAN, 0.0).with_detail(e)],
    }
}

fn main() -> ExitCode {
    println!("acceptance suite");
    let outcomes = [
        timed(1, "analytic critical fields", criterion_1),
        timed(2, "ridge reproduction at desk scale", || check_ridges(1)),
        timed(3, "dispersion oracle equivalence", || vec![check_dispersion(42)]),
        timed(4, "cross-identity suite", criterion_4),
        timed(5, "Stokes consistency", || {
            let start = Instant::now();
            with_runtime(check_stokes(), "5", start, 30.0)
        }),
        timed(6, "adiabatic dynamics", || {
            let start = Instant::now();
            with_runtime(check_adiabatic(), "6", start, 60.0)
        }),
        timed(7, "determinism across worker counts", criterion_7),
    ];
    let mut unexpected = 0;
    for o in &outcomes {
        let verdict = if o.passed() { "PASS" } else { "FAIL" };
        let bad = o.unexpected();
        let note = if !o.passed() && bad.is_empty() { " (expected failure, see below)" } else { "" };
        println!("{verdict} criterion {}: {} [{:.1?}]{note}", o.number, o.title, o.elapsed);
        for c in &o.checks {
            println!("    {c}");
            if !c.passed() {
                if let Some((_, why)) = EXPECTED_FAILURES.iter().find(|(id, _)| *id == c.id) {
                    println!("      expected: {why}");
                }
            }
        }
        unexpected += bad.len();
    }
    let passed = outcomes.iter().filter(|o| o.passed()).count();
    println!("{passed} of {} criteria pass; {unexpected} unexpected failing check(s)", outcomes.len());
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
