//! Acceptance suite: eight criteria, one PASS/FAIL line each. Runs without the
//! libtest harness so every line is printed; exits nonzero if any fails.

use std::f64::consts::LN_2;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use sparselab::dyadic::MAX_LEVEL;
use sparselab::sharpness::{
    dual_coefficient_error, fit_slope, ln_dual_coefficient, sweep, sweep_with_depth,
    truncation_depth, SharpnessConfig, SweepRow, Variant,
};
use sparselab::suites::{run_suite, Suite, SuiteOutcome};
use sparselab_cli::baselines::{Baselines, EMBEDDED};

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        passed,
        detail: detail.into(),
    }
}

fn within_budget(v: Verdict, elapsed: Duration, budget: Duration) -> Verdict {
    let ok = elapsed <= budget;
    let detail = format!(
        "{}; {:.2}s of {}s",
        v.detail,
        elapsed.as_secs_f64(),
        budget.as_secs()
    );
    verdict(v.passed && ok, detail)
}

fn rows_of<'a>(outcome: &'a SuiteOutcome, quantity: &str) -> impl Iterator<Item = (f64, f64)> + 'a {
    let quantity = quantity.to_string();
    outcome
        .rows
        .iter()
        .filter(move |r| r.quantity == quantity)
        .map(|r| (r.lhs, r.rhs))
}

fn lower_bound_chain() -> Verdict {
    let out = run_suite(Suite::Thm11, 7, 200).expect("suite runs");
    let instances = out
        .rows
        .iter()
        .map(|r| r.instance)
        .max()
        .map_or(0, |m| m + 1);
    let lower_ok = rows_of(&out, "lower_vs_char").all(|(lower, ch)| lower >= ch * (1.0 - 1e-12));
    let est_ok = rows_of(&out, "estimate_vs_lower").all(|(est, lower)| est >= lower * (1.0 - 1e-9));
    let worst = rows_of(&out, "lower_vs_char")
        .map(|(l, c)| l / c)
        .fold(f64::INFINITY, f64::min);
    verdict(
        instances == 200 && lower_ok && est_ok && out.violations.is_empty(),
        format!("{instances} instances, min lower/char {worst:.12}, estimate >= lower: {est_ok}"),
    )
}

fn slope_check(p: f64, q: f64, alpha: f64, variant: Variant, target: f64) -> (bool, String) {
    let cfg = SharpnessConfig::standard(p, q, alpha, variant).expect("valid config");
    let rows = sweep(&cfg).expect("sweep runs");
    let fit = fit_slope(&rows, 4).expect("fit");
    let window_ok = fit.eps_window == (2f64.powi(-12), 2f64.powi(-9));
    let ok = window_ok && (fit.slope - target).abs() <= 0.05;
    (
        ok,
        format!(
            "{variant} ({p},{q},{alpha}) slope {:.6} vs {target:.6}",
            fit.slope
        ),
    )
}

fn primal_slope() -> Verdict {
    let (ok, d) = slope_check(2.0, 4.0, 0.75, Variant::Primal, 0.375);
    verdict(ok, d)
}

fn dual_slopes() -> Verdict {
    let checks = [
        slope_check(2.0, 4.0, 0.75, Variant::Dual, 0.25),
        slope_check(4.0, 8.0, 0.875, Variant::Dual, 0.375),
        slope_check(4.0, 8.0, 0.875, Variant::Primal, 7.0 / 48.0),
    ];
    verdict(
        checks.iter().all(|c| c.0),
        checks
            .iter()
            .map(|c| c.1.clone())
            .collect::<Vec<_>>()
            .join("; "),
    )
}

const STANDARD: [(f64, f64, f64); 2] = [(2.0, 4.0, 0.75), (4.0, 8.0, 0.875)];

fn standard_sweeps(variant: Variant) -> Vec<((f64, f64, f64), Vec<SweepRow>)> {
    STANDARD
        .iter()
        .map(|&(p, q, a)| {
            let cfg = SharpnessConfig::standard(p, q, a, variant).unwrap();
            ((p, q, a), sweep(&cfg).unwrap())
        })
        .collect()
}

fn exact_identities() -> Verdict {
    let mut worst_f: f64 = 0.0;
    for ((p, _, _), rows) in standard_sweeps(Variant::Primal) {
        for r in rows {
            worst_f = worst_f.max((r.denominator / r.eps.powf(-1.0 / p) - 1.0).abs());
        }
    }
    // coefficient |I_k|^{-α} ε^{1/2} |I_k|^{-ε} ∫_0^{|I_k|} x^{2ε-1} dx, all in logs
    let mut worst_c: f64 = 0.0;
    let mut worst_machinery: f64 = 0.0;
    let mut rows_seen = 0;
    for ((_, _, alpha), rows) in standard_sweeps(Variant::Dual) {
        for r in rows {
            rows_seen += 1;
            let eps = r.eps;
            for k in 0..=r.k {
                let ln_h = -(k as f64) * LN_2;
                let ln_integral = 2.0 * eps * ln_h - (2.0 * eps).ln();
                let ln_value = -alpha * ln_h + 0.5 * eps.ln() - eps * ln_h + ln_integral;
                let d = (ln_value - ln_dual_coefficient(eps, alpha, k))
                    .exp_m1()
                    .abs();
                worst_c = worst_c.max(d);
            }
            worst_machinery = worst_machinery.max(dual_coefficient_error(eps, alpha, r.k).unwrap());
        }
    }
    verdict(
        worst_f <= 1e-9 && worst_c <= 1e-9 && worst_machinery <= 1e-9,
        format!(
            "f-norm max rel err {worst_f:.2e}; coefficient max rel err {worst_c:.2e} over all k <= K \
             ({rows_seen} rows), {worst_machinery:.2e} via interval integration for k <= {MAX_LEVEL}"
        ),
    )
}

fn oracle_equivalence() -> Verdict {
    let out = run_suite(Suite::Oracle, 7, 100).expect("suite runs");
    let rows: Vec<(f64, f64)> = rows_of(&out, "estimate_vs_oracle").collect();
    let worst = rows
        .iter()
        .map(|(e, o)| (e - o).abs() / o)
        .fold(0.0, f64::max);
    verdict(
        rows.len() >= 30 && worst <= 1e-4,
        format!("{} instances, max relative gap {worst:.2e}", rows.len()),
    )
}

fn bounded_ratio_suites() -> Verdict {
    let baselines = Baselines::parse(EMBEDDED).expect("embedded baselines parse");
    let mut failures = Vec::new();
    let mut summary = Vec::new();
    for suite in [
        Suite::Prop31,
        Suite::Lemma32,
        Suite::Lemma34,
        Suite::Lemma41,
        Suite::Lemma43,
        Suite::Thm42,
        Suite::Principal,
    ] {
        let out = run_suite(suite, 7, 100).expect("suite runs");
        for check in baselines.compare(&out) {
            if !check.passed {
                failures.push(format!("{suite}/{} outside baseline", check.quantity));
            }
        }
        failures.extend(out.violations.iter().map(|v| format!("{suite}: {v}")));
        if suite == Suite::Principal {
            let worst = rows_of(&out, "pointwise")
                .map(|(r, c)| r / c)
                .fold(0.0, f64::max);
            if worst > 1.0 {
                failures.push(format!(
                    "principal pointwise ratio {worst} exceeds the constant"
                ));
            }
            summary.push(format!("principal pointwise max {worst:.6} of constant"));
        } else {
            summary.push(format!("{suite} ok"));
        }
    }
    let passed = failures.is_empty();
    verdict(
        passed,
        if passed {
            summary.join(", ")
        } else {
            failures.join("; ")
        },
    )
}

fn truncation_robustness() -> Verdict {
    let mut worst: f64 = 0.0;
    for variant in [Variant::Primal, Variant::Dual] {
        for &(p, q, a) in &STANDARD {
            let cfg = SharpnessConfig::standard(p, q, a, variant).unwrap();
            let base = sweep(&cfg).unwrap();
            let doubled = sweep_with_depth(&cfg, |e| 2 * truncation_depth(e)).unwrap();
            for (x, y) in base.iter().zip(&doubled) {
                let mut pairs = vec![(x.numerator, y.numerator), (x.denominator, y.denominator)];
                if let (Some(u), Some(v)) = (x.exact_numerator, y.exact_numerator) {
                    pairs.push((u, v));
                }
                for (u, v) in pairs {
                    worst = worst.max((u / v - 1.0).abs());
                }
            }
        }
    }
    verdict(
        worst <= 1e-6,
        format!("max relative change {worst:.3e} when K doubles"),
    )
}

fn determinism() -> Verdict {
    let bin = env!("CARGO_BIN_EXE_sparselab");
    let run = || {
        let dir = tempfile::tempdir().expect("temp dir");
        let status = Command::new(bin)
            .env_remove("SPARSELAB_OUT")
            .args(["--out"])
            .arg(dir.path())
            .args([
                "verify", "--suite", "thm11", "--seed", "7", "--trials", "200",
            ])
            .output()
            .expect("binary runs");
        let csv = std::fs::read(dir.path().join("verify_thm11_seed7_n200.csv")).unwrap_or_default();
        (status.status.code(), csv)
    };
    let (a_code, a) = run();
    let (b_code, b) = run();
    verdict(
        a_code == Some(0) && b_code == Some(0) && !a.is_empty() && a == b,
        format!(
            "exit codes {a_code:?}/{b_code:?}, {} bytes, identical: {}",
            a.len(),
            a == b
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Verdict, u64); 8] = [
        (
            "1 lower-bound chain estimate >= indicator bound >= characteristic",
            lower_bound_chain,
            120,
        ),
        (
            "2 primal sharpness slope (2,4,3/4) ~ 0.375",
            primal_slope,
            60,
        ),
        (
            "3 dual slopes 0.25 / 0.375 and primal 0.146 crossover",
            dual_slopes,
            60,
        ),
        (
            "4 exact f-norm and dual coefficient identities",
            exact_identities,
            600,
        ),
        ("5 oracle equivalence on <= 3 atoms", oracle_equivalence, 60),
        (
            "6 bounded-ratio suites within frozen baselines",
            bounded_ratio_suites,
            600,
        ),
        (
            "7 truncation robustness under doubled K",
            truncation_robustness,
            600,
        ),
        ("8 deterministic thm11 CSV", determinism, 600),
    ];
    let mut failed = 0;
    for (name, check, budget) in criteria {
        let start = Instant::now();
        let v = within_budget(check(), start.elapsed(), Duration::from_secs(budget));
        if !v.passed {
            failed += 1;
        }
        println!(
            "[{}] criterion {name}: {}",
            if v.passed { "PASS" } else { "FAIL" },
            v.detail
        );
    }
    println!("acceptance: {} of 8 criteria passed", 8 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
