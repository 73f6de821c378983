//! The subcommands as library functions returning a report and an optional
//! CSV table; `main` only parses flags, writes files and maps exit codes.

use std::fmt;
use std::io;
use std::time::Instant;

use serde_json::{json, Value};
use sparselab::dyadic::DyadicInterval;
use sparselab::operator::{estimate_opnorm, indicator_lower_bound_at, theorem_rhs, RhsBranch};
use sparselab::sharpness::{
    expected_slope, fit_slope, sweep, SharpnessConfig, Variant, DEFAULT_FIT_WINDOW,
};
use sparselab::suites::{run_suite, Suite, SuiteOutcome};
use sparselab::testing::{check_prop31, testing_constants, verify_thm42};
use sparselab::weights::{
    ainfty, classical_ap, feasibility, one_weight_apq, two_weight_char, TestSet,
};

use crate::baselines::Baselines;
use crate::instance::{InstanceFile, ParseError};
use crate::report::{digest, fmt_float, RunReport, Table, Timing};

/// Slope tolerance of the sharpness reports.
pub const SLOPE_TOLERANCE: f64 = 0.05;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Parse(ParseError),
    Core(sparselab::Error),
    Baseline(String),
    Io(io::Error),
}

impl CliError {
    /// 0 success, 1 other, 2 usage, 3 parse, 4 parameter, 5 degenerate,
    /// 6 baseline violation.
    pub fn exit_code(&self) -> i32 {
        use sparselab::Error::*;
        match self {
            CliError::Usage(_) => 2,
            CliError::Parse(_) => 3,
            CliError::Core(Parameter(_) | Precondition(_)) => 4,
            CliError::Core(Degenerate(_)) => 5,
            CliError::Core(PartitionMismatch(_)) => 1,
            CliError::Baseline(_) => 6,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Parse(e) => write!(f, "parse error: {e}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Baseline(m) => write!(f, "baseline violation: {m}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<sparselab::Error> for CliError {
    fn from(e: sparselab::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<ParseError> for CliError {
    fn from(e: ParseError) -> Self {
        CliError::Parse(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

/// A finished command: the report, an optional table and the file stem both
/// are written under.
#[derive(Debug, Clone)]
pub struct Output {
    pub report: RunReport,
    pub table: Option<Table>,
    pub stem: String,
}

struct Clock {
    start: Instant,
    timings: Vec<Timing>,
}

impl Clock {
    fn new() -> Self {
        Self {
            start: Instant::now(),
            timings: Vec::new(),
        }
    }

    fn lap(&mut self, step: &str) {
        let now = Instant::now();
        self.timings.push(Timing {
            step: step.to_string(),
            millis: (now - self.start).as_secs_f64() * 1e3,
        });
        self.start = now;
    }
}

fn cube(q: &DyadicInterval) -> String {
    q.to_string()
}

fn report(
    command: String,
    statement: &str,
    digest: String,
    values: Value,
    clock: Clock,
) -> RunReport {
    RunReport {
        command,
        statement: statement.to_string(),
        digest,
        values,
        baselines: Vec::new(),
        violations: Vec::new(),
        passed: true,
        timings: clock.timings,
    }
}

fn load(text: &str) -> Result<(InstanceFile, sparselab::testing::Instance), CliError> {
    let file = InstanceFile::parse(text)?;
    let inst = file.build()?;
    Ok((file, inst))
}

fn instance_digest(command: &str, text: &str, depth: u32) -> String {
    digest(&[
        command.as_bytes(),
        text.as_bytes(),
        depth.to_string().as_bytes(),
    ])
}

/// All characteristics of an instance.
pub fn cmd_char(text: &str, depth: Option<u32>) -> Result<Output, CliError> {
    let mut clock = Clock::new();
    let (file, inst) = load(text)?;
    let depth = depth.unwrap_or(file.options.depth);
    let feas = feasibility(&inst.cfg);
    if !feas.feasible {
        return Err(sparselab::Error::Parameter(feas.diagnostic).into());
    }
    let test_set = TestSet::family(&inst.family);
    let two = two_weight_char(&inst.omega, &inst.sigma, &inst.cfg, &inst.family);
    let one = one_weight_apq(&inst.omega, inst.cfg.p, inst.cfg.q, &test_set);
    let ap = classical_ap(&inst.omega, &inst.sigma, inst.cfg.p, &test_set);
    let root = inst.family.root();
    let depth = depth.max(inst.family.max_level());
    let a_omega = ainfty(&inst.omega, &root, depth)?;
    let a_sigma = ainfty(&inst.sigma, &root, depth)?;
    clock.lap("characteristics");
    let char_json = |r: &sparselab::weights::CharacteristicReport| {
        json!({
            "value": r.value,
            "attained_at": cube(&r.attained_at),
            "test_set": r.test_set,
            "lower_estimate": r.lower_estimate,
        })
    };
    let values = json!({
        "instance": inst.describe(),
        "feasibility": {
            "feasible": feas.feasible,
            "margin": feas.margin,
            "diagonal": feas.diagonal,
            "sobolev_line": feas.sobolev_line,
            "diagnostic": feas.diagnostic,
        },
        "two_weight_char": char_json(&two),
        "one_weight_apq_omega": match &one {
            Ok(r) => char_json(r),
            Err(e) => json!({ "unavailable": e.to_string() }),
        },
        "classical_ap": char_json(&ap),
        "ainfty_omega": char_json(&a_omega),
        "ainfty_sigma": char_json(&a_sigma),
        "ainfty_depth": depth,
    });
    let digest = instance_digest("char", text, depth);
    Ok(Output {
        report: report(
            "char".into(),
            "two-weight, one-weight, classical A_p and A-infinity characteristics",
            digest,
            values,
            clock,
        ),
        table: None,
        stem: "char".into(),
    })
}

/// Operator-norm estimate, certified lower bound and theorem right-hand side.
pub fn cmd_opnorm(text: &str, depth: Option<u32>) -> Result<Output, CliError> {
    let mut clock = Clock::new();
    let (file, inst) = load(text)?;
    let depth = depth
        .unwrap_or(file.options.depth)
        .max(inst.family.max_level());
    let opts = file.options.ascent();
    let est = estimate_opnorm(&inst.family, &inst.cfg, &inst.omega, &inst.sigma, &opts)?;
    let (_, lower_at) =
        indicator_lower_bound_at(&inst.family, &inst.cfg, &inst.omega, &inst.sigma)?;
    clock.lap("ascent");
    let ch = two_weight_char(&inst.omega, &inst.sigma, &inst.cfg, &inst.family).value;
    let root = inst.family.root();
    let a_sigma = ainfty(&inst.sigma, &root, depth)?.value;
    let a_omega = ainfty(&inst.omega, &root, depth)?.value;
    let rhs = theorem_rhs(&inst.cfg, ch, a_sigma, a_omega);
    clock.lap("characteristics");
    let values = json!({
        "instance": inst.describe(),
        "estimate": est.ascent_value,
        "certified_lower": est.certified_lower,
        "lower_attained_at": cube(&lower_at),
        "two_weight_char": ch,
        "ainfty_sigma": a_sigma,
        "ainfty_omega": a_omega,
        "ainfty_depth": depth,
        "theorem_rhs": rhs.value,
        "theorem_rhs_branch": match rhs.branch {
            RhsBranch::Generic => "generic",
            RhsBranch::DiagonalFractional => "diagonal_fractional",
        },
        "lower_vs_char": est.certified_lower / ch,
        "estimate_vs_rhs": est.ascent_value / rhs.value,
        "converged": est.converged,
        "iterations": est.iterations,
        "restarts": est.restarts,
        "seed": est.seed,
        "maximizer": est.maximizer.values(),
    });
    let mut out = report(
        "opnorm".into(),
        "char <= indicator lower bound <= operator norm <~ theorem rhs",
        instance_digest("opnorm", text, depth),
        values,
        clock,
    );
    if est.ascent_value < est.certified_lower * (1.0 - 1e-9) {
        out.violations.push(format!(
            "estimate {} below certified lower bound {}",
            est.ascent_value, est.certified_lower
        ));
        out.passed = false;
    }
    Ok(Output {
        report: out,
        table: None,
        stem: "opnorm".into(),
    })
}

/// Testing constants with the characteristic bounds on them and the
/// operator-norm comparison.
pub fn cmd_testing(text: &str, depth: Option<u32>) -> Result<Output, CliError> {
    let mut clock = Clock::new();
    let (file, inst) = load(text)?;
    let depth = depth
        .unwrap_or(file.options.depth)
        .max(inst.family.max_level());
    let consts = testing_constants(&inst)?;
    let thm42 = verify_thm42(&inst, depth)?;
    clock.lap("testing constants");
    let prop31 = check_prop31(&inst, &file.options.ascent())?;
    clock.lap("operator norm");
    let values = json!({
        "instance": inst.describe(),
        "t": consts.t,
        "t_attained_at": cube(&consts.t_attained_at),
        "t_star": consts.t_star,
        "t_star_attained_at": consts.t_star_attained_at.as_ref().map(cube),
        "testing_vs_characteristic": {
            "t": serde_json::to_value(&thm42.t).expect("serializable"),
            "t_star": serde_json::to_value(&thm42.t_star).expect("serializable"),
        },
        "norm_vs_testing": serde_json::to_value(&prop31).expect("serializable"),
        "ainfty_depth": depth,
    });
    Ok(Output {
        report: report(
            "testing".into(),
            "testing constants T, T*; T, T* <~ char^r A-infinity powers; norm^r <~ T + T*",
            instance_digest("testing", text, depth),
            values,
            clock,
        ),
        table: None,
        stem: "testing".into(),
    })
}

fn suite_table(outcome: &SuiteOutcome, digest: &str) -> Table {
    let mut t = Table::new(
        format!(
            "verify suite={} seed={} trials={} statement=\"{}\" digest={} (lhs, rhs and ratio are dimensionless)",
            outcome.suite,
            outcome.seed,
            outcome.trials,
            outcome.suite.statement(),
            digest
        ),
        &["instance", "quantity", "lhs", "rhs", "ratio"],
    );
    for row in &outcome.rows {
        t.push(vec![
            row.instance.to_string(),
            row.quantity.clone(),
            fmt_float(row.lhs),
            fmt_float(row.rhs),
            row.ratio.map(fmt_float).unwrap_or_default(),
        ]);
    }
    t
}

/// Runs a seeded suite and compares its ratio ranges with `baselines`. With
/// `refresh`, the baselines of this suite are replaced instead and the run
/// passes unless an exact check failed.
pub fn cmd_verify(
    suite: Suite,
    seed: u64,
    trials: usize,
    baselines: &mut Baselines,
    refresh: bool,
) -> Result<Output, CliError> {
    if trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let mut clock = Clock::new();
    let outcome = run_suite(suite, seed, trials)?;
    clock.lap("suite");
    let command = format!("verify --suite {suite} --seed {seed} --trials {trials}");
    let digest = digest(&[
        b"verify",
        suite.name().as_bytes(),
        &seed.to_le_bytes(),
        &trials.to_le_bytes(),
    ]);
    let table = suite_table(&outcome, &digest);
    if refresh {
        baselines.refresh(&outcome);
    }
    let checks = baselines.compare(&outcome);
    let values = json!({
        "suite": suite.name(),
        "seed": seed,
        "trials": trials,
        "rows": outcome.rows.len(),
        "ranges": serde_json::to_value(&outcome.ranges).expect("serializable"),
    });
    let mut out = report(command, suite.statement(), digest, values, clock);
    out.passed = outcome.violations.is_empty() && checks.iter().all(|c| c.passed);
    out.baselines = checks;
    out.violations = outcome.violations;
    Ok(Output {
        report: out,
        table: Some(table),
        stem: format!("verify_{suite}_seed{seed}_n{trials}"),
    })
}

/// Sweep over the ε grid `2^-min_exp, …, 2^-max_exp` with the slope fit.
pub fn cmd_sharpness(
    variant: Variant,
    p: f64,
    q: f64,
    alpha: f64,
    min_exp: i32,
    max_exp: i32,
) -> Result<Output, CliError> {
    let mut clock = Clock::new();
    let cfg = SharpnessConfig::with_exponents(p, q, alpha, variant, min_exp, max_exp)?;
    let rows = sweep(&cfg)?;
    clock.lap("sweep");
    let window = DEFAULT_FIT_WINDOW.min(rows.len());
    let fit = fit_slope(&rows, window)?;
    let expected = expected_slope(p, q, alpha, Some(variant));
    let combined = expected_slope(p, q, alpha, None);
    let command = format!(
        "sharpness --variant {variant} --p {p} --q {q} --alpha {alpha} --eps-min-exp {min_exp} --eps-max-exp {max_exp}"
    );
    let digest = digest(&[
        b"sharpness",
        variant.name().as_bytes(),
        &p.to_bits().to_le_bytes(),
        &q.to_bits().to_le_bytes(),
        &alpha.to_bits().to_le_bytes(),
        &min_exp.to_le_bytes(),
        &max_exp.to_le_bytes(),
    ]);
    let (num, den) = match variant {
        Variant::Primal => ("af_lower_norm", "f_norm"),
        Variant::Dual => ("lhs_norm", "rhs_norm"),
    };
    let mut table = Table::new(
        format!(
            "{command} digest={digest} (eps and characteristic dimensionless; K = number of shells; tail_bound relative)"
        ),
        &["eps", "K", "characteristic", "ratio", "tail_bound", num, den],
    );
    for r in &rows {
        table.push(vec![
            fmt_float(r.eps),
            r.k.to_string(),
            fmt_float(r.characteristic),
            fmt_float(r.ratio),
            fmt_float(r.tail_bound),
            fmt_float(r.numerator),
            fmt_float(r.denominator),
        ]);
    }
    let difference = (fit.slope - expected).abs();
    let values = json!({
        "variant": variant.name(),
        "p": p,
        "q": q,
        "alpha": alpha,
        "fit": serde_json::to_value(fit).expect("serializable"),
        "expected_slope": expected,
        "expected_slope_combined": combined,
        "abs_difference": difference,
        "tolerance": SLOPE_TOLERANCE,
        "within_tolerance": difference <= SLOPE_TOLERANCE,
        "max_tail_bound": rows.iter().map(|r| r.tail_bound).fold(0.0, f64::max),
    });
    let mut out = report(
        command,
        "operator norm grows at least like char^max(p' alpha / q, alpha - 1/2)",
        digest,
        values,
        clock,
    );
    out.passed = difference <= SLOPE_TOLERANCE;
    Ok(Output {
        report: out,
        table: Some(table),
        stem: format!("sharpness_{variant}_p{p}_q{q}_alpha{alpha}"),
    })
}
