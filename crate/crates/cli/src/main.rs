use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sparselab::sharpness::{Variant, DEFAULT_EPS_EXPONENTS};
use sparselab::suites::Suite;
use sparselab_cli::baselines::{self, Baselines};
use sparselab_cli::report::{resolve_out_dir, write_outputs};
use sparselab_cli::{
    cmd_char, cmd_opnorm, cmd_sharpness, cmd_testing, cmd_verify, CliError, Output,
};

/// Two-weight inequalities for sparse operators on dyadic intervals.
#[derive(Parser)]
#[command(name = "sparselab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory for reports and CSV tables (SPARSELAB_OUT overrides it).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct InstanceArgs {
    /// JSON instance file.
    #[arg(long)]
    instance: PathBuf,
    /// Depth of the truncated maximal function for A-infinity.
    #[arg(long)]
    depth: Option<u32>,
}

#[derive(Subcommand)]
enum Command {
    /// All characteristics of an instance.
    Char(InstanceArgs),
    /// Operator-norm estimate, certified lower bound and theorem right-hand side.
    Opnorm(InstanceArgs),
    /// Testing constants and their comparisons.
    Testing(InstanceArgs),
    /// Run a seeded verification suite against the frozen baselines.
    Verify {
        #[arg(long, value_parser = parse_suite)]
        suite: Suite,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Baselines file (default: the versioned file of this crate).
        #[arg(long)]
        baselines: Option<PathBuf>,
        /// Rewrite this suite's baselines from the run instead of checking them.
        #[arg(long)]
        refresh_baselines: bool,
    },
    /// Sharpness sweep over eps = 2^-min, ..., 2^-max with the log-log slope fit.
    Sharpness {
        #[arg(long, value_parser = parse_variant)]
        variant: Variant,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        q: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = DEFAULT_EPS_EXPONENTS.0)]
        eps_min_exp: i32,
        #[arg(long, default_value_t = DEFAULT_EPS_EXPONENTS.1)]
        eps_max_exp: i32,
    },
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse().map_err(|_| {
        let names: Vec<&str> = Suite::ALL.iter().map(|s| s.name()).collect();
        format!("unknown suite '{s}' (expected one of {})", names.join(", "))
    })
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse().map_err(|e: sparselab::Error| e.to_string())
}

fn read_instance(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| {
        CliError::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

fn run(cli: Cli) -> Result<Output, CliError> {
    match cli.command {
        Command::Char(a) => cmd_char(&read_instance(&a.instance)?, a.depth),
        Command::Opnorm(a) => cmd_opnorm(&read_instance(&a.instance)?, a.depth),
        Command::Testing(a) => cmd_testing(&read_instance(&a.instance)?, a.depth),
        Command::Verify {
            suite,
            seed,
            trials,
            baselines: path,
            refresh_baselines,
        } => {
            let text = match &path {
                Some(p) => fs::read_to_string(p)?,
                None => baselines::EMBEDDED.to_string(),
            };
            let mut base = Baselines::parse(&text).map_err(CliError::Usage)?;
            let out = cmd_verify(suite, seed, trials, &mut base, refresh_baselines)?;
            if refresh_baselines {
                let target = path.unwrap_or_else(baselines::default_path);
                fs::write(&target, base.render())?;
                eprintln!("baselines for {suite} written to {}", target.display());
            }
            Ok(out)
        }
        Command::Sharpness {
            variant,
            p,
            q,
            alpha,
            eps_min_exp,
            eps_max_exp,
        } => cmd_sharpness(variant, p, q, alpha, eps_min_exp, eps_max_exp),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out_dir = resolve_out_dir(cli.out.as_deref());
    let result = run(cli).and_then(|out| {
        let written = write_outputs(&out_dir, &out.stem, out.table.as_ref(), &out.report)?;
        print!("{}", out.report.to_json());
        for path in written {
            eprintln!("wrote {}", path.display());
        }
        if out.report.passed {
            Ok(())
        } else {
            let mut reasons = out.report.violations.clone();
            reasons.extend(
                out.report
                    .baselines
                    .iter()
                    .filter(|b| !b.passed)
                    .map(|b| format!("{} outside its baseline", b.quantity)),
            );
            if reasons.is_empty() {
                reasons.push("check failed".into());
            }
            Err(CliError::Baseline(reasons.join("; ")))
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sparselab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
