//! The `bmg` command line: `integrate`, `check <identity>` and `girsanov`.
//!
//! Exit status: 0 when every record passes, 2 for unusable input, 3 when an engine cannot
//! reach the requested accuracy, 4 when a hypothesis or identity check fails.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::birkhoff::{b1_integrate, b2_integrate, check_change_of_variable, check_substitution, EngineOptions};
use crate::conditional::{conditional_expectation, ConditionalExpectation, SubSigmaAlgebra};
use crate::config::InputFile;
use crate::corpus::{finite_case, nested_case};
use crate::error::{BmgError, Result};
use crate::func::{eval_terms, Product, ScalarFn, VectorFn, VectorTable};
use crate::girsanov::{
    build_filtration, fixture_brownian_walk, fixture_exact_synthetic, is_martingale, run_girsanov, BrownianParams,
    ProcessModel,
};
use crate::measure::ScalarMeasure;
use crate::report::{marginal_csv, write_csv, Record, Report};
use crate::space::{AtomSet, Point};
use crate::vector::{Norm, VectorValue};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NON_CONVERGENCE: i32 = 3;
pub const EXIT_FAILED_CHECK: i32 = 4;

pub const REPORT_FILE: &str = "report.json";
pub const MARGINAL_FILE: &str = "marginals.csv";

/// Default identity tolerance for the checkers.
const CHECK_TOL: f64 = 1e-10;
const DEFAULT_CASES: usize = 100;
/// Largest number of generating blocks for which every union is checked.
const MAX_UNION_BLOCKS: usize = 12;

fn positive(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
        Ok(_) => Err("must be a positive finite number".into()),
        Err(e) => Err(e.to_string()),
    }
}

#[derive(Debug, Parser)]
#[command(name = "bmg", version, about = "Birkhoff integrals of vector measures and the Girsanov change of measure")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Output {
    /// Directory receiving report.json (and marginals.csv)
    #[arg(long, default_value = "bmg-out")]
    #[serde(skip)]
    pub out: PathBuf,
    /// Store wall-clock time in the report
    #[arg(long)]
    #[serde(skip)]
    pub timing: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate a file-defined integrand with the B1 or B2 engine
    Integrate(IntegrateArgs),
    /// Check an identity on a file or a seeded random corpus
    Check {
        #[command(subcommand)]
        which: CheckCommand,
    },
    /// Check the hypotheses, build Q and verify the marginal and martingale statements
    Girsanov(GirsanovArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    B1,
    B2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Integrand {
    /// The constant 1
    One,
    /// The file's `scalar` section
    Input,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct IntegrateArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub mode: Mode,
    /// Scalar integrand for b2
    #[arg(long, value_enum, default_value = "input")]
    pub f: Integrand,
    #[arg(long, default_value_t = 1e-9, value_parser = positive)]
    pub eps: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(skip)]
    pub output: Output,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CheckArgs {
    /// Input file; without it a random corpus is used
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Number of random cases
    #[arg(long)]
    pub random: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-9, value_parser = positive)]
    pub eps: f64,
    #[arg(long, default_value_t = CHECK_TOL, value_parser = positive)]
    pub tol: f64,
    #[command(flatten)]
    #[serde(skip)]
    pub output: Output,
}

#[derive(Debug, Subcommand)]
pub enum CheckCommand {
    /// ∫ f·F dμ against ∫ f dM with M = ∫ F dμ
    Substitution(CheckArgs),
    /// ∫ g(f) dM against the pushforward sum
    Changevar(CheckArgs),
    /// Defining identity, linearity, tower and pull-out laws
    Condexp(CondexpArgs),
    /// Martingale identities of a path process
    Martingale(CheckArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CondexpArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub check: CheckArgs,
    /// Only the tower law
    #[arg(long)]
    pub tower: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Fixture {
    Exact,
    Brownian,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GirsanovArgs {
    /// Process file; alternative to --fixture
    #[arg(long, conflicts_with = "fixture", required_unless_present = "fixture")]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub fixture: Option<Fixture>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 16)]
    pub steps: usize,
    #[arg(long, default_value_t = 0.0625, value_parser = positive)]
    pub dt: f64,
    #[arg(long, default_value_t = 0.01, value_parser = positive)]
    pub delta: f64,
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    pub q: f64,
    /// Vector weight v of the Brownian fixture, comma separated
    #[arg(long, value_delimiter = ',', default_value = "1,2", allow_negative_numbers = true)]
    pub weight: Vec<f64>,
    #[arg(long, value_enum, default_value = "l2")]
    pub norm: Norm,
    /// Check tolerance; defaults to 1e-10, or the derived bound for the Brownian fixture
    #[arg(long, value_parser = positive)]
    pub tol: Option<f64>,
    #[command(flatten)]
    #[serde(skip)]
    pub output: Output,
}

impl ValueEnum for Norm {
    fn value_variants<'a>() -> &'a [Self] {
        &Norm::ALL
    }

    fn to_possible_value(&self) -> Option<clap::builder::PossibleValue> {
        Some(clap::builder::PossibleValue::new(match self {
            Norm::L1 => "l1",
            Norm::L2 => "l2",
            Norm::Linf => "linf",
        }))
    }
}

/// Exit status for an error.
pub fn exit_code(e: &BmgError) -> i32 {
    if e.is_non_convergence() {
        EXIT_NON_CONVERGENCE
    } else if e.is_assumption_violation() || matches!(e, BmgError::ConstructionInfeasible { .. }) {
        EXIT_FAILED_CHECK
    } else {
        EXIT_INPUT
    }
}

fn echo(args: &impl Serialize) -> BTreeMap<String, serde_json::Value> {
    match serde_json::to_value(args).expect("arguments serialize") {
        serde_json::Value::Object(map) => map.into_iter().collect(),
        _ => BTreeMap::new(),
    }
}

fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var("BMG_THREADS") {
        Err(_) => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(BmgError::InvalidInput(format!("BMG_THREADS must be a positive integer, got `{s}`"))),
        },
    }
}

/// Parses `args` (program name first) and runs the command. Returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    if let Err(e) = threads_from_env() {
        eprintln!("error: {e}");
        return EXIT_INPUT;
    }
    execute(&cli.command)
}

fn output_of(cmd: &Command) -> &Output {
    match cmd {
        Command::Integrate(a) => &a.output,
        Command::Check { which } => match which {
            CheckCommand::Substitution(a) | CheckCommand::Changevar(a) | CheckCommand::Martingale(a) => &a.output,
            CheckCommand::Condexp(a) => &a.check.output,
        },
        Command::Girsanov(a) => &a.output,
    }
}

pub fn execute(cmd: &Command) -> i32 {
    let start = Instant::now();
    let output = output_of(cmd);
    let mut csv = None;
    let result = match cmd {
        Command::Integrate(a) => cmd_integrate(a),
        Command::Check { which } => match which {
            CheckCommand::Substitution(a) => cmd_substitution(a),
            CheckCommand::Changevar(a) => cmd_changevar(a),
            CheckCommand::Condexp(a) => cmd_condexp(a),
            CheckCommand::Martingale(a) => cmd_martingale(a),
        },
        Command::Girsanov(a) => cmd_girsanov(a, &mut csv),
    };
    let (mut report, code) = match result {
        Ok(r) => {
            let code = if r.pass { EXIT_PASS } else { EXIT_FAILED_CHECK };
            (r, code)
        }
        Err(Failure::Input(e)) => {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
        Err(Failure::Run(mut r, e)) => {
            r.fail_with(&e);
            let code = exit_code(&e);
            if code == EXIT_INPUT {
                return code;
            }
            (r, code)
        }
    };
    let elapsed = start.elapsed().as_secs_f64();
    if output.timing {
        report.wall_time_s = Some(elapsed);
    }
    if let Err(e) = write_outputs(&output.out, &report, csv.as_deref()) {
        eprintln!("error: {e}");
        return EXIT_INPUT;
    }
    summarize(&report, &output.out);
    eprintln!("elapsed {elapsed:.3} s");
    code
}

fn write_outputs(dir: &Path, report: &Report, csv: Option<&str>) -> Result<()> {
    std::fs::create_dir_all(dir)
        .map_err(|e| BmgError::InvalidInput(format!("cannot create {}: {e}", dir.display())))?;
    report.write(&dir.join(REPORT_FILE))?;
    if let Some(csv) = csv {
        write_csv(&dir.join(MARGINAL_FILE), csv)?;
    }
    Ok(())
}

fn summarize(report: &Report, dir: &Path) {
    let failed = report.records.iter().filter(|r| !r.pass).count();
    if report.records.len() <= 16 {
        for r in &report.records {
            let gap = r.gap.map_or("non-finite".to_string(), |g| format!("{g:.3e}"));
            println!("{:<4} {:<40} gap {gap} (tol {:.1e})", if r.pass { "ok" } else { "FAIL" }, r.name, r.tol);
        }
    }
    println!(
        "{}: {} records, {} failed, max gap {}, {}",
        report.command,
        report.records.len(),
        failed,
        report.max_gap().map_or("-".into(), |g| format!("{g:.3e}")),
        if report.pass { "PASS" } else { "FAIL" }
    );
    if let Some(e) = &report.error {
        println!("error: {e}");
    }
    println!("report: {}", dir.join(REPORT_FILE).display());
}

enum Failure {
    /// Nothing sensible to report.
    Input(BmgError),
    /// Stopped mid-run; the partial report is still written.
    Run(Report, BmgError),
}

impl From<BmgError> for Failure {
    fn from(e: BmgError) -> Self {
        Failure::Input(e)
    }
}

type Outcome = std::result::Result<Report, Failure>;

fn load(path: &Path) -> Result<InputFile> {
    InputFile::load(path).map_err(|e| BmgError::InvalidInput(format!("{}: {e}", path.display())))
}

fn cmd_integrate(a: &IntegrateArgs) -> Outcome {
    let file = load(&a.input)?;
    let space = file.space()?;
    let opts = EngineOptions::default().with_seed(a.seed).with_norm(file.norm());
    let whole = space.whole();
    let command = format!("integrate --mode {}", if a.mode == Mode::B1 { "b1" } else { "b2" });
    let mut report = Report::new(command, echo(a));
    let result = match a.mode {
        Mode::B1 => {
            let mu = file.scalar_measure(&space)?;
            let f = file.integrand(&space)?;
            b1_integrate(&f, &mu, &whole, a.eps, &opts)
        }
        Mode::B2 => {
            let m = file.vector_measure(&space)?;
            match a.f {
                Integrand::One => b2_integrate(&|_: Point| 1.0, &m, &whole, a.eps, &opts),
                Integrand::Input => b2_integrate(&file.scalar(&space)?, &m, &whole, a.eps, &opts),
            }
        }
    };
    let r = match result {
        Ok(r) => r,
        Err(e) if e.is_non_convergence() => return Err(Failure::Run(report, e)),
        Err(e) => return Err(e.into()),
    };
    let mut rec = Record::new("integral", r.certified_bound, a.eps);
    rec.lhs = Some(r.value.coords().to_vec());
    report.push(rec);
    report.details = Some(serde_json::json!({
        "value": r.value.coords(),
        "norm": r.value.norm_tag(),
        "certified_bound": r.certified_bound,
        "blocks": r.partition.len(),
        "refinement_rounds": r.refinement_rounds,
    }));
    Ok(report)
}

fn corpus_size(a: &CheckArgs) -> usize {
    a.random.unwrap_or(DEFAULT_CASES)
}

fn opts_for(a: &CheckArgs, norm: Norm) -> EngineOptions {
    EngineOptions::default().with_seed(a.seed).with_norm(norm)
}

/// Pushes one identity record, or turns an engine error into a partial report.
fn push_identity(
    report: &mut Report,
    name: &str,
    case: Option<usize>,
    tol: f64,
    check: Result<crate::birkhoff::IdentityCheck>,
) -> std::result::Result<(), BmgError> {
    let c = check?;
    let mut rec = Record::new(name, c.gap, tol).sides(c.lhs.coords(), c.rhs.coords());
    rec.case = case;
    report.push(rec);
    Ok(())
}

fn cmd_substitution(a: &CheckArgs) -> Outcome {
    let mut report = Report::new("check substitution", echo(a));
    let outcome = (|| -> Result<()> {
        match &a.input {
            Some(path) => {
                let file = load(path)?;
                let space = file.space()?;
                let (f, big_f, mu) = (file.scalar(&space)?, file.integrand(&space)?, file.scalar_measure(&space)?);
                let check = check_substitution(&f, &big_f, &mu, a.eps, &opts_for(a, file.norm()));
                push_identity(&mut report, "substitution", None, a.tol, check)
            }
            None => {
                for i in 0..corpus_size(a) {
                    let c = finite_case(a.seed, i);
                    let check = check_substitution(&c.f, &c.big_f, &c.mu, a.eps, &opts_for(a, c.norm));
                    push_identity(&mut report, "substitution", Some(i), a.tol, check)?;
                }
                Ok(())
            }
        }
    })();
    finish(report, outcome)
}

fn cmd_changevar(a: &CheckArgs) -> Outcome {
    let mut report = Report::new("check changevar", echo(a));
    let outcome = (|| -> Result<()> {
        match &a.input {
            Some(path) => {
                let file = load(path)?;
                let space = file.space()?;
                let (f, m, g) = (file.scalar(&space)?, file.vector_measure(&space)?, file.outer()?);
                let outer = |x: f64| eval_terms(&g, x);
                let check = check_change_of_variable(&outer, &f, &m, a.eps, &opts_for(a, file.norm()));
                push_identity(&mut report, "changevar", None, a.tol, check)
            }
            None => {
                for i in 0..corpus_size(a) {
                    let c = finite_case(a.seed, i);
                    let outer = |x: f64| eval_terms(&c.g, x);
                    let check = check_change_of_variable(&outer, &c.f, &c.m, a.eps, &opts_for(a, c.norm));
                    push_identity(&mut report, "changevar", Some(i), a.tol, check)?;
                }
                Ok(())
            }
        }
    })();
    finish(report, outcome)
}

fn finish(report: Report, outcome: Result<()>) -> Outcome {
    match outcome {
        Ok(()) => Ok(report),
        Err(e) if exit_code(&e) == EXIT_INPUT => Err(Failure::Input(e)),
        Err(e) => Err(Failure::Run(report, e)),
    }
}

/// Largest gap between two conditional expectations over blocks that are not μ-null.
fn block_gap(z: &ConditionalExpectation, expected: &[VectorValue]) -> (f64, usize) {
    z.block_values()
        .iter()
        .zip(expected)
        .zip(z.null_blocks())
        .enumerate()
        .filter(|(_, (_, &null))| !null)
        .map(|(b, ((x, y), _))| (x.dist(y), b))
        .fold((0.0, 0), |acc, x| if x.0 > acc.0 { x } else { acc })
}

/// `max_E ‖∫_E F dμ − ∫_E Z dμ‖` over every union of generating blocks (or the blocks alone
/// when there are too many to enumerate).
fn defining_gap<F: VectorFn + ?Sized>(
    big_f: &F,
    z: &ConditionalExpectation,
    mu: &ScalarMeasure,
    eps: f64,
    opts: &EngineOptions,
) -> Result<f64> {
    let blocks = z.sub_algebra().blocks();
    let sets: Vec<AtomSet> = if blocks.len() <= MAX_UNION_BLOCKS {
        (1u32..1 << blocks.len())
            .map(|mask| {
                blocks
                    .iter()
                    .enumerate()
                    .filter(|(b, _)| mask >> b & 1 == 1)
                    .fold(AtomSet::empty(), |acc, (_, s)| acc.union(s))
            })
            .collect()
    } else {
        blocks.to_vec()
    };
    let mut gap: f64 = 0.0;
    for set in &sets {
        let lhs = b1_integrate(big_f, mu, set, eps, opts)?.value;
        let rhs = b1_integrate(z, mu, set, eps, opts)?.value;
        gap = gap.max(lhs.dist(&rhs));
    }
    Ok(gap)
}

fn combine(alpha: f64, f: &VectorTable, beta: f64, g: &VectorTable) -> Result<VectorTable> {
    VectorTable::new(
        f.rows()
            .iter()
            .zip(g.rows())
            .map(|(x, y)| x.iter().zip(y).map(|(a, b)| alpha * a + beta * b).collect())
            .collect(),
    )
}

fn cmd_condexp(a: &CondexpArgs) -> Outcome {
    let c = &a.check;
    let mut report = Report::new(if a.tower { "check condexp --tower" } else { "check condexp" }, echo(a));
    let outcome = (|| -> Result<()> {
        if let Some(path) = &c.input {
            let file = load(path)?;
            let space = file.space()?;
            let (big_f, mu) = (file.integrand(&space)?, file.scalar_measure(&space)?);
            let sub = SubSigmaAlgebra::from_partition(file.partition(&space)?);
            let opts = opts_for(c, file.norm());
            let z = conditional_expectation(&big_f, &mu, &sub, c.eps, &opts)?;
            report.push(Record::new("defining", defining_gap(&big_f, &z, &mu, c.eps, &opts)?, c.tol));
            return Ok(());
        }
        for i in 0..corpus_size(c) {
            let n = nested_case(c.seed, i);
            let opts = opts_for(c, n.norm);
            let coarse = SubSigmaAlgebra::from_partition(n.coarse.clone());
            let fine = SubSigmaAlgebra::from_partition(n.fine.clone());
            let z = conditional_expectation(&n.big_f, &n.mu, &coarse, c.eps, &opts)?;
            if !a.tower {
                report.push(Record::new("defining", defining_gap(&n.big_f, &z, &n.mu, c.eps, &opts)?, c.tol).case(i));
                let zg = conditional_expectation(&n.big_g, &n.mu, &coarse, c.eps, &opts)?;
                let mixed = combine(n.alpha, &n.big_f, n.beta, &n.big_g)?;
                let zm = conditional_expectation(&mixed, &n.mu, &coarse, c.eps, &opts)?;
                let expected: Vec<VectorValue> = z
                    .block_values()
                    .iter()
                    .zip(zg.block_values())
                    .map(|(x, y)| &x.scale(n.alpha) + &y.scale(n.beta))
                    .collect();
                report.push(Record::new("linearity", block_gap(&zm, &expected).0, c.tol).case(i));
            }
            let zf = conditional_expectation(&n.big_f, &n.mu, &fine, c.eps, &opts)?;
            let zt = conditional_expectation(&zf, &n.mu, &coarse, c.eps, &opts)?;
            report.push(Record::new("tower", block_gap(&zt, z.block_values()).0, c.tol).case(i));
            if !a.tower {
                let product = Product { scalar: &n.h, vector: &n.big_f };
                let zp = conditional_expectation(&product, &n.mu, &coarse, c.eps, &opts)?;
                let expected: Vec<VectorValue> = z
                    .block_values()
                    .iter()
                    .zip(coarse.blocks())
                    .map(|(x, b)| x.scale(n.h.eval(Point::Atom(b.ids()[0]))))
                    .collect();
                report.push(Record::new("pullout", block_gap(&zp, &expected).0, c.tol).case(i));
            }
        }
        Ok(())
    })();
    finish(report, outcome)
}

fn cmd_martingale(a: &CheckArgs) -> Outcome {
    let mut report = Report::new("check martingale", echo(a));
    let path = a
        .input
        .as_ref()
        .ok_or_else(|| BmgError::InvalidInput("check martingale needs --input with a process".into()))?;
    let file = load(path)?;
    let space = file.space()?;
    let p = file.process(&space)?;
    let filt = build_filtration(&p)?;
    let x: Vec<Vec<f64>> = (0..=p.last()).map(|k| p.values(k).expect("path process")).collect();
    let r = is_martingale(&x, p.measure().expect("path process"), &filt, a.tol)?;
    for e in &r.entries {
        let name = format!("s={} v={} block={:?}", e.s, e.v, e.block);
        report.push(Record::new(name, e.gap, a.tol).sides(&e.later.0, &e.earlier.0));
    }
    Ok(report)
}

fn cmd_girsanov(a: &GirsanovArgs, csv: &mut Option<String>) -> Outcome {
    let mut report = Report::new("girsanov", echo(a));
    let mut fixture = serde_json::Map::new();
    let (p, tol): (ProcessModel, f64) = match (a.fixture, &a.input) {
        (Some(Fixture::Exact), _) => {
            let fx = match fixture_exact_synthetic(a.seed) {
                Ok(fx) => fx,
                Err(e) => return Err(Failure::Run(report, e)),
            };
            fixture.insert("steps".into(), fx.steps.into());
            fixture.insert("half_width".into(), fx.half_width.into());
            fixture.insert("sigma_units".into(), fx.sigma_units.into());
            fixture.insert("attempts".into(), fx.attempts.into());
            (fx.process, a.tol.unwrap_or(CHECK_TOL))
        }
        (Some(Fixture::Brownian), _) => {
            if a.weight.is_empty() {
                return Err(BmgError::InvalidInput("--weight needs at least one coordinate".into()).into());
            }
            let params = BrownianParams {
                steps: a.steps,
                dt: a.dt,
                delta: a.delta,
                q: a.q,
                weight: VectorValue::new(a.weight.clone(), a.norm),
            };
            let fx = fixture_brownian_walk(&params)?;
            fixture.insert("derived_tolerance".into(), fx.tolerance.into());
            fixture.insert("pitch".into(), fx.pitch.into());
            fixture.insert("sigma_units".into(), fx.sigma_units.into());
            fixture.insert("half_width".into(), fx.half_width.into());
            fixture.insert("shift_per_step".into(), fx.shift_per_step.into());
            fixture.insert("trailing_tail".into(), fx.trailing_tail.into());
            fixture.insert("leading_tail".into(), fx.leading_tail.into());
            fixture.insert("tilt_defect".into(), fx.tilt_defect.into());
            fixture.insert("tilted_mean_defect".into(), fx.tilted_mean_defect.into());
            (fx.process, a.tol.unwrap_or(fx.tolerance))
        }
        (None, Some(path)) => {
            let file = load(path)?;
            let space = file.space()?;
            (file.process(&space)?, a.tol.unwrap_or(CHECK_TOL))
        }
        (None, None) => return Err(BmgError::InvalidInput("give --input or --fixture".into()).into()),
    };
    let (bundle, _) = match run_girsanov(&p, tol) {
        Ok(r) => r,
        Err(e) if exit_code(&e) == EXIT_INPUT => return Err(e.into()),
        Err(e) => return Err(Failure::Run(report, e)),
    };
    let asm = &bundle.assumptions;
    report.push(Record::new("A1a null integral", asm.a1a.max_norm, tol));
    report.push(Record::new("A1b density ratio", asm.a1b.max_gap, tol));
    report.push(Record::new("A1c ratio martingale", asm.a1c.max_gap, tol));
    report.push(Record::new("A2 weighted martingale", asm.a2.max_gap, tol));
    let t6 = &bundle.theorem6;
    report.push(Record::new("marginals Q(w~) vs M(w)", t6.max_gap, tol));
    report.push(Record::new("total mass Q(T) vs M(T)", t6.mass_gap, tol).sides(&bundle.q_total.0, &bundle.m_total.0));
    let t7 = &bundle.theorem7;
    report.push(Record::new("Q-martingale of w~", t7.martingale.max_gap, tol));
    report.push(Record::new("chain (i)", t7.chain_i.max_gap, tol));
    report.push(Record::new("chain (ii)", t7.chain_ii.max_gap, tol));
    report.push(Record::new("chain (iii)", t7.chain_iii.max_gap, tol));
    *csv = Some(marginal_csv(p.times(), t6, p.dim()));

    let mut details = serde_json::to_value(&bundle).expect("bundle serializes");
    // the marginal rows live in the CSV; the per-point ratio rows are summarized per time
    if let Some(t6) = details.get_mut("theorem6").and_then(|v| v.as_object_mut()) {
        let rows = t6.remove("rows").and_then(|r| r.as_array().map(Vec::len)).unwrap_or(0);
        t6.insert("row_count".into(), rows.into());
    }
    if let Some(eq5) = details.pointer_mut("/assumptions/a1b/eq5").and_then(|v| v.as_array_mut()) {
        for entry in eq5.iter_mut().filter_map(|e| e.as_object_mut()) {
            let n = entry.remove("singletons").and_then(|r| r.as_array().map(Vec::len)).unwrap_or(0);
            entry.insert("singleton_count".into(), n.into());
        }
    }
    if let Some(obj) = details.as_object_mut() {
        obj.insert("times".into(), p.times().into());
        obj.insert("atoms_or_states".into(), p.size().into());
        if !fixture.is_empty() {
            obj.insert("fixture".into(), fixture.into());
        }
    }
    report.details = Some(details);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn exit_codes_are_distinct() {
        let nc = BmgError::NonConvergence { best_bound: 1.0, requested: 0.1, blocks: 3 };
        assert_eq!(exit_code(&nc), EXIT_NON_CONVERGENCE);
        assert_eq!(exit_code(&nc.on_side("lhs")), EXIT_NON_CONVERGENCE);
        assert_eq!(exit_code(&BmgError::AssumptionViolation("x".into())), EXIT_FAILED_CHECK);
        assert_eq!(exit_code(&BmgError::InvalidInput("x".into())), EXIT_INPUT);
    }

    #[test]
    fn non_positive_eps_is_rejected() {
        assert!(positive("0").is_err() && positive("-1e-3").is_err() && positive("nan").is_err());
        assert_eq!(positive("1e-6"), Ok(1e-6));
    }
}
