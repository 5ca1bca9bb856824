use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use sublintest::birthday::{
    random_bipartite_in_regime, random_hypergraph_in_regime, ExperimentSpec,
};
use sublintest::harness::{
    csv_rows, oracle_check, scaling_experiment, tiny_corpus, write_csv, Family, HarnessError,
    InstanceSource, RunConfig, TesterKind, TesterParams, TrialReport,
};
use sublintest::io::{bundle_from_str, bundle_to_string};
use sublintest::SeededRng;

const EXIT_USAGE: u8 = 2;
const EXIT_OVER_BUDGET: u8 = 3;

#[derive(Parser)]
#[command(
    name = "sublintest",
    version,
    about = "Distribution-free testers for total orderings and decision lists"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test comparison instances for being a total ordering.
    TestTotal(TestArgs),
    /// Test Boolean instances for being a monotone decision list.
    TestMdl(TestArgs),
    /// Test Boolean instances for being a decision list.
    TestDl(TestArgs),
    /// Run a birthday-collision experiment.
    Birthday(BirthdayArgs),
    /// Measure queries across several n and write CSV.
    Scaling(ScalingArgs),
    /// Compare tester verdicts with exact distances on tiny instances.
    OracleCheck(OracleArgs),
    /// Generate an instance file.
    GenInstance(GenArgs),
}

#[derive(Args)]
struct Common {
    /// Master seed.
    #[arg(long, env = "SUBLINTEST_SEED", default_value_t = 0)]
    seed: u64,
    /// Proximity parameter.
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    /// Big/small block exponent of the monotone tester.
    #[arg(long)]
    delta: Option<f64>,
    /// Number of trials.
    #[arg(long)]
    trials: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Constant override `name=value`, repeatable (e.g. c_sk=4, dl.c_rounds=30, t_amplify=1).
    #[arg(long = "const", value_name = "NAME=VALUE")]
    consts: Vec<String>,
    /// Output path.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn params(&self) -> Result<TesterParams, HarnessError> {
        let mut p = TesterParams::default();
        if let Some(d) = self.delta {
            p.apply_const("mdl.delta", d)?;
        }
        for c in &self.consts {
            p.apply_assignment(c)?;
        }
        Ok(p)
    }
}

#[derive(Args)]
struct TestArgs {
    #[command(flatten)]
    common: Common,
    /// Instance family, used when no instance file is given.
    #[arg(long)]
    family: Option<String>,
    /// Instance file; every trial runs on it.
    #[arg(long)]
    instance: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    /// Support size of generated distributions (defaults to n).
    #[arg(long)]
    support: Option<usize>,
    /// Query ceiling per trial.
    #[arg(long)]
    budget: Option<u64>,
}

#[derive(Args)]
struct ScalingArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "total-yes")]
    family: String,
    /// Comma-separated list of n.
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    /// Tester: total, mdl or dl (defaults to the family's own).
    #[arg(long)]
    tester: Option<String>,
    #[arg(long)]
    support: Option<usize>,
    #[arg(long)]
    budget: Option<u64>,
}

#[derive(Args)]
struct BirthdayArgs {
    #[command(flatten)]
    common: Common,
    /// Experiment file.
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Built-in random experiment: bipartite, hypergraph3 or hypergraph4.
    #[arg(long)]
    family: Option<String>,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 4)]
    n: usize,
    /// Tester: mdl or dl.
    #[arg(long, default_value = "mdl")]
    tester: String,
    /// Number of random bundles.
    #[arg(long, default_value_t = 200)]
    bundles: usize,
    /// Instance files to check instead of a random corpus.
    #[arg(long)]
    instance: Vec<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    family: String,
    #[arg(long)]
    n: usize,
    #[arg(long, env = "SUBLINTEST_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    support: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn usage(msg: impl Into<String>) -> HarnessError {
    HarnessError::Usage(msg.into())
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), HarnessError> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn emit_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<(), HarnessError> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    emit(out, &s)
}

fn summary(r: &TrialReport) {
    eprintln!(
        "{} n={} eps={} trials={} accept={} reject={} exhausted={} accept-rate={:.4} [{:.4}, {:.4}] mean-queries={:.1} budget={} over-budget={}",
        r.family,
        r.n,
        r.eps,
        r.trials,
        r.accepts,
        r.rejects,
        r.exhausted,
        r.accept_rate,
        r.accept_interval.0,
        r.accept_interval.1,
        r.mean_queries,
        r.query_budget,
        r.over_budget
    );
}

fn budget_exit(over: u64) -> u8 {
    if over > 0 {
        EXIT_OVER_BUDGET
    } else {
        0
    }
}

fn test(tester: TesterKind, a: TestArgs) -> Result<u8, HarnessError> {
    let params = a.common.params()?;
    let (source, n) = match (&a.instance, &a.family) {
        (Some(path), None) => {
            let b = bundle_from_str(&fs::read_to_string(path)?)?;
            if a.n.is_some_and(|n| n != b.n()) {
                return Err(usage("--n disagrees with the instance file"));
            }
            let n = b.n();
            (InstanceSource::Fixed(Box::new(b)), n)
        }
        (None, Some(f)) => (
            InstanceSource::Family(f.parse()?),
            a.n.ok_or_else(|| usage("--family needs --n"))?,
        ),
        _ => return Err(usage("give exactly one of --family and --instance")),
    };
    let mut cfg = RunConfig::new(tester, source, n, a.common.eps);
    cfg.trials = a.common.trials.unwrap_or(1);
    cfg.seed = a.common.seed;
    cfg.support = a.support;
    cfg.budget = a.budget;
    cfg.params = params;
    cfg.jobs = a.common.jobs;
    let report = sublintest::harness::run_trials(&cfg)?;
    summary(&report);
    emit_json(a.common.out.as_deref(), &report)?;
    Ok(budget_exit(report.over_budget))
}

fn scaling(a: ScalingArgs) -> Result<u8, HarnessError> {
    let family: Family = a.family.parse()?;
    let tester = match &a.tester {
        Some(t) => t.parse()?,
        None => family.default_tester(),
    };
    let mut cfg = RunConfig::new(tester, InstanceSource::Family(family), a.n[0], a.common.eps);
    cfg.trials = a.common.trials.unwrap_or(10);
    cfg.seed = a.common.seed;
    cfg.support = a.support;
    cfg.budget = a.budget;
    cfg.params = a.common.params()?;
    cfg.jobs = a.common.jobs;
    let reports = scaling_experiment(&cfg, &a.n)?;
    for r in &reports {
        summary(r);
    }
    let rows = csv_rows(&reports);
    match &a.common.out {
        Some(p) => write_csv(&rows, fs::File::create(p)?)?,
        None => write_csv(&rows, std::io::stdout().lock())?,
    }
    Ok(budget_exit(reports.iter().map(|r| r.over_budget).sum()))
}

fn birthday(a: BirthdayArgs) -> Result<u8, HarnessError> {
    let seed = a.common.seed;
    let spec = match (&a.instance, a.family.as_deref()) {
        (Some(path), None) => serde_json::from_str::<ExperimentSpec>(&fs::read_to_string(path)?)?,
        (None, Some("bipartite")) => random_bipartite_in_regime(10, 10, 0.3, 0.3, seed)?,
        (None, Some("hypergraph3")) => random_hypergraph_in_regime(3, 12, 10, 0.3, seed)?,
        (None, Some("hypergraph4")) => random_hypergraph_in_regime(4, 12, 10, 0.3, seed)?,
        (None, Some(f)) => return Err(usage(format!("unknown birthday family {f:?}"))),
        _ => return Err(usage("give exactly one of --family and --instance")),
    };
    let report = spec.run(a.common.trials.unwrap_or(1000), seed)?;
    eprintln!(
        "{} k={} eps={:.4} in-regime={} collision-rate={:.4} [{:.4}, {:.4}]",
        report.kind,
        report.k,
        report.eps,
        report.in_regime,
        report.collision_rate,
        report.interval.0,
        report.interval.1
    );
    emit_json(a.common.out.as_deref(), &report)?;
    Ok(0)
}

fn oracle(a: OracleArgs) -> Result<u8, HarnessError> {
    let tester: TesterKind = a.tester.parse()?;
    let bundles = if a.instance.is_empty() {
        tiny_corpus(a.n, a.bundles, a.common.seed)?
    } else {
        a.instance
            .iter()
            .map(|p| Ok(bundle_from_str(&fs::read_to_string(p)?)?))
            .collect::<Result<Vec<_>, HarnessError>>()?
    };
    let params = a.common.params()?;
    let report = oracle_check(
        &bundles,
        tester,
        a.common.eps,
        a.common.trials.unwrap_or(400),
        a.common.seed,
        &params,
        a.common.jobs,
    )?;
    eprintln!(
        "bundles={} must-accept={} must-reject={} unconstrained={} violations={}",
        report.rows.len(),
        report.must_accept,
        report.must_reject,
        report.unconstrained,
        report.violations
    );
    emit_json(a.common.out.as_deref(), &report)?;
    Ok(0)
}

fn gen_instance(a: GenArgs) -> Result<u8, HarnessError> {
    let family: Family = a.family.parse()?;
    let mut rng = SeededRng::new(a.seed, 0);
    let bundle = family.generate(a.n, a.support, a.seed, &mut rng)?;
    let mut s = bundle_to_string(&bundle);
    s.push('\n');
    emit(a.out.as_deref(), &s)?;
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::TestTotal(a) => test(TesterKind::Total, a),
        Command::TestMdl(a) => test(TesterKind::Mdl, a),
        Command::TestDl(a) => test(TesterKind::Dl, a),
        Command::Birthday(a) => birthday(a),
        Command::Scaling(a) => scaling(a),
        Command::OracleCheck(a) => oracle(a),
        Command::GenInstance(a) => gen_instance(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { EXIT_USAGE } else { 1 })
        }
    }
}
