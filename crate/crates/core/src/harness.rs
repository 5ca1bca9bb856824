//! Trial orchestration, budget auditing and reporting.

use std::io::{Read, Write};
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::dist::FiniteDistribution;
use crate::dl::{decision_list_tester, dl_budget, DlParams};
use crate::dl_model::{GeneralDLRep, MonotoneDLRep, TruthTable};
use crate::error::{CoreError, TestError};
use crate::exact::{dist_dl, dist_mdl, dist_total_orderings};
use crate::instances::{
    gen_dl_yes, gen_groups4, gen_mdl_yes, gen_pentagon, gen_planted_violation, gen_total_yes,
    BooleanInstance, FunctionSpec, GroundTruth, InstanceBundle, PlantError, Provenance,
};
use crate::mdl::{mdl_query_budget, mdl_sample_budget, monotone_dl_tester, MdlParams};
use crate::oracle::{Budget, ComparisonOracle, FunctionOracle, PairSampler, QueryLedger, Sampler};
use crate::rng::SeededRng;
use crate::stats::{wilson, Z_ONE_SIDED_99};
use crate::total::{test_total_ordering, total_query_budget, total_sample_budget, TotalParams};
use crate::verdict::Verdict;

/// Salt separating instance-generation streams from tester streams.
const GEN_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

/// Slack subtracted from 2/3 in the stratified contract check.
pub const CONTRACT_SLACK: f64 = 0.05;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Plant(#[from] PlantError),
    #[error(transparent)]
    Test(#[from] TestError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    /// Whether the error stems from bad input rather than a runtime failure.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            HarnessError::Usage(_)
                | HarnessError::Core(_)
                | HarnessError::Plant(_)
                | HarnessError::Json(_)
        )
    }
}

fn usage(msg: impl Into<String>) -> HarnessError {
    HarnessError::Usage(msg.into())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TesterKind {
    Total,
    Mdl,
    Dl,
}

impl FromStr for TesterKind {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "total" => Ok(TesterKind::Total),
            "mdl" => Ok(TesterKind::Mdl),
            "dl" => Ok(TesterKind::Dl),
            _ => Err(usage(format!("unknown tester {s:?}"))),
        }
    }
}

/// Instance families the harness can generate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    TotalYes,
    Pentagon,
    MdlYes,
    DlYes,
    Groups4Yes,
    Groups4No,
    /// A monotone-list yes instance with planted violations of the given type.
    Planted(u8),
}

impl Family {
    pub fn name(&self) -> String {
        match self {
            Family::TotalYes => "total-yes".into(),
            Family::Pentagon => "pentagon".into(),
            Family::MdlYes => "mdl-yes".into(),
            Family::DlYes => "dl-yes".into(),
            Family::Groups4Yes => "groups4-yes".into(),
            Family::Groups4No => "groups4-no".into(),
            Family::Planted(k) => format!("planted-{k}"),
        }
    }

    pub fn is_comparison(&self) -> bool {
        matches!(self, Family::TotalYes | Family::Pentagon)
    }

    /// The tester a family is meant for when none is given.
    pub fn default_tester(&self) -> TesterKind {
        match self {
            Family::TotalYes | Family::Pentagon => TesterKind::Total,
            Family::DlYes => TesterKind::Dl,
            _ => TesterKind::Mdl,
        }
    }

    /// Generates an instance; `support` defaults to `n`.
    pub fn generate<R: Rng + ?Sized>(
        &self,
        n: usize,
        support: Option<usize>,
        seed: u64,
        rng: &mut R,
    ) -> Result<InstanceBundle, HarnessError> {
        let support = support.unwrap_or(n);
        Ok(match *self {
            Family::TotalYes => gen_total_yes(n, support, seed, rng)?,
            Family::Pentagon => gen_pentagon(n, seed, rng)?,
            Family::MdlYes => gen_mdl_yes(n, support, seed, rng)?,
            Family::DlYes => gen_dl_yes(n, support, seed, rng)?,
            Family::Groups4Yes => gen_groups4(n, false, seed, rng)?,
            Family::Groups4No => gen_groups4(n, true, seed, rng)?,
            Family::Planted(k) => {
                let base = gen_mdl_yes(n, support, seed, rng)?;
                let mut b = gen_planted_violation(&base, k, 0.5, 8, rng)?;
                match &mut b {
                    InstanceBundle::Boolean(b) => b.provenance.family = self.name(),
                    InstanceBundle::Comparison(c) => c.provenance.family = self.name(),
                }
                b
            }
        })
    }
}

impl FromStr for Family {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "total-yes" => Family::TotalYes,
            "pentagon" => Family::Pentagon,
            "mdl-yes" => Family::MdlYes,
            "dl-yes" => Family::DlYes,
            "groups4-yes" => Family::Groups4Yes,
            "groups4-no" => Family::Groups4No,
            _ => match s
                .strip_prefix("planted-")
                .and_then(|k| k.parse::<u8>().ok())
            {
                Some(k) if (1..=5).contains(&k) => Family::Planted(k),
                _ => return Err(usage(format!("unknown family {s:?}"))),
            },
        })
    }
}

/// Constants for all three testers.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TesterParams {
    pub total: TotalParams,
    pub mdl: MdlParams,
    pub dl: DlParams,
}

impl TesterParams {
    /// Names accepted by [`TesterParams::apply_const`], as `scope.name`.
    pub const NAMES: &'static [&'static str] = &[
        "total.c_sk",
        "total.c_lc",
        "total.c_long",
        "total.crowd",
        "mdl.delta",
        "mdl.c_pre",
        "mdl.c_nil",
        "mdl.c_type",
        "mdl.c_big",
        "mdl.c_rounds",
        "mdl.c_round_draws",
        "mdl.c_round_thresh",
        "mdl.c_small",
        "dl.t_amplify",
        "dl.c_rounds",
        "dl.c_reps",
        "dl.c_accept",
        "dl.c_est",
        "dl.c_est_reject",
    ];

    /// Overrides one constant. Unqualified names are accepted when unambiguous.
    /// Monotone-list constants apply both to the monotone tester and inside the general one.
    pub fn apply_const(&mut self, name: &str, value: f64) -> Result<(), HarnessError> {
        let matches: Vec<&str> = Self::NAMES
            .iter()
            .copied()
            .filter(|full| {
                *full == name || full.split_once('.').is_some_and(|(_, short)| short == name)
            })
            .collect();
        let full = match matches.as_slice() {
            [one] => *one,
            [] => return Err(usage(format!("unknown constant {name:?}"))),
            _ => {
                return Err(usage(format!(
                    "ambiguous constant {name:?}; qualify it as one of {matches:?}"
                )))
            }
        };
        if !value.is_finite() || value <= 0.0 {
            return Err(usage(format!("constant {full} must be positive")));
        }
        let (scope, short) = full.split_once('.').expect("qualified");
        match scope {
            "total" => {
                let t = &mut self.total;
                *match short {
                    "c_sk" => &mut t.c_sk,
                    "c_lc" => &mut t.c_lc,
                    "c_long" => &mut t.c_long,
                    _ => &mut t.crowd,
                } = value;
            }
            "mdl" => {
                if short == "delta" && value >= 1.0 {
                    return Err(usage("delta must lie in (0,1)"));
                }
                for m in [&mut self.mdl, &mut self.dl.mdl] {
                    *match short {
                        "delta" => &mut m.delta,
                        "c_pre" => &mut m.c_pre,
                        "c_nil" => &mut m.c_nil,
                        "c_type" => &mut m.c_type,
                        "c_big" => &mut m.c_big,
                        "c_rounds" => &mut m.c_rounds,
                        "c_round_draws" => &mut m.c_round_draws,
                        "c_round_thresh" => &mut m.c_round_thresh,
                        _ => &mut m.c_small,
                    } = value;
                }
            }
            _ => {
                let d = &mut self.dl;
                if short == "t_amplify" {
                    if value.fract() != 0.0 {
                        return Err(usage("t_amplify must be an integer"));
                    }
                    d.t_amplify = Some(value as u64);
                    return Ok(());
                }
                *match short {
                    "c_rounds" => &mut d.c_rounds,
                    "c_reps" => &mut d.c_reps,
                    "c_accept" => &mut d.c_accept,
                    "c_est" => &mut d.c_est,
                    _ => &mut d.c_est_reject,
                } = value;
            }
        }
        Ok(())
    }

    /// Parses and applies `name=value`.
    pub fn apply_assignment(&mut self, assignment: &str) -> Result<(), HarnessError> {
        let (name, value) = assignment
            .split_once('=')
            .ok_or_else(|| usage(format!("expected name=value, got {assignment:?}")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| usage(format!("bad value in {assignment:?}")))?;
        self.apply_const(name.trim(), value)
    }

    pub fn delta(&self) -> f64 {
        self.mdl.delta
    }

    /// Closed-form `(queries, samples)` ceilings for one run.
    pub fn budget(&self, tester: TesterKind, n: usize, eps: f64) -> (u64, u64) {
        match tester {
            TesterKind::Total => (
                total_query_budget(n, eps, &self.total),
                total_sample_budget(n, eps, &self.total),
            ),
            TesterKind::Mdl => (
                mdl_query_budget(n, eps, &self.mdl),
                mdl_sample_budget(n, eps, &self.mdl),
            ),
            TesterKind::Dl => dl_budget(n, eps, &self.dl),
        }
    }
}

/// Runs `tester` once on `bundle` under a fresh ledger.
pub fn run_tester<R: Rng + ?Sized>(
    tester: TesterKind,
    bundle: &InstanceBundle,
    eps: f64,
    params: &TesterParams,
    budget: Budget,
    rng: &mut R,
) -> Result<Verdict, TestError> {
    let ledger = QueryLedger::new(budget);
    match (tester, bundle) {
        (TesterKind::Total, InstanceBundle::Comparison(c)) => {
            let sigma = ComparisonOracle::new(&c.orientation, &ledger);
            let d = PairSampler::new(&c.dist, &ledger);
            test_total_ordering(&sigma, &d, eps, &params.total, rng)
        }
        (TesterKind::Mdl, InstanceBundle::Boolean(b)) => {
            let f = FunctionOracle::new(&b.function, &ledger);
            let d = Sampler::new(&b.dist, &ledger);
            monotone_dl_tester(&f, &d, eps, &params.mdl, rng)
        }
        (TesterKind::Dl, InstanceBundle::Boolean(b)) => {
            let f = FunctionOracle::new(&b.function, &ledger);
            let d = Sampler::new(&b.dist, &ledger);
            decision_list_tester(&f, &d, eps, &params.dl, rng)
        }
        _ => Err(TestError::PreconditionViolated(
            "tester does not match the instance kind".into(),
        )),
    }
}

#[derive(Clone, Debug)]
pub enum InstanceSource {
    /// A fresh instance per trial.
    Family(Family),
    /// One instance for every trial.
    Fixed(Box<InstanceBundle>),
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub tester: TesterKind,
    pub source: InstanceSource,
    pub n: usize,
    pub eps: f64,
    pub trials: u64,
    pub seed: u64,
    pub support: Option<usize>,
    /// Query ceiling enforced by the ledger.
    pub budget: Option<u64>,
    pub params: TesterParams,
    /// Worker threads; 0 uses all cores.
    pub jobs: usize,
}

impl RunConfig {
    pub fn new(tester: TesterKind, source: InstanceSource, n: usize, eps: f64) -> Self {
        RunConfig {
            tester,
            source,
            n,
            eps,
            trials: 1,
            seed: 0,
            support: None,
            budget: None,
            params: TesterParams::default(),
            jobs: 0,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.n < 2 {
            return Err(usage("n must be at least 2"));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(usage("eps must lie in (0,1)"));
        }
        if self.trials == 0 {
            return Err(usage("trials must be at least 1"));
        }
        let delta = self.params.delta();
        if !(delta > 0.0 && delta < 1.0) {
            return Err(usage("delta must lie in (0,1)"));
        }
        let comparison = match &self.source {
            InstanceSource::Family(f) => f.is_comparison(),
            InstanceSource::Fixed(b) => matches!(**b, InstanceBundle::Comparison(_)),
        };
        if comparison != (self.tester == TesterKind::Total) {
            return Err(usage("the total-order tester needs a comparison instance and the list testers a Boolean one"));
        }
        Ok(())
    }

    pub fn family_name(&self) -> String {
        match &self.source {
            InstanceSource::Family(f) => f.name(),
            InstanceSource::Fixed(b) => b.provenance().family.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Accept,
    Reject,
    BudgetExhausted,
}

impl Outcome {
    pub fn as_str(&self) -> &'static str {
        match self {
            Outcome::Accept => "accept",
            Outcome::Reject => "reject",
            Outcome::BudgetExhausted => "budget-exhausted",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub seed: u64,
    pub verdict: Outcome,
    pub witness: Option<String>,
    pub queries: u64,
    pub samples: u64,
    pub runtime_ms: f64,
    /// Exceeded the closed-form ceiling or the ledger limit.
    pub over_budget: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub tester: TesterKind,
    pub family: String,
    pub n: usize,
    pub eps: f64,
    pub delta: f64,
    pub seed: u64,
    pub trials: u64,
    pub accepts: u64,
    pub rejects: u64,
    pub exhausted: u64,
    pub accept_rate: f64,
    /// One-sided 99% Wilson interval on the accept rate.
    pub accept_interval: (f64, f64),
    pub reject_interval: (f64, f64),
    pub function_queries: u64,
    pub samples_drawn: u64,
    pub mean_queries: f64,
    pub mean_samples: f64,
    pub query_budget: u64,
    pub sample_budget: u64,
    pub over_budget: u64,
    pub records: Vec<TrialRecord>,
}

impl TrialReport {
    pub fn reject_rate(&self) -> f64 {
        self.rejects as f64 / self.trials as f64
    }

    fn from_records(cfg: &RunConfig, records: Vec<TrialRecord>) -> Self {
        let trials = records.len() as u64;
        let count = |o: Outcome| records.iter().filter(|r| r.verdict == o).count() as u64;
        let (accepts, rejects, exhausted) = (
            count(Outcome::Accept),
            count(Outcome::Reject),
            count(Outcome::BudgetExhausted),
        );
        let function_queries = records.iter().map(|r| r.queries).sum();
        let samples_drawn = records.iter().map(|r| r.samples).sum();
        let (query_budget, sample_budget) = cfg.params.budget(cfg.tester, cfg.n, cfg.eps);
        TrialReport {
            tester: cfg.tester,
            family: cfg.family_name(),
            n: cfg.n,
            eps: cfg.eps,
            delta: cfg.params.delta(),
            seed: cfg.seed,
            trials,
            accepts,
            rejects,
            exhausted,
            accept_rate: accepts as f64 / trials.max(1) as f64,
            accept_interval: wilson(accepts, trials, Z_ONE_SIDED_99),
            reject_interval: wilson(rejects, trials, Z_ONE_SIDED_99),
            function_queries,
            samples_drawn,
            mean_queries: function_queries as f64 / trials.max(1) as f64,
            mean_samples: samples_drawn as f64 / trials.max(1) as f64,
            query_budget,
            sample_budget,
            over_budget: records.iter().filter(|r| r.over_budget).count() as u64,
            records,
        }
    }
}

/// The instance used by trial `trial`.
pub fn trial_instance(cfg: &RunConfig, trial: u64) -> Result<InstanceBundle, HarnessError> {
    match &cfg.source {
        InstanceSource::Fixed(b) => Ok((**b).clone()),
        InstanceSource::Family(f) => {
            let mut rng = SeededRng::new(cfg.seed ^ GEN_SALT, trial);
            f.generate(cfg.n, cfg.support, cfg.seed, &mut rng)
        }
    }
}

fn run_one(cfg: &RunConfig, trial: u64) -> Result<TrialRecord, HarnessError> {
    let bundle = trial_instance(cfg, trial)?;
    if bundle.n() != cfg.n {
        return Err(usage(format!(
            "instance has n = {}, expected {}",
            bundle.n(),
            cfg.n
        )));
    }
    let (query_budget, sample_budget) = cfg.params.budget(cfg.tester, cfg.n, cfg.eps);
    let budget = match cfg.budget {
        Some(q) => Budget::queries(q),
        None => Budget::unlimited(),
    };
    let mut rng = SeededRng::new(cfg.seed, trial);
    let start = Instant::now();
    let result = run_tester(cfg.tester, &bundle, cfg.eps, &cfg.params, budget, &mut rng);
    let runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    let record = |verdict, witness, queries: u64, samples: u64, exhausted: bool| TrialRecord {
        trial,
        seed: cfg.seed,
        verdict,
        witness,
        queries,
        samples,
        runtime_ms,
        over_budget: exhausted || queries > query_budget || samples > sample_budget,
    };
    match result {
        Ok(v) => Ok(record(
            if v.is_accept() {
                Outcome::Accept
            } else {
                Outcome::Reject
            },
            v.witness.as_ref().map(|w| w.label().to_string()),
            v.ledger.function_queries,
            v.ledger.samples_drawn,
            false,
        )),
        Err(TestError::BudgetExhausted { limit, .. }) => {
            Ok(record(Outcome::BudgetExhausted, None, limit, 0, true))
        }
        Err(e) => Err(e.into()),
    }
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool, HarnessError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| usage(e.to_string()))
}

/// Runs `cfg.trials` independent trials; records come back in trial order.
pub fn run_trials(cfg: &RunConfig) -> Result<TrialReport, HarnessError> {
    cfg.validate()?;
    let records = pool(cfg.jobs)?.install(|| {
        (0..cfg.trials)
            .into_par_iter()
            .map(|t| run_one(cfg, t))
            .collect::<Result<Vec<_>, _>>()
    })?;
    Ok(TrialReport::from_records(cfg, records))
}

/// One row of the scaling CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub family: String,
    pub n: usize,
    pub eps: f64,
    pub delta: f64,
    /// Trial index, or `summary` for the per-`n` aggregate.
    pub trial: String,
    pub seed: u64,
    /// `accept`/`reject`/`budget-exhausted`, or the accept rate on summary rows.
    pub verdict: String,
    /// Queries, or the mean on summary rows.
    pub queries: String,
    pub samples: String,
    pub runtime_ms: String,
}

pub const SUMMARY: &str = "summary";

/// Runs `cfg` once per `n` in `ns`.
pub fn scaling_experiment(cfg: &RunConfig, ns: &[usize]) -> Result<Vec<TrialReport>, HarnessError> {
    if ns.is_empty() {
        return Err(usage("scaling needs at least one n"));
    }
    ns.iter()
        .map(|&n| {
            let mut c = cfg.clone();
            c.n = n;
            run_trials(&c)
        })
        .collect()
}

pub fn csv_rows(reports: &[TrialReport]) -> Vec<CsvRow> {
    let mut rows = Vec::new();
    for r in reports {
        for t in &r.records {
            rows.push(CsvRow {
                family: r.family.clone(),
                n: r.n,
                eps: r.eps,
                delta: r.delta,
                trial: t.trial.to_string(),
                seed: t.seed,
                verdict: t.verdict.as_str().into(),
                queries: t.queries.to_string(),
                samples: t.samples.to_string(),
                runtime_ms: format!("{:.3}", t.runtime_ms),
            });
        }
        let runtime: f64 = r.records.iter().map(|t| t.runtime_ms).sum();
        rows.push(CsvRow {
            family: r.family.clone(),
            n: r.n,
            eps: r.eps,
            delta: r.delta,
            trial: SUMMARY.into(),
            seed: r.seed,
            verdict: r.accept_rate.to_string(),
            queries: r.mean_queries.to_string(),
            samples: r.mean_samples.to_string(),
            runtime_ms: format!("{runtime:.3}"),
        });
    }
    rows
}

pub fn write_csv<W: Write>(rows: &[CsvRow], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<CsvRow>, HarnessError> {
    csv::Reader::from_reader(input)
        .deserialize()
        .map(|r| r.map_err(HarnessError::from))
        .collect()
}

/// Per-`n` `(n, accept rate, mean queries, mean samples)` recomputed from trial rows.
pub fn aggregate_rows(rows: &[CsvRow]) -> Vec<(usize, f64, f64, f64)> {
    let mut out: Vec<(usize, u64, u64, u64, u64)> = Vec::new();
    for r in rows.iter().filter(|r| r.trial != SUMMARY) {
        let i = match out.iter().position(|o| o.0 == r.n) {
            Some(i) => i,
            None => {
                out.push((r.n, 0, 0, 0, 0));
                out.len() - 1
            }
        };
        let o = &mut out[i];
        o.1 += 1;
        o.2 += u64::from(r.verdict == Outcome::Accept.as_str());
        o.3 += r.queries.parse::<u64>().unwrap_or(0);
        o.4 += r.samples.parse::<u64>().unwrap_or(0);
    }
    out.into_iter()
        .map(|(n, t, a, q, s)| {
            (
                n,
                a as f64 / t as f64,
                q as f64 / t as f64,
                s as f64 / t as f64,
            )
        })
        .collect()
}

/// Where an instance falls in the stratified contract.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stratum {
    MustAccept,
    MustReject,
    Unconstrained,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub index: usize,
    pub family: String,
    pub distance: f64,
    pub stratum: Stratum,
    pub trials: u64,
    pub accepts: u64,
    pub violation: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OracleCheckReport {
    pub rows: Vec<OracleRow>,
    pub must_accept: usize,
    pub must_reject: usize,
    pub unconstrained: usize,
    pub violations: usize,
}

const ZERO_TOL: f64 = 1e-12;

/// Exact distance of a small bundle to the class `tester` targets.
pub fn exact_distance(tester: TesterKind, bundle: &InstanceBundle) -> Result<f64, HarnessError> {
    Ok(match (tester, bundle) {
        (TesterKind::Total, InstanceBundle::Comparison(c)) => {
            dist_total_orderings(&c.orientation, &c.dist)?.distance
        }
        (TesterKind::Mdl, InstanceBundle::Boolean(b)) => dist_mdl(&b.function, &b.dist)?.distance,
        (TesterKind::Dl, InstanceBundle::Boolean(b)) => dist_dl(&b.function, &b.dist)?.distance,
        _ => return Err(usage("tester does not match the instance kind")),
    })
}

/// Runs each bundle `trials` times and checks the accept/reject contract against exact distances.
pub fn oracle_check(
    bundles: &[InstanceBundle],
    tester: TesterKind,
    eps: f64,
    trials: u64,
    seed: u64,
    params: &TesterParams,
    jobs: usize,
) -> Result<OracleCheckReport, HarnessError> {
    let threshold = 2.0 / 3.0 - CONTRACT_SLACK;
    let rows = pool(jobs)?.install(|| {
        bundles
            .par_iter()
            .enumerate()
            .map(|(index, b)| {
                let distance = exact_distance(tester, b)?;
                let stratum = if distance <= ZERO_TOL {
                    Stratum::MustAccept
                } else if distance >= eps - ZERO_TOL {
                    Stratum::MustReject
                } else {
                    Stratum::Unconstrained
                };
                let mut accepts = 0;
                for t in 0..trials {
                    let mut rng = SeededRng::new(seed, ((index as u64) << 32) | t);
                    accepts += u64::from(
                        run_tester(tester, b, eps, params, Budget::unlimited(), &mut rng)?
                            .is_accept(),
                    );
                }
                let rate = accepts as f64 / trials.max(1) as f64;
                let violation = match stratum {
                    Stratum::MustAccept => rate < threshold,
                    Stratum::MustReject => 1.0 - rate < threshold,
                    Stratum::Unconstrained => false,
                };
                Ok(OracleRow {
                    index,
                    family: b.provenance().family.clone(),
                    distance,
                    stratum,
                    trials,
                    accepts,
                    violation,
                })
            })
            .collect::<Result<Vec<_>, HarnessError>>()
    })?;
    let count = |s: Stratum| rows.iter().filter(|r| r.stratum == s).count();
    Ok(OracleCheckReport {
        must_accept: count(Stratum::MustAccept),
        must_reject: count(Stratum::MustReject),
        unconstrained: count(Stratum::Unconstrained),
        violations: rows.iter().filter(|r| r.violation).count(),
        rows,
    })
}

/// A random full-support bundle on `n ≤ 6` bits: a random monotone list, a random
/// decision list, a monotone list with one or two flipped points, or a random table,
/// cycling through the four by `index`.
pub fn tiny_bundle(n: usize, index: u64, seed: u64) -> Result<InstanceBundle, HarnessError> {
    if !(1..=6).contains(&n) {
        return Err(usage("tiny bundles need 1 ≤ n ≤ 6"));
    }
    let mut rng = SeededRng::new(seed ^ GEN_SALT, index);
    let size = 1u64 << n;
    let atoms: Vec<(BitString, f64)> = (0..size)
        .map(|v| {
            (
                BitString::from_words(n, vec![v]),
                rng.random_range(0.05..1.0),
            )
        })
        .collect();
    let dist = FiniteDistribution::normalized(n, atoms)?;
    let (family, function) = match index % 4 {
        0 => (
            "tiny-mdl",
            FunctionSpec::Mdl(MonotoneDLRep::random(n, &mut rng)),
        ),
        1 => (
            "tiny-dl",
            FunctionSpec::Dl(GeneralDLRep::random(n, &mut rng)),
        ),
        2 => {
            let base = MonotoneDLRep::random(n, &mut rng);
            let mut table = TruthTable::from_function(&FunctionSpec::Mdl(base))?;
            for _ in 0..rng.random_range(1..=2) {
                let v = rng.random_range(0..size);
                table.set(v, !table.get(v));
            }
            ("tiny-flipped", FunctionSpec::Table(table))
        }
        _ => {
            let table = (0..size).map(|_| rng.random_bool(0.5)).collect();
            (
                "tiny-table",
                FunctionSpec::Table(TruthTable::new(n, table)?),
            )
        }
    };
    Ok(InstanceBundle::Boolean(BooleanInstance {
        function,
        dist,
        truth: GroundTruth::Unknown,
        provenance: Provenance {
            family: family.into(),
            seed,
            params: format!("n={n},index={index}"),
        },
    }))
}

pub fn tiny_corpus(n: usize, count: usize, seed: u64) -> Result<Vec<InstanceBundle>, HarnessError> {
    (0..count as u64).map(|i| tiny_bundle(n, i, seed)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_names_round_trip() {
        for name in [
            "total-yes",
            "pentagon",
            "mdl-yes",
            "dl-yes",
            "groups4-yes",
            "groups4-no",
            "planted-3",
        ] {
            assert_eq!(name.parse::<Family>().unwrap().name(), name);
        }
        assert!("planted-6".parse::<Family>().is_err());
        assert!("nope".parse::<Family>().is_err());
    }

    #[test]
    fn constants_resolve_by_scope() {
        let mut p = TesterParams::default();
        p.apply_assignment("c_sk=3").unwrap();
        assert_eq!(p.total.c_sk, 3.0);
        p.apply_assignment("c_type=2").unwrap();
        assert_eq!((p.mdl.c_type, p.dl.mdl.c_type), (2.0, 2.0));
        assert!(p.apply_assignment("c_rounds=3").is_err());
        p.apply_assignment("dl.c_rounds=3").unwrap();
        assert_eq!(p.dl.c_rounds, 3.0);
        p.apply_assignment("t_amplify=1").unwrap();
        assert_eq!(p.dl.t_amplify, Some(1));
        assert!(p.apply_assignment("delta=1.5").is_err());
        assert!(p.apply_assignment("c_sk").is_err());
        assert!(p.apply_assignment("c_sk=-1").is_err());
    }

    #[test]
    fn validation_catches_bad_configs() {
        let mut cfg = RunConfig::new(
            TesterKind::Total,
            InstanceSource::Family(Family::TotalYes),
            50,
            0.1,
        );
        assert!(cfg.validate().is_ok());
        cfg.eps = 1.0;
        assert!(cfg.validate().is_err());
        cfg.eps = 0.1;
        cfg.tester = TesterKind::Mdl;
        assert!(cfg.validate().is_err());
        cfg.tester = TesterKind::Total;
        cfg.trials = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn single_trial_is_deterministic() {
        let mut cfg = RunConfig::new(
            TesterKind::Total,
            InstanceSource::Family(Family::TotalYes),
            64,
            0.2,
        );
        cfg.seed = 11;
        let a = run_trials(&cfg).unwrap();
        let b = run_trials(&cfg).unwrap();
        assert_eq!(a.records.len(), 1);
        assert_eq!(a.records[0].verdict, b.records[0].verdict);
        assert_eq!(a.records[0].queries, b.records[0].queries);
        assert_eq!(a.function_queries, a.records[0].queries);
    }

    #[test]
    fn tight_budget_is_flagged() {
        let mut cfg = RunConfig::new(
            TesterKind::Mdl,
            InstanceSource::Family(Family::MdlYes),
            64,
            0.2,
        );
        cfg.trials = 3;
        cfg.budget = Some(5);
        let r = run_trials(&cfg).unwrap();
        assert_eq!(r.exhausted, 3);
        assert_eq!(r.over_budget, 3);
    }

    #[test]
    fn pentagon_report_has_interval() {
        let mut cfg = RunConfig::new(
            TesterKind::Total,
            InstanceSource::Family(Family::Pentagon),
            50,
            0.1,
        );
        cfg.trials = 20;
        let r = run_trials(&cfg).unwrap();
        assert_eq!(r.accepts + r.rejects, 20);
        assert!(r.reject_interval.0 <= r.reject_rate() && r.reject_rate() <= r.reject_interval.1);
    }

    #[test]
    fn csv_round_trips() {
        let mut cfg = RunConfig::new(
            TesterKind::Total,
            InstanceSource::Family(Family::TotalYes),
            32,
            0.2,
        );
        cfg.trials = 4;
        let reports = scaling_experiment(&cfg, &[32, 64]).unwrap();
        let rows = csv_rows(&reports);
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let header = String::from_utf8(buf.clone()).unwrap();
        assert!(header
            .starts_with("family,n,eps,delta,trial,seed,verdict,queries,samples,runtime_ms\n"));
        let back = read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, rows);
        let agg = aggregate_rows(&back);
        for (r, (n, rate, q, s)) in reports.iter().zip(agg) {
            assert_eq!(
                (r.n, r.accept_rate, r.mean_queries, r.mean_samples),
                (n, rate, q, s)
            );
        }
        let summaries: Vec<_> = back.iter().filter(|r| r.trial == SUMMARY).collect();
        assert_eq!(summaries.len(), 2);
    }

    #[test]
    fn empty_corpus_gives_empty_report() {
        let r = oracle_check(
            &[],
            TesterKind::Mdl,
            0.2,
            10,
            0,
            &TesterParams::default(),
            1,
        )
        .unwrap();
        assert_eq!(r, OracleCheckReport::default());
    }

    #[test]
    fn xor_is_must_reject() {
        use crate::dl_model::TruthTable;
        let f = TruthTable::new(2, vec![false, true, true, false]).unwrap();
        let dist = FiniteDistribution::uniform(
            2,
            (0..4).map(|v| BitString::from_words(2, vec![v])).collect(),
        )
        .unwrap();
        let b = InstanceBundle::Boolean(BooleanInstance {
            function: FunctionSpec::Table(f),
            dist,
            truth: GroundTruth::Unknown,
            provenance: Provenance {
                family: "xor".into(),
                seed: 0,
                params: String::new(),
            },
        });
        let r = oracle_check(
            &[b],
            TesterKind::Mdl,
            0.2,
            50,
            1,
            &TesterParams::default(),
            1,
        )
        .unwrap();
        assert_eq!(r.must_reject, 1);
        assert!((r.rows[0].distance - 0.25).abs() < 1e-12);
    }
}
