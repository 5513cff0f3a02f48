//! Monte Carlo campaigns: independent drops, every selector on the same
//! drop, means over drops and pooled per-UE samples for CDFs.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algorithms::{benchmark_select, select, Algorithm};
use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::routing::RouteSet;
use crate::scenario::Scenario;
use crate::schedule::{completion_times, evaluate, sum_duration, Assignment, PowerPolicy};
use crate::seed::drop_seed;

/// Version tag of the CSV/JSON layouts written by this module.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignOptions {
    pub algorithms: Vec<Algorithm>,
    /// Replaces every selector's default policy.
    pub policy_override: Option<PowerPolicy>,
    /// Re-check power caps, bit conservation and DYNAMIC ≤ STATIC on every final assignment.
    pub audit: bool,
    /// Worker threads; 0 lets the pool decide.
    pub workers: usize,
}

impl Default for CampaignOptions {
    fn default() -> Self {
        Self { algorithms: vec![Algorithm::Benchmark, Algorithm::GreedyPa], policy_override: None, audit: false, workers: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgoRun {
    pub algorithm: Algorithm,
    pub policy: PowerPolicy,
    /// Per-UE completion times; empty when skipped.
    pub completion: Vec<f64>,
    pub sum_s: f64,
    pub evaluations: u64,
    pub hop_counts: Vec<usize>,
    pub assignment: Option<Assignment>,
    /// Why the selector did not run, e.g. a refused brute-force search.
    pub skipped: Option<String>,
}

/// Greedy compared with the benchmark assignment evaluated under greedy's policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dominance {
    pub algorithm: Algorithm,
    pub policy: PowerPolicy,
    pub greedy_sum_s: f64,
    pub benchmark_sum_s: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Audit {
    pub timelines: usize,
    pub power_cap_failures: Vec<String>,
    pub bit_failures: Vec<String>,
    pub ordering_failures: Vec<String>,
    /// UE completions where DYNAMIC exceeded STATIC by more than 1e-9 s.
    pub policy_violations: Vec<String>,
    pub policy_comparisons: usize,
}

impl Audit {
    pub fn is_clean(&self) -> bool {
        self.power_cap_failures.is_empty()
            && self.bit_failures.is_empty()
            && self.ordering_failures.is_empty()
            && self.policy_violations.is_empty()
    }

    pub fn merge(&mut self, other: &Audit) {
        self.timelines += other.timelines;
        self.policy_comparisons += other.policy_comparisons;
        self.power_cap_failures.extend(other.power_cap_failures.iter().cloned());
        self.bit_failures.extend(other.bit_failures.iter().cloned());
        self.ordering_failures.extend(other.ordering_failures.iter().cloned());
        self.policy_violations.extend(other.policy_violations.iter().cloned());
    }

    /// Runs every timeline check on `assignment` under `policy`, and
    /// compares DYNAMIC against STATIC completions.
    pub fn check(&mut self, scenario: &Scenario, assignment: &Assignment, policy: PowerPolicy, tag: &str) -> Result<()> {
        let tl = evaluate(assignment, scenario, policy)?;
        self.timelines += 1;
        if let Err(e) = tl.check_power_caps() {
            self.power_cap_failures.push(format!("{tag}: {e}"));
        }
        if let Err(e) = tl.check_bit_conservation() {
            self.bit_failures.push(format!("{tag}: {e}"));
        }
        if let Err(e) = tl.check_ordering() {
            self.ordering_failures.push(format!("{tag}: {e}"));
        }
        let dynamic = completion_times(assignment, scenario, PowerPolicy::DynamicResplit)?;
        let stat = completion_times(assignment, scenario, PowerPolicy::StaticSplit)?;
        self.policy_comparisons += 1;
        for (ue, (d, s)) in dynamic.iter().zip(&stat).enumerate() {
            if *d > *s + 1e-9 {
                self.policy_violations.push(format!("{tag}: UE {ue} dynamic {d} > static {s}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DropResult {
    pub n: usize,
    pub drop_index: usize,
    pub seed: u64,
    pub runs: Vec<AlgoRun>,
    pub dominance: Vec<Dominance>,
    pub audit: Option<Audit>,
}

impl DropResult {
    pub fn run(&self, algorithm: Algorithm) -> Option<&AlgoRun> {
        self.runs.iter().find(|r| r.algorithm == algorithm && r.skipped.is_none())
    }
}

/// Regenerates drop `drop_index` for `cfg.num_requesting` UEs and runs every
/// requested selector on it.
pub fn run_drop(cfg: &SimConfig, drop_index: usize, opts: &CampaignOptions) -> Result<DropResult> {
    let seed = drop_seed(cfg.experiment.master_seed, cfg.num_requesting, drop_index);
    let scenario = Scenario::generate(cfg, seed)?;
    let mut out = run_scenario(&scenario, opts)?;
    out.drop_index = drop_index;
    Ok(out)
}

/// Runs the selectors on an explicit scenario.
pub fn run_scenario(scenario: &Scenario, opts: &CampaignOptions) -> Result<DropResult> {
    let cfg = &scenario.config;
    let routes = RouteSet::build(scenario, true);
    let mut runs = Vec::with_capacity(opts.algorithms.len());
    let mut audit = opts.audit.then(Audit::default);
    for &alg in &opts.algorithms {
        let policy = opts.policy_override.unwrap_or_else(|| alg.default_policy(cfg));
        match select(alg, scenario, &routes, policy) {
            Ok(sel) => {
                let tl = evaluate(&sel.assignment, scenario, policy)?;
                if let Some(a) = audit.as_mut() {
                    a.check(scenario, &sel.assignment, policy, &format!("seed {} {alg}", scenario.seed.unwrap_or(0)))?;
                }
                runs.push(AlgoRun {
                    algorithm: alg,
                    policy,
                    sum_s: tl.sum_duration(),
                    completion: tl.completion,
                    evaluations: sel.evaluations,
                    hop_counts: sel.assignment.hop_counts(),
                    assignment: Some(sel.assignment),
                    skipped: None,
                });
            }
            Err(e @ Error::BudgetExceeded { .. }) if alg.is_brute() => runs.push(AlgoRun {
                algorithm: alg,
                policy,
                completion: Vec::new(),
                sum_s: f64::NAN,
                evaluations: 0,
                hop_counts: Vec::new(),
                assignment: None,
                skipped: Some(e.to_string()),
            }),
            Err(e) => return Err(e),
        }
    }

    let mut dominance = Vec::new();
    if opts.algorithms.contains(&Algorithm::Benchmark) {
        let bench = benchmark_select(scenario);
        for run in runs.iter().filter(|r| matches!(r.algorithm, Algorithm::Greedy | Algorithm::GreedyPa)) {
            let b = sum_duration(&completion_times(&bench, scenario, run.policy)?);
            dominance.push(Dominance {
                algorithm: run.algorithm,
                policy: run.policy,
                greedy_sum_s: run.sum_s,
                benchmark_sum_s: b,
                holds: run.sum_s <= b * (1.0 + 1e-12),
            });
        }
    }
    Ok(DropResult { n: scenario.num_requesting(), drop_index: 0, seed: scenario.seed.unwrap_or(0), runs, dominance, audit })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgoSummary {
    pub algorithm: Algorithm,
    pub policy: PowerPolicy,
    /// Mean over drops of Σ t_n / N.
    pub mean_s: f64,
    pub drops_used: usize,
    pub drops_skipped: usize,
    /// Every UE's completion time from every drop that ran.
    pub samples: Vec<f64>,
    pub mean_evaluations: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NSummary {
    pub n: usize,
    pub algorithms: Vec<AlgoSummary>,
}

impl NSummary {
    pub fn get(&self, algorithm: Algorithm) -> Option<&AlgoSummary> {
        self.algorithms.iter().find(|a| a.algorithm == algorithm)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignResult {
    pub config: SimConfig,
    pub drops: usize,
    pub summaries: Vec<NSummary>,
    pub results: Vec<DropResult>,
}

impl CampaignResult {
    pub fn summary(&self, n: usize) -> Option<&NSummary> {
        self.summaries.iter().find(|s| s.n == n)
    }

    /// Drops where greedy lost to the benchmark under its own policy.
    pub fn dominance_failures(&self) -> Vec<(&DropResult, &Dominance)> {
        self.results.iter().flat_map(|r| r.dominance.iter().filter(|d| !d.holds).map(move |d| (r, d))).collect()
    }

    pub fn audit(&self) -> Option<Audit> {
        let mut total: Option<Audit> = None;
        for a in self.results.iter().filter_map(|r| r.audit.as_ref()) {
            total.get_or_insert_with(Audit::default).merge(a);
        }
        total
    }
}

fn summarize(n: usize, drops: &[DropResult], algorithms: &[Algorithm]) -> NSummary {
    let algorithms = algorithms
        .iter()
        .map(|&alg| {
            let runs: Vec<&AlgoRun> = drops.iter().filter_map(|d| d.runs.iter().find(|r| r.algorithm == alg)).collect();
            let ok: Vec<&&AlgoRun> = runs.iter().filter(|r| r.skipped.is_none()).collect();
            let used = ok.len();
            let mean = if used == 0 { f64::NAN } else { ok.iter().map(|r| r.sum_s / n as f64).sum::<f64>() / used as f64 };
            let evals = if used == 0 { 0.0 } else { ok.iter().map(|r| r.evaluations as f64).sum::<f64>() / used as f64 };
            AlgoSummary {
                algorithm: alg,
                policy: runs.first().map_or(PowerPolicy::DynamicResplit, |r| r.policy),
                mean_s: mean,
                drops_used: used,
                drops_skipped: runs.len() - used,
                samples: ok.iter().flat_map(|r| r.completion.iter().copied()).collect(),
                mean_evaluations: evals,
            }
        })
        .collect();
    NSummary { n, algorithms }
}

/// Runs `drops` drops for every N. Results depend only on the master seed,
/// never on the worker count or scheduling order.
pub fn run_campaign(cfg: &SimConfig, n_values: &[usize], drops: usize, opts: &CampaignOptions) -> Result<CampaignResult> {
    if drops == 0 {
        return Err(Error::Contract("a campaign needs at least one drop".into()));
    }
    let mut cfgs = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let mut c = cfg.clone();
        c.num_requesting = n;
        c.validate()?;
        cfgs.push(c);
    }
    let work = || -> Result<Vec<Vec<DropResult>>> {
        cfgs.iter().map(|c| (0..drops).into_par_iter().map(|d| run_drop(c, d, opts)).collect::<Result<Vec<_>>>()).collect()
    };
    let per_n = if opts.workers > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(opts.workers).build().map_err(|e| Error::Internal(e.to_string()))?.install(work)?
    } else {
        work()?
    };
    let summaries = n_values.iter().zip(&per_n).map(|(&n, r)| summarize(n, r, &opts.algorithms)).collect();
    Ok(CampaignResult { config: cfg.clone(), drops, summaries, results: per_n.into_iter().flatten().collect() })
}

/// Empirical CDF as (x, P[X ≤ x]) at every distinct sample; right-continuous
/// and reaching 1 at the largest sample.
pub fn compute_cdf(samples: &[f64]) -> Result<Vec<(f64, f64)>> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, &x) in s.iter().enumerate() {
        let p = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == x => last.1 = p,
            _ => out.push((x, p)),
        }
    }
    Ok(out)
}

/// Fraction of samples ≤ x.
pub fn cdf_at(samples: &[f64], x: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    Ok(samples.iter().filter(|&&v| v <= x).count() as f64 / samples.len() as f64)
}

/// `drop,N,algo,policy,ue,duration_s`, one row per UE per selector per drop.
pub fn durations_csv(result: &CampaignResult) -> String {
    let mut out = String::from("drop,N,algo,policy,ue,duration_s\n");
    for d in &result.results {
        for r in d.runs.iter().filter(|r| r.skipped.is_none()) {
            for (ue, t) in r.completion.iter().enumerate() {
                let _ = writeln!(out, "{},{},{},{},{},{}", d.drop_index, d.n, r.algorithm, r.policy, ue, t);
            }
        }
    }
    out
}

/// `N,algo,policy,mean_s,drops_used,drops_skipped,mean_evaluations`
pub fn means_csv(result: &CampaignResult) -> String {
    let mut out = String::from("N,algo,policy,mean_s,drops_used,drops_skipped,mean_evaluations\n");
    for s in &result.summaries {
        for a in &s.algorithms {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                s.n, a.algorithm, a.policy, a.mean_s, a.drops_used, a.drops_skipped, a.mean_evaluations
            );
        }
    }
    out
}

/// `{"N": {"algo": mean_s}}`
pub fn summary_json(result: &CampaignResult) -> String {
    let mut map: BTreeMap<usize, BTreeMap<String, Option<f64>>> = BTreeMap::new();
    for s in &result.summaries {
        let e = map.entry(s.n).or_default();
        for a in &s.algorithms {
            e.insert(a.algorithm.to_string(), a.mean_s.is_finite().then_some(a.mean_s));
        }
    }
    serde_json::to_string_pretty(&map).expect("plain map serializes")
}

/// `duration_s,cdf`
pub fn cdf_csv(points: &[(f64, f64)]) -> String {
    let mut out = String::from("duration_s,cdf\n");
    for (x, p) in points {
        let _ = writeln!(out, "{x},{p}");
    }
    out
}
