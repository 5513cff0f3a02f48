//! Route selectors: the biased-power benchmark, the greedy joint route
//! selection with power allocation, and the brute-force oracle.

mod benchmark;
mod brute;
mod greedy;

use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use benchmark::benchmark_select;
pub use brute::{brute_force_select, BruteOptions};
pub use greedy::{greedy_direct_phase, greedy_select, multihop_gain, DirectPhaseResult, GreedyStep};

use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::routing::RouteSet;
use crate::scenario::Scenario;
use crate::schedule::{Assignment, PowerPolicy};

/// Selector and the power policy its label implies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Benchmark,
    /// Greedy without power allocation.
    Greedy,
    /// Greedy with dynamic power re-split.
    GreedyPa,
    Brute,
    BrutePa,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [Algorithm::Benchmark, Algorithm::Greedy, Algorithm::GreedyPa, Algorithm::Brute, Algorithm::BrutePa];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Benchmark => "benchmark",
            Algorithm::Greedy => "greedy",
            Algorithm::GreedyPa => "greedy-pa",
            Algorithm::Brute => "brute",
            Algorithm::BrutePa => "brute-pa",
        }
    }

    /// Policy used to select and evaluate, unless overridden.
    pub fn default_policy(self, cfg: &SimConfig) -> PowerPolicy {
        match self {
            Algorithm::Benchmark => PowerPolicy::Sequential,
            Algorithm::Greedy | Algorithm::Brute => cfg.experiment.wo_pa_policy,
            Algorithm::GreedyPa | Algorithm::BrutePa => PowerPolicy::DynamicResplit,
        }
    }

    pub fn is_brute(self) -> bool {
        matches!(self, Algorithm::Brute | Algorithm::BrutePa)
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.as_str() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::Parse(format!("unknown algorithm `{s}` (expected one of benchmark, greedy, greedy-pa, brute, brute-pa)")))
    }
}

/// Parses a comma-separated selector list, keeping order and dropping repeats.
pub fn parse_algorithms(list: &str) -> Result<Vec<Algorithm>> {
    let mut out = Vec::new();
    for part in list.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let a: Algorithm = part.parse()?;
        if !out.contains(&a) {
            out.push(a);
        }
    }
    if out.is_empty() {
        return Err(Error::Parse("empty algorithm list".into()));
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct Selection {
    pub assignment: Assignment,
    /// Schedule evaluations spent by the selector.
    pub evaluations: u64,
    /// Committed reroutes (greedy only).
    pub trace: Vec<GreedyStep>,
}

/// Runs one selector under `policy`.
pub fn select(algorithm: Algorithm, scenario: &Scenario, routes: &RouteSet, policy: PowerPolicy) -> Result<Selection> {
    match algorithm {
        Algorithm::Benchmark => Ok(Selection { assignment: benchmark_select(scenario), evaluations: 0, trace: Vec::new() }),
        Algorithm::Greedy | Algorithm::GreedyPa => greedy_select(scenario, routes, policy),
        Algorithm::Brute | Algorithm::BrutePa => {
            let cfg = &scenario.config.brute;
            let seed = if cfg.bound { Some(greedy_select(scenario, routes, policy)?.assignment) } else { None };
            brute_force_select(scenario, routes, policy, &BruteOptions { budget: cfg.budget, bound: cfg.bound, seed })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.as_str().parse::<Algorithm>().unwrap(), a);
        }
        assert!("optimal".parse::<Algorithm>().is_err());
    }

    #[test]
    fn list_parsing_keeps_order() {
        assert_eq!(parse_algorithms("greedy-pa, benchmark,greedy-pa").unwrap(), vec![Algorithm::GreedyPa, Algorithm::Benchmark]);
        assert!(parse_algorithms(" , ").is_err());
    }

    #[test]
    fn default_policies_follow_labels() {
        let cfg = SimConfig::default();
        assert_eq!(Algorithm::Benchmark.default_policy(&cfg), PowerPolicy::Sequential);
        assert_eq!(Algorithm::Greedy.default_policy(&cfg), PowerPolicy::StaticSplit);
        assert_eq!(Algorithm::BrutePa.default_policy(&cfg), PowerPolicy::DynamicResplit);
    }
}

#[cfg(test)]
pub(crate) mod fixture {
    use crate::config::SimConfig;
    use crate::content::{CacheState, Catalog, ContentId, RequestSet};
    use crate::scenario::{NodeSet, Point3, Scenario};

    /// U=20, K=2, C=3, F=10, relays capped at the 5 nearest RUEs.
    pub fn small(seed: u64, n: usize) -> Scenario {
        let mut cfg = SimConfig::default();
        cfg.num_ues = 20;
        cfg.num_uavs = 2;
        cfg.cache_capacity = 3;
        cfg.catalog_size = 10;
        cfg.num_requesting = n;
        cfg.relay.max_rues = 5;
        Scenario::generate(&cfg, seed).unwrap()
    }

    /// Open terrain with the reference GBS; UAVs at 100 m, UEs at 1.5 m.
    pub fn handmade(uavs: &[(f64, f64)], ues: &[(f64, f64)], rues: &[(f64, f64)], cached: &[&[usize]], requests: &[usize]) -> Scenario {
        let mut cfg = SimConfig::default();
        cfg.num_uavs = uavs.len();
        cfg.num_ues = ues.len() + rues.len();
        cfg.num_requesting = ues.len();
        let nodes = NodeSet {
            gbs: Point3::new(cfg.gbs.x_m, cfg.gbs.y_m, cfg.height.gbs_m),
            uavs: uavs.iter().map(|&(x, y)| Point3::new(x, y, cfg.height.uav_m)).collect(),
            requesting_ues: ues.iter().map(|&(x, y)| Point3::new(x, y, cfg.height.ue_m)).collect(),
            relay_ues: rues.iter().map(|&(x, y)| Point3::new(x, y, cfg.height.ue_m)).collect(),
        };
        let mut caches = CacheState::empty(uavs.len());
        for (k, set) in cached.iter().enumerate() {
            caches.per_uav[k] = set.iter().map(|&f| ContentId(f)).collect();
            caches.per_uav[k].sort();
        }
        let catalog = Catalog::uniform(cfg.catalog_size, cfg.content_size_bits, cfg.zipf_gamma);
        let requests = RequestSet(requests.iter().map(|&f| ContentId(f)).collect());
        Scenario::from_parts(cfg, vec![], nodes, catalog, caches, requests).unwrap()
    }
}
