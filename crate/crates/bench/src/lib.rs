//! Shared fixtures for the selector benchmarks.

use cachehop::seed::drop_seed;
use cachehop::{RouteSet, Scenario, SimConfig};

/// Default cell with `n` requesting UEs and relays capped at `max_rues`.
pub fn drop(n: usize, max_rues: usize, index: usize) -> (Scenario, RouteSet) {
    let mut cfg = SimConfig::default();
    cfg.num_requesting = n;
    cfg.relay.max_rues = max_rues;
    let s = Scenario::generate(&cfg, drop_seed(cfg.experiment.master_seed, n, index)).expect("default config is valid");
    let routes = RouteSet::build(&s, true);
    (s, routes)
}

/// Small cell where brute force is still affordable.
pub fn small_drop(n: usize, index: usize) -> (Scenario, RouteSet) {
    let mut cfg = SimConfig::default();
    cfg.num_ues = 20;
    cfg.num_uavs = 2;
    cfg.num_requesting = n;
    cfg.relay.max_rues = 5;
    let s = Scenario::generate(&cfg, drop_seed(cfg.experiment.master_seed, n, index)).expect("small config is valid");
    let routes = RouteSet::build(&s, true);
    (s, routes)
}
