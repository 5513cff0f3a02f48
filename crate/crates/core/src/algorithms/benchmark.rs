use crate::config::db_to_linear;
use crate::routing::{source_options, Route};
use crate::scenario::{NodeKind, Scenario};
use crate::schedule::Assignment;
use smallvec::smallvec;

/// Every UE takes the direct link from the caching node with the largest
/// biased received power P_max · gain · bias. Ties go to the lower node id.
pub fn benchmark_select(scenario: &Scenario) -> Assignment {
    let bias = &scenario.config.bias;
    let routes = (0..scenario.num_requesting())
        .map(|ue| {
            let f = scenario.content_of(ue);
            let dest = scenario.nodes.requesting_id(ue);
            let mut best = None;
            let mut best_power = f64::NEG_INFINITY;
            for src in source_options(scenario, f) {
                let b = match scenario.nodes.kind(src) {
                    NodeKind::Gbs => bias.gbs_db,
                    _ => bias.uav_db,
                };
                let power = scenario.p_max(src) * scenario.gain(src, dest) * db_to_linear(b);
                if best.is_none() || power > best_power {
                    best = Some(src);
                    best_power = power;
                }
            }
            let src = best.expect("the GBS always caches");
            Route { ue, content: f, chain: smallvec![src, dest] }
        })
        .collect();
    Assignment::new(routes)
}
