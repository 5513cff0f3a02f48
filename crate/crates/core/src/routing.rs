//! Route space: direct, two-hop and three-hop chains from a caching source
//! to each requesting UE, and the removal of chains that cannot beat a
//! direct route.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::channel::link_rate;
use crate::content::ContentId;
use crate::scenario::{NodeId, NodeKind, Scenario};

pub type Chain = SmallVec<[NodeId; 4]>;

/// Ordered transmitter chain `[source, relays.., ue]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Route {
    /// Requesting-UE index.
    pub ue: usize,
    pub content: ContentId,
    pub chain: Chain,
}

impl Route {
    pub fn hop_count(&self) -> usize {
        self.chain.len() - 1
    }

    pub fn is_direct(&self) -> bool {
        self.chain.len() == 2
    }

    pub fn source(&self) -> NodeId {
        self.chain[0]
    }

    pub fn relays(&self) -> &[NodeId] {
        &self.chain[1..self.chain.len() - 1]
    }

    /// Every node that transmits on this route.
    pub fn transmitters(&self) -> &[NodeId] {
        &self.chain[..self.chain.len() - 1]
    }

    pub fn hops(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.chain.windows(2).map(|w| (w[0], w[1]))
    }

    /// y_{k,f,m}: base station `node` is on this route.
    pub fn uses_base_station(&self, scenario: &Scenario, node: NodeId) -> bool {
        scenario.nodes.kind(node).is_base_station() && self.transmitters().contains(&node)
    }

    /// v_{r,f,m}: relay UE `node` is on this route.
    pub fn uses_relay_ue(&self, scenario: &Scenario, node: NodeId) -> bool {
        matches!(scenario.nodes.kind(node), NodeKind::RelayUe(_)) && self.relays().contains(&node)
    }

    pub fn label(&self) -> String {
        self.chain.iter().map(|n| n.0.to_string()).collect::<Vec<_>>().join(">")
    }
}

/// The GBS plus every UAV caching `f`, in node-id order.
pub fn source_options(scenario: &Scenario, f: ContentId) -> Vec<NodeId> {
    std::iter::once(NodeId::GBS)
        .chain((0..scenario.num_uavs()).filter(|&k| scenario.caches.contains(k, f)).map(|k| scenario.nodes.uav_id(k)))
        .collect()
}

/// Candidate relays for requesting UE `ue`: every UAV and every RUE, or
/// only the nearest `relay.max_rues` RUEs when that cap is set. Sorted by id.
pub fn relay_pool(scenario: &Scenario, ue: usize) -> Vec<NodeId> {
    let nodes = &scenario.nodes;
    let mut pool: Vec<NodeId> = (0..scenario.num_uavs()).map(|k| nodes.uav_id(k)).collect();
    let mut rues: Vec<NodeId> = (0..nodes.relay_ues.len()).map(|r| nodes.relay_id(r)).collect();
    let cap = scenario.config.relay.max_rues;
    if cap > 0 && cap < rues.len() {
        let me = nodes.requesting_ues[ue];
        rues.sort_by(|a, b| {
            let da = nodes.position(*a).distance(&me);
            let db = nodes.position(*b).distance(&me);
            da.total_cmp(&db).then(a.cmp(b))
        });
        rues.truncate(cap);
        rues.sort();
    }
    pool.extend(rues);
    pool
}

/// All chains of at most `max_hops` hops, ordered by source id and then
/// lexicographically by relay ids (direct first).
pub fn enumerate_routes(scenario: &Scenario, ue: usize, f: ContentId, max_hops: usize) -> Vec<Route> {
    let dest = scenario.nodes.requesting_id(ue);
    let pool = relay_pool(scenario, ue);
    let mut out = Vec::new();
    for src in source_options(scenario, f) {
        out.push(Route { ue, content: f, chain: SmallVec::from_slice(&[src, dest]) });
        if max_hops < 2 {
            continue;
        }
        for &r1 in pool.iter().filter(|&&r| r != src) {
            out.push(Route { ue, content: f, chain: SmallVec::from_slice(&[src, r1, dest]) });
            if max_hops < 3 {
                continue;
            }
            for &r2 in pool.iter().filter(|&&r| r != src && r != r1) {
                out.push(Route { ue, content: f, chain: SmallVec::from_slice(&[src, r1, r2, dest]) });
            }
        }
    }
    out
}

/// Closed-form route count: Σ over sources of 1 + q + q(q-1) (3 hops),
/// where q is the relay pool size without the source.
pub fn route_count(pool_sizes_without_source: &[usize], max_hops: usize) -> usize {
    pool_sizes_without_source
        .iter()
        .map(|&q| match max_hops {
            1 => 1,
            2 => 1 + q,
            _ => 1 + q + q * q.saturating_sub(1),
        })
        .sum()
}

/// Single-content duration of one hop when the transmitter uses its whole budget.
pub fn full_power_hop_duration(scenario: &Scenario, tx: NodeId, rx: NodeId, bits: f64) -> f64 {
    bits / link_rate(scenario.p_max(tx), scenario.gain(tx, rx), scenario.channel_bandwidth_hz(), scenario.noise())
}

/// Contention-free duration of a whole route.
pub fn full_power_route_duration(scenario: &Scenario, route: &Route) -> f64 {
    let bits = scenario.catalog.size(route.content);
    route.hops().map(|(a, b)| full_power_hop_duration(scenario, a, b, bits)).sum()
}

/// Drops every multi-hop route with a hop slower, at full power, than the
/// fastest direct route of the same UE. Direct routes are always kept.
pub fn prune_routes(scenario: &Scenario, routes: Vec<Route>) -> Vec<Route> {
    let Some(first) = routes.first() else {
        return routes;
    };
    let bits = scenario.catalog.size(first.content);
    let best_direct = routes
        .iter()
        .filter(|r| r.is_direct())
        .map(|r| full_power_hop_duration(scenario, r.chain[0], r.chain[1], bits))
        .fold(f64::INFINITY, f64::min);
    routes
        .into_iter()
        .filter(|r| r.is_direct() || r.hops().all(|(a, b)| full_power_hop_duration(scenario, a, b, bits) <= best_direct))
        .collect()
}

/// Candidate routes of every requesting UE.
#[derive(Debug, Clone)]
pub struct RouteSet {
    pub per_ue: Vec<Vec<Route>>,
    /// Route count before pruning, summed over UEs.
    pub enumerated: usize,
}

impl RouteSet {
    pub fn build(scenario: &Scenario, prune: bool) -> Self {
        let h_max = scenario.config.max_hops;
        let mut enumerated = 0;
        let per_ue = (0..scenario.num_requesting())
            .map(|ue| {
                let routes = enumerate_routes(scenario, ue, scenario.content_of(ue), h_max);
                enumerated += routes.len();
                if prune {
                    prune_routes(scenario, routes)
                } else {
                    routes
                }
            })
            .collect();
        Self { per_ue, enumerated }
    }

    /// M_total
    pub fn total(&self) -> usize {
        self.per_ue.iter().map(Vec::len).sum()
    }

    pub fn multi_hop_total(&self) -> usize {
        self.per_ue.iter().flatten().filter(|r| !r.is_direct()).count()
    }

    /// Number of complete assignments (one route per UE).
    pub fn combinations(&self) -> u128 {
        self.per_ue.iter().map(|r| r.len() as u128).fold(1u128, |a, b| a.saturating_mul(b))
    }

    /// One line per route: `ue,content,chain,gains_db`.
    pub fn dump(&self, scenario: &Scenario) -> String {
        let mut out = String::from("ue,content,chain,hop_gains_db\n");
        for r in self.per_ue.iter().flatten() {
            let gains: Vec<String> = r.hops().map(|(a, b)| format!("{:.2}", 10.0 * scenario.gain(a, b).log10())).collect();
            let _ = writeln!(out, "{},{},{},{}", r.ue, r.content.0, r.label(), gains.join(";"));
        }
        out
    }
}
