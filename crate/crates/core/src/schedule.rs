//! Delivery-time evaluation of a route assignment.
//!
//! Every requesting UE owns an orthogonal channel of width B_n that is used
//! on each hop of its route. A transmitter may serve several contents at
//! once and divides its power budget among them according to a
//! [`PowerPolicy`]. Relays store and forward: hop h+1 of a content starts
//! the instant hop h completes. The evaluator is an exact event-driven
//! fluid simulation; between two events every rate is constant.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::channel::{link_rate, NoiseModel};
use crate::error::{Error, Result};
use crate::routing::Route;
use crate::scenario::{NodeId, NodeKind, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerPolicy {
    /// One content at a time at full power, shortest hop first, never preempted.
    Sequential,
    /// Each content gets P / L, L being the number of contents the node
    /// carries in the whole assignment. Freed power is never reassigned.
    #[serde(alias = "static")]
    StaticSplit,
    /// The budget is split equally among the contents present at the node and
    /// re-split whenever one arrives or finishes.
    #[serde(alias = "dynamic")]
    DynamicResplit,
}

impl PowerPolicy {
    pub const ALL: [PowerPolicy; 3] = [PowerPolicy::Sequential, PowerPolicy::StaticSplit, PowerPolicy::DynamicResplit];

    pub fn as_str(self) -> &'static str {
        match self {
            PowerPolicy::Sequential => "sequential",
            PowerPolicy::StaticSplit => "static",
            PowerPolicy::DynamicResplit => "dynamic",
        }
    }
}

impl std::fmt::Display for PowerPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PowerPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sequential" | "seq" => Ok(PowerPolicy::Sequential),
            "static" | "static_split" | "static-split" => Ok(PowerPolicy::StaticSplit),
            "dynamic" | "dynamic_resplit" | "dynamic-resplit" => Ok(PowerPolicy::DynamicResplit),
            other => Err(Error::Parse(format!("unknown power policy `{other}`"))),
        }
    }
}

/// S / rate, the time to push `bits` through one hop at a fixed power.
pub fn hop_duration(bits: f64, bandwidth_hz: f64, p_tx_w: f64, gain: f64, noise: &NoiseModel) -> Result<f64> {
    let rate = link_rate(p_tx_w, gain, bandwidth_hz, noise);
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::Internal(format!("hop rate {rate} is not positive and finite")));
    }
    Ok(bits / rate)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowHop {
    pub tx: NodeId,
    pub gain: f64,
}

/// One content travelling over its route.
#[derive(Debug, Clone, PartialEq)]
pub struct Flow {
    /// Requesting-UE index; also the tie-breaker between flows.
    pub ue: usize,
    pub bits: f64,
    pub bandwidth_hz: f64,
    pub hops: SmallVec<[FlowHop; 3]>,
}

impl Flow {
    pub fn from_route(scenario: &Scenario, route: &Route) -> Self {
        Self {
            ue: route.ue,
            bits: scenario.catalog.size(route.content),
            bandwidth_hz: scenario.channel_bandwidth_hz(),
            hops: route.hops().map(|(tx, rx)| FlowHop { tx, gain: scenario.gain(tx, rx) }).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    HopStart,
    HopFinish,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimelineEvent {
    pub time: f64,
    pub node: NodeId,
    pub ue: usize,
    pub hop: usize,
    pub kind: EventKind,
}

/// Constant-power stretch of one hop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerSegment {
    pub start: f64,
    pub end: f64,
    pub node: NodeId,
    pub ue: usize,
    pub hop: usize,
    pub power_w: f64,
    pub rate_bps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timeline {
    pub policy: PowerPolicy,
    /// Completion time of each flow, in the order the flows were given
    /// (by requesting UE for [`evaluate`]).
    pub completion: Vec<f64>,
    pub events: Vec<TimelineEvent>,
    pub segments: Vec<PowerSegment>,
    /// Bits carried by each flow.
    pub flow_bits: Vec<f64>,
    pub flow_ues: Vec<usize>,
    pub flow_hops: Vec<usize>,
    /// Budget of every transmitter that appears in the timeline.
    pub budgets: Vec<(NodeId, f64)>,
}

/// Relative slack allowed when checking per-node power sums.
pub const POWER_CAP_RTOL: f64 = 1e-12;
/// Relative slack allowed when integrating delivered bits.
pub const BIT_CONSERVATION_RTOL: f64 = 1e-6;

impl Timeline {
    pub fn sum_duration(&self) -> f64 {
        sum_duration(&self.completion)
    }

    /// Σ allocated power at any node never exceeds its budget (c1/c2).
    pub fn check_power_caps(&self) -> std::result::Result<(), String> {
        for &(node, cap) in &self.budgets {
            // (time, starts-after-ends, ±power)
            let mut marks: Vec<(f64, bool, f64)> = Vec::new();
            for s in self.segments.iter().filter(|s| s.node == node) {
                if s.power_w < 0.0 {
                    return Err(format!("node {} assigns negative power {}", node.0, s.power_w));
                }
                marks.push((s.start, true, s.power_w));
                marks.push((s.end, false, -s.power_w));
            }
            marks.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut total = 0.0;
            let mut i = 0;
            while i < marks.len() {
                let time = marks[i].0;
                while i < marks.len() && marks[i].0 == time {
                    total += marks[i].2;
                    i += 1;
                }
                if total > cap * (1.0 + POWER_CAP_RTOL) {
                    return Err(format!("node {} allocates {total} W > {cap} W at t={time}", node.0));
                }
            }
        }
        Ok(())
    }

    /// Every hop integrates to the content size.
    pub fn check_bit_conservation(&self) -> std::result::Result<(), String> {
        for (flow, (&bits, &hops)) in self.flow_bits.iter().zip(&self.flow_hops).enumerate() {
            let ue = self.flow_ues[flow];
            for hop in 0..hops {
                let delivered: f64 =
                    self.segments.iter().filter(|s| s.ue == ue && s.hop == hop).map(|s| s.rate_bps * (s.end - s.start)).sum();
                if ((delivered - bits) / bits).abs() > BIT_CONSERVATION_RTOL {
                    return Err(format!("UE {ue} hop {hop}: delivered {delivered} of {bits} bits"));
                }
            }
        }
        Ok(())
    }

    /// Hop h+1 never starts before hop h finishes, and events are time-ordered.
    pub fn check_ordering(&self) -> std::result::Result<(), String> {
        if self.events.windows(2).any(|w| w[1].time < w[0].time) {
            return Err("event times decrease".into());
        }
        for &ue in &self.flow_ues {
            let mut last_finish = 0.0;
            for e in self.events.iter().filter(|e| e.ue == ue) {
                match e.kind {
                    EventKind::HopStart if e.time < last_finish => {
                        return Err(format!("UE {ue} hop {} starts before the previous hop ends", e.hop));
                    }
                    EventKind::HopFinish => last_finish = e.time,
                    _ => {}
                }
            }
        }
        Ok(())
    }

    /// `time,node,ue,hop,event,power_W`: one row per event, carrying the
    /// power the flow holds right after it.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time,node,ue,hop,event,power_W\n");
        for e in &self.events {
            let power = match e.kind {
                EventKind::HopFinish => 0.0,
                EventKind::HopStart => {
                    self.segments.iter().find(|s| s.ue == e.ue && s.hop == e.hop && s.start >= e.time).map_or(0.0, |s| s.power_w)
                }
            };
            let kind = match e.kind {
                EventKind::HopStart => "hop_start",
                EventKind::HopFinish => "hop_finish",
            };
            let _ = writeln!(out, "{:.9},{},{},{},{},{:.6e}", e.time, e.node.0, e.ue, e.hop, kind, power);
        }
        out
    }

    /// `start,end,node,ue,hop,power_W,rate_bps` for Gantt-style plots.
    pub fn segments_csv(&self) -> String {
        let mut out = String::from("start,end,node,ue,hop,power_W,rate_bps\n");
        for s in &self.segments {
            let _ = writeln!(out, "{:.9},{:.9},{},{},{},{:.6e},{:.6e}", s.start, s.end, s.node.0, s.ue, s.hop, s.power_w, s.rate_bps);
        }
        out
    }
}

/// Σ_n t_n, the objective.
pub fn sum_duration(completion: &[f64]) -> f64 {
    completion.iter().sum()
}

struct Recorder<'a> {
    events: &'a mut Vec<TimelineEvent>,
    segments: &'a mut Vec<PowerSegment>,
}

/// Runs the fluid simulation over `flows`. `budgets` is indexed by node id.
/// Returns the completion time of each flow.
pub fn simulate(flows: &[Flow], budgets: &[f64], noise: &NoiseModel, policy: PowerPolicy) -> Result<Vec<f64>> {
    run(flows, budgets, noise, policy, None)
}

/// Like [`simulate`] but keeps every event and power segment.
pub fn simulate_recorded(flows: &[Flow], budgets: &[f64], noise: &NoiseModel, policy: PowerPolicy) -> Result<Timeline> {
    let mut events = Vec::new();
    let mut segments = Vec::new();
    let completion = run(flows, budgets, noise, policy, Some(Recorder { events: &mut events, segments: &mut segments }))?;
    let mut nodes: Vec<NodeId> = flows.iter().flat_map(|f| f.hops.iter().map(|h| h.tx)).collect();
    nodes.sort();
    nodes.dedup();
    Ok(Timeline {
        policy,
        completion,
        events,
        segments,
        flow_bits: flows.iter().map(|f| f.bits).collect(),
        flow_ues: flows.iter().map(|f| f.ue).collect(),
        flow_hops: flows.iter().map(|f| f.hops.len()).collect(),
        budgets: nodes.into_iter().map(|n| (n, budgets[n.index()])).collect(),
    })
}

fn run(flows: &[Flow], budgets: &[f64], noise: &NoiseModel, policy: PowerPolicy, mut rec: Option<Recorder<'_>>) -> Result<Vec<f64>> {
    let nf = flows.len();
    if nf == 0 {
        return Ok(Vec::new());
    }
    if let Some(f) = flows.iter().find(|f| f.hops.is_empty()) {
        return Err(Error::Contract(format!("flow of UE {} has no hops", f.ue)));
    }

    // Local numbering of the transmitters involved.
    let mut nodes: SmallVec<[NodeId; 32]> = flows.iter().flat_map(|f| f.hops.iter().map(|h| h.tx)).collect();
    nodes.sort_unstable();
    nodes.dedup();
    let local = |id: NodeId| nodes.binary_search(&id).expect("node collected above");
    let hop_node: Vec<SmallVec<[usize; 3]>> = flows.iter().map(|f| f.hops.iter().map(|h| local(h.tx)).collect()).collect();
    let budget: SmallVec<[f64; 32]> = nodes.iter().map(|n| budgets[n.index()]).collect();

    let mut load: SmallVec<[usize; 32]> = SmallVec::from_elem(0, nodes.len());
    for hn in &hop_node {
        for &n in hn {
            load[n] += 1;
        }
    }

    let mut members: Vec<SmallVec<[usize; 8]>> = vec![SmallVec::new(); nodes.len()];
    let mut serving: SmallVec<[Option<usize>; 32]> = SmallVec::from_elem(None, nodes.len());
    let mut dirty: SmallVec<[bool; 32]> = SmallVec::from_elem(false, nodes.len());

    // Each flow advances on its own clock: `rem0` bits were left at `t0`
    // and it has moved at `rate` since. A flow is only touched when its own
    // node reallocates, so its arithmetic does not depend on unrelated flows.
    let mut hop = vec![0usize; nf];
    let mut t0 = vec![0.0f64; nf];
    let mut rem0: Vec<f64> = flows.iter().map(|f| f.bits).collect();
    let mut power = vec![0.0f64; nf];
    let mut rate = vec![0.0f64; nf];
    let mut completion = vec![f64::NAN; nf];
    let mut done = 0usize;

    let rate_of = |i: usize, p: f64, h: usize| -> f64 {
        if p > 0.0 {
            link_rate(p, flows[i].hops[h].gain, flows[i].bandwidth_hz, noise)
        } else {
            0.0
        }
    };
    let finish_of = |t0: f64, rem0: f64, rate: f64| if rate > 0.0 { t0 + rem0 / rate } else { f64::INFINITY };

    for (i, nodes) in hop_node.iter().enumerate() {
        let n = nodes[0];
        members[n].push(i);
        dirty[n] = true;
    }

    let mut t = 0.0f64;
    let mut finished: SmallVec<[usize; 8]> = SmallVec::new();
    loop {
        // Reallocate power at nodes whose membership changed.
        for n in 0..nodes.len() {
            if !dirty[n] {
                continue;
            }
            dirty[n] = false;
            let p_max = budget[n];
            let mut set_power = |i: usize, p: f64, rec: &mut Option<Recorder<'_>>| {
                if power[i] == p {
                    return;
                }
                if rate[i] > 0.0 {
                    if let Some(r) = rec.as_mut() {
                        r.segments.push(PowerSegment {
                            start: t0[i],
                            end: t,
                            node: nodes[n],
                            ue: flows[i].ue,
                            hop: hop[i],
                            power_w: power[i],
                            rate_bps: rate[i],
                        });
                    }
                    rem0[i] = (rem0[i] - rate[i] * (t - t0[i])).max(0.0);
                } else if let Some(r) = rec.as_mut() {
                    r.events.push(TimelineEvent { time: t, node: nodes[n], ue: flows[i].ue, hop: hop[i], kind: EventKind::HopStart });
                }
                t0[i] = t;
                power[i] = p;
                rate[i] = rate_of(i, p, hop[i]);
            };
            match policy {
                PowerPolicy::DynamicResplit => {
                    let share = p_max / members[n].len().max(1) as f64;
                    for &i in &members[n] {
                        set_power(i, share, &mut rec);
                    }
                }
                PowerPolicy::StaticSplit => {
                    let share = p_max / load[n] as f64;
                    for &i in &members[n] {
                        set_power(i, share, &mut rec);
                    }
                }
                PowerPolicy::Sequential => {
                    if serving[n].is_none() && !members[n].is_empty() {
                        // shortest full-power hop first, ties by UE
                        let pick = members[n]
                            .iter()
                            .copied()
                            .min_by(|&a, &b| {
                                let da = flows[a].bits / rate_of(a, p_max, hop[a]);
                                let db = flows[b].bits / rate_of(b, p_max, hop[b]);
                                da.total_cmp(&db).then(flows[a].ue.cmp(&flows[b].ue)).then(a.cmp(&b))
                            })
                            .expect("non-empty");
                        serving[n] = Some(pick);
                        set_power(pick, p_max, &mut rec);
                    }
                }
            }
        }

        // Next completion among transmitting flows.
        let mut t_next = f64::INFINITY;
        for i in 0..nf {
            t_next = t_next.min(finish_of(t0[i], rem0[i], rate[i]));
        }
        if !t_next.is_finite() {
            return Err(Error::Internal(format!("no flow can progress at t={t} with {done} of {nf} delivered")));
        }
        t = t_next;

        finished.clear();
        finished.extend((0..nf).filter(|&i| finish_of(t0[i], rem0[i], rate[i]) <= t));
        // (node id, UE) order
        finished.sort_by_key(|&i| (nodes[hop_node[i][hop[i]]], flows[i].ue, i));

        for &i in &finished {
            let n = hop_node[i][hop[i]];
            if let Some(r) = rec.as_mut() {
                r.segments.push(PowerSegment {
                    start: t0[i],
                    end: t,
                    node: nodes[n],
                    ue: flows[i].ue,
                    hop: hop[i],
                    power_w: power[i],
                    rate_bps: rate[i],
                });
                r.events.push(TimelineEvent { time: t, node: nodes[n], ue: flows[i].ue, hop: hop[i], kind: EventKind::HopFinish });
            }
            members[n].retain(|&mut j| j != i);
            dirty[n] = true;
            if serving[n] == Some(i) {
                serving[n] = None;
            }
            power[i] = 0.0;
            rate[i] = 0.0;
            t0[i] = t;
            hop[i] += 1;
            if hop[i] == flows[i].hops.len() {
                completion[i] = t;
                done += 1;
            } else {
                rem0[i] = flows[i].bits;
                let next = hop_node[i][hop[i]];
                members[next].push(i);
                dirty[next] = true;
            }
        }
        if done == nf {
            break;
        }
    }
    Ok(completion)
}

/// x_{n,f,m}: one route per requesting UE, indexed by UE.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Assignment {
    pub routes: Vec<Route>,
}

impl Assignment {
    pub fn new(routes: Vec<Route>) -> Self {
        Self { routes }
    }

    /// Checks one route per UE (c3), the hop cap (c4), and route well-formedness.
    pub fn validate(&self, scenario: &Scenario) -> Result<()> {
        let n = scenario.num_requesting();
        if self.routes.len() != n {
            return Err(Error::Contract(format!("{} routes for {n} requesting UEs", self.routes.len())));
        }
        for (ue, r) in self.routes.iter().enumerate() {
            if r.ue != ue {
                return Err(Error::Contract(format!("slot {ue} holds a route for UE {}", r.ue)));
            }
            if r.content != scenario.content_of(ue) {
                return Err(Error::Contract(format!("UE {ue} route carries {} but {} was requested", r.content, scenario.content_of(ue))));
            }
            if r.chain.len() < 2 || r.hop_count() > scenario.config.max_hops {
                return Err(Error::Contract(format!("UE {ue} route has {} hops (max {})", r.hop_count(), scenario.config.max_hops)));
            }
            if *r.chain.last().unwrap() != scenario.nodes.requesting_id(ue) {
                return Err(Error::Contract(format!("UE {ue} route does not end at the UE")));
            }
            if !scenario.caches_content(r.source(), r.content) {
                return Err(Error::Contract(format!("UE {ue} route starts at node {} which lacks {}", r.source().0, r.content)));
            }
            for &relay in r.relays() {
                if !matches!(scenario.nodes.kind(relay), NodeKind::Uav(_) | NodeKind::RelayUe(_)) {
                    return Err(Error::Contract(format!("UE {ue} route relays through node {}", relay.0)));
                }
            }
            let mut seen: SmallVec<[NodeId; 4]> = r.chain.clone();
            seen.sort();
            seen.dedup();
            if seen.len() != r.chain.len() {
                return Err(Error::Contract(format!("UE {ue} route visits a node twice")));
            }
        }
        Ok(())
    }

    pub fn hop_counts(&self) -> Vec<usize> {
        self.routes.iter().map(Route::hop_count).collect()
    }
}

/// Full evaluation with contract checks and a recorded timeline.
pub fn evaluate(assignment: &Assignment, scenario: &Scenario, policy: PowerPolicy) -> Result<Timeline> {
    assignment.validate(scenario)?;
    let flows: Vec<Flow> = assignment.routes.iter().map(|r| Flow::from_route(scenario, r)).collect();
    let tl = simulate_recorded(&flows, scenario.power_budgets(), scenario.noise(), policy)?;
    if tl.completion.iter().any(|t| !t.is_finite()) {
        return Err(Error::Internal("non-finite completion time".into()));
    }
    Ok(tl)
}

/// Completion times only, after contract checks.
pub fn completion_times(assignment: &Assignment, scenario: &Scenario, policy: PowerPolicy) -> Result<Vec<f64>> {
    assignment.validate(scenario)?;
    let flows: Vec<Flow> = assignment.routes.iter().map(|r| Flow::from_route(scenario, r)).collect();
    simulate(&flows, scenario.power_budgets(), scenario.noise(), policy)
}

/// Counting front-end used by the selectors. Skips contract checks; the
/// selectors only ever hand it routes from a validated route set.
pub struct Evaluator<'s> {
    pub scenario: &'s Scenario,
    pub policy: PowerPolicy,
    calls: std::cell::Cell<u64>,
}

impl<'s> Evaluator<'s> {
    pub fn new(scenario: &'s Scenario, policy: PowerPolicy) -> Self {
        Self { scenario, policy, calls: std::cell::Cell::new(0) }
    }

    /// Completion time of each route's flow, in iteration order.
    pub fn completions<'r>(&self, routes: impl IntoIterator<Item = &'r Route>) -> Result<Vec<f64>> {
        self.calls.set(self.calls.get() + 1);
        let flows: Vec<Flow> = routes.into_iter().map(|r| Flow::from_route(self.scenario, r)).collect();
        simulate(&flows, self.scenario.power_budgets(), self.scenario.noise(), self.policy)
    }

    pub fn calls(&self) -> u64 {
        self.calls.get()
    }
}
