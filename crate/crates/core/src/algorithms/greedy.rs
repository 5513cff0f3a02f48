use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use super::Selection;
use crate::error::{Error, Result};
use crate::routing::{full_power_route_duration, Route, RouteSet};
use crate::scenario::{NodeId, Scenario};
use crate::schedule::{sum_duration, Assignment, Evaluator, PowerPolicy};

/// One committed reroute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreedyStep {
    pub ue: usize,
    pub route: String,
    pub gain_s: f64,
    /// Σ t_n right after the commit.
    pub sum_s: f64,
}

#[derive(Debug, Clone)]
pub struct DirectPhaseResult {
    pub routes: Vec<Route>,
    /// t_{n,f,d}: each UE's completion time at the moment it was assigned.
    pub durations: Vec<f64>,
}

fn direct_entry(eval: &Evaluator<'_>, chosen: &[Option<Route>], at_source: &[usize], option: &Route) -> Result<f64> {
    let c = eval.completions(at_source.iter().map(|&u| chosen[u].as_ref().expect("assigned")).chain(std::iter::once(option)))?;
    Ok(*c.last().expect("one flow at least"))
}

/// Assigns every UE a direct route, cheapest (UE, source) pair first. After
/// each pick the durations of the remaining UEs at that source are
/// re-evaluated with the power now shared there.
pub fn greedy_direct_phase(routes: &RouteSet, eval: &Evaluator<'_>) -> Result<DirectPhaseResult> {
    let n = routes.per_ue.len();
    let options: Vec<Vec<&Route>> = routes.per_ue.iter().map(|r| r.iter().filter(|r| r.is_direct()).collect()).collect();
    if let Some(ue) = options.iter().position(Vec::is_empty) {
        return Err(Error::Contract(format!("UE {ue} has no direct route")));
    }
    let mut chosen: Vec<Option<Route>> = vec![None; n];
    let mut durations = vec![f64::NAN; n];
    let mut at_source: BTreeMap<NodeId, Vec<usize>> = BTreeMap::new();
    let mut table: Vec<Vec<f64>> = Vec::with_capacity(n);
    for opts in &options {
        table.push(opts.iter().map(|r| direct_entry(eval, &chosen, &[], r)).collect::<Result<_>>()?);
    }

    for _ in 0..n {
        let mut best: Option<(usize, usize)> = None;
        for ue in (0..n).filter(|&u| chosen[u].is_none()) {
            for (j, &t) in table[ue].iter().enumerate() {
                if best.is_none_or(|(bu, bj)| t < table[bu][bj]) {
                    best = Some((ue, j));
                }
            }
        }
        let (ue, j) = best.expect("an unassigned UE remains");
        let route = options[ue][j].clone();
        let src = route.source();
        durations[ue] = table[ue][j];
        chosen[ue] = Some(route);
        let users = at_source.entry(src).or_default();
        users.push(ue);
        let users = users.clone();
        for other in (0..n).filter(|&u| chosen[u].is_none()) {
            for (j2, opt) in options[other].iter().enumerate() {
                if opt.source() == src {
                    table[other][j2] = direct_entry(eval, &chosen, &users, opt)?;
                }
            }
        }
    }
    Ok(DirectPhaseResult { routes: chosen.into_iter().map(|r| r.expect("all assigned")).collect(), durations })
}

/// G for moving `ue` onto `candidate`, from two full schedule evaluations:
/// the time `ue` saves minus the net prolongation of the others. Speedups
/// elsewhere offset slowdowns but never push the prolongation below 0.
/// Clamped at 0.
pub fn multihop_gain(eval: &Evaluator<'_>, current: &[Route], ue: usize, candidate: &Route) -> Result<f64> {
    let before = eval.completions(current.iter())?;
    let after = eval.completions(current.iter().enumerate().map(|(u, r)| if u == ue { candidate } else { r }))?;
    Ok(gain_from(&before, &after, ue))
}

fn gain_from(before: &[f64], after: &[f64], pos: usize) -> f64 {
    let prolong: f64 = (0..before.len()).filter(|&k| k != pos).map(|k| after[k] - before[k]).sum();
    (before[pos] - after[pos] - prolong.max(0.0)).max(0.0)
}

/// Which UEs use which transmitters, and the connected groups they form.
struct Topology {
    users: Vec<SmallVec<[usize; 8]>>,
    group: Vec<usize>,
    members: Vec<Vec<usize>>,
}

impl Topology {
    fn new(routes: &[Route], num_nodes: usize) -> Self {
        let mut users: Vec<SmallVec<[usize; 8]>> = vec![SmallVec::new(); num_nodes];
        for (ue, r) in routes.iter().enumerate() {
            for tx in r.transmitters() {
                users[tx.index()].push(ue);
            }
        }
        let mut parent: Vec<usize> = (0..routes.len()).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for u in &users {
            for w in u.windows(2) {
                let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
        let mut members = vec![Vec::new(); routes.len()];
        let group: Vec<usize> = (0..routes.len()).map(|u| find(&mut parent, u)).collect();
        for (u, &g) in group.iter().enumerate() {
            members[g].push(u);
        }
        Self { users, group, members }
    }
}

struct Candidate {
    ue: usize,
    idx: usize,
    standalone: f64,
    gain: f64,
    /// Transmitters of every flow the last evaluation depended on.
    nodes: Vec<NodeId>,
}

impl Candidate {
    fn touches(&self, changed: &[NodeId]) -> bool {
        changed.iter().any(|n| self.nodes.binary_search(n).is_ok())
    }
}

/// Recomputes G for one candidate, simulating only the flows that can
/// interact with `ue` on its current or candidate route.
fn refresh(c: &mut Candidate, route: &Route, cur: &[Route], base: &[f64], topo: &Topology, eval: &Evaluator<'_>) -> Result<()> {
    let mut groups: SmallVec<[usize; 8]> = SmallVec::new();
    groups.push(topo.group[c.ue]);
    for tx in route.transmitters() {
        for &u in &topo.users[tx.index()] {
            groups.push(topo.group[u]);
        }
    }
    groups.sort_unstable();
    groups.dedup();
    let mut set: Vec<usize> = groups.iter().flat_map(|&g| topo.members[g].iter().copied()).collect();
    set.sort_unstable();

    c.nodes.clear();
    c.nodes.extend(set.iter().flat_map(|&u| cur[u].transmitters().iter().copied()));
    c.nodes.extend(route.transmitters().iter().copied());
    c.nodes.sort_unstable();
    c.nodes.dedup();

    // Power never exceeds P_max, so the contention-free duration bounds
    // the new completion time from below.
    if base[c.ue] - c.standalone <= 0.0 {
        c.gain = 0.0;
        return Ok(());
    }
    let after = eval.completions(set.iter().map(|&u| if u == c.ue { route } else { &cur[u] }))?;
    let before: Vec<f64> = set.iter().map(|&u| base[u]).collect();
    let pos = set.binary_search(&c.ue).expect("ue is in its own group");
    c.gain = gain_from(&before, &after, pos);
    Ok(())
}

/// Direct phase, then repeatedly commit the reroute with the largest
/// positive multi-hop gain until none is left. Each UE is rerouted at most once.
pub fn greedy_select(scenario: &Scenario, routes: &RouteSet, policy: PowerPolicy) -> Result<Selection> {
    let eval = Evaluator::new(scenario, policy);
    let direct = greedy_direct_phase(routes, &eval)?;
    let mut cur = direct.routes;
    let mut base = eval.completions(cur.iter())?;
    let num_nodes = scenario.nodes.len();
    let mut topo = Topology::new(&cur, num_nodes);

    let mut cands: Vec<Candidate> = Vec::new();
    for (ue, list) in routes.per_ue.iter().enumerate() {
        for (idx, r) in list.iter().enumerate().filter(|(_, r)| !r.is_direct()) {
            let mut c = Candidate { ue, idx, standalone: full_power_route_duration(scenario, r), gain: 0.0, nodes: Vec::new() };
            refresh(&mut c, r, &cur, &base, &topo, &eval)?;
            cands.push(c);
        }
    }

    let mut rerouted = vec![false; cur.len()];
    let mut trace = Vec::new();
    loop {
        let mut best: Option<usize> = None;
        for (i, c) in cands.iter().enumerate() {
            if !rerouted[c.ue] && c.gain > 0.0 && best.is_none_or(|b| c.gain > cands[b].gain) {
                best = Some(i);
            }
        }
        let Some(b) = best else { break };
        let (ue, idx, gain) = (cands[b].ue, cands[b].idx, cands[b].gain);
        let route = routes.per_ue[ue][idx].clone();
        let mut changed: Vec<NodeId> = cur[ue].transmitters().to_vec();
        changed.extend_from_slice(route.transmitters());
        cur[ue] = route;
        rerouted[ue] = true;
        base = eval.completions(cur.iter())?;
        topo = Topology::new(&cur, num_nodes);
        trace.push(GreedyStep { ue, route: cur[ue].label(), gain_s: gain, sum_s: sum_duration(&base) });

        for c in cands.iter_mut().filter(|c| !rerouted[c.ue]) {
            if c.touches(&changed) {
                refresh(c, &routes.per_ue[c.ue][c.idx], &cur, &base, &topo, &eval)?;
            }
        }
    }
    Ok(Selection { assignment: Assignment::new(cur), evaluations: eval.calls(), trace })
}
