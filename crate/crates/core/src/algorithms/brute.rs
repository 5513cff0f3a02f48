use super::Selection;
use crate::error::{Error, Result};
use crate::routing::{full_power_route_duration, Route, RouteSet};
use crate::scenario::Scenario;
use crate::schedule::{sum_duration, Assignment, Evaluator, PowerPolicy};

#[derive(Debug, Clone, Default)]
pub struct BruteOptions {
    /// Maximum number of schedule evaluations.
    pub budget: u64,
    /// Skip subtrees whose contention-free lower bound cannot beat the incumbent.
    pub bound: bool,
    /// Known assignment whose value seeds the bound.
    pub seed: Option<Assignment>,
}

/// Minimum of Σ t_n over every combination of one route per UE. Ties go to
/// the lexicographically first combination, routes taken in route-set order.
///
/// Without `bound` every combination is evaluated, and the search is refused
/// up front when their number exceeds the budget. With `bound` the same
/// order is walked depth-first and a subtree is skipped only when the sum of
/// contention-free route durations already exceeds the incumbent, which no
/// policy can undercut; the result is identical.
pub fn brute_force_select(scenario: &Scenario, routes: &RouteSet, policy: PowerPolicy, opts: &BruteOptions) -> Result<Selection> {
    let combinations = routes.combinations();
    if routes.per_ue.iter().any(Vec::is_empty) {
        return Err(Error::Contract("a UE has no candidate route".into()));
    }
    let eval = Evaluator::new(scenario, policy);
    let best = if opts.bound {
        bounded(scenario, routes, &eval, opts, combinations)?
    } else {
        if combinations > opts.budget as u128 {
            return Err(Error::BudgetExceeded { combinations, budget: opts.budget });
        }
        exhaustive(routes, &eval)?
    };
    let assignment = Assignment::new(best.iter().enumerate().map(|(ue, &j)| routes.per_ue[ue][j].clone()).collect());
    Ok(Selection { assignment, evaluations: eval.calls(), trace: Vec::new() })
}

fn value(routes: &RouteSet, idx: &[usize], eval: &Evaluator<'_>) -> Result<f64> {
    Ok(sum_duration(&eval.completions(idx.iter().enumerate().map(|(ue, &j)| &routes.per_ue[ue][j]))?))
}

fn exhaustive(routes: &RouteSet, eval: &Evaluator<'_>) -> Result<Vec<usize>> {
    let n = routes.per_ue.len();
    let mut idx = vec![0usize; n];
    let mut best: Option<(f64, Vec<usize>)> = None;
    loop {
        let v = value(routes, &idx, eval)?;
        if best.as_ref().is_none_or(|(b, _)| v < *b) {
            best = Some((v, idx.clone()));
        }
        // odometer, last UE fastest
        let mut k = n;
        loop {
            if k == 0 {
                return Ok(best.expect("at least one combination").1);
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < routes.per_ue[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

struct Search<'a, 'e> {
    routes: &'a RouteSet,
    eval: &'a Evaluator<'e>,
    standalone: Vec<Vec<f64>>,
    /// Σ over UEs ≥ u of their smallest standalone duration.
    suffix_min: Vec<f64>,
    seed_value: Option<f64>,
    best: Option<(f64, Vec<usize>)>,
    budget: u64,
    combinations: u128,
    idx: Vec<usize>,
}

impl Search<'_, '_> {
    fn limit(&self) -> Option<f64> {
        self.best.as_ref().map(|(b, _)| *b).or(self.seed_value)
    }

    fn dfs(&mut self, ue: usize, partial: f64) -> Result<()> {
        if ue == self.idx.len() {
            if self.eval.calls() >= self.budget {
                return Err(Error::BudgetExceeded { combinations: self.combinations, budget: self.budget });
            }
            let v = value(self.routes, &self.idx, self.eval)?;
            let accept = match (&self.best, self.seed_value) {
                (Some((b, _)), _) => v < *b,
                (None, Some(s)) => v <= s,
                (None, None) => true,
            };
            if accept {
                self.best = Some((v, self.idx.clone()));
            }
            return Ok(());
        }
        for j in 0..self.routes.per_ue[ue].len() {
            let lb = partial + self.standalone[ue][j] + self.suffix_min[ue + 1];
            if self.limit().is_some_and(|l| lb > l * (1.0 + 1e-12)) {
                continue;
            }
            self.idx[ue] = j;
            self.dfs(ue + 1, partial + self.standalone[ue][j])?;
        }
        Ok(())
    }
}

fn bounded(scenario: &Scenario, routes: &RouteSet, eval: &Evaluator<'_>, opts: &BruteOptions, combinations: u128) -> Result<Vec<usize>> {
    let n = routes.per_ue.len();
    let standalone: Vec<Vec<f64>> =
        routes.per_ue.iter().map(|list| list.iter().map(|r| full_power_route_duration(scenario, r)).collect()).collect();
    let mut suffix_min = vec![0.0; n + 1];
    for u in (0..n).rev() {
        suffix_min[u] = suffix_min[u + 1] + standalone[u].iter().cloned().fold(f64::INFINITY, f64::min);
    }
    let seed_idx: Option<Vec<usize>> = opts.seed.as_ref().and_then(|a| {
        (a.routes.len() == n)
            .then(|| a.routes.iter().enumerate().map(|(ue, r): (usize, &Route)| routes.per_ue[ue].iter().position(|c| c == r)).collect())
            .flatten()
    });
    let seed_value = match &seed_idx {
        Some(idx) => Some(value(routes, idx, eval)?),
        None => None,
    };
    let mut search =
        Search { routes, eval, standalone, suffix_min, seed_value, best: None, budget: opts.budget, combinations, idx: vec![0; n] };
    search.dfs(0, 0.0)?;
    match search.best {
        Some((_, idx)) => Ok(idx),
        None => Err(Error::Internal("bounded search found no combination".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::{fixture, greedy_select};
    use crate::schedule::evaluate;

    fn truncated(routes: &RouteSet, keep: usize) -> RouteSet {
        RouteSet { per_ue: routes.per_ue.iter().map(|r| r.iter().take(keep).cloned().collect()).collect(), enumerated: 0 }
    }

    #[test]
    fn two_ues_three_routes_cost_nine_evaluations() {
        let s = fixture::small(11, 2);
        let routes = truncated(&RouteSet::build(&s, false), 3);
        assert_eq!(routes.combinations(), 9);
        let out =
            brute_force_select(&s, &routes, PowerPolicy::StaticSplit, &BruteOptions { budget: 100, bound: false, seed: None }).unwrap();
        assert_eq!(out.evaluations, 9);
    }

    #[test]
    fn refuses_over_budget() {
        let s = fixture::small(11, 3);
        let routes = RouteSet::build(&s, false);
        let err =
            brute_force_select(&s, &routes, PowerPolicy::StaticSplit, &BruteOptions { budget: 10, bound: false, seed: None }).unwrap_err();
        match err {
            Error::BudgetExceeded { combinations, budget } => {
                assert_eq!(combinations, routes.combinations());
                assert_eq!(budget, 10);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn bounded_search_matches_exhaustive() {
        for seed in 0..12 {
            let s = fixture::small(seed, 3);
            let routes = truncated(&RouteSet::build(&s, true), 12);
            for p in PowerPolicy::ALL {
                let full = brute_force_select(&s, &routes, p, &BruteOptions { budget: 1_000_000, bound: false, seed: None }).unwrap();
                let fast = brute_force_select(&s, &routes, p, &BruteOptions { budget: 1_000_000, bound: true, seed: None }).unwrap();
                let g = greedy_select(&s, &routes, p).unwrap();
                let seeded =
                    brute_force_select(&s, &routes, p, &BruteOptions { budget: 1_000_000, bound: true, seed: Some(g.assignment.clone()) })
                        .unwrap();
                assert_eq!(full.assignment, fast.assignment, "seed {seed} {p}");
                assert_eq!(full.assignment, seeded.assignment, "seed {seed} {p}");
                assert!(fast.evaluations <= full.evaluations);
                let opt = evaluate(&full.assignment, &s, p).unwrap().sum_duration();
                let greedy = evaluate(&g.assignment, &s, p).unwrap().sum_duration();
                assert!(opt <= greedy, "seed {seed} {p}: brute {opt} > greedy {greedy}");
            }
        }
    }

    #[test]
    fn exhaustive_ties_keep_the_first_combination() {
        // Two identical UEs at the same spot with only GBS routes: symmetric values.
        let s = fixture::handmade(&[], &[(300.0, 300.0), (300.0, 300.0)], &[(310.0, 300.0)], &[], &[0, 0]);
        let routes = RouteSet::build(&s, false);
        let out =
            brute_force_select(&s, &routes, PowerPolicy::DynamicResplit, &BruteOptions { budget: 1000, bound: false, seed: None }).unwrap();
        let eval = Evaluator::new(&s, PowerPolicy::DynamicResplit);
        let v = value(&routes, &[0, 0], &eval).unwrap();
        let chosen: Vec<usize> =
            out.assignment.routes.iter().enumerate().map(|(ue, r)| routes.per_ue[ue].iter().position(|c| c == r).unwrap()).collect();
        let v_chosen = value(&routes, &chosen, &eval).unwrap();
        assert!(v_chosen <= v);
        if chosen != vec![0, 0] {
            assert!(v_chosen < v);
        }
    }
}
