//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use cachehop::schedule::{Flow, FlowHop, PowerPolicy};
use cachehop::{NodeId, NoiseModel};
use rand::Rng;

/// Up to `max_flows` flows over up to `max_nodes` transmitters, each hop on a
/// distinct node. Bits in [5e6, 1.5e7), full-power SNR in [1, 100) when the
/// node budget is 1 W and the noise PSD totals 1e-18 W/Hz over 1 MHz.
pub fn random_flows<R: Rng>(rng: &mut R, max_flows: usize, max_nodes: u32) -> Vec<Flow> {
    let contents = rng.gen_range(1..=max_flows);
    let nodes = rng.gen_range(1..=max_nodes);
    (0..contents)
        .map(|ue| {
            let mut order: Vec<u32> = (0..nodes).collect();
            for i in (1..order.len()).rev() {
                order.swap(i, rng.gen_range(0..=i));
            }
            let hops = rng.gen_range(1..=nodes as usize);
            Flow {
                ue,
                bits: rng.gen_range(5e6..1.5e7),
                bandwidth_hz: 1e6,
                hops: order[..hops].iter().map(|&tx| FlowHop { tx: NodeId(tx), gain: rng.gen_range(1.0..100.0) * 1e-12 }).collect(),
            }
        })
        .collect()
}

pub fn unit_noise() -> NoiseModel {
    NoiseModel { noise_psd: 0.5e-18, interference_psd: 0.5e-18 }
}

/// Fixed-step simulation of the three power policies. Rates are held over
/// each step; a hop that completes mid-step hands its unused step time to
/// the next hop.
pub fn stepped(flows: &[Flow], budgets: &[f64], noise: &NoiseModel, policy: PowerPolicy, dt: f64) -> Vec<f64> {
    let n = flows.len();
    let psd = noise.noise_psd + noise.interference_psd;
    let rate = |i: usize, h: usize, p: f64| {
        let snr = p * flows[i].hops[h].gain / (flows[i].bandwidth_hz * psd);
        flows[i].bandwidth_hz * (1.0 + snr).log2()
    };
    let node_of = |i: usize, h: usize| flows[i].hops[h].tx.0 as usize;
    let mut load = vec![0usize; budgets.len()];
    for f in flows {
        for h in &f.hops {
            load[h.tx.0 as usize] += 1;
        }
    }
    let mut hop = vec![0usize; n];
    let mut rem: Vec<f64> = flows.iter().map(|f| f.bits).collect();
    let mut carry = vec![0.0f64; n];
    let mut done = vec![f64::NAN; n];
    let mut serving: Vec<Option<usize>> = vec![None; budgets.len()];
    let mut t = 0.0f64;
    let mut steps: u64 = 0;
    while done.iter().any(|d| d.is_nan()) {
        let active: Vec<usize> = (0..n).filter(|&i| done[i].is_nan()).collect();
        let mut present = vec![0usize; budgets.len()];
        for &i in &active {
            present[node_of(i, hop[i])] += 1;
        }
        let mut power = vec![0.0f64; n];
        for &i in &active {
            let k = node_of(i, hop[i]);
            power[i] = match policy {
                PowerPolicy::DynamicResplit => budgets[k] / present[k] as f64,
                PowerPolicy::StaticSplit => budgets[k] / load[k] as f64,
                PowerPolicy::Sequential => 0.0,
            };
        }
        if policy == PowerPolicy::Sequential {
            for k in 0..budgets.len() {
                if serving[k].is_none() {
                    let mut best: Option<(f64, usize, usize)> = None;
                    for &i in active.iter().filter(|&&i| node_of(i, hop[i]) == k) {
                        let d = flows[i].bits / rate(i, hop[i], budgets[k]);
                        let key = (d, flows[i].ue, i);
                        if best.is_none_or(|b| key.0 < b.0 || (key.0 == b.0 && key.1 < b.1)) {
                            best = Some(key);
                        }
                    }
                    serving[k] = best.map(|b| b.2);
                }
                if let Some(i) = serving[k] {
                    power[i] = budgets[k];
                }
            }
        }
        for &i in &active {
            if power[i] <= 0.0 {
                carry[i] = 0.0;
                continue;
            }
            let tau = dt + carry[i];
            carry[i] = 0.0;
            let r = rate(i, hop[i], power[i]);
            if rem[i] <= r * tau {
                let used = rem[i] / r;
                let left = tau - used;
                let k = node_of(i, hop[i]);
                if serving[k] == Some(i) {
                    serving[k] = None;
                }
                hop[i] += 1;
                if hop[i] == flows[i].hops.len() {
                    done[i] = t + dt - left;
                } else {
                    rem[i] = flows[i].bits;
                    carry[i] = left;
                }
            } else {
                rem[i] -= r * tau;
            }
        }
        t += dt;
        steps += 1;
        assert!(steps < 50_000_000, "stepped oracle did not finish");
    }
    done
}
