//! Link budget: box blockage, free-space loss, antenna gains, and the
//! Shannon rate of an orthogonal channel.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::config::{db_to_linear, dbm_to_watts, SimConfig, SPEED_OF_LIGHT};
use crate::scenario::{Building, NodeId, NodeKind, NodeSet, Point3};

/// Noise and background interference power spectral densities in W/Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub noise_psd: f64,
    pub interference_psd: f64,
}

impl NoiseModel {
    pub fn from_config(cfg: &SimConfig) -> Self {
        Self { noise_psd: dbm_to_watts(cfg.noise.noise_psd_dbm_hz), interference_psd: dbm_to_watts(cfg.noise.interference_psd_dbm_hz) }
    }

    /// σ0 + I_b
    pub fn total_psd(&self) -> f64 {
        self.noise_psd + self.interference_psd
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGain {
    pub tx: NodeId,
    pub rx: NodeId,
    pub gain_linear: f64,
    pub blockage_count: usize,
}

/// Whether the closed segment `a`–`b` touches the closed box of `bld`.
fn segment_hits_box(a: &Point3, b: &Point3, bld: &Building) -> bool {
    let lo = [bld.min_x, bld.min_y, 0.0];
    let hi = [bld.max_x, bld.max_y, bld.height];
    let p = [a.x, a.y, a.z];
    let d = [b.x - a.x, b.y - a.y, b.z - a.z];
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for axis in 0..3 {
        if d[axis] == 0.0 {
            if p[axis] < lo[axis] || p[axis] > hi[axis] {
                return false;
            }
            continue;
        }
        let inv = 1.0 / d[axis];
        let (mut near, mut far) = ((lo[axis] - p[axis]) * inv, (hi[axis] - p[axis]) * inv);
        if near > far {
            std::mem::swap(&mut near, &mut far);
        }
        t0 = t0.max(near);
        t1 = t1.min(far);
        if t0 > t1 {
            return false;
        }
    }
    true
}

/// Number of buildings whose box the segment crosses. Grazing a face counts.
pub fn count_blockages(a: &Point3, b: &Point3, buildings: &[Building]) -> usize {
    buildings.iter().filter(|bld| segment_hits_box(a, b, bld)).count()
}

/// Friis free-space loss in dB.
pub fn fspl_db(distance_m: f64, freq_hz: f64) -> f64 {
    20.0 * distance_m.log10() + 20.0 * freq_hz.log10() + 20.0 * (4.0 * PI / SPEED_OF_LIGHT).log10()
}

/// Links shorter than this are evaluated at this distance.
pub const MIN_LINK_DISTANCE_M: f64 = 1.0;

/// Gain in dB: free-space loss, antenna gains, and a fixed penalty per
/// blocking building.
pub fn path_gain_db(
    a: &Point3,
    b: &Point3,
    buildings: &[Building],
    freq_hz: f64,
    antenna_db: f64,
    loss_per_building_db: f64,
) -> (f64, usize) {
    let d = a.distance(b).max(MIN_LINK_DISTANCE_M);
    let blocked = count_blockages(a, b, buildings);
    (-fspl_db(d, freq_hz) + antenna_db - loss_per_building_db * blocked as f64, blocked)
}

/// Linear path gain between two positions with the antenna gains the
/// configuration assigns to base-station (`a_is_bs`, `b_is_bs`) and UE ends.
pub fn path_gain(a: &Point3, b: &Point3, a_is_bs: bool, b_is_bs: bool, buildings: &[Building], cfg: &SimConfig) -> f64 {
    let ant = |bs: bool| if bs { cfg.antenna.bs_gain_db } else { cfg.antenna.ue_gain_db };
    let (db, _) = path_gain_db(a, b, buildings, cfg.carrier_freq_hz, ant(a_is_bs) + ant(b_is_bs), cfg.buildings.loss_db);
    db_to_linear(db)
}

/// B_n log2(1 + p g / (B_n (σ0 + I_b))) in bit/s.
pub fn link_rate(p_tx_w: f64, gain: f64, bandwidth_hz: f64, noise: &NoiseModel) -> f64 {
    bandwidth_hz * (p_tx_w * gain / (bandwidth_hz * noise.total_psd())).ln_1p() / std::f64::consts::LN_2
}

/// Symmetric gain matrix over every node pair of a drop.
#[derive(Debug, Clone, Default)]
pub struct GainTable {
    n: usize,
    gain: Vec<f64>,
    blockages: Vec<u16>,
}

impl GainTable {
    pub fn build(cfg: &SimConfig, buildings: &[Building], nodes: &NodeSet) -> Self {
        let n = nodes.len();
        let mut gain = vec![0.0; n * n];
        let mut blockages = vec![0u16; n * n];
        let kinds: Vec<NodeKind> = nodes.ids().map(|id| nodes.kind(id)).collect();
        let pos: Vec<Point3> = nodes.ids().map(|id| nodes.position(id)).collect();
        for i in 0..n {
            gain[i * n + i] = 1.0;
            for j in i + 1..n {
                let ant = |k: NodeKind| if k.is_base_station() { cfg.antenna.bs_gain_db } else { cfg.antenna.ue_gain_db };
                let (db, blocked) =
                    path_gain_db(&pos[i], &pos[j], buildings, cfg.carrier_freq_hz, ant(kinds[i]) + ant(kinds[j]), cfg.buildings.loss_db);
                let g = db_to_linear(db);
                gain[i * n + j] = g;
                gain[j * n + i] = g;
                blockages[i * n + j] = blocked as u16;
                blockages[j * n + i] = blocked as u16;
            }
        }
        Self { n, gain, blockages }
    }

    pub fn gain(&self, tx: NodeId, rx: NodeId) -> f64 {
        self.gain[tx.index() * self.n + rx.index()]
    }

    pub fn blockages(&self, tx: NodeId, rx: NodeId) -> usize {
        self.blockages[tx.index() * self.n + rx.index()] as usize
    }

    pub fn link(&self, tx: NodeId, rx: NodeId) -> LinkGain {
        LinkGain { tx, rx, gain_linear: self.gain(tx, rx), blockage_count: self.blockages(tx, rx) }
    }

    pub(crate) fn set(&mut self, a: NodeId, b: NodeId, g: f64) {
        self.gain[a.index() * self.n + b.index()] = g;
        self.gain[b.index() * self.n + a.index()] = g;
    }

    /// `tx,rx,distance_m,blockages,gain_db` for every ordered pair with tx < rx.
    pub fn to_csv(&self, nodes: &NodeSet) -> String {
        let mut out = String::from("tx,rx,distance_m,blockages,gain_db\n");
        for a in nodes.ids() {
            for b in nodes.ids().filter(|b| *b > a) {
                let d = nodes.position(a).distance(&nodes.position(b));
                let _ = writeln!(out, "{},{},{:.3},{},{:.4}", a.0, b.0, d, self.blockages(a, b), 10.0 * self.gain(a, b).log10());
            }
        }
        out
    }
}
