//! Drop generation: buildings, node placement, and the immutable scenario
//! snapshot every selector works on.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{GainTable, NoiseModel};
use crate::config::{dbm_to_watts, grid_side, SimConfig};
use crate::content::{place_caches, sample_requests, CacheState, Catalog, ContentId, RequestSet};
use crate::error::{Error, Result};
use crate::kmeans::kmeans_uav_placement;
use crate::seed::{stream_rng, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn distance(&self, other: &Point3) -> f64 {
        let (dx, dy, dz) = (self.x - other.x, self.y - other.y, self.z - other.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    pub fn ground_distance(&self, other: &Point3) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Box-shaped building standing on the ground plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Building {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
    pub height: f64,
}

impl Building {
    pub fn covers_ground(&self, x: f64, y: f64) -> bool {
        (self.min_x..=self.max_x).contains(&x) && (self.min_y..=self.max_y).contains(&y)
    }

    fn overlaps(&self, other: &Building) -> bool {
        self.min_x < other.max_x && other.min_x < self.max_x && self.min_y < other.max_y && other.min_y < self.max_y
    }
}

/// Lays `count` blocks on a centred square grid, each displaced by a
/// uniform jitter and given a uniform height.
pub fn generate_buildings<R: Rng + ?Sized>(rng: &mut R, cfg: &SimConfig) -> Result<Vec<Building>> {
    let b = &cfg.buildings;
    if b.count == 0 {
        return Ok(Vec::new());
    }
    let per_side = grid_side(b.count);
    let pitch = b.side_m + b.street_m;
    let span = per_side as f64 * b.side_m + (per_side as f64 - 1.0) * b.street_m;
    if span + 2.0 * b.jitter_m > cfg.area_side_m {
        return Err(Error::Config(vec![format!(
            "{} buildings need a {:.1} m grid but the area is {:.1} m wide",
            b.count,
            span + 2.0 * b.jitter_m,
            cfg.area_side_m
        )]));
    }
    let origin = (cfg.area_side_m - span) / 2.0;
    let mut out = Vec::with_capacity(b.count);
    for i in 0..b.count {
        let (row, col) = (i / per_side, i % per_side);
        let jx = if b.jitter_m > 0.0 { rng.gen_range(-b.jitter_m..=b.jitter_m) } else { 0.0 };
        let jy = if b.jitter_m > 0.0 { rng.gen_range(-b.jitter_m..=b.jitter_m) } else { 0.0 };
        let height = if b.height_max_m > b.height_min_m { rng.gen_range(b.height_min_m..=b.height_max_m) } else { b.height_min_m };
        let min_x = origin + col as f64 * pitch + jx;
        let min_y = origin + row as f64 * pitch + jy;
        out.push(Building { min_x, min_y, max_x: min_x + b.side_m, max_y: min_y + b.side_m, height });
    }
    debug_assert!(out.iter().enumerate().all(|(i, a)| out[i + 1..].iter().all(|o| !a.overlaps(o))));
    Ok(out)
}

/// Dense node index: 0 is the GBS, then the K UAVs, the N requesting UEs,
/// and the R relay UEs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    pub const GBS: NodeId = NodeId(0);

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeKind {
    Gbs,
    /// Zero-based UAV index.
    Uav(usize),
    /// Zero-based requesting-UE index.
    RequestingUe(usize),
    /// Zero-based relay-UE index.
    RelayUe(usize),
}

impl NodeKind {
    pub fn is_base_station(self) -> bool {
        matches!(self, NodeKind::Gbs | NodeKind::Uav(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSet {
    pub gbs: Point3,
    pub uavs: Vec<Point3>,
    pub requesting_ues: Vec<Point3>,
    pub relay_ues: Vec<Point3>,
}

impl NodeSet {
    pub fn len(&self) -> usize {
        1 + self.uavs.len() + self.requesting_ues.len() + self.relay_ues.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn kind(&self, id: NodeId) -> NodeKind {
        let k = self.uavs.len();
        let n = self.requesting_ues.len();
        match id.index() {
            0 => NodeKind::Gbs,
            i if i <= k => NodeKind::Uav(i - 1),
            i if i <= k + n => NodeKind::RequestingUe(i - 1 - k),
            i => NodeKind::RelayUe(i - 1 - k - n),
        }
    }

    pub fn position(&self, id: NodeId) -> Point3 {
        match self.kind(id) {
            NodeKind::Gbs => self.gbs,
            NodeKind::Uav(i) => self.uavs[i],
            NodeKind::RequestingUe(i) => self.requesting_ues[i],
            NodeKind::RelayUe(i) => self.relay_ues[i],
        }
    }

    pub fn uav_id(&self, uav: usize) -> NodeId {
        NodeId(1 + uav as u32)
    }

    pub fn requesting_id(&self, ue: usize) -> NodeId {
        NodeId((1 + self.uavs.len() + ue) as u32)
    }

    pub fn relay_id(&self, rue: usize) -> NodeId {
        NodeId((1 + self.uavs.len() + self.requesting_ues.len() + rue) as u32)
    }

    pub fn ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.len() as u32).map(NodeId)
    }
}

const MAX_PLACEMENT_ATTEMPTS: usize = 100_000;

/// Uniform UE positions on free ground, a seeded requester/relay split, and
/// K-means UAV positions over all UEs.
pub fn place_nodes<R: Rng + ?Sized>(rng: &mut R, cfg: &SimConfig, buildings: &[Building]) -> Result<NodeSet> {
    let mut ues = Vec::with_capacity(cfg.num_ues);
    for _ in 0..cfg.num_ues {
        let mut placed = false;
        for _ in 0..MAX_PLACEMENT_ATTEMPTS {
            let x = rng.gen_range(0.0..=cfg.area_side_m);
            let y = rng.gen_range(0.0..=cfg.area_side_m);
            if !buildings.iter().any(|b| b.covers_ground(x, y)) {
                ues.push(Point3::new(x, y, cfg.height.ue_m));
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::Config(vec!["no free ground space left for UE placement".into()]));
        }
    }
    let mut order: Vec<usize> = (0..cfg.num_ues).collect();
    order.shuffle(rng);
    let requesting_ues = order[..cfg.num_requesting].iter().map(|&i| ues[i]).collect();
    let relay_ues = order[cfg.num_requesting..].iter().map(|&i| ues[i]).collect();
    let uavs = kmeans_uav_placement(&ues, cfg.num_uavs, cfg.height.uav_m, cfg.kmeans.max_iter, cfg.kmeans.tol_m, rng)?;
    Ok(NodeSet { gbs: Point3::new(cfg.gbs.x_m, cfg.gbs.y_m, cfg.height.gbs_m), uavs, requesting_ues, relay_ues })
}

/// One drop: everything the selectors and the evaluator need, fixed at
/// construction.
#[derive(Debug, Clone, Serialize)]
pub struct Scenario {
    pub config: SimConfig,
    pub seed: Option<u64>,
    pub buildings: Vec<Building>,
    pub nodes: NodeSet,
    pub catalog: Catalog,
    pub caches: CacheState,
    pub requests: RequestSet,
    #[serde(skip)]
    gains: GainTable,
    #[serde(skip)]
    noise: NoiseModel,
    #[serde(skip)]
    p_max: Vec<f64>,
}

/// Serialized form of a [`Scenario`]; link gains are recomputed on load.
#[derive(Debug, Clone, Deserialize)]
pub struct ScenarioSnapshot {
    pub config: SimConfig,
    pub seed: Option<u64>,
    pub buildings: Vec<Building>,
    pub nodes: NodeSet,
    pub catalog: Catalog,
    pub caches: CacheState,
    pub requests: RequestSet,
}

impl Scenario {
    /// Regenerates a drop from its seed.
    pub fn generate(cfg: &SimConfig, drop_seed: u64) -> Result<Self> {
        cfg.validate()?;
        let buildings = generate_buildings(&mut stream_rng(drop_seed, Stream::Buildings), cfg)?;
        let nodes = place_nodes(&mut stream_rng(drop_seed, Stream::Nodes), cfg, &buildings)?;
        let catalog = Catalog::with_spread(
            cfg.catalog_size,
            cfg.content_size_bits,
            cfg.content_size_spread,
            cfg.zipf_gamma,
            &mut stream_rng(drop_seed, Stream::Content),
        );
        let caches = place_caches(&mut stream_rng(drop_seed, Stream::Caches), &catalog, cfg.cache_capacity, cfg.num_uavs);
        let requests = sample_requests(&mut stream_rng(drop_seed, Stream::Requests), &catalog, cfg.num_requesting);
        let mut s = Self::from_parts(cfg.clone(), buildings, nodes, catalog, caches, requests)?;
        s.seed = Some(drop_seed);
        Ok(s)
    }

    /// Assembles a scenario from explicit parts, e.g. a hand-built test
    /// instance or a replayed snapshot.
    pub fn from_parts(
        config: SimConfig,
        buildings: Vec<Building>,
        nodes: NodeSet,
        catalog: Catalog,
        caches: CacheState,
        requests: RequestSet,
    ) -> Result<Self> {
        let mut errs = Vec::new();
        if nodes.uavs.len() != caches.num_uavs() {
            errs.push(format!("{} UAV positions but {} cache sets", nodes.uavs.len(), caches.num_uavs()));
        }
        if nodes.requesting_ues.len() != requests.len() {
            errs.push(format!("{} requesting UEs but {} requests", nodes.requesting_ues.len(), requests.len()));
        }
        if requests.0.iter().chain(caches.per_uav.iter().flatten()).any(|c| c.0 >= catalog.len()) {
            errs.push("content id outside the catalog".into());
        }
        if nodes.requesting_ues.is_empty() {
            errs.push("at least one requesting UE is required".into());
        }
        if !errs.is_empty() {
            return Err(Error::Config(errs));
        }
        let gains = GainTable::build(&config, &buildings, &nodes);
        let noise = NoiseModel::from_config(&config);
        let p_max = nodes
            .ids()
            .map(|id| {
                dbm_to_watts(match nodes.kind(id) {
                    NodeKind::Gbs => config.power.gbs_dbm,
                    NodeKind::Uav(_) => config.power.uav_dbm,
                    NodeKind::RequestingUe(_) | NodeKind::RelayUe(_) => config.power.rue_dbm,
                })
            })
            .collect();
        Ok(Self { config, seed: None, buildings, nodes, catalog, caches, requests, gains, noise, p_max })
    }

    pub fn from_snapshot(s: ScenarioSnapshot) -> Result<Self> {
        let mut out = Self::from_parts(s.config, s.buildings, s.nodes, s.catalog, s.caches, s.requests)?;
        out.seed = s.seed;
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let snap: ScenarioSnapshot = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_snapshot(snap)
    }

    pub fn num_requesting(&self) -> usize {
        self.nodes.requesting_ues.len()
    }

    pub fn num_uavs(&self) -> usize {
        self.nodes.uavs.len()
    }

    /// B_n
    pub fn channel_bandwidth_hz(&self) -> f64 {
        self.config.bandwidth_hz / self.num_requesting() as f64
    }

    pub fn gains(&self) -> &GainTable {
        &self.gains
    }

    pub fn gain(&self, tx: NodeId, rx: NodeId) -> f64 {
        self.gains.gain(tx, rx)
    }

    /// Replaces the gain of the link between `a` and `b` in both directions.
    /// Used to build what-if and test instances.
    pub fn set_link_gain(&mut self, a: NodeId, b: NodeId, gain: f64) {
        self.gains.set(a, b, gain);
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    /// Maximum transmit power of every node in W, indexed by node id.
    pub fn power_budgets(&self) -> &[f64] {
        &self.p_max
    }

    pub fn p_max(&self, id: NodeId) -> f64 {
        self.p_max[id.index()]
    }

    pub fn content_of(&self, ue: usize) -> ContentId {
        self.requests.content_of(ue)
    }

    /// Whether `node` holds content `f`. The GBS holds the whole catalog.
    pub fn caches_content(&self, node: NodeId, f: ContentId) -> bool {
        match self.nodes.kind(node) {
            NodeKind::Gbs => true,
            NodeKind::Uav(k) => self.caches.contains(k, f),
            _ => false,
        }
    }
}
