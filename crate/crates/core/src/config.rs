//! Simulation parameters and the flat-key text format they are read from.
//!
//! Configuration files are TOML documents. Keys may be written either as
//! dotted keys (`power.gbs_dbm = 30`) or grouped under tables (`[power]`).
//! Any key left out takes its default, so an empty file yields the
//! reference parameter set. Unknown keys and ill-typed values are rejected.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schedule::PowerPolicy;

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Side of the square reference cell.
    pub area_side_m: f64,
    /// K
    pub num_uavs: usize,
    /// U, requesting and relaying UEs together.
    pub num_ues: usize,
    /// N
    pub num_requesting: usize,
    /// B, split equally among the N requesting UEs.
    pub bandwidth_hz: f64,
    pub carrier_freq_hz: f64,
    pub zipf_gamma: f64,
    /// F
    pub catalog_size: usize,
    /// C, per-UAV cache capacity in contents.
    pub cache_capacity: usize,
    /// S_f for every content.
    pub content_size_bits: f64,
    /// Relative half-width of a uniform size spread around `content_size_bits`; 0 gives equal sizes.
    pub content_size_spread: f64,
    /// H_max
    pub max_hops: usize,
    pub power: PowerConfig,
    pub antenna: AntennaConfig,
    pub noise: NoiseConfig,
    pub height: HeightConfig,
    pub gbs: GbsConfig,
    pub buildings: BuildingConfig,
    pub kmeans: KMeansConfig,
    pub relay: RelayConfig,
    pub bias: BiasConfig,
    pub brute: BruteConfig,
    pub experiment: ExperimentConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerConfig {
    pub gbs_dbm: f64,
    pub uav_dbm: f64,
    pub rue_dbm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AntennaConfig {
    /// Gain at GBS and UAV ends of a link.
    pub bs_gain_db: f64,
    pub ue_gain_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub noise_psd_dbm_hz: f64,
    pub interference_psd_dbm_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeightConfig {
    pub gbs_m: f64,
    pub uav_m: f64,
    pub ue_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GbsConfig {
    pub x_m: f64,
    pub y_m: f64,
}

/// Jittered Manhattan grid of box-shaped buildings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuildingConfig {
    pub count: usize,
    /// Footprint side of each block.
    pub side_m: f64,
    /// Street width between neighbouring blocks.
    pub street_m: f64,
    /// Maximum displacement of a block from its grid cell, per axis.
    pub jitter_m: f64,
    pub height_min_m: f64,
    pub height_max_m: f64,
    /// Extra attenuation per building crossed by a link.
    pub loss_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KMeansConfig {
    pub max_iter: usize,
    pub tol_m: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RelayConfig {
    /// Only the `max_rues` RUEs nearest to a requesting UE may relay its content. 0 means no cap.
    pub max_rues: usize,
}

/// Association bias of the benchmark selector.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BiasConfig {
    pub gbs_db: f64,
    pub uav_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BruteConfig {
    /// Maximum number of schedule evaluations the brute-force search may spend.
    pub budget: u64,
    /// Skip combinations whose contention-free lower bound cannot beat the incumbent.
    pub bound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub drops: usize,
    pub master_seed: u64,
    /// Policy used by the selectors labelled "without power allocation".
    pub wo_pa_policy: PowerPolicy,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            area_side_m: 500.0,
            num_uavs: 4,
            num_ues: 100,
            num_requesting: 20,
            bandwidth_hz: 20e6,
            carrier_freq_hz: 2e9,
            zipf_gamma: 0.5,
            catalog_size: 50,
            cache_capacity: 10,
            content_size_bits: 1e7,
            content_size_spread: 0.0,
            max_hops: 3,
            power: PowerConfig::default(),
            antenna: AntennaConfig::default(),
            noise: NoiseConfig::default(),
            height: HeightConfig::default(),
            gbs: GbsConfig::default(),
            buildings: BuildingConfig::default(),
            kmeans: KMeansConfig::default(),
            relay: RelayConfig::default(),
            bias: BiasConfig::default(),
            brute: BruteConfig::default(),
            experiment: ExperimentConfig::default(),
        }
    }
}

impl Default for PowerConfig {
    fn default() -> Self {
        Self { gbs_dbm: 30.0, uav_dbm: 27.0, rue_dbm: 23.0 }
    }
}

impl Default for AntennaConfig {
    fn default() -> Self {
        Self { bs_gain_db: 3.0, ue_gain_db: 0.0 }
    }
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self { noise_psd_dbm_hz: -174.0, interference_psd_dbm_hz: -130.0 }
    }
}

impl Default for HeightConfig {
    fn default() -> Self {
        Self { gbs_m: 35.0, uav_m: 100.0, ue_m: 1.5 }
    }
}

impl Default for GbsConfig {
    fn default() -> Self {
        Self { x_m: 235.0, y_m: 265.0 }
    }
}

impl Default for BuildingConfig {
    fn default() -> Self {
        Self { count: 25, side_m: 60.0, street_m: 40.0, jitter_m: 5.0, height_min_m: 20.0, height_max_m: 29.0, loss_db: 20.0 }
    }
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self { max_iter: 100, tol_m: 1e-6 }
    }
}

impl Default for BruteConfig {
    fn default() -> Self {
        Self { budget: 10_000_000, bound: true }
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self { drops: 1000, master_seed: 1, wo_pa_policy: PowerPolicy::StaticSplit }
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

impl SimConfig {
    /// Parses a configuration document, applies `key=value` overrides on top
    /// of it, and validates the result.
    pub fn from_toml_str(text: &str, overrides: &[(String, String)]) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
        for (key, raw) in overrides {
            insert_dotted(&mut table, key, parse_override_value(raw))?;
        }
        let cfg: SimConfig = toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &std::path::Path, overrides: &[(String, String)]) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text, overrides)
    }

    /// Canonical text form; round-trips through [`SimConfig::from_toml_str`].
    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("SimConfig always serializes")
    }

    /// Collects every violated constraint instead of stopping at the first.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        let mut positive = |name: &str, v: f64| {
            if !(v.is_finite() && v > 0.0) {
                errs.push(format!("{name} must be finite and positive (got {v})"));
            }
        };
        positive("area_side_m", self.area_side_m);
        positive("bandwidth_hz", self.bandwidth_hz);
        positive("carrier_freq_hz", self.carrier_freq_hz);
        positive("content_size_bits", self.content_size_bits);
        positive("height.gbs_m", self.height.gbs_m);
        positive("height.uav_m", self.height.uav_m);
        positive("height.ue_m", self.height.ue_m);
        positive("kmeans.tol_m", self.kmeans.tol_m);
        for (name, dbm) in [
            ("power.gbs_dbm", self.power.gbs_dbm),
            ("power.uav_dbm", self.power.uav_dbm),
            ("power.rue_dbm", self.power.rue_dbm),
            ("noise.noise_psd_dbm_hz", self.noise.noise_psd_dbm_hz),
            ("noise.interference_psd_dbm_hz", self.noise.interference_psd_dbm_hz),
        ] {
            if !dbm.is_finite() {
                errs.push(format!("{name} must be finite (got {dbm})"));
            }
        }
        if self.num_requesting == 0 {
            errs.push("num_requesting must be at least 1".into());
        }
        if self.num_requesting > self.num_ues {
            errs.push(format!("N exceeds U ({} > {})", self.num_requesting, self.num_ues));
        }
        if self.catalog_size == 0 {
            errs.push("catalog_size must be at least 1".into());
        }
        if self.cache_capacity > self.catalog_size {
            errs.push(format!("cache_capacity exceeds catalog_size ({} > {})", self.cache_capacity, self.catalog_size));
        }
        if !(self.zipf_gamma.is_finite() && self.zipf_gamma >= 0.0) {
            errs.push(format!("zipf_gamma must be non-negative (got {})", self.zipf_gamma));
        }
        if !(0.0..1.0).contains(&self.content_size_spread) {
            errs.push(format!("content_size_spread must lie in [0, 1) (got {})", self.content_size_spread));
        }
        if !(1..=3).contains(&self.max_hops) {
            errs.push(format!("max_hops must be 1, 2 or 3 (got {})", self.max_hops));
        }
        if self.kmeans.max_iter == 0 {
            errs.push("kmeans.max_iter must be at least 1".into());
        }
        let b = &self.buildings;
        if !(b.height_min_m >= 0.0 && b.height_min_m <= b.height_max_m) {
            errs.push(format!("buildings.height_min_m must lie in [0, height_max_m] (got {} and {})", b.height_min_m, b.height_max_m));
        }
        if b.count > 0 {
            if !(b.side_m > 0.0 && b.street_m >= 0.0 && b.jitter_m >= 0.0) {
                errs.push("buildings.side_m must be positive, street_m and jitter_m non-negative".into());
            }
            if 2.0 * b.jitter_m >= b.street_m && b.street_m > 0.0 {
                errs.push(format!("buildings.jitter_m ({}) must stay below half the street width ({})", b.jitter_m, b.street_m));
            }
            let per_side = grid_side(b.count);
            let span = per_side as f64 * b.side_m + (per_side as f64 - 1.0) * b.street_m + 2.0 * b.jitter_m;
            if span > self.area_side_m {
                errs.push(format!("{} buildings need a {:.1} m grid but the area is {:.1} m wide", b.count, span, self.area_side_m));
            }
        }
        if self.height.uav_m <= b.height_max_m || self.height.gbs_m <= b.height_max_m {
            errs.push("GBS and UAV antennas must sit above the tallest building".into());
        }
        let inside = |v: f64| (0.0..=self.area_side_m).contains(&v);
        if !inside(self.gbs.x_m) || !inside(self.gbs.y_m) {
            errs.push("gbs position lies outside the area".into());
        }
        if self.brute.budget == 0 {
            errs.push("brute.budget must be at least 1".into());
        }
        if self.experiment.drops == 0 {
            errs.push("experiment.drops must be at least 1".into());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }

    /// Number of RUEs, R = U - N.
    pub fn num_relays(&self) -> usize {
        self.num_ues - self.num_requesting
    }

    /// B_n, the orthogonal channel of each requesting UE.
    pub fn channel_bandwidth_hz(&self) -> f64 {
        self.bandwidth_hz / self.num_requesting as f64
    }
}

/// Blocks per row of the building grid.
pub(crate) fn grid_side(count: usize) -> usize {
    (count as f64).sqrt().ceil() as usize
}

fn parse_override_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

fn insert_dotted(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<()> {
    let mut parts = key.split('.').peekable();
    let mut cur = table;
    while let Some(part) = parts.next() {
        if part.is_empty() {
            return Err(Error::Parse(format!("malformed override key `{key}`")));
        }
        if parts.peek().is_none() {
            cur.insert(part.to_string(), value);
            return Ok(());
        }
        let entry = cur.entry(part.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry.as_table_mut().ok_or_else(|| Error::Parse(format!("override `{key}` descends into a non-table value")))?;
    }
    Ok(())
}

/// Splits `key=value` override strings.
pub fn parse_overrides<S: AsRef<str>>(items: &[S]) -> Result<Vec<(String, String)>> {
    items
        .iter()
        .map(|s| {
            let s = s.as_ref();
            let (k, v) = s.split_once('=').ok_or_else(|| Error::Parse(format!("override `{s}` is not of the form key=value")))?;
            Ok((k.trim().to_string(), v.trim().to_string()))
        })
        .collect()
}
