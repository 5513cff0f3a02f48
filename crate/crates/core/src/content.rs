//! Content catalog, Zipf popularity, requests, and probabilistic UAV caching.

use rand::Rng;
use serde::{Deserialize, Serialize};

/// Zero-based index into the catalog; content 0 is the most popular.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ContentId(pub usize);

impl std::fmt::Display for ContentId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "c{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Catalog {
    /// S_f in bits.
    pub sizes: Vec<f64>,
    /// p_f, non-increasing, sums to one.
    pub popularity: Vec<f64>,
}

/// p_f = f^-γ / Σ_j j^-γ for f = 1..F.
pub fn zipf_popularity(num_contents: usize, gamma: f64) -> Vec<f64> {
    let weights: Vec<f64> = (1..=num_contents).map(|f| (f as f64).powf(-gamma)).collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

impl Catalog {
    pub fn uniform(num_contents: usize, size_bits: f64, gamma: f64) -> Self {
        Self { sizes: vec![size_bits; num_contents], popularity: zipf_popularity(num_contents, gamma) }
    }

    /// Sizes drawn uniformly in `size_bits * [1 - spread, 1 + spread]`.
    pub fn with_spread<R: Rng + ?Sized>(num_contents: usize, size_bits: f64, spread: f64, gamma: f64, rng: &mut R) -> Self {
        let mut cat = Self::uniform(num_contents, size_bits, gamma);
        if spread > 0.0 {
            for s in &mut cat.sizes {
                *s = size_bits * (1.0 + spread * rng.gen_range(-1.0..=1.0));
            }
        }
        cat
    }

    pub fn len(&self) -> usize {
        self.sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }

    pub fn size(&self, f: ContentId) -> f64 {
        self.sizes[f.0]
    }
}

/// Content requested by each requesting UE, indexed by UE.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RequestSet(pub Vec<ContentId>);

impl RequestSet {
    pub fn content_of(&self, ue: usize) -> ContentId {
        self.0[ue]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Index of the first cumulative weight exceeding `u`.
fn inverse_cdf(cumulative: &[f64], u: f64) -> usize {
    let i = cumulative.partition_point(|&c| c <= u);
    i.min(cumulative.len() - 1)
}

/// Independent draws from the popularity distribution, one per requesting UE.
pub fn sample_requests<R: Rng + ?Sized>(rng: &mut R, catalog: &Catalog, num_requesting: usize) -> RequestSet {
    let mut acc = 0.0;
    let cumulative: Vec<f64> = catalog
        .popularity
        .iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect();
    let total = acc;
    RequestSet((0..num_requesting).map(|_| ContentId(inverse_cdf(&cumulative, rng.gen::<f64>() * total))).collect())
}

/// Per-content caching probabilities q_f = min(1, λ p_f) with Σ q_f = C.
///
/// λ is found exactly by saturating the most popular contents one at a
/// time until the remaining mass fits under the cap.
pub fn caching_probabilities(popularity: &[f64], capacity: usize) -> Vec<f64> {
    let n = popularity.len();
    assert!(capacity <= n, "cache capacity exceeds catalog size");
    if capacity == 0 {
        return vec![0.0; n];
    }
    if capacity == n {
        return vec![1.0; n];
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| popularity[b].total_cmp(&popularity[a]).then(a.cmp(&b)));
    let mut tail: f64 = popularity.iter().sum();
    let mut q = vec![0.0; n];
    for saturated in 0..capacity {
        let lambda = (capacity - saturated) as f64 / tail;
        if lambda * popularity[order[saturated]] <= 1.0 {
            for &f in &order[saturated..] {
                q[f] = lambda * popularity[f];
            }
            for &f in &order[..saturated] {
                q[f] = 1.0;
            }
            return q;
        }
        tail -= popularity[order[saturated]];
    }
    unreachable!("capacity < n always leaves an unsaturated content")
}

/// F_k for every UAV.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheState {
    pub per_uav: Vec<Vec<ContentId>>,
}

impl CacheState {
    pub fn empty(num_uavs: usize) -> Self {
        Self { per_uav: vec![Vec::new(); num_uavs] }
    }

    /// `uav` is zero-based.
    pub fn contains(&self, uav: usize, f: ContentId) -> bool {
        self.per_uav[uav].binary_search(&f).is_ok()
    }

    pub fn num_uavs(&self) -> usize {
        self.per_uav.len()
    }
}

/// Systematic sampling of exactly `capacity` distinct contents: the q_f
/// segments are laid end to end over [0, C) and hit by the points u + i,
/// i = 0..C-1, for one uniform offset u. Since every q_f ≤ 1, no segment is
/// hit twice and content f is included with probability exactly q_f.
pub fn sample_cache<R: Rng + ?Sized>(rng: &mut R, q: &[f64], capacity: usize) -> Vec<ContentId> {
    if capacity == 0 {
        return Vec::new();
    }
    let n = q.len();
    let offset: f64 = rng.gen();
    let mut picked: Vec<usize> = Vec::with_capacity(capacity);
    let mut seg_start = 0.0;
    let mut f = 0usize;
    for i in 0..capacity {
        let point = offset + i as f64;
        while f + 1 < n && seg_start + q[f] <= point {
            seg_start += q[f];
            f += 1;
        }
        // Rounding in the running boundary can land two points in one
        // segment or push the last point past the end.
        if picked.last() == Some(&f) || q[f] == 0.0 {
            let next = (f + 1..n).find(|&c| q[c] > 0.0);
            match next {
                Some(c) => {
                    seg_start += q[f..c].iter().sum::<f64>();
                    f = c;
                }
                None => {
                    let spare = (0..n).filter(|c| !picked.contains(c)).max_by(|&a, &b| q[a].total_cmp(&q[b])).expect("capacity <= F");
                    picked.push(spare);
                    continue;
                }
            }
        }
        picked.push(f);
    }
    picked.sort_unstable();
    debug_assert!(picked.windows(2).all(|w| w[0] < w[1]));
    picked.into_iter().map(ContentId).collect()
}

pub fn place_caches<R: Rng + ?Sized>(rng: &mut R, catalog: &Catalog, capacity: usize, num_uavs: usize) -> CacheState {
    let q = caching_probabilities(&catalog.popularity, capacity);
    CacheState { per_uav: (0..num_uavs).map(|_| sample_cache(rng, &q, capacity)).collect() }
}
