//! Lloyd's K-means over ground coordinates, seeded with k-means++.

use rand::Rng;

use crate::error::{Error, Result};
use crate::scenario::Point3;

#[derive(Debug, Clone)]
pub struct KMeansOutcome {
    pub centroids: Vec<[f64; 2]>,
    /// Within-cluster sum of squared distances after each Lloyd iteration.
    pub sse_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

fn nearest(p: [f64; 2], centroids: &[[f64; 2]]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, &c) in centroids.iter().enumerate() {
        let d = dist2(p, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

fn count_distinct(points: &[[f64; 2]]) -> usize {
    let mut keys: Vec<(u64, u64)> = points.iter().map(|p| (p[0].to_bits(), p[1].to_bits())).collect();
    keys.sort_unstable();
    keys.dedup();
    keys.len()
}

pub fn kmeans<R: Rng + ?Sized>(points: &[[f64; 2]], k: usize, max_iter: usize, tol: f64, rng: &mut R) -> Result<KMeansOutcome> {
    if k == 0 {
        return Ok(KMeansOutcome { centroids: vec![], sse_trace: vec![], iterations: 0, converged: true });
    }
    let distinct = count_distinct(points);
    if k > distinct {
        return Err(Error::Config(vec![format!("cannot place {k} UAVs over {distinct} distinct UE positions")]));
    }

    // k-means++ seeding
    let mut centroids = Vec::with_capacity(k);
    centroids.push(points[rng.gen_range(0..points.len())]);
    let mut d2: Vec<f64> = points.iter().map(|&p| dist2(p, centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let mut target = rng.gen::<f64>() * total;
        let mut pick = None;
        for (i, &w) in d2.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            pick = Some(i);
            if target < w {
                break;
            }
            target -= w;
        }
        let c = points[pick.expect("k <= distinct points leaves a positive weight")];
        centroids.push(c);
        for (w, &p) in d2.iter_mut().zip(points) {
            *w = w.min(dist2(p, c));
        }
    }

    let mut sse_trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let mut sums = vec![[0.0f64; 2]; k];
        let mut counts = vec![0usize; k];
        for &p in points {
            let (c, _) = nearest(p, &centroids);
            sums[c][0] += p[0];
            sums[c][1] += p[1];
            counts[c] += 1;
        }
        let mut shift = 0.0f64;
        for c in 0..k {
            // an emptied cluster keeps its centroid
            if counts[c] > 0 {
                let next = [sums[c][0] / counts[c] as f64, sums[c][1] / counts[c] as f64];
                shift = shift.max(dist2(next, centroids[c]).sqrt());
                centroids[c] = next;
            }
        }
        sse_trace.push(points.iter().map(|&p| nearest(p, &centroids).1).sum());
        if shift <= tol {
            converged = true;
            break;
        }
    }
    Ok(KMeansOutcome { centroids, sse_trace, iterations, converged })
}

/// Centroids of the UEs' ground coordinates, lifted to `altitude_m`.
pub fn kmeans_uav_placement<R: Rng + ?Sized>(
    ue_positions: &[Point3],
    k: usize,
    altitude_m: f64,
    max_iter: usize,
    tol: f64,
    rng: &mut R,
) -> Result<Vec<Point3>> {
    let ground: Vec<[f64; 2]> = ue_positions.iter().map(|p| [p.x, p.y]).collect();
    let out = kmeans(&ground, k, max_iter, tol, rng)?;
    Ok(out.centroids.into_iter().map(|[x, y]| Point3::new(x, y, altitude_m)).collect())
}
