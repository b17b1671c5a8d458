//! Lloyd's k-means with a seeded farthest-point start.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::linalg::squared_distance;

pub const MAX_LLOYD_ITERATIONS: usize = 100;

/// Cluster labels (0-based) and final centroids.
#[derive(Debug, Clone, PartialEq)]
pub struct KMeans {
    pub labels: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub iterations: usize,
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (k, c) in centroids.iter().enumerate() {
        let d = squared_distance(point, c);
        if d < best.1 {
            best = (k, d);
        }
    }
    best
}

/// First centroid is a seeded random point; each further centroid is the
/// point farthest from those already chosen (lowest index on ties).
fn spread_init(data: &[Vec<f64>], k: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = vec![data[rng.random_range(0..data.len())].clone()];
    let mut min_dist: Vec<f64> = data.iter().map(|p| squared_distance(p, &centroids[0])).collect();
    while centroids.len() < k {
        let far = crate::inference::argmax(&min_dist);
        centroids.push(data[far].clone());
        for (d, p) in min_dist.iter_mut().zip(data) {
            *d = d.min(squared_distance(p, &centroids[centroids.len() - 1]));
        }
    }
    centroids
}

pub fn kmeans(data: &[Vec<f64>], k: usize, seed: u64) -> Result<KMeans> {
    if k == 0 {
        return Err(invalid("k", "must be at least 1"));
    }
    if data.len() < k {
        return Err(invalid("data", format!("{} points cannot form {k} clusters", data.len())));
    }
    let dim = data[0].len();
    if let Some(p) = data.iter().find(|p| p.len() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, got: p.len() });
    }
    if data.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("k-means input contains non-finite values".into()));
    }

    let mut centroids = spread_init(data, k, seed);
    let mut labels: Vec<usize> = data.iter().map(|p| nearest(p, &centroids).0).collect();
    let mut iterations = 0;
    while iterations < MAX_LLOYD_ITERATIONS {
        iterations += 1;
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in data.iter().zip(&labels) {
            counts[l] += 1;
            for (s, v) in sums[l].iter_mut().zip(p) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            } else {
                // reseed to the point worst served by its current centroid
                let errors: Vec<f64> = data
                    .iter()
                    .zip(&labels)
                    .map(|(p, &l)| squared_distance(p, &centroids[l]))
                    .collect();
                let far = crate::inference::argmax(&errors);
                centroids[c] = data[far].clone();
                labels[far] = c;
            }
        }
        let next: Vec<usize> = data.iter().map(|p| nearest(p, &centroids).0).collect();
        if next == labels {
            break;
        }
        labels = next;
    }
    Ok(KMeans {
        labels,
        centroids,
        iterations,
    })
}
