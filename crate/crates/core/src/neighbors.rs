//! Exact Euclidean k-nearest-neighbor search.

use std::collections::HashSet;

use crate::cloud::{PointCloud, MIN_POINTS};
use crate::error::{Error, Result};
use crate::par;

/// Per-point neighbor lists, nearest first, never containing the point itself.
///
/// Column 0 is the first neighbor (r1), column 1 the second (r2).
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborTable {
    k: usize,
    distances: Vec<f64>,
    indices: Vec<usize>,
}

impl NeighborTable {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_points(&self) -> usize {
        self.indices.len() / self.k
    }

    pub fn distances(&self, i: usize) -> &[f64] {
        &self.distances[i * self.k..(i + 1) * self.k]
    }

    pub fn indices(&self, i: usize) -> &[usize] {
        &self.indices[i * self.k..(i + 1) * self.k]
    }
}

/// Squared L2 distance with a fixed eight-lane accumulation order, so the
/// result depends only on the two rows and never on the caller.
pub fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut lanes = [0.0f64; 8];
    let mut ca = a.chunks_exact(8);
    let mut cb = b.chunks_exact(8);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for l in 0..8 {
            let d = x[l] - y[l];
            lanes[l] += d * d;
        }
    }
    let mut tail = 0.0;
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        let d = x - y;
        tail += d * d;
    }
    ((lanes[0] + lanes[1]) + (lanes[2] + lanes[3]))
        + ((lanes[4] + lanes[5]) + (lanes[6] + lanes[7]))
        + tail
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    squared_euclidean(a, b).sqrt()
}

/// Exact k-NN for every point. Ties in distance go to the lower index.
pub fn knn(cloud: &PointCloud, k: usize) -> Result<NeighborTable> {
    let n = cloud.n_points();
    if k == 0 {
        return Err(Error::InvalidArgument("k must be positive".into()));
    }
    if k >= n {
        return Err(Error::KTooLarge { k, n });
    }
    let rows = par::map_indices(n, |i| nearest(cloud, i, k));
    let mut distances = Vec::with_capacity(n * k);
    let mut indices = Vec::with_capacity(n * k);
    for row in rows {
        for (d, j) in row {
            distances.push(d);
            indices.push(j);
        }
    }
    Ok(NeighborTable {
        k,
        distances,
        indices,
    })
}

fn nearest(cloud: &PointCloud, i: usize, k: usize) -> Vec<(f64, usize)> {
    let query = cloud.row(i);
    // (distance, squared distance, index), sorted by (distance, index).
    // Candidates arrive in ascending index order, so an equal-distance
    // newcomer always ranks after what is already kept.
    let mut best: Vec<(f64, f64, usize)> = Vec::with_capacity(k + 1);
    for (j, row) in cloud.rows().enumerate() {
        if j == i {
            continue;
        }
        let sq = squared_euclidean(query, row);
        if best.len() == k {
            let (worst, worst_sq, _) = best[k - 1];
            // sqrt is monotone: a larger square can never give a smaller root.
            if sq > worst_sq {
                continue;
            }
            let d = sq.sqrt();
            if d >= worst {
                continue;
            }
            best.pop();
            let pos = best.partition_point(|&(bd, _, _)| bd <= d);
            best.insert(pos, (d, sq, j));
        } else {
            let d = sq.sqrt();
            let pos = best.partition_point(|&(bd, _, _)| bd <= d);
            best.insert(pos, (d, sq, j));
        }
    }
    best.into_iter().map(|(d, _, j)| (d, j)).collect()
}

/// Removes exact duplicate rows, keeping the first occurrence.
///
/// Returns the surviving cloud and how many rows were dropped.
pub fn dedup(cloud: &PointCloud) -> Result<(PointCloud, usize)> {
    let mut seen: HashSet<Vec<u64>> = HashSet::with_capacity(cloud.n_points());
    let mut keep = Vec::with_capacity(cloud.n_points());
    for (i, row) in cloud.rows().enumerate() {
        // +0.0 folds -0.0 into 0.0 so numerically equal rows collide.
        let key: Vec<u64> = row.iter().map(|v| (v + 0.0).to_bits()).collect();
        if seen.insert(key) {
            keep.push(i);
        }
    }
    let removed = cloud.n_points() - keep.len();
    if keep.len() < MIN_POINTS {
        return Err(Error::TooFewPoints {
            needed: MIN_POINTS,
            got: keep.len(),
        });
    }
    if removed == 0 {
        return Ok((cloud.clone(), 0));
    }
    Ok((cloud.select(&keep)?, removed))
}
