//! Approximate k-medoids over the rows of the SDP solution.
//!
//! Farthest-first initialization (first medoid is the max-norm row, each
//! next one maximizes the distance to the chosen set), then at most 50
//! assignment/update rounds under the Euclidean row metric. Exact ties are
//! broken uniformly with the caller's stream, so runs are deterministic
//! per seed.

use nalgebra::DMatrix;
use rand::seq::IndexedRandom;
use rand::Rng;

use crate::error::{Error, Result};

const MAX_ROUNDS: usize = 50;

/// Partition of workers into `k` nonempty clusters.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    labels: Vec<usize>,
    k: usize,
    medoid_rows: Option<Vec<usize>>,
}

impl ClusterAssignment {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("need at least one cluster".to_string()));
        }
        if labels.iter().any(|&z| z >= k) {
            return Err(Error::invalid(format!("cluster label out of range for k = {k}")));
        }
        for z in 0..k {
            if !labels.contains(&z) {
                return Err(Error::invalid(format!("cluster {z} is empty")));
            }
        }
        Ok(Self { labels, k, medoid_rows: None })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    /// Medoid row indices, present when produced by k-medoids.
    pub fn medoid_rows(&self) -> Option<&[usize]> {
        self.medoid_rows.as_deref()
    }

    /// Members of cluster `z` in index order.
    pub fn members(&self, z: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter_map(|(j, &c)| (c == z).then_some(j))
            .collect()
    }

    /// Cluster sizes indexed by cluster.
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.k];
        for &z in &self.labels {
            sizes[z] += 1;
        }
        sizes
    }
}

fn row_distance(x: &DMatrix<f64>, a: usize, b: usize) -> f64 {
    let n = x.ncols();
    let mut s = 0.0;
    for c in 0..n {
        let d = x[(a, c)] - x[(b, c)];
        s += d * d;
    }
    s.sqrt()
}

/// Indices attaining the maximum of `vals` under exact comparison.
fn argmax_ties(vals: &[f64]) -> Vec<usize> {
    let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    vals.iter()
        .enumerate()
        .filter_map(|(i, &v)| (v == max).then_some(i))
        .collect()
}

/// Clusters the rows of `x` into `k` groups around medoid rows.
pub fn kmedoids_rows<R: Rng>(x: &DMatrix<f64>, k: usize, rng: &mut R) -> Result<ClusterAssignment> {
    let n = x.nrows();
    if k == 0 || k > n {
        return Err(Error::invalid(format!("need 1 <= k <= {n}, got k = {k}")));
    }

    // Farthest-first seeding.
    let norms: Vec<f64> = (0..n).map(|j| x.row(j).norm()).collect();
    let mut medoids = vec![*argmax_ties(&norms).choose(rng).unwrap()];
    while medoids.len() < k {
        let dists: Vec<f64> = (0..n)
            .map(|j| {
                if medoids.contains(&j) {
                    f64::NEG_INFINITY
                } else {
                    medoids.iter().map(|&m| row_distance(x, j, m)).fold(f64::INFINITY, f64::min)
                }
            })
            .collect();
        medoids.push(*argmax_ties(&dists).choose(rng).unwrap());
    }
    medoids.sort_unstable();

    let mut labels = vec![0usize; n];
    let mut prev_objective = f64::INFINITY;
    for _ in 0..MAX_ROUNDS {
        // Assignment: nearest medoid; a medoid row always keeps itself, so
        // no cluster can be emptied by ties between duplicate rows.
        for j in 0..n {
            if let Some(pos) = medoids.iter().position(|&m| m == j) {
                labels[j] = pos;
                continue;
            }
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for (z, &m) in medoids.iter().enumerate() {
                let d = row_distance(x, j, m);
                if d < best_d {
                    best_d = d;
                    best = z;
                }
            }
            labels[j] = best;
        }

        // Update: per cluster, the member minimizing total distance.
        let mut changed = false;
        for z in 0..k {
            let members: Vec<usize> = (0..n).filter(|&j| labels[j] == z).collect();
            let mut best = medoids[z];
            let mut best_cost = f64::INFINITY;
            for &cand in &members {
                let cost: f64 = members.iter().map(|&j| row_distance(x, j, cand)).sum();
                if cost < best_cost {
                    best_cost = cost;
                    best = cand;
                }
            }
            if best != medoids[z] {
                medoids[z] = best;
                changed = true;
            }
        }

        let objective: f64 = (0..n).map(|j| row_distance(x, j, medoids[labels[j]])).sum();
        debug_assert!(
            objective <= prev_objective + 1e-12 * (1.0 + prev_objective.abs()),
            "k-medoids objective increased: {prev_objective} -> {objective}"
        );
        prev_objective = objective;
        if !changed {
            break;
        }
    }

    let mut out = ClusterAssignment::new(labels, k)?;
    out.medoid_rows = Some(medoids);
    Ok(out)
}
