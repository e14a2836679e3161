//! Evaluation metrics: label error, the permutation-minimized clustering
//! error, its two subset-selection variants, and type-matching error.
//!
//! The permutation minimum is computed exactly as a linear assignment on
//! the cluster/type confusion matrix; the d!-scan survives only as a test
//! oracle.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sdpcluster::ClusterAssignment;

/// One trial's metric values. Optional fields stay empty for estimators
/// that have no clustering stage.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MetricsRecord {
    pub label_error: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clustering_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ss_clustering_error_inclusive: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ss_clustering_error_restricted: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub type_match_error: Option<f64>,
    pub queries_per_task: f64,
}

/// Fraction of estimated labels that disagree with the ground truth.
pub fn label_error(estimate: &[i8], truth: &[i8]) -> Result<f64> {
    if estimate.len() != truth.len() {
        return Err(Error::dim(format!(
            "{} estimated labels vs {} true labels",
            estimate.len(),
            truth.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::invalid("label error of an empty vector"));
    }
    let bad = estimate.iter().zip(truth).filter(|(a, b)| a != b).count();
    Ok(bad as f64 / truth.len() as f64)
}

/// Maximum-weight perfect matching on a square nonnegative matrix, by the
/// standard O(k^3) potentials method. Returns `perm[row] = column`.
fn max_assignment(weights: &[Vec<f64>]) -> Vec<usize> {
    let k = weights.len();
    // Minimize negated weights; 1-based arrays with a dummy zero row/column.
    let inf = f64::INFINITY;
    let mut u = vec![0.0; k + 1];
    let mut v = vec![0.0; k + 1];
    let mut match_col = vec![0usize; k + 1]; // column -> row
    let mut way = vec![0usize; k + 1];
    for i in 1..=k {
        match_col[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; k + 1];
        let mut used = vec![false; k + 1];
        loop {
            used[j0] = true;
            let i0 = match_col[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=k {
                if used[j] {
                    continue;
                }
                let cur = -weights[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=k {
                if used[j] {
                    u[match_col[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if match_col[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            match_col[j0] = match_col[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut perm = vec![0usize; k];
    for j in 1..=k {
        if match_col[j] != 0 {
            perm[match_col[j] - 1] = j - 1;
        }
    }
    perm
}

/// Clustering error when the cluster count equals the number of types:
/// the mismatch fraction minimized over all relabelings of the clusters.
pub fn clustering_error(est: &ClusterAssignment, truth: &[usize], d: usize) -> Result<f64> {
    Ok(clustering_error_with_perm(est, truth, d)?.0)
}

/// Like [`clustering_error`], also returning the optimal relabeling
/// `perm[cluster] = type`; ties resolve to the matching found by the
/// assignment solver, which is deterministic.
pub fn clustering_error_with_perm(
    est: &ClusterAssignment,
    truth: &[usize],
    d: usize,
) -> Result<(f64, Vec<usize>)> {
    if est.k() != d {
        return Err(Error::invalid(format!(
            "clustering error needs k = d, got k = {} and d = {d}",
            est.k()
        )));
    }
    if est.n() != truth.len() {
        return Err(Error::dim(format!(
            "{} cluster labels vs {} true types",
            est.n(),
            truth.len()
        )));
    }
    if truth.iter().any(|&t| t >= d) {
        return Err(Error::invalid(format!("true type out of range for d = {d}")));
    }
    let mut counts = vec![vec![0.0; d]; d];
    for j in 0..est.n() {
        counts[est.labels()[j]][truth[j]] += 1.0;
    }
    let perm = max_assignment(&counts);
    let agree: f64 = (0..d).map(|z| counts[z][perm[z]]).sum();
    Ok(((est.n() as f64 - agree) / est.n() as f64, perm))
}

/// Subset-selection clustering errors for `c >= 1` inferred clusters: pick
/// the union of the largest `d` clusters (ties to the lower index), match
/// them optimally to the true types, and report the inclusive variant
/// (missing workers count as errors over `n`) and the restricted variant
/// (normalized by the union size).
pub fn ss_clustering_errors(
    est: &ClusterAssignment,
    truth: &[usize],
    d: usize,
) -> Result<(f64, f64)> {
    Ok(ss_clustering_errors_with_perm(est, truth, d)?.0)
}

/// Like [`ss_clustering_errors`], also returning the selected cluster ids
/// (largest `d`, in selection order) and their optimal type alignment.
pub fn ss_clustering_errors_with_perm(
    est: &ClusterAssignment,
    truth: &[usize],
    d: usize,
) -> Result<((f64, f64), Vec<usize>, Vec<usize>)> {
    if est.n() != truth.len() {
        return Err(Error::dim(format!(
            "{} cluster labels vs {} true types",
            est.n(),
            truth.len()
        )));
    }
    if d == 0 || truth.iter().any(|&t| t >= d) {
        return Err(Error::invalid(format!("true type out of range for d = {d}")));
    }
    let selected = largest_clusters(est, d);
    let n = est.n();

    // Confusion restricted to the selected clusters, rows in selection
    // order, padded square so the matching stays perfect when c < d.
    let k = selected.len();
    let size = k.max(d);
    let mut counts = vec![vec![0.0; size]; size];
    let mut union_size = 0usize;
    for j in 0..n {
        if let Some(row) = selected.iter().position(|&z| z == est.labels()[j]) {
            counts[row][truth[j]] += 1.0;
            union_size += 1;
        }
    }
    let perm = max_assignment(&counts);
    let agree: f64 = (0..k).map(|row| counts[row][perm[row]]).sum();
    let mismatch = union_size as f64 - agree;
    let inclusive = (mismatch + (n - union_size) as f64) / n as f64;
    let restricted = mismatch / union_size as f64;
    let alignment = (0..k).map(|row| perm[row]).collect();
    Ok(((inclusive, restricted), selected, alignment))
}

/// Ids of the `d` largest clusters, ties broken toward the lower index.
pub fn largest_clusters(est: &ClusterAssignment, d: usize) -> Vec<usize> {
    let sizes = est.sizes();
    let mut order: Vec<usize> = (0..est.k()).collect();
    order.sort_by_key(|&z| (std::cmp::Reverse(sizes[z]), z));
    order.truncate(d);
    order
}

/// Plain disagreement fraction between estimated and true task types.
pub fn type_match_error(t_hat: &[usize], truth: &[usize]) -> Result<f64> {
    if t_hat.len() != truth.len() {
        return Err(Error::dim(format!(
            "{} estimated types vs {} true types",
            t_hat.len(),
            truth.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::invalid("type-match error of an empty vector"));
    }
    let bad = t_hat.iter().zip(truth).filter(|(a, b)| a != b).count();
    Ok(bad as f64 / truth.len() as f64)
}

/// Type-match error after mapping cluster-indexed estimates through the
/// relabeling obtained from the worker-clustering error; the coupling keeps
/// task-type credit consistent with worker-cluster credit.
pub fn type_match_error_aligned(
    t_hat: &[usize],
    truth: &[usize],
    perm: &[usize],
) -> Result<f64> {
    if t_hat.iter().any(|&z| z >= perm.len()) {
        return Err(Error::invalid(format!(
            "estimated type out of range for a {}-entry alignment",
            perm.len()
        )));
    }
    let mapped: Vec<usize> = t_hat.iter().map(|&z| perm[z]).collect();
    type_match_error(&mapped, truth)
}
