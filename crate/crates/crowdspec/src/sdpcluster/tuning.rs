//! Data-driven estimation of the SDP penalty and the number of types from
//! the spectrum of the similarity matrix, plus the pilot-budget rule that
//! makes exact recovery provable.

use nalgebra::DMatrix;
use rand::seq::IndexedRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::sdpcluster::SimilarityMatrix;

/// Spectral estimates of the number of types, cluster size, and SDP penalty.
#[derive(Debug, Clone)]
pub struct TuningEstimate {
    /// Index maximizing the eigengap over positions `2..=n-1`.
    pub d_hat: usize,
    /// `n / d_hat`.
    pub s_hat: f64,
    /// Plug-in penalty estimate.
    pub nu_hat: f64,
    /// Eigenvalues sorted in descending order.
    pub eigenvalues: Vec<f64>,
}

/// Tunes from a similarity matrix. Eigengap ties break uniformly at random
/// with the caller's stream.
pub fn tune<R: Rng>(a: &SimilarityMatrix, rng: &mut R) -> Result<TuningEstimate> {
    tune_symmetric(&a.to_dense(), rng)
}

/// Dense-input variant of [`tune`], also used with analytically constructed
/// population matrices.
pub fn tune_symmetric<R: Rng>(a: &DMatrix<f64>, rng: &mut R) -> Result<TuningEstimate> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::dim(format!("matrix is {}x{}", n, a.ncols())));
    }
    if n < 3 {
        return Err(Error::invalid(format!("tuning needs n >= 3, got {n}")));
    }
    let mut sym = a.clone();
    for j in 0..n {
        for k in j + 1..n {
            let s = 0.5 * (sym[(j, k)] + sym[(k, j)]);
            if (sym[(j, k)] - sym[(k, j)]).abs() > 1e-9 * (1.0 + s.abs()) {
                return Err(Error::invalid(format!("matrix not symmetric at ({j}, {k})")));
            }
            sym[(j, k)] = s;
            sym[(k, j)] = s;
        }
    }
    let mut eigenvalues: Vec<f64> = nalgebra::SymmetricEigen::new(sym)
        .eigenvalues
        .iter()
        .copied()
        .collect();
    eigenvalues.sort_by(|x, y| y.partial_cmp(x).unwrap());

    // d_hat = argmax { lambda_i - lambda_{i+1} : i in 2..=n-1 } (1-based).
    let gaps: Vec<f64> = (2..=n - 1).map(|i| eigenvalues[i - 1] - eigenvalues[i]).collect();
    let max_gap = gaps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tied: Vec<usize> = gaps
        .iter()
        .enumerate()
        .filter_map(|(idx, &g)| (g == max_gap).then_some(idx + 2))
        .collect();
    let d_hat = *tied.choose(rng).unwrap();

    let s_hat = n as f64 / d_hat as f64;
    let (l1, l2) = (eigenvalues[0], eigenvalues[1]);
    let nu_hat = 0.5
        * ((s_hat * l1 + (n as f64 - s_hat) * l2) / (n as f64 * (s_hat - 1.0))
            + (l1 - l2) / n as f64);
    Ok(TuningEstimate { d_hat, s_hat, nu_hat, eigenvalues })
}

/// Pilot-task budget sufficient for exact cluster recovery:
/// `ceil(c2 * d^2 (ln n)^2 / (p_m - p_u)^2)`.
pub fn recovery_budget(n: usize, d: usize, p_m: f64, p_u: f64, c2: f64) -> Result<usize> {
    if p_m <= p_u {
        return Err(Error::invalid(format!(
            "strong assortativity required: p_m = {p_m} <= p_u = {p_u}"
        )));
    }
    if c2 < 0.0 {
        return Err(Error::invalid(format!("c2 must be nonnegative, got {c2}")));
    }
    let gap = p_m - p_u;
    let raw = c2 * (d * d) as f64 * (n as f64).ln().powi(2) / (gap * gap);
    Ok(raw.ceil() as usize)
}

/// Analytic conditional expectation of the similarity matrix for planted
/// worker types: `r * Phi(w_j, w_k)` off the diagonal, zero on it.
pub fn population_similarity(
    phi: &DMatrix<f64>,
    worker_types: &[usize],
    r: usize,
) -> DMatrix<f64> {
    let n = worker_types.len();
    DMatrix::from_fn(n, n, |j, k| {
        if j == k {
            0.0
        } else {
            r as f64 * phi[(worker_types[j], worker_types[k])]
        }
    })
}
