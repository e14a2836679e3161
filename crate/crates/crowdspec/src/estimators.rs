//! Label-inference rules: majority voting, weighted majority voting, and
//! the oracle maximum-likelihood estimator.
//!
//! Ties (including empty assignments) resolve to +1, so every estimator is
//! deterministic given its inputs.

use crate::error::{Error, Result};
use crate::model::{ModelInstance, ResponseSet};

/// Fidelities are clamped to this band before taking log-odds, so oracle
/// weights stay finite while preserving their ordering.
const FIDELITY_CLAMP: f64 = 1e-9;

/// Inferred labels plus the per-task aggregation sums before the sign.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelEstimate {
    labels: Vec<i8>,
    margins: Vec<f64>,
}

impl LabelEstimate {
    fn from_margins(margins: Vec<f64>) -> Self {
        let labels = margins.iter().map(|&s| if s < 0.0 { -1 } else { 1 }).collect();
        Self { labels, margins }
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }

    /// Diagnostic aggregation sums; not part of equality between estimates.
    pub fn margins(&self) -> &[f64] {
        &self.margins
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// CSV rows of `task_id,label,margin`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("task_id,label,margin\n");
        for (i, (&a, &s)) in self.labels.iter().zip(&self.margins).enumerate() {
            out.push_str(&format!("{i},{a},{s}\n"));
        }
        out
    }
}

/// Nonnegative aggregation weights defined on (a subset of) the assignment,
/// stored per task as `(worker, weight)` pairs sorted by worker.
#[derive(Debug, Clone, Default)]
pub struct WeightScheme {
    rows: Vec<Vec<(usize, f64)>>,
}

impl WeightScheme {
    pub fn new(rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let mut rows = rows;
        for (i, row) in rows.iter_mut().enumerate() {
            row.sort_unstable_by_key(|&(j, _)| j);
            if row.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(Error::invalid(format!("task {i} has duplicate weights")));
            }
            if row.iter().any(|&(_, w)| w < 0.0 || !w.is_finite()) {
                return Err(Error::invalid(format!("task {i} has a negative or non-finite weight")));
            }
        }
        Ok(Self { rows })
    }

    pub fn uniform(resp: &ResponseSet) -> Self {
        let rows = (0..resp.m())
            .map(|i| resp.row(i).iter().map(|&(j, _)| (j, 1.0)).collect())
            .collect();
        Self { rows }
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn m(&self) -> usize {
        self.rows.len()
    }
}

/// `sign(sum_j M_ij)` per task.
pub fn majority_vote(resp: &ResponseSet) -> LabelEstimate {
    let margins = (0..resp.m())
        .map(|i| resp.row(i).iter().map(|&(_, v)| v as f64).sum())
        .collect();
    LabelEstimate::from_margins(margins)
}

/// `sign(sum_j mu_ij M_ij)` per task. Every weighted pair must carry a
/// response.
pub fn weighted_majority_vote(resp: &ResponseSet, weights: &WeightScheme) -> Result<LabelEstimate> {
    if weights.m() != resp.m() {
        return Err(Error::dim(format!(
            "weights cover {} tasks but responses cover {}",
            weights.m(),
            resp.m()
        )));
    }
    let mut margins = Vec::with_capacity(resp.m());
    for i in 0..resp.m() {
        let mut sum = 0.0;
        for &(j, w) in weights.row(i) {
            let v = resp.get(i, j);
            if v == 0 {
                return Err(Error::invalid(format!(
                    "weight on ({i}, {j}) which is outside the assignment"
                )));
            }
            sum += w * v as f64;
        }
        margins.push(sum);
    }
    Ok(LabelEstimate::from_margins(margins))
}

/// Weighted majority voting with the oracle log-odds weights
/// `log(F_ij / (1 - F_ij))` computed from the true fidelity.
pub fn ml_oracle(resp: &ResponseSet, inst: &ModelInstance) -> Result<LabelEstimate> {
    if resp.m() != inst.m() || resp.n() != inst.n() {
        return Err(Error::dim(format!(
            "responses are {}x{} but instance is {}x{}",
            resp.m(),
            resp.n(),
            inst.m(),
            inst.n()
        )));
    }
    let rows = (0..resp.m())
        .map(|i| {
            resp.row(i)
                .iter()
                .map(|&(j, _)| {
                    let f = inst.fidelity(i, j).clamp(FIDELITY_CLAMP, 1.0 - FIDELITY_CLAMP);
                    (j, (f / (1.0 - f)).ln())
                })
                .collect()
        })
        .collect();
    weighted_majority_vote(resp, &WeightScheme { rows })
}
