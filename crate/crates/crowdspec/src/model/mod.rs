//! The d-type worker-task specialization model.
//!
//! Tasks carry binary labels in `{-1, +1}`. Each task and each worker has a
//! latent type in `0..d`. A worker of type `w` answers a task of type `t`
//! correctly with probability `Q(t, w)`, where `Q` is a d-by-d reliability
//! matrix with entries in `[1/2, 1]`. Type vectors are drawn from product
//! priors (uniform by default).

mod bounds;

pub use bounds::{
    feasible_d, feasible_d_with_constant, oracle_achievability_exponent, oracle_converse_exponent, shared_oracle_exponent, max_reliability_log_odds,
    weight_scheme_exponents, required_queries, voting_exponents, worst_mismatch_exponents, two_stage_exponents, two_stage_matched_exponents, FeasibleD,
    QueryBoundKind,
};

use nalgebra::DMatrix;
use rand::distr::weighted::WeightedIndex;
use rand::distr::{Distribution, Uniform};
use rand::Rng;

use crate::error::{Error, Result};

/// Square matrix of per-(task type, worker type) correctness probabilities.
///
/// Entries live in `[0.5, 1.0]` and `d >= 2`. Row `t` describes how reliably
/// each worker type answers tasks of type `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReliabilityMatrix {
    d: usize,
    q: Vec<f64>, // row-major d*d
}

impl ReliabilityMatrix {
    pub fn new(d: usize, entries: Vec<f64>) -> Result<Self> {
        if d < 2 {
            return Err(Error::invalid(format!("reliability matrix needs d >= 2, got {d}")));
        }
        if entries.len() != d * d {
            return Err(Error::dim(format!(
                "reliability matrix expects {} entries, got {}",
                d * d,
                entries.len()
            )));
        }
        for (idx, &v) in entries.iter().enumerate() {
            if !(0.5..=1.0).contains(&v) {
                return Err(Error::invalid(format!(
                    "reliability entry ({}, {}) = {v} outside [0.5, 1.0]",
                    idx / d,
                    idx % d
                )));
            }
        }
        Ok(Self { d, q: entries })
    }

    /// Diagonal-`p`, off-diagonal-`q` matrix: `Q = q*1 + (p - q)*I`.
    pub fn original(d: usize, p: f64, q: f64) -> Result<Self> {
        if !(0.5..1.0).contains(&q) || q >= p || p >= 1.0 {
            return Err(Error::invalid(format!(
                "original model requires 0.5 <= q < p < 1, got p = {p}, q = {q}"
            )));
        }
        let mut entries = vec![q; d * d];
        for t in 0..d {
            entries[t * d + t] = p;
        }
        Self::new(d, entries)
    }

    /// Samples diagonals from `Uniform[p_min, 0.99]` and off-diagonals from
    /// `Uniform[0.5, q_max]`. Degenerate intervals return the constant.
    pub fn sample<R: Rng>(d: usize, p_min: f64, q_max: f64, rng: &mut R) -> Result<Self> {
        if !(0.5..=0.99).contains(&p_min) || q_max < 0.5 || q_max >= p_min {
            return Err(Error::invalid(format!(
                "sampling requires 0.5 <= q_max < p_min <= 0.99, got p_min = {p_min}, q_max = {q_max}"
            )));
        }
        let diag = Uniform::new_inclusive(p_min, 0.99)
            .map_err(|e| Error::invalid(format!("diagonal interval: {e}")))?;
        let off = Uniform::new_inclusive(0.5, q_max)
            .map_err(|e| Error::invalid(format!("off-diagonal interval: {e}")))?;
        let mut entries = vec![0.0; d * d];
        for t in 0..d {
            for w in 0..d {
                entries[t * d + w] = if t == w {
                    diag.sample(rng)
                } else {
                    off.sample(rng)
                };
            }
        }
        Self::new(d, entries)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn get(&self, t: usize, w: usize) -> f64 {
        self.q[t * self.d + w]
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.q[t * self.d..(t + 1) * self.d]
    }

    /// Matched reliability `p*(t) = Q(t, t)`.
    pub fn p_star(&self, t: usize) -> f64 {
        self.get(t, t)
    }

    /// Maximum mismatched reliability `q*(t) = max_{w != t} Q(t, w)`.
    pub fn q_star(&self, t: usize) -> f64 {
        (0..self.d)
            .filter(|&w| w != t)
            .map(|w| self.get(t, w))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// One row per line, comma-separated decimals.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for t in 0..self.d {
            let row: Vec<String> = self.row(t).iter().map(|v| format!("{v}")).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let rows: Vec<Vec<f64>> = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|line| {
                line.split(',')
                    .map(|v| {
                        v.trim()
                            .parse::<f64>()
                            .map_err(|e| Error::Parse(format!("bad reliability value {v:?}: {e}")))
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        let d = rows.len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::Parse("reliability CSV must be square".into()));
        }
        Self::new(d, rows.into_iter().flatten().collect())
    }
}

/// Product priors over task types (`mu`) and worker types (`nu`).
#[derive(Debug, Clone, PartialEq)]
pub struct TypePriors {
    mu: Vec<f64>,
    nu: Vec<f64>,
}

impl TypePriors {
    pub fn new(mu: Vec<f64>, nu: Vec<f64>) -> Result<Self> {
        if mu.len() != nu.len() {
            return Err(Error::dim(format!(
                "priors must share a length, got {} and {}",
                mu.len(),
                nu.len()
            )));
        }
        for (name, v) in [("mu", &mu), ("nu", &nu)] {
            if v.iter().any(|&p| p < 0.0) {
                return Err(Error::invalid(format!("{name} has a negative entry")));
            }
            let sum: f64 = v.iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::invalid(format!("{name} sums to {sum}, expected 1")));
            }
        }
        Ok(Self { mu, nu })
    }

    pub fn uniform(d: usize) -> Self {
        let p = vec![1.0 / d as f64; d];
        Self { mu: p.clone(), nu: p }
    }

    pub fn d(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn nu(&self) -> &[f64] {
        &self.nu
    }

    /// Two CSV lines: task-type prior, then worker-type prior.
    pub fn to_csv(&self) -> String {
        let fmt = |v: &[f64]| {
            v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(",")
        };
        format!("{}\n{}\n", fmt(&self.mu), fmt(&self.nu))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let rows: Vec<Vec<f64>> = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|line| {
                line.split(',')
                    .map(|v| {
                        v.trim()
                            .parse::<f64>()
                            .map_err(|e| Error::Parse(format!("bad prior value {v:?}: {e}")))
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        if rows.len() != 2 {
            return Err(Error::Parse("priors CSV must have exactly two lines".into()));
        }
        let mut it = rows.into_iter();
        Self::new(it.next().unwrap(), it.next().unwrap())
    }
}

/// A sampled ground truth: labels, type vectors, and the reliability matrix
/// that induces the fidelity `F[i][j] = Q(t_i, w_j)`.
#[derive(Debug, Clone)]
pub struct ModelInstance {
    labels: Vec<i8>,
    task_types: Vec<usize>,
    worker_types: Vec<usize>,
    reliability: ReliabilityMatrix,
}

impl ModelInstance {
    pub fn new(
        reliability: ReliabilityMatrix,
        labels: Vec<i8>,
        task_types: Vec<usize>,
        worker_types: Vec<usize>,
    ) -> Result<Self> {
        if labels.len() != task_types.len() {
            return Err(Error::dim(format!(
                "{} labels but {} task types",
                labels.len(),
                task_types.len()
            )));
        }
        if labels.iter().any(|&a| a != 1 && a != -1) {
            return Err(Error::invalid("labels must be +1 or -1"));
        }
        let d = reliability.d();
        if task_types.iter().chain(worker_types.iter()).any(|&t| t >= d) {
            return Err(Error::invalid(format!("type index out of range for d = {d}")));
        }
        Ok(Self { labels, task_types, worker_types, reliability })
    }

    /// Draws `t ~ mu^m`, `w ~ nu^n`; labels are taken as given or sampled
    /// uniformly from `{-1, +1}`.
    pub fn sample<R: Rng>(
        reliability: &ReliabilityMatrix,
        priors: &TypePriors,
        m: usize,
        n: usize,
        labels: Option<Vec<i8>>,
        rng: &mut R,
    ) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::invalid(format!("need m, n >= 1, got m = {m}, n = {n}")));
        }
        if priors.d() != reliability.d() {
            return Err(Error::dim(format!(
                "priors of length {} but reliability d = {}",
                priors.d(),
                reliability.d()
            )));
        }
        let labels = match labels {
            Some(a) => {
                if a.len() != m {
                    return Err(Error::dim(format!(
                        "label vector of length {} but m = {m}",
                        a.len()
                    )));
                }
                a
            }
            None => (0..m).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect(),
        };
        let mu_dist = WeightedIndex::new(priors.mu())
            .map_err(|e| Error::invalid(format!("task-type prior: {e}")))?;
        let nu_dist = WeightedIndex::new(priors.nu())
            .map_err(|e| Error::invalid(format!("worker-type prior: {e}")))?;
        let task_types = (0..m).map(|_| mu_dist.sample(rng)).collect();
        let worker_types = (0..n).map(|_| nu_dist.sample(rng)).collect();
        Self::new(reliability.clone(), labels, task_types, worker_types)
    }

    pub fn m(&self) -> usize {
        self.labels.len()
    }

    pub fn n(&self) -> usize {
        self.worker_types.len()
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }

    pub fn task_types(&self) -> &[usize] {
        &self.task_types
    }

    pub fn worker_types(&self) -> &[usize] {
        &self.worker_types
    }

    pub fn reliability(&self) -> &ReliabilityMatrix {
        &self.reliability
    }

    /// Probability that worker `j` answers task `i` correctly.
    pub fn fidelity(&self, i: usize, j: usize) -> f64 {
        self.reliability.get(self.task_types[i], self.worker_types[j])
    }
}

/// Worker-type vector with exactly `s` workers of each of the `d` types,
/// in type order. Used by the planted-cluster tuning experiments.
pub fn planted_worker_types(d: usize, s: usize) -> Vec<usize> {
    (0..d).flat_map(|z| std::iter::repeat_n(z, s)).collect()
}

/// The worker-task assignment set, stored per task as sorted worker lists.
#[derive(Debug, Clone, Default)]
pub struct Assignment {
    per_task: Vec<Vec<usize>>,
}

impl Assignment {
    pub fn new(per_task: Vec<Vec<usize>>, n: usize) -> Result<Self> {
        let mut per_task = per_task;
        for (i, workers) in per_task.iter_mut().enumerate() {
            workers.sort_unstable();
            if workers.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::invalid(format!("task {i} lists a worker twice")));
            }
            if workers.last().is_some_and(|&j| j >= n) {
                return Err(Error::invalid(format!(
                    "task {i} references a worker >= n = {n}"
                )));
            }
        }
        Ok(Self { per_task })
    }

    /// Every task assigned to every worker.
    pub fn full(m: usize, n: usize) -> Self {
        Self { per_task: vec![(0..n).collect(); m] }
    }

    pub fn m(&self) -> usize {
        self.per_task.len()
    }

    /// Workers assigned to task `i`.
    pub fn workers(&self, i: usize) -> &[usize] {
        &self.per_task[i]
    }

    /// Total number of (task, worker) pairs.
    pub fn len(&self) -> usize {
        self.per_task.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.per_task.iter().all(Vec::is_empty)
    }
}

/// Sparse response matrix over `{-1, 0, +1}`: entries exist exactly on the
/// assignment set, every stored response is `+/-1`, and lookups off the
/// assignment return 0.
#[derive(Debug, Clone)]
pub struct ResponseSet {
    m: usize,
    n: usize,
    rows: Vec<Vec<(usize, i8)>>, // sorted by worker index
}

impl ResponseSet {
    /// Samples `M_ij = a_i` with probability `F_ij`, else `-a_i`,
    /// independently across assigned pairs.
    pub fn sample<R: Rng>(
        inst: &ModelInstance,
        assignment: &Assignment,
        rng: &mut R,
    ) -> Result<Self> {
        if assignment.m() > inst.m() {
            return Err(Error::invalid(format!(
                "assignment covers {} tasks but instance has {}",
                assignment.m(),
                inst.m()
            )));
        }
        let mut rows = Vec::with_capacity(inst.m());
        for i in 0..assignment.m() {
            let mut row = Vec::with_capacity(assignment.workers(i).len());
            for &j in assignment.workers(i) {
                if j >= inst.n() {
                    return Err(Error::invalid(format!(
                        "assignment references worker {j} but n = {}",
                        inst.n()
                    )));
                }
                let f = inst.fidelity(i, j);
                let correct = rng.random::<f64>() < f;
                row.push((j, if correct { inst.labels[i] } else { -inst.labels[i] }));
            }
            rows.push(row);
        }
        rows.resize(inst.m(), Vec::new());
        Ok(Self { m: inst.m(), n: inst.n(), rows })
    }

    pub fn from_rows(m: usize, n: usize, rows: Vec<Vec<(usize, i8)>>) -> Result<Self> {
        if rows.len() != m {
            return Err(Error::dim(format!("{} rows but m = {m}", rows.len())));
        }
        let mut rows = rows;
        for (i, row) in rows.iter_mut().enumerate() {
            row.sort_unstable_by_key(|&(j, _)| j);
            if row.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(Error::invalid(format!("task {i} has duplicate responses")));
            }
            for &(j, v) in row.iter() {
                if j >= n {
                    return Err(Error::invalid(format!("response for worker {j} >= n = {n}")));
                }
                if v != 1 && v != -1 {
                    return Err(Error::invalid(format!("response ({i}, {j}) = {v} not in {{-1, +1}}")));
                }
            }
        }
        Ok(Self { m, n, rows })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `M_ij`, with 0 for pairs outside the assignment.
    pub fn get(&self, i: usize, j: usize) -> i8 {
        self.rows[i]
            .binary_search_by_key(&j, |&(w, _)| w)
            .map(|idx| self.rows[i][idx].1)
            .unwrap_or(0)
    }

    /// Responses for task `i` as `(worker, answer)` pairs sorted by worker.
    pub fn row(&self, i: usize) -> &[(usize, i8)] {
        &self.rows[i]
    }

    pub fn num_responses(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }
}

/// Assortativity diagnostics of a reliability matrix: the per-row margins
/// `p*(t), q*(t)` and the collective quality correlation matrix
/// `Phi(a, b) = sum_t mu(t) (2Q(t,a) - 1)(2Q(t,b) - 1)`.
#[derive(Debug, Clone)]
pub struct AssortativityReport {
    pub p_star: Vec<f64>,
    pub q_star: Vec<f64>,
    pub phi: DMatrix<f64>,
    /// Minimum diagonal of `phi`.
    pub p_m: f64,
    /// Maximum off-diagonal of `phi`.
    pub p_u: f64,
    /// `p*(t) > q*(t)` strictly for every `t`.
    pub weakly_assortative: bool,
    /// `p_m > p_u` strictly.
    pub strongly_assortative: bool,
}

pub fn assortativity(q: &ReliabilityMatrix, priors: &TypePriors) -> Result<AssortativityReport> {
    let d = q.d();
    if priors.d() != d {
        return Err(Error::dim(format!(
            "priors of length {} but reliability d = {d}",
            priors.d()
        )));
    }
    let mu = priors.mu();
    let phi = DMatrix::from_fn(d, d, |a, b| {
        (0..d)
            .map(|t| mu[t] * (2.0 * q.get(t, a) - 1.0) * (2.0 * q.get(t, b) - 1.0))
            .sum()
    });
    let p_star: Vec<f64> = (0..d).map(|t| q.p_star(t)).collect();
    let q_star: Vec<f64> = (0..d).map(|t| q.q_star(t)).collect();
    let p_m = (0..d).map(|a| phi[(a, a)]).fold(f64::INFINITY, f64::min);
    let p_u = (0..d)
        .flat_map(|a| (0..d).filter(move |&b| b != a).map(move |b| (a, b)))
        .map(|(a, b)| phi[(a, b)])
        .fold(f64::NEG_INFINITY, f64::max);
    let weakly = p_star.iter().zip(&q_star).all(|(p, qs)| p > qs);
    Ok(AssortativityReport {
        p_star,
        q_star,
        phi,
        p_m,
        p_u,
        weakly_assortative: weakly,
        strongly_assortative: p_m > p_u,
    })
}

#[cfg(test)]
mod tests;
