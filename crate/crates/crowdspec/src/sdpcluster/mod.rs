//! Worker clustering via semidefinite programming.
//!
//! Pilot responses are condensed into a similarity matrix whose off-diagonal
//! expectation separates same-type from different-type worker pairs. The SDP
//! relaxation `max <A - nu*1, X>` over `{X PSD, tr X = n, 0 <= X_ij <= 1}`
//! is solved with an ADMM-style operator splitting, and the solution rows
//! are rounded with k-medoids.

mod kmedoids;
mod tuning;

pub use kmedoids::{kmedoids_rows, ClusterAssignment};
pub use tuning::{recovery_budget, population_similarity, tune, tune_symmetric, TuningEstimate};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::ResponseSet;

/// Off-diagonal-masked sum of outer products of pilot response rows:
/// `A[j][k] = sum_{i in pilots} M_ij * M_ik` for `j != k`, zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    n: usize,
    r: usize,
    a: Vec<i64>, // row-major n*n
}

impl SimilarityMatrix {
    /// Builds the similarity matrix from pilot tasks, each of which must be
    /// assigned to all `n` workers.
    pub fn from_responses(resp: &ResponseSet, pilot_tasks: &[usize]) -> Result<Self> {
        let n = resp.n();
        let mut a = vec![0i64; n * n];
        for &i in pilot_tasks {
            if i >= resp.m() {
                return Err(Error::invalid(format!("pilot task {i} out of range")));
            }
            let row = resp.row(i);
            if row.len() != n {
                return Err(Error::invalid(format!(
                    "pilot task {i} has {} responses but all {n} workers are required",
                    row.len()
                )));
            }
            for (jj, &(j, vj)) in row.iter().enumerate() {
                for &(k, vk) in &row[jj + 1..] {
                    let prod = (vj as i64) * (vk as i64);
                    a[j * n + k] += prod;
                    a[k * n + j] += prod;
                }
            }
        }
        Ok(Self { n, r: pilot_tasks.len(), a })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of pilot tasks aggregated.
    pub fn r(&self) -> usize {
        self.r
    }

    pub fn get(&self, j: usize, k: usize) -> i64 {
        self.a[j * self.n + k]
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |j, k| self.a[j * self.n + k] as f64)
    }

    /// CSV of `n` rows of `n` integers.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for j in 0..self.n {
            let row: Vec<String> =
                (0..self.n).map(|k| self.get(j, k).to_string()).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Solver parameters for the clustering SDP.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SdpConfig {
    /// Penalty subtracted from every similarity entry in the objective.
    pub nu: f64,
    /// ADMM penalty step.
    pub rho: f64,
    /// Relative primal residual tolerance.
    pub tol_primal: f64,
    /// Relative dual residual tolerance.
    pub tol_dual: f64,
    pub max_iters: usize,
}

impl SdpConfig {
    pub fn new(nu: f64) -> Result<Self> {
        let cfg = Self { nu, ..Self::default() };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nu < 0.0 {
            return Err(Error::invalid(format!("nu must be >= 0, got {}", self.nu)));
        }
        if self.rho <= 0.0 || self.tol_primal <= 0.0 || self.tol_dual <= 0.0 || self.max_iters == 0
        {
            return Err(Error::invalid(
                "rho, tolerances and max_iters must be positive".to_string(),
            ));
        }
        Ok(())
    }
}

impl Default for SdpConfig {
    fn default() -> Self {
        Self { nu: 0.0, rho: 1.0, tol_primal: 1e-6, tol_dual: 1e-6, max_iters: 20_000 }
    }
}

/// Approximate maximizer of the clustering SDP.
#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub x: DMatrix<f64>,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub converged: bool,
}

impl SdpSolution {
    pub fn objective(&self, a: &DMatrix<f64>, nu: f64) -> f64 {
        let n = self.x.nrows();
        let mut obj = 0.0;
        for j in 0..n {
            for k in 0..n {
                obj += (a[(j, k)] - nu) * self.x[(j, k)];
            }
        }
        obj
    }

    /// Solution matrix as CSV with 9 significant digits.
    pub fn to_csv(&self) -> String {
        let n = self.x.nrows();
        let mut out = String::new();
        for j in 0..n {
            let row: Vec<String> = (0..n).map(|k| format!("{:.9e}", self.x[(j, k)])).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Solves `max <A - nu*1, X>` over `{X PSD, tr X = n, 0 <= X_ij <= 1}`.
pub fn solve_sdp(a: &SimilarityMatrix, cfg: &SdpConfig) -> Result<SdpSolution> {
    solve_sdp_dense(&a.to_dense(), cfg)
}

/// Dense-input variant of [`solve_sdp`]; the input must be symmetric.
///
/// Operator splitting: the spectral iterate is projected onto
/// `{X PSD, tr X = n}` by eigendecomposition plus projection of the spectrum
/// onto the scaled simplex, the other iterate is clipped entrywise onto
/// `[0, 1]`, and a scaled dual variable ties them together. Non-convergence
/// within `max_iters` is reported through the flag, not as an error.
pub fn solve_sdp_dense(a: &DMatrix<f64>, cfg: &SdpConfig) -> Result<SdpSolution> {
    cfg.validate()?;
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::dim(format!("similarity matrix is {}x{}", n, a.ncols())));
    }
    for j in 0..n {
        for k in j + 1..n {
            if (a[(j, k)] - a[(k, j)]).abs() > 1e-9 * (1.0 + a[(j, k)].abs()) {
                return Err(Error::invalid(format!(
                    "similarity matrix not symmetric at ({j}, {k})"
                )));
            }
        }
    }
    let nf = n as f64;
    let c = a.clone() - DMatrix::from_element(n, n, cfg.nu);
    // The maximizer is invariant under positive rescaling of the objective;
    // normalizing by the largest entry keeps the proximal steps on the same
    // scale as the box-constrained iterates for any input magnitude.
    let scale = c.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12);
    let c_scaled = &c / scale;

    // Over-relaxation and residual balancing are the usual accelerants for
    // this splitting; rho stays at the configured value as the initial step.
    const RELAXATION: f64 = 1.8;
    const BALANCE_EVERY: usize = 20;
    let mut rho = cfg.rho;

    let mut x = DMatrix::<f64>::identity(n, n);
    let mut z = x.clone();
    let mut u = DMatrix::<f64>::zeros(n, n);
    let mut primal = f64::INFINITY;
    let mut dual = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;

    for iter in 1..=cfg.max_iters {
        iterations = iter;
        // Spectral step: project Z - U + C/rho onto {PSD, trace n}.
        let mut y = &z - &u + &c_scaled / rho;
        for j in 0..n {
            for k in j + 1..n {
                let s = 0.5 * (y[(j, k)] + y[(k, j)]);
                y[(j, k)] = s;
                y[(k, j)] = s;
            }
        }
        let eig = nalgebra::SymmetricEigen::new(y);
        let lambda = project_scaled_simplex(eig.eigenvalues.as_slice(), nf);
        let v = &eig.eigenvectors;
        let mut scaled = v.clone();
        for (col, &l) in lambda.iter().enumerate() {
            scaled.column_mut(col).scale_mut(l);
        }
        x = &scaled * v.transpose();

        // Box step and scaled dual update on the relaxed iterate.
        let x_hat = &x * RELAXATION + &z * (1.0 - RELAXATION);
        let z_new = (&x_hat + &u).map(|v| v.clamp(0.0, 1.0));
        u += &x_hat - &z_new;

        let x_norm = x.norm().max(z_new.norm()).max(1.0);
        primal = (&x - &z_new).norm() / x_norm;
        dual = rho * (&z_new - &z).norm() / (rho * u.norm()).max(1.0);
        z = z_new;
        if primal < cfg.tol_primal && dual < cfg.tol_dual {
            converged = true;
            break;
        }
        if iter % BALANCE_EVERY == 0 {
            if primal > 4.0 * dual && rho < 1e4 {
                rho *= 2.0;
                u /= 2.0;
            } else if dual > 4.0 * primal && rho > 1e-4 {
                rho /= 2.0;
                u *= 2.0;
            }
        }
    }

    // Report the box-side iterate: its entries are exactly in [0, 1] and at
    // convergence the trace and spectrum residuals are bounded by the
    // primal gap.
    Ok(SdpSolution { x: z, iterations, primal_residual: primal, dual_residual: dual, converged })
}

/// Euclidean projection of `v` onto `{w >= 0, sum w = total}`.
fn project_scaled_simplex(v: &[f64], total: f64) -> Vec<f64> {
    let mut sorted: Vec<f64> = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumulative = 0.0;
    let mut tau = 0.0;
    for (k, &val) in sorted.iter().enumerate() {
        cumulative += val;
        let candidate = (cumulative - total) / (k as f64 + 1.0);
        if val - candidate > 0.0 {
            tau = candidate;
        }
    }
    v.iter().map(|&x| (x - tau).max(0.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        assortativity, Assignment, ModelInstance, ReliabilityMatrix, ResponseSet, TypePriors,
    };
    use crate::rng::{derive_stream, stream};
    use approx::assert_relative_eq;

    #[test]
    fn similarity_counts_agreements() {
        // Two workers answering 3 pilot tasks identically: A = 3.
        let rows = vec![
            vec![(0, 1), (1, 1)],
            vec![(0, -1), (1, -1)],
            vec![(0, 1), (1, 1)],
        ];
        let resp = ResponseSet::from_rows(3, 2, rows).unwrap();
        let a = SimilarityMatrix::from_responses(&resp, &[0, 1, 2]).unwrap();
        assert_eq!(a.get(0, 1), 3);
        assert_eq!(a.get(0, 0), 0, "diagonal is zeroed");

        // Exactly one disagreement in 3 tasks: 2 - 1 = 1.
        let rows = vec![
            vec![(0, 1), (1, 1)],
            vec![(0, -1), (1, 1)],
            vec![(0, 1), (1, 1)],
        ];
        let resp = ResponseSet::from_rows(3, 2, rows).unwrap();
        let a = SimilarityMatrix::from_responses(&resp, &[0, 1, 2]).unwrap();
        assert_eq!(a.get(0, 1), 1);
    }

    #[test]
    fn similarity_rejects_missing_pilot_responses() {
        let rows = vec![vec![(0, 1)]];
        let resp = ResponseSet::from_rows(1, 2, rows).unwrap();
        assert!(SimilarityMatrix::from_responses(&resp, &[0]).is_err());
    }

    #[test]
    fn similarity_entries_bounded_with_pilot_parity() {
        let q = ReliabilityMatrix::original(3, 0.9, 0.6).unwrap();
        let mut rng = stream(41);
        let inst =
            ModelInstance::sample(&q, &TypePriors::uniform(3), 11, 8, None, &mut rng).unwrap();
        let resp = ResponseSet::sample(&inst, &Assignment::full(11, 8), &mut rng).unwrap();
        let pilots: Vec<usize> = (0..11).collect();
        let a = SimilarityMatrix::from_responses(&resp, &pilots).unwrap();
        for j in 0..8 {
            for k in 0..8 {
                if j == k {
                    assert_eq!(a.get(j, k), 0);
                } else {
                    assert!(a.get(j, k).unsigned_abs() as usize <= 11);
                    assert_eq!(a.get(j, k).rem_euclid(2), 11 % 2, "parity match");
                }
            }
        }
    }

    #[test]
    fn similarity_mean_matches_population_value() {
        // E[A_jk | w] = r * Phi(w_j, w_k), checked by Monte Carlo over 1e4
        // independent pilot batches at 3 sigma.
        let q = ReliabilityMatrix::original(2, 0.9, 0.6).unwrap();
        let priors = TypePriors::uniform(2);
        let report = assortativity(&q, &priors).unwrap();
        let r = 10usize;
        let worker_types = vec![0usize, 1];
        let trials = 10_000;
        let mut sum = 0.0;
        for s in 0..trials {
            let mut rng = derive_stream(43, &[s]);
            let labels = vec![1i8; r];
            let inst = ModelInstance::sample(&q, &priors, r, 2, Some(labels.clone()), &mut rng)
                .unwrap();
            let inst = ModelInstance::new(
                q.clone(),
                labels,
                inst.task_types().to_vec(),
                worker_types.clone(),
            )
            .unwrap();
            let resp = ResponseSet::sample(&inst, &Assignment::full(r, 2), &mut rng).unwrap();
            let a = SimilarityMatrix::from_responses(&resp, &(0..r).collect::<Vec<_>>()).unwrap();
            sum += a.get(0, 1) as f64;
        }
        let mean = sum / trials as f64;
        let expected = r as f64 * report.phi[(0, 1)];
        // Var(A_jk) <= r per pilot batch; 3 sigma of the Monte Carlo mean.
        let sigma = (r as f64 / trials as f64).sqrt();
        assert!(
            (mean - expected).abs() <= 3.0 * sigma,
            "mean {mean} vs population {expected}"
        );
    }

    #[test]
    fn sdp_recovers_noiseless_two_block_solution() {
        // Clusters {0,1} and {2,3}; off-diagonal +r within, -r across.
        let r = 5i64;
        let n = 4;
        let mut a = vec![0i64; n * n];
        for j in 0..n {
            for k in 0..n {
                if j != k {
                    a[j * n + k] = if (j < 2) == (k < 2) { r } else { -r };
                }
            }
        }
        let sim = SimilarityMatrix { n, r: r as usize, a };
        let sol = solve_sdp(&sim, &SdpConfig::new(0.0).unwrap()).unwrap();
        assert!(sol.converged, "solver did not converge");
        for j in 0..n {
            for k in 0..n {
                let expected = if (j < 2) == (k < 2) { 1.0 } else { 0.0 };
                assert!(
                    (sol.x[(j, k)] - expected).abs() < 1e-3,
                    "entry ({j}, {k}) = {} vs {expected}",
                    sol.x[(j, k)]
                );
            }
        }
    }

    #[test]
    fn sdp_zero_objective_returns_feasible_point() {
        let sim = SimilarityMatrix { n: 5, r: 0, a: vec![0; 25] };
        let sol = solve_sdp(&sim, &SdpConfig::new(0.0).unwrap()).unwrap();
        let x = &sol.x;
        assert_relative_eq!(x.trace(), 5.0, max_relative = 1e-6);
        for v in x.iter() {
            assert!(*v >= -1e-5 && *v <= 1.0 + 1e-5);
        }
        let eig = nalgebra::SymmetricEigen::new(x.clone());
        for ev in eig.eigenvalues.iter() {
            assert!(*ev >= -1e-5);
        }
    }

    #[test]
    fn sdp_rejects_non_symmetric_input() {
        let mut a = DMatrix::<f64>::zeros(3, 3);
        a[(0, 1)] = 1.0;
        assert!(solve_sdp_dense(&a, &SdpConfig::default()).is_err());
    }

    #[test]
    fn sdp_objective_beats_feasible_initialization() {
        let mut rng = stream(47);
        let q = ReliabilityMatrix::original(3, 0.9, 0.5).unwrap();
        let labels = vec![1i8; 40];
        let inst = ModelInstance::new(
            q.clone(),
            labels,
            vec![0; 40],
            crate::model::planted_worker_types(3, 4),
        )
        .unwrap();
        let mut inst2 =
            ModelInstance::sample(&q, &TypePriors::uniform(3), 40, 12, None, &mut rng).unwrap();
        inst2 = ModelInstance::new(
            q,
            inst2.labels().to_vec(),
            inst2.task_types().to_vec(),
            inst.worker_types().to_vec(),
        )
        .unwrap();
        let resp = ResponseSet::sample(&inst2, &Assignment::full(40, 12), &mut rng).unwrap();
        let sim = SimilarityMatrix::from_responses(&resp, &(0..40).collect::<Vec<_>>()).unwrap();
        let report = assortativity(inst2.reliability(), &TypePriors::uniform(3)).unwrap();
        let nu = 40.0 * (report.p_m + report.p_u) / 2.0;
        let cfg = SdpConfig::new(nu).unwrap();
        let sol = solve_sdp(&sim, &cfg).unwrap();
        let dense = sim.to_dense();
        let init_obj = {
            // <A - nu*1, I> for the identity initialization.
            let n = dense.nrows();
            (0..n).map(|j| dense[(j, j)] - nu).sum::<f64>()
        };
        assert!(sol.objective(&dense, nu) >= init_obj - 1e-6);
    }

    #[test]
    fn scaled_simplex_projection_is_exact() {
        let v = vec![3.0, 1.0, -2.0];
        let p = project_scaled_simplex(&v, 4.0);
        let sum: f64 = p.iter().sum();
        assert_relative_eq!(sum, 4.0, max_relative = 1e-12);
        assert!(p.iter().all(|&x| x >= 0.0));
        // Already-feasible input is unchanged.
        let v = vec![2.0, 1.0, 1.0];
        let p = project_scaled_simplex(&v, 4.0);
        for (a, b) in v.iter().zip(&p) {
            assert_relative_eq!(a, b, max_relative = 1e-12);
        }
    }
}
