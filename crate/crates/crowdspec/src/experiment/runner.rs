//! Trial execution and the seeded sweep.
//!
//! Each grid point gets a reliability matrix drawn from its own derived
//! stream (held fixed across that point's trials, as in the reference
//! experiments); each trial then redraws the instance and all responses
//! from a second stream keyed by (grid index, trial index). Results are
//! identical regardless of the worker-pool size.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimators::{majority_vote, ml_oracle};
use crate::experiment::config::{
    expand_grid, EstimatorKind, ExperimentConfig, GridPoint, NuSetting, PilotBudget, XiSetting,
};
use crate::metrics::{
    clustering_error_with_perm, label_error, ss_clustering_errors_with_perm, type_match_error,
    type_match_error_aligned, MetricsRecord,
};
use crate::model::{
    assortativity, planted_worker_types, Assignment, ModelInstance, ReliabilityMatrix,
    ResponseSet, TypePriors,
};
use crate::pipeline::{run_alg1, run_subset_selection, Alg1Tuning, XiMode};
use crate::rng::{derive_stream, ChaCha12Rng};
use crate::sdpcluster::{recovery_budget, SdpConfig};

const STREAM_RELIABILITY: u64 = 1;
const STREAM_TRIAL: u64 = 2;

/// One line of the JSON-lines trial log.
#[derive(Debug, Clone, Serialize)]
pub struct TrialRecord {
    pub config_id: usize,
    pub trial: usize,
    pub seed: u64,
    pub estimator: &'static str,
    pub success: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricsRecord>,
}

/// Reliability matrix for a grid point, drawn once per point.
fn point_reliability(
    point: &GridPoint,
    cfg: &ExperimentConfig,
    master_seed: u64,
) -> Result<ReliabilityMatrix> {
    if let (Some(p), Some(q)) = (point.p, point.q) {
        return ReliabilityMatrix::original(point.d, p, q);
    }
    if let (Some(p_min), Some(q_max)) = (point.p_min, point.q_max) {
        let mut rng =
            derive_stream(master_seed, &[STREAM_RELIABILITY, point.config_id as u64]);
        return ReliabilityMatrix::sample(point.d, p_min, q_max, &mut rng);
    }
    let q = cfg
        .explicit_reliability()?
        .ok_or_else(|| Error::Config("no reliability specification".into()))?;
    if q.d() != point.d {
        return Err(Error::Config(format!(
            "explicit reliability has d = {} but the grid point wants d = {}",
            q.d(),
            point.d
        )));
    }
    Ok(q)
}

fn resolve_pilot_budget(
    budget: &PilotBudget,
    c2: f64,
    n: usize,
    q: &ReliabilityMatrix,
    priors: &TypePriors,
) -> Result<usize> {
    match budget {
        PilotBudget::Fixed(r) => Ok(*r),
        PilotBudget::Named(_) => {
            let report = assortativity(q, priors)?;
            let r = recovery_budget(n, q.d(), report.p_m, report.p_u, c2)?;
            Ok(r.max(1))
        }
    }
}

fn sample_instance_for_trial(
    q: &ReliabilityMatrix,
    priors: &TypePriors,
    cfg: &ExperimentConfig,
    m_total: usize,
    n: usize,
    rng: &mut ChaCha12Rng,
) -> Result<ModelInstance> {
    let inst = ModelInstance::sample(q, priors, m_total, n, None, rng)?;
    if cfg.model.planted_workers {
        let planted = planted_worker_types(q.d(), n / q.d());
        ModelInstance::new(
            q.clone(),
            inst.labels().to_vec(),
            inst.task_types().to_vec(),
            planted,
        )
    } else {
        Ok(inst)
    }
}

/// Runs one trial of a grid point with the given derived stream.
pub fn run_trial(
    point: &GridPoint,
    cfg: &ExperimentConfig,
    q: &ReliabilityMatrix,
    rng: &mut ChaCha12Rng,
) -> Result<MetricsRecord> {
    let priors = cfg.priors(point.d)?;
    let (m, n, d, l) = (point.m, point.n, point.d, point.l);
    let alg = &cfg.algorithm;

    match point.estimator {
        EstimatorKind::Mv | EstimatorKind::Ml => {
            // Uniform random assignment matched to the clustering
            // pipelines' per-task budget of l answers from each of d
            // clusters.
            let budget = (l * d).min(n);
            let inst = sample_instance_for_trial(q, &priors, cfg, m, n, rng)?;
            let per_task: Vec<Vec<usize>> = (0..m)
                .map(|_| rand::seq::index::sample(rng, n, budget).into_vec())
                .collect();
            let assignment = Assignment::new(per_task, n)?;
            let resp = ResponseSet::sample(&inst, &assignment, rng)?;
            let est = match point.estimator {
                EstimatorKind::Mv => majority_vote(&resp),
                _ => ml_oracle(&resp, &inst)?,
            };
            Ok(MetricsRecord {
                label_error: label_error(est.labels(), inst.labels())?,
                clustering_error: None,
                ss_clustering_error_inclusive: None,
                ss_clustering_error_restricted: None,
                type_match_error: None,
                queries_per_task: budget as f64,
            })
        }
        EstimatorKind::Alg1 | EstimatorKind::Alg1Auto => {
            let r = resolve_pilot_budget(&point.r, alg.c2, n, q, &priors)?;
            let m_total = if alg.pilot_scored { m } else { m + r };
            let scored = if alg.pilot_scored { 0..m } else { r..m_total };
            let inst = sample_instance_for_trial(q, &priors, cfg, m_total, n, rng)?;
            let solver = SdpConfig {
                nu: 0.0,
                rho: alg.rho,
                tol_primal: alg.tol,
                tol_dual: alg.tol,
                max_iters: alg.max_iters,
            };
            let tuning = if point.estimator == EstimatorKind::Alg1Auto {
                Alg1Tuning::Auto { cfg: solver }
            } else {
                match &alg.nu {
                    NuSetting::Fixed(v) => {
                        Alg1Tuning::Manual { cfg: SdpConfig { nu: *v, ..solver }, k: d }
                    }
                    NuSetting::Named(name) if name == "auto" => {
                        Alg1Tuning::AutoNu { cfg: solver, k: d }
                    }
                    NuSetting::Named(_) => {
                        let report = assortativity(q, &priors)?;
                        let nu = r as f64 * (report.p_m + report.p_u) / 2.0;
                        Alg1Tuning::Manual { cfg: SdpConfig { nu, ..solver }, k: d }
                    }
                }
            };
            let out = run_alg1(&inst, r, l, tuning, rng)?;
            let lab_err = label_error(
                &out.estimate.labels()[scored.clone()],
                &inst.labels()[scored.clone()],
            )?;

            let w_true = inst.worker_types();
            let t_true = &inst.task_types()[scored.clone()];
            let t_hat = &out.type_match.t_hat[scored.clone()];
            let (cl_err, ss_inc, ss_res, tm_err) = if out.clusters.k() == d {
                let (ce, perm) = clustering_error_with_perm(&out.clusters, w_true, d)?;
                let tm = type_match_error_aligned(t_hat, t_true, &perm)?;
                (Some(ce), None, None, Some(tm))
            } else {
                // Estimated cluster count missed d: score with the
                // subset-style metrics over the largest d clusters.
                let ((inc, res), selected, alignment) =
                    ss_clustering_errors_with_perm(&out.clusters, w_true, d)?;
                let mapped: Vec<usize> = t_hat
                    .iter()
                    .map(|&z| {
                        selected
                            .iter()
                            .position(|&s| s == z)
                            .map(|pos| alignment[pos])
                            .unwrap_or(usize::MAX)
                    })
                    .collect();
                let bad =
                    mapped.iter().zip(t_true).filter(|(a, b)| a != b).count();
                (None, Some(inc), Some(res), Some(bad as f64 / t_true.len().max(1) as f64))
            };
            Ok(MetricsRecord {
                label_error: lab_err,
                clustering_error: cl_err,
                ss_clustering_error_inclusive: ss_inc,
                ss_clustering_error_restricted: ss_res,
                type_match_error: tm_err,
                queries_per_task: out.plan.total_queries(n) as f64 / scored.len() as f64,
            })
        }
        EstimatorKind::Ss => {
            let r = resolve_pilot_budget(&point.r, alg.c2, n, q, &priors)?;
            let m_total = if alg.pilot_scored { m } else { m + r };
            let scored = if alg.pilot_scored { 0..m } else { r..m_total };
            let inst = sample_instance_for_trial(q, &priors, cfg, m_total, n, rng)?;
            let xi = match &alg.xi {
                XiSetting::Fixed(v) => XiMode::Fixed(*v),
                XiSetting::Named(name) if name == "plugin" => XiMode::Plugin,
                XiSetting::Named(_) => XiMode::Oracle,
            };
            let out = run_subset_selection(&inst, r, l, xi, rng)?;
            let lab_err = label_error(
                &out.estimate.labels()[scored.clone()],
                &inst.labels()[scored.clone()],
            )?;
            let ((inc, res), _, alignment) =
                ss_clustering_errors_with_perm(&out.clusters, inst.worker_types(), d)?;
            let t_true = &inst.task_types()[scored.clone()];
            let mapped: Vec<usize> =
                out.type_match.t_hat[scored.clone()].iter().map(|&z| alignment[z]).collect();
            let tm = type_match_error(&mapped, t_true)?;
            let cl_err = if out.clusters.k() == d {
                Some(clustering_error_with_perm(&out.clusters, inst.worker_types(), d)?.0)
            } else {
                None
            };
            Ok(MetricsRecord {
                label_error: lab_err,
                clustering_error: cl_err,
                ss_clustering_error_inclusive: Some(inc),
                ss_clustering_error_restricted: Some(res),
                type_match_error: Some(tm),
                queries_per_task: out.plan.total_queries(n) as f64 / scored.len() as f64,
            })
        }
    }
}

/// Aggregated statistics for one grid point.
#[derive(Debug, Clone, Serialize)]
pub struct AggregateRow {
    pub config_id: usize,
    pub estimator: &'static str,
    pub d: usize,
    pub m: usize,
    pub n: usize,
    pub p_min: Option<f64>,
    pub q_max: Option<f64>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub r: String,
    pub l: usize,
    pub trials: usize,
    pub successes: usize,
    pub label_error_mean: Option<f64>,
    pub label_error_stderr: Option<f64>,
    pub clustering_error_mean: Option<f64>,
    pub clustering_error_stderr: Option<f64>,
    pub ss_inclusive_mean: Option<f64>,
    pub ss_inclusive_stderr: Option<f64>,
    pub ss_restricted_mean: Option<f64>,
    pub ss_restricted_stderr: Option<f64>,
    pub type_match_error_mean: Option<f64>,
    pub type_match_error_stderr: Option<f64>,
    pub queries_per_task_mean: Option<f64>,
}

fn mean_stderr(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (Some(mean), Some(0.0));
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (Some(mean), Some((var / n).sqrt()))
}

fn aggregate(points: &[GridPoint], records: &[TrialRecord]) -> Vec<AggregateRow> {
    points
        .iter()
        .map(|point| {
            let rows: Vec<&TrialRecord> =
                records.iter().filter(|r| r.config_id == point.config_id).collect();
            let metric = |f: &dyn Fn(&MetricsRecord) -> Option<f64>| -> Vec<f64> {
                rows.iter().filter_map(|r| r.metrics.as_ref().and_then(f)).collect()
            };
            let label = metric(&|m| Some(m.label_error));
            let cluster = metric(&|m| m.clustering_error);
            let inc = metric(&|m| m.ss_clustering_error_inclusive);
            let res = metric(&|m| m.ss_clustering_error_restricted);
            let tm = metric(&|m| m.type_match_error);
            let qpt = metric(&|m| Some(m.queries_per_task));
            let (label_error_mean, label_error_stderr) = mean_stderr(&label);
            let (clustering_error_mean, clustering_error_stderr) = mean_stderr(&cluster);
            let (ss_inclusive_mean, ss_inclusive_stderr) = mean_stderr(&inc);
            let (ss_restricted_mean, ss_restricted_stderr) = mean_stderr(&res);
            let (type_match_error_mean, type_match_error_stderr) = mean_stderr(&tm);
            let (queries_per_task_mean, _) = mean_stderr(&qpt);
            AggregateRow {
                config_id: point.config_id,
                estimator: point.estimator.as_str(),
                d: point.d,
                m: point.m,
                n: point.n,
                p_min: point.p_min,
                q_max: point.q_max,
                p: point.p,
                q: point.q,
                r: match &point.r {
                    PilotBudget::Fixed(r) => r.to_string(),
                    PilotBudget::Named(s) => s.clone(),
                },
                l: point.l,
                trials: rows.len(),
                successes: rows.iter().filter(|r| r.success).count(),
                label_error_mean,
                label_error_stderr,
                clustering_error_mean,
                clustering_error_stderr,
                ss_inclusive_mean,
                ss_inclusive_stderr,
                ss_restricted_mean,
                ss_restricted_stderr,
                type_match_error_mean,
                type_match_error_stderr,
                queries_per_task_mean,
            }
        })
        .collect()
}

/// Result of a sweep: all trial records in deterministic order plus the
/// per-point aggregates.
#[derive(Debug)]
pub struct SweepReport {
    pub records: Vec<TrialRecord>,
    pub aggregates: Vec<AggregateRow>,
    pub trials_path: Option<PathBuf>,
    pub aggregate_path: Option<PathBuf>,
}

impl SweepReport {
    pub fn all_failed(&self) -> bool {
        !self.records.is_empty() && self.records.iter().all(|r| !r.success)
    }
}

/// Runs the full grid x trials sweep. `jobs` sizes the worker pool (0
/// means the rayon default); output order never depends on it. Failed
/// trials become failure rows instead of aborting the sweep.
pub fn run_sweep(
    cfg: &ExperimentConfig,
    out_dir: Option<&std::path::Path>,
    seed_override: Option<u64>,
    jobs: usize,
) -> Result<SweepReport> {
    cfg.validate()?;
    let master_seed = seed_override.unwrap_or(cfg.sweep.master_seed);
    let points = expand_grid(cfg);
    let trials = cfg.sweep.trials;

    let units: Vec<(usize, usize)> = points
        .iter()
        .flat_map(|p| (0..trials).map(move |t| (p.config_id, t)))
        .collect();

    let execute = |&(config_id, trial): &(usize, usize)| -> TrialRecord {
        let point = &points[config_id];
        let seed_tags = [STREAM_TRIAL, config_id as u64, trial as u64];
        let mut rng = derive_stream(master_seed, &seed_tags);
        // A compact per-trial tag for the log; the actual stream derivation
        // uses the full (master, config, trial) key.
        let seed = master_seed
            ^ (config_id as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)
            ^ (trial as u64).wrapping_mul(0xc2b2_ae3d_27d4_eb4f);
        match point_reliability(point, cfg, master_seed)
            .and_then(|q| run_trial(point, cfg, &q, &mut rng))
        {
            Ok(metrics) => TrialRecord {
                config_id,
                trial,
                seed,
                estimator: point.estimator.as_str(),
                success: true,
                error: None,
                metrics: Some(metrics),
            },
            Err(e) => TrialRecord {
                config_id,
                trial,
                seed,
                estimator: point.estimator.as_str(),
                success: false,
                error: Some(e.to_string()),
                metrics: None,
            },
        }
    };

    let mut records: Vec<TrialRecord> = if jobs == 1 {
        units.iter().map(execute).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
        pool.install(|| units.par_iter().map(execute).collect())
    };
    records.sort_by_key(|r| (r.config_id, r.trial));
    let aggregates = aggregate(&points, &records);

    let dir = out_dir.map(PathBuf::from).unwrap_or_else(|| cfg.output.dir.clone());
    fs::create_dir_all(&dir)?;
    let trials_path = dir.join(&cfg.output.trials_file);
    let mut jsonl = fs::File::create(&trials_path)?;
    for record in &records {
        serde_json::to_writer(&mut jsonl, record)
            .map_err(|e| Error::Config(format!("serialize trial record: {e}")))?;
        jsonl.write_all(b"\n")?;
    }
    let aggregate_path = dir.join(&cfg.output.aggregate_file);
    write_aggregate_csv(&aggregate_path, &aggregates)?;

    Ok(SweepReport {
        records,
        aggregates,
        trials_path: Some(trials_path),
        aggregate_path: Some(aggregate_path),
    })
}

fn write_aggregate_csv(path: &std::path::Path, rows: &[AggregateRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| Error::Config(format!("open {}: {e}", path.display())))?;
    w.write_record([
        "config_id",
        "estimator",
        "d",
        "m",
        "n",
        "p_min",
        "q_max",
        "p",
        "q",
        "r",
        "l",
        "trials",
        "successes",
        "label_error_mean",
        "label_error_stderr",
        "clustering_error_mean",
        "clustering_error_stderr",
        "ss_inclusive_mean",
        "ss_inclusive_stderr",
        "ss_restricted_mean",
        "ss_restricted_stderr",
        "type_match_error_mean",
        "type_match_error_stderr",
        "queries_per_task_mean",
    ])
    .map_err(|e| Error::Config(format!("write csv: {e}")))?;
    let fmt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
    for row in rows {
        w.write_record([
            row.config_id.to_string(),
            row.estimator.to_string(),
            row.d.to_string(),
            row.m.to_string(),
            row.n.to_string(),
            fmt(row.p_min),
            fmt(row.q_max),
            fmt(row.p),
            fmt(row.q),
            row.r.clone(),
            row.l.to_string(),
            row.trials.to_string(),
            row.successes.to_string(),
            fmt(row.label_error_mean),
            fmt(row.label_error_stderr),
            fmt(row.clustering_error_mean),
            fmt(row.clustering_error_stderr),
            fmt(row.ss_inclusive_mean),
            fmt(row.ss_inclusive_stderr),
            fmt(row.ss_restricted_mean),
            fmt(row.ss_restricted_stderr),
            fmt(row.type_match_error_mean),
            fmt(row.type_match_error_stderr),
            fmt(row.queries_per_task_mean),
        ])
        .map_err(|e| Error::Config(format!("write csv: {e}")))?;
    }
    w.flush()?;
    Ok(())
}
