//! Collected-data ingestion: response tables with ground truth and task
//! types, empirical reliability estimation, and a synthetic generator
//! that writes the same file format.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::experiment::config::{DataBlock, ExperimentConfig, PilotBudget};
use crate::model::{Assignment, ModelInstance, ReliabilityMatrix, ResponseSet};
use crate::rng::ChaCha12Rng;

/// A loaded dataset: responses in `{-1, +1}` with per-task truth, task
/// types, and optional pilot flags. Ids are remapped to dense indices;
/// the original ids are kept for reporting.
#[derive(Debug, Clone)]
pub struct RealDataset {
    pub task_ids: Vec<String>,
    pub worker_ids: Vec<String>,
    /// (task, worker, answer), deduplicated and validated.
    pub responses: Vec<(usize, usize, i8)>,
    pub truth: Vec<i8>,
    pub task_types: Vec<usize>,
    pub pilot_flags: Vec<bool>,
    pub d: usize,
}

fn parse_label(raw: &str) -> Result<i8> {
    match raw.trim() {
        "1" | "+1" => Ok(1),
        "-1" => Ok(-1),
        other => Err(Error::Parse(format!("label {other:?} not in {{-1, +1}}"))),
    }
}

fn read_csv(path: &Path, expect_cols: usize) -> Result<Vec<Vec<String>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Parse(format!("open {}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        if record.len() != expect_cols {
            return Err(Error::Parse(format!(
                "{}: expected {expect_cols} columns, got {}",
                path.display(),
                record.len()
            )));
        }
        rows.push(record.iter().map(str::to_string).collect());
    }
    Ok(rows)
}

impl RealDataset {
    pub fn load(data: &DataBlock) -> Result<Self> {
        let truth_rows = read_csv(&data.truth, 2)?;
        let type_rows = read_csv(&data.task_types, 2)?;
        let response_rows = read_csv(&data.responses, 3)?;

        let mut task_index: BTreeMap<String, usize> = BTreeMap::new();
        let mut task_ids = Vec::new();
        let mut truth_map: BTreeMap<usize, i8> = BTreeMap::new();
        for row in &truth_rows {
            let next = task_ids.len();
            let idx = *task_index.entry(row[0].clone()).or_insert_with(|| {
                task_ids.push(row[0].clone());
                next
            });
            if truth_map.insert(idx, parse_label(&row[1])?).is_some() {
                return Err(Error::Parse(format!("duplicate truth for task {}", row[0])));
            }
        }

        // Task types use raw integer values when numeric, else a dense
        // mapping over the sorted distinct names.
        let mut type_map: BTreeMap<usize, usize> = BTreeMap::new();
        let all_numeric = type_rows.iter().all(|r| r[1].parse::<usize>().is_ok());
        let mut name_to_type: BTreeMap<String, usize> = BTreeMap::new();
        if !all_numeric {
            let mut names: Vec<String> = type_rows.iter().map(|r| r[1].clone()).collect();
            names.sort();
            names.dedup();
            for (i, name) in names.into_iter().enumerate() {
                name_to_type.insert(name, i);
            }
        }
        for row in &type_rows {
            let idx = *task_index
                .get(&row[0])
                .ok_or_else(|| Error::Parse(format!("task type for unknown task {}", row[0])))?;
            let t = if all_numeric {
                row[1].parse::<usize>().unwrap()
            } else {
                name_to_type[&row[1]]
            };
            if t >= data.d {
                return Err(Error::Parse(format!(
                    "task {} has type {t} but d = {}",
                    row[0], data.d
                )));
            }
            if type_map.insert(idx, t).is_some() {
                return Err(Error::Parse(format!("duplicate type for task {}", row[0])));
            }
        }

        let mut worker_index: BTreeMap<String, usize> = BTreeMap::new();
        let mut worker_ids = Vec::new();
        let mut seen = std::collections::BTreeSet::new();
        let mut responses = Vec::new();
        for row in &response_rows {
            let t_idx = *task_index
                .get(&row[0])
                .ok_or_else(|| Error::Parse(format!("response for unknown task {}", row[0])))?;
            let next = worker_ids.len();
            let w_idx = *worker_index.entry(row[1].clone()).or_insert_with(|| {
                worker_ids.push(row[1].clone());
                next
            });
            if !seen.insert((t_idx, w_idx)) {
                return Err(Error::Parse(format!(
                    "duplicate response for (task {}, worker {})",
                    row[0], row[1]
                )));
            }
            responses.push((t_idx, w_idx, parse_label(&row[2])?));
        }

        let m = task_ids.len();
        let mut truth = Vec::with_capacity(m);
        let mut task_types = Vec::with_capacity(m);
        for idx in 0..m {
            truth.push(*truth_map.get(&idx).ok_or_else(|| {
                Error::Parse(format!("missing truth for task {}", task_ids[idx]))
            })?);
            task_types.push(*type_map.get(&idx).ok_or_else(|| {
                Error::Parse(format!("missing type for task {}", task_ids[idx]))
            })?);
        }

        let mut pilot_flags = vec![false; m];
        if let Some(path) = &data.pilot_flags {
            for row in read_csv(path, 2)? {
                let idx = *task_index.get(&row[0]).ok_or_else(|| {
                    Error::Parse(format!("pilot flag for unknown task {}", row[0]))
                })?;
                pilot_flags[idx] = matches!(row[1].as_str(), "1" | "true");
            }
        }

        Ok(Self { task_ids, worker_ids, responses, truth, task_types, pilot_flags, d: data.d })
    }

    pub fn m(&self) -> usize {
        self.task_ids.len()
    }

    pub fn n(&self) -> usize {
        self.worker_ids.len()
    }
}

/// Empirical reliability table built from a labeled dataset. Entries can
/// fall below one half; such cells are listed in `below_half`.
#[derive(Debug, Clone)]
pub struct EmpiricalReliability {
    pub d: usize,
    /// Mean correct-answer rate per (task type, worker type); NaN when no
    /// worker of that type answered tasks of that type.
    pub table: Vec<Vec<f64>>,
    /// `(task type, worker type)` cells with a defined value below 0.5.
    pub below_half: Vec<(usize, usize)>,
    /// `(task type, worker type)` cells with no data.
    pub undefined_cells: Vec<(usize, usize)>,
    /// Estimated type per worker; workers with no answers stay `None` and
    /// are excluded from the table averages.
    pub worker_types: Vec<Option<usize>>,
    /// Per-worker per-type correct rates where defined.
    pub per_worker_rates: Vec<Vec<Option<f64>>>,
}

impl EmpiricalReliability {
    /// CSV of the table, `d` rows of `d` decimals (NaN for undefined).
    pub fn table_csv(&self) -> String {
        let mut out = String::new();
        for row in &self.table {
            let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Estimates each worker's type as the task type with their highest
/// empirical correct rate (lowest index on ties) and averages the per-type
/// rates within each worker type.
pub fn estimate_reliability(data: &RealDataset) -> Result<EmpiricalReliability> {
    let d = data.d;
    let n = data.n();
    if data.responses.is_empty() {
        return Err(Error::invalid("dataset has no responses"));
    }
    let mut correct = vec![vec![0usize; d]; n];
    let mut total = vec![vec![0usize; d]; n];
    for &(i, j, v) in &data.responses {
        let t = data.task_types[i];
        total[j][t] += 1;
        if v == data.truth[i] {
            correct[j][t] += 1;
        }
    }
    let per_worker_rates: Vec<Vec<Option<f64>>> = (0..n)
        .map(|j| {
            (0..d)
                .map(|t| (total[j][t] > 0).then(|| correct[j][t] as f64 / total[j][t] as f64))
                .collect()
        })
        .collect();
    let worker_types: Vec<Option<usize>> = per_worker_rates
        .iter()
        .map(|rates| {
            let mut best: Option<(usize, f64)> = None;
            for (t, rate) in rates.iter().enumerate() {
                if let Some(r) = rate {
                    if best.is_none_or(|(_, b)| *r > b) {
                        best = Some((t, *r));
                    }
                }
            }
            best.map(|(t, _)| t)
        })
        .collect();

    let mut table = vec![vec![f64::NAN; d]; d];
    let mut below_half = Vec::new();
    let mut undefined = Vec::new();
    for t in 0..d {
        for w in 0..d {
            let contributions: Vec<f64> = (0..n)
                .filter(|&j| worker_types[j] == Some(w))
                .filter_map(|j| per_worker_rates[j][t])
                .collect();
            if contributions.is_empty() {
                undefined.push((t, w));
            } else {
                let mean = contributions.iter().sum::<f64>() / contributions.len() as f64;
                table[t][w] = mean;
                if mean < 0.5 {
                    below_half.push((t, w));
                }
            }
        }
    }
    Ok(EmpiricalReliability {
        d,
        table,
        below_half,
        undefined_cells: undefined,
        worker_types,
        per_worker_rates,
    })
}

/// Generates a synthetic dataset in the ingestion format: the first `r`
/// tasks are pilots answered by every worker, all others get `l * d`
/// uniformly drawn workers. Writes `responses.csv`, `truth.csv`,
/// `task_types.csv`, `pilot_flags.csv`, and `reliability.csv`.
pub fn generate_dataset(
    cfg: &ExperimentConfig,
    out_dir: &Path,
    rng: &mut ChaCha12Rng,
) -> Result<()> {
    let model = &cfg.model;
    let d = model.d;
    let q = if let (Some(p), Some(qv)) = (model.p, model.q) {
        ReliabilityMatrix::original(d, p, qv)?
    } else if let (Some(p_min), Some(q_max)) = (model.p_min, model.q_max) {
        ReliabilityMatrix::sample(d, p_min, q_max, rng)?
    } else {
        cfg.explicit_reliability()?
            .ok_or_else(|| Error::Config("no reliability specification".into()))?
    };
    let priors = cfg.priors(d)?;
    let r = match cfg.algorithm.r {
        PilotBudget::Fixed(r) => r,
        _ => return Err(Error::Config("generate needs a fixed pilot budget".into())),
    };
    let m = model.m + r;
    let n = model.n;
    let inst = ModelInstance::sample(&q, &priors, m, n, None, rng)?;
    let budget = (cfg.algorithm.l * d).min(n);
    let per_task: Vec<Vec<usize>> = (0..m)
        .map(|i| {
            if i < r {
                (0..n).collect()
            } else {
                rand::seq::index::sample(rng, n, budget).into_vec()
            }
        })
        .collect();
    let assignment = Assignment::new(per_task, n)?;
    let resp = ResponseSet::sample(&inst, &assignment, rng)?;

    std::fs::create_dir_all(out_dir)?;
    let mut responses = String::from("task_id,worker_id,answer\n");
    for i in 0..m {
        for &(j, v) in resp.row(i) {
            responses.push_str(&format!("{i},{j},{v}\n"));
        }
    }
    std::fs::write(out_dir.join("responses.csv"), responses)?;

    let mut truth = String::from("task_id,label\n");
    let mut types = String::from("task_id,type\n");
    let mut pilots = String::from("task_id,is_pilot\n");
    for i in 0..m {
        truth.push_str(&format!("{i},{}\n", inst.labels()[i]));
        types.push_str(&format!("{i},{}\n", inst.task_types()[i]));
        pilots.push_str(&format!("{i},{}\n", if i < r { 1 } else { 0 }));
    }
    std::fs::write(out_dir.join("truth.csv"), truth)?;
    std::fs::write(out_dir.join("task_types.csv"), types)?;
    std::fs::write(out_dir.join("pilot_flags.csv"), pilots)?;
    std::fs::write(out_dir.join("reliability.csv"), q.to_csv())?;
    Ok(())
}
