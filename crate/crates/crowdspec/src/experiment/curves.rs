//! Theory-curve emission: evaluates every sample-complexity bound over the
//! configured grid so the values can be plotted against empirical sweeps.

use std::path::Path;

use crate::error::{Error, Result};
use crate::experiment::config::{expand_grid, ExperimentConfig};
use crate::model::{required_queries, QueryBoundKind, ReliabilityMatrix};
use crate::rng::derive_stream;

/// One grid point's bound values, `None` where a bound does not apply
/// (for example the two-stage bound at d < 3).
#[derive(Debug, Clone)]
pub struct BoundRow {
    pub config_id: usize,
    pub d: usize,
    pub alpha: f64,
    pub mv: Option<f64>,
    pub ml: Option<f64>,
    pub subset: Option<f64>,
    pub alg1: Option<f64>,
    pub impossibility: Option<f64>,
}

/// Evaluates all bound kinds for every grid point at the given target
/// accuracy. Sampled-matrix points draw their reliability matrix exactly
/// like the sweep does.
pub fn theory_curves(cfg: &ExperimentConfig, alpha: f64) -> Result<Vec<BoundRow>> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for point in expand_grid(cfg) {
        let q = if let (Some(p), Some(qv)) = (point.p, point.q) {
            ReliabilityMatrix::original(point.d, p, qv)?
        } else if let (Some(p_min), Some(q_max)) = (point.p_min, point.q_max) {
            let mut rng =
                derive_stream(cfg.sweep.master_seed, &[1, point.config_id as u64]);
            ReliabilityMatrix::sample(point.d, p_min, q_max, &mut rng)?
        } else {
            cfg.explicit_reliability()?
                .ok_or_else(|| Error::Config("no reliability specification".into()))?
        };
        let priors = cfg.priors(point.d)?;
        let eval = |kind: QueryBoundKind| required_queries(kind, &q, &priors, alpha).ok();
        rows.push(BoundRow {
            config_id: point.config_id,
            d: point.d,
            alpha,
            mv: eval(QueryBoundKind::MajorityVote),
            ml: eval(QueryBoundKind::MlOracle),
            subset: eval(QueryBoundKind::SubsetSelection),
            alg1: eval(QueryBoundKind::Alg1),
            impossibility: eval(QueryBoundKind::Impossibility),
        });
    }
    Ok(rows)
}

/// Writes the curve table as CSV, one row per grid point.
pub fn write_theory_curves(rows: &[BoundRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| Error::Config(format!("open {}: {e}", path.display())))?;
    w.write_record(["config_id", "d", "alpha", "mv", "ml", "subset", "alg1", "impossibility"])
        .map_err(|e| Error::Config(format!("write csv: {e}")))?;
    let fmt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
    for row in rows {
        w.write_record([
            row.config_id.to_string(),
            row.d.to_string(),
            format!("{}", row.alpha),
            fmt(row.mv),
            fmt(row.ml),
            fmt(row.subset),
            fmt(row.alg1),
            fmt(row.impossibility),
        ])
        .map_err(|e| Error::Config(format!("write csv: {e}")))?;
    }
    w.flush()?;
    Ok(())
}
