//! Experiment configuration: a TOML file with `[model]`, `[algorithm]`,
//! `[sweep]`, `[output]`, and optional `[data]` blocks. Scalars in the
//! model/algorithm blocks are defaults; lists in the sweep block define a
//! grid as their cartesian product.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ReliabilityMatrix, TypePriors};

/// Which inference rule a trial runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    /// Majority voting over a uniform random assignment.
    Mv,
    /// Oracle-weighted voting over a uniform random assignment.
    Ml,
    /// Sequential-clustering subset selection.
    Ss,
    /// Two-stage SDP clustering with known `d`.
    Alg1,
    /// Two-stage SDP clustering with spectral estimates of the penalty and
    /// the cluster count.
    Alg1Auto,
}

impl EstimatorKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EstimatorKind::Mv => "mv",
            EstimatorKind::Ml => "ml",
            EstimatorKind::Ss => "ss",
            EstimatorKind::Alg1 => "alg1",
            EstimatorKind::Alg1Auto => "alg1_auto",
        }
    }
}

/// How the SDP penalty is chosen per trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NuSetting {
    /// `"oracle"` (from the true reliability) or `"auto"` (spectral).
    Named(String),
    Fixed(f64),
}

impl Default for NuSetting {
    fn default() -> Self {
        NuSetting::Named("oracle".into())
    }
}

/// How the baseline's agreement threshold is chosen per trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum XiSetting {
    /// `"oracle"` or `"plugin"`.
    Named(String),
    Fixed(f64),
}

impl Default for XiSetting {
    fn default() -> Self {
        XiSetting::Named("oracle".into())
    }
}

/// Pilot budget: explicit, or derived from the recovery bound with the
/// configured constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PilotBudget {
    /// The string `"recovery"`.
    Named(String),
    Fixed(usize),
}

impl Default for PilotBudget {
    fn default() -> Self {
        PilotBudget::Fixed(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    pub d: usize,
    pub m: usize,
    pub n: usize,
    /// Sampled-matrix mode: diagonal lower bound.
    pub p_min: Option<f64>,
    /// Sampled-matrix mode: off-diagonal upper bound.
    pub q_max: Option<f64>,
    /// Fixed diagonal/off-diagonal mode.
    pub p: Option<f64>,
    pub q: Option<f64>,
    /// Explicit reliability matrix CSV path.
    pub q_csv: Option<PathBuf>,
    /// Priors CSV path (two lines); uniform when absent.
    pub priors_csv: Option<PathBuf>,
    /// Worker types: sampled from the prior (default) or planted in equal
    /// blocks of n/d.
    #[serde(default)]
    pub planted_workers: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AlgorithmBlock {
    pub estimator: EstimatorKind,
    pub r: PilotBudget,
    pub l: usize,
    pub nu: NuSetting,
    pub xi: XiSetting,
    /// Constant in the pilot-budget bound.
    pub c2: f64,
    /// Score the pilot tasks too (they then count toward `m`); when false
    /// the pilots are extra tasks used only for clustering.
    pub pilot_scored: bool,
    pub rho: f64,
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for AlgorithmBlock {
    fn default() -> Self {
        Self {
            estimator: EstimatorKind::Alg1,
            r: PilotBudget::default(),
            l: 1,
            nu: NuSetting::default(),
            xi: XiSetting::default(),
            c2: DEFAULT_C2,
            pilot_scored: false,
            rho: 1.0,
            tol: 1e-6,
            max_iters: 20_000,
        }
    }
}

/// Default constant for the pilot-budget bound, calibrated as the smallest
/// value from {0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1} reaching at least 90%
/// exact recovery on the reference configuration (n = 60, d = 3, planted
/// clusters of 20, diagonal 0.9 / off-diagonal 0.5) at both ends and the
/// middle of the admissible penalty bracket. See the calibrate_c2 example;
/// 0.05 reaches only 84-96% at the bracket ends.
pub const DEFAULT_C2: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepBlock {
    pub trials: usize,
    pub master_seed: u64,
    pub estimator: Option<Vec<EstimatorKind>>,
    pub d: Option<Vec<usize>>,
    pub p_min: Option<Vec<f64>>,
    pub q_max: Option<Vec<f64>>,
    pub p: Option<Vec<f64>>,
    pub q: Option<Vec<f64>>,
    pub r: Option<Vec<usize>>,
    pub l: Option<Vec<usize>>,
}

impl Default for SweepBlock {
    fn default() -> Self {
        Self {
            trials: 1,
            master_seed: 0,
            estimator: None,
            d: None,
            p_min: None,
            q_max: None,
            p: None,
            q: None,
            r: None,
            l: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputBlock {
    pub dir: PathBuf,
    pub trials_file: String,
    pub aggregate_file: String,
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            trials_file: "trials.jsonl".into(),
            aggregate_file: "aggregate.csv".into(),
        }
    }
}

/// File set describing a collected dataset (used by `ingest`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct DataBlock {
    pub responses: PathBuf,
    pub truth: PathBuf,
    pub task_types: PathBuf,
    pub pilot_flags: Option<PathBuf>,
    pub d: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelBlock,
    #[serde(default)]
    pub algorithm: AlgorithmBlock,
    #[serde(default)]
    pub sweep: SweepBlock,
    #[serde(default)]
    pub output: OutputBlock,
    pub data: Option<DataBlock>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("{e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        let mut cfg = Self::parse(&text)?;
        // Relative file references resolve against the config's directory.
        if let Some(base) = path.parent() {
            if let Some(p) = &cfg.model.q_csv {
                cfg.model.q_csv = Some(resolve(base, p));
            }
            if let Some(p) = &cfg.model.priors_csv {
                cfg.model.priors_csv = Some(resolve(base, p));
            }
            if let Some(data) = &mut cfg.data {
                data.responses = resolve(base, &data.responses);
                data.truth = resolve(base, &data.truth);
                data.task_types = resolve(base, &data.task_types);
                if let Some(p) = &data.pilot_flags {
                    data.pilot_flags = Some(resolve(base, p));
                }
            }
        }
        cfg.check_files()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.model;
        if m.d < 2 || m.m == 0 || m.n == 0 {
            return Err(Error::Config(format!(
                "model needs d >= 2, m >= 1, n >= 1; got d = {}, m = {}, n = {}",
                m.d, m.m, m.n
            )));
        }
        let sampled = m.p_min.is_some() || m.q_max.is_some();
        let fixed = m.p.is_some() || m.q.is_some();
        let explicit = m.q_csv.is_some();
        match (sampled, fixed, explicit) {
            (true, false, false) if m.p_min.is_some() && m.q_max.is_some() => {}
            (false, true, false) if m.p.is_some() && m.q.is_some() => {}
            (false, false, true) => {}
            _ => {
                return Err(Error::Config(
                    "model must specify exactly one of (p_min, q_max), (p, q), or q_csv"
                        .into(),
                ))
            }
        }
        if self.model.planted_workers && !m.n.is_multiple_of(m.d) {
            return Err(Error::Config(format!(
                "planted workers need d | n, got n = {} and d = {}",
                m.n, m.d
            )));
        }
        let a = &self.algorithm;
        if a.l == 0 {
            return Err(Error::Config("algorithm needs l >= 1".into()));
        }
        if let NuSetting::Named(s) = &a.nu {
            if s != "oracle" && s != "auto" {
                return Err(Error::Config(format!("unknown nu mode {s:?}")));
            }
        }
        if let XiSetting::Named(s) = &a.xi {
            if s != "oracle" && s != "plugin" {
                return Err(Error::Config(format!("unknown xi mode {s:?}")));
            }
        }
        if let PilotBudget::Named(s) = &a.r {
            if s != "recovery" {
                return Err(Error::Config(format!("unknown pilot budget {s:?}")));
            }
        }
        if self.sweep.trials == 0 {
            return Err(Error::Config("sweep needs trials >= 1".into()));
        }
        for (name, list_empty) in [
            ("estimator", self.sweep.estimator.as_ref().is_some_and(Vec::is_empty)),
            ("d", self.sweep.d.as_ref().is_some_and(Vec::is_empty)),
            ("p_min", self.sweep.p_min.as_ref().is_some_and(Vec::is_empty)),
            ("q_max", self.sweep.q_max.as_ref().is_some_and(Vec::is_empty)),
            ("p", self.sweep.p.as_ref().is_some_and(Vec::is_empty)),
            ("q", self.sweep.q.as_ref().is_some_and(Vec::is_empty)),
            ("r", self.sweep.r.as_ref().is_some_and(Vec::is_empty)),
            ("l", self.sweep.l.as_ref().is_some_and(Vec::is_empty)),
        ] {
            if list_empty {
                return Err(Error::Config(format!("sweep list {name} is empty")));
            }
        }
        Ok(())
    }

    fn check_files(&self) -> Result<()> {
        let mut refs: Vec<&PathBuf> = Vec::new();
        if let Some(p) = &self.model.q_csv {
            refs.push(p);
        }
        if let Some(p) = &self.model.priors_csv {
            refs.push(p);
        }
        if let Some(data) = &self.data {
            refs.push(&data.responses);
            refs.push(&data.truth);
            refs.push(&data.task_types);
            if let Some(p) = &data.pilot_flags {
                refs.push(p);
            }
        }
        for p in refs {
            if !p.exists() {
                return Err(Error::Config(format!("referenced file missing: {}", p.display())));
            }
        }
        Ok(())
    }

    /// True when no sweep list is present: one grid point.
    pub fn is_single(&self) -> bool {
        let s = &self.sweep;
        s.estimator.is_none()
            && s.d.is_none()
            && s.p_min.is_none()
            && s.q_max.is_none()
            && s.p.is_none()
            && s.q.is_none()
            && s.r.is_none()
            && s.l.is_none()
    }

    /// Loads the priors, defaulting to uniform over the given `d`.
    pub fn priors(&self, d: usize) -> Result<TypePriors> {
        match &self.model.priors_csv {
            Some(path) => {
                let text = std::fs::read_to_string(path)?;
                let p = TypePriors::from_csv(&text)?;
                if p.d() != d {
                    return Err(Error::Config(format!(
                        "priors have length {} but d = {d}",
                        p.d()
                    )));
                }
                Ok(p)
            }
            None => Ok(TypePriors::uniform(d)),
        }
    }

    /// Loads the explicit reliability matrix when configured.
    pub fn explicit_reliability(&self) -> Result<Option<ReliabilityMatrix>> {
        match &self.model.q_csv {
            Some(path) => {
                let text = std::fs::read_to_string(path)?;
                Ok(Some(ReliabilityMatrix::from_csv(&text)?))
            }
            None => Ok(None),
        }
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// One fully resolved grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridPoint {
    pub config_id: usize,
    pub estimator: EstimatorKind,
    pub d: usize,
    pub m: usize,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    pub r: PilotBudget,
    pub l: usize,
}

/// Expands the sweep lists into the grid, cartesian, in the fixed order
/// estimator, d, p_min, q_max, p, q, r, l.
pub fn expand_grid(cfg: &ExperimentConfig) -> Vec<GridPoint> {
    let s = &cfg.sweep;
    let estimators =
        s.estimator.clone().unwrap_or_else(|| vec![cfg.algorithm.estimator]);
    let ds = s.d.clone().unwrap_or_else(|| vec![cfg.model.d]);
    let opt =
        |list: &Option<Vec<f64>>, scalar: Option<f64>| -> Vec<Option<f64>> {
            match list {
                Some(v) => v.iter().copied().map(Some).collect(),
                None => vec![scalar],
            }
        };
    let p_mins = opt(&s.p_min, cfg.model.p_min);
    let q_maxes = opt(&s.q_max, cfg.model.q_max);
    let ps = opt(&s.p, cfg.model.p);
    let qs = opt(&s.q, cfg.model.q);
    let rs: Vec<PilotBudget> = match &s.r {
        Some(v) => v.iter().map(|&r| PilotBudget::Fixed(r)).collect(),
        None => vec![cfg.algorithm.r.clone()],
    };
    let ls = s.l.clone().unwrap_or_else(|| vec![cfg.algorithm.l]);

    let mut grid = Vec::new();
    for &estimator in &estimators {
        for &d in &ds {
            for &p_min in &p_mins {
                for &q_max in &q_maxes {
                    for &p in &ps {
                        for &q in &qs {
                            for r in &rs {
                                for &l in &ls {
                                    grid.push(GridPoint {
                                        config_id: grid.len(),
                                        estimator,
                                        d,
                                        m: cfg.model.m,
                                        n: cfg.model.n,
                                        p_min,
                                        q_max,
                                        p,
                                        q,
                                        r: r.clone(),
                                        l,
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    grid
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        [model]
        d = 3
        m = 100
        n = 30
        p_min = 0.9
        q_max = 0.5

        [algorithm]
        estimator = "alg1"
        r = 20
        l = 3
    "#;

    #[test]
    fn parse_round_trip_preserves_semantics() {
        let cfg = ExperimentConfig::parse(MINIMAL).unwrap();
        let text = cfg.to_toml();
        let back = ExperimentConfig::parse(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn rejects_inconsistent_model_blocks() {
        let bad = MINIMAL.replace("q_max = 0.5", "q = 0.5");
        assert!(ExperimentConfig::parse(&bad).is_err());
        let bad = MINIMAL.replace("p_min = 0.9\n        q_max = 0.5", "");
        assert!(ExperimentConfig::parse(&bad).is_err());
    }

    #[test]
    fn rejects_unknown_modes() {
        let bad = format!("{MINIMAL}\nnu = \"magic\"");
        assert!(ExperimentConfig::parse(&bad).is_err());
    }

    #[test]
    fn grid_expansion_order_is_fixed() {
        let text = format!(
            "{MINIMAL}\n[sweep]\ntrials = 2\nmaster_seed = 1\nq_max = [0.5, 0.6]\nestimator = [\"mv\", \"alg1\"]\n"
        );
        let cfg = ExperimentConfig::parse(&text).unwrap();
        let grid = expand_grid(&cfg);
        assert_eq!(grid.len(), 4);
        assert_eq!(grid[0].estimator, EstimatorKind::Mv);
        assert_eq!(grid[0].q_max, Some(0.5));
        assert_eq!(grid[1].estimator, EstimatorKind::Mv);
        assert_eq!(grid[1].q_max, Some(0.6));
        assert_eq!(grid[2].estimator, EstimatorKind::Alg1);
        assert!(!cfg.is_single());
    }

    #[test]
    fn recovery_budget_mode_parses() {
        let text = MINIMAL.replace("r = 20", "r = \"recovery\"");
        let cfg = ExperimentConfig::parse(&text).unwrap();
        assert_eq!(cfg.algorithm.r, PilotBudget::Named("recovery".into()));
    }
}
