//! Experiment orchestration: config parsing, the seeded sweep runner,
//! theory-curve emission, and collected-data ingestion.

mod config;
mod curves;
mod realdata;
mod runner;

pub use config::{
    expand_grid, AlgorithmBlock, DataBlock, EstimatorKind, ExperimentConfig, GridPoint,
    ModelBlock, NuSetting, OutputBlock, PilotBudget, SweepBlock, XiSetting, DEFAULT_C2,
};
pub use curves::{theory_curves, write_theory_curves, BoundRow};
pub use realdata::{estimate_reliability, generate_dataset, EmpiricalReliability, RealDataset};
pub use runner::{run_sweep, run_trial, AggregateRow, SweepReport, TrialRecord};

#[cfg(test)]
mod tests;
