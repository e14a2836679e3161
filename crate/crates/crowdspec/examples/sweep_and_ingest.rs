//! Drives the experiment harness as a library: runs a small seeded sweep,
//! prints the aggregates, then generates a synthetic dataset and feeds it
//! back through the ingestion path.
//!
//! Run with: cargo run --release --example sweep_and_ingest

use crowdspec::experiment::{
    estimate_reliability, generate_dataset, run_sweep, DataBlock, ExperimentConfig, RealDataset,
};
use crowdspec::rng::stream;

const SWEEP: &str = r#"
    [model]
    d = 3
    m = 500
    n = 30
    p_min = 0.9
    q_max = 0.5

    [algorithm]
    estimator = "alg1"
    r = 60
    l = 3

    [sweep]
    trials = 5
    master_seed = 42
    estimator = ["mv", "ss", "alg1"]
"#;

fn main() {
    let cfg = ExperimentConfig::parse(SWEEP).unwrap();
    let dir = std::env::temp_dir().join("crowdspec_example_sweep");
    let report = run_sweep(&cfg, Some(&dir), None, 0).unwrap();
    println!("sweep aggregates:");
    for row in &report.aggregates {
        println!(
            "  {:>5}: label error {:.4} +/- {:.4} ({} / {} trials ok)",
            row.estimator,
            row.label_error_mean.unwrap_or(f64::NAN),
            row.label_error_stderr.unwrap_or(f64::NAN),
            row.successes,
            row.trials
        );
    }
    println!("trial log: {}", report.trials_path.unwrap().display());

    // Write a dataset in the ingestion format and estimate the empirical
    // reliability table back from it.
    let data_dir = std::env::temp_dir().join("crowdspec_example_data");
    let gen_cfg = ExperimentConfig::parse(
        r#"
        [model]
        d = 3
        m = 4000
        n = 30
        p = 0.9
        q = 0.6

        [algorithm]
        estimator = "ss"
        r = 30
        l = 4
    "#,
    )
    .unwrap();
    generate_dataset(&gen_cfg, &data_dir, &mut stream(9)).unwrap();
    let data = RealDataset::load(&DataBlock {
        responses: data_dir.join("responses.csv"),
        truth: data_dir.join("truth.csv"),
        task_types: data_dir.join("task_types.csv"),
        pilot_flags: Some(data_dir.join("pilot_flags.csv")),
        d: 3,
    })
    .unwrap();
    let est = estimate_reliability(&data).unwrap();
    println!(
        "\ningested {} tasks from {} workers; empirical reliability table:",
        data.m(),
        data.n()
    );
    print!("{}", est.table_csv());
}
