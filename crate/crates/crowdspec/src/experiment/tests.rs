use super::*;
use crate::rng::stream;

fn small_config(extra: &str) -> ExperimentConfig {
    let text = format!(
        r#"
        [model]
        d = 3
        m = 60
        n = 24
        p_min = 0.9
        q_max = 0.5

        [algorithm]
        estimator = "alg1"
        r = 30
        l = 3

        [sweep]
        trials = 2
        master_seed = 11
        {extra}
    "#
    );
    ExperimentConfig::parse(&text).unwrap()
}

#[test]
fn sweep_is_deterministic_and_parallelism_independent() {
    let cfg = small_config("estimator = [\"mv\", \"alg1\"]");
    let dir1 = tempfile::tempdir().unwrap();
    let dir2 = tempfile::tempdir().unwrap();
    let dir3 = tempfile::tempdir().unwrap();
    run_sweep(&cfg, Some(dir1.path()), None, 1).unwrap();
    run_sweep(&cfg, Some(dir2.path()), None, 1).unwrap();
    run_sweep(&cfg, Some(dir3.path()), None, 4).unwrap();
    let read = |d: &std::path::Path| std::fs::read(d.join("trials.jsonl")).unwrap();
    assert_eq!(read(dir1.path()), read(dir2.path()), "same seed twice");
    assert_eq!(read(dir1.path()), read(dir3.path()), "independent of jobs");
}

#[test]
fn failed_trials_become_failure_rows() {
    // l larger than any possible cluster: every alg1 trial fails, the mv
    // point still succeeds, and the sweep completes.
    let cfg = small_config("estimator = [\"alg1\", \"mv\"]\nl = [30]");
    let dir = tempfile::tempdir().unwrap();
    let report = run_sweep(&cfg, Some(dir.path()), None, 1).unwrap();
    assert!(!report.all_failed());
    let alg1_rows: Vec<_> =
        report.records.iter().filter(|r| r.estimator == "alg1").collect();
    assert!(!alg1_rows.is_empty());
    assert!(alg1_rows.iter().all(|r| !r.success && r.error.is_some()));
    assert!(report
        .records
        .iter()
        .filter(|r| r.estimator == "mv")
        .all(|r| r.success));
    let agg = report.aggregates.iter().find(|a| a.estimator == "alg1").unwrap();
    assert_eq!(agg.successes, 0);
    assert_eq!(agg.trials, 2);
}

#[test]
fn every_estimator_produces_metrics() {
    for est in ["mv", "ml", "ss", "alg1", "alg1_auto"] {
        // Sequential clustering fragments, so keep l small enough for the
        // baseline's top-d clusters.
        let cfg = small_config(&format!("estimator = [\"{est}\"]\nl = [2]\nr = [60]"));
        let dir = tempfile::tempdir().unwrap();
        let report = run_sweep(&cfg, Some(dir.path()), None, 1).unwrap();
        assert!(
            report.records.iter().all(|r| r.success),
            "estimator {est}: {:?}",
            report.records.iter().filter_map(|r| r.error.clone()).collect::<Vec<_>>()
        );
        let m = report.records[0].metrics.as_ref().unwrap();
        assert!((0.0..=1.0).contains(&m.label_error));
        match est {
            "mv" | "ml" => assert!(m.clustering_error.is_none()),
            "ss" => {
                assert!(m.ss_clustering_error_inclusive.is_some());
                assert!(m.type_match_error.is_some());
            }
            _ => assert!(m.clustering_error.is_some() || m.ss_clustering_error_inclusive.is_some()),
        }
    }
}

#[test]
fn pilot_overhead_shows_up_in_queries_per_task() {
    // pilot_scored = false: qpt = n r / m + l d.
    let cfg = small_config("");
    let dir = tempfile::tempdir().unwrap();
    let report = run_sweep(&cfg, Some(dir.path()), None, 1).unwrap();
    let m = report.records[0].metrics.as_ref().unwrap();
    let expected = 24.0 * 30.0 / 60.0 + 3.0 * 3.0;
    assert!((m.queries_per_task - expected).abs() < 1e-9, "{}", m.queries_per_task);
}

#[test]
fn generate_then_ingest_recovers_reliability() {
    // Monte Carlo consistency: with 1e4 tasks the empirical table lands
    // within 0.02 of the generating matrix entrywise.
    let text = r#"
        [model]
        d = 3
        m = 10000
        n = 30
        p = 0.9
        q = 0.6

        [algorithm]
        estimator = "ss"
        r = 40
        l = 4
    "#;
    let cfg = ExperimentConfig::parse(text).unwrap();
    let dir = tempfile::tempdir().unwrap();
    generate_dataset(&cfg, dir.path(), &mut stream(5)).unwrap();

    let data = RealDataset::load(&DataBlock {
        responses: dir.path().join("responses.csv"),
        truth: dir.path().join("truth.csv"),
        task_types: dir.path().join("task_types.csv"),
        pilot_flags: Some(dir.path().join("pilot_flags.csv")),
        d: 3,
    })
    .unwrap();
    assert_eq!(data.m(), 10040);
    assert_eq!(data.n(), 30);
    assert_eq!(data.pilot_flags.iter().filter(|&&p| p).count(), 40);

    let est = estimate_reliability(&data).unwrap();
    assert!(est.undefined_cells.is_empty());
    for t in 0..3 {
        for w in 0..3 {
            let expected = if t == w { 0.9 } else { 0.6 };
            assert!(
                (est.table[t][w] - expected).abs() < 0.02,
                "cell ({t}, {w}) = {}",
                est.table[t][w]
            );
        }
    }
}

#[test]
fn perfectly_accurate_workers_estimate_to_one() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, content: &str| {
        std::fs::write(dir.path().join(name), content).unwrap();
    };
    write("responses.csv", "task_id,worker_id,answer\n0,a,1\n0,b,1\n1,a,-1\n1,b,-1\n");
    write("truth.csv", "task_id,label\n0,1\n1,-1\n");
    write("task_types.csv", "task_id,type\n0,0\n1,1\n");
    let data = RealDataset::load(&DataBlock {
        responses: dir.path().join("responses.csv"),
        truth: dir.path().join("truth.csv"),
        task_types: dir.path().join("task_types.csv"),
        pilot_flags: None,
        d: 2,
    })
    .unwrap();
    let est = estimate_reliability(&data).unwrap();
    for j in 0..2 {
        for rate in est.per_worker_rates[j].iter().flatten() {
            assert_eq!(*rate, 1.0);
        }
    }
    // Ties on the per-worker argmax go to the lowest type index.
    assert!(est.worker_types.iter().all(|t| *t == Some(0)));
}

#[test]
fn cells_without_data_are_reported_not_averaged() {
    // Worker "a" never answers tasks of type 1, and no worker of type 1
    // exists at all, so the (t, 1) column is undefined.
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, content: &str| {
        std::fs::write(dir.path().join(name), content).unwrap();
    };
    write(
        "responses.csv",
        "task_id,worker_id,answer\n0,a,1\n0,b,1\n1,b,-1\n",
    );
    write("truth.csv", "task_id,label\n0,1\n1,1\n");
    write("task_types.csv", "task_id,type\n0,0\n1,1\n");
    let data = RealDataset::load(&DataBlock {
        responses: dir.path().join("responses.csv"),
        truth: dir.path().join("truth.csv"),
        task_types: dir.path().join("task_types.csv"),
        pilot_flags: None,
        d: 2,
    })
    .unwrap();
    let est = estimate_reliability(&data).unwrap();
    // Both workers answer type 0 perfectly; worker b is wrong on its one
    // type-1 task, so its argmax type is 0 and nobody is typed 1.
    assert_eq!(est.worker_types, vec![Some(0), Some(0)]);
    assert_eq!(est.undefined_cells, vec![(0, 1), (1, 1)]);
    assert!(est.table[0][1].is_nan());
    assert!(est.table[1][0].is_finite());
    // Worker a contributes nothing to the (1, 0) cell it never saw.
    assert_eq!(est.table[1][0], 0.0);
    assert_eq!(est.below_half, vec![(1, 0)]);
}

#[test]
fn duplicate_responses_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("responses.csv"),
        "task_id,worker_id,answer\n0,a,1\n0,a,-1\n",
    )
    .unwrap();
    std::fs::write(dir.path().join("truth.csv"), "task_id,label\n0,1\n").unwrap();
    std::fs::write(dir.path().join("task_types.csv"), "task_id,type\n0,0\n").unwrap();
    let err = RealDataset::load(&DataBlock {
        responses: dir.path().join("responses.csv"),
        truth: dir.path().join("truth.csv"),
        task_types: dir.path().join("task_types.csv"),
        pilot_flags: None,
        d: 2,
    })
    .unwrap_err();
    assert!(err.to_string().contains("duplicate response"));
}

#[test]
fn theory_curves_growth_rates() {
    // Fixed diagonal 0.9 with off-diagonal exactly 1/2 over d = 2..10:
    // the voting bound is exactly proportional to d^2 and the clustering
    // bounds grow like d log d, so the normalized ratios stay flat while
    // the raw values increase.
    let text = r#"
        [model]
        d = 3
        m = 10
        n = 10
        p = 0.9
        q = 0.5

        [algorithm]
        estimator = "mv"
        r = 1
        l = 1

        [sweep]
        trials = 1
        master_seed = 0
        d = [3, 4, 5, 6, 7, 8, 9, 10]
    "#;
    let cfg = ExperimentConfig::parse(text).unwrap();
    let alpha = 0.05;
    let rows = theory_curves(&cfg, alpha).unwrap();
    let mut mv_ratio = Vec::new();
    for row in &rows {
        let d = row.d as f64;
        mv_ratio.push(row.mv.unwrap() / (d * d));
        let ss_ratio = row.subset.unwrap() / (d * ((6.0 * d + 3.0) / alpha).ln());
        assert!((ss_ratio - 4.0 / 0.16).abs() < 1e-9, "subset ratio {ss_ratio}");
    }
    for pair in mv_ratio.windows(2) {
        assert!((pair[0] - pair[1]).abs() < 1e-9, "mv grows exactly like d^2");
    }
    // Raw bounds are increasing in d, and the voting bound outgrows the
    // two-stage bound: their ratio rises monotonically with d.
    for pair in rows.windows(2) {
        assert!(pair[1].mv.unwrap() > pair[0].mv.unwrap());
        assert!(pair[1].alg1.unwrap() > pair[0].alg1.unwrap());
        let ratio_before = pair[0].mv.unwrap() / pair[0].alg1.unwrap();
        let ratio_after = pair[1].mv.unwrap() / pair[1].alg1.unwrap();
        assert!(ratio_after > ratio_before, "mv/alg1 ratio must grow with d");
    }

    // Hand cross-check at d = 3 against the voting bound value.
    let d3 = &rows[0];
    assert!((d3.mv.unwrap() - 84.25).abs() < 0.01);
}

#[test]
fn bounds_shrink_as_alpha_grows() {
    let text = r#"
        [model]
        d = 4
        m = 10
        n = 10
        p = 0.85
        q = 0.6

        [algorithm]
        estimator = "mv"
        r = 1
        l = 1
    "#;
    let cfg = ExperimentConfig::parse(text).unwrap();
    let strict = &theory_curves(&cfg, 0.01).unwrap()[0];
    let loose = &theory_curves(&cfg, 0.5).unwrap()[0];
    for (a, b) in [
        (strict.mv, loose.mv),
        (strict.ml, loose.ml),
        (strict.subset, loose.subset),
        (strict.alg1, loose.alg1),
    ] {
        assert!(a.unwrap() > b.unwrap());
    }
}
