//! Head-to-head run of the two-stage algorithm, the subset-selection
//! baseline, plain majority voting, and the oracle on one synthetic
//! configuration.
//!
//! Run with: cargo run --release --example two_stage_pipeline

use crowdspec::estimators::{majority_vote, ml_oracle};
use crowdspec::metrics::{clustering_error_with_perm, label_error, type_match_error_aligned};
use crowdspec::model::{
    assortativity, Assignment, ModelInstance, ReliabilityMatrix, ResponseSet, TypePriors,
};
use crowdspec::pipeline::{run_alg1, run_subset_selection, Alg1Tuning, XiMode};
use crowdspec::rng::stream;
use crowdspec::sdpcluster::SdpConfig;

fn main() {
    let d = 3;
    let (m, n, r, l) = (3000, 60, 120, 5);
    let mut rng = stream(12);
    let rel = ReliabilityMatrix::sample(d, 0.9, 0.6, &mut rng).unwrap();
    let priors = TypePriors::uniform(d);
    // Pilots are extra tasks; only the last m are scored.
    let inst = ModelInstance::sample(&rel, &priors, m + r, n, None, &mut rng).unwrap();
    let scored = r..m + r;

    let report = assortativity(&rel, &priors).unwrap();
    let nu = r as f64 * (report.p_m + report.p_u) / 2.0;
    println!("d = {d}, m = {m} scored tasks, n = {n} workers, r = {r} pilots, l = {l}");
    println!("sampled reliability matrix:\n{}", rel.to_csv());

    let alg1 = run_alg1(
        &inst,
        r,
        l,
        Alg1Tuning::Manual { cfg: SdpConfig::new(nu).unwrap(), k: d },
        &mut rng,
    )
    .unwrap();
    let (cl_err, perm) =
        clustering_error_with_perm(&alg1.clusters, inst.worker_types(), d).unwrap();
    let tm_err = type_match_error_aligned(
        &alg1.type_match.t_hat[scored.clone()],
        &inst.task_types()[scored.clone()],
        &perm,
    )
    .unwrap();
    println!(
        "two-stage:        label error {:.4}, clustering error {:.4}, type-match error {:.4}",
        label_error(&alg1.estimate.labels()[scored.clone()], &inst.labels()[scored.clone()])
            .unwrap(),
        cl_err,
        tm_err
    );

    let ss = run_subset_selection(&inst, r, l, XiMode::Oracle, &mut rng).unwrap();
    println!(
        "subset selection: label error {:.4}, {} clusters found",
        label_error(&ss.estimate.labels()[scored.clone()], &inst.labels()[scored.clone()])
            .unwrap(),
        ss.clusters.k()
    );

    // Matched per-task budget for the flat baselines.
    let budget = (l * d).min(n);
    let per_task: Vec<Vec<usize>> = (0..inst.m())
        .map(|_| rand::seq::index::sample(&mut rng, n, budget).into_vec())
        .collect();
    let flat = Assignment::new(per_task, n).unwrap();
    let resp = ResponseSet::sample(&inst, &flat, &mut rng).unwrap();
    let mv = majority_vote(&resp);
    let ml = ml_oracle(&resp, &inst).unwrap();
    println!(
        "majority voting:  label error {:.4}",
        label_error(&mv.labels()[scored.clone()], &inst.labels()[scored.clone()]).unwrap()
    );
    println!(
        "oracle weights:   label error {:.4}",
        label_error(&ml.labels()[scored.clone()], &inst.labels()[scored.clone()]).unwrap()
    );
}
