//! Worker clustering in isolation: pilot responses, similarity matrix,
//! the SDP relaxation, and k-medoids rounding, with and without the
//! admissible penalty.
//!
//! Run with: cargo run --release --example sdp_clustering

use crowdspec::metrics::clustering_error;
use crowdspec::model::{
    assortativity, planted_worker_types, Assignment, ModelInstance, ReliabilityMatrix,
    ResponseSet, TypePriors,
};
use crowdspec::rng::stream;
use crowdspec::sdpcluster::{kmedoids_rows, solve_sdp, SdpConfig, SimilarityMatrix};

fn main() {
    let d = 3;
    let s = 20;
    let n = d * s;
    let r = 120;
    let rel = ReliabilityMatrix::original(d, 0.9, 0.5).unwrap();
    let priors = TypePriors::uniform(d);
    let mut rng = stream(3);

    // Planted equal clusters; r pilot tasks answered by everyone.
    let sampled = ModelInstance::sample(&rel, &priors, r, n, None, &mut rng).unwrap();
    let inst = ModelInstance::new(
        rel.clone(),
        sampled.labels().to_vec(),
        sampled.task_types().to_vec(),
        planted_worker_types(d, s),
    )
    .unwrap();
    let resp = ResponseSet::sample(&inst, &Assignment::full(r, n), &mut rng).unwrap();
    let pilots: Vec<usize> = (0..r).collect();
    let sim = SimilarityMatrix::from_responses(&resp, &pilots).unwrap();

    let report = assortativity(&rel, &priors).unwrap();
    let nu = r as f64 * (report.p_m + report.p_u) / 2.0;
    println!("n = {n}, d = {d}, r = {r} pilots, admissible penalty nu = {nu:.2}");

    for (label, nu) in [("admissible", nu), ("far too large", 20.0 * nu)] {
        let sol = solve_sdp(&sim, &SdpConfig::new(nu).unwrap()).unwrap();
        let clusters = kmedoids_rows(&sol.x, d, &mut rng).unwrap();
        let err = clustering_error(&clusters, inst.worker_types(), d).unwrap();
        println!(
            "penalty {label:>14}: {} iterations, converged = {}, clustering error = {err:.4}",
            sol.iterations, sol.converged
        );
    }
}
