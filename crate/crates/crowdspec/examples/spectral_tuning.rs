//! Data-driven tuning demo: estimates the number of types, the cluster
//! size, and the SDP penalty from the eigenvalues of the similarity
//! matrix, and compares them with the admissible bracket.
//!
//! Run with: cargo run --release --example spectral_tuning

use crowdspec::model::{
    assortativity, planted_worker_types, Assignment, ModelInstance, ReliabilityMatrix,
    ResponseSet, TypePriors,
};
use crowdspec::rng::derive_stream;
use crowdspec::experiment::DEFAULT_C2;
use crowdspec::sdpcluster::{recovery_budget, tune, SimilarityMatrix};

fn main() {
    let d = 3;
    let s = 20;
    let n = d * s;
    let rel = ReliabilityMatrix::original(d, 0.9, 0.5).unwrap();
    let priors = TypePriors::uniform(d);
    let report = assortativity(&rel, &priors).unwrap();
    let r = recovery_budget(n, d, report.p_m, report.p_u, DEFAULT_C2).unwrap();
    let lo = r as f64 * (0.25 * report.p_m + 0.75 * report.p_u);
    let hi = r as f64 * (0.75 * report.p_m + 0.25 * report.p_u);
    println!("n = {n}, d = {d}, pilot budget r = {r}, admissible bracket [{lo:.1}, {hi:.1}]");

    let mut hits = 0;
    let trials = 20;
    for t in 0..trials {
        let mut rng = derive_stream(99, &[t]);
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
        let est = tune(&sim, &mut rng).unwrap();
        let ok = est.d_hat == d && est.nu_hat >= lo && est.nu_hat <= hi;
        hits += ok as usize;
        if t < 5 {
            println!(
                "trial {t}: d_hat = {}, s_hat = {:.1}, nu_hat = {:.1} ({})",
                est.d_hat,
                est.s_hat,
                est.nu_hat,
                if ok { "in bracket" } else { "missed" }
            );
        }
    }
    println!("... {hits}/{trials} trials recovered d and landed inside the bracket");
}
