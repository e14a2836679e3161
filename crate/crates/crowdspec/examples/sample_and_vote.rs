//! Samples a synthetic instance, collects responses under a full
//! assignment, and compares majority voting against the oracle-weighted
//! estimator and the voting error exponent.
//!
//! Run with: cargo run --release --example sample_and_vote

use crowdspec::estimators::{majority_vote, ml_oracle};
use crowdspec::metrics::label_error;
use crowdspec::model::{
    voting_exponents, Assignment, ModelInstance, ReliabilityMatrix, ResponseSet, TypePriors,
};
use crowdspec::rng::stream;

fn main() {
    let d = 3;
    let rel = ReliabilityMatrix::original(d, 0.9, 0.5).unwrap();
    let priors = TypePriors::uniform(d);
    let (m, n) = (5000, 30);
    let mut rng = stream(7);

    let inst = ModelInstance::sample(&rel, &priors, m, n, None, &mut rng).unwrap();
    let resp = ResponseSet::sample(&inst, &Assignment::full(m, n), &mut rng).unwrap();

    let mv = majority_vote(&resp);
    let ml = ml_oracle(&resp, &inst).unwrap();
    let mv_err = label_error(mv.labels(), inst.labels()).unwrap();
    let ml_err = label_error(ml.labels(), inst.labels()).unwrap();

    let exponent = voting_exponents(&rel, &priors).unwrap()[0];
    let bound = (-(n as f64) * exponent).exp();

    println!("m = {m} tasks, n = {n} workers, full assignment");
    println!("majority voting error: {mv_err:.4} (exponent bound {bound:.4})");
    println!("oracle-weighted error: {ml_err:.4}");
    println!(
        "margins: mv mean |sum| = {:.2}, oracle mean |sum| = {:.2}",
        mv.margins().iter().map(|s| s.abs()).sum::<f64>() / m as f64,
        ml.margins().iter().map(|s| s.abs()).sum::<f64>() / m as f64
    );
}
