//! Tour of the closed-form machinery: builds reliability matrices, checks
//! their assortativity, and prints every error exponent and
//! queries-per-task bound.
//!
//! Run with: cargo run --example model_bounds

use crowdspec::model::{
    assortativity, feasible_d, oracle_achievability_exponent, oracle_converse_exponent, shared_oracle_exponent, max_reliability_log_odds, weight_scheme_exponents,
    required_queries, voting_exponents, worst_mismatch_exponents, two_stage_exponents, two_stage_matched_exponents, QueryBoundKind, ReliabilityMatrix,
    TypePriors,
};

fn main() {
    let d = 3;
    let (p, q) = (0.9, 0.7);
    let rel = ReliabilityMatrix::original(d, p, q).unwrap();
    let priors = TypePriors::uniform(d);

    println!("diagonal-{p}, off-diagonal-{q} reliability matrix, d = {d}:");
    print!("{}", rel.to_csv());

    let report = assortativity(&rel, &priors).unwrap();
    println!("\nassortativity:");
    println!("  p*(t) = {:?}", report.p_star);
    println!("  q*(t) = {:?}", report.q_star);
    println!("  p_m = {:.5}, p_u = {:.5}", report.p_m, report.p_u);
    println!(
        "  weakly assortative: {}, strongly assortative: {}",
        report.weakly_assortative, report.strongly_assortative
    );

    println!("\nerror exponents:");
    println!("  voting_exponents = {:?}", voting_exponents(&rel, &priors).unwrap());
    println!("  worst_mismatch_exponents = {:?}", worst_mismatch_exponents(&rel));
    println!("  two_stage_exponents = {:?}", two_stage_exponents(&rel).unwrap());
    println!("  two_stage_exponents' = {:?}", two_stage_matched_exponents(&rel).unwrap());
    println!("  oracle_achievability_exponent = {:.5}", oracle_achievability_exponent(&rel, &priors).unwrap());
    println!("  oracle_converse_exponent = {:.5}", oracle_converse_exponent(&rel, &priors).unwrap());
    println!("  gamma*(d) = {:.5}", shared_oracle_exponent(d, p, q).unwrap());
    println!("  log-odds of max reliability = {:.5}", max_reliability_log_odds(&rel));
    let (pi_m, pi_u) =
        weight_scheme_exponents(d, p, q, |d| 1.0 / ((d as f64 - 1.0).sqrt())).unwrap();
    println!("  pi_m = {pi_m:.5}, pi_u = {pi_u:.5} (matched-weight scheme)");

    let alpha = 0.05;
    println!("\nqueries per task to reach error {alpha}:");
    for (name, kind) in [
        ("majority voting", QueryBoundKind::MajorityVote),
        ("subset selection", QueryBoundKind::SubsetSelection),
        ("two-stage weighted", QueryBoundKind::Alg1),
        ("ML oracle", QueryBoundKind::MlOracle),
        ("impossible below", QueryBoundKind::Impossibility),
    ] {
        let v = required_queries(kind, &rel, &priors, alpha).unwrap();
        println!("  {name:<20} {v:10.2}");
    }

    let f = feasible_d(600, alpha).unwrap();
    println!(
        "\nlargest admissible d at n = 600: {} (budget ratio {:.3}, growth ratio {:.3})",
        f.max_d, f.budget_ratio, f.growth_ratio
    );
}
