//! Closed-form error exponents and sample-complexity bounds.
//!
//! All exponents are stated for the generalized model with product priors;
//! uniform priors recover the unweighted forms. `worst_mismatch_exponents` and `two_stage_exponents` carry
//! no prior weighting in either form.

use crate::error::{Error, Result};
use crate::model::{ReliabilityMatrix, TypePriors};

fn check_priors(q: &ReliabilityMatrix, priors: &TypePriors) -> Result<()> {
    if priors.d() != q.d() {
        return Err(Error::dim(format!(
            "priors of length {} but reliability d = {}",
            priors.d(),
            q.d()
        )));
    }
    Ok(())
}

/// Majority-voting exponent per task type:
/// `voting_exponents(t) = 1/2 [sum_w nu(w) (2Q(t,w) - 1)]^2`.
pub fn voting_exponents(q: &ReliabilityMatrix, priors: &TypePriors) -> Result<Vec<f64>> {
    check_priors(q, priors)?;
    let nu = priors.nu();
    Ok((0..q.d())
        .map(|t| {
            let s: f64 = (0..q.d()).map(|w| nu[w] * (2.0 * q.get(t, w) - 1.0)).sum();
            0.5 * s * s
        })
        .collect())
}

/// Worst-case mismatched exponent: `worst_mismatch_exponents(t) = [2 min_w Q(t,w) - 1]^2`.
pub fn worst_mismatch_exponents(q: &ReliabilityMatrix) -> Vec<f64> {
    (0..q.d())
        .map(|t| {
            let min = q.row(t).iter().copied().fold(f64::INFINITY, f64::min);
            let v = 2.0 * min - 1.0;
            v * v
        })
        .collect()
}

fn two_stage_mix(q: &ReliabilityMatrix, anchor: impl Fn(usize) -> f64) -> Result<Vec<f64>> {
    let d = q.d();
    if d < 3 {
        return Err(Error::invalid(format!("two_stage_exponents variants need d >= 3, got {d}")));
    }
    let inv = 1.0 / ((d - 1) as f64).sqrt();
    Ok((0..d)
        .map(|t| {
            let s: f64 = (0..d).map(|w| 2.0 * q.get(t, w) - 1.0).sum();
            let v = inv * s + (1.0 - inv) * anchor(t);
            0.5 * v * v
        })
        .collect())
}

/// Exponent of the two-stage weighted scheme, mixing the row sum with the
/// worst entry at rate `1/sqrt(d-1)`. Needs `d >= 3`.
pub fn two_stage_exponents(q: &ReliabilityMatrix) -> Result<Vec<f64>> {
    two_stage_mix(q, |t| {
        let min = q.row(t).iter().copied().fold(f64::INFINITY, f64::min);
        2.0 * min - 1.0
    })
}

/// Matched-type variant of [`two_stage_exponents`], anchored at the diagonal entry
/// `2Q(t,t) - 1` instead of the row minimum. Needs `d >= 3`.
pub fn two_stage_matched_exponents(q: &ReliabilityMatrix) -> Result<Vec<f64>> {
    two_stage_mix(q, |t| 2.0 * q.get(t, t) - 1.0)
}

fn bhattacharyya_row(q: &ReliabilityMatrix, t: usize, nu: &[f64]) -> f64 {
    (0..q.d())
        .map(|w| {
            let p = q.get(t, w);
            nu[w] * (p * (1.0 - p)).sqrt()
        })
        .sum()
}

/// Achievability exponent of the ML estimator:
/// `oracle_achievability_exponent = log(1 / (2 max_t sum_w nu(w) sqrt(Q(t,w)(1 - Q(t,w)))))`.
pub fn oracle_achievability_exponent(q: &ReliabilityMatrix, priors: &TypePriors) -> Result<f64> {
    check_priors(q, priors)?;
    let worst = (0..q.d())
        .map(|t| bhattacharyya_row(q, t, priors.nu()))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(-(2.0 * worst).ln())
}

/// Converse exponent:
/// `oracle_converse_exponent = log(1 / (2 sum_{t,w} mu(t) nu(w) sqrt(Q(t,w)(1 - Q(t,w)))))`.
pub fn oracle_converse_exponent(q: &ReliabilityMatrix, priors: &TypePriors) -> Result<f64> {
    check_priors(q, priors)?;
    let mu = priors.mu();
    let avg: f64 = (0..q.d()).map(|t| mu[t] * bhattacharyya_row(q, t, priors.nu())).sum();
    Ok(-(2.0 * avg).ln())
}

/// Log-odds of the maximum reliability. Returns `+inf` when the maximum is
/// exactly 1, in which case the impossibility bound is vacuous.
pub fn max_reliability_log_odds(q: &ReliabilityMatrix) -> f64 {
    let max = (0..q.d())
        .flat_map(|t| q.row(t).iter().copied())
        .fold(f64::NEG_INFINITY, f64::max);
    if max >= 1.0 {
        f64::INFINITY
    } else {
        (max / (1.0 - max)).ln()
    }
}

/// Shared achievability/converse exponent of the diagonal-`p`,
/// off-diagonal-`q` model:
/// `gamma*(d) = log(d / (2 sqrt(p(1-p)) + 2(d-1) sqrt(q(1-q))))`.
pub fn shared_oracle_exponent(d: usize, p: f64, q: f64) -> Result<f64> {
    if d < 2 || !(0.5..=1.0).contains(&p) || !(0.5..=1.0).contains(&q) {
        return Err(Error::invalid(format!(
            "shared_oracle_exponent needs d >= 2 and p, q in [0.5, 1], got d = {d}, p = {p}, q = {q}"
        )));
    }
    let denom = 2.0 * (p * (1.0 - p)).sqrt() + 2.0 * (d as f64 - 1.0) * (q * (1.0 - q)).sqrt();
    if denom == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((d as f64 / denom).ln())
}

/// Matched and mismatched exponents of the general weight scheme that puts
/// weight 1 on the matched cluster and `delta(d)` elsewhere, in the
/// diagonal-`p`, off-diagonal-`q` model.
pub fn weight_scheme_exponents(
    d: usize,
    p: f64,
    q: f64,
    delta: impl Fn(usize) -> f64,
) -> Result<(f64, f64)> {
    if d < 2 {
        return Err(Error::invalid(format!("pi exponents need d >= 2, got {d}")));
    }
    let dd = delta(d);
    if dd < 0.0 || !dd.is_finite() {
        return Err(Error::invalid(format!("delta(d) must be a nonnegative real, got {dd}")));
    }
    let df = d as f64;
    let denom = 1.0 + (df - 1.0) * dd * dd;
    let m_num = (2.0 * p - 1.0) + (df - 1.0) * dd * (2.0 * q - 1.0);
    let u_num = dd * (2.0 * p - 1.0) + (1.0 + (df - 2.0) * dd) * (2.0 * q - 1.0);
    Ok((m_num * m_num / denom, u_num * u_num / denom))
}

/// Which sample-complexity bound to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryBoundKind {
    /// Majority voting sufficient condition.
    MajorityVote,
    /// Subset-selection sufficient condition.
    SubsetSelection,
    /// Two-stage weighted scheme sufficient condition.
    Alg1,
    /// ML-oracle achievability (per-task assignment size).
    MlOracle,
    /// Largest queries-per-task budget at which recovery is statistically
    /// impossible for any estimator.
    Impossibility,
}

fn two_term_bound(q: &ReliabilityMatrix, alpha: f64, theta: &[f64]) -> f64 {
    let d = q.d() as f64;
    let margin_min = (0..q.d())
        .map(|t| {
            let g = q.p_star(t) - q.q_star(t);
            g * g + theta[t]
        })
        .fold(f64::INFINITY, f64::min);
    let theta_min = theta.iter().copied().fold(f64::INFINITY, f64::min);
    let t1 = 4.0 * d * ((6.0 * d + 3.0) / alpha).ln() / margin_min;
    let t2 = 4.0 * d * (3.0 / alpha).ln() / theta_min;
    t1.min(t2)
}

/// Evaluates the queries-per-task bound of the given kind at target
/// accuracy `alpha`. Degenerate exponents yield `+inf` (the bound is
/// unattainable); for [`QueryBoundKind::Impossibility`] a `+inf` log-odds
/// collapses the impossible region to 0.
pub fn required_queries(
    kind: QueryBoundKind,
    q: &ReliabilityMatrix,
    priors: &TypePriors,
    alpha: f64,
) -> Result<f64> {
    let max_alpha = match kind {
        QueryBoundKind::Impossibility => 0.125,
        _ => 0.5,
    };
    if !(alpha > 0.0 && alpha <= max_alpha) {
        return Err(Error::invalid(format!(
            "target accuracy {alpha} outside (0, {max_alpha}]"
        )));
    }
    match kind {
        QueryBoundKind::MajorityVote => {
            let min = voting_exponents(q, priors)?.into_iter().fold(f64::INFINITY, f64::min);
            Ok((1.0 / alpha).ln() / min)
        }
        QueryBoundKind::SubsetSelection => Ok(two_term_bound(q, alpha, &worst_mismatch_exponents(q))),
        QueryBoundKind::Alg1 => Ok(two_term_bound(q, alpha, &two_stage_exponents(q)?)),
        QueryBoundKind::MlOracle => {
            let g = oracle_achievability_exponent(q, priors)?;
            Ok((1.0 / alpha).ln() / g)
        }
        QueryBoundKind::Impossibility => {
            let g2 = oracle_converse_exponent(q, priors)?;
            let lo = max_reliability_log_odds(q);
            let target = (1.0 / (4.0 * alpha)).ln();
            if lo.is_infinite() {
                return Ok(0.0);
            }
            if g2 <= 0.0 {
                // Pure-spammer exponent: the left side never reaches the
                // target unless the log-odds term alone can.
                if lo > 0.0 {
                    let y = target / lo;
                    return Ok(y * y);
                }
                return Ok(f64::INFINITY);
            }
            // oracle_converse_exponent * x + Gamma * sqrt(x) = target, quadratic in sqrt(x).
            let y = (-lo + (lo * lo + 4.0 * g2 * target).sqrt()) / (2.0 * g2);
            Ok(y * y)
        }
    }
}

/// Outcome of the finite-`n` type-count feasibility check.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibleD {
    /// Largest `d` with `d * ln(d / alpha) <= c * n` (0 if even `d = 1` fails).
    pub max_d: usize,
    /// Whether the budget condition holds at `max_d`.
    pub satisfied: bool,
    /// `max_d * ln(max_d / alpha) / n`, the budget condition as a ratio.
    pub budget_ratio: f64,
    /// `max_d * ln(n) / (n * sqrt(ln(1 / alpha)))`, the growth condition as
    /// a ratio; asymptotic conditions are reported, not enforced.
    pub growth_ratio: f64,
}

/// Finite-`n` surrogate for the admissible number of types, with the
/// big-O constant fixed to 1.
pub fn feasible_d(n: usize, alpha: f64) -> Result<FeasibleD> {
    feasible_d_with_constant(n, alpha, 1.0)
}

/// Same surrogate with an explicit constant: `d * ln(d / alpha) <= c * n`.
pub fn feasible_d_with_constant(n: usize, alpha: f64, c: f64) -> Result<FeasibleD> {
    if n < 2 {
        return Err(Error::invalid(format!("need n >= 2, got {n}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("target accuracy {alpha} outside (0, 1)")));
    }
    if !(c > 0.0) {
        return Err(Error::invalid(format!("constant must be positive, got {c}")));
    }
    let budget = |d: usize| d as f64 * (d as f64 / alpha).ln();
    let mut max_d = 0usize;
    let mut d = 1usize;
    // The budget is increasing in d for alpha < 1, so stop at first failure.
    while budget(d) <= c * n as f64 {
        max_d = d;
        d += 1;
    }
    let nf = n as f64;
    let report_d = max_d.max(1) as f64;
    Ok(FeasibleD {
        max_d,
        satisfied: max_d >= 1,
        budget_ratio: budget(max_d.max(1)) / nf,
        growth_ratio: report_d * nf.ln() / (nf * (1.0 / alpha).ln().sqrt()),
    })
}
