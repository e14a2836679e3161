//! End-to-end inference: the two-stage clustering + weighted-voting
//! algorithm and the sequential subset-selection baseline.
//!
//! Both pipelines use the first `r` tasks of the instance as pilots,
//! assigned to every worker; whether those pilots are scored is the
//! harness's business. Stage one clusters workers from the pilot
//! responses; stage two assigns `l` workers per cluster to every task,
//! estimates each task's type from the most biased cluster, and aggregates.

use rand::Rng;

use crate::error::{Error, Result};
use crate::estimators::{majority_vote, weighted_majority_vote, LabelEstimate, WeightScheme};
use crate::metrics::largest_clusters;
use crate::model::{assortativity, Assignment, ModelInstance, ResponseSet, TypePriors};
use crate::sdpcluster::{
    kmedoids_rows, solve_sdp, tune, ClusterAssignment, SdpConfig, SdpSolution, SimilarityMatrix,
    TuningEstimate,
};

/// Per-task worker draws: `l` workers from each cluster for every task,
/// plus the pilot set that was queried in full.
#[derive(Debug, Clone)]
pub struct AssignmentPlan {
    pilot_tasks: Vec<usize>,
    l: usize,
    /// `subsets[i][z]` is the size-`l` draw from group `z` for task `i`.
    subsets: Vec<Vec<Vec<usize>>>,
}

impl AssignmentPlan {
    /// Draws `l` workers without replacement from every group for every
    /// task. Groups are member lists (for the two-stage algorithm, the
    /// inferred clusters; for the baseline, the largest `d` of them).
    pub fn draw<R: Rng>(
        groups: &[Vec<usize>],
        m: usize,
        l: usize,
        pilot_tasks: &[usize],
        rng: &mut R,
    ) -> Result<Self> {
        if l == 0 {
            return Err(Error::invalid("need l >= 1"));
        }
        for (z, members) in groups.iter().enumerate() {
            if members.len() < l {
                return Err(Error::infeasible(format!(
                    "cluster {z} has {} workers but l = {l}",
                    members.len()
                )));
            }
        }
        if pilot_tasks.iter().any(|&i| i >= m) {
            return Err(Error::invalid("pilot task out of range"));
        }
        let mut subsets = Vec::with_capacity(m);
        for _ in 0..m {
            let mut per_group = Vec::with_capacity(groups.len());
            for members in groups {
                let pick = rand::seq::index::sample(rng, members.len(), l);
                let mut chosen: Vec<usize> = pick.iter().map(|idx| members[idx]).collect();
                chosen.sort_unstable();
                per_group.push(chosen);
            }
            subsets.push(per_group);
        }
        Ok(Self { pilot_tasks: pilot_tasks.to_vec(), l, subsets })
    }

    pub fn pilot_tasks(&self) -> &[usize] {
        &self.pilot_tasks
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn m(&self) -> usize {
        self.subsets.len()
    }

    /// Number of groups each task draws from.
    pub fn k(&self) -> usize {
        self.subsets.first().map_or(0, Vec::len)
    }

    /// The size-`l` subset of group `z` for task `i`.
    pub fn subset(&self, i: usize, z: usize) -> &[usize] {
        &self.subsets[i][z]
    }

    /// The queried assignment set: pilots to all `n` workers, every other
    /// task to the union of its per-group draws.
    pub fn queried(&self, n: usize) -> Assignment {
        let mut per_task: Vec<Vec<usize>> = Vec::with_capacity(self.m());
        for (i, groups) in self.subsets.iter().enumerate() {
            if self.pilot_tasks.contains(&i) {
                per_task.push((0..n).collect());
            } else {
                let mut workers: Vec<usize> = groups.iter().flatten().copied().collect();
                workers.sort_unstable();
                workers.dedup();
                per_task.push(workers);
            }
        }
        Assignment::new(per_task, n).expect("plan subsets are valid worker indices")
    }

    /// Size of the queried assignment set: `n*r + l*k*(m - r)`.
    pub fn total_queries(&self, n: usize) -> usize {
        let r = self.pilot_tasks.len();
        n * r + self.l * self.k() * (self.m() - r)
    }

    /// CSV rows of `task_id,worker_id,cluster_id` covering the per-group
    /// draws.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("task_id,worker_id,cluster_id\n");
        for (i, groups) in self.subsets.iter().enumerate() {
            for (z, workers) in groups.iter().enumerate() {
                for &j in workers {
                    out.push_str(&format!("{i},{j},{z}\n"));
                }
            }
        }
        out
    }
}

/// Draws the per-task plan from all clusters of a [`ClusterAssignment`].
pub fn build_assignment<R: Rng>(
    clusters: &ClusterAssignment,
    m: usize,
    l: usize,
    pilot_tasks: &[usize],
    rng: &mut R,
) -> Result<AssignmentPlan> {
    let groups: Vec<Vec<usize>> = (0..clusters.k()).map(|z| clusters.members(z)).collect();
    AssignmentPlan::draw(&groups, m, l, pilot_tasks, rng)
}

/// Estimated task types plus the per-group absolute bias scores behind
/// them.
#[derive(Debug, Clone)]
pub struct TypeMatchResult {
    pub t_hat: Vec<usize>,
    pub bias_scores: Vec<Vec<f64>>,
}

/// Picks, per task, the group whose drawn answers are most biased:
/// `argmax_z |sum_{j in subset(i, z)} M_ij|`, lowest index on ties.
pub fn match_types(resp: &ResponseSet, plan: &AssignmentPlan) -> Result<TypeMatchResult> {
    if plan.m() != resp.m() {
        return Err(Error::dim(format!(
            "plan covers {} tasks but responses cover {}",
            plan.m(),
            resp.m()
        )));
    }
    let mut t_hat = Vec::with_capacity(plan.m());
    let mut bias_scores = Vec::with_capacity(plan.m());
    for i in 0..plan.m() {
        let scores: Vec<f64> = (0..plan.k())
            .map(|z| {
                let sum: i64 = plan.subset(i, z).iter().map(|&j| resp.get(i, j) as i64).sum();
                sum.unsigned_abs() as f64
            })
            .collect();
        let mut best = 0usize;
        for z in 1..scores.len() {
            if scores[z] > scores[best] {
                best = z;
            }
        }
        t_hat.push(best);
        bias_scores.push(scores);
    }
    Ok(TypeMatchResult { t_hat, bias_scores })
}

/// Weights for the final vote: 1 on the matched group's draw and
/// `1/sqrt(k - 1)` on every other group's draw.
pub fn matched_cluster_weights(plan: &AssignmentPlan, t_hat: &[usize]) -> Result<WeightScheme> {
    if t_hat.len() != plan.m() {
        return Err(Error::dim(format!(
            "{} type estimates but plan covers {} tasks",
            t_hat.len(),
            plan.m()
        )));
    }
    let k = plan.k();
    let off_weight = if k > 1 { 1.0 / ((k - 1) as f64).sqrt() } else { 1.0 };
    let rows = (0..plan.m())
        .map(|i| {
            let mut row = Vec::with_capacity(k * plan.l());
            for z in 0..k {
                let w = if z == t_hat[i] { 1.0 } else { off_weight };
                row.extend(plan.subset(i, z).iter().map(|&j| (j, w)));
            }
            row
        })
        .collect();
    WeightScheme::new(rows)
}

/// Samples responses for the plan's queried set, reusing the already
/// collected pilot rows.
fn sample_plan_responses<R: Rng>(
    inst: &ModelInstance,
    plan: &AssignmentPlan,
    pilot_resp: &ResponseSet,
    rng: &mut R,
) -> Result<ResponseSet> {
    let query = plan.queried(inst.n());
    let mut rows: Vec<Vec<(usize, i8)>> = Vec::with_capacity(inst.m());
    for i in 0..inst.m() {
        if plan.pilot_tasks().contains(&i) {
            rows.push(pilot_resp.row(i).to_vec());
        } else {
            let mut row = Vec::with_capacity(query.workers(i).len());
            for &j in query.workers(i) {
                let f = inst.fidelity(i, j);
                let correct = rng.random::<f64>() < f;
                row.push((j, if correct { inst.labels()[i] } else { -inst.labels()[i] }));
            }
            rows.push(row);
        }
    }
    ResponseSet::from_rows(inst.m(), inst.n(), rows)
}

fn sample_pilot_responses<R: Rng>(
    inst: &ModelInstance,
    r: usize,
    rng: &mut R,
) -> Result<(Vec<usize>, ResponseSet)> {
    if r == 0 || r > inst.m() {
        return Err(Error::invalid(format!(
            "need 1 <= r <= m, got r = {r} and m = {}",
            inst.m()
        )));
    }
    let pilots: Vec<usize> = (0..r).collect();
    let per_task: Vec<Vec<usize>> = (0..inst.m())
        .map(|i| if i < r { (0..inst.n()).collect() } else { Vec::new() })
        .collect();
    let assignment = Assignment::new(per_task, inst.n())?;
    let resp = ResponseSet::sample(inst, &assignment, rng)?;
    Ok((pilots, resp))
}

/// Stage-one tuning choice for [`run_alg1`].
#[derive(Debug, Clone)]
pub enum Alg1Tuning {
    /// Solve with the config's penalty and round into `k` clusters.
    Manual { cfg: SdpConfig, k: usize },
    /// Estimate the penalty from the similarity spectrum but keep the
    /// given cluster count; the config's penalty is replaced.
    AutoNu { cfg: SdpConfig, k: usize },
    /// Estimate the penalty and the cluster count; the config supplies the
    /// solver knobs and its penalty is replaced.
    Auto { cfg: SdpConfig },
}

/// Everything the two-stage run produced, diagnostics included.
#[derive(Debug, Clone)]
pub struct Alg1Output {
    pub estimate: LabelEstimate,
    pub clusters: ClusterAssignment,
    pub type_match: TypeMatchResult,
    pub plan: AssignmentPlan,
    pub responses: ResponseSet,
    pub sdp: SdpSolution,
    /// Penalty actually used in the SDP objective.
    pub nu: f64,
    /// Present when the penalty and cluster count were estimated.
    pub tuning: Option<TuningEstimate>,
}

fn check_estimated_penalty(nu_hat: f64) -> Result<f64> {
    if nu_hat < 0.0 || !nu_hat.is_finite() {
        return Err(Error::invalid(format!(
            "estimated penalty {nu_hat} unusable; similarity spectrum too noisy"
        )));
    }
    Ok(nu_hat)
}

/// Runs the full two-stage algorithm on a fresh sample of responses: pilot
/// collection, SDP clustering with k-medoids rounding, per-task assignment,
/// type matching, and the matched-cluster weighted vote.
pub fn run_alg1<R: Rng>(
    inst: &ModelInstance,
    r: usize,
    l: usize,
    tuning: Alg1Tuning,
    rng: &mut R,
) -> Result<Alg1Output> {
    let (pilots, pilot_resp) = sample_pilot_responses(inst, r, rng)?;
    let sim = SimilarityMatrix::from_responses(&pilot_resp, &pilots)?;

    let (cfg, k, estimate) = match tuning {
        Alg1Tuning::Manual { cfg, k } => {
            cfg.validate()?;
            if k == 0 || k > inst.n() {
                return Err(Error::invalid(format!("need 1 <= k <= n, got k = {k}")));
            }
            (cfg, k, None)
        }
        Alg1Tuning::AutoNu { mut cfg, k } => {
            if k == 0 || k > inst.n() {
                return Err(Error::invalid(format!("need 1 <= k <= n, got k = {k}")));
            }
            let est = tune(&sim, rng)?;
            cfg.nu = check_estimated_penalty(est.nu_hat)?;
            cfg.validate()?;
            (cfg, k, Some(est))
        }
        Alg1Tuning::Auto { mut cfg } => {
            let est = tune(&sim, rng)?;
            cfg.nu = check_estimated_penalty(est.nu_hat)?;
            cfg.validate()?;
            let k = est.d_hat;
            (cfg, k, Some(est))
        }
    };

    let sdp = solve_sdp(&sim, &cfg)?;
    let clusters = kmedoids_rows(&sdp.x, k, rng)?;
    let plan = build_assignment(&clusters, inst.m(), l, &pilots, rng)?;
    let responses = sample_plan_responses(inst, &plan, &pilot_resp, rng)?;
    let type_match = match_types(&responses, &plan)?;
    let weights = matched_cluster_weights(&plan, &type_match.t_hat)?;
    let labels = weighted_majority_vote(&responses, &weights)?;

    Ok(Alg1Output {
        estimate: labels,
        clusters,
        type_match,
        plan,
        responses,
        sdp,
        nu: cfg.nu,
        tuning: estimate,
    })
}

/// Agreement threshold for the baseline's sequential clustering.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum XiMode {
    /// Midpoint of the pairwise agreement rates implied by the true
    /// reliability matrix under uniform priors.
    Oracle,
    /// Plug-in from the spectral penalty estimate: `(1 + nu_hat / r) / 2`.
    Plugin,
    Fixed(f64),
}

/// The baseline's worker clustering: visit workers in index order; worker
/// `b` joins the first existing cluster whose founder `a` agrees with it on
/// strictly more than a `xi` fraction of the pilot tasks, else founds a new
/// cluster.
pub fn sequential_clustering(
    pilot_resp: &ResponseSet,
    pilots: &[usize],
    xi: f64,
) -> Result<ClusterAssignment> {
    if !(0.0..=1.0).contains(&xi) {
        return Err(Error::invalid(format!("agreement threshold {xi} outside [0, 1]")));
    }
    if pilots.is_empty() {
        return Err(Error::invalid("sequential clustering needs at least one pilot task"));
    }
    let n = pilot_resp.n();
    let r = pilots.len();
    let mut founders: Vec<usize> = Vec::new();
    let mut labels = vec![0usize; n];
    for b in 0..n {
        let mut joined = None;
        for (c_idx, &a) in founders.iter().enumerate() {
            let agree = pilots
                .iter()
                .filter(|&&i| pilot_resp.get(i, a) == pilot_resp.get(i, b))
                .count();
            if agree as f64 / r as f64 > xi {
                joined = Some(c_idx);
                break;
            }
        }
        match joined {
            Some(c) => labels[b] = c,
            None => {
                founders.push(b);
                labels[b] = founders.len() - 1;
            }
        }
    }
    ClusterAssignment::new(labels, founders.len())
}

/// Output of the subset-selection baseline.
#[derive(Debug, Clone)]
pub struct SubsetSelectionOutput {
    pub estimate: LabelEstimate,
    /// Full sequential clustering into `c` clusters.
    pub clusters: ClusterAssignment,
    /// Ids of the largest `d` clusters, in selection order; the plan's
    /// groups and the type estimates are indexed by position in this list.
    pub selected: Vec<usize>,
    pub type_match: TypeMatchResult,
    pub plan: AssignmentPlan,
    pub responses: ResponseSet,
    /// Threshold actually used.
    pub xi: f64,
}

/// Runs the sequential-clustering baseline: workers are visited in index
/// order and join the first cluster whose founder agrees with them on more
/// than a `xi` fraction of the pilot tasks, else found a new cluster. Type
/// matching is restricted to the largest `d` clusters and the final
/// estimate is an unweighted vote over the matched cluster's draw.
pub fn run_subset_selection<R: Rng>(
    inst: &ModelInstance,
    r: usize,
    l: usize,
    xi: XiMode,
    rng: &mut R,
) -> Result<SubsetSelectionOutput> {
    let d = inst.reliability().d();
    let (pilots, pilot_resp) = sample_pilot_responses(inst, r, rng)?;

    let xi_value = match xi {
        XiMode::Fixed(v) => v,
        XiMode::Oracle => {
            let report =
                assortativity(inst.reliability(), &TypePriors::uniform(d))?;
            0.5 * (0.5 * (1.0 + report.p_m) + 0.5 * (1.0 + report.p_u))
        }
        XiMode::Plugin => {
            let sim = SimilarityMatrix::from_responses(&pilot_resp, &pilots)?;
            let est = tune(&sim, rng)?;
            0.5 * (1.0 + est.nu_hat / r as f64)
        }
    };
    let clusters = sequential_clustering(&pilot_resp, &pilots, xi_value)?;

    if clusters.k() < d {
        return Err(Error::infeasible(format!(
            "sequential clustering produced {} clusters but d = {d}",
            clusters.k()
        )));
    }
    let selected = largest_clusters(&clusters, d);
    let groups: Vec<Vec<usize>> = selected.iter().map(|&z| clusters.members(z)).collect();
    let plan = AssignmentPlan::draw(&groups, inst.m(), l, &pilots, rng)?;
    let responses = sample_plan_responses(inst, &plan, &pilot_resp, rng)?;
    let type_match = match_types(&responses, &plan)?;

    // Unweighted vote over the matched cluster's draw only.
    let rows: Vec<Vec<(usize, i8)>> = (0..inst.m())
        .map(|i| {
            plan.subset(i, type_match.t_hat[i])
                .iter()
                .map(|&j| (j, responses.get(i, j)))
                .collect()
        })
        .collect();
    let matched_only = ResponseSet::from_rows(inst.m(), inst.n(), rows)?;
    let estimate = majority_vote(&matched_only);

    Ok(SubsetSelectionOutput {
        estimate,
        clusters,
        selected,
        type_match,
        plan,
        responses,
        xi: xi_value,
    })
}
