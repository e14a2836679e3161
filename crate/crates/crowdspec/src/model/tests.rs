use super::*;
use crate::rng::stream;
use approx::assert_relative_eq;

#[test]
fn original_model_construction() {
    let m = ReliabilityMatrix::original(3, 0.9, 0.5).unwrap();
    for t in 0..3 {
        for w in 0..3 {
            assert_eq!(m.get(t, w), if t == w { 0.9 } else { 0.5 });
        }
    }
    let m = ReliabilityMatrix::original(2, 0.51, 0.5).unwrap();
    assert_eq!(m.row(0), &[0.51, 0.5]);
    assert_eq!(m.row(1), &[0.5, 0.51]);

    assert!(ReliabilityMatrix::original(3, 0.5, 0.5).is_err());
    assert!(ReliabilityMatrix::original(3, 1.0, 0.5).is_err());
    assert!(ReliabilityMatrix::original(1, 0.9, 0.5).is_err());
}

#[test]
fn sampled_matrix_respects_intervals() {
    let mut rng = stream(7);
    let m = ReliabilityMatrix::sample(5, 0.9, 0.5, &mut rng).unwrap();
    for t in 0..5 {
        for w in 0..5 {
            let v = m.get(t, w);
            if t == w {
                assert!((0.9..=0.99).contains(&v));
            } else {
                // Degenerate interval returns the constant.
                assert_eq!(v, 0.5);
            }
        }
    }

    let mut rng = stream(1);
    let m = ReliabilityMatrix::sample(3, 0.9, 0.7, &mut rng).unwrap();
    for t in 0..3 {
        for w in 0..3 {
            let v = m.get(t, w);
            if t == w {
                assert!((0.9..=0.99).contains(&v));
            } else {
                assert!((0.5..=0.7).contains(&v));
            }
        }
    }

    assert!(ReliabilityMatrix::sample(3, 0.6, 0.7, &mut rng).is_err());
}

#[test]
fn sampling_is_deterministic_per_seed() {
    let a = ReliabilityMatrix::sample(4, 0.9, 0.6, &mut stream(42)).unwrap();
    let b = ReliabilityMatrix::sample(4, 0.9, 0.6, &mut stream(42)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn reliability_csv_round_trip() {
    let m = ReliabilityMatrix::original(3, 0.9, 0.7).unwrap();
    let back = ReliabilityMatrix::from_csv(&m.to_csv()).unwrap();
    assert_eq!(m, back);
    assert!(ReliabilityMatrix::from_csv("0.9,0.5\n0.5\n").is_err());
}

#[test]
fn priors_validation_and_round_trip() {
    assert!(TypePriors::new(vec![0.5, 0.6], vec![0.5, 0.5]).is_err());
    assert!(TypePriors::new(vec![-0.1, 1.1], vec![0.5, 0.5]).is_err());
    let p = TypePriors::new(vec![0.25, 0.75], vec![0.5, 0.5]).unwrap();
    let back = TypePriors::from_csv(&p.to_csv()).unwrap();
    assert_eq!(p, back);
}

#[test]
fn assortativity_hand_values() {
    let q = ReliabilityMatrix::original(3, 0.9, 0.5).unwrap();
    let report = assortativity(&q, &TypePriors::uniform(3)).unwrap();
    for a in 0..3 {
        assert_relative_eq!(report.phi[(a, a)], 0.64 / 3.0, max_relative = 1e-12);
        for b in 0..3 {
            if a != b {
                assert_relative_eq!(report.phi[(a, b)], 0.0, epsilon = 1e-15);
            }
        }
    }
    assert!(report.p_m > report.p_u);
    assert!(report.weakly_assortative && report.strongly_assortative);

    let q = ReliabilityMatrix::original(3, 0.9, 0.7).unwrap();
    let report = assortativity(&q, &TypePriors::uniform(3)).unwrap();
    assert_relative_eq!(report.p_m, 0.32, max_relative = 1e-12);
    assert_relative_eq!(report.p_u, 0.8 / 3.0, max_relative = 1e-12);
}

#[test]
fn equal_matched_and_mismatched_reliability_breaks_weak_assortativity() {
    let q = ReliabilityMatrix::new(2, vec![0.8, 0.8, 0.6, 0.9]).unwrap();
    let report = assortativity(&q, &TypePriors::uniform(2)).unwrap();
    assert!(!report.weakly_assortative);
}

#[test]
fn phi_is_positive_semidefinite_under_uniform_priors() {
    // Gram matrix of the columns of 2Q - 1 scaled by 1/d.
    let mut rng = stream(11);
    for _ in 0..20 {
        use rand::Rng;
        let d = rng.random_range(2..=7);
        let q = ReliabilityMatrix::sample(d, 0.85, 0.8, &mut rng).unwrap();
        let report = assortativity(&q, &TypePriors::uniform(d)).unwrap();
        let eig = nalgebra::SymmetricEigen::new(report.phi.clone());
        for ev in eig.eigenvalues.iter() {
            assert!(*ev >= -1e-10, "phi eigenvalue {ev} below tolerance");
        }
    }
}

#[test]
fn pairwise_agreement_identity() {
    // Lambda(w, w') = (1/d) sum_t [Q(t,w) Q(t,w') + (1-Q(t,w))(1-Q(t,w'))]
    // equals (Phi(w, w') + 1) / 2; both sides computed independently.
    let mut rng = stream(13);
    let q = ReliabilityMatrix::sample(4, 0.9, 0.75, &mut rng).unwrap();
    let report = assortativity(&q, &TypePriors::uniform(4)).unwrap();
    for w in 0..4 {
        for w2 in 0..4 {
            let lambda: f64 = (0..4)
                .map(|t| {
                    let a = q.get(t, w);
                    let b = q.get(t, w2);
                    (a * b + (1.0 - a) * (1.0 - b)) / 4.0
                })
                .sum();
            assert_relative_eq!(
                lambda,
                0.5 * (report.phi[(w, w2)] + 1.0),
                max_relative = 1e-12
            );
        }
    }
}

#[test]
fn instance_sampling_degenerate_cases() {
    let q = ReliabilityMatrix::original(3, 0.9, 0.5).unwrap();
    // Deterministic prior pins every task type.
    let priors = TypePriors::new(vec![1.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]).unwrap();
    let inst = ModelInstance::sample(&q, &priors, 10, 4, None, &mut stream(3)).unwrap();
    assert!(inst.task_types().iter().all(|&t| t == 0));
    assert!(inst.worker_types().iter().all(|&w| w == 0));

    let bad = ModelInstance::sample(&q, &TypePriors::uniform(3), 4, 2, Some(vec![1, -1]), &mut stream(3));
    assert!(bad.is_err());
}

#[test]
fn task_type_frequencies_follow_the_prior() {
    // Law of large numbers at 3 sigma: m = 30000, sigma ~ 0.0027.
    let q = ReliabilityMatrix::original(3, 0.9, 0.5).unwrap();
    let inst =
        ModelInstance::sample(&q, &TypePriors::uniform(3), 30000, 3, None, &mut stream(5)).unwrap();
    for t in 0..3 {
        let freq =
            inst.task_types().iter().filter(|&&x| x == t).count() as f64 / inst.m() as f64;
        assert!((freq - 1.0 / 3.0).abs() < 0.01, "type {t} frequency {freq}");
    }
}

#[test]
fn responses_exist_exactly_on_the_assignment() {
    let q = ReliabilityMatrix::original(2, 0.9, 0.5).unwrap();
    let inst = ModelInstance::sample(&q, &TypePriors::uniform(2), 3, 4, None, &mut stream(8)).unwrap();
    let assignment = Assignment::new(vec![vec![0, 2], vec![], vec![1]], 4).unwrap();
    let resp = ResponseSet::sample(&inst, &assignment, &mut stream(9)).unwrap();
    assert_eq!(resp.num_responses(), 3);
    assert_ne!(resp.get(0, 0), 0);
    assert_ne!(resp.get(0, 2), 0);
    assert_eq!(resp.get(0, 1), 0, "lookup off the assignment returns 0");
    assert_eq!(resp.get(1, 0), 0);
    assert_ne!(resp.get(2, 1), 0);

    let empty = ResponseSet::sample(&inst, &Assignment::new(vec![], 4).unwrap(), &mut stream(9))
        .unwrap();
    assert_eq!(empty.num_responses(), 0);
}

#[test]
fn assignment_rejects_out_of_range_and_duplicates() {
    assert!(Assignment::new(vec![vec![0, 4]], 4).is_err());
    assert!(Assignment::new(vec![vec![1, 1]], 4).is_err());
}

#[test]
fn response_agreement_rate_matches_fidelity() {
    // Monte Carlo frequency against the Bernoulli parameter at Q(t, w) = 0.8:
    // 1e5 draws, 3 sigma ~ 0.0038 < 0.01.
    let q = ReliabilityMatrix::new(2, vec![0.8, 0.8, 0.8, 0.8]).unwrap();
    let labels: Vec<i8> = (0..100_000).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect();
    let inst = ModelInstance::new(q, labels, vec![0; 100_000], vec![0]).unwrap();
    let assignment = Assignment::full(100_000, 1);
    let resp = ResponseSet::sample(&inst, &assignment, &mut stream(17)).unwrap();
    let agree = (0..100_000)
        .filter(|&i| resp.get(i, 0) == inst.labels()[i])
        .count() as f64
        / 100_000.0;
    assert!((agree - 0.8).abs() < 0.01, "agreement {agree}");
}

#[test]
fn planted_types_are_balanced() {
    let w = planted_worker_types(3, 20);
    assert_eq!(w.len(), 60);
    for z in 0..3 {
        assert_eq!(w.iter().filter(|&&x| x == z).count(), 20);
    }
}
