use qmalab::algebra::random::seeded_rng;
use qmalab::algebra::{eigh, Operator, StateVector};
use qmalab::amplifiers::{
    amplify_new, amplify_prob_trunc, fit_completeness_error, prob_trunc_rejection_closed_form,
    prob_trunc_sweep, truncation_law_fit, witness_truncation_check,
    witness_truncation_sweep, ProbTruncVerifier,
    TruncationParams,
};
use qmalab::constructions::build_c2;
use qmalab::verifier::{accept_povm, optimal_witness, Verifier};

const C: f64 = 2.0 / 3.0;
const S: f64 = 1.0 / 3.0;

fn base(spectrum: &[f64], seed: u64) -> Verifier {
    Verifier::with_spectrum(1, 1, spectrum, C, S, &mut seeded_rng(seed)).unwrap()
}

#[test]
fn new_amplifier_meets_targets() {
    let yes = base(&[0.75, 0.2], 1);
    let no = base(&[S, 0.1], 2);
    for q in [8, 12, 16, 20] {
        let (av, r) = amplify_new(&yes, q).unwrap();
        let err = 1.0 - r.completeness_measured.unwrap();
        assert!(err <= 2f64.powi(-(q as i32)) + 1e-9, "q = {q}: {err}");
        assert!(r.completeness_residual_log2.unwrap() <= -(q as f64));
        let params = TruncationParams::for_delta(q, 1.0 / 12.0).unwrap();
        assert_eq!(av.counter_dim(), params.dim);
        assert!(err <= 2f64.powf(params.centered_residual_log2()) + 1e-9);
        let (_, r) = amplify_new(&no, q).unwrap();
        assert!(r.soundness_measured.unwrap() <= r.soundness_bound + 1e-9);
    }
}

#[test]
fn zero_target_keeps_base_completeness() {
    let yes = base(&[0.7, 0.2], 3);
    let (av, r) = amplify_new(&yes, 0).unwrap();
    assert_eq!(av.counter_dim(), 2);
    assert!(r.completeness_measured.unwrap() >= 0.25 + 1.0 / 12.0 - 1e-9);
}

#[test]
fn doubly_exponential_target_by_residual() {
    let yes = base(&[0.7, 0.2], 4);
    let (av, r) = amplify_new(&yes, 1024).unwrap();
    assert_eq!(av.counter_dim(), 2048);
    assert!(r.completeness_residual_log2.unwrap() <= -1024.0);
    assert!(1.0 - r.completeness_measured.unwrap() <= 1e-12);
}

#[test]
fn prob_trunc_exact_claim_accepts() {
    let mut rng = seeded_rng(5);
    for _ in 0..10 {
        let p = 0.5 + 0.5 * rand::Rng::random::<f64>(&mut rng);
        let v = Verifier::with_top_eigenvalue(2, 1, p, 0.6, 0.4, &mut rng).unwrap();
        let (p, w) = optimal_witness(&v).unwrap();
        let pt = ProbTruncVerifier::new(&v, 8).unwrap();
        assert!(pt.rejection_at(p, &w).unwrap() <= 1e-9);
    }
}

#[test]
fn prob_trunc_matches_closed_form() {
    let v = base(&[0.8, 0.3], 6);
    let pt = ProbTruncVerifier::new(&v, 6).unwrap();
    let e = eigh(&accept_povm(&v)).unwrap();
    for k in 32..64 {
        for j in 0..2 {
            let direct = pt.rejection(k, &e.vector(j)).unwrap();
            let formula = prob_trunc_rejection_closed_form(e.values[j], pt.decode(k));
            assert!((direct - formula).abs() < 1e-12);
        }
    }
}

#[test]
fn prob_trunc_dense_and_blockwise_agree() {
    let v = Verifier::haar(1, 1, 0.6, 0.4, &mut seeded_rng(7)).unwrap();
    let pt = ProbTruncVerifier::new(&v, 3).unwrap();
    let dense = pt.dense_rejection_povm().unwrap();
    let wd = 2;
    for k in 0..8 {
        let block = if k < 4 {
            Operator::identity(wd)
        } else {
            pt.rejection_block(pt.decode(k)).unwrap()
        };
        for r in 0..wd {
            for c in 0..wd {
                let d = dense.matrix()[(k * wd + r, k * wd + c)] - block.matrix()[(r, c)];
                assert!(d.norm() < 1e-12);
            }
        }
    }
    let w = StateVector::basis(16, 13);
    let direct = pt.rejection(6, &StateVector::basis(2, 1)).unwrap();
    assert!((dense.expectation(&w).unwrap() - direct).abs() < 1e-12);
}

#[test]
fn prob_trunc_error_decays_with_bits() {
    let p = 0.5 + 1.0 / (2.0 * std::f64::consts::PI);
    let v = base(&[p, 0.2], 8);
    let grid: Vec<u32> = (4..=16).collect();
    let points = prob_trunc_sweep(&v, &grid).unwrap();
    let down: Vec<(u32, f64)> = points.iter().map(|p| (p.q_bits, p.rejection_down)).collect();
    let fit = fit_completeness_error(&down).unwrap();
    for &(q, e) in &down {
        assert!(e <= fit.constant * 2f64.powi(-(q as i32)) + 1e-15);
    }
    assert!(fit.line.unwrap().slope <= -1.0);
}

#[test]
fn prob_trunc_soundness_over_grid() {
    let delta = 0.1;
    let v = Verifier::with_top_eigenvalue(1, 1, 0.5 - delta, 0.6, 0.4, &mut seeded_rng(9)).unwrap();
    let pt = ProbTruncVerifier::new(&v, 10).unwrap();
    for k in 0..pt.levels() {
        let min_rej = if k < pt.levels() / 2 {
            1.0
        } else {
            pt.min_rejection_at(pt.decode(k)).unwrap()
        };
        assert!(min_rej >= 4.0 * delta * delta - 1e-9, "k = {k}");
    }
    let (_, r) = amplify_prob_trunc(&v, 6).unwrap();
    assert!(r.soundness_measured.unwrap() <= r.soundness_bound + 1e-9);
}

#[test]
fn witness_truncation_edge_cases() {
    // m = log D − 1 with ℓ = 1 offers every counter value the full optimum uses.
    let v = base(&[0.2, 0.05], 10);
    let av = build_c2(&v, 32).unwrap();
    let t = witness_truncation_check(&av, 4, 1).unwrap();
    assert!(t.drop >= 0.0 && t.drop <= t.explicit_bound);
    assert!(witness_truncation_check(&av, 5, 1).is_err());
    assert!(witness_truncation_check(&build_c2(&v, 24).unwrap(), 4, 1).is_err());

    // A geometric optimum that already fits in 2^m levels loses only its tail.
    let yes = base(&[0.9, 0.2], 11);
    let av = build_c2(&yes, 64).unwrap();
    let t = witness_truncation_check(&av, 5, 1).unwrap();
    let g = (1.0 - 1.0 / (2.0 * 0.9f64)).abs();
    assert!(t.drop <= g.powi(31) + 1e-9);
}

#[test]
fn witness_truncation_drop_within_explicit_bound() {
    let v = Verifier::with_top_eigenvalue(1, 1, 0.2, 0.9, 0.1, &mut seeded_rng(12)).unwrap();
    let av = build_c2(&v, 128).unwrap();
    let points = witness_truncation_sweep(&av, &[4, 5, 6], 1).unwrap();
    for p in &points {
        assert!(p.drop <= p.explicit_bound, "{p:?}");
    }
    let fit = truncation_law_fit(&points).unwrap();
    assert!(fit.line.slope < 0.0);
}
