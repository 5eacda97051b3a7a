use proptest::prelude::*;

use scaledgrad::linalg::norm_sq;
use scaledgrad::problems::CorrectedStats;
use scaledgrad::stepsizes::{adjusted_gradient_diversity, plain_gradient_diversity};
use scaledgrad::{
    decide, generate_least_squares, generate_logistic, BatchStats, ExperimentRng,
    FiniteSumProblem, OptimumInfo, RuleKind, StepRule,
};

/// Batch statistics assembled directly from explicit per-sample gradients
/// `grads` and shifts `shifts`.
fn stats(grads: &[Vec<f64>], shifts: &[Vec<f64>]) -> BatchStats<f64> {
    let n = grads.len() as f64;
    let d = grads[0].len();
    let mean = |vs: &[Vec<f64>]| -> Vec<f64> {
        (0..d).map(|j| vs.iter().map(|v| v[j]).sum::<f64>() / n).collect()
    };
    let mean_sq = |vs: &[Vec<f64>]| vs.iter().map(|v| norm_sq(v)).sum::<f64>() / n;
    let corrected: Vec<Vec<f64>> = grads
        .iter()
        .zip(shifts)
        .map(|(g, s)| g.iter().zip(s).map(|(a, b)| a - b).collect())
        .collect();
    let g_mean = mean(grads);
    let c_mean = mean(&corrected);
    BatchStats {
        n: grads.len(),
        mean_grad_norm_sq: norm_sq(&g_mean),
        mean_grad: g_mean,
        mean_sq_norm: mean_sq(grads),
        mean_value: 0.0,
        mean_lower_bound: 0.0,
        corrected: Some(CorrectedStats {
            mean_grad_norm_sq: norm_sq(&c_mean),
            mean_grad: c_mean,
            mean_sq_norm: mean_sq(&corrected),
            mean_gap: 0.0,
            mean_value_at_opt: 0.0,
        }),
    }
}

fn vectors(n: usize, d: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-10.0f64..10.0, d), n)
}

fn batch_pair() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    (1usize..8, 1usize..6).prop_flat_map(|(n, d)| (vectors(n, d), vectors(n, d)))
}

proptest! {
    #[test]
    fn diversities_are_at_least_one((grads, shifts) in batch_pair()) {
        let st = stats(&grads, &shifts);
        if st.mean_grad_norm_sq > 1e-12 {
            prop_assert!(plain_gradient_diversity(&st, 0.0).unwrap() >= 1.0 - 1e-12);
        }
        if st.corrected.as_ref().unwrap().mean_grad_norm_sq > 1e-12 {
            prop_assert!(adjusted_gradient_diversity(&st, 0.0).unwrap() >= 1.0 - 1e-12);
        }
    }

    #[test]
    fn single_sample_diversity_is_one(g in vectors(1, 4), s in vectors(1, 4)) {
        let st = stats(&g, &s);
        prop_assume!(st.mean_grad_norm_sq > 0.0);
        prop_assert!((plain_gradient_diversity(&st, 0.0).unwrap() - 1.0).abs() <= 1e-15);
    }

    #[test]
    fn identical_gradients_have_unit_diversity(g in vectors(1, 3), n in 2usize..6) {
        let grads = vec![g[0].clone(); n];
        let st = stats(&grads, &vec![vec![0.0; 3]; n]);
        prop_assume!(st.mean_grad_norm_sq > 1e-12);
        prop_assert!((plain_gradient_diversity(&st, 0.0).unwrap() - 1.0).abs() <= 1e-12);
        prop_assert!((adjusted_gradient_diversity(&st, 0.0).unwrap() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn diversities_are_scale_invariant((grads, shifts) in batch_pair(), t in 0.01f64..100.0) {
        let st = stats(&grads, &shifts);
        prop_assume!(st.mean_grad_norm_sq > 1e-6);
        prop_assume!(st.corrected.as_ref().unwrap().mean_grad_norm_sq > 1e-6);
        let scale = |vs: &[Vec<f64>]| -> Vec<Vec<f64>> {
            vs.iter().map(|v| v.iter().map(|c| c * t).collect()).collect()
        };
        let scaled = stats(&scale(&grads), &scale(&shifts));
        let a = plain_gradient_diversity(&st, 0.0).unwrap();
        let b = plain_gradient_diversity(&scaled, 0.0).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a);
        let a = adjusted_gradient_diversity(&st, 0.0).unwrap();
        let b = adjusted_gradient_diversity(&scaled, 0.0).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a);
    }

    #[test]
    fn caps_only_ever_lower_the_step((grads, shifts) in batch_pair(), cap in 0.0f64..5.0) {
        let st = stats(&grads, &shifts);
        prop_assume!(st.mean_grad_norm_sq > 1e-12);
        let rule = StepRule::new(RuleKind::Grad).with_delta(0.0);
        let dec = decide(&rule, &st, cap).unwrap();
        prop_assert!(dec.gamma <= dec.raw_gamma);
        prop_assert!(dec.gamma <= cap);
        if dec.raw_gamma <= cap {
            prop_assert_eq!(dec.gamma, dec.raw_gamma);
        }
    }
}

/// 1000 random minibatches drawn from both problem families.
#[test]
fn diversity_bound_on_problem_batches() {
    let ls: FiniteSumProblem<f64> = generate_least_squares(60, 8, 2, true, 0.5).unwrap();
    let logit: FiniteSumProblem<f64> = generate_logistic(60, 8, 3, true, 0.2).unwrap();
    let reference = vec![0.3; 8];
    let info = OptimumInfo::at(&logit, reference).unwrap();
    let logit = logit.with_optimum(info).unwrap();
    let mut rng = ExperimentRng::new(99);
    let mut checked = 0;
    for k in 0..1000 {
        let p = if k % 2 == 0 { &ls } else { &logit };
        let x: Vec<f64> = (0..8).map(|_| rng.standard_normal()).collect();
        let n = 1 + rng.index(12);
        let batch: Vec<usize> = (0..n).map(|_| rng.index(60)).collect();
        let st = p.batch_stats(&x, &batch).unwrap();
        if st.mean_grad_norm_sq > 0.0 {
            let pgd = plain_gradient_diversity(&st, 0.0).unwrap();
            assert!(pgd >= 1.0 - 1e-12);
            if n == 1 {
                assert!((pgd - 1.0).abs() <= 1e-12);
            }
        }
        if st.corrected.as_ref().unwrap().mean_grad_norm_sq > 0.0 {
            assert!(adjusted_gradient_diversity(&st, 0.0).unwrap() >= 1.0 - 1e-12);
        }
        checked += 1;
    }
    assert_eq!(checked, 1000);
}
