use scaledgrad::analysis::{annotate_improvement, gram_eigenpairs, rate_fit};
use scaledgrad::stepsizes::{adjusted_gradient_diversity, grad_scaling, stop_gamma, stops_gamma};
use scaledgrad::{
    contraction_report, eigenvector_start, generate_consistent_linear_system,
    generate_least_squares, improvement_factor, neighborhood_bounds, run, scag_reference_step,
    spectral_constants, BatchSize, EigenSelector, ExperimentRng, FiniteSumProblem, Matrix,
    MomentumSchedule, OptimumInfo, RuleKind, RunConfig, StepRule, TheoremCheck,
};

fn random_point(rng: &mut ExperimentRng, d: usize) -> Vec<f64> {
    (0..d).map(|_| 3.0 * rng.standard_normal()).collect()
}

fn two_sample() -> FiniteSumProblem<f64> {
    let p = FiniteSumProblem::least_squares(
        Matrix::from_rows(&[vec![1.0], vec![1.0]]).unwrap(),
        vec![1.0, -1.0],
    )
    .unwrap();
    let info = OptimumInfo::at(&p, vec![0.0]).unwrap();
    p.with_optimum(info).unwrap()
}

#[test]
fn two_sample_closed_forms() {
    let p = two_sample();
    let opt = p.optimum().unwrap();
    assert_eq!(opt.f_at_opt, 0.5);
    assert_eq!(opt.per_sample_grad_at_opt.as_slice(), &[-1.0, 1.0]);
    let c = spectral_constants(&p).unwrap();
    assert_eq!((c.l, c.mu), (1.0, 1.0));
    let nb = neighborhood_bounds(&p, &c).unwrap();
    assert_eq!(
        (nb.sigma_sq_stop, nb.radius_stop, nb.sigma_sq_grad, nb.radius_grad),
        (0.5, 2.0, 1.0, 16.0)
    );
}

#[test]
fn every_eigenvector_start_converges_in_one_scag_step() {
    let p: FiniteSumProblem<f64> = generate_consistent_linear_system(5, 5, 13, true).unwrap();
    let c = spectral_constants(&p).unwrap();
    let eig = gram_eigenpairs(&p).unwrap();
    for k in 0..5 {
        let x0 = eigenvector_start(&p, EigenSelector::Index(k), 1.0).unwrap();
        for rule in [
            StepRule::new(RuleKind::Stops),
            StepRule::new(RuleKind::Grads).with_eta(1.0 / c.l).with_delta(0.0),
        ] {
            let t = run(&p, &RunConfig::new(rule, 1), &x0).unwrap();
            assert!(t.records[1].dist_sq.sqrt() <= 1e-10, "index {k}");
        }
        // The reference step along eigenvector k is N / λ_k.
        let step = scag_reference_step(&p, &x0).unwrap();
        assert!((step - 5.0 / eig.values[k]).abs() <= 1e-10 * step);
        let gd = run(
            &p,
            &RunConfig::new(StepRule::new(RuleKind::Constant).with_eta(1.0 / c.l_f), 1),
            &x0,
        )
        .unwrap();
        let one_step = gd.records[1].dist_sq.sqrt() <= 1e-10;
        assert_eq!(one_step, k == 4, "index {k}");
    }
}

#[test]
fn reference_step_dominates_constant_step() {
    let mut rng = ExperimentRng::new(17);
    for seed in 0..20 {
        let p: FiniteSumProblem<f64> = generate_consistent_linear_system(30, 6, seed, true).unwrap();
        let c = spectral_constants(&p).unwrap();
        for _ in 0..100 {
            let x = random_point(&mut rng, 6);
            assert!(scag_reference_step(&p, &x).unwrap() >= 1.0 / c.l_f - 1e-12);
        }
    }
    let identity = FiniteSumProblem::least_squares(Matrix::identity(2), vec![0.0, 0.0]).unwrap();
    assert_eq!(scag_reference_step(&identity, &[1.0, -3.0]).unwrap(), 2.0);
}

#[test]
fn improvement_factor_on_smallest_eigenvector() {
    let p: FiniteSumProblem<f64> = generate_consistent_linear_system(5, 2, 1, true).unwrap();
    let c = spectral_constants(&p).unwrap();
    let eig = gram_eigenpairs(&p).unwrap();
    let x0 = eigenvector_start(&p, EigenSelector::Min, 1.0).unwrap();
    let mut t = run(&p, &RunConfig::new(StepRule::new(RuleKind::Stops), 1), &x0).unwrap();
    annotate_improvement(&mut t, &c);
    let expected = eig.values[1] / eig.values[0];
    assert!((t.records[1].improvement - expected).abs() <= 1e-10 * expected);
    assert!(t.records[0].improvement.is_nan());

    // Isotropic spectrum: factor 1 from every start.
    let identity = FiniteSumProblem::least_squares(Matrix::identity(2), vec![0.0, 0.0]).unwrap();
    let info = OptimumInfo::at(&identity, vec![0.0, 0.0]).unwrap();
    let identity = identity.with_optimum(info).unwrap();
    let ci = spectral_constants(&identity).unwrap();
    let t = run(&identity, &RunConfig::new(StepRule::new(RuleKind::Stops), 1), &[0.7, -0.2]).unwrap();
    assert_eq!(improvement_factor(&t, &ci)[1], 1.0);
}

#[test]
fn step_orderings_with_exact_infima() {
    let mut rng = ExperimentRng::new(23);
    let interpolating: FiniteSumProblem<f64> =
        generate_consistent_linear_system(25, 5, 4, true).unwrap();
    let noisy: FiniteSumProblem<f64> = generate_least_squares(25, 5, 5, true, 0.5).unwrap();
    let l = spectral_constants(&noisy).unwrap().l;
    assert!((l - 1.0).abs() < 1e-12);
    for _ in 0..100 {
        let x = random_point(&mut rng, 5);
        let n = 1 + rng.index(10);
        let batch: Vec<usize> = (0..n).map(|_| rng.index(25)).collect();

        let st = interpolating.batch_stats(&x, &batch).unwrap();
        let agd = adjusted_gradient_diversity(&st, 0.0).unwrap();
        assert!(stops_gamma(&st).unwrap() >= agd / l - 1e-10);

        let st = noisy.batch_stats(&x, &batch).unwrap();
        let stop = stop_gamma(&st, st.mean_lower_bound, f64::INFINITY, 0.0).unwrap().gamma;
        let grad = grad_scaling(&st, f64::INFINITY, 0.0).unwrap().gamma;
        assert!(stop >= grad / l - 1e-10 * stop);
    }
}

#[test]
fn stop_noise_is_below_grad_noise() {
    for seed in 0..20 {
        let p: FiniteSumProblem<f64> = generate_least_squares(15, 4, seed, seed % 2 == 0, 0.8).unwrap();
        let c = spectral_constants(&p).unwrap();
        let nb = neighborhood_bounds(&p, &c).unwrap();
        assert!(nb.sigma_sq_stop > 0.0);
        assert!(nb.sigma_sq_stop <= nb.sigma_sq_grad + 1e-12);
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn interpolating_reduction_chain() {
    let p: FiniteSumProblem<f64> = generate_consistent_linear_system(30, 5, 8, true).unwrap();
    let x0 = vec![1.0; 5];
    let k = 40;
    let go = |rule: StepRule<f64>| {
        let cfg = RunConfig::new(rule, k).with_batch(BatchSize::Sampled(3)).with_seed(77);
        run(&p, &cfg, &x0).unwrap()
    };
    let stops = go(StepRule::new(RuleKind::Stops));
    let sps = go(StepRule::new(RuleKind::Sps));
    let stop = go(StepRule::new(RuleKind::Stop).with_delta(0.0));
    for other in [&sps, &stop] {
        for (a, b) in stops.records.iter().zip(&other.records) {
            assert!((a.dist_sq - b.dist_sq).abs() <= 1e-14 * (a.iter as f64 + 1.0) * (1.0 + a.dist_sq));
        }
        assert!(max_abs_diff(&stops.final_x, &other.final_x) <= 1e-14 * k as f64);
    }
    let grads = go(StepRule::new(RuleKind::Grads).with_eta(0.5).with_delta(0.0));
    let grad = go(StepRule::new(RuleKind::Grad).with_eta(0.5).with_delta(0.0));
    assert!(max_abs_diff(&grads.final_x, &grad.final_x) <= 1e-14 * k as f64);
}

#[test]
fn zero_momentum_matches_plain_loop_bitwise() {
    let p: FiniteSumProblem<f64> = generate_least_squares(20, 4, 2, true, 0.3).unwrap();
    let rule = StepRule::new(RuleKind::Grad).with_eta(0.5);
    let base = RunConfig::new(rule, 60).with_batch(BatchSize::Sampled(4)).with_seed(5);
    let plain = run(&p, &base, &[0.5; 4]).unwrap();
    let zero = run(&p, &base.clone().with_momentum(MomentumSchedule::Constant(0.0)), &[0.5; 4]).unwrap();
    assert_eq!(plain.to_csv_string(), zero.to_csv_string());
    assert_eq!(plain.final_x, zero.final_x);
}

#[test]
fn reruns_are_byte_identical() {
    let p: FiniteSumProblem<f64> = generate_least_squares(20, 4, 2, true, 0.3).unwrap();
    let cfg = RunConfig::new(StepRule::new(RuleKind::Stop), 100)
        .with_batch(BatchSize::Sampled(2))
        .with_seed(31);
    let a = run(&p, &cfg, &[0.0; 4]).unwrap();
    let b = run(&p, &cfg, &[0.0; 4]).unwrap();
    assert_eq!(a.to_csv_string(), b.to_csv_string());
    let other = run(&p, &cfg.clone().with_seed(32), &[0.0; 4]).unwrap();
    assert_ne!(a.to_csv_string(), other.to_csv_string());
}

#[test]
fn full_batch_contractions_hold_per_step() {
    let p: FiniteSumProblem<f64> = generate_consistent_linear_system(5, 2, 1, true).unwrap();
    let c = spectral_constants(&p).unwrap();
    let x0 = vec![3.0, -2.0];
    let stops = run(&p, &RunConfig::new(StepRule::new(RuleKind::Stops), 50), &x0).unwrap();
    let report = contraction_report(std::slice::from_ref(&stops), &c, &TheoremCheck::StopsContraction, 1e-10).unwrap();
    assert!(report.passed(), "{report}");
    for w in stops.records.windows(2) {
        if w[0].dist_sq > 1e-20 {
            assert!(w[1].dist_sq < w[0].dist_sq);
        }
    }
    let grads_rule = StepRule::new(RuleKind::Grads).with_eta(1.0 / c.l).with_delta(0.0);
    let grads = run(&p, &RunConfig::new(grads_rule, 50), &x0).unwrap();
    let report = contraction_report(&[grads], &c, &TheoremCheck::GradsContraction, 1e-10).unwrap();
    assert!(report.passed(), "{report}");

    // Empirical rate against the worst-case contraction 1 − μ/L_f.
    let short = run(&p, &RunConfig::new(StepRule::new(RuleKind::Stops), 12), &x0).unwrap();
    let fitted = rate_fit(&short).unwrap();
    assert!(fitted <= 1.0 - c.mu / c.l_f + 1e-6, "{fitted}");
}

#[test]
fn stochastic_grad_enters_its_neighborhood() {
    let p = two_sample();
    let c = spectral_constants(&p).unwrap();
    let nb = neighborhood_bounds(&p, &c).unwrap();
    let rule = StepRule::new(RuleKind::Grad)
        .with_eta(0.5 / c.l)
        .with_cap(scaledgrad::CapMode::Theorem { mu: Some(c.mu), gamma_min: Some(1.0) });
    let trajs: Vec<_> = (0..30)
        .map(|s| {
            let cfg = RunConfig::new(rule.clone(), 200)
                .with_batch(BatchSize::Sampled(1))
                .with_seed(s)
                .with_record_every(20);
            run(&p, &cfg, &[10.0]).unwrap()
        })
        .collect();
    let check = TheoremCheck::GradNeighborhood { gamma_min: 1.0, sigma_sq: nb.sigma_sq_grad };
    let report = contraction_report(&trajs, &c, &check, 0.0).unwrap();
    assert!(report.passed(), "{report}");
}
