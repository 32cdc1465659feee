use twistlab_core::conditions::check_ahlfors;
use twistlab_core::estimators::{
    badic_oracle, classify, cluster_check, corridor, dyadic_pair_oracle, estimate_mu_sweep, estimate_pairwise,
    hit_statistics, sandwich_check, MixingRates,
};
use twistlab_core::measures::sample;
use twistlab_core::{EstimatorOptions, Experiment, HitOutcome, PrecisionPolicy, PsiSpec, SystemSpec, TestPoint, TwistSpec};

fn opts(samples: u64) -> EstimatorOptions {
    EstimatorOptions {
        samples,
        seed: 17,
        ..Default::default()
    }
}

#[test]
fn monte_carlo_agrees_with_the_doubling_oracle() {
    let sys = SystemSpec::parse("beta:2").unwrap();
    let psi = PsiSpec::parse("power:0.05,1").unwrap();
    let ns = [3, 8, 15];
    for f in ["identity", "const:0.3", "affine:1,0.3,mod1"] {
        let f = TwistSpec::parse(f).unwrap();
        let exp = Experiment::new(&sys, &f, &psi);
        let est = estimate_mu_sweep(exp, &ns, &opts(100_000)).unwrap();
        for (e, &n) in est.iter().zip(&ns) {
            let exact = badic_oracle(&sys, &f, &psi, n).unwrap().total.to_f64();
            assert!(e.within_wilson(exact, 3.0), "{} n = {n}: {} vs {exact}", f, e.mean);
        }
    }
}

#[test]
fn hits_lie_between_the_sandwich_balls() {
    let sys = SystemSpec::parse("beta:golden").unwrap();
    let psi = PsiSpec::parse("const:0.2").unwrap();
    for f in ["identity", "affine:1,0.3,mod1", "sqrt"] {
        let f = TwistSpec::parse(f).unwrap();
        let exp = Experiment::new(&sys, &f, &psi);
        let rep = sandwich_check(exp, 6, 0.45, 0.05, &opts(20_000)).unwrap();
        assert!(rep.in_e > 100, "{rep:?}");
        assert_eq!(rep.inner_violations, 0, "{rep:?}");
        assert_eq!(rep.outer_violations, 0, "{rep:?}");
    }
}

#[test]
fn partial_sums_stay_in_the_corridor() {
    let sys = SystemSpec::parse("beta:2").unwrap();
    let ahl = check_ahlfors(&sys, 50, 6, 0).unwrap();
    let (eta1, eta2) = ahl.per_radius(1.0);
    let rates = MixingRates::closed_form(&sys).unwrap();
    let horizon = 256;
    let a_sum: f64 = (1..=horizon).map(|k| rates.get(k).unwrap()).sum();
    for (f, psi) in [("identity", "power:0.1,1"), ("const:0.3", "power:0.1,1"), ("affine:1,0.3,mod1", "power:0.2,1")] {
        let f = TwistSpec::parse(f).unwrap();
        let psi = PsiSpec::parse(psi).unwrap();
        let exp = Experiment::new(&sys, &f, &psi);
        let stats = hit_statistics(exp, horizon, &opts(2_000)).unwrap();
        let s = &stats.summary;
        let c = corridor(s.psi_series_partial, a_sum, eta1, eta2, f.lipschitz_p(), 1.0);
        // The corridor bounds the true sum; allow for the sampling error of the mean.
        let counts: Vec<f64> = stats.records.iter().map(|r| r.hit_times.len() as f64).collect();
        let (mean, se) = twistlab_core::stats::mean_stderr(&counts);
        assert_eq!(mean, s.mean_hits);
        assert!(
            c.lower - 4.0 * se <= mean && mean <= c.upper + 4.0 * se,
            "{f}: {mean} ± {se} not in {c:?}"
        );
    }
}

#[test]
fn pairwise_ratios_stay_bounded() {
    let psi = PsiSpec::parse("power:0.3,1").unwrap();
    let f = TwistSpec::identity();
    for id in ["beta:2", "ifs:cantor3"] {
        let sys = SystemSpec::parse(id).unwrap();
        let rates = MixingRates::closed_form(&sys).unwrap();
        let exp = Experiment::new(&sys, &f, &psi);
        for (m, n) in [(2, 3), (2, 6), (4, 9)] {
            let rep = estimate_pairwise(exp, m, n, &rates, &opts(20_000)).unwrap();
            assert!(rep.ratio < 10.0, "{id} ({m}, {n}): {rep:?}");
        }
    }
}

#[test]
fn dyadic_targets_are_independent() {
    // For dyadic intervals B, C and k ≥ the depth of B, Leb(B ∩ T^{-k} C) = Leb(B) Leb(C).
    let q = |n: i64, d: i64| rug::Rational::from((n, d));
    for k in 3..12 {
        let b = (q(3, 8), q(5, 8));
        let c = (q(1, 16), q(7, 16));
        let joint = dyadic_pair_oracle(2, (&b.0, &b.1), (&c.0, &c.1), k);
        assert_eq!(joint, q(1, 4) * q(3, 8));
    }
}

#[test]
fn estimates_do_not_depend_on_the_worker_count() {
    let sys = SystemSpec::parse("beta:golden").unwrap();
    let f = TwistSpec::parse("affine:1,0.3,mod1").unwrap();
    let psi = PsiSpec::parse("power:0.5,1").unwrap();
    let exp = Experiment::new(&sys, &f, &psi);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| hit_statistics(exp, 64, &opts(500)).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(4));
    assert_eq!(one, run(8));
}

#[test]
fn doubled_precision_never_flips_a_decision() {
    let f = TwistSpec::parse("affine:1,0.3,mod1").unwrap();
    let psi = PsiSpec::parse("power:0.5,1").unwrap();
    let ns: Vec<usize> = (1..=40).collect();
    for id in ["beta:2", "beta:golden", "gauss", "ifs:cantor3"] {
        let sys = SystemSpec::parse(id).unwrap();
        let exp = Experiment::new(&sys, &f, &psi);
        let base = PrecisionPolicy::default();
        let start = base.start(&sys, 40);
        let doubled = PrecisionPolicy {
            initial: Some(2 * start),
            max: Some(32 * start),
        };
        for i in 0..100 {
            let p = TestPoint::Sample(sample(&sys, 23, i));
            let a = classify(exp, &p, &ns, &base).unwrap();
            let b = classify(exp, &p, &ns, &doubled).unwrap();
            for (x, y) in a.iter().zip(&b) {
                let flip = matches!((x, y), (HitOutcome::Hit, HitOutcome::Miss) | (HitOutcome::Miss, HitOutcome::Hit));
                assert!(!flip, "{id} point {i}");
            }
        }
    }
}

#[test]
fn hits_in_one_cylinder_cluster() {
    let sys = SystemSpec::parse("beta:2").unwrap();
    let f = TwistSpec::parse("affine:1,0.3,mod1").unwrap();
    let psi = PsiSpec::parse("const:0.1").unwrap();
    let exp = Experiment::new(&sys, &f, &psi);
    let rep = cluster_check(exp, 6, &opts(20_000)).unwrap();
    assert!(rep.cylinders > 10);
    assert!(rep.max_ratio <= 1.0, "{rep:?}");
}
