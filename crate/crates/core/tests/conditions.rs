use twistlab_core::conditions::{
    check_ahlfors, check_conformality, check_distortion, check_expanding, check_kj_sum, check_pseudo_markov,
    condition_report, mixing_table, ConditionOptions, Evaluation, Method, MixingOptions,
};
use twistlab_core::cylinders::CylinderOptions;
use twistlab_core::SystemSpec;

#[test]
fn piecewise_linear_systems_have_unit_constants() {
    for id in ["beta:2", "beta:golden", "beta:1.9", "ifs:cantor3"] {
        let sys = SystemSpec::parse(id).unwrap();
        let k1 = check_distortion(&sys, 6, 100, 0).unwrap();
        let k2 = check_conformality(&sys, 6, 100, 0).unwrap();
        assert_eq!((k1.value, k1.method), (1.0, Method::ClosedForm), "{id}");
        assert_eq!((k2.value, k2.method), (1.0, Method::ClosedForm), "{id}");
    }
}

#[test]
fn gauss_distortion_is_bounded() {
    let sys = SystemSpec::gauss();
    let k1 = check_distortion(&sys, 6, 1000, 0).unwrap();
    let k2 = check_conformality(&sys, 6, 1000, 0).unwrap();
    assert_eq!(k1.method, Method::GridEstimate);
    // |x'(t)| = 1/(q + t q')² varies by at most (1 + q'/q)² ≤ 4 over the cell.
    assert!(k1.value > 1.0 && k1.value <= 4.0, "{k1:?}");
    assert!(k2.value > 1.0 && k2.value <= 4.0, "{k2:?}");
}

#[test]
fn min_kj_is_a_power_of_beta() {
    for id in ["beta:2", "beta:tribonacci", "beta:1.9"] {
        let sys = SystemSpec::parse(id).unwrap();
        let beta = sys.as_beta().unwrap().beta_f64();
        let rep = check_expanding(&sys, 1..=10, &CylinderOptions::default()).unwrap();
        for o in &rep.orders {
            assert_eq!(o.method, Method::Exhaustive);
            assert!((o.min_kj / beta.powi(o.m as i32) - 1.0).abs() < 1e-12, "{id} m = {}", o.m);
        }
    }
}

#[test]
fn cantor_cylinder_sum_is_one() {
    let sys = SystemSpec::parse("ifs:cantor3").unwrap();
    let rep = check_kj_sum(&sys, 1..=10, &CylinderOptions::default()).unwrap();
    assert_eq!(rep.orders.len(), 10);
    for o in &rep.orders {
        assert!((o.value - 1.0).abs() < 1e-12, "m = {}: {}", o.m, o.value);
    }
    assert!(rep.flags.is_empty());
}

#[test]
fn doubling_map_mixes_exponentially() {
    let sys = SystemSpec::parse("beta:2").unwrap();
    let ns: Vec<usize> = (1..=14).collect();
    let rep = mixing_table(&sys, &ns, &MixingOptions::default()).unwrap();
    assert!(rep.flags.is_empty(), "{:?}", rep.flags);
    for e in &rep.entries {
        assert_eq!(e.evaluation, Evaluation::Exact);
        let bound = 4.0 * 2f64.powi(-(e.n as i32));
        assert!(e.estimate - e.slack <= bound, "n = {}: {}", e.n, e.estimate);
    }
}

#[test]
fn cantor_map_mixes_exponentially() {
    let sys = SystemSpec::parse("ifs:cantor3").unwrap();
    let ns: Vec<usize> = (1..=12).collect();
    let rep = mixing_table(&sys, &ns, &MixingOptions::default()).unwrap();
    for e in &rep.entries {
        assert_eq!(e.evaluation, Evaluation::Exact);
        assert!(e.estimate - e.slack <= 4.0 * 2f64.powi(-(e.n as i32)), "n = {}: {}", e.n, e.estimate);
    }
    let rates = rep.rates(&sys).unwrap();
    assert!(rates.get(1).unwrap() > 0.0);
}

#[test]
fn pseudo_markov_classification() {
    for (id, holds) in [("beta:2", true), ("beta:3", true), ("beta:golden", true), ("gauss", true), ("ifs:cantor3", true)] {
        let sys = SystemSpec::parse(id).unwrap();
        let rep = check_pseudo_markov(&sys).unwrap();
        assert_eq!(rep.holds, holds, "{id}: {rep:?}");
        assert!(rep.tau.unwrap() > 0.0, "{id}");
        assert!(rep.witness.is_none());
    }
    let golden = check_pseudo_markov(&SystemSpec::parse("beta:golden").unwrap()).unwrap();
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    assert!((golden.images[1].hi - 1.0 / phi).abs() < 1e-15);
    // T X₁ = [0, β − 1) meets X₁ without containing it.
    for id in ["beta:tribonacci", "beta:1.9"] {
        let rep = check_pseudo_markov(&SystemSpec::parse(id).unwrap()).unwrap();
        assert!(!rep.holds, "{id}");
        assert_eq!(rep.tau, None);
        assert_eq!(rep.witness, Some((1, 1)), "{id}");
    }
}

#[test]
fn gauss_ball_ratios_match_the_density() {
    // The density 1/((1+x) ln 2) ranges over [1/(2 ln 2), 1/ln 2].
    let sys = SystemSpec::gauss();
    let rep = check_ahlfors(&sys, 100, 8, 0).unwrap();
    let (lo, hi) = (0.5 / std::f64::consts::LN_2, 1.0 / std::f64::consts::LN_2);
    assert!(rep.eta1 >= 0.95 * lo && rep.eta1 <= 1.05 * hi, "{rep:?}");
    assert!(rep.eta2 >= 0.95 * lo && rep.eta2 <= 1.05 * hi, "{rep:?}");
    assert!(rep.eta2 > rep.eta1);
}

#[test]
fn lebesgue_balls_are_exact() {
    let sys = SystemSpec::parse("beta:2").unwrap();
    let rep = check_ahlfors(&sys, 50, 6, 0).unwrap();
    let (e1, e2) = rep.per_radius(1.0);
    assert!((e1 - 2.0).abs() < 1e-9 && (e2 - 2.0).abs() < 1e-9, "{rep:?}");
}

#[test]
fn rotations_fail_the_dynamical_conditions() {
    let sys = SystemSpec::parse("rotation:golden").unwrap();
    let opts = ConditionOptions {
        ahlfors_centers: 20,
        ahlfors_radii: 4,
        mixing_orders: 6,
        max_order: 6,
        distortion_samples: 100,
        ..Default::default()
    };
    let rep = condition_report(&sys, &opts).unwrap();
    assert_eq!(rep.distortion_k1.value, 1.0);
    assert_eq!(rep.conformality_k2.value, 1.0);
    assert!(!rep.expanding_min_kj.increasing);
    assert!(!rep.pseudo_markov.holds);
    let text = rep.flags.join("\n");
    assert!(text.contains("expanding condition fails"), "{text}");
    assert!(text.contains("uniform mixing fails"), "{text}");
    assert!(text.contains("pseudo-Markov fails"), "{text}");
}
