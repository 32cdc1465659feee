//! Acceptance run: one `[PASS]` or `[FAIL]` line per criterion.
//!
//! Failing criteria are reported, not hidden. The process exits 0 so that the
//! rest of the workspace suite still runs; set `TWISTLAB_ACCEPTANCE_STRICT=1`
//! to turn any failure into a non-zero exit.

use std::collections::HashSet;
use std::process::Command;
use std::time::{Duration, Instant};

use rug::Rational;
use twistlab_core::conditions::{
    check_ahlfors, check_kj_sum, check_pseudo_markov, condition_report, mixing_table,
    ConditionOptions, MixingOptions,
};
use twistlab_core::cylinders::{cylinder_of_word, cylinders_of_order, full_subcylinder, CylinderOptions};
use twistlab_core::estimators::{
    badic_oracle, classify, dyadic_pair_oracle, estimate_mu_sweep, estimate_pairwise_grid, hit_statistics, verdict,
    MixingRates, Thresholds,
};
use twistlab_core::measures::sample;
use twistlab_core::{EstimatorOptions, Experiment, HitOutcome, PrecisionPolicy, PsiSpec, SystemSpec, TestPoint, TwistSpec};

/// Ceiling for `μ̂(A_m ∩ A_n) / bound` over the quasi-independence grid.
/// First run (seed 5, 20000 samples): 5.874 on beta:2, 1.125 on cantor3. The
/// doubling map's marginals are `2ψ(n)`, so ratios near 4 are the baseline.
const PINNED_QI_RATIO: f64 = 8.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn opts(samples: u64, seed: u64) -> EstimatorOptions {
    EstimatorOptions {
        samples,
        seed,
        ..Default::default()
    }
}

fn parse3(sys: &str, f: &str, psi: &str) -> (SystemSpec, TwistSpec, PsiSpec) {
    (
        SystemSpec::parse(sys).unwrap(),
        TwistSpec::parse(f).unwrap(),
        PsiSpec::parse(psi).unwrap(),
    )
}

fn doubling_oracle() -> Outcome {
    let start = Instant::now();
    let (sys, f, psi) = parse3("beta:2", "identity", "power:0.01,1");
    let ns = [5, 10, 15];
    let est = estimate_mu_sweep(Experiment::new(&sys, &f, &psi), &ns, &opts(100_000, 1)).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for (e, &n) in est.iter().zip(&ns) {
        let exact = badic_oracle(&sys, &f, &psi, n).unwrap().total.to_f64();
        ok &= e.within_wilson(exact, 3.0);
        parts.push(format!("n={n}: {:.3e} vs {exact:.3e}", e.mean));
    }
    let t = start.elapsed();
    ok &= t < Duration::from_secs(30);
    outcome(ok, format!("{}; {:.1}s", parts.join(", "), t.as_secs_f64()))
}

fn shrinking_target() -> Outcome {
    let r = 0.05;
    let (sys, f, psi) = parse3("beta:2", "const:0.3", "const:0.05");
    let ns: Vec<usize> = (5..=20).collect();
    let est = estimate_mu_sweep(Experiment::new(&sys, &f, &psi), &ns, &opts(100_000, 2)).unwrap();
    let p = 2.0 * r;
    let sigma = (p * (1.0 - p) / 100_000.0f64).sqrt();
    let worst = est.iter().map(|e| (e.mean - p).abs() / sigma).fold(0.0, f64::max);
    outcome(worst <= 3.0, format!("max |μ̂ − 2r| = {worst:.2}σ over n = 5..20"))
}

fn series_dichotomy() -> Outcome {
    let start = Instant::now();
    let horizon = 1 << 12;
    let run = |psi: &str| {
        let (sys, f, psi) = parse3("beta:golden", "affine:1,0.3,mod1", psi);
        hit_statistics(Experiment::new(&sys, &f, &psi), horizon, &opts(1000, 3)).unwrap().summary
    };
    let div = run("power:0.5,1");
    let conv = run("power:1,1.5");
    let t = start.elapsed();
    let ok = div.tail_fraction >= 0.9 && conv.tail_fraction_upper <= 0.05 && t < Duration::from_secs(300);
    outcome(
        ok,
        format!(
            "divergent tail share {:.3} (need ≥ 0.9), convergent {:.3} (need ≤ 0.05); {:.0}s",
            div.tail_fraction,
            conv.tail_fraction_upper,
            t.as_secs_f64()
        ),
    )
}

fn corridor_sums() -> Outcome {
    let horizon = 1 << 10;
    let (sys, f, psi) = parse3("beta:2", "identity", "power:0.1,1");
    let s = hit_statistics(Experiment::new(&sys, &f, &psi), horizon, &opts(2000, 4)).unwrap().summary;
    let target = 2.0 * psi.series_partial(1.0, horizon as u64);
    let rel = (s.mean_hits - target).abs() / target;
    outcome(rel <= 0.25, format!("Σμ̂ = {:.4}, 2Σψ = {target:.4}, relative gap {rel:.3}", s.mean_hits))
}

fn quasi_independence() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for id in ["beta:2", "ifs:cantor3"] {
        let (sys, f, psi) = parse3(id, "identity", "power:0.5,1");
        let rates = MixingRates::closed_form(&sys).unwrap();
        let reps = estimate_pairwise_grid(Experiment::new(&sys, &f, &psi), 10, 40, &rates, &opts(20_000, 5)).unwrap();
        let m = reps.iter().map(|r| r.ratio).fold(0.0, f64::max);
        parts.push(format!("{id} max ratio {m:.3}"));
        worst = worst.max(m);
    }
    // Dyadic targets B_m = B(1/2, 2^{-j}) with j = 2 + m/8: once n − m ≥ j the
    // joint measure factors exactly.
    let q = |n: i64, d: i64| Rational::from((n, d));
    let ball = |m: usize| {
        let j = 2 + m / 8;
        let r = Rational::from((1, 1u64 << j));
        ((q(1, 2) - &r), (q(1, 2) + &r), j)
    };
    let mut exact_pairs = 0;
    let mut exact = true;
    for m in 10..40 {
        for n in m + 1..=40 {
            let (b0, b1, j) = ball(m);
            if n - m < j {
                continue;
            }
            let (c0, c1, _) = ball(n);
            let joint = dyadic_pair_oracle(2, (&b0, &b1), (&c0, &c1), (n - m) as u32);
            let product = Rational::from(&b1 - &b0) * Rational::from(&c1 - &c0);
            exact &= joint == product;
            exact_pairs += 1;
        }
    }
    outcome(
        worst < PINNED_QI_RATIO && exact,
        format!(
            "{}; pinned bound {PINNED_QI_RATIO}; dyadic joint = product on {exact_pairs} pairs: {exact}",
            parts.join(", ")
        ),
    )
}

fn fib(n: usize) -> usize {
    let (mut a, mut b) = (0, 1);
    for _ in 0..n {
        (a, b) = (b, a + b);
    }
    a
}

fn parry_cylinders() -> Outcome {
    let o = CylinderOptions::default();
    let mut failures = Vec::new();
    let golden = SystemSpec::parse("beta:golden").unwrap();
    let phi = golden.as_beta().unwrap().beta_f64();
    for m in 1..=20 {
        let set = cylinders_of_order(&golden, m, &o).unwrap();
        if set.len() != fib(m + 2) {
            failures.push(format!("golden count at m={m}"));
        }
        if (set.total_length() - 1.0).abs() > 1e-12 {
            failures.push(format!("golden length sum at m={m}"));
        }
        for c in &set.cylinders {
            let full_len = (c.geom.length() * phi.powi(m as i32) - 1.0).abs() < 1e-9;
            if c.geom.is_full != Some(full_len) {
                failures.push(format!("fullness of {}", c.word));
            }
        }
    }
    for id in ["beta:golden", "beta:tribonacci", "beta:1.9"] {
        let sys = SystemSpec::parse(id).unwrap();
        let beta = sys.as_beta().unwrap().beta_f64();
        for m in 1..=12 {
            let set = cylinders_of_order(&sys, m, &o).unwrap();
            if (set.total_length() - 1.0).abs() > 1e-12 {
                failures.push(format!("{id} length sum at m={m}"));
            }
            for c in &set.cylinders {
                let sub = full_subcylinder(&sys, &c.word).unwrap();
                let g = cylinder_of_word(&sys, &sub, &o).unwrap().unwrap();
                if g.is_full != Some(true) || g.length() < c.geom.length() / beta * (1.0 - 1e-12) {
                    failures.push(format!("{id}: full subcylinder of {}", c.word));
                }
            }
        }
    }
    outcome(
        failures.is_empty(),
        if failures.is_empty() {
            "Fibonacci counts to m=20, length sums, full subcylinders to m=12".to_string()
        } else {
            format!("{} failures, first: {}", failures.len(), failures[0])
        },
    )
}

fn conditions_suite() -> Outcome {
    let mut failures = Vec::new();
    for id in ["beta:2", "beta:3", "beta:golden", "beta:tribonacci", "gauss"] {
        let rep = check_pseudo_markov(&SystemSpec::parse(id).unwrap()).unwrap();
        if !rep.holds {
            failures.push(format!("pseudo-Markov fails for {id} (witness {:?})", rep.witness));
        }
    }
    let b19 = check_pseudo_markov(&SystemSpec::parse("beta:1.9").unwrap()).unwrap();
    if b19.holds || b19.witness.is_none() {
        failures.push("beta:1.9 not rejected with a witness".into());
    }
    let cantor = SystemSpec::parse("ifs:cantor3").unwrap();
    let kj = check_kj_sum(&cantor, 1..=10, &CylinderOptions::default()).unwrap();
    if kj.orders.len() != 10 || kj.orders.iter().any(|o| (o.value - 1.0).abs() > 1e-12) {
        failures.push("cantor3 cylinder sum differs from 1".into());
    }
    let ns: Vec<usize> = (1..=12).collect();
    let mix = mixing_table(&cantor, &ns, &MixingOptions::default()).unwrap();
    if let Some(e) = mix.entries.iter().find(|e| e.estimate - e.slack > 4.0 * 2f64.powi(-(e.n as i32))) {
        failures.push(format!("cantor3 mixing at n={}: {}", e.n, e.estimate));
    }
    let gauss = SystemSpec::gauss();
    let (lo, hi) = (0.5 / std::f64::consts::LN_2, 1.0 / std::f64::consts::LN_2);
    let mut last = (0.0, 0.0);
    for (centers, radii) in [(50, 4), (100, 8), (200, 12)] {
        let a = check_ahlfors(&gauss, centers, radii, 7).unwrap();
        last = (a.eta1, a.eta2);
    }
    if (last.0 / lo - 1.0).abs() > 0.05 || (last.1 / hi - 1.0).abs() > 0.05 {
        failures.push(format!("Gauss ball ratios {last:?}"));
    }
    outcome(
        failures.is_empty(),
        if failures.is_empty() {
            format!("Gauss ball ratios ({:.4}, {:.4})", last.0, last.1)
        } else {
            failures.join("; ")
        },
    )
}

fn rotation_counterexample() -> Outcome {
    let horizon = 1 << 14;
    let (sys, f, psi) = parse3("rotation:golden", "identity", "power:0.2,1");
    // d(T^n x, x) = ‖nα‖ for every x, so the hit set is {n : n‖nα‖ < 0.2},
    // empty for the golden rotation since n‖nα‖ stays near 1/√5 or above.
    let alpha = (5f64.sqrt() - 1.0) / 2.0;
    let prefix: Vec<usize> = (1..=horizon)
        .filter(|&n| {
            let t = n as f64 * alpha;
            n as f64 * (t - t.round()).abs() < 0.2
        })
        .collect();
    let stats = hit_statistics(Experiment::new(&sys, &f, &psi), horizon, &opts(200, 8)).unwrap();
    let same = stats.records.iter().all(|r| r.hit_times == stats.records[0].hit_times);
    let within = stats.records[0].hit_times.iter().all(|n| prefix.contains(n));
    let cond = condition_report(
        &sys,
        &ConditionOptions {
            ahlfors_centers: 20,
            ahlfors_radii: 4,
            mixing_orders: 6,
            max_order: 8,
            distortion_samples: 100,
            ..Default::default()
        },
    )
    .unwrap();
    let expanding_flagged = cond.flags.iter().any(|f| f.contains("expanding condition fails"));
    let v = verdict(Experiment::new(&sys, &f, &psi), 1 << 10, Thresholds::default(), &opts(200, 8)).unwrap();
    let na = v.flags.iter().any(|f| f == "zero_one_law_not_applicable");
    outcome(
        same && within && expanding_flagged && na,
        format!(
            "hit times {:?} (allowed prefix {:?}), identical across points: {same}, expanding flagged: {expanding_flagged}, verdict {:?} flagged: {na}",
            stats.records[0].hit_times, prefix, v.verdict
        ),
    )
}

fn engineering_invariants() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_twistlab");
    let run = |threads: &str, cmd: &str| {
        let o = Command::new(bin)
            .args([
                "--threads", threads, "--samples", "2000", "--seed", "11",
                "--set", "experiment.system=beta:golden",
                "--set", "experiment.twist=affine:1,0.3,mod1",
                "--set", "experiment.psi=power:0.5,1",
                "--set", "experiment.horizon=128",
                "--set", "measure.ns=1-40",
                cmd,
            ])
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        o.stdout
    };
    let mut identical = true;
    for cmd in ["measure", "hits"] {
        let one = run("1", cmd);
        identical &= one == run("4", cmd) && one == run("8", cmd);
    }
    let f = TwistSpec::parse("affine:1,0.3,mod1").unwrap();
    let psi = PsiSpec::parse("power:0.5,1").unwrap();
    let ns: Vec<usize> = (1..=40).collect();
    let mut flips = 0;
    let mut decided = HashSet::new();
    for id in ["beta:2", "beta:golden", "gauss", "ifs:cantor3"] {
        let sys = SystemSpec::parse(id).unwrap();
        let exp = Experiment::new(&sys, &f, &psi);
        let base = PrecisionPolicy::default();
        let start = base.start(&sys, 40);
        let doubled = PrecisionPolicy {
            initial: Some(2 * start),
            max: Some(32 * start),
        };
        for i in 0..250 {
            let p = TestPoint::Sample(sample(&sys, 29, i));
            let a = classify(exp, &p, &ns, &base).unwrap();
            let b = classify(exp, &p, &ns, &doubled).unwrap();
            for (x, y) in a.iter().zip(&b) {
                if matches!((x, y), (HitOutcome::Hit, HitOutcome::Miss) | (HitOutcome::Miss, HitOutcome::Hit)) {
                    flips += 1;
                }
            }
            decided.insert((id, i));
        }
    }
    outcome(
        identical && flips == 0,
        format!(
            "outputs identical across 1/4/8 workers: {identical}; {flips} flips over {} points × 40 steps",
            decided.len()
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("doubling-map oracle equivalence", doubling_oracle),
        ("shrinking-target closed form", shrinking_target),
        ("series dichotomy at desk scale", series_dichotomy),
        ("partial-sum corridor", corridor_sums),
        ("quasi-independence", quasi_independence),
        ("Parry and cylinder suite", parry_cylinders),
        ("conditions suite", conditions_suite),
        ("rotation counterexample", rotation_counterexample),
        ("engineering invariants", engineering_invariants),
    ];
    let only: Option<usize> = std::env::var("TWISTLAB_ACCEPTANCE_ONLY").ok().and_then(|s| s.parse().ok());
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let k = i + 1;
        if only.is_some_and(|o| o != k) {
            continue;
        }
        let o = check();
        println!("[{}] {k}. {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed.push(k);
        }
    }
    println!("acceptance: {} failing: {failed:?}", if failed.is_empty() { "all pass;" } else { "some criteria fail;" });
    if !failed.is_empty() && std::env::var_os("TWISTLAB_ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
