use proptest::prelude::*;
use rug::Float;
use twistlab_core::ball::CertifiedPoint;
use twistlab_core::measures::{interval_measure, sample};
use twistlab_core::SystemSpec;

const SYSTEMS: [&str; 6] = [
    "beta:2",
    "beta:golden",
    "beta:1.9",
    "gauss",
    "ifs:cantor3",
    "rotation:golden",
];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn doubled_precision_refines_orbits(which in 0usize..6, idx in 0u64..10_000, n in 1usize..40) {
        let sys = SystemSpec::parse(SYSTEMS[which]).unwrap();
        let p = sys.initial_precision(n);
        let pt = sample(&sys, 7, idx);
        let coarse = sys.prepare(p);
        let fine = sys.prepare(2 * p);
        let mut a = coarse.orbit(pt.enclosure(&sys, p));
        let mut b = fine.orbit(pt.enclosure(&sys, 2 * p));
        for _ in 0..n {
            let (Ok((ia, ya)), Ok((ib, yb))) = (a.next_step(), b.next_step()) else { break };
            prop_assert_eq!(ia, ib);
            let slack = Float::with_val(64, ya.rad() * 2u32);
            prop_assert!(ya.widen(&slack).overlaps(yb));
        }
    }
}

fn step_factor(sys: &SystemSpec, branch: u64) -> f64 {
    match sys.id() {
        "beta:2" => 2.0,
        "beta:golden" => (1.0 + 5f64.sqrt()) / 2.0,
        "beta:1.9" => 1.9,
        "gauss" => ((branch + 1) * (branch + 1)) as f64,
        "ifs:cantor3" => 3.0,
        _ => 1.0,
    }
}

#[test]
fn radius_growth_respects_expansion() {
    for id in SYSTEMS {
        let sys = SystemSpec::parse(id).unwrap();
        let prec = 200;
        let prep = sys.prepare(prec);
        for i in 0..200 {
            let mut x = sample(&sys, 3, i).enclosure(&sys, 120);
            for _ in 0..10 {
                let Ok((b, y)) = prep.step(&x) else { break };
                if sys.is_gauss() {
                    // 1/x² on branch i lies in [i², (i+1)²].
                    assert!(x.mid_f64() > 1.0 / (b.0 + 1) as f64 && x.mid_f64() <= 1.0 / b.0 as f64);
                }
                // Radii carry 30 bits and round up at each operation; multipliers
                // such as β are balls themselves, hence the additive term.
                let bound = step_factor(&sys, b.0) * x.rad_f64() * (1.0 + 2f64.powi(-26))
                    + 2f64.powi(-(prec as i32) + 60);
                assert!(y.rad_f64() <= bound, "{id}: {} > {bound}", y.rad_f64());
                x = y;
            }
        }
    }
}

#[test]
fn one_step_preserves_the_invariant_histogram() {
    const N: u64 = 100_000;
    const BINS: usize = 20;
    for id in ["beta:2", "beta:golden", "gauss", "ifs:cantor3", "rotation:golden"] {
        let sys = SystemSpec::parse(id).unwrap();
        let prep = sys.prepare(96);
        let (h0, _) = sys.hull();
        let (lo, len) = (h0.to_f64(), sys.diam());
        let mut counts = [0u64; BINS];
        for i in 0..N {
            let x = sample(&sys, 11, i).enclosure(&sys, 80);
            let (_, y) = prep.step(&x).unwrap();
            let b = (((y.mid_f64() - lo) / len) * BINS as f64) as usize;
            counts[b.min(BINS - 1)] += 1;
        }
        for (b, &c) in counts.iter().enumerate() {
            let a = lo + len * b as f64 / BINS as f64;
            let m = interval_measure(&sys, a, a + len / BINS as f64, 20).unwrap();
            let p = m.mid();
            let sigma = (p * (1.0 - p) / N as f64).sqrt().max(1.0 / N as f64);
            let freq = c as f64 / N as f64;
            assert!(
                (freq - p).abs() <= 3.0 * sigma + m.width(),
                "{id} bin {b}: {freq} vs {p}"
            );
        }
    }
}

#[test]
fn exact_points_stay_exact_under_integer_beta() {
    let sys = SystemSpec::parse("beta:2").unwrap();
    let prep = sys.prepare(64);
    let x = CertifiedPoint::from_f64(0.375, 64);
    let (i, y) = prep.step(&x).unwrap();
    assert_eq!(i.0, 0);
    assert!(y.is_exact());
    assert_eq!(y.mid_f64(), 0.75);
}
