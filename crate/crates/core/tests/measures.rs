use twistlab_core::measures::{ball_measure, density, interval_measure, sample};
use twistlab_core::SystemSpec;

const SYSTEMS: [&str; 6] = [
    "beta:2",
    "beta:golden",
    "beta:tribonacci",
    "gauss",
    "ifs:cantor3",
    "rotation:golden",
];

/// Composite Simpson on `[a, b]` with `n` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n)
        .map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 })
        .sum();
    h / 3.0 * (f(a) + f(b) + inner)
}

#[test]
fn densities_integrate_to_one() {
    let gauss = SystemSpec::gauss();
    let total = simpson(|x| density(&gauss, x).unwrap(), 0.0, 1.0, 2000);
    assert!((total - 1.0).abs() < 1e-12, "{total}");
    // The Rényi density is a step function; integrate between its breakpoints.
    for id in ["beta:golden", "beta:tribonacci"] {
        let sys = SystemSpec::parse(id).unwrap();
        let b = sys.as_beta().unwrap();
        let mut cuts: Vec<f64> = b.levels().iter().map(|(s, _)| *s).filter(|s| *s > 0.0 && *s < 1.0).collect();
        cuts.extend([0.0, 1.0]);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let total: f64 = cuts
            .windows(2)
            .map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                density(&sys, mid).unwrap() * (w[1] - w[0])
            })
            .sum();
        assert!((total - 1.0).abs() < 1e-12, "{id}: {total}");
    }
}

#[test]
fn whole_space_has_mass_one() {
    for id in SYSTEMS {
        let sys = SystemSpec::parse(id).unwrap();
        let (a, b) = sys.hull();
        let m = interval_measure(&sys, a.to_f64(), b.to_f64(), 20).unwrap();
        assert!(m.contains(1.0), "{id}: {m:?}");
        assert!(m.width() < 1e-12, "{id}: {m:?}");
    }
}

#[test]
fn adjacent_intervals_add() {
    for id in SYSTEMS {
        let sys = SystemSpec::parse(id).unwrap();
        for (a, c, b) in [(0.1, 0.35, 0.6), (0.0, 0.5, 1.0), (0.21, 0.22, 0.9)] {
            let left = interval_measure(&sys, a, c, 24).unwrap();
            let right = interval_measure(&sys, c, b, 24).unwrap();
            let whole = interval_measure(&sys, a, b, 24).unwrap();
            assert!(whole.low <= left.high + right.high + 1e-15, "{id}");
            assert!(whole.high >= left.low + right.low - 1e-15, "{id}");
        }
    }
}

#[test]
fn sample_frequencies_fall_in_brackets() {
    const N: u64 = 100_000;
    let tests = [(0.0, 0.1), (0.3, 0.7), (0.61, 0.62), (0.9, 1.0)];
    for id in SYSTEMS {
        let sys = SystemSpec::parse(id).unwrap();
        let xs: Vec<f64> = (0..N).map(|i| sample(&sys, 5, i).enclosure(&sys, 64).mid_f64()).collect();
        for &(a, b) in &tests {
            let m = interval_measure(&sys, a, b, 24).unwrap();
            let freq = xs.iter().filter(|&&x| a <= x && x <= b).count() as f64 / N as f64;
            let p = m.mid();
            let sigma = (p * (1.0 - p) / N as f64).sqrt().max(1.0 / N as f64);
            assert!(
                freq >= m.low - 4.0 * sigma && freq <= m.high + 4.0 * sigma,
                "{id} [{a}, {b}]: {freq} vs {m:?}"
            );
        }
    }
}

#[test]
fn balls_match_sampled_preimages() {
    const N: u64 = 100_000;
    for id in SYSTEMS {
        let sys = SystemSpec::parse(id).unwrap();
        let prep = sys.prepare(96);
        let images: Vec<f64> = (0..N)
            .map(|i| {
                let x = sample(&sys, 9, i).enclosure(&sys, 80);
                prep.step(&x).unwrap().1.mid_f64()
            })
            .collect();
        for (c, r) in [(0.2, 0.05), (0.5, 0.2), (0.8, 0.1)] {
            let m = ball_measure(&sys, c, r).unwrap();
            let freq = images.iter().filter(|&&y| (y - c).abs() < r).count() as f64 / N as f64;
            let sigma = (m.mid() * (1.0 - m.mid()) / N as f64).sqrt().max(1.0 / N as f64);
            assert!(
                freq >= m.low - 4.0 * sigma && freq <= m.high + 4.0 * sigma,
                "{id} B({c}, {r}): {freq} vs {m:?}"
            );
        }
    }
}

#[test]
fn degenerate_ball_is_rejected() {
    let sys = SystemSpec::gauss();
    assert!(ball_measure(&sys, 0.5, 0.0).is_err());
}
