//! Lower bounds for limsup sets and set-wise checks of the hit geometry.

use std::collections::BTreeMap;

use rayon::prelude::*;
use rug::float::Round;
use rug::Float;
use serde::Serialize;

use super::{EstimatorOptions, Experiment, HitOutcome, TestPoint, Workspace};
use crate::ball::CertifiedPoint;
use crate::cylinders::{cylinder_of_word, CylinderOptions, CylinderWord};
use crate::error::{Error, Result};
use crate::measures::sample_key;
use crate::rng::{streams, Key};
use crate::systems::Prepared;

/// `max_N (Σ_{n≤N} μ(E_n))² / Σ_{n,m≤N} μ(E_n ∩ E_m)`.
pub fn chung_erdos_bound(mu: &[f64], joint: &[Vec<f64>]) -> Result<f64> {
    let n = mu.len();
    if joint.len() != n || joint.iter().any(|row| row.len() != n) {
        return Err(Error::invalid("joint", "joint matrix must be square and match mu"));
    }
    for i in 0..n {
        let tol = 1e-12 * mu[i].abs().max(1.0);
        if (joint[i][i] - mu[i]).abs() > tol {
            return Err(Error::invalid("joint", format!("diagonal entry {i} differs from mu")));
        }
        for j in 0..i {
            if (joint[i][j] - joint[j][i]).abs() > 1e-12 * joint[i][j].abs().max(1.0) {
                return Err(Error::invalid("joint", format!("entries ({i},{j}) not symmetric")));
            }
        }
    }
    let (mut s1, mut s2) = (0.0, 0.0);
    let mut best: Option<f64> = None;
    for k in 0..n {
        s1 += mu[k];
        s2 += joint[k][k] + 2.0 * joint[k][..k].iter().sum::<f64>();
        if s2 > 0.0 {
            let v = s1 * s1 / s2;
            best = Some(best.map_or(v, |b: f64| b.max(v)));
        }
    }
    best.ok_or(Error::ZeroDenominator)
}

/// `s₁² / (2 s₂)`, returned raw (it may exceed 1).
pub fn posmeas_bound(s1: f64, s2: f64) -> Result<f64> {
    if !(s1 > 0.0 && s2 > 0.0) {
        return Err(Error::invalid("s1", "both sums must be positive"));
    }
    Ok(s1 * s1 / (2.0 * s2))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Corridor {
    pub lower: f64,
    pub upper: f64,
    pub method: &'static str,
}

/// Range for `Σ μ(A_n)` implied by `Σ ψ(n)^δ` and `Σ a_n`.
///
/// `eta1`, `eta2` bound `μ(B(x, r)) / r^δ`. For `p = 0` the sets are
/// shrinking targets `T^{-n} B(y, ψ(n))`, so invariance gives the sharper
/// `η₁ Σψ^δ ≤ Σμ(A_n) ≤ η₂ Σψ^δ`.
pub fn corridor(psi_sum: f64, a_sum: f64, eta1: f64, eta2: f64, p: f64, delta: f64) -> Corridor {
    if p == 0.0 {
        return Corridor {
            lower: eta1 * psi_sum,
            upper: eta2 * psi_sum,
            method: "shrinking_target",
        };
    }
    let lower = eta1 * eta1 / eta2 * 10f64.powf(-delta) * psi_sum - (p / 5.0).powf(delta) * a_sum;
    let upper = eta2 / eta1
        * 1.5f64.powf(delta)
        * (eta2 * 5f64.powf(delta) * psi_sum + (2.0 * p).powf(delta) * a_sum);
    Corridor {
        lower,
        upper,
        method: "lipschitz",
    }
}

/// Counts from checking, on samples `x` with `f(x) ∈ B(x₀, r)`, that
/// `T^n x ∈ B(x₀, ψ(n) − r)` forces a hit and a hit forces
/// `T^n x ∈ B(x₀, ψ(n) + r)`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SandwichReport {
    pub samples: u64,
    pub in_e: u64,
    pub inner: u64,
    pub hits: u64,
    pub inner_violations: u64,
    pub outer_violations: u64,
    pub undecided: u64,
}

pub fn sandwich_check(exp: Experiment<'_>, n: usize, x0: f64, r: f64, opts: &EstimatorOptions) -> Result<SandwichReport> {
    if n == 0 || !(r > 0.0) {
        return Err(Error::invalid("r", "need n >= 1 and r > 0"));
    }
    let sys = exp.sys;
    let prec = opts.precision.start(sys, n);
    let ns = [n];
    let parts: Vec<SandwichReport> = (0..opts.samples)
        .into_par_iter()
        .map_init(
            || (Workspace::new(exp, &ns), sys.prepare(prec)),
            |(ws, prep), i| {
                let mut rep = SandwichReport {
                    samples: 1,
                    ..Default::default()
                };
                let (p, _) = sample_key(sys, Key::new(opts.seed, streams::POINTS, i));
                let x = p.enclosure(sys, prec);
                let c = CertifiedPoint::from_f64(x0, prec);
                let rb = Float::with_val(53, r);
                let Ok(fx) = exp.f.eval(&x) else {
                    rep.undecided = 1;
                    return rep;
                };
                let dfx = prep.distance(&fx, &c);
                if !(dfx.hi() < rb) {
                    if !(dfx.lo() >= rb) {
                        rep.undecided = 1;
                    }
                    return rep;
                }
                rep.in_e = 1;
                let Some((_, tn)) = orbit_end(prep, &x, n) else {
                    rep.undecided = 1;
                    return rep;
                };
                let d = prep.distance(&tn, &c);
                let psi = exp.psi.eval(n as u64);
                let outcome = ws.classify(&TestPoint::Sample(p), &opts.precision)[0];
                let inner = d.hi().to_f64_round(Round::Up) < psi - r;
                rep.inner = inner as u64;
                rep.hits = (outcome == HitOutcome::Hit) as u64;
                if inner && outcome == HitOutcome::Miss {
                    rep.inner_violations = 1;
                }
                if outcome == HitOutcome::Hit && d.lo().to_f64_round(Round::Down) > psi + r {
                    rep.outer_violations = 1;
                }
                rep
            },
        )
        .collect();
    Ok(parts.into_iter().fold(SandwichReport::default(), |a, b| SandwichReport {
        samples: a.samples + b.samples,
        in_e: a.in_e + b.in_e,
        inner: a.inner + b.inner,
        hits: a.hits + b.hits,
        inner_violations: a.inner_violations + b.inner_violations,
        outer_violations: a.outer_violations + b.outer_violations,
        undecided: a.undecided + b.undecided,
    }))
}

/// Branch word of the first `n` steps and `T^n x`.
fn orbit_end(prep: &Prepared<'_>, x: &CertifiedPoint, n: usize) -> Option<(Vec<u64>, CertifiedPoint)> {
    let mut orbit = prep.orbit(x.clone());
    let mut word = Vec::with_capacity(n);
    for _ in 0..n {
        word.push(orbit.next_step().ok()?.0 .0);
    }
    Some((word, orbit.current().clone()))
}

/// `2ψ(m) / (K_J − p)`: every two points of `J ∩ A_m` are closer than this.
pub fn cluster_radius(psi_m: f64, k_j: f64, p: f64) -> Option<f64> {
    (k_j > p).then(|| 2.0 * psi_m / (k_j - p))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClusterReport {
    pub m: usize,
    /// Cylinders of order `m` holding at least two sampled hits.
    pub cylinders: usize,
    /// Largest observed spread of hits in one cylinder over its radius.
    pub max_ratio: f64,
}

/// Compares the spread of sampled points of `J ∩ A_m` with [`cluster_radius`].
pub fn cluster_check(exp: Experiment<'_>, m: usize, opts: &EstimatorOptions) -> Result<ClusterReport> {
    let sys = exp.sys;
    let p = exp.f.lipschitz_p();
    let prec = opts.precision.start(sys, m);
    let ns = [m];
    let hits: Vec<Option<(Vec<u64>, f64)>> = (0..opts.samples)
        .into_par_iter()
        .map_init(
            || (Workspace::new(exp, &ns), sys.prepare(prec)),
            |(ws, prep), i| {
                let (pt, _) = sample_key(sys, Key::new(opts.seed, streams::POINTS, i));
                let tp = TestPoint::Sample(pt.clone());
                if ws.classify(&tp, &opts.precision)[0] != HitOutcome::Hit {
                    return None;
                }
                let x = pt.enclosure(sys, prec);
                let (word, _) = orbit_end(prep, &x, m)?;
                Some((word, x.mid_f64()))
            },
        )
        .collect();
    let mut groups: BTreeMap<Vec<u64>, (f64, f64, usize)> = BTreeMap::new();
    for (w, x) in hits.into_iter().flatten() {
        let e = groups.entry(w).or_insert((x, x, 0));
        e.0 = e.0.min(x);
        e.1 = e.1.max(x);
        e.2 += 1;
    }
    let psi_m = exp.psi.eval(m as u64);
    let copts = CylinderOptions::default();
    let mut max_ratio: f64 = 0.0;
    let mut cylinders = 0;
    for (w, (lo, hi, count)) in groups {
        if count < 2 {
            continue;
        }
        let Some(geom) = cylinder_of_word(sys, &CylinderWord::new(w), &copts)? else {
            continue;
        };
        let Some(r) = cluster_radius(psi_m, geom.k_j, p) else {
            continue;
        };
        cylinders += 1;
        max_ratio = max_ratio.max((hi - lo) / r);
    }
    Ok(ClusterReport {
        m,
        cylinders,
        max_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chung_erdos_examples() {
        let v = chung_erdos_bound(&[0.5, 0.5], &[vec![0.5, 0.25], vec![0.25, 0.5]]).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-15);
        let p = 0.3;
        let same = vec![vec![p; 4]; 4];
        assert!((chung_erdos_bound(&[p; 4], &same).unwrap() - p).abs() < 1e-15);
        let n = 100;
        let joint: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 0.1 } else { 0.01 }).collect())
            .collect();
        let v = chung_erdos_bound(&vec![0.1; n], &joint).unwrap();
        assert!((v - 100.0 / 109.0).abs() < 1e-12);
        assert_eq!(chung_erdos_bound(&[0.0], &[vec![0.0]]), Err(Error::ZeroDenominator));
    }

    #[test]
    fn posmeas_examples() {
        assert_eq!(posmeas_bound(1.0, 1.0).unwrap(), 0.5);
        assert_eq!(posmeas_bound(2.0, 1.0).unwrap(), 2.0);
        assert_eq!(posmeas_bound(0.5, 0.125).unwrap(), 1.0);
        assert!(posmeas_bound(0.0, 1.0).is_err());
    }
}
