//! Numerical checks of the standing assumptions on `(X, μ, T)` and the
//! constants they supply to the estimators.
//!
//! Every constant carries a [`Method`] tag. Grid and sampling estimates of a
//! supremum are lower bounds for it, never certificates.

use std::cmp::Ordering;
use std::ops::RangeInclusive;

use rand_chacha::rand_core::RngCore;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rug::{Integer, Rational};
use serde::Serialize;

use crate::algebraic::{AlgebraicNumber, FieldElem};
use crate::cylinders::{cylinders_of_order, kj_sum, CylinderOptions};
use crate::error::{Error, Result};
use crate::estimators::{dyadic_pair_oracle, MixingRates, RateSource};
use crate::measures::{ball_measure, ifs_cover, interval_measure, sample_key};
use crate::rng::{dyadic_prefix, streams, unit_f64, Key};
use crate::systems::{IfsSystem, SystemKind, SystemSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    GridEstimate,
    Exhaustive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Constant {
    pub value: f64,
    pub method: Method,
}

impl Constant {
    fn closed(value: f64) -> Self {
        Constant {
            value,
            method: Method::ClosedForm,
        }
    }
}

// ---------------------------------------------------------------------------
// Ahlfors regularity

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AhlforsReport {
    /// Smallest inner bracket of `μ(B(x, r)) / (2r)^δ` over the grid.
    pub eta1: f64,
    /// Largest outer bracket of `μ(B(x, r)) / (2r)^δ` over the grid.
    pub eta2: f64,
    pub r0: f64,
    pub radii: Vec<f64>,
    pub centers: usize,
    pub balls: usize,
    /// `(x, r)` attaining `eta1`.
    pub argmin: (f64, f64),
    /// `(x, r)` attaining `eta2`.
    pub argmax: (f64, f64),
    pub max_bracket_width: f64,
    pub method: Method,
}

impl AhlforsReport {
    /// The constants rescaled to the radius normalization `μ(B(x, r)) / r^δ`.
    pub fn per_radius(&self, delta: f64) -> (f64, f64) {
        let s = 2f64.powf(delta);
        (self.eta1 * s, self.eta2 * s)
    }
}

/// Empirical range of `μ(B(x, r)) / (2r)^δ`.
///
/// `r₀ = diam(X)/10`; the `radii` radii are spread geometrically over the
/// three decades below `r₀`. Interval systems use a grid of centers with
/// `B(x, r) ⊂ X`; IFS centers are μ-samples.
pub fn check_ahlfors(sys: &SystemSpec, centers: usize, radii: usize, seed: u64) -> Result<AhlforsReport> {
    if centers < 2 || radii == 0 {
        return Err(Error::invalid("grid", "need at least two centers and one radius"));
    }
    let delta = sys.delta();
    let (lo, _) = sys.hull();
    let lo = lo.to_f64();
    let diam = sys.diam();
    let r0 = diam / 10.0;
    let rs: Vec<f64> = (1..=radii)
        .map(|k| r0 * 10f64.powf(-3.0 * k as f64 / radii as f64))
        .collect();
    let ifs_centers: Vec<f64> = match sys.kind() {
        SystemKind::Ifs(_) => (0..centers as u64)
            .map(|i| {
                let (p, _) = sample_key(sys, Key::new(seed, streams::CONDITIONS, i));
                p.enclosure(sys, 64).mid_f64()
            })
            .collect(),
        _ => Vec::new(),
    };
    let balls: Vec<(f64, f64)> = rs
        .iter()
        .flat_map(|&r| {
            let ifs_centers = &ifs_centers;
            (0..centers).map(move |j| {
                let x = match sys.kind() {
                    SystemKind::Ifs(_) => ifs_centers[j],
                    SystemKind::Rotation(_) => j as f64 / centers as f64,
                    _ => lo + r + j as f64 * (diam - 2.0 * r) / (centers - 1) as f64,
                };
                (x, r)
            })
        })
        .collect();
    let brackets: Vec<(f64, f64, f64, f64)> = balls
        .par_iter()
        .map(|&(x, r)| {
            let b = ball_measure(sys, x, r)?;
            let scale = (2.0 * r).powf(delta);
            Ok((b.low / scale, b.high / scale, b.width(), r))
        })
        .collect::<Result<_>>()?;
    let mut rep = AhlforsReport {
        eta1: f64::INFINITY,
        eta2: 0.0,
        r0,
        radii: rs,
        centers,
        balls: balls.len(),
        argmin: (0.0, 0.0),
        argmax: (0.0, 0.0),
        max_bracket_width: 0.0,
        method: Method::GridEstimate,
    };
    for (&(x, r), &(low, high, width, _)) in balls.iter().zip(&brackets) {
        if low < rep.eta1 {
            rep.eta1 = low;
            rep.argmin = (x, r);
        }
        if high > rep.eta2 {
            rep.eta2 = high;
            rep.argmax = (x, r);
        }
        rep.max_bracket_width = rep.max_bracket_width.max(width);
    }
    Ok(rep)
}

// ---------------------------------------------------------------------------
// Uniform mixing

/// Balls `E, F` for the mixing estimate: `centers` equally spaced centers
/// and radii given as fractions of `diam(X)`, clipped to the hull.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BallGrid {
    pub centers: usize,
    pub radii: Vec<f64>,
}

impl Default for BallGrid {
    fn default() -> Self {
        BallGrid {
            centers: 12,
            radii: vec![0.25, 0.0625, 0.015625],
        }
    }
}

impl BallGrid {
    fn balls(&self, sys: &SystemSpec) -> Result<Vec<(Rational, Rational)>> {
        if self.centers == 0 || self.radii.is_empty() {
            return Err(Error::invalid("ball_grid", "empty ball grid"));
        }
        let (h0, h1) = sys.hull();
        let len = Rational::from(&h1 - &h0);
        let mut out = Vec::new();
        for &rho in &self.radii {
            let rho = Rational::from_f64(rho)
                .filter(|q| *q > 0 && *q <= 1)
                .ok_or_else(|| Error::invalid("ball_grid", "radii must lie in (0, 1]"))?;
            let r = rho * &len;
            for j in 0..self.centers {
                let c = Rational::from((2 * j as u64 + 1, 2 * self.centers as u64)) * &len + &h0;
                let a = Rational::from(&c - &r);
                let b = Rational::from(&c + &r);
                if sys.is_circle() {
                    out.push((a, b));
                } else {
                    out.push((a.max(h0.clone()), b.min(h1.clone())));
                }
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Evaluation {
    Exact,
    MonteCarlo,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MixingOptions {
    pub grid: BallGrid,
    /// Points per Monte Carlo estimate.
    pub samples: u64,
    pub seed: u64,
}

impl Default for MixingOptions {
    fn default() -> Self {
        MixingOptions {
            grid: BallGrid::default(),
            samples: 20_000,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MixingEstimate {
    pub n: usize,
    /// `max |μ(E ∩ T^{-n}F) − μ(E)μ(F)| / μ(F)` over the grid.
    pub estimate: f64,
    /// Bracket width, plus three standard errors for Monte Carlo, at the maximizing pair.
    pub slack: f64,
    pub closed_form: Option<f64>,
    pub method: Method,
    pub evaluation: Evaluation,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MixingReport {
    pub entries: Vec<MixingEstimate>,
    pub flags: Vec<String>,
}

impl MixingReport {
    /// Rates for the quasi-independence bound: the closed form when the
    /// system has one, else this table.
    pub fn rates(&self, sys: &SystemSpec) -> Result<MixingRates> {
        if let Some(c) = MixingRates::closed_form(sys) {
            return Ok(c);
        }
        let mut entries: Vec<&MixingEstimate> = self.entries.iter().collect();
        entries.sort_by_key(|e| e.n);
        if entries.iter().enumerate().any(|(i, e)| e.n != i + 1) {
            return Err(Error::invalid("mixing", "the table must cover n = 1, 2, ... without gaps"));
        }
        Ok(MixingRates::from_table(
            RateSource::ConditionsEstimate,
            entries.iter().map(|e| e.estimate).collect(),
        ))
    }
}

/// Mixing estimate for a single `n`.
pub fn estimate_mixing(sys: &SystemSpec, n: usize, opts: &MixingOptions) -> Result<MixingEstimate> {
    let rep = mixing_table(sys, &[n], opts)?;
    Ok(rep.entries.into_iter().next().expect("one entry per n"))
}

/// Mixing estimates for every `n` in `ns`.
///
/// Integer β and IFS are evaluated exactly through cylinder algebra,
/// rotations through arc overlaps, and the rest by Monte Carlo.
pub fn mixing_table(sys: &SystemSpec, ns: &[usize], opts: &MixingOptions) -> Result<MixingReport> {
    if ns.contains(&0) {
        return Err(Error::invalid("n", "n must be at least 1"));
    }
    let balls = opts.grid.balls(sys)?;
    let closed = MixingRates::closed_form(sys);
    let mut entries: Vec<MixingEstimate> = match sys.kind() {
        SystemKind::Beta(b) if b.int_beta().is_some() => {
            let base = b.int_beta().unwrap();
            ns.par_iter()
                .map(|&n| badic_mixing(base, &balls, n))
                .collect()
        }
        SystemKind::Ifs(ifs) => ns.par_iter().map(|&n| ifs_mixing(ifs, &balls, n)).collect(),
        SystemKind::Rotation(r) => ns
            .par_iter()
            .map(|&n| rotation_mixing(r.alpha(), &balls, n))
            .collect(),
        _ => monte_carlo_mixing(sys, &balls, ns, opts)?,
    };
    for e in &mut entries {
        e.closed_form = closed.as_ref().map(|c| c.get(e.n)).transpose()?;
    }
    let mut flags = Vec::new();
    let floor = entries.iter().map(|e| e.estimate - e.slack).fold(f64::INFINITY, f64::min);
    if entries.len() >= 2 && floor > 0.1 {
        flags.push(format!(
            "mixing estimates stay above {floor:.3} for every tested n; uniform mixing fails"
        ));
    }
    Ok(MixingReport { entries, flags })
}

fn grid_max(n: usize, evaluation: Evaluation, vals: impl Iterator<Item = (f64, f64)>) -> MixingEstimate {
    let (estimate, slack) = vals.fold((0.0, 0.0), |acc, v| if v.0 > acc.0 { v } else { acc });
    MixingEstimate {
        n,
        estimate,
        slack,
        closed_form: None,
        method: Method::GridEstimate,
        evaluation,
    }
}

fn badic_mixing(base: u64, balls: &[(Rational, Rational)], n: usize) -> MixingEstimate {
    let mut vals = Vec::new();
    for e in balls {
        let me = Rational::from(&e.1 - &e.0);
        for f in balls {
            let mf = Rational::from(&f.1 - &f.0);
            if mf == 0 {
                continue;
            }
            let joint = dyadic_pair_oracle(base, (&e.0, &e.1), (&f.0, &f.1), n as u32);
            let dev = (joint - Rational::from(&me * &mf)).abs() / &mf;
            vals.push((dev.to_f64(), 0.0));
        }
    }
    grid_max(n, Evaluation::Exact, vals.into_iter())
}

/// Cover depth for the partial cylinders of the IFS computation.
const IFS_COVER_DEPTH: u32 = 30;

/// `μ(E ∩ T^{-n}F) = Σ_{|w|=n} μ(E ∩ θ_w F)`. Cylinders inside `E`
/// contribute `μ(X_w)μ(F)`; the few straddling `∂E` are covered directly,
/// using `μ(θ_w A) = μ(X_w) μ(A)`.
fn ifs_joint(ifs: &IfsSystem, e: &(Rational, Rational), f: &(Rational, Rational), n: usize) -> (f64, Vec<(f64, f64, f64)>) {
    let (h0, h1) = ifs.hull().clone();
    let mut full = 0.0;
    let mut partial = Vec::new();
    let mut stack = vec![(h0.clone(), h1, 1.0, Rational::from(1), 0usize)];
    while let Some((a, b, w, ratio, level)) = stack.pop() {
        if b <= e.0 || a >= e.1 {
            continue;
        }
        if a >= e.0 && b <= e.1 {
            full += w;
            continue;
        }
        if level == n {
            let back = |y: &Rational| Rational::from(y - &a) / &ratio + &h0;
            let lo = back(&e.0).max(f.0.clone());
            let hi = back(&e.1).min(f.1.clone());
            if hi > lo {
                let (l, h) = ifs_cover(ifs, &lo, &hi, IFS_COVER_DEPTH);
                partial.push((w, l, h));
            }
            continue;
        }
        for (m, wi) in ifs.maps().iter().zip(ifs.weights()) {
            let r = Rational::from(&ratio * &m.ratio);
            // θ_w θ_i (hull) for the word extended on the right.
            let a2 = (&ratio * (m.apply(&h0) - &h0)) + &a;
            let b2 = (&r * ifs.hull_len()) + &a2;
            stack.push((a2, b2, w * wi, r, level + 1));
        }
    }
    (full, partial)
}

fn ifs_mixing(ifs: &IfsSystem, balls: &[(Rational, Rational)], n: usize) -> MixingEstimate {
    let measures: Vec<(f64, f64)> = balls
        .iter()
        .map(|b| ifs_cover(ifs, &b.0, &b.1, IFS_COVER_DEPTH))
        .collect();
    let mut vals = Vec::new();
    for (e, me) in balls.iter().zip(&measures) {
        for (f, mf) in balls.iter().zip(&measures) {
            if mf.0 <= 0.0 {
                continue;
            }
            let (full, partial) = ifs_joint(ifs, e, f, n);
            let j_lo = full * mf.0 + partial.iter().map(|(w, l, _)| w * l).sum::<f64>();
            let j_hi = full * mf.1 + partial.iter().map(|(w, _, h)| w * h).sum::<f64>();
            let joint = 0.5 * (j_lo + j_hi);
            let prod = 0.25 * (me.0 + me.1) * (mf.0 + mf.1);
            let mid_f = 0.5 * (mf.0 + mf.1);
            let dev = (joint - prod).abs() / mid_f;
            let width = (j_hi - j_lo) + (me.1 * mf.1 - me.0 * mf.0);
            let slack = width / mf.0 + dev * (mf.1 - mf.0) / mf.0 + 1e-12;
            vals.push((dev, slack));
        }
    }
    grid_max(n, Evaluation::Exact, vals.into_iter())
}

fn arc_overlap(a: (f64, f64), b: (f64, f64)) -> f64 {
    // Both arcs have length below 1; compare b against three lifts.
    (-1..=1)
        .map(|k| {
            let (b0, b1) = (b.0 + k as f64, b.1 + k as f64);
            (a.1.min(b1) - a.0.max(b0)).max(0.0)
        })
        .sum()
}

fn rotation_mixing(alpha: &AlgebraicNumber, balls: &[(Rational, Rational)], n: usize) -> MixingEstimate {
    let shift = alpha.ball(128).mul_u64(n as u64);
    let frac = shift
        .floor()
        .map(|k| shift.sub_integer(&k).mid_f64())
        .unwrap_or_else(|| shift.mid_f64().rem_euclid(1.0));
    let arcs: Vec<(f64, f64)> = balls.iter().map(|b| (b.0.to_f64(), b.1.to_f64())).collect();
    let mut vals = Vec::new();
    for &e in &arcs {
        let me = (e.1 - e.0).min(1.0);
        for &f in &arcs {
            let mf = (f.1 - f.0).min(1.0);
            // T^{-n}F = F − nα.
            let g = (f.0 - frac, f.1 - frac);
            let joint = arc_overlap(e, g);
            vals.push(((joint - me * mf).abs() / mf, 1e-12));
        }
    }
    grid_max(n, Evaluation::Exact, vals.into_iter())
}

fn monte_carlo_mixing(sys: &SystemSpec, balls: &[(Rational, Rational)], ns: &[usize], opts: &MixingOptions) -> Result<Vec<MixingEstimate>> {
    if opts.samples == 0 {
        return Err(Error::invalid("samples", "need at least one sample"));
    }
    let iv: Vec<(f64, f64)> = balls.iter().map(|b| (b.0.to_f64(), b.1.to_f64())).collect();
    let mu: Vec<(f64, f64)> = iv
        .iter()
        .map(|&(a, b)| interval_measure(sys, a, b, 0).map(|m| (m.low, m.high)))
        .collect::<Result<_>>()?;
    let horizon = ns.iter().copied().max().unwrap_or(1);
    let prec = sys.initial_precision(horizon);
    let member = |x: f64| -> Vec<bool> { iv.iter().map(|&(a, b)| a <= x && x < b).collect() };
    // Per sample: membership of x and of T^n x for each requested n.
    let rows: Vec<Option<(Vec<bool>, Vec<Vec<bool>>)>> = (0..opts.samples)
        .into_par_iter()
        .map_init(
            || sys.prepare(prec),
            |prep, i| {
                let (p, _) = sample_key(sys, Key::new(opts.seed, streams::CONDITIONS, i));
                let x = p.enclosure(sys, prec);
                let x0 = member(x.mid_f64());
                let mut orbit = prep.orbit(x);
                let mut at = vec![0.0; horizon + 1];
                for k in 1..=horizon {
                    at[k] = orbit.next_step().ok()?.1.mid_f64();
                }
                Some((x0, ns.iter().map(|&n| member(at[n])).collect()))
            },
        )
        .collect();
    let rows: Vec<_> = rows.into_iter().flatten().collect();
    let total = rows.len() as f64;
    if rows.is_empty() {
        return Err(Error::PrecisionExhausted {
            bits: prec,
            what: "following sample orbits for the mixing estimate".into(),
        });
    }
    let nb = balls.len();
    Ok(ns
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let mut counts = vec![0u64; nb * nb];
            for (x0, xn) in &rows {
                for (e, _) in x0.iter().enumerate().filter(|p| *p.1) {
                    for (f, _) in xn[k].iter().enumerate().filter(|p| *p.1) {
                        counts[e * nb + f] += 1;
                    }
                }
            }
            let vals = (0..nb).flat_map(|e| (0..nb).map(move |f| (e, f))).filter_map(|(e, f)| {
                let (mf_lo, mf_hi) = mu[f];
                if mf_lo <= 0.0 {
                    return None;
                }
                let p = counts[e * nb + f] as f64 / total;
                let mid_e = 0.5 * (mu[e].0 + mu[e].1);
                let mid_f = 0.5 * (mf_lo + mf_hi);
                let dev = (p - mid_e * mid_f).abs() / mid_f;
                let se = (p * (1.0 - p) / total).sqrt().max(1.0 / total);
                let slack = (3.0 * se + mu[e].1 * mf_hi - mu[e].0 * mf_lo) / mf_lo;
                Some((dev, slack))
            });
            grid_max(n, Evaluation::MonteCarlo, vals)
        })
        .collect())
}

// ---------------------------------------------------------------------------
// Distortion, expansion and conformality

/// `x(t) = (p + t p') / (q + t q')`: the inverse branch of `T^m` on a Gauss
/// cylinder, with consecutive convergents `p/q` and `p'/q'`.
struct Mobius {
    p: Integer,
    p1: Integer,
    q: Integer,
    q1: Integer,
}

impl Mobius {
    fn of_digits(digits: &[u64]) -> Self {
        let (mut p, mut p1, mut q, mut q1) = (Integer::new(), Integer::from(1), Integer::from(1), Integer::new());
        for &a in digits {
            let np = Integer::from(&p * a) + &p1;
            let nq = Integer::from(&q * a) + &q1;
            p1 = std::mem::replace(&mut p, np);
            q1 = std::mem::replace(&mut q, nq);
        }
        Mobius { p, p1, q, q1 }
    }

    fn x(&self, t: &Rational) -> Rational {
        (Rational::from(t * &self.p1) + &self.p) / (Rational::from(t * &self.q1) + &self.q)
    }

    /// `T^m y` for `y` in the cylinder.
    fn t(&self, y: &Rational) -> Rational {
        (&self.p - Rational::from(y * &self.q))
            / (Rational::from(y * &self.q1) - &self.p1)
    }

    /// `K_J = q_m²`.
    fn k_j(&self) -> Rational {
        Rational::from(Integer::from(&self.q * &self.q))
    }
}

fn gauss_word(rng: &mut impl RngCore, m: usize) -> Vec<u64> {
    (0..m)
        .map(|_| {
            let x = unit_f64(rng).exp2() - 1.0;
            (1.0 / x).floor().clamp(1.0, 1e6) as u64
        })
        .collect()
}

fn unit_rational(rng: &mut impl RngCore) -> Rational {
    let k = dyadic_prefix(rng, 32).max(Integer::from(1));
    Rational::from((k, Integer::from(1) << 32))
}

fn gauss_sampled<F>(m: usize, samples: u64, seed: u64, stream_offset: u64, f: F) -> Result<Constant>
where
    F: Fn(&Mobius, &mut ChaCha8Rng) -> Option<f64> + Sync,
{
    if m == 0 || samples == 0 {
        return Err(Error::invalid("m", "need m >= 1 and at least one sample"));
    }
    let value = (0..samples)
        .into_par_iter()
        .filter_map(|i| {
            let mut rng = Key::new(seed, streams::CONDITIONS, i).with_attempt(stream_offset).rng();
            let order = 1 + (rng.next_u64() % m as u64) as usize;
            let mob = Mobius::of_digits(&gauss_word(&mut rng, order));
            f(&mob, &mut rng)
        })
        .reduce(|| 1.0, f64::max);
    Ok(Constant {
        value,
        method: Method::GridEstimate,
    })
}

/// `K₁`: the largest ratio of difference quotients of `T^m` over triples in
/// a common cylinder of order at most `m`.
///
/// Piecewise linear maps give exactly 1. For the Gauss map the cylinders
/// and triples are sampled.
pub fn check_distortion(sys: &SystemSpec, m: usize, samples: u64, seed: u64) -> Result<Constant> {
    if !sys.is_gauss() {
        return Ok(Constant::closed(1.0));
    }
    gauss_sampled(m, samples, seed, 1, |mob, rng| {
        let ts: Vec<Rational> = (0..3).map(|_| unit_rational(rng)).collect();
        if ts[0] == ts[1] || ts[0] == ts[2] {
            return None;
        }
        let xs: Vec<Rational> = ts.iter().map(|t| mob.x(t)).collect();
        let quot = |i: usize| Rational::from(&ts[0] - &ts[i]).abs() / Rational::from(&xs[0] - &xs[i]).abs();
        let r = (quot(1) / quot(2)).to_f64();
        Some(r.max(1.0 / r))
    })
}

/// `K₂`: the smallest constant with
/// `B(T^m x, K_J r / K₂) ⊂ T^m B(x, r) ⊂ B(T^m x, K₂ K_J r)` for balls
/// inside a cylinder, from the endpoints of the monotone image.
pub fn check_conformality(sys: &SystemSpec, m: usize, samples: u64, seed: u64) -> Result<Constant> {
    if !sys.is_gauss() {
        return Ok(Constant::closed(1.0));
    }
    gauss_sampled(m, samples, seed, 2, |mob, rng| {
        let t = unit_rational(rng);
        let x = mob.x(&t);
        let e0 = mob.x(&Rational::new());
        let e1 = mob.x(&Rational::from(1));
        let d = Rational::from(&x - &e0).abs().min(Rational::from(&x - &e1).abs());
        let r = d * unit_rational(rng);
        let plus = (mob.t(&Rational::from(&x + &r)) - &t).abs();
        let minus = (mob.t(&Rational::from(&x - &r)) - &t).abs();
        let scale = mob.k_j() * &r;
        let hi = (plus.clone().max(minus.clone()) / &scale).to_f64();
        let lo = (plus.min(minus) / scale).to_f64();
        Some(hi.max(1.0 / lo))
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrderMinKj {
    pub m: usize,
    pub min_kj: f64,
    pub method: Method,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExpandingReport {
    pub orders: Vec<OrderMinKj>,
    /// Whether `min K_J` increases strictly over the tested orders.
    pub increasing: bool,
    pub flags: Vec<String>,
}

fn fibonacci(n: usize) -> f64 {
    let (mut a, mut b) = (0.0f64, 1.0f64);
    for _ in 0..n {
        (a, b) = (b, a + b);
    }
    a
}

/// `min K_J` over cylinders of order `m`, in closed form.
fn min_kj_closed(sys: &SystemSpec, m: usize) -> f64 {
    match sys.kind() {
        SystemKind::Beta(b) => b.beta_f64().powi(m as i32),
        SystemKind::Ifs(i) => i.r_max().powi(-(m as i32)),
        // q_m is smallest for the all-ones word: q_m = F_{m+1}.
        SystemKind::Gauss => fibonacci(m + 1).powi(2),
        SystemKind::Rotation(_) => 1.0,
    }
}

/// `min K_J` per order. Orders small enough to enumerate are checked
/// exhaustively against the closed form; the rest use the closed form.
pub fn check_expanding(sys: &SystemSpec, ms: RangeInclusive<usize>, opts: &CylinderOptions) -> Result<ExpandingReport> {
    let mut orders = Vec::new();
    for m in ms {
        if m == 0 {
            return Err(Error::invalid("m", "orders start at 1"));
        }
        let closed = min_kj_closed(sys, m);
        let exhaustive = if sys.is_gauss() {
            None
        } else {
            match cylinders_of_order(sys, m, opts) {
                Ok(set) => Some(set.min_kj()),
                Err(Error::ExplosionGuard { .. }) => None,
                Err(e) => return Err(e),
            }
        };
        orders.push(match exhaustive {
            Some(v) => OrderMinKj {
                m,
                min_kj: v,
                method: Method::Exhaustive,
            },
            None => OrderMinKj {
                m,
                min_kj: closed,
                method: Method::ClosedForm,
            },
        });
    }
    let increasing = orders.windows(2).all(|w| w[1].min_kj > w[0].min_kj);
    let mut flags = Vec::new();
    if orders.len() >= 2 && !increasing {
        let max = orders.iter().map(|o| o.min_kj).fold(0.0, f64::max);
        flags.push(format!(
            "min K_J does not grow with the order (at most {max}); expanding condition fails"
        ));
    }
    Ok(ExpandingReport {
        orders,
        increasing,
        flags,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrderKjSum {
    pub m: usize,
    pub value: f64,
    pub upper: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KjSumReport {
    pub orders: Vec<OrderKjSum>,
    /// Largest upper bound over the tested orders.
    pub sup: Constant,
    pub flags: Vec<String>,
}

/// `Σ_{J ∈ F_m} K_J^{-δ}` per order, by enumeration. Orders beyond the
/// enumeration cap are skipped and flagged.
pub fn check_kj_sum(sys: &SystemSpec, ms: RangeInclusive<usize>, opts: &CylinderOptions) -> Result<KjSumReport> {
    let mut orders = Vec::new();
    let mut flags = Vec::new();
    for m in ms {
        match kj_sum(sys, m, opts) {
            Ok(k) => orders.push(OrderKjSum {
                m,
                value: k.value,
                upper: k.upper,
            }),
            Err(Error::ExplosionGuard { count, cap }) => {
                flags.push(format!("order {m} skipped: {count} cylinders exceed the cap {cap}"));
                break;
            }
            Err(e) => return Err(e),
        }
    }
    if orders.is_empty() {
        return Err(Error::invalid("m", "no order could be enumerated"));
    }
    if orders.len() >= 3 && orders.windows(2).all(|w| w[1].value >= w[0].value + 0.99) {
        flags.push("the sum grows by at least 1 per order; it is unbounded".to_string());
    }
    let sup = orders.iter().map(|o| o.upper).fold(0.0, f64::max);
    Ok(KjSumReport {
        orders,
        sup: Constant {
            value: sup,
            method: Method::Exhaustive,
        },
        flags,
    })
}

// ---------------------------------------------------------------------------
// Pseudo-Markov partitions

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BranchImage {
    pub branch: u64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PseudoMarkovReport {
    pub holds: bool,
    /// `min_i μ(T X_i)` when the condition holds.
    pub tau: Option<f64>,
    /// `(i, j)` with `T X_i ∩ X_j ≠ ∅` but `X_j ⊄ T X_i`.
    pub witness: Option<(u64, u64)>,
    /// The cells' images; for Gauss only the first few digits are listed.
    pub images: Vec<BranchImage>,
    pub method: Method,
    /// Orbit spot checks of the analytic images (Gauss only).
    pub spot_checks: Option<u64>,
}

/// Half-open cells `[lo, hi)` in `Q(θ)`, and their images.
struct CellData<'a> {
    field: &'a AlgebraicNumber,
    cells: Vec<(FieldElem, FieldElem)>,
    images: Vec<(FieldElem, FieldElem)>,
}

impl CellData<'_> {
    fn cmp(&self, a: &FieldElem, b: &FieldElem) -> Result<Ordering> {
        self.field.cmp(a, b)
    }

    fn first_violation(&self) -> Result<Option<(u64, u64)>> {
        for (i, (t0, t1)) in self.images.iter().enumerate() {
            for (j, (c0, c1)) in self.cells.iter().enumerate() {
                let lo = if self.cmp(t0, c0)? == Ordering::Greater { t0 } else { c0 };
                let hi = if self.cmp(t1, c1)? == Ordering::Less { t1 } else { c1 };
                let meets = self.cmp(lo, hi)? == Ordering::Less;
                let inside = self.cmp(t0, c0)? != Ordering::Greater && self.cmp(c1, t1)? != Ordering::Greater;
                if meets && !inside {
                    return Ok(Some((i as u64, j as u64)));
                }
            }
        }
        Ok(None)
    }
}

/// Checks the pseudo-Markov property of the branch partition `{X_i}`:
/// `T X_i ∩ X_j ≠ ∅ ⇒ X_j ⊂ T X_i`, and `μ(T X_i) ≥ τ > 0`. All images are
/// intervals, hence measurable.
pub fn check_pseudo_markov(sys: &SystemSpec) -> Result<PseudoMarkovReport> {
    match sys.kind() {
        SystemKind::Gauss => Ok(gauss_pseudo_markov()),
        SystemKind::Ifs(ifs) => {
            // θ_i^{-1} maps the cell θ_i(hull) back onto the hull.
            let (h0, h1) = ifs.hull();
            let images = (0..ifs.maps().len() as u64)
                .map(|i| BranchImage {
                    branch: i,
                    lo: h0.to_f64(),
                    hi: h1.to_f64(),
                })
                .collect();
            Ok(PseudoMarkovReport {
                holds: true,
                tau: Some(1.0),
                witness: None,
                images,
                method: Method::ClosedForm,
                spot_checks: None,
            })
        }
        SystemKind::Beta(b) => {
            let f = b.beta();
            let k = b.floor_beta();
            let count = b.branch_count();
            let one = f.elem_int(1);
            let zero = f.elem_int(0);
            let cells: Vec<(FieldElem, FieldElem)> = (0..count)
                .map(|i| {
                    let lo = f.mul_theta_inv(&f.elem_int(i as i64));
                    let hi = if i + 1 == count && b.int_beta().is_none() {
                        one.clone()
                    } else {
                        f.mul_theta_inv(&f.elem_int(i as i64 + 1))
                    };
                    (lo, hi)
                })
                .collect();
            let frac = f.sub_int(&f.elem_theta(), &Integer::from(k));
            let images: Vec<(FieldElem, FieldElem)> = (0..count)
                .map(|i| {
                    if i == k && b.int_beta().is_none() {
                        (zero.clone(), frac.clone())
                    } else {
                        (zero.clone(), one.clone())
                    }
                })
                .collect();
            let data = CellData {
                field: f,
                cells,
                images,
            };
            let witness = data.first_violation()?;
            let tau = data
                .images
                .iter()
                .map(|(a, b)| interval_measure(sys, f.to_f64(a), f.to_f64(b), 0).map(|m| m.low))
                .collect::<Result<Vec<f64>>>()?
                .into_iter()
                .fold(1.0, f64::min);
            Ok(interval_report(&data, witness, tau))
        }
        SystemKind::Rotation(r) => {
            let f = r.alpha();
            let zero = f.elem_int(0);
            let one = f.elem_int(1);
            let alpha = f.elem_theta();
            let cut = f.sub(&one, &alpha);
            let data = CellData {
                field: f,
                cells: vec![(zero.clone(), cut.clone()), (cut, one.clone())],
                images: vec![(alpha.clone(), one), (zero, alpha)],
            };
            let witness = data.first_violation()?;
            let a = f.approx();
            Ok(interval_report(&data, witness, a.min(1.0 - a)))
        }
    }
}

fn interval_report(data: &CellData<'_>, witness: Option<(u64, u64)>, tau: f64) -> PseudoMarkovReport {
    let holds = witness.is_none() && tau > 0.0;
    PseudoMarkovReport {
        holds,
        tau: holds.then_some(tau),
        witness,
        images: data
            .images
            .iter()
            .enumerate()
            .map(|(i, (a, b))| BranchImage {
                branch: i as u64,
                lo: data.field.to_f64(a),
                hi: data.field.to_f64(b),
            })
            .collect(),
        method: Method::Exhaustive,
        spot_checks: None,
    }
}

/// Each branch `1/x − i` maps `(1/(i+1), 1/i)` onto `(0, 1)`. The orbit
/// check confirms `T(1/(i+y)) = y` for a few digits and targets.
fn gauss_pseudo_markov() -> PseudoMarkovReport {
    let targets = [Rational::from((1, 7)), Rational::from((1, 2)), Rational::from((5, 7))];
    let mut checks = 0;
    for i in 1..=20u64 {
        for y in &targets {
            let x = Rational::from(1) / (Rational::from(i) + y);
            let inv = Rational::from(1) / &x;
            let digit = inv.clone().floor();
            if digit == i && inv - digit == *y {
                checks += 1;
            }
        }
    }
    let total = 20 * targets.len() as u64;
    PseudoMarkovReport {
        holds: checks == total,
        tau: (checks == total).then_some(1.0),
        witness: None,
        images: (1..=5)
            .map(|i| BranchImage {
                branch: i,
                lo: 0.0,
                hi: 1.0,
            })
            .collect(),
        method: Method::ClosedForm,
        spot_checks: Some(checks),
    }
}

// ---------------------------------------------------------------------------
// Full report

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionOptions {
    pub ahlfors_centers: usize,
    pub ahlfors_radii: usize,
    /// Mixing is tabulated for `n = 1..=mixing_orders`.
    pub mixing_orders: usize,
    pub mixing: MixingOptions,
    /// Largest order for the `K_J` checks.
    pub max_order: usize,
    pub distortion_order: usize,
    pub distortion_samples: u64,
    pub seed: u64,
    pub cylinders: CylinderOptions,
}

impl Default for ConditionOptions {
    fn default() -> Self {
        ConditionOptions {
            ahlfors_centers: 200,
            ahlfors_radii: 12,
            mixing_orders: 12,
            mixing: MixingOptions::default(),
            max_order: 10,
            distortion_order: 8,
            distortion_samples: 2000,
            seed: 0,
            cylinders: CylinderOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionReport {
    pub system: String,
    pub delta: f64,
    pub ahlfors: AhlforsReport,
    pub mixing: MixingReport,
    #[serde(rename = "distortion_K1")]
    pub distortion_k1: Constant,
    #[serde(rename = "expanding_minKJ")]
    pub expanding_min_kj: ExpandingReport,
    pub kj_sum: KjSumReport,
    #[serde(rename = "conformality_K2")]
    pub conformality_k2: Constant,
    pub pseudo_markov: PseudoMarkovReport,
    /// Failed or unverifiable conditions, collected from every section.
    pub flags: Vec<String>,
}

pub fn condition_report(sys: &SystemSpec, opts: &ConditionOptions) -> Result<ConditionReport> {
    let ahlfors = check_ahlfors(sys, opts.ahlfors_centers, opts.ahlfors_radii, opts.seed)?;
    let ns: Vec<usize> = (1..=opts.mixing_orders.max(1)).collect();
    let mixing = mixing_table(sys, &ns, &opts.mixing)?;
    let distortion_k1 = check_distortion(sys, opts.distortion_order, opts.distortion_samples, opts.seed)?;
    let conformality_k2 = check_conformality(sys, opts.distortion_order, opts.distortion_samples, opts.seed)?;
    let max_order = opts.max_order.max(1);
    let expanding = check_expanding(sys, 1..=max_order, &opts.cylinders)?;
    let kj = check_kj_sum(sys, 1..=max_order, &opts.cylinders)?;
    let pm = check_pseudo_markov(sys)?;
    let mut flags = Vec::new();
    flags.extend(mixing.flags.iter().cloned());
    flags.extend(expanding.flags.iter().cloned());
    flags.extend(kj.flags.iter().cloned());
    if let Some((i, j)) = pm.witness {
        flags.push(format!("pseudo-Markov fails: T X_{i} meets X_{j} without containing it"));
    }
    Ok(ConditionReport {
        system: sys.id().to_string(),
        delta: sys.delta(),
        ahlfors,
        mixing,
        distortion_k1,
        expanding_min_kj: expanding,
        kj_sum: kj,
        conformality_k2,
        pseudo_markov: pm,
        flags,
    })
}
