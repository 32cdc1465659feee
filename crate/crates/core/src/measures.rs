//! Invariant measures: sampling, ball measures and densities.

use rand_chacha::rand_core::RngCore;
use rug::float::Round;
use rug::{Float, Rational};
use serde::Serialize;

use crate::ball::CertifiedPoint;
use crate::error::{Error, Result};
use crate::rng::{dyadic_interval, streams, unit_f64, Key};
use crate::stats::wilson;
use crate::systems::{IfsSystem, SystemKind, SystemSpec};

/// Bits used to decide the Rényi rejection test.
const REJECTION_BITS: u32 = 128;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeasureEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_samples: u64,
    pub seed: u64,
    pub hits: u64,
    pub indeterminate_count: u64,
}

impl MeasureEstimate {
    /// Proportion estimate. Indeterminate samples count as misses for the
    /// mean and as hits for the upper confidence limit.
    pub fn from_counts(hits: u64, indeterminate: u64, n: u64, seed: u64, z: f64) -> Self {
        let nf = n.max(1) as f64;
        let mean = hits as f64 / nf;
        let stderr = (mean * (1.0 - mean) / nf).sqrt();
        let (lo, _) = wilson(hits, n, z);
        let (_, hi) = wilson(hits + indeterminate, n, z);
        MeasureEstimate {
            mean,
            stderr,
            ci_low: lo.min(mean),
            ci_high: hi.max(mean),
            n_samples: n,
            seed,
            hits,
            indeterminate_count: indeterminate,
        }
    }

    pub fn indeterminate_rate(&self) -> f64 {
        self.indeterminate_count as f64 / self.n_samples.max(1) as f64
    }

    /// Whether `value` lies inside the Wilson interval at `z` standard deviations.
    pub fn within_wilson(&self, value: f64, z: f64) -> bool {
        let (lo, _) = wilson(self.hits, self.n_samples, z);
        let (_, hi) = wilson(self.hits + self.indeterminate_count, self.n_samples, z);
        lo <= value && value <= hi
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BracketMethod {
    ClosedForm,
    TruncatedSeries,
    CylinderCover,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BallMeasureBracket {
    pub low: f64,
    pub high: f64,
    pub method: BracketMethod,
}

impl BallMeasureBracket {
    pub fn mid(&self) -> f64 {
        0.5 * (self.low + self.high)
    }

    pub fn width(&self) -> f64 {
        self.high - self.low
    }

    pub fn contains(&self, v: f64) -> bool {
        self.low <= v && v <= self.high
    }

    fn around(v: f64, err: f64, method: BracketMethod) -> Self {
        BallMeasureBracket {
            low: (v - err).max(0.0),
            high: (v + err).min(1.0),
            method,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Shape {
    Uniform,
    /// Uniform after one word reserved for the rejection test.
    Renyi,
    Gauss,
    Ifs,
}

/// A μ-distributed point, stored as its random source so that any
/// precision can be requested later and always refines the same point.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplePoint {
    key: Key,
    shape: Shape,
}

impl SamplePoint {
    pub fn key(&self) -> Key {
        self.key
    }

    /// Enclosure of the point with radius at most about `2^-prec`.
    pub fn enclosure(&self, sys: &SystemSpec, prec: u32) -> CertifiedPoint {
        let mut rng = self.key.rng();
        match self.shape {
            Shape::Uniform | Shape::Renyi => {
                if self.shape == Shape::Renyi {
                    rng.next_u64();
                }
                let (lo, hi) = dyadic_interval(&mut rng, prec);
                CertifiedPoint::from_bounds(&lo, &hi, prec + 2)
            }
            Shape::Gauss => {
                let (ulo, uhi) = dyadic_interval(&mut rng, prec + 2);
                let p = prec + 8;
                let lo = Float::with_val_round(p, ulo.exp2_ref(), Round::Down).0;
                let hi = Float::with_val_round(p, uhi.exp2_ref(), Round::Up).0;
                let lo = Float::with_val_round(p, lo - 1u32, Round::Down).0;
                let hi = Float::with_val_round(p, hi - 1u32, Round::Up).0;
                CertifiedPoint::from_bounds(&lo, &hi, prec)
            }
            Shape::Ifs => {
                let ifs = sys.as_ifs().expect("IFS sample on IFS system");
                let word = ifs_word(ifs, &mut rng, ifs_word_len(ifs, prec));
                let (a, b) = ifs.word_interval(&word);
                let lo = Float::with_val_round(prec + 2, &a, Round::Down).0;
                let hi = Float::with_val_round(prec + 2, &b, Round::Up).0;
                CertifiedPoint::from_bounds(&lo, &hi, prec)
            }
        }
    }

    /// Leading symbols of the coding word of an IFS sample.
    pub fn ifs_word(&self, sys: &SystemSpec, len: usize) -> Option<Vec<u64>> {
        let ifs = sys.as_ifs()?;
        Some(ifs_word(ifs, &mut self.key.rng(), len))
    }
}

fn ifs_word_len(ifs: &IfsSystem, prec: u32) -> usize {
    let scale = ifs.hull_len().to_f64().max(1e-300).log2();
    ((prec as f64 + 2.0 + scale) / (1.0 / ifs.r_max()).log2()).ceil() as usize + 1
}

fn ifs_word(ifs: &IfsSystem, rng: &mut impl RngCore, len: usize) -> Vec<u64> {
    let w = ifs.weights();
    (0..len)
        .map(|_| {
            let u = unit_f64(rng);
            let mut acc = 0.0;
            for (i, wi) in w.iter().enumerate() {
                acc += wi;
                if u < acc {
                    return i as u64;
                }
            }
            (w.len() - 1) as u64
        })
        .collect()
}

/// Sample `index` of the point stream for `seed`.
pub fn sample(sys: &SystemSpec, seed: u64, index: u64) -> SamplePoint {
    sample_key(sys, Key::new(seed, streams::POINTS, index)).0
}

/// Sample for an arbitrary key, with the number of redraws caused by
/// undecidable rejection tests.
pub fn sample_key(sys: &SystemSpec, key: Key) -> (SamplePoint, u64) {
    match sys.kind() {
        SystemKind::Gauss => (
            SamplePoint {
                key,
                shape: Shape::Gauss,
            },
            0,
        ),
        SystemKind::Ifs(_) => (
            SamplePoint {
                key,
                shape: Shape::Ifs,
            },
            0,
        ),
        SystemKind::Rotation(_) => (
            SamplePoint {
                key,
                shape: Shape::Uniform,
            },
            0,
        ),
        SystemKind::Beta(b) if b.int_beta().is_some() => (
            SamplePoint {
                key,
                shape: Shape::Uniform,
            },
            0,
        ),
        SystemKind::Beta(b) => {
            let levels = b.levels();
            let sup = b.density_sup();
            let mut redraws = 0;
            let mut attempt = key.attempt;
            loop {
                let k = key.with_attempt(attempt);
                attempt += 1;
                let mut rng = k.rng();
                let v = unit_f64(&mut rng);
                let (lo, hi) = dyadic_interval(&mut rng, REJECTION_BITS);
                let uf = lo.to_f64();
                let mut u = None;
                let mut g = 0.0;
                let mut ambiguous = false;
                for (j, (s, w)) in levels.iter().enumerate() {
                    let below = if (uf - s).abs() > 1e-9 {
                        uf < *s
                    } else {
                        let u = u.get_or_insert_with(|| {
                            CertifiedPoint::from_bounds(&lo, &hi, REJECTION_BITS + 2)
                        });
                        match b.below_level(u, j) {
                            Some(t) => t,
                            None => {
                                ambiguous = true;
                                break;
                            }
                        }
                    };
                    if below {
                        g += w;
                    }
                }
                if ambiguous {
                    redraws += 1;
                    continue;
                }
                if v * sup < g {
                    return (
                        SamplePoint {
                            key: k,
                            shape: Shape::Renyi,
                        },
                        redraws,
                    );
                }
            }
        }
    }
}

/// Invariant density with respect to Lebesgue measure.
pub fn density(sys: &SystemSpec, x: f64) -> Result<f64> {
    match sys.kind() {
        SystemKind::Beta(b) => Ok(b.density(x)),
        SystemKind::Gauss => Ok(1.0 / (std::f64::consts::LN_2 * (1.0 + x))),
        SystemKind::Rotation(_) => Ok(1.0),
        SystemKind::Ifs(_) => Err(Error::Unsupported {
            system: sys.id().to_string(),
            what: "density: a self-similar measure has no Lebesgue density".into(),
        }),
    }
}

/// Default cylinder-cover depth: the smallest `d` with `r_max^d < r/10`.
pub fn default_cover_depth(ifs: &IfsSystem, r: f64) -> u32 {
    let d = ((r / 10.0).ln() / ifs.r_max().ln()).floor() as i64 + 1;
    d.clamp(1, 200) as u32
}

/// Bracket for `μ(B(center, r) ∩ X)`.
pub fn ball_measure(sys: &SystemSpec, center: f64, r: f64) -> Result<BallMeasureBracket> {
    let depth = sys.as_ifs().map(|i| default_cover_depth(i, r)).unwrap_or(0);
    ball_measure_depth(sys, center, r, depth)
}

/// As [`ball_measure`], with an explicit cover depth for IFS measures.
pub fn ball_measure_depth(
    sys: &SystemSpec,
    center: f64,
    r: f64,
    depth: u32,
) -> Result<BallMeasureBracket> {
    if !(r > 0.0) {
        return Err(Error::DegenerateBall(r));
    }
    interval_measure(sys, center - r, center + r, depth)
}

/// Bracket for `μ([a, b] ∩ X)`; on the circle the interval wraps.
pub fn interval_measure(sys: &SystemSpec, a: f64, b: f64, depth: u32) -> Result<BallMeasureBracket> {
    const ULP: f64 = 4.0 * f64::EPSILON;
    Ok(match sys.kind() {
        SystemKind::Rotation(_) => {
            let len = (b - a).clamp(0.0, 1.0);
            BallMeasureBracket::around(len, len * ULP, BracketMethod::ClosedForm)
        }
        SystemKind::Beta(beta) if beta.int_beta().is_some() => {
            let len = (b.min(1.0) - a.max(0.0)).max(0.0);
            BallMeasureBracket::around(len, len * ULP, BracketMethod::ClosedForm)
        }
        SystemKind::Beta(beta) => {
            let (v, err) = beta.interval_measure(a, b);
            BallMeasureBracket::around(v, err, BracketMethod::TruncatedSeries)
        }
        SystemKind::Gauss => {
            let (a, b) = (a.max(0.0), b.min(1.0));
            if b <= a {
                BallMeasureBracket::around(0.0, 0.0, BracketMethod::ClosedForm)
            } else {
                let (la, lb) = (a.ln_1p(), b.ln_1p());
                let v = (lb - la) / std::f64::consts::LN_2;
                let err = (la.abs() + lb.abs()) * f64::EPSILON / std::f64::consts::LN_2
                    + v * f64::EPSILON;
                BallMeasureBracket::around(v, err, BracketMethod::ClosedForm)
            }
        }
        SystemKind::Ifs(ifs) => {
            let a = Rational::from_f64(a).ok_or(Error::DegenerateBall(a))?;
            let b = Rational::from_f64(b).ok_or(Error::DegenerateBall(b))?;
            let (low, high) = ifs_cover(ifs, &a, &b, depth);
            BallMeasureBracket {
                low: (low * (1.0 - ULP)).max(0.0),
                high: (high * (1.0 + ULP)).min(1.0),
                method: BracketMethod::CylinderCover,
            }
        }
    })
}

/// Inner and outer cylinder covers of `[a, b]` down to `depth`.
pub fn ifs_cover(ifs: &IfsSystem, a: &Rational, b: &Rational, depth: u32) -> (f64, f64) {
    let mut low = 0.0;
    let mut high = 0.0;
    let mut stack: Vec<(Rational, Rational, f64, u32)> = Vec::new();
    let (h0, h1) = ifs.hull().clone();
    let len = ifs.hull_len();
    stack.push((h0.clone(), h1, 1.0, 0));
    while let Some((lo, hi, w, level)) = stack.pop() {
        if hi < *a || lo > *b {
            continue;
        }
        if lo >= *a && hi <= *b {
            low += w;
            high += w;
            continue;
        }
        if level >= depth {
            high += w;
            continue;
        }
        // Subcells θ_w θ_i(hull) of the cylinder θ_w(hull).
        let scale = Rational::from(&hi - &lo) / &len;
        for ((c0, c1), wi) in ifs.cells().iter().zip(ifs.weights()) {
            let a2 = (&scale * Rational::from(c0 - &h0)) + &lo;
            let b2 = (&scale * Rational::from(c1 - &h0)) + &lo;
            stack.push((a2, b2, w * wi, level + 1));
        }
    }
    (low, high)
}
