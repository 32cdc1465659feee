//! Twist functions `f` with certified evaluation and Lipschitz data.

use std::fmt;

use rug::float::Round;
use rug::{Float, Integer, Rational};
use serde::Serialize;

use crate::algebraic::AlgebraicNumber;
use crate::ball::CertifiedPoint;
use crate::error::{Error, Result};
use crate::measures::sample_key;
use crate::numbers::parse_rational;
use crate::rng::{streams, Key};
use crate::systems::{SystemKind, SystemSpec};

/// Number of dyadic pieces listed for `sqrt`; the rest has length `2^-SQRT_PIECES`.
pub const SQRT_PIECES: u32 = 60;

/// `f(x) = a x + b` on `[lo, hi)`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffinePiece {
    pub lo: Rational,
    pub hi: Rational,
    pub a: Rational,
    pub b: Rational,
}

#[derive(Clone, Debug, PartialEq)]
pub enum TwistFamily {
    Identity,
    Constant(Rational),
    /// A constant given as a real algebraic number.
    ConstantAlgebraic(AlgebraicNumber),
    /// `clamp(a x + b, 0, 1)`
    AffineClip { a: Rational, b: Rational },
    /// `a x + b mod 1`, stored through its pieces.
    AffineMod1 {
        a: Rational,
        b: Rational,
        pieces: Vec<AffinePiece>,
    },
    Sqrt,
    Piecewise(Vec<AffinePiece>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TwistSpec {
    family: TwistFamily,
    lipschitz_p: f64,
    text: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Commutation {
    Yes,
    No,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CommutationReport {
    pub result: Commutation,
    pub note: String,
}

/// One Lipschitz piece `[lo, hi)` with constant `p`.
#[derive(Clone, Debug, PartialEq)]
pub struct LipschitzPiece {
    pub lo: Rational,
    pub hi: Rational,
    pub p: f64,
}

fn mod1_pieces(a: &Rational, b: &Rational) -> Vec<AffinePiece> {
    // Breakpoints where a x + b crosses an integer, for x in [0, 1].
    let at0 = b.clone();
    let at1 = Rational::from(a + b);
    let (lo_v, hi_v) = if at0 <= at1 { (at0, at1) } else { (at1, at0) };
    let k_lo = lo_v.floor().into_numer_denom().0;
    let k_hi = hi_v.ceil().into_numer_denom().0;
    let mut cuts = vec![Rational::new(), Rational::from(1)];
    if *a != 0 {
        let mut k = k_lo.clone() + 1u32;
        while k < k_hi {
            let x = (Rational::from(&k) - b) / a;
            if x > 0 && x < 1 {
                cuts.push(x);
            }
            k += 1u32;
        }
    }
    cuts.sort();
    cuts.dedup();
    cuts.windows(2)
        .map(|w| {
            let mid = Rational::from(&w[0] + &w[1]) / 2u32;
            let shift = (Rational::from(a * &mid) + b).floor();
            AffinePiece {
                lo: w[0].clone(),
                hi: w[1].clone(),
                a: a.clone(),
                b: (b - shift),
            }
        })
        .collect()
}

impl TwistSpec {
    pub fn new(family: TwistFamily) -> Result<Self> {
        let lipschitz_p = match &family {
            TwistFamily::Identity => 1.0,
            TwistFamily::Constant(y) => {
                if *y < 0 || *y > 1 {
                    return Err(Error::invalid("f", "constant must lie in [0, 1]"));
                }
                0.0
            }
            TwistFamily::ConstantAlgebraic(y) => {
                if y.approx() < 0.0 || y.approx() > 1.0 {
                    return Err(Error::invalid("f", "constant must lie in [0, 1]"));
                }
                0.0
            }
            TwistFamily::AffineClip { a, .. } | TwistFamily::AffineMod1 { a, .. } => {
                a.to_f64().abs()
            }
            TwistFamily::Sqrt => f64::INFINITY,
            TwistFamily::Piecewise(pieces) => {
                if pieces.is_empty() {
                    return Err(Error::invalid("f", "piecewise twist needs pieces"));
                }
                let mut sorted: Vec<&AffinePiece> = pieces.iter().collect();
                sorted.sort_by(|x, y| x.lo.cmp(&y.lo));
                for w in sorted.windows(2) {
                    if w[0].hi > w[1].lo {
                        return Err(Error::invalid("f", "pieces overlap"));
                    }
                }
                for p in pieces {
                    if p.lo >= p.hi {
                        return Err(Error::invalid("f", "empty piece"));
                    }
                }
                pieces.iter().map(|p| p.a.to_f64().abs()).fold(0.0, f64::max)
            }
        };
        let text = match &family {
            TwistFamily::Identity => "identity".to_string(),
            TwistFamily::Constant(y) => format!("const:{}", fmt_q(y)),
            TwistFamily::ConstantAlgebraic(y) => format!("const:{}", y.approx()),
            TwistFamily::AffineClip { a, b } => format!("affine:{},{}", fmt_q(a), fmt_q(b)),
            TwistFamily::AffineMod1 { a, b, .. } => {
                format!("affine:{},{},mod1", fmt_q(a), fmt_q(b))
            }
            TwistFamily::Sqrt => "sqrt".to_string(),
            TwistFamily::Piecewise(p) => format!(
                "piecewise:{}",
                p.iter()
                    .map(|p| format!("{},{},{},{}", fmt_q(&p.lo), fmt_q(&p.hi), fmt_q(&p.a), fmt_q(&p.b)))
                    .collect::<Vec<_>>()
                    .join(";")
            ),
        };
        Ok(TwistSpec {
            family,
            lipschitz_p,
            text,
        })
    }

    pub fn identity() -> Self {
        Self::new(TwistFamily::Identity).unwrap()
    }

    pub fn constant(y: Rational) -> Result<Self> {
        Self::new(TwistFamily::Constant(y))
    }

    pub fn affine_mod1(a: Rational, b: Rational) -> Self {
        let pieces = mod1_pieces(&a, &b);
        Self::new(TwistFamily::AffineMod1 { a, b, pieces }).unwrap()
    }

    /// Parses `identity`, `const:y`, `const:golden_conjugate`, `affine:a,b[,mod1]`, `sqrt` or
    /// `piecewise:lo,hi,a,b;…`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let (kind, arg) = s.split_once(':').unwrap_or((s, ""));
        let mut spec = match kind {
            "identity" | "id" => Self::identity(),
            "const" if arg.trim() == "golden_conjugate" => {
                Self::new(TwistFamily::ConstantAlgebraic(AlgebraicNumber::golden_conjugate()))?
            }
            "const" => Self::constant(parse_rational("f", arg)?)?,
            "affine" => {
                let parts: Vec<&str> = arg.split(',').map(str::trim).collect();
                let mod1 = match parts.len() {
                    2 => false,
                    3 if parts[2] == "mod1" => true,
                    3 if parts[2] == "clip" => false,
                    _ => return Err(Error::invalid("f", "expected affine:a,b[,mod1]")),
                };
                let a = parse_rational("f", parts[0])?;
                let b = parse_rational("f", parts[1])?;
                if mod1 {
                    Self::affine_mod1(a, b)
                } else {
                    Self::new(TwistFamily::AffineClip { a, b })?
                }
            }
            "sqrt" => Self::new(TwistFamily::Sqrt)?,
            "piecewise" => {
                let mut pieces = Vec::new();
                for part in arg.split(';').filter(|p| !p.trim().is_empty()) {
                    let v: Vec<Rational> = part
                        .split(',')
                        .map(|x| parse_rational("f", x))
                        .collect::<Result<_>>()?;
                    if v.len() != 4 {
                        return Err(Error::invalid("f", "each piece is lo,hi,a,b"));
                    }
                    pieces.push(AffinePiece {
                        lo: v[0].clone(),
                        hi: v[1].clone(),
                        a: v[2].clone(),
                        b: v[3].clone(),
                    });
                }
                Self::new(TwistFamily::Piecewise(pieces))?
            }
            _ => {
                return Err(Error::invalid(
                    "f",
                    format!("unknown twist {s:?}; expected identity, const, affine, sqrt or piecewise"),
                ))
            }
        };
        spec.text = s.to_string();
        Ok(spec)
    }

    pub fn family(&self) -> &TwistFamily {
        &self.family
    }

    /// Global Lipschitz constant `p`; infinite for `sqrt`.
    pub fn lipschitz_p(&self) -> f64 {
        self.lipschitz_p
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.family, TwistFamily::Identity)
    }

    pub fn is_constant(&self) -> bool {
        matches!(
            self.family,
            TwistFamily::Constant(_) | TwistFamily::ConstantAlgebraic(_)
        )
    }

    /// Lipschitz pieces covering `[0, 1]` (for `sqrt`, up to `2^-SQRT_PIECES`).
    pub fn pieces(&self) -> Vec<LipschitzPiece> {
        let whole = |p: f64| {
            vec![LipschitzPiece {
                lo: Rational::new(),
                hi: Rational::from(1),
                p,
            }]
        };
        match &self.family {
            TwistFamily::Identity => whole(1.0),
            TwistFamily::Constant(_) | TwistFamily::ConstantAlgebraic(_) => whole(0.0),
            TwistFamily::AffineClip { a, .. } => whole(a.to_f64().abs()),
            TwistFamily::AffineMod1 { pieces, .. } | TwistFamily::Piecewise(pieces) => pieces
                .iter()
                .map(|p| LipschitzPiece {
                    lo: p.lo.clone(),
                    hi: p.hi.clone(),
                    p: p.a.to_f64().abs(),
                })
                .collect(),
            TwistFamily::Sqrt => (0..SQRT_PIECES)
                .map(|k| LipschitzPiece {
                    lo: Rational::from((1, 2)) >> k,
                    hi: Rational::from(1) >> k,
                    // sup of 1/(2√x) on [2^{-k-1}, 2^{-k}]
                    p: 2f64.powf((k as f64 + 1.0) / 2.0) / 2.0,
                })
                .collect(),
        }
    }

    /// Certified enclosure of `f(x)`.
    pub fn eval(&self, x: &CertifiedPoint) -> Result<CertifiedPoint> {
        let prec = x.prec_bits();
        match &self.family {
            TwistFamily::Identity => Ok(x.clone()),
            TwistFamily::Constant(y) => Ok(CertifiedPoint::from_rational(y, prec)),
            TwistFamily::ConstantAlgebraic(y) => Ok(y.ball(prec)),
            TwistFamily::AffineClip { a, b } => {
                let y = affine(x, a, b);
                let zero = Float::new(prec);
                let one = Float::with_val(prec, 1u32);
                let clamp = |v: Float| -> Float {
                    if v < zero {
                        zero.clone()
                    } else if v > one {
                        one.clone()
                    } else {
                        v
                    }
                };
                Ok(CertifiedPoint::from_bounds(&clamp(y.lo()), &clamp(y.hi()), prec))
            }
            TwistFamily::AffineMod1 { pieces, .. } | TwistFamily::Piecewise(pieces) => {
                let (lo, hi) = (x.lo(), x.hi());
                let last = pieces.iter().map(|p| &p.hi).max().unwrap();
                for p in pieces {
                    let upper_ok = hi < p.hi || (&p.hi == last && hi <= p.hi);
                    if lo >= p.lo && upper_ok {
                        return Ok(affine(x, &p.a, &p.b));
                    }
                    if hi >= p.lo && lo < p.hi {
                        return Err(Error::PieceStraddle);
                    }
                }
                Err(Error::PieceStraddle)
            }
            TwistFamily::Sqrt => {
                let lo = x.lo();
                let lo = if lo < 0 { Float::new(prec) } else { lo };
                let s_lo = Float::with_val_round(prec, lo.sqrt_ref(), Round::Down).0;
                let s_hi = Float::with_val_round(prec, x.hi().sqrt_ref(), Round::Up).0;
                Ok(CertifiedPoint::from_bounds(&s_lo, &s_hi, prec))
            }
        }
    }

    /// Exact value at a rational point, when `f` maps rationals to rationals.
    pub fn eval_exact(&self, x: &Rational) -> Option<Rational> {
        match &self.family {
            TwistFamily::Identity => Some(x.clone()),
            TwistFamily::Constant(y) => Some(y.clone()),
            TwistFamily::ConstantAlgebraic(y) => y.as_rational().cloned(),
            TwistFamily::AffineClip { a, b } => {
                let v = Rational::from(a * x) + b;
                Some(v.clamp(&Rational::new(), &Rational::from(1)))
            }
            TwistFamily::AffineMod1 { pieces, .. } | TwistFamily::Piecewise(pieces) => pieces
                .iter()
                .find(|p| p.lo <= *x && *x < p.hi)
                .map(|p| Rational::from(&p.a * x) + &p.b),
            TwistFamily::Sqrt => None,
        }
    }

    /// Whether `T ∘ f = f ∘ T`.
    pub fn commutes_with(&self, sys: &SystemSpec, trials: u64, seed: u64) -> CommutationReport {
        let report = |result, note: &str| CommutationReport {
            result,
            note: note.to_string(),
        };
        match &self.family {
            TwistFamily::Identity => return report(Commutation::Yes, "identity commutes with every map"),
            TwistFamily::Constant(y) => {
                return match is_fixed_point(sys, y) {
                    Some(true) => report(Commutation::Yes, "constant at a fixed point of T"),
                    Some(false) => report(
                        Commutation::No,
                        "constant twist commutes only at a fixed point of T, and T(y) != y",
                    ),
                    None => report(Commutation::Inconclusive, "T is undefined at the constant"),
                };
            }
            TwistFamily::AffineMod1 { a, .. } if sys.is_rotation() && *a == 1 => {
                return report(Commutation::Yes, "translations of the circle commute");
            }
            _ => {}
        }
        let prec = 128;
        let prep = sys.prepare(prec);
        for i in 0..trials {
            let key = Key::new(seed, streams::COMMUTATION, i);
            let x = sample_key(sys, key).0.enclosure(sys, prec);
            let Ok(fx) = self.eval(&x) else { continue };
            let Ok((_, tfx)) = prep.step(&fx) else { continue };
            let Ok((_, tx)) = prep.step(&x) else { continue };
            let Ok(ftx) = self.eval(&tx) else { continue };
            let d = prep.distance(&tfx, &ftx);
            if d.lo() > 0 {
                return CommutationReport {
                    result: Commutation::No,
                    note: format!(
                        "certified witness at x = {:.17}: T(f(x)) = {:.17}, f(T(x)) = {:.17}",
                        x.mid_f64(),
                        tfx.mid_f64(),
                        ftx.mid_f64()
                    ),
                };
            }
        }
        report(
            Commutation::Inconclusive,
            "no certified witness found; equality is not provable by sampling",
        )
    }
}

fn affine(x: &CertifiedPoint, a: &Rational, b: &Rational) -> CertifiedPoint {
    let prec = x.prec_bits();
    let y = if a.is_integer() {
        match a.numer().to_i64() {
            Some(k) if k >= 0 => x.mul_u64(k as u64),
            Some(k) => x.mul_u64(k.unsigned_abs()).neg(),
            None => x.mul(&CertifiedPoint::from_rational(a, prec)),
        }
    } else {
        x.mul(&CertifiedPoint::from_rational(a, prec))
    };
    y.add(&CertifiedPoint::from_rational(b, prec))
}

/// Exact test of `T(y) = y` for rational `y`; `None` where `T` is undefined.
pub fn is_fixed_point(sys: &SystemSpec, y: &Rational) -> Option<bool> {
    match sys.kind() {
        SystemKind::Beta(b) => {
            if *y < 0 || *y >= 1 {
                return None;
            }
            let f = b.beta();
            let e = f.mul_theta(&f.elem_rational(y));
            let k = f.floor(&e).ok()?;
            let t = f.sub_int(&e, &k);
            Some(f.sub(&t, &f.elem_rational(y)).is_zero())
        }
        SystemKind::Gauss => {
            if *y <= 0 || *y > 1 {
                return None;
            }
            let inv = Rational::from(y.recip_ref());
            let k: Integer = inv.clone().floor().into_numer_denom().0;
            Some(inv - k == *y)
        }
        SystemKind::Ifs(ifs) => {
            let hits: Vec<usize> = ifs
                .cells()
                .iter()
                .enumerate()
                .filter(|(_, (lo, hi))| lo <= y && y <= hi)
                .map(|(i, _)| i)
                .collect();
            if hits.len() != 1 {
                return None;
            }
            let m = &ifs.maps()[hits[0]];
            Some(Rational::from(y - &m.translation) / &m.ratio == *y)
        }
        SystemKind::Rotation(_) => Some(false),
    }
}

fn fmt_q(q: &Rational) -> String {
    crate::systems::fmt_rational(q)
}

impl fmt::Display for TwistSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}
