//! Midpoint-radius enclosures of real numbers.
//!
//! A [`CertifiedPoint`] carries an MPFR midpoint at working precision and a
//! short radius that is only ever rounded up. Every operation returns an
//! enclosure of the exact result whenever the inputs enclose their exact
//! values.

use std::cmp::Ordering;
use std::fmt;

use rug::float::Round;
use rug::ops::AssignRound;
use rug::{Float, Integer, Rational};

/// Precision of the radius. Radii are upper bounds, so a short mantissa
/// rounded upward is enough.
pub const RAD_PREC: u32 = 30;

#[derive(Clone, PartialEq)]
pub struct CertifiedPoint {
    mid: Float,
    rad: Float,
}

pub(crate) fn up<T>(src: T) -> Float
where
    Float: AssignRound<T, Round = Round, Ordering = Ordering>,
{
    let mut f = Float::new(RAD_PREC);
    f.assign_round(src, Round::Up);
    f
}

pub(crate) fn down<T>(src: T) -> Float
where
    Float: AssignRound<T, Round = Round, Ordering = Ordering>,
{
    let mut f = Float::new(RAD_PREC);
    f.assign_round(src, Round::Down);
    f
}

fn at_prec<T>(prec: u32, src: T) -> (Float, Ordering)
where
    Float: AssignRound<T, Round = Round, Ordering = Ordering>,
{
    let mut f = Float::new(prec);
    let ord = f.assign_round(src, Round::Nearest);
    (f, ord)
}

/// One unit in the last place of `x` at its own precision, as a radius.
pub(crate) fn ulp(x: &Float) -> Float {
    match x.get_exp() {
        Some(e) => {
            let shift = e - x.prec() as i32;
            Float::with_val(RAD_PREC, 1u32) << shift
        }
        None => Float::with_val(RAD_PREC, 0u32),
    }
}

fn rounding(mid: &Float, ord: Ordering) -> Option<Float> {
    (ord != Ordering::Equal).then(|| ulp(mid))
}

impl CertifiedPoint {
    /// An exact point (zero radius).
    pub fn exact(mid: Float) -> Self {
        CertifiedPoint {
            mid,
            rad: Float::new(RAD_PREC),
        }
    }

    pub fn new(mid: Float, rad: &Float) -> Self {
        CertifiedPoint {
            mid,
            rad: up(rad.abs_ref()),
        }
    }

    pub fn zero(prec: u32) -> Self {
        Self::exact(Float::new(prec))
    }

    pub fn from_f64(x: f64, prec: u32) -> Self {
        let (mid, ord) = at_prec(prec, x);
        let mut p = Self::exact(mid);
        if let Some(e) = rounding(&p.mid, ord) {
            p.rad = e;
        }
        p
    }

    pub fn from_integer(i: &Integer, prec: u32) -> Self {
        let (mid, ord) = at_prec(prec, i);
        let rad = rounding(&mid, ord).unwrap_or_else(|| Float::new(RAD_PREC));
        CertifiedPoint { mid, rad }
    }

    pub fn from_rational(q: &Rational, prec: u32) -> Self {
        let (mid, ord) = at_prec(prec, q);
        let rad = rounding(&mid, ord).unwrap_or_else(|| Float::new(RAD_PREC));
        CertifiedPoint { mid, rad }
    }

    /// Enclosure of the closed interval `[lo, hi]`.
    pub fn from_bounds(lo: &Float, hi: &Float, prec: u32) -> Self {
        let (mid, _) = at_prec(prec, lo + hi);
        let mid = mid / 2u32;
        let r1 = up(&mid - lo);
        let r2 = up(hi - &mid);
        let rad = if r1 > r2 { r1 } else { r2 };
        CertifiedPoint { mid, rad }
    }

    pub fn mid(&self) -> &Float {
        &self.mid
    }

    pub fn rad(&self) -> &Float {
        &self.rad
    }

    pub fn prec_bits(&self) -> u32 {
        self.mid.prec()
    }

    pub fn is_exact(&self) -> bool {
        self.rad.is_zero()
    }

    pub fn mid_f64(&self) -> f64 {
        self.mid.to_f64()
    }

    pub fn rad_f64(&self) -> f64 {
        self.rad.to_f64_round(Round::Up)
    }

    /// log2 of the radius, `-inf` for exact points.
    pub fn rad_log2(&self) -> f64 {
        if self.rad.is_zero() {
            return f64::NEG_INFINITY;
        }
        let e = self.rad.get_exp().unwrap_or(0) as f64;
        let m = (self.rad.clone() >> self.rad.get_exp().unwrap_or(0)).to_f64();
        e + m.log2()
    }

    /// Lower endpoint at working precision, rounded down.
    pub fn lo(&self) -> Float {
        Float::with_val_round(self.prec_bits(), &self.mid - &self.rad, Round::Down).0
    }

    /// Upper endpoint at working precision, rounded up.
    pub fn hi(&self) -> Float {
        Float::with_val_round(self.prec_bits(), &self.mid + &self.rad, Round::Up).0
    }

    pub fn contains_rational(&self, q: &Rational) -> bool {
        self.lo() <= *q && *q <= self.hi()
    }

    pub fn contains_zero(&self) -> bool {
        self.lo() <= 0 && self.hi() >= 0
    }

    /// Whether `other` is contained in this enclosure.
    pub fn contains(&self, other: &CertifiedPoint) -> bool {
        self.lo() <= other.lo() && other.hi() <= self.hi()
    }

    pub fn overlaps(&self, other: &CertifiedPoint) -> bool {
        self.lo() <= other.hi() && other.lo() <= self.hi()
    }

    /// The enclosure enlarged by `extra`.
    pub fn widen(&self, extra: &Float) -> Self {
        CertifiedPoint {
            mid: self.mid.clone(),
            rad: up(&self.rad + extra),
        }
    }

    /// The same enclosure re-rounded to `prec` bits.
    pub fn with_prec(&self, prec: u32) -> Self {
        let (mid, ord) = at_prec(prec, &self.mid);
        let rad = match rounding(&mid, ord) {
            Some(e) => up(&self.rad + &e),
            None => self.rad.clone(),
        };
        CertifiedPoint { mid, rad }
    }

    fn finish(mid: Float, ord: Ordering, rad: Float) -> Self {
        let rad = match rounding(&mid, ord) {
            Some(e) => up(&rad + &e),
            None => rad,
        };
        CertifiedPoint { mid, rad }
    }

    fn out_prec(&self, other: &CertifiedPoint) -> u32 {
        self.prec_bits().max(other.prec_bits())
    }

    pub fn add(&self, other: &CertifiedPoint) -> Self {
        let (mid, ord) = at_prec(self.out_prec(other), &self.mid + &other.mid);
        Self::finish(mid, ord, up(&self.rad + &other.rad))
    }

    pub fn sub(&self, other: &CertifiedPoint) -> Self {
        let (mid, ord) = at_prec(self.out_prec(other), &self.mid - &other.mid);
        Self::finish(mid, ord, up(&self.rad + &other.rad))
    }

    pub fn neg(&self) -> Self {
        CertifiedPoint {
            mid: -self.mid.clone(),
            rad: self.rad.clone(),
        }
    }

    pub fn abs(&self) -> Self {
        CertifiedPoint {
            mid: self.mid.clone().abs(),
            rad: self.rad.clone(),
        }
    }

    pub fn add_integer(&self, i: &Integer) -> Self {
        let (mid, ord) = at_prec(self.prec_bits(), &self.mid + i);
        Self::finish(mid, ord, self.rad.clone())
    }

    pub fn sub_integer(&self, i: &Integer) -> Self {
        let (mid, ord) = at_prec(self.prec_bits(), &self.mid - i);
        Self::finish(mid, ord, self.rad.clone())
    }

    pub fn mul(&self, other: &CertifiedPoint) -> Self {
        let (mid, ord) = at_prec(self.out_prec(other), &self.mid * &other.mid);
        let a = up(self.mid.abs_ref());
        let b = up(other.mid.abs_ref());
        let t1 = up(&a * &other.rad);
        let t2 = up(&b * &self.rad);
        let t3 = up(&self.rad * &other.rad);
        let rad = up(&up(&t1 + &t2) + &t3);
        Self::finish(mid, ord, rad)
    }

    pub fn mul_u64(&self, k: u64) -> Self {
        let (mid, ord) = at_prec(self.prec_bits(), &self.mid * k);
        Self::finish(mid, ord, up(&self.rad * k))
    }

    /// Multiplication by an exact power of two.
    pub fn mul_pow2(&self, e: i32) -> Self {
        CertifiedPoint {
            mid: self.mid.clone() << e,
            rad: self.rad.clone() << e,
        }
    }

    /// Enclosure of `1/x`; `None` when the enclosure meets zero.
    pub fn recip(&self) -> Option<Self> {
        let abs_lo = down(&Float::with_val(RAD_PREC.max(64), self.mid.abs_ref()) - &self.rad);
        if abs_lo <= 0 {
            return None;
        }
        let (mid, ord) = at_prec(self.prec_bits(), self.mid.recip_ref());
        // |1/x - 1/m| <= r / (|m| (|m| - r))
        let den = down(&down(self.mid.abs_ref()) * &abs_lo);
        let rad = up(&self.rad / &den);
        Some(Self::finish(mid, ord, rad))
    }

    /// Enclosure of `sqrt(x)` for `x >= 0`; `None` if the enclosure dips below zero.
    pub fn sqrt(&self) -> Option<Self> {
        let lo = self.lo();
        if lo < 0 {
            return None;
        }
        let hi = self.hi();
        let p = self.prec_bits();
        let s_lo = Float::with_val_round(p, lo.sqrt_ref(), Round::Down).0;
        let s_hi = Float::with_val_round(p, hi.sqrt_ref(), Round::Up).0;
        Some(Self::from_bounds(&s_lo, &s_hi, p))
    }

    /// The common floor of every point in the enclosure, or `None` if the
    /// enclosure contains an integer in its interior or at its upper end.
    pub fn floor(&self) -> Option<Integer> {
        let lo = self.lo().floor();
        let hi = self.hi().floor();
        if lo != hi {
            return None;
        }
        lo.to_integer()
    }

    /// Nearest-integer distance `dist(x, Z)` enclosure.
    pub fn dist_to_integers(&self) -> Self {
        let n = self.mid.to_integer().unwrap_or_default();
        let y = self.sub_integer(&n);
        if y.lo() >= -0.5f64 && y.hi() <= 0.5f64 {
            return y.abs();
        }
        // Near a half-integer the nearest integer is ambiguous.
        let half = Float::with_val(self.prec_bits(), 0.5f64);
        let a = y.abs();
        let far = Float::with_val_round(self.prec_bits(), 1u32 - a.abs_hi(), Round::Down).0;
        let near = a.lo();
        let lo = if far < near { far } else { near };
        CertifiedPoint::from_bounds(&lo, &half, self.prec_bits())
    }

    /// Upper bound of `|x|` at working precision.
    pub fn abs_hi(&self) -> Float {
        Float::with_val_round(self.prec_bits(), self.mid.abs_ref(), Round::Up).0 + &self.rad
    }

    /// Certified `x < q`: true only if every point of the enclosure is below.
    pub fn certainly_lt(&self, q: &Float) -> bool {
        self.hi() < *q
    }

    /// Certified `x >= q`.
    pub fn certainly_ge(&self, q: &Float) -> bool {
        self.lo() >= *q
    }
}

impl fmt::Debug for CertifiedPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "CertifiedPoint({:.20e} ± {:.3e} @{}b)",
            self.mid.to_f64(),
            self.rad.to_f64(),
            self.prec_bits()
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    #[test]
    fn rational_enclosure_contains_value() {
        let third = q(1, 3);
        let b = CertifiedPoint::from_rational(&third, 64);
        assert!(b.contains_rational(&third));
        assert!(!b.is_exact());
        let half = CertifiedPoint::from_rational(&q(1, 2), 64);
        assert!(half.is_exact());
    }

    #[test]
    fn arithmetic_encloses_exact_results() {
        let a = CertifiedPoint::from_rational(&q(1, 3), 80);
        let b = CertifiedPoint::from_rational(&q(2, 7), 80);
        assert!(a.add(&b).contains_rational(&(q(1, 3) + q(2, 7))));
        assert!(a.sub(&b).contains_rational(&(q(1, 3) - q(2, 7))));
        assert!(a.mul(&b).contains_rational(&(q(1, 3) * q(2, 7))));
        assert!(a.recip().unwrap().contains_rational(&q(3, 1)));
    }

    #[test]
    fn recip_rejects_zero() {
        let z = CertifiedPoint::from_f64(0.0, 64).widen(&Float::with_val(30, 1e-9));
        assert!(z.recip().is_none());
    }

    #[test]
    fn floor_detects_straddle() {
        let x = CertifiedPoint::from_f64(1.0, 64).widen(&Float::with_val(30, 1e-6));
        assert_eq!(x.floor(), None);
        let y = CertifiedPoint::from_f64(1.5, 64).widen(&Float::with_val(30, 1e-6));
        assert_eq!(y.floor(), Some(Integer::from(1)));
        // exact boundary points belong to the cell on their right
        let z = CertifiedPoint::from_f64(1.0, 64);
        assert_eq!(z.floor(), Some(Integer::from(1)));
    }

    #[test]
    fn sqrt_encloses() {
        let two = CertifiedPoint::from_f64(2.0, 128);
        let s = two.sqrt().unwrap();
        let sq = s.mul(&s);
        assert!(sq.contains_rational(&q(2, 1)));
    }

    #[test]
    fn dist_to_integers_is_circle_distance() {
        let x = CertifiedPoint::from_rational(&q(-9, 10), 64);
        let d = x.dist_to_integers();
        assert!(d.contains_rational(&q(1, 10)));
    }
}
