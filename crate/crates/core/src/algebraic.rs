//! Exact arithmetic in a number field `Q(θ)` generated by one real root.
//!
//! Elements are coefficient vectors over the power basis `1, θ, …, θ^{d-1}`.
//! Equality with zero is exact; signs and floors are decided by evaluating
//! certified enclosures at increasing precision, which always terminates for
//! nonzero elements.

use std::cmp::Ordering;
use std::fmt;

use rug::float::Round;
use rug::{Float, Integer, Rational};

use crate::ball::CertifiedPoint;
use crate::error::{Error, Result};

/// Cap on the precision used to decide signs of nonzero field elements.
pub const SIGN_PREC_CAP: u32 = 1 << 16;

/// A real algebraic number `θ` given by the relation `θ^d = Σ rel[i] θ^i`
/// and an isolating interval `[lo, hi]` on which the defining polynomial
/// changes sign exactly once.
#[derive(Clone, PartialEq)]
pub struct AlgebraicNumber {
    rel: Vec<Rational>,
    lo: Rational,
    hi: Rational,
    approx: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FieldElem {
    coeffs: Vec<Rational>,
}

impl FieldElem {
    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == 0)
    }
}

impl AlgebraicNumber {
    /// A rational number viewed as a degree-one algebraic number.
    pub fn rational(q: Rational) -> Self {
        let approx = q.to_f64();
        AlgebraicNumber {
            rel: vec![q.clone()],
            lo: q.clone(),
            hi: q,
            approx,
        }
    }

    /// Root of `x^d - Σ rel[i] x^i` in `[lo, hi]`. The polynomial is assumed
    /// irreducible over Q; the sign change is checked here.
    pub fn new(rel: Vec<Rational>, lo: Rational, hi: Rational) -> Result<Self> {
        if rel.is_empty() {
            return Err(Error::invalid("algebraic", "empty relation"));
        }
        if rel.len() == 1 {
            return Ok(Self::rational(rel[0].clone()));
        }
        let a = AlgebraicNumber {
            approx: Rational::from(&lo + &hi).to_f64() / 2.0,
            rel,
            lo,
            hi,
        };
        let (plo, phi) = (a.poly_at(&a.lo), a.poly_at(&a.hi));
        if plo.cmp0() == phi.cmp0() || plo == 0 || phi == 0 {
            return Err(Error::invalid(
                "algebraic",
                "isolating interval does not bracket a simple root",
            ));
        }
        let mut a = a;
        a.approx = a.ball(64).mid_f64();
        Ok(a)
    }

    /// The golden ratio, `θ² = θ + 1`.
    pub fn golden() -> Self {
        Self::new(
            vec![Rational::from(1), Rational::from(1)],
            Rational::from((3, 2)),
            Rational::from(2),
        )
        .expect("golden ratio bracket")
    }

    /// The tribonacci constant, `θ³ = θ² + θ + 1`.
    pub fn tribonacci() -> Self {
        Self::new(
            vec![Rational::from(1); 3],
            Rational::from((9, 5)),
            Rational::from(2),
        )
        .expect("tribonacci bracket")
    }

    /// `(√5 − 1)/2`, the fractional part of the golden ratio: `θ² = 1 − θ`.
    pub fn golden_conjugate() -> Self {
        Self::new(
            vec![Rational::from(1), Rational::from(-1)],
            Rational::from((3, 5)),
            Rational::from((13, 20)),
        )
        .expect("golden conjugate bracket")
    }

    /// The larger root of `θ² = kθ + l`, which is rational when the
    /// discriminant is a rational square.
    pub fn quadratic(k: Rational, l: Rational) -> Result<Self> {
        let disc = Rational::from(&k * &k) + Rational::from(4 * &l);
        if disc < 0 {
            return Err(Error::invalid("beta", "quadratic has no real root"));
        }
        let (num, den) = disc.clone().into_numer_denom();
        if num.is_perfect_square() && den.is_perfect_square() {
            let root = Rational::from((num.sqrt(), den.sqrt()));
            return Ok(Self::rational((k + root) / 2u32));
        }
        let approx = (k.to_f64() + disc.to_f64().sqrt()) / 2.0;
        let mut w = Rational::from((1, 1_000_000));
        loop {
            let lo = Rational::from_f64(approx).unwrap() - &w;
            let hi = Rational::from_f64(approx).unwrap() + &w;
            if let Ok(a) = Self::new(vec![l.clone(), k.clone()], lo, hi) {
                return Ok(a);
            }
            w *= 4u32;
            if w > 1 {
                return Err(Error::invalid("beta", "could not isolate quadratic root"));
            }
        }
    }

    pub fn degree(&self) -> usize {
        self.rel.len()
    }

    pub fn relation(&self) -> &[Rational] {
        &self.rel
    }

    pub fn as_rational(&self) -> Option<&Rational> {
        (self.rel.len() == 1).then(|| &self.rel[0])
    }

    pub fn approx(&self) -> f64 {
        self.approx
    }

    fn poly_at(&self, x: &Rational) -> Rational {
        // x^d - Σ rel[i] x^i by Horner on the full coefficient list
        let d = self.rel.len();
        let mut acc = Rational::from(1);
        for i in (0..d).rev() {
            acc *= x;
            acc -= &self.rel[i];
        }
        acc
    }

    /// Certified enclosure of θ with radius about `2^-prec`.
    pub fn ball(&self, prec: u32) -> CertifiedPoint {
        if let Some(q) = self.as_rational() {
            return CertifiedPoint::from_rational(q, prec);
        }
        let work = prec + 32;
        let mut x = Float::with_val(work, self.approx);
        let d = self.rel.len();
        // Newton on P(x) = x^d - Σ rel[i] x^i.
        let mut iters = 0;
        loop {
            let mut p = Float::with_val(work, 1u32);
            let mut dp = Float::with_val(work, 0u32);
            for i in (0..d).rev() {
                dp = dp * &x + &p;
                p = p * &x - &self.rel[i];
            }
            let step = p / dp;
            let small = step.is_zero()
                || step.get_exp().is_some_and(|e| e < -(work as i32) + 4);
            x -= step;
            iters += 1;
            if small || iters > 200 {
                break;
            }
        }
        let mut eps = Float::with_val(64, 1u32) >> (prec as i32);
        for _ in 0..64 {
            let a = x.to_rational().unwrap() - eps.to_rational().unwrap();
            let b = x.to_rational().unwrap() + eps.to_rational().unwrap();
            if a >= self.lo && b <= self.hi {
                let (pa, pb) = (self.poly_at(&a), self.poly_at(&b));
                if pa.cmp0() != pb.cmp0() {
                    let mid = Float::with_val(prec, &x);
                    let diff = Float::with_val(work, &x - &mid).abs();
                    let shift = Float::with_val_round(64, &diff, Round::Up).0;
                    let rad = Float::with_val_round(64, &eps + &shift, Round::Up).0;
                    return CertifiedPoint::new(mid, &rad);
                }
            }
            eps <<= 2;
        }
        // The isolating interval itself is always a valid enclosure.
        let lo = Float::with_val_round(prec, &self.lo, Round::Down).0;
        let hi = Float::with_val_round(prec, &self.hi, Round::Up).0;
        CertifiedPoint::from_bounds(&lo, &hi, prec)
    }

    pub fn elem_int(&self, k: i64) -> FieldElem {
        let mut coeffs = vec![Rational::new(); self.degree()];
        coeffs[0] = Rational::from(k);
        FieldElem { coeffs }
    }

    pub fn elem_rational(&self, q: &Rational) -> FieldElem {
        let mut coeffs = vec![Rational::new(); self.degree()];
        coeffs[0] = q.clone();
        FieldElem { coeffs }
    }

    /// θ itself.
    pub fn elem_theta(&self) -> FieldElem {
        let e = self.elem_int(1);
        self.mul_theta(&e)
    }

    pub fn add(&self, a: &FieldElem, b: &FieldElem) -> FieldElem {
        FieldElem {
            coeffs: a
                .coeffs
                .iter()
                .zip(&b.coeffs)
                .map(|(x, y)| Rational::from(x + y))
                .collect(),
        }
    }

    pub fn sub(&self, a: &FieldElem, b: &FieldElem) -> FieldElem {
        FieldElem {
            coeffs: a
                .coeffs
                .iter()
                .zip(&b.coeffs)
                .map(|(x, y)| Rational::from(x - y))
                .collect(),
        }
    }

    pub fn sub_int(&self, a: &FieldElem, k: &Integer) -> FieldElem {
        let mut c = a.clone();
        c.coeffs[0] -= k;
        c
    }

    pub fn scale(&self, a: &FieldElem, q: &Rational) -> FieldElem {
        FieldElem {
            coeffs: a.coeffs.iter().map(|x| Rational::from(x * q)).collect(),
        }
    }

    pub fn mul_theta(&self, a: &FieldElem) -> FieldElem {
        let d = self.degree();
        let top = a.coeffs[d - 1].clone();
        let mut coeffs = vec![Rational::new(); d];
        for i in (1..d).rev() {
            coeffs[i] = a.coeffs[i - 1].clone();
        }
        for (c, r) in coeffs.iter_mut().zip(&self.rel) {
            *c += Rational::from(&top * r);
        }
        FieldElem { coeffs }
    }

    /// Multiplication by θ^{-1}; θ is nonzero so `rel[0] != 0`.
    pub fn mul_theta_inv(&self, a: &FieldElem) -> FieldElem {
        let d = self.degree();
        let r0 = &self.rel[0];
        // θ^{-1} = (θ^{d-1} - Σ_{i>=1} rel[i] θ^{i-1}) / rel[0]
        let mut inv = vec![Rational::new(); d];
        inv[d - 1] = Rational::from(1);
        for i in 1..d {
            inv[i - 1] -= &self.rel[i];
        }
        let mut coeffs = vec![Rational::new(); d];
        for i in 0..d {
            coeffs[i] = Rational::from(&a.coeffs[0] * &inv[i]) / r0;
        }
        for i in 1..d {
            coeffs[i - 1] += &a.coeffs[i];
        }
        FieldElem { coeffs }
    }

    pub fn mul(&self, a: &FieldElem, b: &FieldElem) -> FieldElem {
        let d = self.degree();
        let mut acc = FieldElem {
            coeffs: vec![Rational::new(); d],
        };
        for i in (0..d).rev() {
            acc = self.mul_theta(&acc);
            let t = self.scale(b, &a.coeffs[i]);
            acc = self.add(&acc, &t);
        }
        acc
    }

    /// Exact value when the field is Q.
    pub fn as_exact(&self, a: &FieldElem) -> Option<Rational> {
        (self.degree() == 1).then(|| a.coeffs[0].clone())
    }

    pub fn eval(&self, a: &FieldElem, prec: u32) -> CertifiedPoint {
        if let Some(q) = self.as_exact(a) {
            return CertifiedPoint::from_rational(&q, prec);
        }
        let theta = self.ball(prec + 16);
        let d = self.degree();
        let mut acc = CertifiedPoint::from_rational(&a.coeffs[d - 1], prec + 16);
        for i in (0..d - 1).rev() {
            acc = acc.mul(&theta);
            acc = acc.add(&CertifiedPoint::from_rational(&a.coeffs[i], prec + 16));
        }
        acc
    }

    pub fn to_f64(&self, a: &FieldElem) -> f64 {
        self.eval(a, 128).mid_f64()
    }

    pub fn sign(&self, a: &FieldElem) -> Result<Ordering> {
        if a.is_zero() {
            return Ok(Ordering::Equal);
        }
        if let Some(q) = self.as_exact(a) {
            return Ok(q.cmp0());
        }
        let mut prec = 128;
        while prec <= SIGN_PREC_CAP {
            let b = self.eval(a, prec);
            if b.lo() > 0 {
                return Ok(Ordering::Greater);
            }
            if b.hi() < 0 {
                return Ok(Ordering::Less);
            }
            prec *= 2;
        }
        Err(Error::PrecisionExhausted {
            bits: SIGN_PREC_CAP,
            what: "deciding the sign of a field element".into(),
        })
    }

    pub fn cmp(&self, a: &FieldElem, b: &FieldElem) -> Result<Ordering> {
        self.sign(&self.sub(a, b))
    }

    pub fn floor(&self, a: &FieldElem) -> Result<Integer> {
        if let Some(q) = self.as_exact(a) {
            return Ok(q.floor().into_numer_denom().0);
        }
        let mut prec = 128;
        while prec <= SIGN_PREC_CAP {
            let b = self.eval(a, prec);
            if let Some(k) = b.floor() {
                return Ok(k);
            }
            let k = b.mid().to_integer().unwrap_or_default();
            if self.sub_int(a, &k).is_zero() {
                return Ok(k);
            }
            prec *= 2;
        }
        Err(Error::PrecisionExhausted {
            bits: SIGN_PREC_CAP,
            what: "deciding the floor of a field element".into(),
        })
    }
}

impl fmt::Debug for AlgebraicNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AlgebraicNumber(≈{}, rel={:?})", self.approx, self.rel)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_ball_is_tight() {
        let g = AlgebraicNumber::golden();
        let b = g.ball(200);
        assert!(b.rad_log2() < -190.0);
        let sq = b.mul(&b);
        let rhs = b.add(&CertifiedPoint::from_f64(1.0, 200));
        assert!(sq.overlaps(&rhs));
        assert!((b.mid_f64() - 1.618033988749895).abs() < 1e-15);
    }

    #[test]
    fn tribonacci_value() {
        let t = AlgebraicNumber::tribonacci();
        assert!((t.approx() - 1.839286755214161).abs() < 1e-14);
    }

    #[test]
    fn inverse_is_exact() {
        for a in [AlgebraicNumber::golden(), AlgebraicNumber::tribonacci()] {
            let one = a.elem_int(1);
            let x = a.mul_theta_inv(&a.mul_theta(&one));
            assert_eq!(x, one);
            let theta = a.elem_theta();
            let y = a.mul(&theta, &a.mul_theta_inv(&one));
            assert_eq!(y, one);
        }
    }

    #[test]
    fn floor_of_exact_integer() {
        let g = AlgebraicNumber::golden();
        // θ·(θ − 1) = 1 exactly
        let th = g.elem_theta();
        let x = g.mul(&th, &g.sub_int(&th, &Integer::from(1)));
        assert_eq!(g.floor(&x).unwrap(), 1);
        assert_eq!(g.sign(&g.sub_int(&x, &Integer::from(1))).unwrap(), Ordering::Equal);
    }

    #[test]
    fn square_discriminant_is_rational() {
        let q = AlgebraicNumber::quadratic(Rational::from(1), Rational::from(2)).unwrap();
        assert_eq!(q.as_rational(), Some(&Rational::from(2)));
        let s = AlgebraicNumber::quadratic(Rational::from(2), Rational::from(1)).unwrap();
        assert!((s.approx() - (1.0 + 2f64.sqrt())).abs() < 1e-12);
    }
}
