//! The β-transformation `x ↦ βx mod 1` and its expansion of 1.

use std::cmp::Ordering;

use rug::Integer;

use crate::algebraic::{AlgebraicNumber, FieldElem};
use crate::ball::CertifiedPoint;
use crate::error::Result;

/// Terms of the Rényi series are kept until their total tail drops below this.
const SERIES_TAIL: f64 = 1e-17;
const SERIES_CAP: usize = 20_000;

/// Greedy expansion of 1: digits `ξ_k = ⌊β T^{k-1}(1)⌋` and remainders `T^k(1)`.
#[derive(Clone, Debug)]
pub struct OneExpansion {
    pub digits: Vec<u64>,
    /// `orbit[k] = T^k(1)`, starting with `T^0(1) = 1`.
    pub orbit: Vec<FieldElem>,
    /// First `k` with `T^k(1) = 0`, i.e. the length of a finite expansion.
    pub zero_at: Option<usize>,
}

/// Expands 1 in base β to at most `n` digits, stopping early at an exact zero.
pub fn expand_one(beta: &AlgebraicNumber, n: usize) -> Result<OneExpansion> {
    let mut orbit = vec![beta.elem_int(1)];
    let mut digits = Vec::new();
    let mut zero_at = None;
    for k in 1..=n {
        let y = beta.mul_theta(&orbit[k - 1]);
        let d = beta.floor(&y)?;
        let r = beta.sub_int(&y, &d);
        digits.push(d.to_u64().expect("digit fits in u64"));
        let done = r.is_zero();
        orbit.push(r);
        if done {
            zero_at = Some(k);
            break;
        }
    }
    Ok(OneExpansion {
        digits,
        orbit,
        zero_at,
    })
}

#[derive(Clone, Debug)]
pub struct BetaSystem {
    beta: AlgebraicNumber,
    beta_f64: f64,
    int_beta: Option<u64>,
    floor_beta: u64,
    expansion: OneExpansion,
    /// Breakpoints `T^k(1)` of the Rényi density and their weights `β^{-k}`.
    levels: Vec<(f64, f64)>,
    level_balls: Vec<CertifiedPoint>,
    normalizer: f64,
    series_tail: f64,
}

impl BetaSystem {
    pub fn new(beta: AlgebraicNumber) -> Result<Self> {
        let beta_f64 = beta.approx();
        let floor_beta = beta.floor(&beta.elem_theta())?.to_u64().unwrap_or(u64::MAX);
        let int_beta = match beta.as_rational() {
            Some(q) if q.is_integer() => Some(floor_beta),
            _ => None,
        };
        let tail_factor = beta_f64 / (beta_f64 - 1.0);
        let mut terms = 1;
        while terms < SERIES_CAP && beta_f64.powi(-(terms as i32)) * tail_factor > SERIES_TAIL {
            terms += 1;
        }
        let expansion = expand_one(&beta, terms)?;
        let mut levels = Vec::new();
        let mut level_balls = Vec::new();
        let mut w = 1.0;
        for t in expansion.orbit.iter().take(terms) {
            if t.is_zero() {
                break;
            }
            levels.push((beta.to_f64(t), w));
            level_balls.push(beta.eval(t, 192));
            w /= beta_f64;
        }
        let series_tail = if expansion.zero_at.is_some() {
            0.0
        } else {
            w * tail_factor
        };
        let normalizer = levels.iter().map(|(s, w)| s * w).sum::<f64>();
        Ok(BetaSystem {
            beta,
            beta_f64,
            int_beta,
            floor_beta,
            expansion,
            levels,
            level_balls,
            normalizer,
            series_tail,
        })
    }

    pub fn beta(&self) -> &AlgebraicNumber {
        &self.beta
    }

    pub fn beta_f64(&self) -> f64 {
        self.beta_f64
    }

    pub fn int_beta(&self) -> Option<u64> {
        self.int_beta
    }

    pub fn floor_beta(&self) -> u64 {
        self.floor_beta
    }

    pub fn branch_count(&self) -> u64 {
        // ⌈β⌉ cells [i/β, (i+1)/β), the last one truncated at 1
        self.int_beta.unwrap_or(self.floor_beta + 1)
    }

    pub fn expansion(&self) -> &OneExpansion {
        &self.expansion
    }

    /// Unnormalized density `Σ_{k : x < T^k(1)} β^{-k}` and its breakpoints.
    pub fn levels(&self) -> &[(f64, f64)] {
        &self.levels
    }

    pub fn level_balls(&self) -> &[CertifiedPoint] {
        &self.level_balls
    }

    /// `∫ Σ_k β^{-k} 1_{[0, T^k 1)}`, the constant that normalizes the density.
    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    /// Upper bound on the omitted part of the series, before normalization.
    pub fn series_tail(&self) -> f64 {
        self.series_tail
    }

    pub fn unnormalized_density(&self, x: f64) -> f64 {
        self.levels
            .iter()
            .filter(|(s, _)| x < *s)
            .map(|(_, w)| w)
            .sum()
    }

    pub fn density(&self, x: f64) -> f64 {
        self.unnormalized_density(x) / self.normalizer
    }

    /// Supremum of the unnormalized density (its value near 0).
    pub fn density_sup(&self) -> f64 {
        self.levels.iter().map(|(_, w)| w).sum()
    }

    /// `(value, error bound)` for the invariant measure of `[a, b] ∩ [0, 1]`.
    pub fn interval_measure(&self, a: f64, b: f64) -> (f64, f64) {
        let (a, b) = (a.max(0.0), b.min(1.0));
        if b <= a {
            return (0.0, 0.0);
        }
        let raw: f64 = self
            .levels
            .iter()
            .map(|(s, w)| w * ((b.min(*s) - a.min(*s)).max(0.0)))
            .sum();
        let val = raw / self.normalizer;
        let err = self.series_tail * (b - a) / self.normalizer
            + 1e-14 * (val + f64::EPSILON) * (self.levels.len() as f64).sqrt();
        (val, err)
    }

    /// Certified comparison of `x` against the breakpoint `T^k(1)`.
    pub fn below_level(&self, x: &CertifiedPoint, k: usize) -> Option<bool> {
        let s = &self.level_balls[k];
        if x.hi() < s.lo() {
            Some(true)
        } else if x.lo() >= s.hi() {
            Some(false)
        } else {
            None
        }
    }

    /// Exact comparison of two elements of `Q(β)`.
    pub fn cmp(&self, a: &FieldElem, b: &FieldElem) -> Result<Ordering> {
        self.beta.cmp(a, b)
    }

    pub fn floor(&self, a: &FieldElem) -> Result<Integer> {
        self.beta.floor(a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rug::Rational;

    #[test]
    fn golden_expansion_of_one() {
        let b = BetaSystem::new(AlgebraicNumber::golden()).unwrap();
        assert_eq!(b.expansion().digits, vec![1, 1]);
        assert_eq!(b.expansion().zero_at, Some(2));
        assert_eq!(b.branch_count(), 2);
        let sqrt5 = 5f64.sqrt();
        let hi = (5.0 + 3.0 * sqrt5) / 10.0;
        let lo = (5.0 + sqrt5) / 10.0;
        assert!((b.density(0.2) - hi).abs() < 1e-14);
        assert!((b.density(0.8) - lo).abs() < 1e-14);
    }

    #[test]
    fn tribonacci_expansion_of_one() {
        let b = BetaSystem::new(AlgebraicNumber::tribonacci()).unwrap();
        assert_eq!(b.expansion().digits, vec![1, 1, 1]);
        assert_eq!(b.expansion().zero_at, Some(3));
    }

    #[test]
    fn integer_beta_is_lebesgue() {
        let b = BetaSystem::new(AlgebraicNumber::rational(Rational::from(3))).unwrap();
        assert_eq!(b.int_beta(), Some(3));
        assert_eq!(b.branch_count(), 3);
        assert_eq!(b.density(0.4), 1.0);
        assert_eq!(b.expansion().digits, vec![3]);
    }

    #[test]
    fn rational_beta_density_normalizes() {
        let b = BetaSystem::new(AlgebraicNumber::rational(Rational::from((19, 10)))).unwrap();
        assert!(b.expansion().zero_at.is_none());
        assert_eq!(b.branch_count(), 2);
        let (m, e) = b.interval_measure(0.0, 1.0);
        assert!((m - 1.0).abs() <= e + 1e-15);
    }
}
