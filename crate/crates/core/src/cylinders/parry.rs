//! Parry admissibility for β-expansions.

use std::cmp::Ordering;

use serde::Serialize;

use crate::algebraic::AlgebraicNumber;
use crate::error::Result;
use crate::systems::beta::expand_one;

/// Expansion `ξ` of 1 and the sequence `ξ*` that bounds admissible suffixes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ParryCoding {
    pub xi: Vec<u64>,
    /// `ξ*` to the computed length; periodic with period `m_xi` when that is set.
    pub xi_star: Vec<u64>,
    /// Length `M_ξ` of a finite expansion of 1.
    pub m_xi: Option<usize>,
    /// `Some(false)` when the orbit of 1 is certified to cycle away from zero,
    /// `None` when neither a zero nor a cycle appeared within the budget.
    pub eventually_zero: Option<bool>,
}

impl ParryCoding {
    /// `ξ*_k` for `k ≥ 1`; `None` past the computed prefix of a non-periodic `ξ*`.
    pub fn xi_star_at(&self, k: usize) -> Option<u64> {
        match self.m_xi {
            Some(m) => Some(self.xi_star[(k - 1) % m]),
            None => self.xi_star.get(k - 1).copied(),
        }
    }

    /// Whether `ξ*` has a nonzero digit after position `k`.
    fn nonzero_after(&self, k: usize) -> bool {
        match self.m_xi {
            Some(_) => true,
            None => self.eventually_zero != Some(true) || self.xi_star[k..].iter().any(|&d| d > 0),
        }
    }
}

/// Greedy digits of 1 to length `n` and the derived `ξ*`.
///
/// For integer β the expansion `(β)` uses a digit outside the alphabet, so
/// the quasi-greedy sequence `(β−1, β−1, …)` is returned; every word over
/// `{0, …, β−1}` is then admissible.
pub fn parry_digits(beta: &AlgebraicNumber, n: usize) -> Result<ParryCoding> {
    if let Some(b) = beta.as_rational().filter(|q| q.is_integer()) {
        let d = b.numer().to_u64().unwrap_or(u64::MAX) - 1;
        return Ok(ParryCoding {
            xi: vec![d + 1],
            xi_star: vec![d],
            m_xi: Some(1),
            eventually_zero: Some(true),
        });
    }
    let exp = expand_one(beta, n)?;
    if let Some(m) = exp.zero_at {
        let mut star = exp.digits[..m].to_vec();
        star[m - 1] -= 1;
        return Ok(ParryCoding {
            xi: exp.digits,
            xi_star: star,
            m_xi: Some(m),
            eventually_zero: Some(true),
        });
    }
    let cycles = (1..exp.orbit.len()).any(|k| exp.orbit[..k].contains(&exp.orbit[k]));
    Ok(ParryCoding {
        xi_star: exp.digits.clone(),
        xi: exp.digits,
        m_xi: None,
        eventually_zero: cycles.then_some(false),
    })
}

/// True iff every suffix of `word`, extended by zeros, is strictly below `ξ*`.
///
/// Panics if a non-periodic `ξ*` is shorter than `word`.
pub fn is_admissible(word: &[u64], parry: &ParryCoding) -> bool {
    (0..word.len()).all(|j| {
        let suffix = &word[j..];
        for (k, &d) in suffix.iter().enumerate() {
            let s = parry
                .xi_star_at(k + 1)
                .expect("ξ* computed to at least the word length");
            match d.cmp(&s) {
                Ordering::Less => return true,
                Ordering::Greater => return false,
                Ordering::Equal => {}
            }
        }
        parry.nonzero_after(suffix.len())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_and_tribonacci_codings() {
        let g = parry_digits(&AlgebraicNumber::golden(), 20).unwrap();
        assert_eq!(g.xi, vec![1, 1]);
        assert_eq!(g.m_xi, Some(2));
        let star: Vec<u64> = (1..=6).map(|k| g.xi_star_at(k).unwrap()).collect();
        assert_eq!(star, vec![1, 0, 1, 0, 1, 0]);

        let t = parry_digits(&AlgebraicNumber::tribonacci(), 20).unwrap();
        assert_eq!(t.xi, vec![1, 1, 1]);
        let star: Vec<u64> = (1..=6).map(|k| t.xi_star_at(k).unwrap()).collect();
        assert_eq!(star, vec![1, 1, 0, 1, 1, 0]);
    }

    #[test]
    fn admissibility_examples() {
        let g = parry_digits(&AlgebraicNumber::golden(), 20).unwrap();
        assert!(!is_admissible(&[1, 1], &g));
        assert!(is_admissible(&[1, 0, 1], &g));
        assert!(is_admissible(&[0; 12], &g));
        let two = parry_digits(&AlgebraicNumber::rational(2.into()), 20).unwrap();
        for w in 0u32..64 {
            let word: Vec<u64> = (0..6).map(|b| u64::from((w >> b) & 1)).collect();
            assert!(is_admissible(&word, &two));
        }
    }
}
