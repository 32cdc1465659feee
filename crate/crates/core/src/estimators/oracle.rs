//! Exact values of `Leb(A_n)` for `x ↦ bx mod 1` and piecewise affine twists.

use rug::ops::Pow;
use rug::{Integer, Rational};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::systems::SystemSpec;
use crate::targets::PsiSpec;
use crate::twists::{AffinePiece, TwistFamily, TwistSpec};

/// Largest branch count the oracle will enumerate.
const BRANCH_CAP: u64 = 1 << 26;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BranchMass {
    pub branch: u64,
    #[serde(serialize_with = "ser_rational")]
    pub mass: Rational,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleResult {
    pub n: usize,
    #[serde(serialize_with = "ser_rational")]
    pub psi_n: Rational,
    #[serde(serialize_with = "ser_rational")]
    pub total: Rational,
    /// Branches with nonzero contribution, in increasing order.
    pub branches: Vec<BranchMass>,
}

fn ser_rational<S: serde::Serializer>(q: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(q.to_f64())
}

fn whole(a: i64, b: Rational) -> AffinePiece {
    AffinePiece {
        lo: Rational::new(),
        hi: Rational::from(1),
        a: Rational::from(a),
        b,
    }
}

/// Affine pieces of `f` on `[0, 1)`.
fn affine_pieces(f: &TwistSpec) -> Option<Vec<AffinePiece>> {
    Some(match f.family() {
        TwistFamily::Identity => vec![whole(1, Rational::new())],
        TwistFamily::Constant(y) => vec![whole(0, y.clone())],
        TwistFamily::AffineMod1 { pieces, .. } | TwistFamily::Piecewise(pieces) => pieces.clone(),
        TwistFamily::AffineClip { a, b } => {
            if *a == 0 {
                let v = b.clone().clamp(&Rational::new(), &Rational::from(1));
                return Some(vec![whole(0, v)]);
            }
            // Crossings of a x + b with the levels 0 and 1.
            let mut cuts = vec![Rational::new(), Rational::from(1)];
            for level in [Rational::new(), Rational::from(1)] {
                let x = Rational::from(&level - b) / a;
                if x > 0 && x < 1 {
                    cuts.push(x);
                }
            }
            cuts.sort();
            cuts.dedup();
            cuts.windows(2)
                .map(|w| {
                    let mid = Rational::from(&w[0] + &w[1]) / 2u32;
                    let v = Rational::from(a * &mid) + b;
                    let (pa, pb) = if v < 0 {
                        (Rational::new(), Rational::new())
                    } else if v > 1 {
                        (Rational::new(), Rational::from(1))
                    } else {
                        (a.clone(), b.clone())
                    };
                    AffinePiece {
                        lo: w[0].clone(),
                        hi: w[1].clone(),
                        a: pa,
                        b: pb,
                    }
                })
                .collect()
        }
        TwistFamily::Sqrt | TwistFamily::ConstantAlgebraic(_) => return None,
    })
}

fn overlap(a0: &Rational, a1: &Rational, b0: &Rational, b1: &Rational) -> Rational {
    let lo = if a0 > b0 { a0 } else { b0 };
    let hi = if a1 < b1 { a1 } else { b1 };
    if hi > lo {
        Rational::from(hi - lo)
    } else {
        Rational::new()
    }
}

/// `Leb(A_n)` for the integer β-map `x ↦ bx mod 1`, by solving
/// `|(b^n − a)x − k − c| < ψ(n)` on every branch `k` of `T^n` and every
/// affine piece `ax + c` of `f`.
pub fn badic_oracle(sys: &SystemSpec, f: &TwistSpec, psi: &PsiSpec, n: usize) -> Result<OracleResult> {
    let unsupported = |what: &str| Error::Unsupported {
        system: sys.id().to_string(),
        what: what.to_string(),
    };
    let base = sys
        .integer_base()
        .ok_or_else(|| unsupported("exact oracle (integer β only)"))?;
    if n == 0 {
        return Err(Error::invalid("n", "n must be at least 1"));
    }
    let pieces = affine_pieces(f).ok_or_else(|| unsupported("exact oracle for this twist"))?;
    let r = psi
        .exact(n as u64)
        .ok_or_else(|| Error::invalid("psi", "the exact oracle needs a rational ψ(n)"))?;
    let bn = Integer::from(base).pow(n as u32);
    let count = bn
        .to_u64()
        .filter(|&c| c <= BRANCH_CAP)
        .ok_or(Error::ExplosionGuard {
            count: bn.to_u128().unwrap_or(u128::MAX),
            cap: BRANCH_CAP as u128,
        })?;
    let mut masses = vec![Rational::new(); count as usize];
    for p in &pieces {
        let d = Rational::from(&bn - &p.a);
        let k0 = Rational::from(&p.lo * &bn).floor().numer().to_u64().unwrap_or(0);
        let k1 = Rational::from(&p.hi * &bn).ceil().numer().to_u64().unwrap_or(count).min(count);
        for k in k0..k1 {
            let lo = Rational::from((Integer::from(k), bn.clone()));
            let hi = Rational::from((Integer::from(k + 1), bn.clone()));
            let kc = Rational::from(k) + &p.b;
            let piece_len;
            if d == 0 {
                if Rational::from(kc.abs_ref()) < r {
                    piece_len = overlap(&lo, &hi, &p.lo, &p.hi);
                } else {
                    continue;
                }
            } else {
                let s0 = Rational::from(&kc - &r) / &d;
                let s1 = Rational::from(&kc + &r) / &d;
                let (s0, s1) = if s0 <= s1 { (s0, s1) } else { (s1, s0) };
                let a0 = if lo > p.lo { &lo } else { &p.lo };
                let a1 = if hi < p.hi { &hi } else { &p.hi };
                piece_len = overlap(a0, a1, &s0, &s1);
            }
            masses[k as usize] += piece_len;
        }
    }
    let mut total = Rational::new();
    let mut branches = Vec::new();
    for (k, m) in masses.into_iter().enumerate() {
        if m != 0 {
            total += &m;
            branches.push(BranchMass {
                branch: k as u64,
                mass: m,
            });
        }
    }
    Ok(OracleResult {
        n,
        psi_n: r,
        total,
        branches,
    })
}

/// `Leb(B ∩ T^{-k} C)` for `T x = bx mod 1` and intervals `B, C ⊂ [0, 1]`.
///
/// With `G(t) = ∫_0^t 1_C(u mod 1) du = ⌊t⌋·|C| + |[0, t mod 1] ∩ C|` the
/// value is `b^{-k}(G(b^k B_hi) − G(b^k B_lo))`.
pub fn dyadic_pair_oracle(
    base: u64,
    b: (&Rational, &Rational),
    c: (&Rational, &Rational),
    k: u32,
) -> Rational {
    let scale = Rational::from(Integer::from(base).pow(k));
    let c_len = Rational::from(c.1 - c.0);
    let g = |t: Rational| -> Rational {
        let fl = t.clone().floor();
        let fr = Rational::from(&t - &fl);
        fl * &c_len + overlap(&Rational::new(), &fr, c.0, c.1)
    };
    let hi = g(Rational::from(b.1 * &scale));
    let lo = g(Rational::from(b.0 * &scale));
    (hi - lo) / scale
}
