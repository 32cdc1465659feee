//! Phase spaces, maps and branch partitions.

pub mod beta;
pub mod ifs;
mod prepared;

use std::fmt;

use rug::Rational;
use serde::Serialize;

use crate::algebraic::AlgebraicNumber;
use crate::ball::CertifiedPoint;
use crate::error::{Error, Result};
use crate::numbers::parse_rational;

pub use beta::BetaSystem;
pub use ifs::{IfsSystem, SimilarityMap};
pub use prepared::{Orbit, Prepared};

/// Index of a branch cell `X_i`. Gauss digits start at 1, everything else at 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct BranchIndex(pub u64);

impl fmt::Display for BranchIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BranchCount {
    Finite(u64),
    CountablyInfinite,
}

#[derive(Clone, Debug)]
pub struct RotationSystem {
    alpha: AlgebraicNumber,
}

impl RotationSystem {
    pub fn alpha(&self) -> &AlgebraicNumber {
        &self.alpha
    }
}

#[derive(Clone, Debug)]
pub enum SystemKind {
    Beta(BetaSystem),
    Gauss,
    Ifs(IfsSystem),
    Rotation(RotationSystem),
}

#[derive(Clone, Debug)]
pub struct SystemSpec {
    id: String,
    kind: SystemKind,
}

/// Largest Gauss digit accepted before a point is treated as undecidable.
pub const GAUSS_DIGIT_CAP: u64 = 1 << 53;

impl SystemSpec {
    pub fn beta(beta: AlgebraicNumber) -> Result<Self> {
        if beta.approx() <= 1.0 {
            return Err(Error::invalid("system", "beta must exceed 1"));
        }
        let id = match beta.as_rational() {
            Some(q) => format!("beta:{}", fmt_rational(q)),
            None => format!("beta:{:.6}", beta.approx()),
        };
        Ok(SystemSpec {
            id,
            kind: SystemKind::Beta(BetaSystem::new(beta)?),
        })
    }

    pub fn gauss() -> Self {
        SystemSpec {
            id: "gauss".into(),
            kind: SystemKind::Gauss,
        }
    }

    pub fn ifs(ifs: IfsSystem) -> Self {
        let id = format!(
            "ifs:{}",
            ifs.maps()
                .iter()
                .map(|m| format!("{},{}", fmt_rational(&m.ratio), fmt_rational(&m.translation)))
                .collect::<Vec<_>>()
                .join(";")
        );
        SystemSpec {
            id,
            kind: SystemKind::Ifs(ifs),
        }
    }

    pub fn rotation(alpha: AlgebraicNumber) -> Result<Self> {
        let a = alpha.approx();
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::invalid("system", "rotation number must lie in (0, 1)"));
        }
        let id = match alpha.as_rational() {
            Some(q) => format!("rotation:{}", fmt_rational(q)),
            None => format!("rotation:{a:.6}"),
        };
        Ok(SystemSpec {
            id,
            kind: SystemKind::Rotation(RotationSystem { alpha }),
        })
    }

    /// Parses a preset id such as `beta:golden`, `gauss`, `ifs:cantor3`,
    /// `ifs:1/3,0;1/3,2/3` or `rotation:golden`.
    pub fn parse(id: &str) -> Result<Self> {
        let id = id.trim();
        let (family, arg) = id.split_once(':').unwrap_or((id, ""));
        let mut spec = match family {
            "beta" => {
                let beta = match arg {
                    "golden" => AlgebraicNumber::golden(),
                    "tribonacci" => AlgebraicNumber::tribonacci(),
                    _ if arg.starts_with("quad:") => {
                        let parts: Vec<&str> = arg[5..].split(',').collect();
                        if parts.len() != 2 {
                            return Err(Error::invalid("system", "expected beta:quad:k,l"));
                        }
                        AlgebraicNumber::quadratic(
                            parse_rational("system", parts[0])?,
                            parse_rational("system", parts[1])?,
                        )?
                    }
                    _ => AlgebraicNumber::rational(parse_rational("system", arg)?),
                };
                Self::beta(beta)?
            }
            "gauss" if arg.is_empty() => Self::gauss(),
            "ifs" => {
                if arg == "cantor3" {
                    Self::ifs(IfsSystem::cantor3())
                } else {
                    let mut maps = Vec::new();
                    for part in arg.split(';').filter(|p| !p.trim().is_empty()) {
                        let (r, t) = part.split_once(',').ok_or_else(|| {
                            Error::invalid("system", format!("expected r,t in {part:?}"))
                        })?;
                        maps.push(SimilarityMap {
                            ratio: parse_rational("system", r)?,
                            translation: parse_rational("system", t)?,
                        });
                    }
                    Self::ifs(IfsSystem::new(maps)?)
                }
            }
            "rotation" => {
                let alpha = match arg {
                    "golden" => AlgebraicNumber::golden_conjugate(),
                    _ => AlgebraicNumber::rational(parse_rational("system", arg)?),
                };
                Self::rotation(alpha)?
            }
            _ => {
                return Err(Error::invalid(
                    "system",
                    format!("unknown system {id:?}; expected beta:*, gauss, ifs:* or rotation:*"),
                ))
            }
        };
        spec.id = id.to_string();
        Ok(spec)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn kind(&self) -> &SystemKind {
        &self.kind
    }

    pub fn as_beta(&self) -> Option<&BetaSystem> {
        match &self.kind {
            SystemKind::Beta(b) => Some(b),
            _ => None,
        }
    }

    pub fn as_ifs(&self) -> Option<&IfsSystem> {
        match &self.kind {
            SystemKind::Ifs(i) => Some(i),
            _ => None,
        }
    }

    pub fn is_gauss(&self) -> bool {
        matches!(self.kind, SystemKind::Gauss)
    }

    pub fn is_rotation(&self) -> bool {
        matches!(self.kind, SystemKind::Rotation(_))
    }

    /// The integer base when the system is the full-shift map `x ↦ bx mod 1`.
    pub fn integer_base(&self) -> Option<u64> {
        self.as_beta().and_then(BetaSystem::int_beta)
    }

    /// Ahlfors dimension δ of the invariant measure.
    pub fn delta(&self) -> f64 {
        match &self.kind {
            SystemKind::Ifs(i) => i.delta(),
            _ => 1.0,
        }
    }

    /// Whether δ = 1 holds exactly, not just in floating point.
    pub fn delta_is_one(&self) -> bool {
        match &self.kind {
            SystemKind::Ifs(i) => i.delta_is_one(),
            _ => true,
        }
    }

    pub fn branch_count(&self) -> BranchCount {
        match &self.kind {
            SystemKind::Beta(b) => BranchCount::Finite(b.branch_count()),
            SystemKind::Gauss => BranchCount::CountablyInfinite,
            SystemKind::Ifs(i) => BranchCount::Finite(i.maps().len() as u64),
            SystemKind::Rotation(_) => BranchCount::Finite(2),
        }
    }

    /// Convex hull of the phase space.
    pub fn hull(&self) -> (Rational, Rational) {
        match &self.kind {
            SystemKind::Ifs(i) => i.hull().clone(),
            _ => (Rational::new(), Rational::from(1)),
        }
    }

    pub fn diam(&self) -> f64 {
        let (a, b) = self.hull();
        (b - a).to_f64()
    }

    /// Whether distances are measured on the circle `R/Z`.
    pub fn is_circle(&self) -> bool {
        self.is_rotation()
    }

    /// Exact per-step expansion factor, when constant.
    pub fn log2_expansion(&self) -> f64 {
        match &self.kind {
            SystemKind::Beta(b) => b.beta_f64().log2(),
            SystemKind::Gauss => 3.5,
            SystemKind::Ifs(i) => (1.0 / i.r_min()).log2(),
            SystemKind::Rotation(_) => 0.0,
        }
    }

    /// Working precision used first for an `n`-step orbit.
    pub fn initial_precision(&self, n: usize) -> u32 {
        let n = n as f64;
        match &self.kind {
            SystemKind::Gauss => ((n * self.log2_expansion()).ceil() as u32 + 64).max(256),
            SystemKind::Rotation(_) => 128 + (n + 1.0).log2().ceil() as u32,
            _ => (n * self.log2_expansion()).ceil() as u32 + 64,
        }
    }

    pub fn prepare(&self, prec: u32) -> Prepared<'_> {
        Prepared::new(self, prec)
    }

    /// One step `x ↦ T x` at the precision of `x`.
    pub fn apply(&self, x: &CertifiedPoint) -> Result<CertifiedPoint> {
        self.prepare(x.prec_bits()).step(x).map(|(_, y)| y)
    }

    pub fn branch_index(&self, x: &CertifiedPoint) -> Result<BranchIndex> {
        self.prepare(x.prec_bits()).branch(x)
    }

    /// Entries `k = 1..=n`: the branch of `T^{k-1} x` and an enclosure of `T^k x`.
    pub fn orbit(&self, x: &CertifiedPoint, n: usize) -> Result<Vec<(BranchIndex, CertifiedPoint)>> {
        let prep = self.prepare(x.prec_bits());
        let mut orbit = prep.orbit(x.clone());
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let (i, y) = orbit.next_step()?;
            out.push((i, y.clone()));
        }
        Ok(out)
    }
}

pub(crate) fn fmt_rational(q: &Rational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rug::Float;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    #[test]
    fn doubling_step_is_exact() {
        let s = SystemSpec::parse("beta:2").unwrap();
        let x = CertifiedPoint::from_rational(&q(3, 10), 128);
        let y = s.apply(&x).unwrap();
        assert!(y.contains_rational(&q(6, 10)));
    }

    #[test]
    fn golden_step() {
        let s = SystemSpec::parse("beta:golden").unwrap();
        let x = CertifiedPoint::from_rational(&q(7, 10), 128);
        let y = s.apply(&x).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((y.mid_f64() - (phi * 0.7 - 1.0)).abs() < 1e-15);
        assert!((y.mid_f64() - 0.132624).abs() < 1e-6);
        assert!(y.rad_log2() < -100.0);
    }

    #[test]
    fn gauss_step_on_rational() {
        let s = SystemSpec::gauss();
        let x = CertifiedPoint::from_rational(&q(2, 5), 128);
        let y = s.apply(&x).unwrap();
        assert!(y.contains_rational(&q(1, 2)));
        assert_eq!(s.branch_index(&CertifiedPoint::from_rational(&q(3, 10), 128)).unwrap(), BranchIndex(3));
    }

    #[test]
    fn periodic_doubling_orbit() {
        let s = SystemSpec::parse("beta:2").unwrap();
        let x = CertifiedPoint::from_rational(&q(1, 3), 128);
        let orb = s.orbit(&x, 3).unwrap();
        let digits: Vec<u64> = orb.iter().map(|(i, _)| i.0).collect();
        assert_eq!(digits, vec![0, 1, 0]);
        assert!(orb[0].1.contains_rational(&q(2, 3)));
        assert!(orb[1].1.contains_rational(&q(1, 3)));
        assert!(orb[2].1.contains_rational(&q(2, 3)));
    }

    #[test]
    fn golden_branches() {
        let s = SystemSpec::parse("beta:golden").unwrap();
        let half = CertifiedPoint::from_rational(&q(1, 2), 128);
        assert_eq!(s.branch_index(&half).unwrap(), BranchIndex(0));
        let two = SystemSpec::parse("beta:2").unwrap();
        let x = CertifiedPoint::from_rational(&q(3, 4), 64);
        assert_eq!(two.branch_index(&x).unwrap(), BranchIndex(1));
    }

    #[test]
    fn straddle_is_reported_with_step() {
        let s = SystemSpec::parse("beta:2").unwrap();
        let x = CertifiedPoint::from_rational(&q(1, 2), 64).widen(&Float::with_val(30, 1e-9));
        assert_eq!(s.branch_index(&x), Err(Error::BranchStraddle { step: 0 }));
        let y = CertifiedPoint::from_rational(&q(1, 4), 64).widen(&Float::with_val(30, 1e-9));
        assert_eq!(s.orbit(&y, 3).unwrap_err(), Error::BranchStraddle { step: 1 });
    }

    #[test]
    fn gauss_golden_fixed_point() {
        let s = SystemSpec::gauss();
        let g = AlgebraicNumber::golden_conjugate().ball(256);
        let orb = s.orbit(&g, 4).unwrap();
        for (i, y) in &orb {
            assert_eq!(*i, BranchIndex(1));
            assert!(y.overlaps(&g));
        }
    }

    #[test]
    fn rotation_distance_is_independent_of_x() {
        let s = SystemSpec::parse("rotation:golden").unwrap();
        let alpha = (5f64.sqrt() - 1.0) / 2.0;
        for x0 in [q(1, 10), q(1, 2), q(9, 10)] {
            let x = CertifiedPoint::from_rational(&x0, 160);
            let prep = s.prepare(160);
            let orb = s.orbit(&x, 5).unwrap();
            for (k, (_, y)) in orb.iter().enumerate() {
                let n = (k + 1) as f64;
                let d = prep.distance(y, &x).mid_f64();
                let want = ((n * alpha) - (n * alpha).round()).abs();
                assert!((d - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn presets_parse() {
        for id in [
            "beta:2",
            "beta:golden",
            "beta:1.9",
            "beta:tribonacci",
            "beta:quad:2,1",
            "gauss",
            "ifs:cantor3",
            "ifs:1/3,0;1/3,2/3",
            "rotation:golden",
            "rotation:0.5",
        ] {
            let s = SystemSpec::parse(id).unwrap();
            assert_eq!(s.id(), id);
        }
        assert!(SystemSpec::parse("beta:0.5").is_err());
        assert!(SystemSpec::parse("tent").is_err());
        assert_eq!(SystemSpec::parse("beta:1.9").unwrap().branch_count(), BranchCount::Finite(2));
        assert_eq!(SystemSpec::gauss().branch_count(), BranchCount::CountablyInfinite);
    }
}
