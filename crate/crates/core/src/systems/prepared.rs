//! Systems with their constants enclosed at a fixed working precision.

use rug::{Integer, Rational};

use super::{BranchIndex, SystemKind, SystemSpec, GAUSS_DIGIT_CAP};
use crate::ball::CertifiedPoint;
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
enum Kind {
    IntBeta(u64),
    Beta { beta: CertifiedPoint, top: u64 },
    Gauss,
    Ifs { cells: Vec<IfsCell> },
    Rotation { alpha: CertifiedPoint },
}

#[derive(Clone, Debug)]
struct IfsCell {
    lo: Rational,
    hi: Rational,
    translation: CertifiedPoint,
    inv_ratio: CertifiedPoint,
    int_inv: Option<u64>,
}

/// A system ready for orbit computation at `prec` bits. Building one costs
/// a root refinement, so callers reuse it across points.
#[derive(Clone, Debug)]
pub struct Prepared<'a> {
    sys: &'a SystemSpec,
    prec: u32,
    kind: Kind,
}

impl<'a> Prepared<'a> {
    pub(super) fn new(sys: &'a SystemSpec, prec: u32) -> Self {
        let kind = match sys.kind() {
            SystemKind::Beta(b) => match b.int_beta() {
                Some(k) => Kind::IntBeta(k),
                None => Kind::Beta {
                    beta: b.beta().ball(prec + 8),
                    top: b.floor_beta(),
                },
            },
            SystemKind::Gauss => Kind::Gauss,
            SystemKind::Ifs(ifs) => Kind::Ifs {
                cells: ifs
                    .maps()
                    .iter()
                    .zip(ifs.cells())
                    .map(|(m, (lo, hi))| {
                        let inv = Rational::from(m.ratio.recip_ref());
                        let int_inv = inv
                            .is_integer()
                            .then(|| inv.numer().to_u64())
                            .flatten();
                        IfsCell {
                            lo: lo.clone(),
                            hi: hi.clone(),
                            translation: CertifiedPoint::from_rational(&m.translation, prec + 8),
                            inv_ratio: CertifiedPoint::from_rational(&inv, prec + 8),
                            int_inv,
                        }
                    })
                    .collect(),
            },
            SystemKind::Rotation(r) => Kind::Rotation {
                alpha: r.alpha().ball(prec + 8),
            },
        };
        Prepared { sys, prec, kind }
    }

    pub fn system(&self) -> &'a SystemSpec {
        self.sys
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    /// Branch cell containing `x`.
    pub fn branch(&self, x: &CertifiedPoint) -> Result<BranchIndex> {
        const STRADDLE: Error = Error::BranchStraddle { step: 0 };
        match &self.kind {
            Kind::IntBeta(b) => {
                let k = x.mul_u64(*b).floor().ok_or(STRADDLE)?;
                in_range(&k, 0, b - 1)
            }
            Kind::Beta { beta, top } => {
                let k = x.mul(beta).floor().ok_or(STRADDLE)?;
                in_range(&k, 0, *top)
            }
            Kind::Gauss => {
                if x.lo() <= 0 {
                    return Err(STRADDLE);
                }
                let k = x.recip().ok_or(STRADDLE)?.floor().ok_or(STRADDLE)?;
                in_range(&k, 1, GAUSS_DIGIT_CAP)
            }
            Kind::Ifs { cells } => {
                let (lo, hi) = (x.lo(), x.hi());
                let mut found = None;
                for (i, c) in cells.iter().enumerate() {
                    if hi >= c.lo && lo <= c.hi {
                        if found.is_some() || lo < c.lo || hi > c.hi {
                            return Err(STRADDLE);
                        }
                        found = Some(i);
                    }
                }
                found.map(|i| BranchIndex(i as u64)).ok_or(STRADDLE)
            }
            Kind::Rotation { alpha } => {
                let k = x.add(alpha).floor().ok_or(STRADDLE)?;
                in_range(&k, 0, 1)
            }
        }
    }

    /// `(branch of x, T x)`.
    pub fn step(&self, x: &CertifiedPoint) -> Result<(BranchIndex, CertifiedPoint)> {
        const STRADDLE: Error = Error::BranchStraddle { step: 0 };
        let x = if x.prec_bits() == self.prec {
            x.clone()
        } else {
            x.with_prec(self.prec)
        };
        match &self.kind {
            Kind::IntBeta(b) => {
                let y = x.mul_u64(*b);
                let k = y.floor().ok_or(STRADDLE)?;
                let i = in_range(&k, 0, b - 1)?;
                Ok((i, y.sub_integer(&k)))
            }
            Kind::Beta { beta, top } => {
                let y = x.mul(beta).with_prec(self.prec);
                let k = y.floor().ok_or(STRADDLE)?;
                let i = in_range(&k, 0, *top)?;
                Ok((i, y.sub_integer(&k)))
            }
            Kind::Gauss => {
                if x.lo() <= 0 {
                    return Err(STRADDLE);
                }
                let y = x.recip().ok_or(STRADDLE)?;
                let k = y.floor().ok_or(STRADDLE)?;
                let i = in_range(&k, 1, GAUSS_DIGIT_CAP)?;
                Ok((i, y.sub_integer(&k)))
            }
            Kind::Ifs { cells } => {
                let i = self.branch(&x)?;
                let c = &cells[i.0 as usize];
                let d = x.sub(&c.translation);
                let y = match c.int_inv {
                    Some(k) => d.mul_u64(k),
                    None => d.mul(&c.inv_ratio),
                };
                Ok((i, y.with_prec(self.prec)))
            }
            Kind::Rotation { alpha } => {
                let y = x.add(alpha).with_prec(self.prec);
                let k = y.floor().ok_or(STRADDLE)?;
                let i = in_range(&k, 0, 1)?;
                Ok((i, y.sub_integer(&k)))
            }
        }
    }

    /// Enclosure of `x + kα mod 1` by one multiplication, so errors do not
    /// accumulate along rotation orbits.
    pub fn rotate_by(&self, x: &CertifiedPoint, k: u64) -> Result<CertifiedPoint> {
        match &self.kind {
            Kind::Rotation { alpha } => {
                let y = x.add(&alpha.mul_u64(k)).with_prec(self.prec);
                let j = y.floor().ok_or(Error::BranchStraddle { step: 0 })?;
                Ok(y.sub_integer(&j))
            }
            _ => Err(Error::Unsupported {
                system: self.sys.id().to_string(),
                what: "rotate_by".into(),
            }),
        }
    }

    /// `d(x, y)`: circle distance for rotations, absolute difference else.
    pub fn distance(&self, x: &CertifiedPoint, y: &CertifiedPoint) -> CertifiedPoint {
        let d = x.sub(y);
        if self.sys.is_circle() {
            d.dist_to_integers()
        } else {
            d.abs()
        }
    }

    pub fn orbit(&self, x: CertifiedPoint) -> Orbit<'_, 'a> {
        Orbit {
            prep: self,
            x0: x.clone(),
            cur: x,
            k: 0,
        }
    }
}

fn in_range(k: &Integer, lo: u64, hi: u64) -> Result<BranchIndex> {
    match k.to_u64() {
        Some(v) if v >= lo && v <= hi => Ok(BranchIndex(v)),
        _ => Err(Error::BranchStraddle { step: 0 }),
    }
}

/// Step-by-step orbit; entry `k` is the branch of `T^{k-1} x` and `T^k x`.
pub struct Orbit<'p, 'a> {
    prep: &'p Prepared<'a>,
    x0: CertifiedPoint,
    cur: CertifiedPoint,
    k: usize,
}

impl Orbit<'_, '_> {
    /// Number of steps taken so far.
    pub fn steps(&self) -> usize {
        self.k
    }

    pub fn current(&self) -> &CertifiedPoint {
        &self.cur
    }

    pub fn next_step(&mut self) -> Result<(BranchIndex, &CertifiedPoint)> {
        let at = |e: Error, k: usize| match e {
            Error::BranchStraddle { .. } => Error::BranchStraddle { step: k },
            other => other,
        };
        let (i, y) = if self.prep.sys.is_rotation() {
            let i = self.prep.branch(&self.cur).map_err(|e| at(e, self.k))?;
            let y = self
                .prep
                .rotate_by(&self.x0, self.k as u64 + 1)
                .map_err(|e| at(e, self.k + 1))?;
            (i, y)
        } else {
            self.prep.step(&self.cur).map_err(|e| at(e, self.k))?
        };
        self.cur = y;
        self.k += 1;
        Ok((i, &self.cur))
    }
}
