//! Cylinders of order `m`, their geometry and expansion constants `K_J`.

pub mod parry;

use std::fmt;

use rug::ops::Pow;
use rug::{Float, Integer, Rational};
use serde::Serialize;

use crate::algebraic::{AlgebraicNumber, FieldElem};
use crate::ball::{down, CertifiedPoint};
use crate::error::{Error, Result};
use crate::stats::pairwise_sum;
use crate::systems::{BetaSystem, IfsSystem, SystemKind, SystemSpec};

pub use parry::{is_admissible, parry_digits, ParryCoding};

/// Enumeration limits.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CylinderOptions {
    /// Largest number of cylinders produced before `ExplosionGuard`.
    pub cap: u128,
    /// Gauss digits above this are left out and reported as tail mass.
    pub gauss_digit_cap: u64,
    /// Precision of the endpoint enclosures.
    pub prec: u32,
}

impl Default for CylinderOptions {
    fn default() -> Self {
        CylinderOptions {
            cap: 1 << 22,
            gauss_digit_cap: 50,
            prec: 128,
        }
    }
}

/// The word `(i₁, …, i_m)` of branch indices.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CylinderWord {
    pub digits: Vec<u64>,
}

impl CylinderWord {
    pub fn new(digits: Vec<u64>) -> Self {
        CylinderWord { digits }
    }

    pub fn order(&self) -> usize {
        self.digits.len()
    }

    pub fn prefix(&self, k: usize) -> CylinderWord {
        CylinderWord::new(self.digits[..k].to_vec())
    }
}

impl fmt::Display for CylinderWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.digits.iter().map(u64::to_string).collect();
        f.write_str(&parts.join("-"))
    }
}

/// Exact endpoints where the system allows them.
#[derive(Clone, Debug, PartialEq)]
pub enum Endpoints {
    Rational(Rational, Rational),
    Field(FieldElem, FieldElem),
    Approximate,
}

#[derive(Clone, Debug)]
pub struct CylinderGeom {
    pub left: CertifiedPoint,
    pub right: CertifiedPoint,
    pub exact: Endpoints,
    /// `K_J`, rounded to nearest.
    pub k_j: f64,
    /// A certified lower bound for `K_J`.
    pub k_j_lower: f64,
    /// Whether `Leb(J) = β^{-m}`; β-maps only.
    pub is_full: Option<bool>,
    /// `μ(J)` for the system's invariant measure.
    pub measure: f64,
}

impl CylinderGeom {
    pub fn left_f64(&self) -> f64 {
        self.left.mid_f64()
    }

    pub fn right_f64(&self) -> f64 {
        self.right.mid_f64()
    }

    pub fn length(&self) -> f64 {
        match &self.exact {
            Endpoints::Rational(a, b) => Rational::from(b - a).to_f64(),
            _ => self.right.sub(&self.left).mid_f64(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Cylinder {
    pub word: CylinderWord,
    pub geom: CylinderGeom,
}

/// Cylinders of one order in lexicographic word order.
#[derive(Clone, Debug)]
pub struct CylinderSet {
    pub order: usize,
    pub cylinders: Vec<Cylinder>,
    /// Upper bound on `μ` of the points not covered (Gauss digit cap).
    pub tail_mass_bound: f64,
}

impl CylinderSet {
    pub fn len(&self) -> usize {
        self.cylinders.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cylinders.is_empty()
    }

    pub fn total_measure(&self) -> f64 {
        pairwise_sum(&self.cylinders.iter().map(|c| c.geom.measure).collect::<Vec<_>>())
    }

    pub fn total_length(&self) -> f64 {
        pairwise_sum(&self.cylinders.iter().map(|c| c.geom.length()).collect::<Vec<_>>())
    }

    pub fn min_kj(&self) -> f64 {
        self.cylinders
            .iter()
            .map(|c| c.geom.k_j)
            .fold(f64::INFINITY, f64::min)
    }
}

/// `μ` of Gauss cylinders with some digit among the first `m` above `cap`.
pub fn gauss_tail_bound(m: usize, cap: u64) -> f64 {
    m as f64 * (1.0 / (cap as f64 + 1.0)).ln_1p() / std::f64::consts::LN_2
}

fn guard(count: u128, cap: u128) -> Result<()> {
    if count > cap {
        Err(Error::ExplosionGuard { count, cap })
    } else {
        Ok(())
    }
}

/// All cylinders of order `m`.
pub fn cylinders_of_order(sys: &SystemSpec, m: usize, opts: &CylinderOptions) -> Result<CylinderSet> {
    let mut cylinders = Vec::new();
    let tail = visit_cylinders(sys, m, opts, &mut |c| cylinders.push(c))?;
    Ok(CylinderSet {
        order: m,
        cylinders,
        tail_mass_bound: tail,
    })
}

/// Calls `f` on each cylinder of order `m` in lexicographic order and
/// returns the uncovered tail-mass bound.
pub fn visit_cylinders(
    sys: &SystemSpec,
    m: usize,
    opts: &CylinderOptions,
    f: &mut dyn FnMut(Cylinder),
) -> Result<f64> {
    if m == 0 {
        return Err(Error::invalid("m", "cylinder order must be at least 1"));
    }
    match sys.kind() {
        SystemKind::Beta(b) => match b.int_beta() {
            Some(base) => {
                guard((base as u128).saturating_pow(m as u32), opts.cap)?;
                int_beta_visit(base, m, opts.prec, f);
            }
            None => BetaWalk::new(b, m, opts).run(f)?,
        },
        SystemKind::Gauss => {
            let d = opts.gauss_digit_cap;
            guard((d as u128).saturating_pow(m as u32), opts.cap)?;
            gauss_visit(m, d, opts.prec, f);
            return Ok(gauss_tail_bound(m, d));
        }
        SystemKind::Ifs(ifs) => {
            guard((ifs.maps().len() as u128).saturating_pow(m as u32), opts.cap)?;
            ifs_visit(ifs, m, opts.prec, f);
        }
        SystemKind::Rotation(_) => {
            guard(m as u128 + 1, opts.cap)?;
            for c in rotation_cylinders(sys, m, opts.prec)? {
                f(c);
            }
        }
    }
    Ok(0.0)
}

fn int_beta_visit(base: u64, m: usize, prec: u32, f: &mut dyn FnMut(Cylinder)) {
    let denom = Integer::from(base).pow(m as u32);
    let len = Rational::from((Integer::from(1), denom.clone()));
    let k_j = denom.to_f64();
    let k_j_lower: f64 = down(&denom).to_f64();
    let total = denom.to_u64().expect("guarded count fits in u64");
    for k in 0..total {
        let mut digits = vec![0; m];
        let mut r = k;
        for d in digits.iter_mut().rev() {
            *d = r % base;
            r /= base;
        }
        let a = Rational::from((Integer::from(k), denom.clone()));
        let b = Rational::from(&a + &len);
        f(Cylinder {
            word: CylinderWord::new(digits),
            geom: CylinderGeom {
                left: CertifiedPoint::from_rational(&a, prec),
                right: CertifiedPoint::from_rational(&b, prec),
                measure: len.to_f64(),
                exact: Endpoints::Rational(a, b),
                k_j,
                k_j_lower,
                is_full: Some(true),
            },
        });
    }
}

/// Exact walk of a non-integer β-map: the image `T^k J` is `[0, s_k)`, and
/// appending digit `i` gives `s_{k+1} = min(β s_k − i, 1)` when positive.
struct BetaWalk<'a> {
    sys: &'a BetaSystem,
    f: &'a AlgebraicNumber,
    m: usize,
    cap: u128,
    prec: u32,
    one: FieldElem,
    k_j: f64,
    k_j_lower: f64,
    count: u128,
}

impl<'a> BetaWalk<'a> {
    fn new(sys: &'a BetaSystem, m: usize, opts: &CylinderOptions) -> Self {
        let f = sys.beta();
        let b = f.ball(opts.prec + 32);
        let mut pow = CertifiedPoint::from_integer(&Integer::from(1), opts.prec + 32);
        for _ in 0..m {
            pow = pow.mul(&b);
        }
        BetaWalk {
            sys,
            f,
            m,
            cap: opts.cap,
            prec: opts.prec,
            one: f.elem_int(1),
            k_j: pow.mid_f64(),
            k_j_lower: down(&pow.lo()).to_f64(),
            count: 0,
        }
    }

    fn run(mut self, out: &mut dyn FnMut(Cylinder)) -> Result<()> {
        let mut word = Vec::with_capacity(self.m);
        let zero = self.f.elem_int(0);
        let one = self.one.clone();
        self.dfs(&mut word, zero, one.clone(), one, out)
    }

    fn dfs(
        &mut self,
        word: &mut Vec<u64>,
        left: FieldElem,
        s: FieldElem,
        scale: FieldElem,
        out: &mut dyn FnMut(Cylinder),
    ) -> Result<()> {
        if word.len() == self.m {
            self.count += 1;
            guard(self.count, self.cap)?;
            out(beta_cylinder(self.sys, word.clone(), &left, &s, &scale, self.prec, self.k_j, self.k_j_lower));
            return Ok(());
        }
        let next_scale = self.f.mul_theta_inv(&scale);
        let bs = self.f.mul_theta(&s);
        for i in 0..=self.sys.floor_beta() {
            let Some(s_next) = beta_child(self.f, &bs, i, &self.one)? else {
                break;
            };
            let shift = self.f.scale(&next_scale, &Rational::from(i));
            let l = self.f.add(&left, &shift);
            word.push(i);
            self.dfs(word, l, s_next, next_scale.clone(), out)?;
            word.pop();
        }
        Ok(())
    }
}

/// `min(βs − i, 1)`, or `None` if `βs − i ≤ 0`.
fn beta_child(f: &AlgebraicNumber, bs: &FieldElem, i: u64, one: &FieldElem) -> Result<Option<FieldElem>> {
    let y = f.sub_int(bs, &Integer::from(i));
    if f.sign(&y)? != std::cmp::Ordering::Greater {
        return Ok(None);
    }
    Ok(Some(if f.cmp(&y, one)?.is_ge() { one.clone() } else { y }))
}

#[allow(clippy::too_many_arguments)]
fn beta_cylinder(
    sys: &BetaSystem,
    word: Vec<u64>,
    left: &FieldElem,
    s: &FieldElem,
    scale: &FieldElem,
    prec: u32,
    k_j: f64,
    k_j_lower: f64,
) -> Cylinder {
    let f = sys.beta();
    let right = f.add(left, &f.mul(scale, s));
    let l = f.eval(left, prec);
    let r = f.eval(&right, prec);
    let measure = sys.interval_measure(l.mid_f64(), r.mid_f64()).0;
    Cylinder {
        word: CylinderWord::new(word),
        geom: CylinderGeom {
            left: l,
            right: r,
            exact: Endpoints::Field(left.clone(), right),
            k_j,
            k_j_lower,
            is_full: Some(*s == f.elem_int(1)),
            measure,
        },
    }
}

/// State `(left, s, β^{-k})` after reading `word`, or `None` if it is empty.
fn beta_state(sys: &BetaSystem, word: &[u64]) -> Result<Option<(FieldElem, FieldElem, FieldElem)>> {
    let f = sys.beta();
    let one = f.elem_int(1);
    let (mut left, mut s, mut scale) = (f.elem_int(0), one.clone(), one.clone());
    for &i in word {
        if i > sys.floor_beta() {
            return Ok(None);
        }
        let bs = f.mul_theta(&s);
        let Some(next) = beta_child(f, &bs, i, &one)? else {
            return Ok(None);
        };
        scale = f.mul_theta_inv(&scale);
        left = f.add(&left, &f.scale(&scale, &Rational::from(i)));
        s = next;
    }
    Ok(Some((left, s, scale)))
}

fn gauss_visit(m: usize, cap: u64, prec: u32, f: &mut dyn FnMut(Cylinder)) {
    let mut word = Vec::with_capacity(m);
    let start = (Integer::from(1), Integer::new(), Integer::new(), Integer::from(1));
    gauss_dfs(m, cap, prec, &mut word, start, f);
}

/// Convergent state `(p_{k-1}, q_{k-1}, p_k, q_k)`.
type Convergents = (Integer, Integer, Integer, Integer);

fn gauss_dfs(m: usize, cap: u64, prec: u32, word: &mut Vec<u64>, st: Convergents, f: &mut dyn FnMut(Cylinder)) {
    if word.len() == m {
        f(gauss_cylinder(word.clone(), &st, prec));
        return;
    }
    for a in 1..=cap {
        let (ref p0, ref q0, ref p1, ref q1) = st;
        let p = Integer::from(p1 * a) + p0;
        let q = Integer::from(q1 * a) + q0;
        word.push(a);
        gauss_dfs(m, cap, prec, word, (p1.clone(), q1.clone(), p, q), f);
        word.pop();
    }
}

fn gauss_cylinder(word: Vec<u64>, st: &Convergents, prec: u32) -> Cylinder {
    let (p0, q0, p1, q1) = st;
    let x = Rational::from((p1.clone(), q1.clone()));
    let y = Rational::from((Integer::from(p1 + p0), Integer::from(q1 + q0)));
    let (a, b) = if x < y { (x, y) } else { (y, x) };
    let rel = Rational::from(&b - &a) / (Rational::from(1) + &a);
    let measure = rel.to_f64().ln_1p() / std::f64::consts::LN_2;
    let kj = Integer::from(q1 * q1);
    Cylinder {
        word: CylinderWord::new(word),
        geom: CylinderGeom {
            left: CertifiedPoint::from_rational(&a, prec),
            right: CertifiedPoint::from_rational(&b, prec),
            exact: Endpoints::Rational(a, b),
            k_j: kj.to_f64(),
            k_j_lower: down(&kj).to_f64(),
            is_full: None,
            measure,
        },
    }
}

fn ifs_cylinder(ifs: &IfsSystem, word: Vec<u64>, prec: u32) -> Cylinder {
    let (a, b) = ifs.word_interval(&word);
    let inv = Rational::from(ifs.word_ratio(&word).recip_ref());
    let lower = Float::with_val_round(53, &inv, rug::float::Round::Down).0;
    Cylinder {
        geom: CylinderGeom {
            left: CertifiedPoint::from_rational(&a, prec),
            right: CertifiedPoint::from_rational(&b, prec),
            exact: Endpoints::Rational(a, b),
            k_j: inv.to_f64(),
            k_j_lower: lower.to_f64(),
            is_full: None,
            measure: ifs.word_weight(&word),
        },
        word: CylinderWord::new(word),
    }
}

fn ifs_visit(ifs: &IfsSystem, m: usize, prec: u32, f: &mut dyn FnMut(Cylinder)) {
    let l = ifs.maps().len() as u64;
    let mut word = vec![0u64; m];
    loop {
        f(ifs_cylinder(ifs, word.clone(), prec));
        let mut k = m;
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            word[k] += 1;
            if word[k] < l {
                break;
            }
            word[k] = 0;
        }
    }
}

/// Rotation cylinders are cut by the points `{-kα}`, `k = 0..=m`.
fn rotation_cylinders(sys: &SystemSpec, m: usize, prec: u32) -> Result<Vec<Cylinder>> {
    let SystemKind::Rotation(r) = sys.kind() else {
        unreachable!()
    };
    let work = prec + 2 * (usize::BITS - m.leading_zeros()) + 32;
    let alpha = r.alpha().ball(work);
    let mut cuts = vec![CertifiedPoint::zero(work)];
    for k in 1..=m as u64 {
        let y = alpha.mul_u64(k).neg();
        let j = y.floor().ok_or(Error::BranchStraddle { step: k as usize })?;
        cuts.push(y.sub_integer(&j));
    }
    cuts.sort_by(|a, b| a.mid().partial_cmp(b.mid()).unwrap());
    cuts.push(CertifiedPoint::from_integer(&Integer::from(1), work));
    let prep = sys.prepare(work);
    let mut out = Vec::with_capacity(m + 1);
    for w in cuts.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let mid = a.add(b).mul_pow2(-1);
        let mut orbit = prep.orbit(mid);
        let mut word = Vec::with_capacity(m);
        for _ in 0..m {
            word.push(orbit.next_step()?.0 .0);
        }
        out.push(Cylinder {
            word: CylinderWord::new(word),
            geom: CylinderGeom {
                left: a.clone(),
                right: b.clone(),
                exact: Endpoints::Approximate,
                k_j: 1.0,
                k_j_lower: 1.0,
                is_full: None,
                measure: b.sub(a).mid_f64(),
            },
        });
    }
    out.sort_by(|a, b| a.word.cmp(&b.word));
    Ok(out)
}

/// Geometry of a single cylinder, or `None` if the word is not realized.
pub fn cylinder_of_word(sys: &SystemSpec, word: &CylinderWord, opts: &CylinderOptions) -> Result<Option<CylinderGeom>> {
    let m = word.order();
    if m == 0 {
        return Err(Error::invalid("word", "empty word"));
    }
    let d = &word.digits;
    Ok(match sys.kind() {
        SystemKind::Beta(b) => match b.int_beta() {
            Some(base) => {
                if d.iter().any(|&i| i >= base) {
                    return Ok(None);
                }
                let denom = Integer::from(base).pow(m as u32);
                let k = d.iter().fold(Integer::new(), |acc, &i| acc * base + i);
                let a = Rational::from((k.clone(), denom.clone()));
                let bnd = Rational::from((k + 1u32, denom.clone()));
                Some(CylinderGeom {
                    left: CertifiedPoint::from_rational(&a, opts.prec),
                    right: CertifiedPoint::from_rational(&bnd, opts.prec),
                    measure: Rational::from(&bnd - &a).to_f64(),
                    exact: Endpoints::Rational(a, bnd),
                    k_j: denom.to_f64(),
                    k_j_lower: down(&denom).to_f64(),
                    is_full: Some(true),
                })
            }
            None => {
                let walk = BetaWalk::new(b, m, opts);
                beta_state(b, d)?.map(|(left, s, scale)| {
                    beta_cylinder(b, d.clone(), &left, &s, &scale, opts.prec, walk.k_j, walk.k_j_lower).geom
                })
            }
        },
        SystemKind::Gauss => {
            if d.contains(&0) {
                return Ok(None);
            }
            let mut st: Convergents = (Integer::from(1), Integer::new(), Integer::new(), Integer::from(1));
            for &a in d {
                let p = Integer::from(&st.2 * a) + &st.0;
                let q = Integer::from(&st.3 * a) + &st.1;
                st = (st.2, st.3, p, q);
            }
            Some(gauss_cylinder(d.clone(), &st, opts.prec).geom)
        }
        SystemKind::Ifs(ifs) => {
            if d.iter().any(|&i| i as usize >= ifs.maps().len()) {
                return Ok(None);
            }
            Some(ifs_cylinder(ifs, d.clone(), opts.prec).geom)
        }
        SystemKind::Rotation(_) => rotation_cylinders(sys, m, opts.prec)?
            .into_iter()
            .find(|c| c.word == *word)
            .map(|c| c.geom),
    })
}

/// Extends `word` by zeros until the cylinder is full; the result `I ⊂ J`
/// has `Leb(I) = β^{-order(I)} ≥ Leb(J)/β`.
pub fn full_subcylinder(sys: &SystemSpec, word: &CylinderWord) -> Result<CylinderWord> {
    let Some(b) = sys.as_beta() else {
        return Err(Error::Unsupported {
            system: sys.id().to_string(),
            what: "full subcylinders".into(),
        });
    };
    if b.int_beta().is_some() {
        return Ok(word.clone());
    }
    let f = b.beta();
    let one = f.elem_int(1);
    let (_, mut s, _) = beta_state(b, &word.digits)?
        .ok_or_else(|| Error::invalid("word", format!("cylinder {word} is empty")))?;
    let mut digits = word.digits.clone();
    // s grows by a factor β per appended zero, so this ends within log_β(1/s) steps.
    while s != one {
        let bs = f.mul_theta(&s);
        s = beta_child(f, &bs, 0, &one)?.expect("β s > 0 for s > 0");
        digits.push(0);
    }
    Ok(CylinderWord::new(digits))
}

/// `Σ_{J ∈ F_m} K_J^{-δ}` with a rigorous upper bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KjSum {
    pub value: f64,
    pub upper: f64,
}

pub fn kj_sum(sys: &SystemSpec, m: usize, opts: &CylinderOptions) -> Result<KjSum> {
    let delta = sys.delta();
    let mut terms = Vec::new();
    let ifs = sys.as_ifs();
    let tail = visit_cylinders(sys, m, opts, &mut |c| {
        terms.push(match ifs {
            Some(i) => i.word_weight(&c.word.digits),
            None => c.geom.k_j.powf(-delta),
        })
    })?;
    let value = pairwise_sum(&terms);
    // Gauss cylinders satisfy K_J^{-1} = q_m^{-2} ≤ 2 Leb(J) ≤ 4 ln2 μ(J).
    let tail_kj = 4.0 * std::f64::consts::LN_2 * tail;
    let upper = (value + tail_kj) * (1.0 + 4.0 * terms.len() as f64 * f64::EPSILON);
    Ok(KjSum { value, upper })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> CylinderOptions {
        CylinderOptions::default()
    }

    #[test]
    fn doubling_order_three() {
        let s = SystemSpec::parse("beta:2").unwrap();
        let set = cylinders_of_order(&s, 3, &opts()).unwrap();
        assert_eq!(set.len(), 8);
        for c in &set.cylinders {
            assert_eq!(c.geom.length(), 0.125);
            assert_eq!(c.geom.is_full, Some(true));
        }
    }

    #[test]
    fn golden_counts_are_fibonacci() {
        let s = SystemSpec::parse("beta:golden").unwrap();
        assert_eq!(cylinders_of_order(&s, 5, &opts()).unwrap().len(), 13);
        let k = kj_sum(&s, 10, &opts()).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((k.value - 144.0 * phi.powi(-10)).abs() < 1e-12);
    }

    #[test]
    fn cantor_cylinders() {
        let s = SystemSpec::parse("ifs:cantor3").unwrap();
        let set = cylinders_of_order(&s, 2, &opts()).unwrap();
        assert_eq!(set.len(), 4);
        assert!(set.cylinders.iter().all(|c| c.geom.measure == 0.25));
        assert_eq!(kj_sum(&s, 6, &opts()).unwrap().value, 1.0);
    }

    #[test]
    fn full_subcylinder_examples() {
        let g = SystemSpec::parse("beta:golden").unwrap();
        assert_eq!(full_subcylinder(&g, &CylinderWord::new(vec![1])).unwrap().digits, vec![1, 0]);
        assert_eq!(full_subcylinder(&g, &CylinderWord::new(vec![0])).unwrap().digits, vec![0]);
        let two = SystemSpec::parse("beta:2").unwrap();
        let w = CylinderWord::new(vec![1, 0, 1]);
        assert_eq!(full_subcylinder(&two, &w).unwrap(), w);
    }

    #[test]
    fn gauss_kj_is_q_squared() {
        let g = SystemSpec::gauss();
        let c = cylinder_of_word(&g, &CylinderWord::new(vec![1, 1, 1]), &opts())
            .unwrap()
            .unwrap();
        assert_eq!(c.k_j, 9.0);
        let set = cylinders_of_order(&g, 2, &opts()).unwrap();
        assert_eq!(set.len(), 2500);
        assert!(1.0 - set.total_measure() <= set.tail_mass_bound);
    }

    #[test]
    fn rotation_has_m_plus_one_cylinders() {
        let r = SystemSpec::parse("rotation:golden").unwrap();
        let set = cylinders_of_order(&r, 6, &opts()).unwrap();
        assert_eq!(set.len(), 7);
        assert!((set.total_length() - 1.0).abs() < 1e-15);
        assert_eq!(set.min_kj(), 1.0);
    }

    #[test]
    fn explosion_guard() {
        let s = SystemSpec::parse("beta:2").unwrap();
        let o = CylinderOptions { cap: 100, ..opts() };
        assert!(matches!(
            cylinders_of_order(&s, 10, &o),
            Err(Error::ExplosionGuard { .. })
        ));
    }
}
