//! Target rates ψ(n) and the series Σ ψ(n)^δ.

use std::fmt;

use rug::float::Round;
use rug::ops::Pow;
use rug::{Float, Integer, Rational};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numbers::parse_rational;
use crate::stats::pairwise_sum;

#[derive(Clone, Debug, PartialEq)]
pub enum TableTail {
    HoldLast,
    Power { c: Rational, s: Rational },
}

#[derive(Clone, Debug, PartialEq)]
pub enum PsiFamily {
    /// `c n^{-s}`
    Power { c: Rational, s: Rational },
    /// `c n^{-s} ln(n+1)^{-t}`
    PowerLog { c: Rational, s: Rational, t: Rational },
    Constant { eps: Rational },
    /// `ψ(n) = values[n-1]` for `n <= len`, then the tail rule.
    Table { values: Vec<Rational>, tail: TableTail },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesClass {
    Convergent,
    Divergent,
    Unknown,
}

impl fmt::Display for SeriesClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SeriesClass::Convergent => "convergent",
            SeriesClass::Divergent => "divergent",
            SeriesClass::Unknown => "unknown",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PsiSpec {
    family: PsiFamily,
    monotone: bool,
    text: String,
}

fn positive(key: &str, q: &Rational) -> Result<()> {
    if *q > 0 {
        Ok(())
    } else {
        Err(Error::invalid(key, "values must be positive"))
    }
}

impl PsiSpec {
    pub fn new(family: PsiFamily) -> Result<Self> {
        let monotone = match &family {
            PsiFamily::Power { c, s } => {
                positive("psi", c)?;
                positive("psi", s)?;
                true
            }
            PsiFamily::PowerLog { c, s, t } => {
                positive("psi", c)?;
                positive("psi", s)?;
                *t >= 0
            }
            PsiFamily::Constant { eps } => {
                positive("psi", eps)?;
                true
            }
            PsiFamily::Table { values, tail } => {
                if values.is_empty() {
                    return Err(Error::invalid("psi", "table needs at least one value"));
                }
                for v in values {
                    positive("psi", v)?;
                }
                let mut mono = values.windows(2).all(|w| w[1] <= w[0]);
                if let TableTail::Power { c, s } = tail {
                    positive("psi", c)?;
                    positive("psi", s)?;
                    let next = c.to_f64() * ((values.len() + 1) as f64).powf(-s.to_f64());
                    mono &= next <= values.last().unwrap().to_f64();
                }
                mono
            }
        };
        let text = family_text(&family);
        Ok(PsiSpec {
            family,
            monotone,
            text,
        })
    }

    pub fn power(c: f64, s: f64) -> Self {
        Self::new(PsiFamily::Power {
            c: Rational::from_f64(c).expect("finite"),
            s: Rational::from_f64(s).expect("finite"),
        })
        .expect("positive power family")
    }

    /// Parses `power:c,s`, `power_log:c,s,t`, `const:eps` or
    /// `table:v1,v2,…[;power:c,s]`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let (kind, arg) = s
            .split_once(':')
            .ok_or_else(|| Error::invalid("psi", format!("expected family:args, got {s:?}")))?;
        let nums = |want: usize, a: &str| -> Result<Vec<Rational>> {
            let v: Vec<Rational> = a
                .split(',')
                .map(|p| parse_rational("psi", p))
                .collect::<Result<_>>()?;
            if v.len() != want {
                return Err(Error::invalid(
                    "psi",
                    format!("{kind} takes {want} parameters, got {}", v.len()),
                ));
            }
            Ok(v)
        };
        let family = match kind {
            "power" => {
                let v = nums(2, arg)?;
                PsiFamily::Power {
                    c: v[0].clone(),
                    s: v[1].clone(),
                }
            }
            "power_log" => {
                let v = nums(3, arg)?;
                PsiFamily::PowerLog {
                    c: v[0].clone(),
                    s: v[1].clone(),
                    t: v[2].clone(),
                }
            }
            "const" => PsiFamily::Constant {
                eps: nums(1, arg)?.remove(0),
            },
            "table" => {
                let (vals, tail) = arg.split_once(';').unwrap_or((arg, ""));
                let values = vals
                    .split(',')
                    .map(|p| parse_rational("psi", p))
                    .collect::<Result<Vec<_>>>()?;
                let tail = match tail.trim() {
                    "" | "hold" => TableTail::HoldLast,
                    t => match t.split_once(':') {
                        Some(("power", a)) => {
                            let v = nums(2, a)?;
                            TableTail::Power {
                                c: v[0].clone(),
                                s: v[1].clone(),
                            }
                        }
                        _ => return Err(Error::invalid("psi", format!("unknown table tail {t:?}"))),
                    },
                };
                PsiFamily::Table { values, tail }
            }
            _ => {
                return Err(Error::invalid(
                    "psi",
                    format!("unknown family {kind:?}; expected power, power_log, const or table"),
                ))
            }
        };
        let mut spec = Self::new(family)?;
        spec.text = s.to_string();
        Ok(spec)
    }

    pub fn family(&self) -> &PsiFamily {
        &self.family
    }

    pub fn is_monotone(&self) -> bool {
        self.monotone
    }

    /// Whether ψ(n) → 0.
    pub fn tends_to_zero(&self) -> bool {
        match &self.family {
            PsiFamily::Power { .. } | PsiFamily::PowerLog { .. } => true,
            PsiFamily::Constant { .. } => false,
            PsiFamily::Table { tail, .. } => matches!(tail, TableTail::Power { .. }),
        }
    }

    pub fn eval(&self, n: u64) -> f64 {
        let nf = n as f64;
        match &self.family {
            PsiFamily::Power { c, s } => c.to_f64() * nf.powf(-s.to_f64()),
            PsiFamily::PowerLog { c, s, t } => {
                c.to_f64() * nf.powf(-s.to_f64()) * (nf + 1.0).ln().powf(-t.to_f64())
            }
            PsiFamily::Constant { eps } => eps.to_f64(),
            PsiFamily::Table { values, tail } => match values.get(n as usize - 1) {
                Some(v) => v.to_f64(),
                None => match tail {
                    TableTail::HoldLast => values.last().unwrap().to_f64(),
                    TableTail::Power { c, s } => c.to_f64() * nf.powf(-s.to_f64()),
                },
            },
        }
    }

    /// ψ(n) as an exact rational when it is one.
    pub fn exact(&self, n: u64) -> Option<Rational> {
        let pow = |c: &Rational, s: &Rational| -> Option<Rational> {
            let e = s.is_integer().then(|| s.numer().to_u32()).flatten()?;
            Some(c / Rational::from(Integer::from(n).pow(e)))
        };
        match &self.family {
            PsiFamily::Power { c, s } => pow(c, s),
            PsiFamily::PowerLog { .. } => None,
            PsiFamily::Constant { eps } => Some(eps.clone()),
            PsiFamily::Table { values, tail } => match values.get(n as usize - 1) {
                Some(v) => Some(v.clone()),
                None => match tail {
                    TableTail::HoldLast => values.last().cloned(),
                    TableTail::Power { c, s } => pow(c, s),
                },
            },
        }
    }

    /// Certified `(lower, upper)` bounds for ψ(n) at `prec` bits.
    pub fn bounds(&self, n: u64, prec: u32) -> (Float, Float) {
        if let Some(q) = self.exact(n) {
            return (
                Float::with_val_round(prec, &q, Round::Down).0,
                Float::with_val_round(prec, &q, Round::Up).0,
            );
        }
        let (c, s, t) = match &self.family {
            PsiFamily::Power { c, s } => (c, s, None),
            PsiFamily::PowerLog { c, s, t } => (c, s, Some(t)),
            PsiFamily::Table {
                tail: TableTail::Power { c, s },
                ..
            } => (c, s, None),
            _ => unreachable!("rational families handled above"),
        };
        let dn = |q: &Rational| Float::with_val_round(prec, q, Round::Down).0;
        let up = |q: &Rational| Float::with_val_round(prec, q, Round::Up).0;
        let nf = Float::with_val(64, n);
        // n^{-s} is monotone in s; evaluate both endpoints of the s enclosure.
        let corners = |base: &Float, e: &Rational, round: Round| -> Float {
            let a = Float::with_val_round(prec, Pow::pow(base, &-dn(e)), round).0;
            let b = Float::with_val_round(prec, Pow::pow(base, &-up(e)), round).0;
            match round {
                Round::Down => a.min(&b),
                _ => a.max(&b),
            }
        };
        let mut lo = Float::with_val_round(prec, dn(c) * corners(&nf, s, Round::Down), Round::Down).0;
        let mut hi = Float::with_val_round(prec, up(c) * corners(&nf, s, Round::Up), Round::Up).0;
        if let Some(t) = t {
            let l_lo = Float::with_val_round(prec, Float::with_val(64, n + 1).ln_ref(), Round::Down).0;
            let l_hi = Float::with_val_round(prec, Float::with_val(64, n + 1).ln_ref(), Round::Up).0;
            let f_lo = corners(&l_lo, t, Round::Down).min(&corners(&l_hi, t, Round::Down));
            let f_hi = corners(&l_lo, t, Round::Up).max(&corners(&l_hi, t, Round::Up));
            lo = Float::with_val_round(prec, lo * f_lo, Round::Down).0;
            hi = Float::with_val_round(prec, hi * f_hi, Round::Up).0;
        }
        (lo, hi)
    }

    /// `Σ_{n<=N} ψ(n)^δ` in fixed summation order.
    pub fn series_partial(&self, delta: f64, n_max: u64) -> f64 {
        let terms: Vec<f64> = (1..=n_max).map(|n| self.eval(n).powf(delta)).collect();
        pairwise_sum(&terms)
    }

    /// Convergence class of `Σ ψ(n)^δ`. `delta_exact` says δ is exactly 1,
    /// which allows exact comparison of the exponents.
    pub fn series_class(&self, delta: f64, delta_exact: bool) -> SeriesClass {
        let cmp_one = |x: &Rational| -> Option<std::cmp::Ordering> {
            if delta_exact {
                return Some(x.cmp(&Rational::from(1)));
            }
            let v = x.to_f64() * delta;
            if (v - 1.0).abs() < 1e-12 {
                None
            } else {
                v.partial_cmp(&1.0)
            }
        };
        use std::cmp::Ordering::*;
        match &self.family {
            PsiFamily::Power { s, .. } => match cmp_one(s) {
                Some(Greater) => SeriesClass::Convergent,
                Some(_) => SeriesClass::Divergent,
                None => SeriesClass::Unknown,
            },
            PsiFamily::PowerLog { s, t, .. } => match cmp_one(s) {
                Some(Greater) => SeriesClass::Convergent,
                Some(Less) => SeriesClass::Divergent,
                Some(Equal) => match cmp_one(t) {
                    Some(Greater) => SeriesClass::Convergent,
                    Some(_) => SeriesClass::Divergent,
                    None => SeriesClass::Unknown,
                },
                None => SeriesClass::Unknown,
            },
            PsiFamily::Constant { .. } => SeriesClass::Divergent,
            PsiFamily::Table { .. } => SeriesClass::Unknown,
        }
    }
}

impl fmt::Display for PsiSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

fn q(x: &Rational) -> String {
    crate::systems::fmt_rational(x)
}

fn family_text(f: &PsiFamily) -> String {
    match f {
        PsiFamily::Power { c, s } => format!("power:{},{}", q(c), q(s)),
        PsiFamily::PowerLog { c, s, t } => format!("power_log:{},{},{}", q(c), q(s), q(t)),
        PsiFamily::Constant { eps } => format!("const:{}", q(eps)),
        PsiFamily::Table { values, tail } => {
            let v: Vec<String> = values.iter().map(q).collect();
            match tail {
                TableTail::HoldLast => format!("table:{}", v.join(",")),
                TableTail::Power { c, s } => {
                    format!("table:{};power:{},{}", v.join(","), q(c), q(s))
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_examples() {
        assert_eq!(PsiSpec::parse("power:1,1").unwrap().eval(10), 0.1);
        assert_eq!(PsiSpec::parse("power:0.5,2").unwrap().eval(4), 0.03125);
        let pl = PsiSpec::parse("power_log:1,1,1").unwrap();
        assert!((pl.eval(1) - 1.0 / 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn bounds_enclose() {
        for text in ["power:0.5,1", "power:1,1.5", "power_log:1,1,1", "power:0.2,0.3"] {
            let p = PsiSpec::parse(text).unwrap();
            for n in [1u64, 2, 7, 100, 4096] {
                let (lo, hi) = p.bounds(n, 128);
                let v = p.eval(n);
                assert!(lo <= hi);
                assert!((lo.to_f64() - v).abs() <= 1e-14 * v, "{text} {n}");
                assert!((hi.to_f64() - v).abs() <= 1e-14 * v, "{text} {n}");
            }
        }
        let (lo, hi) = PsiSpec::parse("power:1,1").unwrap().bounds(3, 64);
        assert!(lo < hi && lo < Rational::from((1, 3)) && hi > Rational::from((1, 3)));
    }

    #[test]
    fn classes() {
        let h = PsiSpec::parse("power:1,1").unwrap();
        assert_eq!(h.series_class(1.0, true), SeriesClass::Divergent);
        let sq = PsiSpec::parse("power:1,2").unwrap();
        assert_eq!(sq.series_class(1.0, true), SeriesClass::Convergent);
        let d = 2f64.ln() / 3f64.ln();
        assert_eq!(sq.series_class(d, false), SeriesClass::Convergent);
        assert!((sq.series_partial(1.0, 1_000_000) - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-5);
        let t = PsiSpec::parse("table:0.5,0.25").unwrap();
        assert_eq!(t.series_class(1.0, true), SeriesClass::Unknown);
        let pl = PsiSpec::parse("power_log:1,1,2").unwrap();
        assert_eq!(pl.series_class(1.0, true), SeriesClass::Convergent);
        let pl1 = PsiSpec::parse("power_log:1,1,1").unwrap();
        assert_eq!(pl1.series_class(1.0, true), SeriesClass::Divergent);
    }

    #[test]
    fn parsing_and_flags() {
        assert!(!PsiSpec::parse("const:0.1").unwrap().tends_to_zero());
        assert!(PsiSpec::parse("power:0,1").is_err());
        assert!(PsiSpec::parse("wave:1").is_err());
        let t = PsiSpec::parse("table:0.1,0.3;power:1,1").unwrap();
        assert!(!t.is_monotone());
        assert!(t.tends_to_zero());
        assert_eq!(t.eval(4), 0.25);
        assert_eq!(t.to_string(), "table:0.1,0.3;power:1,1");
        assert_eq!(PsiSpec::power(0.5, 1.0).to_string(), "power:1/2,1");
        assert_eq!(PsiSpec::parse("power:0.5,1").unwrap().exact(4), Some(Rational::from((1, 8))));
    }
}
