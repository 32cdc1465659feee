use serde::Serialize;

use super::{hit_statistics, EstimatorOptions, Experiment};
use crate::error::{Error, Result};
use crate::targets::SeriesClass;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    EmpiricallyFull,
    EmpiricallyNull,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Thresholds {
    pub full: f64,
    pub null: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { full: 0.9, null: 0.1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sums {
    /// `Σ_{n≤N} ψ(n)^δ`.
    pub psi_delta: f64,
    /// Mean number of certified hits per point up to `N`.
    pub mean_hits: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerdictReport {
    pub verdict: Verdict,
    pub class: SeriesClass,
    pub tail_fraction: f64,
    pub tail_fraction_upper: f64,
    pub sums: Sums,
    pub thresholds: Thresholds,
    pub flags: Vec<String>,
    pub points: u64,
    pub horizon: usize,
}

/// Combines the convergence class of `Σψ(n)^δ` with the share of points
/// hitting in the tail window `(N/2, N]`.
///
/// A divergent class needs the certified tail share at least `θ_full`; a
/// convergent class needs the tail share, indeterminates included, at most
/// `θ_null`. Circle rotations violate the expanding hypotheses, so for them
/// the tail share alone decides and the report carries a flag.
pub fn verdict(exp: Experiment<'_>, horizon: usize, thresholds: Thresholds, opts: &EstimatorOptions) -> Result<VerdictReport> {
    if !exp.psi.tends_to_zero() {
        return Err(Error::invalid(
            "psi",
            "the zero-one law assumes lim ψ(n) = 0; a constant ψ is not admissible for verdict",
        ));
    }
    if !(0.0..=1.0).contains(&thresholds.null) || !(0.0..=1.0).contains(&thresholds.full) || thresholds.null >= thresholds.full {
        return Err(Error::invalid("thresholds", "need 0 <= null < full <= 1"));
    }
    let sys = exp.sys;
    let class = exp.psi.series_class(sys.delta(), sys.delta_is_one());
    let stats = hit_statistics(exp, horizon, opts)?;
    let s = stats.summary;
    let full = s.tail_fraction >= thresholds.full;
    let null = s.tail_fraction_upper <= thresholds.null;
    let mut flags = Vec::new();
    let verdict = if sys.is_rotation() {
        flags.push("zero_one_law_not_applicable".to_string());
        flags.push("expanding condition fails: min K_J = 1 for every order".to_string());
        match (full, null) {
            (true, _) => Verdict::EmpiricallyFull,
            (_, true) => Verdict::EmpiricallyNull,
            _ => Verdict::Inconclusive,
        }
    } else {
        match class {
            SeriesClass::Divergent if full => Verdict::EmpiricallyFull,
            SeriesClass::Convergent if null => Verdict::EmpiricallyNull,
            SeriesClass::Unknown => {
                flags.push("series class unknown".to_string());
                Verdict::Inconclusive
            }
            _ => {
                flags.push("series class and tail fraction disagree".to_string());
                Verdict::Inconclusive
            }
        }
    };
    if s.indeterminate_events > 0 {
        flags.push(format!("{} indeterminate hit tests", s.indeterminate_events));
    }
    Ok(VerdictReport {
        verdict,
        class,
        tail_fraction: s.tail_fraction,
        tail_fraction_upper: s.tail_fraction_upper,
        sums: Sums {
            psi_delta: s.psi_series_partial,
            mean_hits: s.mean_hits,
        },
        thresholds,
        flags,
        points: s.points,
        horizon,
    })
}
