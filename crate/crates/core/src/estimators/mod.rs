//! Certified hit tests for `A_n = {x : d(T^n x, f(x)) < ψ(n)}` and the
//! estimates built on them.

mod bounds;
mod hits;
mod oracle;
mod verdict;

use std::collections::HashMap;

use rug::{Float, Rational};
use serde::Serialize;

use crate::algebraic::AlgebraicNumber;
use crate::ball::CertifiedPoint;
use crate::error::Error;
use crate::measures::SamplePoint;
use crate::systems::{Prepared, SystemSpec};
use crate::targets::PsiSpec;
use crate::twists::TwistSpec;

pub use bounds::{
    chung_erdos_bound, cluster_check, cluster_radius, corridor, posmeas_bound, sandwich_check,
    ClusterReport, Corridor, SandwichReport,
};
pub use hits::{
    classify, estimate_mu_an, estimate_mu_sweep, estimate_pairwise, estimate_pairwise_grid,
    hit_statistics, hit_test, HitRecord, HitStatistics, HitSummary, MixingRates,
    QuasiIndependenceReport, RateSource,
};
pub use oracle::{badic_oracle, dyadic_pair_oracle, BranchMass, OracleResult};
pub use verdict::{verdict, Thresholds, Verdict, VerdictReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HitOutcome {
    Hit,
    Miss,
    Indeterminate,
}

/// A point whose enclosure can be requested at any precision.
#[derive(Clone, Debug)]
pub enum TestPoint {
    Sample(SamplePoint),
    Rational(Rational),
    Algebraic(AlgebraicNumber),
}

impl TestPoint {
    pub fn enclosure(&self, sys: &SystemSpec, prec: u32) -> CertifiedPoint {
        match self {
            TestPoint::Sample(s) => s.enclosure(sys, prec),
            TestPoint::Rational(q) => CertifiedPoint::from_rational(q, prec),
            TestPoint::Algebraic(a) => a.ball(prec),
        }
    }
}

/// Working precision: the first attempt and the cap for escalation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[derive(Default)]
pub struct PrecisionPolicy {
    /// Overrides the system's default starting precision.
    pub initial: Option<u32>,
    /// Overrides the default cap of four doublings above the start.
    pub max: Option<u32>,
}

impl PrecisionPolicy {
    pub fn start(&self, sys: &SystemSpec, horizon: usize) -> u32 {
        self.initial.unwrap_or_else(|| sys.initial_precision(horizon)).max(64)
    }

    pub fn cap(&self, sys: &SystemSpec, horizon: usize) -> u32 {
        let start = self.start(sys, horizon);
        self.max.unwrap_or(start.saturating_mul(16)).max(start)
    }
}


/// Sampling knobs shared by the estimators.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EstimatorOptions {
    pub samples: u64,
    pub seed: u64,
    /// Width of the reported confidence intervals in standard deviations.
    pub z: f64,
    pub precision: PrecisionPolicy,
    /// Largest tolerated share of indeterminate samples.
    pub max_indeterminate_rate: f64,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        EstimatorOptions {
            samples: 10_000,
            seed: 0,
            z: 3.0,
            precision: PrecisionPolicy::default(),
            max_indeterminate_rate: 0.01,
        }
    }
}

/// The triple `(T, f, ψ)` defining the sets `A_n`.
#[derive(Clone, Copy, Debug)]
pub struct Experiment<'a> {
    pub sys: &'a SystemSpec,
    pub f: &'a TwistSpec,
    pub psi: &'a PsiSpec,
}

impl<'a> Experiment<'a> {
    pub fn new(sys: &'a SystemSpec, f: &'a TwistSpec, psi: &'a PsiSpec) -> Self {
        Experiment { sys, f, psi }
    }
}

/// Per-worker cache of prepared systems and ψ bounds, keyed by precision.
pub(crate) struct Workspace<'a> {
    exp: Experiment<'a>,
    ns: &'a [usize],
    prepared: HashMap<u32, Prepared<'a>>,
    psi: HashMap<u32, Vec<(Float, Float)>>,
}

impl<'a> Workspace<'a> {
    pub(crate) fn new(exp: Experiment<'a>, ns: &'a [usize]) -> Self {
        Workspace {
            exp,
            ns,
            prepared: HashMap::new(),
            psi: HashMap::new(),
        }
    }

    /// Hit/miss/indeterminate for every `n` in the sorted list `ns`.
    pub(crate) fn classify(&mut self, point: &TestPoint, policy: &PrecisionPolicy) -> Vec<HitOutcome> {
        let ns = self.ns;
        let sys = self.exp.sys;
        let Some(&horizon) = ns.last() else {
            return Vec::new();
        };
        let mut out: Vec<Option<HitOutcome>> = vec![None; ns.len()];
        let mut prec = policy.start(sys, horizon);
        let cap = policy.cap(sys, horizon);
        let mut attempt = 0u32;
        loop {
            self.pass(point, prec, attempt, &mut out);
            if out.iter().all(Option::is_some) || prec >= cap {
                break;
            }
            prec = prec.saturating_mul(2).min(cap);
            attempt += 1;
        }
        out.into_iter()
            .map(|o| o.unwrap_or(HitOutcome::Indeterminate))
            .collect()
    }

    /// One orbit at `prec`, deciding what it can.
    fn pass(&mut self, point: &TestPoint, prec: u32, attempt: u32, out: &mut [Option<HitOutcome>]) {
        let Experiment { sys, f, psi } = self.exp;
        let ns = self.ns;
        // ψ bounds are cheap to tighten, so start them coarse.
        let psi_prec = prec.min(128u32.saturating_mul(1 << attempt.min(16)));
        let bounds = self
            .psi
            .entry(psi_prec)
            .or_insert_with(|| ns.iter().map(|&n| psi.bounds(n as u64, psi_prec)).collect());
        let prep = self
            .prepared
            .entry(prec)
            .or_insert_with(|| sys.prepare(prec));
        let x = point.enclosure(sys, prec);
        let Ok(fx) = f.eval(&x) else { return };
        let last = match out.iter().rposition(Option::is_none) {
            Some(i) => ns[i],
            None => return,
        };
        let one = Float::with_val(53, 1);
        let mut orbit = prep.orbit(x);
        let mut idx = 0;
        for k in 1..=last {
            let Ok((_, y)) = orbit.next_step() else { return };
            while idx < ns.len() && ns[idx] < k {
                idx += 1;
            }
            if idx < ns.len() && ns[idx] == k && out[idx].is_none() {
                let d = prep.distance(y, &fx);
                let (lo, hi) = &bounds[idx];
                if d.hi() < *lo {
                    out[idx] = Some(HitOutcome::Hit);
                } else if d.lo() >= *hi {
                    out[idx] = Some(HitOutcome::Miss);
                }
            }
            if *y.rad() > one {
                return;
            }
        }
    }
}

/// Sorted, deduplicated horizons; rejects `n = 0`.
pub(crate) fn normalize_ns(ns: &[usize]) -> crate::error::Result<Vec<usize>> {
    if ns.contains(&0) {
        return Err(Error::invalid("n", "n must be at least 1"));
    }
    let mut v = ns.to_vec();
    v.sort_unstable();
    v.dedup();
    Ok(v)
}
