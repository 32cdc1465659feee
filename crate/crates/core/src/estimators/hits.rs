use rayon::prelude::*;
use serde::Serialize;

use super::{normalize_ns, EstimatorOptions, Experiment, HitOutcome, PrecisionPolicy, TestPoint, Workspace};
use crate::error::{Error, Result};
use crate::measures::{sample_key, MeasureEstimate};
use crate::rng::{streams, Key};
use crate::stats::pairwise_sum;
use crate::systems::{SystemKind, SystemSpec};

/// Certified test of `d(T^n x, f(x)) < ψ(n)`, escalating precision up to the cap.
pub fn hit_test(exp: Experiment<'_>, x: &TestPoint, n: usize, policy: &PrecisionPolicy) -> Result<HitOutcome> {
    let ns = normalize_ns(&[n])?;
    Ok(Workspace::new(exp, &ns).classify(x, policy)[0])
}

/// Outcomes for every `n` in `ns` (sorted ascending) from a single orbit.
pub fn classify(exp: Experiment<'_>, x: &TestPoint, ns: &[usize], policy: &PrecisionPolicy) -> Result<Vec<HitOutcome>> {
    let ns = normalize_ns(ns)?;
    Ok(Workspace::new(exp, &ns).classify(x, policy))
}

/// Outcomes for samples `0..samples` at each `n` in `ns`, in index order.
pub(crate) fn sample_outcomes(exp: Experiment<'_>, ns: &[usize], opts: &EstimatorOptions) -> Vec<Vec<HitOutcome>> {
    let sys = exp.sys;
    (0..opts.samples)
        .into_par_iter()
        .map_init(
            || Workspace::new(exp, ns),
            |ws, i| {
                let (p, _) = sample_key(sys, Key::new(opts.seed, streams::POINTS, i));
                ws.classify(&TestPoint::Sample(p), &opts.precision)
            },
        )
        .collect()
}

fn check_samples(opts: &EstimatorOptions) -> Result<()> {
    if opts.samples < 100 {
        return Err(Error::invalid("samples", "at least 100 samples are required"));
    }
    Ok(())
}

fn tally(outcomes: impl Iterator<Item = HitOutcome>) -> (u64, u64) {
    outcomes.fold((0, 0), |(h, i), o| match o {
        HitOutcome::Hit => (h + 1, i),
        HitOutcome::Indeterminate => (h, i + 1),
        HitOutcome::Miss => (h, i),
    })
}

fn to_estimate(hits: u64, indet: u64, opts: &EstimatorOptions) -> Result<MeasureEstimate> {
    let est = MeasureEstimate::from_counts(hits, indet, opts.samples, opts.seed, opts.z);
    if est.indeterminate_rate() > opts.max_indeterminate_rate {
        return Err(Error::IndeterminateExcess {
            indeterminate: indet,
            samples: opts.samples,
        });
    }
    Ok(est)
}

/// Monte Carlo estimate of `μ(A_n)`.
pub fn estimate_mu_an(exp: Experiment<'_>, n: usize, opts: &EstimatorOptions) -> Result<MeasureEstimate> {
    Ok(estimate_mu_sweep(exp, &[n], opts)?.remove(0))
}

/// Estimates of `μ(A_n)` for every `n` in `ns`, one orbit per sample.
/// The result follows the sorted order of `ns`.
pub fn estimate_mu_sweep(exp: Experiment<'_>, ns: &[usize], opts: &EstimatorOptions) -> Result<Vec<MeasureEstimate>> {
    check_samples(opts)?;
    let ns = normalize_ns(ns)?;
    let outcomes = sample_outcomes(exp, &ns, opts);
    (0..ns.len())
        .map(|j| {
            let (h, i) = tally(outcomes.iter().map(|o| o[j]));
            to_estimate(h, i, opts)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RateSource {
    ClosedForm,
    ConditionsEstimate,
    UserSupplied,
}

/// Mixing rates `a_k`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MixingRates {
    pub source: RateSource,
    /// `table[k - 1] = a_k` for the table sources.
    table: Vec<f64>,
    #[serde(skip)]
    closed: Option<(f64, f64)>,
}

impl MixingRates {
    /// `a_k = c·q^k`: `4 r_max^{kδ}` for IFS, `4 β^{-k}` for integer β.
    pub fn closed_form(sys: &SystemSpec) -> Option<Self> {
        let q = match sys.kind() {
            SystemKind::Ifs(ifs) => ifs.r_max().powf(ifs.delta()),
            SystemKind::Beta(b) => 1.0 / b.int_beta()? as f64,
            _ => return None,
        };
        Some(MixingRates {
            source: RateSource::ClosedForm,
            table: Vec::new(),
            closed: Some((4.0, q)),
        })
    }

    pub fn from_table(source: RateSource, table: Vec<f64>) -> Self {
        MixingRates {
            source,
            table,
            closed: None,
        }
    }

    /// `a_k` for `k ≥ 1`; tables hold their last value beyond their length.
    pub fn get(&self, k: usize) -> Result<f64> {
        if let Some((c, q)) = self.closed {
            return Ok(c * q.powi(k as i32));
        }
        self.table
            .get(k.saturating_sub(1))
            .or(self.table.last())
            .copied()
            .ok_or_else(|| Error::invalid("mixing", "empty mixing-rate table"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuasiIndependenceReport {
    pub m: usize,
    pub n: usize,
    pub est_joint: MeasureEstimate,
    pub marg_m: MeasureEstimate,
    pub marg_n: MeasureEstimate,
    pub a_n_minus_m: f64,
    pub a_n: f64,
    pub rate_source: RateSource,
    /// `ψ(m)^δψ(n)^δ + a_{n−m}ψ(n)^δ + a_nψ(m)^δ`
    pub bound_value: f64,
    pub ratio: f64,
}

fn joint(a: HitOutcome, b: HitOutcome) -> HitOutcome {
    use HitOutcome::*;
    match (a, b) {
        (Miss, _) | (_, Miss) => Miss,
        (Hit, Hit) => Hit,
        _ => Indeterminate,
    }
}

fn qi_report(
    exp: Experiment<'_>,
    m: usize,
    n: usize,
    col_m: impl Iterator<Item = HitOutcome> + Clone,
    col_n: impl Iterator<Item = HitOutcome> + Clone,
    rates: &MixingRates,
    opts: &EstimatorOptions,
) -> Result<QuasiIndependenceReport> {
    let delta = exp.sys.delta();
    let (hm, im) = tally(col_m.clone());
    let (hn, in_) = tally(col_n.clone());
    let (hj, ij) = tally(col_m.zip(col_n).map(|(a, b)| joint(a, b)));
    let pm = exp.psi.eval(m as u64).powf(delta);
    let pn = exp.psi.eval(n as u64).powf(delta);
    let a_nm = rates.get(n - m)?;
    let a_n = rates.get(n)?;
    let bound_value = pm * pn + a_nm * pn + a_n * pm;
    let est_joint = to_estimate(hj, ij, opts)?;
    Ok(QuasiIndependenceReport {
        m,
        n,
        ratio: est_joint.mean / bound_value,
        marg_m: to_estimate(hm, im, opts)?,
        marg_n: to_estimate(hn, in_, opts)?,
        est_joint,
        a_n_minus_m: a_nm,
        a_n,
        rate_source: rates.source,
        bound_value,
    })
}

/// Joint estimate of `μ(A_m ∩ A_n)` against the quasi-independence bound.
/// Marginals and joint come from the same samples.
pub fn estimate_pairwise(
    exp: Experiment<'_>,
    m: usize,
    n: usize,
    rates: &MixingRates,
    opts: &EstimatorOptions,
) -> Result<QuasiIndependenceReport> {
    if !(n > m && m >= 1) {
        return Err(Error::invalid("m", "pairwise estimates need n > m >= 1"));
    }
    check_samples(opts)?;
    let ns = [m, n];
    let outcomes = sample_outcomes(exp, &ns, opts);
    qi_report(
        exp,
        m,
        n,
        outcomes.iter().map(|o| o[0]),
        outcomes.iter().map(|o| o[1]),
        rates,
        opts,
    )
}

/// Reports for every pair `lo ≤ m < n ≤ hi`, ordered by `(m, n)`, from one
/// orbit per sample.
pub fn estimate_pairwise_grid(
    exp: Experiment<'_>,
    lo: usize,
    hi: usize,
    rates: &MixingRates,
    opts: &EstimatorOptions,
) -> Result<Vec<QuasiIndependenceReport>> {
    if !(hi > lo && lo >= 1) {
        return Err(Error::invalid("m", "pairwise grids need hi > lo >= 1"));
    }
    check_samples(opts)?;
    let ns: Vec<usize> = (lo..=hi).collect();
    let outcomes = sample_outcomes(exp, &ns, opts);
    let mut out = Vec::new();
    for (i, &m) in ns.iter().enumerate() {
        for (j, &n) in ns.iter().enumerate().skip(i + 1) {
            out.push(qi_report(
                exp,
                m,
                n,
                outcomes.iter().map(|o| o[i]),
                outcomes.iter().map(|o| o[j]),
                rates,
                opts,
            )?);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HitRecord {
    pub point_index: u64,
    pub hit_times: Vec<usize>,
    pub indeterminate_times: Vec<usize>,
    pub horizon: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HitSummary {
    pub points: u64,
    pub horizon: usize,
    /// Mean of `S_N(x) = #{n ≤ N : hit}`; by linearity also `Σ_{n≤N} μ̂(A_n)`.
    pub mean_hits: f64,
    /// Share of points with a certified hit in `(N/2, N]`.
    pub tail_fraction: f64,
    /// As above, also counting points whose only tail events are indeterminate.
    pub tail_fraction_upper: f64,
    pub indeterminate_events: u64,
    /// `Σ_{n≤N} ψ(n)^δ`.
    pub psi_series_partial: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HitStatistics {
    pub records: Vec<HitRecord>,
    pub summary: HitSummary,
}

/// Certified hit times up to `horizon` for each sample.
pub fn hit_statistics(exp: Experiment<'_>, horizon: usize, opts: &EstimatorOptions) -> Result<HitStatistics> {
    if horizon < 2 {
        return Err(Error::invalid("horizon", "horizon must be at least 2"));
    }
    if opts.samples == 0 {
        return Err(Error::invalid("samples", "at least one sample is required"));
    }
    let ns: Vec<usize> = (1..=horizon).collect();
    let outcomes = sample_outcomes(exp, &ns, opts);
    let half = horizon / 2;
    let mut records = Vec::with_capacity(outcomes.len());
    let (mut tail, mut tail_upper, mut indet) = (0u64, 0u64, 0u64);
    let mut counts = Vec::with_capacity(outcomes.len());
    for (i, o) in outcomes.iter().enumerate() {
        let pick = |want: HitOutcome| -> Vec<usize> {
            o.iter()
                .enumerate()
                .filter(|(_, &x)| x == want)
                .map(|(k, _)| k + 1)
                .collect()
        };
        let rec = HitRecord {
            point_index: i as u64,
            hit_times: pick(HitOutcome::Hit),
            indeterminate_times: pick(HitOutcome::Indeterminate),
            horizon,
        };
        let t_hit = rec.hit_times.iter().any(|&n| n > half);
        let t_ind = rec.indeterminate_times.iter().any(|&n| n > half);
        tail += t_hit as u64;
        tail_upper += (t_hit || t_ind) as u64;
        indet += rec.indeterminate_times.len() as u64;
        counts.push(rec.hit_times.len() as f64);
        records.push(rec);
    }
    let pts = opts.samples as f64;
    Ok(HitStatistics {
        summary: HitSummary {
            points: opts.samples,
            horizon,
            mean_hits: pairwise_sum(&counts) / pts,
            tail_fraction: tail as f64 / pts,
            tail_fraction_upper: tail_upper as f64 / pts,
            indeterminate_events: indet,
            psi_series_partial: exp.psi.series_partial(exp.sys.delta(), horizon as u64),
        },
        records,
    })
}
