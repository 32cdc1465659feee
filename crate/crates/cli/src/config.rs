//! Experiment configuration: sectioned `key = value` text with flag overrides.
//!
//! Every key has a default, so an empty file is a valid configuration. The
//! resolved configuration renders back to the same format and reloads to an
//! identical value.

use std::fmt::Write as _;
use std::path::Path;

use ini::Ini;
use serde::Serialize;
use twistlab_core::conditions::{ConditionOptions, MixingOptions};
use twistlab_core::cylinders::CylinderOptions;
use twistlab_core::estimators::Thresholds;
use twistlab_core::{EstimatorOptions, PrecisionPolicy, PsiSpec, SystemSpec, TwistSpec};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentSection {
    pub system: String,
    pub twist: String,
    pub psi: String,
    /// Largest orbit step `N`.
    pub horizon: usize,
    pub samples: u64,
    pub seed: u64,
    /// Confidence interval half-width in standard deviations.
    pub z: f64,
    pub max_indeterminate_rate: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct PrecisionSection {
    pub initial: Option<u32>,
    pub max: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeasureSection {
    pub ns: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairwiseSection {
    pub lo: usize,
    pub hi: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerdictSection {
    pub full: f64,
    pub null: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CylindersSection {
    pub order: usize,
    pub cap: u128,
    pub gauss_digit_cap: u64,
    pub prec: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionsSection {
    pub ahlfors_centers: usize,
    pub ahlfors_radii: usize,
    pub mixing_orders: usize,
    pub mixing_samples: u64,
    pub max_order: usize,
    pub distortion_order: usize,
    pub distortion_samples: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleSection {
    pub n: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct OutputSection {
    pub dir: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub precision: PrecisionSection,
    pub measure: MeasureSection,
    pub pairwise: PairwiseSection,
    pub verdict: VerdictSection,
    pub cylinders: CylindersSection,
    pub conditions: ConditionsSection,
    pub oracle: OracleSection,
    pub output: OutputSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let cyl = CylinderOptions::default();
        let cond = ConditionOptions::default();
        let thresholds = Thresholds::default();
        let est = EstimatorOptions::default();
        ExperimentConfig {
            experiment: ExperimentSection {
                system: "beta:2".into(),
                twist: "identity".into(),
                psi: "power:0.1,1".into(),
                horizon: 1024,
                samples: est.samples,
                seed: est.seed,
                z: est.z,
                max_indeterminate_rate: est.max_indeterminate_rate,
            },
            precision: PrecisionSection::default(),
            measure: MeasureSection {
                ns: (1..=16).collect(),
            },
            pairwise: PairwiseSection { lo: 10, hi: 40 },
            verdict: VerdictSection {
                full: thresholds.full,
                null: thresholds.null,
            },
            cylinders: CylindersSection {
                order: 4,
                cap: cyl.cap,
                gauss_digit_cap: cyl.gauss_digit_cap,
                prec: cyl.prec,
            },
            conditions: ConditionsSection {
                ahlfors_centers: cond.ahlfors_centers,
                ahlfors_radii: cond.ahlfors_radii,
                mixing_orders: cond.mixing_orders,
                mixing_samples: cond.mixing.samples,
                max_order: cond.max_order,
                distortion_order: cond.distortion_order,
                distortion_samples: cond.distortion_samples,
            },
            oracle: OracleSection { n: 10 },
            output: OutputSection::default(),
        }
    }
}

fn bad(key: &str, msg: impl Into<String>) -> CliError {
    CliError::Config {
        key: key.to_string(),
        msg: msg.into(),
    }
}

fn num<T: std::str::FromStr>(key: &str, value: &str, what: &str) -> CliResult<T> {
    value
        .trim()
        .parse()
        .map_err(|_| bad(key, format!("expected {what}, got {value:?}")))
}

fn opt_num<T: std::str::FromStr>(key: &str, value: &str, what: &str) -> CliResult<Option<T>> {
    let v = value.trim();
    if v.is_empty() || v == "auto" {
        Ok(None)
    } else {
        num(key, v, what).map(Some)
    }
}

/// Parses `1-4,8,16` into `[1, 2, 3, 4, 8, 16]`.
fn parse_ns(key: &str, value: &str) -> CliResult<Vec<usize>> {
    let mut out = Vec::new();
    for part in value.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b): (usize, usize) = (num(key, a, "a range a-b")?, num(key, b, "a range a-b")?);
                if a > b {
                    return Err(bad(key, format!("empty range {part:?}")));
                }
                out.extend(a..=b);
            }
            None => out.push(num(key, part, "a list of orbit steps")?),
        }
    }
    Ok(out)
}

fn render_ns(ns: &[usize]) -> String {
    let mut parts = Vec::new();
    let mut i = 0;
    while i < ns.len() {
        let mut j = i;
        while j + 1 < ns.len() && ns[j + 1] == ns[j] + 1 {
            j += 1;
        }
        parts.push(if j > i + 1 {
            format!("{}-{}", ns[i], ns[j])
        } else if j == i + 1 {
            format!("{},{}", ns[i], ns[j])
        } else {
            ns[i].to_string()
        });
        i = j + 1;
    }
    parts.join(",")
}

fn opt_to_string<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "auto".to_string(), T::to_string)
}

impl ExperimentConfig {
    /// Sets one key; `key` is `section.name`.
    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        let v = value.trim();
        let uint = "an unsigned integer";
        let real = "a real number";
        match key {
            "experiment.system" => self.experiment.system = v.to_string(),
            "experiment.twist" => self.experiment.twist = v.to_string(),
            "experiment.psi" => self.experiment.psi = v.to_string(),
            "experiment.horizon" => self.experiment.horizon = num(key, v, uint)?,
            "experiment.samples" => self.experiment.samples = num(key, v, uint)?,
            "experiment.seed" => self.experiment.seed = num(key, v, uint)?,
            "experiment.z" => self.experiment.z = num(key, v, real)?,
            "experiment.max_indeterminate_rate" => self.experiment.max_indeterminate_rate = num(key, v, real)?,
            "precision.initial" => self.precision.initial = opt_num(key, v, "a bit count or auto")?,
            "precision.max" => self.precision.max = opt_num(key, v, "a bit count or auto")?,
            "measure.ns" => self.measure.ns = parse_ns(key, v)?,
            "pairwise.lo" => self.pairwise.lo = num(key, v, uint)?,
            "pairwise.hi" => self.pairwise.hi = num(key, v, uint)?,
            "verdict.full" => self.verdict.full = num(key, v, real)?,
            "verdict.null" => self.verdict.null = num(key, v, real)?,
            "cylinders.order" => self.cylinders.order = num(key, v, uint)?,
            "cylinders.cap" => self.cylinders.cap = num(key, v, uint)?,
            "cylinders.gauss_digit_cap" => self.cylinders.gauss_digit_cap = num(key, v, uint)?,
            "cylinders.prec" => self.cylinders.prec = num(key, v, uint)?,
            "conditions.ahlfors_centers" => self.conditions.ahlfors_centers = num(key, v, uint)?,
            "conditions.ahlfors_radii" => self.conditions.ahlfors_radii = num(key, v, uint)?,
            "conditions.mixing_orders" => self.conditions.mixing_orders = num(key, v, uint)?,
            "conditions.mixing_samples" => self.conditions.mixing_samples = num(key, v, uint)?,
            "conditions.max_order" => self.conditions.max_order = num(key, v, uint)?,
            "conditions.distortion_order" => self.conditions.distortion_order = num(key, v, uint)?,
            "conditions.distortion_samples" => self.conditions.distortion_samples = num(key, v, uint)?,
            "oracle.n" => self.oracle.n = num(key, v, uint)?,
            "output.dir" => self.output.dir = (!v.is_empty()).then(|| v.to_string()),
            _ => return Err(bad(key, "unknown key")),
        }
        Ok(())
    }

    /// `(section, [(key, value)])` in canonical order.
    pub fn entries(&self) -> Vec<(&'static str, Vec<(&'static str, String)>)> {
        let e = &self.experiment;
        let c = &self.conditions;
        vec![
            (
                "experiment",
                vec![
                    ("system", e.system.clone()),
                    ("twist", e.twist.clone()),
                    ("psi", e.psi.clone()),
                    ("horizon", e.horizon.to_string()),
                    ("samples", e.samples.to_string()),
                    ("seed", e.seed.to_string()),
                    ("z", e.z.to_string()),
                    ("max_indeterminate_rate", e.max_indeterminate_rate.to_string()),
                ],
            ),
            (
                "precision",
                vec![
                    ("initial", opt_to_string(&self.precision.initial)),
                    ("max", opt_to_string(&self.precision.max)),
                ],
            ),
            ("measure", vec![("ns", render_ns(&self.measure.ns))]),
            (
                "pairwise",
                vec![("lo", self.pairwise.lo.to_string()), ("hi", self.pairwise.hi.to_string())],
            ),
            (
                "verdict",
                vec![("full", self.verdict.full.to_string()), ("null", self.verdict.null.to_string())],
            ),
            (
                "cylinders",
                vec![
                    ("order", self.cylinders.order.to_string()),
                    ("cap", self.cylinders.cap.to_string()),
                    ("gauss_digit_cap", self.cylinders.gauss_digit_cap.to_string()),
                    ("prec", self.cylinders.prec.to_string()),
                ],
            ),
            (
                "conditions",
                vec![
                    ("ahlfors_centers", c.ahlfors_centers.to_string()),
                    ("ahlfors_radii", c.ahlfors_radii.to_string()),
                    ("mixing_orders", c.mixing_orders.to_string()),
                    ("mixing_samples", c.mixing_samples.to_string()),
                    ("max_order", c.max_order.to_string()),
                    ("distortion_order", c.distortion_order.to_string()),
                    ("distortion_samples", c.distortion_samples.to_string()),
                ],
            ),
            ("oracle", vec![("n", self.oracle.n.to_string())]),
            (
                "output",
                vec![("dir", self.output.dir.clone().unwrap_or_default())],
            ),
        ]
    }

    /// Renders the configuration as loadable text.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (i, (section, keys)) in self.entries().into_iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            let _ = writeln!(out, "[{section}]");
            for (k, v) in keys {
                let _ = writeln!(out, "{k} = {v}");
            }
        }
        out
    }

    /// Applies every key of a config text over `self`.
    pub fn apply_text(&mut self, text: &str) -> CliResult<()> {
        let ini = Ini::load_from_str(text).map_err(|e| bad("config", e.to_string()))?;
        for (section, props) in ini.iter() {
            let Some(section) = section else {
                if let Some((k, _)) = props.iter().next() {
                    return Err(bad(k, "keys must sit inside a [section]"));
                }
                continue;
            };
            for (k, v) in props.iter() {
                self.set(&format!("{section}.{k}"), v)?;
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| bad("config", format!("{}: {e}", path.display())))?;
        let mut cfg = Self::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    /// `key=value` override from the command line.
    pub fn apply_override(&mut self, kv: &str) -> CliResult<()> {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| bad("set", format!("expected section.key=value, got {kv:?}")))?;
        self.set(k.trim(), v)
    }

    /// Checks everything that does not depend on the subcommand.
    pub fn validate(&self) -> CliResult<()> {
        let e = &self.experiment;
        if e.horizon == 0 {
            return Err(bad("experiment.horizon", "must be at least 1"));
        }
        if !(e.z > 0.0 && e.z.is_finite()) {
            return Err(bad("experiment.z", "must be positive"));
        }
        if !(0.0..=1.0).contains(&e.max_indeterminate_rate) {
            return Err(bad("experiment.max_indeterminate_rate", "must lie in [0, 1]"));
        }
        if let (Some(a), Some(b)) = (self.precision.initial, self.precision.max) {
            if b < a {
                return Err(bad("precision.max", format!("{b} is below precision.initial = {a}")));
            }
        }
        if self.measure.ns.contains(&0) {
            return Err(bad("measure.ns", "orbit steps start at 1"));
        }
        let v = &self.verdict;
        if !(0.0..=1.0).contains(&v.full) || !(0.0..=1.0).contains(&v.null) || v.null >= v.full {
            return Err(bad("verdict.null", "thresholds need 0 <= null < full <= 1"));
        }
        Ok(())
    }

    pub fn system(&self) -> CliResult<SystemSpec> {
        SystemSpec::parse(&self.experiment.system).map_err(|e| CliError::at("experiment.system", e))
    }

    pub fn twist(&self) -> CliResult<TwistSpec> {
        TwistSpec::parse(&self.experiment.twist).map_err(|e| CliError::at("experiment.twist", e))
    }

    pub fn psi(&self) -> CliResult<PsiSpec> {
        PsiSpec::parse(&self.experiment.psi).map_err(|e| CliError::at("experiment.psi", e))
    }

    pub fn estimator_options(&self) -> EstimatorOptions {
        EstimatorOptions {
            samples: self.experiment.samples,
            seed: self.experiment.seed,
            z: self.experiment.z,
            precision: PrecisionPolicy {
                initial: self.precision.initial,
                max: self.precision.max,
            },
            max_indeterminate_rate: self.experiment.max_indeterminate_rate,
        }
    }

    pub fn thresholds(&self) -> Thresholds {
        Thresholds {
            full: self.verdict.full,
            null: self.verdict.null,
        }
    }

    pub fn cylinder_options(&self) -> CylinderOptions {
        CylinderOptions {
            cap: self.cylinders.cap,
            gauss_digit_cap: self.cylinders.gauss_digit_cap,
            prec: self.cylinders.prec,
        }
    }

    pub fn mixing_options(&self) -> MixingOptions {
        MixingOptions {
            samples: self.conditions.mixing_samples,
            seed: self.experiment.seed,
            ..Default::default()
        }
    }

    pub fn condition_options(&self) -> ConditionOptions {
        let c = &self.conditions;
        ConditionOptions {
            ahlfors_centers: c.ahlfors_centers,
            ahlfors_radii: c.ahlfors_radii,
            mixing_orders: c.mixing_orders,
            mixing: self.mixing_options(),
            max_order: c.max_order,
            distortion_order: c.distortion_order,
            distortion_samples: c.distortion_samples,
            seed: self.experiment.seed,
            cylinders: self.cylinder_options(),
        }
    }
}
