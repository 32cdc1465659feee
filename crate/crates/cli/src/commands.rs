use serde::Serialize;
use serde_json::{json, Value};
use twistlab_core::conditions::{condition_report, mixing_table};
use twistlab_core::cylinders::cylinders_of_order;
use twistlab_core::estimators::{
    badic_oracle, estimate_mu_sweep, estimate_pairwise_grid, hit_statistics, verdict, MixingRates,
};
use twistlab_core::{Experiment, SystemSpec};

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::Subcommand)]
pub enum Command {
    /// Sweep of `μ(A_n)` estimates over `measure.ns`.
    Measure,
    /// Joint estimates `μ(A_m ∩ A_n)` against the quasi-independence bound.
    Pairwise,
    /// Certified hit times of every sample up to the horizon.
    Hits,
    /// Zero-one classification from the tail window `(N/2, N]`.
    Verdict,
    /// Cylinders of order `cylinders.order`.
    Cylinders,
    /// Checks of the structural hypotheses.
    Conditions,
    /// Exact `Leb(A_n)` for integer β-maps, per branch.
    Oracle,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Measure => "measures",
            Command::Pairwise => "pairwise",
            Command::Hits => "hits",
            Command::Verdict => "verdict",
            Command::Cylinders => "cylinders",
            Command::Conditions => "conditions",
            Command::Oracle => "oracle",
        }
    }
}

/// One output file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Artifact {
    pub file: String,
    pub contents: String,
}

/// Outputs of one run; the first artifact is the primary report and the
/// last is the resolved configuration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Report {
    pub artifacts: Vec<Artifact>,
}

impl Report {
    pub fn primary(&self) -> &Artifact {
        &self.artifacts[0]
    }

    pub fn get(&self, file: &str) -> Option<&Artifact> {
        self.artifacts.iter().find(|a| a.file == file)
    }
}

struct Csv(csv::Writer<Vec<u8>>);

impl Csv {
    fn new(header: &[&str]) -> Self {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(header).expect("in-memory write");
        Csv(w)
    }

    fn row<I: IntoIterator<Item = String>>(&mut self, fields: I) {
        self.0.write_record(fields).expect("in-memory write");
    }

    fn finish(self) -> String {
        String::from_utf8(self.0.into_inner().expect("in-memory flush")).expect("fields are UTF-8")
    }
}

fn json_with_config<T: Serialize>(report: &T, cfg: &ExperimentConfig) -> String {
    let mut v = serde_json::to_value(report).expect("reports serialize");
    if let Value::Object(map) = &mut v {
        map.insert("config".into(), serde_json::to_value(cfg).expect("config serializes"));
    }
    let mut s = serde_json::to_string_pretty(&v).expect("values serialize");
    s.push('\n');
    s
}

fn csv_artifact(cmd: Command, contents: String) -> Artifact {
    Artifact {
        file: format!("{}.csv", cmd.name()),
        contents,
    }
}

fn json_artifact(name: &str, contents: String) -> Artifact {
    Artifact {
        file: format!("{name}.json"),
        contents,
    }
}

/// Runs `cmd` on a resolved configuration.
pub fn run(cmd: Command, cfg: &ExperimentConfig) -> CliResult<Report> {
    cfg.validate()?;
    let mut artifacts = match cmd {
        Command::Measure => measure(cfg)?,
        Command::Pairwise => pairwise(cfg)?,
        Command::Hits => hits(cfg)?,
        Command::Verdict => vec![verdict_report(cfg)?],
        Command::Cylinders => vec![cylinders(cfg)?],
        Command::Conditions => {
            let sys = cfg.system()?;
            let rep = condition_report(&sys, &cfg.condition_options())?;
            vec![json_artifact(cmd.name(), json_with_config(&rep, cfg))]
        }
        Command::Oracle => vec![oracle(cfg)?],
    };
    artifacts.push(Artifact {
        file: format!("{}.ini", cmd.name()),
        contents: cfg.render(),
    });
    Ok(Report { artifacts })
}

fn measure(cfg: &ExperimentConfig) -> CliResult<Vec<Artifact>> {
    let (sys, f, psi) = (cfg.system()?, cfg.twist()?, cfg.psi()?);
    let mut ns = cfg.measure.ns.clone();
    if ns.is_empty() {
        return Err(CliError::Config {
            key: "measure.ns".into(),
            msg: "at least one orbit step is required".into(),
        });
    }
    ns.sort_unstable();
    ns.dedup();
    let opts = cfg.estimator_options();
    let est = estimate_mu_sweep(Experiment::new(&sys, &f, &psi), &ns, &opts)?;
    let mut w = Csv::new(&["n", "psi_n", "mean", "ci_low", "ci_high", "indet", "samples", "seed"]);
    for (n, e) in ns.iter().zip(&est) {
        w.row([
            n.to_string(),
            psi.eval(*n as u64).to_string(),
            e.mean.to_string(),
            e.ci_low.to_string(),
            e.ci_high.to_string(),
            e.indeterminate_count.to_string(),
            e.n_samples.to_string(),
            e.seed.to_string(),
        ]);
    }
    Ok(vec![csv_artifact(Command::Measure, w.finish())])
}

/// Closed-form rates when the system has them, else a tabulated estimate
/// covering `1..=hi`.
pub fn mixing_rates(sys: &SystemSpec, cfg: &ExperimentConfig, hi: usize) -> CliResult<MixingRates> {
    if let Some(r) = MixingRates::closed_form(sys) {
        return Ok(r);
    }
    let ns: Vec<usize> = (1..=hi).collect();
    Ok(mixing_table(sys, &ns, &cfg.mixing_options())?.rates(sys)?)
}

fn pairwise(cfg: &ExperimentConfig) -> CliResult<Vec<Artifact>> {
    let (sys, f, psi) = (cfg.system()?, cfg.twist()?, cfg.psi()?);
    let (lo, hi) = (cfg.pairwise.lo, cfg.pairwise.hi);
    if !(hi > lo && lo >= 1) {
        return Err(CliError::Config {
            key: "pairwise.hi".into(),
            msg: format!("need pairwise.hi > pairwise.lo >= 1, got lo = {lo}, hi = {hi}"),
        });
    }
    let rates = mixing_rates(&sys, cfg, hi)?;
    let reps = estimate_pairwise_grid(Experiment::new(&sys, &f, &psi), lo, hi, &rates, &cfg.estimator_options())?;
    let mut w = Csv::new(&["m", "n", "joint", "marg_m", "marg_n", "bound", "ratio"]);
    for r in &reps {
        w.row([
            r.m.to_string(),
            r.n.to_string(),
            r.est_joint.mean.to_string(),
            r.marg_m.mean.to_string(),
            r.marg_n.mean.to_string(),
            r.bound_value.to_string(),
            r.ratio.to_string(),
        ]);
    }
    Ok(vec![csv_artifact(Command::Pairwise, w.finish())])
}

fn hits(cfg: &ExperimentConfig) -> CliResult<Vec<Artifact>> {
    let (sys, f, psi) = (cfg.system()?, cfg.twist()?, cfg.psi()?);
    let stats = hit_statistics(
        Experiment::new(&sys, &f, &psi),
        cfg.experiment.horizon,
        &cfg.estimator_options(),
    )?;
    let mut w = Csv::new(&["point_index", "n"]);
    for r in &stats.records {
        for n in &r.hit_times {
            w.row([r.point_index.to_string(), n.to_string()]);
        }
    }
    Ok(vec![
        csv_artifact(Command::Hits, w.finish()),
        json_artifact("hits_summary", json_with_config(&stats.summary, cfg)),
    ])
}

fn verdict_report(cfg: &ExperimentConfig) -> CliResult<Artifact> {
    let (sys, f, psi) = (cfg.system()?, cfg.twist()?, cfg.psi()?);
    let rep = verdict(
        Experiment::new(&sys, &f, &psi),
        cfg.experiment.horizon,
        cfg.thresholds(),
        &cfg.estimator_options(),
    )?;
    Ok(json_artifact(Command::Verdict.name(), json_with_config(&rep, cfg)))
}

fn cylinders(cfg: &ExperimentConfig) -> CliResult<Artifact> {
    let sys = cfg.system()?;
    if cfg.cylinders.order == 0 {
        return Err(CliError::Config {
            key: "cylinders.order".into(),
            msg: "orders start at 1".into(),
        });
    }
    let set = cylinders_of_order(&sys, cfg.cylinders.order, &cfg.cylinder_options())?;
    let mut w = Csv::new(&["word", "left", "right", "length", "K_J", "is_full"]);
    for c in &set.cylinders {
        let g = &c.geom;
        w.row([
            c.word.to_string(),
            g.left_f64().to_string(),
            g.right_f64().to_string(),
            g.length().to_string(),
            g.k_j.to_string(),
            g.is_full.map_or_else(|| "na".to_string(), |b| b.to_string()),
        ]);
    }
    Ok(csv_artifact(Command::Cylinders, w.finish()))
}

fn oracle(cfg: &ExperimentConfig) -> CliResult<Artifact> {
    let (sys, f, psi) = (cfg.system()?, cfg.twist()?, cfg.psi()?);
    let res = badic_oracle(&sys, &f, &psi, cfg.oracle.n)?;
    let branches: Vec<Value> = res
        .branches
        .iter()
        .map(|b| json!({"branch": b.branch, "mass": b.mass.to_f64(), "mass_exact": b.mass.to_string()}))
        .collect();
    let rep = json!({
        "n": res.n,
        "psi_n": res.psi_n.to_f64(),
        "total": res.total.to_f64(),
        "total_exact": res.total.to_string(),
        "branches": branches,
    });
    Ok(json_artifact(Command::Oracle.name(), json_with_config(&rep, cfg)))
}
