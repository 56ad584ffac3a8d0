//! Experiment configuration and its flat `key = value` file format.
//!
//! ```text
//! # comments start with '#'
//! source = simulate
//! sim.drugs = 32
//! sim.arity = 3
//! sim.noise_variance = 0.5
//! folds = 5
//! strategy = standard, compounds-out
//! mode = pseudo, y-randomized
//! metric = accuracy
//! seed = 7
//! ```
//!
//! List-valued keys take comma-separated values. Later assignments replace
//! earlier ones, which is how command-line overrides are applied.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::descriptors::{Combiner, PseudoDistribution};
use crate::error::Error;
use crate::learner::{LearnerKind, LearnerParams};
use crate::metrics::MetricName;
use crate::seed;
use crate::simulate::{Informative, Noise, SimConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Random k-fold over mixtures.
    Standard,
    /// Constituent-level folds, strata by number of exterior constituents.
    CompoundsOut,
    /// Constituent-level folds on ordered data, strata by exterior slot mask.
    Fractured,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Standard => "standard",
            Strategy::CompoundsOut => "compounds-out",
            Strategy::Fractured => "fractured",
        })
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "standard" => Ok(Strategy::Standard),
            "compounds-out" => Ok(Strategy::CompoundsOut),
            "fractured" => Ok(Strategy::Fractured),
            _ => Err(format!("unknown strategy `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DescriptorMode {
    Real,
    Pseudo,
    YRandomized,
}

impl fmt::Display for DescriptorMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DescriptorMode::Real => "real",
            DescriptorMode::Pseudo => "pseudo",
            DescriptorMode::YRandomized => "y-randomized",
        })
    }
}

impl FromStr for DescriptorMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "real" => Ok(DescriptorMode::Real),
            "pseudo" => Ok(DescriptorMode::Pseudo),
            "y-randomized" | "yrand" => Ok(DescriptorMode::YRandomized),
            _ => Err(format!("unknown descriptor mode `{s}`")),
        }
    }
}

/// Simulator settings; `seed = None` derives the simulation seed from the
/// experiment's master seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSource {
    pub n_drugs: usize,
    pub arity: usize,
    pub noise: Noise,
    pub fingerprint_length: usize,
    pub seed: Option<u64>,
    pub informative: Option<Informative>,
}

impl Default for SimSource {
    fn default() -> Self {
        let d = SimConfig::default();
        Self {
            n_drugs: d.n_drugs,
            arity: d.arity,
            noise: d.noise,
            fingerprint_length: d.fingerprint_length,
            seed: None,
            informative: None,
        }
    }
}

impl SimSource {
    pub fn to_sim_config(&self, master_seed: u64) -> SimConfig {
        SimConfig {
            n_drugs: self.n_drugs,
            arity: self.arity,
            noise: self.noise,
            fingerprint_length: self.fingerprint_length,
            seed: self
                .seed
                .unwrap_or_else(|| seed::derive(master_seed, &[seed::stream::SIMULATION])),
            informative: self.informative,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    Simulated(SimSource),
    Files {
        mixtures: PathBuf,
        descriptors: Option<PathBuf>,
        ordered: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub source: DataSource,
    pub folds: usize,
    pub strategies: Vec<Strategy>,
    pub modes: Vec<DescriptorMode>,
    pub metrics: Vec<MetricName>,
    pub combiner: Combiner,
    pub learner: LearnerKind,
    /// The `seed` field is ignored; each fit gets a seed derived from `seed`.
    pub learner_params: LearnerParams,
    pub seed: u64,
    /// Defaults to the real descriptor length, else 128.
    pub pseudo_length: Option<usize>,
    pub pseudo_distribution: PseudoDistribution,
    /// Continuous labels above this value are active.
    pub label_threshold: f64,
    /// Scores at or above this value predict the active class.
    pub class_threshold: f64,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            source: DataSource::Simulated(SimSource::default()),
            folds: 5,
            strategies: vec![Strategy::Standard, Strategy::CompoundsOut],
            modes: vec![DescriptorMode::Pseudo, DescriptorMode::YRandomized],
            metrics: vec![MetricName::Accuracy],
            combiner: Combiner::SumRange,
            learner: LearnerKind::Forest,
            learner_params: LearnerParams::default(),
            seed: 0,
            pseudo_length: None,
            pseudo_distribution: PseudoDistribution::Binary,
            label_threshold: 0.0,
            class_threshold: 0.5,
            output: None,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, Error>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e| Error::Config(format!("`{key}`: cannot parse `{value}`: {e}")))
}

fn parse_list<T: FromStr<Err = String>>(key: &str, value: &str) -> Result<Vec<T>, Error> {
    let mut out: Vec<T> = Vec::new();
    for item in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        out.push(item.parse().map_err(|e| Error::Config(format!("`{key}`: {e}")))?);
    }
    Ok(out)
}

fn dedup<T: PartialEq>(items: Vec<T>) -> Vec<T> {
    let mut out = Vec::with_capacity(items.len());
    for i in items {
        if !out.contains(&i) {
            out.push(i);
        }
    }
    out
}

fn parse_bool(key: &str, value: &str) -> Result<bool, Error> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("`{key}`: expected a boolean, got `{value}`"))),
    }
}

impl ExperimentConfig {
    /// Parses a config file body on top of the defaults.
    pub fn from_kv_str(text: &str) -> Result<Self, Error> {
        let mut cfg = Self::default();
        cfg.apply_kv_str(text)?;
        Ok(cfg)
    }

    pub fn apply_kv_str(&mut self, text: &str) -> Result<(), Error> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", n + 1)))?;
            self.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    fn sim_mut(&mut self) -> &mut SimSource {
        if !matches!(self.source, DataSource::Simulated(_)) {
            self.source = DataSource::Simulated(SimSource::default());
        }
        match &mut self.source {
            DataSource::Simulated(s) => s,
            DataSource::Files { .. } => unreachable!(),
        }
    }

    fn files_mut(&mut self) -> (&mut PathBuf, &mut Option<PathBuf>, &mut bool) {
        if !matches!(self.source, DataSource::Files { .. }) {
            self.source = DataSource::Files {
                mixtures: PathBuf::new(),
                descriptors: None,
                ordered: false,
            };
        }
        match &mut self.source {
            DataSource::Files {
                mixtures,
                descriptors,
                ordered,
            } => (mixtures, descriptors, ordered),
            DataSource::Simulated(_) => unreachable!(),
        }
    }

    /// Sets one field by its config-file key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), Error> {
        match key {
            "source" => match value {
                "simulate" | "simulated" => {
                    self.sim_mut();
                }
                "files" => {
                    self.files_mut();
                }
                _ => return Err(Error::Config(format!("unknown source `{value}`"))),
            },
            "mixtures" => *self.files_mut().0 = PathBuf::from(value),
            "descriptors" => {
                *self.files_mut().1 = (!value.is_empty()).then(|| PathBuf::from(value))
            }
            "ordered" => *self.files_mut().2 = parse_bool(key, value)?,
            "sim.drugs" => self.sim_mut().n_drugs = parse(key, value)?,
            "sim.arity" => self.sim_mut().arity = parse(key, value)?,
            "sim.noise_variance" => self.sim_mut().noise = Noise::Variance(parse(key, value)?),
            "sim.noise_sd" => self.sim_mut().noise = Noise::StdDev(parse(key, value)?),
            "sim.fingerprint_length" => self.sim_mut().fingerprint_length = parse(key, value)?,
            "sim.seed" => {
                self.sim_mut().seed = match value {
                    "" | "auto" => None,
                    v => Some(parse(key, v)?),
                }
            }
            "sim.signal_features" => {
                let n: usize = parse(key, value)?;
                let sim = self.sim_mut();
                sim.informative = match (n, sim.informative) {
                    (0, _) => None,
                    (n, Some(inf)) => Some(Informative {
                        signal_features: n,
                        ..inf
                    }),
                    (n, None) => Some(Informative {
                        signal_features: n,
                        noise_sd: 0.5,
                    }),
                };
            }
            "sim.signal_noise_sd" => {
                let sd: f64 = parse(key, value)?;
                let sim = self.sim_mut();
                sim.informative = Some(Informative {
                    signal_features: sim.informative.map_or(1, |i| i.signal_features),
                    noise_sd: sd,
                });
            }
            "folds" | "k" => self.folds = parse(key, value)?,
            "strategy" | "strategies" => self.strategies = dedup(parse_list(key, value)?),
            "mode" | "modes" => self.modes = dedup(parse_list(key, value)?),
            "metric" | "metrics" => self.metrics = dedup(parse_list(key, value)?),
            "combiner" => self.combiner = parse(key, value)?,
            "learner" => self.learner = parse(key, value)?,
            "trees" | "n_trees" => self.learner_params.n_trees = parse(key, value)?,
            "max_depth" => {
                self.learner_params.max_depth = match value {
                    "none" | "unlimited" => None,
                    v => Some(parse(key, v)?),
                }
            }
            "min_leaf" => self.learner_params.min_leaf = parse(key, value)?,
            "features_per_split" => self.learner_params.features_per_split = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "pseudo_length" => {
                self.pseudo_length = match value {
                    "" | "auto" => None,
                    v => Some(parse(key, v)?),
                }
            }
            "pseudo_distribution" => self.pseudo_distribution = parse(key, value)?,
            "label_threshold" => self.label_threshold = parse(key, value)?,
            "class_threshold" => self.class_threshold = parse(key, value)?,
            "output" => self.output = (!value.is_empty()).then(|| PathBuf::from(value)),
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Renders the config in the file format accepted by `from_kv_str`.
    pub fn to_kv_string(&self) -> String {
        let mut lines: Vec<String> = Vec::new();
        let mut push = |k: &str, v: String| lines.push(format!("{k} = {v}"));
        match &self.source {
            DataSource::Simulated(sim) => {
                push("source", "simulate".into());
                push("sim.drugs", sim.n_drugs.to_string());
                push("sim.arity", sim.arity.to_string());
                match sim.noise {
                    Noise::Variance(v) => push("sim.noise_variance", v.to_string()),
                    Noise::StdDev(s) => push("sim.noise_sd", s.to_string()),
                }
                push("sim.fingerprint_length", sim.fingerprint_length.to_string());
                push("sim.seed", sim.seed.map_or("auto".into(), |s| s.to_string()));
                if let Some(inf) = sim.informative {
                    push("sim.signal_features", inf.signal_features.to_string());
                    push("sim.signal_noise_sd", inf.noise_sd.to_string());
                }
            }
            DataSource::Files {
                mixtures,
                descriptors,
                ordered,
            } => {
                push("source", "files".into());
                push("mixtures", mixtures.display().to_string());
                if let Some(d) = descriptors {
                    push("descriptors", d.display().to_string());
                }
                push("ordered", ordered.to_string());
            }
        }
        let join = |v: Vec<String>| v.join(", ");
        push("folds", self.folds.to_string());
        push("strategy", join(self.strategies.iter().map(ToString::to_string).collect()));
        push("mode", join(self.modes.iter().map(ToString::to_string).collect()));
        push("metric", join(self.metrics.iter().map(ToString::to_string).collect()));
        push("combiner", self.combiner.to_string());
        push("learner", self.learner.to_string());
        push("trees", self.learner_params.n_trees.to_string());
        push(
            "max_depth",
            self.learner_params
                .max_depth
                .map_or("none".into(), |d| d.to_string()),
        );
        push("min_leaf", self.learner_params.min_leaf.to_string());
        push(
            "features_per_split",
            self.learner_params.features_per_split.to_string(),
        );
        push("seed", self.seed.to_string());
        push(
            "pseudo_length",
            self.pseudo_length.map_or("auto".into(), |l| l.to_string()),
        );
        push("pseudo_distribution", self.pseudo_distribution.to_string());
        push("label_threshold", self.label_threshold.to_string());
        push("class_threshold", self.class_threshold.to_string());
        if let Some(o) = &self.output {
            push("output", o.display().to_string());
        }
        lines.join("\n") + "\n"
    }

    /// Structural checks that do not need the data.
    pub fn validate(&self) -> Result<(), Error> {
        if self.strategies.is_empty() {
            return Err(Error::Config("at least one strategy is required".into()));
        }
        if self.modes.is_empty() {
            return Err(Error::Config("at least one descriptor mode is required".into()));
        }
        if self.metrics.is_empty() {
            return Err(Error::Config("at least one metric is required".into()));
        }
        if self.folds < 2 {
            return Err(Error::Config(format!("folds must be at least 2, got {}", self.folds)));
        }
        if self.pseudo_length == Some(0) {
            return Err(Error::Config("pseudo_length must be at least 1".into()));
        }
        self.learner_params
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        match &self.source {
            DataSource::Files {
                mixtures,
                descriptors,
                ..
            } => {
                if mixtures.as_os_str().is_empty() {
                    return Err(Error::Config("`mixtures` path is required".into()));
                }
                if self.modes.contains(&DescriptorMode::Real) && descriptors.is_none() {
                    return Err(Error::Config("real mode requires a descriptor file".into()));
                }
                if self.modes.contains(&DescriptorMode::YRandomized) && descriptors.is_none() {
                    return Err(Error::Config(
                        "y-randomized mode requires a descriptor file".into(),
                    ));
                }
            }
            DataSource::Simulated(sim) => {
                sim.to_sim_config(self.seed)
                    .validate()
                    .map_err(|e| Error::Config(e.to_string()))?;
                if self.modes.contains(&DescriptorMode::Real) && sim.informative.is_none() {
                    return Err(Error::Config(
                        "real mode on simulated data requires sim.signal_features > 0".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}
