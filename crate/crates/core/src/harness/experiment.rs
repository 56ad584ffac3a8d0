use crate::descriptors::{dataset_pseudodescriptors, featurize, y_randomize, DescriptorTable};
use crate::error::{Error, Result};
use crate::folds::{
    build_compounds_out_fold, build_fractured_fold, constituent_partitions, standard_split,
    FoldSplit, StratumId,
};
use crate::learner::{Classifier, LearnerParams, Model};
use crate::metrics::{accuracy, auc_roc, MetricName};
use crate::mixture::{Dataset, MixtureKey};
use crate::seed::{self, stream};
use crate::simulate::simulate;

use super::config::{DataSource, DescriptorMode, ExperimentConfig, Strategy};
use super::io::{load_descriptor_csv, load_mixture_csv};
use super::report::{aggregate_cells, DatasetSummary, FoldMetric, Report};

/// Dataset plus the descriptor tables an experiment can draw on.
#[derive(Debug, Clone)]
pub struct ExperimentData {
    pub dataset: Dataset,
    /// Descriptors used by the `real` mode.
    pub real: Option<DescriptorTable>,
    /// Descriptors used by the `y-randomized` mode: the real table when there
    /// is one, otherwise the simulator's fingerprints.
    pub base: Option<DescriptorTable>,
}

pub fn load_data(cfg: &ExperimentConfig) -> Result<ExperimentData> {
    match &cfg.source {
        DataSource::Simulated(sim) => {
            let out = simulate(&sim.to_sim_config(cfg.seed))?;
            let base = out.informative.clone().unwrap_or(out.fingerprints);
            Ok(ExperimentData {
                dataset: out.dataset,
                real: out.informative,
                base: Some(base),
            })
        }
        DataSource::Files {
            mixtures,
            descriptors,
            ordered,
        } => {
            let dataset = load_mixture_csv(mixtures, *ordered)?;
            let real = descriptors.as_deref().map(load_descriptor_csv).transpose()?;
            if let Some(table) = &real {
                table.check_covers(&dataset).map_err(|e| {
                    Error::Config(format!("descriptor file does not cover the dataset: {e}"))
                })?;
            }
            Ok(ExperimentData {
                dataset,
                base: real.clone(),
                real,
            })
        }
    }
}

/// Fold splits for one strategy. Constituent-level strategies share one
/// partition per fold, derived from the master seed.
pub fn build_splits(
    dataset: &Dataset,
    strategy: Strategy,
    folds: usize,
    master_seed: u64,
) -> Result<Vec<FoldSplit>> {
    match strategy {
        Strategy::Standard => Ok(standard_split(
            dataset,
            folds,
            seed::derive(master_seed, &[stream::STANDARD_SPLIT]),
        )?
        .into_iter()
        .map(FoldSplit::from)
        .collect()),
        Strategy::CompoundsOut | Strategy::Fractured => {
            if strategy == Strategy::Fractured && !dataset.is_ordered() {
                return Err(Error::Config(
                    "the fractured strategy needs an ordered dataset".into(),
                ));
            }
            let partitions = constituent_partitions(
                dataset,
                folds,
                seed::derive(master_seed, &[stream::CONSTITUENT_PARTITION]),
            )?;
            partitions
                .iter()
                .map(|p| {
                    if strategy == Strategy::Fractured {
                        build_fractured_fold(dataset, p)
                    } else {
                        build_compounds_out_fold(dataset, p)
                    }
                    .map_err(Error::from)
                })
                .collect()
        }
    }
}

fn strategy_tag(s: Strategy) -> u64 {
    match s {
        Strategy::Standard => 0,
        Strategy::CompoundsOut => 1,
        Strategy::Fractured => 2,
    }
}

fn mode_tag(m: DescriptorMode) -> u64 {
    match m {
        DescriptorMode::Real => 0,
        DescriptorMode::Pseudo => 1,
        DescriptorMode::YRandomized => 2,
    }
}

struct Task<'a> {
    strategy: Strategy,
    split: &'a FoldSplit,
    mode: DescriptorMode,
}

struct Context<'a> {
    cfg: &'a ExperimentConfig,
    data: &'a ExperimentData,
    pseudo_length: usize,
}

impl Context<'_> {
    fn labels<'k>(&self, keys: impl IntoIterator<Item = &'k MixtureKey>) -> Vec<bool> {
        keys.into_iter()
            .map(|k| {
                self.data
                    .dataset
                    .label(k)
                    .expect("split keys come from the dataset")
                    .is_active(self.cfg.label_threshold)
            })
            .collect()
    }

    fn table(&self, mode: DescriptorMode, fold: usize) -> Result<DescriptorTable> {
        let missing = |what: &str| Error::Config(format!("{mode} mode needs {what}"));
        match mode {
            DescriptorMode::Real => self.data.real.clone().ok_or_else(|| missing("real descriptors")),
            DescriptorMode::YRandomized => self
                .data
                .base
                .clone()
                .ok_or_else(|| missing("a descriptor table")),
            DescriptorMode::Pseudo => Ok(dataset_pseudodescriptors(
                &self.data.dataset,
                self.pseudo_length,
                seed::derive(self.cfg.seed, &[stream::PSEUDODESCRIPTORS, fold as u64]),
                self.cfg.pseudo_distribution,
            )?),
        }
    }

    fn run(&self, task: &Task<'_>) -> Result<Vec<FoldMetric>> {
        let cfg = self.cfg;
        let split = task.split;
        let fold = split.fold_index;
        let arity = self.data.dataset.arity();
        let tags = [strategy_tag(task.strategy), fold as u64, mode_tag(task.mode)];
        let cells = |stratum: StratumId, n: usize, outcome: &dyn Fn(MetricName) -> (Option<f64>, Option<String>)| {
            cfg.metrics
                .iter()
                .map(|&metric| {
                    let (value, skip) = outcome(metric);
                    FoldMetric {
                        strategy: task.strategy,
                        stratum,
                        mode: task.mode,
                        fold,
                        metric,
                        value,
                        n_validation: n,
                        skip,
                    }
                })
                .collect::<Vec<_>>()
        };

        if split.training.is_empty() {
            return Ok(split
                .strata
                .iter()
                .flat_map(|(&id, keys)| {
                    cells(id, keys.len(), &|_| (None, Some("empty training set".into())))
                })
                .collect());
        }

        let table = self.table(task.mode, fold)?;
        let x_train = featurize(&split.training, &table, cfg.combiner, arity)?;
        let mut y_train = self.labels(&split.training);
        if task.mode == DescriptorMode::YRandomized {
            let s = seed::derive(cfg.seed, &[stream::Y_RANDOMIZATION, tags[0], tags[1]]);
            y_train = y_randomize(&y_train, s);
        }
        let params = LearnerParams {
            seed: seed::derive(cfg.seed, &[stream::LEARNER, tags[0], tags[1], tags[2]]),
            ..cfg.learner_params.clone()
        };
        let model = Model::fit(cfg.learner, &x_train, &y_train, &params)?;

        let mut out = Vec::new();
        for (&id, keys) in &split.strata {
            if keys.is_empty() {
                out.extend(cells(id, 0, &|_| (None, Some("empty stratum".into()))));
                continue;
            }
            let x = featurize(keys, &table, cfg.combiner, arity)?;
            let y = self.labels(keys);
            let scores = model.predict_score(&x)?;
            let predicted: Vec<bool> = scores.iter().map(|&s| s >= cfg.class_threshold).collect();
            out.extend(cells(id, keys.len(), &|metric| match metric {
                MetricName::Accuracy => (Some(accuracy(&predicted, &y).expect("non-empty")), None),
                MetricName::AucRoc => match auc_roc(&scores, &y) {
                    Ok(v) => (Some(v), None),
                    Err(e) => (None, Some(e.to_string())),
                },
            }));
        }
        Ok(out)
    }
}

/// Runs every strategy, fold and descriptor mode of `cfg` on its data source.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let data = load_data(cfg)?;
    run_on_data(cfg, &data)
}

/// Runs an experiment on already-loaded data.
///
/// For each strategy and fold the model is trained once per descriptor mode
/// on the same training keys and evaluated on every stratum separately.
pub fn run_on_data(cfg: &ExperimentConfig, data: &ExperimentData) -> Result<Report> {
    if cfg.modes.contains(&DescriptorMode::Real) && data.real.is_none() {
        return Err(Error::Config("real mode requires real descriptors".into()));
    }
    if cfg.modes.contains(&DescriptorMode::YRandomized) && data.base.is_none() {
        return Err(Error::Config("y-randomized mode requires a descriptor table".into()));
    }
    let pseudo_length = cfg
        .pseudo_length
        .or_else(|| data.real.as_ref().map(DescriptorTable::length))
        .unwrap_or(128);
    let ctx = Context {
        cfg,
        data,
        pseudo_length,
    };

    let splits = cfg
        .strategies
        .iter()
        .map(|&s| build_splits(&data.dataset, s, cfg.folds, cfg.seed).map(|v| (s, v)))
        .collect::<Result<Vec<_>>>()?;
    let tasks: Vec<Task<'_>> = splits
        .iter()
        .flat_map(|(strategy, folds)| {
            folds.iter().flat_map(move |split| {
                cfg.modes.iter().map(move |&mode| Task {
                    strategy: *strategy,
                    split,
                    mode,
                })
            })
        })
        .collect();

    #[cfg(feature = "parallel")]
    let results: Vec<Result<Vec<FoldMetric>>> = {
        use rayon::prelude::*;
        tasks.par_iter().map(|t| ctx.run(t)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<Vec<FoldMetric>>> = tasks.iter().map(|t| ctx.run(t)).collect();

    let mut cells = Vec::new();
    for r in results {
        cells.extend(r?);
    }
    let aggregates = aggregate_cells(&cells);
    let ds = &data.dataset;
    let active = ds
        .records()
        .values()
        .filter(|l| l.is_active(cfg.label_threshold))
        .count();
    Ok(Report {
        config: cfg.clone(),
        dataset: DatasetSummary {
            mixtures: ds.len(),
            arity: ds.arity(),
            ordered: ds.is_ordered(),
            complete: ds.is_complete(),
            collection_sizes: ds.collections().iter().map(|c| c.len()).collect(),
            active_fraction: if ds.is_empty() { 0.0 } else { active as f64 / ds.len() as f64 },
        },
        cells,
        aggregates,
    })
}
