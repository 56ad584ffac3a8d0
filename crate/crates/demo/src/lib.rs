//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Each exported function takes plain numbers and returns a JSON string, so
//! the page needs no bundler. The same functions are tested natively.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use mixval::folds::{build_fold, constituent_partitions, FoldSplit, StratumId};
use mixval::harness::config::{DataSource, DescriptorMode, ExperimentConfig, SimSource, Strategy};
use mixval::harness::run_experiment;
use mixval::metrics::MetricName;
use mixval::mixture::{build_dataset, choose, enumerate_complete, CollectionSpec, Dataset, Label};
use mixval::simulate::Noise;

fn complete_dataset(n_drugs: usize, arity: usize) -> Result<Dataset, String> {
    let drugs = CollectionSpec::numbered("drugs", "d", n_drugs);
    let rows = enumerate_complete(std::slice::from_ref(&drugs), arity, false).map_err(|e| e.to_string())?;
    build_dataset(
        vec![drugs],
        arity,
        false,
        rows.into_iter().map(|k| {
            let ids: Vec<String> = k.local_ids().map(str::to_owned).collect();
            (ids, Label::Binary(false))
        }),
    )
    .map_err(|e| e.to_string())
}

fn folds(n_drugs: usize, arity: usize, k: usize, seed: u64) -> Result<(Dataset, Vec<FoldSplit>), String> {
    let ds = complete_dataset(n_drugs, arity)?;
    let splits = constituent_partitions(&ds, k, seed)
        .map_err(|e| e.to_string())?
        .iter()
        .map(|p| build_fold(&ds, p))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    Ok((ds, splits))
}

#[derive(Debug, Serialize)]
pub struct FoldGrid {
    pub drugs: Vec<String>,
    pub interior: Vec<bool>,
    /// `cells[i][j]` for the pair (drug i, drug j): "self", "training",
    /// "1-out" or "2-out".
    pub cells: Vec<Vec<String>>,
}

/// Role of every binary mixture in fold `fold`, as a drug x drug grid.
pub fn fold_grid(n_drugs: usize, k: usize, fold: usize, seed: u64) -> Result<FoldGrid, String> {
    let (ds, splits) = folds(n_drugs, 2, k, seed)?;
    let split = splits.get(fold).ok_or_else(|| format!("fold {fold} out of range 0..{k}"))?;
    let drugs = ds.collections()[0].members().to_vec();
    let index = |id: &str| drugs.iter().position(|d| d == id).expect("member");
    let mut cells = vec![vec!["self".to_owned(); drugs.len()]; drugs.len()];
    let groups = std::iter::once(("training".to_owned(), &split.training))
        .chain(split.strata.iter().map(|(id, keys)| (id.to_string(), keys)));
    for (role, keys) in groups {
        for key in keys {
            let ids: Vec<&str> = key.local_ids().collect();
            let (i, j) = (index(ids[0]), index(ids[1]));
            cells[i][j] = role.clone();
            cells[j][i] = role.clone();
        }
    }
    let mut interior = vec![false; drugs.len()];
    for key in &split.training {
        for id in key.local_ids() {
            interior[index(id)] = true;
        }
    }
    // a lone interior drug has no training pair; recover it from 1-out pairs
    if split.training.is_empty() {
        let one_out = &split.strata[&StratumId::Out(1)];
        for (i, flag) in interior.iter_mut().enumerate() {
            let id = drugs[i].as_str();
            *flag = one_out.len() == drugs.len() - 1 && one_out.iter().all(|k| k.local_ids().any(|x| x == id));
        }
    }
    Ok(FoldGrid { drugs, interior, cells })
}

#[derive(Debug, Serialize, PartialEq)]
pub struct FoldSizes {
    pub fold: usize,
    pub interior: usize,
    pub training: usize,
    /// Sizes of strata 1..=N.
    pub strata: Vec<usize>,
    /// Closed-form sizes for the same fold: training first, then strata.
    pub expected: Vec<u128>,
}

/// Training and stratum sizes per fold of a complete dataset, next to their
/// closed-form counts.
pub fn stratum_sizes(n_drugs: usize, arity: usize, k: usize, seed: u64) -> Result<Vec<FoldSizes>, String> {
    let (ds, splits) = folds(n_drugs, arity, k, seed)?;
    let parts = constituent_partitions(&ds, k, seed).map_err(|e| e.to_string())?;
    Ok(splits
        .iter()
        .zip(&parts)
        .map(|(split, part)| {
            let inner = part.interior[0].len();
            let outer = n_drugs - inner;
            FoldSizes {
                fold: split.fold_index,
                interior: inner,
                training: split.training.len(),
                strata: (1..=arity).map(|m| split.strata[&StratumId::Out(m)].len()).collect(),
                expected: (0..=arity).map(|m| choose(outer, m) * choose(inner, arity - m)).collect(),
            }
        })
        .collect())
}

#[derive(Debug, Serialize)]
pub struct ToyRow {
    pub stratum: String,
    pub pseudo: Option<f64>,
    pub y_randomized: Option<f64>,
    pub display_pseudo: String,
    pub display_y_randomized: String,
}

#[derive(Debug, Serialize)]
pub struct ToyResult {
    pub active_fraction: f64,
    pub rows: Vec<ToyRow>,
}

/// Simulated experiment: mean accuracy per stratum for pseudodescriptors
/// and y-randomized fingerprints.
pub fn toy_experiment(
    n_drugs: usize,
    arity: usize,
    noise_variance: f64,
    k: usize,
    trees: usize,
    seed: u64,
) -> Result<ToyResult, String> {
    let mut cfg = ExperimentConfig {
        source: DataSource::Simulated(SimSource {
            n_drugs,
            arity,
            noise: Noise::Variance(noise_variance),
            fingerprint_length: 64,
            seed: None,
            informative: None,
        }),
        folds: k,
        seed,
        metrics: vec![MetricName::Accuracy],
        ..Default::default()
    };
    cfg.learner_params.n_trees = trees;
    let report = run_experiment(&cfg).map_err(|e| e.to_string())?;
    let strata = std::iter::once((Strategy::Standard, StratumId::All))
        .chain((1..=arity).map(|m| (Strategy::CompoundsOut, StratumId::Out(m))));
    let rows = strata
        .map(|(strategy, stratum)| {
            let get = |mode| report.aggregate(strategy, stratum, mode, MetricName::Accuracy);
            let (p, y) = (get(DescriptorMode::Pseudo), get(DescriptorMode::YRandomized));
            let display = |a: Option<&mixval::harness::Aggregate>| a.map_or("-".to_owned(), |a| a.display.clone());
            ToyRow {
                stratum: if stratum == StratumId::All { "standard".to_owned() } else { stratum.to_string() },
                pseudo: p.and_then(|a| a.mean),
                y_randomized: y.and_then(|a| a.mean),
                display_pseudo: display(p),
                display_y_randomized: display(y),
            }
        })
        .collect();
    Ok(ToyResult {
        active_fraction: report.dataset.active_fraction,
        rows,
    })
}

fn to_js<T: Serialize>(result: Result<T, String>) -> Result<String, JsValue> {
    result
        .and_then(|v| serde_json::to_string(&v).map_err(|e| e.to_string()))
        .map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = foldGrid)]
pub fn fold_grid_js(n_drugs: usize, k: usize, fold: usize, seed: u32) -> Result<String, JsValue> {
    to_js(fold_grid(n_drugs, k, fold, seed.into()))
}

#[wasm_bindgen(js_name = stratumSizes)]
pub fn stratum_sizes_js(n_drugs: usize, arity: usize, k: usize, seed: u32) -> Result<String, JsValue> {
    to_js(stratum_sizes(n_drugs, arity, k, seed.into()))
}

#[wasm_bindgen(js_name = toyExperiment)]
pub fn toy_experiment_js(
    n_drugs: usize,
    arity: usize,
    noise_variance: f64,
    k: usize,
    trees: usize,
    seed: u32,
) -> Result<String, JsValue> {
    to_js(toy_experiment(n_drugs, arity, noise_variance, k, trees, seed.into()))
}
