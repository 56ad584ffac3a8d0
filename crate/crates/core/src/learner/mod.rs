//! Binary classifiers used by the experiment harness.

mod forest;
mod tree;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::LearnerError;

pub use forest::RandomForest;
pub use tree::{best_split, DecisionTree, Split};

/// Dense row-major feature matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    data: Vec<f64>,
    dim: usize,
}

impl Matrix {
    pub fn from_vec(data: Vec<f64>, dim: usize) -> Result<Self, LearnerError> {
        if dim == 0 || !data.len().is_multiple_of(dim) {
            return Err(LearnerError::DimensionMismatch {
                expected: dim,
                found: data.len(),
            });
        }
        Ok(Self { data, dim })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LearnerError> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(LearnerError::DimensionMismatch {
                expected: dim,
                found: bad.len(),
            });
        }
        Self::from_vec(rows.concat(), dim)
    }

    pub fn rows(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.dim + col]
    }

    pub fn iter_rows(&self) -> impl DoubleEndedIterator<Item = &[f64]> + ExactSizeIterator {
        self.data.chunks_exact(self.dim)
    }
}

/// Number of candidate features examined at each split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSubset {
    #[default]
    Sqrt,
    All,
    Count(usize),
}

impl FeatureSubset {
    pub fn resolve(&self, dim: usize) -> usize {
        match *self {
            FeatureSubset::Sqrt => ((dim as f64).sqrt() as usize).max(1),
            FeatureSubset::All => dim,
            FeatureSubset::Count(n) => n.clamp(1, dim.max(1)),
        }
    }
}

impl fmt::Display for FeatureSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureSubset::Sqrt => f.write_str("sqrt"),
            FeatureSubset::All => f.write_str("all"),
            FeatureSubset::Count(n) => write!(f, "{n}"),
        }
    }
}

impl FromStr for FeatureSubset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "sqrt" => Ok(FeatureSubset::Sqrt),
            "all" => Ok(FeatureSubset::All),
            n => n
                .parse::<usize>()
                .ok()
                .filter(|&n| n >= 1)
                .map(FeatureSubset::Count)
                .ok_or_else(|| format!("features_per_split must be `sqrt`, `all` or a positive count, got `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LearnerParams {
    pub n_trees: usize,
    /// `None` grows trees until leaves are pure or too small to split.
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    pub features_per_split: FeatureSubset,
    pub seed: u64,
}

impl Default for LearnerParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: None,
            min_leaf: 1,
            features_per_split: FeatureSubset::Sqrt,
            seed: 0,
        }
    }
}

impl LearnerParams {
    pub fn validate(&self) -> Result<(), LearnerError> {
        if self.n_trees == 0 {
            return Err(LearnerError::InvalidParams("n_trees must be at least 1".into()));
        }
        if self.min_leaf == 0 {
            return Err(LearnerError::InvalidParams("min_leaf must be at least 1".into()));
        }
        if self.max_depth == Some(0) {
            return Err(LearnerError::InvalidParams("max_depth must be at least 1".into()));
        }
        Ok(())
    }
}

/// Anything that scores rows with a positive-class probability.
pub trait Classifier {
    /// Scores in `[0, 1]`, one per row.
    fn predict_score(&self, features: &Matrix) -> Result<Vec<f64>, LearnerError>;

    /// Class 1 when the score is at least `threshold`.
    fn predict_class(&self, features: &Matrix, threshold: f64) -> Result<Vec<bool>, LearnerError> {
        Ok(self
            .predict_score(features)?
            .into_iter()
            .map(|s| s >= threshold)
            .collect())
    }
}

/// Predicts the training-majority class everywhere; ties go to class 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MajorityClass {
    pub positive: bool,
}

pub fn majority_baseline(labels: &[bool]) -> MajorityClass {
    let ones = labels.iter().filter(|&&l| l).count();
    MajorityClass {
        positive: 2 * ones > labels.len(),
    }
}

impl Classifier for MajorityClass {
    fn predict_score(&self, features: &Matrix) -> Result<Vec<f64>, LearnerError> {
        let s = if self.positive { 1.0 } else { 0.0 };
        Ok(vec![s; features.rows()])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LearnerKind {
    #[default]
    Forest,
    Majority,
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LearnerKind::Forest => "forest",
            LearnerKind::Majority => "majority",
        })
    }
}

impl FromStr for LearnerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "forest" | "random-forest" => Ok(LearnerKind::Forest),
            "majority" => Ok(LearnerKind::Majority),
            _ => Err(format!("unknown learner `{s}`")),
        }
    }
}

/// A fitted model of either kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Model {
    Forest(RandomForest),
    Majority(MajorityClass),
}

impl Model {
    pub fn fit(
        kind: LearnerKind,
        features: &Matrix,
        labels: &[bool],
        params: &LearnerParams,
    ) -> Result<Self, LearnerError> {
        match kind {
            LearnerKind::Forest => RandomForest::fit(features, labels, params).map(Model::Forest),
            LearnerKind::Majority => {
                if labels.is_empty() {
                    return Err(LearnerError::EmptyTrainingSet);
                }
                Ok(Model::Majority(majority_baseline(labels)))
            }
        }
    }
}

impl Classifier for Model {
    fn predict_score(&self, features: &Matrix) -> Result<Vec<f64>, LearnerError> {
        match self {
            Model::Forest(m) => m.predict_score(features),
            Model::Majority(m) => m.predict_score(features),
        }
    }
}

const MODEL_FORMAT: &str = "mixval-model";
const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    model: Model,
}

/// Serializes a model as versioned JSON.
pub fn model_to_string(model: &Model) -> String {
    serde_json::to_string(&ModelFile {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        model: model.clone(),
    })
    .expect("model serializes")
}

pub fn model_from_str(s: &str) -> Result<Model, LearnerError> {
    let file: ModelFile =
        serde_json::from_str(s).map_err(|e| LearnerError::ModelFormat(e.to_string()))?;
    if file.format != MODEL_FORMAT || file.version != MODEL_VERSION {
        return Err(LearnerError::ModelFormat(format!(
            "expected {MODEL_FORMAT} v{MODEL_VERSION}, found {} v{}",
            file.format, file.version
        )));
    }
    Ok(file.model)
}

pub fn save_model(model: &Model, path: &Path) -> crate::Result<()> {
    std::fs::write(path, model_to_string(model)).map_err(|e| crate::Error::io(path, e))
}

pub fn load_model(path: &Path) -> crate::Result<Model> {
    let s = std::fs::read_to_string(path).map_err(|e| crate::Error::io(path, e))?;
    Ok(model_from_str(&s)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_shape_checks() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!((m.rows(), m.dim()), (2, 2));
        assert_eq!(m.get(1, 0), 3.0);
        assert!(Matrix::from_rows(&[vec![1.0], vec![1.0, 2.0]]).is_err());
        assert!(Matrix::from_vec(vec![1.0; 5], 2).is_err());
    }

    #[test]
    fn majority_examples() {
        let x = Matrix::from_vec(vec![0.0; 6], 2).unwrap();
        assert!(majority_baseline(&[true, true, false]).predict_class(&x, 0.5).unwrap().iter().all(|&c| c));
        assert!(majority_baseline(&[true, false]).predict_class(&x, 0.5).unwrap().iter().all(|&c| !c));
        let preds = majority_baseline(&[true, false, false]).predict_class(&x, 0.5).unwrap();
        let truth = [true, false, true];
        let hits = preds.iter().zip(&truth).filter(|(p, t)| p == t).count();
        assert_eq!(hits, 1);
    }

    #[test]
    fn threshold_rule() {
        struct Fixed(Vec<f64>);
        impl Classifier for Fixed {
            fn predict_score(&self, _: &Matrix) -> Result<Vec<f64>, LearnerError> {
                Ok(self.0.clone())
            }
        }
        let x = Matrix::from_vec(vec![0.0; 3], 1).unwrap();
        let m = Fixed(vec![0.7, 0.5, 0.2]);
        assert_eq!(m.predict_class(&x, 0.5).unwrap(), [true, true, false]);
        assert_eq!(m.predict_class(&x, 1.01).unwrap(), [false, false, false]);
    }

    #[test]
    fn feature_subset_parsing() {
        assert_eq!("sqrt".parse::<FeatureSubset>().unwrap().resolve(256), 16);
        assert_eq!("all".parse::<FeatureSubset>().unwrap().resolve(7), 7);
        assert_eq!("40".parse::<FeatureSubset>().unwrap().resolve(7), 7);
        assert!("0".parse::<FeatureSubset>().is_err());
    }

    #[test]
    fn params_validation() {
        assert!(LearnerParams::default().validate().is_ok());
        let bad = LearnerParams {
            n_trees: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn model_file_round_trip() {
        let x = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0], vec![0.5, 0.5], vec![0.9, 0.1]])
            .unwrap();
        let y = [false, true, false, true];
        let params = LearnerParams {
            n_trees: 5,
            seed: 3,
            ..Default::default()
        };
        let model = Model::fit(LearnerKind::Forest, &x, &y, &params).unwrap();
        let back = model_from_str(&model_to_string(&model)).unwrap();
        assert_eq!(back, model);
        assert_eq!(back.predict_score(&x).unwrap(), model.predict_score(&x).unwrap());
        assert!(model_from_str(r#"{"format":"other","version":1,"model":{"kind":"majority","positive":true}}"#).is_err());
    }
}
