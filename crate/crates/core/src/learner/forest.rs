use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tree::{DecisionTree, TreeConfig};
use super::{Classifier, LearnerParams, Matrix};
use crate::error::LearnerError;
use crate::seed;

/// Bagged ensemble of Gini trees; the score is the mean leaf positive rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    trees: Vec<DecisionTree>,
    dim: usize,
}

impl RandomForest {
    /// Fits `params.n_trees` trees, each on a bootstrap resample of the rows.
    ///
    /// Tree `t` draws its bootstrap and feature subsets from a seed derived
    /// from `(params.seed, t)`, so the result does not depend on how trees
    /// are scheduled across threads.
    pub fn fit(x: &Matrix, y: &[bool], params: &LearnerParams) -> Result<Self, LearnerError> {
        params.validate()?;
        if y.len() != x.rows() {
            return Err(LearnerError::LabelCountMismatch {
                rows: x.rows(),
                labels: y.len(),
            });
        }
        if x.rows() == 0 {
            return Err(LearnerError::EmptyTrainingSet);
        }
        let cfg = TreeConfig {
            max_depth: params.max_depth,
            min_leaf: params.min_leaf,
            features_per_split: params.features_per_split.resolve(x.dim()),
        };
        let n = x.rows();
        let grow = |t: usize| {
            let mut rng = seed::rng(seed::derive(params.seed, &[t as u64]));
            let rows: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
            DecisionTree::grow(x, y, rows, &cfg, &mut rng)
        };

        #[cfg(feature = "parallel")]
        let trees = {
            use rayon::prelude::*;
            (0..params.n_trees).into_par_iter().map(grow).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let trees = (0..params.n_trees).map(grow).collect();

        Ok(Self {
            trees,
            dim: x.dim(),
        })
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

impl Classifier for RandomForest {
    fn predict_score(&self, x: &Matrix) -> Result<Vec<f64>, LearnerError> {
        if x.dim() != self.dim {
            return Err(LearnerError::DimensionMismatch {
                expected: self.dim,
                found: x.dim(),
            });
        }
        let n_trees = self.trees.len() as f64;
        Ok(x.iter_rows()
            .map(|row| {
                let s = self.trees.iter().map(|t| t.score(row)).sum::<f64>() / n_trees;
                s.clamp(0.0, 1.0)
            })
            .collect())
    }
}
