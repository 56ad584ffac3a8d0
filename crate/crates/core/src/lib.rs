//! Mixture-aware model validation.
//!
//! Datasets of N-ary mixtures are split at the constituent level into
//! training sets and "m compounds out" validation strata, models are fit on
//! real descriptors, constituent pseudodescriptors, or y-randomized labels,
//! and per-stratum metrics are aggregated over folds. The pseudodescriptor
//! run gives the heritability baseline that real-descriptor performance
//! must beat.

pub mod descriptors;
pub mod error;
pub mod folds;
pub mod harness;
pub mod learner;
pub mod metrics;
pub mod mixture;
pub mod seed;
pub mod simulate;

pub use error::{Error, Result};
pub use folds::{FoldPartition, FoldSplit, StratumId};
pub use mixture::{CollectionSpec, ConstituentId, Dataset, Label, LabelKind, MixtureKey};
