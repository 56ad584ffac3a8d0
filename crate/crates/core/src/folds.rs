//! Constituent-level k-fold splitting.
//!
//! Instead of shuffling mixtures into folds, each constituent collection is
//! partitioned into `k` blocks. For fold `j` the `j`-th block is the
//! *interior* set and the remaining constituents form the *exterior* set.
//! Training uses only mixtures built entirely from interior constituents;
//! every other mixture lands in a validation stratum determined by how many
//! (or, for ordered data, which) of its constituents are exterior.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::SplitError;
use crate::mixture::{Dataset, MixtureKey};
use crate::seed;

/// Largest arity for which exterior masks are supported.
pub const MAX_MASK_ARITY: usize = 16;

/// Identifies one validation stratum of a fold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum StratumId {
    /// The single validation fold of a standard split.
    All,
    /// Mixtures with exactly this many exterior constituents.
    Out(usize),
    /// Mixtures whose slot `i` is exterior exactly when bit `i` is set.
    Mask { bits: u32, arity: u8 },
}

impl StratumId {
    pub fn mask(bits: u32, arity: usize) -> Self {
        StratumId::Mask {
            bits,
            arity: arity as u8,
        }
    }

    /// Number of exterior constituents for `Out` and `Mask` strata.
    pub fn exterior_count(&self) -> Option<usize> {
        match *self {
            StratumId::All => None,
            StratumId::Out(m) => Some(m),
            StratumId::Mask { bits, .. } => Some(bits.count_ones() as usize),
        }
    }
}

impl fmt::Display for StratumId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            StratumId::All => f.write_str("all"),
            StratumId::Out(m) => write!(f, "{m}-out"),
            StratumId::Mask { bits, arity } => {
                f.write_str("mask:")?;
                for i in 0..arity {
                    f.write_str(if bits >> i & 1 == 1 { "E" } else { "I" })?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for StratumId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "all" {
            return Ok(StratumId::All);
        }
        if let Some(m) = s.strip_suffix("-out") {
            return m
                .parse()
                .map(StratumId::Out)
                .map_err(|_| format!("bad stratum `{s}`"));
        }
        if let Some(pattern) = s.strip_prefix("mask:") {
            if pattern.is_empty() || pattern.len() > MAX_MASK_ARITY {
                return Err(format!("bad stratum `{s}`"));
            }
            let mut bits = 0u32;
            for (i, ch) in pattern.chars().enumerate() {
                match ch {
                    'E' => bits |= 1 << i,
                    'I' => {}
                    _ => return Err(format!("bad stratum `{s}`")),
                }
            }
            return Ok(StratumId::mask(bits, pattern.len()));
        }
        Err(format!("bad stratum `{s}`"))
    }
}

impl From<StratumId> for String {
    fn from(s: StratumId) -> String {
        s.to_string()
    }
}

impl TryFrom<String> for StratumId {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

/// Interior/exterior assignment of every collection for one fold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPartition {
    pub fold_index: usize,
    pub interior: Vec<BTreeSet<String>>,
    pub exterior: Vec<BTreeSet<String>>,
}

impl FoldPartition {
    /// Fold `fold_index` of per-collection block lists: block `fold_index` of
    /// every collection is interior, all other blocks are exterior.
    pub fn from_blocks(fold_index: usize, blocks: &[Vec<Vec<String>>]) -> Self {
        let mut interior = Vec::with_capacity(blocks.len());
        let mut exterior = Vec::with_capacity(blocks.len());
        for coll in blocks {
            let mut inner = BTreeSet::new();
            let mut outer = BTreeSet::new();
            for (j, block) in coll.iter().enumerate() {
                let target = if j == fold_index { &mut inner } else { &mut outer };
                target.extend(block.iter().cloned());
            }
            interior.push(inner);
            exterior.push(outer);
        }
        Self {
            fold_index,
            interior,
            exterior,
        }
    }

    fn check(&self, dataset: &Dataset) -> Result<(), SplitError> {
        let colls = dataset.collections();
        if self.interior.len() != colls.len() || self.exterior.len() != colls.len() {
            return Err(SplitError::PartitionMismatch(format!(
                "partition covers {} collections, dataset has {}",
                self.interior.len(),
                colls.len()
            )));
        }
        for (c, coll) in colls.iter().enumerate() {
            if let Some(id) = self.interior[c].intersection(&self.exterior[c]).next() {
                return Err(SplitError::PartitionMismatch(format!(
                    "`{id}` is both interior and exterior"
                )));
            }
            let members: HashSet<&str> = coll.members().iter().map(String::as_str).collect();
            let covered = self.interior[c].len() + self.exterior[c].len();
            let all_known = self.interior[c]
                .iter()
                .chain(&self.exterior[c])
                .all(|id| members.contains(id.as_str()));
            if covered != members.len() || !all_known {
                return Err(SplitError::PartitionMismatch(format!(
                    "collection `{}` is not covered exactly",
                    coll.name
                )));
            }
        }
        Ok(())
    }
}

/// Training set and validation strata of one fold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldSplit {
    pub fold_index: usize,
    pub training: BTreeSet<MixtureKey>,
    pub strata: BTreeMap<StratumId, BTreeSet<MixtureKey>>,
}

impl FoldSplit {
    pub fn stratum(&self, id: StratumId) -> Option<&BTreeSet<MixtureKey>> {
        self.strata.get(&id)
    }
}

/// Splits `members` into `k` disjoint blocks after a seeded shuffle.
///
/// Block sizes differ by at most one; the first `len % k` blocks are the
/// larger ones. Ids inside each block are sorted.
pub fn partition_collection(
    members: &[String],
    k: usize,
    seed: u64,
) -> Result<Vec<Vec<String>>, SplitError> {
    let mut shuffled = members.to_vec();
    shuffled.shuffle(&mut seed::rng(seed));
    let mut blocks = balanced_chunks(shuffled, k)?;
    for b in &mut blocks {
        b.sort();
    }
    Ok(blocks)
}

fn balanced_chunks<T>(items: Vec<T>, k: usize) -> Result<Vec<Vec<T>>, SplitError> {
    if k < 2 {
        return Err(SplitError::TooFewFolds(k));
    }
    if k > items.len() {
        return Err(SplitError::TooManyFolds {
            folds: k,
            items: items.len(),
        });
    }
    let base = items.len() / k;
    let extra = items.len() % k;
    let mut it = items.into_iter();
    Ok((0..k)
        .map(|j| it.by_ref().take(base + usize::from(j < extra)).collect())
        .collect())
}

/// One partition per fold, shared by every constituent-level strategy.
///
/// Each collection is shuffled with its own seed derived from `seed`; fold
/// `j` uses block `j` of every collection as interior.
pub fn constituent_partitions(
    dataset: &Dataset,
    k: usize,
    seed: u64,
) -> Result<Vec<FoldPartition>, SplitError> {
    let blocks = dataset
        .collections()
        .iter()
        .enumerate()
        .map(|(c, coll)| partition_collection(coll.members(), k, seed::derive(seed, &[c as u64])))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((0..k).map(|j| FoldPartition::from_blocks(j, &blocks)).collect())
}

/// Builds the `m compounds out` strata for a single-collection dataset.
///
/// Training holds the mixtures with no exterior constituent; stratum
/// `Out(m)` holds those with exactly `m`. All strata `1..=N` are present,
/// possibly empty.
pub fn build_fold(dataset: &Dataset, partition: &FoldPartition) -> Result<FoldSplit, SplitError> {
    if dataset.is_ordered() {
        return Err(SplitError::PartitionMismatch(
            "compounds-out strata need a single-collection dataset; use build_fractured_fold"
                .into(),
        ));
    }
    partition.check(dataset)?;
    let exterior = &partition.exterior[0];
    let mut split = FoldSplit {
        fold_index: partition.fold_index,
        training: BTreeSet::new(),
        strata: (1..=dataset.arity())
            .map(|m| (StratumId::Out(m), BTreeSet::new()))
            .collect(),
    };
    for key in dataset.keys() {
        let m = key.local_ids().filter(|id| exterior.contains(*id)).count();
        if m == 0 {
            split.training.insert(key.clone());
        } else {
            split
                .strata
                .get_mut(&StratumId::Out(m))
                .expect("stratum pre-seeded")
                .insert(key.clone());
        }
    }
    Ok(split)
}

/// Builds the `2^N - 1` exterior-mask strata for an ordered dataset.
pub fn build_fractured_fold(
    dataset: &Dataset,
    partition: &FoldPartition,
) -> Result<FoldSplit, SplitError> {
    if !dataset.is_ordered() {
        return Err(SplitError::PartitionMismatch(
            "fractured strata need an ordered dataset".into(),
        ));
    }
    let n = dataset.arity();
    if n > MAX_MASK_ARITY {
        return Err(SplitError::PartitionMismatch(format!(
            "arity {n} exceeds the mask limit of {MAX_MASK_ARITY}"
        )));
    }
    partition.check(dataset)?;
    let mut split = FoldSplit {
        fold_index: partition.fold_index,
        training: BTreeSet::new(),
        strata: (1..(1u32 << n))
            .map(|bits| (StratumId::mask(bits, n), BTreeSet::new()))
            .collect(),
    };
    for key in dataset.keys() {
        let bits = key
            .constituents()
            .iter()
            .enumerate()
            .filter(|(slot, c)| partition.exterior[*slot].contains(&c.local_id))
            .fold(0u32, |acc, (slot, _)| acc | 1 << slot);
        if bits == 0 {
            split.training.insert(key.clone());
        } else {
            split
                .strata
                .get_mut(&StratumId::mask(bits, n))
                .expect("stratum pre-seeded")
                .insert(key.clone());
        }
    }
    Ok(split)
}

/// Compounds-out strata for any dataset. Ordered datasets merge the
/// fractured mask strata by their number of exterior slots.
pub fn build_compounds_out_fold(
    dataset: &Dataset,
    partition: &FoldPartition,
) -> Result<FoldSplit, SplitError> {
    if !dataset.is_ordered() {
        return build_fold(dataset, partition);
    }
    let fractured = build_fractured_fold(dataset, partition)?;
    let mut strata: BTreeMap<StratumId, BTreeSet<MixtureKey>> = (1..=dataset.arity())
        .map(|m| (StratumId::Out(m), BTreeSet::new()))
        .collect();
    for (id, keys) in fractured.strata {
        let m = id.exterior_count().expect("mask stratum");
        strata.get_mut(&StratumId::Out(m)).unwrap().extend(keys);
    }
    Ok(FoldSplit {
        fold_index: fractured.fold_index,
        training: fractured.training,
        strata,
    })
}

/// One fold of ordinary k-fold validation over mixtures.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StandardFold {
    pub fold_index: usize,
    pub training: BTreeSet<MixtureKey>,
    pub validation: BTreeSet<MixtureKey>,
}

/// Random k-fold split over mixtures, ignoring shared constituents.
pub fn standard_split(
    dataset: &Dataset,
    k: usize,
    seed: u64,
) -> Result<Vec<StandardFold>, SplitError> {
    let mut keys: Vec<&MixtureKey> = dataset.keys().collect();
    keys.shuffle(&mut seed::rng(seed));
    let blocks = balanced_chunks(keys, k)?;
    Ok((0..k)
        .map(|j| StandardFold {
            fold_index: j,
            training: blocks
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != j)
                .flat_map(|(_, b)| b.iter().map(|&k| k.clone()))
                .collect(),
            validation: blocks[j].iter().map(|&k| k.clone()).collect(),
        })
        .collect())
}

impl From<StandardFold> for FoldSplit {
    fn from(f: StandardFold) -> Self {
        FoldSplit {
            fold_index: f.fold_index,
            training: f.training,
            strata: BTreeMap::from([(StratumId::All, f.validation)]),
        }
    }
}
