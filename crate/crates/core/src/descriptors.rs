//! Constituent descriptor tables, mixture-level combiners, pseudodescriptors
//! and y-randomization.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::DescriptorError;
use crate::learner::Matrix;
use crate::mixture::{CollectionSpec, Dataset, MixtureKey};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DescriptorKind {
    Real,
    Pseudo,
}

/// Fixed-length numeric vectors keyed by constituent `local_id`.
///
/// Multi-collection datasets share one table, so constituent ids should be
/// distinct across collections when their descriptors differ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptorTable {
    length: usize,
    kind: DescriptorKind,
    vectors: BTreeMap<String, Vec<f64>>,
}

impl DescriptorTable {
    pub fn new(length: usize, kind: DescriptorKind) -> Result<Self, DescriptorError> {
        if length == 0 {
            return Err(DescriptorError::EmptyDescriptor);
        }
        Ok(Self {
            length,
            kind,
            vectors: BTreeMap::new(),
        })
    }

    pub fn insert(&mut self, id: impl Into<String>, vector: Vec<f64>) -> Result<(), DescriptorError> {
        let id = id.into();
        if vector.len() != self.length {
            return Err(DescriptorError::LengthMismatch {
                id,
                expected: self.length,
                found: vector.len(),
            });
        }
        self.vectors.insert(id, vector);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Result<&[f64], DescriptorError> {
        self.vectors
            .get(id)
            .map(Vec::as_slice)
            .ok_or_else(|| DescriptorError::MissingDescriptor(id.to_owned()))
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn kind(&self) -> DescriptorKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.vectors.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// Fails with the first dataset constituent that has no entry.
    pub fn check_covers(&self, dataset: &Dataset) -> Result<(), DescriptorError> {
        for coll in dataset.collections() {
            for id in coll.members() {
                self.get(id)?;
            }
        }
        Ok(())
    }
}

/// How constituent vectors are merged into one mixture vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Combiner {
    /// Slot vectors concatenated in order (length `N * L`).
    OrderedConcat,
    /// Elementwise sum followed by elementwise max minus min (length `2 * L`).
    /// For two constituents this is sum and absolute difference.
    #[default]
    SumRange,
}

impl Combiner {
    pub fn output_len(&self, arity: usize, length: usize) -> usize {
        match self {
            Combiner::OrderedConcat => arity * length,
            Combiner::SumRange => 2 * length,
        }
    }
}

impl fmt::Display for Combiner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Combiner::OrderedConcat => "ordered-concat",
            Combiner::SumRange => "sum-range",
        })
    }
}

impl FromStr for Combiner {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "ordered-concat" | "concat" => Ok(Combiner::OrderedConcat),
            "sum-range" => Ok(Combiner::SumRange),
            _ => Err(format!("unknown combiner `{s}`")),
        }
    }
}

/// Appends the mixture vector for `key` to `out`.
pub fn combine_into(
    key: &MixtureKey,
    table: &DescriptorTable,
    policy: Combiner,
    out: &mut Vec<f64>,
) -> Result<(), DescriptorError> {
    let vectors = key
        .local_ids()
        .map(|id| table.get(id))
        .collect::<Result<Vec<_>, _>>()?;
    match policy {
        Combiner::OrderedConcat => {
            for v in vectors {
                out.extend_from_slice(v);
            }
        }
        Combiner::SumRange => {
            let start = out.len();
            let l = table.length();
            out.resize(start + 2 * l, 0.0);
            let (sum, range) = out[start..].split_at_mut(l);
            // summing in sorted order keeps the result bit-identical under
            // any constituent order
            let mut column = Vec::with_capacity(vectors.len());
            for f in 0..l {
                column.clear();
                column.extend(vectors.iter().map(|v| v[f]));
                column.sort_by(f64::total_cmp);
                sum[f] = column.iter().sum();
                range[f] = column[column.len() - 1] - column[0];
            }
        }
    }
    Ok(())
}

pub fn combine(
    key: &MixtureKey,
    table: &DescriptorTable,
    policy: Combiner,
) -> Result<Vec<f64>, DescriptorError> {
    let mut out = Vec::with_capacity(policy.output_len(key.arity(), table.length()));
    combine_into(key, table, policy, &mut out)?;
    Ok(out)
}

/// Stacks the mixture vectors of `keys` into a row-major matrix.
pub fn featurize<'a>(
    keys: impl IntoIterator<Item = &'a MixtureKey>,
    table: &DescriptorTable,
    policy: Combiner,
    arity: usize,
) -> Result<Matrix, DescriptorError> {
    let dim = policy.output_len(arity, table.length());
    let mut data = Vec::new();
    for key in keys {
        combine_into(key, table, policy, &mut data)?;
    }
    Ok(Matrix::from_vec(data, dim).expect("combined rows have uniform width"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PseudoDistribution {
    /// Independent fair bits.
    #[default]
    Binary,
    /// Independent standard normal values.
    Gaussian,
}

impl fmt::Display for PseudoDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PseudoDistribution::Binary => "binary",
            PseudoDistribution::Gaussian => "gaussian",
        })
    }
}

impl FromStr for PseudoDistribution {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "binary" => Ok(PseudoDistribution::Binary),
            "gaussian" => Ok(PseudoDistribution::Gaussian),
            _ => Err(format!("unknown pseudodescriptor distribution `{s}`")),
        }
    }
}

/// Random binary vectors, one per constituent of `collection`.
pub fn gen_pseudodescriptors(
    collection: &CollectionSpec,
    length: usize,
    seed: u64,
) -> Result<DescriptorTable, DescriptorError> {
    gen_pseudodescriptors_with(collection, length, seed, PseudoDistribution::Binary)
}

pub fn gen_pseudodescriptors_with(
    collection: &CollectionSpec,
    length: usize,
    seed: u64,
    distribution: PseudoDistribution,
) -> Result<DescriptorTable, DescriptorError> {
    let mut table = DescriptorTable::new(length, DescriptorKind::Pseudo)?;
    fill_pseudo(&mut table, collection, seed, distribution);
    Ok(table)
}

fn fill_pseudo(
    table: &mut DescriptorTable,
    collection: &CollectionSpec,
    seed: u64,
    distribution: PseudoDistribution,
) {
    let mut rng = seed::rng(seed);
    let length = table.length;
    for id in collection.members() {
        let v: Vec<f64> = match distribution {
            PseudoDistribution::Binary => (0..length)
                .map(|_| if rng.gen::<bool>() { 1.0 } else { 0.0 })
                .collect(),
            PseudoDistribution::Gaussian => {
                (0..length).map(|_| rng.sample(StandardNormal)).collect()
            }
        };
        table.vectors.insert(id.clone(), v);
    }
}

/// Pseudodescriptors for every collection of `dataset`, each collection
/// drawing from its own derived seed.
pub fn dataset_pseudodescriptors(
    dataset: &Dataset,
    length: usize,
    seed: u64,
    distribution: PseudoDistribution,
) -> Result<DescriptorTable, DescriptorError> {
    let mut table = DescriptorTable::new(length, DescriptorKind::Pseudo)?;
    for (c, coll) in dataset.collections().iter().enumerate() {
        fill_pseudo(&mut table, coll, seed::derive(seed, &[c as u64]), distribution);
    }
    Ok(table)
}

/// A seeded uniform permutation of `labels`.
pub fn y_randomize<T: Clone>(labels: &[T], seed: u64) -> Vec<T> {
    let mut out = labels.to_vec();
    out.shuffle(&mut seed::rng(seed));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixture::{canonical_key, ConstituentId};
    use rand::seq::SliceRandom;

    fn table(rows: &[(&str, &[f64])]) -> DescriptorTable {
        let mut t = DescriptorTable::new(rows[0].1.len(), DescriptorKind::Real).unwrap();
        for (id, v) in rows {
            t.insert(*id, v.to_vec()).unwrap();
        }
        t
    }

    fn key(ids: &[&str]) -> MixtureKey {
        canonical_key(
            ids.iter().map(|i| ConstituentId::new(0, *i)).collect(),
            ids.len(),
            false,
        )
        .unwrap()
    }

    #[test]
    fn sum_range_of_a_pair_is_sum_and_abs_difference() {
        let a = [0.5, -1.0, 3.0];
        let b = [2.0, 1.0, 3.0];
        let t = table(&[("a", &a), ("b", &b)]);
        let got = combine(&key(&["a", "b"]), &t, Combiner::SumRange).unwrap();
        let expected: Vec<f64> = a
            .iter()
            .zip(&b)
            .map(|(x, y)| x + y)
            .chain(a.iter().zip(&b).map(|(x, y)| (x - y).abs()))
            .collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn identical_constituents_have_zero_range() {
        let t = table(&[("a", &[1.0, 2.0]), ("b", &[1.0, 2.0])]);
        let got = combine(&key(&["a", "b"]), &t, Combiner::SumRange).unwrap();
        assert_eq!(got, [2.0, 4.0, 0.0, 0.0]);
    }

    #[test]
    fn ternary_sum_range_by_hand() {
        let t = table(&[("x", &[1.0, 0.0]), ("y", &[0.0, 1.0]), ("z", &[1.0, 1.0])]);
        let got = combine(&key(&["x", "y", "z"]), &t, Combiner::SumRange).unwrap();
        assert_eq!(got, [2.0, 2.0, 1.0, 1.0]);
    }

    #[test]
    fn ordered_concat_keeps_slot_order() {
        let t = table(&[("a", &[1.0]), ("b", &[2.0]), ("c", &[3.0])]);
        let k = canonical_key(
            vec![
                ConstituentId::new(0, "c"),
                ConstituentId::new(1, "a"),
                ConstituentId::new(2, "b"),
            ],
            3,
            true,
        )
        .unwrap();
        assert_eq!(combine(&k, &t, Combiner::OrderedConcat).unwrap(), [3.0, 1.0, 2.0]);
    }

    #[test]
    fn missing_descriptor_is_reported() {
        let t = table(&[("a", &[1.0])]);
        assert_eq!(
            combine(&key(&["a", "q"]), &t, Combiner::SumRange),
            Err(DescriptorError::MissingDescriptor("q".into()))
        );
    }

    #[test]
    fn sum_range_is_invariant_under_every_permutation() {
        // exhaustive over all orderings for arity up to 4
        let ids = ["p", "q", "r", "s"];
        let t = table(&[
            ("p", &[0.3, 1.0, -2.0]),
            ("q", &[1.5, 0.0, 4.0]),
            ("r", &[-0.7, 1.0, 0.0]),
            ("s", &[2.2, 0.5, 1.0]),
        ]);
        for n in 2..=4 {
            let reference = {
                let k = canonical_key(
                    ids[..n].iter().enumerate().map(|(i, id)| ConstituentId::new(i, *id)).collect(),
                    n,
                    true,
                )
                .unwrap();
                combine(&k, &t, Combiner::SumRange).unwrap()
            };
            for perm in permutations(n) {
                let k = canonical_key(
                    perm.iter().enumerate().map(|(i, &p)| ConstituentId::new(i, ids[p])).collect(),
                    n,
                    true,
                )
                .unwrap();
                assert_eq!(combine(&k, &t, Combiner::SumRange).unwrap(), reference);
            }
        }
    }

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(n - 1) {
            for pos in 0..=p.len() {
                let mut q = p.clone();
                q.insert(pos, n - 1);
                out.push(q);
            }
        }
        out
    }

    #[test]
    fn pseudodescriptors_are_seeded_binary_vectors() {
        let coll = CollectionSpec::numbered("D", "d", 32);
        let t = gen_pseudodescriptors(&coll, 128, 5).unwrap();
        assert_eq!(t.len(), 32);
        assert_eq!(t.kind(), DescriptorKind::Pseudo);
        let distinct: std::collections::BTreeSet<Vec<u64>> = t
            .iter()
            .map(|(_, v)| v.iter().map(|x| x.to_bits()).collect())
            .collect();
        assert_eq!(distinct.len(), 32);
        assert!(t.iter().all(|(_, v)| v.iter().all(|&x| x == 0.0 || x == 1.0)));
        assert_eq!(t, gen_pseudodescriptors(&coll, 128, 5).unwrap());
        assert_ne!(t, gen_pseudodescriptors(&coll, 128, 6).unwrap());
    }

    #[test]
    fn pseudodescriptor_bit_density_is_near_half() {
        let coll = CollectionSpec::numbered("D", "d", 1000);
        let t = gen_pseudodescriptors(&coll, 16, 2024).unwrap();
        for f in 0..16 {
            let density = t.iter().map(|(_, v)| v[f]).sum::<f64>() / 1000.0;
            assert!((density - 0.5).abs() <= 0.05, "position {f}: {density}");
        }
    }

    #[test]
    fn gaussian_pseudodescriptors_have_requested_length() {
        let coll = CollectionSpec::numbered("D", "d", 4);
        let t = gen_pseudodescriptors_with(&coll, 7, 1, PseudoDistribution::Gaussian).unwrap();
        assert!(t.iter().all(|(_, v)| v.len() == 7));
        assert!(gen_pseudodescriptors(&coll, 0, 1).is_err());
    }

    #[test]
    fn y_randomize_preserves_multiset() {
        let labels = [true, true, false, false];
        let mut out = y_randomize(&labels, 3);
        out.sort();
        assert_eq!(out, [false, false, true, true]);
        assert_eq!(y_randomize(&[true], 9), [true]);
    }

    #[test]
    fn y_randomize_is_uniform_on_pairs() {
        let ones = (0..10_000u64)
            .filter(|&s| y_randomize(&[1, 0], s)[0] == 1)
            .count();
        let frac = ones as f64 / 10_000.0;
        assert!((frac - 0.5).abs() <= 0.02, "{frac}");
    }

    #[test]
    fn featurize_stacks_rows() {
        let t = table(&[("a", &[1.0]), ("b", &[2.0]), ("c", &[4.0])]);
        let mut keys = vec![key(&["a", "b"]), key(&["b", "c"])];
        let m = featurize(&keys, &t, Combiner::SumRange, 2).unwrap();
        assert_eq!(m.rows(), 2);
        assert_eq!(m.row(1), [6.0, 2.0]);
        keys.shuffle(&mut seed::rng(0));
        assert_eq!(featurize(&keys, &t, Combiner::OrderedConcat, 2).unwrap().dim(), 2);
    }
}
