//! Mixture datasets as subsets of Cartesian products of constituent collections.
//!
//! A mixture is an N-tuple of constituents. In *ordered* mode there are N
//! collections and slot `i` draws from collection `i`. In *unordered* mode all
//! slots draw from one collection and the tuple is kept sorted by `local_id`,
//! so `(d2, d1)` and `(d1, d2)` are the same mixture.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::MixtureError;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ConstituentId {
    pub collection: usize,
    pub local_id: String,
}

impl ConstituentId {
    pub fn new(collection: usize, local_id: impl Into<String>) -> Self {
        Self {
            collection,
            local_id: local_id.into(),
        }
    }
}

impl fmt::Display for ConstituentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.local_id)
    }
}

/// A named, duplicate-free list of constituent ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollectionSpec {
    pub name: String,
    members: Vec<String>,
}

impl CollectionSpec {
    pub fn new(
        name: impl Into<String>,
        members: impl IntoIterator<Item = impl Into<String>>,
    ) -> Result<Self, MixtureError> {
        let name = name.into();
        let members: Vec<String> = members.into_iter().map(Into::into).collect();
        let mut seen = std::collections::HashSet::with_capacity(members.len());
        for m in &members {
            if m.is_empty() {
                return Err(MixtureError::EmptyId);
            }
            if !seen.insert(m.as_str()) {
                return Err(MixtureError::DuplicateMember {
                    name: name.clone(),
                    id: m.clone(),
                });
            }
        }
        Ok(Self { name, members })
    }

    /// Collection of `count` members named `{prefix}{i}`, zero-padded so that
    /// lexicographic and numeric order agree.
    pub fn numbered(name: impl Into<String>, prefix: &str, count: usize) -> Self {
        let width = count.to_string().len().max(2);
        let members = (1..=count)
            .map(|i| format!("{prefix}{i:0width$}"))
            .collect();
        Self {
            name: name.into(),
            members,
        }
    }

    pub fn members(&self) -> &[String] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Canonical identity of one mixture.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MixtureKey(Vec<ConstituentId>);

impl MixtureKey {
    pub fn constituents(&self) -> &[ConstituentId] {
        &self.0
    }

    pub fn arity(&self) -> usize {
        self.0.len()
    }

    pub fn local_ids(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(|c| c.local_id.as_str())
    }
}

impl fmt::Display for MixtureKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("|")?;
            }
            f.write_str(&c.local_id)?;
        }
        Ok(())
    }
}

/// Returns the canonical key for a tuple of constituents.
///
/// Ordered mode keeps the tuple as given. Unordered mode sorts it by
/// `local_id` and rejects repeated constituents.
pub fn canonical_key(
    constituents: Vec<ConstituentId>,
    arity: usize,
    ordered: bool,
) -> Result<MixtureKey, MixtureError> {
    if constituents.len() != arity {
        return Err(MixtureError::ArityMismatch {
            expected: arity,
            found: constituents.len(),
        });
    }
    if ordered {
        return Ok(MixtureKey(constituents));
    }
    let collection = constituents.first().map(|c| c.collection);
    if constituents.iter().any(|c| Some(c.collection) != collection) {
        return Err(MixtureError::MixedCollections);
    }
    let mut sorted = constituents;
    sorted.sort_by(|a, b| a.local_id.cmp(&b.local_id));
    if let Some(w) = sorted.windows(2).find(|w| w[0].local_id == w[1].local_id) {
        return Err(MixtureError::DuplicateConstituent(w[0].local_id.clone()));
    }
    Ok(MixtureKey(sorted))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelKind {
    Binary,
    Continuous,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Label {
    Binary(bool),
    Continuous(f64),
}

impl Label {
    pub fn kind(&self) -> LabelKind {
        match self {
            Label::Binary(_) => LabelKind::Binary,
            Label::Continuous(_) => LabelKind::Continuous,
        }
    }

    /// Binary class; continuous labels are active when strictly above `threshold`.
    pub fn is_active(&self, threshold: f64) -> bool {
        match *self {
            Label::Binary(b) => b,
            Label::Continuous(v) => v > threshold,
        }
    }
}

/// Checks that the collection layout is consistent with `arity` and `ordered`.
fn check_layout(
    collections: &[CollectionSpec],
    arity: usize,
    ordered: bool,
) -> Result<(), MixtureError> {
    if arity < 2 {
        return Err(MixtureError::InvalidLayout(format!(
            "arity must be at least 2, got {arity}"
        )));
    }
    if ordered {
        if collections.len() != arity {
            return Err(MixtureError::InvalidLayout(format!(
                "ordered mixtures of arity {arity} need {arity} collections, got {}",
                collections.len()
            )));
        }
        if let Some(c) = collections.iter().find(|c| c.is_empty()) {
            return Err(MixtureError::InsufficientMembers {
                name: c.name.clone(),
                members: 0,
                arity: 1,
            });
        }
    } else if collections.len() != 1 {
        return Err(MixtureError::InvalidLayout(format!(
            "unordered mixtures need exactly one collection, got {}",
            collections.len()
        )));
    }
    Ok(())
}

/// Enumerates every mixture of the complete dataset, canonically sorted.
///
/// Ordered mode yields the full Cartesian product of the collections;
/// unordered mode yields all `arity`-subsets of the single collection.
pub fn enumerate_complete(
    collections: &[CollectionSpec],
    arity: usize,
    ordered: bool,
) -> Result<Vec<MixtureKey>, MixtureError> {
    check_layout(collections, arity, ordered)?;
    let mut keys = Vec::new();
    if ordered {
        let mut idx = vec![0usize; arity];
        'outer: loop {
            keys.push(MixtureKey(
                idx.iter()
                    .enumerate()
                    .map(|(c, &i)| ConstituentId::new(c, collections[c].members[i].clone()))
                    .collect(),
            ));
            for slot in (0..arity).rev() {
                idx[slot] += 1;
                if idx[slot] < collections[slot].len() {
                    continue 'outer;
                }
                idx[slot] = 0;
            }
            break;
        }
    } else {
        let coll = &collections[0];
        if coll.len() < arity {
            return Err(MixtureError::InsufficientMembers {
                name: coll.name.clone(),
                members: coll.len(),
                arity,
            });
        }
        let mut members: Vec<&String> = coll.members.iter().collect();
        members.sort();
        for combo in Combinations::new(members.len(), arity) {
            keys.push(MixtureKey(
                combo
                    .iter()
                    .map(|&i| ConstituentId::new(0, members[i].clone()))
                    .collect(),
            ));
        }
    }
    keys.sort();
    Ok(keys)
}

/// Lexicographic iterator over the `r`-subsets of `0..n`.
#[derive(Debug, Clone)]
pub struct Combinations {
    n: usize,
    idx: Vec<usize>,
    done: bool,
}

impl Combinations {
    pub fn new(n: usize, r: usize) -> Self {
        Self {
            n,
            idx: (0..r).collect(),
            done: r > n,
        }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.idx.clone();
        let r = self.idx.len();
        let mut i = r;
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.idx[i] < self.n - r + i {
                self.idx[i] += 1;
                for j in i + 1..r {
                    self.idx[j] = self.idx[j - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    }
}

/// `n choose r` in u128; saturates rather than overflowing.
pub fn choose(n: usize, r: usize) -> u128 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    (0..r).fold(1u128, |acc, i| {
        acc.saturating_mul((n - i) as u128) / (i as u128 + 1)
    })
}

/// A labeled set of N-ary mixtures over declared constituent collections.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    collections: Vec<CollectionSpec>,
    arity: usize,
    ordered: bool,
    label_kind: Option<LabelKind>,
    records: BTreeMap<MixtureKey, Label>,
    lookup: Vec<HashMap<String, usize>>,
}

impl Dataset {
    pub fn new(
        collections: Vec<CollectionSpec>,
        arity: usize,
        ordered: bool,
    ) -> Result<Self, MixtureError> {
        check_layout(&collections, arity, ordered)?;
        if !ordered && collections[0].len() < arity {
            return Err(MixtureError::InsufficientMembers {
                name: collections[0].name.clone(),
                members: collections[0].len(),
                arity,
            });
        }
        let lookup = collections
            .iter()
            .map(|c| {
                c.members
                    .iter()
                    .enumerate()
                    .map(|(i, m)| (m.clone(), i))
                    .collect()
            })
            .collect();
        Ok(Self {
            collections,
            arity,
            ordered,
            label_kind: None,
            records: BTreeMap::new(),
            lookup,
        })
    }

    /// Resolves local ids slot by slot and returns the canonical key.
    pub fn resolve<S: AsRef<str>>(&self, local_ids: &[S]) -> Result<MixtureKey, MixtureError> {
        if local_ids.len() != self.arity {
            return Err(MixtureError::ArityMismatch {
                expected: self.arity,
                found: local_ids.len(),
            });
        }
        let constituents = local_ids
            .iter()
            .enumerate()
            .map(|(slot, id)| {
                let id = id.as_ref();
                let collection = if self.ordered { slot } else { 0 };
                if id.is_empty() {
                    return Err(MixtureError::EmptyId);
                }
                if !self.lookup[collection].contains_key(id) {
                    return Err(MixtureError::UnknownConstituent {
                        collection,
                        id: id.to_owned(),
                    });
                }
                Ok(ConstituentId::new(collection, id))
            })
            .collect::<Result<Vec<_>, _>>()?;
        canonical_key(constituents, self.arity, self.ordered)
    }

    pub fn insert<S: AsRef<str>>(
        &mut self,
        local_ids: &[S],
        label: Label,
    ) -> Result<MixtureKey, MixtureError> {
        let key = self.resolve(local_ids)?;
        match self.label_kind {
            Some(kind) if kind != label.kind() => return Err(MixtureError::MixedLabelKinds),
            _ => {}
        }
        if self.records.contains_key(&key) {
            return Err(MixtureError::DuplicateMixture(key.to_string()));
        }
        self.label_kind = Some(label.kind());
        self.records.insert(key.clone(), label);
        Ok(key)
    }

    pub fn collections(&self) -> &[CollectionSpec] {
        &self.collections
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn is_ordered(&self) -> bool {
        self.ordered
    }

    pub fn label_kind(&self) -> Option<LabelKind> {
        self.label_kind
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &BTreeMap<MixtureKey, Label> {
        &self.records
    }

    pub fn keys(&self) -> impl Iterator<Item = &MixtureKey> {
        self.records.keys()
    }

    pub fn label(&self, key: &MixtureKey) -> Option<Label> {
        self.records.get(key).copied()
    }

    pub fn contains(&self, key: &MixtureKey) -> bool {
        self.records.contains_key(key)
    }

    /// Size of the full product (ordered) or `choose(D, N)` (unordered).
    pub fn complete_size(&self) -> u128 {
        if self.ordered {
            self.collections
                .iter()
                .fold(1u128, |acc, c| acc.saturating_mul(c.len() as u128))
        } else {
            choose(self.collections[0].len(), self.arity)
        }
    }

    pub fn is_complete(&self) -> bool {
        self.records.len() as u128 == self.complete_size()
    }
}

/// Builds a dataset from rows of `(local ids by slot, label)`.
pub fn build_dataset<I, S>(
    collections: Vec<CollectionSpec>,
    arity: usize,
    ordered: bool,
    rows: I,
) -> Result<Dataset, MixtureError>
where
    I: IntoIterator<Item = (Vec<S>, Label)>,
    S: AsRef<str>,
{
    let mut ds = Dataset::new(collections, arity, ordered)?;
    for (ids, label) in rows {
        ds.insert(&ids, label)?;
    }
    Ok(ds)
}
