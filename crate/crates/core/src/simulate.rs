//! Synthetic mixture data with heritable labels and no structure-activity
//! relationship.
//!
//! Each drug gets a latent property `alpha ~ N(0, 1)` and an unrelated random
//! binary fingerprint. A mixture's response is the sum of its constituents'
//! alphas plus Gaussian measurement noise, and it is labeled active when the
//! response is strictly positive. Any skill a model shows on this data comes
//! from memorizing which drugs appear in active mixtures.

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::descriptors::{DescriptorKind, DescriptorTable};
use crate::error::SimError;
use crate::mixture::{enumerate_complete, CollectionSpec, Dataset, Label, MixtureKey};
use crate::seed;

/// Spread of the measurement noise added to each mixture response.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Noise {
    Variance(f64),
    StdDev(f64),
}

impl Noise {
    pub fn std_dev(&self) -> f64 {
        match *self {
            Noise::Variance(v) => v.sqrt(),
            Noise::StdDev(s) => s,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Noise::Variance(v) => v,
            Noise::StdDev(s) => s * s,
        }
    }
}

/// Descriptors that leak the latent property, for checking that a model
/// which does learn structure beats the pseudodescriptor baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Informative {
    /// Number of leading columns holding `alpha + N(0, noise_sd^2)`.
    pub signal_features: usize,
    pub noise_sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_drugs: usize,
    pub arity: usize,
    pub noise: Noise,
    pub fingerprint_length: usize,
    pub seed: u64,
    pub informative: Option<Informative>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_drugs: 32,
            arity: 3,
            noise: Noise::Variance(0.5),
            fingerprint_length: 128,
            seed: 0,
            informative: None,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.arity < 2 {
            return Err(SimError::InvalidConfig(format!("arity {} < 2", self.arity)));
        }
        if self.n_drugs < self.arity {
            return Err(SimError::InvalidConfig(format!(
                "{} drugs cannot form mixtures of arity {}",
                self.n_drugs, self.arity
            )));
        }
        if self.fingerprint_length == 0 {
            return Err(SimError::InvalidConfig("fingerprint_length must be at least 1".into()));
        }
        let spread = match self.noise {
            Noise::Variance(v) => v,
            Noise::StdDev(s) => s,
        };
        if !(spread >= 0.0 && spread.is_finite()) {
            return Err(SimError::InvalidConfig(format!("bad noise {:?}", self.noise)));
        }
        if let Some(inf) = self.informative {
            if inf.signal_features == 0 || !(inf.noise_sd >= 0.0 && inf.noise_sd.is_finite()) {
                return Err(SimError::InvalidConfig(format!("bad informative settings {inf:?}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimDrug {
    pub local_id: String,
    pub alpha: f64,
    pub fingerprint: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimMixture {
    pub key: MixtureKey,
    pub beta: f64,
    pub active: bool,
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    pub dataset: Dataset,
    /// The random fingerprints, which carry no information about alpha.
    pub fingerprints: DescriptorTable,
    /// Present when `SimConfig::informative` is set.
    pub informative: Option<DescriptorTable>,
    pub drugs: Vec<SimDrug>,
    pub mixtures: Vec<SimMixture>,
}

const ALPHA_STREAM: u64 = 1;
const FINGERPRINT_STREAM: u64 = 2;
const NOISE_STREAM: u64 = 3;
const INFORMATIVE_STREAM: u64 = 4;

/// Draws the drug collection: latent alphas and fingerprints, from
/// independent streams.
pub fn draw_drugs(config: &SimConfig) -> Result<(CollectionSpec, Vec<SimDrug>), SimError> {
    config.validate()?;
    let collection = CollectionSpec::numbered("drugs", "d", config.n_drugs);
    let mut alpha_rng = seed::rng(seed::derive(config.seed, &[ALPHA_STREAM]));
    let mut fp_rng = seed::rng(seed::derive(config.seed, &[FINGERPRINT_STREAM]));
    let drugs = collection
        .members()
        .iter()
        .map(|id| SimDrug {
            local_id: id.clone(),
            alpha: alpha_rng.sample(StandardNormal),
            fingerprint: (0..config.fingerprint_length).map(|_| fp_rng.gen()).collect(),
        })
        .collect();
    Ok((collection, drugs))
}

/// Generates the complete unordered dataset described by `config`.
pub fn simulate(config: &SimConfig) -> Result<SimOutput, SimError> {
    let (collection, drugs) = draw_drugs(config)?;
    let alpha_of = |id: &str| -> f64 {
        let i = collection.members().binary_search_by(|m| m.as_str().cmp(id)).expect("member");
        drugs[i].alpha
    };

    let keys = enumerate_complete(std::slice::from_ref(&collection), config.arity, false)
        .map_err(|e| SimError::InvalidConfig(e.to_string()))?;
    let noise = Normal::new(0.0, config.noise.std_dev())
        .map_err(|e| SimError::InvalidConfig(e.to_string()))?;
    let mut noise_rng = seed::rng(seed::derive(config.seed, &[NOISE_STREAM]));
    let mut dataset = Dataset::new(vec![collection.clone()], config.arity, false)
        .map_err(|e| SimError::InvalidConfig(e.to_string()))?;
    let mut mixtures = Vec::with_capacity(keys.len());
    for key in keys {
        let beta = key.local_ids().map(alpha_of).sum::<f64>() + noise.sample(&mut noise_rng);
        let active = beta > 0.0;
        let ids: Vec<&str> = key.local_ids().collect();
        dataset
            .insert(&ids, Label::Binary(active))
            .expect("enumerated keys are unique");
        mixtures.push(SimMixture { key, beta, active });
    }

    let mut fingerprints = DescriptorTable::new(config.fingerprint_length, DescriptorKind::Pseudo)
        .expect("length validated");
    for d in &drugs {
        fingerprints
            .insert(d.local_id.clone(), bits(&d.fingerprint))
            .expect("uniform length");
    }

    let informative = config.informative.map(|inf| {
        let mut rng = seed::rng(seed::derive(config.seed, &[INFORMATIVE_STREAM]));
        let len = inf.signal_features + config.fingerprint_length;
        let mut table = DescriptorTable::new(len, DescriptorKind::Real).expect("nonzero length");
        for d in &drugs {
            let mut v: Vec<f64> = (0..inf.signal_features)
                .map(|_| d.alpha + inf.noise_sd * rng.sample::<f64, _>(StandardNormal))
                .collect();
            v.extend(bits(&d.fingerprint));
            table.insert(d.local_id.clone(), v).expect("uniform length");
        }
        table
    });

    Ok(SimOutput {
        dataset,
        fingerprints,
        informative,
        drugs,
        mixtures,
    })
}

fn bits(b: &[bool]) -> Vec<f64> {
    b.iter().map(|&x| if x { 1.0 } else { 0.0 }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(seed: u64) -> SimConfig {
        SimConfig {
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn ternary_dataset_has_4960_mixtures() {
        let out = simulate(&cfg(1)).unwrap();
        assert_eq!(out.dataset.len(), 4960);
        assert_eq!(out.mixtures.len(), 4960);
        assert!(out.dataset.is_complete());
        assert_eq!(out.fingerprints.len(), 32);
        assert!(out.drugs.iter().all(|d| d.fingerprint.len() == 128));
        assert!(out.mixtures.iter().all(|m| m.active == (m.beta > 0.0)));
    }

    #[test]
    fn noiseless_labels_are_the_sign_of_the_alpha_sum() {
        let out = simulate(&SimConfig {
            noise: Noise::Variance(0.0),
            n_drugs: 12,
            ..cfg(3)
        })
        .unwrap();
        for m in &out.mixtures {
            let sum: f64 = m
                .key
                .local_ids()
                .map(|id| out.drugs.iter().find(|d| d.local_id == id).unwrap().alpha)
                .sum();
            assert_eq!(m.beta, sum);
            assert_eq!(out.dataset.label(&m.key), Some(Label::Binary(sum > 0.0)));
        }
    }

    #[test]
    fn active_fraction_is_near_half_across_seeds() {
        let mean: f64 = (0..20)
            .map(|s| {
                let out = simulate(&cfg(100 + s)).unwrap();
                out.mixtures.iter().filter(|m| m.active).count() as f64 / 4960.0
            })
            .sum::<f64>()
            / 20.0;
        assert!((mean - 0.5).abs() <= 0.05, "{mean}");
    }

    #[test]
    fn alpha_moments() {
        let (_, drugs) = draw_drugs(&SimConfig {
            n_drugs: 10_000,
            fingerprint_length: 1,
            ..cfg(77)
        })
        .unwrap();
        let n = drugs.len() as f64;
        let mean = drugs.iter().map(|d| d.alpha).sum::<f64>() / n;
        let var = drugs.iter().map(|d| (d.alpha - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() <= 0.03, "{mean}");
        assert!((var - 1.0).abs() <= 0.05, "{var}");
    }

    #[test]
    fn residual_variance_matches_noise() {
        let out = simulate(&cfg(5)).unwrap();
        let residuals: Vec<f64> = out
            .mixtures
            .iter()
            .map(|m| {
                let s: f64 = m
                    .key
                    .local_ids()
                    .map(|id| out.drugs.iter().find(|d| d.local_id == id).unwrap().alpha)
                    .sum();
                m.beta - s
            })
            .collect();
        let n = residuals.len() as f64;
        let mean = residuals.iter().sum::<f64>() / n;
        let var = residuals.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((var - 0.5).abs() <= 0.05, "{var}");
    }

    #[test]
    fn seeds_reproduce_bit_for_bit() {
        let a = simulate(&cfg(9)).unwrap();
        let b = simulate(&cfg(9)).unwrap();
        assert_eq!(a.drugs, b.drugs);
        assert_eq!(a.mixtures, b.mixtures);
        assert_eq!(a.dataset, b.dataset);
        assert_ne!(simulate(&cfg(10)).unwrap().drugs, a.drugs);
    }

    #[test]
    fn fingerprint_bits_are_uncorrelated_with_labels() {
        let out = simulate(&cfg(21)).unwrap();
        let y: Vec<f64> = out.mixtures.iter().map(|m| f64::from(u8::from(m.active))).collect();
        let n = y.len() as f64;
        let index = |id: &str| out.drugs.iter().position(|d| d.local_id == id).unwrap();
        let members: Vec<Vec<usize>> =
            out.mixtures.iter().map(|m| m.key.local_ids().map(index).collect()).collect();
        // each bit feature: number of constituents carrying the bit
        let mut outside = 0;
        for bit in 0..128 {
            let x: Vec<f64> = members
                .iter()
                .map(|ds| ds.iter().filter(|&&d| out.drugs[d].fingerprint[bit]).count() as f64)
                .collect();
            let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
            let cov: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
            let sx = x.iter().map(|a| (a - mx).powi(2)).sum::<f64>().sqrt();
            let sy = y.iter().map(|b| (b - my).powi(2)).sum::<f64>().sqrt();
            if sx == 0.0 {
                continue;
            }
            let r = cov / (sx * sy);
            // the standard error of r is set by the 32 independent drugs, not the 4960 mixtures
            if r.abs() > 3.0 / (32f64 - 1.0).sqrt() {
                outside += 1;
            }
        }
        assert!(outside <= 2, "{outside} bits correlate with activity");
    }

    #[test]
    fn informative_table_leaks_alpha() {
        let out = simulate(&SimConfig {
            n_drugs: 8,
            arity: 2,
            informative: Some(Informative {
                signal_features: 2,
                noise_sd: 0.0,
            }),
            ..cfg(4)
        })
        .unwrap();
        let table = out.informative.unwrap();
        assert_eq!(table.length(), 130);
        assert_eq!(table.kind(), DescriptorKind::Real);
        for d in &out.drugs {
            assert_eq!(&table.get(&d.local_id).unwrap()[..2], &[d.alpha, d.alpha]);
        }
    }

    #[test]
    fn invalid_configs() {
        for bad in [
            SimConfig { n_drugs: 2, ..cfg(0) },
            SimConfig { arity: 1, ..cfg(0) },
            SimConfig { fingerprint_length: 0, ..cfg(0) },
            SimConfig { noise: Noise::Variance(-1.0), ..cfg(0) },
        ] {
            assert!(simulate(&bad).is_err(), "{bad:?}");
        }
        assert_eq!(Noise::StdDev(0.5).variance(), 0.25);
    }
}
