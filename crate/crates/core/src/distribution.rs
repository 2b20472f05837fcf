//! Measurement outcome distributions keyed by bitstring.
//!
//! The leftmost character of a key is the lowest measured qubit label.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::channels::ConfusionMatrix;
use crate::error::{Error, Result};

/// Probabilities below this are dropped when building from a vector.
const PROB_FLOOR: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq)]
enum Weights {
    Exact(BTreeMap<String, f64>),
    Counts {
        counts: BTreeMap<String, u64>,
        shots: u64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShotDistribution {
    width: usize,
    weights: Weights,
}

fn key_of(index: usize, width: usize) -> String {
    (0..width)
        .map(|b| if index >> (width - 1 - b) & 1 == 1 { '1' } else { '0' })
        .collect()
}

fn check_key(key: &str, width: usize) -> Result<usize> {
    if key.len() != width || !key.bytes().all(|b| b == b'0' || b == b'1') {
        return Err(Error::validation(format!(
            "outcome `{key}` is not a {width}-bit string"
        )));
    }
    Ok(key.bytes().fold(0, |acc, b| acc << 1 | usize::from(b == b'1')))
}

impl ShotDistribution {
    /// From a dense probability vector indexed with the first measured
    /// qubit as the most significant bit. Tiny and negative entries from
    /// round-off are dropped, and the rest renormalized.
    pub fn from_probabilities(width: usize, probs: &[f64]) -> Result<Self> {
        if probs.len() != 1 << width {
            return Err(Error::WidthMismatch(probs.len().trailing_zeros() as usize, width));
        }
        let kept: BTreeMap<String, f64> = probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > PROB_FLOOR)
            .map(|(i, &p)| (key_of(i, width), p))
            .collect();
        let total: f64 = kept.values().sum();
        if !(total > 0.0) || (total - 1.0).abs() > 1e-6 {
            return Err(Error::validation(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(ShotDistribution {
            width,
            weights: Weights::Exact(kept.into_iter().map(|(k, p)| (k, p / total)).collect()),
        })
    }

    pub fn exact(width: usize, probs: BTreeMap<String, f64>) -> Result<Self> {
        for (k, &p) in &probs {
            check_key(k, width)?;
            if !(0.0..=1.0 + 1e-12).contains(&p) {
                return Err(Error::validation(format!("probability of `{k}` is {p}")));
            }
        }
        let total: f64 = probs.values().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::validation(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(ShotDistribution {
            width,
            weights: Weights::Exact(probs.into_iter().filter(|(_, p)| *p > 0.0).collect()),
        })
    }

    pub fn from_counts(width: usize, counts: BTreeMap<String, u64>) -> Result<Self> {
        for k in counts.keys() {
            check_key(k, width)?;
        }
        let shots: u64 = counts.values().sum();
        if shots == 0 {
            return Err(Error::validation("counts hold no shots"));
        }
        Ok(ShotDistribution {
            width,
            weights: Weights::Counts {
                counts: counts.into_iter().filter(|(_, c)| *c > 0).collect(),
                shots,
            },
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.weights, Weights::Exact(_))
    }

    pub fn shots(&self) -> Option<u64> {
        match &self.weights {
            Weights::Exact(_) => None,
            Weights::Counts { shots, .. } => Some(*shots),
        }
    }

    pub fn counts(&self) -> Option<&BTreeMap<String, u64>> {
        match &self.weights {
            Weights::Exact(_) => None,
            Weights::Counts { counts, .. } => Some(counts),
        }
    }

    /// Normalized probabilities of the outcomes with non-zero weight.
    pub fn probabilities(&self) -> BTreeMap<String, f64> {
        match &self.weights {
            Weights::Exact(p) => p.clone(),
            Weights::Counts { counts, shots } => counts
                .iter()
                .map(|(k, &c)| (k.clone(), c as f64 / *shots as f64))
                .collect(),
        }
    }

    pub fn probability(&self, key: &str) -> f64 {
        match &self.weights {
            Weights::Exact(p) => p.get(key).copied().unwrap_or(0.0),
            Weights::Counts { counts, shots } => {
                counts.get(key).map_or(0.0, |&c| c as f64 / *shots as f64)
            }
        }
    }

    /// Dense probability vector of length `2^width`.
    pub fn to_vector(&self) -> Vec<f64> {
        let mut v = vec![0.0; 1 << self.width];
        for (k, p) in self.probabilities() {
            let i = k.bytes().fold(0, |acc, b| acc << 1 | usize::from(b == b'1'));
            v[i] = p;
        }
        v
    }

    /// Applies per-bit readout confusion; `confusion[i]` acts on bit `i`.
    /// The result is exact.
    pub fn with_readout(&self, confusion: &[ConfusionMatrix]) -> Result<Self> {
        if confusion.len() != self.width {
            return Err(Error::WidthMismatch(confusion.len(), self.width));
        }
        let mut v = self.to_vector();
        for (pos, c) in confusion.iter().enumerate() {
            if !c.is_identity() {
                c.apply(&mut v, pos, self.width);
            }
        }
        Self::from_probabilities(self.width, &v)
    }

    /// Draws `shots` outcomes. Equal seeds give equal counts.
    pub fn sample(&self, shots: u64, seed: u64) -> Result<Self> {
        if shots == 0 {
            return Err(Error::validation("shots must be positive"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let probs = self.probabilities();
        let mut remaining_shots = shots;
        let mut remaining_mass = 1.0;
        let mut counts = BTreeMap::new();
        let n = probs.len();
        for (i, (k, p)) in probs.into_iter().enumerate() {
            if remaining_shots == 0 {
                break;
            }
            let c = if i + 1 == n {
                remaining_shots
            } else {
                let q = (p / remaining_mass).clamp(0.0, 1.0);
                Binomial::new(remaining_shots, q)
                    .map_err(|e| Error::validation(e.to_string()))?
                    .sample(&mut rng)
            };
            remaining_shots -= c;
            remaining_mass -= p;
            if c > 0 {
                counts.insert(k, c);
            }
        }
        Self::from_counts(self.width, counts)
    }
}

/// Independent seed for item `index` of a run seeded with `seed`.
pub fn derive_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_add((index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Total variation distance `½ Σ |p − q|` over the union of outcomes.
pub fn tvd(p: &ShotDistribution, q: &ShotDistribution) -> Result<f64> {
    if p.width != q.width {
        return Err(Error::WidthMismatch(p.width, q.width));
    }
    let (pp, qq) = (p.probabilities(), q.probabilities());
    let keys: BTreeSet<&String> = pp.keys().chain(qq.keys()).collect();
    Ok(0.5
        * keys
            .into_iter()
            .map(|k| (pp.get(k).unwrap_or(&0.0) - qq.get(k).unwrap_or(&0.0)).abs())
            .sum::<f64>())
}

/// A distribution with its provenance, as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionRecord {
    pub circuit: String,
    pub seed: Option<u64>,
    /// Time since calibration at which the data was taken, h.
    pub hours: Option<f64>,
    pub distribution: ShotDistribution,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordFile {
    circuit: String,
    width: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    shots: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hours: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    counts: Option<BTreeMap<String, u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    probabilities: Option<BTreeMap<String, f64>>,
}

impl DistributionRecord {
    pub fn to_json(&self) -> String {
        let d = &self.distribution;
        let file = RecordFile {
            circuit: self.circuit.clone(),
            width: d.width,
            shots: d.shots(),
            seed: self.seed,
            hours: self.hours,
            counts: d.counts().cloned(),
            probabilities: d.is_exact().then(|| d.probabilities()),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("record serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        let f: RecordFile =
            serde_json::from_str(text).map_err(|e| Error::parse(origin, e.to_string()))?;
        let distribution = match (f.counts, f.probabilities) {
            (Some(c), None) => {
                let d = ShotDistribution::from_counts(f.width, c)?;
                if f.shots.is_some_and(|s| Some(s) != d.shots()) {
                    return Err(Error::parse(origin, "shots do not match the counts"));
                }
                d
            }
            (None, Some(p)) => ShotDistribution::exact(f.width, p)?,
            _ => {
                return Err(Error::parse(
                    origin,
                    "expected exactly one of `counts` or `probabilities`",
                ))
            }
        };
        Ok(DistributionRecord {
            circuit: f.circuit,
            seed: f.seed,
            hours: f.hours,
            distribution,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text, &path.display().to_string())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}
