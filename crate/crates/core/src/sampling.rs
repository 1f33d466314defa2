//! Train/test splitting and bootstrap resampling.
//!
//! All randomness goes through [`stream`], which derives an independent
//! ChaCha generator from `(seed, purpose tag, index)`. Two consumers with
//! different tags never share a stream, so adding a ranker or a validator
//! cannot shift the rows a dataset generator or a splitter draws.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Independent random stream for one consumer.
pub fn stream(seed: u64, tag: &str, index: u64) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update((tag.len() as u64).to_le_bytes());
    h.update(tag.as_bytes());
    h.update(index.to_le_bytes());
    ChaCha8Rng::from_seed(h.finalize().into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum SplitSpec {
    Holdout {
        test_size: f64,
        #[serde(default, rename = "random_state")]
        seed: u64,
    },
    Kfold {
        n_splits: usize,
        #[serde(default)]
        shuffle: bool,
        #[serde(default)]
        fold: usize,
        #[serde(default, rename = "random_state")]
        seed: u64,
    },
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec::Holdout {
            test_size: 0.2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResampleMethod {
    Bootstrap,
    Shuffle,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResampleSpec {
    #[serde(rename = "name")]
    pub method: ResampleMethod,
    #[serde(default = "one")]
    pub sample_size: f64,
    /// Set per bootstrap by the pipeline; the bootstrap number is the seed.
    #[serde(default, skip_serializing)]
    pub seed: u64,
}

fn one() -> f64 {
    1.0
}

impl Default for ResampleSpec {
    fn default() -> Self {
        Self {
            method: ResampleMethod::Bootstrap,
            sample_size: 1.0,
            seed: 0,
        }
    }
}

impl ResampleSpec {
    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }
}

/// `ceil(fraction * n)` without floating-point noise pushing exact products up.
fn fraction_count(fraction: f64, n: usize) -> usize {
    (fraction * n as f64 - 1e-9).ceil().max(0.0) as usize
}

/// Returns `(train, test)` indices into `0..n`, each sorted ascending.
pub fn split(n: usize, spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    match *spec {
        SplitSpec::Holdout { test_size, seed } => {
            if !(test_size > 0.0 && test_size < 1.0) {
                return Err(Error::SpecInvalid(format!(
                    "holdout test_size must be in (0, 1), got {test_size}"
                )));
            }
            let n_test = fraction_count(test_size, n);
            if n_test == 0 || n_test >= n {
                return Err(Error::SpecInvalid(format!(
                    "holdout of {test_size} leaves an empty side for n={n}"
                )));
            }
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut stream(seed, "split", 0));
            let mut test = perm[..n_test].to_vec();
            let mut train = perm[n_test..].to_vec();
            test.sort_unstable();
            train.sort_unstable();
            Ok((train, test))
        }
        SplitSpec::Kfold {
            n_splits,
            shuffle,
            fold,
            seed,
        } => {
            if n_splits < 2 || n_splits > n {
                return Err(Error::SpecInvalid(format!(
                    "kfold needs 2 <= n_splits <= n, got n_splits={n_splits}, n={n}"
                )));
            }
            if fold >= n_splits {
                return Err(Error::SpecInvalid(format!(
                    "fold {fold} out of range for {n_splits} splits"
                )));
            }
            let mut perm: Vec<usize> = (0..n).collect();
            if shuffle {
                perm.shuffle(&mut stream(seed, "split", 0));
            }
            let base = n / n_splits;
            let extra = n % n_splits;
            let start: usize = (0..fold).map(|f| base + usize::from(f < extra)).sum();
            let len = base + usize::from(fold < extra);
            let mut test = perm[start..start + len].to_vec();
            let mut train: Vec<usize> = perm[..start]
                .iter()
                .chain(&perm[start + len..])
                .copied()
                .collect();
            test.sort_unstable();
            train.sort_unstable();
            Ok((train, test))
        }
    }
}

/// Draws a resample of `indices`; the result may contain repeats for bootstrap.
pub fn resample(indices: &[usize], spec: &ResampleSpec) -> Result<Vec<usize>> {
    if indices.is_empty() {
        return Err(Error::SpecInvalid("cannot resample an empty index set".into()));
    }
    if !(spec.sample_size > 0.0 && spec.sample_size <= 1.0) {
        return Err(Error::SpecInvalid(format!(
            "sample_size must be in (0, 1], got {}",
            spec.sample_size
        )));
    }
    let size = fraction_count(spec.sample_size, indices.len()).max(1);
    match spec.method {
        ResampleMethod::None => Ok(indices.to_vec()),
        ResampleMethod::Bootstrap => {
            let mut rng = stream(spec.seed, "resample", 0);
            Ok((0..size)
                .map(|_| indices[rng.random_range(0..indices.len())])
                .collect())
        }
        ResampleMethod::Shuffle => {
            let mut rng = stream(spec.seed, "resample", 0);
            let mut out = indices.to_vec();
            out.shuffle(&mut rng);
            out.truncate(size);
            Ok(out)
        }
    }
}

pub fn bootstrap_mean(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InsufficientSamples { needed: 1, got: 0 });
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// Unbiased sample variance over bootstraps.
pub fn bootstrap_variance(values: &[f64]) -> Result<f64> {
    if values.len() < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            got: values.len(),
        });
    }
    let mean = bootstrap_mean(values)?;
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    Ok(ss / (values.len() - 1) as f64)
}
