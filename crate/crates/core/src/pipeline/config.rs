//! Run configuration files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::datagen::{make_classification, make_regression, Dataset, SynclfSpec, SynregSpec, Task};
use crate::dataio::{load_csv, CsvAdapterSpec};
use crate::error::{Error, Result};
use crate::rankers::RankerSpec;
use crate::sampling::{ResampleSpec, SplitSpec};
use crate::validators::ValidatorSpec;

pub const DATASET_GENERATORS: [&str; 4] = ["synclf", "synclf_hard", "synreg", "csv"];

/// The "hard" classification preset, optionally resized or reseeded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynclfHardSpec {
    #[serde(default)]
    pub n_samples: Option<usize>,
    #[serde(default)]
    pub random_state: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum DatasetSpec {
    Synclf(SynclfSpec),
    SynclfHard(SynclfHardSpec),
    Synreg(SynregSpec),
    Csv(CsvAdapterSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    /// Name used in records and reports; defaults to the generator name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(flatten)]
    pub source: DatasetSpec,
}

impl DatasetConfig {
    pub fn new(source: DatasetSpec) -> Self {
        Self {
            label: None,
            source,
        }
    }

    pub fn labeled(label: &str, source: DatasetSpec) -> Self {
        Self {
            label: Some(label.to_string()),
            source,
        }
    }

    pub fn task(&self) -> Task {
        match &self.source {
            DatasetSpec::Synclf(_) | DatasetSpec::SynclfHard(_) => Task::Classification,
            DatasetSpec::Synreg(_) => Task::Regression,
            DatasetSpec::Csv(c) => c.task,
        }
    }

    pub fn display_name(&self) -> String {
        if let Some(l) = &self.label {
            return l.clone();
        }
        match &self.source {
            DatasetSpec::Synclf(_) => "synclf".into(),
            DatasetSpec::SynclfHard(_) => "synclf_hard".into(),
            DatasetSpec::Synreg(_) => "synreg".into(),
            DatasetSpec::Csv(c) => c
                .path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "csv".into()),
        }
    }

    pub fn load(&self) -> Result<Dataset> {
        let mut ds = match &self.source {
            DatasetSpec::Synclf(s) => make_classification(s)?,
            DatasetSpec::SynclfHard(h) => {
                let mut s = SynclfSpec::synclf_hard();
                if let Some(n) = h.n_samples {
                    s.n_samples = n;
                }
                s.seed = h.random_state;
                make_classification(&s)?
            }
            DatasetSpec::Synreg(s) => make_regression(s)?,
            DatasetSpec::Csv(c) => load_csv(c)?,
        };
        ds.name = self.display_name();
        Ok(ds)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CachePolicy {
    /// Restore stage results when present, compute and store otherwise.
    #[default]
    Use,
    /// Always compute and replace stored results.
    Overwrite,
    Off,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum StorageSpec {
    /// Local directory; defaults to `<output_dir>/artifacts`.
    Local {
        #[serde(default)]
        root: Option<PathBuf>,
    },
}

impl Default for StorageSpec {
    fn default() -> Self {
        StorageSpec::Local { root: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum CallbackSpec {
    /// Appends events to a JSON-lines file, relative to the output directory.
    Jsonl { path: PathBuf },
    /// Logs metric events at info level.
    Log,
}

fn default_bootstraps() -> usize {
    25
}

fn default_cap() -> usize {
    50
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub cv: SplitSpec,
    #[serde(default)]
    pub resample: ResampleSpec,
    pub ranker: RankerSpec,
    #[serde(default)]
    pub validator: ValidatorSpec,
    #[serde(default = "default_bootstraps")]
    pub n_bootstraps: usize,
    #[serde(default = "default_cap")]
    pub subset_cap: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub cache: CachePolicy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub storage: StorageSpec,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub callbacks: Vec<CallbackSpec>,
    /// Worker threads for bootstraps; defaults to the available processors.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
}

impl RunConfig {
    pub fn new(dataset: DatasetConfig, ranker: RankerSpec, validator: ValidatorSpec) -> Self {
        Self {
            dataset,
            cv: SplitSpec::default(),
            resample: ResampleSpec::default(),
            ranker,
            validator,
            n_bootstraps: default_bootstraps(),
            subset_cap: default_cap(),
            seed: 0,
            cache: CachePolicy::default(),
            output_dir: None,
            storage: StorageSpec::default(),
            callbacks: Vec::new(),
            jobs: None,
        }
    }

    pub fn from_yaml_str(text: &str) -> Result<Self> {
        Self::parse(text, None, &[])
    }

    /// Reads a YAML config and applies `key.path=value` overrides.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
            path: Some(path.to_path_buf()),
            line: None,
            message: e.to_string(),
        })?;
        let mut config = Self::parse(&text, Some(path), overrides)?;
        // CSV paths are relative to the config file.
        if let DatasetSpec::Csv(csv) = &mut config.dataset.source {
            if csv.path.is_relative() {
                if let Some(dir) = path.parent() {
                    csv.path = dir.join(&csv.path);
                }
            }
        }
        Ok(config)
    }

    fn parse(text: &str, path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let yaml_err = |e: serde_yaml::Error| Error::Config {
            path: path.map(Path::to_path_buf),
            line: e.location().map(|l| l.line()),
            message: e.to_string(),
        };
        let mut value: serde_yaml::Value = serde_yaml::from_str(text).map_err(yaml_err)?;
        for o in overrides {
            apply_override(&mut value, o).map_err(|message| Error::Config {
                path: path.map(Path::to_path_buf),
                line: None,
                message,
            })?;
        }
        let config: RunConfig = serde_yaml::from_value(value).map_err(yaml_err)?;
        config.validate().map_err(|e| Error::Config {
            path: path.map(Path::to_path_buf),
            line: None,
            message: e.to_string(),
        })?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_bootstraps == 0 {
            return Err(Error::config("n_bootstraps must be >= 1"));
        }
        if self.subset_cap == 0 {
            return Err(Error::config("subset_cap must be >= 1"));
        }
        if self.jobs == Some(0) {
            return Err(Error::config("jobs must be >= 1"));
        }
        let task = self.dataset.task();
        if !self.ranker.capabilities().supports(task) {
            return Err(Error::TaskMismatch(format!(
                "ranker {} does not support {task}",
                self.ranker.name()
            )));
        }
        Ok(())
    }

    pub fn to_yaml(&self) -> Result<String> {
        serde_yaml::to_string(self).map_err(|e| Error::config(e.to_string()))
    }

    /// Everything that determines results: the config minus output location,
    /// storage, callbacks, cache policy and parallelism.
    pub fn content(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(map) = v.as_object_mut() {
            for key in ["output_dir", "storage", "callbacks", "cache", "jobs"] {
                map.remove(key);
            }
        }
        v
    }

    /// Content hash shared by every bootstrap of this configuration.
    pub fn group_id(&self) -> String {
        hash_json(&self.content(), &[])
    }

    /// Content of the ranking stage only: validator and subset cap excluded,
    /// so one fitted ranking serves any number of validators.
    pub fn ranker_content(&self) -> serde_json::Value {
        let mut v = self.content();
        if let Some(map) = v.as_object_mut() {
            for key in ["validator", "subset_cap", "n_bootstraps"] {
                map.remove(key);
            }
        }
        v
    }
}

/// Hex SHA-256 of canonical JSON (sorted keys) plus extra tags.
pub fn hash_json(value: &serde_json::Value, extra: &[&str]) -> String {
    let mut h = Sha256::new();
    h.update(serde_json::to_string(value).expect("json serializes").as_bytes());
    for e in extra {
        h.update([0u8]);
        h.update(e.as_bytes());
    }
    hex::encode(h.finalize())
}

/// Sets `a.b.c=value` in a YAML tree, creating mappings along the way.
/// The value is parsed as a YAML scalar or flow collection.
pub fn apply_override(root: &mut serde_yaml::Value, assignment: &str) -> std::result::Result<(), String> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| format!("override {assignment:?} is not of the form key=value"))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(format!("override {assignment:?} has an empty key segment"));
    }
    let value: serde_yaml::Value =
        serde_yaml::from_str(raw).map_err(|e| format!("override {assignment:?}: {e}"))?;
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if !node.is_mapping() {
            if node.is_null() {
                *node = serde_yaml::Value::Mapping(Default::default());
            } else {
                return Err(format!("override {assignment:?}: {} is not a mapping", parts[..i].join(".")));
            }
        }
        let map = node.as_mapping_mut().expect("checked above");
        let k = serde_yaml::Value::String(part.to_string());
        if i + 1 == parts.len() {
            map.insert(k, value);
            return Ok(());
        }
        node = map.entry(k).or_insert(serde_yaml::Value::Null);
    }
    Ok(())
}
