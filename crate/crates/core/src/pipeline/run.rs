//! Resample, rank and validate over bootstraps.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rand::seq::index;
use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::{Dataset, Task};
use crate::error::{Error, Result};
use crate::metrics::{importance_logloss, importance_r2, support_accuracy};
use crate::persistence::{
    atomic_write, seal, unseal, Callback, Callbacks, Event, JsonlCallback, LocalStorage,
    StorageProvider,
};
use crate::rankers::FeatureRanking;
use crate::ranking::{ImportanceVector, RankVector, SupportVector};
use crate::sampling::{resample, split, stream};

use super::config::{hash_json, CachePolicy, CallbackSpec, RunConfig, StorageSpec};

pub const SCHEMA_VERSION: u32 = 1;
pub const RECORDS_FILE: &str = "records.jsonl";
pub const CONFIG_ECHO_FILE: &str = "config.yaml";

/// A-priori metrics against the dataset's ground truth.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AprioriMetrics {
    pub r2: Option<f64>,
    pub logloss: Option<f64>,
    pub support_accuracy: Option<f64>,
}

/// Wall-clock information; the only part of a record that varies between
/// identical runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub fit_seconds: f64,
    pub started_at_ms: u64,
    pub finished_at_ms: u64,
}

/// One bootstrap of one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema_version: u32,
    /// Content hash of the configuration, bootstrap index and sample size.
    pub run_id: String,
    /// Content hash shared by all bootstraps of the configuration.
    pub group_id: String,
    pub dataset: String,
    pub task: Task,
    pub ranker: String,
    pub validator: String,
    pub bootstrap: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_size: Option<usize>,
    pub n_features: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub importances: Option<ImportanceVector>,
    pub support: Option<SupportVector>,
    pub ranking: Option<RankVector>,
    /// `(k, score)` for the top-k prefixes, k = 1..=min(p, subset_cap).
    pub curve: Vec<(usize, f64)>,
    /// Score of the ranker's own support subset, when it reports one.
    pub support_score: Option<f64>,
    pub metrics: AprioriMetrics,
    pub timing: Timing,
}

/// Stage results stored in the cache under the validator key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Validation {
    curve: Vec<(usize, f64)>,
    support_score: Option<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct RunOutcome {
    /// Sorted by sample size, then bootstrap index.
    pub records: Vec<RunRecord>,
    pub ranker_fits: usize,
    pub ranker_restored: usize,
    pub validations_restored: usize,
    pub output_dir: Option<PathBuf>,
}

/// Executes every bootstrap of `config` and persists the records.
pub fn run(config: &RunConfig) -> Result<RunOutcome> {
    run_with_callbacks(config, &mut Callbacks::new())
}

/// Like [`run`], delivering events to `callbacks` in addition to those
/// named in the configuration.
pub fn run_with_callbacks(config: &RunConfig, callbacks: &mut Callbacks) -> Result<RunOutcome> {
    let plan = vec![None];
    execute(config, &plan, config.n_bootstraps, callbacks)
}

/// Runs `n_bootstraps` bootstraps at each training-set size in `sizes`.
///
/// Each size draws a seeded subset of the training split (without
/// replacement) before bootstrapping; the test split is untouched. A size
/// equal to the training split keeps it whole.
pub fn sweep_sample_size(
    config: &RunConfig,
    sizes: &[usize],
    n_bootstraps: usize,
) -> Result<RunOutcome> {
    if sizes.is_empty() {
        return Err(Error::config("sweep needs at least one sample size"));
    }
    let plan: Vec<Option<usize>> = sizes.iter().map(|&s| Some(s)).collect();
    execute(config, &plan, n_bootstraps, &mut Callbacks::new())
}

/// Parses `a:b:step` into `a, a+step, ..., <= b`.
pub fn parse_sizes(spec: &str) -> Result<Vec<usize>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || Error::config(format!("sizes {spec:?} must look like start:stop:step"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let nums: Vec<usize> = parts
        .iter()
        .map(|p| p.trim().parse::<usize>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    let (start, stop, step) = (nums[0], nums[1], nums[2]);
    if step == 0 || start == 0 || start > stop {
        return Err(bad());
    }
    Ok((start..=stop).step_by(step).collect())
}

struct Job {
    sample_size: Option<usize>,
    bootstrap: usize,
}

struct JobOutput {
    record: RunRecord,
    artifacts: Vec<(String, Vec<u8>)>,
    fitted: bool,
    ranker_restored: bool,
    validation_restored: bool,
}

struct Shared<'a> {
    config: &'a RunConfig,
    dataset: &'a Dataset,
    test: &'a [usize],
    in_test: Vec<bool>,
    pools: BTreeMap<Option<usize>, Vec<usize>>,
    storage: Option<LocalStorage>,
    group_id: String,
    ranker_content: serde_json::Value,
    content: serde_json::Value,
}

fn execute(
    config: &RunConfig,
    plan: &[Option<usize>],
    n_bootstraps: usize,
    callbacks: &mut Callbacks,
) -> Result<RunOutcome> {
    config.validate()?;
    if n_bootstraps == 0 {
        return Err(Error::config("n_bootstraps must be >= 1"));
    }
    let dataset = config.dataset.load()?;
    if !config.ranker.capabilities().supports(dataset.task) {
        return Err(Error::TaskMismatch(format!(
            "ranker {} does not support {}",
            config.ranker.name(),
            dataset.task
        )));
    }
    let (train, test) = split(dataset.n_samples(), &config.cv)?;
    let mut pools = BTreeMap::new();
    for &size in plan {
        pools.insert(size, size_pool(config, &train, size)?);
    }
    let mut in_test = vec![false; dataset.n_samples()];
    for &i in &test {
        in_test[i] = true;
    }

    let storage = match (config.cache, &config.storage) {
        (CachePolicy::Off, _) => None,
        (_, StorageSpec::Local { root: Some(root) }) => Some(LocalStorage::new(root)),
        (_, StorageSpec::Local { root: None }) => match &config.output_dir {
            Some(dir) => Some(LocalStorage::new(dir.join("artifacts"))),
            None => {
                log::info!("no output_dir or storage root: caching disabled");
                None
            }
        },
    };

    for spec in &config.callbacks {
        callbacks.register(build_callback(spec, config.output_dir.as_deref()));
    }
    callbacks.emit(&Event::Config {
        config: serde_json::to_value(config)?,
    });

    let shared = Shared {
        config,
        dataset: &dataset,
        test: &test,
        in_test,
        pools,
        storage,
        group_id: config.group_id(),
        ranker_content: config.ranker_content(),
        content: config.content(),
    };
    let jobs: Vec<Job> = plan
        .iter()
        .flat_map(|&sample_size| {
            (0..n_bootstraps).map(move |bootstrap| Job {
                sample_size,
                bootstrap,
            })
        })
        .collect();

    let threads = config
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let outputs: Vec<Result<JobOutput>> = if threads <= 1 {
        jobs.iter().map(|j| run_job(&shared, j)).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::config(format!("thread pool: {e}")))?;
        pool.install(|| jobs.par_iter().map(|j| run_job(&shared, j)).collect())
    };

    // Single writer from here on.
    let mut outcome = RunOutcome {
        output_dir: config.output_dir.clone(),
        ..RunOutcome::default()
    };
    for out in outputs {
        let out = out?;
        if let Some(storage) = &shared.storage {
            for (key, bytes) in &out.artifacts {
                if let Err(e) = storage.save(key, bytes) {
                    log::warn!("could not cache {key}: {e}");
                }
            }
        }
        outcome.ranker_fits += usize::from(out.fitted);
        outcome.ranker_restored += usize::from(out.ranker_restored);
        outcome.validations_restored += usize::from(out.validation_restored);
        emit_record_events(callbacks, &out.record);
        outcome.records.push(out.record);
    }
    outcome
        .records
        .sort_by_key(|r| (r.sample_size, r.bootstrap));

    if let Some(dir) = &config.output_dir {
        fs::create_dir_all(dir)?;
        write_records(&dir.join(RECORDS_FILE), &outcome.records)?;
        atomic_write(&dir.join(CONFIG_ECHO_FILE), config.to_yaml()?.as_bytes())?;
    }
    Ok(outcome)
}

fn build_callback(spec: &CallbackSpec, output_dir: Option<&Path>) -> Box<dyn Callback> {
    match spec {
        CallbackSpec::Jsonl { path } => {
            let path = match output_dir {
                Some(dir) if path.is_relative() => dir.join(path),
                _ => path.clone(),
            };
            Box::new(JsonlCallback::new(path))
        }
        CallbackSpec::Log => Box::new(LogCallback),
    }
}

struct LogCallback;

impl Callback for LogCallback {
    fn on_metric(&mut self, name: &str, value: f64, tags: &BTreeMap<String, String>) -> Result<()> {
        log::info!("{name} = {value} {tags:?}");
        Ok(())
    }
}

fn emit_record_events(callbacks: &mut Callbacks, r: &RunRecord) {
    if callbacks.is_empty() {
        return;
    }
    let mut tags = vec![
        ("dataset", r.dataset.clone()),
        ("ranker", r.ranker.clone()),
        ("bootstrap", r.bootstrap.to_string()),
    ];
    if let Some(s) = r.sample_size {
        tags.push(("sample_size", s.to_string()));
    }
    callbacks.emit(&Event::metric("fit_time", r.timing.fit_seconds, &tags));
    if !r.curve.is_empty() {
        let mean = r.curve.iter().map(|p| p.1).sum::<f64>() / r.curve.len() as f64;
        callbacks.emit(&Event::metric("mean_validation_score", mean, &tags));
    }
    for (name, v) in [
        ("r2", r.metrics.r2),
        ("logloss", r.metrics.logloss),
        ("support_accuracy", r.metrics.support_accuracy),
    ] {
        if let Some(v) = v {
            callbacks.emit(&Event::metric(name, v, &tags));
        }
    }
    callbacks.emit(&Event::Table {
        name: "validation_curve".into(),
        rows: r
            .curve
            .iter()
            .map(|(k, s)| serde_json::json!({"bootstrap": r.bootstrap, "k": k, "score": s}))
            .collect(),
    });
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

fn stage_key(stage: &str, content: &serde_json::Value, job: &Job) -> String {
    let size = job.sample_size.map_or("full".to_string(), |s| s.to_string());
    let hash = hash_json(content, &[stage, &job.bootstrap.to_string(), &size]);
    format!("{stage}/{hash}.bin")
}

/// Restores a cached stage result, treating unreadable artifacts as absent.
fn restore<T: serde::de::DeserializeOwned>(
    storage: Option<&LocalStorage>,
    policy: CachePolicy,
    key: &str,
    kind: &str,
) -> Option<T> {
    if policy != CachePolicy::Use {
        return None;
    }
    let bytes = match storage?.restore(key) {
        Ok(Some(b)) => b,
        Ok(None) => return None,
        Err(e) => {
            log::warn!("cache read {key} failed: {e}");
            return None;
        }
    };
    let decoded = unseal(key, kind, &bytes).and_then(|p| Ok(serde_json::from_slice(&p)?));
    match decoded {
        Ok(v) => Some(v),
        Err(e) => {
            log::warn!("ignoring cached {key}: {e}");
            None
        }
    }
}

/// The training rows a sample-size point draws from: all of `train`, or a
/// seeded subset of `size` rows.
fn size_pool(config: &RunConfig, train: &[usize], size: Option<usize>) -> Result<Vec<usize>> {
    match size {
        None => Ok(train.to_vec()),
        Some(s) if s > train.len() => Err(Error::SizeExceedsDataset {
            size: s,
            available: train.len(),
        }),
        Some(s) if s == train.len() => Ok(train.to_vec()),
        Some(s) => {
            let mut rng = stream(config.seed, "sample_size", s as u64);
            let mut picked: Vec<usize> = index::sample(&mut rng, train.len(), s)
                .into_iter()
                .map(|i| train[i])
                .collect();
            picked.sort_unstable();
            Ok(picked)
        }
    }
}

fn bootstrap_sample(config: &RunConfig, pool: &[usize], bootstrap: usize) -> Result<Vec<usize>> {
    resample(pool, &config.resample.with_seed(bootstrap as u64))
}

/// `(train, test)` row indices for one bootstrap, exactly as a run uses
/// them: the rows the ranker is fitted on (a multiset) and the held-out rows.
pub fn bootstrap_rows(
    config: &RunConfig,
    n_samples: usize,
    sample_size: Option<usize>,
    bootstrap: usize,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let (train, test) = split(n_samples, &config.cv)?;
    let pool = size_pool(config, &train, sample_size)?;
    Ok((bootstrap_sample(config, &pool, bootstrap)?, test))
}

fn run_job(shared: &Shared<'_>, job: &Job) -> Result<JobOutput> {
    let started_at_ms = now_ms();
    let config = shared.config;
    let ds = shared.dataset;
    let train = bootstrap_sample(config, &shared.pools[&job.sample_size], job.bootstrap)?;
    if let Some(&leak) = train.iter().find(|&&i| shared.in_test[i]) {
        return Err(Error::DegenerateData(format!(
            "resampled training row {leak} belongs to the test split"
        )));
    }
    let x_train = ds.x.select_rows(&train);
    let y_train: Vec<f64> = train.iter().map(|&i| ds.y[i]).collect();
    let mut artifacts = Vec::new();

    let ranker_key = stage_key("ranker", &shared.ranker_content, job);
    let cached: Option<FeatureRanking> =
        restore(shared.storage.as_ref(), config.cache, &ranker_key, "ranking");
    let ranker_restored = cached.is_some();
    let ranking = match cached {
        Some(r) => r,
        None => {
            let seed = stream(config.seed, "ranker", job.bootstrap as u64).next_u64();
            let r = config.ranker.fit_resampled(&x_train, &y_train, ds.task, seed, Some(&train))?;
            if shared.storage.is_some() {
                artifacts.push((ranker_key, seal("ranking", &serde_json::to_vec(&r)?)));
            }
            r
        }
    };
    ranking.validate(ds.n_features())?;

    let val_key = stage_key("validator", &shared.content, job);
    let cached: Option<Validation> =
        restore(shared.storage.as_ref(), config.cache, &val_key, "validation");
    let validation_restored = cached.is_some();
    let validation = match cached {
        Some(v) => v,
        None => {
            let v = validate(config, ds, &x_train, &y_train, shared.test, &ranking)?;
            if shared.storage.is_some() {
                artifacts.push((val_key, seal("validation", &serde_json::to_vec(&v)?)));
            }
            v
        }
    };

    let metrics = apriori_metrics(ds, &ranking)?;
    let size_tag = job.sample_size.map_or("full".to_string(), |s| s.to_string());
    let record = RunRecord {
        schema_version: SCHEMA_VERSION,
        run_id: hash_json(&shared.content, &["run", &job.bootstrap.to_string(), &size_tag]),
        group_id: shared.group_id.clone(),
        dataset: ds.name.clone(),
        task: ds.task,
        ranker: config.ranker.name().to_string(),
        validator: config.validator.name().to_string(),
        bootstrap: job.bootstrap,
        sample_size: job.sample_size,
        n_features: ds.n_features(),
        n_train: train.len(),
        n_test: shared.test.len(),
        importances: ranking.importances.clone(),
        support: ranking.support.clone(),
        ranking: ranking.ranking.clone(),
        curve: validation.curve,
        support_score: validation.support_score,
        metrics,
        timing: Timing {
            fit_seconds: ranking.fit_time_seconds,
            started_at_ms,
            finished_at_ms: now_ms(),
        },
    };
    Ok(JobOutput {
        record,
        artifacts,
        fitted: !ranker_restored,
        ranker_restored,
        validation_restored,
    })
}

fn validate(
    config: &RunConfig,
    ds: &Dataset,
    x_train: &crate::matrix::Matrix,
    y_train: &[f64],
    test: &[usize],
    ranking: &FeatureRanking,
) -> Result<Validation> {
    let x_test = ds.x.select_rows(test);
    let y_test: Vec<f64> = test.iter().map(|&i| ds.y[i]).collect();
    let cap = ds.n_features().min(config.subset_cap);
    let order = ranking.order();
    let curve = match &order {
        Some(order) => {
            let scores = config.validator.prefix_scores(
                ds.task,
                x_train,
                y_train,
                &x_test,
                &y_test,
                &order[..cap],
            )?;
            scores.into_iter().enumerate().map(|(i, s)| (i + 1, s)).collect()
        }
        None => Vec::new(),
    };
    let support_score = match &ranking.support {
        None => None,
        Some(s) => {
            let selected = s.selected();
            let k = selected.len();
            let is_prefix = order.as_ref().is_some_and(|o| {
                k <= cap && {
                    let mut prefix = o[..k].to_vec();
                    prefix.sort_unstable();
                    prefix == selected
                }
            });
            if k == 0 {
                None
            } else if is_prefix {
                Some(curve[k - 1].1)
            } else {
                let pred = config.validator.fit_predict(
                    ds.task,
                    &x_train.select_cols(&selected),
                    y_train,
                    &x_test.select_cols(&selected),
                )?;
                Some(crate::validators::score(ds.task, &y_test, &pred)?)
            }
        }
    };
    Ok(Validation {
        curve,
        support_score,
    })
}

fn apriori_metrics(ds: &Dataset, ranking: &FeatureRanking) -> Result<AprioriMetrics> {
    let Some(gt) = &ds.ground_truth else {
        return Ok(AprioriMetrics::default());
    };
    let mut m = AprioriMetrics::default();
    if let Some(w) = &ranking.importances {
        m.r2 = match importance_r2(&gt.importances, w) {
            Ok(v) => Some(v),
            Err(Error::DegenerateTruth) => None,
            Err(e) => return Err(e),
        };
        m.logloss = Some(importance_logloss(&gt.relevant, w)?);
    }
    if let Some(s) = &ranking.support {
        m.support_accuracy = Some(support_accuracy(&gt.relevant, s)?);
    }
    Ok(m)
}

pub fn write_records(path: &Path, records: &[RunRecord]) -> Result<()> {
    let mut text = String::new();
    for r in records {
        text.push_str(&serde_json::to_string(r)?);
        text.push('\n');
    }
    atomic_write(path, text.as_bytes())
}

/// Reads a JSON-lines record file, rejecting unknown schema versions.
pub fn read_records(path: &Path) -> Result<Vec<RunRecord>> {
    let text = fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
        _ => e.into(),
    })?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let value: serde_json::Value = serde_json::from_str(line)?;
            let version = value.get("schema_version").and_then(|v| v.as_u64());
            if version != Some(SCHEMA_VERSION as u64) {
                return Err(Error::ParseError {
                    row: i + 1,
                    col: 0,
                    message: format!("unsupported schema_version {version:?}"),
                });
            }
            Ok(serde_json::from_value(value)?)
        })
        .collect()
}

/// Every `records.jsonl` below `dir`, in sorted path order.
pub fn find_record_files(dir: &Path) -> Result<Vec<PathBuf>> {
    fn walk(dir: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
        let mut entries: Vec<_> = fs::read_dir(dir)?.collect::<std::io::Result<_>>()?;
        entries.sort_by_key(|e| e.file_name());
        for e in entries {
            let path = e.path();
            if path.is_dir() {
                walk(&path, out)?;
            } else if path.file_name().is_some_and(|n| n == RECORDS_FILE) {
                out.push(path);
            }
        }
        Ok(())
    }
    if !dir.exists() {
        return Err(Error::FileNotFound(dir.to_path_buf()));
    }
    let mut out = Vec::new();
    if dir.is_file() {
        out.push(dir.to_path_buf());
    } else {
        walk(dir, &mut out)?;
    }
    Ok(out)
}

/// Serializes records with timing removed, for comparing runs byte by byte.
pub fn strip_timing(records: &[RunRecord]) -> Result<String> {
    let mut out = String::new();
    for r in records {
        let mut v = serde_json::to_value(r)?;
        if let Some(map) = v.as_object_mut() {
            map.remove("timing");
        }
        out.push_str(&serde_json::to_string(&v)?);
        out.push('\n');
    }
    Ok(out)
}
