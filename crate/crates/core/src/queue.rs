//! Persistent FIFO job queue shared through a directory.
//!
//! Every state change is a single `rename`, so concurrent workers (threads,
//! processes or machines on a shared filesystem) never claim or finish the
//! same job twice. Mutable job state lives in the file name:
//!
//! ```text
//! queued/<stamp>_<id>_a<attempts>_nb<not_before_ms>.json
//! running/<stamp>_<id>_a<attempts>_w<worker>_c<claimed_ms>_l<lease_until_ms>.json
//! done/<stamp>_<id>_a<attempts>.json
//! failed/<stamp>_<id>_a<attempts>.json
//! ```
//!
//! The file body holds the immutable payload. Attempt errors are appended to
//! `logs/<id>.jsonl` and terminal jobs get `logs/<id>.outcome.json`.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::persistence::atomic_write;
use crate::pipeline::RunConfig;

pub const DEFAULT_MAX_RETRIES: u32 = 3;
pub const QUEUE_ENV: &str = "RANKBENCH_QUEUE";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobState {
    Queued,
    Running,
    Done,
    Failed,
}

impl JobState {
    pub const ALL: [JobState; 4] = [
        JobState::Queued,
        JobState::Running,
        JobState::Done,
        JobState::Failed,
    ];

    pub fn dir_name(self) -> &'static str {
        match self {
            JobState::Queued => "queued",
            JobState::Running => "running",
            JobState::Done => "done",
            JobState::Failed => "failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Job {
    pub id: String,
    pub payload: RunConfig,
    pub state: JobState,
    /// Claims so far, including the current one while running.
    pub attempts: u32,
    pub max_retries: u32,
    pub enqueued_at_ms: u64,
    pub started_at_ms: Option<u64>,
    pub finished_at_ms: Option<u64>,
    pub worker: Option<String>,
    pub errors: Vec<String>,
    file_name: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Success,
    Failure(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct QueueStatus {
    pub queued: usize,
    pub running: usize,
    pub done: usize,
    pub failed: usize,
}

impl QueueStatus {
    pub fn total(&self) -> usize {
        self.queued + self.running + self.done + self.failed
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueueOptions {
    /// A running job whose worker has been silent this long is reclaimed.
    pub lease: Duration,
    /// Retry delay per attempt already made.
    pub backoff: Duration,
    /// Sleep between polls while waiting for work.
    pub poll: Duration,
}

impl Default for QueueOptions {
    fn default() -> Self {
        Self {
            lease: Duration::from_secs(3600),
            backoff: Duration::from_secs(30),
            poll: Duration::from_secs(1),
        }
    }
}

/// Storage for queued jobs; [`DirQueue`] is the shared-directory backend.
pub trait QueueBackend: Send + Sync {
    fn enqueue(&self, config: &RunConfig, max_retries: u32) -> Result<String>;
    /// Moves the oldest eligible queued job to running under `worker`.
    fn claim_next(&self, worker: &str) -> Result<Option<Job>>;
    /// Finishes a running job, returning its new state.
    fn complete(&self, job: &Job, outcome: Outcome) -> Result<JobState>;
    /// Returns jobs with expired leases to the queue; counts them.
    fn reap_expired(&self) -> Result<usize>;
    fn status(&self) -> Result<QueueStatus>;
    fn list(&self, state: JobState) -> Result<Vec<Job>>;
}

#[derive(Debug, Serialize, Deserialize)]
struct JobBody {
    id: String,
    max_retries: u32,
    enqueued_at_ms: u64,
    payload: RunConfig,
}

#[derive(Debug, Serialize, Deserialize)]
struct LogEntry {
    attempt: u32,
    worker: String,
    at_ms: u64,
    error: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct OutcomeFile {
    state: JobState,
    attempts: u32,
    finished_at_ms: u64,
    worker: String,
    errors: Vec<String>,
}

/// Parsed file name.
#[derive(Debug, Clone, PartialEq)]
struct Name {
    stamp: u64,
    id: String,
    attempts: u32,
    not_before_ms: u64,
    worker: Option<String>,
    claimed_ms: u64,
    lease_until_ms: u64,
}

impl Name {
    fn queued(&self) -> String {
        format!(
            "{:020}_{}_a{}_nb{}.json",
            self.stamp, self.id, self.attempts, self.not_before_ms
        )
    }

    fn running(&self) -> String {
        format!(
            "{:020}_{}_a{}_w{}_c{}_l{}.json",
            self.stamp,
            self.id,
            self.attempts,
            self.worker.as_deref().unwrap_or(""),
            self.claimed_ms,
            self.lease_until_ms
        )
    }

    fn terminal(&self) -> String {
        format!("{:020}_{}_a{}.json", self.stamp, self.id, self.attempts)
    }

    fn parse(file: &str) -> Option<Name> {
        let stem = file.strip_suffix(".json")?;
        let mut parts = stem.split('_');
        let stamp = parts.next()?.parse().ok()?;
        let id = parts.next()?.to_string();
        let attempts = parts.next()?.strip_prefix('a')?.parse().ok()?;
        let mut name = Name {
            stamp,
            id,
            attempts,
            not_before_ms: 0,
            worker: None,
            claimed_ms: 0,
            lease_until_ms: 0,
        };
        for part in parts {
            if let Some(v) = part.strip_prefix("nb") {
                name.not_before_ms = v.parse().ok()?;
            } else if let Some(v) = part.strip_prefix('w') {
                name.worker = Some(v.to_string());
            } else if let Some(v) = part.strip_prefix('c') {
                name.claimed_ms = v.parse().ok()?;
            } else if let Some(v) = part.strip_prefix('l') {
                name.lease_until_ms = v.parse().ok()?;
            } else {
                return None;
            }
        }
        Some(name)
    }
}

pub fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

/// Strictly increasing within the process, wall-clock ordered across processes.
fn next_stamp() -> u64 {
    static LAST: AtomicU64 = AtomicU64::new(0);
    let now = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_micros() as u64);
    let mut prev = LAST.load(Ordering::Relaxed);
    loop {
        let next = now.max(prev + 1);
        match LAST.compare_exchange(prev, next, Ordering::Relaxed, Ordering::Relaxed) {
            Ok(_) => return next,
            Err(p) => prev = p,
        }
    }
}

fn valid_worker_id(worker: &str) -> bool {
    !worker.is_empty()
        && worker
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '.')
}

/// A queue rooted at a shared directory.
#[derive(Debug, Clone)]
pub struct DirQueue {
    root: PathBuf,
    options: QueueOptions,
}

impl DirQueue {
    /// Opens (creating if needed) the queue at `root`.
    pub fn open(root: impl Into<PathBuf>, options: QueueOptions) -> Result<Self> {
        let root = root.into();
        for state in JobState::ALL {
            fs::create_dir_all(root.join(state.dir_name()))?;
        }
        fs::create_dir_all(root.join("logs"))?;
        fs::create_dir_all(root.join("tmp"))?;
        Ok(Self { root, options })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn options(&self) -> &QueueOptions {
        &self.options
    }

    fn dir(&self, state: JobState) -> PathBuf {
        self.root.join(state.dir_name())
    }

    fn names(&self, state: JobState) -> Result<Vec<(String, Name)>> {
        let mut out = Vec::new();
        for entry in fs::read_dir(self.dir(state))? {
            let file = entry?.file_name().to_string_lossy().into_owned();
            if let Some(name) = Name::parse(&file) {
                out.push((file, name));
            }
        }
        out.sort_by(|a, b| (a.1.stamp, &a.1.id).cmp(&(b.1.stamp, &b.1.id)));
        Ok(out)
    }

    fn log_path(&self, id: &str) -> PathBuf {
        self.root.join("logs").join(format!("{id}.jsonl"))
    }

    fn outcome_path(&self, id: &str) -> PathBuf {
        self.root.join("logs").join(format!("{id}.outcome.json"))
    }

    fn errors(&self, id: &str) -> Result<Vec<String>> {
        let text = match fs::read_to_string(self.log_path(id)) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(e.into()),
        };
        Ok(text
            .lines()
            .filter_map(|l| serde_json::from_str::<LogEntry>(l).ok())
            .map(|e| e.error)
            .collect())
    }

    fn load(&self, state: JobState, file: &str, name: &Name) -> Result<Job> {
        let body: JobBody = serde_json::from_slice(&fs::read(self.dir(state).join(file))?)?;
        let outcome = match state {
            JobState::Done | JobState::Failed => fs::read(self.outcome_path(&name.id))
                .ok()
                .and_then(|b| serde_json::from_slice::<OutcomeFile>(&b).ok()),
            _ => None,
        };
        Ok(Job {
            id: body.id,
            payload: body.payload,
            state,
            attempts: name.attempts,
            max_retries: body.max_retries,
            enqueued_at_ms: body.enqueued_at_ms,
            started_at_ms: (state == JobState::Running).then_some(name.claimed_ms),
            finished_at_ms: outcome.as_ref().map(|o| o.finished_at_ms),
            worker: name
                .worker
                .clone()
                .or_else(|| outcome.as_ref().map(|o| o.worker.clone())),
            errors: self.errors(&name.id)?,
            file_name: file.to_string(),
        })
    }

    /// Records a failed attempt and moves the job on from running.
    fn fail_attempt(&self, file: &str, name: &Name, max_retries: u32, error: &str) -> Result<JobState> {
        let worker = name.worker.clone().unwrap_or_default();
        let entry = LogEntry {
            attempt: name.attempts,
            worker: worker.clone(),
            at_ms: now_ms(),
            error: error.to_string(),
        };
        let mut line = serde_json::to_string(&entry)?;
        line.push('\n');
        OpenOptions::new()
            .create(true)
            .append(true)
            .open(self.log_path(&name.id))?
            .write_all(line.as_bytes())?;

        let from = self.dir(JobState::Running).join(file);
        if name.attempts <= max_retries {
            let backoff = self.options.backoff.as_millis() as u64 * name.attempts as u64;
            let next = Name {
                not_before_ms: now_ms() + backoff,
                worker: None,
                claimed_ms: 0,
                lease_until_ms: 0,
                ..name.clone()
            };
            self.transition(&from, &self.dir(JobState::Queued).join(next.queued()))?;
            Ok(JobState::Queued)
        } else {
            self.finish(&from, name, JobState::Failed, worker)?;
            Ok(JobState::Failed)
        }
    }

    fn finish(&self, from: &Path, name: &Name, state: JobState, worker: String) -> Result<()> {
        self.transition(from, &self.dir(state).join(name.terminal()))?;
        let outcome = OutcomeFile {
            state,
            attempts: name.attempts,
            finished_at_ms: now_ms(),
            worker,
            errors: self.errors(&name.id)?,
        };
        atomic_write(
            &self.outcome_path(&name.id),
            &serde_json::to_vec_pretty(&outcome)?,
        )
    }

    /// Renames, mapping a vanished source to a lost-ownership error.
    fn transition(&self, from: &Path, to: &Path) -> Result<()> {
        fs::rename(from, to).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::InvalidTransition(format!(
                "{} is no longer owned by this worker",
                from.display()
            )),
            _ => e.into(),
        })
    }

    fn max_retries_of(&self, state: JobState, file: &str) -> Result<u32> {
        let body: JobBody = serde_json::from_slice(&fs::read(self.dir(state).join(file))?)?;
        Ok(body.max_retries)
    }
}

impl QueueBackend for DirQueue {
    fn enqueue(&self, config: &RunConfig, max_retries: u32) -> Result<String> {
        let stamp = next_stamp();
        let id = uuid::Uuid::new_v4().simple().to_string();
        let body = JobBody {
            id: id.clone(),
            max_retries,
            enqueued_at_ms: now_ms(),
            payload: config.clone(),
        };
        let name = Name {
            stamp,
            id: id.clone(),
            attempts: 0,
            not_before_ms: 0,
            worker: None,
            claimed_ms: 0,
            lease_until_ms: 0,
        };
        let tmp = self.root.join("tmp").join(format!("{id}.json"));
        fs::write(&tmp, serde_json::to_vec_pretty(&body)?)?;
        fs::rename(&tmp, self.dir(JobState::Queued).join(name.queued()))?;
        Ok(id)
    }

    fn claim_next(&self, worker: &str) -> Result<Option<Job>> {
        if !valid_worker_id(worker) {
            return Err(Error::SpecInvalid(format!(
                "worker id {worker:?} must be non-empty ASCII letters, digits, '-' or '.'"
            )));
        }
        let now = now_ms();
        for (file, name) in self.names(JobState::Queued)? {
            if name.not_before_ms > now {
                continue;
            }
            let claimed = Name {
                attempts: name.attempts + 1,
                worker: Some(worker.to_string()),
                claimed_ms: now,
                lease_until_ms: now + self.options.lease.as_millis() as u64,
                ..name.clone()
            };
            let target = claimed.running();
            match fs::rename(
                self.dir(JobState::Queued).join(&file),
                self.dir(JobState::Running).join(&target),
            ) {
                Ok(()) => return self.load(JobState::Running, &target, &claimed).map(Some),
                // Another worker won the race; try the next job.
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => continue,
                Err(e) => return Err(e.into()),
            }
        }
        Ok(None)
    }

    fn complete(&self, job: &Job, outcome: Outcome) -> Result<JobState> {
        if job.state != JobState::Running {
            return Err(Error::InvalidTransition(format!(
                "job {} is {:?}, not running",
                job.id, job.state
            )));
        }
        let name = Name::parse(&job.file_name)
            .ok_or_else(|| Error::InvalidTransition(format!("bad job file {}", job.file_name)))?;
        if !self.dir(JobState::Running).join(&job.file_name).exists() {
            return Err(Error::InvalidTransition(format!(
                "job {} is no longer running under this claim",
                job.id
            )));
        }
        match outcome {
            Outcome::Success => {
                let from = self.dir(JobState::Running).join(&job.file_name);
                let worker = name.worker.clone().unwrap_or_default();
                self.finish(&from, &name, JobState::Done, worker)?;
                Ok(JobState::Done)
            }
            Outcome::Failure(error) => {
                self.fail_attempt(&job.file_name, &name, job.max_retries, &error)
            }
        }
    }

    fn reap_expired(&self) -> Result<usize> {
        let now = now_ms();
        let mut reaped = 0;
        for (file, name) in self.names(JobState::Running)? {
            if name.lease_until_ms > now {
                continue;
            }
            let max_retries = match self.max_retries_of(JobState::Running, &file) {
                Ok(m) => m,
                Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::NotFound => continue,
                Err(e) => return Err(e),
            };
            let error = format!(
                "lease expired: worker {} silent since {}",
                name.worker.as_deref().unwrap_or("?"),
                name.claimed_ms
            );
            match self.fail_attempt(&file, &name, max_retries, &error) {
                Ok(_) => reaped += 1,
                Err(Error::InvalidTransition(_)) => {}
                Err(e) => return Err(e),
            }
        }
        Ok(reaped)
    }

    fn status(&self) -> Result<QueueStatus> {
        Ok(QueueStatus {
            queued: self.names(JobState::Queued)?.len(),
            running: self.names(JobState::Running)?.len(),
            done: self.names(JobState::Done)?.len(),
            failed: self.names(JobState::Failed)?.len(),
        })
    }

    fn list(&self, state: JobState) -> Result<Vec<Job>> {
        let mut out = Vec::new();
        for (file, name) in self.names(state)? {
            match self.load(state, &file, &name) {
                Ok(job) => out.push(job),
                // Moved on between listing and reading.
                Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::NotFound => {}
                Err(e) => return Err(e),
            }
        }
        Ok(out)
    }
}

/// Pulls jobs from a queue and hands each to `handler`.
pub struct Worker<'a, Q: QueueBackend + ?Sized> {
    queue: &'a Q,
    id: String,
    poll: Duration,
}

/// Counts of jobs a worker finished.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WorkerReport {
    pub succeeded: usize,
    pub retried: usize,
    pub failed: usize,
}

impl<'a, Q: QueueBackend + ?Sized> Worker<'a, Q> {
    pub fn new(queue: &'a Q, id: impl Into<String>, poll: Duration) -> Self {
        Self {
            queue,
            id: id.into(),
            poll,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    /// Runs one job if any is eligible. Returns the state it ended in.
    pub fn step<F>(&self, handler: &mut F) -> Result<Option<JobState>>
    where
        F: FnMut(&Job) -> std::result::Result<(), String>,
    {
        self.queue.reap_expired()?;
        let Some(job) = self.queue.claim_next(&self.id)? else {
            return Ok(None);
        };
        let outcome = match handler(&job) {
            Ok(()) => Outcome::Success,
            Err(e) => Outcome::Failure(e),
        };
        match self.queue.complete(&job, outcome) {
            Ok(state) => Ok(Some(state)),
            Err(Error::InvalidTransition(msg)) => {
                // The lease expired while we worked; the job belongs to someone else now.
                log::warn!("{}: {msg}", self.id);
                Ok(Some(JobState::Running))
            }
            Err(e) => Err(e),
        }
    }

    /// Processes jobs until the queue has nothing queued or running when
    /// `drain` is set, forever otherwise.
    pub fn work<F>(&self, drain: bool, mut handler: F) -> Result<WorkerReport>
    where
        F: FnMut(&Job) -> std::result::Result<(), String>,
    {
        let mut report = WorkerReport::default();
        loop {
            match self.step(&mut handler)? {
                Some(JobState::Done) => report.succeeded += 1,
                Some(JobState::Failed) => report.failed += 1,
                Some(JobState::Queued) => report.retried += 1,
                Some(JobState::Running) => {}
                None => {
                    if drain {
                        let s = self.queue.status()?;
                        if s.queued == 0 && s.running == 0 {
                            return Ok(report);
                        }
                    }
                    std::thread::sleep(self.poll);
                }
            }
        }
    }
}

/// Runs a queued configuration through the pipeline.
pub fn run_job(job: &Job) -> std::result::Result<(), String> {
    crate::pipeline::run(&job.payload)
        .map(|_| ())
        .map_err(|e| e.to_string())
}

/// A worker id unique to this process: `<host>-<pid>-<index>`.
pub fn default_worker_id(index: usize) -> String {
    let host = std::env::var("HOSTNAME")
        .ok()
        .filter(|h| !h.is_empty())
        .unwrap_or_else(|| "worker".into());
    let host: String = host
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '-' })
        .collect();
    format!("{host}-{}-{index}", std::process::id())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::SynclfSpec;
    use crate::pipeline::{DatasetConfig, DatasetSpec};
    use crate::rankers::RankerSpec;
    use crate::validators::ValidatorSpec;

    fn config() -> RunConfig {
        RunConfig::new(
            DatasetConfig::new(DatasetSpec::Synclf(SynclfSpec::synclf_hard())),
            RankerSpec::from_name("anova_f").unwrap(),
            ValidatorSpec::default(),
        )
    }

    fn fast() -> QueueOptions {
        QueueOptions {
            lease: Duration::from_secs(60),
            backoff: Duration::ZERO,
            poll: Duration::from_millis(5),
        }
    }

    #[test]
    fn names_round_trip() {
        let n = Name {
            stamp: 12,
            id: "abc".into(),
            attempts: 2,
            not_before_ms: 99,
            worker: Some("host-1.2".into()),
            claimed_ms: 5,
            lease_until_ms: 7,
        };
        let q = Name::parse(&n.queued()).unwrap();
        assert_eq!((q.stamp, q.attempts, q.not_before_ms), (12, 2, 99));
        let r = Name::parse(&n.running()).unwrap();
        assert_eq!(r, Name { not_before_ms: 0, ..n });
        assert_eq!(Name::parse("junk.json"), None);
    }

    #[test]
    fn fifo_order() {
        let dir = tempfile::tempdir().unwrap();
        let q = DirQueue::open(dir.path(), fast()).unwrap();
        let ids: Vec<String> = (0..3).map(|_| q.enqueue(&config(), 3).unwrap()).collect();
        let claimed: Vec<String> = (0..3)
            .map(|_| q.claim_next("w").unwrap().unwrap().id)
            .collect();
        assert_eq!(claimed, ids);
        assert!(q.claim_next("w").unwrap().is_none());
    }

    #[test]
    fn duplicate_configs_get_distinct_ids() {
        let dir = tempfile::tempdir().unwrap();
        let q = DirQueue::open(dir.path(), fast()).unwrap();
        let a = q.enqueue(&config(), 3).unwrap();
        let b = q.enqueue(&config(), 3).unwrap();
        assert_ne!(a, b);
        let jobs = q.list(JobState::Queued).unwrap();
        assert_eq!(jobs.len(), 2);
        assert_eq!(jobs[0].payload, config());
    }

    #[test]
    fn empty_queue_and_bad_worker() {
        let dir = tempfile::tempdir().unwrap();
        let q = DirQueue::open(dir.path(), fast()).unwrap();
        assert!(q.claim_next("w").unwrap().is_none());
        assert!(matches!(q.claim_next(""), Err(Error::SpecInvalid(_))));
        assert!(matches!(q.claim_next("a_b"), Err(Error::SpecInvalid(_))));
    }

    #[test]
    fn one_job_two_claimants() {
        let dir = tempfile::tempdir().unwrap();
        let q = DirQueue::open(dir.path(), fast()).unwrap();
        q.enqueue(&config(), 3).unwrap();
        let got: Vec<bool> = std::thread::scope(|s| {
            let hs: Vec<_> = ["a", "b"]
                .iter()
                .map(|w| {
                    let q = &q;
                    s.spawn(move || q.claim_next(w).unwrap().is_some())
                })
                .collect();
            hs.into_iter().map(|h| h.join().unwrap()).collect()
        });
        assert_eq!(got.iter().filter(|g| **g).count(), 1);
    }

    #[test]
    fn fail_once_then_succeed() {
        let dir = tempfile::tempdir().unwrap();
        let q = DirQueue::open(dir.path(), fast()).unwrap();
        let id = q.enqueue(&config(), 3).unwrap();
        let job = q.claim_next("w").unwrap().unwrap();
        assert_eq!(job.attempts, 1);
        assert_eq!(q.complete(&job, Outcome::Failure("boom".into())).unwrap(), JobState::Queued);
        let job = q.claim_next("w").unwrap().unwrap();
        assert_eq!(job.attempts, 2);
        assert_eq!(job.errors, vec!["boom".to_string()]);
        assert_eq!(q.complete(&job, Outcome::Success).unwrap(), JobState::Done);
        let done = q.list(JobState::Done).unwrap();
        assert_eq!(done.len(), 1);
        assert_eq!((done[0].id.as_str(), done[0].attempts), (id.as_str(), 2));
        assert!(done[0].finished_at_ms.is_some());
        // Completing twice is not a valid transition.
        assert!(matches!(
            q.complete(&job, Outcome::Success),
            Err(Error::InvalidTransition(_))
        ));
        assert!(matches!(
            q.complete(&done[0], Outcome::Success),
            Err(Error::InvalidTransition(_))
        ));
    }

    #[test]
    fn retries_exhaust_into_failed() {
        let dir = tempfile::tempdir().unwrap();
        let q = DirQueue::open(dir.path(), fast()).unwrap();
        q.enqueue(&config(), 2).unwrap();
        let worker = Worker::new(&q, "w", Duration::from_millis(1));
        let mut calls = 0;
        let report = worker
            .work(true, |_| {
                calls += 1;
                Err(format!("attempt {calls} failed"))
            })
            .unwrap();
        assert_eq!(calls, 3);
        assert_eq!(report, WorkerReport { succeeded: 0, retried: 2, failed: 1 });
        let failed = q.list(JobState::Failed).unwrap();
        assert_eq!(failed[0].attempts, 3);
        assert_eq!(failed[0].errors.len(), 3);
    }

    #[test]
    fn backoff_delays_retry() {
        let dir = tempfile::tempdir().unwrap();
        let q = DirQueue::open(
            dir.path(),
            QueueOptions {
                backoff: Duration::from_secs(60),
                ..fast()
            },
        )
        .unwrap();
        q.enqueue(&config(), 3).unwrap();
        let job = q.claim_next("w").unwrap().unwrap();
        q.complete(&job, Outcome::Failure("x".into())).unwrap();
        assert!(q.claim_next("w").unwrap().is_none());
        assert_eq!(q.status().unwrap().queued, 1);
    }

    #[test]
    fn expired_lease_is_reclaimed() {
        let dir = tempfile::tempdir().unwrap();
        let q = DirQueue::open(
            dir.path(),
            QueueOptions {
                lease: Duration::ZERO,
                ..fast()
            },
        )
        .unwrap();
        q.enqueue(&config(), 3).unwrap();
        let crashed = q.claim_next("dead").unwrap().unwrap();
        std::thread::sleep(Duration::from_millis(2));
        assert_eq!(q.reap_expired().unwrap(), 1);
        let job = q.claim_next("alive").unwrap().unwrap();
        assert_eq!(job.attempts, 2);
        assert!(job.errors[0].contains("lease expired"));
        // The crashed worker can no longer finish it.
        assert!(q.complete(&crashed, Outcome::Success).is_err());
    }
}
