//! Distributing runs through a directory-backed job queue.
//!
//! Several workers, possibly on different machines sharing the directory,
//! claim jobs with atomic renames. Failed jobs are retried with backoff.

use std::time::Duration;

use rankbench::datagen::SynclfSpec;
use rankbench::pipeline::{DatasetConfig, DatasetSpec, RunConfig};
use rankbench::queue::{run_job, DirQueue, JobState, QueueBackend, QueueOptions, Worker};
use rankbench::rankers::RankerSpec;
use rankbench::validators::ValidatorSpec;

fn main() -> rankbench::Result<()> {
    let root = tempfile::tempdir()?;
    let queue = DirQueue::open(
        root.path().join("queue"),
        QueueOptions {
            backoff: Duration::ZERO,
            poll: Duration::from_millis(10),
            ..QueueOptions::default()
        },
    )?;

    let mut spec = SynclfSpec::synclf_hard();
    spec.n_samples = 200;
    for (i, ranker) in ["anova_f", "su", "mutual_info", "relieff"].iter().enumerate() {
        let mut config = RunConfig::new(
            DatasetConfig::new(DatasetSpec::Synclf(spec.clone())),
            RankerSpec::from_name(ranker)?,
            ValidatorSpec::default(),
        );
        config.n_bootstraps = 2;
        config.output_dir = Some(root.path().join(format!("out{i}")));
        let id = queue.enqueue(&config, 3)?;
        println!("enqueued {ranker} as {id}");
    }
    println!("{:?}", queue.status()?);

    std::thread::scope(|s| {
        for w in 0..2 {
            let queue = &queue;
            s.spawn(move || {
                let report = Worker::new(queue, format!("worker-{w}"), Duration::from_millis(10))
                    .work(true, run_job)
                    .unwrap();
                println!("worker-{w}: {report:?}");
            });
        }
    });
    for job in queue.list(JobState::Done)? {
        println!("{} done after {} attempt(s) on {:?}", job.id, job.attempts, job.worker);
    }
    Ok(())
}
