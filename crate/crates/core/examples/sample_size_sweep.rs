//! Fit time and validation score as the training set grows.

use rankbench::pipeline::{
    summarize_sweep, sweep_sample_size, CachePolicy, DatasetConfig, DatasetSpec, RunConfig,
    SynclfHardSpec,
};
use rankbench::rankers::RankerSpec;
use rankbench::validators::ValidatorSpec;

fn main() -> rankbench::Result<()> {
    let mut config = RunConfig::new(
        DatasetConfig::new(DatasetSpec::SynclfHard(SynclfHardSpec {
            n_samples: Some(2_000),
            random_state: 0,
        })),
        RankerSpec::from_name("relieff")?,
        ValidatorSpec::Knn { k: 5 },
    );
    config.cache = CachePolicy::Off;
    config.jobs = Some(1);

    let sizes: Vec<usize> = (100..=900).step_by(200).collect();
    let outcome = sweep_sample_size(&config, &sizes, 3)?;
    println!("{:>6} {:>10} {:>8}", "n", "fit (s)", "score");
    for p in summarize_sweep(&outcome.records) {
        let score = p.mean_score.map_or("n/a".into(), |s| format!("{s:.4}"));
        println!("{:>6} {:>10.4} {:>8}", p.sample_size, p.fit_time_mean, score);
    }
    Ok(())
}
