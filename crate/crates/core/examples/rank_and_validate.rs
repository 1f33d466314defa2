//! A full benchmark run: bootstrap, rank, validate and aggregate.
//!
//! `cargo run --release --example rank_and_validate [output_dir]`

use rankbench::pipeline::{
    aggregate_group, run, DatasetConfig, DatasetSpec, RunConfig, SynclfHardSpec,
};
use rankbench::rankers::RankerSpec;
use rankbench::validators::ValidatorSpec;

fn main() -> rankbench::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "rankbench-out/rank_and_validate".into());
    let mut config = RunConfig::new(
        DatasetConfig::new(DatasetSpec::SynclfHard(SynclfHardSpec {
            n_samples: Some(1_000),
            random_state: 0,
        })),
        RankerSpec::from_name("relieff")?,
        ValidatorSpec::DecisionTree,
    );
    config.n_bootstraps = 5;
    config.output_dir = Some(out.into());

    let outcome = run(&config)?;
    println!(
        "{} records, {} rankings fitted, {} restored from cache",
        outcome.records.len(),
        outcome.ranker_fits,
        outcome.ranker_restored
    );

    let agg = aggregate_group(&outcome.records)?;
    let curve = agg.averaged_curve()?;
    let (k, best) = curve.argmax().unwrap();
    println!("mean validation score {:.4}", agg.mean_score);
    println!("best prefix k={k} scores {best:.4}");
    for p in agg.curve.iter().take(8) {
        println!("  k={:<2} {:.4} +/- {:.4}", p.k, p.mean, p.stdev);
    }
    if let Some(r2) = agg.r2_mean {
        println!("importance R2 against ground truth {r2:.4}");
    }
    Ok(())
}
