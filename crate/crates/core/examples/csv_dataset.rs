//! Benchmarking on a CSV file instead of a generator.

use rankbench::dataio::{load_csv, CsvAdapterSpec};
use rankbench::datagen::Task;
use rankbench::pipeline::{aggregate_group, run, CachePolicy, DatasetConfig, DatasetSpec, RunConfig};
use rankbench::rankers::RankerSpec;
use rankbench::validators::ValidatorSpec;

fn main() -> rankbench::Result<()> {
    let spec = CsvAdapterSpec {
        path: concat!(env!("CARGO_MANIFEST_DIR"), "/configs/data/flowers.csv").into(),
        target_column: "species".into(),
        task: Task::Classification,
        has_header: true,
    };
    let ds = load_csv(&spec)?;
    println!("{} rows, {} features, {} classes", ds.n_samples(), ds.n_features(), ds.n_classes());

    for ranker in ["anova_f", "mutual_info", "su"] {
        let mut config = RunConfig::new(
            DatasetConfig::labeled("flowers", DatasetSpec::Csv(spec.clone())),
            RankerSpec::from_name(ranker)?,
            ValidatorSpec::Knn { k: 3 },
        );
        config.n_bootstraps = 5;
        config.cache = CachePolicy::Off;
        let agg = aggregate_group(&run(&config)?.records)?;
        println!("{ranker:<12} mean validation {:.4}", agg.mean_score);
    }
    Ok(())
}
