//! Heatmaps, curves and significance tests over several runs.
//!
//! `cargo run --release --example report [output_dir]`, then open
//! `report.html` in the output directory.

use rankbench::datagen::SynclfSpec;
use rankbench::pipeline::{run, CachePolicy, DatasetConfig, DatasetSpec, RunConfig, SynclfHardSpec};
use rankbench::rankers::RankerSpec;
use rankbench::report::{build_heatmap, write_report, ReportData};
use rankbench::validators::ValidatorSpec;

fn main() -> rankbench::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "rankbench-out/report".into());
    let mut easy = SynclfSpec::synclf_hard();
    easy.n_samples = 400;
    easy.class_sep = 2.0;
    let datasets = [
        DatasetConfig::labeled("easy", DatasetSpec::Synclf(easy)),
        DatasetConfig::new(DatasetSpec::SynclfHard(SynclfHardSpec {
            n_samples: Some(400),
            random_state: 0,
        })),
    ];

    let mut records = Vec::new();
    for ds in &datasets {
        for ranker in ["anova_f", "mutual_info", "relieff", "decision_tree"] {
            let mut config = RunConfig::new(ds.clone(), RankerSpec::from_name(ranker)?, ValidatorSpec::Knn { k: 5 });
            config.n_bootstraps = 4;
            config.cache = CachePolicy::Off;
            records.extend(run(&config)?.records);
        }
    }

    let data = ReportData::from_records(&records)?;
    let heatmap = build_heatmap(&data.aggregates)?;
    for (r, ranker) in heatmap.rankers.iter().enumerate() {
        let cells: Vec<String> = heatmap.cells[r]
            .iter()
            .map(|c| c.as_ref().map_or("   n/a".into(), |c| format!("{:.4}{}", c.score, if c.best { "*" } else { " " })))
            .collect();
        println!("{ranker:<14} {}", cells.join("  "));
    }
    for file in write_report(&data, std::path::Path::new(&out))? {
        println!("wrote {}", file.display());
    }
    Ok(())
}
