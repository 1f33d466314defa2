use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::{build_heatmap, compute_stats, ReportData};

pub const CURVES_CSV: &str = "curves.csv";
pub const SCORES_CSV: &str = "scores.csv";
pub const STATS_CSV: &str = "stats.csv";
pub const SWEEP_CSV: &str = "sweep.csv";

/// Shortest round-tripping decimal, or `n/a` for absent and non-finite values.
pub fn format_value(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x}"),
        _ => "n/a".to_string(),
    }
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

fn write_rows(path: &Path, header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `curves.csv`, `scores.csv`, `stats.csv` and `sweep.csv`.
pub fn export_csv(data: &ReportData, out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let mut aggregates = data.aggregates.clone();
    aggregates.sort_by(|a, b| (&a.dataset, &a.ranker).cmp(&(&b.dataset, &b.ranker)));

    let curves = out_dir.join(CURVES_CSV);
    let rows = aggregates
        .iter()
        .flat_map(|a| {
            a.curve.iter().map(|p| {
                vec![
                    a.dataset.clone(),
                    a.ranker.clone(),
                    p.k.to_string(),
                    format_value(Some(p.mean)),
                    format_value(Some(p.stdev)),
                ]
            })
        })
        .collect();
    write_rows(&curves, &["dataset", "ranker", "k", "mean_score", "stdev"], rows)?;

    let scores = out_dir.join(SCORES_CSV);
    let heatmap = if aggregates.is_empty() {
        None
    } else {
        Some(build_heatmap(&aggregates)?)
    };
    let rows = aggregates
        .iter()
        .map(|a| {
            let fraction = heatmap
                .as_ref()
                .and_then(|h| h.cell(&a.ranker, &a.dataset))
                .and_then(|c| c.fraction);
            vec![
                a.dataset.clone(),
                a.ranker.clone(),
                format_value(Some(a.mean_score)),
                format_value(fraction),
                format_value(a.r2_mean),
                format_value(a.logloss_mean),
                format_value(a.support_accuracy_mean),
                format_value(a.stability_mean_stdev),
                format_value(a.nogueira_phi),
                format_value(Some(a.fit_time_mean)),
                a.n_bootstraps.to_string(),
                a.group_id.clone(),
            ]
        })
        .collect();
    write_rows(
        &scores,
        &[
            "dataset",
            "ranker",
            "mean_validation",
            "relative_performance",
            "r2",
            "logloss",
            "support_accuracy",
            "stability_mean_stdev",
            "nogueira_phi",
            "fit_time_mean",
            "n_bootstraps",
            "group_id",
        ],
        rows,
    )?;

    let stats = out_dir.join(STATS_CSV);
    let rows = match compute_stats(data)? {
        None => Vec::new(),
        Some(s) => s
            .rankers
            .iter()
            .zip(&s.friedman.average_ranks)
            .map(|(r, rank)| {
                vec![
                    r.clone(),
                    format_value(Some(*rank)),
                    format_value(Some(s.friedman.chi2)),
                    format_value(Some(s.friedman.p_value)),
                    format_value(s.nemenyi_cd),
                    format_value(Some(s.alpha)),
                    s.datasets.len().to_string(),
                ]
            })
            .collect(),
    };
    write_rows(
        &stats,
        &[
            "ranker",
            "average_rank",
            "friedman_chi2",
            "friedman_p",
            "nemenyi_cd",
            "alpha",
            "n_datasets",
        ],
        rows,
    )?;

    let sweep = out_dir.join(SWEEP_CSV);
    let rows = data
        .sweep
        .iter()
        .map(|s| {
            vec![
                s.dataset.clone(),
                s.ranker.clone(),
                s.sample_size.to_string(),
                s.n_bootstraps.to_string(),
                format_value(Some(s.fit_time_mean)),
                format_value(Some(s.fit_time_stdev)),
                format_value(s.mean_score),
            ]
        })
        .collect();
    write_rows(
        &sweep,
        &[
            "dataset",
            "ranker",
            "sample_size",
            "n_bootstraps",
            "fit_time_mean",
            "fit_time_stdev",
            "mean_score",
        ],
        rows,
    )?;

    Ok(vec![curves, scores, stats, sweep])
}
