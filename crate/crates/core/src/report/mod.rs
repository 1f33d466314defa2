//! Score tables, CSV exports and a self-contained HTML report.

mod csv_export;
mod html;
mod svg;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::relative_performance;
use crate::pipeline::{aggregate_best_run, summarize_sweep, Aggregate, RunRecord, SweepPoint};
use crate::stats::{friedman, nemenyi_cd, FriedmanResult, ScoreTable};

pub use csv_export::{export_csv, format_value, CURVES_CSV, SCORES_CSV, STATS_CSV, SWEEP_CSV};
pub use html::{cell_text, render_html, render_html_string, REPORT_HTML};

/// Exponent of the color ramp applied to relative fractions.
pub const DEFAULT_EXPONENT: f64 = 5.0;
/// Significance level of the rank tests shown in reports.
pub const STATS_ALPHA: f64 = 0.05;

/// Everything a report is built from.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportData {
    pub aggregates: Vec<Aggregate>,
    pub sweep: Vec<SweepPoint>,
}

impl ReportData {
    /// Best run per (dataset, ranker) plus any sample-size sweep summaries.
    pub fn from_records(records: &[RunRecord]) -> Result<Self> {
        Ok(Self {
            aggregates: aggregate_best_run(records)?,
            sweep: summarize_sweep(records),
        })
    }

    pub fn is_empty(&self) -> bool {
        self.aggregates.is_empty() && self.sweep.is_empty()
    }

    /// Dataset names in sorted order.
    pub fn datasets(&self) -> Vec<String> {
        let mut d: Vec<String> = self.aggregates.iter().map(|a| a.dataset.clone()).collect();
        d.sort();
        d.dedup();
        d
    }

    pub fn rankers(&self) -> Vec<String> {
        let mut r: Vec<String> = self.aggregates.iter().map(|a| a.ranker.clone()).collect();
        r.sort();
        r.dedup();
        r
    }

    pub fn get(&self, dataset: &str, ranker: &str) -> Option<&Aggregate> {
        self.aggregates
            .iter()
            .find(|a| a.dataset == dataset && a.ranker == ranker)
    }
}

/// Color family of a heatmap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ramp {
    /// Blue for the best, red for the worst.
    BlueRed,
    /// Green for the best, red for the worst.
    GreenRed,
    /// Dark blue for the best, pale blue for the worst.
    Blues,
}

impl Ramp {
    /// `intensity` 1 is the best end of the ramp.
    pub fn color(self, intensity: f64) -> String {
        let (best, worst) = match self {
            Ramp::BlueRed => ([33, 102, 172], [178, 24, 43]),
            Ramp::GreenRed => ([26, 152, 80], [215, 48, 39]),
            Ramp::Blues => ([8, 48, 107], [222, 235, 247]),
        };
        let t = intensity.clamp(0.0, 1.0);
        let mix = |i: usize| (worst[i] as f64 + (best[i] as f64 - worst[i] as f64) * t).round() as u8;
        format!("#{:02x}{:02x}{:02x}", mix(0), mix(1), mix(2))
    }
}

/// Metrics that can be tabulated per (ranker, dataset).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeatmapMetric {
    MeanValidation,
    StabilityMeanStdev,
    NogueiraPhi,
    LogLoss,
    R2,
}

impl HeatmapMetric {
    pub fn title(self) -> &'static str {
        match self {
            HeatmapMetric::MeanValidation => "Mean validation score",
            HeatmapMetric::StabilityMeanStdev => "Importance stability (mean stdev)",
            HeatmapMetric::NogueiraPhi => "Selection stability (phi)",
            HeatmapMetric::LogLoss => "Importance log-loss",
            HeatmapMetric::R2 => "Importance R2",
        }
    }

    pub fn higher_is_better(self) -> bool {
        !matches!(
            self,
            HeatmapMetric::StabilityMeanStdev | HeatmapMetric::LogLoss
        )
    }

    pub fn ramp(self) -> Ramp {
        match self {
            HeatmapMetric::MeanValidation | HeatmapMetric::R2 => Ramp::BlueRed,
            HeatmapMetric::StabilityMeanStdev | HeatmapMetric::NogueiraPhi => Ramp::GreenRed,
            HeatmapMetric::LogLoss => Ramp::Blues,
        }
    }

    pub fn value(self, a: &Aggregate) -> Option<f64> {
        let v = match self {
            HeatmapMetric::MeanValidation => Some(a.mean_score),
            HeatmapMetric::StabilityMeanStdev => a.stability_mean_stdev,
            HeatmapMetric::NogueiraPhi => a.nogueira_phi,
            HeatmapMetric::LogLoss => a.logloss_mean,
            HeatmapMetric::R2 => a.r2_mean,
        };
        v.filter(|x| x.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapCell {
    pub score: f64,
    /// Score relative to the best in its column; absent when undefined.
    pub fraction: Option<f64>,
    /// `fraction^exponent`.
    pub intensity: Option<f64>,
    pub color: String,
    pub best: bool,
}

/// Rows are rankers, columns are datasets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapTable {
    pub metric: HeatmapMetric,
    pub rankers: Vec<String>,
    pub datasets: Vec<String>,
    pub cells: Vec<Vec<Option<HeatmapCell>>>,
    pub exponent: f64,
}

impl HeatmapTable {
    pub fn cell(&self, ranker: &str, dataset: &str) -> Option<&HeatmapCell> {
        let r = self.rankers.iter().position(|x| x == ranker)?;
        let d = self.datasets.iter().position(|x| x == dataset)?;
        self.cells[r][d].as_ref()
    }
}

/// Mean-validation heatmap with the default exponent.
pub fn build_heatmap(aggregates: &[Aggregate]) -> Result<HeatmapTable> {
    build_metric_heatmap(aggregates, HeatmapMetric::MeanValidation, DEFAULT_EXPONENT)
}

/// Tabulates `metric` with per-column relative fractions. For
/// higher-is-better metrics the fraction is `score / max`; otherwise it is
/// `min / score`. Cells without a value stay empty.
pub fn build_metric_heatmap(
    aggregates: &[Aggregate],
    metric: HeatmapMetric,
    exponent: f64,
) -> Result<HeatmapTable> {
    if aggregates.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let data = ReportData {
        aggregates: aggregates.to_vec(),
        sweep: Vec::new(),
    };
    let rankers = data.rankers();
    let datasets = data.datasets();
    let mut cells = vec![vec![None; datasets.len()]; rankers.len()];
    for (d, dataset) in datasets.iter().enumerate() {
        let present: Vec<(usize, f64)> = rankers
            .iter()
            .enumerate()
            .filter_map(|(r, ranker)| {
                data.get(dataset, ranker)
                    .and_then(|a| metric.value(a))
                    .map(|v| (r, v))
            })
            .collect();
        if present.is_empty() {
            continue;
        }
        let values: Vec<f64> = present.iter().map(|p| p.1).collect();
        let fractions: Vec<Option<f64>> = if metric.higher_is_better() {
            match relative_performance(&values) {
                Ok(f) => f.into_iter().map(Some).collect(),
                Err(Error::NonPositiveMax) => vec![None; values.len()],
                Err(e) => return Err(e),
            }
        } else {
            let min = values.iter().copied().fold(f64::INFINITY, f64::min);
            values
                .iter()
                .map(|&v| match (min, v) {
                    (m, v) if m < 0.0 || v < 0.0 => None,
                    (_, v) if v == 0.0 => Some(1.0),
                    (m, v) => Some(m / v),
                })
                .collect()
        };
        let best_value = if metric.higher_is_better() {
            values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        } else {
            values.iter().copied().fold(f64::INFINITY, f64::min)
        };
        for ((r, v), fraction) in present.into_iter().zip(fractions) {
            let intensity = fraction.map(|f| f.powf(exponent));
            cells[r][d] = Some(HeatmapCell {
                score: v,
                fraction,
                intensity,
                color: intensity.map_or("#dddddd".to_string(), |i| metric.ramp().color(i)),
                best: v == best_value,
            });
        }
    }
    Ok(HeatmapTable {
        metric,
        rankers,
        datasets,
        cells,
        exponent,
    })
}

/// Friedman test and Nemenyi critical difference over the rankers that
/// have a score on every dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsSummary {
    pub rankers: Vec<String>,
    pub datasets: Vec<String>,
    pub friedman: FriedmanResult,
    /// Absent when no critical value is tabulated for this many rankers.
    pub nemenyi_cd: Option<f64>,
    pub alpha: f64,
}

/// `None` unless at least two rankers are scored on at least two datasets.
pub fn compute_stats(data: &ReportData) -> Result<Option<StatsSummary>> {
    let datasets = data.datasets();
    let rankers: Vec<String> = data
        .rankers()
        .into_iter()
        .filter(|r| datasets.iter().all(|d| data.get(d, r).is_some_and(|a| a.mean_score.is_finite())))
        .collect();
    if rankers.len() < 2 || datasets.len() < 2 {
        return Ok(None);
    }
    let scores: Vec<Vec<f64>> = datasets
        .iter()
        .map(|d| rankers.iter().map(|r| data.get(d, r).unwrap().mean_score).collect())
        .collect();
    let table = ScoreTable::new(datasets.clone(), rankers.clone(), scores)?;
    let result = friedman(&table)?;
    let cd = match nemenyi_cd(rankers.len(), datasets.len(), STATS_ALPHA) {
        Ok(cd) => Some(cd),
        Err(Error::UnsupportedK { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(Some(StatsSummary {
        rankers,
        datasets,
        friedman: result,
        nemenyi_cd: cd,
        alpha: STATS_ALPHA,
    }))
}

/// Writes the CSV files and `report.html` into `out_dir`.
pub fn write_report(data: &ReportData, out_dir: &std::path::Path) -> Result<Vec<std::path::PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let mut files = export_csv(data, out_dir)?;
    let html = out_dir.join(REPORT_HTML);
    render_html(data, &html)?;
    files.push(html);
    Ok(files)
}
