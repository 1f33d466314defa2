use std::fmt::Write;
use std::path::Path;

use crate::error::Result;
use crate::persistence::atomic_write;

use super::svg::{bar_chart, escape, line_chart, Series};
use super::{build_metric_heatmap, compute_stats, HeatmapMetric, HeatmapTable, ReportData, DEFAULT_EXPONENT};

pub const REPORT_HTML: &str = "report.html";

const STYLE: &str = "body{font-family:sans-serif;margin:2em;color:#222}\
h1{font-size:1.6em}h2{margin-top:2em;border-bottom:1px solid #ccc}\
table.heatmap{border-collapse:collapse;margin:1em 0}\
table.heatmap td,table.heatmap th{border:1px solid #fff;padding:4px 8px;text-align:right}\
table.heatmap th{background:#f0f0f0}\
td.best{font-weight:bold}td.empty{background:#fafafa}\
tr.stats td{background:#fff;color:#222;text-align:left;font-size:0.9em}\
svg.chart{margin:0.5em;background:#fff}\
.title{font-size:13px;font-weight:bold}.tick{font-size:10px}.label{font-size:11px}.small{font-size:8px}\
.charts{display:flex;flex-wrap:wrap}";

/// Text shown in heatmap cells; matches CSV values rounded to 4 decimals.
pub fn cell_text(score: f64) -> String {
    format!("{score:.4}")
}

fn text_color(background: &str) -> &'static str {
    let channel = |i: usize| u8::from_str_radix(&background[i..i + 2], 16).unwrap_or(255) as f64;
    let luma = 0.299 * channel(1) + 0.587 * channel(3) + 0.114 * channel(5);
    if luma < 140.0 {
        "#fff"
    } else {
        "#000"
    }
}

fn heatmap_html(out: &mut String, table: &HeatmapTable, stats_row: Option<String>) {
    let _ = write!(
        out,
        "<h3>{}</h3><table class=\"heatmap\" data-metric=\"{}\"><tr><th>ranker</th>",
        escape(table.metric.title()),
        serde_json::to_value(table.metric)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default()
    );
    for d in &table.datasets {
        let _ = write!(out, "<th>{}</th>", escape(d));
    }
    out.push_str("</tr>");
    for (r, ranker) in table.rankers.iter().enumerate() {
        let _ = write!(out, "<tr><th>{}</th>", escape(ranker));
        for (d, dataset) in table.datasets.iter().enumerate() {
            match &table.cells[r][d] {
                None => out.push_str("<td class=\"empty\"></td>"),
                Some(c) => {
                    let _ = write!(
                        out,
                        "<td class=\"cell{}\" data-ranker=\"{}\" data-dataset=\"{}\" data-fraction=\"{}\" \
                         style=\"background:{};color:{}\">{}</td>",
                        if c.best { " best" } else { "" },
                        escape(ranker),
                        escape(dataset),
                        c.fraction.map_or("n/a".into(), |f| format!("{f}")),
                        c.color,
                        text_color(&c.color),
                        cell_text(c.score)
                    );
                }
            }
        }
        out.push_str("</tr>");
    }
    if let Some(row) = stats_row {
        let _ = write!(
            out,
            "<tr class=\"stats\"><td colspan=\"{}\">{}</td></tr>",
            table.datasets.len() + 1,
            row
        );
    }
    out.push_str("</table>");
}

fn stats_text(data: &ReportData) -> Result<Option<String>> {
    let Some(s) = compute_stats(data)? else {
        return Ok(None);
    };
    let ranks: Vec<String> = s
        .rankers
        .iter()
        .zip(&s.friedman.average_ranks)
        .map(|(r, v)| format!("{} {v:.3}", escape(r)))
        .collect();
    Ok(Some(format!(
        "Friedman chi2 = {:.4}, p = {:.4}; Nemenyi CD (alpha = {}) = {}; average ranks (higher is better): {}",
        s.friedman.chi2,
        s.friedman.p_value,
        s.alpha,
        s.nemenyi_cd.map_or("n/a".into(), |c| format!("{c:.4}")),
        ranks.join(", ")
    )))
}

/// Renders a standalone HTML page (inline CSS and SVG, no external
/// references). The output depends only on `data`.
pub fn render_html(data: &ReportData, path: &Path) -> Result<()> {
    atomic_write(path, render_html_string(data)?.as_bytes())
}

pub fn render_html_string(data: &ReportData) -> Result<String> {
    let mut out = String::new();
    let _ = write!(
        out,
        "<!DOCTYPE html><html lang=\"en\"><head><meta charset=\"utf-8\"><title>Feature ranking report</title>\
         <style>{STYLE}</style></head><body><h1>Feature ranking report</h1>"
    );
    if data.is_empty() {
        out.push_str("<p class=\"no-data\">No data: the input contained no run records.</p></body></html>\n");
        return Ok(out);
    }

    if !data.aggregates.is_empty() {
        out.push_str("<h2>Score tables</h2>");
        let stats = stats_text(data)?;
        for metric in [
            HeatmapMetric::MeanValidation,
            HeatmapMetric::R2,
            HeatmapMetric::LogLoss,
            HeatmapMetric::StabilityMeanStdev,
            HeatmapMetric::NogueiraPhi,
        ] {
            let table = build_metric_heatmap(&data.aggregates, metric, DEFAULT_EXPONENT)?;
            if table.cells.iter().flatten().all(Option::is_none) {
                continue;
            }
            let row = (metric == HeatmapMetric::MeanValidation)
                .then(|| stats.clone())
                .flatten();
            heatmap_html(&mut out, &table, row);
        }

        out.push_str("<h2>Validation curves</h2><div class=\"charts\">");
        for dataset in data.datasets() {
            let series: Vec<Series> = data
                .rankers()
                .into_iter()
                .filter_map(|r| data.get(&dataset, &r))
                .map(|a| Series {
                    name: a.ranker.clone(),
                    points: a.curve.iter().map(|p| (p.k as f64, p.mean, Some(p.stdev))).collect(),
                })
                .collect();
            out.push_str(&line_chart(&dataset, "features selected (k)", "validation score", &series));
        }
        out.push_str("</div>");

        out.push_str("<h2>Feature importances</h2><div class=\"charts\">");
        for dataset in data.datasets() {
            for ranker in data.rankers() {
                let Some(a) = data.get(&dataset, &ranker) else { continue };
                let (Some(mean), Some(sd)) = (&a.importance_mean, &a.importance_stdev) else {
                    continue;
                };
                let labels: Vec<String> = (0..mean.len()).map(|i| i.to_string()).collect();
                out.push_str(&bar_chart(
                    &format!("{dataset} / {ranker}"),
                    "importance (mean, stdev)",
                    &labels,
                    mean,
                    Some(sd),
                ));
            }
        }
        out.push_str("</div>");

        out.push_str("<h2>Stability</h2><div class=\"charts\">");
        for dataset in data.datasets() {
            let rows: Vec<(String, f64)> = data
                .rankers()
                .into_iter()
                .filter_map(|r| data.get(&dataset, &r))
                .filter_map(|a| a.nogueira_phi.map(|v| (a.ranker.clone(), v)))
                .collect();
            if rows.is_empty() {
                continue;
            }
            let labels: Vec<String> = rows.iter().map(|r| r.0.clone()).collect();
            let values: Vec<f64> = rows.iter().map(|r| r.1).collect();
            out.push_str(&bar_chart(
                &format!("{dataset}: selection stability"),
                "phi",
                &labels,
                &values,
                None,
            ));
        }
        out.push_str("</div>");
    }

    if !data.sweep.is_empty() {
        out.push_str("<h2>Sample size</h2><div class=\"charts\">");
        let mut datasets: Vec<&str> = data.sweep.iter().map(|s| s.dataset.as_str()).collect();
        datasets.dedup();
        for dataset in datasets {
            let mut rankers: Vec<&str> = data
                .sweep
                .iter()
                .filter(|s| s.dataset == dataset)
                .map(|s| s.ranker.as_str())
                .collect();
            rankers.dedup();
            let series = |f: &dyn Fn(&super::SweepPoint) -> Option<(f64, Option<f64>)>| -> Vec<Series> {
                rankers
                    .iter()
                    .map(|r| Series {
                        name: r.to_string(),
                        points: data
                            .sweep
                            .iter()
                            .filter(|s| s.dataset == dataset && s.ranker == *r)
                            .filter_map(|s| f(s).map(|(y, e)| (s.sample_size as f64, y, e)))
                            .collect(),
                    })
                    .collect()
            };
            out.push_str(&line_chart(
                &format!("{dataset}: learning curve"),
                "training samples",
                "mean validation score",
                &series(&|s| s.mean_score.map(|m| (m, None))),
            ));
            out.push_str(&line_chart(
                &format!("{dataset}: fit time"),
                "training samples",
                "seconds",
                &series(&|s| Some((s.fit_time_mean, Some(s.fit_time_stdev)))),
            ));
        }
        out.push_str("</div>");
    }
    out.push_str("</body></html>\n");
    Ok(out)
}
