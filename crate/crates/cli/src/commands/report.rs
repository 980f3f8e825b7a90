//! `report`: aggregate trial logs into JSON, CSV, and SVG curve files.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use maskeval_core::corpus::SourceTag;
use maskeval_core::masking::MaskMode;
use maskeval_core::metrics::{CalcScores, MetricsCell};
use maskeval_core::report::{build_report, write_csv, write_json, Report};
use maskeval_core::runner::{load_trial_log, rate_of_key, TrialRecord};
use maskeval_core::svg::{render_chart, ChartSpec, Series};

use super::corpus_for_records;

const QA_METRICS: [&str; 5] = ["acc", "na", "pa", "ea", "ki"];
const CALC_METRICS: [&str; 5] = ["p_delta", "p_delta_raw", "p_sigma", "p_half_sigma", "nar"];

#[derive(clap::Args, Debug)]
pub struct ReportArgs {
    /// Trial log; repeat to merge several runs (all logs must share one
    /// rate grid).
    #[arg(long = "log", required = true)]
    pub logs: Vec<PathBuf>,
    /// Separate log supplying the generated-question baseline.
    #[arg(long)]
    pub baseline_log: Option<PathBuf>,
    /// Corpus file; required for calculation logs (ground truth).
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Directory the report files are written into.
    #[arg(long)]
    pub out: PathBuf,
    /// Report name; defaults to the first log's file stem.
    #[arg(long)]
    pub name: Option<String>,
    /// Output formats, comma separated: json, csv, svg.
    #[arg(long, default_value = "json,csv,svg")]
    pub formats: String,
    /// Curve metrics, comma separated. Question logs: acc, na, pa, ea, ki.
    /// Calculation logs: p_delta, p_delta_raw, p_sigma, p_half_sigma, nar.
    #[arg(long)]
    pub metrics: Option<String>,
    /// Question sources to plot, comma separated: rqa, uqa, aqa.
    #[arg(long)]
    pub sources: Option<String>,
}

pub fn run(args: &ReportArgs) -> Result<()> {
    let mut json = false;
    let mut csv = false;
    let mut svg = false;
    for format in split_list(&args.formats) {
        match format.as_str() {
            "json" => json = true,
            "csv" => csv = true,
            "svg" => svg = true,
            other => bail!("unknown output format {other:?} (expected json, csv, or svg)"),
        }
    }
    if !(json || csv || svg) {
        bail!("at least one output format is required");
    }

    let mut logs: Vec<(&PathBuf, Vec<TrialRecord>)> = Vec::new();
    for path in args.logs.iter().chain(&args.baseline_log) {
        let records = load_trial_log(path)
            .with_context(|| format!("loading trial log {}", path.display()))?;
        logs.push((path, records));
    }
    check_shared_grid(&logs)?;
    let records: Vec<TrialRecord> = logs.into_iter().flat_map(|(_, r)| r).collect();

    let corpus = corpus_for_records(args.corpus.as_ref(), &records)?;
    let name = args.name.clone().unwrap_or_else(|| {
        args.logs[0]
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "report".to_string())
    });
    let report = build_report(&name, &records, &corpus)?;

    fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    let mut written: Vec<PathBuf> = Vec::new();
    if json {
        let path = args.out.join("report.json");
        write_json(&report, &path).with_context(|| format!("writing {}", path.display()))?;
        written.push(path);
    }
    if csv {
        written.extend(write_csv(&report, &args.out).context("writing the CSV tables")?);
    }
    if svg {
        written.extend(write_curves(&report, &args.out, args)?);
    }

    for path in &written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

/// Every log must probe the same rates; resumed or foreign logs with holes
/// in the grid would silently skew the aggregates.
fn check_shared_grid(logs: &[(&PathBuf, Vec<TrialRecord>)]) -> Result<()> {
    let union: BTreeSet<u32> = logs
        .iter()
        .flat_map(|(_, records)| records.iter().map(|r| r.rate_key))
        .collect();
    let mut problems = Vec::new();
    for (path, records) in logs {
        let grid: BTreeSet<u32> = records.iter().map(|r| r.rate_key).collect();
        let missing: Vec<String> = union
            .difference(&grid)
            .map(|&key| rate_of_key(key).to_string())
            .collect();
        if !missing.is_empty() {
            problems.push(format!(
                "{} is missing rates {}",
                path.display(),
                missing.join(", ")
            ));
        }
    }
    if !problems.is_empty() {
        bail!("trial logs do not share a rate grid: {}", problems.join("; "));
    }
    Ok(())
}

fn split_list(list: &str) -> Vec<String> {
    list.split(',')
        .map(str::trim)
        .filter(|part| !part.is_empty())
        .map(str::to_string)
        .collect()
}

/// One SVG line chart per (source, metric) for question reports and per
/// metric for calculation reports; one polyline per masking mode.
fn write_curves(report: &Report, dir: &Path, args: &ReportArgs) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    if let Some(qa) = &report.qa {
        let metrics = selected_metrics(&args.metrics, "acc", &QA_METRICS, "question")?;
        let present: Vec<SourceTag> = SourceTag::ALL
            .iter()
            .copied()
            .filter(|source| qa.rows.iter().any(|r| r.source == *source))
            .collect();
        let sources = match &args.sources {
            Some(list) => {
                let mut picked = Vec::new();
                for name in split_list(list) {
                    let source = SourceTag::parse(&name)
                        .with_context(|| format!("unknown source {name:?}"))?;
                    if !present.contains(&source) {
                        bail!("no {source} rows in the merged logs");
                    }
                    picked.push(source);
                }
                picked
            }
            None => present,
        };
        for source in sources {
            for metric in &metrics {
                let series: Vec<Series> = MaskMode::ALL
                    .iter()
                    .map(|&mode| Series {
                        label: mode.as_str().to_string(),
                        points: qa
                            .rows
                            .iter()
                            .filter(|r| r.source == source && r.mode == mode)
                            .filter_map(|r| {
                                qa_metric_value(&r.cell, metric).map(|v| (r.rate, v))
                            })
                            .collect(),
                    })
                    .filter(|series| !series.points.is_empty())
                    .collect();
                written.push(write_curve(
                    dir,
                    &format!("curve_{source}_{metric}.svg"),
                    &format!("{source}: {metric} by masking rate"),
                    metric,
                    &series,
                )?);
            }
        }
    }
    if let Some(calc) = &report.calc {
        let metrics = selected_metrics(&args.metrics, "p_delta", &CALC_METRICS, "calculation")?;
        for metric in &metrics {
            let series: Vec<Series> = MaskMode::ALL
                .iter()
                .map(|&mode| Series {
                    label: mode.as_str().to_string(),
                    points: calc
                        .rows
                        .iter()
                        .filter(|r| r.mode == mode)
                        .filter_map(|r| calc_metric_value(&r.scores, metric).map(|v| (r.rate, v)))
                        .collect(),
                })
                .filter(|series| !series.points.is_empty())
                .collect();
            written.push(write_curve(
                dir,
                &format!("curve_calc_{metric}.svg"),
                &format!("{metric} by masking rate"),
                metric,
                &series,
            )?);
        }
    }
    Ok(written)
}

fn selected_metrics(
    requested: &Option<String>,
    default: &str,
    valid: &[&str],
    kind: &str,
) -> Result<Vec<String>> {
    let metrics = match requested {
        Some(list) => split_list(list),
        None => vec![default.to_string()],
    };
    for metric in &metrics {
        if !valid.contains(&metric.as_str()) {
            bail!(
                "unknown {kind} metric {metric:?} (expected one of {})",
                valid.join(", ")
            );
        }
    }
    Ok(metrics)
}

fn write_curve(
    dir: &Path,
    file: &str,
    title: &str,
    metric: &str,
    series: &[Series],
) -> Result<PathBuf> {
    let spec = ChartSpec {
        title: title.to_string(),
        x_label: "masking rate".to_string(),
        y_label: if metric == "acc" {
            "acc (%)".to_string()
        } else {
            metric.to_string()
        },
        ..ChartSpec::default()
    };
    let path = dir.join(file);
    fs::write(&path, render_chart(&spec, series))
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn qa_metric_value(cell: &MetricsCell, metric: &str) -> Option<f64> {
    match metric {
        "acc" => cell.acc.map(|acc| acc * 100.0),
        "na" => cell.na,
        "pa" => cell.pa,
        "ea" => cell.ea,
        "ki" => cell.ki,
        _ => None,
    }
}

fn calc_metric_value(scores: &CalcScores, metric: &str) -> Option<f64> {
    match metric {
        "p_delta" => scores.p_delta,
        "p_delta_raw" => scores.p_delta_raw,
        "p_sigma" => scores.p_sigma,
        "p_half_sigma" => scores.p_half_sigma,
        "nar" => scores.nar,
        _ => None,
    }
}
