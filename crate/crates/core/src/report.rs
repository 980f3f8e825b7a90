//! Aggregation of trial records into metric tables: per-cell accuracy and
//! its knowledge-adjusted relatives for QA runs, pooled error scores for
//! calculation runs, rate-weighted indices, and text/CSV/JSON renderings.

use std::collections::BTreeMap;
use std::fmt::Write as FmtWrite;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, SourceTag};
use crate::masking::MaskMode;
use crate::metrics::{
    calc_oracle, calc_scores_pooled, effective_accuracy, knowledge_independence,
    normalized_accuracy, paired_ability, weighted_geometric_index, weighted_linear_index,
    CalcGround, CalcScores, MetricsCell, MetricsError,
};
use crate::runner::{rate_of_key, ParsedAnswer, TrialRecord};

/// One aggregated QA grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaCellRow {
    pub source: SourceTag,
    pub mode: MaskMode,
    pub rate: f64,
    pub cell: MetricsCell,
}

/// A rate-weighted index value for one metric. `mode` is absent for the
/// average across masking modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexRow {
    pub source: SourceTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<MaskMode>,
    pub metric: String,
    pub x1: Option<f64>,
    pub x2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaReport {
    pub rows: Vec<QaCellRow>,
    pub indices: Vec<IndexRow>,
}

/// One aggregated calculation grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalcCellRow {
    pub mode: MaskMode,
    pub rate: f64,
    pub scores: CalcScores,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalcReport {
    pub rows: Vec<CalcCellRow>,
}

/// Everything derived from one campaign's records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qa: Option<QaReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calc: Option<CalcReport>,
}

/// Aggregate records into a report. QA records are grouped per (source,
/// mode, rate); relative metrics are filled from the same source's
/// unmasked cell and from the generated-question baseline at the same
/// mode and rate. Calculation records are judged against their task's
/// arithmetic chain.
pub fn build_report(
    name: &str,
    records: &[TrialRecord],
    corpus: &Corpus,
) -> Result<Report, ReportError> {
    if records.is_empty() {
        return Err(ReportError::Empty);
    }
    match corpus {
        Corpus::Qa(_) => {
            let qa = build_qa_report(records)?;
            Ok(Report {
                name: name.to_string(),
                qa: Some(qa),
                calc: None,
            })
        }
        Corpus::Calc(tasks) => {
            let mut grounds = BTreeMap::new();
            for task in tasks {
                grounds.insert(task.id.clone(), calc_oracle(&task.givens)?);
            }
            let calc = build_calc_report(records, &grounds)?;
            Ok(Report {
                name: name.to_string(),
                qa: None,
                calc: Some(calc),
            })
        }
    }
}

fn mode_rank(mode: MaskMode) -> usize {
    MaskMode::ALL.iter().position(|m| *m == mode).unwrap_or(0)
}

fn source_rank(source: SourceTag) -> usize {
    SourceTag::ALL.iter().position(|s| *s == source).unwrap_or(0)
}

/// (source, mode, trials, correct, missing) keyed by display order.
type QaTally = BTreeMap<(usize, usize, u32), (SourceTag, MaskMode, usize, usize, usize)>;

fn build_qa_report(records: &[TrialRecord]) -> Result<QaReport, ReportError> {
    // tally per (source, mode, rate_key)
    let mut counts = QaTally::new();
    for record in records {
        let source = record.source_tag.ok_or_else(|| ReportError::Mismatch {
            message: format!(
                "record {} carries no source tag; it is not a QA trial",
                record.item_id
            ),
        })?;
        let entry = counts
            .entry((source_rank(source), mode_rank(record.mode), record.rate_key))
            .or_insert((source, record.mode, 0, 0, 0));
        entry.2 += 1;
        if record.correct == Some(true) {
            entry.3 += 1;
        }
        if record.answer == ParsedAnswer::Missing {
            entry.4 += 1;
        }
    }

    let mut rows: Vec<QaCellRow> = counts
        .iter()
        .map(|(&(_, _, rate_key), &(source, mode, trials, correct, missing))| QaCellRow {
            source,
            mode,
            rate: rate_of_key(rate_key),
            cell: MetricsCell::from_counts(correct, missing, trials),
        })
        .collect();

    // relative metrics need the unmasked cell of each (source, mode) and
    // the baseline source's cells
    let acc_at = |rows: &[QaCellRow], source: SourceTag, mode: MaskMode, rate: f64| {
        rows.iter()
            .find(|r| r.source == source && r.mode == mode && r.rate == rate)
            .and_then(|r| r.cell.acc)
    };
    let na_at = |rows: &[QaCellRow], source: SourceTag, mode: MaskMode, rate: f64| {
        rows.iter()
            .find(|r| r.source == source && r.mode == mode && r.rate == rate)
            .and_then(|r| r.cell.na)
    };

    let snapshot = rows.clone();
    for row in &mut rows {
        let acc0 = acc_at(&snapshot, row.source, row.mode, 0.0);
        if let (Some(acc), Some(acc0)) = (row.cell.acc, acc0) {
            row.cell.na = normalized_accuracy(acc, acc0);
        }
    }

    let snapshot = rows.clone();
    for row in &mut rows {
        let Some(na_d) = row.cell.na else { continue };
        let Some(na_u) = na_at(&snapshot, SourceTag::Uqa, row.mode, row.rate) else {
            continue;
        };
        row.cell.pa = paired_ability(na_d, na_u);
        if let (Some(pa), Some(acc0)) = (row.cell.pa, acc_at(&snapshot, row.source, row.mode, 0.0))
        {
            row.cell.ea = Some(effective_accuracy(acc0 * 100.0, pa));
        }
        if let (Some(acc_d), Some(acc_u)) = (
            row.cell.acc,
            acc_at(&snapshot, SourceTag::Uqa, row.mode, row.rate),
        ) {
            row.cell.ki = knowledge_independence(acc_d, acc_u);
        }
    }

    let indices = build_qa_indices(&rows);
    Ok(QaReport { rows, indices })
}

fn build_qa_indices(rows: &[QaCellRow]) -> Vec<IndexRow> {
    let mut indices = Vec::new();
    let mut sources: Vec<SourceTag> = rows.iter().map(|r| r.source).collect();
    sources.sort_by_key(|s| source_rank(*s));
    sources.dedup();
    let mut modes: Vec<MaskMode> = rows.iter().map(|r| r.mode).collect();
    modes.sort_by_key(|m| mode_rank(*m));
    modes.dedup();

    for &source in &sources {
        let mut acc_x1 = Vec::new();
        let mut acc_x2 = Vec::new();
        for &mode in &modes {
            let points = |value: fn(&MetricsCell) -> Option<f64>| -> Vec<(f64, f64)> {
                rows.iter()
                    .filter(|r| r.source == source && r.mode == mode)
                    .filter_map(|r| value(&r.cell).map(|v| (r.rate, v)))
                    .collect()
            };
            let acc_points: Vec<(f64, f64)> = points(|c| c.acc)
                .into_iter()
                .map(|(r, v)| (r, v * 100.0))
                .collect();
            let x1 = weighted_linear_index(&acc_points);
            let x2 = weighted_geometric_index(&acc_points);
            if let Some(v) = x1 {
                acc_x1.push(v);
            }
            if let Some(v) = x2 {
                acc_x2.push(v);
            }
            indices.push(IndexRow {
                source,
                mode: Some(mode),
                metric: "acc".to_string(),
                x1,
                x2,
            });
            for (metric, getter) in [
                ("na", (|c: &MetricsCell| c.na) as fn(&MetricsCell) -> Option<f64>),
                ("ea", |c: &MetricsCell| c.ea),
                ("ki", |c: &MetricsCell| c.ki),
            ] {
                let metric_points = points(getter);
                indices.push(IndexRow {
                    source,
                    mode: Some(mode),
                    metric: metric.to_string(),
                    x1: weighted_linear_index(&metric_points),
                    x2: weighted_geometric_index(&metric_points),
                });
            }
        }
        // average of the per-mode accuracy indices
        let mean = |values: &[f64]| {
            (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
        };
        indices.push(IndexRow {
            source,
            mode: None,
            metric: "acc".to_string(),
            x1: mean(&acc_x1),
            x2: mean(&acc_x2),
        });
    }
    indices
}

/// Per-cell pairs of (answers, chain truths) keyed by display order.
type CalcTally<'a> =
    BTreeMap<(usize, u32), (MaskMode, Vec<(&'a BTreeMap<String, f64>, &'a CalcGround)>)>;

fn build_calc_report(
    records: &[TrialRecord],
    grounds: &BTreeMap<String, CalcGround>,
) -> Result<CalcReport, ReportError> {
    let empty = BTreeMap::new();
    let mut cells = CalcTally::new();
    for record in records {
        if record.source_tag.is_some() {
            return Err(ReportError::Mismatch {
                message: format!(
                    "record {} carries a source tag; it is not a calculation trial",
                    record.item_id
                ),
            });
        }
        let ground = grounds
            .get(&record.item_id)
            .ok_or_else(|| ReportError::UnknownItem {
                item: record.item_id.clone(),
            })?;
        let answers = match &record.answer {
            ParsedAnswer::Quantities { values } => values,
            ParsedAnswer::Missing => &empty,
            ParsedAnswer::Choice { .. } => {
                return Err(ReportError::Mismatch {
                    message: format!("record {} answered a choice", record.item_id),
                })
            }
        };
        cells
            .entry((mode_rank(record.mode), record.rate_key))
            .or_insert((record.mode, Vec::new()))
            .1
            .push((answers, ground));
    }

    let rows = cells
        .iter()
        .map(|(&(_, rate_key), (mode, pairs))| CalcCellRow {
            mode: *mode,
            rate: rate_of_key(rate_key),
            scores: calc_scores_pooled(pairs),
        })
        .collect();
    Ok(CalcReport { rows })
}

fn fmt_opt(value: Option<f64>, scale: f64, width: usize) -> String {
    match value {
        Some(v) => format!("{:>width$.2}", v * scale, width = width),
        None => format!("{:>width$}", "-", width = width),
    }
}

/// Render the report as fixed-width text tables.
pub fn render_summary(report: &Report) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# Report: {}", report.name);
    if let Some(qa) = &report.qa {
        render_qa_summary(&mut out, qa);
    }
    if let Some(calc) = &report.calc {
        render_calc_summary(&mut out, calc);
    }
    out
}

fn render_qa_summary(out: &mut String, qa: &QaReport) {
    let mut sources: Vec<SourceTag> = qa.rows.iter().map(|r| r.source).collect();
    sources.sort_by_key(|s| source_rank(*s));
    sources.dedup();
    for source in sources {
        let acc0 = qa
            .rows
            .iter()
            .find(|r| r.source == source && r.rate == 0.0)
            .and_then(|r| r.cell.acc);
        let _ = writeln!(
            out,
            "\n== QA cells: {source} (mask-free Acc {}%) ==",
            fmt_opt(acc0, 100.0, 0).trim()
        );
        let _ = writeln!(
            out,
            "{:<16} {:>6} {:>7} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8}",
            "mode", "rate", "trials", "Acc%", "NAR%", "NA", "PA", "EA", "KI"
        );
        for row in qa.rows.iter().filter(|r| r.source == source) {
            let _ = writeln!(
                out,
                "{:<16} {:>6.2} {:>7} {} {} {} {} {} {}",
                row.mode.to_string(),
                row.rate,
                row.cell.trials,
                fmt_opt(row.cell.acc, 100.0, 8),
                fmt_opt(row.cell.nar, 100.0, 8),
                fmt_opt(row.cell.na, 1.0, 8),
                fmt_opt(row.cell.pa, 1.0, 8),
                fmt_opt(row.cell.ea, 1.0, 8),
                fmt_opt(row.cell.ki, 1.0, 8),
            );
        }
        let _ = writeln!(out, "\n== Rate-weighted indices: {source} ==");
        let _ = writeln!(
            out,
            "{:<8} {:<16} {:>8} {:>8}",
            "metric", "mode", "X1", "X2"
        );
        for index in qa.indices.iter().filter(|i| i.source == source) {
            let mode = index
                .mode
                .map(|m| m.to_string())
                .unwrap_or_else(|| "(mode mean)".to_string());
            let _ = writeln!(
                out,
                "{:<8} {:<16} {} {}",
                index.metric,
                mode,
                fmt_opt(index.x1, 1.0, 8),
                fmt_opt(index.x2, 1.0, 8),
            );
        }
    }
}

fn render_calc_summary(out: &mut String, calc: &CalcReport) {
    let _ = writeln!(out, "\n== Calculation error scores ==");
    let _ = writeln!(
        out,
        "{:<16} {:>6} {:>7} {:>8} {:>10} {:>10} {:>12}",
        "mode", "rate", "trials", "NAR%", "P_delta%", "P_sigma%", "P_sigma/2%"
    );
    for row in &calc.rows {
        let _ = writeln!(
            out,
            "{:<16} {:>6.2} {:>7} {} {} {} {}",
            row.mode.to_string(),
            row.rate,
            row.scores.trials,
            fmt_opt(row.scores.nar, 100.0, 8),
            fmt_opt(row.scores.p_delta, 100.0, 10),
            fmt_opt(row.scores.p_sigma, 100.0, 10),
            fmt_opt(row.scores.p_half_sigma, 100.0, 12),
        );
    }
}

/// Write the whole report as pretty JSON.
pub fn write_json(report: &Report, path: &Path) -> Result<(), ReportError> {
    let text = serde_json::to_string_pretty(report).map_err(|e| ReportError::Mismatch {
        message: e.to_string(),
    })?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

/// Write CSV tables into a directory; returns the files written.
pub fn write_csv(report: &Report, dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    if let Some(qa) = &report.qa {
        let cells = dir.join("qa_cells.csv");
        let mut writer = csv::Writer::from_path(&cells)?;
        writer.write_record([
            "source", "mode", "rate", "trials", "correct", "missing", "acc", "nar", "na", "pa",
            "ea", "ki",
        ])?;
        for row in &qa.rows {
            writer.write_record([
                row.source.to_string(),
                row.mode.to_string(),
                row.rate.to_string(),
                row.cell.trials.to_string(),
                row.cell.correct.to_string(),
                row.cell.missing.to_string(),
                csv_opt(row.cell.acc),
                csv_opt(row.cell.nar),
                csv_opt(row.cell.na),
                csv_opt(row.cell.pa),
                csv_opt(row.cell.ea),
                csv_opt(row.cell.ki),
            ])?;
        }
        writer.flush()?;
        written.push(cells);

        let indices = dir.join("qa_indices.csv");
        let mut writer = csv::Writer::from_path(&indices)?;
        writer.write_record(["source", "mode", "metric", "x1", "x2"])?;
        for index in &qa.indices {
            writer.write_record([
                index.source.to_string(),
                index
                    .mode
                    .map(|m| m.to_string())
                    .unwrap_or_else(|| "mean".to_string()),
                index.metric.clone(),
                csv_opt(index.x1),
                csv_opt(index.x2),
            ])?;
        }
        writer.flush()?;
        written.push(indices);
    }
    if let Some(calc) = &report.calc {
        let cells = dir.join("calc_cells.csv");
        let mut writer = csv::Writer::from_path(&cells)?;
        writer.write_record([
            "mode",
            "rate",
            "trials",
            "nar",
            "p_delta",
            "p_delta_raw",
            "p_sigma",
            "p_half_sigma",
        ])?;
        for row in &calc.rows {
            writer.write_record([
                row.mode.to_string(),
                row.rate.to_string(),
                row.scores.trials.to_string(),
                csv_opt(row.scores.nar),
                csv_opt(row.scores.p_delta),
                csv_opt(row.scores.p_delta_raw),
                csv_opt(row.scores.p_sigma),
                csv_opt(row.scores.p_half_sigma),
            ])?;
        }
        writer.flush()?;
        written.push(cells);

        let variables = dir.join("calc_variables.csv");
        let mut writer = csv::Writer::from_path(&variables)?;
        writer.write_record([
            "mode",
            "rate",
            "variable",
            "truth",
            "answered",
            "mean_delta",
            "trimmed_mean_delta",
            "p_sigma",
            "p_half_sigma",
        ])?;
        for row in &calc.rows {
            for (name, score) in &row.scores.per_variable {
                writer.write_record([
                    row.mode.to_string(),
                    row.rate.to_string(),
                    name.clone(),
                    score.truth.to_string(),
                    score.answered.to_string(),
                    csv_opt(score.mean_delta),
                    csv_opt(score.trimmed_mean_delta),
                    csv_opt(score.p_sigma),
                    csv_opt(score.p_half_sigma),
                ])?;
            }
        }
        writer.flush()?;
        written.push(variables);
    }
    Ok(written)
}

fn csv_opt(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("no records to aggregate")]
    Empty,
    #[error("record references unknown item {item}")]
    UnknownItem { item: String },
    #[error("{message}")]
    Mismatch { message: String },
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{CalcGivens, CalcTask, QaItem};
    use crate::runner::rate_key;

    fn record(
        source: SourceTag,
        mode: MaskMode,
        rate: f64,
        trial: usize,
        correct: bool,
        missing: bool,
    ) -> TrialRecord {
        TrialRecord {
            item_id: format!("{source}-item"),
            source_tag: Some(source),
            mode,
            rate_key: rate_key(rate),
            trial,
            masked_count: 0,
            maskable_count: 10,
            answer: if missing {
                ParsedAnswer::Missing
            } else {
                ParsedAnswer::Choice { answer: 1 }
            },
            correct: Some(correct && !missing),
            response: None,
            error: None,
        }
    }

    /// `correct` out of `total` trials for one cell.
    fn cell_records(
        source: SourceTag,
        mode: MaskMode,
        rate: f64,
        correct: usize,
        total: usize,
    ) -> Vec<TrialRecord> {
        (0..total)
            .map(|trial| record(source, mode, rate, trial, trial < correct, false))
            .collect()
    }

    fn qa_corpus() -> Corpus {
        Corpus::Qa(vec![QaItem {
            id: "q".to_string(),
            question: "?".to_string(),
            options: vec!["a".to_string(), "b".to_string()],
            answer_index: 0,
            evidence: "e".to_string(),
            rationale: None,
            source_tag: SourceTag::Uqa,
        }])
    }

    #[test]
    fn qa_cells_carry_relative_metrics() {
        let mut records = Vec::new();
        // baseline dataset: unmasked 90%, masked 72% -> NA 0.8
        records.extend(cell_records(SourceTag::Uqa, MaskMode::Regular, 0.0, 90, 100));
        records.extend(cell_records(SourceTag::Uqa, MaskMode::Regular, 0.5, 72, 100));
        // probed dataset: unmasked 80%, masked 40% -> NA 0.5
        records.extend(cell_records(SourceTag::Rqa, MaskMode::Regular, 0.0, 80, 100));
        records.extend(cell_records(SourceTag::Rqa, MaskMode::Regular, 0.5, 40, 100));

        let report = build_report("t", &records, &qa_corpus()).unwrap();
        let qa = report.qa.unwrap();
        let rqa = qa
            .rows
            .iter()
            .find(|r| r.source == SourceTag::Rqa && r.rate == 0.5)
            .unwrap();
        assert_eq!(rqa.cell.acc, Some(0.4));
        assert_eq!(rqa.cell.na, Some(0.5));
        let pa = rqa.cell.pa.unwrap();
        assert!((pa - (0.5f64 * 0.8).sqrt()).abs() < 1e-12, "{pa}");
        let ea = rqa.cell.ea.unwrap();
        assert!((ea - 80.0 * pa).abs() < 1e-12, "{ea}");
        let ki = rqa.cell.ki.unwrap();
        assert!((ki - (1.0 - 0.4 / 0.72)).abs() < 1e-12, "{ki}");

        // the baseline paired with itself: PA equals NA, KI is zero
        let uqa = qa
            .rows
            .iter()
            .find(|r| r.source == SourceTag::Uqa && r.rate == 0.5)
            .unwrap();
        assert!((uqa.cell.pa.unwrap() - 0.8).abs() < 1e-12);
        assert!((uqa.cell.pa.unwrap() - uqa.cell.na.unwrap()).abs() < 1e-12);
        assert_eq!(uqa.cell.ki, Some(0.0));
        // and its unmasked row normalizes to one
        let uqa0 = qa
            .rows
            .iter()
            .find(|r| r.source == SourceTag::Uqa && r.rate == 0.0)
            .unwrap();
        assert_eq!(uqa0.cell.na, Some(1.0));
    }

    #[test]
    fn indices_summarize_the_rate_curve() {
        let mut records = Vec::new();
        records.extend(cell_records(SourceTag::Uqa, MaskMode::Regular, 0.0, 100, 100));
        records.extend(cell_records(SourceTag::Uqa, MaskMode::Regular, 0.2, 90, 100));
        records.extend(cell_records(SourceTag::Uqa, MaskMode::Regular, 0.4, 60, 100));
        let report = build_report("t", &records, &qa_corpus()).unwrap();
        let qa = report.qa.unwrap();
        let acc = qa
            .indices
            .iter()
            .find(|i| i.metric == "acc" && i.mode == Some(MaskMode::Regular))
            .unwrap();
        // X1 = (0.2*90 + 0.4*60) / 0.6
        let expected = (0.2 * 90.0 + 0.4 * 60.0) / 0.6;
        assert!((acc.x1.unwrap() - expected).abs() < 1e-9);
        // X2 = sqrt(90 * 60)
        assert!((acc.x2.unwrap() - (90.0f64 * 60.0).sqrt()).abs() < 1e-9);
        // the mode mean over a single mode repeats it
        let mean = qa
            .indices
            .iter()
            .find(|i| i.metric == "acc" && i.mode.is_none())
            .unwrap();
        assert_eq!(mean.x1, acc.x1);
    }

    fn calc_corpus() -> Corpus {
        Corpus::Calc(vec![CalcTask {
            id: "c1".to_string(),
            preamble: None,
            document: "Sales Plan".to_string(),
            conditions: "recall".to_string(),
            simulation: "NR = A - C =".to_string(),
            givens: CalcGivens {
                production_2023: 15840.0,
                production_plan_2024: 27720.0,
                inventory: 3960.0,
                planned_revenue: 2.772e9,
                model_revenue: 1.98e9,
                recall_unit_cost: 8000.0,
                reduction_rate: 0.25,
            },
            targets: Default::default(),
        }])
    }

    fn calc_record(rate: f64, trial: usize, values: &[(&str, f64)]) -> TrialRecord {
        TrialRecord {
            item_id: "c1".to_string(),
            source_tag: None,
            mode: MaskMode::Regular,
            rate_key: rate_key(rate),
            trial,
            masked_count: 0,
            maskable_count: 10,
            answer: if values.is_empty() {
                ParsedAnswer::Missing
            } else {
                ParsedAnswer::Quantities {
                    values: values
                        .iter()
                        .map(|(k, v)| (k.to_string(), *v))
                        .collect(),
                }
            },
            correct: None,
            response: None,
            error: None,
        }
    }

    #[test]
    fn calc_cells_score_against_the_task_chain() {
        let exact: Vec<(&str, f64)> = vec![
            ("P", 62_500.0),
            ("N", 23_760.0),
            ("Y", 4.95e8),
            ("E_prime", 1.38996e9),
            ("D_prime", 2.18196e9),
        ];
        let mut records: Vec<TrialRecord> =
            (0..4).map(|t| calc_record(0.2, t, &exact)).collect();
        records.push(calc_record(0.2, 4, &[])); // one silent trial
        let report = build_report("t", &records, &calc_corpus()).unwrap();
        let calc = report.calc.unwrap();
        assert_eq!(calc.rows.len(), 1);
        let scores = &calc.rows[0].scores;
        assert_eq!(scores.trials, 5);
        assert_eq!(scores.nar, Some(0.2));
        assert_eq!(scores.p_delta, Some(1.0));
        assert_eq!(scores.p_sigma, Some(1.0));
    }

    #[test]
    fn unknown_calc_item_is_an_error() {
        let records = vec![calc_record(0.2, 0, &[("P", 1.0)])];
        let mut tasks_gone = records.clone();
        tasks_gone[0].item_id = "ghost".to_string();
        let err = build_report("t", &tasks_gone, &calc_corpus()).unwrap_err();
        assert!(matches!(err, ReportError::UnknownItem { .. }), "{err}");
    }

    #[test]
    fn summary_renders_every_section() {
        let mut records = Vec::new();
        records.extend(cell_records(SourceTag::Uqa, MaskMode::Regular, 0.0, 9, 10));
        records.extend(cell_records(SourceTag::Uqa, MaskMode::Regular, 0.5, 7, 10));
        let report = build_report("demo", &records, &qa_corpus()).unwrap();
        let text = render_summary(&report);
        assert!(text.contains("# Report: demo"));
        assert!(text.contains("== QA cells: uqa (mask-free Acc 90.00%) =="));
        assert!(text.contains("== Rate-weighted indices: uqa =="));
        assert!(text.contains("regular"));
    }

    #[test]
    fn csv_and_json_mirrors_are_written() {
        let mut records = Vec::new();
        records.extend(cell_records(SourceTag::Uqa, MaskMode::Regular, 0.0, 9, 10));
        records.extend(cell_records(SourceTag::Uqa, MaskMode::Regular, 0.5, 7, 10));
        let report = build_report("demo", &records, &qa_corpus()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let files = write_csv(&report, dir.path()).unwrap();
        assert_eq!(files.len(), 2);
        let cells = std::fs::read_to_string(&files[0]).unwrap();
        assert!(cells.starts_with("source,mode,rate,trials"));
        assert_eq!(cells.lines().count(), 3);

        let json_path = dir.path().join("report.json");
        write_json(&report, &json_path).unwrap();
        let parsed: Report =
            serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
        assert_eq!(parsed, report);
    }

    #[test]
    fn empty_records_are_rejected() {
        assert!(matches!(
            build_report("t", &[], &qa_corpus()),
            Err(ReportError::Empty)
        ));
    }
}
