//! Accuracy tables.
//!
//! For each task two views are produced: mean accuracy per (kind, length)
//! averaged over runs, and per-run accuracy for each kind at the longest
//! length (3 s by default). The published human-subject tables are bundled
//! as a static, non-recomputed reference for side-by-side display.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::Serialize;

use crate::classify::{EvaluationFile, Task};
use crate::labels::StimulusKind;

/// Placeholder for cells without a result.
pub const MISSING: &str = "—";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TableSource {
    Synthetic,
    /// Published values, displayed verbatim.
    Reference,
}

/// A grid of accuracies in percent with a bottom average row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportTable {
    pub id: String,
    pub title: String,
    pub source: TableSource,
    pub corner: String,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    pub cells: Vec<Vec<Option<f64>>>,
    pub average_label: String,
    pub averages: Vec<Option<f64>>,
}

impl ReportTable {
    pub fn cell(&self, row: &str, col: &str) -> Option<f64> {
        let r = self.row_labels.iter().position(|l| l == row)?;
        let c = self.col_labels.iter().position(|l| l == col)?;
        self.cells[r][c]
    }

    pub fn average(&self, col: &str) -> Option<f64> {
        let c = self.col_labels.iter().position(|l| l == col)?;
        self.averages[c]
    }

    pub fn is_complete(&self) -> bool {
        self.cells.iter().flatten().all(Option::is_some)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub runs: Vec<String>,
    pub tables: Vec<ReportTable>,
    pub reference: Vec<ReportTable>,
}

impl EvaluationReport {
    pub fn table(&self, id: &str) -> Option<&ReportTable> {
        self.tables.iter().chain(&self.reference).find(|t| t.id == id)
    }
}

fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (s, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| s / n as f64)
}

fn column_means(cells: &[Vec<Option<f64>>], n_cols: usize) -> Vec<Option<f64>> {
    (0..n_cols).map(|c| mean(cells.iter().filter_map(|r| r[c]))).collect()
}

fn length_label(ms: u32) -> String {
    format!("{}s", ms as f64 / 1000.0)
}

/// Tables from evaluation results. Every default kind and length gets a
/// row / column; cells without results stay `None`.
pub fn build_report(files: &[EvaluationFile]) -> EvaluationReport {
    let mut lengths: BTreeSet<u32> = [500, 1000, 3000].into_iter().collect();
    let mut kinds: BTreeSet<StimulusKind> = StimulusKind::ALL.into_iter().collect();
    // (task, kind, length) -> run -> accuracy %
    let mut acc: BTreeMap<(Task, StimulusKind, u32), BTreeMap<usize, f64>> = BTreeMap::new();
    // Files sharing a run label (e.g. one per task) form one run.
    let mut runs: Vec<String> = Vec::new();
    for file in files {
        let r = match runs.iter().position(|name| *name == file.run) {
            Some(r) => r,
            None => {
                runs.push(file.run.clone());
                runs.len() - 1
            }
        };
        for ev in &file.evaluations {
            lengths.insert(ev.condition.length_ms);
            kinds.insert(ev.condition.kind);
            acc.entry((ev.task, ev.condition.kind, ev.condition.length_ms))
                .or_default()
                .insert(r, 100.0 * ev.accuracy);
        }
    }
    let kinds: Vec<StimulusKind> = kinds.into_iter().collect();
    let lengths: Vec<u32> = lengths.into_iter().collect();
    let longest = *lengths.last().expect("default lengths present");
    let mut tables = Vec::new();
    for task in Task::ALL {
        let cells: Vec<Vec<Option<f64>>> = kinds
            .iter()
            .map(|&k| {
                lengths
                    .iter()
                    .map(|&l| acc.get(&(task, k, l)).and_then(|m| mean(m.values().copied())))
                    .collect()
            })
            .collect();
        tables.push(ReportTable {
            id: format!("{task}_by_length"),
            title: format!("CA for {} by stimulus length (mean over runs)", task.title()),
            source: TableSource::Synthetic,
            corner: "Stimulus type".into(),
            row_labels: kinds.iter().map(|k| k.display_name().to_string()).collect(),
            col_labels: lengths.iter().map(|&l| length_label(l)).collect(),
            averages: column_means(&cells, lengths.len()),
            cells,
            average_label: "Average of all stimuli".into(),
        });

        let mut cells: Vec<Vec<Option<f64>>> = (0..runs.len())
            .map(|r| {
                kinds
                    .iter()
                    .map(|&k| acc.get(&(task, k, longest)).and_then(|m| m.get(&r).copied()))
                    .collect()
            })
            .collect();
        for row in &mut cells {
            let best = row.iter().flatten().copied().fold(None, |b: Option<f64>, v| Some(b.map_or(v, |b| b.max(v))));
            row.push(best);
        }
        let mut cols: Vec<String> = kinds.iter().map(|k| k.display_name().to_string()).collect();
        cols.push("Best".into());
        tables.push(ReportTable {
            id: format!("{task}_by_run"),
            title: format!("CA for {} by stimulus type at {} per run", task.title(), length_label(longest)),
            source: TableSource::Synthetic,
            corner: "Run".into(),
            row_labels: runs.clone(),
            averages: column_means(&cells, cols.len()),
            col_labels: cols,
            cells,
            average_label: "Average of all".into(),
        });
    }
    EvaluationReport {
        runs,
        tables,
        reference: reference_tables(),
    }
}

fn fixture(
    id: &str,
    title: &str,
    corner: &str,
    rows: &[&str],
    cols: &[&str],
    cells: &[&[f64]],
    average_label: &str,
    averages: &[f64],
) -> ReportTable {
    ReportTable {
        id: id.into(),
        title: title.into(),
        source: TableSource::Reference,
        corner: corner.into(),
        row_labels: rows.iter().map(|s| s.to_string()).collect(),
        col_labels: cols.iter().map(|s| s.to_string()).collect(),
        cells: cells.iter().map(|r| r.iter().map(|&v| Some(v)).collect()).collect(),
        average_label: average_label.into(),
        averages: averages.iter().map(|&v| Some(v)).collect(),
    }
}

/// Append a "Best" column (row maximum) whose average is the mean of the maxima.
fn with_best_column(mut t: ReportTable) -> ReportTable {
    for row in &mut t.cells {
        let best = row.iter().flatten().copied().fold(f64::MIN, f64::max);
        row.push(Some(best));
    }
    let best_avg = mean(t.cells.iter().filter_map(|r| *r.last().unwrap()));
    t.averages.push(best_avg);
    t.col_labels.push("Best".into());
    t
}

/// The published five-subject accuracies (percent), exactly as printed.
/// Average rows are the printed values, not recomputed.
pub fn reference_tables() -> Vec<ReportTable> {
    const KINDS: [&str; 4] = ["SAM", "FAM", "Clicks", "AM/FM"];
    const LENGTHS: [&str; 3] = ["0.5s", "1s", "3s"];
    const TYPES: [&str; 4] = ["SAM", "Flutter", "Clicks", "FM"];
    const SUBJECTS: [&str; 5] = ["#1", "#2", "#3", "#4", "#5"];
    vec![
        fixture(
            "reference_tvnt_by_length",
            "Published CA for target vs non-target by stimulus length (5 human subjects)",
            "ASSR stimuli type",
            &KINDS,
            &LENGTHS,
            &[
                &[60.67, 66.44, 74.44],
                &[54.00, 64.22, 72.67],
                &[57.78, 64.67, 70.67],
                &[57.33, 61.33, 71.78],
            ],
            "Average of all stimuli",
            &[57.44, 64.17, 72.39],
        ),
        with_best_column(fixture(
            "reference_tvnt_by_subject",
            "Published CA for target vs non-target by modulation type, 3s (human subjects)",
            "Subject",
            &SUBJECTS,
            &TYPES,
            &[
                &[72.22, 80.00, 70.00, 73.33],
                &[86.67, 81.11, 58.89, 77.78],
                &[71.11, 82.22, 90.00, 88.89],
                &[77.78, 62.22, 61.11, 57.78],
                &[64.44, 57.78, 73.33, 61.11],
            ],
            "Average of all",
            &[74.44, 72.67, 70.67, 71.78],
        )),
        fixture(
            "reference_direction_by_length",
            "Published CA for target direction by stimulus length (5 human subjects)",
            "ASSR stimuli type",
            &KINDS,
            &LENGTHS,
            &[
                &[36.00, 47.33, 70.00],
                &[45.33, 52.67, 60.67],
                &[39.33, 51.33, 57.33],
                &[37.33, 40.67, 64.00],
            ],
            "Average of all stimuli",
            &[39.50, 48.00, 63.00],
        ),
        with_best_column(fixture(
            "reference_direction_by_subject",
            "Published CA for target direction by modulation type, 3s (human subjects)",
            "Subject",
            &SUBJECTS,
            &TYPES,
            &[
                &[66.67, 73.33, 63.33, 66.67],
                &[86.67, 66.67, 36.67, 66.67],
                &[63.33, 73.33, 86.67, 96.67],
                &[73.33, 46.67, 56.67, 33.33],
                &[60.00, 43.33, 43.33, 56.67],
            ],
            "Average of all",
            &[70.00, 60.67, 57.33, 64.00],
        )),
    ]
}

fn fmt_cell(v: Option<f64>) -> String {
    v.map_or_else(|| MISSING.to_string(), |v| format!("{v:.2}%"))
}

fn render_table(out: &mut String, t: &ReportTable) {
    let source = match t.source {
        TableSource::Synthetic => "synthetic",
        TableSource::Reference => "reference, not recomputed",
    };
    let _ = writeln!(out, "{} [{source}]", t.title);
    let mut rows: Vec<Vec<String>> = Vec::new();
    rows.push(std::iter::once(t.corner.clone()).chain(t.col_labels.iter().cloned()).collect());
    for (label, cells) in t.row_labels.iter().zip(&t.cells) {
        rows.push(std::iter::once(label.clone()).chain(cells.iter().map(|&c| fmt_cell(c))).collect());
    }
    rows.push(
        std::iter::once(t.average_label.clone())
            .chain(t.averages.iter().map(|&c| fmt_cell(c)))
            .collect(),
    );
    let n_cols = rows[0].len();
    let widths: Vec<usize> = (0..n_cols)
        .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    let rule: String = widths.iter().map(|w| "-".repeat(w + 2)).collect::<Vec<_>>().join("+");
    for (i, r) in rows.iter().enumerate() {
        if i == 1 || i == rows.len() - 1 {
            let _ = writeln!(out, "{rule}");
        }
        let line: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(c, s)| {
                let pad = widths[c] - s.chars().count();
                if c == 0 {
                    format!(" {s}{} ", " ".repeat(pad))
                } else {
                    format!(" {}{s} ", " ".repeat(pad))
                }
            })
            .collect();
        let _ = writeln!(out, "{}", line.join("|"));
    }
    out.push('\n');
}

/// Aligned plain-text tables; reference tables follow when requested.
pub fn render_text(report: &EvaluationReport, include_reference: bool) -> String {
    let mut out = String::new();
    for t in &report.tables {
        render_table(&mut out, t);
    }
    if include_reference {
        for t in &report.reference {
            render_table(&mut out, t);
        }
    }
    out
}

/// Long-format CSV: `table,source,row,column,accuracy_percent`; average rows
/// use the table's average label as `row`; missing cells are empty.
pub fn render_csv(report: &EvaluationReport, include_reference: bool) -> String {
    let mut out = String::from("table,source,row,column,accuracy_percent\n");
    let tables = report
        .tables
        .iter()
        .chain(report.reference.iter().filter(|_| include_reference));
    let quote = |s: &str| {
        if s.contains([',', '"', '\n']) {
            format!("\"{}\"", s.replace('"', "\"\""))
        } else {
            s.to_string()
        }
    };
    for t in tables {
        let source = match t.source {
            TableSource::Synthetic => "synthetic",
            TableSource::Reference => "reference",
        };
        let rows = t
            .row_labels
            .iter()
            .zip(&t.cells)
            .chain(std::iter::once((&t.average_label, &t.averages)));
        for (label, cells) in rows {
            for (col, v) in t.col_labels.iter().zip(cells) {
                let value = v.map(|v| format!("{v:.2}")).unwrap_or_default();
                let _ = writeln!(out, "{},{source},{},{},{value}", t.id, quote(label), quote(col));
            }
        }
    }
    out
}
