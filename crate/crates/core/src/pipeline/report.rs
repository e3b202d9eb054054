use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Algorithm, DataSource, ExperimentConfig, ExperimentResult, SuiteCell};
use crate::dataset::{Scale, Target};
use crate::error::{Error, Result};

pub const ROW_LABELS: [&str; 5] = ["Accuracy", "Precision", "Recall", "Train Time", "Test Time"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
    #[serde(alias = "md")]
    Markdown,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "md" | "markdown" => Ok(ReportFormat::Markdown),
            _ => Err(Error::invalid(format!("unknown report format `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportColumn {
    pub algorithm: String,
    /// Values in [`ROW_LABELS`] order; `None` when the cell was not run.
    pub values: Option<[f64; 5]>,
    pub error: Option<String>,
}

/// One device/setting table: rows are metrics, columns are algorithms.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportTable {
    pub title: String,
    pub columns: Vec<ReportColumn>,
}

/// Rounds to 6 significant digits.
pub fn significant(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.5e}").parse().expect("formatted float parses")
}

fn family_title(c: &ExperimentConfig) -> String {
    let source = match &c.train {
        DataSource::Synth {
            scale: Scale::TrainTest,
            ..
        } => "train/test".to_string(),
        DataSource::Synth {
            scale: Scale::Processed,
            ..
        } => "processed".to_string(),
        DataSource::Csv(p) => p
            .file_name()
            .map_or_else(|| p.display().to_string(), |f| f.to_string_lossy().into_owned()),
    };
    let mut title = format!("{} {source}", c.device.title());
    if c.drop_top_feature {
        title.push_str(", top-ranked feature removed");
    }
    if c.target == Target::Label {
        title.push_str(", binary label");
    }
    title
}

fn metrics(r: &ExperimentResult) -> [f64; 5] {
    [
        r.apr.accuracy,
        r.apr.precision,
        r.apr.recall,
        r.timing.train_seconds,
        r.timing.test_seconds,
    ]
}

/// Groups cells into tables by device and setting. A second result for an
/// already filled table cell opens a numbered copy of that table.
pub fn report_tables(cells: &[SuiteCell]) -> Vec<ReportTable> {
    let algorithms: Vec<Algorithm> = Algorithm::COLUMNS
        .into_iter()
        .filter(|a| cells.iter().any(|c| c.config.algorithm == *a))
        .collect();
    let mut tables: Vec<(String, ReportTable)> = Vec::new();
    for cell in cells {
        let family = family_title(&cell.config);
        let col = algorithms.iter().position(|a| *a == cell.config.algorithm).unwrap();
        let free = tables.iter().position(|(f, t)| {
            *f == family && t.columns[col].values.is_none() && t.columns[col].error.is_none()
        });
        let at = free.unwrap_or_else(|| {
            let copies = tables.iter().filter(|(f, _)| *f == family).count();
            let title = if copies == 0 {
                family.clone()
            } else {
                format!("{family} ({})", copies + 1)
            };
            let columns = algorithms
                .iter()
                .map(|a| ReportColumn {
                    algorithm: a.title().into(),
                    values: None,
                    error: None,
                })
                .collect();
            tables.push((family.clone(), ReportTable { title, columns }));
            tables.len() - 1
        });
        let column = &mut tables[at].1.columns[col];
        match (&cell.result, &cell.error) {
            (Some(r), _) => column.values = Some(metrics(r).map(significant)),
            (None, e) => column.error = Some(e.clone().unwrap_or_else(|| "not run".into())),
        }
    }
    tables.into_iter().map(|(_, t)| t).collect()
}

fn render_markdown(tables: &[ReportTable]) -> String {
    let mut out = String::new();
    for (i, t) in tables.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "### {}\n", t.title);
        out.push_str("| |");
        for c in &t.columns {
            let _ = write!(out, " {} |", c.algorithm);
        }
        out.push_str("\n|---|");
        out.push_str(&"---|".repeat(t.columns.len()));
        out.push('\n');
        for (row, label) in ROW_LABELS.iter().enumerate() {
            let _ = write!(out, "| {label} |");
            for c in &t.columns {
                match (c.values, &c.error) {
                    (Some(v), _) => {
                        let _ = write!(out, " {} |", v[row]);
                    }
                    (None, Some(_)) => out.push_str(" error |"),
                    (None, None) => out.push_str(" - |"),
                }
            }
            out.push('\n');
        }
        for c in &t.columns {
            if let Some(e) = &c.error {
                let _ = writeln!(out, "\n{} failed: {e}", c.algorithm);
            }
        }
    }
    out
}

fn render_csv(tables: &[ReportTable]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let columns: Vec<&str> = tables
        .first()
        .map(|t| t.columns.iter().map(|c| c.algorithm.as_str()).collect())
        .unwrap_or_default();
    let mut header = vec!["table", "metric"];
    header.extend(&columns);
    w.write_record(&header)?;
    for t in tables {
        for (row, label) in ROW_LABELS.iter().enumerate() {
            let mut record = vec![t.title.clone(), label.to_string()];
            record.extend(t.columns.iter().map(|c| match (c.values, &c.error) {
                (Some(v), _) => v[row].to_string(),
                (None, Some(_)) => "error".into(),
                (None, None) => String::new(),
            }));
            w.write_record(&record)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Internal(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Internal(e.to_string()))
}

/// Parses the CSV layout written by [`render_report`]. Failure messages are
/// not stored in CSV, so failed cells come back with error `"error"`.
pub fn read_report_csv<R: Read>(reader: R) -> Result<Vec<ReportTable>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.len() < 2 || &headers[0] != "table" || &headers[1] != "metric" {
        return Err(Error::schema("report CSV must start with `table,metric`"));
    }
    let names: Vec<String> = headers.iter().skip(2).map(str::to_string).collect();
    let mut tables: Vec<ReportTable> = Vec::new();
    let mut partial: Vec<Vec<[Option<f64>; 5]>> = Vec::new();
    let mut failed: Vec<Vec<bool>> = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let title = &record[0];
        let row = ROW_LABELS
            .iter()
            .position(|l| *l == &record[1])
            .ok_or_else(|| Error::schema(format!("unknown report row `{}`", &record[1])))?;
        let at = match tables.iter().position(|t| t.title == title) {
            Some(i) => i,
            None => {
                tables.push(ReportTable {
                    title: title.to_string(),
                    columns: Vec::new(),
                });
                partial.push(vec![[None; 5]; names.len()]);
                failed.push(vec![false; names.len()]);
                tables.len() - 1
            }
        };
        for (c, cell) in record.iter().skip(2).enumerate() {
            match cell {
                "" => {}
                "error" => failed[at][c] = true,
                v => {
                    partial[at][c][row] = Some(v.parse().map_err(|_| Error::schema(format!("bad report value `{v}`")))?)
                }
            }
        }
    }
    for ((t, values), failed) in tables.iter_mut().zip(partial).zip(failed) {
        t.columns = names
            .iter()
            .zip(values)
            .zip(failed)
            .map(|((name, v), failed)| ReportColumn {
                algorithm: name.clone(),
                values: v.iter().all(Option::is_some).then(|| v.map(Option::unwrap)),
                error: failed.then(|| "error".into()),
            })
            .collect();
    }
    Ok(tables)
}

fn cells_of(results: &[ExperimentResult]) -> Vec<SuiteCell> {
    results
        .iter()
        .enumerate()
        .map(|(index, r)| SuiteCell {
            index,
            config: r.config.clone(),
            result: Some(r.clone()),
            error: None,
        })
        .collect()
}

/// JSON writes a single result as an object and several as an array.
pub fn render_report(results: &[ExperimentResult], format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => {
            let mut s = match results {
                [one] => serde_json::to_string_pretty(one)?,
                many => serde_json::to_string_pretty(many)?,
            };
            s.push('\n');
            Ok(s)
        }
        ReportFormat::Csv => render_csv(&report_tables(&cells_of(results))),
        ReportFormat::Markdown => Ok(render_markdown(&report_tables(&cells_of(results)))),
    }
}

pub(super) fn render_cells(cells: &[SuiteCell], format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(cells)?;
            s.push('\n');
            Ok(s)
        }
        ReportFormat::Csv => render_csv(&report_tables(cells)),
        ReportFormat::Markdown => Ok(render_markdown(&report_tables(cells))),
    }
}

pub fn emit_report(results: &[ExperimentResult], format: ReportFormat, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = render_report(results, format)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Device;
    use crate::eval::{apr, ConfusionMatrix, TimingReport};

    fn result(algorithm: Algorithm, accuracy_hits: u64) -> ExperimentResult {
        let confusion = ConfusionMatrix {
            classes: vec!["normal".into(), "ddos".into()],
            counts: vec![vec![accuracy_hits, 3], vec![1, 7]],
        };
        ExperimentResult {
            artifact: "kmanb".into(),
            version: "0".into(),
            config: ExperimentConfig::synthetic(Device::Fridge, algorithm, 1),
            seed: 1,
            train_instances: 10,
            test_instances: 11,
            classes: confusion.classes.clone(),
            apr: apr(&confusion).unwrap(),
            confusion,
            timing: TimingReport {
                train_seconds: 2.9812345678,
                test_seconds: 0.000123456789,
            },
            clusters: None,
            ranking: None,
            predictions: vec![],
        }
    }

    #[test]
    fn significant_digits() {
        assert_eq!(significant(2.9812345678), 2.98123);
        assert_eq!(significant(0.000123456789), 0.000123457);
        assert_eq!(significant(0.85), 0.85);
        assert_eq!(significant(0.0), 0.0);
        assert_eq!(significant(123456789.0), 123457000.0);
    }

    #[test]
    fn single_result_markdown_has_five_rows() {
        let md = render_report(&[result(Algorithm::Kmanb, 9)], ReportFormat::Markdown).unwrap();
        let rows: Vec<&str> = md.lines().filter(|l| l.starts_with("| ") && !l.starts_with("| |")).collect();
        assert_eq!(rows.len(), 5);
        for (row, label) in rows.iter().zip(ROW_LABELS) {
            assert!(row.starts_with(&format!("| {label} |")));
        }
        assert!(md.starts_with("### Fridge train/test\n"));
        assert!(md.contains("| 2.98123 |"));
    }

    #[test]
    fn suite_columns_follow_fixed_order() {
        let results = [
            result(Algorithm::Kmanb, 9),
            result(Algorithm::Nb, 4),
            result(Algorithm::Rf, 5),
            result(Algorithm::Knn, 6),
        ];
        let tables = report_tables(&cells_of(&results));
        assert_eq!(tables.len(), 1);
        let names: Vec<&str> = tables[0].columns.iter().map(|c| c.algorithm.as_str()).collect();
        assert_eq!(names, ["Random Forest", "Naive Bayes", "KNN", "KMANB"]);
        // A repeat of an already filled cell opens a second table.
        let mut more = results.to_vec();
        more.push(result(Algorithm::Nb, 2));
        let tables = report_tables(&cells_of(&more));
        assert_eq!(tables[1].title, "Fridge train/test (2)");
        assert!(tables[1].columns[0].values.is_none());
    }

    #[test]
    fn csv_round_trip_at_six_digits() {
        let mut dropped = result(Algorithm::Kmanb, 5);
        dropped.config.drop_top_feature = true;
        let results = [result(Algorithm::Kmanb, 9), result(Algorithm::Nb, 4), dropped];
        let text = render_report(&results, ReportFormat::Csv).unwrap();
        let back = read_report_csv(text.as_bytes()).unwrap();
        assert_eq!(back, report_tables(&cells_of(&results)));
        for (r, col) in [(&results[0], 1), (&results[1], 0)] {
            let v = back[0].columns[col].values.unwrap();
            for (x, y) in v.iter().zip(metrics(r)) {
                assert_eq!(*x, significant(y));
                assert!(((x - y) / y).abs() < 5e-6);
            }
        }
    }

    #[test]
    fn failed_cells_render() {
        let cells = vec![SuiteCell {
            index: 0,
            config: ExperimentConfig::synthetic(Device::Modbus, Algorithm::Knn, 0),
            result: None,
            error: Some("boom".into()),
        }];
        let md = render_cells(&cells, ReportFormat::Markdown).unwrap();
        assert!(md.contains("| Accuracy | error |"));
        assert!(md.contains("KNN failed: boom"));
        let csv = render_cells(&cells, ReportFormat::Csv).unwrap();
        let back = read_report_csv(csv.as_bytes()).unwrap();
        assert_eq!(back[0].columns[0].error.as_deref(), Some("error"));
    }

    #[test]
    fn json_shapes() {
        let one = render_report(&[result(Algorithm::Nb, 1)], ReportFormat::Json).unwrap();
        assert!(one.starts_with('{'));
        let two = render_report(&[result(Algorithm::Nb, 1), result(Algorithm::Rf, 1)], ReportFormat::Json).unwrap();
        assert!(two.starts_with('['));
        assert!(!one.contains("predictions"));
        let back: ExperimentResult = serde_json::from_str(&one).unwrap();
        assert_eq!(back, result(Algorithm::Nb, 1));
    }

    #[test]
    fn unwritable_path_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("missing").join("out.json");
        assert!(emit_report(&[result(Algorithm::Nb, 1)], ReportFormat::Json, path).is_err());
    }

    #[test]
    fn empty_report() {
        assert_eq!(render_report(&[], ReportFormat::Markdown).unwrap(), "");
        let csv = render_report(&[], ReportFormat::Csv).unwrap();
        assert_eq!(csv, "table,metric\n");
        assert!(read_report_csv(csv.as_bytes()).unwrap().is_empty());
    }
}
