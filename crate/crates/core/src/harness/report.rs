//! Experiment reports: per-fold metric cells, fold aggregates, and their
//! JSON and CSV renderings.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{DescriptorMode, ExperimentConfig, Strategy};
use crate::error::{Error, Result};
use crate::folds::StratumId;
use crate::metrics::{aggregate, MetricName};

/// One metric for one (strategy, stratum, mode, fold): either a value or
/// the reason it was skipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldMetric {
    pub strategy: Strategy,
    pub stratum: StratumId,
    pub mode: DescriptorMode,
    pub fold: usize,
    pub metric: MetricName,
    pub value: Option<f64>,
    pub n_validation: usize,
    pub skip: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub strategy: Strategy,
    pub stratum: StratumId,
    pub mode: DescriptorMode,
    pub metric: MetricName,
    pub mean: Option<f64>,
    pub std: Option<f64>,
    /// Folds that produced a value.
    pub n_folds: usize,
    pub skipped_folds: usize,
    /// `mean ± std` to two decimals, or `n/a` when every fold was skipped.
    pub display: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub mixtures: usize,
    pub arity: usize,
    pub ordered: bool,
    pub complete: bool,
    pub collection_sizes: Vec<usize>,
    pub active_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config: ExperimentConfig,
    pub dataset: DatasetSummary,
    pub cells: Vec<FoldMetric>,
    pub aggregates: Vec<Aggregate>,
}

type GroupKey = (Strategy, StratumId, DescriptorMode, MetricName);

/// Aggregates cells over folds, ordered by strategy, stratum, mode and metric.
pub fn aggregate_cells(cells: &[FoldMetric]) -> Vec<Aggregate> {
    let mut groups: BTreeMap<GroupKey, (Vec<f64>, usize)> = BTreeMap::new();
    for c in cells {
        let entry = groups
            .entry((c.strategy, c.stratum, c.mode, c.metric))
            .or_default();
        match c.value {
            Some(v) => entry.0.push(v),
            None => entry.1 += 1,
        }
    }
    groups
        .into_iter()
        .map(|((strategy, stratum, mode, metric), (values, skipped))| {
            let summary = aggregate(&values).ok();
            Aggregate {
                strategy,
                stratum,
                mode,
                metric,
                mean: summary.map(|s| s.mean),
                std: summary.map(|s| s.std),
                n_folds: values.len(),
                skipped_folds: skipped,
                display: summary.map_or_else(|| "n/a".to_owned(), |s| s.to_string()),
            }
        })
        .collect()
}

impl Report {
    pub fn aggregate(
        &self,
        strategy: Strategy,
        stratum: StratumId,
        mode: DescriptorMode,
        metric: MetricName,
    ) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| {
            a.strategy == strategy && a.stratum == stratum && a.mode == mode && a.metric == metric
        })
    }

    /// Mean of an aggregate, if any fold produced a value.
    pub fn mean(
        &self,
        strategy: Strategy,
        stratum: StratumId,
        mode: DescriptorMode,
        metric: MetricName,
    ) -> Option<f64> {
        self.aggregate(strategy, stratum, mode, metric)?.mean
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Report(e.to_string()))
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "strategy",
            "stratum",
            "mode",
            "fold",
            "metric",
            "value",
            "n_validation",
            "skip",
        ])
        .expect("in-memory write");
        for c in &self.cells {
            w.write_record([
                c.strategy.to_string(),
                c.stratum.to_string(),
                c.mode.to_string(),
                c.fold.to_string(),
                c.metric.to_string(),
                c.value.map_or(String::new(), |v| v.to_string()),
                c.n_validation.to_string(),
                c.skip.clone().unwrap_or_default(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }

    /// Text table with one row per (mode, metric) and one column per
    /// (strategy, stratum).
    pub fn render_table(&self) -> String {
        let mut columns: Vec<(Strategy, StratumId)> = Vec::new();
        let mut rows: Vec<(DescriptorMode, MetricName)> = Vec::new();
        for a in &self.aggregates {
            if !columns.contains(&(a.strategy, a.stratum)) {
                columns.push((a.strategy, a.stratum));
            }
            if !rows.contains(&(a.mode, a.metric)) {
                rows.push((a.mode, a.metric));
            }
        }
        rows.sort();
        let headers: Vec<String> = columns
            .iter()
            .map(|(s, st)| match st {
                StratumId::All => s.to_string(),
                _ => st.to_string(),
            })
            .collect();
        let labels: Vec<String> = rows.iter().map(|(m, metric)| format!("{m} {metric}")).collect();
        let first = labels.iter().map(String::len).max().unwrap_or(0).max(6);
        let widths: Vec<usize> = headers.iter().map(|h| h.chars().count().max(13)).collect();

        let mut out = String::new();
        let _ = write!(out, "{:first$}", "");
        for (h, w) in headers.iter().zip(&widths) {
            let _ = write!(out, "  {h:>w$}");
        }
        out.push('\n');
        for (row, label) in rows.iter().zip(&labels) {
            let _ = write!(out, "{label:first$}");
            for ((strategy, stratum), w) in columns.iter().zip(&widths) {
                let cell = self
                    .aggregate(*strategy, *stratum, row.0, row.1)
                    .map_or("-", |a| a.display.as_str());
                let _ = write!(out, "  {cell:>w$}");
            }
            out.push('\n');
        }
        let skipped: usize = self.aggregates.iter().map(|a| a.skipped_folds).sum();
        if skipped > 0 {
            let _ = writeln!(out, "({skipped} fold metrics skipped; see the report cells)");
        }
        out
    }
}

/// Path of the flat CSV written next to a report.
pub fn csv_path(path: &Path) -> PathBuf {
    path.with_extension("csv")
}

/// Writes the JSON report to `path` and the metric cells to `path` with a
/// `.csv` extension.
pub fn write_report(report: &Report, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, report.to_json()).map_err(|e| Error::io(path, e))?;
    let csv = csv_path(path);
    std::fs::write(&csv, report.to_csv()).map_err(|e| Error::io(&csv, e))
}

pub fn read_report(path: &Path) -> Result<Report> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Report::from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(fold: usize, value: Option<f64>, skip: Option<&str>) -> FoldMetric {
        FoldMetric {
            strategy: Strategy::CompoundsOut,
            stratum: StratumId::Out(2),
            mode: DescriptorMode::Pseudo,
            fold,
            metric: MetricName::AucRoc,
            value,
            n_validation: 10,
            skip: skip.map(str::to_owned),
        }
    }

    fn report(cells: Vec<FoldMetric>) -> Report {
        Report {
            config: ExperimentConfig::default(),
            dataset: DatasetSummary {
                mixtures: 10,
                arity: 2,
                ordered: false,
                complete: true,
                collection_sizes: vec![5],
                active_fraction: 0.4,
            },
            aggregates: aggregate_cells(&cells),
            cells,
        }
    }

    #[test]
    fn aggregates_skip_missing_values() {
        let r = report(vec![
            cell(0, Some(0.8), None),
            cell(1, Some(0.8), None),
            cell(2, None, Some("single-class validation stratum")),
        ]);
        let a = &r.aggregates[0];
        assert_eq!((a.mean, a.std, a.n_folds, a.skipped_folds), (Some(0.8), Some(0.0), 2, 1));
        assert_eq!(a.display, "0.80 ± 0.00");
        assert!(r.to_json().contains("single-class validation stratum"));
        assert!(r.to_csv().contains("single-class validation stratum"));
    }

    #[test]
    fn fully_skipped_group_displays_na() {
        let r = report(vec![cell(0, None, Some("empty stratum"))]);
        assert_eq!(r.aggregates[0].display, "n/a");
        assert_eq!(r.aggregates[0].mean, None);
    }

    #[test]
    fn json_round_trip_and_files() {
        let r = report(vec![
            cell(0, Some(0.1 + 0.2), None),
            cell(1, Some(1.0 / 3.0), None),
        ]);
        assert_eq!(Report::from_json(&r.to_json()).unwrap(), r);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub/report.json");
        write_report(&r, &path).unwrap();
        assert_eq!(read_report(&path).unwrap(), r);
        let csv = std::fs::read_to_string(csv_path(&path)).unwrap();
        assert_eq!(csv.lines().count(), 3);
        assert!(r.render_table().contains("2-out"));
    }
}
