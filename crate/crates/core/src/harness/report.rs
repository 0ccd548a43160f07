use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{GridCell, Method};
use crate::error::{Error, Result};
use crate::metrics::MetricKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "status", content = "message")]
pub enum SeedStatus {
    Ok,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub status: SeedStatus,
    /// Test metric in percent.
    pub test_score: Option<f64>,
    pub best_cell: Option<GridCell>,
    pub selected_step: Option<usize>,
    pub grid: Vec<GridCell>,
    /// Wall-clock seconds per phase.
    pub phase_seconds: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub task: String,
    pub method: Method,
    pub metric: MetricKind,
    pub seeds: Vec<SeedResult>,
    /// Mean over successful seeds, percent.
    pub mean: f64,
    /// Population standard deviation over successful seeds.
    pub std: f64,
    pub std_convention: String,
    pub failed_seeds: Vec<u64>,
}

pub const STD_CONVENTION: &str = "population";

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Some((mean, var.sqrt()))
}

impl RunReport {
    /// Aggregates successful seeds; errors when none succeeded.
    pub fn assemble(task: String, method: Method, metric: MetricKind, seeds: Vec<SeedResult>) -> Result<Self> {
        if seeds.is_empty() {
            return Err(Error::Data("report has no seeds".into()));
        }
        let scores: Vec<f64> = seeds.iter().filter_map(|s| s.test_score).collect();
        let failed_seeds: Vec<u64> = seeds
            .iter()
            .filter(|s| matches!(s.status, SeedStatus::Failed(_)))
            .map(|s| s.seed)
            .collect();
        let (mean, std) = mean_std(&scores)
            .ok_or_else(|| Error::Training(format!("every seed failed: {failed_seeds:?}")))?;
        if !failed_seeds.is_empty() {
            log::warn!("seeds {failed_seeds:?} failed and are excluded from the aggregate");
        }
        Ok(RunReport {
            task,
            method,
            metric,
            seeds,
            mean,
            std,
            std_convention: STD_CONVENTION.into(),
            failed_seeds,
        })
    }

    pub fn successful_scores(&self) -> Vec<f64> {
        self.seeds.iter().filter_map(|s| s.test_score).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportFormat {
    Json,
    Csv,
    Table,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "table" => Ok(ReportFormat::Table),
            other => Err(Error::Config(format!("unknown report format {other:?}"))),
        }
    }
}

/// One CSV line: a seed row or the aggregate row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub row: String,
    pub seed: Option<u64>,
    pub status: String,
    pub score: Option<f64>,
    pub std: Option<f64>,
    pub best_lr: Option<f64>,
    pub best_batch: Option<usize>,
    pub selected_step: Option<usize>,
}

pub fn format_mean_std(mean: f64, std: f64) -> String {
    format!("{mean:.1} ({std:.1})")
}

pub fn render_report(report: &RunReport, format: ReportFormat) -> Result<String> {
    if report.seeds.is_empty() {
        return Err(Error::Data("report has no seeds".into()));
    }
    match format {
        ReportFormat::Json => Ok(serde_json::to_string_pretty(report)? + "\n"),
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for s in &report.seeds {
                w.serialize(CsvRow {
                    row: "seed".into(),
                    seed: Some(s.seed),
                    status: match s.status {
                        SeedStatus::Ok => "ok".into(),
                        SeedStatus::Failed(_) => "failed".into(),
                    },
                    score: s.test_score,
                    std: None,
                    best_lr: s.best_cell.map(|c| c.lr),
                    best_batch: s.best_cell.map(|c| c.batch),
                    selected_step: s.selected_step,
                })
                .map_err(csv_err)?;
            }
            w.serialize(CsvRow {
                row: "aggregate".into(),
                seed: None,
                status: if report.failed_seeds.is_empty() { "ok" } else { "partial" }.into(),
                score: Some(report.mean),
                std: Some(report.std),
                best_lr: None,
                best_batch: None,
                selected_step: None,
            })
            .map_err(csv_err)?;
            let bytes = w.into_inner().map_err(|e| Error::Data(e.to_string()))?;
            String::from_utf8(bytes).map_err(|e| Error::Data(e.to_string()))
        }
        ReportFormat::Table => Ok(render_table(std::slice::from_ref(report))),
    }
}

/// Methods as rows, tasks as columns, cells `mean (std)`.
pub fn render_table(reports: &[RunReport]) -> String {
    let mut tasks: Vec<String> = Vec::new();
    let mut methods: Vec<Method> = Vec::new();
    for r in reports {
        let column = format!("{} ({})", r.task, r.metric.name());
        if !tasks.contains(&column) {
            tasks.push(column);
        }
        if !methods.contains(&r.method) {
            methods.push(r.method);
        }
    }
    let mut rows = vec![std::iter::once("method".to_string()).chain(tasks.iter().cloned()).collect::<Vec<_>>()];
    for m in &methods {
        let mut row = vec![m.name().to_string()];
        for t in &tasks {
            let cell = reports
                .iter()
                .find(|r| r.method == *m && format!("{} ({})", r.task, r.metric.name()) == *t)
                .map(|r| {
                    let mut s = format_mean_std(r.mean, r.std);
                    if !r.failed_seeds.is_empty() {
                        s.push_str(&format!(" [{} failed]", r.failed_seeds.len()));
                    }
                    s
                })
                .unwrap_or_else(|| "-".into());
            row.push(cell);
        }
        rows.push(row);
    }
    let widths: Vec<usize> = (0..rows[0].len())
        .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in &rows {
        let cells: Vec<String> = row.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}

fn csv_err(e: csv::Error) -> Error {
    Error::Data(format!("csv: {e}"))
}

pub fn parse_report_json(input: &str) -> Result<RunReport> {
    let report: RunReport = serde_json::from_str(input)?;
    if report.seeds.is_empty() {
        return Err(Error::Data("report has no seeds".into()));
    }
    Ok(report)
}

pub fn parse_report_csv(input: &str) -> Result<Vec<CsvRow>> {
    let mut reader = csv::Reader::from_reader(input.as_bytes());
    reader.deserialize().map(|r| r.map_err(csv_err)).collect()
}

pub fn emit_report(report: &RunReport, format: ReportFormat, path: &Path) -> Result<()> {
    let text = render_report(report, format)?;
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seed(seed: u64, score: Option<f64>) -> SeedResult {
        SeedResult {
            seed,
            status: if score.is_some() {
                SeedStatus::Ok
            } else {
                SeedStatus::Failed("diverged".into())
            },
            test_score: score,
            best_cell: score.map(|_| GridCell {
                lr: 5e-6,
                batch: 6,
                val_score: 0.75,
            }),
            selected_step: score.map(|_| 300),
            grid: Vec::new(),
            phase_seconds: BTreeMap::new(),
        }
    }

    fn report(scores: &[f64]) -> RunReport {
        let seeds = scores.iter().enumerate().map(|(i, &s)| seed(i as u64 + 1, Some(s))).collect();
        RunReport::assemble("sst".into(), Method::Finetune, MetricKind::Accuracy, seeds).unwrap()
    }

    #[test]
    fn population_std_hand_example() {
        let r = report(&[80.0, 82.0, 84.0, 78.0, 76.0]);
        assert!((r.mean - 80.0).abs() < 1e-12);
        assert!((r.std - 8f64.sqrt()).abs() < 1e-12);
        assert_eq!(format_mean_std(r.mean, r.std), "80.0 (2.8)");
    }

    #[test]
    fn failed_seed_is_flagged_and_excluded() {
        let seeds = vec![seed(1, Some(70.0)), seed(2, None), seed(3, Some(80.0))];
        let r = RunReport::assemble("t".into(), Method::Eda, MetricKind::F1, seeds).unwrap();
        assert_eq!(r.failed_seeds, vec![2]);
        assert!((r.mean - 75.0).abs() < 1e-12);
        assert!(render_table(&[r]).contains("75.0 (5.0) [1 failed]"));
    }

    #[test]
    fn no_seeds_is_error() {
        assert!(RunReport::assemble("t".into(), Method::Eda, MetricKind::F1, vec![]).is_err());
        assert!(RunReport::assemble("t".into(), Method::Eda, MetricKind::F1, vec![seed(1, None)]).is_err());
    }

    #[test]
    fn json_then_csv_round_trip() {
        let r = report(&[80.1234567891, 66.6666666667, 91.0]);
        let json = render_report(&r, ReportFormat::Json).unwrap();
        let back = parse_report_json(&json).unwrap();
        assert_eq!(back, r);
        let rows = parse_report_csv(&render_report(&back, ReportFormat::Csv).unwrap()).unwrap();
        assert_eq!(rows.len(), 4);
        for (row, s) in rows.iter().zip(&r.seeds) {
            assert!((row.score.unwrap() - s.test_score.unwrap()).abs() < 1e-9);
            assert_eq!(row.best_batch, Some(6));
        }
        let agg = rows.last().unwrap();
        assert_eq!(agg.row, "aggregate");
        assert!((agg.score.unwrap() - r.mean).abs() < 1e-9);
        assert!((agg.std.unwrap() - r.std).abs() < 1e-9);
    }

    #[test]
    fn table_layout() {
        let a = report(&[80.0, 82.0, 84.0, 78.0, 76.0]);
        let mut b = report(&[90.0, 90.0]);
        b.method = Method::EmbedhallucLabelcalib;
        let t = render_table(&[a, b]);
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("method") && lines[0].contains("sst (acc)"));
        assert!(lines[1].starts_with("finetune") && lines[1].ends_with("80.0 (2.8)"));
        assert!(lines[2].starts_with("embedhalluc+labelcalib") && lines[2].ends_with("90.0 (0.0)"));
    }
}
