//! Report files: ranked invariants plus a sidecar of dropped and pruned
//! candidates.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::ranking::Invariant;

use super::analyze::DroppedCandidate;
use super::run::IterationReport;
use super::PipelineError;

pub const BIC_PRUNED: &str = "BIC_PRUNED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            _ => Err(format!("unknown report format `{s}` (expected csv or json)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub invariant_id: String,
    pub outcome: String,
    pub givens: String,
    pub posterior: Option<f64>,
    pub prior: Option<f64>,
    pub surprise: Option<f64>,
    pub surprise_variance: Option<f64>,
    pub bic: Option<f64>,
    pub n: u64,
    pub freq_o: u64,
    pub freq_g: u64,
    pub freq_o_and_g: u64,
    pub reason: String,
}

fn join_givens<'a>(ids: impl Iterator<Item = &'a str>) -> String {
    ids.collect::<Vec<_>>().join(" & ")
}

impl ReportRow {
    pub fn from_invariant(inv: &Invariant, variance_window: usize, reason: &str) -> Self {
        let c = &inv.result.counts;
        ReportRow {
            invariant_id: inv.id.clone(),
            outcome: inv.outcome.id.clone(),
            givens: join_givens(inv.givens.iter().map(|g| g.id.as_str())),
            posterior: Some(inv.result.posterior),
            prior: Some(inv.result.prior),
            surprise: inv.surprise,
            surprise_variance: Some(inv.surprise_variance(variance_window)),
            bic: Some(inv.bic),
            n: c.n,
            freq_o: c.freq_o,
            freq_g: c.freq_g,
            freq_o_and_g: c.freq_o_and_g,
            reason: reason.to_string(),
        }
    }

    pub fn from_dropped(d: &DroppedCandidate) -> Self {
        ReportRow {
            invariant_id: d.id.clone(),
            outcome: d.outcome.clone(),
            givens: join_givens(d.givens.iter().map(String::as_str)),
            posterior: None,
            prior: d.prior.filter(|p| p.is_finite()),
            surprise: None,
            surprise_variance: None,
            bic: None,
            n: d.counts.n,
            freq_o: d.counts.freq_o,
            freq_g: d.counts.freq_g,
            freq_o_and_g: d.counts.freq_o_and_g,
            reason: d.reason.code().to_string(),
        }
    }
}

/// Ranked rows, truncated to `top` when given.
pub fn ranked_rows(report: &IterationReport, top: Option<usize>) -> Vec<ReportRow> {
    let limit = top.unwrap_or(usize::MAX);
    report
        .ranked
        .iter()
        .take(limit)
        .map(|i| ReportRow::from_invariant(i, report.variance_window, ""))
        .collect()
}

/// Pruned invariants then dropped candidates, each in enumeration order.
pub fn sidecar_rows(report: &IterationReport) -> Vec<ReportRow> {
    let mut rows: Vec<ReportRow> = report
        .pruned
        .iter()
        .map(|i| ReportRow::from_invariant(i, report.variance_window, BIC_PRUNED))
        .collect();
    rows.extend(report.dropped.iter().map(ReportRow::from_dropped));
    rows
}

/// `<report>.dropped.<ext>` next to the main report.
pub fn sidecar_path(report: &Path) -> PathBuf {
    let ext = report.extension().and_then(|e| e.to_str()).unwrap_or("csv");
    report.with_extension(format!("dropped.{ext}"))
}

/// `<stem>.iter<N>.<ext>` for per-iteration reports.
pub fn iteration_path(report: &Path, iteration: u64) -> PathBuf {
    let ext = report.extension().and_then(|e| e.to_str()).unwrap_or("csv");
    report.with_extension(format!("iter{iteration}.{ext}"))
}

fn write_rows<W: Write>(out: W, rows: &[ReportRow], format: ReportFormat) -> Result<(), PipelineError> {
    match format {
        ReportFormat::Csv => {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
            w.write_record([
                "invariant_id",
                "outcome",
                "givens",
                "posterior",
                "prior",
                "surprise",
                "surprise_variance",
                "bic",
                "n",
                "freq_o",
                "freq_g",
                "freq_o_and_g",
                "reason",
            ])?;
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        ReportFormat::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, rows)?;
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}

/// Writes the ranked report and its sidecar.
pub fn write_report(
    path: &Path,
    report: &IterationReport,
    format: ReportFormat,
    top: Option<usize>,
) -> Result<(), PipelineError> {
    let mut main = BufWriter::new(File::create(path)?);
    write_rows(&mut main, &ranked_rows(report, top), format)?;
    main.flush()?;
    let mut side = BufWriter::new(File::create(sidecar_path(path))?);
    write_rows(&mut side, &sidecar_rows(report), format)?;
    side.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::{infer, DropReason, FrequencyCounts};
    use crate::spec::parse_spec;

    fn report() -> IterationReport {
        let spec = parse_spec("OUTCOMES o, INT-Eq, , o == 1, GIVENS a, INT-Eq, , a == 1, b, INT-Eq, , b == 1,").unwrap();
        let (o, g) = spec.expand_predicates();
        let counts = FrequencyCounts {
            n: 5,
            freq_o: 2,
            freq_g: 2,
            freq_o_and_g: 1,
            freq_g_and_not_o: 1,
        };
        let inv = Invariant::new(o[0].clone(), vec![g[0].clone()], infer(&counts, 0.3).unwrap());
        let mut rep = IterationReport::empty(5);
        rep.iteration = 1;
        rep.ranked = vec![inv.clone(), inv];
        rep.dropped.push(DroppedCandidate {
            id: "P(o == 1 | b == 1)".into(),
            outcome: "o == 1".into(),
            givens: vec!["b == 1".into()],
            prior: Some(0.3),
            counts: FrequencyCounts::default(),
            reason: DropReason::NoOutcomeSupport,
        });
        rep
    }

    #[test]
    fn csv_layout_and_top() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        write_report(&p, &report(), ReportFormat::Csv, Some(1)).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].starts_with("invariant_id,outcome,givens,posterior"));
        assert!(lines[1].starts_with("P(o == 1 | a == 1),o == 1,a == 1,0.39"));
        let side = std::fs::read_to_string(dir.path().join("r.dropped.csv")).unwrap();
        assert!(side.lines().nth(1).unwrap().ends_with("NO_OUTCOME_SUPPORT"));
    }

    #[test]
    fn top_zero_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        write_report(&p, &report(), ReportFormat::Csv, Some(0)).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap().lines().count(), 1);
    }

    #[test]
    fn json_is_array_of_rows() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.json");
        write_report(&p, &report(), ReportFormat::Json, None).unwrap();
        let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&p).unwrap()).unwrap();
        assert_eq!(v.as_array().unwrap().len(), 2);
        assert_eq!(v[0]["freq_o"], 2);
        assert!(dir.path().join("r.dropped.json").exists());
    }

    #[test]
    fn paths() {
        assert_eq!(iteration_path(Path::new("out/r.csv"), 3), PathBuf::from("out/r.iter3.csv"));
        assert_eq!(sidecar_path(Path::new("r.json")), PathBuf::from("r.dropped.json"));
    }
}
