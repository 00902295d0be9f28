use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::Mode;
use super::fit::SlopeFit;
use super::sweep::{CellSummary, SweepReport};
use crate::error::Result;
use crate::lab::LabRow;

pub const SWEEP_HEADER: [&str; 11] = [
    "eps",
    "mode",
    "functional",
    "trial",
    "estimate",
    "truth",
    "abs_err",
    "samples_total",
    "n",
    "m",
    "seed",
];

pub const LAB_HEADER: [&str; 8] = ["eps", "sigma", "kl", "w2", "winf", "gap", "pair_kind", "k"];

#[derive(Serialize)]
struct Summary<'a> {
    config: &'a BTreeMap<String, String>,
    slopes: &'a BTreeMap<Mode, SlopeFit<f64>>,
    failure_rates: &'a [CellSummary],
}

/// The JSON companion of a CSV path: same stem, `.json` extension.
pub fn summary_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

fn write_rows<W: Write, R: Serialize>(out: W, header: &[&str], rows: &[R]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the sweep rows as CSV and the summary as pretty JSON.
pub fn write_report<W1: Write, W2: Write>(report: &SweepReport, csv_out: W1, mut json_out: W2) -> Result<()> {
    write_rows(csv_out, &SWEEP_HEADER, &report.rows)?;
    let summary = Summary {
        config: &report.config,
        slopes: &report.slopes,
        failure_rates: &report.cells,
    };
    serde_json::to_writer_pretty(&mut json_out, &summary)?;
    json_out.write_all(b"\n")?;
    Ok(())
}

/// Writes `path` (CSV) and its `.json` companion.
pub fn emit_report(report: &SweepReport, path: &Path) -> Result<()> {
    let csv_file = BufWriter::new(File::create(path)?);
    let json_file = BufWriter::new(File::create(summary_path(path))?);
    write_report(report, csv_file, json_file)
}

pub fn write_lab_rows<W: Write>(rows: &[LabRow], out: W) -> Result<()> {
    write_rows(out, &LAB_HEADER, rows)
}

pub fn emit_lab_rows(rows: &[LabRow], path: &Path) -> Result<()> {
    write_lab_rows(rows, BufWriter::new(File::create(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::sweep::SweepRow;

    fn empty() -> SweepReport {
        SweepReport {
            rows: vec![],
            cells: vec![],
            slopes: BTreeMap::new(),
            config: BTreeMap::new(),
        }
    }

    #[test]
    fn empty_report_is_header_only() {
        let mut csv = Vec::new();
        let mut json = Vec::new();
        write_report(&empty(), &mut csv, &mut json).unwrap();
        assert_eq!(
            String::from_utf8(csv).unwrap(),
            "eps,mode,functional,trial,estimate,truth,abs_err,samples_total,n,m,seed\n"
        );
    }

    #[test]
    fn one_row_two_lines() {
        let mut rep = empty();
        rep.rows.push(SweepRow {
            eps: 0.1,
            mode: Mode::Online,
            functional: "quantile:0.5".into(),
            trial: 0,
            estimate: 0.5,
            truth: 0.5,
            abs_err: 0.0,
            samples_total: 10,
            n: 5,
            m: 2,
            seed: 7,
        });
        let mut csv = Vec::new();
        write_report(&rep, &mut csv, Vec::new()).unwrap();
        let text = String::from_utf8(csv).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[1], "0.1,online,quantile:0.5,0,0.5,0.5,0.0,10,5,2,7");
    }

    #[test]
    fn companion_path() {
        assert_eq!(summary_path(Path::new("out/run.csv")), PathBuf::from("out/run.json"));
    }
}
