use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::scaling::ScalingReport;
use super::HarnessError;
use crate::trace::RegretTrace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    JsonLines,
    Plotdata,
}

impl Format {
    pub fn file_name(self) -> &'static str {
        match self {
            Format::Csv => "traces.csv",
            Format::JsonLines => "traces.jsonl",
            Format::Plotdata => "plotdata.csv",
        }
    }
}

impl FromStr for Format {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "json-lines" | "jsonl" => Ok(Format::JsonLines),
            "plotdata" => Ok(Format::Plotdata),
            _ => Err(HarnessError::invalid(
                "format",
                format!("unknown format `{s}` (expected csv, json-lines or plotdata)"),
            )),
        }
    }
}

/// One csv data row; `seed` keys rows of different runs in the same file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub seed: u64,
    pub t: u64,
    pub cum_regret: f64,
    pub epoch: usize,
    pub gamma: Option<f64>,
    pub eps_m: Option<f64>,
    pub eps_prime_m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotPoint {
    pub x: f64,
    pub y: f64,
    pub series: String,
}

pub fn csv_rows(trace: &RegretTrace) -> Vec<CsvRow> {
    trace
        .rounds
        .iter()
        .map(|r| {
            let (eps_m, eps_prime_m) = trace.epoch_eps(r.epoch);
            CsvRow {
                seed: trace.seed,
                t: r.t,
                cum_regret: r.cum_regret,
                epoch: r.epoch,
                gamma: r.gamma,
                eps_m,
                eps_prime_m,
            }
        })
        .collect()
}

pub fn write_csv<W: Write>(traces: &[RegretTrace], out: W) -> Result<(), HarnessError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(["seed", "t", "cum_regret", "epoch", "gamma", "eps_m", "eps_prime_m"])?;
    for trace in traces {
        for row in csv_rows(trace) {
            w.serialize(row)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<CsvRow>, HarnessError> {
    let mut r = csv::Reader::from_reader(input);
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

/// One serialised trace per line.
pub fn write_json_lines<W: Write>(traces: &[RegretTrace], mut out: W) -> Result<(), HarnessError> {
    for trace in traces {
        serde_json::to_writer(&mut out, trace)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_json_lines<R: BufRead>(input: R) -> Result<Vec<RegretTrace>, HarnessError> {
    let mut traces = Vec::new();
    for line in input.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            traces.push(serde_json::from_str(&line)?);
        }
    }
    Ok(traces)
}

/// Regret curves plus `eps_m` and `eps'_m` per epoch start.
pub fn plot_points(traces: &[RegretTrace]) -> Vec<PlotPoint> {
    let mut points = Vec::new();
    for trace in traces {
        let label = format!("{}/seed={}", trace.algorithm, trace.seed);
        points.extend(trace.rounds.iter().map(|r| PlotPoint {
            x: r.t as f64,
            y: r.cum_regret,
            series: format!("regret/{label}"),
        }));
        for e in &trace.epochs {
            let x = (e.start + 1) as f64;
            if let Some(eps) = e.eps {
                points.push(PlotPoint { x, y: eps, series: format!("eps/{label}") });
            }
            if let Some(eps) = e.eps_prime {
                points.push(PlotPoint { x, y: eps, series: format!("eps_prime/{label}") });
            }
        }
    }
    points
}

pub fn write_plotdata<W: Write>(traces: &[RegretTrace], out: W) -> Result<(), HarnessError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(["x", "y", "series"])?;
    for p in plot_points(traces) {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_scaling<W: Write>(report: &ScalingReport, out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    for row in &report.rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `traces` into `dir` in `format` and returns the file path.
pub fn emit(traces: &[RegretTrace], format: Format, dir: &Path) -> Result<PathBuf, HarnessError> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(format.file_name());
    let out = BufWriter::new(File::create(&path)?);
    match format {
        Format::Csv => write_csv(traces, out)?,
        Format::JsonLines => write_json_lines(traces, out)?,
        Format::Plotdata => write_plotdata(traces, out)?,
    }
    Ok(path)
}

pub fn load_traces(path: &Path) -> Result<Vec<RegretTrace>, HarnessError> {
    read_json_lines(BufReader::new(File::open(path)?))
}
