//! CSV and JSON readers and writers. Floats are written in shortest
//! round-trip form with `\n` line endings.

use std::fs::File;
use std::path::Path;

use dynsim_core::pipeline::{DistanceMatrix, MethodOutcome};
use dynsim_core::{ExperimentRecord, TimeSeries};
use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{CliError, CliResult};

fn writer(path: &Path) -> CliResult<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file))
}

fn finish(mut w: csv::Writer<File>, path: &Path) -> CliResult<()> {
    w.flush().map_err(|e| CliError::io(path, e))
}

fn num(v: f64) -> String {
    format!("{v}")
}

/// Writes `t,ch0,ch1,...` with `t = i * dt`.
pub fn write_series(path: &Path, series: &TimeSeries) -> CliResult<()> {
    let mut w = writer(path)?;
    let mut header = vec!["t".to_string()];
    header.extend((0..series.channels()).map(|c| format!("ch{c}")));
    w.write_record(&header).map_err(|e| CliError::io(path, e))?;
    let data = series.data();
    for i in 0..series.len() {
        let mut row = vec![num(i as f64 * series.dt())];
        row.extend(data.row(i).iter().map(|&v| num(v)));
        w.write_record(&row).map_err(|e| CliError::io(path, e))?;
    }
    finish(w, path)
}

/// Reads a trajectory CSV with a leading `t` column. The sampling interval
/// is taken from the first two time stamps (1 for single-row files).
pub fn read_series(path: &Path) -> CliResult<TimeSeries> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::io(path, e))?;
    let headers = r.headers().map_err(|e| CliError::io(path, e))?.clone();
    if headers.len() < 2 || headers.get(0) != Some("t") {
        return Err(CliError::Input(format!(
            "{}: expected a header `t,ch0,...`",
            path.display()
        )));
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record.map_err(|e| CliError::io(path, e))?;
        if record.len() != headers.len() {
            return Err(CliError::Input(format!(
                "{}: row {} has {} fields",
                path.display(),
                line + 2,
                record.len()
            )));
        }
        let parsed: Result<Vec<f64>, _> = record.iter().map(|f| f.trim().parse::<f64>()).collect();
        let parsed = parsed.map_err(|e| CliError::Input(format!("{}: row {}: {e}", path.display(), line + 2)))?;
        times.push(parsed[0]);
        values.extend_from_slice(&parsed[1..]);
    }
    if times.is_empty() {
        return Err(CliError::Input(format!("{}: no data rows", path.display())));
    }
    let dt = if times.len() > 1 { times[1] - times[0] } else { 1.0 };
    let data = DMatrix::from_row_slice(times.len(), headers.len() - 1, &values);
    TimeSeries::new(data, dt).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

#[derive(Serialize)]
struct RecordRow<'a> {
    param: String,
    method: &'a str,
    trial: usize,
    distance_euclidean: String,
    distance_angular: String,
    wall_time: String,
    stop_iter: usize,
    ortho_residual: String,
    zero_flag: bool,
}

pub fn write_records(path: &Path, records: &[ExperimentRecord]) -> CliResult<()> {
    let mut w = writer(path)?;
    for r in records {
        w.serialize(RecordRow {
            param: num(r.param),
            method: &r.method,
            trial: r.trial,
            distance_euclidean: num(r.distance_euclidean),
            distance_angular: num(r.distance_angular),
            wall_time: num(r.wall_time),
            stop_iter: r.stop_iter,
            ortho_residual: num(r.ortho_residual),
            zero_flag: r.zero_flag,
        })
        .map_err(|e| CliError::io(path, e))?;
    }
    if records.is_empty() {
        w.write_record([
            "param",
            "method",
            "trial",
            "distance_euclidean",
            "distance_angular",
            "wall_time",
            "stop_iter",
            "ortho_residual",
            "zero_flag",
        ])
        .map_err(|e| CliError::io(path, e))?;
    }
    finish(w, path)
}

pub fn write_summary(path: &Path, summary: &[MethodOutcome]) -> CliResult<()> {
    let mut w = writer(path)?;
    w.write_record([
        "param",
        "method",
        "trials",
        "failures",
        "mean_distance",
        "zero_rate",
        "mean_wall_time",
    ])
    .map_err(|e| CliError::io(path, e))?;
    for o in summary {
        w.write_record([
            num(o.param),
            o.method.clone(),
            o.trials.to_string(),
            o.failures.to_string(),
            num(o.mean_distance),
            num(o.zero_rate),
            num(o.mean_wall_time),
        ])
        .map_err(|e| CliError::io(path, e))?;
    }
    finish(w, path)
}

/// Square matrix with a `label` column and one column per label.
pub fn write_distance_matrix(path: &Path, dm: &DistanceMatrix) -> CliResult<()> {
    let mut w = writer(path)?;
    let mut header = vec!["label".to_string()];
    header.extend(dm.labels.iter().cloned());
    w.write_record(&header).map_err(|e| CliError::io(path, e))?;
    for (i, label) in dm.labels.iter().enumerate() {
        let mut row = vec![label.clone()];
        row.extend(dm.values.row(i).iter().map(|&v| num(v)));
        w.write_record(&row).map_err(|e| CliError::io(path, e))?;
    }
    finish(w, path)
}

pub fn read_distance_matrix(path: &Path) -> CliResult<DistanceMatrix> {
    let bad = |msg: String| CliError::Input(format!("{}: {msg}", path.display()));
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::io(path, e))?;
    let headers = r.headers().map_err(|e| CliError::io(path, e))?.clone();
    if headers.get(0) != Some("label") {
        return Err(bad("expected a header starting with `label`".into()));
    }
    let labels: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    let n = labels.len();
    let mut values = DMatrix::zeros(n, n);
    let mut rows = 0;
    for record in r.records() {
        let record = record.map_err(|e| CliError::io(path, e))?;
        if rows >= n || record.len() != n + 1 {
            return Err(bad("distance matrix is not square".into()));
        }
        if record.get(0) != Some(labels[rows].as_str()) {
            return Err(bad(format!("row {} label does not match the header", rows + 1)));
        }
        for j in 0..n {
            values[(rows, j)] = record[j + 1]
                .trim()
                .parse()
                .map_err(|e| bad(format!("row {}: {e}", rows + 1)))?;
        }
        rows += 1;
    }
    if rows != n {
        return Err(bad("distance matrix is not square".into()));
    }
    DistanceMatrix::new(labels, values).map_err(|e| bad(e.to_string()))
}

pub fn write_coordinates(path: &Path, labels: &[String], coords: &DMatrix<f64>) -> CliResult<()> {
    let mut w = writer(path)?;
    let mut header = vec!["label".to_string()];
    header.extend((0..coords.ncols()).map(|k| format!("dim{k}")));
    w.write_record(&header).map_err(|e| CliError::io(path, e))?;
    for (i, label) in labels.iter().enumerate() {
        let mut row = vec![label.clone()];
        row.extend(coords.row(i).iter().map(|&v| num(v)));
        w.write_record(&row).map_err(|e| CliError::io(path, e))?;
    }
    finish(w, path)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::io(path, e))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// One row per method: mean between-group over mean within-group distance.
pub fn write_separation(path: &Path, rows: &[(&str, f64)]) -> CliResult<()> {
    let mut w = writer(path)?;
    w.write_record(["method", "separation_ratio"])
        .map_err(|e| CliError::io(path, e))?;
    for (method, ratio) in rows {
        w.write_record([method.to_string(), num(*ratio)])
            .map_err(|e| CliError::io(path, e))?;
    }
    finish(w, path)
}
