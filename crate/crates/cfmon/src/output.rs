//! `results.csv`, `results.json` and per-trial traces.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::harness::{ResultRow, TrialTrace};
use crate::HarnessError;

/// Column order of `results.csv`.
pub const CSV_HEADER: [&str; 15] = [
    "scheme",
    "sweep",
    "value",
    "trial",
    "trial_seed",
    "M",
    "K",
    "N",
    "min_success_prob",
    "num_jamming",
    "greedy_iterations",
    "bisection_iterations",
    "wall_time_ms",
    "error",
    "success_probs",
];

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

fn csv_record(r: &ResultRow) -> [String; 15] {
    [
        r.scheme.to_string(),
        r.sweep.clone(),
        r.value.to_string(),
        r.trial.to_string(),
        r.trial_seed.to_string(),
        r.num_mns.to_string(),
        r.num_pairs.to_string(),
        r.antennas.to_string(),
        opt(&r.min_success_prob),
        opt(&r.num_jamming),
        opt(&r.greedy_iterations),
        opt(&r.bisection_iterations),
        opt(&r.wall_time_ms),
        opt(&r.error),
        r.success_probs
            .iter()
            .map(f64::to_string)
            .collect::<Vec<_>>()
            .join(";"),
    ]
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn csv_string(rows: &[ResultRow]) -> Result<String, HarnessError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record(csv_record(r))?;
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::Csv(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

pub fn trace_file_name(t: &TrialTrace) -> String {
    format!("{}{}_trial{:04}.json", t.sweep, t.value, t.trial)
}

/// Writes `results.csv` and `results.json` (and `trace/` when `traces` is
/// given) under `dir`, creating it if needed. Returns the CSV path.
pub fn write_results(
    dir: &Path,
    rows: &[ResultRow],
    traces: Option<&[TrialTrace]>,
) -> Result<PathBuf, HarnessError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let csv_path = dir.join("results.csv");
    fs::write(&csv_path, csv_string(rows)?).map_err(io_err(&csv_path))?;
    write_json(&dir.join("results.json"), rows)?;
    if let Some(traces) = traces {
        let tdir = dir.join("trace");
        fs::create_dir_all(&tdir).map_err(io_err(&tdir))?;
        for t in traces {
            write_json(&tdir.join(trace_file_name(t)), t)?;
        }
    }
    Ok(csv_path)
}
