//! Plot-ready CSV files.

use std::io::Write;
use std::path::Path;

use super::experiment::{LocalizationRow, MapRow, TrialOutcome};
use crate::environment::{format_value, GridSpec};
use crate::error::{Error, Result};

pub const LOCALIZATION_HEADER: [&str; 4] = ["sweep_param", "value", "mean_err_m", "std_err_m"];
pub const MAP_HEADER: [&str; 5] = ["sweep_param", "value", "rms_est_db", "rms_overall_db", "improvement_pct"];
pub const RESULT_HEADER: [&str; 9] = [
    "obs", "true_idx", "true_x", "true_y", "est_idx", "est_x", "est_y", "error_m", "smoothed",
];

fn write_records<W: Write>(out: W, header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
    let csv_err = |e: csv::Error| Error::Csv {
        path: "<output>".into(),
        source: e,
    };
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(&r).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("<output>", e))
}

pub fn write_localization_metrics<W: Write>(out: W, param: &str, rows: &[LocalizationRow]) -> Result<()> {
    let records = rows
        .iter()
        .map(|r| {
            vec![
                param.to_string(),
                format_value(r.value),
                format_value(r.mean_err_m),
                format_value(r.std_err_m),
            ]
        })
        .collect();
    write_records(out, &LOCALIZATION_HEADER, records)
}

/// Map metrics; `rms_est_db` is empty when no trial estimated any point.
pub fn write_map_metrics<W: Write>(out: W, param: &str, rows: &[MapRow]) -> Result<()> {
    let records = rows
        .iter()
        .map(|r| {
            vec![
                param.to_string(),
                format_value(r.value),
                r.rms_est_db.map(format_value).unwrap_or_default(),
                format_value(r.rms_overall_db),
                format_value(r.improvement_pct),
            ]
        })
        .collect();
    write_records(out, &MAP_HEADER, records)
}

/// One row per observation of a localization trial.
pub fn write_trial_result<W: Write>(out: W, grid: &GridSpec, trial: &TrialOutcome) -> Result<()> {
    let records = trial
        .result
        .estimates
        .iter()
        .zip(&trial.truth_points)
        .zip(&trial.errors)
        .enumerate()
        .map(|(n, ((e, &t), &err))| {
            let truth = grid.position(t);
            vec![
                n.to_string(),
                t.to_string(),
                format_value(truth.x),
                format_value(truth.y),
                e.source_index.to_string(),
                format_value(e.position.x),
                format_value(e.position.y),
                format_value(err),
                e.smoothed.to_string(),
            ]
        })
        .collect();
    write_records(out, &RESULT_HEADER, records)
}

/// Creates `path` and hands a buffered writer to `write`.
pub fn write_file<F>(path: &Path, write: F) -> Result<()>
where
    F: FnOnce(&mut std::io::BufWriter<std::fs::File>) -> Result<()>,
{
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut buf = std::io::BufWriter::new(file);
    write(&mut buf).map_err(|e| match e {
        Error::Csv { source, .. } => Error::Csv {
            path: path.to_path_buf(),
            source,
        },
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })?;
    buf.flush().map_err(|e| Error::io(path, e))
}
