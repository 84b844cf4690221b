//! CSV formats.
//!
//! Signal files carry a `time,<ch1>,<ch2>,...` header followed by
//! comma-separated decimal values, decimal point `.`, `\n` line terminator.
//! The time column must be strictly increasing and uniform; the reader
//! infers the sample rate from the first two rows and validates uniformity
//! to 1e-6 relative tolerance.
//!
//! Floats are written with Rust's shortest round-trip formatting, so
//! write → read → write is byte-stable.

use crate::signal::{SignalError, TimeSeries};
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Format { path: String, message: String },
    #[error(transparent)]
    Signal(#[from] SignalError),
}

fn io_err(path: &Path, source: io::Error) -> CsvError {
    CsvError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> CsvError {
    CsvError::Parse {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

/// Shortest round-trip decimal form (`{:?}` on floats).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn parse_f64(path: &Path, line: usize, field: &str) -> Result<f64, CsvError> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| parse_err(path, line, format!("not a number: {field:?}")))
}

/// Write a multichannel signal CSV. Channels must share length and rate.
pub fn write_signal_csv(
    path: &Path,
    channels: &[(String, &TimeSeries)],
) -> Result<(), CsvError> {
    assert!(!channels.is_empty());
    let len = channels[0].1.len();
    let rate = channels[0].1.sample_rate();
    let mut out = String::with_capacity(len * channels.len() * 12);
    out.push_str("time");
    for (name, ts) in channels {
        assert_eq!(ts.len(), len, "channel length mismatch");
        assert_eq!(ts.sample_rate(), rate, "channel rate mismatch");
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for i in 0..len {
        let _ = write!(out, "{}", fmt_f64(i as f64 / rate));
        for (_, ts) in channels {
            out.push(',');
            out.push_str(&fmt_f64(ts.samples()[i]));
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

/// Convenience for a single-channel file.
pub fn write_series_csv(path: &Path, name: &str, ts: &TimeSeries) -> Result<(), CsvError> {
    write_signal_csv(path, &[(name.to_string(), ts)])
}

/// Read a signal CSV: returns channel names with their series.
pub fn read_signal_csv(path: &Path) -> Result<Vec<(String, TimeSeries)>, CsvError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "empty file"))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.first() != Some(&"time") {
        return Err(parse_err(path, 1, "header must start with 'time'"));
    }
    if cols.len() < 2 {
        return Err(parse_err(path, 1, "no channel columns"));
    }
    let names: Vec<String> = cols[1..].iter().map(|s| s.to_string()).collect();
    let mut times: Vec<f64> = Vec::new();
    let mut data: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(parse_err(
                path,
                idx + 1,
                format!("expected {} fields, got {}", cols.len(), fields.len()),
            ));
        }
        times.push(parse_f64(path, idx + 1, fields[0])?);
        for (c, f) in fields[1..].iter().enumerate() {
            data[c].push(parse_f64(path, idx + 1, f)?);
        }
    }
    if times.len() < 2 {
        return Err(parse_err(path, 1, "need at least two rows to infer sample rate"));
    }
    let dt = times[1] - times[0];
    if !(dt > 0.0) {
        return Err(parse_err(path, 3, "time column must be strictly increasing"));
    }
    for i in 2..times.len() {
        let step = times[i] - times[i - 1];
        if ((step - dt) / dt).abs() > 1e-6 {
            return Err(parse_err(
                path,
                i + 2,
                format!("non-uniform time step: {step} vs {dt}"),
            ));
        }
    }
    let rate = 1.0 / dt;
    names
        .into_iter()
        .zip(data)
        .map(|(name, samples)| Ok((name, TimeSeries::new(samples, rate)?)))
        .collect()
}

/// Write an entropy/relative profile as `scale,value` with `NA` for
/// undefined entries. Scales are 1-based.
pub fn write_profile_csv(path: &Path, values: &[Option<f64>]) -> Result<(), CsvError> {
    let mut out = String::from("scale,value\n");
    for (i, v) in values.iter().enumerate() {
        match v {
            Some(x) => {
                let _ = writeln!(out, "{},{}", i + 1, fmt_f64(*x));
            }
            None => {
                let _ = writeln!(out, "{},NA", i + 1);
            }
        }
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

/// Read a `scale,value` profile written by [`write_profile_csv`].
pub fn read_profile_csv(path: &Path) -> Result<Vec<Option<f64>>, CsvError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "empty file"))?;
    if header != "scale,value" {
        return Err(parse_err(path, 1, "expected header 'scale,value'"));
    }
    let mut values = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let (scale_s, value_s) = line
            .split_once(',')
            .ok_or_else(|| parse_err(path, idx + 1, "expected 'scale,value'"))?;
        let scale: usize = scale_s
            .parse()
            .map_err(|_| parse_err(path, idx + 1, "bad scale"))?;
        if scale != values.len() + 1 {
            return Err(parse_err(path, idx + 1, "scales must be contiguous from 1"));
        }
        if value_s == "NA" {
            values.push(None);
        } else {
            values.push(Some(parse_f64(path, idx + 1, value_s)?));
        }
    }
    Ok(values)
}

/// Generic table writer: header plus rows of preformatted fields.
pub fn write_table(path: &Path, header: &str, rows: &[Vec<String>]) -> Result<(), CsvError> {
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

/// Read a generic CSV with an expected header; returns rows of fields.
pub fn read_table(path: &Path, expected_header: &str) -> Result<Vec<Vec<String>>, CsvError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "empty file"))?;
    if header != expected_header {
        return Err(parse_err(
            path,
            1,
            format!("expected header {expected_header:?}, got {header:?}"),
        ));
    }
    Ok(lines
        .filter(|(_, l)| !l.is_empty())
        .map(|(_, l)| l.split(',').map(|s| s.to_string()).collect())
        .collect())
}

/// Parse one field of a table row as f64, with location context.
pub fn parse_field_f64(path: &Path, row: usize, field: &str) -> Result<f64, CsvError> {
    parse_f64(path, row, field)
}

/// Write a labelled feature table: `subject_id,label,f1..fK`.
pub fn write_features_csv(
    path: &Path,
    features: &[crate::classify::SubjectFeatures],
) -> Result<(), CsvError> {
    let dim = features.first().map_or(0, |f| f.features.len());
    let mut header = String::from("subject_id,label");
    for i in 1..=dim {
        let _ = write!(header, ",f{i}");
    }
    let rows: Vec<Vec<String>> = features
        .iter()
        .map(|f| {
            let mut row = vec![f.subject_id.clone(), f.label.name().to_string()];
            row.extend(f.features.iter().map(|v| fmt_f64(*v)));
            row
        })
        .collect();
    write_table(path, &header, &rows)
}

/// Read a labelled feature table written by [`write_features_csv`].
pub fn read_features_csv(
    path: &Path,
) -> Result<Vec<crate::classify::SubjectFeatures>, CsvError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "empty file"))?;
    if !header.starts_with("subject_id,label") {
        return Err(parse_err(path, 1, "expected header subject_id,label,f1.."));
    }
    let n_cols = header.split(',').count();
    let mut out = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != n_cols {
            return Err(parse_err(
                path,
                idx + 1,
                format!("expected {} fields, got {}", n_cols, fields.len()),
            ));
        }
        let label = crate::classify::Phase::parse(fields[1])
            .ok_or_else(|| parse_err(path, idx + 1, format!("unknown label {:?}", fields[1])))?;
        let features = fields[2..]
            .iter()
            .map(|f| parse_f64(path, idx + 1, f))
            .collect::<Result<Vec<f64>, _>>()?;
        out.push(crate::classify::SubjectFeatures {
            subject_id: fields[0].to_string(),
            label,
            features,
        });
    }
    Ok(out)
}
