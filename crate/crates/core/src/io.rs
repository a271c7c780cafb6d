//! On-disk formats: constellation and sweep CSVs, JSON manifests.

use crate::autoencoder::{Constellation, SerEstimate, TrainConfig, TrainedSystem};
use crate::experiment::{RatePowerSample, RunFailure, SweepConfig, SweepOutcome, SweepRecord};
use crate::nn::Mlp;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const CONSTELLATION_HEADER: &str = "index,re,im";
pub const RECORDS_HEADER: &str = "lambda,seed,ser,ser_ci,p_del,final_loss,accepted";
pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("row {row}: {message}")]
    Csv { row: usize, message: String },
    #[error("manifest schema version {found} is not supported (expected {expected})")]
    SchemaVersion { found: u32, expected: u32 },
    #[error("malformed manifest: {0}")]
    Json(#[from] serde_json::Error),
    #[error("manifest is inconsistent: {0}")]
    Inconsistent(String),
}

/// 17 significant digits, scientific notation. Round-trips every `f64`.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_err(row: usize, message: impl Into<String>) -> IoError {
    IoError::Csv {
        row,
        message: message.into(),
    }
}

pub fn constellation_csv(points: &[Complex64]) -> String {
    let mut out = String::from(CONSTELLATION_HEADER);
    out.push('\n');
    for (i, p) in points.iter().enumerate() {
        let _ = writeln!(out, "{i},{},{}", format_float(p.re), format_float(p.im));
    }
    out
}

/// Parses a constellation CSV. Row numbers in errors count the header as 1.
pub fn parse_constellation_csv(text: &str) -> Result<Vec<Complex64>, IoError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == CONSTELLATION_HEADER => {}
        _ => {
            return Err(csv_err(
                1,
                format!("expected header `{CONSTELLATION_HEADER}`"),
            ))
        }
    }
    let mut points = Vec::new();
    for (i, line) in lines {
        let row = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(csv_err(
                row,
                format!("expected 3 fields, found {}", fields.len()),
            ));
        }
        let index: usize = fields[0]
            .parse()
            .map_err(|_| csv_err(row, format!("bad index `{}`", fields[0])))?;
        if index != points.len() {
            return Err(csv_err(row, format!("index {index} out of sequence")));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| csv_err(row, format!("bad number `{s}`")))
        };
        points.push(Complex64::new(num(fields[1])?, num(fields[2])?));
    }
    Ok(points)
}

/// One line of `records.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordRow {
    pub lambda: f64,
    pub seed: u64,
    pub ser: f64,
    pub ser_ci: f64,
    pub p_del: f64,
    pub final_loss: f64,
    pub accepted: bool,
}

impl From<&SweepRecord> for RecordRow {
    fn from(r: &SweepRecord) -> Self {
        Self {
            lambda: r.lambda,
            seed: r.seed,
            ser: r.ser,
            ser_ci: r.ser_ci,
            p_del: r.p_del,
            final_loss: r.final_loss,
            accepted: r.accepted,
        }
    }
}

impl RatePowerSample for RecordRow {
    fn one_minus_ser(&self) -> f64 {
        1.0 - self.ser
    }
    fn p_del(&self) -> f64 {
        self.p_del
    }
    fn accepted(&self) -> bool {
        self.accepted
    }
}

pub fn records_csv(records: &[SweepRecord]) -> String {
    let mut out = String::from(RECORDS_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            format_float(r.lambda),
            r.seed,
            format_float(r.ser),
            format_float(r.ser_ci),
            format_float(r.p_del),
            format_float(r.final_loss),
            r.accepted
        );
    }
    out
}

pub fn parse_records_csv(text: &str) -> Result<Vec<RecordRow>, IoError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == RECORDS_HEADER => {}
        _ => return Err(csv_err(1, format!("expected header `{RECORDS_HEADER}`"))),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let row = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 7 {
            return Err(csv_err(
                row,
                format!("expected 7 fields, found {}", f.len()),
            ));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| csv_err(row, format!("bad number `{s}`")))
        };
        rows.push(RecordRow {
            lambda: num(f[0])?,
            seed: f[1]
                .parse()
                .map_err(|_| csv_err(row, format!("bad seed `{}`", f[1])))?,
            ser: num(f[2])?,
            ser_ci: num(f[3])?,
            p_del: num(f[4])?,
            final_loss: num(f[5])?,
            accepted: f[6]
                .parse()
                .map_err(|_| csv_err(row, format!("bad flag `{}`", f[6])))?,
        });
    }
    Ok(rows)
}

/// JSON form of a [`TrainedSystem`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemManifest {
    pub schema_version: u32,
    pub config: TrainConfig,
    pub encoder: Mlp,
    pub decoder: Mlp,
    /// `[re, im]` pairs.
    pub constellation: Vec<[f64; 2]>,
    pub avg_power: f64,
    pub final_loss: f64,
    pub p_del: f64,
    pub ser: Option<SerEstimate>,
}

impl SystemManifest {
    pub fn new(system: &TrainedSystem, p_del: f64, ser: Option<SerEstimate>) -> Self {
        Self {
            schema_version: MANIFEST_SCHEMA_VERSION,
            config: system.config.clone(),
            encoder: system.encoder.clone(),
            decoder: system.decoder.clone(),
            constellation: system
                .constellation
                .points
                .iter()
                .map(|p| [p.re, p.im])
                .collect(),
            avg_power: system.constellation.avg_power,
            final_loss: system.final_loss,
            p_del,
            ser,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    /// Parses a manifest, checking the schema version before the body.
    pub fn from_json(text: &str) -> Result<Self, IoError> {
        #[derive(Deserialize)]
        struct Version {
            schema_version: u32,
        }
        let v: Version = serde_json::from_str(text)?;
        if v.schema_version != MANIFEST_SCHEMA_VERSION {
            return Err(IoError::SchemaVersion {
                found: v.schema_version,
                expected: MANIFEST_SCHEMA_VERSION,
            });
        }
        Ok(serde_json::from_str(text)?)
    }

    pub fn into_system(self) -> Result<TrainedSystem, IoError> {
        let m = self.config.m_messages;
        if self.constellation.len() != m
            || self.encoder.in_dim() != m
            || self.decoder.out_dim() != m
        {
            return Err(IoError::Inconsistent(format!(
                "expected {m} messages in constellation, encoder and decoder"
            )));
        }
        Ok(TrainedSystem {
            encoder: self.encoder,
            decoder: self.decoder,
            config: self.config,
            final_loss: self.final_loss,
            constellation: Constellation {
                points: self
                    .constellation
                    .iter()
                    .map(|&[re, im]| Complex64::new(re, im))
                    .collect(),
                avg_power: self.avg_power,
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedRun {
    pub lambda: f64,
    pub seed: u64,
    pub ser: f64,
    pub p_del: f64,
}

/// `sweep_manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepManifest {
    pub schema_version: u32,
    pub config: SweepConfig,
    pub base_seed: u64,
    pub seeds: Vec<u64>,
    pub selected: Vec<SelectedRun>,
    pub failures: Vec<RunFailure>,
    pub stopped_at: Option<f64>,
}

impl SweepManifest {
    pub fn new(config: &SweepConfig, outcome: &SweepOutcome) -> Self {
        Self {
            schema_version: MANIFEST_SCHEMA_VERSION,
            config: config.clone(),
            base_seed: config.base.seed,
            seeds: config.seeds().collect(),
            selected: outcome
                .selected_records()
                .map(|r| SelectedRun {
                    lambda: r.lambda,
                    seed: r.seed,
                    ser: r.ser,
                    p_del: r.p_del,
                })
                .collect(),
            failures: outcome.failures.clone(),
            stopped_at: outcome.stopped_at,
        }
    }
}

pub fn constellation_file_name(lambda: f64) -> String {
    format!("constellation_lambda{lambda}.csv")
}

fn write(path: &Path, contents: &str) -> Result<(), IoError> {
    fs::write(path, contents).map_err(|source| IoError::File {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_to_string(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::File {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes `records.csv`, one constellation CSV per selected run and
/// `sweep_manifest.json` into `dir`.
pub fn write_sweep(
    dir: &Path,
    config: &SweepConfig,
    outcome: &SweepOutcome,
) -> Result<(), IoError> {
    fs::create_dir_all(dir).map_err(|source| IoError::File {
        path: dir.to_path_buf(),
        source,
    })?;
    write(&dir.join("records.csv"), &records_csv(&outcome.records))?;
    for r in outcome.selected_records() {
        write(
            &dir.join(constellation_file_name(r.lambda)),
            &constellation_csv(&r.constellation.points),
        )?;
    }
    let manifest = SweepManifest::new(config, outcome);
    write(
        &dir.join("sweep_manifest.json"),
        &serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
    )
}

/// Writes `manifest.json` and `constellation.csv` for a trained system.
pub fn write_system(dir: &Path, manifest: &SystemManifest) -> Result<(), IoError> {
    fs::create_dir_all(dir).map_err(|source| IoError::File {
        path: dir.to_path_buf(),
        source,
    })?;
    write(&dir.join("manifest.json"), &manifest.to_json())?;
    let points: Vec<Complex64> = manifest
        .constellation
        .iter()
        .map(|&[re, im]| Complex64::new(re, im))
        .collect();
    write(&dir.join("constellation.csv"), &constellation_csv(&points))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constellation_csv_layout() {
        let text = constellation_csv(&[
            Complex64::new(2f64.sqrt(), 0.0),
            Complex64::new(-0.5, 1e-300),
        ]);
        assert_eq!(
            text,
            "index,re,im\n0,1.4142135623730951e0,0.0000000000000000e0\n1,-5.0000000000000000e-1,1.0000000000000000e-300\n"
        );
    }

    #[test]
    fn csv_errors_name_the_row() {
        let err = parse_constellation_csv("index,re,im\n0,1,2\n1,abc,0\n").unwrap_err();
        assert!(matches!(err, IoError::Csv { row: 3, .. }), "{err}");
        let err = parse_constellation_csv("i,re\n").unwrap_err();
        assert!(matches!(err, IoError::Csv { row: 1, .. }));
        let err = parse_records_csv(&format!("{RECORDS_HEADER}\n0,1,0.5\n")).unwrap_err();
        assert!(matches!(err, IoError::Csv { row: 2, .. }));
    }

    #[test]
    fn schema_version_is_checked() {
        let err = SystemManifest::from_json(r#"{"schema_version": 99}"#).unwrap_err();
        assert!(matches!(
            err,
            IoError::SchemaVersion {
                found: 99,
                expected: 1
            }
        ));
    }

    proptest! {
        #[test]
        fn constellation_csv_round_trips(pts in prop::collection::vec((-1e6f64..1e6, -1e6f64..1e6), 1..40)) {
            let points: Vec<Complex64> = pts.iter().map(|&(a, b)| Complex64::new(a, b)).collect();
            let back = parse_constellation_csv(&constellation_csv(&points)).unwrap();
            prop_assert_eq!(back, points);
        }
    }
}
