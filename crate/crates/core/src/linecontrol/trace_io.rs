//! Reflectogram files: a two-column CSV (`position_km,power_db`) plus a JSON
//! sidecar with the acquisition metadata, stored next to it with a `.json`
//! extension.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::reflectometry::Reflectogram;
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 2] = ["position_km", "power_db"];

const POSITION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub spacing_km: f64,
    pub noise_sigma_db: f64,
    pub length_km: f64,
}

pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

pub fn write_trace(path: &Path, trace: &Reflectogram) -> Result<()> {
    trace.validate()?;
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    w.write_record(CSV_HEADER).map_err(csv_error)?;
    for (i, s) in trace.samples.iter().enumerate() {
        w.write_record([trace.position_km(i).to_string(), s.to_string()])
            .map_err(csv_error)?;
    }
    w.flush()?;

    let meta = TraceMeta {
        spacing_km: trace.sample_spacing_km,
        noise_sigma_db: trace.noise_sigma_db,
        length_km: trace.length_km(),
    };
    let json = serde_json::to_string_pretty(&meta).map_err(|e| Error::Format(e.to_string()))?;
    std::fs::write(sidecar_path(path), json + "\n")?;
    Ok(())
}

pub fn read_trace(path: &Path) -> Result<Reflectogram> {
    let meta_text = std::fs::read_to_string(sidecar_path(path))?;
    let meta: TraceMeta = serde_json::from_str(&meta_text)
        .map_err(|e| Error::Format(format!("{}: {e}", sidecar_path(path).display())))?;

    let mut r = csv::Reader::from_path(path).map_err(csv_error)?;
    let header = r.headers().map_err(csv_error)?;
    if header.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(Error::Format(format!(
            "{}: expected header {}",
            path.display(),
            CSV_HEADER.join(",")
        )));
    }
    let mut samples = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_error)?;
        let field = |k: usize| -> Result<f64> {
            rec.get(k)
                .ok_or_else(|| Error::Format(format!("row {}: missing column", i + 1)))?
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Format(format!("row {}: {e}", i + 1)))
        };
        let (x, y) = (field(0)?, field(1)?);
        let expected = i as f64 * meta.spacing_km;
        if (x - expected).abs() > POSITION_TOL * expected.max(1.0) {
            return Err(Error::Format(format!(
                "row {}: position {x} km does not match spacing {} km",
                i + 1,
                meta.spacing_km
            )));
        }
        samples.push(y);
    }
    let trace = Reflectogram::new(meta.spacing_km, samples, meta.noise_sigma_db)?;
    if (trace.length_km() - meta.length_km).abs() > POSITION_TOL * meta.length_km.max(1.0) {
        return Err(Error::Format(format!(
            "trace spans {} km but metadata says {} km",
            trace.length_km(),
            meta.length_km
        )));
    }
    Ok(trace)
}

fn csv_error(e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => Error::Format(format!("{other:?}")),
        }
    } else {
        Error::Format(e.to_string())
    }
}
