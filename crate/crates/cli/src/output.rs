use std::io::Write;
use std::path::Path;

use qbound::region::RegionSample;
use serde::{Deserialize, Serialize};

use crate::Failure;

/// One CSV/JSON row of a region file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionRow {
    pub v_x: f64,
    pub v_y: f64,
    pub segment: Option<String>,
    pub source: String,
    pub t: Option<f64>,
    pub phi1: Option<f64>,
    pub w_ratio: Option<f64>,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

impl From<&RegionSample> for RegionRow {
    fn from(s: &RegionSample) -> Self {
        RegionRow {
            v_x: s.v_x,
            v_y: s.v_y,
            segment: s.segment.map(|g| g.as_str().to_owned()),
            source: s.source.as_str().to_owned(),
            t: finite(s.t),
            phi1: finite(s.phi1),
            w_ratio: finite(s.w_ratio),
        }
    }
}

pub fn region_csv(rows: &[RegionRow]) -> Result<Vec<u8>, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(|e| Failure::Io(e.to_string()))?;
    }
    if rows.is_empty() {
        w.write_record(["v_x", "v_y", "segment", "source", "t", "phi1", "w_ratio"])
            .map_err(|e| Failure::Io(e.to_string()))?;
    }
    w.into_inner().map_err(|e| Failure::Io(e.to_string()))
}

pub fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, Failure> {
    let mut out = serde_json::to_vec_pretty(value).map_err(|e| Failure::Io(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}

/// Write to `path` through a temporary file in the same directory, or to stdout.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    let io = |e: std::io::Error| Failure::Io(e.to_string());
    let Some(path) = path else {
        let mut stdout = std::io::stdout().lock();
        return stdout
            .write_all(bytes)
            .and_then(|_| stdout.flush())
            .map_err(io);
    };
    let name = path
        .file_name()
        .ok_or_else(|| Failure::Io(format!("{} is not a file path", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".{}.tmp", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    let write = || -> std::io::Result<()> {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    };
    write().map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        Failure::Io(format!("{}: {e}", path.display()))
    })
}
