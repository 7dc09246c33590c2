//! Result files. Every file is written to a temporary sibling and renamed
//! into place, so a failed run never leaves a partial file behind.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::sim::{SimRecord, SuppressionMetrics};

pub const TIMESERIES_FILE: &str = "timeseries.csv";
pub const METRICS_FILE: &str = "metrics.json";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Writes `bytes` to `path` via a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp"));
    if let Err(e) = std::fs::write(&tmp, bytes) {
        let _ = std::fs::remove_file(&tmp);
        return Err(Error::io(&tmp, e));
    }
    std::fs::rename(&tmp, path).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

pub fn to_json<S: Serialize>(value: &S, pretty: bool) -> Result<String> {
    let s = if pretty { serde_json::to_string_pretty(value) } else { serde_json::to_string(value) };
    s.map(|mut s| {
        s.push('\n');
        s
    })
    .map_err(|e| Error::Domain(format!("serialization failed: {e}")))
}

/// Header of the time-series CSV for `n` feathers.
pub fn timeseries_header(n: usize) -> String {
    let mut cols: Vec<String> = ["t", "x1", "x2", "x3", "x4", "E", "L", "L_tilde"].iter().map(|s| s.to_string()).collect();
    cols.extend((1..=n).map(|i| format!("beta_{i}")));
    cols.extend((1..=n).map(|i| format!("u_{i}")));
    cols.join(",")
}

/// Renders a record as CSV text with shortest round-trip number formatting.
pub fn timeseries_csv<T: Real>(rec: &SimRecord<T>) -> String {
    let n = rec.beta.first().map_or(0, Vec::len);
    let mut out = timeseries_header(n);
    out.push('\n');
    for k in 0..rec.len() {
        let mut fields: Vec<f64> = vec![rec.t[k].to_f64_lossy()];
        fields.extend(rec.x[k].iter().map(|v| v.to_f64_lossy()));
        fields.push(rec.energy[k].to_f64_lossy());
        fields.push(rec.l[k].to_f64_lossy());
        fields.push(rec.l_tilde[k].to_f64_lossy());
        fields.extend(rec.beta[k].iter().map(|v| v.to_f64_lossy()));
        fields.extend(rec.u[k].iter().map(|v| v.to_f64_lossy()));
        push_row(&mut out, &fields);
    }
    out
}

/// Appends one comma-separated row.
pub fn push_row(out: &mut String, fields: &[f64]) {
    for (i, v) in fields.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(out, "{v}");
    }
    out.push('\n');
}

/// Writes a CSV file from a header and numeric rows.
pub fn write_csv(path: &Path, header: &str, rows: &[Vec<f64>]) -> Result<()> {
    let mut out = String::from(header);
    out.push('\n');
    for r in rows {
        push_row(&mut out, r);
    }
    write_atomic(path, out.as_bytes())
}

/// Metrics file contents: the suppression summary plus run context.
#[derive(Debug, Serialize)]
pub struct MetricsDoc<'a> {
    #[serde(flatten)]
    pub metrics: &'a SuppressionMetrics<f64>,
    pub v_flat: Option<f64>,
    pub rows: usize,
}

/// Writes `timeseries.csv`, `metrics.json` and `manifest.json` into `out_dir`.
pub fn write_outputs<T: Real>(
    rec: &SimRecord<T>,
    metrics: &SuppressionMetrics<T>,
    config: &RunConfig,
    v_flat: Option<T>,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let pretty = config.output.pretty_json;
    let m64 = SuppressionMetrics {
        t_damp: metrics.t_damp.map(|v| v.to_f64_lossy()),
        e_max: metrics.e_max.to_f64_lossy(),
        hold: metrics.hold,
        l_ok: metrics.l_ok,
        ltilde_ok: metrics.ltilde_ok,
        status: metrics.status,
        horizon: metrics.horizon.to_f64_lossy(),
        t1: metrics.t1.to_f64_lossy(),
    };
    let doc = MetricsDoc { metrics: &m64, v_flat: v_flat.map(|v| v.to_f64_lossy()), rows: rec.len() };
    let files = [
        (out_dir.join(TIMESERIES_FILE), timeseries_csv(rec)),
        (out_dir.join(METRICS_FILE), to_json(&doc, pretty)?),
        (out_dir.join(MANIFEST_FILE), to_json(config, true)?),
    ];
    for (path, text) in &files {
        write_atomic(path, text.as_bytes())?;
    }
    Ok(files.into_iter().map(|(p, _)| p).collect())
}
