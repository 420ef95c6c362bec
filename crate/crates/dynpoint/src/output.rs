//! Bit-stable artifact emission: CSV tables and JSON sidecars, each stamped
//! with the config hash and root seed so re-runs with identical inputs
//! reproduce identical bytes.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;

/// Provenance stamp embedded in every artifact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Metadata {
    pub config_hash: String,
    pub seed: u64,
}

/// 17 significant digits: round-trip exact for doubles.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Write a CSV table with leading `#` provenance comments and a header row.
pub fn write_csv<R, I>(path: &Path, meta: &Metadata, header: &[&str], rows: R) -> Result<()>
where
    R: IntoIterator<Item = I>,
    I: IntoIterator<Item = f64>,
{
    let mut out = Vec::new();
    writeln!(out, "# config_hash={}", meta.config_hash)?;
    writeln!(out, "# seed={}", meta.seed)?;
    writeln!(out, "{}", header.join(","))?;
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(format_f64).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Write a JSON sidecar; the metadata is merged in under `"provenance"`.
pub fn write_json<T: Serialize>(path: &Path, meta: &Metadata, payload: &T) -> Result<()> {
    let body = serde_json::json!({
        "provenance": meta,
        "data": payload,
    });
    let mut text = serde_json::to_string_pretty(&body).expect("value serializes");
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}
