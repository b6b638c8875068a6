//! Output writers: CSV tables, JSON summaries, field grid dumps.
//!
//! All writers produce the complete byte string first and write it in one
//! shot, so identical runs produce byte-identical files.

use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::field::{C2Field, SampledField};
use crate::grid::UniformGrid2;
use crate::spectral::MeasureSpec;

pub fn write_text(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, content.as_bytes())?;
    Ok(())
}

pub fn write_bytes(path: &Path, content: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, content)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

/// Assemble a CSV from a header and preformatted rows.
pub fn csv_document(header: &str, rows: &[String]) -> String {
    let mut out = String::with_capacity(header.len() + rows.iter().map(|r| r.len() + 1).sum::<usize>() + 1);
    out.push_str(header);
    out.push('\n');
    for row in rows {
        out.push_str(row);
        out.push('\n');
    }
    out
}

/// Field jet dump on the vertex grid: row-major rows of
/// `f, f_x, f_y, f_xx, f_xy, f_yy`.
pub fn field_dump_csv(field: &SampledField, grid: &UniformGrid2) -> String {
    let jets = field.jets_on_grid(grid);
    let mut out = String::from("f,f_x,f_y,f_xx,f_xy,f_yy\n");
    for jet in &jets {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            jet.f, jet.fx, jet.fy, jet.fxx, jet.fxy, jet.fyy
        ));
    }
    out
}

/// Same dump as raw little-endian f64s, 6 per grid point.
pub fn field_dump_raw(field: &SampledField, grid: &UniformGrid2) -> Vec<u8> {
    let jets = field.jets_on_grid(grid);
    let mut out = Vec::with_capacity(jets.len() * 6 * 8);
    for jet in &jets {
        for v in [jet.f, jet.fx, jet.fy, jet.fxx, jet.fxy, jet.fyy] {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

/// Sidecar header accompanying a field dump.
#[derive(Debug, Serialize)]
pub struct FieldDumpHeader {
    pub r: f64,
    pub n: usize,
    pub seed: u64,
    pub measure: MeasureSpec,
}

/// Level-set polyline segments as CSV endpoint rows.
pub fn segments_csv(segments: &[[f64; 4]]) -> String {
    let mut out = String::from("x0,y0,x1,y1\n");
    for s in segments {
        out.push_str(&format!("{},{},{},{}\n", s[0], s[1], s[2], s[3]));
    }
    out
}
