//! Artifact files: CSV tables, JSON reports and sidecars, and a
//! directory digest for byte-level reproducibility checks.
//!
//! All numbers are written with Rust's shortest-round-trip float
//! formatting, so identical values always produce identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use pgdm_core::{ShapeTag, StateVector, TraceRecord};

use crate::error::{HarnessError, Stage};

fn io_err<'a>(
    action: &'a str,
    path: &'a Path,
) -> impl FnOnce(std::io::Error) -> HarnessError + 'a {
    move |e| HarnessError::new(Stage::Io, format!("{action} {}: {e}", path.display()))
}

/// Creates the directory (and parents) if needed.
pub fn ensure_dir(dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(dir).map_err(io_err("create directory", dir))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    if let Some(parent) = path.parent() {
        ensure_dir(parent)?;
    }
    fs::write(path, bytes).map_err(io_err("write", path))
}

/// Serializes a value as pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| HarnessError::new(Stage::Io, format!("serialize {}: {e}", path.display())))?;
    text.push('\n');
    write_bytes(path, text.as_bytes())
}

// ---------------------------------------------------------------------
// Samples.

/// Compact text form of a state shape, stored in sample sidecars.
pub fn shape_tag_string(tag: ShapeTag) -> String {
    match tag {
        ShapeTag::Flat => "flat".to_string(),
        ShapeTag::Grid {
            height,
            width,
            frames,
        } => format!("grid:{height}x{width}x{frames}"),
        ShapeTag::Path { n_points } => format!("path:{n_points}"),
    }
}

/// Parses the text form produced by [`shape_tag_string`].
pub fn parse_shape_tag(text: &str) -> Result<ShapeTag, HarnessError> {
    let bad = || {
        HarnessError::new(
            Stage::Io,
            format!("unrecognized shape tag '{text}'"),
        )
    };
    if text == "flat" {
        return Ok(ShapeTag::Flat);
    }
    if let Some(dims) = text.strip_prefix("grid:") {
        let parts: Vec<_> = dims.split('x').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let parse = |s: &str| s.parse::<usize>().map_err(|_| bad());
        return Ok(ShapeTag::Grid {
            height: parse(parts[0])?,
            width: parse(parts[1])?,
            frames: parse(parts[2])?,
        });
    }
    if let Some(n) = text.strip_prefix("path:") {
        return Ok(ShapeTag::Path {
            n_points: n.parse().map_err(|_| bad())?,
        });
    }
    Err(bad())
}

/// Metadata written alongside every samples CSV.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct SampleSidecar {
    pub dim: usize,
    pub shape_tag: String,
    pub seed: u64,
    pub config_sha256: String,
}

/// Writes samples as CSV (one row per flattened sample, no header) plus
/// a `.json` sidecar next to it carrying shape and provenance fields.
pub fn write_samples(
    path: &Path,
    samples: &[StateVector],
    seed: u64,
    config_sha256: &str,
) -> Result<(), HarnessError> {
    let first = samples.first().ok_or_else(|| {
        HarnessError::new(Stage::Io, format!("no samples to write to {}", path.display()))
    })?;
    let mut text = String::new();
    for s in samples {
        debug_assert_eq!(s.data().len(), first.data().len());
        let mut sep = "";
        for v in s.data() {
            let _ = write!(text, "{sep}{v}");
            sep = ",";
        }
        text.push('\n');
    }
    write_bytes(path, text.as_bytes())?;
    let sidecar = SampleSidecar {
        dim: first.data().len(),
        shape_tag: shape_tag_string(first.shape()),
        seed,
        config_sha256: config_sha256.to_string(),
    };
    write_json(&path.with_extension("json"), &sidecar)
}

/// Reads a samples CSV written by [`write_samples`], restoring shapes
/// from the sidecar.
pub fn read_samples(path: &Path) -> Result<(Vec<StateVector>, SampleSidecar), HarnessError> {
    let text = fs::read_to_string(path).map_err(io_err("read", path))?;
    let sidecar_path = path.with_extension("json");
    let sidecar_text = fs::read_to_string(&sidecar_path).map_err(io_err("read", &sidecar_path))?;
    let sidecar: SampleSidecar = serde_json::from_str(&sidecar_text).map_err(|e| {
        HarnessError::new(
            Stage::Io,
            format!("parse {}: {e}", sidecar_path.display()),
        )
    })?;
    let shape = parse_shape_tag(&sidecar.shape_tag)?;
    let mut samples = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let row: Result<Vec<f64>, _> = line.split(',').map(str::parse::<f64>).collect();
        let row = row.map_err(|e| {
            HarnessError::new(
                Stage::Io,
                format!("{} line {}: {e}", path.display(), ln + 1),
            )
        })?;
        samples.push(StateVector::new(row, shape).map_err(|e| {
            HarnessError::new(Stage::Io, format!("{} line {}: {e}", path.display(), ln + 1))
        })?);
    }
    Ok((samples, sidecar))
}

// ---------------------------------------------------------------------
// Tables.

/// Writes sampler trace records with the fixed header
/// `t,i,pre_error,post_error,grad_norm,gamma`.
pub fn write_trace_csv(path: &Path, records: &[TraceRecord]) -> Result<(), HarnessError> {
    let mut text = String::from("t,i,pre_error,post_error,grad_norm,gamma\n");
    for r in records {
        let _ = writeln!(
            text,
            "{},{},{},{},{},{}",
            r.level, r.step, r.pre_error, r.post_error, r.grad_norm, r.gamma
        );
    }
    write_bytes(path, text.as_bytes())
}

/// Writes a satisfaction curve with the fixed header `tolerance,fraction`.
pub fn write_curve_csv(path: &Path, curve: &[(f64, f64)]) -> Result<(), HarnessError> {
    write_table_csv(
        path,
        &["tolerance", "fraction"],
        curve.iter().map(|&(a, b)| vec![a, b]),
    )
}

/// Writes a generic numeric table with the given header row.
pub fn write_table_csv<I>(path: &Path, headers: &[&str], rows: I) -> Result<(), HarnessError>
where
    I: IntoIterator<Item = Vec<f64>>,
{
    let mut text = headers.join(",");
    text.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), headers.len());
        let mut sep = "";
        for v in row {
            let _ = write!(text, "{sep}{v}");
            sep = ",";
        }
        text.push('\n');
    }
    write_bytes(path, text.as_bytes())
}

/// Reads a numeric table written by [`write_table_csv`]: the header
/// names and the data rows.
pub fn read_table_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>), HarnessError> {
    let text = fs::read_to_string(path).map_err(io_err("read", path))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| HarnessError::new(Stage::Io, format!("{} is empty", path.display())))?;
    let headers: Vec<String> = header.split(',').map(str::to_string).collect();
    let mut rows = Vec::new();
    for (ln, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let row: Result<Vec<f64>, _> = line.split(',').map(str::parse::<f64>).collect();
        rows.push(row.map_err(|e| {
            HarnessError::new(
                Stage::Io,
                format!("{} line {}: {e}", path.display(), ln + 2),
            )
        })?);
    }
    Ok((headers, rows))
}

// ---------------------------------------------------------------------
// Directory digest.

fn collect_files(dir: &Path, base: &Path, out: &mut Vec<PathBuf>) -> Result<(), HarnessError> {
    for entry in fs::read_dir(dir).map_err(io_err("list", dir))? {
        let entry = entry.map_err(io_err("list", dir))?;
        let path = entry.path();
        if path.is_dir() {
            collect_files(&path, base, out)?;
        } else {
            out.push(
                path.strip_prefix(base)
                    .expect("walked paths stay under the base")
                    .to_path_buf(),
            );
        }
    }
    Ok(())
}

/// SHA-256 over every file in the directory tree: relative paths in
/// sorted order, each followed by its length and content. Two trees
/// hash equal iff they hold identical files at identical paths.
pub fn dir_sha256(dir: &Path) -> Result<String, HarnessError> {
    let mut files = Vec::new();
    collect_files(dir, dir, &mut files)?;
    files.sort();
    let mut hasher = Sha256::new();
    for rel in &files {
        let name = rel.to_string_lossy();
        hasher.update(name.as_bytes());
        hasher.update([0u8]);
        let bytes = fs::read(dir.join(rel)).map_err(io_err("read", rel))?;
        hasher.update((bytes.len() as u64).to_le_bytes());
        hasher.update(&bytes);
    }
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for b in digest {
        let _ = write!(hex, "{b:02x}");
    }
    Ok(hex)
}
