//! Deterministic output artifacts: atomic file writes, content hashing, and
//! the CSV/JSON serializers shared by the sweep driver and the CLI.
//!
//! Every writer goes through [`atomic_write`] (write to a temporary file in
//! the destination directory, then rename), so readers never observe a
//! half-written artifact and interrupted runs leave no corrupt outputs.

use std::io::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::analytic::PhaseSpaceGrid;
use crate::sweep::SweepRow;

#[derive(Debug, Error)]
pub enum ArtifactError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("JSON serialization failed: {0}")]
    Json(#[from] serde_json::Error),
    #[error("CSV serialization failed: {0}")]
    Csv(#[from] csv::Error),
}

/// Writes bytes atomically: the content lands under `path` in one rename,
/// never partially. Parent directories are created as needed.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), ArtifactError> {
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => std::path::PathBuf::from("."),
    };
    std::fs::create_dir_all(&parent)?;
    let mut tmp = tempfile::NamedTempFile::new_in(&parent)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Serializes a value as pretty JSON (trailing newline) and writes it
/// atomically.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ArtifactError> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    atomic_write(path, &bytes)
}

/// First 8 hex characters of the SHA-256 of a value's canonical JSON — a
/// compact, stable identifier for output directories and metadata.
pub fn config_hash<T: Serialize>(value: &T) -> Result<String, ArtifactError> {
    let json = serde_json::to_vec(value)?;
    let digest = Sha256::digest(&json);
    let mut hex = String::with_capacity(8);
    for byte in digest.iter().take(4) {
        hex.push_str(&format!("{byte:02x}"));
    }
    Ok(hex)
}

/// Position-density table: `z,density` with one row per grid point.
pub fn write_density_csv(
    path: &Path,
    z_grid: &[f64],
    density: &[f64],
) -> Result<(), ArtifactError> {
    assert_eq!(
        z_grid.len(),
        density.len(),
        "grid and density must have matching lengths"
    );
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(["z", "density"])?;
    for (z, rho) in z_grid.iter().zip(density) {
        writer.write_record([format!("{z:.17e}"), format!("{rho:.17e}")])?;
    }
    let bytes = writer.into_inner().expect("in-memory CSV writer");
    atomic_write(path, &bytes)
}

/// Wigner function in long format: `z,p,w`, row-major over the grid
/// (z outer, p inner), matching the matrix indexing `w[(iz, ip)]`.
pub fn write_wigner_csv(
    path: &Path,
    grid: &PhaseSpaceGrid,
    w: &DMatrix<f64>,
) -> Result<(), ArtifactError> {
    let zs = grid.z_values();
    let ps = grid.p_values();
    assert_eq!(w.nrows(), zs.len(), "Wigner rows must match the z grid");
    assert_eq!(w.ncols(), ps.len(), "Wigner columns must match the p grid");
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(["z", "p", "w"])?;
    for (iz, z) in zs.iter().enumerate() {
        for (ip, p) in ps.iter().enumerate() {
            writer.write_record([
                format!("{z:.17e}"),
                format!("{p:.17e}"),
                format!("{:.17e}", w[(iz, ip)]),
            ])?;
        }
    }
    let bytes = writer.into_inner().expect("in-memory CSV writer");
    atomic_write(path, &bytes)
}

/// Sweep rows with serde-derived headers, one line per (working point,
/// engine). Byte-deterministic for a given spec: rerunning the same sweep
/// must reproduce the file exactly.
pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<(), ArtifactError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.serialize(row)?;
    }
    let bytes = writer.into_inner().expect("in-memory CSV writer");
    atomic_write(path, &bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Serialize;

    #[derive(Serialize)]
    struct Sample {
        name: &'static str,
        value: f64,
    }

    #[test]
    fn atomic_write_creates_parents_and_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/deep/out.txt");
        atomic_write(&path, b"first").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"first");
        atomic_write(&path, b"second").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"second");
    }

    #[test]
    fn json_artifacts_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sample.json");
        write_json(
            &path,
            &Sample {
                name: "x",
                value: 1.5,
            },
        )
        .unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.ends_with('\n'));
        let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed["value"], 1.5);
    }

    #[test]
    fn hashes_are_stable_and_short() {
        let a = config_hash(&Sample {
            name: "x",
            value: 1.5,
        })
        .unwrap();
        let b = config_hash(&Sample {
            name: "x",
            value: 1.5,
        })
        .unwrap();
        let c = config_hash(&Sample {
            name: "x",
            value: 2.5,
        })
        .unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 8);
        assert!(a.chars().all(|ch| ch.is_ascii_hexdigit()));
    }

    #[test]
    fn density_csv_has_header_and_full_precision() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("density.csv");
        write_density_csv(&path, &[-1.0, 0.0, 1.0], &[0.1, 0.5, 0.1]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "z,density");
        assert_eq!(lines.count(), 3);
        let reparsed: f64 = text
            .lines()
            .nth(2)
            .unwrap()
            .split(',')
            .nth(1)
            .unwrap()
            .parse()
            .unwrap();
        assert_eq!(reparsed, 0.5);
    }
}
