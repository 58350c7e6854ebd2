//! Artifact serialization: CSV tables with a manifest-hash comment line, JSON documents and
//! the run manifest.
//!
//! Commands build every artifact in memory first and only then write them, so a failed run
//! never leaves a partial set behind.

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// One CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Num)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Num(if b { 1.0 } else { 0.0 })
    }
}

impl From<crate::Extended> for Cell {
    fn from(x: crate::Extended) -> Self {
        Cell::Num(x.finite().unwrap_or(f64::INFINITY))
    }
}

/// Shortest decimal text that parses back to the same `f64` (`inf`, `-inf`, `NaN` otherwise).
pub fn format_number(x: f64) -> String {
    format!("{x:?}")
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => format_number(*x),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

/// A named output file held in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn sha256(&self) -> String {
        hex::encode(Sha256::digest(&self.bytes))
    }
}

/// Renders a table whose first line is `# manifest <hash>`.
pub fn csv_artifact(name: &str, manifest_hash: &str, header: &[&str], rows: &[Vec<Cell>]) -> Result<Artifact> {
    let mut bytes = format!("# manifest {manifest_hash}\n").into_bytes();
    {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(&mut bytes);
        w.write_record(header).map_err(csv_error)?;
        for (i, row) in rows.iter().enumerate() {
            if row.len() != header.len() {
                return Err(Error::Io(format!("{name}: row {i} has {} cells, expected {}", row.len(), header.len())));
            }
            w.write_record(row.iter().map(Cell::render)).map_err(csv_error)?;
        }
        w.flush()?;
    }
    Ok(Artifact { name: name.to_string(), bytes })
}

pub fn json_artifact<T: Serialize>(name: &str, value: &T) -> Result<Artifact> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    bytes.push(b'\n');
    Ok(Artifact { name: name.to_string(), bytes })
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// SHA-256 of the canonical configuration, the effective seed and the command.
pub fn manifest_hash(canonical_config: &str, seed: u64, command: &str) -> String {
    let mut h = Sha256::new();
    h.update(canonical_config.as_bytes());
    h.update(format!("\nseed={seed}\ncommand={command}\n").as_bytes());
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArtifactEntry {
    pub name: String,
    pub sha256: String,
}

/// Provenance record written next to the artifacts. `threads` and `wall_time_s` describe the
/// execution only; they do not enter `config_hash`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub threads: usize,
    pub wall_time_s: f64,
    pub artifacts: Vec<ArtifactEntry>,
    pub warnings: Vec<String>,
}

pub const MANIFEST_NAME: &str = "manifest.json";

/// Writes the artifacts and then the manifest into `dir`, creating it if needed.
pub fn write_all(dir: &Path, artifacts: &[Artifact], manifest: &RunManifest) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::with_capacity(artifacts.len() + 1);
    for a in artifacts {
        let path = dir.join(&a.name);
        std::fs::write(&path, &a.bytes)?;
        written.push(path);
    }
    let m = json_artifact(MANIFEST_NAME, manifest)?;
    let path = dir.join(MANIFEST_NAME);
    std::fs::write(&path, &m.bytes)?;
    written.push(path);
    Ok(written)
}

/// A CSV artifact read back: the manifest hash, the header and numeric rows (`None` for empty
/// or non-numeric cells).
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub manifest_hash: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl CsvTable {
    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let k = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }
}

pub fn read_csv(path: &Path) -> Result<CsvTable> {
    let text = std::fs::read_to_string(path)?;
    parse_csv(&text)
}

pub fn parse_csv(text: &str) -> Result<CsvTable> {
    let (first, rest) = text.split_once('\n').unwrap_or((text, ""));
    let manifest_hash = first
        .strip_prefix("# manifest ")
        .ok_or_else(|| Error::Io("missing manifest comment line".into()))?
        .trim()
        .to_string();
    let mut r = csv::ReaderBuilder::new().from_reader(rest.as_bytes());
    let header = r.headers().map_err(csv_error)?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_error)?;
        rows.push(rec.iter().map(|c| c.parse::<f64>().ok()).collect());
    }
    Ok(CsvTable { manifest_hash, header, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, 1e-300, 6.02214076e23, -0.0, 123456789.125] {
            assert_eq!(format_number(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
        assert_eq!(format_number(f64::INFINITY), "inf");
    }

    #[test]
    fn csv_round_trip() {
        let rows = vec![vec![Cell::Num(1.5), Cell::Empty], vec![Cell::Num(2e-12), Cell::Num(3.0)]];
        let a = csv_artifact("t.csv", "abc", &["x", "y"], &rows).unwrap();
        let t = parse_csv(std::str::from_utf8(&a.bytes).unwrap()).unwrap();
        assert_eq!(t.manifest_hash, "abc");
        assert_eq!(t.header, ["x", "y"]);
        assert_eq!(t.rows, vec![vec![Some(1.5), None], vec![Some(2e-12), Some(3.0)]]);
    }
}
