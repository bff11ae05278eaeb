//! Deterministic file output: CSV tables, binary snapshots and the manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::gch_solver::PeriodicGrid;
use crate::willmore_ref::ClosedCurve;

/// Round-trip formatting with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Collects the files written by one run, in order.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: Vec<PathBuf>,
}

pub const MANIFEST: &str = "manifest.csv";

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn files(&self) -> &[PathBuf] {
        &self.files
    }

    pub fn csv(&mut self, name: &str) -> Result<CsvTable> {
        let path = self.root.join(name);
        self.files.push(PathBuf::from(name));
        CsvTable::create(&path)
    }

    pub fn bytes(&mut self, name: &str, data: &[u8]) -> Result<()> {
        fs::write(self.root.join(name), data)?;
        self.files.push(PathBuf::from(name));
        Ok(())
    }

    /// Little-endian f64 values plus a `<name>.toml` header.
    pub fn snapshot(&mut self, name: &str, u: &[f64], grid: &PeriodicGrid, eps: f64, time: f64) -> Result<()> {
        let mut data = Vec::with_capacity(8 * u.len());
        for x in u {
            data.extend_from_slice(&x.to_le_bytes());
        }
        self.bytes(name, &data)?;
        let header = SnapshotHeader {
            file: name.to_string(),
            dims: [grid.nx(), grid.ny()],
            lower: grid.lower(),
            extents: grid.extent(),
            eps,
            time,
            layout: "index j*nx + i (x fastest), little-endian f64".to_string(),
        };
        let text = toml::to_string(&header).map_err(|e| Error::Numerical(e.to_string()))?;
        self.bytes(&format!("{name}.toml"), text.as_bytes())
    }

    pub fn polyline(&mut self, name: &str, curve: &ClosedCurve) -> Result<()> {
        let mut t = self.csv(name)?;
        t.header(&["x", "y"])?;
        for p in curve.points() {
            t.row(&[p[0], p[1]])?;
        }
        t.finish()
    }

    /// Writes `manifest.csv` (file, bytes, sha256) over every file so far.
    pub fn write_manifest(&self) -> Result<PathBuf> {
        let path = self.root.join(MANIFEST);
        let mut w = csv::Writer::from_path(&path).map_err(csv_error)?;
        w.write_record(["file", "bytes", "sha256"]).map_err(csv_error)?;
        for f in &self.files {
            let data = fs::read(self.root.join(f))?;
            let digest = hex::encode(Sha256::digest(&data));
            w.write_record([f.to_string_lossy().as_ref(), &data.len().to_string(), &digest])
                .map_err(csv_error)?;
        }
        w.flush()?;
        Ok(path)
    }
}

#[derive(Debug, Serialize, serde::Deserialize, PartialEq)]
pub struct SnapshotHeader {
    pub file: String,
    pub dims: [usize; 2],
    pub lower: [f64; 2],
    pub extents: [f64; 2],
    pub eps: f64,
    pub time: f64,
    pub layout: String,
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

/// A CSV file whose float cells use [`fmt_f64`].
pub struct CsvTable {
    w: csv::Writer<fs::File>,
}

impl CsvTable {
    fn create(path: &Path) -> Result<Self> {
        Ok(Self {
            w: csv::Writer::from_path(path).map_err(csv_error)?,
        })
    }

    pub fn header(&mut self, names: &[&str]) -> Result<()> {
        self.w.write_record(names).map_err(csv_error)
    }

    pub fn row(&mut self, values: &[f64]) -> Result<()> {
        self.w
            .write_record(values.iter().map(|&v| fmt_f64(v)))
            .map_err(csv_error)
    }

    /// Row of preformatted cells.
    pub fn cells(&mut self, cells: &[String]) -> Result<()> {
        self.w.write_record(cells).map_err(csv_error)
    }

    pub fn finish(mut self) -> Result<()> {
        self.w.flush()?;
        Ok(())
    }
}

/// Reads an (x, y) polyline CSV written by [`OutputDir::polyline`].
///
/// Clockwise input is reversed; a repeated closing point is dropped.
pub fn read_polyline(path: &Path) -> Result<ClosedCurve> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::Config {
        key: path.display().to_string(),
        message: e.to_string(),
    })?;
    let mut pts = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_error)?;
        let parse = |k: usize| -> Result<f64> {
            rec.get(k)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::Config {
                    key: path.display().to_string(),
                    message: format!("row {} column {k} is not a number", i + 1),
                })
        };
        pts.push([parse(0)?, parse(1)?]);
    }
    if pts.len() > 1 && pts.first() == pts.last() {
        pts.pop();
    }
    if crate::willmore_ref::signed_area(&pts) < 0.0 {
        pts.reverse();
    }
    ClosedCurve::new(pts)
}

/// Reads raw little-endian f64 values.
pub fn read_f64_le(path: &Path) -> Result<Vec<f64>> {
    let data = fs::read(path)?;
    if data.len() % 8 != 0 {
        return Err(Error::Config {
            key: "initial.path".into(),
            message: format!("{} has {} bytes, not a multiple of 8", path.display(), data.len()),
        });
    }
    Ok(data
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}
