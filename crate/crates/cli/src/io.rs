//! CSV and JSON writers, and readers for every file the tool emits.
//!
//! Numbers are written with the shortest representation that parses back to
//! the same `f64`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use trampoline_core::PhaseSpaceHistogram;

use crate::error::CliError;

/// Top-left cell of a histogram matrix.
pub const HISTOGRAM_CORNER: &str = "z\\v";

/// Shortest round-trip text for a float, in exponent form for very small or large magnitudes.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e15).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>, CliError> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| CliError::io(path, e))
}

/// Writes a table with one header row.
pub fn write_table_csv(path: &Path, headers: &[&str], rows: &[Vec<f64>]) -> Result<(), CliError> {
    let mut w = csv_writer(path)?;
    w.write_record(headers).map_err(|e| CliError::io(path, e))?;
    for row in rows {
        if row.len() != headers.len() {
            return Err(CliError::format(path, "row length differs from header"));
        }
        w.write_record(row.iter().map(|&x| fmt_f64(x)))
            .map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// A numeric table read back from CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.headers.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

fn parse_cell(path: &Path, cell: &str) -> Result<f64, CliError> {
    cell.trim()
        .parse()
        .map_err(|_| CliError::format(path, format!("'{cell}' is not a number")))
}

pub fn read_table_csv(path: &Path) -> Result<Table, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::io(path, e))?;
    let headers = r
        .headers()
        .map_err(|e| CliError::format(path, e))?
        .iter()
        .map(str::to_string)
        .collect::<Vec<_>>();
    let mut rows = Vec::new();
    for record in r.records() {
        let record = record.map_err(|e| CliError::format(path, e))?;
        rows.push(
            record
                .iter()
                .map(|c| parse_cell(path, c))
                .collect::<Result<Vec<_>, _>>()?,
        );
    }
    Ok(Table { headers, rows })
}

/// Writes the density matrix: first row v-bin centers, first column z-bin centers.
pub fn write_histogram_csv(path: &Path, hist: &PhaseSpaceHistogram) -> Result<(), CliError> {
    let mut w = csv_writer(path)?;
    let mut header = vec![HISTOGRAM_CORNER.to_string()];
    header.extend(hist.v_centers().into_iter().map(fmt_f64));
    w.write_record(&header).map_err(|e| CliError::io(path, e))?;
    for (iz, z) in hist.z_centers().into_iter().enumerate() {
        let mut row = vec![fmt_f64(z)];
        row.extend((0..hist.nv()).map(|iv| fmt_f64(hist.density(iz, iv))));
        w.write_record(&row).map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// A density matrix read back from a histogram CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramTable {
    pub z_centers: Vec<f64>,
    pub v_centers: Vec<f64>,
    /// `density[iz][iv]`.
    pub density: Vec<Vec<f64>>,
}

impl HistogramTable {
    pub fn from_histogram(hist: &PhaseSpaceHistogram) -> Self {
        HistogramTable {
            z_centers: hist.z_centers(),
            v_centers: hist.v_centers(),
            density: (0..hist.nz())
                .map(|iz| (0..hist.nv()).map(|iv| hist.density(iz, iv)).collect())
                .collect(),
        }
    }
}

pub fn read_histogram_csv(path: &Path) -> Result<HistogramTable, CliError> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| CliError::io(path, e))?;
    let mut records = r.records();
    let header = records
        .next()
        .ok_or_else(|| CliError::format(path, "empty file"))?
        .map_err(|e| CliError::format(path, e))?;
    if header.get(0) != Some(HISTOGRAM_CORNER) {
        return Err(CliError::format(path, "missing histogram corner cell"));
    }
    let v_centers = header
        .iter()
        .skip(1)
        .map(|c| parse_cell(path, c))
        .collect::<Result<Vec<_>, _>>()?;
    let mut z_centers = Vec::new();
    let mut density = Vec::new();
    for record in records {
        let record = record.map_err(|e| CliError::format(path, e))?;
        let mut cells = record.iter();
        let z = cells
            .next()
            .ok_or_else(|| CliError::format(path, "empty row"))?;
        z_centers.push(parse_cell(path, z)?);
        let row = cells.map(|c| parse_cell(path, c)).collect::<Result<Vec<_>, _>>()?;
        if row.len() != v_centers.len() {
            return Err(CliError::format(path, "ragged histogram row"));
        }
        density.push(row);
    }
    Ok(HistogramTable {
        z_centers,
        v_centers,
        density,
    })
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::io(path, e))?;
    w.write_all(b"\n").map_err(|e| CliError::io(path, e))?;
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::format(path, e))
}
