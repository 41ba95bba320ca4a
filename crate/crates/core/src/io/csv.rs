//! CSV tables: UTF-8, LF line endings, numbers with 9 significant digits.

use std::path::Path;

use crate::error::{Error, Result};
use crate::spectra::SpectrumMap;

/// First header cell of a spectrum-map CSV.
pub const MAP_CORNER: &str = "photon_energy_ev";

/// Locale-independent number format used in every table.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.8e}")
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

fn writer<W: std::io::Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Domain(format!("csv: {other:?}")),
    }
}

/// Header plus rows of already formatted cells.
pub fn table_to_string(header: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let mut w = writer(Vec::new());
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(r).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    std::fs::write(path, table_to_string(header, rows)?)?;
    Ok(())
}

/// Header row `photon_energy_ev,E_1,…,E_n`; each following row is the photon
/// energy and the intensities along the kinetic-energy axis.
pub fn map_to_string(map: &SpectrumMap) -> Result<String> {
    let mut header = vec![MAP_CORNER.to_string()];
    header.extend(map.kinetic_energies.iter().map(|&e| fmt_num(e)));
    let mut w = writer(Vec::new());
    w.write_record(&header).map_err(csv_err)?;
    for (hw, row) in map.photon_energies.iter().zip(map.rows()) {
        let mut rec = vec![fmt_num(*hw)];
        rec.extend(row.iter().map(|&v| fmt_num(v)));
        w.write_record(&rec).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn write_map(path: &Path, map: &SpectrumMap) -> Result<()> {
    std::fs::write(path, map_to_string(map)?)?;
    Ok(())
}

/// Parse a spectrum-map CSV. Rows and columns in errors are 1-based.
pub fn map_from_str(text: &str) -> Result<SpectrumMap> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut kinetic = Vec::new();
    let mut photon = Vec::new();
    let mut intensity = Vec::new();
    for (r, rec) in reader.records().enumerate() {
        let row = r + 1;
        let rec = rec.map_err(|e| Error::Csv {
            row,
            column: 0,
            message: e.to_string(),
        })?;
        let parse = |column: usize, cell: &str| -> Result<f64> {
            let v: f64 = cell.trim().parse().map_err(|_| Error::Csv {
                row,
                column,
                message: format!("not a number: {cell:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Csv {
                    row,
                    column,
                    message: "non-finite value".to_string(),
                });
            }
            Ok(v)
        };
        if row == 1 {
            if rec.get(0).map(str::trim) != Some(MAP_CORNER) {
                return Err(Error::Csv {
                    row,
                    column: 1,
                    message: format!("first header cell must be {MAP_CORNER}"),
                });
            }
            for (c, cell) in rec.iter().enumerate().skip(1) {
                kinetic.push(parse(c + 1, cell)?);
            }
            if kinetic.len() < 2 {
                return Err(Error::Csv {
                    row,
                    column: 2,
                    message: "need at least two kinetic energies".to_string(),
                });
            }
            continue;
        }
        if rec.len() != kinetic.len() + 1 {
            return Err(Error::Csv {
                row,
                column: rec.len().min(kinetic.len() + 1) + 1,
                message: format!("expected {} cells, found {}", kinetic.len() + 1, rec.len()),
            });
        }
        photon.push(parse(1, &rec[0])?);
        for (c, cell) in rec.iter().enumerate().skip(1) {
            let v = parse(c + 1, cell)?;
            if v < 0.0 {
                return Err(Error::Csv {
                    row,
                    column: c + 1,
                    message: "intensity must be >= 0".to_string(),
                });
            }
            intensity.push(v);
        }
    }
    if kinetic.is_empty() {
        return Err(Error::Csv {
            row: 1,
            column: 1,
            message: "empty file".to_string(),
        });
    }
    SpectrumMap::new(photon, kinetic, intensity)
}

pub fn read_map(path: &Path) -> Result<SpectrumMap> {
    map_from_str(&std::fs::read_to_string(path)?)
}
