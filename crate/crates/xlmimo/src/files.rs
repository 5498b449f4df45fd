//! CSV artifacts.
//!
//! * IF matrix: header `m,n,re,im`, one row per element in row-major order.
//! * Map: `#`-prefixed metadata lines, then `row,col,magnitude`.
//! * Signatures: `group_id,omega_theta,omega_r,amp_re,amp_im`.
//!
//! Numbers are written in the shortest form that parses back to the same
//! `f64`, so a write followed by a read is exact.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use xlmimo_core::spectral::{AxisKind, View};
use xlmimo_core::{CMatrix, MapGrid, SignatureEstimate, C64};

use crate::CliError;

pub const MATRIX_HEADER: [&str; 4] = ["m", "n", "re", "im"];
pub const MAP_HEADER: [&str; 3] = ["row", "col", "magnitude"];
pub const SIGNATURE_HEADER: [&str; 5] = ["group_id", "omega_theta", "omega_r", "amp_re", "amp_im"];

/// `<path>.<suffix>`, e.g. `y.csv.meta`.
pub fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<fs::File>>, CliError> {
    let file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::WriterBuilder::new().from_writer(BufWriter::new(file)))
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => CliError::parse(path, None, format!("{other:?}")),
    }
}

fn finish<W: Write>(path: &Path, w: csv::Writer<W>) -> Result<(), CliError> {
    let mut inner = w.into_inner().map_err(|e| CliError::io(path, e.into_error()))?;
    inner.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_matrix(path: &Path, y: &CMatrix) -> Result<(), CliError> {
    let mut w = csv_writer(path)?;
    w.write_record(MATRIX_HEADER).map_err(|e| csv_error(path, e))?;
    for m in 0..y.rows() {
        for n in 0..y.cols() {
            let z = y.get(m, n);
            w.write_record([m.to_string(), n.to_string(), z.re.to_string(), z.im.to_string()])
                .map_err(|e| csv_error(path, e))?;
        }
    }
    finish(path, w)
}

fn csv_reader(path: &Path) -> Result<csv::Reader<fs::File>, CliError> {
    let file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(file))
}

fn check_header(path: &Path, r: &mut csv::Reader<fs::File>, want: &[&str]) -> Result<(), CliError> {
    let got = r.headers().map_err(|e| csv_error(path, e))?;
    if got.iter().ne(want.iter().copied()) {
        return Err(CliError::parse(
            path,
            Some(1),
            format!("expected header `{}`, got `{}`", want.join(","), got.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    Ok(())
}

fn field<T: std::str::FromStr>(path: &Path, rec: &csv::StringRecord, i: usize) -> Result<T, CliError> {
    let line = rec.position().map(|p| p.line() as usize);
    rec.get(i)
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| CliError::parse(path, line, format!("bad or missing field {}", i + 1)))
}

/// Reads a matrix written by [`write_matrix`]. Rows must be complete and in
/// row-major order.
pub fn read_matrix(path: &Path) -> Result<CMatrix, CliError> {
    let mut r = csv_reader(path)?;
    check_header(path, &mut r, &MATRIX_HEADER)?;
    let mut cells: Vec<(usize, usize, C64)> = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        cells.push((
            field(path, &rec, 0)?,
            field(path, &rec, 1)?,
            C64::new(field(path, &rec, 2)?, field(path, &rec, 3)?),
        ));
    }
    let rows = cells.iter().map(|c| c.0 + 1).max().unwrap_or(0);
    let cols = cells.iter().map(|c| c.1 + 1).max().unwrap_or(0);
    if cells.len() != rows * cols {
        return Err(CliError::parse(path, None, format!("{} cells do not fill a {rows} x {cols} matrix", cells.len())));
    }
    for (i, &(m, n, _)) in cells.iter().enumerate() {
        if (m, n) != (i / cols, i % cols) {
            // Header is line 1, so cell i sits on line i + 2.
            return Err(CliError::parse(path, Some(i + 2), format!("expected cell ({}, {})", i / cols, i % cols)));
        }
    }
    Ok(CMatrix::from_vec(rows, cols, cells.into_iter().map(|c| c.2).collect()).expect("size checked"))
}

fn axis_note(kind: AxisKind, len: usize) -> String {
    match kind {
        AxisKind::AngleBin => format!("angle_bin (omega_theta = bin / {len}, wrapped to [-0.5, 0.5))"),
        AxisKind::RangeBin => format!("range_bin (omega_r = bin / {len})"),
        AxisKind::AntennaIndex => "antenna_index (m)".to_string(),
        AxisKind::TimeIndex => "time_index (n)".to_string(),
    }
}

pub fn write_map(path: &Path, map: &MapGrid, view: View) -> Result<(), CliError> {
    let file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut out = BufWriter::new(file);
    let header = format!(
        "# view = {}\n# rows = {}\n# cols = {}\n# row_axis = {}\n# col_axis = {}\n# magnitude = |unitary DFT|\n",
        view.name(),
        map.rows,
        map.cols,
        axis_note(map.row_axis, map.rows),
        axis_note(map.col_axis, map.cols),
    );
    out.write_all(header.as_bytes()).map_err(|e| CliError::io(path, e))?;
    let mut w = csv::WriterBuilder::new().from_writer(out);
    w.write_record(MAP_HEADER).map_err(|e| csv_error(path, e))?;
    for r in 0..map.rows {
        for c in 0..map.cols {
            w.write_record([r.to_string(), c.to_string(), map.get(r, c).to_string()])
                .map_err(|e| csv_error(path, e))?;
        }
    }
    finish(path, w)
}

/// Reads the magnitude grid of a map file; axis kinds are taken from `view`.
pub fn read_map(path: &Path, view: View) -> Result<MapGrid, CliError> {
    let mut r = csv_reader(path)?;
    check_header(path, &mut r, &MAP_HEADER)?;
    let mut cells: Vec<(usize, usize, f64)> = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        cells.push((field(path, &rec, 0)?, field(path, &rec, 1)?, field(path, &rec, 2)?));
    }
    let rows = cells.iter().map(|c| c.0 + 1).max().unwrap_or(0);
    let cols = cells.iter().map(|c| c.1 + 1).max().unwrap_or(0);
    if cells.len() != rows * cols {
        return Err(CliError::parse(path, None, "map cells do not fill a grid"));
    }
    let template = view.compute(&CMatrix::zeros(1, 1));
    Ok(MapGrid {
        rows,
        cols,
        data: cells.into_iter().map(|c| c.2).collect(),
        row_axis: template.row_axis,
        col_axis: template.col_axis,
    })
}

pub fn write_signatures(path: &Path, sig: &[SignatureEstimate]) -> Result<(), CliError> {
    let mut w = csv_writer(path)?;
    w.write_record(SIGNATURE_HEADER).map_err(|e| csv_error(path, e))?;
    for s in sig {
        w.write_record([
            s.group_id.to_string(),
            s.omega_theta.to_string(),
            s.omega_r.to_string(),
            s.amplitude.re.to_string(),
            s.amplitude.im.to_string(),
        ])
        .map_err(|e| csv_error(path, e))?;
    }
    finish(path, w)
}

pub fn read_signatures(path: &Path) -> Result<Vec<SignatureEstimate>, CliError> {
    let mut r = csv_reader(path)?;
    check_header(path, &mut r, &SIGNATURE_HEADER)?;
    r.records()
        .map(|rec| {
            let rec = rec.map_err(|e| csv_error(path, e))?;
            Ok(SignatureEstimate {
                group_id: field(path, &rec, 0)?,
                omega_theta: field(path, &rec, 1)?,
                omega_r: field(path, &rec, 2)?,
                amplitude: C64::new(field(path, &rec, 3)?, field(path, &rec, 4)?),
            })
        })
        .collect()
}
