use std::collections::BTreeSet;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use super::{mask::nlcd, Coord, Parameter};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One parameter sampled at a set of coordinates. Missing cells are absent.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterLayer<T> {
    pub parameter: Parameter,
    cells: Vec<(Coord, T)>,
}

#[derive(Debug)]
pub(crate) enum CellProblem {
    Coordinate,
    Value,
    Duplicate,
}

impl<T: Scalar> ParameterLayer<T> {
    /// Builds a layer, enforcing coordinate bounds, value ranges, the
    /// land-cover code table and coordinate uniqueness.
    pub fn new(parameter: Parameter, cells: Vec<(Coord, T)>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for (i, (coord, value)) in cells.iter().enumerate() {
            if let Err(problem) = check_cell(parameter, coord, *value, &mut seen) {
                let reason = match problem {
                    CellProblem::Coordinate => format!("coordinate ({}, {}) out of range", coord.lat, coord.lon),
                    CellProblem::Value => format!("{parameter} value {value} out of range"),
                    CellProblem::Duplicate => format!("duplicate coordinate ({}, {})", coord.lat, coord.lon),
                };
                return Err(Error::invalid("layer cell", format!("cell {i}: {reason}")));
            }
        }
        Ok(ParameterLayer { parameter, cells })
    }

    pub fn cells(&self) -> &[(Coord, T)] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

fn check_cell<T: Scalar>(
    parameter: Parameter,
    coord: &Coord,
    value: T,
    seen: &mut BTreeSet<Coord>,
) -> std::result::Result<(), CellProblem> {
    if !coord.in_range() {
        return Err(CellProblem::Coordinate);
    }
    let v = value.as_f64();
    if !v.is_finite() {
        return Err(CellProblem::Value);
    }
    if let Some((lo, hi)) = parameter.valid_range() {
        if !(lo..=hi).contains(&v) {
            return Err(CellProblem::Value);
        }
    }
    if parameter == Parameter::LandCover && (v.fract() != 0.0 || !nlcd::CLASS_CODES.contains(&(v as i64))) {
        return Err(CellProblem::Value);
    }
    if !seen.insert(*coord) {
        return Err(CellProblem::Duplicate);
    }
    Ok(())
}

fn parse_field<T: Scalar>(path: &Path, line: u64, name: &str, raw: &str) -> Result<T> {
    raw.trim().parse::<T>().map_err(|_| Error::MalformedRow {
        path: path.to_path_buf(),
        line,
        reason: format!("{name} `{raw}` is not a number"),
    })
}

/// Reads a layer CSV with header `lat,lon,value`. Rows whose value field
/// is empty are skipped.
pub fn load_layer<T: Scalar>(path: impl AsRef<Path>, parameter: Parameter) -> Result<ParameterLayer<T>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(file);

    let header: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if header != ["lat", "lon", "value"] {
        return Err(Error::HeaderMismatch {
            path: path.to_path_buf(),
            expected: "lat,lon,value".into(),
            found: header.join(","),
        });
    }

    let mut cells = Vec::new();
    let mut seen = BTreeSet::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 3 {
            return Err(Error::MalformedRow {
                path: path.to_path_buf(),
                line,
                reason: format!("expected 3 fields, found {}", record.len()),
            });
        }
        let lat: f64 = parse_field(path, line, "lat", &record[0])?;
        let lon: f64 = parse_field(path, line, "lon", &record[1])?;
        let coord = Coord::new(lat, lon);
        if !coord.in_range() {
            return Err(Error::CoordinateOutOfRange {
                path: path.to_path_buf(),
                line,
                lat,
                lon,
            });
        }
        if record[2].trim().is_empty() {
            continue;
        }
        let value: T = parse_field(path, line, "value", &record[2])?;
        match check_cell(parameter, &coord, value, &mut seen) {
            Ok(()) => cells.push((coord, value)),
            Err(CellProblem::Duplicate) => {
                return Err(Error::MalformedRow {
                    path: path.to_path_buf(),
                    line,
                    reason: format!("duplicate coordinate ({lat}, {lon})"),
                })
            }
            Err(_) => {
                return Err(Error::ValueOutOfRange {
                    path: path.to_path_buf(),
                    line,
                    parameter,
                    value: value.as_f64(),
                })
            }
        }
    }
    Ok(ParameterLayer { parameter, cells })
}

pub fn write_layer<T: Scalar>(path: impl AsRef<Path>, layer: &ParameterLayer<T>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("lat,lon,value\n");
    for (c, v) in &layer.cells {
        out.push_str(&format!("{},{},{}\n", c.lat, c.lon, v));
    }
    File::create(path)
        .and_then(|mut f| f.write_all(out.as_bytes()))
        .map_err(|e| Error::io(path, e))
}
