use std::fs::File;
use std::io::Write;
use std::path::Path;

use super::{Coord, TaskSchema};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Sample<T> {
    pub coord: Coord,
    pub features: Vec<T>,
    /// 1 = hotspot / wildfire, 0 = not.
    pub label: u8,
}

/// Labeled samples for one task schema.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset<T> {
    pub schema: TaskSchema,
    samples: Vec<Sample<T>>,
}

impl<T: Scalar> LabeledDataset<T> {
    pub fn new(schema: TaskSchema, samples: Vec<Sample<T>>) -> Result<Self> {
        for s in &samples {
            if s.features.len() != schema.len() {
                return Err(Error::DimensionMismatch {
                    expected: schema.len(),
                    found: s.features.len(),
                });
            }
            if s.label > 1 {
                return Err(Error::invalid("label", format!("must be 0 or 1, got {}", s.label)));
            }
            if let Some(v) = s.features.iter().find(|v| !v.is_finite()) {
                return Err(Error::invalid(
                    "features",
                    format!("non-finite value {v} at {}, {}", s.coord.lat, s.coord.lon),
                ));
            }
        }
        Ok(LabeledDataset { schema, samples })
    }

    pub fn samples(&self) -> &[Sample<T>] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.schema.len()
    }

    pub fn labels(&self) -> Vec<u8> {
        self.samples.iter().map(|s| s.label).collect()
    }

    /// `[negatives, positives]`
    pub fn class_counts(&self) -> [usize; 2] {
        let pos = self.samples.iter().filter(|s| s.label == 1).count();
        [self.samples.len() - pos, pos]
    }

    /// Samples at `indices`, in that order; repeats are allowed.
    pub fn subset(&self, indices: &[usize]) -> Self {
        LabeledDataset {
            schema: self.schema,
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
        }
    }
}

fn header_for(schema: &TaskSchema) -> Vec<String> {
    let mut h = vec!["lat".to_string(), "lon".to_string()];
    h.extend(schema.feature_names().iter().map(|s| s.to_string()));
    h.push("label".into());
    h
}

/// Reads a labeled CSV: `lat,lon,<schema features>,label`.
pub fn load_labeled_dataset<T: Scalar>(path: impl AsRef<Path>, schema: TaskSchema) -> Result<LabeledDataset<T>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(file);

    let expected = header_for(&schema);
    let found: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if found.len() != expected.len() {
        return Err(Error::ColumnCount {
            path: path.to_path_buf(),
            line: 1,
            expected: expected.len(),
            found: found.len(),
        });
    }
    if found != expected {
        return Err(Error::HeaderMismatch {
            path: path.to_path_buf(),
            expected: expected.join(","),
            found: found.join(","),
        });
    }

    let mut samples = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != expected.len() {
            return Err(Error::ColumnCount {
                path: path.to_path_buf(),
                line,
                expected: expected.len(),
                found: record.len(),
            });
        }
        let num = |i: usize| -> Result<T> {
            record[i]
                .trim()
                .parse::<T>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::MalformedRow {
                    path: path.to_path_buf(),
                    line,
                    reason: format!("{} `{}` is not a finite number", expected[i], &record[i]),
                })
        };
        let lat = num(0)?.as_f64();
        let lon = num(1)?.as_f64();
        let coord = Coord::new(lat, lon);
        if !coord.in_range() {
            return Err(Error::CoordinateOutOfRange {
                path: path.to_path_buf(),
                line,
                lat,
                lon,
            });
        }
        let features = (2..expected.len() - 1).map(num).collect::<Result<Vec<T>>>()?;
        let raw_label = record[expected.len() - 1].trim();
        let label = match raw_label {
            "0" => 0,
            "1" => 1,
            _ => {
                return Err(Error::InvalidLabel {
                    path: path.to_path_buf(),
                    line,
                    found: raw_label.to_string(),
                })
            }
        };
        samples.push(Sample { coord, features, label });
    }
    LabeledDataset::new(schema, samples)
}

pub fn write_labeled_dataset<T: Scalar>(path: impl AsRef<Path>, dataset: &LabeledDataset<T>) -> Result<()> {
    let path = path.as_ref();
    let mut out = header_for(&dataset.schema).join(",");
    out.push('\n');
    for s in dataset.samples() {
        out.push_str(&format!("{},{}", s.coord.lat, s.coord.lon));
        for v in &s.features {
            out.push_str(&format!(",{v}"));
        }
        out.push_str(&format!(",{}\n", s.label));
    }
    File::create(path)
        .and_then(|mut f| f.write_all(out.as_bytes()))
        .map_err(|e| Error::io(path, e))
}
