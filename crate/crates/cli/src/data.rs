//! CSV ingestion and covariate rescaling.

use std::io::Read;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Which columns play which role in the model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Roles {
    pub response: String,
    pub linear: Vec<String>,
    pub nonlinear: Vec<String>,
}

impl Roles {
    fn validate(&self) -> CliResult<()> {
        let mut all: Vec<&str> = vec![self.response.as_str()];
        all.extend(self.linear.iter().map(String::as_str));
        all.extend(self.nonlinear.iter().map(String::as_str));
        let mut seen = std::collections::HashSet::new();
        for name in all {
            if !seen.insert(name) {
                return Err(CliError::Parse(format!("column '{name}' is given more than one role")));
            }
        }
        Ok(())
    }
}

/// Min-max map of a nonlinear covariate onto `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Affine {
    pub min: f64,
    pub max: f64,
}

impl Affine {
    pub fn to_unit(&self, v: f64) -> f64 {
        ((v - self.min) / (self.max - self.min)).clamp(0.0, 1.0)
    }

    pub fn from_unit(&self, t: f64) -> f64 {
        self.min + t * (self.max - self.min)
    }
}

/// Parsed model inputs. `z` is already on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub y: Vec<f64>,
    pub x: Array2<f64>,
    pub z: Array2<f64>,
    pub linear: Vec<String>,
    pub nonlinear: Vec<String>,
    pub scales: Vec<Affine>,
    /// Rows skipped because a used cell was empty or `NA`.
    pub dropped_rows: usize,
}

fn is_missing(cell: &str) -> bool {
    let c = cell.trim();
    c.is_empty() || c.eq_ignore_ascii_case("na") || c.eq_ignore_ascii_case("nan")
}

pub fn load_csv(path: &Path, roles: &Roles) -> CliResult<Table> {
    let file = std::fs::File::open(path)
        .map_err(|e| CliError::Parse(format!("cannot open {}: {e}", path.display())))?;
    read_csv(file, roles)
}

pub fn read_csv<R: Read>(reader: R, roles: &Roles) -> CliResult<Table> {
    roles.validate()?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let index = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Parse(format!("column '{name}' not found in header")))
    };
    let mut wanted = vec![index(&roles.response)?];
    for name in roles.linear.iter().chain(&roles.nonlinear) {
        wanted.push(index(name)?);
    }
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut dropped = 0;
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let cells: Vec<&str> = wanted.iter().map(|&c| record.get(c).unwrap_or("")).collect();
        if cells.iter().any(|c| is_missing(c)) {
            dropped += 1;
            continue;
        }
        let row = cells
            .iter()
            .zip(&wanted)
            .map(|(cell, &c)| {
                cell.trim().parse::<f64>().map_err(|_| {
                    CliError::Parse(format!(
                        "line {line}, column '{}': cannot parse {cell:?} as a number",
                        header[c]
                    ))
                })
            })
            .collect::<CliResult<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::Parse("no complete rows in the input".into()));
    }
    let n = rows.len();
    let (p, d) = (roles.linear.len(), roles.nonlinear.len());
    let y = rows.iter().map(|r| r[0]).collect();
    let x = Array2::from_shape_fn((n, p), |(i, j)| rows[i][1 + j]);
    let mut scales = Vec::with_capacity(d);
    for (j, name) in roles.nonlinear.iter().enumerate() {
        let col = rows.iter().map(|r| r[1 + p + j]);
        let min = col.clone().fold(f64::INFINITY, f64::min);
        let max = col.fold(f64::NEG_INFINITY, f64::max);
        if max <= min {
            return Err(CliError::Parse(format!(
                "nonlinear column '{name}' is constant and cannot be rescaled to [0, 1]"
            )));
        }
        scales.push(Affine { min, max });
    }
    let z = Array2::from_shape_fn((n, d), |(i, j)| scales[j].to_unit(rows[i][1 + p + j]));
    Ok(Table {
        y,
        x,
        z,
        linear: roles.linear.clone(),
        nonlinear: roles.nonlinear.clone(),
        scales,
        dropped_rows: dropped,
    })
}
