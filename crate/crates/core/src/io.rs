//! Plain-text CSV formats for field samples, wave coefficients and coupling
//! matrices.
//!
//! Floating-point values are written with 17 significant digits, which
//! round-trips every finite `f64` exactly. Angles are stored in degrees.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::coupling::CouplingMatrix;
use crate::error::{Error, Result};
use crate::swe::{mode_count, FieldSampleSet, SweIndex, WaveCoefficientSet};

pub const FIELD_HEADER: &str = "theta_deg,phi_deg,re_etheta,im_etheta,re_ephi,im_ephi";
pub const COEFFICIENT_HEADER: &str = "s,m,n,re,im";
pub const COUPLING_HEADER: &str = "row,col,re,im";

/// Formats with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Data lines with their 1-based line numbers, after checking the header.
/// Blank lines and `#` comments are skipped.
fn records<'a>(text: &'a str, header: &str) -> Result<Vec<(usize, Vec<&'a str>)>> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    match lines.next() {
        Some((_, h)) if h.replace(' ', "") == header => {}
        Some((n, h)) => return Err(parse_err(n, format!("expected header `{header}`, found `{h}`"))),
        None => return Err(parse_err(1, "empty file")),
    }
    let width = header.split(',').count();
    lines
        .map(|(n, l)| {
            let fields: Vec<&str> = l.split(',').map(str::trim).collect();
            if fields.len() != width {
                return Err(parse_err(n, format!("expected {width} columns, found {}", fields.len())));
            }
            Ok((n, fields))
        })
        .collect()
}

fn num(line: usize, field: &str) -> Result<f64> {
    let v: f64 = field
        .parse()
        .map_err(|_| parse_err(line, format!("`{field}` is not a number")))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("`{field}` is not finite")));
    }
    Ok(v)
}

fn int<T: std::str::FromStr>(line: usize, field: &str) -> Result<T> {
    field
        .parse()
        .map_err(|_| parse_err(line, format!("`{field}` is not an integer")))
}

pub fn write_field_csv(set: &FieldSampleSet) -> String {
    let mut out = String::from(FIELD_HEADER);
    out.push('\n');
    for (i, &(t, p)) in set.directions().iter().enumerate() {
        let (et, ep) = set.sample(i);
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt_f64(t.to_degrees()),
            fmt_f64(p.to_degrees()),
            fmt_f64(et.re),
            fmt_f64(et.im),
            fmt_f64(ep.re),
            fmt_f64(ep.im)
        );
    }
    out
}

pub fn read_field_csv(text: &str) -> Result<FieldSampleSet> {
    let rows = records(text, FIELD_HEADER)?;
    if rows.is_empty() {
        return Err(parse_err(1, "no samples"));
    }
    let mut directions = Vec::with_capacity(rows.len());
    let mut values = Vec::with_capacity(2 * rows.len());
    for (line, f) in &rows {
        let theta_deg = num(*line, f[0])?;
        if !(-1e-9..=180.0 + 1e-9).contains(&theta_deg) {
            return Err(parse_err(*line, format!("theta {theta_deg} outside [0, 180] degrees")));
        }
        let theta = theta_deg.to_radians().clamp(0.0, PI);
        directions.push((theta, num(*line, f[1])?.to_radians()));
        values.push(Complex64::new(num(*line, f[2])?, num(*line, f[3])?));
        values.push(Complex64::new(num(*line, f[4])?, num(*line, f[5])?));
    }
    FieldSampleSet::new(directions, values).map_err(|e| parse_err(rows[0].0, e.to_string()))
}

pub fn write_coefficients_csv(set: &WaveCoefficientSet) -> String {
    let mut out = String::from(COEFFICIENT_HEADER);
    out.push('\n');
    for (j, q) in set.coefficients.iter().enumerate() {
        let idx = SweIndex::from_flat(j);
        let _ = writeln!(out, "{},{},{},{},{}", idx.s, idx.m, idx.n, fmt_f64(q.re), fmt_f64(q.im));
    }
    out
}

/// Reads a complete coefficient table; the truncation is the largest `n`.
pub fn read_coefficients_csv(text: &str) -> Result<WaveCoefficientSet> {
    let rows = records(text, COEFFICIENT_HEADER)?;
    let mut entries = Vec::with_capacity(rows.len());
    let mut n_max = 0usize;
    for (line, f) in &rows {
        let idx = SweIndex::new(int(*line, f[0])?, int(*line, f[1])?, int(*line, f[2])?)
            .map_err(|e| parse_err(*line, e.to_string()))?;
        n_max = n_max.max(idx.n as usize);
        entries.push((*line, idx, Complex64::new(num(*line, f[3])?, num(*line, f[4])?)));
    }
    if n_max == 0 {
        return Err(parse_err(1, "no coefficients"));
    }
    let mut coefficients = vec![None; mode_count(n_max)];
    for (line, idx, v) in entries {
        let slot = &mut coefficients[idx.flat()];
        if slot.is_some() {
            return Err(parse_err(line, "duplicate mode index"));
        }
        *slot = Some(v);
    }
    let coefficients: Option<Vec<Complex64>> = coefficients.into_iter().collect();
    let coefficients = coefficients.ok_or_else(|| parse_err(rows.len() + 1, format!("table is missing modes up to degree {n_max}")))?;
    WaveCoefficientSet::new(coefficients, n_max)
}

/// Zero-based `row,col` indices.
pub fn write_coupling_csv(c: &CouplingMatrix) -> String {
    let mut out = String::from(COUPLING_HEADER);
    out.push('\n');
    for r in 0..c.dim() {
        for col in 0..c.dim() {
            let v = c.get(r, col);
            let _ = writeln!(out, "{r},{col},{},{}", fmt_f64(v.re), fmt_f64(v.im));
        }
    }
    out
}

pub fn read_coupling_csv(text: &str) -> Result<CouplingMatrix> {
    let rows = records(text, COUPLING_HEADER)?;
    let mut entries = Vec::with_capacity(rows.len());
    let mut dim = 0usize;
    for (line, f) in &rows {
        let r: usize = int(*line, f[0])?;
        let c: usize = int(*line, f[1])?;
        dim = dim.max(r + 1).max(c + 1);
        entries.push((*line, r, c, Complex64::new(num(*line, f[2])?, num(*line, f[3])?)));
    }
    if dim == 0 {
        return Err(parse_err(1, "no coupling entries"));
    }
    let mut cells = vec![None; dim * dim];
    for (line, r, c, v) in entries {
        let slot = &mut cells[r * dim + c];
        if slot.is_some() {
            return Err(parse_err(line, format!("duplicate entry ({r}, {c})")));
        }
        *slot = Some(v);
    }
    let cells: Option<Vec<Complex64>> = cells.into_iter().collect();
    let cells = cells.ok_or_else(|| parse_err(rows.len() + 1, format!("coupling matrix is not a complete {dim}x{dim} table")))?;
    CouplingMatrix::prescribed(DMatrix::from_row_slice(dim, dim, &cells))
}
