//! CSV schemas. Fields: `r, Re u, Im u, Re v, Im v` at the radial nodes.
//! Densities: `xi, Re zeta, Im zeta` over signed ξ in increasing order.
//! Floats are written in shortest round-trip form, so a write/read cycle is exact.

use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;
use vortex_spectral::dft::SpectralDensity;
use vortex_spectral::field::RadialField;
use vortex_spectral::grid::{RadialGrid, XiGrid};

use crate::cache::write_atomic;
use crate::CliError;

pub const FIELD_HEADER: [&str; 5] = ["r", "Re u", "Im u", "Re v", "Im v"];
pub const DENSITY_HEADER: [&str; 3] = ["xi", "Re zeta", "Im zeta"];

fn csv_bytes(header: &[&str], rows: impl Iterator<Item = Vec<f64>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv");
    for row in rows {
        w.serialize(row).expect("in-memory csv");
    }
    w.into_inner().expect("in-memory csv")
}

pub fn field_csv(f: &RadialField) -> Vec<u8> {
    csv_bytes(
        &FIELD_HEADER,
        f.grid.nodes.iter().zip(&f.values).map(|(&r, [u, v])| vec![r, u.re, u.im, v.re, v.im]),
    )
}

pub fn density_csv(d: &SpectralDensity) -> Vec<u8> {
    csv_bytes(&DENSITY_HEADER, d.signed().into_iter().map(|(x, z)| vec![x, z.re, z.im]))
}

/// Plain numeric table under the given header.
pub fn table_csv(header: &[&str], rows: impl Iterator<Item = Vec<f64>>) -> Vec<u8> {
    csv_bytes(header, rows)
}

pub fn write_field(path: &Path, f: &RadialField) -> Result<(), CliError> {
    write_atomic(path, &field_csv(f))
}

pub fn write_density(path: &Path, d: &SpectralDensity) -> Result<(), CliError> {
    write_atomic(path, &density_csv(d))
}

fn read_rows(path: &Path, header: &[&str]) -> Result<Vec<Vec<f64>>, CliError> {
    let bad = |m: String| CliError::Input(format!("{}: {m}", path.display()));
    let mut r = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let got: Vec<String> = r.headers().map_err(|e| bad(e.to_string()))?.iter().map(|s| s.trim().to_string()).collect();
    if got != header {
        return Err(bad(format!("header {got:?}, expected {header:?}")));
    }
    r.deserialize::<Vec<f64>>()
        .map(|row| row.map_err(|e| bad(e.to_string())))
        .collect()
}

// nodes must agree to rounding of the printed value
fn same_node(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

/// Read a field CSV whose `r` column must be the nodes of `grid`.
pub fn read_field(path: &Path, grid: &Arc<RadialGrid>) -> Result<RadialField, CliError> {
    let rows = read_rows(path, &FIELD_HEADER)?;
    if rows.len() != grid.len() || rows.iter().zip(&grid.nodes).any(|(row, &r)| !same_node(row[0], r)) {
        return Err(CliError::GridMismatch(format!(
            "{}: {} rows do not match the {} configured radial nodes",
            path.display(),
            rows.len(),
            grid.len()
        )));
    }
    let values = rows.iter().map(|v| [Complex64::new(v[1], v[2]), Complex64::new(v[3], v[4])]).collect();
    Ok(RadialField::new(grid.clone(), values))
}

/// Read a density CSV over the signed nodes of `xi`.
pub fn read_density(path: &Path, xi: &Arc<XiGrid>) -> Result<SpectralDensity, CliError> {
    let rows = read_rows(path, &DENSITY_HEADER)?;
    let mut d = SpectralDensity::zeros(xi.clone());
    let signed = d.signed();
    if rows.len() != signed.len() || rows.iter().zip(&signed).any(|(row, (x, _))| !same_node(row[0], *x)) {
        return Err(CliError::GridMismatch(format!(
            "{}: {} rows do not match the {} signed ξ nodes",
            path.display(),
            rows.len(),
            signed.len()
        )));
    }
    // rows run over −ξ_{n−1}, …, −ξ_0, ξ_0, …, ξ_{n−1}
    let n = xi.len();
    for (i, row) in rows.iter().enumerate() {
        let z = Complex64::new(row[1], row[2]);
        if i < n {
            d.neg[n - 1 - i] = z;
        } else {
            d.pos[i - n] = z;
        }
    }
    Ok(d)
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("report is plain data");
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}
