//! Plain-text exporters: CSV fields, background profiles, PGM heatmaps.
//!
//! All numbers are written with 17 significant digits so that a reread
//! field is bit-identical, and output depends only on the data (no
//! timestamps), which is what makes repeated runs byte-identical.

use crate::background::BackgroundSolution;
use crate::field::ScalarField;
use std::io::{self, Write};

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

/// CSV with header `x1,x2,value`, one node per row, x1 fastest.
pub fn write_field_csv(field: &ScalarField, mut w: impl Write) -> io::Result<()> {
    writeln!(w, "x1,x2,value")?;
    let g = field.grid();
    for i2 in 0..=g.n2() {
        for i1 in 0..=g.n1() {
            writeln!(w, "{},{},{}", fmt(g.x1(i1)), fmt(g.x2(i2)), fmt(field.at(i1, i2)))?;
        }
    }
    Ok(())
}

/// Parse a field back from `write_field_csv` output.
pub fn read_field_csv(grid: &crate::grid::Grid2D, text: &str) -> crate::error::Result<ScalarField> {
    let mut values = Vec::with_capacity(grid.num_nodes());
    for (k, line) in text.lines().enumerate() {
        if k == 0 {
            continue;
        }
        let v = line
            .rsplit(',')
            .next()
            .and_then(|s| s.trim().parse::<f64>().ok())
            .ok_or_else(|| crate::error::Error::InvalidParams(format!("bad CSV line {k}")))?;
        values.push(v);
    }
    ScalarField::from_vec(grid, values)
}

/// Background profile CSV: x1, rho, u, p, E, Phi0, phi0 per node.
pub fn write_background_csv(bg: &BackgroundSolution, mut w: impl Write) -> io::Result<()> {
    writeln!(w, "x1,rho,u,p,E,Phi0,phi0")?;
    for i in 0..bg.x1.len() {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            fmt(bg.x1[i]),
            fmt(bg.rho[i]),
            fmt(bg.u[i]),
            fmt(bg.p[i]),
            fmt(bg.e_field[i]),
            fmt(bg.potential[i]),
            fmt(bg.velocity_potential[i])
        )?;
    }
    Ok(())
}

/// Linear value-to-gray mapping used in a PGM export.
#[derive(Debug, Clone, Copy)]
pub struct PgmMapping {
    pub vmin: f64,
    pub vmax: f64,
}

/// ASCII PGM (P2) heatmap: gray = round(255 (v - vmin)/(vmax - vmin)),
/// rows written top (x2 = 1) to bottom (x2 = 0).
pub fn write_field_pgm(field: &ScalarField, mut w: impl Write) -> io::Result<PgmMapping> {
    let g = field.grid();
    let mut vmin = f64::INFINITY;
    let mut vmax = f64::NEG_INFINITY;
    for &v in field.data() {
        vmin = vmin.min(v);
        vmax = vmax.max(v);
    }
    let span = vmax - vmin;
    writeln!(w, "P2")?;
    writeln!(w, "{} {}", g.n1() + 1, g.n2() + 1)?;
    writeln!(w, "255")?;
    for i2 in (0..=g.n2()).rev() {
        let mut line = String::new();
        for i1 in 0..=g.n1() {
            let gray = if span > 0.0 {
                ((field.at(i1, i2) - vmin) / span * 255.0).round() as i64
            } else {
                128
            };
            if i1 > 0 {
                line.push(' ');
            }
            line.push_str(&gray.clamp(0, 255).to_string());
        }
        writeln!(w, "{line}")?;
    }
    Ok(PgmMapping { vmin, vmax })
}

/// Sidecar describing the gray mapping of a PGM export.
pub fn write_pgm_sidecar(
    mapping: PgmMapping,
    pgm_name: &str,
    mut w: impl Write,
) -> io::Result<()> {
    writeln!(w, "file: {pgm_name}")?;
    writeln!(w, "mapping: gray = round(255 * (value - vmin) / (vmax - vmin))")?;
    writeln!(w, "vmin: {}", fmt(mapping.vmin))?;
    writeln!(w, "vmax: {}", fmt(mapping.vmax))?;
    writeln!(w, "rows: top row is x2 = 1, bottom row is x2 = 0")?;
    Ok(())
}
