//! Plain-text exports: CSV tables with 17 significant digits and binary
//! 8-bit greyscale PGM heatmaps.

use std::io::{self, Write};

use crate::dynamics::Trajectory;
use crate::lattice::{CouplingTable, RegionLabels};
use crate::linalg::{ComplexMatrix, C64};
use crate::spectra::{Dispersion, PhaseDiagramGrid};

/// Round-trip float format (17 significant digits).
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_couplings<W: Write>(out: &mut W, table: &CouplingTable) -> io::Result<()> {
    writeln!(out, "i,j,kappa")?;
    for c in table.entries() {
        writeln!(out, "{},{},{}", c.i, c.j, num(c.kappa))?;
    }
    Ok(())
}

/// Non-zero entries as `(row, col, re, im)`, 0-based.
pub fn write_matrix<W: Write>(out: &mut W, m: &ComplexMatrix) -> io::Result<()> {
    writeln!(out, "row,col,re,im")?;
    for (i, j, z) in m.triplets() {
        writeln!(out, "{i},{j},{},{}", num(z.re), num(z.im))?;
    }
    Ok(())
}

/// `nonreal` flags `|Im| > threshold`.
pub fn write_dispersion<W: Write>(out: &mut W, d: &Dispersion, threshold: f64) -> io::Result<()> {
    writeln!(out, "k,band,re,im,nonreal")?;
    for (k, bands) in d.k.iter().zip(&d.bands) {
        for (b, z) in bands.iter().enumerate() {
            writeln!(out, "{},{b},{},{},{}", num(*k), num(z.re), num(z.im), u8::from(z.im.abs() > threshold))?;
        }
    }
    Ok(())
}

pub fn write_eigenvalues<W: Write>(out: &mut W, values: &[C64], threshold: f64) -> io::Result<()> {
    writeln!(out, "index,re,im,nonreal")?;
    for (n, z) in values.iter().enumerate() {
        writeln!(out, "{n},{},{},{}", num(z.re), num(z.im), u8::from(z.im.abs() > threshold))?;
    }
    Ok(())
}

pub fn write_phase_diagram<W: Write>(out: &mut W, g: &PhaseDiagramGrid) -> io::Result<()> {
    writeln!(out, "v,w,gamma_c,saturated")?;
    for (iw, w) in g.w.iter().enumerate() {
        for (iv, v) in g.v.iter().enumerate() {
            let idx = iw * g.v.len() + iv;
            writeln!(out, "{},{},{},{}", num(*v), num(*w), num(g.gamma_c[idx]), u8::from(g.saturated[idx]))?;
        }
    }
    Ok(())
}

/// Long format `(t, j, P)`; `j` is the 1-based column. With `normalized`
/// each time slice is divided by its maximum.
pub fn write_trajectory_long<W: Write>(out: &mut W, traj: &Trajectory, normalized: bool) -> io::Result<()> {
    writeln!(out, "t,j,P")?;
    let rows = if normalized {
        traj.slice_normalized()
    } else {
        traj.site_probability.clone()
    };
    for (t, row) in traj.times.iter().zip(&rows) {
        for (j, p) in row.iter().enumerate() {
            writeln!(out, "{},{},{}", num(*t), j + 1, num(*p))?;
        }
    }
    Ok(())
}

pub fn write_trajectory_summary<W: Write>(out: &mut W, traj: &Trajectory) -> io::Result<()> {
    writeln!(out, "t,P_total")?;
    for (t, p) in traj.times.iter().zip(&traj.total_probability) {
        writeln!(out, "{},{}", num(*t), num(*p))?;
    }
    Ok(())
}

pub fn write_regions<W: Write>(out: &mut W, labels: &RegionLabels) -> io::Result<()> {
    writeln!(out, "i,delta,label")?;
    for (n, (d, r)) in labels.offsets.iter().zip(&labels.labels).enumerate() {
        writeln!(out, "{},{},{}", n + 1, num(*d), r.as_str())?;
    }
    Ok(())
}

/// Generic table writer for columns of floats.
pub fn write_columns<W: Write>(out: &mut W, header: &[&str], rows: &[Vec<f64>]) -> io::Result<()> {
    writeln!(out, "{}", header.join(","))?;
    for row in rows {
        let cells: Vec<String> = row.iter().map(|x| num(*x)).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}

/// Binary P5 image of a row-major `height x width` field, min-max mapped to
/// 0..=255 (non-finite cells are painted 255). `invert` maps the minimum to
/// white. The comment line records the normalization range.
pub fn write_pgm<W: Write>(
    out: &mut W,
    values: &[f64],
    width: usize,
    height: usize,
    invert: bool,
) -> io::Result<()> {
    if values.len() != width * height {
        return Err(io::Error::new(
            io::ErrorKind::InvalidInput,
            format!("{} values for a {width}x{height} image", values.len()),
        ));
    }
    let finite = values.iter().copied().filter(|x| x.is_finite());
    let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    let (lo, hi) = if lo.is_finite() { (lo, hi) } else { (0.0, 0.0) };
    let span = hi - lo;
    write!(out, "P5\n# min={} max={}\n{width} {height}\n255\n", num(lo), num(hi))?;
    let bytes: Vec<u8> = values
        .iter()
        .map(|&x| {
            if !x.is_finite() {
                return 255;
            }
            let f = if span > 0.0 { (x - lo) / span } else { 0.0 };
            let f = if invert { 1.0 - f } else { f };
            (f * 255.0).round().clamp(0.0, 255.0) as u8
        })
        .collect();
    out.write_all(&bytes)
}

pub fn phase_diagram_pgm<W: Write>(out: &mut W, g: &PhaseDiagramGrid) -> io::Result<()> {
    // Row 0 is the largest w so the image reads like a plot with w upward.
    let (nv, nw) = (g.v.len(), g.w.len());
    let mut vals = Vec::with_capacity(nv * nw);
    for iw in (0..nw).rev() {
        vals.extend_from_slice(&g.gamma_c[iw * nv..(iw + 1) * nv]);
    }
    write_pgm(out, &vals, nv, nw, false)
}

/// Rows are time samples, columns are sites.
pub fn trajectory_pgm<W: Write>(out: &mut W, traj: &Trajectory, normalized: bool) -> io::Result<()> {
    let rows = if normalized {
        traj.slice_normalized()
    } else {
        traj.site_probability.clone()
    };
    let width = rows.first().map_or(0, |r| r.len());
    let vals: Vec<f64> = rows.into_iter().flatten().collect();
    write_pgm(out, &vals, width, traj.len(), false)
}
