//! CSV formats for sea climates, layouts, coefficient tables and landscapes.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use wavecast_core::num_complex::Complex64;
use wavecast_core::physics::{CoefficientTable, FarmLayout, Landscape, SeaState};

use crate::csvutil::{self, fmt_f64, read_numeric};
use crate::error::{AppError, AppResult};

/// `hs_m, tp_s, beta_rad, occurrence` per line.
pub fn read_climate(path: &Path) -> AppResult<Vec<SeaState>> {
    let rows = read_numeric(path, Some(4))?.rows;
    let climate: Vec<SeaState> = rows
        .into_iter()
        .map(|r| SeaState {
            hs: r[0],
            tp: r[1],
            beta: r[2],
            occurrence: r[3],
        })
        .collect();
    wavecast_core::physics::validate_climate(&climate)?;
    Ok(climate)
}

/// `x_m, y_m` per converter.
pub fn read_layout(path: &Path) -> AppResult<FarmLayout> {
    let rows = read_numeric(path, Some(2))?.rows;
    Ok(FarmLayout::new(
        rows.into_iter().map(|r| (r[0], r[1])).collect(),
    )?)
}

pub fn write_layout<W: Write>(out: W, layout: &FarmLayout, path: &Path) -> AppResult<()> {
    let err = csvutil::csv_err(path);
    let mut w = csvutil::writer(out);
    w.write_record(["x_m", "y_m"]).map_err(&err)?;
    for &(x, y) in &layout.coords {
        w.write_record([fmt_f64(x), fmt_f64(y)]).map_err(&err)?;
    }
    w.flush().map_err(|e| AppError::io(path, e))
}

/// `x_m, y_m, power_w, feasible`; masked cells have an empty power.
pub fn write_landscape<W: Write>(out: W, land: &Landscape, path: &Path) -> AppResult<()> {
    let err = csvutil::csv_err(path);
    let mut w = csvutil::writer(out);
    w.write_record(["x_m", "y_m", "power_w", "feasible"])
        .map_err(&err)?;
    for c in &land.cells {
        w.write_record([
            fmt_f64(c.x),
            fmt_f64(c.y),
            csvutil::fmt_opt(c.power),
            u8::from(c.feasible()).to_string(),
        ])
        .map_err(&err)?;
    }
    w.flush().map_err(|e| AppError::io(path, e))
}

/// Entries of an `omega, row, col, re, im` file grouped by frequency.
/// Absent entries are zero.
/// `(row, col) -> value` at one frequency.
type Entries = BTreeMap<(usize, usize), Complex64>;

struct Keyed {
    omegas: Vec<f64>,
    rows: usize,
    cols: usize,
    values: Vec<Entries>,
}

fn read_keyed(path: &Path) -> AppResult<Keyed> {
    let rows = read_numeric(path, Some(5))?.rows;
    let mut by_omega: Vec<(f64, Entries)> = Vec::new();
    let (mut nr, mut nc) = (0, 0);
    for (i, r) in rows.iter().enumerate() {
        let index = |v: f64, what: &str| -> AppResult<usize> {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(AppError::schema(
                    path,
                    format!(
                        "row {}: {what} index {v} is not a non-negative integer",
                        i + 1
                    ),
                ))
            }
        };
        let (row, col) = (index(r[1], "row")?, index(r[2], "col")?);
        nr = nr.max(row + 1);
        nc = nc.max(col + 1);
        let slot = match by_omega.iter().position(|(w, _)| *w == r[0]) {
            Some(p) => p,
            None => {
                by_omega.push((r[0], BTreeMap::new()));
                by_omega.len() - 1
            }
        };
        if by_omega[slot]
            .1
            .insert((row, col), Complex64::new(r[3], r[4]))
            .is_some()
        {
            return Err(AppError::schema(
                path,
                format!("row {}: duplicate entry ({}, {row}, {col})", i + 1, r[0]),
            ));
        }
    }
    if by_omega.is_empty() {
        return Err(AppError::schema(path, "no entries"));
    }
    by_omega.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(Keyed {
        omegas: by_omega.iter().map(|e| e.0).collect(),
        rows: nr,
        cols: nc,
        values: by_omega.into_iter().map(|e| e.1).collect(),
    })
}

/// Builds a coefficient table from three keyed files. Added mass and damping
/// are `dofs x dofs` (imaginary parts must be zero); in the excitation file
/// `row` is the degree of freedom and `col` indexes `headings`.
pub fn read_coefficients(
    added_mass: &Path,
    damping: &Path,
    excitation: &Path,
    headings: &[f64],
) -> AppResult<CoefficientTable> {
    let a = read_keyed(added_mass)?;
    let b = read_keyed(damping)?;
    let f = read_keyed(excitation)?;
    let dofs = a.rows.max(a.cols).max(b.rows).max(b.cols).max(f.rows);
    if f.cols > headings.len() {
        return Err(AppError::schema(
            excitation,
            format!(
                "heading index {} but only {} headings",
                f.cols - 1,
                headings.len()
            ),
        ));
    }
    for (k, p) in [(&b, damping), (&f, excitation)] {
        if k.omegas != a.omegas {
            return Err(AppError::schema(
                p,
                "frequencies differ from the added-mass table",
            ));
        }
    }
    let real = |k: &Keyed, path: &Path| -> AppResult<Vec<Vec<f64>>> {
        k.values
            .iter()
            .map(|m| {
                let mut out = vec![0.0; dofs * dofs];
                for (&(r, c), v) in m {
                    if v.im != 0.0 {
                        return Err(AppError::schema(
                            path,
                            format!("entry ({r}, {c}) has an imaginary part"),
                        ));
                    }
                    out[r * dofs + c] = v.re;
                }
                Ok(out)
            })
            .collect()
    };
    let excitation_values = f
        .values
        .iter()
        .map(|m| {
            let mut per_heading = vec![vec![Complex64::new(0.0, 0.0); dofs]; headings.len()];
            for (&(dof, h), v) in m {
                per_heading[h][dof] = *v;
            }
            per_heading
        })
        .collect();
    let table = CoefficientTable {
        dofs,
        omegas: a.omegas.clone(),
        added_mass: real(&a, added_mass)?,
        damping: real(&b, damping)?,
        headings: headings.to_vec(),
        excitation: excitation_values,
    };
    table.validate_shapes()?;
    Ok(table)
}
