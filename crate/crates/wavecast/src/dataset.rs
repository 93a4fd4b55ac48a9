//! Loading and validating the 49-column wave-farm layout tables.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use wavecast_core::physics::FARM_SIDE;
use wavecast_core::rng::Rng;
use wavecast_core::train::Dataset;

use crate::csvutil::{self, read_numeric};
use crate::error::{AppError, AppResult};

pub const N_WEC: usize = 16;
/// `x1, y1, ..., x16, y16, p1, ..., p16, total`.
pub const COLUMNS: usize = 3 * N_WEC + 1;
pub const FEATURES: usize = 2 * N_WEC;
pub const EXPECTED_ROWS: usize = 72_000;
/// Relative tolerance on `total == sum(p_i)`.
pub const SUM_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Site {
    Adelaide,
    Perth,
    Sydney,
    Tasmania,
}

impl Site {
    pub const ALL: [Site; 4] = [Site::Adelaide, Site::Perth, Site::Sydney, Site::Tasmania];

    pub fn name(self) -> &'static str {
        match self {
            Site::Adelaide => "adelaide",
            Site::Perth => "perth",
            Site::Sydney => "sydney",
            Site::Tasmania => "tasmania",
        }
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Site {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let key = s.trim().to_ascii_lowercase();
        Site::ALL
            .into_iter()
            .find(|site| site.name() == key)
            .ok_or_else(|| {
                format!("unknown site `{s}` (expected adelaide, perth, sydney or tasmania)")
            })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ViolationKind {
    OutOfBounds { value: f64 },
    SumMismatch { total: f64, sum: f64, relative: f64 },
    NonFinite { value: f64 },
}

/// One broken invariant; `row` counts data rows from 1, `col` columns from 1.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub row: usize,
    pub col: usize,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ViolationKind::OutOfBounds { value } => {
                write!(f, "row {}, column {}: coordinate {value} outside [0, {FARM_SIDE}]", self.row, self.col)
            }
            ViolationKind::SumMismatch { total, sum, relative } => write!(
                f,
                "row {}, column {}: total {total} differs from the sum of powers {sum} (relative {relative:e})",
                self.row, self.col
            ),
            ViolationKind::NonFinite { value } => write!(f, "row {}, column {}: value {value} is not finite", self.row, self.col),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub path: String,
    pub rows: usize,
    pub had_header: bool,
    pub violations: Vec<Violation>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    /// 0-based indices of rows with at least one violation, ascending.
    pub fn violating_rows(&self) -> Vec<usize> {
        let mut rows: Vec<usize> = self.violations.iter().map(|v| v.row - 1).collect();
        rows.dedup();
        rows
    }

    /// Share of rows whose total matches the sum of the per-converter powers.
    pub fn sum_pass_fraction(&self) -> f64 {
        if self.rows == 0 {
            return 1.0;
        }
        let bad = self
            .violations
            .iter()
            .filter(|v| matches!(v.kind, ViolationKind::SumMismatch { .. }))
            .count();
        1.0 - bad as f64 / self.rows as f64
    }
}

/// Layout/power rows for one site, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct WecDataset {
    pub site: Option<Site>,
    values: Vec<f64>,
}

impl WecDataset {
    pub fn from_rows(site: Option<Site>, rows: &[Vec<f64>]) -> AppResult<Self> {
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != COLUMNS) {
            return Err(AppError::Usage(format!(
                "row {} has {} columns, expected {COLUMNS}",
                i + 1,
                r.len()
            )));
        }
        Ok(WecDataset {
            site,
            values: rows.concat(),
        })
    }

    pub fn len(&self) -> usize {
        self.values.len() / COLUMNS
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * COLUMNS..(i + 1) * COLUMNS]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(COLUMNS)
    }

    /// Coordinates as features, total power as target. Per-converter powers
    /// are left out: they are not known when predicting a new layout.
    pub fn to_dataset(&self) -> AppResult<Dataset> {
        let mut features = Vec::with_capacity(self.len() * FEATURES);
        let mut targets = Vec::with_capacity(self.len());
        for r in self.rows() {
            features.extend_from_slice(&r[..FEATURES]);
            targets.push(r[COLUMNS - 1]);
        }
        Ok(Dataset::new(features, targets, FEATURES)?)
    }

    /// `n` rows drawn without replacement under `seed`, in their original order.
    pub fn subsample(&self, n: usize, seed: u64) -> WecDataset {
        if n >= self.len() {
            return self.clone();
        }
        let mut idx: Vec<usize> = (0..self.len()).collect();
        Rng::seed_from(seed).shuffle(&mut idx);
        idx.truncate(n);
        idx.sort_unstable();
        self.select(&idx)
    }

    pub fn without_rows(&self, drop: &[usize]) -> WecDataset {
        let keep: Vec<usize> = (0..self.len())
            .filter(|i| drop.binary_search(i).is_err())
            .collect();
        self.select(&keep)
    }

    fn select(&self, idx: &[usize]) -> WecDataset {
        WecDataset {
            site: self.site,
            values: idx
                .iter()
                .flat_map(|&i| self.row(i).iter().copied())
                .collect(),
        }
    }
}

/// Checks bounds and the power-sum identity on every row; never modifies data.
pub fn validate(data: &WecDataset) -> Vec<Violation> {
    let mut out = Vec::new();
    for (i, r) in data.rows().enumerate() {
        let row = i + 1;
        for (c, &v) in r.iter().enumerate() {
            if !v.is_finite() {
                out.push(Violation {
                    row,
                    col: c + 1,
                    kind: ViolationKind::NonFinite { value: v },
                });
            } else if c < FEATURES && !(0.0..=FARM_SIDE).contains(&v) {
                out.push(Violation {
                    row,
                    col: c + 1,
                    kind: ViolationKind::OutOfBounds { value: v },
                });
            }
        }
        let sum: f64 = r[FEATURES..COLUMNS - 1].iter().sum();
        let total = r[COLUMNS - 1];
        let scale = sum.abs().max(total.abs());
        let relative = if scale > 0.0 {
            (total - sum).abs() / scale
        } else {
            0.0
        };
        if relative > SUM_TOLERANCE {
            out.push(Violation {
                row,
                col: COLUMNS,
                kind: ViolationKind::SumMismatch {
                    total,
                    sum,
                    relative,
                },
            });
        }
    }
    out
}

/// Reads a site file. Structural problems (column count, non-numeric cells)
/// fail immediately; invariant violations are all collected in the report.
pub fn load_csv(path: &Path, site: Option<Site>) -> AppResult<(WecDataset, ValidationReport)> {
    let table = read_numeric(path, Some(COLUMNS))?;
    if table.rows.is_empty() {
        return Err(AppError::schema(path, "no data rows"));
    }
    let data = WecDataset::from_rows(site, &table.rows)?;
    let mut warnings = Vec::new();
    if data.len() != EXPECTED_ROWS {
        warnings.push(format!(
            "{} rows (a full site file has {EXPECTED_ROWS})",
            data.len()
        ));
    }
    let report = ValidationReport {
        path: path.display().to_string(),
        rows: data.len(),
        had_header: table.header.is_some(),
        violations: validate(&data),
        warnings,
    };
    Ok((data, report))
}

/// Writes rows in the site-file layout, with a header.
pub fn write_csv(path: &Path, rows: &[Vec<f64>]) -> AppResult<()> {
    let width = rows.first().map_or(COLUMNS, Vec::len);
    let n = (width - 1) / 3;
    let mut header: Vec<String> = (1..=n)
        .flat_map(|i| [format!("X{i}"), format!("Y{i}")])
        .collect();
    header.extend((1..=n).map(|i| format!("Power{i}")));
    header.push("Total_Power".into());
    let mut w = csvutil::writer(csvutil::create(path)?);
    let err = csvutil::csv_err(path);
    w.write_record(&header).map_err(&err)?;
    for r in rows {
        w.write_record(r.iter().map(|v| csvutil::fmt_f64(*v)))
            .map_err(&err)?;
    }
    w.flush().map_err(|e| AppError::io(path, e))
}
