//! Panel data model: multivariate hourly time series for targets and
//! covariates, capacity handling, and CSV ingestion.
//!
//! A panel stores one row per series and one column per hourly timestamp.
//! Construction validates the invariants once (finite values, strictly
//! increasing hourly grid) and the types are immutable afterwards.

use chrono::{Duration, NaiveDateTime, Timelike};
use ndarray::{Array2, ArrayView1};
use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};

const TIMESTAMP_FORMATS: [&str; 3] = ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M"];

pub(crate) fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    TIMESTAMP_FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s.trim(), f).ok())
}

pub(crate) fn format_timestamp(t: NaiveDateTime) -> String {
    t.format("%Y-%m-%dT%H:%M:%S").to_string()
}

/// Which kind of panel a CSV file holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PanelKind {
    /// Target observations in MW (loads, wind farms, solar farms).
    Series,
    /// Exogenous covariates, mixed units.
    Covariate,
}

/// Options controlling CSV ingestion.
#[derive(Debug, Clone)]
pub struct LoadOptions {
    /// Fill missing cells from the previous hour, capped at
    /// [`LoadOptions::max_fill_hours`] consecutive hours. Off by default:
    /// missing values are rejected, never silently imputed.
    pub forward_fill: bool,
    pub max_fill_hours: usize,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            forward_fill: false,
            max_fill_hours: 3,
        }
    }
}

/// D×T matrix of observations with row identifiers and an hourly grid.
///
/// Invariants hold after construction: no NaN/∞ entries, timestamps
/// strictly increasing with a constant one-hour step, D ≥ 1, T ≥ 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    ids: Vec<String>,
    timestamps: Vec<NaiveDateTime>,
    values: Array2<f64>, // D×T
}

/// Target panel (values in MW).
pub type SeriesPanel = Panel;
/// Covariate panel (mixed units).
pub type CovariatePanel = Panel;

impl Panel {
    /// Build a validated panel from parts.
    pub fn new(
        ids: Vec<String>,
        timestamps: Vec<NaiveDateTime>,
        values: Array2<f64>,
    ) -> Result<Self> {
        if ids.is_empty() || timestamps.is_empty() {
            return Err(Error::ShapeMismatch {
                expected: "D >= 1 and T >= 1".into(),
                actual: format!("D={}, T={}", ids.len(), timestamps.len()),
            });
        }
        if values.nrows() != ids.len() || values.ncols() != timestamps.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{}x{}", ids.len(), timestamps.len()),
                actual: format!("{}x{}", values.nrows(), values.ncols()),
            });
        }
        for (row, ts) in timestamps.windows(2).enumerate() {
            let step = ts[1] - ts[0];
            if step <= Duration::zero() {
                return Err(Error::NonMonotonicTimestamps {
                    file: "<memory>".into(),
                    row: row + 1,
                    timestamp: format_timestamp(ts[1]),
                });
            }
            if step != Duration::hours(1) {
                return Err(Error::GapInHourlyGrid {
                    file: "<memory>".into(),
                    row: row + 1,
                    timestamp: format_timestamp(ts[1]),
                });
            }
        }
        if let Some(((i, t), v)) = values.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonNumericCell {
                file: "<memory>".into(),
                row: t,
                column: ids[i].clone(),
                cell: v.to_string(),
            });
        }
        Ok(Self {
            ids,
            timestamps,
            values,
        })
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn timestamps(&self) -> &[NaiveDateTime] {
        &self.timestamps
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    /// Number of series (rows).
    pub fn n_series(&self) -> usize {
        self.ids.len()
    }

    /// Number of timesteps (columns).
    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn series(&self, i: usize) -> ArrayView1<'_, f64> {
        self.values.row(i)
    }

    /// Index of the given timestamp on the panel grid, if present.
    pub fn index_of(&self, t: NaiveDateTime) -> Option<usize> {
        let first = *self.timestamps.first()?;
        let offset = (t - first).num_hours();
        if offset < 0 || t.minute() != first.minute() {
            return None;
        }
        let idx = offset as usize;
        (idx < self.timestamps.len()).then_some(idx)
    }

    /// Append another panel's rows; the timestamp grids must match.
    pub fn stack_rows(&self, other: &Panel) -> Result<Panel> {
        if self.timestamps != other.timestamps {
            return Err(Error::DimensionMismatch {
                detail: "cannot stack panels with different timestamp grids".into(),
            });
        }
        let mut ids = self.ids.clone();
        ids.extend_from_slice(&other.ids);
        let mut values = Array2::zeros((ids.len(), self.len()));
        values
            .slice_mut(ndarray::s![..self.n_series(), ..])
            .assign(&self.values);
        values
            .slice_mut(ndarray::s![self.n_series().., ..])
            .assign(&other.values);
        Panel::new(ids, self.timestamps.clone(), values)
    }

    /// Write the panel in the standard `timestamp,<id1>,<id2>,...` layout.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)
            .map_err(|e| Error::Serde(format!("{}: {e}", path.display())))?;
        let mut header = vec!["timestamp".to_string()];
        header.extend(self.ids.iter().cloned());
        w.write_record(&header)
            .map_err(|e| Error::Serde(e.to_string()))?;
        for (t, ts) in self.timestamps.iter().enumerate() {
            let mut rec = vec![format_timestamp(*ts)];
            for i in 0..self.n_series() {
                rec.push(format!("{}", self.values[(i, t)]));
            }
            w.write_record(&rec).map_err(|e| Error::Serde(e.to_string()))?;
        }
        w.flush().map_err(|e| Error::io(path.display().to_string(), e))?;
        Ok(())
    }
}

/// Per-location nameplate (or historical-max) capacity in MW.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityVector {
    ids: Vec<String>,
    capacities: Vec<f64>,
}

impl CapacityVector {
    pub fn new(ids: Vec<String>, capacities: Vec<f64>) -> Result<Self> {
        if ids.len() != capacities.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} capacities", ids.len()),
                actual: format!("{}", capacities.len()),
            });
        }
        for (id, c) in ids.iter().zip(&capacities) {
            if !(c.is_finite() && *c > 0.0) {
                return Err(Error::AllZeroSeries { series: id.clone() });
            }
        }
        Ok(Self { ids, capacities })
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn values(&self) -> &[f64] {
        &self.capacities
    }

    pub fn get(&self, i: usize) -> f64 {
        self.capacities[i]
    }

    /// Read a `location_id,capacity_mw` CSV.
    pub fn load_csv(path: &Path) -> Result<Self> {
        let file_name = path.display().to_string();
        let mut rdr = csv::Reader::from_path(path).map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => Error::io(
                file_name.clone(),
                std::io::Error::new(std::io::ErrorKind::NotFound, e.to_string()),
            ),
            _ => Error::Serde(e.to_string()),
        })?;
        let headers = rdr
            .headers()
            .map_err(|e| Error::Serde(e.to_string()))?
            .clone();
        for required in ["location_id", "capacity_mw"] {
            if !headers.iter().any(|h| h == required) {
                return Err(Error::MissingColumn {
                    file: file_name,
                    column: required.into(),
                });
            }
        }
        let id_col = headers.iter().position(|h| h == "location_id").unwrap();
        let cap_col = headers.iter().position(|h| h == "capacity_mw").unwrap();
        let mut ids = Vec::new();
        let mut caps = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Serde(e.to_string()))?;
            let cell = rec.get(cap_col).unwrap_or("");
            let cap: f64 = cell.trim().parse().map_err(|_| Error::NonNumericCell {
                file: file_name.clone(),
                row,
                column: "capacity_mw".into(),
                cell: cell.to_string(),
            })?;
            ids.push(rec.get(id_col).unwrap_or("").to_string());
            caps.push(cap);
        }
        CapacityVector::new(ids, caps)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)
            .map_err(|e| Error::Serde(format!("{}: {e}", path.display())))?;
        w.write_record(["location_id", "capacity_mw"])
            .map_err(|e| Error::Serde(e.to_string()))?;
        for (id, c) in self.ids.iter().zip(&self.capacities) {
            w.write_record([id.as_str(), &format!("{c}")])
                .map_err(|e| Error::Serde(e.to_string()))?;
        }
        w.flush().map_err(|e| Error::io(path.display().to_string(), e))?;
        Ok(())
    }
}

/// Load a panel CSV: header `timestamp,<id1>,<id2>,...`, ISO-8601 stamps,
/// `.` decimal separator. Rows are sorted by timestamp; duplicates and grid
/// gaps are rejected.
pub fn load_panel_csv(path: &Path, _kind: PanelKind, opts: &LoadOptions) -> Result<Panel> {
    let file_name = path.display().to_string();
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(false)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(io) => Error::io(
                file_name.clone(),
                std::io::Error::new(io.kind(), io.to_string()),
            ),
            _ => Error::Serde(e.to_string()),
        })?;
    let headers = rdr
        .headers()
        .map_err(|e| Error::Serde(e.to_string()))?
        .clone();
    if headers.is_empty() || headers.get(0).map(str::trim) != Some("timestamp") {
        return Err(Error::MissingColumn {
            file: file_name,
            column: "timestamp".into(),
        });
    }
    let ids: Vec<String> = headers.iter().skip(1).map(|s| s.trim().to_string()).collect();
    if ids.is_empty() {
        return Err(Error::MissingColumn {
            file: file_name,
            column: "<at least one series column>".into(),
        });
    }

    // Raw rows: (timestamp, cells as Option<f64> where None = missing).
    let mut rows: Vec<(NaiveDateTime, Vec<Option<f64>>)> = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Serde(e.to_string()))?;
        let ts_cell = rec.get(0).unwrap_or("");
        let ts = parse_timestamp(ts_cell).ok_or_else(|| Error::NonNumericCell {
            file: file_name.clone(),
            row,
            column: "timestamp".into(),
            cell: ts_cell.to_string(),
        })?;
        let mut cells = Vec::with_capacity(ids.len());
        for (c, id) in ids.iter().enumerate() {
            let cell = rec.get(c + 1).unwrap_or("").trim();
            if cell.is_empty() {
                cells.push(None);
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| Error::NonNumericCell {
                file: file_name.clone(),
                row,
                column: id.clone(),
                cell: cell.to_string(),
            })?;
            if !v.is_finite() {
                return Err(Error::NonNumericCell {
                    file: file_name.clone(),
                    row,
                    column: id.clone(),
                    cell: cell.to_string(),
                });
            }
            cells.push(Some(v));
        }
        rows.push((ts, cells));
    }
    if rows.is_empty() {
        return Err(Error::RangeTooShort {
            detail: format!("{file_name}: no data rows"),
        });
    }

    rows.sort_by_key(|(ts, _)| *ts);
    for (row, pair) in rows.windows(2).enumerate() {
        let step = pair[1].0 - pair[0].0;
        if step == Duration::zero() {
            return Err(Error::NonMonotonicTimestamps {
                file: file_name.clone(),
                row: row + 1,
                timestamp: format_timestamp(pair[1].0),
            });
        }
        if step != Duration::hours(1) {
            return Err(Error::GapInHourlyGrid {
                file: file_name.clone(),
                row: row + 1,
                timestamp: format_timestamp(pair[1].0),
            });
        }
    }

    let timestamps: Vec<NaiveDateTime> = rows.iter().map(|(ts, _)| *ts).collect();
    let d = ids.len();
    let t_len = rows.len();
    let mut values = Array2::from_elem((d, t_len), f64::NAN);
    for (t, (_, cells)) in rows.iter().enumerate() {
        for (i, cell) in cells.iter().enumerate() {
            if let Some(v) = cell {
                values[(i, t)] = *v;
            }
        }
    }

    // Missing cells: reject, or forward-fill up to the configured cap.
    for i in 0..d {
        let mut run = 0usize;
        for t in 0..t_len {
            if values[(i, t)].is_nan() {
                run += 1;
                let can_fill = opts.forward_fill && t > 0 && run <= opts.max_fill_hours;
                if can_fill && !values[(i, t - 1)].is_nan() {
                    values[(i, t)] = values[(i, t - 1)];
                } else {
                    return Err(Error::NonNumericCell {
                        file: file_name.clone(),
                        row: t,
                        column: ids[i].clone(),
                        cell: "<missing>".into(),
                    });
                }
            } else {
                run = 0;
            }
        }
    }

    Panel::new(ids, timestamps, values)
}

/// Linearly interpolate a coarse covariate panel onto an hourly grid.
///
/// Exact on coarse-grid points; endpoints are held flat for at most one
/// coarse step beyond the raw coverage.
pub fn interpolate_covariates(
    raw: &CovariatePanel,
    target_grid: &[NaiveDateTime],
) -> Result<CovariatePanel> {
    if target_grid.is_empty() {
        return Err(Error::RangeTooShort {
            detail: "empty target grid".into(),
        });
    }
    let raw_ts = raw.timestamps_any_step();
    let coarse_step = if raw_ts.len() >= 2 {
        raw_ts[1] - raw_ts[0]
    } else {
        Duration::hours(1)
    };
    let first = raw_ts[0];
    let last = *raw_ts.last().unwrap();
    let lo_limit = first - coarse_step;
    let hi_limit = last + coarse_step;
    if target_grid[0] < lo_limit || *target_grid.last().unwrap() > hi_limit {
        return Err(Error::GridNotCovering {
            detail: format!(
                "target [{}, {}] extends more than one coarse step beyond raw [{}, {}]",
                format_timestamp(target_grid[0]),
                format_timestamp(*target_grid.last().unwrap()),
                format_timestamp(first),
                format_timestamp(last)
            ),
        });
    }

    let d = raw.n_series();
    let mut out = Array2::zeros((d, target_grid.len()));
    for (j, t) in target_grid.iter().enumerate() {
        if *t <= first {
            for i in 0..d {
                out[(i, j)] = raw.values()[(i, 0)];
            }
            continue;
        }
        if *t >= last {
            for i in 0..d {
                out[(i, j)] = raw.values()[(i, raw_ts.len() - 1)];
            }
            continue;
        }
        // position within the coarse grid
        let k = match raw_ts.binary_search(t) {
            Ok(exact) => {
                for i in 0..d {
                    out[(i, j)] = raw.values()[(i, exact)];
                }
                continue;
            }
            Err(ins) => ins - 1,
        };
        let span = (raw_ts[k + 1] - raw_ts[k]).num_seconds() as f64;
        let frac = (*t - raw_ts[k]).num_seconds() as f64 / span;
        for i in 0..d {
            let a = raw.values()[(i, k)];
            let b = raw.values()[(i, k + 1)];
            out[(i, j)] = a + frac * (b - a);
        }
    }
    Panel::new(raw.ids().to_vec(), target_grid.to_vec(), out)
}

impl Panel {
    /// Construct a panel on a non-hourly (coarse) grid, used as the input
    /// side of [`interpolate_covariates`]. Timestamps must be strictly
    /// increasing; no step-size requirement.
    pub fn new_coarse(
        ids: Vec<String>,
        timestamps: Vec<NaiveDateTime>,
        values: Array2<f64>,
    ) -> Result<Self> {
        if ids.is_empty() || timestamps.is_empty() {
            return Err(Error::ShapeMismatch {
                expected: "D >= 1 and T >= 1".into(),
                actual: format!("D={}, T={}", ids.len(), timestamps.len()),
            });
        }
        if values.nrows() != ids.len() || values.ncols() != timestamps.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{}x{}", ids.len(), timestamps.len()),
                actual: format!("{}x{}", values.nrows(), values.ncols()),
            });
        }
        for (row, ts) in timestamps.windows(2).enumerate() {
            if ts[1] <= ts[0] {
                return Err(Error::NonMonotonicTimestamps {
                    file: "<memory>".into(),
                    row: row + 1,
                    timestamp: format_timestamp(ts[1]),
                });
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::DomainError {
                detail: "non-finite value in coarse panel".into(),
            });
        }
        Ok(Self {
            ids,
            timestamps,
            values,
        })
    }

    fn timestamps_any_step(&self) -> &[NaiveDateTime] {
        &self.timestamps
    }
}

/// Capacity per series: maximum observation in the training slice, with
/// explicit overrides taking precedence.
pub fn derive_capacity(
    panel: &SeriesPanel,
    train_end: NaiveDateTime,
    overrides: Option<&CapacityVector>,
) -> Result<CapacityVector> {
    let end_idx = panel
        .index_of(train_end)
        .ok_or_else(|| Error::DomainError {
            detail: format!(
                "train_end {} not on the panel grid",
                format_timestamp(train_end)
            ),
        })?;
    let override_map: HashMap<&str, f64> = overrides
        .map(|o| {
            o.ids()
                .iter()
                .map(|s| s.as_str())
                .zip(o.values().iter().copied())
                .collect()
        })
        .unwrap_or_default();
    let mut caps = Vec::with_capacity(panel.n_series());
    for (i, id) in panel.ids().iter().enumerate() {
        if let Some(c) = override_map.get(id.as_str()) {
            caps.push(*c);
            continue;
        }
        let max = panel
            .series(i)
            .iter()
            .take(end_idx + 1)
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        if max <= 0.0 {
            return Err(Error::AllZeroSeries { series: id.clone() });
        }
        caps.push(max);
    }
    CapacityVector::new(panel.ids().to_vec(), caps)
}

/// Outcome of [`normalize`]: the unitless panel plus how many cells were
/// clamped down to 1.0.
pub struct NormalizeOutcome {
    pub panel: SeriesPanel,
    pub clamped: usize,
}

/// Convert MW observations to capacity factors in [0, 1].
///
/// Values above 1 (out-of-sample observations exceeding the historical
/// max) are clamped to 1 and counted.
pub fn normalize(panel: &SeriesPanel, cap: &CapacityVector) -> Result<NormalizeOutcome> {
    if cap.values().len() != panel.n_series() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} capacities", panel.n_series()),
            actual: format!("{}", cap.values().len()),
        });
    }
    let mut values = panel.values().clone();
    let mut clamped = 0usize;
    for ((i, _), v) in values.indexed_iter_mut() {
        *v /= cap.get(i);
        if *v > 1.0 {
            *v = 1.0;
            clamped += 1;
        }
    }
    if clamped > 0 {
        log::warn!("normalize: clamped {clamped} capacity factors above 1.0");
    }
    Ok(NormalizeOutcome {
        panel: Panel::new(panel.ids().to_vec(), panel.timestamps().to_vec(), values)?,
        clamped,
    })
}

/// Invert [`normalize`]: capacity factors back to MW.
pub fn denormalize(panel: &SeriesPanel, cap: &CapacityVector) -> Result<SeriesPanel> {
    if cap.values().len() != panel.n_series() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} capacities", panel.n_series()),
            actual: format!("{}", cap.values().len()),
        });
    }
    let mut values = panel.values().clone();
    for ((i, _), v) in values.indexed_iter_mut() {
        *v *= cap.get(i);
    }
    Panel::new(panel.ids().to_vec(), panel.timestamps().to_vec(), values)
}

/// Generate hour-of-day and day-of-week sin/cos encodings on a grid.
pub fn time_encodings(timestamps: &[NaiveDateTime]) -> Result<CovariatePanel> {
    use chrono::Datelike;
    let tau = std::f64::consts::TAU;
    let mut values = Array2::zeros((4, timestamps.len()));
    for (t, ts) in timestamps.iter().enumerate() {
        let hod = ts.hour() as f64 / 24.0;
        let dow = ts.weekday().num_days_from_monday() as f64 / 7.0;
        values[(0, t)] = (tau * hod).sin();
        values[(1, t)] = (tau * hod).cos();
        values[(2, t)] = (tau * dow).sin();
        values[(3, t)] = (tau * dow).cos();
    }
    Panel::new(
        vec![
            "hod_sin".into(),
            "hod_cos".into(),
            "dow_sin".into(),
            "dow_cos".into(),
        ],
        timestamps.to_vec(),
        values,
    )
}
