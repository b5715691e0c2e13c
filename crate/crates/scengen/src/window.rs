//! Rolling forecast windows over a panel.
//!
//! An origin `t` is the 0-based index of the last observed hour: the past
//! slice covers `[t-W+1, t]` and the future slice covers `[t+1, t+H]`.
//! With stride 1 over a full series the number of feasible origins is
//! `T - W - H + 1`.

use ndarray::{s, Array2};
use std::ops::Range;

use crate::error::{Error, Result};
use crate::panel::{CovariatePanel, SeriesPanel};

/// Past-window and horizon lengths in hours.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct WindowSpec {
    /// Past observation window length W.
    pub past_len: usize,
    /// Forecast horizon length H.
    pub horizon: usize,
}

impl WindowSpec {
    pub fn new(past_len: usize, horizon: usize) -> Result<Self> {
        if past_len == 0 || horizon == 0 {
            return Err(Error::DomainError {
                detail: format!("window spec requires W >= 1 and H >= 1, got W={past_len}, H={horizon}"),
            });
        }
        Ok(Self { past_len, horizon })
    }

    /// First feasible origin index (0-based last-past index).
    pub fn first_origin(&self) -> usize {
        self.past_len - 1
    }

    /// Last feasible origin index for a series of length `t_len`, if any.
    pub fn last_origin(&self, t_len: usize) -> Option<usize> {
        t_len.checked_sub(self.horizon + 1)
    }
}

/// One (past targets, past covariates, future covariates, future targets)
/// tuple cut from the panel at a given origin.
#[derive(Debug, Clone)]
pub struct ForecastWindow {
    /// 0-based index of the last observed hour.
    pub origin: usize,
    pub past_targets: Array2<f64>,      // D×W
    pub past_covariates: Array2<f64>,   // D'×W
    pub future_covariates: Array2<f64>, // D'×H
    /// Realized targets over the horizon; absent at inference time.
    pub future_targets: Option<Array2<f64>>, // D×H
}

impl ForecastWindow {
    pub fn n_locations(&self) -> usize {
        self.past_targets.nrows()
    }

    pub fn n_covariates(&self) -> usize {
        self.past_covariates.nrows()
    }

    pub fn past_len(&self) -> usize {
        self.past_targets.ncols()
    }

    pub fn horizon(&self) -> usize {
        self.future_covariates.ncols()
    }
}

/// Cut one window at `origin`; `with_targets` controls whether the realized
/// future targets are attached.
pub fn cut_window(
    panel: &SeriesPanel,
    covs: Option<&CovariatePanel>,
    spec: WindowSpec,
    origin: usize,
    with_targets: bool,
) -> Result<ForecastWindow> {
    let w = spec.past_len;
    let h = spec.horizon;
    let t_len = panel.len();
    if origin + 1 < w {
        return Err(Error::RangeTooShort {
            detail: format!("origin {origin} has fewer than W={w} past observations"),
        });
    }
    let future_end = origin + 1 + h;
    let needs = if with_targets { future_end } else { origin + 1 };
    if needs > t_len {
        return Err(Error::RangeTooShort {
            detail: format!("origin {origin} needs {needs} points, panel has {t_len}"),
        });
    }
    if let Some(c) = covs {
        if c.len() != t_len {
            return Err(Error::DimensionMismatch {
                detail: format!(
                    "covariate grid length {} != target grid length {}",
                    c.len(),
                    t_len
                ),
            });
        }
        if c.len() < future_end {
            return Err(Error::RangeTooShort {
                detail: format!("covariates end before horizon of origin {origin}"),
            });
        }
    }
    let past = panel
        .values()
        .slice(s![.., origin + 1 - w..=origin])
        .to_owned();
    let (past_covs, future_covs) = match covs {
        Some(c) => (
            c.values().slice(s![.., origin + 1 - w..=origin]).to_owned(),
            c.values().slice(s![.., origin + 1..future_end]).to_owned(),
        ),
        None => (Array2::zeros((0, w)), Array2::zeros((0, h))),
    };
    let future_targets = if with_targets {
        Some(
            panel
                .values()
                .slice(s![.., origin + 1..future_end])
                .to_owned(),
        )
    } else {
        None
    };
    Ok(ForecastWindow {
        origin,
        past_targets: past,
        past_covariates: past_covs,
        future_covariates: future_covs,
        future_targets,
    })
}

/// Build the rolling training set: one window per origin in `origin_range`
/// at the given stride. Origins outside the feasible band are rejected.
pub fn build_windows(
    panel: &SeriesPanel,
    covs: Option<&CovariatePanel>,
    spec: WindowSpec,
    origin_range: Range<usize>,
    stride: usize,
) -> Result<Vec<ForecastWindow>> {
    if stride == 0 {
        return Err(Error::DomainError {
            detail: "stride must be >= 1".into(),
        });
    }
    let first = spec.first_origin().max(origin_range.start);
    let last_feasible = spec.last_origin(panel.len()).ok_or(Error::RangeTooShort {
        detail: format!(
            "panel length {} shorter than H+1={}",
            panel.len(),
            spec.horizon + 1
        ),
    })?;
    let last = last_feasible.min(origin_range.end.saturating_sub(1));
    if first > last {
        return Err(Error::RangeTooShort {
            detail: format!(
                "no feasible origin in [{}, {}) with W={}, H={}, T={}",
                origin_range.start,
                origin_range.end,
                spec.past_len,
                spec.horizon,
                panel.len()
            ),
        });
    }
    let mut out = Vec::with_capacity((last - first) / stride + 1);
    let mut t = first;
    while t <= last {
        out.push(cut_window(panel, covs, spec, t, true)?);
        t += stride;
    }
    Ok(out)
}

/// Feasible origins for inference inside `origin_range` (no future targets
/// required beyond covariate coverage).
pub fn feasible_origins(
    t_len: usize,
    spec: WindowSpec,
    origin_range: Range<usize>,
    stride: usize,
) -> Vec<usize> {
    let first = spec.first_origin().max(origin_range.start);
    let Some(last_feasible) = spec.last_origin(t_len) else {
        return vec![];
    };
    let last = last_feasible.min(origin_range.end.saturating_sub(1));
    if first > last {
        return vec![];
    }
    (first..=last).step_by(stride.max(1)).collect()
}
