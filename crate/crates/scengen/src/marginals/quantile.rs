//! Linear quantile-regression forecasters.
//!
//! Every future dimension in space and time is regressed on the flattened
//! past targets of all series plus past and future covariates. Two input
//! treatments are shipped: NLinear (subtract the per-series last value,
//! add it back after the linear map) and DLinear (decompose the past into
//! trend and seasonal parts with separate weights for each).

use ndarray::{s, Array1, Array2, Array3, Axis};
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};
use crate::rng;
use crate::window::ForecastWindow;

/// Strictly increasing quantile levels in (0, 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileSet {
    levels: Vec<f64>,
}

impl QuantileSet {
    pub fn new(levels: Vec<f64>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::DomainError {
                detail: "quantile set must be non-empty".into(),
            });
        }
        let ok = levels.iter().all(|q| *q > 0.0 && *q < 1.0)
            && levels.windows(2).all(|w| w[0] < w[1]);
        if !ok {
            return Err(Error::DomainError {
                detail: format!("quantile levels must be strictly increasing in (0,1): {levels:?}"),
            });
        }
        Ok(Self { levels })
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Index of the median level, preferring an exact 0.5.
    pub fn median_index(&self) -> usize {
        self.levels
            .iter()
            .position(|q| (*q - 0.5).abs() < 1e-12)
            .unwrap_or(self.levels.len() / 2)
    }
}

impl Default for QuantileSet {
    fn default() -> Self {
        Self {
            levels: vec![0.1, 0.3, 0.5, 0.7, 0.9],
        }
    }
}

/// Pinball loss: q·(z−ẑ)⁺ + (1−q)·(ẑ−z)⁺.
#[inline]
pub fn quantile_loss(z: f64, z_hat: f64, q: f64) -> f64 {
    let diff = z - z_hat;
    if diff >= 0.0 {
        q * diff
    } else {
        (q - 1.0) * diff
    }
}

/// Subgradient of the pinball loss with respect to the prediction.
#[inline]
fn quantile_loss_grad(z: f64, z_hat: f64, q: f64) -> f64 {
    if z_hat < z {
        -q
    } else if z_hat > z {
        1.0 - q
    } else {
        0.0
    }
}

/// Input treatment applied before the linear layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinearVariant {
    /// Subtract the per-series last value, add it back to every output.
    NLinear,
    /// Trend/seasonal decomposition by centered moving average.
    DLinear {
        /// Moving-average kernel size (odd, 1..=W).
        kernel: usize,
    },
}

/// Subtract the per-series last value from a D×W past block.
pub fn nlinear_preprocess(past: &Array2<f64>) -> (Array2<f64>, Array1<f64>) {
    let last = past.column(past.ncols() - 1).to_owned();
    let mut shifted = past.clone();
    for (mut row, l) in shifted.rows_mut().into_iter().zip(last.iter()) {
        row.mapv_inplace(|v| v - l);
    }
    (shifted, last)
}

/// Add the stored last value back to a raw model output.
#[inline]
pub fn nlinear_postprocess(raw: f64, last: f64) -> f64 {
    raw + last
}

/// Centered moving average (edge replication) and its residual.
///
/// `trend + seasonal == past` holds exactly.
pub fn dlinear_decompose(past: &Array2<f64>, kernel: usize) -> Result<(Array2<f64>, Array2<f64>)> {
    let w = past.ncols();
    if kernel == 0 || kernel > w || kernel % 2 == 0 {
        return Err(Error::BadKernel { kernel, window: w });
    }
    let half = kernel / 2;
    let mut trend = Array2::zeros(past.raw_dim());
    for (i, row) in past.rows().into_iter().enumerate() {
        for t in 0..w {
            let mut acc = 0.0;
            for off in 0..kernel {
                // edge replication padding
                let idx = (t + off).saturating_sub(half).min(w - 1);
                acc += row[idx];
            }
            trend[(i, t)] = acc / kernel as f64;
        }
    }
    let seasonal = past - &trend;
    Ok((trend, seasonal))
}

/// A trained linear quantile forecaster.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearQuantileModel {
    pub variant: LinearVariant,
    pub n_locations: usize,
    pub n_covariates: usize,
    pub past_len: usize,
    pub horizon: usize,
    pub levels: QuantileSet,
    /// Combined weight matrix O×F; DLinear stores its trend, seasonal and
    /// covariate blocks as contiguous column ranges (in that order).
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub seed: u64,
}

impl LinearQuantileModel {
    pub fn output_len(&self) -> usize {
        self.n_locations * self.horizon * self.levels.len()
    }

    pub fn feature_len(&self) -> usize {
        feature_len(
            self.variant,
            self.n_locations,
            self.n_covariates,
            self.past_len,
            self.horizon,
        )
    }

    /// Trend-block weights (DLinear only): columns 0..D·W.
    pub fn trend_weights(&self) -> Option<ndarray::ArrayView2<'_, f64>> {
        match self.variant {
            LinearVariant::DLinear { .. } => Some(
                self.weights
                    .slice(s![.., ..self.n_locations * self.past_len]),
            ),
            LinearVariant::NLinear => None,
        }
    }

    /// Seasonal-block weights (DLinear only): columns D·W..2·D·W.
    pub fn seasonal_weights(&self) -> Option<ndarray::ArrayView2<'_, f64>> {
        match self.variant {
            LinearVariant::DLinear { .. } => {
                let dw = self.n_locations * self.past_len;
                Some(self.weights.slice(s![.., dw..2 * dw]))
            }
            LinearVariant::NLinear => None,
        }
    }
}

fn feature_len(
    variant: LinearVariant,
    d: usize,
    dp: usize,
    w: usize,
    h: usize,
) -> usize {
    let target_block = match variant {
        LinearVariant::NLinear => d * w,
        LinearVariant::DLinear { .. } => 2 * d * w,
    };
    target_block + dp * (w + h)
}

/// Flatten one window into the model's feature layout. Returns the
/// per-series last values for NLinear add-back.
fn window_features(
    variant: LinearVariant,
    window: &ForecastWindow,
) -> Result<(Array1<f64>, Option<Array1<f64>>)> {
    let d = window.n_locations();
    let w = window.past_len();
    let h = window.horizon();
    let dp = window.n_covariates();
    let f = feature_len(variant, d, dp, w, h);
    let mut x = Array1::zeros(f);
    let mut pos = 0usize;
    let last = match variant {
        LinearVariant::NLinear => {
            let (shifted, last) = nlinear_preprocess(&window.past_targets);
            for v in shifted.iter() {
                x[pos] = *v;
                pos += 1;
            }
            Some(last)
        }
        LinearVariant::DLinear { kernel } => {
            let (trend, seasonal) = dlinear_decompose(&window.past_targets, kernel)?;
            for v in trend.iter().chain(seasonal.iter()) {
                x[pos] = *v;
                pos += 1;
            }
            None
        }
    };
    for v in window
        .past_covariates
        .iter()
        .chain(window.future_covariates.iter())
    {
        x[pos] = *v;
        pos += 1;
    }
    debug_assert_eq!(pos, f);
    Ok((x, last))
}

/// Cached design matrices for training.
struct Design {
    x: Array2<f64>,              // N×F
    y: Array2<f64>,              // N×(D·H)
    lasts: Option<Array2<f64>>,  // N×D (NLinear)
}

fn build_design(
    windows: &[ForecastWindow],
    variant: LinearVariant,
) -> Result<(Design, usize, usize, usize, usize)> {
    let first = &windows[0];
    let (d, dp, w, h) = (
        first.n_locations(),
        first.n_covariates(),
        first.past_len(),
        first.horizon(),
    );
    let n = windows.len();
    let f = feature_len(variant, d, dp, w, h);
    let mut x = Array2::zeros((n, f));
    let mut y = Array2::zeros((n, d * h));
    let mut lasts = matches!(variant, LinearVariant::NLinear).then(|| Array2::zeros((n, d)));
    for (row, win) in windows.iter().enumerate() {
        if win.n_locations() != d
            || win.n_covariates() != dp
            || win.past_len() != w
            || win.horizon() != h
        {
            return Err(Error::ShapeMismatch {
                expected: format!("(D,D',W,H)=({d},{dp},{w},{h})"),
                actual: format!(
                    "window {row}: ({},{},{},{})",
                    win.n_locations(),
                    win.n_covariates(),
                    win.past_len(),
                    win.horizon()
                ),
            });
        }
        let targets = win.future_targets.as_ref().ok_or(Error::ShapeMismatch {
            expected: "training windows with realized targets".into(),
            actual: format!("window {row} has no future targets"),
        })?;
        let (feat, last) = window_features(variant, win)?;
        x.row_mut(row).assign(&feat);
        for (k, v) in targets.iter().enumerate() {
            y[(row, k)] = *v;
        }
        if let (Some(l), Some(store)) = (last, lasts.as_mut()) {
            store.row_mut(row).assign(&l);
        }
    }
    Ok((Design { x, y, lasts }, d, dp, w, h))
}

/// Gradient-descent hyperparameters. Training is deterministic given the
/// seed (it only drives the batch shuffle).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 80,
            learning_rate: 0.1,
            batch_size: 32,
            seed: 0,
        }
    }
}

/// Raw affine output for a batch: P = X·Wᵀ + b (+ last-value add-back).
fn forward(
    weights: &Array2<f64>,
    bias: &Array1<f64>,
    x: &Array2<f64>,
    lasts: Option<&Array2<f64>>,
    h: usize,
    q: usize,
) -> Array2<f64> {
    let mut p = x.dot(&weights.t());
    p += bias;
    if let Some(lasts) = lasts {
        for (mut row, last_row) in p.rows_mut().into_iter().zip(lasts.rows()) {
            for (i, l) in last_row.iter().enumerate() {
                row.slice_mut(s![i * h * q..(i + 1) * h * q])
                    .mapv_inplace(|v| v + l);
            }
        }
    }
    p
}

/// Mean pinball loss and its gradient with respect to the predictions.
fn loss_and_grad(
    preds: &Array2<f64>,
    y: &Array2<f64>,
    levels: &[f64],
) -> (f64, Array2<f64>) {
    let q = levels.len();
    let scale = 1.0 / (preds.len() as f64);
    let mut grad = Array2::zeros(preds.raw_dim());
    let mut loss = 0.0;
    for ((row, o), p) in preds.indexed_iter() {
        let z = y[(row, o / q)];
        let level = levels[o % q];
        loss += quantile_loss(z, *p, level);
        grad[(row, o)] = quantile_loss_grad(z, *p, level) * scale;
    }
    (loss * scale, grad)
}

/// Fit a linear quantile model by mini-batch gradient descent on the mean
/// pinball loss. Weights start at zero, so a zero-epoch fit returns the
/// initialization.
pub fn fit_linear_quantile(
    windows: &[ForecastWindow],
    levels: &QuantileSet,
    variant: LinearVariant,
    cfg: &TrainConfig,
) -> Result<LinearQuantileModel> {
    if windows.is_empty() {
        return Err(Error::RangeTooShort {
            detail: "need at least one training window".into(),
        });
    }
    if let LinearVariant::DLinear { kernel } = variant {
        let w = windows[0].past_len();
        if kernel == 0 || kernel > w || kernel % 2 == 0 {
            return Err(Error::BadKernel { kernel, window: w });
        }
    }
    let (design, d, dp, w, h) = build_design(windows, variant)?;
    let q = levels.len();
    let out_len = d * h * q;
    let f = design.x.ncols();
    let mut weights = Array2::zeros((out_len, f));
    let mut bias = Array1::zeros(out_len);

    let n = windows.len();
    let batch = cfg.batch_size.max(1).min(n);
    let mut order: Vec<usize> = (0..n).collect();
    for epoch in 0..cfg.epochs {
        rng::shuffle(&mut order, cfg.seed, epoch as u64);
        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(batch) {
            let xb = design.x.select(Axis(0), chunk);
            let yb = design.y.select(Axis(0), chunk);
            let lb = design.lasts.as_ref().map(|l| l.select(Axis(0), chunk));
            let preds = forward(&weights, &bias, &xb, lb.as_ref(), h, q);
            let (loss, grad) = loss_and_grad(&preds, &yb, levels.levels());
            epoch_loss += loss;
            batches += 1;
            let dw = grad.t().dot(&xb);
            let db = grad.sum_axis(Axis(0));
            weights.scaled_add(-cfg.learning_rate, &dw);
            bias.scaled_add(-cfg.learning_rate, &db);
        }
        if !(epoch_loss / batches.max(1) as f64).is_finite() {
            return Err(Error::NonFiniteLoss { epoch });
        }
    }

    Ok(LinearQuantileModel {
        variant,
        n_locations: d,
        n_covariates: dp,
        past_len: w,
        horizon: h,
        levels: levels.clone(),
        weights,
        bias,
        seed: cfg.seed,
    })
}

/// Mean pinball loss of a model over a window set (diagnostics and tests).
pub fn mean_quantile_loss(model: &LinearQuantileModel, windows: &[ForecastWindow]) -> Result<f64> {
    let (design, _, _, _, h) = build_design(windows, model.variant)?;
    let preds = forward(
        &model.weights,
        &model.bias,
        &design.x,
        design.lasts.as_ref(),
        h,
        model.levels.len(),
    );
    let (loss, _) = loss_and_grad(&preds, &design.y, model.levels.levels());
    Ok(loss)
}

/// Predict the D×H×Q quantile tensor for one window. Per-cell quantiles
/// are sorted ascending before return (non-crossing repair).
pub fn predict_quantiles(
    model: &LinearQuantileModel,
    window: &ForecastWindow,
) -> Result<Array3<f64>> {
    if window.n_locations() != model.n_locations
        || window.n_covariates() != model.n_covariates
        || window.past_len() != model.past_len
        || window.horizon() != model.horizon
    {
        return Err(Error::ShapeMismatch {
            expected: format!(
                "(D,D',W,H)=({},{},{},{})",
                model.n_locations, model.n_covariates, model.past_len, model.horizon
            ),
            actual: format!(
                "({},{},{},{})",
                window.n_locations(),
                window.n_covariates(),
                window.past_len(),
                window.horizon()
            ),
        });
    }
    let (x, last) = window_features(model.variant, window)?;
    let mut raw = model.weights.dot(&x) + &model.bias;
    let (d, h, q) = (model.n_locations, model.horizon, model.levels.len());
    if let Some(last) = last {
        for i in 0..d {
            raw.slice_mut(s![i * h * q..(i + 1) * h * q])
                .mapv_inplace(|v| v + last[i]);
        }
    }
    let mut tensor = raw.into_shape_with_order((d, h, q)).expect("shape");
    for mut cell in tensor.lanes_mut(Axis(2)) {
        let mut vals = cell.to_vec();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (slot, v) in cell.iter_mut().zip(vals) {
            *slot = v;
        }
    }
    Ok(tensor)
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    variant: LinearVariant,
    n_locations: usize,
    n_covariates: usize,
    past_len: usize,
    horizon: usize,
    quantile_levels: Vec<f64>,
    /// Row-major O×F weight matrix.
    weights: Vec<f64>,
    bias: Vec<f64>,
    training_seed: u64,
    #[serde(default)]
    config_hash: String,
}

impl LinearQuantileModel {
    pub fn to_json(&self, config_hash: &str) -> Result<String> {
        let file = ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            variant: self.variant,
            n_locations: self.n_locations,
            n_covariates: self.n_covariates,
            past_len: self.past_len,
            horizon: self.horizon,
            quantile_levels: self.levels.levels().to_vec(),
            weights: self.weights.iter().cloned().collect(),
            bias: self.bias.to_vec(),
            training_seed: self.seed,
            config_hash: config_hash.to_string(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<(Self, String)> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::VersionMismatch {
                detail: format!(
                    "model format {} != supported {MODEL_FORMAT_VERSION}",
                    file.format_version
                ),
            });
        }
        let levels = QuantileSet::new(file.quantile_levels)?;
        let f = feature_len(
            file.variant,
            file.n_locations,
            file.n_covariates,
            file.past_len,
            file.horizon,
        );
        let o = file.n_locations * file.horizon * levels.len();
        if file.weights.len() != o * f || file.bias.len() != o {
            return Err(Error::ShapeMismatch {
                expected: format!("{o}x{f} weights, {o} bias"),
                actual: format!("{} weights, {} bias", file.weights.len(), file.bias.len()),
            });
        }
        let weights = Array2::from_shape_vec((o, f), file.weights).expect("checked above");
        Ok((
            LinearQuantileModel {
                variant: file.variant,
                n_locations: file.n_locations,
                n_covariates: file.n_covariates,
                past_len: file.past_len,
                horizon: file.horizon,
                levels,
                weights,
                bias: Array1::from_vec(file.bias),
                seed: file.training_seed,
            },
            file.config_hash,
        ))
    }

    pub fn save(&self, path: &Path, config_hash: &str) -> Result<()> {
        std::fs::write(path, self.to_json(config_hash)?)
            .map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn load(path: &Path) -> Result<(Self, String)> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::from_json(&text)
    }
}

/// Write a quantile forecast export: `origin,location,step,q10,q30,...`.
pub fn export_quantile_csv(
    path: &Path,
    entries: &[(String, Array3<f64>)],
    location_ids: &[String],
    levels: &QuantileSet,
) -> Result<()> {
    let mut w =
        csv::Writer::from_path(path).map_err(|e| Error::Serde(format!("{}: {e}", path.display())))?;
    let mut header = vec!["origin".to_string(), "location".into(), "step".into()];
    for q in levels.levels() {
        let pct = q * 100.0;
        if (pct - pct.round()).abs() < 1e-9 {
            header.push(format!("q{}", pct.round() as i64));
        } else {
            header.push(format!("q{pct}"));
        }
    }
    w.write_record(&header).map_err(|e| Error::Serde(e.to_string()))?;
    for (origin, tensor) in entries {
        let (d, h, q) = tensor.dim();
        for i in 0..d {
            for t in 0..h {
                let mut rec = vec![
                    origin.clone(),
                    location_ids[i].clone(),
                    format!("{}", t + 1),
                ];
                for k in 0..q {
                    rec.push(format!("{}", tensor[(i, t, k)]));
                }
                w.write_record(&rec).map_err(|e| Error::Serde(e.to_string()))?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn window_from(
        past: Array2<f64>,
        future: Array2<f64>,
        past_covs: Array2<f64>,
        future_covs: Array2<f64>,
    ) -> ForecastWindow {
        ForecastWindow {
            origin: past.ncols() - 1,
            past_targets: past,
            past_covariates: past_covs,
            future_covariates: future_covs,
            future_targets: Some(future),
        }
    }

    fn ar1_windows(
        phi: f64,
        sigma: f64,
        t_len: usize,
        w: usize,
        h: usize,
        seed: u64,
    ) -> Vec<ForecastWindow> {
        let mut z = vec![0.0_f64; t_len];
        for t in 1..t_len {
            z[t] = phi * z[t - 1] + sigma * rng::standard_normal(seed, 0, t as u64);
        }
        let mut out = Vec::new();
        for origin in (w - 1)..(t_len - h) {
            let past = Array2::from_shape_fn((1, w), |(_, j)| z[origin + 1 - w + j]);
            let future = Array2::from_shape_fn((1, h), |(_, j)| z[origin + 1 + j]);
            out.push(window_from(
                past,
                future,
                Array2::zeros((0, w)),
                Array2::zeros((0, h)),
            ));
        }
        out
    }

    #[test]
    fn pinball_loss_values() {
        assert_abs_diff_eq!(quantile_loss(1.0, 0.0, 0.5), 0.5);
        assert_abs_diff_eq!(quantile_loss(3.25, 3.25, 0.7), 0.0);
        assert_abs_diff_eq!(quantile_loss(0.0, 1.0, 0.1), 0.9);
    }

    #[test]
    fn pinball_loss_is_convex_in_prediction() {
        for c in 0..500 {
            let z = rng::uniform(1, 0, c) * 4.0 - 2.0;
            let a = rng::uniform(1, 1, c) * 4.0 - 2.0;
            let b = rng::uniform(1, 2, c) * 4.0 - 2.0;
            let lam = rng::uniform(1, 3, c);
            let q = rng::uniform(1, 4, c);
            let mid = lam * a + (1.0 - lam) * b;
            let lhs = quantile_loss(z, mid, q);
            let rhs = lam * quantile_loss(z, a, q) + (1.0 - lam) * quantile_loss(z, b, q);
            assert!(lhs <= rhs + 1e-12, "convexity violated: {lhs} > {rhs}");
        }
    }

    #[test]
    fn nlinear_preprocess_examples() {
        let (shifted, last) = nlinear_preprocess(&array![[1.0, 2.0, 3.0]]);
        assert_eq!(shifted, array![[-2.0, -1.0, 0.0]]);
        assert_eq!(last[0], 3.0);
        let (shifted, last) = nlinear_preprocess(&array![[7.0, 7.0, 7.0]]);
        assert!(shifted.iter().all(|v| *v == 0.0));
        assert_eq!(last[0], 7.0);
        assert_eq!(nlinear_postprocess(0.5, 3.0), 3.5);
    }

    #[test]
    fn dlinear_identity_kernel() {
        let past = array![[1.0, 4.0, 2.0, 8.0, 5.0]];
        let (trend, seasonal) = dlinear_decompose(&past, 1).unwrap();
        assert_eq!(trend, past);
        assert!(seasonal.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn dlinear_constant_input() {
        let past = Array2::from_elem((2, 6), 3.5);
        // kernel must be odd and <= W
        let (_, seasonal) = dlinear_decompose(&past, 5).unwrap();
        assert!(seasonal.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn dlinear_hand_derived_case() {
        // [0,3,0], k=3, edge replication: trend [1,1,1], seasonal [-1,2,-1]
        let past = array![[0.0, 3.0, 0.0]];
        let (trend, seasonal) = dlinear_decompose(&past, 3).unwrap();
        assert_eq!(trend, array![[1.0, 1.0, 1.0]]);
        assert_eq!(seasonal, array![[-1.0, 2.0, -1.0]]);
    }

    #[test]
    fn dlinear_reconstruction_is_exact() {
        let past = Array2::from_shape_fn((3, 9), |(i, j)| {
            rng::uniform(9, i as u64, j as u64) * 10.0 - 5.0
        });
        for kernel in [1, 3, 5, 7, 9] {
            let (trend, seasonal) = dlinear_decompose(&past, kernel).unwrap();
            let back = &trend + &seasonal;
            assert_eq!(back, past, "kernel {kernel}");
        }
    }

    #[test]
    fn dlinear_rejects_bad_kernel() {
        let past = array![[1.0, 2.0, 3.0]];
        assert!(matches!(
            dlinear_decompose(&past, 2),
            Err(Error::BadKernel { .. })
        ));
        assert!(matches!(
            dlinear_decompose(&past, 5),
            Err(Error::BadKernel { .. })
        ));
    }

    #[test]
    fn zero_weight_prediction_is_bias_plus_last() {
        let levels = QuantileSet::default();
        let win = window_from(
            array![[1.0, 2.0, 3.0]],
            array![[0.0, 0.0]],
            Array2::zeros((0, 3)),
            Array2::zeros((0, 2)),
        );
        let mut model = fit_linear_quantile(
            &[win.clone()],
            &levels,
            LinearVariant::NLinear,
            &TrainConfig {
                epochs: 0,
                ..Default::default()
            },
        )
        .unwrap();
        model.bias.fill(0.25);
        let pred = predict_quantiles(&model, &win).unwrap();
        // all outputs = bias + last = 0.25 + 3.0
        assert!(pred.iter().all(|v| (*v - 3.25).abs() < 1e-12));
    }

    #[test]
    fn zero_epochs_returns_initialization() {
        let levels = QuantileSet::default();
        let win = window_from(
            array![[1.0, 2.0, 3.0]],
            array![[4.0, 5.0]],
            Array2::zeros((0, 3)),
            Array2::zeros((0, 2)),
        );
        let model = fit_linear_quantile(
            &[win],
            &levels,
            LinearVariant::NLinear,
            &TrainConfig {
                epochs: 0,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(model.weights.iter().all(|v| *v == 0.0));
        assert!(model.bias.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn predictions_are_sorted_in_q() {
        let levels = QuantileSet::default();
        let windows = ar1_windows(0.7, 0.3, 300, 6, 3, 42);
        let model = fit_linear_quantile(
            &windows,
            &levels,
            LinearVariant::NLinear,
            &TrainConfig {
                epochs: 20,
                ..Default::default()
            },
        )
        .unwrap();
        let pred = predict_quantiles(&model, &windows[0]).unwrap();
        for cell in pred.lanes(Axis(2)) {
            for pair in cell.to_vec().windows(2) {
                assert!(pair[1] >= pair[0]);
            }
        }
    }

    #[test]
    fn constant_series_predicts_constant() {
        let levels = QuantileSet::default();
        let c = 0.6;
        let windows: Vec<ForecastWindow> = (0..50)
            .map(|_| {
                window_from(
                    Array2::from_elem((1, 4), c),
                    Array2::from_elem((1, 2), c),
                    Array2::zeros((0, 4)),
                    Array2::zeros((0, 2)),
                )
            })
            .collect();
        let model = fit_linear_quantile(
            &windows,
            &levels,
            LinearVariant::NLinear,
            &TrainConfig {
                epochs: 30,
                ..Default::default()
            },
        )
        .unwrap();
        let pred = predict_quantiles(&model, &windows[0]).unwrap();
        assert!(pred.iter().all(|v| (*v - c).abs() < 0.01));
    }

    #[test]
    fn training_does_not_increase_loss() {
        let levels = QuantileSet::default();
        let windows = ar1_windows(0.8, 0.2, 400, 8, 2, 7);
        let init = fit_linear_quantile(
            &windows,
            &levels,
            LinearVariant::NLinear,
            &TrainConfig {
                epochs: 0,
                ..Default::default()
            },
        )
        .unwrap();
        let trained = fit_linear_quantile(
            &windows,
            &levels,
            LinearVariant::NLinear,
            &TrainConfig {
                epochs: 40,
                ..Default::default()
            },
        )
        .unwrap();
        let l0 = mean_quantile_loss(&init, &windows).unwrap();
        let l1 = mean_quantile_loss(&trained, &windows).unwrap();
        assert!(l1 <= l0, "final loss {l1} > initial loss {l0}");
    }

    #[test]
    fn training_is_deterministic_given_seed() {
        let levels = QuantileSet::default();
        let windows = ar1_windows(0.8, 0.2, 200, 6, 2, 3);
        let cfg = TrainConfig {
            epochs: 10,
            seed: 11,
            ..Default::default()
        };
        let a = fit_linear_quantile(&windows, &levels, LinearVariant::NLinear, &cfg).unwrap();
        let b = fit_linear_quantile(&windows, &levels, LinearVariant::NLinear, &cfg).unwrap();
        assert_eq!(a.weights, b.weights);
        assert_eq!(a.bias, b.bias);
    }

    #[test]
    fn ar1_median_weight_matches_least_squares_oracle() {
        // z_{t+1} = 0.8 z_t + eps. DLinear with kernel 1 regresses raw lags,
        // so the fitted median weight on the last lag should approach 0.8.
        let levels = QuantileSet::new(vec![0.5]).unwrap();
        let windows = ar1_windows(0.8, 0.1, 3000, 3, 1, 99);
        let model = fit_linear_quantile(
            &windows,
            &levels,
            LinearVariant::DLinear { kernel: 1 },
            &TrainConfig {
                epochs: 150,
                learning_rate: 0.3,
                batch_size: 64,
                seed: 5,
            },
        )
        .unwrap();
        // trend block holds the raw lags for kernel 1; last lag is column W-1
        let w_last = model.trend_weights().unwrap()[(0, 2)];
        assert!(
            (0.7..=0.9).contains(&w_last),
            "fitted last-lag weight {w_last} outside [0.7, 0.9]"
        );

        // closed-form least-squares oracle on the same pairs
        let (mut sxx, mut sxy) = (0.0, 0.0);
        for win in &windows {
            let x = win.past_targets[(0, 2)];
            let y = win.future_targets.as_ref().unwrap()[(0, 0)];
            sxx += x * x;
            sxy += x * y;
        }
        let ols = sxy / sxx;
        assert!((0.7..=0.9).contains(&ols), "OLS oracle {ols} out of range");
        assert!(
            (w_last - ols).abs() < 0.1,
            "GD weight {w_last} far from OLS {ols}"
        );
    }

    #[test]
    fn gradient_matches_central_finite_differences() {
        let levels = QuantileSet::new(vec![0.3, 0.7]).unwrap();
        let windows = ar1_windows(0.6, 0.4, 80, 5, 4, 21);
        let variant = LinearVariant::NLinear;
        let (design, _, _, _, h) = build_design(&windows, variant).unwrap();
        let q = levels.len();
        let out_len = h * q; // D = 1
        let f = design.x.ncols();
        let mut weights = Array2::from_shape_fn((out_len, f), |(o, j)| {
            0.2 * rng::uniform(77, o as u64, j as u64) - 0.1
        });
        let bias = Array1::from_shape_fn(out_len, |o| 0.1 * rng::uniform(78, 0, o as u64));

        let eval = |w: &Array2<f64>| {
            let preds = forward(w, &bias, &design.x, design.lasts.as_ref(), h, q);
            loss_and_grad(&preds, &design.y, levels.levels()).0
        };
        let preds = forward(&weights, &bias, &design.x, design.lasts.as_ref(), h, q);
        let (_, grad_p) = loss_and_grad(&preds, &design.y, levels.levels());
        let analytic = grad_p.t().dot(&design.x);

        let eps = 1e-6;
        for probe in 0..20 {
            let o = (rng::bits(5, 0, probe) % out_len as u64) as usize;
            let j = (rng::bits(5, 1, probe) % f as u64) as usize;
            let orig = weights[(o, j)];
            weights[(o, j)] = orig + eps;
            let up = eval(&weights);
            weights[(o, j)] = orig - eps;
            let down = eval(&weights);
            weights[(o, j)] = orig;
            let numeric = (up - down) / (2.0 * eps);
            let a = analytic[(o, j)];
            let denom = a.abs().max(numeric.abs()).max(1e-8);
            assert!(
                ((a - numeric) / denom).abs() < 1e-4,
                "grad mismatch at ({o},{j}): analytic {a}, numeric {numeric}"
            );
        }
    }

    #[test]
    fn training_coverage_is_roughly_calibrated() {
        let levels = QuantileSet::default();
        let windows = ar1_windows(0.8, 0.3, 1100, 8, 2, 13);
        assert!(windows.len() >= 1000);
        let model = fit_linear_quantile(
            &windows,
            &levels,
            LinearVariant::NLinear,
            &TrainConfig {
                epochs: 120,
                learning_rate: 0.2,
                batch_size: 64,
                seed: 2,
            },
        )
        .unwrap();
        let mut below = vec![0usize; levels.len()];
        let mut total = 0usize;
        for win in &windows {
            let pred = predict_quantiles(&model, win).unwrap();
            let actual = win.future_targets.as_ref().unwrap();
            for t in 0..2 {
                for (k, count) in below.iter_mut().enumerate() {
                    if actual[(0, t)] <= pred[(0, t, k)] {
                        *count += 1;
                    }
                }
                total += 1;
            }
        }
        for (k, q) in levels.levels().iter().enumerate() {
            let cov = below[k] as f64 / total as f64;
            assert!(
                (cov - q).abs() <= 0.1,
                "coverage {cov:.3} at q={q} outside ±0.1"
            );
        }
    }

    #[test]
    fn model_json_round_trip() {
        let levels = QuantileSet::default();
        let windows = ar1_windows(0.5, 0.2, 120, 4, 2, 8);
        let model = fit_linear_quantile(
            &windows,
            &levels,
            LinearVariant::DLinear { kernel: 3 },
            &TrainConfig {
                epochs: 5,
                ..Default::default()
            },
        )
        .unwrap();
        let json = model.to_json("abc123").unwrap();
        let (back, hash) = LinearQuantileModel::from_json(&json).unwrap();
        assert_eq!(hash, "abc123");
        assert_eq!(back, model);
    }

    #[test]
    fn model_version_check() {
        let bad = r#"{"format_version":99,"variant":"nlinear","n_locations":1,
            "n_covariates":0,"past_len":2,"horizon":1,"quantile_levels":[0.5],
            "weights":[0.0,0.0],"bias":[0.0],"training_seed":0}"#;
        assert!(matches!(
            LinearQuantileModel::from_json(bad),
            Err(Error::VersionMismatch { .. })
        ));
    }
}
