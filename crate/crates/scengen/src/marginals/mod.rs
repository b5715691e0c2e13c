//! Per-(location, horizon-step) marginal predictive distributions.
//!
//! Two providers are shipped: piecewise-linear CDFs interpolated through
//! predicted quantiles, and Beta distributions fitted by maximum
//! likelihood. Both sides expose the same invertible [`MarginalCdf`]
//! object consumed by the copula sampler.

mod beta;
mod quantile;

pub use beta::{fit_beta_mle, BetaFit, BetaFitConfig, BetaParams};
pub use quantile::{
    dlinear_decompose, export_quantile_csv, fit_linear_quantile, nlinear_postprocess,
    nlinear_preprocess, predict_quantiles, quantile_loss, LinearQuantileModel, LinearVariant,
    QuantileSet, TrainConfig,
};

use crate::error::{Error, Result};
use crate::special::{inc_beta, inc_beta_inv};

/// Relative spread applied to duplicate quantile knots so the CDF stays
/// strictly monotone and invertible.
const KNOT_EPS_REL: f64 = 1e-9;

/// An invertible predictive CDF for one (location, horizon-step) cell.
#[derive(Debug, Clone, PartialEq)]
pub enum MarginalCdf {
    /// Piecewise-linear CDF through `(z, u)` knots, linear to the support
    /// bounds outside the outer quantiles.
    QuantileInterp {
        /// Strictly increasing in both coordinates; first knot is
        /// `(lo, 0)`, last is `(hi, 1)`.
        knots: Vec<(f64, f64)>,
    },
    /// Beta distribution on `[0, capacity]`.
    Beta { params: BetaParams, capacity: f64 },
}

impl MarginalCdf {
    pub fn support(&self) -> (f64, f64) {
        match self {
            MarginalCdf::QuantileInterp { knots } => (knots[0].0, knots[knots.len() - 1].0),
            MarginalCdf::Beta { capacity, .. } => (0.0, *capacity),
        }
    }

    /// Evaluate u = F(z). Errors when `z` is outside the support.
    pub fn eval(&self, z: f64) -> Result<f64> {
        let (lo, hi) = self.support();
        if !(z >= lo && z <= hi) {
            return Err(Error::OutOfSupport { value: z, lo, hi });
        }
        Ok(match self {
            MarginalCdf::QuantileInterp { knots } => {
                let k = match knots.binary_search_by(|(zk, _)| zk.partial_cmp(&z).unwrap()) {
                    Ok(i) => return Ok(knots[i].1),
                    Err(i) => i,
                };
                // z strictly between knots k-1 and k
                let (z0, u0) = knots[k - 1];
                let (z1, u1) = knots[k];
                u0 + (z - z0) / (z1 - z0) * (u1 - u0)
            }
            MarginalCdf::Beta { params, capacity } => {
                inc_beta(params.alpha, params.beta, z / capacity)
            }
        })
    }

    /// Evaluate z = F⁻¹(u) for u in [0, 1].
    pub fn inverse(&self, u: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::DomainError {
                detail: format!("CDF inverse requires u in [0,1], got {u}"),
            });
        }
        Ok(match self {
            MarginalCdf::QuantileInterp { knots } => {
                let k = match knots.binary_search_by(|(_, uk)| uk.partial_cmp(&u).unwrap()) {
                    Ok(i) => return Ok(knots[i].0),
                    Err(i) => i.min(knots.len() - 1).max(1),
                };
                let (z0, u0) = knots[k - 1];
                let (z1, u1) = knots[k];
                z0 + (u - u0) / (u1 - u0) * (z1 - z0)
            }
            MarginalCdf::Beta { params, capacity } => {
                capacity * inc_beta_inv(params.alpha, params.beta, u)
            }
        })
    }
}

/// Piecewise-linear CDF through predicted quantiles.
///
/// Knots are `(lo, 0), (z_q, q), ..., (hi, 1)`; predicted values are
/// clamped into the support and duplicate knots are spread by
/// `1e-9 * (hi - lo)` so the map stays strictly monotone.
pub fn quantiles_to_cdf(q_values: &[f64], levels: &QuantileSet, support: (f64, f64)) -> Result<MarginalCdf> {
    let (lo, hi) = support;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::DomainError {
            detail: format!("support bounds must be finite with lo < hi, got [{lo}, {hi}]"),
        });
    }
    if q_values.len() != levels.levels().len() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} quantile values", levels.levels().len()),
            actual: format!("{}", q_values.len()),
        });
    }
    if q_values.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::UnsortedQuantiles);
    }
    let eps = KNOT_EPS_REL * (hi - lo);
    let mut knots = Vec::with_capacity(q_values.len() + 2);
    knots.push((lo, 0.0));
    for (z, q) in q_values.iter().zip(levels.levels()) {
        let clamped = z.clamp(lo, hi);
        let prev = knots.last().unwrap().0;
        let z = if clamped <= prev { prev + eps } else { clamped };
        knots.push((z, *q));
    }
    // top knot: force z strictly above the last quantile knot
    let prev = knots.last().unwrap().0;
    knots.push((if hi <= prev { prev + eps } else { hi }, 1.0));
    Ok(MarginalCdf::QuantileInterp { knots })
}

/// A complete D×H grid of marginals for one forecast origin, laid out
/// location-major: cell `(i, τ)` lives at index `i*H + τ`.
#[derive(Debug, Clone)]
pub struct MarginalGrid {
    n_locations: usize,
    horizon: usize,
    cdfs: Vec<MarginalCdf>,
}

impl MarginalGrid {
    pub fn new(n_locations: usize, horizon: usize, cdfs: Vec<MarginalCdf>) -> Result<Self> {
        if cdfs.len() != n_locations * horizon {
            let missing = cdfs.len();
            return Err(Error::MissingMarginal {
                location: missing / horizon.max(1),
                step: missing % horizon.max(1),
            });
        }
        Ok(Self {
            n_locations,
            horizon,
            cdfs,
        })
    }

    /// Build a grid from a D×H×Q quantile tensor.
    pub fn from_quantiles(
        tensor: &ndarray::Array3<f64>,
        levels: &QuantileSet,
        supports: &[(f64, f64)],
    ) -> Result<Self> {
        let (d, h, q) = tensor.dim();
        if supports.len() != d {
            return Err(Error::ShapeMismatch {
                expected: format!("{d} supports"),
                actual: format!("{}", supports.len()),
            });
        }
        if q != levels.levels().len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} levels", levels.levels().len()),
                actual: format!("{q}"),
            });
        }
        let mut cdfs = Vec::with_capacity(d * h);
        for i in 0..d {
            for t in 0..h {
                let vals: Vec<f64> = (0..q).map(|k| tensor[(i, t, k)]).collect();
                cdfs.push(quantiles_to_cdf(&vals, levels, supports[i])?);
            }
        }
        Self::new(d, h, cdfs)
    }

    pub fn n_locations(&self) -> usize {
        self.n_locations
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Copula dimension d = D·H.
    pub fn dim(&self) -> usize {
        self.cdfs.len()
    }

    pub fn cell(&self, location: usize, step: usize) -> &MarginalCdf {
        &self.cdfs[location * self.horizon + step]
    }

    /// Flat accessor in location-major layout.
    pub fn flat(&self, idx: usize) -> &MarginalCdf {
        &self.cdfs[idx]
    }
}
