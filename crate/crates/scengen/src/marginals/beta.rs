//! Beta distribution fitting by maximum likelihood.
//!
//! The log-likelihood is maximized by gradient ascent on `(ln α, ln β)`
//! (positivity by construction), initialized from method-of-moments
//! estimates. Samples at the 0/1 boundary are clamped inward by 1e-6 to
//! keep the log-likelihood finite.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::special::{digamma, inc_beta, inc_beta_inv, ln_beta};

/// Boundary clamp applied to samples before fitting.
pub const SAMPLE_CLAMP: f64 = 1e-6;

/// Shape parameters of a Beta distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaParams {
    pub alpha: f64,
    pub beta: f64,
}

impl BetaParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
            return Err(Error::DomainError {
                detail: format!("Beta parameters must be positive, got α={alpha}, β={beta}"),
            });
        }
        Ok(Self { alpha, beta })
    }

    /// CDF u = I_z(α, β), absolute accuracy better than 1e-10.
    pub fn cdf(&self, z: f64) -> f64 {
        inc_beta(self.alpha, self.beta, z.clamp(0.0, 1.0))
    }

    /// Inverse CDF by bracketed root finding, 1e-9 in z.
    pub fn inverse_cdf(&self, u: f64) -> f64 {
        inc_beta_inv(self.alpha, self.beta, u)
    }

    /// Method-of-moments estimate from sample mean and variance.
    pub fn from_moments(mean: f64, var: f64) -> Option<Self> {
        if var <= 0.0 || mean <= 0.0 || mean >= 1.0 {
            return None;
        }
        let common = mean * (1.0 - mean) / var - 1.0;
        if common <= 0.0 {
            return None;
        }
        BetaParams::new(mean * common, (1.0 - mean) * common).ok()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BetaFitConfig {
    pub max_iters: usize,
    /// Convergence threshold on the ∞-norm of the log-space gradient.
    pub tolerance: f64,
    /// Drives jittered restarts when a start point fails to converge.
    pub seed: u64,
}

impl Default for BetaFitConfig {
    fn default() -> Self {
        Self {
            max_iters: 2000,
            tolerance: 1e-8,
            seed: 0,
        }
    }
}

/// Fit result: the best iterate plus whether the gradient converged.
#[derive(Debug, Clone)]
pub struct BetaFit {
    pub params: BetaParams,
    pub converged: bool,
    pub iterations: usize,
    pub log_likelihood: f64,
}

/// Mean Beta log-likelihood given the sufficient statistics
/// (mean of ln z and mean of ln(1−z)).
fn mean_log_likelihood(alpha: f64, beta: f64, mean_ln: f64, mean_ln1m: f64) -> f64 {
    (alpha - 1.0) * mean_ln + (beta - 1.0) * mean_ln1m - ln_beta(alpha, beta)
}

/// Maximize the Beta log-likelihood over clamped samples.
///
/// Returns `DegenerateSamples` when fewer than two samples remain or the
/// sample variance is zero; a fit that exhausts `max_iters` is returned
/// with `converged = false` rather than as an error.
pub fn fit_beta_mle(samples: &[f64], cfg: &BetaFitConfig) -> Result<BetaFit> {
    let clamped: Vec<f64> = samples
        .iter()
        .filter(|z| z.is_finite())
        .map(|z| z.clamp(SAMPLE_CLAMP, 1.0 - SAMPLE_CLAMP))
        .collect();
    if clamped.len() < 2 {
        return Err(Error::DegenerateSamples {
            detail: format!("need at least 2 finite samples, got {}", clamped.len()),
        });
    }
    let n = clamped.len() as f64;
    let mean = clamped.iter().sum::<f64>() / n;
    let var = clamped.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / n;
    if var == 0.0 {
        return Err(Error::DegenerateSamples {
            detail: "zero sample variance".into(),
        });
    }
    let mean_ln = clamped.iter().map(|z| z.ln()).sum::<f64>() / n;
    let mean_ln1m = clamped.iter().map(|z| (1.0 - z).ln()).sum::<f64>() / n;

    let init = BetaParams::from_moments(mean, var)
        .unwrap_or(BetaParams {
            alpha: 1.0,
            beta: 1.0,
        });

    let ascend = |mut la: f64, mut lb: f64| -> (BetaParams, bool, usize, f64) {
        let mut step = 0.5;
        let mut ll = mean_log_likelihood(la.exp(), lb.exp(), mean_ln, mean_ln1m);
        let mut iters = 0;
        let mut converged = false;
        while iters < cfg.max_iters {
            iters += 1;
            let (a, b) = (la.exp(), lb.exp());
            let psi_ab = digamma(a + b);
            // gradient in log-space: chain rule multiplies by the parameter
            let ga = a * (mean_ln - digamma(a) + psi_ab);
            let gb = b * (mean_ln1m - digamma(b) + psi_ab);
            if ga.abs().max(gb.abs()) < cfg.tolerance {
                converged = true;
                break;
            }
            let (na, nb) = (la + step * ga, lb + step * gb);
            let nll = mean_log_likelihood(na.exp(), nb.exp(), mean_ln, mean_ln1m);
            if nll.is_finite() && nll >= ll {
                la = na;
                lb = nb;
                ll = nll;
                step = (step * 1.1).min(4.0);
            } else {
                step *= 0.5;
                if step < 1e-14 {
                    break;
                }
            }
        }
        (
            BetaParams {
                alpha: la.exp(),
                beta: lb.exp(),
            },
            converged,
            iters,
            ll,
        )
    };

    let (mut params, mut converged, mut iterations, mut best_ll) =
        ascend(init.alpha.ln(), init.beta.ln());
    // jittered restarts if the first start point stalled
    let mut restart = 0u64;
    while !converged && restart < 3 {
        let ja = init.alpha.ln() + rng::standard_normal(cfg.seed, 100 + restart, 0) * 0.5;
        let jb = init.beta.ln() + rng::standard_normal(cfg.seed, 100 + restart, 1) * 0.5;
        let (p, c, it, ll) = ascend(ja, jb);
        if ll > best_ll {
            params = p;
            converged = c;
            iterations = it;
            best_ll = ll;
        } else if c {
            converged = c;
        }
        restart += 1;
    }
    if !converged {
        log::warn!(
            "beta MLE did not converge in {} iterations (grad tol {})",
            cfg.max_iters,
            cfg.tolerance
        );
    }
    Ok(BetaFit {
        params,
        converged,
        iterations,
        log_likelihood: best_ll,
    })
}
