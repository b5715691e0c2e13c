//! Small statistical helpers shared by the copula diagnostics and tests.

/// One-sample Kolmogorov-Smirnov statistic against a reference CDF.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut d = 0.0_f64;
    for (i, x) in sorted.iter().enumerate() {
        let f = cdf(*x);
        let hi = (i + 1) as f64 / n - f;
        let lo = f - i as f64 / n;
        d = d.max(hi.abs()).max(lo.abs());
    }
    d
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut xa = a.to_vec();
    let mut xb = b.to_vec();
    xa.sort_by(|p, q| p.partial_cmp(q).unwrap());
    xb.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0_f64;
    while i < xa.len() && j < xb.len() {
        if xa[i] <= xb[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Large-sample one-sample KS critical value at level `alpha`.
pub fn ks_critical(n: usize, alpha: f64) -> f64 {
    ((-0.5 * (alpha / 2.0).ln()) / n as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn uniform_sample_passes_ks() {
        let samples: Vec<f64> = (0..10_000).map(|c| rng::uniform(4, 0, c)).collect();
        let d = ks_statistic(&samples, |x| x.clamp(0.0, 1.0));
        assert!(d < ks_critical(10_000, 0.01), "KS {d}");
    }

    #[test]
    fn shifted_sample_fails_ks() {
        let samples: Vec<f64> = (0..10_000)
            .map(|c| (rng::uniform(4, 0, c) * 0.8).clamp(0.0, 1.0))
            .collect();
        let d = ks_statistic(&samples, |x| x.clamp(0.0, 1.0));
        assert!(d > ks_critical(10_000, 0.01));
    }

    #[test]
    fn two_sample_same_distribution() {
        let a: Vec<f64> = (0..5_000).map(|c| rng::uniform(5, 0, c)).collect();
        let b: Vec<f64> = (0..5_000).map(|c| rng::uniform(5, 1, c)).collect();
        assert!(ks_two_sample(&a, &b) < 0.04);
    }
}
