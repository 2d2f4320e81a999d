//! Small statistics toolkit: moments, least squares, bootstrap, two-sample tests, Holm.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::rng::RngStream;

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64
}

/// Standard error of the mean.
pub fn stderr(xs: &[f64]) -> f64 {
    (variance(xs) / xs.len() as f64).sqrt()
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Empirical quantile with linear interpolation, `q` in `[0, 1]`.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

/// Mean with standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

impl Estimate {
    pub fn of(xs: &[f64]) -> Self {
        Estimate {
            mean: mean(xs),
            stderr: stderr(xs),
            n: xs.len(),
        }
    }

    /// `(mean - target) / stderr`.
    pub fn z_score(&self, target: f64) -> f64 {
        (self.mean - target) / self.stderr
    }

    pub fn ci(&self, z: f64) -> [f64; 2] {
        [self.mean - z * self.stderr, self.mean + z * self.stderr]
    }
}

/// Ordinary least squares line `y = intercept + slope x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Classical standard error of the slope (NaN for two points).
    pub slope_stderr: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return Err(Error::DegenerateRegression(n));
    }
    let mx = mean(x);
    let my = mean(y);
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateRegression(n));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_stderr = if n > 2 {
        let rss: f64 = x
            .iter()
            .zip(y)
            .map(|(a, b)| {
                let r = b - intercept - slope * a;
                r * r
            })
            .sum();
        (rss / (n - 2) as f64 / sxx).sqrt()
    } else {
        f64::NAN
    };
    Ok(LineFit {
        slope,
        intercept,
        slope_stderr,
    })
}

/// Bootstrap distribution of a statistic of per-replicate rows. Resampling indices come from
/// `rng`, so the result is reproducible.
pub fn bootstrap<T>(
    rows: &[T],
    replicates: usize,
    rng: &mut RngStream,
    stat: impl Fn(&[&T]) -> f64,
) -> Vec<f64> {
    let n = rows.len();
    let mut out = Vec::with_capacity(replicates);
    let mut pick: Vec<&T> = Vec::with_capacity(n);
    for _ in 0..replicates {
        pick.clear();
        for _ in 0..n {
            pick.push(&rows[rng.below(n)]);
        }
        out.push(stat(&pick));
    }
    out
}

/// Two-sided normal p-value of a z-score.
pub fn normal_two_sided_p(z: f64) -> f64 {
    let n = Normal::new(0.0, 1.0).expect("unit normal");
    2.0 * n.cdf(-z.abs())
}

/// Upper-tail chi-square p-value.
pub fn chi_square_sf(x: f64, dof: f64) -> f64 {
    let c = ChiSquared::new(dof).expect("positive dof");
    1.0 - c.cdf(x)
}

/// Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len(), y.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let v = x[i].min(y[j]);
        while i < n && x[i] <= v {
            i += 1;
        }
        while j < m && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n * m) as f64 / (n + m) as f64;
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    KsResult {
        statistic: d,
        p_value: kolmogorov_sf(lambda),
    }
}

/// `P(K > lambda)` for the Kolmogorov distribution.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Holm step-down: which hypotheses are rejected at family level `alpha`.
pub fn holm_reject(p_values: &[f64], alpha: f64) -> Vec<bool> {
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]));
    let mut reject = vec![false; m];
    for (rank, &idx) in order.iter().enumerate() {
        if p_values[idx] <= alpha / (m - rank) as f64 {
            reject[idx] = true;
        } else {
            break;
        }
    }
    reject
}

/// Holm-adjusted p-values (monotone, capped at 1).
pub fn holm_adjust(p_values: &[f64]) -> Vec<f64> {
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]));
    let mut adj = vec![0.0; m];
    let mut running: f64 = 0.0;
    for (rank, &idx) in order.iter().enumerate() {
        running = running.max(((m - rank) as f64 * p_values[idx]).min(1.0));
        adj[idx] = running;
    }
    adj
}

/// Kish effective sample size `(sum w)^2 / sum w^2`.
pub fn effective_sample_size(weights: &[f64]) -> f64 {
    let s: f64 = weights.iter().sum();
    let s2: f64 = weights.iter().map(|w| w * w).sum();
    s * s / s2
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn line_fit_exact() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
        let f = fit_line(&x, &y).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-14 && (f.intercept - 2.0).abs() < 1e-14);
        assert!(f.slope_stderr < 1e-12);
        assert!(matches!(
            fit_line(&[1.0], &[1.0]),
            Err(Error::DegenerateRegression(1))
        ));
    }

    #[test]
    fn kolmogorov_known_values() {
        // P(K > 1.3581) = 0.05, P(K > 1.9495) = 0.001
        assert!((kolmogorov_sf(1.3581) - 0.05).abs() < 1e-4);
        assert!((kolmogorov_sf(1.9495) - 0.001).abs() < 1e-5);
    }

    #[test]
    fn ks_identical_and_shifted() {
        let a: Vec<f64> = (0..500).map(|i| i as f64 / 500.0).collect();
        assert!(ks_two_sample(&a, &a).p_value > 0.99);
        let b: Vec<f64> = a.iter().map(|v| v + 0.3).collect();
        assert!(ks_two_sample(&a, &b).p_value < 1e-6);
    }

    #[test]
    fn holm_examples() {
        let p = [0.01, 0.04, 0.03, 0.005];
        assert_eq!(holm_reject(&p, 0.05), vec![true, false, false, true]);
        let adj = holm_adjust(&p);
        assert!((adj[3] - 0.02).abs() < 1e-15 && (adj[0] - 0.03).abs() < 1e-15);
    }

    #[test]
    fn ess_bounds() {
        assert_eq!(effective_sample_size(&[1.0; 10]), 10.0);
        assert!((effective_sample_size(&[1.0, 0.0, 0.0]) - 1.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn ks_p_value_in_unit_interval(a in prop::collection::vec(-5.0f64..5.0, 2..40),
                                       b in prop::collection::vec(-5.0f64..5.0, 2..40)) {
            let r = ks_two_sample(&a, &b);
            prop_assert!((0.0..=1.0).contains(&r.p_value));
            prop_assert!((0.0..=1.0).contains(&r.statistic));
        }

        #[test]
        fn holm_adjusted_dominates_raw(p in prop::collection::vec(0.0f64..1.0, 1..20)) {
            let adj = holm_adjust(&p);
            for (a, r) in adj.iter().zip(&p) {
                prop_assert!(a >= r && *a <= 1.0);
            }
        }
    }
}
