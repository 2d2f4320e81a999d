//! Green functions of `1 - Delta`: the whole-plane kernel `K`, the regularized torus
//! covariances `G_{M,N}(x, y) = E[P_M phi(x) P_N phi(y)]`, and Monte Carlo cross-checks.

use std::f64::consts::PI;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gmc::replicate_gff;
use crate::multiplier::MultiplierSpec;
use crate::quadrature::adaptive_simpson;
use crate::spectral::{from_spectral_unchecked, SpectralCoeffs, TorusField, TorusGrid};
use crate::stats::Estimate;

/// `K(r) = (1/2pi) int_0^inf exp(-r cosh u) du` (equal to `(1/2pi) int_1^inf exp(-(r/2)(t + 1/t)) dt/t`).
///
/// The integral is cut where `r (cosh U - 1) = 40`, so the dropped tail is below `e^{-40}`
/// relative to the integrand's peak.
pub fn kernel_k(r: f64) -> Result<f64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::NonpositiveRadius(r));
    }
    let upper = (1.0 + 40.0 / r).acosh();
    let peak = (-r).exp();
    let f = |u: f64| (-r * (u.cosh() - 1.0)).exp();
    // integrate the rescaled integrand, then restore the factor e^{-r}
    let val = adaptive_simpson(&f, 0.0, upper, 1e-13);
    Ok(peak * val / (2.0 * PI))
}

/// Default truncation radius `4 2^{max(m, n)}`.
pub fn default_truncation(m: u32, n: u32) -> i64 {
    4 * (1i64 << m.max(n))
}

/// Per-mode coefficient `psi_M(k) psi_N(k) / (1 + |k|^2)` on `|k|_inf <= reach`, visited in a
/// fixed order.
fn for_each_mode(
    spec: &MultiplierSpec,
    m: u32,
    n: u32,
    truncation_radius: i64,
    mut visit: impl FnMut([i64; 2], f64),
) {
    let reach = match spec.support_radius() {
        Some(r) => truncation_radius.min((r * (1i64 << m.min(n)) as f64).floor() as i64),
        None => truncation_radius,
    };
    let (sm, sn) = (f64::powi(2.0, -(m as i32)), f64::powi(2.0, -(n as i32)));
    let radial = spec.is_radial();
    let mut cache = std::collections::HashMap::<i64, f64>::new();
    for k1 in -reach..=reach {
        for k2 in -reach..=reach {
            let k = [k1 as f64, k2 as f64];
            let w = if radial {
                let q = k1 * k1 + k2 * k2;
                *cache.entry(q).or_insert_with(|| {
                    let r = (q as f64).sqrt();
                    spec.evaluate_radial(sm * r) * spec.evaluate_radial(sn * r)
                })
            } else {
                spec.evaluate([sm * k[0], sm * k[1]]) * spec.evaluate([sn * k[0], sn * k[1]])
            };
            if w != 0.0 {
                visit([k1, k2], w / (1.0 + k[0] * k[0] + k[1] * k[1]));
            }
        }
    }
}

/// `G_{M,N}(d) = (1/4pi^2) sum_{|k|_inf <= R} psi(2^-M k) psi(2^-N k) cos(k.d) / (1 + |k|^2)`.
pub fn green_mn(
    spec: &MultiplierSpec,
    m: u32,
    n: u32,
    displacement: [f64; 2],
    truncation_radius: i64,
) -> Result<f64> {
    if truncation_radius < default_truncation(m, n) {
        return Err(Error::InvalidArgument(format!(
            "truncation radius {truncation_radius} < 4 * 2^{}",
            m.max(n)
        )));
    }
    let mut sum = 0.0;
    for_each_mode(spec, m, n, truncation_radius, |k, w| {
        sum += w * (k[0] as f64 * displacement[0] + k[1] as f64 * displacement[1]).cos();
    });
    Ok(sum / (4.0 * PI * PI))
}

/// `G_{M,N}` sampled on every node of a displacement grid, by one inverse FFT. Modes beyond
/// the grid (`|k|_inf >= q/2`) are dropped; the count of dropped nonzero modes is returned.
pub fn green_field(
    spec: &MultiplierSpec,
    m: u32,
    n: u32,
    grid: TorusGrid,
    truncation_radius: i64,
) -> (TorusField, usize) {
    let mut c = SpectralCoeffs::zeros(grid);
    let mut dropped = 0;
    for_each_mode(spec, m, n, truncation_radius, |k, w| {
        if grid.is_resolved(k) {
            c.set(k, Complex64::new(w / (2.0 * PI), 0.0));
        } else {
            dropped += 1;
        }
    });
    (from_spectral_unchecked(&c), dropped)
}

/// `int int |G_{M,N+1}(x,y) - G_{M,N}(x,y)|^p dx dy = 4 pi^2 int |g(d)|^p dd`, by the Riemann
/// sum on the displacement grid.
pub fn green_diff_norm(
    spec: &MultiplierSpec,
    m: u32,
    n: u32,
    p: f64,
    grid: TorusGrid,
) -> Result<f64> {
    green_level_diff_norm(spec, m, n, n + 1, p, grid)
}

/// As [`green_diff_norm`] for an arbitrary pair of second levels `n_a`, `n_b`.
pub fn green_level_diff_norm(
    spec: &MultiplierSpec,
    m: u32,
    n_a: u32,
    n_b: u32,
    p: f64,
    grid: TorusGrid,
) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidArgument(format!("exponent {p} < 1")));
    }
    let top = m.max(n_a).max(n_b);
    if (grid.size() as f64) < f64::powi(2.0, top as i32 + 2) {
        return Err(Error::LevelAboveNyquist {
            n: top,
            m: grid.size(),
        });
    }
    let r = default_truncation(m, top);
    let (a, _) = green_field(spec, m, n_a, grid, r);
    let (b, _) = green_field(spec, m, n_b, grid, r);
    let d = b.zip_map(&a, |x, y| x - y);
    Ok(4.0 * PI * PI * d.lp_norm(p).powf(p))
}

/// `G_{M,N}` at a list of displacements.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreenTable {
    pub spec: MultiplierSpec,
    pub m_level: u32,
    pub n_level: u32,
    pub truncation_radius: i64,
    /// `(displacement, value)`.
    pub samples: Vec<([f64; 2], f64)>,
}

impl GreenTable {
    pub fn build(
        spec: &MultiplierSpec,
        m: u32,
        n: u32,
        displacements: &[[f64; 2]],
    ) -> Result<Self> {
        let r = default_truncation(m, n);
        let samples = displacements
            .par_iter()
            .map(|&d| green_mn(spec, m, n, d, r).map(|v| (d, v)))
            .collect::<Result<_>>()?;
        Ok(GreenTable {
            spec: *spec,
            m_level: m,
            n_level: n,
            truncation_radius: r,
            samples,
        })
    }
}

/// Range of `G_{N,N}(d) + (1/2pi) log(|d| v 2^-N)` over the given displacements.
pub fn gn1_band(spec: &MultiplierSpec, n: u32, displacements: &[[f64; 2]]) -> Result<[f64; 2]> {
    let table = GreenTable::build(spec, n, n, displacements)?;
    let floor = f64::powi(2.0, -(n as i32));
    let mut band = [f64::INFINITY, f64::NEG_INFINITY];
    for (d, v) in table.samples {
        let r = d[0].hypot(d[1]).max(floor);
        let rem = v + r.ln() / (2.0 * PI);
        band[0] = band[0].min(rem);
        band[1] = band[1].max(rem);
    }
    Ok(band)
}

/// Partial sums of the periodization `sum_{|l|_inf <= L} K(x + 2 pi l)`, one entry per shell `L`.
pub fn periodized_kernel_shells(x: [f64; 2], shells: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(shells + 1);
    let mut sum = 0.0;
    for l in 0..=shells as i64 {
        let mut shell = 0.0;
        for a in -l..=l {
            for b in -l..=l {
                if a.abs().max(b.abs()) != l {
                    continue;
                }
                let y = [x[0] + 2.0 * PI * a as f64, x[1] + 2.0 * PI * b as f64];
                shell += kernel_k(y[0].hypot(y[1]))?;
            }
        }
        sum += shell;
        out.push(sum);
    }
    Ok(out)
}

/// One displacement of the covariance cross-check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovariancePoint {
    /// Node offset and the displacement it represents.
    pub offset: [usize; 2],
    pub displacement: [f64; 2],
    pub monte_carlo: Estimate,
    pub reference: f64,
    pub z: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovarianceCrosscheck {
    pub points: Vec<CovariancePoint>,
    pub max_abs_deviation: f64,
    pub max_abs_z: f64,
}

/// Monte Carlo `E[P_n phi(x) P_n phi(x + d)]`, averaged over base nodes `x`, against `G_{n,n}(d)`.
pub fn covariance_crosscheck(
    spec: &MultiplierSpec,
    n: u32,
    grid: TorusGrid,
    offsets: &[[usize; 2]],
    ensemble: usize,
    seed: u64,
) -> Result<CovarianceCrosscheck> {
    let mask = spec.mask(grid, n)?;
    let m = grid.size();
    let rows: Vec<Vec<f64>> = (0..ensemble)
        .into_par_iter()
        .map(|i| {
            let x = mask.apply_to_physical(&replicate_gff(grid, seed, i));
            let v = x.values();
            offsets
                .iter()
                .map(|o| {
                    let mut s = 0.0;
                    for j1 in 0..m {
                        let r1 = ((j1 + o[0]) % m) * m;
                        for j2 in 0..m {
                            s += v[j1 * m + j2] * v[r1 + (j2 + o[1]) % m];
                        }
                    }
                    s / (m * m) as f64
                })
                .collect()
        })
        .collect();
    let h = grid.spacing();
    let r = default_truncation(n, n);
    let mut points = Vec::with_capacity(offsets.len());
    let (mut max_dev, mut max_z): (f64, f64) = (0.0, 0.0);
    for (idx, o) in offsets.iter().enumerate() {
        let d = [o[0] as f64 * h, o[1] as f64 * h];
        let est = Estimate::of(&rows.iter().map(|row| row[idx]).collect::<Vec<_>>());
        let reference = green_mn(spec, n, n, d, r)?;
        let z = (est.mean - reference) / est.stderr;
        max_dev = max_dev.max((est.mean - reference).abs());
        max_z = max_z.max(z.abs());
        points.push(CovariancePoint {
            offset: *o,
            displacement: d,
            monte_carlo: est,
            reference,
            z,
        });
    }
    Ok(CovarianceCrosscheck {
        points,
        max_abs_deviation: max_dev,
        max_abs_z: max_z,
    })
}

/// Twelve node offsets spanning short, intermediate and antipodal displacements.
pub fn standard_offsets(grid: TorusGrid) -> Vec<[usize; 2]> {
    let m = grid.size();
    let h = m / 2;
    vec![
        [0, 0],
        [1, 0],
        [0, 1],
        [1, 1],
        [2, 0],
        [3, 2],
        [m / 16, 0],
        [m / 8, m / 16],
        [m / 4, 0],
        [m / 4, m / 4],
        [h, 0],
        [h, h],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_rejects_nonpositive() {
        assert!(matches!(kernel_k(0.0), Err(Error::NonpositiveRadius(_))));
        assert!(matches!(kernel_k(-1.0), Err(Error::NonpositiveRadius(_))));
    }

    #[test]
    fn kernel_known_value() {
        // K_0(1) = 0.42102443824070833
        let v = kernel_k(1.0).unwrap() * 2.0 * PI;
        assert!((v - 0.421_024_438_240_708_33).abs() < 1e-12, "{v}");
    }

    #[test]
    fn green_at_zero_is_renorm_constant() {
        for spec in [
            MultiplierSpec::sharp_square(),
            MultiplierSpec::smooth_bump(),
            MultiplierSpec::circle_average(),
        ] {
            let n = 3;
            let g = green_mn(&spec, n, n, [0.0, 0.0], 32).unwrap();
            let c = spec.renorm_constant(n, 32).unwrap().value;
            assert!((g - c).abs() < 1e-14 * c, "{}", spec.kind);
        }
    }

    #[test]
    fn green_symmetric_in_sign() {
        let s = MultiplierSpec::sharp_ball();
        let a = green_mn(&s, 2, 4, [0.3, -1.1], 64).unwrap();
        let b = green_mn(&s, 2, 4, [-0.3, 1.1], 64).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn green_field_matches_direct_sum() {
        let s = MultiplierSpec::smooth_bump();
        let grid = TorusGrid::new(64).unwrap();
        let (f, dropped) = green_field(&s, 2, 3, grid, 32);
        assert_eq!(dropped, 0);
        for (j1, j2) in [(32, 32), (40, 32), (0, 0), (17, 50)] {
            let x = grid.node(j1, j2);
            let want = green_mn(&s, 2, 3, x, 32).unwrap();
            assert!((f.at(j1, j2) - want).abs() < 1e-14, "{j1} {j2}");
        }
    }

    #[test]
    fn identical_levels_have_zero_difference() {
        let grid = TorusGrid::new(128).unwrap();
        let v = green_level_diff_norm(&MultiplierSpec::smooth_bump(), 3, 4, 4, 1.0, grid).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn domination_at_origin() {
        for n in 1..5 {
            let a = green_mn(
                &MultiplierSpec::smooth_bump(),
                2,
                n,
                [0.0, 0.0],
                default_truncation(2, n),
            )
            .unwrap();
            let b = green_mn(
                &MultiplierSpec::sharp_square(),
                2,
                n,
                [0.0, 0.0],
                default_truncation(2, n),
            )
            .unwrap();
            assert!(a <= b);
        }
    }

    #[test]
    fn periodization_shells_converge_geometrically() {
        let sums = periodized_kernel_shells([0.4, -0.9], 4).unwrap();
        for l in 1..4 {
            let inc = sums[l + 1] - sums[l];
            let prev = sums[l] - sums[l - 1];
            assert!(inc / prev < (-PI).exp(), "shell {l}");
        }
    }
}
