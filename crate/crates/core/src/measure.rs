//! Sampling the regularized measure `mu_N ∝ exp(-∫ exp_N(alpha phi)) mu_0` by importance
//! resampling, with the zero mode integrated out exactly.
//!
//! Writing `phi = c0 e_0 + phi'` gives `∫ exp_N = e^{a c0} R(phi')` with `a = alpha / (2 pi)`,
//! so conditionally on `phi'` the zero mode has density `∝ N(c0) exp(-e^{a c0} R)`. The
//! importance weight of `phi'` is the normalizer `Z(R)`, which varies far less than
//! `exp(-e^{a c0} R)` itself.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gff::sample_gff;
use crate::gmc::WickBuilder;
use crate::rng::{Purpose, RngStream};
use crate::spectral::{Complex64, SpectralCoeffs, TorusField, TorusGrid};
use crate::stats::effective_sample_size;

const QUAD_POINTS: usize = 2001;
const QUAD_HALF_WIDTH: f64 = 12.0;

/// Conditional law of the zero-mode coordinate given `R`.
#[derive(Clone, Debug)]
pub struct ZeroModeConditional {
    /// `log Z(R)`, `Z(R) = ∫ N(c) exp(-e^{a c} R) dc`.
    pub log_z: f64,
    /// `E[e^{a c0} | R]`.
    pub mean_exp: f64,
    nodes: Vec<f64>,
    cdf: Vec<f64>,
}

impl ZeroModeConditional {
    pub fn new(a: f64, r: f64) -> Self {
        assert!(r >= 0.0, "mass must be nonnegative");
        let log_g = |c: f64| -0.5 * c * c - (a * c).exp() * r;
        // mode of the log-concave integrand
        let mut c = 0.0f64;
        for _ in 0..100 {
            let e = (a * c).exp() * r;
            let g1 = -c - a * e;
            let g2 = -1.0 - a * a * e;
            let step = g1 / g2;
            c -= step.clamp(-5.0, 5.0);
            if step.abs() < 1e-13 {
                break;
            }
        }
        let width = QUAD_HALF_WIDTH / (1.0 + a * a * (a * c).exp() * r).sqrt();
        let h = 2.0 * width / (QUAD_POINTS - 1) as f64;
        let nodes: Vec<f64> = (0..QUAD_POINTS).map(|i| c - width + i as f64 * h).collect();
        let logs: Vec<f64> = nodes.iter().map(|&x| log_g(x)).collect();
        let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let vals: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
        let mut cdf = Vec::with_capacity(QUAD_POINTS);
        let mut acc = 0.0;
        cdf.push(0.0);
        for i in 1..QUAD_POINTS {
            acc += 0.5 * h * (vals[i - 1] + vals[i]);
            cdf.push(acc);
        }
        let total = acc;
        let moment: f64 = nodes
            .iter()
            .zip(&vals)
            .map(|(&x, &v)| v * (a * x).exp())
            .sum::<f64>()
            * h;
        for v in cdf.iter_mut() {
            *v /= total;
        }
        ZeroModeConditional {
            log_z: top + total.ln() - 0.5 * (2.0 * PI).ln(),
            mean_exp: moment / total,
            nodes,
            cdf,
        }
    }

    /// Inverse-CDF draw from a uniform `u` in (0, 1).
    pub fn quantile(&self, u: f64) -> f64 {
        let i = self
            .cdf
            .partition_point(|&p| p < u)
            .clamp(1, self.cdf.len() - 1);
        let (p0, p1) = (self.cdf[i - 1], self.cdf[i]);
        let t = if p1 > p0 { (u - p0) / (p1 - p0) } else { 0.5 };
        self.nodes[i - 1] + t * (self.nodes[i] - self.nodes[i - 1])
    }
}

/// One proposal `phi'` (zero mode removed) with its Rao-Blackwellized weight.
#[derive(Clone, Debug)]
pub struct Proposal {
    pub index: usize,
    pub phi: SpectralCoeffs,
    /// `R(phi') = ∫ exp(alpha P_N phi' - alpha^2 C_N / 2)`.
    pub mass: f64,
    pub conditional: ZeroModeConditional,
}

impl Proposal {
    pub fn log_weight(&self) -> f64 {
        self.conditional.log_z
    }
}

/// Draw `phi ~ mu_0` for replicate `index` of `purpose` and drop its zero mode.
pub fn proposal(
    builder: &WickBuilder,
    grid: TorusGrid,
    seed: u64,
    purpose: Purpose,
    index: usize,
) -> Proposal {
    let mut rng = RngStream::for_purpose(seed, purpose, index as u64);
    let mut phi = sample_gff(grid, &mut rng).into_spectral();
    phi.set([0, 0], Complex64::new(0.0, 0.0));
    let mass = builder.build(&phi).total_mass;
    let a = builder.params().alpha / (2.0 * PI);
    Proposal {
        index,
        phi,
        mass,
        conditional: ZeroModeConditional::new(a, mass),
    }
}

/// Normalized importance weights (max-shifted in log space).
pub fn normalized_weights(log_w: &[f64]) -> Vec<f64> {
    let top = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = log_w.iter().map(|l| (l - top).exp()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

/// Result of importance resampling.
#[derive(Clone, Debug)]
pub struct ResampledEnsemble {
    pub fields: Vec<TorusField>,
    pub coeffs: Vec<SpectralCoeffs>,
    pub proposals: usize,
    pub ess: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResampleSpec {
    pub grid: TorusGrid,
    pub proposals: usize,
    pub draws: usize,
    pub seed: u64,
    /// Separates independent pools sharing a seed.
    pub pool: u64,
    pub min_ess: f64,
}

/// Importance-resample `draws` fields from `mu_N`: `proposals` zero-mode-free GFF draws,
/// weighted by `Z(R)`, resampled systematically, then completed with an exact conditional
/// zero-mode draw.
pub fn sample_mu_n(builder: &WickBuilder, spec: &ResampleSpec) -> Result<ResampledEnsemble> {
    let base = spec.pool << 32;
    let props: Vec<Proposal> = (0..spec.proposals)
        .into_par_iter()
        .map(|i| {
            proposal(
                builder,
                spec.grid,
                spec.seed,
                Purpose::Resample,
                base as usize + i,
            )
        })
        .collect();
    let log_w: Vec<f64> = props.iter().map(|p| p.log_weight()).collect();
    let w = normalized_weights(&log_w);
    let ess = effective_sample_size(&w);
    if ess < spec.min_ess {
        return Err(Error::EffectiveSampleTooSmall {
            ess,
            required: spec.min_ess,
        });
    }
    let mut rng = RngStream::for_purpose(spec.seed, Purpose::Resample, base | 0xffff_ffff);
    let picks = systematic_resample(&w, spec.draws, rng.uniform());
    let mut coeffs = Vec::with_capacity(spec.draws);
    for (d, &i) in picks.iter().enumerate() {
        let mut c = props[i].phi.clone();
        let mut zr = RngStream::for_purpose(spec.seed, Purpose::Misc, base + d as u64);
        let u = zr.uniform().clamp(1e-15, 1.0 - 1e-15);
        c.set(
            [0, 0],
            Complex64::new(props[i].conditional.quantile(u), 0.0),
        );
        coeffs.push(c);
    }
    let fields = coeffs
        .iter()
        .map(crate::spectral::from_spectral_unchecked)
        .collect();
    Ok(ResampledEnsemble {
        fields,
        coeffs,
        proposals: spec.proposals,
        ess,
    })
}

/// Systematic resampling: indices `i` with multiplicity ≈ `draws * w_i`.
pub fn systematic_resample(w: &[f64], draws: usize, u: f64) -> Vec<usize> {
    let mut out = Vec::with_capacity(draws);
    let mut acc = w[0];
    let mut i = 0;
    for d in 0..draws {
        let target = (d as f64 + u) / draws as f64;
        while acc < target && i + 1 < w.len() {
            i += 1;
            acc += w[i];
        }
        out.push(i);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::gauss_legendre;

    #[test]
    fn conditional_matches_direct_quadrature() {
        let (x, w) = gauss_legendre(20);
        // composite rule on [-40, 40]; returns (log Z, E[e^{a c}])
        let direct = |a: f64, r: f64| {
            let lg = |c: f64| -0.5 * c * c - (a * c).exp() * r;
            let (mut z, mut m) = (0.0, 0.0);
            let panels = 800;
            let h = 80.0 / panels as f64;
            for p in 0..panels {
                for (xi, wi) in x.iter().zip(&w) {
                    let c = -40.0 + (p as f64 + 0.5 * (xi + 1.0)) * h;
                    let v = 0.5 * h * wi * (lg(c) + 30.0).exp();
                    z += v;
                    m += v * (a * c).exp();
                }
            }
            (z.ln() - 30.0 - 0.5 * (2.0 * PI).ln(), m / z)
        };
        for &(a, r) in &[(0.0, 5.0), (0.28, 39.0), (0.4, 10.0), (0.6, 200.0)] {
            let zc = ZeroModeConditional::new(a, r);
            let (lz, me) = direct(a, r);
            assert!(
                (zc.log_z - lz).abs() < 1e-8,
                "a={a} r={r}: {} vs {lz}",
                zc.log_z
            );
            assert!((zc.mean_exp - me).abs() < 1e-8 * me.max(1.0), "a={a} r={r}");
        }
    }

    #[test]
    fn quantile_inverts_cdf_at_alpha_zero() {
        let zc = ZeroModeConditional::new(0.0, 1.0);
        assert!(zc.quantile(0.5).abs() < 1e-6);
        assert!((zc.quantile(0.975) - 1.959963984540054).abs() < 1e-4);
    }

    #[test]
    fn systematic_resample_multiplicities() {
        let w = [0.5, 0.25, 0.25];
        let picks = systematic_resample(&w, 8, 0.5);
        let count = |k| picks.iter().filter(|&&i| i == k).count();
        assert_eq!((count(0), count(1), count(2)), (4, 2, 2));
    }
}
