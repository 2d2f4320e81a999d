//! Renormalized Wick exponentials `exp(alpha P_N phi - alpha^2 C_N / 2)` (Gaussian
//! multiplicative chaos at level `N`) and Monte Carlo estimators built on them.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gff::sample_gff;
use crate::multiplier::{MultiplierKind, MultiplierMask, MultiplierSpec, RenormConstant};
use crate::rng::{Purpose, RngStream};
use crate::spectral::{besov_norm, to_spectral, SpectralCoeffs, TorusField, TorusGrid};
use crate::stats::{bootstrap, fit_line, mean, quantile, stderr, Estimate};

/// Exponents above this are clamped before `exp`.
pub const DEFAULT_CLAMP: f64 = 700.0;

/// `|alpha| < sqrt(4 pi)`: square-integrable chaos.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    L2,
    L1,
}

/// Charge `alpha` with the integrability exponent `p` and Besov regularity `beta` used for it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChargeParams {
    pub alpha: f64,
    pub p: f64,
    pub beta: f64,
}

impl ChargeParams {
    pub fn new(alpha: f64, p: f64, beta: f64) -> Result<Self> {
        let a2 = alpha * alpha;
        if !(a2 < 8.0 * PI) {
            return Err(Error::InvalidCharge(format!(
                "alpha^2 = {a2} must be < 8 pi"
            )));
        }
        let p_max = if a2 == 0.0 {
            2.0
        } else {
            (8.0 * PI / a2).min(2.0)
        };
        if !(p > 1.0 && p < p_max) {
            return Err(Error::InvalidCharge(format!(
                "p = {p} must lie in (1, {p_max})"
            )));
        }
        let lo = a2 * (p - 1.0) / (4.0 * PI);
        let hi = 2.0 * (p - 1.0) / p;
        if !(beta > lo && beta < hi) {
            return Err(Error::InvalidCharge(format!(
                "beta = {beta} must lie in ({lo}, {hi})"
            )));
        }
        Ok(ChargeParams { alpha, p, beta })
    }

    /// Midpoint choices of `p` and `beta` for a given charge.
    pub fn with_alpha(alpha: f64) -> Result<Self> {
        let a2 = alpha * alpha;
        if !(a2 < 8.0 * PI) {
            return Err(Error::InvalidCharge(format!(
                "alpha^2 = {a2} must be < 8 pi"
            )));
        }
        let p_max = if a2 == 0.0 {
            2.0
        } else {
            (8.0 * PI / a2).min(2.0)
        };
        let p = 0.5 * (1.0 + p_max);
        let lo = a2 * (p - 1.0) / (4.0 * PI);
        let hi = 2.0 * (p - 1.0) / p;
        Self::new(alpha, p, 0.5 * (lo + hi))
    }

    /// Charge given as `alpha^2 / pi`, positive root.
    pub fn from_alpha_sq_over_pi(r: f64) -> Result<Self> {
        Self::with_alpha((r * PI).sqrt())
    }

    pub fn alpha_sq(&self) -> f64 {
        self.alpha * self.alpha
    }

    pub fn regime(&self) -> Regime {
        if self.alpha_sq() < 4.0 * PI {
            Regime::L2
        } else {
            Regime::L1
        }
    }

    /// Sobolev index `s = beta p / 2 + 2 (1 - p / 2)` for the `H^{-s}` bound.
    pub fn sobolev_index(&self) -> f64 {
        self.beta * self.p / 2.0 + 2.0 * (1.0 - self.p / 2.0)
    }
}

/// Multifractal exponent `xi(p) = 2p - alpha^2 p (p - 1) / (4 pi)`.
pub fn xi_exponent(alpha: f64, p: f64) -> f64 {
    2.0 * p - alpha * alpha * p * (p - 1.0) / (4.0 * PI)
}

/// `C_N` as used for Wick exponentials on a grid: the full lattice sum for compactly supported
/// kinds, the sum over resolved grid modes otherwise (so that `C_N` is exactly the variance of
/// the simulated `P_N phi`).
pub fn wick_renorm_constant(
    spec: &MultiplierSpec,
    n: u32,
    grid: TorusGrid,
) -> Result<RenormConstant> {
    match spec.kind {
        MultiplierKind::CircleAverage => spec.renorm_constant_on_grid(n, grid),
        _ => {
            spec.check_level(grid, n)?;
            spec.renorm_constant(n, 4 * (1i64 << n))
        }
    }
}

/// A level-`N` Wick exponential sampled on the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct WickSample {
    pub params: ChargeParams,
    pub n_level: u32,
    pub renorm: RenormConstant,
    pub density: TorusField,
    pub total_mass: f64,
    /// Nodes where the exponent was clamped.
    pub clamp_events: usize,
}

impl WickSample {
    /// `int f M_N` by the grid Riemann sum.
    pub fn pair(&self, f: &TorusField) -> f64 {
        self.density.pairing(f)
    }
}

/// Reusable mask and constant for building Wick exponentials at one level.
#[derive(Clone, Debug)]
pub struct WickBuilder {
    mask: MultiplierMask,
    renorm: RenormConstant,
    params: ChargeParams,
    clamp: f64,
}

impl WickBuilder {
    pub fn new(
        spec: &MultiplierSpec,
        n: u32,
        grid: TorusGrid,
        params: ChargeParams,
    ) -> Result<Self> {
        Ok(WickBuilder {
            mask: spec.mask(grid, n)?,
            renorm: wick_renorm_constant(spec, n, grid)?,
            params,
            clamp: DEFAULT_CLAMP,
        })
    }

    pub fn with_clamp(mut self, clamp: f64) -> Self {
        self.clamp = clamp;
        self
    }

    pub fn mask(&self) -> &MultiplierMask {
        &self.mask
    }

    pub fn renorm(&self) -> RenormConstant {
        self.renorm
    }

    pub fn params(&self) -> ChargeParams {
        self.params
    }

    /// `P_N phi` on the grid.
    pub fn smoothed(&self, phi: &SpectralCoeffs) -> TorusField {
        self.mask.apply_to_physical(phi)
    }

    pub fn build(&self, phi: &SpectralCoeffs) -> WickSample {
        self.build_from_smoothed(&self.smoothed(phi))
    }

    /// Wick exponential of an already smoothed field `P_N phi`.
    pub fn build_from_smoothed(&self, smoothed: &TorusField) -> WickSample {
        let a = self.params.alpha;
        let shift = 0.5 * a * a * self.renorm.value;
        let clamp = self.clamp;
        let density = if a == 0.0 {
            TorusField::constant(smoothed.grid(), 1.0)
        } else {
            smoothed.map(|v| (a * v - shift).min(clamp).exp())
        };
        let clamp_events = smoothed
            .values()
            .iter()
            .filter(|&&v| a * v - shift > clamp)
            .count();
        let total_mass = density.integral();
        WickSample {
            params: self.params,
            n_level: self.mask.level(),
            renorm: self.renorm,
            density,
            total_mass,
            clamp_events,
        }
    }
}

/// `exp(alpha (P_n phi)(x) - alpha^2 C_n / 2)` at every node.
pub fn wick_exponential(
    phi: &SpectralCoeffs,
    spec: &MultiplierSpec,
    n: u32,
    params: ChargeParams,
) -> Result<WickSample> {
    Ok(WickBuilder::new(spec, n, phi.grid(), params)?.build(phi))
}

/// Distance on the torus `[-pi, pi)^2`.
pub fn torus_distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    let tau = 2.0 * PI;
    let d = |x: f64, y: f64| {
        let r = (x - y).rem_euclid(tau);
        r.min(tau - r)
    };
    d(a[0], b[0]).hypot(d(a[1], b[1]))
}

/// Riemann sum of the density over nodes within torus distance `radius` of `center`.
pub fn ball_mass(w: &WickSample, center: [f64; 2], radius: f64) -> Result<f64> {
    field_ball_integral(&w.density, center, radius)
}

pub(crate) fn field_ball_integral(f: &TorusField, center: [f64; 2], radius: f64) -> Result<f64> {
    if !(radius > 0.0) {
        return Err(Error::NonpositiveRadius(radius));
    }
    let grid = f.grid();
    let m = grid.size();
    let h = grid.spacing();
    if radius >= PI * std::f64::consts::SQRT_2 {
        return Ok(f.integral());
    }
    let r2 = radius * radius;
    // node offsets relative to the center, scanned over a wrapped bounding box
    let reach = ((radius / h).ceil() as i64 + 1).min(m as i64 / 2);
    let base1 = ((center[0] + PI) / h).round() as i64;
    let base2 = ((center[1] + PI) / h).round() as i64;
    let tau = 2.0 * PI;
    let wrap = |d: f64| (d + PI).rem_euclid(tau) - PI;
    let span: Vec<i64> = if 2 * reach + 1 >= m as i64 {
        (0..m as i64).collect()
    } else {
        (-reach..=reach).collect()
    };
    let full = span.len() == m;
    let mut sum = 0.0;
    for &o1 in &span {
        let j1 = if full { o1 } else { base1 + o1 }.rem_euclid(m as i64) as usize;
        let d1 = wrap(-PI + j1 as f64 * h - center[0]);
        if d1 * d1 > r2 {
            continue;
        }
        for &o2 in &span {
            let j2 = if full { o2 } else { base2 + o2 }.rem_euclid(m as i64) as usize;
            let d2 = wrap(-PI + j2 as f64 * h - center[1]);
            if d1 * d1 + d2 * d2 <= r2 {
                sum += f.at(j1, j2);
            }
        }
    }
    Ok(sum * grid.cell_area())
}

/// `exp(-total_mass)`, the unnormalized density of `mu_N^(alpha)` against `mu_0`.
pub fn exp_measure_weight(w: &WickSample) -> f64 {
    (-w.total_mass).exp()
}

/// Fraction of nodes where `P_n phi > alpha (1 + delta) C_n`.
pub fn thick_point_fraction(
    phi: &SpectralCoeffs,
    spec: &MultiplierSpec,
    n: u32,
    params: ChargeParams,
    delta: f64,
) -> Result<f64> {
    let builder = WickBuilder::new(spec, n, phi.grid(), params)?;
    let level = params.alpha * (1.0 + delta) * builder.renorm().value;
    let smoothed = builder.smoothed(phi);
    let count = smoothed.values().iter().filter(|&&v| v > level).count();
    Ok(count as f64 / smoothed.values().len() as f64)
}

/// Settings shared by the ensemble estimators.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub grid: TorusGrid,
    pub ensemble: usize,
    pub seed: u64,
    pub bootstrap: usize,
}

/// GFF draw for replicate `i`.
pub fn replicate_gff(grid: TorusGrid, seed: u64, i: usize) -> SpectralCoeffs {
    let mut rng = RngStream::for_purpose(seed, Purpose::Gff, i as u64);
    sample_gff(grid, &mut rng).into_spectral()
}

/// Node-wise Wick mean check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WickMeanCheck {
    /// Node-averaged density, `total_mass / (4 pi^2)`, over the ensemble.
    pub pooled: Estimate,
    /// Fraction of nodes whose own mean is more than 3 standard errors from 1.
    pub nodes_outside_3se: f64,
    pub max_abs_node_z: f64,
    pub clamp_events: usize,
}

pub fn wick_mean_check(
    spec: &MultiplierSpec,
    n: u32,
    params: ChargeParams,
    ens: &EnsembleSpec,
) -> Result<WickMeanCheck> {
    let builder = WickBuilder::new(spec, n, ens.grid, params)?;
    let len = ens.grid.len();
    let chunk = 64usize;
    let chunks = ens.ensemble.div_ceil(chunk);
    // per-chunk node sums, merged in chunk order
    type Acc = (Vec<f64>, Vec<f64>, Vec<f64>, usize);
    let parts: Vec<Acc> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut s = vec![0.0; len];
            let mut s2 = vec![0.0; len];
            let mut masses = Vec::new();
            let mut clamps = 0;
            for i in (c * chunk)..((c + 1) * chunk).min(ens.ensemble) {
                let w = builder.build(&replicate_gff(ens.grid, ens.seed, i));
                for (j, v) in w.density.values().iter().enumerate() {
                    s[j] += v;
                    s2[j] += v * v;
                }
                masses.push(w.total_mass / (4.0 * PI * PI));
                clamps += w.clamp_events;
            }
            (s, s2, masses, clamps)
        })
        .collect();
    let mut s = vec![0.0; len];
    let mut s2 = vec![0.0; len];
    let mut masses = Vec::with_capacity(ens.ensemble);
    let mut clamp_events = 0;
    for (a, b, m, c) in parts {
        for j in 0..len {
            s[j] += a[j];
            s2[j] += b[j];
        }
        masses.extend(m);
        clamp_events += c;
    }
    let k = ens.ensemble as f64;
    let mut outside = 0usize;
    let mut max_z: f64 = 0.0;
    for j in 0..len {
        let mu = s[j] / k;
        let var = (s2[j] - k * mu * mu) / (k - 1.0);
        let z = (mu - 1.0) / (var / k).sqrt();
        if z.abs() > 3.0 {
            outside += 1;
        }
        max_z = max_z.max(z.abs());
    }
    Ok(WickMeanCheck {
        pooled: Estimate::of(&masses),
        nodes_outside_3se: outside as f64 / len as f64,
        max_abs_node_z: max_z,
        clamp_events,
    })
}

/// Result of a log-log regression with bootstrap error bars.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub stderr: f64,
    pub ci95: [f64; 2],
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

/// Regress `log E[ball_mass(lambda / 2)^p]` on `log lambda`.
#[allow(clippy::too_many_arguments)]
pub fn scaling_exponent_estimate(
    spec: &MultiplierSpec,
    n: u32,
    params: ChargeParams,
    p_moment: f64,
    radii: &[f64],
    centers_per_sample: usize,
    ens: &EnsembleSpec,
) -> Result<SlopeFit> {
    if radii.len() < 3 {
        return Err(Error::DegenerateRegression(radii.len()));
    }
    if !(1.0..=2.0).contains(&p_moment) {
        return Err(Error::InvalidArgument(format!(
            "moment {p_moment} outside [1, 2]"
        )));
    }
    let lmin = radii.iter().cloned().fold(f64::INFINITY, f64::min);
    if f64::powi(2.0, -(n as i32)) > lmin / 4.0 {
        return Err(Error::InvalidArgument(format!(
            "cutoff scale 2^-{n} exceeds a quarter of the smallest radius {lmin}"
        )));
    }
    let builder = WickBuilder::new(spec, n, ens.grid, params)?;
    // rows[i][r] = mean over centers of ball_mass^p
    let rows: Vec<Vec<f64>> = (0..ens.ensemble)
        .into_par_iter()
        .map(|i| {
            let w = builder.build(&replicate_gff(ens.grid, ens.seed, i));
            let mut crng = RngStream::for_purpose(ens.seed, Purpose::Centers, i as u64);
            let centers: Vec<[f64; 2]> = (0..centers_per_sample)
                .map(|_| {
                    [
                        PI * (2.0 * crng.uniform() - 1.0),
                        PI * (2.0 * crng.uniform() - 1.0),
                    ]
                })
                .collect();
            radii
                .iter()
                .map(|&lam| {
                    let s: f64 = centers
                        .iter()
                        .map(|&c| ball_mass(&w, c, lam / 2.0).map(|m| m.powf(p_moment)))
                        .sum::<Result<f64>>()?;
                    Ok(s / centers_per_sample as f64)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let xs: Vec<f64> = radii.iter().map(|l| l.ln()).collect();
    let slope_of = |rows: &[&Vec<f64>]| -> f64 {
        let ys: Vec<f64> = (0..radii.len())
            .map(|r| (rows.iter().map(|row| row[r]).sum::<f64>() / rows.len() as f64).ln())
            .collect();
        fit_line(&xs, &ys).map(|f| f.slope).unwrap_or(f64::NAN)
    };
    let all: Vec<&Vec<f64>> = rows.iter().collect();
    let ys: Vec<f64> = (0..radii.len())
        .map(|r| (rows.iter().map(|row| row[r]).sum::<f64>() / rows.len() as f64).ln())
        .collect();
    let slope = slope_of(&all);
    let mut brng = RngStream::for_purpose(ens.seed, Purpose::Bootstrap, 0);
    let boot = bootstrap(&rows, ens.bootstrap, &mut brng, |s| slope_of(s));
    Ok(SlopeFit {
        slope,
        stderr: stderr_of_sample(&boot),
        ci95: [quantile(&boot, 0.025), quantile(&boot, 0.975)],
        xs,
        ys,
    })
}

fn stderr_of_sample(xs: &[f64]) -> f64 {
    crate::stats::variance(xs).sqrt()
}

/// Coupled level differences `E |<f, M_{N+1} - M_N>|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CauchyDecay {
    pub levels: Vec<u32>,
    pub mean_abs_diff: Vec<Estimate>,
    /// Log2-slope of the means against `N`.
    pub fit: SlopeFit,
    pub clamp_events: usize,
}

pub fn cauchy_decay_estimate(
    spec: &MultiplierSpec,
    params: ChargeParams,
    f: &TorusField,
    levels: &[u32],
    ens: &EnsembleSpec,
) -> Result<CauchyDecay> {
    if levels.len() < 2 {
        return Err(Error::DegenerateRegression(levels.len()));
    }
    let builders: Vec<(WickBuilder, WickBuilder)> = levels
        .iter()
        .map(|&n| {
            Ok((
                WickBuilder::new(spec, n, ens.grid, params)?,
                WickBuilder::new(spec, n + 1, ens.grid, params)?,
            ))
        })
        .collect::<Result<_>>()?;
    let rows: Vec<(Vec<f64>, usize)> = (0..ens.ensemble)
        .into_par_iter()
        .map(|i| {
            let phi = replicate_gff(ens.grid, ens.seed, i);
            let mut clamps = 0;
            let row = builders
                .iter()
                .map(|(a, b)| {
                    let wa = a.build(&phi);
                    let wb = b.build(&phi);
                    clamps += wa.clamp_events + wb.clamp_events;
                    (wb.pair(f) - wa.pair(f)).abs()
                })
                .collect();
            (row, clamps)
        })
        .collect();
    let clamp_events = rows.iter().map(|r| r.1).sum();
    let rows: Vec<Vec<f64>> = rows.into_iter().map(|r| r.0).collect();
    let mean_abs_diff = (0..levels.len())
        .map(|l| Estimate::of(&rows.iter().map(|r| r[l]).collect::<Vec<_>>()))
        .collect();
    let fit = log2_slope_fit(levels, &rows, ens)?;
    Ok(CauchyDecay {
        levels: levels.to_vec(),
        mean_abs_diff,
        fit,
        clamp_events,
    })
}

/// Regress `log2` of column means on the level index, with bootstrap over rows.
pub fn log2_slope_fit(levels: &[u32], rows: &[Vec<f64>], ens: &EnsembleSpec) -> Result<SlopeFit> {
    let xs: Vec<f64> = levels.iter().map(|&n| n as f64).collect();
    let ys_of = |rows: &[&Vec<f64>]| -> Vec<f64> {
        (0..levels.len())
            .map(|l| (rows.iter().map(|r| r[l]).sum::<f64>() / rows.len() as f64).log2())
            .collect()
    };
    let all: Vec<&Vec<f64>> = rows.iter().collect();
    let ys = ys_of(&all);
    let slope = fit_line(&xs, &ys)?.slope;
    let mut brng = RngStream::for_purpose(ens.seed, Purpose::Bootstrap, 1);
    let boot = bootstrap(rows, ens.bootstrap, &mut brng, |s| {
        fit_line(&xs, &ys_of(s))
            .map(|f| f.slope)
            .unwrap_or(f64::NAN)
    });
    Ok(SlopeFit {
        slope,
        stderr: stderr_of_sample(&boot),
        ci95: [quantile(&boot, 0.025), quantile(&boot, 0.975)],
        xs,
        ys,
    })
}

/// Per-level Besov and Sobolev norms of `M_N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesovLevel {
    pub n: u32,
    /// `E ||M_N||^p_{B^{-beta}_{p,p}}`.
    pub besov_p: Estimate,
    /// `E ||M_N||^2_{H^{-s}}`.
    pub sobolev_sq: Estimate,
    /// `E [||M_N||^2_{H^{-s}} exp(-total_mass)]`.
    pub weighted_sobolev_sq: Estimate,
    /// `E (total_mass)^p`.
    pub mass_p: Estimate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesovBound {
    pub levels: Vec<BesovLevel>,
    pub sobolev_index: f64,
}

impl BesovBound {
    /// Last value at most twice the median of the sequence.
    pub fn nondiverging(values: &[f64]) -> bool {
        let last = *values.last().expect("nonempty");
        last <= 2.0 * crate::stats::median(values)
    }
}

pub fn besov_bound_estimate(
    spec: &MultiplierSpec,
    params: ChargeParams,
    levels: &[u32],
    ens: &EnsembleSpec,
) -> Result<BesovBound> {
    let s = params.sobolev_index();
    let builders: Vec<WickBuilder> = levels
        .iter()
        .map(|&n| WickBuilder::new(spec, n, ens.grid, params))
        .collect::<Result<_>>()?;
    let rows: Vec<Vec<[f64; 4]>> = (0..ens.ensemble)
        .into_par_iter()
        .map(|i| {
            let phi = replicate_gff(ens.grid, ens.seed, i);
            builders
                .iter()
                .map(|b| {
                    let w = b.build(&phi);
                    let bes = besov_norm(&w.density, -params.beta, params.p, params.p).value;
                    let sob = to_spectral(&w.density).sobolev_norm(-s);
                    [
                        bes.powf(params.p),
                        sob * sob,
                        sob * sob * (-w.total_mass).exp(),
                        w.total_mass.powf(params.p),
                    ]
                })
                .collect()
        })
        .collect();
    let col = |l: usize, c: usize| -> Estimate {
        Estimate::of(&rows.iter().map(|r| r[l][c]).collect::<Vec<_>>())
    };
    let levels = levels
        .iter()
        .enumerate()
        .map(|(l, &n)| BesovLevel {
            n,
            besov_p: col(l, 0),
            sobolev_sq: col(l, 1),
            weighted_sobolev_sq: col(l, 2),
            mass_p: col(l, 3),
        })
        .collect();
    Ok(BesovBound {
        levels,
        sobolev_index: s,
    })
}

/// Ensemble mean of the thick-point fraction.
pub fn thick_point_mean(
    spec: &MultiplierSpec,
    n: u32,
    params: ChargeParams,
    delta: f64,
    ens: &EnsembleSpec,
) -> Result<Estimate> {
    let fr: Vec<f64> = (0..ens.ensemble)
        .into_par_iter()
        .map(|i| {
            thick_point_fraction(
                &replicate_gff(ens.grid, ens.seed, i),
                spec,
                n,
                params,
                delta,
            )
        })
        .collect::<Result<_>>()?;
    Ok(Estimate::of(&fr))
}

/// Monte Carlo estimate of `Z_N = E exp(-total_mass)`.
pub fn partition_function_estimate(
    spec: &MultiplierSpec,
    n: u32,
    params: ChargeParams,
    ens: &EnsembleSpec,
) -> Result<Estimate> {
    let builder = WickBuilder::new(spec, n, ens.grid, params)?;
    let w: Vec<f64> = (0..ens.ensemble)
        .into_par_iter()
        .map(|i| exp_measure_weight(&builder.build(&replicate_gff(ens.grid, ens.seed, i))))
        .collect();
    Ok(Estimate {
        mean: mean(&w),
        stderr: stderr(&w),
        n: w.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(m: usize) -> TorusGrid {
        TorusGrid::new(m).unwrap()
    }

    #[test]
    fn charge_constraints() {
        assert!(ChargeParams::new(1.0, 1.5, 0.1).is_ok());
        assert!(ChargeParams::new(6.0, 1.5, 0.1).is_err());
        assert!(ChargeParams::new(1.0, 2.0, 0.1).is_err());
        assert!(ChargeParams::new(1.0, 1.5, 0.7).is_err());
        let c = ChargeParams::from_alpha_sq_over_pi(5.0).unwrap();
        assert_eq!(c.regime(), Regime::L1);
        assert_eq!(
            ChargeParams::from_alpha_sq_over_pi(1.0).unwrap().regime(),
            Regime::L2
        );
        let z = ChargeParams::with_alpha(0.0).unwrap();
        assert_eq!((z.p, z.beta), (1.5, 1.0 / 3.0));
    }

    #[test]
    fn xi_examples() {
        assert!((xi_exponent((2.0 * PI).sqrt(), 1.5) - 2.625).abs() < 1e-12);
        assert_eq!(xi_exponent(0.0, 1.3), 2.6);
    }

    #[test]
    fn zero_charge_density_is_one() {
        let g = grid(32);
        let phi = replicate_gff(g, 1, 0);
        let w = wick_exponential(
            &phi,
            &MultiplierSpec::sharp_square(),
            3,
            ChargeParams::with_alpha(0.0).unwrap(),
        )
        .unwrap();
        assert!(w.density.values().iter().all(|&v| v == 1.0));
        assert!((w.total_mass - 4.0 * PI * PI).abs() < 1e-10);
        assert!((exp_measure_weight(&w) - (-4.0 * PI * PI).exp()).abs() < 1e-25);
    }

    #[test]
    fn ball_mass_examples() {
        let g = grid(128);
        let w = wick_exponential(
            &replicate_gff(g, 2, 0),
            &MultiplierSpec::sharp_square(),
            3,
            ChargeParams::with_alpha(0.0).unwrap(),
        )
        .unwrap();
        assert!((ball_mass(&w, [0.3, -1.0], 4.5).unwrap() - w.total_mass).abs() < 1e-9);
        let r = 1.0;
        let a = ball_mass(&w, [0.1, 0.2], r).unwrap();
        let band = 2.0 * PI * r * g.spacing() * 1.5;
        assert!((a - PI * r * r).abs() < band, "{a}");
        assert!(matches!(
            ball_mass(&w, [0.0, 0.0], 0.0),
            Err(Error::NonpositiveRadius(_))
        ));
    }

    #[test]
    fn ball_mass_wraps_around() {
        let g = grid(64);
        let f = TorusField::from_fn(g, |x| 1.0 + x[0].cos());
        let w = WickSample {
            params: ChargeParams::with_alpha(0.0).unwrap(),
            n_level: 0,
            renorm: MultiplierSpec::sharp_square()
                .renorm_constant(0, 4)
                .unwrap(),
            total_mass: f.integral(),
            density: f,
            clamp_events: 0,
        };
        // a ball centered at the seam sees both sides
        let seam = ball_mass(&w, [-PI, 0.0], 0.5).unwrap();
        let inside = ball_mass(&w, [PI - 1e-12, 0.0], 0.5).unwrap();
        assert!((seam - inside).abs() < 1e-12);
    }

    #[test]
    fn disjoint_balls_add() {
        let g = grid(64);
        let phi = replicate_gff(g, 3, 0);
        let w = wick_exponential(
            &phi,
            &MultiplierSpec::smooth_bump(),
            3,
            ChargeParams::from_alpha_sq_over_pi(1.0).unwrap(),
        )
        .unwrap();
        let r = 0.7;
        let a = ball_mass(&w, [-1.0, 0.0], r).unwrap();
        let b = ball_mass(&w, [1.0, 0.0], r).unwrap();
        // union sum by hand: each node counted once since the balls are disjoint
        let mut u = 0.0;
        for j1 in 0..64 {
            for j2 in 0..64 {
                let x = g.node(j1, j2);
                if torus_distance(x, [-1.0, 0.0]) <= r || torus_distance(x, [1.0, 0.0]) <= r {
                    u += w.density.at(j1, j2);
                }
            }
        }
        assert!((a + b - u * g.cell_area()).abs() < 1e-12);
    }

    #[test]
    fn thick_points_at_zero_charge() {
        let g = grid(256);
        let phi = replicate_gff(g, 4, 0);
        let params = ChargeParams::with_alpha(0.0).unwrap();
        let f =
            thick_point_fraction(&phi, &MultiplierSpec::sharp_square(), 5, params, 0.0).unwrap();
        assert!((0.0..=1.0).contains(&f));
    }

    #[test]
    fn clamp_counts_events() {
        let g = grid(16);
        let params = ChargeParams::with_alpha(1.0).unwrap();
        let b = WickBuilder::new(&MultiplierSpec::sharp_square(), 1, g, params)
            .unwrap()
            .with_clamp(0.0);
        let w = b.build_from_smoothed(&TorusField::constant(g, 10.0));
        assert_eq!(w.clamp_events, 256);
        assert!(w.density.values().iter().all(|&v| v == 1.0));
    }
}
