//! Dyadic partition of unity, Littlewood-Paley blocks, Besov/Sobolev norms and the heat semigroup.

use serde::{Deserialize, Serialize};

use super::field::{from_spectral_unchecked, to_spectral, SpectralCoeffs, TorusField, TorusGrid};
use crate::error::{Error, Result};

/// `exp(-1/x)` for `x > 0`, zero otherwise.
#[inline]
pub fn glue(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

/// Smooth monotone step: 1 on `(-inf, a]`, 0 on `[b, inf)`.
#[inline]
pub fn smooth_step_down(t: f64, a: f64, b: f64) -> f64 {
    let up = glue(b - t);
    let down = glue(t - a);
    up / (up + down)
}

/// Radial dyadic partition of unity.
///
/// `chi = 1` on `B(0, 1)` and vanishes off `B(0, 4/3)`; `rho(xi) = chi(xi/2) - chi(xi)` is
/// supported in `{1 <= |xi| <= 8/3}`. The sum `chi + sum_{j=0}^{J} rho(2^-j xi)` telescopes to
/// `chi(2^{-J-1} xi)`, so the partition is exact up to rounding.
#[derive(Clone, Copy, Debug, Default)]
pub struct DyadicPartition;

impl DyadicPartition {
    pub const CHI_INNER: f64 = 1.0;
    pub const CHI_OUTER: f64 = 4.0 / 3.0;

    pub fn chi(&self, r: f64) -> f64 {
        smooth_step_down(r, Self::CHI_INNER, Self::CHI_OUTER)
    }

    pub fn rho(&self, r: f64) -> f64 {
        self.chi(r / 2.0) - self.chi(r)
    }

    /// Weight of block `j` (`j = -1` is `chi`) at radius `r`.
    pub fn block_weight(&self, j: i32, r: f64) -> f64 {
        if j < 0 {
            self.chi(r)
        } else {
            self.rho(r / f64::powi(2.0, j))
        }
    }

    /// Per-mode weights of block `j` in storage order.
    pub fn block_weights(&self, grid: TorusGrid, j: i32) -> Vec<f64> {
        grid.mode_norms_sq()
            .into_iter()
            .map(|k2| self.block_weight(j, k2.sqrt()))
            .collect()
    }
}

/// Littlewood-Paley block `Delta_j f = sum_k rho_j(k) c(k) e_k`.
pub fn lp_block(c: &SpectralCoeffs, j: i32) -> Result<TorusField> {
    let grid = c.grid();
    let j_max = grid.j_max();
    if j > j_max {
        return Err(Error::BlockAboveNyquist { j, j_max });
    }
    if j < -1 {
        return Err(Error::InvalidArgument(format!("block index {j} < -1")));
    }
    let weights = DyadicPartition.block_weights(grid, j);
    Ok(from_spectral_unchecked(&c.scaled_by(&weights)))
}

/// A Besov norm together with the block range it was summed over.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesovNorm {
    pub value: f64,
    /// Blocks `-1..=j_max` were summed; higher blocks are not represented on the grid.
    pub j_max: i32,
}

/// `(sum_j 2^{jsq} ||Delta_j f||_{L^p}^q)^{1/q}`, with the supremum over `j` when `q = inf`.
pub fn besov_norm(f: &TorusField, s: f64, p: f64, q: f64) -> BesovNorm {
    besov_norm_spectral(&to_spectral(f), s, p, q)
}

pub fn besov_norm_spectral(c: &SpectralCoeffs, s: f64, p: f64, q: f64) -> BesovNorm {
    assert!(p >= 1.0 && q >= 1.0, "Besov exponents must be >= 1");
    let grid = c.grid();
    let j_max = grid.j_max();
    let mut acc: f64 = 0.0;
    for j in -1..=j_max {
        let block = lp_block(c, j).expect("j within range");
        let term = f64::powf(2.0, j as f64 * s) * block.lp_norm(p);
        if q.is_infinite() {
            acc = acc.max(term);
        } else {
            acc += term.powf(q);
        }
    }
    let value = if q.is_infinite() {
        acc
    } else {
        acc.powf(1.0 / q)
    };
    BesovNorm { value, j_max }
}

/// `H^s` norm `(sum (1+|k|^2)^s |c(k)|^2)^{1/2}`.
pub fn sobolev_norm(f: &TorusField, s: f64) -> f64 {
    to_spectral(f).sobolev_norm(s)
}

/// Per-mode factors `exp(-t (1+|k|^2) / 2)`.
pub fn heat_factors(grid: TorusGrid, t: f64) -> Vec<f64> {
    grid.mode_norms_sq()
        .into_iter()
        .map(|k2| (-0.5 * t * (1.0 + k2)).exp())
        .collect()
}

/// `exp(t (Delta - 1) / 2) f`.
pub fn heat_semigroup(f: &TorusField, t: f64) -> TorusField {
    assert!(t >= 0.0, "heat semigroup time must be nonnegative");
    if t == 0.0 {
        return f.clone();
    }
    let c = to_spectral(f).scaled_by(&heat_factors(f.grid(), t));
    from_spectral_unchecked(&c)
}

pub fn heat_semigroup_spectral(c: &SpectralCoeffs, t: f64) -> SpectralCoeffs {
    assert!(t >= 0.0, "heat semigroup time must be nonnegative");
    c.scaled_by(&heat_factors(c.grid(), t))
}
