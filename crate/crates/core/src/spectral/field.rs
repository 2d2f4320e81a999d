//! Grids, physical-space fields and Fourier coefficients on the torus `[-pi, pi)^2`.
//!
//! Coefficients use the basis `e_k(x) = exp(i k.x) / (2 pi)`, so that
//! `f = sum_k c(k) e_k` and `c(k) = <f, e_{-k}>`. With this convention the unit
//! field has `c(0) = 2 pi` and Parseval reads `sum |c(k)|^2 = int |f|^2`.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::fft;
use crate::error::{Error, Result};

/// Default tolerance on the Hermitian defect accepted by [`from_spectral`].
pub const HERMITIAN_TOLERANCE: f64 = 1e-8;

/// Uniform `m x m` grid on the torus. Node `(j1, j2)` sits at `x = (-pi + j1 h, -pi + j2 h)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct TorusGrid {
    m: usize,
}

impl TryFrom<usize> for TorusGrid {
    type Error = Error;
    fn try_from(m: usize) -> Result<Self> {
        TorusGrid::new(m)
    }
}

impl From<TorusGrid> for usize {
    fn from(g: TorusGrid) -> usize {
        g.m
    }
}

impl TorusGrid {
    pub fn new(m: usize) -> Result<Self> {
        if m < 8 || !m.is_power_of_two() {
            return Err(Error::InvalidGrid(m));
        }
        Ok(TorusGrid { m })
    }

    /// Points per dimension.
    #[inline]
    pub fn size(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.m * self.m
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.m as f64
    }

    /// Riemann weight of one node, `h^2`.
    #[inline]
    pub fn cell_area(&self) -> f64 {
        let h = self.spacing();
        h * h
    }

    #[inline]
    pub fn nyquist(&self) -> usize {
        self.m / 2
    }

    pub fn node(&self, j1: usize, j2: usize) -> [f64; 2] {
        let h = self.spacing();
        [-PI + j1 as f64 * h, -PI + j2 as f64 * h]
    }

    /// Signed mode number of an FFT index: `[0, m/2) -> k`, `[m/2, m) -> k - m`.
    #[inline]
    pub fn mode_of_index(&self, i: usize) -> i64 {
        let m = self.m as i64;
        let i = i as i64;
        if i < m / 2 {
            i
        } else {
            i - m
        }
    }

    #[inline]
    pub fn index_of_mode(&self, k: i64) -> usize {
        k.rem_euclid(self.m as i64) as usize
    }

    /// Flat storage index of mode `k`.
    #[inline]
    pub fn flat_index(&self, k: [i64; 2]) -> usize {
        self.index_of_mode(k[0]) * self.m + self.index_of_mode(k[1])
    }

    /// Signed mode of a flat storage index.
    #[inline]
    pub fn mode_at(&self, flat: usize) -> [i64; 2] {
        [
            self.mode_of_index(flat / self.m),
            self.mode_of_index(flat % self.m),
        ]
    }

    /// `|k|^2` for every storage index.
    pub fn mode_norms_sq(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| {
                let [k1, k2] = self.mode_at(i);
                (k1 * k1 + k2 * k2) as f64
            })
            .collect()
    }

    /// True when neither component sits on the unpaired row `-m/2`.
    #[inline]
    pub fn is_resolved(&self, k: [i64; 2]) -> bool {
        let half = (self.m / 2) as i64;
        k[0].abs() < half && k[1].abs() < half
    }

    /// Modes of the positive half lattice `{k1 > 0} U {k1 = 0, k2 > 0}` strictly below Nyquist,
    /// in the fixed order used by every sampler.
    pub fn half_lattice(&self) -> impl Iterator<Item = [i64; 2]> + '_ {
        let top = (self.m / 2) as i64 - 1;
        let axis = (1..=top).map(|k2| [0, k2]);
        let rest = (1..=top).flat_map(move |k1| (-top..=top).map(move |k2| [k1, k2]));
        axis.chain(rest)
    }

    /// Largest Littlewood-Paley block index used on this grid, `log2(m/2)`.
    ///
    /// With this choice `sum_{j <= j_max}` reconstructs every grid mode, including the corners
    /// of the mode square.
    pub fn j_max(&self) -> i32 {
        (self.m / 2).trailing_zeros() as i32
    }
}

/// Real field sampled at the grid nodes, row-major in `(j1, j2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TorusField {
    grid: TorusGrid,
    values: Vec<f64>,
}

impl TorusField {
    pub fn new(grid: TorusGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite field value {bad}"
            )));
        }
        Ok(TorusField { grid, values })
    }

    pub(crate) fn from_vec_unchecked(grid: TorusGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        TorusField { grid, values }
    }

    pub fn zeros(grid: TorusGrid) -> Self {
        TorusField {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: TorusGrid, c: f64) -> Self {
        TorusField {
            grid,
            values: vec![c; grid.len()],
        }
    }

    /// Samples `f` at every node.
    pub fn from_fn(grid: TorusGrid, f: impl Fn([f64; 2]) -> f64) -> Self {
        let m = grid.size();
        let values = (0..grid.len())
            .map(|i| f(grid.node(i / m, i % m)))
            .collect();
        TorusField { grid, values }
    }

    #[inline]
    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn at(&self, j1: usize, j2: usize) -> f64 {
        self.values[j1 * self.grid.size() + j2]
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// Riemann sum `h^2 sum f(x_j)`.
    pub fn integral(&self) -> f64 {
        self.grid.cell_area() * self.values.iter().sum::<f64>()
    }

    /// Riemann pairing `h^2 sum f g`.
    pub fn pairing(&self, other: &TorusField) -> f64 {
        debug_assert_eq!(self.grid, other.grid);
        self.grid.cell_area()
            * self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .sum::<f64>()
    }

    /// Grid `L^p` norm (Riemann sum with weight `h^2`); `p = inf` gives the grid maximum.
    pub fn lp_norm(&self, p: f64) -> f64 {
        lp_norm(&self.values, self.grid.cell_area(), p)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> TorusField {
        TorusField {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &TorusField, f: impl Fn(f64, f64) -> f64) -> TorusField {
        debug_assert_eq!(self.grid, other.grid);
        TorusField {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn scaled(&self, c: f64) -> TorusField {
        self.map(|v| c * v)
    }
}

pub(crate) fn lp_norm(values: &[f64], weight: f64, p: f64) -> f64 {
    if p.is_infinite() {
        values.iter().fold(0.0, |a, v| a.max(v.abs()))
    } else if p == 1.0 {
        weight * values.iter().map(|v| v.abs()).sum::<f64>()
    } else if p == 2.0 {
        (weight * values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    } else {
        (weight * values.iter().map(|v| v.abs().powf(p)).sum::<f64>()).powf(1.0 / p)
    }
}

/// Fourier coefficients `c(k)`, stored in FFT order (index `k mod m` per axis).
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralCoeffs {
    grid: TorusGrid,
    coeffs: Vec<Complex64>,
}

impl SpectralCoeffs {
    pub fn zeros(grid: TorusGrid) -> Self {
        SpectralCoeffs {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub(crate) fn from_vec(grid: TorusGrid, coeffs: Vec<Complex64>) -> Self {
        debug_assert_eq!(coeffs.len(), grid.len());
        SpectralCoeffs { grid, coeffs }
    }

    #[inline]
    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    #[inline]
    pub fn get(&self, k: [i64; 2]) -> Complex64 {
        self.coeffs[self.grid.flat_index(k)]
    }

    #[inline]
    pub fn set(&mut self, k: [i64; 2], c: Complex64) {
        let i = self.grid.flat_index(k);
        self.coeffs[i] = c;
    }

    /// Sets `c(k)` and `c(-k) = conj c(k)`; the zero mode keeps only the real part.
    pub fn set_hermitian(&mut self, k: [i64; 2], c: Complex64) {
        if k == [0, 0] {
            self.set(k, Complex64::new(c.re, 0.0));
        } else {
            self.set(k, c);
            self.set([-k[0], -k[1]], c.conj());
        }
    }

    #[inline]
    pub fn as_slice(&self) -> &[Complex64] {
        &self.coeffs
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Multiplies every coefficient by a real per-mode factor given in storage order.
    pub fn scale_by(&mut self, factors: &[f64]) {
        debug_assert_eq!(factors.len(), self.coeffs.len());
        for (c, f) in self.coeffs.iter_mut().zip(factors) {
            *c *= *f;
        }
    }

    pub fn scaled_by(&self, factors: &[f64]) -> SpectralCoeffs {
        let mut out = self.clone();
        out.scale_by(factors);
        out
    }

    /// Largest `|c(-k) - conj c(k)|`.
    pub fn hermitian_defect(&self) -> f64 {
        let m = self.grid.size();
        let mut defect: f64 = 0.0;
        for i1 in 0..m {
            let n1 = (m - i1) % m;
            for i2 in 0..m {
                let n2 = (m - i2) % m;
                let a = self.coeffs[i1 * m + i2];
                let b = self.coeffs[n1 * m + n2];
                defect = defect.max((b - a.conj()).norm());
            }
        }
        defect
    }

    /// `sum_k |c(k)|^2`.
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Sobolev norm `(sum (1+|k|^2)^s |c(k)|^2)^{1/2}`.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        let g = self.grid;
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let [k1, k2] = g.mode_at(i);
                let w = (1.0 + (k1 * k1 + k2 * k2) as f64).powf(s);
                w * c.norm_sqr()
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn add(&self, other: &SpectralCoeffs) -> SpectralCoeffs {
        debug_assert_eq!(self.grid, other.grid);
        SpectralCoeffs {
            grid: self.grid,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &SpectralCoeffs) -> SpectralCoeffs {
        debug_assert_eq!(self.grid, other.grid);
        SpectralCoeffs {
            grid: self.grid,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    /// Pairing with the real orthonormal basis element `e_k` (cosines on the positive half
    /// lattice, sines on the negative one, `1/2pi` at the origin).
    pub fn real_cons_coordinate(&self, k: [i64; 2]) -> f64 {
        let c = self.get(k);
        if k == [0, 0] {
            c.re
        } else if is_positive_half(k) {
            std::f64::consts::SQRT_2 * c.re
        } else {
            -std::f64::consts::SQRT_2 * c.im
        }
    }
}

/// Membership in `Z^2_+ = {k1 > 0} U {k1 = 0, k2 > 0}`.
#[inline]
pub fn is_positive_half(k: [i64; 2]) -> bool {
    k[0] > 0 || (k[0] == 0 && k[1] > 0)
}

/// Real orthonormal basis element `e_k` on the grid.
pub fn real_cons_element(grid: TorusGrid, k: [i64; 2]) -> TorusField {
    let norm = 1.0 / (std::f64::consts::SQRT_2 * PI);
    if k == [0, 0] {
        TorusField::constant(grid, 1.0 / (2.0 * PI))
    } else if is_positive_half(k) {
        TorusField::from_fn(grid, |x| {
            norm * (k[0] as f64 * x[0] + k[1] as f64 * x[1]).cos()
        })
    } else {
        TorusField::from_fn(grid, |x| {
            norm * (k[0] as f64 * x[0] + k[1] as f64 * x[1]).sin()
        })
    }
}

#[inline]
fn parity_sign(i1: usize, i2: usize) -> f64 {
    if (i1 + i2).is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// `c(k) = h^2 sum_j f(x_j) conj(e_k(x_j))`.
pub fn to_spectral(f: &TorusField) -> SpectralCoeffs {
    let grid = f.grid();
    let m = grid.size();
    let mut data: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft::forward(&mut data, m);
    // x_j = -pi + j h, so exp(-i k.x_j) = (-1)^{k1+k2} exp(-2 pi i k.j / m).
    let scale = grid.cell_area() / (2.0 * PI);
    for i1 in 0..m {
        for i2 in 0..m {
            data[i1 * m + i2] *= scale * parity_sign(i1, i2);
        }
    }
    SpectralCoeffs::from_vec(grid, data)
}

/// Inverse of [`to_spectral`]. Rejects coefficients whose Hermitian defect exceeds
/// [`HERMITIAN_TOLERANCE`] relative to the largest coefficient.
pub fn from_spectral(c: &SpectralCoeffs) -> Result<TorusField> {
    let scale = c.as_slice().iter().fold(1.0f64, |a, z| a.max(z.norm()));
    let defect = c.hermitian_defect();
    let tolerance = HERMITIAN_TOLERANCE * scale;
    if defect > tolerance {
        return Err(Error::SymmetryViolation { defect, tolerance });
    }
    Ok(from_spectral_unchecked(c))
}

/// Inverse transform without the symmetry check; the imaginary part is dropped.
pub(crate) fn from_spectral_unchecked(c: &SpectralCoeffs) -> TorusField {
    let grid = c.grid();
    let m = grid.size();
    let mut data = c.as_slice().to_vec();
    for i1 in 0..m {
        for i2 in 0..m {
            data[i1 * m + i2] *= parity_sign(i1, i2);
        }
    }
    fft::inverse(&mut data, m);
    let scale = 1.0 / (2.0 * PI);
    TorusField::from_vec_unchecked(grid, data.iter().map(|z| z.re * scale).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(m: usize) -> TorusGrid {
        TorusGrid::new(m).unwrap()
    }

    #[test]
    fn grid_rejects_bad_sizes() {
        assert!(TorusGrid::new(4).is_err());
        assert!(TorusGrid::new(24).is_err());
        assert!(TorusGrid::new(16).is_ok());
    }

    #[test]
    fn node_positions() {
        let g = grid(16);
        assert_eq!(g.node(0, 0), [-PI, -PI]);
        let x = g.node(8, 4);
        assert!((x[0] - 0.0).abs() < 1e-15);
        assert!((x[1] + PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn constant_field_has_only_zero_mode() {
        let g = grid(16);
        let c = to_spectral(&TorusField::constant(g, 1.0));
        assert!((c.get([0, 0]) - Complex64::new(2.0 * PI, 0.0)).norm() < 1e-12);
        let rest = c
            .as_slice()
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != 0)
            .fold(0.0f64, |a, (_, z)| a.max(z.norm()));
        assert!(rest < 1e-12);
    }

    #[test]
    fn cosine_mode_coefficients() {
        let g = grid(16);
        let f = TorusField::from_fn(g, |x| x[0].cos());
        let c = to_spectral(&f);
        assert!((c.get([1, 0]) - Complex64::new(PI, 0.0)).norm() < 1e-12);
        assert!((c.get([-1, 0]) - Complex64::new(PI, 0.0)).norm() < 1e-12);
        assert!((c.energy() - 2.0 * PI * PI).abs() < 1e-10);
    }

    #[test]
    fn inverse_examples() {
        let g = grid(8);
        let mut c = SpectralCoeffs::zeros(g);
        c.set([0, 0], Complex64::new(2.0 * PI, 0.0));
        let f = from_spectral(&c).unwrap();
        assert!(f.values().iter().all(|v| (v - 1.0).abs() < 1e-14));

        let mut c = SpectralCoeffs::zeros(g);
        c.set_hermitian([1, 0], Complex64::new(PI, 0.0));
        let f = from_spectral(&c).unwrap();
        let want = TorusField::from_fn(g, |x| x[0].cos());
        for (a, b) in f.values().iter().zip(want.values()) {
            assert!((a - b).abs() < 1e-14);
        }

        let f = from_spectral(&SpectralCoeffs::zeros(g)).unwrap();
        assert!(f.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn asymmetric_coefficients_are_rejected() {
        let g = grid(8);
        let mut c = SpectralCoeffs::zeros(g);
        c.set([1, 2], Complex64::new(1.0, 0.5));
        assert!(matches!(
            from_spectral(&c),
            Err(Error::SymmetryViolation { .. })
        ));
    }

    #[test]
    fn real_cons_coordinates_match_riemann_pairings() {
        let g = grid(16);
        let f = TorusField::from_fn(g, |x| (2.0 * x[0] - x[1]).sin() + 0.3 * (x[1]).cos() + 0.7);
        let c = to_spectral(&f);
        for k in [[0, 0], [2, -1], [-2, 1], [0, 1], [0, -1], [1, 1]] {
            let e = real_cons_element(g, k);
            assert!(
                (c.real_cons_coordinate(k) - f.pairing(&e)).abs() < 1e-12,
                "{k:?}"
            );
        }
    }

    #[test]
    fn half_lattice_covers_each_pair_once() {
        let g = grid(8);
        let modes: Vec<_> = g.half_lattice().collect();
        assert_eq!(modes.len(), (7 * 7 - 1) / 2);
        for k in &modes {
            assert!(is_positive_half(*k));
            assert!(!modes.contains(&[-k[0], -k[1]]));
        }
    }
}
