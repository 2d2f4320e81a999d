//! Cutoff multipliers `psi`, the Fourier cut-off operators `P_N f = sum psi(2^-N k) c(k) e_k`,
//! and the renormalization constants `C_N`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{
    besov_norm, from_spectral_unchecked, to_spectral, SpectralCoeffs, TorusField, TorusGrid,
};

/// Quadrature points for the circle-average transform.
const CIRCLE_QUADRATURE_POINTS: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MultiplierKind {
    /// Indicator of `[-1, 1]^2`.
    SharpSquare,
    /// Indicator of the closed unit ball.
    SharpBall,
    /// Compactly supported radial positive-definite bump (Wendland `C^6` function).
    SmoothBump,
    /// Fourier transform of the uniform probability measure on the unit circle, `J_0(|xi|)`.
    CircleAverage,
}

impl MultiplierKind {
    pub const ALL: [MultiplierKind; 4] = [
        MultiplierKind::SharpSquare,
        MultiplierKind::SharpBall,
        MultiplierKind::SmoothBump,
        MultiplierKind::CircleAverage,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            MultiplierKind::SharpSquare => "sharp_square",
            MultiplierKind::SharpBall => "sharp_ball",
            MultiplierKind::SmoothBump => "smooth_bump",
            MultiplierKind::CircleAverage => "circle_average",
        }
    }
}

impl fmt::Display for MultiplierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MultiplierKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        MultiplierKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown multiplier {s:?}")))
    }
}

/// A cutoff family together with its decay/regularity metadata.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiplierSpec {
    pub kind: MultiplierKind,
    /// Decay exponent: `sup |x|^{2+kappa} |psi(x)| < inf`. Negative when the decay
    /// hypothesis fails (circle average decays like `|x|^{-1/2}`).
    pub kappa: f64,
    /// Holder exponent at the origin: `sup |x|^{-zeta} |psi(x) - 1| < inf` near 0.
    pub zeta: f64,
    /// Whether `P_N` is claimed to be positivity preserving and uniformly Besov bounded.
    pub claims_hypothesis_p: bool,
}

impl MultiplierSpec {
    pub fn new(kind: MultiplierKind) -> Self {
        match kind {
            // compact support: any kappa works; 10 is stored as metadata
            MultiplierKind::SharpSquare => MultiplierSpec {
                kind,
                kappa: 10.0,
                zeta: 1.0,
                claims_hypothesis_p: false,
            },
            MultiplierKind::SharpBall => MultiplierSpec {
                kind,
                kappa: 10.0,
                zeta: 1.0,
                claims_hypothesis_p: false,
            },
            MultiplierKind::SmoothBump => MultiplierSpec {
                kind,
                kappa: 10.0,
                zeta: 2.0,
                claims_hypothesis_p: true,
            },
            MultiplierKind::CircleAverage => MultiplierSpec {
                kind,
                kappa: -1.5,
                zeta: 2.0,
                claims_hypothesis_p: false,
            },
        }
    }

    pub fn sharp_square() -> Self {
        Self::new(MultiplierKind::SharpSquare)
    }
    pub fn sharp_ball() -> Self {
        Self::new(MultiplierKind::SharpBall)
    }
    pub fn smooth_bump() -> Self {
        Self::new(MultiplierKind::SmoothBump)
    }
    pub fn circle_average() -> Self {
        Self::new(MultiplierKind::CircleAverage)
    }

    pub fn is_sharp(&self) -> bool {
        matches!(
            self.kind,
            MultiplierKind::SharpSquare | MultiplierKind::SharpBall
        )
    }

    pub fn is_radial(&self) -> bool {
        !matches!(self.kind, MultiplierKind::SharpSquare)
    }

    /// Radius (max norm) of the cube outside which `psi` vanishes, if compactly supported.
    pub fn support_radius(&self) -> Option<f64> {
        match self.kind {
            MultiplierKind::CircleAverage => None,
            _ => Some(1.0),
        }
    }

    /// Radius used by the oversampling rule; decaying multipliers use `8/3`.
    pub fn resolution_radius(&self) -> f64 {
        self.support_radius().unwrap_or(8.0 / 3.0)
    }

    /// `psi(xi)`.
    pub fn evaluate(&self, xi: [f64; 2]) -> f64 {
        match self.kind {
            MultiplierKind::SharpSquare => {
                if xi[0].abs() <= 1.0 && xi[1].abs() <= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            _ => self.evaluate_radial((xi[0] * xi[0] + xi[1] * xi[1]).sqrt()),
        }
    }

    /// `psi` as a function of `|xi|` (radial kinds only).
    pub fn evaluate_radial(&self, r: f64) -> f64 {
        match self.kind {
            MultiplierKind::SharpSquare => self.evaluate([r, 0.0]),
            MultiplierKind::SharpBall => {
                if r <= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            MultiplierKind::SmoothBump => wendland_c6(r),
            MultiplierKind::CircleAverage => circle_average_transform(r),
        }
    }

    /// Oversampling rule: `m >= 4 2^n R`.
    pub fn check_level(&self, grid: TorusGrid, n: u32) -> Result<()> {
        let needed = 4.0 * f64::powi(2.0, n as i32) * self.resolution_radius();
        if (grid.size() as f64) < needed {
            Err(Error::LevelAboveNyquist { n, m: grid.size() })
        } else {
            Ok(())
        }
    }

    /// Largest level allowed on `grid` by the oversampling rule.
    pub fn max_level(&self, grid: TorusGrid) -> Option<u32> {
        (0..31).rev().find(|&n| self.check_level(grid, n).is_ok())
    }

    /// `psi(2^-n k)` on every grid mode.
    pub fn mask(&self, grid: TorusGrid, n: u32) -> Result<MultiplierMask> {
        self.check_level(grid, n)?;
        Ok(self.mask_unchecked(grid, n))
    }

    /// Mask without the oversampling check (used for diagnostics on coarse grids).
    pub fn mask_unchecked(&self, grid: TorusGrid, n: u32) -> MultiplierMask {
        let scale = f64::powi(2.0, -(n as i32));
        let mut cache: HashMap<i64, f64> = HashMap::new();
        let values = (0..grid.len())
            .map(|i| {
                let k = grid.mode_at(i);
                self.lattice_value(k, scale, &mut cache)
            })
            .collect();
        MultiplierMask {
            spec: *self,
            grid,
            n,
            values,
        }
    }

    /// `psi(scale k)` with a cache keyed by `|k|^2` for radial kinds.
    fn lattice_value(&self, k: [i64; 2], scale: f64, cache: &mut HashMap<i64, f64>) -> f64 {
        if !self.is_radial() {
            return self.evaluate([scale * k[0] as f64, scale * k[1] as f64]);
        }
        let k2 = k[0] * k[0] + k[1] * k[1];
        *cache
            .entry(k2)
            .or_insert_with(|| self.evaluate_radial(scale * (k2 as f64).sqrt()))
    }

    /// `P_n f`.
    pub fn apply_pn(&self, n: u32, f: &TorusField) -> Result<TorusField> {
        let mask = self.mask(f.grid(), n)?;
        Ok(mask.apply(f))
    }

    /// `P_n` on coefficients.
    pub fn apply_pn_spectral(&self, n: u32, c: &SpectralCoeffs) -> Result<SpectralCoeffs> {
        let mask = self.mask(c.grid(), n)?;
        Ok(mask.apply_spectral(c))
    }

    /// `C_n = (1/4pi^2) sum_{|k|_inf <= R} psi(2^-n k)^2 / (1 + |k|^2)`.
    pub fn renorm_constant(&self, n: u32, truncation_radius: i64) -> Result<RenormConstant> {
        let two_n = 1i64 << n;
        if truncation_radius < 4 * two_n {
            return Err(Error::InvalidArgument(format!(
                "truncation radius {truncation_radius} < 4 * 2^{n}"
            )));
        }
        let scale = f64::powi(2.0, -(n as i32));
        let reach = match self.support_radius() {
            Some(r) => truncation_radius.min((r * two_n as f64).floor() as i64),
            None => truncation_radius,
        };
        let sum = self.lattice_sum(reach, scale, |_| 1.0);
        Ok(RenormConstant {
            n_level: n,
            value: sum / (4.0 * PI * PI),
            truncation_radius,
            tail_bound: self.tail_bound(n, truncation_radius),
        })
    }

    /// `C_n` restricted to the modes carried by `grid` (all `|k_i| < m/2`). Coincides with
    /// [`Self::renorm_constant`] for compactly supported kinds under the oversampling rule.
    pub fn renorm_constant_on_grid(&self, n: u32, grid: TorusGrid) -> Result<RenormConstant> {
        self.check_level(grid, n)?;
        if self.support_radius().is_some() {
            return self.renorm_constant(n, 4 * (1i64 << n));
        }
        let reach = grid.nyquist() as i64 - 1;
        let scale = f64::powi(2.0, -(n as i32));
        let sum = self.lattice_sum(reach, scale, |_| 1.0);
        Ok(RenormConstant {
            n_level: n,
            value: sum / (4.0 * PI * PI),
            truncation_radius: reach,
            tail_bound: self.tail_bound(n, reach),
        })
    }

    /// `sum_{|k|_inf <= reach} psi(scale k)^2 w(k) / (1 + |k|^2)`, accumulated in a fixed order.
    fn lattice_sum(&self, reach: i64, scale: f64, w: impl Fn([i64; 2]) -> f64) -> f64 {
        let mut cache = HashMap::new();
        let mut sum = 0.0;
        for k1 in -reach..=reach {
            for k2 in -reach..=reach {
                let psi = self.lattice_value([k1, k2], scale, &mut cache);
                if psi != 0.0 {
                    sum += psi * psi * w([k1, k2]) / (1.0 + (k1 * k1 + k2 * k2) as f64);
                }
            }
        }
        sum
    }

    /// Bound on the dropped part of the `C_n` sum beyond `|k|_inf > R`.
    ///
    /// Zero when the support of `psi(2^-n .)` fits inside the truncation cube. For the circle
    /// average, `J_0(x)^2 <= 2 / (pi x)` and the lattice tail is compared with the integral
    /// `int_{R-1}^inf f(r - 1) 2 pi r dr` for `f(r) = c / r^3`.
    pub fn tail_bound(&self, n: u32, truncation_radius: i64) -> f64 {
        let two_n = f64::powi(2.0, n as i32);
        match self.support_radius() {
            Some(r) if truncation_radius as f64 >= r * two_n => 0.0,
            Some(_) => f64::INFINITY,
            None => {
                let big_r = truncation_radius as f64;
                if big_r <= 2.0 {
                    return f64::INFINITY;
                }
                let c = (2.0 / PI) * two_n / (4.0 * PI * PI);
                2.0 * PI * c * (1.0 / (big_r - 2.0) + 0.5 / ((big_r - 2.0) * (big_r - 2.0)))
            }
        }
    }

    /// Empirical operator-norm proxy `max ||P_n f||_{B^s_{p,p}} / ||f||_{B^s_{p,p}}` over a corpus.
    pub fn besov_operator_norm_proxy(
        &self,
        n: u32,
        s: f64,
        p: f64,
        corpus: &[TorusField],
    ) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for f in corpus {
            let pf = self.apply_pn(n, f)?;
            let ratio = besov_norm(&pf, s, p, p).value / besov_norm(f, s, p, p).value;
            worst = worst.max(ratio);
        }
        Ok(worst)
    }
}

/// Wendland's `C^6` function `(1-r)^8 (32 r^3 + 25 r^2 + 8 r + 1)`, positive definite on `R^3`.
pub fn wendland_c6(r: f64) -> f64 {
    if r >= 1.0 {
        return 0.0;
    }
    let s = 1.0 - r;
    let s2 = s * s;
    let s4 = s2 * s2;
    s4 * s4 * (((32.0 * r + 25.0) * r + 8.0) * r + 1.0)
}

/// `(1/2pi) int_0^{2pi} exp(-i r cos t) dt = J_0(r)` by the periodic trapezoid rule.
pub fn circle_average_transform(r: f64) -> f64 {
    let n = CIRCLE_QUADRATURE_POINTS;
    let sum: f64 = (0..n)
        .map(|j| (r * (2.0 * PI * j as f64 / n as f64).cos()).cos())
        .sum();
    sum / n as f64
}

/// `psi(2^-n k)` tabulated on a grid, in storage order.
#[derive(Clone, Debug)]
pub struct MultiplierMask {
    spec: MultiplierSpec,
    grid: TorusGrid,
    n: u32,
    values: Vec<f64>,
}

impl MultiplierMask {
    pub fn spec(&self) -> MultiplierSpec {
        self.spec
    }
    pub fn grid(&self) -> TorusGrid {
        self.grid
    }
    pub fn level(&self) -> u32 {
        self.n
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, k: [i64; 2]) -> f64 {
        self.values[self.grid.flat_index(k)]
    }

    pub fn apply_spectral(&self, c: &SpectralCoeffs) -> SpectralCoeffs {
        c.scaled_by(&self.values)
    }

    pub fn apply(&self, f: &TorusField) -> TorusField {
        from_spectral_unchecked(&self.apply_spectral(&to_spectral(f)))
    }

    /// `P_n` applied to coefficients, returned in physical space.
    pub fn apply_to_physical(&self, c: &SpectralCoeffs) -> TorusField {
        from_spectral_unchecked(&self.apply_spectral(c))
    }
}

/// A renormalization constant and its truncation audit trail.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenormConstant {
    pub n_level: u32,
    pub value: f64,
    pub truncation_radius: i64,
    pub tail_bound: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{heat_semigroup, Complex64};

    fn grid(m: usize) -> TorusGrid {
        TorusGrid::new(m).unwrap()
    }

    #[test]
    fn origin_and_symmetry() {
        for kind in MultiplierKind::ALL {
            let s = MultiplierSpec::new(kind);
            assert_eq!(s.evaluate([0.0, 0.0]), 1.0, "{kind}");
            for xi in [[0.3, -0.7], [1.2, 0.1], [-2.5, 3.0], [0.9, 0.9]] {
                assert_eq!(s.evaluate(xi), s.evaluate([-xi[0], -xi[1]]));
            }
        }
    }

    #[test]
    fn sharp_square_outside_support() {
        assert_eq!(MultiplierSpec::sharp_square().evaluate([1.5, 0.0]), 0.0);
        assert_eq!(MultiplierSpec::sharp_square().evaluate([1.0, -1.0]), 1.0);
    }

    #[test]
    fn circle_average_first_zero() {
        let v = MultiplierSpec::circle_average().evaluate([2.404825557695773, 0.0]);
        assert!(v.abs() < 1e-6, "{v}");
    }

    #[test]
    fn circle_average_envelope() {
        // x J0(x)^2 <= 2/pi, used by the tail bound
        for i in 1..4000 {
            let x = i as f64 * 0.05;
            let j = circle_average_transform(x);
            assert!(x * j * j <= 2.0 / PI + 1e-12, "{x}");
        }
    }

    #[test]
    fn hypothesis_decay_and_holder_constants_are_finite() {
        for kind in [
            MultiplierKind::SharpSquare,
            MultiplierKind::SharpBall,
            MultiplierKind::SmoothBump,
        ] {
            let s = MultiplierSpec::new(kind);
            let mut decay: f64 = 0.0;
            let mut holder: f64 = 0.0;
            for i in -200..=200 {
                for j in -200..=200 {
                    if i == 0 && j == 0 {
                        continue;
                    }
                    let xi = [i as f64 * 0.013, j as f64 * 0.013];
                    let r = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
                    decay = decay.max(r.powf(2.0 + s.kappa) * s.evaluate(xi).abs());
                    if r < 0.5 {
                        holder = holder.max(r.powf(-s.zeta) * (s.evaluate(xi) - 1.0).abs());
                    }
                }
            }
            assert!(decay.is_finite() && decay < 1e6, "{kind}: {decay}");
            assert!(holder.is_finite() && holder < 1e3, "{kind}: {holder}");
        }
    }

    #[test]
    fn renorm_constant_sharp_square_level_zero() {
        let c = MultiplierSpec::sharp_square()
            .renorm_constant(0, 4)
            .unwrap();
        let want = (1.0 + 4.0 * 0.5 + 4.0 / 3.0) / (4.0 * PI * PI);
        assert!((c.value - want).abs() < 1e-15);
        assert_eq!(c.tail_bound, 0.0);
    }

    #[test]
    fn renorm_constant_lower_bound_and_monotone() {
        for kind in MultiplierKind::ALL {
            let s = MultiplierSpec::new(kind);
            let mut prev = 0.0;
            for n in 0..5 {
                let c = s.renorm_constant(n, 4 << n).unwrap();
                assert!(c.value >= 1.0 / (4.0 * PI * PI));
                if kind != MultiplierKind::CircleAverage {
                    assert!(c.value >= prev, "{kind} n={n}");
                }
                prev = c.value;
            }
        }
    }

    #[test]
    fn renorm_constant_rejects_short_truncation() {
        assert!(MultiplierSpec::sharp_ball().renorm_constant(3, 16).is_err());
    }

    #[test]
    fn domination_orders_constants() {
        // smooth_bump <= sharp_ball <= sharp_square pointwise
        let (b, ball, sq) = (
            MultiplierSpec::smooth_bump(),
            MultiplierSpec::sharp_ball(),
            MultiplierSpec::sharp_square(),
        );
        for n in 0..6 {
            let r = 4 << n;
            let cb = b.renorm_constant(n, r).unwrap().value;
            let cball = ball.renorm_constant(n, r).unwrap().value;
            let csq = sq.renorm_constant(n, r).unwrap().value;
            assert!(cb <= cball && cball <= csq, "n={n}");
        }
    }

    #[test]
    fn growth_band_is_bounded() {
        for kind in MultiplierKind::ALL {
            let s = MultiplierSpec::new(kind);
            let band: Vec<f64> = (4..=8)
                .map(|n| {
                    s.renorm_constant(n, 4 << n).unwrap().value - n as f64 * 2f64.ln() / (2.0 * PI)
                })
                .collect();
            let lo = band.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = band.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert!(hi - lo < 0.03, "{kind}: {band:?}");
        }
    }

    #[test]
    fn apply_pn_examples() {
        let g = grid(32);
        let one = TorusField::constant(g, 1.0);
        for kind in MultiplierKind::ALL {
            let s = MultiplierSpec::new(kind);
            let n = s.max_level(g).unwrap();
            let out = s.apply_pn(n, &one).unwrap();
            assert!(out.values().iter().all(|v| (v - 1.0).abs() < 1e-13));
        }
        let f = TorusField::from_fn(g, |x| (2.0 * x[0]).cos());
        let out = MultiplierSpec::sharp_square().apply_pn(0, &f).unwrap();
        assert!(out.max_abs() < 1e-14);
    }

    #[test]
    fn level_above_nyquist_rejected() {
        let g = grid(32);
        assert!(matches!(
            MultiplierSpec::sharp_square().apply_pn(4, &TorusField::zeros(g)),
            Err(Error::LevelAboveNyquist { n: 4, m: 32 })
        ));
        assert_eq!(
            MultiplierSpec::circle_average().max_level(grid(256)),
            Some(4)
        );
    }

    #[test]
    fn sharp_cutoffs_are_projections() {
        let g = grid(32);
        let f = TorusField::from_fn(g, |x| {
            (x[0] * 3.0).sin() + (x[1] * 7.0 + x[0]).cos() + 0.5 * (x[0] * 13.0).cos()
        });
        for s in [MultiplierSpec::sharp_square(), MultiplierSpec::sharp_ball()] {
            let once = s.apply_pn_spectral(3, &to_spectral(&f)).unwrap();
            let twice = s.apply_pn_spectral(3, &once).unwrap();
            assert_eq!(once, twice);
        }
    }

    #[test]
    fn pn_commutes_with_heat() {
        let g = grid(32);
        let f = TorusField::from_fn(g, |x| {
            (x[0] * 3.0).sin() * (x[1] * 2.0).cos() + (5.0 * x[1]).sin()
        });
        for kind in MultiplierKind::ALL {
            let s = MultiplierSpec::new(kind);
            let n = s.max_level(g).unwrap();
            let a = heat_semigroup(&s.apply_pn(n, &f).unwrap(), 0.1);
            let b = s.apply_pn(n, &heat_semigroup(&f, 0.1)).unwrap();
            let diff = a.zip_map(&b, |x, y| x - y).max_abs();
            assert!(diff < 1e-10, "{kind}: {diff}");
        }
    }

    #[test]
    fn smooth_bump_kernel_is_nonnegative() {
        // periodic kernel (1/4pi^2) sum psi(2^-n k) e^{ik.x} sampled at the nodes
        let g = grid(64);
        let s = MultiplierSpec::smooth_bump();
        for n in 0..=4 {
            let mask = s.mask(g, n).unwrap();
            let mut c = SpectralCoeffs::zeros(g);
            for (i, v) in mask.values().iter().enumerate() {
                c.as_mut_slice()[i] = Complex64::new(*v / (2.0 * PI), 0.0);
            }
            let k = from_spectral_unchecked(&c);
            assert!(
                k.min() >= -1e-12 * k.max(),
                "n={n}: {} {}",
                k.min(),
                k.max()
            );
        }
    }
}
