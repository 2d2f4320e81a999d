//! The massive Gaussian free field `mu_0` (covariance `(1 - Delta)^{-1}`) and the
//! Ornstein-Uhlenbeck process `dX = (Delta - 1) X / 2 dt + dW`, sampled exactly per Fourier mode.
//!
//! Randomness enters through a [`NoiseSource`] that hands out *standardized* innovations: on
//! each step, mode `k != 0` receives `Z_k = (z1 + i z2) / sqrt(2)` (paired as `Z_{-k} = conj Z_k`)
//! and the zero mode a real `N(0, 1)`. Everything else is deterministic scaling, so the same
//! innovations can drive schemes with different noise multipliers or step sizes.

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::multiplier::MultiplierMask;
use crate::rng::RngStream;
use crate::spectral::{
    from_spectral_unchecked, to_spectral, SpectralCoeffs, TorusField, TorusGrid,
};

/// `(1 + |k|^2)^{-1}`.
pub fn gff_mode_variance(k: [i64; 2]) -> f64 {
    1.0 / (1.0 + (k[0] * k[0] + k[1] * k[1]) as f64)
}

/// Draws standardized Hermitian innovations in the fixed half-lattice order.
pub fn unit_gaussian_coeffs(grid: TorusGrid, rng: &mut RngStream) -> SpectralCoeffs {
    let mut c = SpectralCoeffs::zeros(grid);
    c.set([0, 0], Complex64::new(rng.normal(), 0.0));
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for k in grid.half_lattice() {
        let z = Complex64::new(s * rng.normal(), s * rng.normal());
        c.set_hermitian(k, z);
    }
    c
}

/// A band-limited draw from `mu_0`.
#[derive(Clone, Debug, PartialEq)]
pub struct GffSample {
    spectral: SpectralCoeffs,
}

impl GffSample {
    pub fn spectral(&self) -> &SpectralCoeffs {
        &self.spectral
    }

    pub fn into_spectral(self) -> SpectralCoeffs {
        self.spectral
    }

    pub fn grid(&self) -> TorusGrid {
        self.spectral.grid()
    }

    pub fn field(&self) -> TorusField {
        from_spectral_unchecked(&self.spectral)
    }

    pub fn mode_variance(&self, k: [i64; 2]) -> f64 {
        gff_mode_variance(k)
    }
}

/// `c(0) ~ N(0,1)`, `c(k) = (z1 + i z2) / sqrt(2 (1 + |k|^2))` on the positive half lattice,
/// `c(-k) = conj c(k)`, Nyquist modes zero.
pub fn sample_gff(grid: TorusGrid, rng: &mut RngStream) -> GffSample {
    let mut c = unit_gaussian_coeffs(grid, rng);
    let std: Vec<f64> = grid
        .mode_norms_sq()
        .into_iter()
        .map(|k2| 1.0 / (1.0 + k2).sqrt())
        .collect();
    c.scale_by(&std);
    GffSample { spectral: c }
}

/// Source of standardized OU innovations, one call per time step.
pub trait NoiseSource {
    fn next_unit(&mut self, grid: TorusGrid, dt: f64) -> SpectralCoeffs;
}

impl<N: NoiseSource + ?Sized> NoiseSource for &mut N {
    fn next_unit(&mut self, grid: TorusGrid, dt: f64) -> SpectralCoeffs {
        (**self).next_unit(grid, dt)
    }
}

impl<N: NoiseSource + ?Sized> NoiseSource for Box<N> {
    fn next_unit(&mut self, grid: TorusGrid, dt: f64) -> SpectralCoeffs {
        (**self).next_unit(grid, dt)
    }
}

/// Fresh innovations from a random stream.
#[derive(Clone, Debug)]
pub struct StreamNoise {
    rng: RngStream,
}

impl StreamNoise {
    pub fn new(rng: RngStream) -> Self {
        StreamNoise { rng }
    }
}

impl NoiseSource for StreamNoise {
    fn next_unit(&mut self, grid: TorusGrid, _dt: f64) -> SpectralCoeffs {
        unit_gaussian_coeffs(grid, &mut self.rng)
    }
}

/// No noise at all: the deterministic linear flow.
#[derive(Clone, Copy, Debug, Default)]
pub struct NoNoise;

impl NoiseSource for NoNoise {
    fn next_unit(&mut self, grid: TorusGrid, _dt: f64) -> SpectralCoeffs {
        SpectralCoeffs::zeros(grid)
    }
}

/// Coarse-step innovations assembled from `factor` fine steps of an inner source.
///
/// Over a coarse step the exact OU innovation is `sum_i e^{-lambda (r-1-i) dt_f / 2} eta_i`,
/// where `eta_i` are the fine innovations. Rewriting it as `sqrt(q_c / lambda) Z` with
/// `q = 1 - e^{-lambda dt}` gives the weights below, and `Z` is again standardized.
pub struct RefinedNoise<N> {
    inner: N,
    factor: usize,
}

impl<N: NoiseSource> RefinedNoise<N> {
    pub fn new(inner: N, factor: usize) -> Self {
        assert!(factor >= 1);
        RefinedNoise { inner, factor }
    }
}

impl<N: NoiseSource> NoiseSource for RefinedNoise<N> {
    fn next_unit(&mut self, grid: TorusGrid, dt: f64) -> SpectralCoeffs {
        let r = self.factor;
        let fine_dt = dt / r as f64;
        let lambdas: Vec<f64> = grid
            .mode_norms_sq()
            .into_iter()
            .map(|k2| 1.0 + k2)
            .collect();
        let mut acc = SpectralCoeffs::zeros(grid);
        for i in 0..r {
            let fine = self.inner.next_unit(grid, fine_dt);
            let lag = (r - 1 - i) as f64 * fine_dt;
            let out = acc.as_mut_slice();
            for (idx, z) in fine.as_slice().iter().enumerate() {
                let l = lambdas[idx];
                let qf = -(-l * fine_dt).exp_m1();
                let qc = -(-l * dt).exp_m1();
                out[idx] += z * ((-0.5 * l * lag).exp() * (qf / qc).sqrt());
            }
        }
        acc
    }
}

/// Per-mode decay and innovation amplitude for one OU step of size `dt`.
#[derive(Clone, Debug)]
pub struct OuPropagator {
    grid: TorusGrid,
    dt: f64,
    decay: Vec<f64>,
    amplitude: Vec<f64>,
}

impl OuPropagator {
    /// `sigma` is the noise multiplier mask (`P_N W`); `None` means the full noise.
    pub fn new(grid: TorusGrid, dt: f64, sigma: Option<&MultiplierMask>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "time step {dt} must be positive"
            )));
        }
        if let Some(mask) = sigma {
            if mask.grid() != grid {
                return Err(Error::GridMismatch(mask.grid().size(), grid.size()));
            }
        }
        let norms = grid.mode_norms_sq();
        let decay = norms
            .iter()
            .map(|k2| (-0.5 * dt * (1.0 + k2)).exp())
            .collect();
        let amplitude = norms
            .iter()
            .enumerate()
            .map(|(i, k2)| {
                let l = 1.0 + k2;
                let s = sigma.map_or(1.0, |m| m.values()[i]);
                s * (-(-l * dt).exp_m1() / l).sqrt()
            })
            .collect();
        Ok(OuPropagator {
            grid,
            dt,
            decay,
            amplitude,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn decay(&self) -> &[f64] {
        &self.decay
    }

    /// `sigma_k sqrt((1 - e^{-lambda dt}) / lambda)` per mode.
    pub fn amplitude(&self) -> &[f64] {
        &self.amplitude
    }

    /// The innovation `eta` built from standardized noise.
    pub fn innovation(&self, unit: &SpectralCoeffs) -> SpectralCoeffs {
        unit.scaled_by(&self.amplitude)
    }

    /// In place: `c <- e^{-lambda dt / 2} c + eta`.
    pub fn advance(&self, c: &mut SpectralCoeffs, unit: &SpectralCoeffs) {
        let out = c.as_mut_slice();
        for (i, (z, u)) in out.iter_mut().zip(unit.as_slice()).enumerate() {
            *z = *z * self.decay[i] + u * self.amplitude[i];
        }
    }

    pub fn step(&self, state: &OuState, noise: &mut impl NoiseSource) -> OuState {
        let unit = noise.next_unit(self.grid, self.dt);
        let mut spectral = state.spectral.clone();
        self.advance(&mut spectral, &unit);
        OuState {
            time: state.time + self.dt,
            spectral,
        }
    }
}

/// OU state at a given time.
#[derive(Clone, Debug, PartialEq)]
pub struct OuState {
    pub time: f64,
    pub spectral: SpectralCoeffs,
}

impl OuState {
    pub fn new(initial: &TorusField) -> Self {
        OuState {
            time: 0.0,
            spectral: to_spectral(initial),
        }
    }

    pub fn from_spectral(spectral: SpectralCoeffs) -> Self {
        OuState {
            time: 0.0,
            spectral,
        }
    }

    pub fn field(&self) -> TorusField {
        from_spectral_unchecked(&self.spectral)
    }
}

/// One exact OU transition of size `dt`.
pub fn ou_step(
    state: &OuState,
    dt: f64,
    noise: &mut impl NoiseSource,
    sigma: Option<&MultiplierMask>,
) -> Result<OuState> {
    Ok(OuPropagator::new(state.spectral.grid(), dt, sigma)?.step(state, noise))
}

/// Number of steps of size `dt` covering `horizon`; the ratio must be an integer.
pub fn step_count(horizon: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) || !(horizon >= dt) {
        return Err(Error::InvalidHorizon { horizon, dt });
    }
    let steps = (horizon / dt).round();
    if (steps * dt - horizon).abs() > 1e-9 * horizon {
        return Err(Error::InvalidHorizon { horizon, dt });
    }
    Ok(steps as usize)
}

/// States at `0, dt, 2 dt, ..., horizon`.
pub fn ou_trajectory(
    initial: &TorusField,
    horizon: f64,
    dt: f64,
    noise: &mut impl NoiseSource,
    sigma: Option<&MultiplierMask>,
) -> Result<Vec<OuState>> {
    let steps = step_count(horizon, dt)?;
    let prop = OuPropagator::new(initial.grid(), dt, sigma)?;
    let mut out = Vec::with_capacity(steps + 1);
    out.push(OuState::new(initial));
    for s in 1..=steps {
        let mut next = prop.step(&out[s - 1], noise);
        next.time = s as f64 * dt;
        out.push(next);
    }
    Ok(out)
}
