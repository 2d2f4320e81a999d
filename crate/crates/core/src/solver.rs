//! Exponential-Euler integrators for the regularized stochastic quantization equation
//! `dPhi = (Delta - 1) Phi / 2 dt - (alpha / 2) exp(alpha Phi - alpha^2 C_N / 2) dt + P_N dW`,
//! in split form `Phi = X + Y` (OU part plus remainder) and in direct form, and for the
//! deterministic shifted equation `dU = (Delta - 1) U / 2 dt - (alpha / 2) e^{alpha U} chi_t dt`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gff::{step_count, NoNoise, NoiseSource, OuPropagator};
use crate::gmc::{wick_renorm_constant, ChargeParams, DEFAULT_CLAMP};
use crate::multiplier::{MultiplierMask, MultiplierSpec};
use crate::spectral::{
    besov_norm, from_spectral_unchecked, heat_semigroup_spectral, to_spectral, SpectralCoeffs,
    TorusField, TorusGrid,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// `Phi = X + Y` with `X` the OU process driven by `P_N W`.
    #[default]
    Split,
    /// Full drift `exp(alpha Phi - alpha^2 C_N / 2)` with noise `P_N W`.
    DirectExpsqe1,
    /// Drift `P_N exp(alpha P_N Phi - alpha^2 C_N / 2)` with the full noise.
    DirectExpsqe2,
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "split" => Ok(Scheme::Split),
            "direct_expsqe1" => Ok(Scheme::DirectExpsqe1),
            "direct_expsqe2" => Ok(Scheme::DirectExpsqe2),
            _ => Err(Error::InvalidArgument(format!("unknown scheme {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub params: ChargeParams,
    pub spec: MultiplierSpec,
    pub n_level: u32,
    pub grid: TorusGrid,
    pub dt: f64,
    pub horizon: f64,
    pub scheme: Scheme,
    pub clamp_threshold: f64,
}

impl SolverConfig {
    pub fn new(
        params: ChargeParams,
        spec: MultiplierSpec,
        n_level: u32,
        grid: TorusGrid,
        dt: f64,
        horizon: f64,
        scheme: Scheme,
    ) -> Result<Self> {
        let c = SolverConfig {
            params,
            spec,
            n_level,
            grid,
            dt,
            horizon,
            scheme,
            clamp_threshold: DEFAULT_CLAMP,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.check_level(self.grid, self.n_level)?;
        step_count(self.horizon, self.dt)?;
        Ok(())
    }

    pub fn steps(&self) -> usize {
        step_count(self.horizon, self.dt).expect("validated config")
    }
}

/// `phi_1(z) = (e^z - 1) / z`, with a Taylor series near 0.
pub fn phi1(z: f64) -> f64 {
    if z.abs() < 1e-5 {
        1.0 + z / 2.0 + z * z / 6.0 + z * z * z / 24.0 + z.powi(4) / 120.0 + z.powi(5) / 720.0
    } else {
        z.exp_m1() / z
    }
}

/// Per-mode factors of one exponential-Euler step: `e^{-lambda dt / 2}` and
/// `dt phi_1(-lambda dt / 2)`.
#[derive(Clone, Debug)]
pub struct ExpEulerStep {
    pub decay: Vec<f64>,
    pub weight: Vec<f64>,
}

impl ExpEulerStep {
    pub fn new(grid: TorusGrid, dt: f64) -> Self {
        let norms = grid.mode_norms_sq();
        ExpEulerStep {
            decay: norms
                .iter()
                .map(|k2| (-0.5 * dt * (1.0 + k2)).exp())
                .collect(),
            weight: norms
                .iter()
                .map(|k2| dt * phi1(-0.5 * dt * (1.0 + k2)))
                .collect(),
        }
    }

    /// `c <- decay c + weight f`.
    pub fn apply(&self, c: &mut SpectralCoeffs, forcing: &SpectralCoeffs) {
        let f = forcing.as_slice();
        for (i, z) in c.as_mut_slice().iter_mut().enumerate() {
            *z = *z * self.decay[i] + f[i] * self.weight[i];
        }
    }
}

/// How `X` is produced in the split scheme.
#[derive(Clone, Debug, Default)]
pub enum XDriver {
    /// The OU process driven by the supplied noise.
    #[default]
    Ou,
    /// `X` held fixed at the given field (test hook; no noise is drawn).
    Frozen(TorusField),
}

/// Recording options.
#[derive(Clone, Debug)]
pub struct SolveOptions {
    /// Keep a snapshot every this many steps (the initial and final states are always kept).
    pub record_every: usize,
    pub x_driver: XDriver,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            record_every: usize::MAX,
            x_driver: XDriver::Ou,
        }
    }
}

/// Per-step diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub time: f64,
    /// `max alpha Y` (split) or `max alpha (Phi - X)`-free `max alpha Phi` (direct).
    pub max_alpha_y: f64,
    /// `||F||_{L^1}` of the drift evaluated at the start of the step.
    pub nonlinear_l1: f64,
    /// Largest exponent fed to `exp`.
    pub max_exponent: f64,
    pub clamp_events: usize,
}

/// Snapshots of a run.
#[derive(Clone, Debug)]
pub struct SolverTrajectory {
    pub config: SolverConfig,
    pub times: Vec<f64>,
    /// Split scheme only.
    pub x_states: Vec<TorusField>,
    /// Split scheme only.
    pub y_states: Vec<TorusField>,
    pub phi_states: Vec<TorusField>,
    pub diagnostics: Vec<StepDiagnostics>,
    /// `Phi` at the horizon, in coefficient form.
    pub final_spectral: SpectralCoeffs,
}

impl SolverTrajectory {
    pub fn final_phi(&self) -> &TorusField {
        self.phi_states
            .last()
            .expect("trajectory has a final state")
    }

    pub fn max_alpha_y(&self) -> f64 {
        self.diagnostics
            .iter()
            .map(|d| d.max_alpha_y)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Dispatch on `config.scheme`.
pub fn solve(
    config: &SolverConfig,
    initial_phi: &TorusField,
    noise: &mut impl NoiseSource,
    options: &SolveOptions,
) -> Result<SolverTrajectory> {
    match config.scheme {
        Scheme::Split => solve_split(config, initial_phi, noise, options),
        _ => solve_direct(config, initial_phi, noise, options),
    }
}

struct Setup {
    mask: MultiplierMask,
    c_n: f64,
    euler: ExpEulerStep,
    steps: usize,
}

fn setup(config: &SolverConfig, initial: &TorusField) -> Result<Setup> {
    config.validate()?;
    if initial.grid() != config.grid {
        return Err(Error::GridMismatch(
            initial.grid().size(),
            config.grid.size(),
        ));
    }
    Ok(Setup {
        mask: config.spec.mask(config.grid, config.n_level)?,
        c_n: wick_renorm_constant(&config.spec, config.n_level, config.grid)?.value,
        euler: ExpEulerStep::new(config.grid, config.dt),
        steps: config.steps(),
    })
}

/// `F = -(alpha/2) exp(alpha u - alpha^2 C / 2)` pointwise, with the blow-up check.
fn exp_drift(
    u: &[f64],
    alpha: f64,
    c_n: f64,
    threshold: f64,
    step: usize,
    time: f64,
) -> Result<(Vec<f64>, f64)> {
    let shift = 0.5 * alpha * alpha * c_n;
    let mut max_e = f64::NEG_INFINITY;
    let mut out = Vec::with_capacity(u.len());
    for &v in u {
        let e = alpha * v - shift;
        max_e = max_e.max(e);
        out.push(-0.5 * alpha * e.exp());
    }
    if !(max_e <= threshold) {
        return Err(Error::BlowUp {
            step,
            time,
            exponent: max_e,
            threshold,
        });
    }
    Ok((out, max_e))
}

fn to_spectral_vec(grid: TorusGrid, v: Vec<f64>) -> SpectralCoeffs {
    to_spectral(&TorusField::from_vec_unchecked(grid, v))
}

fn l1(grid: TorusGrid, v: &[f64]) -> f64 {
    grid.cell_area() * v.iter().map(|x| x.abs()).sum::<f64>()
}

fn should_record(step: usize, steps: usize, every: usize) -> bool {
    step == 0 || step == steps || (every != usize::MAX && step.is_multiple_of(every))
}

/// Split scheme: `X` exact OU from `P_N phi` with noise `P_N W`, `Y` by exponential Euler from 0.
pub fn solve_split(
    config: &SolverConfig,
    initial_phi: &TorusField,
    noise: &mut impl NoiseSource,
    options: &SolveOptions,
) -> Result<SolverTrajectory> {
    let s = setup(config, initial_phi)?;
    let grid = config.grid;
    let alpha = config.params.alpha;
    let ou = OuPropagator::new(grid, config.dt, Some(&s.mask))?;
    let (mut x_hat, frozen) = match &options.x_driver {
        XDriver::Ou => (s.mask.apply_spectral(&to_spectral(initial_phi)), false),
        XDriver::Frozen(x) => (to_spectral(x), true),
    };
    let mut x = from_spectral_unchecked(&x_hat);
    let mut y_hat = SpectralCoeffs::zeros(grid);
    let mut y = TorusField::zeros(grid);
    let mut traj = SolverTrajectory {
        config: *config,
        times: Vec::new(),
        x_states: Vec::new(),
        y_states: Vec::new(),
        phi_states: Vec::new(),
        diagnostics: Vec::with_capacity(s.steps),
        final_spectral: SpectralCoeffs::zeros(grid),
    };
    let record = |traj: &mut SolverTrajectory, t: f64, x: &TorusField, y: &TorusField| {
        traj.times.push(t);
        traj.x_states.push(x.clone());
        traj.y_states.push(y.clone());
        traj.phi_states.push(x.zip_map(y, |a, b| a + b));
    };
    record(&mut traj, 0.0, &x, &y);
    for step in 0..s.steps {
        let t = step as f64 * config.dt;
        let phi: Vec<f64> = x
            .values()
            .iter()
            .zip(y.values())
            .map(|(a, b)| a + b)
            .collect();
        let (f, max_e) = exp_drift(&phi, alpha, s.c_n, config.clamp_threshold, step, t)?;
        let max_alpha_y = y
            .values()
            .iter()
            .map(|v| alpha * v)
            .fold(f64::NEG_INFINITY, f64::max);
        traj.diagnostics.push(StepDiagnostics {
            time: t,
            max_alpha_y,
            nonlinear_l1: l1(grid, &f),
            max_exponent: max_e,
            clamp_events: 0,
        });
        s.euler.apply(&mut y_hat, &to_spectral_vec(grid, f));
        y = from_spectral_unchecked(&y_hat);
        if !frozen {
            let unit = noise.next_unit(grid, config.dt);
            ou.advance(&mut x_hat, &unit);
            x = from_spectral_unchecked(&x_hat);
        }
        if should_record(step + 1, s.steps, options.record_every) {
            record(&mut traj, (step + 1) as f64 * config.dt, &x, &y);
        }
    }
    let max_alpha_y = y
        .values()
        .iter()
        .map(|v| alpha * v)
        .fold(f64::NEG_INFINITY, f64::max);
    traj.diagnostics.push(StepDiagnostics {
        time: config.horizon,
        max_alpha_y,
        nonlinear_l1: f64::NAN,
        max_exponent: f64::NAN,
        clamp_events: 0,
    });
    traj.final_spectral = x_hat.add(&y_hat);
    Ok(traj)
}

/// Direct schemes on `Phi` itself.
pub fn solve_direct(
    config: &SolverConfig,
    initial_phi: &TorusField,
    noise: &mut impl NoiseSource,
    options: &SolveOptions,
) -> Result<SolverTrajectory> {
    let s = setup(config, initial_phi)?;
    let grid = config.grid;
    let alpha = config.params.alpha;
    let (sigma, mut phi_hat) = match config.scheme {
        Scheme::DirectExpsqe1 => (
            Some(&s.mask),
            s.mask.apply_spectral(&to_spectral(initial_phi)),
        ),
        Scheme::DirectExpsqe2 => (None, to_spectral(initial_phi)),
        Scheme::Split => {
            return Err(Error::InvalidArgument(
                "solve_direct needs a direct scheme".into(),
            ))
        }
    };
    let ou = OuPropagator::new(grid, config.dt, sigma)?;
    let mut traj = SolverTrajectory {
        config: *config,
        times: vec![0.0],
        x_states: Vec::new(),
        y_states: Vec::new(),
        phi_states: vec![from_spectral_unchecked(&phi_hat)],
        diagnostics: Vec::with_capacity(s.steps),
        final_spectral: SpectralCoeffs::zeros(grid),
    };
    for step in 0..s.steps {
        let t = step as f64 * config.dt;
        let forcing_hat = match config.scheme {
            Scheme::DirectExpsqe1 => {
                let phi = from_spectral_unchecked(&phi_hat);
                let (f, max_e) =
                    exp_drift(phi.values(), alpha, s.c_n, config.clamp_threshold, step, t)?;
                traj.diagnostics.push(StepDiagnostics {
                    time: t,
                    max_alpha_y: phi
                        .values()
                        .iter()
                        .map(|v| alpha * v)
                        .fold(f64::NEG_INFINITY, f64::max),
                    nonlinear_l1: l1(grid, &f),
                    max_exponent: max_e,
                    clamp_events: 0,
                });
                to_spectral_vec(grid, f)
            }
            _ => {
                let smoothed = s.mask.apply_to_physical(&phi_hat);
                let (f, max_e) = exp_drift(
                    smoothed.values(),
                    alpha,
                    s.c_n,
                    config.clamp_threshold,
                    step,
                    t,
                )?;
                traj.diagnostics.push(StepDiagnostics {
                    time: t,
                    max_alpha_y: smoothed
                        .values()
                        .iter()
                        .map(|v| alpha * v)
                        .fold(f64::NEG_INFINITY, f64::max),
                    nonlinear_l1: l1(grid, &f),
                    max_exponent: max_e,
                    clamp_events: 0,
                });
                s.mask.apply_spectral(&to_spectral_vec(grid, f))
            }
        };
        let unit = noise.next_unit(grid, config.dt);
        let out = phi_hat.as_mut_slice();
        let f = forcing_hat.as_slice();
        let u = unit.as_slice();
        let amp = ou.amplitude();
        for i in 0..out.len() {
            out[i] = out[i] * s.euler.decay[i] + f[i] * s.euler.weight[i] + u[i] * amp[i];
        }
        if should_record(step + 1, s.steps, options.record_every) {
            traj.times.push((step + 1) as f64 * config.dt);
            traj.phi_states.push(from_spectral_unchecked(&phi_hat));
        }
    }
    traj.final_spectral = phi_hat;
    Ok(traj)
}

/// Forcing path `chi_t >= 0` for the shifted equation.
#[derive(Clone, Debug)]
pub enum ChiPath {
    Constant(TorusField),
    /// `chi_t = fields[floor(t / dt)]`, the last field persisting beyond the table.
    PiecewiseConstant {
        dt: f64,
        fields: Vec<TorusField>,
    },
}

impl ChiPath {
    pub fn at(&self, t: f64) -> &TorusField {
        match self {
            ChiPath::Constant(f) => f,
            ChiPath::PiecewiseConstant { dt, fields } => {
                let i = ((t / dt) + 1e-9).floor().max(0.0) as usize;
                &fields[i.min(fields.len() - 1)]
            }
        }
    }

    pub fn fields(&self) -> Vec<&TorusField> {
        match self {
            ChiPath::Constant(f) => vec![f],
            ChiPath::PiecewiseConstant { fields, .. } => fields.iter().collect(),
        }
    }

    pub fn scaled(&self, c: f64) -> ChiPath {
        match self {
            ChiPath::Constant(f) => ChiPath::Constant(f.scaled(c)),
            ChiPath::PiecewiseConstant { dt, fields } => ChiPath::PiecewiseConstant {
                dt: *dt,
                fields: fields.iter().map(|f| f.scaled(c)).collect(),
            },
        }
    }

    /// Rejects any negative node value.
    pub fn validate(&self) -> Result<()> {
        for (i, f) in self.fields().into_iter().enumerate() {
            let min = f.min();
            if min < 0.0 {
                let time = match self {
                    ChiPath::Constant(_) => 0.0,
                    ChiPath::PiecewiseConstant { dt, .. } => i as f64 * dt,
                };
                return Err(Error::NegativeForcing { time, min });
            }
        }
        Ok(())
    }
}

/// Settings of the deterministic shifted equation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftedConfig {
    pub alpha: f64,
    pub grid: TorusGrid,
    pub dt: f64,
    pub horizon: f64,
    pub clamp_threshold: f64,
}

impl ShiftedConfig {
    pub fn new(alpha: f64, grid: TorusGrid, dt: f64, horizon: f64) -> Result<Self> {
        step_count(horizon, dt)?;
        Ok(ShiftedConfig {
            alpha,
            grid,
            dt,
            horizon,
            clamp_threshold: DEFAULT_CLAMP,
        })
    }
}

/// Every state of a shifted solve.
#[derive(Clone, Debug)]
pub struct ShiftedTrajectory {
    pub config: ShiftedConfig,
    pub times: Vec<f64>,
    pub states: Vec<TorusField>,
}

impl ShiftedTrajectory {
    pub fn terminal(&self) -> &TorusField {
        self.states.last().expect("nonempty")
    }
}

/// `dU = (Delta - 1) U / 2 dt - (alpha / 2) e^{alpha U} chi_t dt` by exponential Euler.
pub fn solve_shifted_deterministic(
    config: &ShiftedConfig,
    upsilon0: &TorusField,
    chi: &ChiPath,
) -> Result<ShiftedTrajectory> {
    chi.validate()?;
    let grid = config.grid;
    if upsilon0.grid() != grid {
        return Err(Error::GridMismatch(upsilon0.grid().size(), grid.size()));
    }
    let steps = step_count(config.horizon, config.dt)?;
    let euler = ExpEulerStep::new(grid, config.dt);
    let a = config.alpha;
    let mut u_hat = to_spectral(upsilon0);
    let mut u = upsilon0.clone();
    let mut traj = ShiftedTrajectory {
        config: *config,
        times: vec![0.0],
        states: vec![u.clone()],
    };
    for step in 0..steps {
        let t = step as f64 * config.dt;
        let forcing = shifted_forcing(&u, chi.at(t), a, config.clamp_threshold, step, t)?;
        euler.apply(&mut u_hat, &forcing);
        u = from_spectral_unchecked(&u_hat);
        traj.times.push((step + 1) as f64 * config.dt);
        traj.states.push(u.clone());
    }
    Ok(traj)
}

/// Coefficients of `-(alpha / 2) e^{alpha u} chi`.
fn shifted_forcing(
    u: &TorusField,
    chi: &TorusField,
    alpha: f64,
    threshold: f64,
    step: usize,
    time: f64,
) -> Result<SpectralCoeffs> {
    let mut max_e = f64::NEG_INFINITY;
    let f: Vec<f64> = u
        .values()
        .iter()
        .zip(chi.values())
        .map(|(&v, &c)| {
            let e = alpha * v;
            max_e = max_e.max(e);
            -0.5 * alpha * e.exp() * c
        })
        .collect();
    if !(max_e <= threshold) {
        return Err(Error::BlowUp {
            step,
            time,
            exponent: max_e,
            threshold,
        });
    }
    Ok(to_spectral_vec(u.grid(), f))
}

/// `|| U_T - e^{TA} u_0 + (alpha/2) int_0^T e^{(T-s)A} e^{alpha U_s} chi_s ds ||_{L^2}` with
/// `A = (Delta - 1) / 2`. The integral uses the stepper's quadrature on a grid of twice the
/// step count, with `U` linearly interpolated between stored states.
pub fn mild_residual(traj: &ShiftedTrajectory, chi: &ChiPath) -> Result<f64> {
    let cfg = traj.config;
    let grid = cfg.grid;
    let steps = traj.states.len() - 1;
    let fine = 2 * steps;
    let delta = cfg.horizon / fine as f64;
    let euler = ExpEulerStep::new(grid, delta);
    let mut acc = SpectralCoeffs::zeros(grid);
    for i in 0..fine {
        let s = i as f64 * delta;
        let u = if i % 2 == 0 {
            traj.states[i / 2].clone()
        } else {
            let (a, b) = (&traj.states[i / 2], &traj.states[i / 2 + 1]);
            a.zip_map(b, |x, y| 0.5 * (x + y))
        };
        let forcing = shifted_forcing(&u, chi.at(s), cfg.alpha, f64::INFINITY, i, s)?;
        euler.apply(&mut acc, &forcing);
    }
    let linear = heat_semigroup_spectral(&to_spectral(&traj.states[0]), cfg.horizon);
    let mild = linear.add(&acc);
    let defect = to_spectral(traj.terminal()).sub(&mild);
    Ok(defect.energy().sqrt())
}

/// `sup_t ||U_t||_{B^delta_{p,p}} / (||u_0||_{B^{2-beta}_{p,p}} + e^{|alpha| max|u_0|}
/// (int ||chi_s||^p_{B^{-beta}_{p,p}} ds)^{1/p})`, with the supremum over `stride`-spaced states.
pub fn apriori_ratio(
    traj: &ShiftedTrajectory,
    upsilon0: &TorusField,
    chi: &ChiPath,
    delta: f64,
    beta: f64,
    p: f64,
    stride: usize,
) -> f64 {
    let cfg = traj.config;
    let sup = traj
        .states
        .iter()
        .step_by(stride.max(1))
        .chain(std::iter::once(traj.terminal()))
        .map(|u| besov_norm(u, delta, p, p).value)
        .fold(0.0f64, f64::max);
    let steps = traj.states.len() - 1;
    let mut integral = 0.0;
    let mut cache: Option<(*const TorusField, f64)> = None;
    for i in 0..steps {
        let field = chi.at(i as f64 * cfg.dt);
        let v = match cache {
            Some((ptr, v)) if std::ptr::eq(ptr, field) => v,
            _ => {
                let v = besov_norm(field, -beta, p, p).value.powf(p);
                cache = Some((field as *const _, v));
                v
            }
        };
        integral += v * cfg.dt;
    }
    let denom = besov_norm(upsilon0, 2.0 - beta, p, p).value
        + (cfg.alpha.abs() * upsilon0.max_abs()).exp() * integral.powf(1.0 / p);
    sup / denom
}

/// Pairwise terminal distances of shifted solves at several step sizes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniquenessProbe {
    pub dts: Vec<f64>,
    /// `distances[i][j] = ||U_T^{dt_i} - U_T^{dt_j}||_{L^p}`.
    pub distances: Vec<Vec<f64>>,
    pub max_distance: f64,
    /// Distance of each run to the finest one.
    pub to_finest: Vec<f64>,
}

pub fn uniqueness_probe(
    config: &ShiftedConfig,
    upsilon0: &TorusField,
    chi: &ChiPath,
    dts: &[f64],
    p: f64,
) -> Result<UniquenessProbe> {
    if dts.len() < 2 {
        return Err(Error::InvalidArgument(
            "uniqueness probe needs at least two step sizes".into(),
        ));
    }
    let terminals: Vec<TorusField> = dts
        .iter()
        .map(|&dt| {
            let cfg = ShiftedConfig { dt, ..*config };
            step_count(cfg.horizon, dt)?;
            Ok(solve_shifted_deterministic(&cfg, upsilon0, chi)?
                .terminal()
                .clone())
        })
        .collect::<Result<_>>()?;
    let k = dts.len();
    let mut distances = vec![vec![0.0; k]; k];
    let mut max_distance: f64 = 0.0;
    for i in 0..k {
        for j in 0..k {
            let d = terminals[i].zip_map(&terminals[j], |a, b| a - b).lp_norm(p);
            distances[i][j] = d;
            max_distance = max_distance.max(d);
        }
    }
    let finest = (0..k)
        .min_by(|&a, &b| dts[a].total_cmp(&dts[b]))
        .expect("nonempty");
    let to_finest = (0..k).map(|i| distances[i][finest]).collect();
    Ok(UniquenessProbe {
        dts: dts.to_vec(),
        distances,
        max_distance,
        to_finest,
    })
}

/// Linear flow `e^{t(Delta - 1)/2} f` in coefficient form (used as the `chi = 0` reference).
pub fn linear_flow(f: &TorusField, t: f64) -> SpectralCoeffs {
    heat_semigroup_spectral(&to_spectral(f), t)
}

/// Noise-free, zero-charge reference: the split scheme reduces to the linear flow of `P_N phi`.
pub fn deterministic_reference(
    config: &SolverConfig,
    initial_phi: &TorusField,
) -> Result<SolverTrajectory> {
    solve(config, initial_phi, &mut NoNoise, &SolveOptions::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gff::StreamNoise;
    use crate::gmc::replicate_gff;
    use crate::rng::RngStream;

    fn grid(m: usize) -> TorusGrid {
        TorusGrid::new(m).unwrap()
    }

    #[test]
    fn phi1_branches_agree() {
        for z in [1e-6_f64, -3e-6, 2e-5, -0.5, -10.0] {
            let exact = z.exp_m1() / z;
            assert!(
                (phi1(z) - exact).abs() < 1e-14 * exact.abs().max(1.0),
                "{z}"
            );
        }
        assert_eq!(phi1(0.0), 1.0);
    }

    #[test]
    fn zero_charge_split_is_ou() {
        let g = grid(32);
        let phi = from_spectral_unchecked(&replicate_gff(g, 1, 0));
        let cfg = SolverConfig::new(
            ChargeParams::with_alpha(0.0).unwrap(),
            MultiplierSpec::smooth_bump(),
            3,
            g,
            0.05,
            0.5,
            Scheme::Split,
        )
        .unwrap();
        let t = solve_split(
            &cfg,
            &phi,
            &mut StreamNoise::new(RngStream::new(1, 7)),
            &SolveOptions::default(),
        )
        .unwrap();
        assert!(t.y_states.last().unwrap().max_abs() == 0.0);
    }

    #[test]
    fn rejects_negative_forcing() {
        let g = grid(16);
        let cfg = ShiftedConfig::new(1.0, g, 0.1, 1.0).unwrap();
        let chi = ChiPath::Constant(TorusField::from_fn(g, |x| x[0].cos()));
        assert!(matches!(
            solve_shifted_deterministic(&cfg, &TorusField::zeros(g), &chi),
            Err(Error::NegativeForcing { .. })
        ));
    }

    #[test]
    fn blow_up_is_reported() {
        let g = grid(16);
        let mut cfg = ShiftedConfig::new(1.0, g, 0.1, 1.0).unwrap();
        cfg.clamp_threshold = 5.0;
        let chi = ChiPath::Constant(TorusField::constant(g, 1.0));
        let r = solve_shifted_deterministic(&cfg, &TorusField::constant(g, 6.0), &chi);
        assert!(matches!(r, Err(Error::BlowUp { step: 0, .. })));
    }
}
