//! The acceptance suite: thirteen criteria, each a list of verdicts at fixed tolerances.
//!
//! Ensemble sizes are multiplied by the config's `scale`; every other setting is fixed here.

use std::f64::consts::PI;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::Result;
use crate::gff::{NoNoise, StreamNoise};
use crate::gmc::{
    cauchy_decay_estimate, replicate_gff, scaling_exponent_estimate, wick_mean_check,
    wick_renorm_constant, xi_exponent, ChargeParams, EnsembleSpec,
};
use crate::green::{covariance_crosscheck, gn1_band, green_diff_norm, kernel_k, standard_offsets};
use crate::harness::config::RunConfig;
use crate::harness::ensemble::{gff_variance_body, run_ensemble, Task};
use crate::harness::ibp::{ibp_suite, standard_cases, IbpSetup};
use crate::harness::pool::with_workers;
use crate::harness::psi_independence::psi_independence_suite;
use crate::harness::report::{EnsembleReport, ReportBody, Timing, Verdict, SCHEMA_VERSION};
use crate::harness::stationarity::{
    standard_functionals, stationarity_suite, InitialLaw, StationaritySetup,
};
use crate::harness::tolerances::*;
use crate::multiplier::MultiplierSpec;
use crate::quadrature::gauss_legendre;
use crate::rng::{Purpose, RngStream};
use crate::solver::{
    linear_flow, solve, solve_shifted_deterministic, ChiPath, Scheme, ShiftedConfig, SolveOptions,
    SolverConfig, XDriver,
};
use crate::spectral::{from_spectral_unchecked, TorusField, TorusGrid};
use crate::stats::fit_line;

/// Outcome of one criterion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub id: u8,
    pub name: String,
    pub verdicts: Vec<Verdict>,
    pub details: serde_json::Value,
    pub seconds: f64,
}

impl CriterionOutcome {
    pub fn passed(&self) -> bool {
        !self.verdicts.is_empty() && self.verdicts.iter().all(|v| v.passed)
    }

    /// One line: `PASS|FAIL  [id] name  (failing verdicts)`.
    pub fn summary_line(&self) -> String {
        let failing: Vec<String> = self
            .verdicts
            .iter()
            .filter(|v| !v.passed)
            .map(|v| format!("{}={:.4e} vs {:.4e}", v.name, v.estimate, v.tolerance))
            .collect();
        format!(
            "{} [{:>2}] {} ({:.1}s){}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.seconds,
            if failing.is_empty() {
                String::new()
            } else {
                format!("  {}", failing.join("; "))
            }
        )
    }
}

/// Suite-wide knobs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteSettings {
    pub scale: f64,
    pub seed: u64,
    pub workers: usize,
}

impl SuiteSettings {
    pub fn from_config(c: &RunConfig) -> Self {
        SuiteSettings {
            scale: c.scale,
            seed: c.seed,
            workers: c.workers,
        }
    }

    fn size(&self, base: usize) -> usize {
        ((base as f64 * self.scale).round() as usize).max(20)
    }
}

pub const CRITERIA: [&str; 13] = [
    "gff_covariance",
    "renormalization_growth",
    "wick_mean_one",
    "multifractal_scaling",
    "cauchy_decay",
    "psi_independence",
    "green_kernel",
    "green_regularized",
    "solver_sign_invariant",
    "solver_oracles",
    "integration_by_parts",
    "stationarity",
    "determinism",
];

fn grid(m: usize) -> TorusGrid {
    TorusGrid::new(m).expect("power-of-two grid")
}

fn outcome(
    id: u8,
    verdicts: Vec<Verdict>,
    details: serde_json::Value,
    start: Instant,
) -> CriterionOutcome {
    CriterionOutcome {
        id,
        name: CRITERIA[id as usize - 1].into(),
        verdicts,
        details,
        seconds: start.elapsed().as_secs_f64(),
    }
}

pub fn gff_covariance(s: &SuiteSettings) -> Result<CriterionOutcome> {
    let t = Instant::now();
    let cfg = RunConfig {
        grid: 32,
        n: 3,
        ensemble: s.size(20000),
        seed: s.seed,
        ..RunConfig::default()
    };
    let (est, v, d) = gff_variance_body(&cfg)?;
    Ok(outcome(1, v, json!({ "estimators": est, "details": d }), t))
}

pub fn renormalization_growth(_s: &SuiteSettings) -> Result<CriterionOutcome> {
    let t = Instant::now();
    let spec = MultiplierSpec::sharp_square();
    let target = 2f64.ln() / (2.0 * PI);
    let mut v = Vec::new();
    let mut rows = Vec::new();
    for n in 4..=7u32 {
        let r = 4 * (1i64 << (n + 1));
        let d = spec.renorm_constant(n + 1, r)?.value - spec.renorm_constant(n, r)?.value;
        let rel = (d / target - 1.0).abs();
        rows.push(json!({ "n": n, "difference": d, "relative_error": rel }));
        v.push(Verdict::new(
            format!("C_{}-C_{}", n + 1, n),
            d,
            [d, d],
            1,
            RENORM_GROWTH_REL,
            format!("|difference / {target} - 1| <= tolerance"),
            rel <= RENORM_GROWTH_REL,
        ));
    }
    Ok(outcome(2, v, json!(rows), t))
}

pub fn wick_mean_one(s: &SuiteSettings) -> Result<CriterionOutcome> {
    let t = Instant::now();
    let spec = MultiplierSpec::sharp_square();
    let ens = EnsembleSpec {
        grid: grid(128),
        ensemble: s.size(4000),
        seed: s.seed,
        bootstrap: 0,
    };
    let mut v = Vec::new();
    let mut d = Vec::new();
    for r in [1.0, 2.0, 3.0] {
        let params = ChargeParams::from_alpha_sq_over_pi(r)?;
        for n in [3u32, 5] {
            let c = wick_mean_check(&spec, n, params, &ens)?;
            v.push(Verdict::within_stderr(
                format!("wick_mean a2={r}pi n={n}"),
                c.pooled.mean,
                c.pooled.stderr,
                c.pooled.n,
                1.0,
                Z_BAND_STRICT,
            ));
            d.push(json!({ "alpha_sq_over_pi": r, "n": n, "check": c }));
        }
    }
    Ok(outcome(3, v, json!(d), t))
}

pub fn multifractal_scaling(s: &SuiteSettings) -> Result<CriterionOutcome> {
    let t = Instant::now();
    let spec = MultiplierSpec::sharp_square();
    let radii = [0.125, 0.25, 0.5, 1.0, 2.0];
    let ens = EnsembleSpec {
        grid: grid(256),
        ensemble: s.size(400),
        seed: s.seed,
        bootstrap: 200,
    };
    let p = 1.5;
    let mut v = Vec::new();
    let mut d = Vec::new();
    for r in [2.0, 1.0] {
        let params = ChargeParams::from_alpha_sq_over_pi(r)?;
        let fit = scaling_exponent_estimate(&spec, 5, params, p, &radii, 16, &ens)?;
        let target = xi_exponent(params.alpha, p);
        let rel = (fit.slope - target).abs() / target;
        v.push(Verdict::new(
            format!("scaling a2={r}pi p={p}"),
            fit.slope,
            fit.ci95,
            ens.ensemble,
            SCALING_REL,
            format!("|slope - {target:.4}| / {target:.4} <= tolerance"),
            rel <= SCALING_REL,
        ));
        d.push(json!({ "alpha_sq_over_pi": r, "target": target, "fit": fit }));
    }
    let zero = ChargeParams::with_alpha(0.0)?;
    let small = EnsembleSpec { ensemble: 4, ..ens };
    let fit = scaling_exponent_estimate(&spec, 5, zero, p, &radii, 16, &small)?;
    v.push(Verdict::new(
        "scaling alpha=0",
        fit.slope,
        fit.ci95,
        small.ensemble,
        SCALING_LEBESGUE_ABS,
        format!("|slope - {}| <= tolerance", 2.0 * p),
        (fit.slope - 2.0 * p).abs() <= SCALING_LEBESGUE_ABS,
    ));
    d.push(json!({ "alpha_sq_over_pi": 0.0, "target": 2.0 * p, "fit": fit }));
    Ok(outcome(4, v, json!(d), t))
}

pub fn cauchy_decay(s: &SuiteSettings) -> Result<CriterionOutcome> {
    let t = Instant::now();
    let g = grid(512);
    let ens = EnsembleSpec {
        grid: g,
        ensemble: s.size(300),
        seed: s.seed,
        bootstrap: 400,
    };
    let params = ChargeParams::from_alpha_sq_over_pi(2.0)?;
    let levels: Vec<u32> = (2..=6).collect();
    let d = cauchy_decay_estimate(
        &MultiplierSpec::sharp_square(),
        params,
        &TorusField::constant(g, 1.0),
        &levels,
        &ens,
    )?;
    let decreasing = d.mean_abs_diff.windows(2).all(|w| w[1].mean < w[0].mean);
    let means: Vec<f64> = d.mean_abs_diff.iter().map(|e| e.mean).collect();
    let v = vec![
        Verdict::new(
            "strictly_decreasing",
            means
                .windows(2)
                .map(|w| w[1] - w[0])
                .fold(f64::NEG_INFINITY, f64::max),
            [f64::NAN, f64::NAN],
            ens.ensemble,
            0.0,
            "largest successive change of E|<1, M_{N+1} - M_N>| < tolerance",
            decreasing,
        ),
        Verdict::new(
            "log2_slope",
            d.fit.slope,
            d.fit.ci95,
            ens.ensemble,
            0.0,
            "upper 95% bootstrap bound < tolerance",
            d.fit.ci95[1] < 0.0,
        ),
    ];
    Ok(outcome(5, v, serde_json::to_value(&d)?, t))
}

pub fn psi_independence(s: &SuiteSettings) -> Result<CriterionOutcome> {
    let t = Instant::now();
    let g = grid(256);
    let ens = EnsembleSpec {
        grid: g,
        ensemble: s.size(1000),
        seed: s.seed,
        bootstrap: 200,
    };
    let params = ChargeParams::from_alpha_sq_over_pi(2.0)?;
    let one = TorusField::constant(g, 1.0);
    let mut v = Vec::new();
    let mut d = Vec::new();
    for (specs, levels) in [
        (
            [
                MultiplierSpec::sharp_square(),
                MultiplierSpec::smooth_bump(),
            ],
            vec![3u32, 4, 5, 6],
        ),
        (
            [
                MultiplierSpec::sharp_ball(),
                MultiplierSpec::circle_average(),
            ],
            vec![2, 3, 4],
        ),
    ] {
        let r = psi_independence_suite(specs, params, &one, &levels, &ens)?;
        let tag = format!("{}-{}", specs[0].kind.name(), specs[1].kind.name());
        let last = r.difference.last().expect("levels");
        v.push(Verdict::within_stderr(
            format!("{tag} terminal"),
            last.mean,
            last.stderr,
            last.n,
            0.0,
            Z_BAND_STRICT,
        ));
        v.push(Verdict::new(
            format!("{tag} shrinking"),
            r.trend.slope,
            r.trend.ci95,
            ens.ensemble,
            0.0,
            "upper 95% bound of the log2-slope of E|D_n| < tolerance",
            r.shrinking,
        ));
        d.push(serde_json::to_value(&r)?);
    }
    Ok(outcome(6, v, json!(d), t))
}

/// `K(r)` by its convergent series for `r <= 2` and by composite Gauss-Legendre on
/// `(1/2pi) int_1^inf exp(-(r/2)(t + 1/t)) dt / t` otherwise; shares no code with [`kernel_k`].
pub fn kernel_oracle(r: f64) -> f64 {
    if r <= 2.0 {
        let euler_gamma = 0.577_215_664_901_532_9;
        let q = 0.25 * r * r;
        let (mut term, mut harmonic, mut i0, mut s) = (1.0, 0.0, 1.0, 0.0);
        for k in 1..60 {
            term *= q / (k * k) as f64;
            harmonic += 1.0 / k as f64;
            i0 += term;
            s += term * harmonic;
        }
        (-((0.5 * r).ln() + euler_gamma) * i0 + s) / (2.0 * PI)
    } else {
        let (x, w) = gauss_legendre(32);
        let f = |t: f64| (-(0.5 * r) * (t + 1.0 / t - 2.0)).exp() / t;
        let top = 1.0 + 80.0 / r + (80.0 / r).sqrt() * 4.0;
        let panels = 64;
        let h = (top - 1.0) / panels as f64;
        let mut sum = 0.0;
        for p in 0..panels {
            let a = 1.0 + p as f64 * h;
            for (xi, wi) in x.iter().zip(&w) {
                sum += 0.5 * h * wi * f(a + 0.5 * h * (xi + 1.0));
            }
        }
        (-r).exp() * sum / (2.0 * PI)
    }
}

pub fn green_kernel(_s: &SuiteSettings) -> Result<CriterionOutcome> {
    let t = Instant::now();
    let log_band: Vec<f64> = (0..=60)
        .map(|i| {
            let r = 1e-4 * (0.99f64 / 1e-4).powf(i as f64 / 60.0);
            kernel_k(r).map(|k| k + r.ln() / (2.0 * PI))
        })
        .collect::<Result<_>>()?;
    let exp_band: Vec<f64> = (0..=60)
        .map(|i| {
            let r = 1.0 + 19.0 * i as f64 / 60.0;
            kernel_k(r).map(|k| k * (0.5 * r).exp())
        })
        .collect::<Result<_>>()?;
    let max_abs = |v: &[f64]| v.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let radii: Vec<f64> = (0..20)
        .map(|i| 1e-3 * (20.0f64 / 1e-3).powf(i as f64 / 19.0))
        .collect();
    let mut worst: f64 = 0.0;
    for &r in &radii {
        worst = worst.max((kernel_k(r)? - kernel_oracle(r)).abs());
    }
    let (lb, eb) = (max_abs(&log_band), max_abs(&exp_band));
    let v = vec![
        Verdict::at_most("|K(r) + log(r)/2pi| on [1e-4, 0.99]", lb, GREEN_BAND_MAX),
        Verdict::at_most("K(r) e^{r/2} on [1, 20]", eb, GREEN_BAND_MAX),
        Verdict::at_most("max |K - oracle| at 20 radii", worst, KERNEL_ORACLE_ABS),
    ];
    Ok(outcome(
        7,
        v,
        json!({ "log_band": log_band, "exp_band": exp_band, "radii": radii }),
        t,
    ))
}

pub fn green_regularized(s: &SuiteSettings) -> Result<CriterionOutcome> {
    let t = Instant::now();
    let mut v = Vec::new();
    let disps: Vec<[f64; 2]> = (0..24)
        .map(|i| {
            let r = 1e-3 * (3.0f64 / 1e-3).powf(i as f64 / 23.0);
            let th = 0.7 * i as f64;
            [r * th.cos(), r * th.sin()]
        })
        .collect();
    let mut bands = Vec::new();
    for spec in [
        MultiplierSpec::sharp_square(),
        MultiplierSpec::smooth_bump(),
    ] {
        for n in 3..=6u32 {
            let b = gn1_band(&spec, n, &disps)?;
            bands.push(json!({ "kind": spec.kind.name(), "n": n, "band": b }));
            v.push(Verdict::at_most(
                format!("GN1 band {} n={n}", spec.kind.name()),
                b[0].abs().max(b[1].abs()),
                GN1_BAND_MAX,
            ));
        }
    }
    let q = grid(1024);
    let mut slopes = Vec::new();
    for p in [1.0, 2.0] {
        let ns: Vec<u32> = (3..=7).collect();
        let vals: Vec<f64> = ns
            .par_iter()
            .map(|&n| green_diff_norm(&MultiplierSpec::sharp_square(), 8, n, p, q))
            .collect::<Result<_>>()?;
        let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
        let ys: Vec<f64> = vals.iter().map(|x| x.log2()).collect();
        let slope = fit_line(&xs, &ys)?.slope;
        slopes.push(json!({ "p": p, "values": vals, "slope": slope }));
        v.push(Verdict::new(
            format!("green_diff_norm slope p={p}"),
            slope,
            [slope, slope],
            ns.len(),
            0.0,
            "log2-slope over N < tolerance",
            slope < 0.0,
        ));
    }
    let g = grid(128);
    let cov = covariance_crosscheck(
        &MultiplierSpec::sharp_square(),
        3,
        g,
        &standard_offsets(g),
        s.size(20000),
        s.seed,
    )?;
    v.push(Verdict::new(
        "covariance crosscheck",
        cov.max_abs_z,
        [cov.max_abs_z, cov.max_abs_z],
        s.size(20000),
        Z_BAND_LOOSE,
        "max |z| over 12 displacements <= tolerance",
        cov.max_abs_z <= Z_BAND_LOOSE,
    ));
    Ok(outcome(
        8,
        v,
        json!({ "gn1": bands, "diff_norm": slopes, "covariance": cov }),
        t,
    ))
}

/// The twenty sign-invariant configurations: both compact smooth/sharp kinds, five charges,
/// levels 3 and 4, on grids `16 * 2^n`.
pub fn sign_corpus() -> Vec<(MultiplierSpec, u32, f64)> {
    let mut out = Vec::new();
    for spec in [
        MultiplierSpec::sharp_square(),
        MultiplierSpec::smooth_bump(),
    ] {
        for n in [3u32, 4] {
            for r in [0.5, 1.0, 2.0, 3.0, 4.0] {
                out.push((spec, n, r));
            }
        }
    }
    out
}

pub fn solver_sign_invariant(s: &SuiteSettings) -> Result<CriterionOutcome> {
    let t = Instant::now();
    let corpus = sign_corpus();
    let rows: Vec<(f64, serde_json::Value)> = corpus
        .par_iter()
        .enumerate()
        .map(|(i, &(spec, n, r))| {
            let g = grid(16 << n);
            let cfg = SolverConfig::new(ChargeParams::from_alpha_sq_over_pi(r)?, spec, n, g, 1e-2, 1.0, Scheme::Split)?;
            let phi0 = from_spectral_unchecked(&replicate_gff(g, s.seed, i));
            let rng = RngStream::for_purpose(s.seed, Purpose::Noise, i as u64);
            let traj = solve(&cfg, &phi0, &mut StreamNoise::new(rng), &SolveOptions::default())?;
            let m = traj.max_alpha_y();
            Ok((m, json!({ "kind": spec.kind.name(), "n": n, "grid": g.size(), "alpha_sq_over_pi": r, "max_alpha_y": m })))
        })
        .collect::<Result<_>>()?;
    let worst = rows.iter().map(|r| r.0).fold(f64::NEG_INFINITY, f64::max);
    let v = vec![Verdict::at_most(
        "max alpha Y over corpus",
        worst,
        SIGN_INVARIANT_SLACK,
    )];
    Ok(outcome(
        9,
        v,
        json!(rows.into_iter().map(|r| r.1).collect::<Vec<_>>()),
        t,
    ))
}

/// Classical RK4 for `y' = -y/2 - (alpha/2) exp(alpha (x + y) - alpha^2 c / 2)`, `y(0) = 0`.
pub fn frozen_ode_rk4(alpha: f64, x: f64, c: f64, horizon: f64, steps: usize) -> f64 {
    let f = |y: f64| -0.5 * y - 0.5 * alpha * (alpha * (x + y) - 0.5 * alpha * alpha * c).exp();
    let h = horizon / steps as f64;
    let mut y = 0.0;
    for _ in 0..steps {
        let k1 = f(y);
        let k2 = f(y + 0.5 * h * k1);
        let k3 = f(y + 0.5 * h * k2);
        let k4 = f(y + h * k3);
        y += h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
    }
    y
}

pub fn solver_oracles(s: &SuiteSettings) -> Result<CriterionOutcome> {
    let t = Instant::now();
    let mut v = Vec::new();
    let mut d = serde_json::Map::new();

    // frozen constant X: Y stays constant and solves a scalar ODE
    let g = grid(8);
    let spec = MultiplierSpec::sharp_square();
    let params = ChargeParams::from_alpha_sq_over_pi(2.0)?;
    let x0 = 0.3;
    let dt = FROZEN_ODE_DT;
    let cfg = SolverConfig::new(params, spec, 1, g, dt, 1.0, Scheme::Split)?;
    let c = wick_renorm_constant(&spec, 1, g)?.value;
    let opts = SolveOptions {
        record_every: usize::MAX,
        x_driver: XDriver::Frozen(TorusField::constant(g, x0)),
    };
    let traj = solve(&cfg, &TorusField::zeros(g), &mut NoNoise, &opts)?;
    let y = traj.y_states.last().expect("final state");
    let oracle = frozen_ode_rk4(params.alpha, x0, c, 1.0, 20000);
    let err = y
        .values()
        .iter()
        .map(|v| (v - oracle).abs())
        .fold(0.0, f64::max);
    d.insert(
        "frozen".into(),
        json!({ "oracle": oracle, "max_error": err, "dt": dt }),
    );
    v.push(Verdict::at_most("frozen-field ODE", err, FROZEN_ODE_ABS));

    // chi = 0: the shifted equation is the linear flow
    let g = grid(64);
    let u0 = from_spectral_unchecked(&replicate_gff(g, s.seed, 1)).map(|x| 0.5 * x);
    let sc = ShiftedConfig::new(1.3, g, 0.01, 1.0)?;
    let traj = solve_shifted_deterministic(&sc, &u0, &ChiPath::Constant(TorusField::zeros(g)))?;
    let exact = from_spectral_unchecked(&linear_flow(&u0, 1.0));
    let lin_err = traj.terminal().zip_map(&exact, |a, b| (a - b).abs()).max();
    d.insert("linear".into(), json!({ "max_error": lin_err }));
    v.push(Verdict::at_most(
        "chi = 0 linear flow",
        lin_err,
        LINEAR_FLOW_ABS,
    ));

    // split and direct_expsqe1 on a shared noise path
    let spec = MultiplierSpec::smooth_bump();
    let params = ChargeParams::from_alpha_sq_over_pi(1.0)?;
    let phi0 = from_spectral_unchecked(&replicate_gff(g, s.seed, 2));
    let run = |scheme| -> Result<TorusField> {
        let cfg = SolverConfig::new(params, spec, 3, g, SPLIT_DIRECT_DT, 1.0, scheme)?;
        let rng = RngStream::for_purpose(s.seed, Purpose::Noise, 2);
        Ok(solve(
            &cfg,
            &phi0,
            &mut StreamNoise::new(rng),
            &SolveOptions::default(),
        )?
        .final_phi()
        .clone())
    };
    let (a, b) = (run(Scheme::Split)?, run(Scheme::DirectExpsqe1)?);
    let rel = a.zip_map(&b, |x, y| x - y).lp_norm(2.0) / a.lp_norm(2.0);
    d.insert(
        "split_vs_direct".into(),
        json!({ "relative_l2": rel, "dt": SPLIT_DIRECT_DT }),
    );
    v.push(Verdict::at_most(
        "split vs direct_expsqe1",
        rel,
        SPLIT_DIRECT_REL,
    ));

    // dt halving on the shifted equation with positive forcing
    let g = grid(32);
    let chi = ChiPath::Constant(TorusField::from_fn(g, |x| {
        1.0 + 0.5 * x[0].cos() * x[1].sin()
    }));
    let u0 = TorusField::from_fn(g, |x| 0.4 * (x[0] + 2.0 * x[1]).sin());
    let base = ShiftedConfig::new(1.5, g, 0.05, 1.0)?;
    let terminal = |dt: f64| -> Result<TorusField> {
        Ok(
            solve_shifted_deterministic(&ShiftedConfig { dt, ..base }, &u0, &chi)?
                .terminal()
                .clone(),
        )
    };
    let reference = terminal(0.05 / 256.0)?;
    let errs: Vec<f64> = [0.05, 0.025, 0.0125, 0.00625]
        .iter()
        .map(|&dt| Ok(terminal(dt)?.zip_map(&reference, |a, b| a - b).lp_norm(2.0)))
        .collect::<Result<_>>()?;
    let factors: Vec<f64> = errs.windows(2).map(|w| w[0] / w[1]).collect();
    let worst = factors.iter().cloned().fold(f64::INFINITY, f64::min);
    d.insert(
        "dt_halving".into(),
        json!({ "errors": errs, "factors": factors }),
    );
    v.push(Verdict::at_least(
        "dt-halving contraction",
        worst,
        DT_HALVING_MIN_FACTOR,
    ));

    Ok(outcome(10, v, serde_json::Value::Object(d), t))
}

pub fn integration_by_parts(s: &SuiteSettings) -> Result<CriterionOutcome> {
    let t = Instant::now();
    let mut v = Vec::new();
    let mut d = Vec::new();
    for r in [0.0, 1.0, 2.0] {
        let setup = IbpSetup {
            spec: MultiplierSpec::sharp_square(),
            n: 3,
            params: ChargeParams::from_alpha_sq_over_pi(r)?,
            grid: grid(64),
            ensemble: s.size(50000),
            seed: s.seed,
        };
        for (i, res) in ibp_suite(&setup, &standard_cases())?
            .into_iter()
            .enumerate()
        {
            let z = res.residual_in_stderr_units;
            v.push(Verdict::new(
                format!("ibp a2={r}pi case {i}"),
                z,
                [z - 1.96, z + 1.96],
                res.ensemble,
                Z_BAND_LOOSE,
                "|residual| in stderr units <= tolerance",
                z.abs() <= Z_BAND_LOOSE,
            ));
            d.push(json!({ "alpha_sq_over_pi": r, "result": res }));
        }
    }
    Ok(outcome(11, v, json!(d), t))
}

pub fn stationarity(s: &SuiteSettings) -> Result<CriterionOutcome> {
    let t = Instant::now();
    let setup = StationaritySetup {
        spec: MultiplierSpec::smooth_bump(),
        n: 3,
        params: ChargeParams::from_alpha_sq_over_pi(1.0)?,
        grid: grid(32),
        dt: 0.01,
        horizon: 1.0,
        ensemble: s.size(2000),
        proposals: s.size(20000),
        seed: s.seed,
        initial: InitialLaw::MuN,
    };
    let r = stationarity_suite(&setup, &standard_functionals())?;
    let v = vec![
        Verdict::new(
            "min Holm-adjusted KS p",
            r.min_holm_p,
            [r.min_holm_p, r.min_holm_p],
            setup.ensemble,
            TEST_LEVEL,
            "smallest Holm-adjusted p-value over 10 functionals x 3 time pairs >= tolerance",
            r.passed,
        ),
        Verdict::at_least(
            "importance ESS",
            r.ess.iter().cloned().fold(f64::INFINITY, f64::min),
            MIN_ESS,
        ),
    ];
    Ok(outcome(12, v, serde_json::to_value(&r)?, t))
}

pub fn determinism(s: &SuiteSettings) -> Result<CriterionOutcome> {
    let t = Instant::now();
    let mut v = Vec::new();
    let mut d = Vec::new();
    for (task, cfg) in [
        (
            Task::WickMean,
            RunConfig {
                grid: 64,
                n: 3,
                ensemble: 200,
                ..RunConfig::default()
            },
        ),
        (
            Task::Ibp,
            RunConfig {
                grid: 32,
                n: 3,
                ensemble: 400,
                ..RunConfig::default()
            },
        ),
        (
            Task::Cauchy,
            RunConfig {
                grid: 64,
                n: 3,
                n_min: 2,
                n_max: 3,
                ensemble: 100,
                bootstrap: 50,
                ..RunConfig::default()
            },
        ),
    ] {
        let cfg = RunConfig {
            seed: s.seed,
            ..cfg
        };
        let one = run_ensemble(
            &RunConfig {
                workers: 1,
                ..cfg.clone()
            },
            task,
        )?;
        let eight = run_ensemble(
            &RunConfig {
                workers: 8,
                ..cfg.clone()
            },
            task,
        )?;
        let mut a = one.body.clone();
        let mut b = eight.body.clone();
        a.config.workers = 0;
        b.config.workers = 0;
        let same = serde_json::to_string(&a)? == serde_json::to_string(&b)?;
        d.push(json!({ "task": task.name(), "identical": same }));
        v.push(Verdict::new(
            format!("{} bodies, 1 vs 8 workers", task.name()),
            if same { 0.0 } else { 1.0 },
            [0.0, 0.0],
            2,
            0.0,
            "number of differing bodies <= tolerance",
            same,
        ));
    }
    Ok(outcome(13, v, json!(d), t))
}

pub type CriterionFn = fn(&SuiteSettings) -> Result<CriterionOutcome>;

pub const SUITE: [CriterionFn; 13] = [
    gff_covariance,
    renormalization_growth,
    wick_mean_one,
    multifractal_scaling,
    cauchy_decay,
    psi_independence,
    green_kernel,
    green_regularized,
    solver_sign_invariant,
    solver_oracles,
    integration_by_parts,
    stationarity,
    determinism,
];

/// Run one criterion, turning an error into a failing outcome that names it.
pub fn run_criterion(id: u8, s: &SuiteSettings) -> CriterionOutcome {
    let t = Instant::now();
    match SUITE[id as usize - 1](s) {
        Ok(o) => o,
        Err(e) => outcome(
            id,
            vec![Verdict::new(
                "error",
                f64::NAN,
                [f64::NAN; 2],
                0,
                0.0,
                e.to_string(),
                false,
            )],
            json!({ "error": e.to_string() }),
            t,
        ),
    }
}

/// Every criterion, in order, as one composite report.
pub fn verify_all(
    config: &RunConfig,
    mut on_done: impl FnMut(&CriterionOutcome),
) -> Result<(EnsembleReport, Vec<CriterionOutcome>)> {
    config.validate()?;
    let s = SuiteSettings::from_config(config);
    let start = Instant::now();
    let mut outcomes = Vec::new();
    for id in 1..=13u8 {
        let o = with_workers(s.workers, || run_criterion(id, &s))?;
        on_done(&o);
        outcomes.push(o);
    }
    let verdicts = outcomes
        .iter()
        .flat_map(|o| {
            o.verdicts.iter().map(move |v| Verdict {
                name: format!("[{}] {}: {}", o.id, o.name, v.name),
                ..v.clone()
            })
        })
        .collect();
    let details = outcomes
        .iter()
        .map(|o| json!({ "id": o.id, "name": o.name, "passed": o.passed(), "details": o.details }))
        .collect();
    let wall = start.elapsed().as_secs_f64();
    let report = EnsembleReport {
        schema_version: SCHEMA_VERSION,
        body: ReportBody {
            task: "verify".into(),
            config: config.clone(),
            estimators: Vec::new(),
            verdicts,
            details: serde_json::Value::Array(details),
        },
        timing: Timing {
            wall_seconds: wall,
            replicates_per_second: f64::NAN,
        },
    };
    Ok((report, outcomes))
}

/// Task list printed by `--dry-run`.
pub fn plan() -> Vec<String> {
    CRITERIA
        .iter()
        .enumerate()
        .map(|(i, n)| format!("[{:>2}] {n}", i + 1))
        .collect()
}
