//! Named ensemble tasks driven by a [`RunConfig`].

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::gff::gff_mode_variance;
use crate::gmc::{
    besov_bound_estimate, cauchy_decay_estimate, replicate_gff, scaling_exponent_estimate,
    wick_mean_check, xi_exponent, BesovBound, EnsembleSpec,
};
use crate::green::{covariance_crosscheck, standard_offsets};
use crate::harness::config::RunConfig;
use crate::harness::ibp::{ibp_suite, standard_cases, IbpSetup};
use crate::harness::pool::with_workers;
use crate::harness::psi_independence::psi_independence_suite;
use crate::harness::report::{
    EnsembleReport, EstimatorSummary, ReportBody, Timing, Verdict, SCHEMA_VERSION,
};
use crate::harness::stationarity::{
    standard_functionals, stationarity_suite, InitialLaw, StationaritySetup,
};
use crate::harness::tolerances::*;
use crate::multiplier::{MultiplierKind, MultiplierSpec};
use crate::spectral::TorusField;
use crate::stats::Estimate;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    GffVariance,
    WickMean,
    Scaling,
    Cauchy,
    Besov,
    Covariance,
    Ibp,
    Stationarity,
    PsiIndependence,
}

impl Task {
    pub const ALL: [Task; 9] = [
        Task::GffVariance,
        Task::WickMean,
        Task::Scaling,
        Task::Cauchy,
        Task::Besov,
        Task::Covariance,
        Task::Ibp,
        Task::Stationarity,
        Task::PsiIndependence,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Task::GffVariance => "gff_variance",
            Task::WickMean => "wick_mean",
            Task::Scaling => "scaling",
            Task::Cauchy => "cauchy",
            Task::Besov => "besov",
            Task::Covariance => "covariance",
            Task::Ibp => "ibp",
            Task::Stationarity => "stationarity",
            Task::PsiIndependence => "psi_independence",
        }
    }
}

impl std::str::FromStr for Task {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Task::ALL
            .iter()
            .copied()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown task {s:?}")))
    }
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Task-specific checks on top of [`RunConfig::validate`]: the highest level a task
/// touches must satisfy the oversampling rule.
pub fn validate_for(config: &RunConfig, task: Task) -> Result<()> {
    config.validate()?;
    let (key, level) = match task {
        Task::Cauchy => ("n_max + 1", config.n_max + 1),
        Task::Besov | Task::PsiIndependence => ("n_max", config.n_max),
        _ => ("n", config.n),
    };
    let grid = config.grid()?;
    let mut specs = vec![config.spec()];
    if task == Task::PsiIndependence {
        specs.push(MultiplierSpec::smooth_bump());
        specs.push(MultiplierSpec::sharp_square());
    }
    for s in specs {
        s.check_level(grid, level).map_err(|e| {
            Error::ConfigInvalid(format!("{key} for task {task} ({}): {e}", s.kind.name()))
        })?;
    }
    if task == Task::Stationarity && !config.spec().claims_hypothesis_p {
        return Err(Error::ConfigInvalid(format!(
            "task stationarity needs multiplier smooth_bump, got {}",
            config.multiplier.name()
        )));
    }
    Ok(())
}

fn ens(config: &RunConfig) -> Result<EnsembleSpec> {
    Ok(EnsembleSpec {
        grid: config.grid()?,
        ensemble: config.ensemble,
        seed: config.seed,
        bootstrap: config.bootstrap,
    })
}

fn summary(name: impl Into<String>, e: &Estimate) -> EstimatorSummary {
    EstimatorSummary {
        name: name.into(),
        estimate: e.mean,
        ci: e.ci(1.96),
        n: e.n,
    }
}

/// Modes whose variance the GFF task checks.
pub fn variance_modes(m: usize) -> Vec<[i64; 2]> {
    let top = (m / 2) as i64 - 1;
    let mut modes: Vec<[i64; 2]> = vec![
        [0, 0],
        [1, 0],
        [0, 1],
        [1, 1],
        [1, -1],
        [2, 0],
        [2, 1],
        [1, 2],
        [2, 2],
        [3, 0],
        [3, 1],
        [0, 3],
        [3, 3],
        [4, 0],
        [4, 2],
        [5, 0],
        [5, 5],
        [7, 1],
        [8, 0],
        [6, 6],
    ];
    for k in modes.iter_mut() {
        k[0] = k[0].clamp(-top, top);
        k[1] = k[1].clamp(-top, top);
    }
    modes
}

/// GFF mode variances against `1 / (1 + |k|^2)`.
pub fn gff_variance_body(
    config: &RunConfig,
) -> Result<(Vec<EstimatorSummary>, Vec<Verdict>, serde_json::Value)> {
    let grid = config.grid()?;
    let modes = variance_modes(grid.size());
    let rows: Vec<Vec<f64>> = (0..config.ensemble)
        .into_par_iter()
        .map(|i| {
            let c = replicate_gff(grid, config.seed, i);
            modes
                .iter()
                .map(|&k| c.real_cons_coordinate(k).powi(2))
                .collect()
        })
        .collect();
    let mut est = Vec::new();
    let mut worst: f64 = 0.0;
    for (j, &k) in modes.iter().enumerate() {
        let e = Estimate::of(&rows.iter().map(|r| r[j]).collect::<Vec<_>>());
        worst = worst.max((e.mean / gff_mode_variance(k) - 1.0).abs());
        est.push(summary(format!("var({},{})", k[0], k[1]), &e));
    }
    let v = vec![Verdict::new(
        "gff_mode_variance_max_rel_error",
        worst,
        [worst, worst],
        config.ensemble,
        GFF_VARIANCE_REL,
        "max_k |var_k (1 + |k|^2) - 1| <= tolerance",
        worst <= GFF_VARIANCE_REL,
    )];
    Ok((est, v, json!({ "modes": modes })))
}

type Body = (Vec<EstimatorSummary>, Vec<Verdict>, serde_json::Value);

fn task_body(config: &RunConfig, task: Task) -> Result<Body> {
    let spec = config.spec();
    let params = config.charge()?;
    let grid = config.grid()?;
    match task {
        Task::GffVariance => gff_variance_body(config),
        Task::WickMean => {
            let c = wick_mean_check(&spec, config.n, params, &ens(config)?)?;
            let v = Verdict::within_stderr(
                "wick_mean_one",
                c.pooled.mean,
                c.pooled.stderr,
                c.pooled.n,
                1.0,
                Z_BAND_STRICT,
            );
            Ok((
                vec![summary("node_averaged_density", &c.pooled)],
                vec![v],
                serde_json::to_value(&c)?,
            ))
        }
        Task::Scaling => {
            let radii = [0.125, 0.25, 0.5, 1.0, 2.0];
            let fit = scaling_exponent_estimate(
                &spec,
                config.n,
                params,
                config.moment,
                &radii,
                16,
                &ens(config)?,
            )?;
            let target = xi_exponent(params.alpha, config.moment);
            let rel = (fit.slope - target).abs() / target;
            let v = Verdict::new(
                "scaling_exponent",
                fit.slope,
                fit.ci95,
                config.ensemble,
                SCALING_REL,
                format!("|slope - {target}| / {target} <= tolerance"),
                rel <= SCALING_REL,
            );
            let s = EstimatorSummary {
                name: "slope".into(),
                estimate: fit.slope,
                ci: fit.ci95,
                n: config.ensemble,
            };
            Ok((vec![s], vec![v], serde_json::to_value(&fit)?))
        }
        Task::Cauchy => {
            let one = TorusField::constant(grid, 1.0);
            let d = cauchy_decay_estimate(&spec, params, &one, &config.levels(), &ens(config)?)?;
            let decreasing = d.mean_abs_diff.windows(2).all(|w| w[1].mean < w[0].mean);
            let v = Verdict::new(
                "cauchy_decay_slope",
                d.fit.slope,
                d.fit.ci95,
                config.ensemble,
                0.0,
                "means strictly decreasing and upper 95% bound of log2-slope < tolerance",
                decreasing && d.fit.ci95[1] < 0.0,
            );
            let est = d
                .levels
                .iter()
                .zip(&d.mean_abs_diff)
                .map(|(n, e)| summary(format!("E|M_{}-M_{}|", n + 1, n), e))
                .collect();
            Ok((est, vec![v], serde_json::to_value(&d)?))
        }
        Task::Besov => {
            let b: BesovBound =
                besov_bound_estimate(&spec, params, &config.levels(), &ens(config)?)?;
            let vals: Vec<f64> = b.levels.iter().map(|l| l.besov_p.mean).collect();
            let ok = BesovBound::nondiverging(&vals);
            let last = *vals.last().unwrap_or(&f64::NAN);
            let v = Verdict::new(
                "besov_nondiverging",
                last,
                [last, last],
                config.ensemble,
                0.0,
                "level norms do not grow",
                ok,
            );
            let est = b
                .levels
                .iter()
                .map(|l| summary(format!("besov_p_N{}", l.n), &l.besov_p))
                .collect();
            Ok((est, vec![v], serde_json::to_value(&b)?))
        }
        Task::Covariance => {
            let c = covariance_crosscheck(
                &spec,
                config.n,
                grid,
                &standard_offsets(grid),
                config.ensemble,
                config.seed,
            )?;
            let v = Verdict::new(
                "covariance_crosscheck",
                c.max_abs_z,
                [c.max_abs_z, c.max_abs_z],
                config.ensemble,
                Z_BAND_LOOSE,
                "max |z| over displacements <= tolerance",
                c.max_abs_z <= Z_BAND_LOOSE,
            );
            let est = c
                .points
                .iter()
                .map(|p| {
                    summary(
                        format!("cov({},{})", p.offset[0], p.offset[1]),
                        &p.monte_carlo,
                    )
                })
                .collect();
            Ok((est, vec![v], serde_json::to_value(&c)?))
        }
        Task::Ibp => {
            let setup = IbpSetup {
                spec,
                n: config.n,
                params,
                grid,
                ensemble: config.ensemble,
                seed: config.seed,
            };
            let res = ibp_suite(&setup, &standard_cases())?;
            let mut est = Vec::new();
            let mut v = Vec::new();
            for (i, r) in res.iter().enumerate() {
                let z = r.residual_in_stderr_units;
                est.push(EstimatorSummary {
                    name: format!("ibp{i}_lhs"),
                    estimate: r.lhs,
                    ci: [r.lhs, r.lhs],
                    n: r.ensemble,
                });
                est.push(EstimatorSummary {
                    name: format!("ibp{i}_rhs"),
                    estimate: r.rhs,
                    ci: [r.rhs, r.rhs],
                    n: r.ensemble,
                });
                v.push(Verdict::new(
                    format!("ibp_residual_{i}"),
                    z,
                    [z - 1.96, z + 1.96],
                    r.ensemble,
                    Z_BAND_LOOSE,
                    "|residual| in stderr units <= tolerance",
                    z.abs() <= Z_BAND_LOOSE,
                ));
            }
            Ok((est, v, serde_json::to_value(&res)?))
        }
        Task::Stationarity => {
            let setup = StationaritySetup {
                spec,
                n: config.n,
                params,
                grid,
                dt: config.dt,
                horizon: config.horizon,
                ensemble: config.ensemble,
                proposals: 10 * config.ensemble,
                seed: config.seed,
                initial: InitialLaw::MuN,
            };
            let r = stationarity_suite(&setup, &standard_functionals())?;
            let v = Verdict::new(
                "stationarity_min_holm_p",
                r.min_holm_p,
                [r.min_holm_p, r.min_holm_p],
                config.ensemble,
                TEST_LEVEL,
                "smallest Holm-adjusted KS p-value >= tolerance",
                r.passed,
            );
            let est = r
                .ess
                .iter()
                .enumerate()
                .map(|(g, &e)| EstimatorSummary {
                    name: format!("ess_group{g}"),
                    estimate: e,
                    ci: [e, e],
                    n: setup.proposals,
                })
                .collect();
            Ok((est, vec![v], serde_json::to_value(&r)?))
        }
        Task::PsiIndependence => {
            let other = if spec.kind == MultiplierKind::SmoothBump {
                MultiplierSpec::sharp_square()
            } else {
                MultiplierSpec::smooth_bump()
            };
            let one = TorusField::constant(grid, 1.0);
            let r = psi_independence_suite(
                [spec, other],
                params,
                &one,
                &config.levels(),
                &ens(config)?,
            )?;
            let last = r.difference.last().expect("levels");
            let v = vec![
                Verdict::within_stderr(
                    "psi_terminal_difference",
                    last.mean,
                    last.stderr,
                    last.n,
                    0.0,
                    Z_BAND_STRICT,
                ),
                Verdict::new(
                    "psi_abs_difference_trend",
                    r.trend.slope,
                    r.trend.ci95,
                    config.ensemble,
                    0.0,
                    "upper 95% bound of log2-slope < tolerance",
                    r.shrinking,
                ),
            ];
            let est = r
                .levels
                .iter()
                .zip(&r.mean_abs_difference)
                .map(|(n, e)| summary(format!("E|D_{n}|"), e))
                .collect();
            Ok((est, v, serde_json::to_value(&r)?))
        }
    }
}

/// Run `task` on a pool of `config.workers` threads. The body depends only on `config`.
pub fn run_ensemble(config: &RunConfig, task: Task) -> Result<EnsembleReport> {
    validate_for(config, task)?;
    let start = Instant::now();
    let (estimators, verdicts, details) =
        with_workers(config.workers, || task_body(config, task))??;
    let wall = start.elapsed().as_secs_f64();
    Ok(EnsembleReport {
        schema_version: SCHEMA_VERSION,
        body: ReportBody {
            task: task.name().into(),
            config: config.clone(),
            estimators,
            verdicts,
            details,
        },
        timing: Timing {
            wall_seconds: wall,
            replicates_per_second: config.ensemble as f64 / wall.max(1e-9),
        },
    })
}
