//! Stationarity of the direct scheme started from `mu_N`: three independent importance-resampled
//! pools are evolved to `0`, `T/2` and `T`, and each functional's three marginals are compared
//! pairwise with two-sample KS tests under Holm correction.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gff::StreamNoise;
use crate::gmc::{replicate_gff, ChargeParams, WickBuilder};
use crate::harness::tolerances::{MIN_ESS, TEST_LEVEL};
use crate::measure::{sample_mu_n, ResampleSpec, ResampledEnsemble};
use crate::multiplier::MultiplierSpec;
use crate::rng::{Purpose, RngStream};
use crate::solver::{solve_direct, Scheme, SolveOptions, SolverConfig};
use crate::spectral::{from_spectral_unchecked, SpectralCoeffs, TorusGrid};
use crate::stats::{holm_adjust, ks_two_sample};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationaritySetup {
    pub spec: MultiplierSpec,
    pub n: u32,
    pub params: ChargeParams,
    pub grid: TorusGrid,
    pub dt: f64,
    pub horizon: f64,
    /// Fields per time group.
    pub ensemble: usize,
    /// Importance proposals per pool.
    pub proposals: usize,
    pub seed: u64,
    pub initial: InitialLaw,
}

/// Law of the initial fields.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialLaw {
    /// Importance-resampled `mu_N`, the invariant law.
    #[default]
    MuN,
    /// Plain GFF draws; not invariant when `alpha != 0`, used as a power check.
    Mu0,
}

/// Scalar statistics compared across times.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatFunctional {
    Coordinate([i64; 2]),
    CoordinateSq([i64; 2]),
    LogWickMass,
    SmoothedAtOrigin,
    SmoothedL2,
}

pub fn standard_functionals() -> Vec<StatFunctional> {
    use StatFunctional::*;
    vec![
        Coordinate([0, 0]),
        Coordinate([1, 0]),
        Coordinate([0, 1]),
        Coordinate([1, 1]),
        Coordinate([2, -1]),
        CoordinateSq([1, 0]),
        CoordinateSq([2, 1]),
        LogWickMass,
        SmoothedAtOrigin,
        SmoothedL2,
    ]
}

impl StatFunctional {
    pub fn name(&self) -> String {
        match self {
            StatFunctional::Coordinate(k) => format!("coord({},{})", k[0], k[1]),
            StatFunctional::CoordinateSq(k) => format!("coord_sq({},{})", k[0], k[1]),
            StatFunctional::LogWickMass => "log_wick_mass".into(),
            StatFunctional::SmoothedAtOrigin => "smoothed_at_origin".into(),
            StatFunctional::SmoothedL2 => "smoothed_l2_sq".into(),
        }
    }

    pub fn eval(&self, c: &SpectralCoeffs, builder: &WickBuilder) -> f64 {
        match *self {
            StatFunctional::Coordinate(k) => c.real_cons_coordinate(k),
            StatFunctional::CoordinateSq(k) => c.real_cons_coordinate(k).powi(2),
            StatFunctional::LogWickMass => builder.build(c).total_mass.ln(),
            StatFunctional::SmoothedAtOrigin => {
                let g = c.grid();
                builder.smoothed(c).at(g.size() / 2, g.size() / 2)
            }
            StatFunctional::SmoothedL2 => builder.smoothed(c).lp_norm(2.0).powi(2),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairTest {
    pub functional: String,
    pub times: [f64; 2],
    pub ks_statistic: f64,
    pub p_value: f64,
    pub holm_p: f64,
    pub mean_difference: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationarityResult {
    pub times: [f64; 3],
    pub ess: [f64; 3],
    pub tests: Vec<PairTest>,
    pub min_holm_p: f64,
    pub passed: bool,
}

/// Group `g` values: pool `g` resampled from `mu_N`, evolved to `times[g]`.
fn group(
    setup: &StationaritySetup,
    builder: &WickBuilder,
    functionals: &[StatFunctional],
    g: u64,
    t: f64,
) -> Result<(f64, Vec<Vec<f64>>)> {
    let pool = match setup.initial {
        InitialLaw::MuN => sample_mu_n(
            builder,
            &ResampleSpec {
                grid: setup.grid,
                proposals: setup.proposals,
                draws: setup.ensemble,
                seed: setup.seed,
                pool: g,
                min_ess: MIN_ESS,
            },
        )?,
        InitialLaw::Mu0 => {
            let coeffs: Vec<SpectralCoeffs> = (0..setup.ensemble)
                .map(|d| replicate_gff(setup.grid, setup.seed, ((g << 32) + d as u64) as usize))
                .collect();
            let fields = coeffs.iter().map(from_spectral_unchecked).collect();
            ResampledEnsemble {
                fields,
                coeffs,
                proposals: setup.ensemble,
                ess: setup.ensemble as f64,
            }
        }
    };
    let cfg = if t > 0.0 {
        Some(SolverConfig::new(
            setup.params,
            setup.spec,
            setup.n,
            setup.grid,
            setup.dt,
            t,
            Scheme::DirectExpsqe2,
        )?)
    } else {
        None
    };
    let finals: Vec<SpectralCoeffs> = pool
        .fields
        .par_iter()
        .enumerate()
        .map(|(d, f)| -> Result<SpectralCoeffs> {
            match &cfg {
                None => Ok(pool.coeffs[d].clone()),
                Some(cfg) => {
                    let rng =
                        RngStream::for_purpose(setup.seed, Purpose::Noise, (g << 32) + d as u64);
                    let traj =
                        solve_direct(cfg, f, &mut StreamNoise::new(rng), &SolveOptions::default())?;
                    Ok(traj.final_spectral)
                }
            }
        })
        .collect::<Result<_>>()?;
    let values = functionals
        .iter()
        .map(|fun| finals.iter().map(|c| fun.eval(c, builder)).collect())
        .collect();
    Ok((pool.ess, values))
}

pub fn stationarity_suite(
    setup: &StationaritySetup,
    functionals: &[StatFunctional],
) -> Result<StationarityResult> {
    if !setup.spec.claims_hypothesis_p {
        return Err(Error::InvalidArgument(format!(
            "{} does not satisfy the positivity hypothesis",
            setup.spec.kind.name()
        )));
    }
    let builder = WickBuilder::new(&setup.spec, setup.n, setup.grid, setup.params)?;
    let times = [0.0, 0.5 * setup.horizon, setup.horizon];
    let mut ess = [0.0; 3];
    let mut groups = Vec::new();
    for (g, &t) in times.iter().enumerate() {
        let (e, v) = group(setup, &builder, functionals, g as u64, t)?;
        ess[g] = e;
        groups.push(v);
    }
    let mut tests = Vec::new();
    for (j, fun) in functionals.iter().enumerate() {
        for (a, b) in [(0, 1), (0, 2), (1, 2)] {
            let ks = ks_two_sample(&groups[a][j], &groups[b][j]);
            let ma = groups[a][j].iter().sum::<f64>() / setup.ensemble as f64;
            let mb = groups[b][j].iter().sum::<f64>() / setup.ensemble as f64;
            tests.push(PairTest {
                functional: fun.name(),
                times: [times[a], times[b]],
                ks_statistic: ks.statistic,
                p_value: ks.p_value,
                holm_p: f64::NAN,
                mean_difference: mb - ma,
            });
        }
    }
    let ps: Vec<f64> = tests.iter().map(|t| t.p_value).collect();
    for (t, h) in tests.iter_mut().zip(holm_adjust(&ps)) {
        t.holm_p = h;
    }
    let min_holm_p = tests.iter().map(|t| t.holm_p).fold(1.0, f64::min);
    Ok(StationarityResult {
        times,
        ess,
        tests,
        min_holm_p,
        passed: min_holm_p >= TEST_LEVEL,
    })
}
