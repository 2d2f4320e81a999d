//! Finite-N integration by parts for `mu_N ∝ exp(-∫ exp_N(alpha phi)) mu_0`:
//! `E[D_h F] = E[F (<phi, (1 - Delta) h> + alpha <exp_N(alpha phi), P_N h>)]`.
//!
//! Both sides are estimated from one set of `mu_0` draws with the zero mode integrated out
//! (see [`crate::measure`]), which requires `h` and the functional directions to be nonzero modes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gmc::{ChargeParams, WickBuilder};
use crate::harness::functional::{CylinderFunctional, Outer};
use crate::measure::{normalized_weights, proposal};
use crate::multiplier::MultiplierSpec;
use crate::rng::Purpose;
use crate::spectral::{real_cons_element, TorusGrid};
use crate::stats::{effective_sample_size, Estimate};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IbpCase {
    pub functional: CylinderFunctional,
    pub direction: [i64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IbpResult {
    pub case: IbpCase,
    /// `E[D_h F]` under `mu_N`.
    pub lhs: f64,
    /// `E[F (<phi, (1 - Delta) h> + alpha <exp_N, P_N h>)]` under `mu_N`.
    pub rhs: f64,
    /// Weighted mean of `D_h F - F * (...)`, in standard errors.
    pub residual_in_stderr_units: f64,
    pub ensemble: usize,
    pub ess: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IbpSetup {
    pub spec: MultiplierSpec,
    pub n: u32,
    pub params: ChargeParams,
    pub grid: TorusGrid,
    pub ensemble: usize,
    pub seed: u64,
}

/// Six (F, h) pairs: matched directions for each outer function, a two-direction functional,
/// a scaled one, and `h` orthogonal to every direction of `F`.
pub fn standard_cases() -> Vec<IbpCase> {
    let case = |dirs: Vec<[i64; 2]>, outer, scale, h| IbpCase {
        functional: CylinderFunctional::new(dirs, outer, scale),
        direction: h,
    };
    vec![
        case(vec![[1, 0]], Outer::Tanh, 1.0, [1, 0]),
        case(vec![[0, 1]], Outer::Cos, 1.0, [0, 1]),
        case(vec![[1, 1]], Outer::Poly2, 2.0, [1, 1]),
        case(vec![[1, 0], [0, 1]], Outer::Tanh, 1.0, [0, 1]),
        case(vec![[2, -1]], Outer::Cos, 0.5, [2, -1]),
        case(vec![[1, 0]], Outer::Tanh, 1.0, [0, 2]),
    ]
}

pub fn ibp_residual(setup: &IbpSetup, case: &IbpCase) -> Result<IbpResult> {
    Ok(ibp_suite(setup, std::slice::from_ref(case))?.remove(0))
}

/// All cases share one sample set.
pub fn ibp_suite(setup: &IbpSetup, cases: &[IbpCase]) -> Result<Vec<IbpResult>> {
    let grid = setup.grid;
    for c in cases {
        let all = c
            .functional
            .directions
            .iter()
            .chain(std::iter::once(&c.direction));
        for &k in all {
            if k == [0, 0] || !grid.is_resolved(k) {
                return Err(Error::InvalidArgument(format!(
                    "ibp directions must be nonzero resolved modes, got {k:?}"
                )));
            }
        }
    }
    let builder = WickBuilder::new(&setup.spec, setup.n, grid, setup.params)?;
    let alpha = setup.params.alpha;
    let probes: Vec<_> = cases
        .iter()
        .map(|c| {
            let k = c.direction;
            let lam = 1.0 + (k[0] * k[0] + k[1] * k[1]) as f64;
            (real_cons_element(grid, k), lam, builder.mask().at(k))
        })
        .collect();
    // per sample: log weight, then (D_h F, F * G) per case
    let rows: Vec<(f64, Vec<(f64, f64)>)> = (0..setup.ensemble)
        .into_par_iter()
        .map(|i| {
            let p = proposal(&builder, grid, setup.seed, Purpose::Gff, i);
            let w = builder.build(&p.phi);
            let terms = cases
                .iter()
                .zip(&probes)
                .map(|(c, (h, lam, psi))| {
                    let k = c.direction;
                    let f = c.functional.value(&p.phi);
                    let df = c.functional.derivative_along(&p.phi, k);
                    let g = lam * p.phi.real_cons_coordinate(k)
                        + p.conditional.mean_exp * alpha * psi * w.pair(h);
                    (df, f * g)
                })
                .collect();
            (p.log_weight(), terms)
        })
        .collect();
    let log_w: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let w = normalized_weights(&log_w);
    let ess = effective_sample_size(&w);
    let n = setup.ensemble as f64;
    Ok(cases
        .iter()
        .enumerate()
        .map(|(j, c)| {
            let lhs: f64 = rows.iter().zip(&w).map(|(r, wi)| wi * r.1[j].0).sum();
            let rhs: f64 = rows.iter().zip(&w).map(|(r, wi)| wi * r.1[j].1).sum();
            let y: Vec<f64> = rows
                .iter()
                .zip(&w)
                .map(|(r, wi)| n * wi * (r.1[j].0 - r.1[j].1))
                .collect();
            let e = Estimate::of(&y);
            IbpResult {
                case: c.clone(),
                lhs,
                rhs,
                residual_in_stderr_units: e.mean / e.stderr,
                ensemble: setup.ensemble,
                ess,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthogonal_direction_has_zero_lhs() {
        let setup = IbpSetup {
            spec: MultiplierSpec::sharp_square(),
            n: 2,
            params: ChargeParams::with_alpha(0.0).unwrap(),
            grid: TorusGrid::new(16).unwrap(),
            ensemble: 200,
            seed: 3,
        };
        let r = ibp_residual(&setup, &standard_cases()[5]).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert!((r.ess - 200.0).abs() < 1e-9);
    }

    #[test]
    fn zero_mode_direction_rejected() {
        let setup = IbpSetup {
            spec: MultiplierSpec::sharp_square(),
            n: 2,
            params: ChargeParams::with_alpha(0.0).unwrap(),
            grid: TorusGrid::new(16).unwrap(),
            ensemble: 10,
            seed: 3,
        };
        let mut c = standard_cases()[0].clone();
        c.direction = [0, 0];
        assert!(ibp_residual(&setup, &c).is_err());
    }
}
