//! Coupled comparison of two regularizations: `D_n = <f, M_n^{psi_1} - M_n^{psi_2}>` computed
//! on a shared GFF draw for each level.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gmc::{
    log2_slope_fit, replicate_gff, ChargeParams, EnsembleSpec, SlopeFit, WickBuilder,
};
use crate::harness::tolerances::Z_BAND_STRICT;
use crate::multiplier::MultiplierSpec;
use crate::spectral::TorusField;
use crate::stats::Estimate;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsiIndependence {
    pub specs: [MultiplierSpec; 2],
    pub levels: Vec<u32>,
    /// Signed coupled differences per level.
    pub difference: Vec<Estimate>,
    /// `E |D_n|` per level.
    pub mean_abs_difference: Vec<Estimate>,
    /// Log2-slope of `E |D_n|` against `n`.
    pub trend: SlopeFit,
    pub terminal_z: f64,
    pub shrinking: bool,
    pub passed: bool,
}

pub fn psi_independence_suite(
    specs: [MultiplierSpec; 2],
    params: ChargeParams,
    f: &TorusField,
    levels: &[u32],
    ens: &EnsembleSpec,
) -> Result<PsiIndependence> {
    if levels.len() < 2 {
        return Err(Error::DegenerateRegression(levels.len()));
    }
    let builders: Vec<[WickBuilder; 2]> = levels
        .iter()
        .map(|&n| {
            Ok([
                WickBuilder::new(&specs[0], n, ens.grid, params)?,
                WickBuilder::new(&specs[1], n, ens.grid, params)?,
            ])
        })
        .collect::<Result<_>>()?;
    let rows: Vec<Vec<f64>> = (0..ens.ensemble)
        .into_par_iter()
        .map(|i| {
            let phi = replicate_gff(ens.grid, ens.seed, i);
            builders
                .iter()
                .map(|[a, b]| a.build(&phi).pair(f) - b.build(&phi).pair(f))
                .collect()
        })
        .collect();
    let column = |l: usize, abs: bool| -> Vec<f64> {
        rows.iter()
            .map(|r| if abs { r[l].abs() } else { r[l] })
            .collect()
    };
    let difference: Vec<Estimate> = (0..levels.len())
        .map(|l| Estimate::of(&column(l, false)))
        .collect();
    let mean_abs_difference: Vec<Estimate> = (0..levels.len())
        .map(|l| Estimate::of(&column(l, true)))
        .collect();
    let abs_rows: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| r.iter().map(|v| v.abs()).collect())
        .collect();
    let all_zero = abs_rows.iter().all(|r| r.iter().all(|&v| v == 0.0));
    let trend = if all_zero {
        SlopeFit {
            slope: f64::NEG_INFINITY,
            stderr: 0.0,
            ci95: [f64::NEG_INFINITY; 2],
            xs: levels.iter().map(|&n| n as f64).collect(),
            ys: vec![f64::NEG_INFINITY; levels.len()],
        }
    } else {
        log2_slope_fit(levels, &abs_rows, ens)?
    };
    let last = difference.last().expect("at least two levels");
    let terminal_z = if last.stderr > 0.0 {
        last.mean / last.stderr
    } else {
        0.0
    };
    let shrinking = all_zero || trend.ci95[1] < 0.0;
    Ok(PsiIndependence {
        specs,
        levels: levels.to_vec(),
        difference,
        mean_abs_difference,
        trend,
        terminal_z,
        shrinking,
        passed: shrinking && terminal_z.abs() <= Z_BAND_STRICT,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::TorusGrid;

    #[test]
    fn identical_specs_give_exact_zero() {
        let grid = TorusGrid::new(32).unwrap();
        let s = MultiplierSpec::smooth_bump();
        let ens = EnsembleSpec {
            grid,
            ensemble: 20,
            seed: 1,
            bootstrap: 10,
        };
        let r = psi_independence_suite(
            [s, s],
            ChargeParams::with_alpha(1.0).unwrap(),
            &TorusField::constant(grid, 1.0),
            &[2, 3],
            &ens,
        )
        .unwrap();
        assert!(r.difference.iter().all(|e| e.mean == 0.0));
        assert!(r.passed);
    }
}
