//! Run configuration: one flat TOML table holding every knob.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gmc::ChargeParams;
use crate::multiplier::{MultiplierKind, MultiplierSpec};
use crate::solver::{Scheme, SolverConfig};
use crate::spectral::TorusGrid;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub grid: usize,
    pub alpha: f64,
    /// Integrability exponent; midpoint of the admissible range when absent.
    pub p: Option<f64>,
    /// Besov regularity; midpoint of the admissible range when absent.
    pub beta: Option<f64>,
    pub multiplier: MultiplierKind,
    /// Level used by single-level tasks.
    pub n: u32,
    /// Level range used by multi-level tasks.
    pub n_min: u32,
    pub n_max: u32,
    pub dt: f64,
    pub horizon: f64,
    pub scheme: Scheme,
    pub ensemble: usize,
    pub bootstrap: usize,
    pub seed: u64,
    pub workers: usize,
    pub output_dir: String,
    pub reports: Vec<String>,
    /// Moment used by the scaling estimator.
    pub moment: f64,
    /// Snapshot interval for solver runs (0 disables intermediate snapshots).
    pub snapshot_every: f64,
    /// Multiplies every ensemble size of the acceptance suite.
    pub scale: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            grid: 256,
            alpha: (2.0 * std::f64::consts::PI).sqrt(),
            p: None,
            beta: None,
            multiplier: MultiplierKind::SharpSquare,
            n: 5,
            n_min: 2,
            n_max: 6,
            dt: 1e-3,
            horizon: 1.0,
            scheme: Scheme::Split,
            ensemble: 2000,
            bootstrap: 200,
            seed: 7,
            workers: 0,
            output_dir: "out".into(),
            reports: Vec::new(),
            moment: 1.5,
            snapshot_every: 0.0,
            scale: 1.0,
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(s).map_err(|e| Error::ConfigInvalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Serialize; every config that passes [`Self::validate`] is representable.
    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("flat config serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn grid(&self) -> Result<TorusGrid> {
        TorusGrid::new(self.grid).map_err(|e| Error::ConfigInvalid(format!("grid: {e}")))
    }

    pub fn charge(&self) -> Result<ChargeParams> {
        let r = match (self.p, self.beta) {
            (Some(p), Some(beta)) => ChargeParams::new(self.alpha, p, beta),
            (None, None) => ChargeParams::with_alpha(self.alpha),
            (Some(p), None) => {
                let lo = self.alpha * self.alpha * (p - 1.0) / (4.0 * std::f64::consts::PI);
                let hi = 2.0 * (p - 1.0) / p;
                ChargeParams::new(self.alpha, p, 0.5 * (lo + hi))
            }
            (None, Some(_)) => Err(Error::InvalidCharge("beta given without p".into())),
        };
        r.map_err(|e| Error::ConfigInvalid(e.to_string()))
    }

    pub fn spec(&self) -> MultiplierSpec {
        MultiplierSpec::new(self.multiplier)
    }

    pub fn levels(&self) -> Vec<u32> {
        (self.n_min..=self.n_max).collect()
    }

    pub fn solver_config(&self) -> Result<SolverConfig> {
        SolverConfig::new(
            self.charge()?,
            self.spec(),
            self.n,
            self.grid()?,
            self.dt,
            self.horizon,
            self.scheme,
        )
        .map_err(|e| Error::ConfigInvalid(e.to_string()))
    }

    /// Checks every constraint before any compute.
    pub fn validate(&self) -> Result<()> {
        let grid = self.grid()?;
        self.charge()?;
        let spec = self.spec();
        spec.check_level(grid, self.n)
            .map_err(|e| Error::ConfigInvalid(format!("n: {e}")))?;
        if self.n_min > self.n_max {
            return Err(Error::ConfigInvalid(format!(
                "n_min {} > n_max {}",
                self.n_min, self.n_max
            )));
        }
        if self.ensemble == 0 {
            return Err(Error::ConfigInvalid("ensemble must be positive".into()));
        }
        if !(self.dt > 0.0 && self.horizon >= self.dt) {
            return Err(Error::ConfigInvalid(format!(
                "need 0 < dt <= horizon (dt = {}, horizon = {})",
                self.dt, self.horizon
            )));
        }
        if !(1.0..=2.0).contains(&self.moment) {
            return Err(Error::ConfigInvalid(format!(
                "moment {} outside [1, 2]",
                self.moment
            )));
        }
        if self.seed > i64::MAX as u64 {
            return Err(Error::ConfigInvalid(format!(
                "seed {} exceeds {} (config integers are signed 64-bit)",
                self.seed,
                i64::MAX
            )));
        }
        if !(self.scale > 0.0) {
            return Err(Error::ConfigInvalid(format!(
                "scale {} must be positive",
                self.scale
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_default_and_custom() {
        let mut c = RunConfig::default();
        assert_eq!(RunConfig::from_toml_str(&c.to_toml_string()).unwrap(), c);
        c.p = Some(1.3);
        c.beta = Some(0.2);
        c.alpha = 1.1;
        c.reports = vec!["scaling".into(), "cauchy".into()];
        c.dt = 0.1 + 0.2;
        assert_eq!(RunConfig::from_toml_str(&c.to_toml_string()).unwrap(), c);
    }

    #[test]
    fn invalid_charge_rejected_at_load() {
        let err = RunConfig::from_toml_str("alpha = 6.0").unwrap_err();
        assert!(matches!(err, Error::ConfigInvalid(_)), "{err}");
        let err = RunConfig::from_toml_str("grid = 100").unwrap_err();
        assert!(err.to_string().contains("grid"));
        assert!(RunConfig::from_toml_str("bogus = 1").is_err());
        let big = RunConfig {
            seed: u64::MAX,
            ..RunConfig::default()
        };
        assert!(big.validate().is_err());
    }

    #[test]
    fn level_checked_against_grid() {
        assert!(RunConfig::from_toml_str("grid = 64\nn = 5").is_err());
        assert!(RunConfig::from_toml_str("grid = 64\nn = 4").is_ok());
    }
}
