//! Smooth cylinder functionals `F(phi) = f(scale * sum_j <phi, e_{k_j}>)`.

use serde::{Deserialize, Serialize};

use crate::spectral::SpectralCoeffs;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outer {
    /// `x^2 / (1 + x^2)`.
    Poly2,
    Tanh,
    Cos,
}

impl Outer {
    pub fn value(&self, x: f64) -> f64 {
        match self {
            Outer::Poly2 => x * x / (1.0 + x * x),
            Outer::Tanh => x.tanh(),
            Outer::Cos => x.cos(),
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            Outer::Poly2 => 2.0 * x / ((1.0 + x * x) * (1.0 + x * x)),
            Outer::Tanh => 1.0 - x.tanh().powi(2),
            Outer::Cos => -x.sin(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CylinderFunctional {
    /// Modes `k_j`; each names the real orthonormal element `e_{k_j}`.
    pub directions: Vec<[i64; 2]>,
    pub outer: Outer,
    pub scale: f64,
    pub description: String,
}

impl CylinderFunctional {
    pub fn new(directions: Vec<[i64; 2]>, outer: Outer, scale: f64) -> Self {
        assert!(
            !directions.is_empty(),
            "a cylinder functional needs a direction"
        );
        let description = format!("{outer:?}({scale} * sum <phi, e_k>, k in {directions:?})");
        CylinderFunctional {
            directions,
            outer,
            scale,
            description,
        }
    }

    fn argument(&self, c: &SpectralCoeffs) -> f64 {
        self.scale
            * self
                .directions
                .iter()
                .map(|&k| c.real_cons_coordinate(k))
                .sum::<f64>()
    }

    pub fn value(&self, c: &SpectralCoeffs) -> f64 {
        self.outer.value(self.argument(c))
    }

    /// Directional derivative along `e_k`.
    pub fn derivative_along(&self, c: &SpectralCoeffs, k: [i64; 2]) -> f64 {
        let hits = self.directions.iter().filter(|&&d| d == k).count() as f64;
        if hits == 0.0 {
            return 0.0;
        }
        self.outer.derivative(self.argument(c)) * self.scale * hits
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn derivatives_match_finite_differences(x in -4.0f64..4.0) {
            for o in [Outer::Poly2, Outer::Tanh, Outer::Cos] {
                let h = 1e-6;
                let fd = (o.value(x + h) - o.value(x - h)) / (2.0 * h);
                prop_assert!((fd - o.derivative(x)).abs() < 1e-6);
                prop_assert!(o.derivative(x).abs() <= 1.0);
            }
        }
    }
}
