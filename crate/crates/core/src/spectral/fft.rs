//! Unnormalized 2D complex FFT on square power-of-two grids.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Direction {
    Forward,
    Inverse,
}

type PlanCache = HashMap<(usize, Direction), Arc<dyn Fft<f64>>>;

thread_local! {
    static PLANS: RefCell<PlanCache> =
        RefCell::new(HashMap::new());
}

fn plan(m: usize, dir: Direction) -> Arc<dyn Fft<f64>> {
    PLANS.with(|plans| {
        plans
            .borrow_mut()
            .entry((m, dir))
            .or_insert_with(|| {
                let mut planner = FftPlanner::new();
                match dir {
                    Direction::Forward => planner.plan_fft_forward(m),
                    Direction::Inverse => planner.plan_fft_inverse(m),
                }
            })
            .clone()
    })
}

fn transform(data: &mut [Complex64], m: usize, dir: Direction) {
    debug_assert_eq!(data.len(), m * m);
    let fft = plan(m, dir);
    // rows
    fft.process(data);
    // columns, through a transpose
    transpose(data, m);
    fft.process(data);
    transpose(data, m);
}

fn transpose(data: &mut [Complex64], m: usize) {
    for i in 0..m {
        for j in (i + 1)..m {
            data.swap(i * m + j, j * m + i);
        }
    }
}

/// `F[k] = sum_j f[j] exp(-2 pi i k.j / m)`, in place.
pub(crate) fn forward(data: &mut [Complex64], m: usize) {
    transform(data, m, Direction::Forward);
}

/// `f[j] = sum_k F[k] exp(+2 pi i k.j / m)`, in place, no 1/m^2 factor.
pub(crate) fn inverse(data: &mut [Complex64], m: usize) {
    transform(data, m, Direction::Inverse);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forward_then_inverse_scales_by_m_squared() {
        let m = 8;
        let orig: Vec<Complex64> = (0..m * m)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let mut data = orig.clone();
        forward(&mut data, m);
        inverse(&mut data, m);
        for (a, b) in data.iter().zip(&orig) {
            assert!((a / (m * m) as f64 - b).norm() < 1e-13);
        }
    }

    #[test]
    fn forward_matches_direct_sum() {
        let m = 8;
        let orig: Vec<Complex64> = (0..m * m)
            .map(|i| Complex64::new(((i * i) as f64 * 0.3).cos(), 0.0))
            .collect();
        let mut data = orig.clone();
        forward(&mut data, m);
        let (k1, k2) = (3usize, 5usize);
        let mut direct = Complex64::new(0.0, 0.0);
        for j1 in 0..m {
            for j2 in 0..m {
                let phase = -2.0 * std::f64::consts::PI * ((k1 * j1 + k2 * j2) as f64) / m as f64;
                direct += orig[j1 * m + j2] * Complex64::from_polar(1.0, phase);
            }
        }
        assert!((data[k1 * m + k2] - direct).norm() < 1e-12);
    }
}
