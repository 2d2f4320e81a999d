//! Library results against independent reference computations written here.

use std::f64::consts::PI;

use expphi2::gff::{sample_gff, StreamNoise};
use expphi2::gmc::{replicate_gff, ChargeParams, WickBuilder};
use expphi2::green::kernel_k;
use expphi2::harness::config::RunConfig;
use expphi2::harness::ensemble::{run_ensemble, Task};
use expphi2::harness::functional::{CylinderFunctional, Outer};
use expphi2::harness::ibp::{ibp_residual, IbpCase, IbpSetup};
use expphi2::harness::stationarity::{
    standard_functionals, stationarity_suite, InitialLaw, StationaritySetup,
};
use expphi2::measure::{sample_mu_n, ResampleSpec};
use expphi2::multiplier::MultiplierSpec;
use expphi2::quadrature::gauss_legendre;
use expphi2::rng::{Purpose, RngStream};
use expphi2::solver::{linear_flow, solve, Scheme, SolveOptions, SolverConfig, XDriver};
use expphi2::spectral::{from_spectral, real_cons_element, to_spectral, TorusField, TorusGrid};
use expphi2::stats::{holm_adjust, ks_two_sample, Estimate};

fn grid(m: usize) -> TorusGrid {
    TorusGrid::new(m).unwrap()
}

#[test]
fn forward_transform_matches_direct_dft() {
    let g = grid(8);
    let f = TorusField::from_fn(g, |x| {
        (x[0] - 0.3).sin() * (2.0 * x[1]).cos() + 0.2 * x[0] * x[1]
    });
    let c = to_spectral(&f);
    let h = 2.0 * PI / 8.0;
    for k1 in -3i64..=3 {
        for k2 in -3i64..=3 {
            let mut re = 0.0;
            let mut im = 0.0;
            for j1 in 0..8 {
                for j2 in 0..8 {
                    let x = [-PI + j1 as f64 * h, -PI + j2 as f64 * h];
                    let ph = -(k1 as f64 * x[0] + k2 as f64 * x[1]);
                    let v = f.at(j1, j2) * h * h / (2.0 * PI);
                    re += v * ph.cos();
                    im += v * ph.sin();
                }
            }
            let got = c.get([k1, k2]);
            assert!(
                (got.re - re).abs() < 1e-12 && (got.im - im).abs() < 1e-12,
                "{k1},{k2}"
            );
        }
    }
}

/// `(1/2pi) int_0^U exp(-r cosh u) du` by 48-point Gauss-Legendre on 200 panels.
fn kernel_gl(r: f64) -> f64 {
    let (x, w) = gauss_legendre(48);
    let top = (1.0 + 50.0 / r).acosh();
    let panels = 200;
    let h = top / panels as f64;
    let mut s = 0.0;
    for p in 0..panels {
        for (xi, wi) in x.iter().zip(&w) {
            let u = (p as f64 + 0.5 * (xi + 1.0)) * h;
            s += 0.5 * h * wi * (-r * (u.cosh() - 1.0)).exp();
        }
    }
    (-r).exp() * s / (2.0 * PI)
}

#[test]
fn kernel_matches_gauss_legendre_and_bessel_values() {
    for i in 0..20 {
        let r = 1e-3 * (20.0f64 / 1e-3).powf(i as f64 / 19.0);
        let (a, b) = (kernel_k(r).unwrap(), kernel_gl(r));
        assert!((a - b).abs() < 1e-10, "r = {r}: {a} vs {b}");
    }
    // K_0 at tabulated points
    for (r, k0) in [
        (0.1, 2.427_069_024_702_017),
        (1.0, 0.421_024_438_240_708_3),
        (5.0, 0.003_691_098_334_042_594),
        (10.0, 1.778_006_231_616_918e-5),
    ] {
        assert!(
            (kernel_k(r).unwrap() * 2.0 * PI - k0).abs() < 1e-10 * k0.max(1.0),
            "r = {r}"
        );
    }
}

#[test]
fn pointwise_gff_variance_matches_lattice_sum() {
    let g = grid(16);
    let mut rng = RngStream::for_purpose(4, Purpose::Gff, 0);
    let n = 20000;
    let vals: Vec<f64> = (0..n)
        .map(|_| {
            let f = sample_gff(g, &mut rng).field();
            f.at(3, 11).powi(2)
        })
        .collect();
    let mut exact = 0.0;
    for k1 in -7i64..=7 {
        for k2 in -7i64..=7 {
            exact += 1.0 / (1.0 + (k1 * k1 + k2 * k2) as f64);
        }
    }
    exact /= 4.0 * PI * PI;
    let e = Estimate::of(&vals);
    assert!(
        ((e.mean - exact) / e.stderr).abs() < 4.0,
        "{} vs {exact}",
        e.mean
    );
}

#[test]
fn heat_flow_of_single_mode_is_exponential_decay() {
    let g = grid(32);
    for k in [[1i64, 0], [2, -3], [5, 5]] {
        let e = real_cons_element(g, k);
        let t = 0.37;
        let lam = 1.0 + (k[0] * k[0] + k[1] * k[1]) as f64;
        let got = from_spectral(&linear_flow(&e, t)).unwrap();
        let want = e.scaled((-0.5 * lam * t).exp());
        assert!(got.zip_map(&want, |a, b| (a - b).abs()).max() < 1e-14);
    }
}

fn rk4(alpha: f64, x: f64, c: f64, steps: usize) -> f64 {
    let f = |y: f64| -0.5 * y - 0.5 * alpha * (alpha * (x + y) - 0.5 * alpha * alpha * c).exp();
    let h = 1.0 / steps as f64;
    let mut y = 0.0;
    for _ in 0..steps {
        let a = f(y);
        let b = f(y + 0.5 * h * a);
        let cc = f(y + 0.5 * h * b);
        let d = f(y + h * cc);
        y += h * (a + 2.0 * b + 2.0 * cc + d) / 6.0;
    }
    y
}

#[test]
fn frozen_field_solver_converges_to_rk4_at_first_order() {
    let g = grid(16);
    let spec = MultiplierSpec::smooth_bump();
    let params = ChargeParams::from_alpha_sq_over_pi(1.0).unwrap();
    let c = spec.renorm_constant_on_grid(2, g).unwrap().value;
    let x0 = -0.2;
    let oracle = rk4(params.alpha, x0, c, 4000);
    let err = |dt: f64| {
        let cfg = SolverConfig::new(params, spec, 2, g, dt, 1.0, Scheme::Split).unwrap();
        let opts = SolveOptions {
            record_every: usize::MAX,
            x_driver: XDriver::Frozen(TorusField::constant(g, x0)),
        };
        let tr = solve(
            &cfg,
            &TorusField::zeros(g),
            &mut expphi2::gff::NoNoise,
            &opts,
        )
        .unwrap();
        tr.y_states
            .last()
            .unwrap()
            .values()
            .iter()
            .map(|v| (v - oracle).abs())
            .fold(0.0, f64::max)
    };
    let (e1, e2) = (err(1e-3), err(5e-4));
    assert!(e1 < 1e-3, "{e1}");
    assert!((e1 / e2 - 2.0).abs() < 0.1, "ratio {}", e1 / e2);
}

#[test]
fn zero_charge_ibp_is_gaussian_integration_by_parts() {
    let setup = IbpSetup {
        spec: MultiplierSpec::sharp_square(),
        n: 3,
        params: ChargeParams::with_alpha(0.0).unwrap(),
        grid: grid(64),
        ensemble: 50000,
        seed: 17,
    };
    let case = IbpCase {
        functional: CylinderFunctional::new(vec![[1, 0]], Outer::Tanh, 1.0),
        direction: [1, 0],
    };
    let r = ibp_residual(&setup, &case).unwrap();
    assert!(r.residual_in_stderr_units.abs() < 3.0, "{r:?}");
    // E[tanh'(Z)] for Z ~ N(0, 1/2)
    let (x, w) = gauss_legendre(64);
    let mut exact = 0.0;
    for (xi, wi) in x.iter().zip(&w) {
        let z = 8.0 * xi;
        exact += 8.0 * wi * (1.0 - z.tanh().powi(2)) * (-z * z).exp() / PI.sqrt();
    }
    assert!((r.lhs - exact).abs() < 0.01, "{} vs {exact}", r.lhs);
}

#[test]
fn resampling_at_zero_charge_reproduces_gff_law() {
    let g = grid(32);
    let params = ChargeParams::with_alpha(0.0).unwrap();
    let builder = WickBuilder::new(&MultiplierSpec::smooth_bump(), 3, g, params).unwrap();
    let n = 3000;
    let pool = sample_mu_n(
        &builder,
        &ResampleSpec {
            grid: g,
            proposals: n,
            draws: n,
            seed: 8,
            pool: 0,
            min_ess: 100.0,
        },
    )
    .unwrap();
    let direct: Vec<_> = (0..n).map(|i| replicate_gff(g, 99, i)).collect();
    let mut ps = Vec::new();
    for f in standard_functionals() {
        let a: Vec<f64> = pool.coeffs.iter().map(|c| f.eval(c, &builder)).collect();
        let b: Vec<f64> = direct.iter().map(|c| f.eval(c, &builder)).collect();
        ps.push(ks_two_sample(&a, &b).p_value);
    }
    let min_adj = holm_adjust(&ps).into_iter().fold(1.0, f64::min);
    assert!(min_adj > 1e-3, "{ps:?}");
}

#[test]
fn non_invariant_start_is_detected() {
    let setup = StationaritySetup {
        spec: MultiplierSpec::smooth_bump(),
        n: 3,
        params: ChargeParams::from_alpha_sq_over_pi(2.0).unwrap(),
        grid: grid(32),
        dt: 0.02,
        horizon: 1.0,
        ensemble: 600,
        proposals: 600,
        seed: 5,
        initial: InitialLaw::Mu0,
    };
    let r = stationarity_suite(&setup, &standard_functionals()).unwrap();
    assert!(!r.passed && r.min_holm_p < 1e-6, "{}", r.min_holm_p);
}

#[test]
fn ensemble_bodies_independent_of_workers_and_repeatable() {
    let cfg = RunConfig {
        grid: 64,
        n: 3,
        ensemble: 120,
        ..RunConfig::default()
    };
    let body = |w: usize| {
        let mut b = run_ensemble(
            &RunConfig {
                workers: w,
                ..cfg.clone()
            },
            Task::Covariance,
        )
        .unwrap()
        .body;
        b.config.workers = 0;
        serde_json::to_string(&b).unwrap()
    };
    let one = body(1);
    assert_eq!(one, body(8));
    assert_eq!(one, body(1));
}

#[test]
fn split_noise_path_is_shared_between_ou_and_direct_forms() {
    // at zero charge both schemes reduce to the same exact OU recursion
    let g = grid(32);
    let phi0 = from_spectral(&replicate_gff(g, 3, 0)).unwrap();
    let params = ChargeParams::with_alpha(0.0).unwrap();
    let run = |s| {
        let cfg =
            SolverConfig::new(params, MultiplierSpec::sharp_ball(), 3, g, 0.01, 0.3, s).unwrap();
        let rng = RngStream::for_purpose(3, Purpose::Noise, 0);
        solve(
            &cfg,
            &phi0,
            &mut StreamNoise::new(rng),
            &SolveOptions::default(),
        )
        .unwrap()
        .final_phi()
        .clone()
    };
    let (a, b) = (run(Scheme::Split), run(Scheme::DirectExpsqe1));
    assert!(a.zip_map(&b, |x, y| (x - y).abs()).max() < 1e-12);
}
