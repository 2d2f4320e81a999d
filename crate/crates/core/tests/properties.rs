//! Property tests over random inputs.

use expphi2::gmc::{ChargeParams, WickBuilder};
use expphi2::harness::config::RunConfig;
use expphi2::measure::systematic_resample;
use expphi2::multiplier::{MultiplierKind, MultiplierSpec};
use expphi2::solver::phi1;
use expphi2::spectral::{from_spectral, lp_block, to_spectral, TorusField, TorusGrid};
use expphi2::stats::ks_two_sample;
use proptest::prelude::*;

fn field(m: usize, vals: Vec<f64>) -> TorusField {
    TorusField::new(TorusGrid::new(m).unwrap(), vals).unwrap()
}

fn field_strategy() -> impl Strategy<Value = TorusField> {
    prop::sample::select(vec![8usize, 16, 32]).prop_flat_map(|m| {
        prop::collection::vec(-5.0f64..5.0, m * m).prop_map(move |v| field(m, v))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parseval(f in field_strategy()) {
        let c = to_spectral(&f);
        let l2 = f.lp_norm(2.0).powi(2);
        prop_assert!((c.energy() - l2).abs() < 1e-9 * l2.max(1.0));
    }

    #[test]
    fn real_fields_have_hermitian_coefficients(f in field_strategy()) {
        prop_assert!(to_spectral(&f).hermitian_defect() < 1e-12);
    }

    #[test]
    fn transform_round_trip(f in field_strategy()) {
        let back = from_spectral(&to_spectral(&f)).unwrap();
        prop_assert!(back.zip_map(&f, |a, b| (a - b).abs()).max() < 1e-12);
    }

    #[test]
    fn littlewood_paley_blocks_sum_to_identity(f in field_strategy()) {
        let c = to_spectral(&f);
        let mut sum = TorusField::zeros(f.grid());
        for j in -1..=f.grid().j_max() {
            sum = sum.zip_map(&lp_block(&c, j).unwrap(), |a, b| a + b);
        }
        prop_assert!(sum.zip_map(&f, |a, b| (a - b).abs()).max() < 1e-10);
    }

    #[test]
    fn wick_density_positive(f in field_strategy(), a2 in 0.0f64..7.9) {
        let g = f.grid();
        let params = ChargeParams::from_alpha_sq_over_pi(a2).unwrap();
        let b = WickBuilder::new(&MultiplierSpec::smooth_bump(), 1, g, params).unwrap();
        let w = b.build(&to_spectral(&f));
        prop_assert!(w.density.min() >= 0.0 && w.total_mass > 0.0);
    }

    #[test]
    fn compact_masks_lie_in_unit_interval(k1 in -40i64..40, k2 in -40i64..40, n in 0u32..4) {
        for kind in [MultiplierKind::SharpSquare, MultiplierKind::SharpBall, MultiplierKind::SmoothBump] {
            let s = MultiplierSpec::new(kind);
            let sc = f64::powi(2.0, -(n as i32));
            let v = s.evaluate([k1 as f64 * sc, k2 as f64 * sc]);
            prop_assert!((0.0..=1.0).contains(&v));
            prop_assert_eq!(v, s.evaluate([-(k1 as f64) * sc, -(k2 as f64) * sc]));
        }
    }

    #[test]
    fn config_round_trip(
        grid in prop::sample::select(vec![64usize, 128, 256]),
        a2 in 0.0f64..7.9,
        dt in 1e-4f64..1e-2,
        seed in 0..=i64::MAX as u64,
        ensemble in 1usize..100000,
        kind in prop::sample::select(MultiplierKind::ALL.to_vec()),
    ) {
        let cfg = RunConfig {
            grid,
            alpha: (a2 * std::f64::consts::PI).sqrt(),
            dt,
            seed,
            ensemble,
            multiplier: kind,
            n: 2,
            ..RunConfig::default()
        };
        let back = RunConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        prop_assert_eq!(back, cfg);
    }

    #[test]
    fn phi1_positive_and_increasing(z in -50.0f64..5.0) {
        prop_assert!(phi1(z) > 0.0);
        prop_assert!(phi1(z + 1e-3) > phi1(z));
    }

    #[test]
    fn systematic_resample_is_sorted_with_correct_length(
        w in prop::collection::vec(0.0f64..1.0, 1..50), draws in 1usize..200, u in 0.0f64..1.0
    ) {
        let s: f64 = w.iter().sum();
        prop_assume!(s > 0.0);
        let w: Vec<f64> = w.iter().map(|x| x / s).collect();
        let picks = systematic_resample(&w, draws, u);
        prop_assert_eq!(picks.len(), draws);
        prop_assert!(picks.windows(2).all(|p| p[0] <= p[1]));
        prop_assert!(picks.iter().all(|&i| w[i] > 0.0 || w.iter().all(|&x| x == 0.0)));
    }

    #[test]
    fn ks_is_symmetric(a in prop::collection::vec(-3.0f64..3.0, 5..40), b in prop::collection::vec(-3.0f64..3.0, 5..40)) {
        let (x, y) = (ks_two_sample(&a, &b), ks_two_sample(&b, &a));
        prop_assert!((x.statistic - y.statistic).abs() < 1e-15);
        prop_assert!((0.0..=1.0).contains(&x.p_value));
    }
}
