mod common;

use hmcast::clock_data::{
    combine_series, denormalize, detrend, fit_quadratic, normalize, retrend, split, QuadraticTrend,
    TimeSeries,
};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

fn arb_series() -> impl Strategy<Value = TimeSeries> {
    (
        50_000i64..60_000,
        1i64..10,
        prop::collection::vec(-1e4f64..1e4, 1..80),
    )
        .prop_map(|(start, interval, values)| TimeSeries::new(start, interval, values).unwrap())
}

fn arb_trend() -> impl Strategy<Value = QuadraticTrend> {
    (
        50_000i64..60_000,
        -1e3f64..1e3,
        -10f64..10.0,
        -0.01f64..0.01,
    )
        .prop_map(|(t0, c0, c1, c2)| QuadraticTrend { t0, c0, c1, c2 })
}

#[test]
fn noisy_quadratic_matches_exact_normal_equations() {
    let mut r = common::rng(274);
    let epochs: Vec<i64> = (0..274).map(|i| 56934 + 5 * i).collect();
    let values: Vec<f64> = epochs
        .iter()
        .map(|&e| {
            let dt = (e - 56934) as f64;
            let noise: f64 = StandardNormal.sample(&mut r);
            -40.0 + 0.7 * dt - 3.1e-4 * dt * dt + 15.0 * noise
        })
        .collect();
    let s = TimeSeries::from_epochs(&epochs, values.clone(), 5).unwrap();
    let tr = fit_quadratic(&s).unwrap();
    let oracle = common::quadratic_normal_equations(&epochs, &values);
    for (got, want) in [tr.c0, tr.c1, tr.c2].iter().zip(oracle) {
        assert!(((got - want) / want).abs() < 1e-9, "{got} vs {want}");
    }
}

#[test]
fn residuals_are_orthogonal_to_quadratic_basis() {
    let mut r = common::rng(9);
    for _ in 0..20 {
        let n = r.random_range(3..300);
        let values: Vec<f64> = (0..n).map(|_| r.random_range(-150.0..150.0)).collect();
        let s = TimeSeries::new(57000, 5, values).unwrap();
        let res = detrend(&s, &fit_quadratic(&s).unwrap());
        let span = (5 * (n - 1)) as f64;
        let norm = res
            .values()
            .iter()
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
            .max(1.0);
        for power in 0..3 {
            let dot: f64 = res
                .epochs()
                .zip(res.values())
                .map(|(e, v)| v * ((e - 57000) as f64 / span).powi(power))
                .sum();
            assert!(dot.abs() / norm < 1e-6, "power {power}: {dot}");
        }
    }
}

proptest! {
    #[test]
    fn retrend_inverts_detrend(s in arb_series(), tr in arb_trend()) {
        let back = retrend(&detrend(&s, &tr), &tr);
        for (a, b) in back.values().iter().zip(s.values()) {
            prop_assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
        prop_assert_eq!(back.epochs().collect::<Vec<_>>(), s.epochs().collect::<Vec<_>>());
    }

    #[test]
    fn denormalize_inverts_normalize(s in arb_series()) {
        prop_assume!(s.values().iter().any(|v| *v != 0.0));
        let (n, sc) = normalize(&s).unwrap();
        prop_assert!(n.values().iter().all(|v| v.abs() <= 1.0));
        prop_assert_eq!(n.values().iter().fold(0.0f64, |m, v| m.max(v.abs())), 1.0);
        let back = denormalize(&n, &sc);
        for (a, b) in back.values().iter().zip(s.values()) {
            prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(f64::MIN_POSITIVE));
        }
    }

    #[test]
    fn split_partitions_are_ordered_and_exhaustive(
        n in 3usize..5000,
        train_frac in 0.01f64..0.9,
        val_frac in 0.01f64..0.9,
    ) {
        prop_assume!(train_frac + val_frac < 1.0);
        match split(n, train_frac, val_frac) {
            Ok(sp) => {
                prop_assert_eq!(sp.train.start, 0);
                prop_assert_eq!(sp.train.end, sp.val.start);
                prop_assert_eq!(sp.val.end, sp.test.start);
                prop_assert_eq!(sp.test.end, n);
                prop_assert!(!sp.train.is_empty() && !sp.val.is_empty() && !sp.test.is_empty());
                prop_assert_eq!(sp.train.len(), (train_frac * n as f64).floor() as usize);
                prop_assert_eq!(sp.val.len(), (val_frac * n as f64).floor() as usize);
            }
            Err(_) => {
                let tr = (train_frac * n as f64).floor() as usize;
                let va = (val_frac * n as f64).floor() as usize;
                prop_assert!(tr == 0 || va == 0 || tr + va >= n);
            }
        }
    }

    #[test]
    fn combine_is_commutative_and_associative(
        start in 50_000i64..60_000,
        vals in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3, -1e3f64..1e3), 1..40),
    ) {
        let mk = |f: fn(&(f64, f64, f64)) -> f64| {
            TimeSeries::new(start, 5, vals.iter().map(f).collect()).unwrap()
        };
        let (a, b, c) = (mk(|v| v.0), mk(|v| v.1), mk(|v| v.2));
        prop_assert_eq!(combine_series(&a, &b).unwrap(), combine_series(&b, &a).unwrap());
        let left = combine_series(&combine_series(&a, &b).unwrap(), &c).unwrap();
        let right = combine_series(&a, &combine_series(&b, &c).unwrap()).unwrap();
        for (x, y) in left.values().iter().zip(right.values()) {
            prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }
}
