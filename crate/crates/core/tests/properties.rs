use ordsum::estimators::{cmc_gg, naive_mc, relative_error, truncation_coefficients, universal_is};
use ordsum::rqmc::{cube_to_ordered_simplex, cube_to_simplex};
use ordsum::samplers::exp_order_stats_from_spacings;
use ordsum::special::{reg_lower_gamma, reg_upper_gamma};
use ordsum::{DistributionSpec, OrderStatSumProblem, RngStream};
use proptest::prelude::*;

fn cube(max_dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, 1..=max_dim)
}

fn weights(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, 1..=max_len).prop_map(|w| {
        let s: f64 = w.iter().sum();
        w.into_iter().map(|x| x / s).collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn cut_point_map_lands_on_simplex(u in cube(20)) {
        let s = cube_to_simplex(&u).unwrap().0;
        prop_assert_eq!(s.len(), u.len() + 1);
        prop_assert!(s.iter().all(|x| *x >= 0.0));
        prop_assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ordered_map_is_sorted_simplex_point(u in cube(20)) {
        let s = cube_to_ordered_simplex(&u).unwrap().0;
        prop_assert_eq!(s.len(), u.len());
        prop_assert!(s.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(s.iter().all(|x| *x >= 0.0));
        prop_assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coefficients_expand_weighted_order_statistics(
        w in weights(6),
        extra in 0usize..5,
        z in prop::collection::vec(0.0f64..10.0, 11),
    ) {
        let l = w.len();
        let n = l + extra;
        let z = &z[..n];
        let c = truncation_coefficients(n, &w);
        prop_assert!(c.iter().all(|x| *x > 0.0));
        let y = exp_order_stats_from_spacings(z, l).unwrap();
        let lhs: f64 = w.iter().zip(&y).map(|(a, b)| a * b).sum();
        let rhs: f64 = c.iter().zip(z).map(|(a, b)| a * b).sum();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.max(1.0));
    }

    #[test]
    fn incomplete_gamma_halves_sum_to_one(s in 0.05f64..50.0, x in 0.0f64..200.0) {
        let p = reg_lower_gamma(s, x).unwrap();
        let q = reg_upper_gamma(s, x).unwrap();
        prop_assert!((0.0..=1.0).contains(&p) && (0.0..=1.0).contains(&q));
        prop_assert!((p + q - 1.0).abs() < 1e-13);
    }

    #[test]
    fn results_are_probabilities_with_consistent_error(
        n in 1usize..7,
        l_frac in 0.0f64..1.0,
        gamma in 0.05f64..3.0,
        alpha in 0.2f64..1.0,
        seed in any::<u64>(),
    ) {
        let l = 1 + ((n - 1) as f64 * l_frac) as usize;
        let p = OrderStatSumProblem::new(n, l, gamma, DistributionSpec::Weibull { alpha, eta: 1.0 }).unwrap();
        let rng = RngStream::new(seed, 0);
        for r in [naive_mc(&p, 2000, &rng).unwrap(), universal_is(&p, 2000, &rng).unwrap(), cmc_gg(&p, 2000, &rng).unwrap()] {
            prop_assert!((0.0..=1.0).contains(&r.estimate));
            prop_assert!(r.variance >= 0.0);
            let re = relative_error(r.estimate, r.variance, r.samples);
            prop_assert!(re.to_bits() == r.relative_error.to_bits() || (re.is_nan() && r.relative_error.is_nan()));
        }
    }
}
