use proptest::prelude::*;

use equimax::distribution::{g_integral, max_cdf, max_pdf, max_quantile};
use equimax::special::{inverse_mills, inverse_mills_deriv, norm_cdf, norm_quantile};
use equimax::{EquicorrParams, LocationArgs, QuadratureSpec};

fn q() -> QuadratureSpec {
    QuadratureSpec::default()
}

fn params() -> impl Strategy<Value = EquicorrParams> {
    (0.05f64..0.95, prop::collection::vec(-3.0f64..1.0, 1..=5))
        .prop_map(|(rho, mu)| EquicorrParams::new(rho, mu).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn quantile_inverts_cdf(p in 1e-12f64..1.0) {
        prop_assume!(p < 1.0 - 1e-12);
        let x = norm_quantile(p);
        let back = norm_cdf(x);
        prop_assert!((back - p).abs() <= 1e-14 * p.max(1e-3), "p={p} back={back}");
    }

    #[test]
    fn mills_identity(x in -35.0f64..35.0) {
        let m = inverse_mills(x);
        let d = inverse_mills_deriv(x);
        prop_assert!(m > 0.0);
        prop_assert!(d < 0.0 && d > -1.0);
        prop_assert!((d + m * (x + m)).abs() <= 1e-12 * m.max(1.0));
    }

    #[test]
    fn cdf_below_every_marginal(p in params(), x in -5.0f64..5.0) {
        let f = max_cdf(x, &p, &q()).unwrap();
        let bound = p.mu().iter().map(|m| norm_cdf(x - m)).fold(f64::INFINITY, f64::min);
        prop_assert!(f <= bound + 1e-11);
        prop_assert!((0.0..=1.0).contains(&f));
    }

    #[test]
    fn cdf_monotone_and_density_positive(p in params(), x in -4.0f64..4.0, dx in 0.01f64..1.0) {
        let a = max_cdf(x, &p, &q()).unwrap();
        let b = max_cdf(x + dx, &p, &q()).unwrap();
        prop_assert!(b >= a - 1e-13);
        prop_assert!(max_pdf(x, &p, &q()).unwrap() >= 0.0);
    }

    #[test]
    fn max_quantile_round_trip(p in params(), zeta in 0.001f64..0.999) {
        let x = max_quantile(zeta, &p, &q()).unwrap();
        prop_assert!((max_cdf(x, &p, &q()).unwrap() - zeta).abs() <= 1e-10);
    }

    #[test]
    fn g_permutation_invariant(nu0 in -2.0f64..2.0, nu in prop::collection::vec(-2.0f64..1.0, 2..5), rho in 0.1f64..0.9) {
        let mut rev = nu.clone();
        rev.reverse();
        let a = g_integral(&LocationArgs::new(nu0, nu).unwrap(), rho, &q()).unwrap();
        let b = g_integral(&LocationArgs::new(nu0, rev).unwrap(), rho, &q()).unwrap();
        prop_assert!((a - b).abs() < 1e-13);
    }
}
