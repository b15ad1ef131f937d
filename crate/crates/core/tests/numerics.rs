use perfclass::dist::{find_root, integrate, maximize_1d};
use perfclass::{ContinuousDist, NumericsConfig};
use proptest::prelude::*;

fn cfg() -> NumericsConfig {
    NumericsConfig::default()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn root_of_affine(a in prop_oneof![-50.0..-0.1f64, 0.1..50.0f64], root in -5.0..5.0f64) {
        let x = find_root(|x| a * (x - root), -10.0, 10.0, &cfg()).unwrap();
        prop_assert!((x - root).abs() <= 1e-9, "{x} vs {root}");
    }

    #[test]
    fn root_of_monotone_cubic(
        a in 0.1..5.0f64,
        b in 0.0..5.0f64,
        root in -5.0..5.0f64,
        flip in any::<bool>(),
    ) {
        let sign = if flip { -1.0 } else { 1.0 };
        let f = |x: f64| {
            let u = x - root;
            sign * (a * u * u * u + b * u)
        };
        let x = find_root(f, -10.0, 10.0, &cfg()).unwrap();
        prop_assert!((x - root).abs() <= 1e-6, "{x} vs {root}");
    }

    #[test]
    fn maximum_of_concave(c in -3.0..3.0f64, k in 0.2..10.0f64, shift in -2.0..2.0f64) {
        let f = |x: f64| shift - k * (x - c).powi(2) - 0.1 * (x - c).powi(4);
        let m = maximize_1d(f, -5.0, 5.0, &cfg()).unwrap();
        prop_assert!((m.x - c).abs() <= 1e-6, "{} vs {c}", m.x);
        prop_assert!((m.value - shift).abs() <= 1e-9);
        prop_assert_eq!(m.grid.len(), cfg().opt_grid_n);
    }

    #[test]
    fn gaussian_mass_by_quadrature(mu in -3.0..3.0f64, sigma in 0.3..3.0f64, lo in -4.0..0.0f64, w in 0.01..6.0f64) {
        let d = ContinuousDist::gaussian(mu, sigma).unwrap();
        let hi = lo + w;
        let q = integrate(|x| d.density(x), lo, hi, &[], &cfg()).unwrap();
        prop_assert!((q - d.mass(lo, hi)).abs() <= 1e-9);
    }

    #[test]
    fn quantile_inverts_cdf(mu in -3.0..3.0f64, sigma in 0.3..3.0f64, p in 1e-6..(1.0 - 1e-6)) {
        for d in [
            ContinuousDist::gaussian(mu, sigma).unwrap(),
            ContinuousDist::logistic(mu, sigma).unwrap(),
            ContinuousDist::uniform(mu, mu + sigma).unwrap(),
        ] {
            let x = d.quantile(p);
            prop_assert!((d.cdf(x) - p).abs() <= 1e-9, "{d:?} at {p}");
            prop_assert!((d.cdf(x) + d.sf(x) - 1.0).abs() <= 1e-14);
        }
    }
}

#[test]
fn whole_line_integral_needs_tails() {
    let d = ContinuousDist::logistic(0.5, 1.5).unwrap();
    let total = integrate(|x| d.density(x), f64::NEG_INFINITY, f64::INFINITY, &[&d], &cfg()).unwrap();
    assert!((total - 1.0).abs() < 1e-9);
    assert!(integrate(|x| d.density(x), f64::NEG_INFINITY, 0.0, &[], &cfg()).is_err());
}
