//! Property tests through the public API.

use std::f64::consts::PI;

use gibbs_bounds::bounds::{
    f_bounds, intensity_bounds, intensity_summary, lambda_mf, lambda_ps, pgfl_bounds, Interval,
};
use gibbs_bounds::io::{read_pattern_csv, write_pattern_csv};
use gibbs_bounds::model::{
    integral_g, integral_gamma, PairwiseModel, PointPattern, RadialStepInteraction, Window,
};
use gibbs_bounds::rng::RngSeed;
use gibbs_bounds::simulate::{sample_dcftp, sample_mh};
use gibbs_bounds::specfun::lambert_w0;
use proptest::prelude::*;

fn strauss(beta: f64, gamma: f64, r: f64) -> PairwiseModel {
    PairwiseModel::new(2, beta, RadialStepInteraction::strauss(gamma, r).unwrap()).unwrap()
}

proptest! {
    #[test]
    fn lambert_w_is_increasing_and_inverts(x in 0.0f64..1e6, dx in 1e-6f64..10.0) {
        let w = lambert_w0(x).unwrap();
        prop_assert!((w * w.exp() - x).abs() <= 1e-12 * x.max(1e-300));
        prop_assert!(lambert_w0(x + dx).unwrap() > w);
    }

    #[test]
    fn approximations_are_ordered_inside_the_bounds(
        beta in 1.0f64..5000.0,
        gamma in 0.0f64..1.0,
        r in 0.005f64..0.1,
    ) {
        let model = strauss(beta, gamma, r);
        let s = intensity_summary(&model);
        let tol = 1e-12 * beta;
        prop_assert!(s.lower <= s.lambda_ps + tol);
        prop_assert!(s.lambda_ps <= s.upper + tol);
        // log(1/gamma) >= 1 - gamma, so the mean-field integral dominates G.
        prop_assert!(integral_gamma(&model) >= integral_g(&model));
        prop_assert!(s.lambda_mf <= s.lambda_ps + tol);
        prop_assert!(s.upper <= beta);
    }

    #[test]
    fn strauss_integrals_match_disc_areas(gamma in 0.01f64..1.0, r in 0.001f64..0.2) {
        let model = strauss(100.0, gamma, r);
        let area = PI * r * r;
        prop_assert!((integral_g(&model) - (1.0 - gamma) * area).abs() <= 1e-12 * area);
        prop_assert!((integral_gamma(&model) + gamma.ln() * area).abs() <= 1e-12 * area);
    }

    #[test]
    fn pgfl_bounds_shrink_with_the_intensity_interval(
        c_star in 1.0f64..200.0,
        a in 0.0f64..1.0,
        b in 0.0f64..1.0,
        shrink in 0.0f64..0.5,
        g in 0.0f64..0.05,
    ) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let outer = Interval::new(lo * c_star, hi * c_star).unwrap();
        let mid = 0.5 * (lo + hi);
        let inner = Interval::new(
            (lo + shrink * (mid - lo)) * c_star,
            (hi - shrink * (hi - mid)) * c_star,
        )
        .unwrap();
        let wide = pgfl_bounds(outer, c_star, g).unwrap();
        let narrow = pgfl_bounds(inner, c_star, g).unwrap();
        prop_assert!(0.0 <= wide.lower && wide.upper <= 1.0);
        prop_assert!(wide.lower <= narrow.lower && narrow.upper <= wide.upper);
    }

    #[test]
    fn empty_space_band_is_a_distribution_function_band(
        beta in 1.0f64..500.0,
        g in 0.0f64..0.02,
    ) {
        let lambda = intensity_bounds(beta, g);
        let t: Vec<f64> = (0..=20).map(|i| i as f64 * 0.01).collect();
        let band = f_bounds(lambda, beta, 2, &t).unwrap();
        prop_assert_eq!(band.bands[0].lower, 0.0);
        for w in band.bands.windows(2) {
            prop_assert!(w[0].lower <= w[1].lower + 1e-15);
            prop_assert!(w[0].upper <= w[1].upper + 1e-15);
        }
        for b in &band.bands {
            prop_assert!(0.0 <= b.lower && b.lower <= b.upper && b.upper <= 1.0);
        }
    }

    #[test]
    fn pattern_csv_round_trips(points in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 0..40)) {
        let mut pts: Vec<Vec<f64>> = points.into_iter().map(|(x, y)| vec![x, y]).collect();
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup();
        let pattern = PointPattern::new(Window::unit_cube(2), &pts).unwrap();
        let mut buf = Vec::new();
        write_pattern_csv(&pattern, &mut buf).unwrap();
        let back = read_pattern_csv(buf.as_slice(), Window::unit_cube(2)).unwrap();
        prop_assert_eq!(back, pattern);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn samplers_respect_hard_core_and_window(seed in any::<u64>(), r in 0.01f64..0.05) {
        let model = PairwiseModel::new(2, 100.0, RadialStepInteraction::hard_core(r).unwrap()).unwrap();
        let window = Window::unit_cube(2);
        for pattern in [
            sample_mh(&model, &window, 5_000, RngSeed::new(seed, 0)).unwrap(),
            sample_dcftp(&model, &window, RngSeed::new(seed, 1)).unwrap(),
        ] {
            let pts: Vec<&[f64]> = pattern.points().collect();
            for (i, p) in pts.iter().enumerate() {
                prop_assert!(window.contains(p));
                for q in &pts[..i] {
                    let d2 = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2);
                    prop_assert!(d2 > r * r);
                }
            }
        }
    }

    #[test]
    fn sampling_is_a_function_of_the_seed(seed in any::<u64>(), stream in any::<u64>()) {
        let model = strauss(80.0, 0.4, 0.05);
        let window = Window::unit_cube(2);
        let s = RngSeed::new(seed, stream);
        prop_assert_eq!(sample_dcftp(&model, &window, s).unwrap(), sample_dcftp(&model, &window, s).unwrap());
        prop_assert_eq!(sample_mh(&model, &window, 2_000, s).unwrap(), sample_mh(&model, &window, 2_000, s).unwrap());
    }
}

#[test]
fn poisson_case_collapses_every_approximation() {
    for beta in [0.5, 10.0, 1234.5] {
        assert_eq!(lambda_ps(beta, 0.0), beta);
        assert_eq!(lambda_mf(beta, 0.0), beta);
        let b = intensity_bounds(beta, 0.0);
        assert_eq!((b.lower, b.upper), (beta, beta));
    }
}
