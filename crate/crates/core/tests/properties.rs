//! Randomized invariants. Where the unit tests pin frozen reference values,
//! these check structural identities (factorizations, bounds, collapses to
//! special cases, route agreement) across the whole sampled parameter box.

use cvteleport::averaging::{
    avg_fidelity_circle, avg_fidelity_gauss, avg_fidelity_line, circle_symmetric_fidelity,
    gauss_opt_fidelity, gauss_opt_gain, line_auxiliary, r_max_circle, CircleDist, GaussDist,
    LineDist,
};
use cvteleport::fidelity::{
    eps_independent_fidelity, h_function, kernel, optimal_eps_independent_fidelity, point_fidelity,
    CoherentAmplitude,
};
use cvteleport::optimizer::{maximize, Bounds, FreeParamSet};
use cvteleport::oracle::quad::adaptive_simpson;
use cvteleport::oracle::{
    fidelity_by_quadrature, gaussian_integral_2d, OutputCFSpec, QuadraticExponent,
};
use cvteleport::params::{
    amplitude_independent_gains, derived_coeffs, ChannelParams, GaussianCF2, TeleporterParams,
    R_CAP,
};
use cvteleport::Error;
use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;
use proptest::prelude::*;

const FRAC_PI_4: f64 = std::f64::consts::FRAC_PI_4;

prop_compose! {
    fn arb_params()(
        theta in 0.05..1.52_f64,
        g_q in 0.0..1.8_f64,
        g_p in 0.0..1.8_f64,
        t in 0.5..=1.0_f64,
    ) -> TeleporterParams {
        TeleporterParams::new(theta, g_q, g_p, t).unwrap()
    }
}

prop_compose! {
    fn arb_channel()(
        kappa_t in 0.0..=1.0_f64,
        n_bar in 0.0..=2.0_f64,
        r in 0.0..=2.5_f64,
    ) -> ChannelParams {
        ChannelParams::new(kappa_t, n_bar, r).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    // The two kernel brackets K1 +- 2 K2 factor through the single-quadrature
    // function H evaluated at (g_q, sin theta) and (g_p, cos theta).
    #[test]
    fn kernel_brackets_factor_through_h(p in arb_params(), c in arb_channel()) {
        let ker = kernel(&p, &c).unwrap();
        let hq = h_function(p.g_q(), p.theta().sin(), p.transmissivity(), &c);
        let hp = h_function(p.g_p(), p.theta().cos(), p.transmissivity(), &c);
        let scale = ker.k1.abs().max(1.0);
        prop_assert!((ker.k1 + 2.0 * ker.k2 - hq).abs() <= 1e-11 * scale);
        prop_assert!((ker.k1 - 2.0 * ker.k2 - hp).abs() <= 1e-11 * scale);
        prop_assert!(ker.g > 0.0);
    }

    #[test]
    fn point_fidelity_lies_in_unit_interval(
        p in arb_params(),
        c in arb_channel(),
        re in -4.0..4.0_f64,
        im in -4.0..4.0_f64,
    ) {
        let f = point_fidelity(&p, &c, CoherentAmplitude::new(re, im).unwrap()).unwrap();
        prop_assert!(f > 0.0);
        prop_assert!(f <= 1.0 + 1e-12);
    }

    // Gains tuned to cancel the input amplitude leave f1 = 1, f2 = 0 and a
    // vanishing line-average curvature, independent of the channel.
    #[test]
    fn matched_gains_cancel_amplitude_dependence(
        theta in 0.1..1.47_f64,
        t in 0.5..=1.0_f64,
        c in arb_channel(),
    ) {
        let (g_q, g_p) = amplitude_independent_gains(theta, t).unwrap();
        let p = TeleporterParams::new(theta, g_q, g_p, t).unwrap();
        let d = derived_coeffs(&p, &c);
        prop_assert!((d.f1 - 1.0).abs() <= 1e-12);
        prop_assert!(d.f2.abs() <= 1e-12);
        prop_assert!(line_auxiliary(&p, &c).unwrap().m <= 1e-24);
    }

    #[test]
    fn tmsv_evaluation_matches_scalar_form(
        r in 0.0..=3.0_f64,
        are in -2.0..2.0_f64,
        aim in -2.0..2.0_f64,
        bre in -2.0..2.0_f64,
        bim in -2.0..2.0_f64,
    ) {
        let resource = GaussianCF2::tmsv(r).unwrap();
        let a = Complex64::new(are, aim);
        let b = Complex64::new(bre, bim);
        let got = resource.evaluate(a, b);
        let quad = (2.0 * r).cosh() * (a.norm_sqr() + b.norm_sqr())
            - 2.0 * (2.0 * r).sinh() * (a * b).re;
        let want = (-0.5 * quad).exp();
        prop_assert!((got - want).abs() <= 1e-12 * want.max(1e-30));
    }

    // The line average sits between the fidelity at the segment edge and at the
    // center, since the integrand decays monotonically along the segment.
    #[test]
    fn line_average_bounded_by_edge_and_center(
        p in arb_params(),
        c in arb_channel(),
        l in 0.01..5.0_f64,
    ) {
        let d = LineDist::new(l).unwrap();
        let avg = avg_fidelity_line(&p, &c, &d).unwrap();
        let center = point_fidelity(&p, &c, CoherentAmplitude::zero()).unwrap();
        let edge = point_fidelity(&p, &c, CoherentAmplitude::new(l, 0.0).unwrap()).unwrap();
        prop_assert!(avg <= center + 1e-12);
        prop_assert!(avg >= edge - 1e-12);
    }

    // At theta = pi/4 with equal gains, the general circle average (Bessel
    // route) must collapse to the one-exponential symmetric form.
    #[test]
    fn circle_average_collapses_at_symmetric_point(
        g in 0.0..1.8_f64,
        t in 0.5..=1.0_f64,
        c in arb_channel(),
        a in 0.0..=3.0_f64,
    ) {
        let d = CircleDist::new(a).unwrap();
        let p = TeleporterParams::balanced(g, t).unwrap();
        let general = avg_fidelity_circle(&p, &c, &d).unwrap();
        let collapsed = circle_symmetric_fidelity(g, t, &c, &d).unwrap();
        prop_assert!(
            (general - collapsed).abs() <= 1e-11 * general.max(collapsed),
            "general {general:.16e} vs symmetric {collapsed:.16e}"
        );
    }

    // Stationarity and consistency of the closed-form Gaussian-ensemble gain.
    #[test]
    fn gauss_gain_is_stationary_and_consistent(
        t in 0.5..=1.0_f64,
        c in arb_channel(),
        chi in 0.2..=3.0_f64,
    ) {
        let d = GaussDist::new(chi).unwrap();
        let g_star = gauss_opt_gain(t, &c, &d);
        let f_star = gauss_opt_fidelity(t, &c, &d).unwrap();
        let at = |g: f64| {
            let p = TeleporterParams::new(FRAC_PI_4, g, g, t).unwrap();
            avg_fidelity_gauss(&p, &c, &d).unwrap()
        };
        prop_assert!((f_star - at(g_star)).abs() <= 1e-12 * f_star.max(1.0));
        for dg in [5e-4, -5e-4] {
            prop_assert!(at((g_star + dg).max(0.0)) <= f_star + 1e-12);
        }
    }

    // The angle-optimized amplitude-independent fidelity dominates every angle.
    #[test]
    fn theta_optimum_dominates_sampled_angles(
        t in 0.5..=1.0_f64,
        c in arb_channel(),
        theta in 0.02..1.55_f64,
    ) {
        let opt = optimal_eps_independent_fidelity(t, &c).unwrap();
        let f = eps_independent_fidelity(theta, t, &c).unwrap();
        prop_assert!(f <= opt.value + 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // Independent check of the central 2D Gaussian integral against nested
    // adaptive Simpson quadrature of the literal integrand.
    #[test]
    fn gaussian_integral_matches_nested_simpson(
        a11 in 0.5..3.0_f64,
        a22 in 0.5..3.0_f64,
        rho in -0.85..0.85_f64,
        l1 in -0.5..0.5_f64,
        l2 in -0.5..0.5_f64,
        m1 in -1.0..1.0_f64,
        m2 in -1.0..1.0_f64,
        s in -1.0..0.0_f64,
    ) {
        let a12 = rho * (a11 * a22).sqrt();
        let q = QuadraticExponent {
            a: Matrix2::new(a11, a12, a12, a22),
            l: Vector2::new(l1, l2),
            phase: Vector2::new(m1, m2),
            s,
        };
        let analytic = gaussian_integral_2d(&q).unwrap();
        // Box: 8 marginal standard deviations per axis, widened by the offset
        // of the mass center a^{-1} l away from the origin.
        let a_inv = q.a.try_inverse().unwrap();
        let mu = a_inv * q.l;
        let half_x = 8.0 * a_inv[(0, 0)].sqrt() + mu[0].abs();
        let half_y = 8.0 * a_inv[(1, 1)].sqrt() + mu[1].abs();
        let inner = |y: f64| adaptive_simpson(&|x| q.integrand(x, y), -half_x, half_x, 1e-12);
        let numeric = adaptive_simpson(&inner, -half_y, half_y, 3e-11) / std::f64::consts::PI;
        prop_assert!(
            (analytic - numeric).abs() <= 1e-8 * analytic.abs().max(1.0),
            "analytic {analytic:.16e} vs numeric {numeric:.16e}"
        );
    }

    // The assembled-exponent route agrees with the closed form for TMSV
    // resources on random scenarios.
    #[test]
    fn quadrature_route_matches_closed_form(
        p in arb_params(),
        c in arb_channel(),
        re in -3.0..3.0_f64,
        im in -3.0..3.0_f64,
    ) {
        let eps = CoherentAmplitude::new(re, im).unwrap();
        let closed = point_fidelity(&p, &c, eps).unwrap();
        let resource = GaussianCF2::tmsv(c.r()).unwrap();
        let spec = OutputCFSpec::new(p, c, &resource, eps);
        let integral = fidelity_by_quadrature(&spec).unwrap();
        prop_assert!((closed - integral).abs() <= 1e-10 * closed.max(1.0));
    }

    // When the symmetric circle threshold reports an interior maximum it must
    // dominate a dense squeezing grid; when it reports none, the boundary must.
    #[test]
    fn circle_threshold_matches_grid_landscape(
        g in 0.2..1.6_f64,
        t in 0.6..=1.0_f64,
        kappa_t in 0.01..1.0_f64,
        n_bar in 0.0..=1.0_f64,
        a in 0.0..=3.0_f64,
    ) {
        let d = CircleDist::new(a).unwrap();
        let fid = |r: f64| {
            circle_symmetric_fidelity(g, t, &ChannelParams::new(kappa_t, n_bar, r).unwrap(), &d)
                .unwrap()
        };
        let (lo, hi) = (1e-9, R_CAP - 1e-9);
        let n = 400;
        let mut interior_max = f64::NEG_INFINITY;
        for i in 1..n {
            let r = lo + (hi - lo) * i as f64 / n as f64;
            interior_max = interior_max.max(fid(r));
        }
        match r_max_circle(g, t, kappa_t, n_bar, &d) {
            Ok(r_star) => {
                let f_star = fid(r_star);
                prop_assert!(
                    f_star >= interior_max - 1e-9 * interior_max.max(1.0),
                    "claimed max {f_star:.12e} at r = {r_star}, grid found {interior_max:.12e}"
                );
            }
            Err(Error::NoInteriorMax) => {
                let boundary = fid(lo).max(fid(hi));
                prop_assert!(
                    interior_max <= boundary + 1e-9 * boundary.max(1.0),
                    "no interior max reported but grid found {interior_max:.12e} > {boundary:.12e}"
                );
            }
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }

    // Deterministic recovery of a strictly concave objective with a known peak.
    #[test]
    fn optimizer_recovers_concave_quadratic(
        cq in 0.2..3.0_f64,
        cp in 0.2..3.0_f64,
        ct in 0.2..3.0_f64,
        gq0 in 0.3..1.7_f64,
        gp0 in 0.3..1.7_f64,
        th0 in 0.3..1.2_f64,
    ) {
        let f = |p: &TeleporterParams| {
            Ok(1.0
                - cq * (p.g_q() - gq0).powi(2)
                - cp * (p.g_p() - gp0).powi(2)
                - ct * (p.theta() - th0).powi(2))
        };
        let free = FreeParamSet::all_free();
        let bounds = Bounds::default();
        let r1 = maximize(1.0, f, &free, &bounds).unwrap();
        let r2 = maximize(1.0, f, &free, &bounds).unwrap();
        prop_assert!((r1.best_params.g_q() - gq0).abs() <= 1e-7);
        prop_assert!((r1.best_params.g_p() - gp0).abs() <= 1e-7);
        prop_assert!((r1.best_params.theta() - th0).abs() <= 1e-7);
        prop_assert_eq!(r1.best_value.to_bits(), r2.best_value.to_bits());
        prop_assert_eq!(r1.best_params.g_q().to_bits(), r2.best_params.g_q().to_bits());
        prop_assert_eq!(r1.iterations, r2.iterations);
    }
}
