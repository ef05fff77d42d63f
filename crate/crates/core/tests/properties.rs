use num_complex::Complex64;
use proptest::prelude::*;
use pwphase::frames::{outer_product, rank_one_recover, FrameFamily};
use pwphase::grid::{sampling_rate, InterpolationGrid};
use pwphase::measurement::{measure, ModulatorBank};
use pwphase::{cardinal_sine, TimeLimitedSignal};

fn complex() -> impl Strategy<Value = Complex64> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(re, im)| Complex64::new(re, im))
}

fn signal(max_order: usize) -> impl Strategy<Value = TimeLimitedSignal> {
    (0..=max_order, 0.5..2.0f64).prop_flat_map(|(j, t)| {
        prop::collection::vec(complex(), 2 * j + 1).prop_map(move |c| TimeLimitedSignal::new(t, c).unwrap())
    })
}

fn point() -> impl Strategy<Value = Complex64> {
    (-50.0..50.0f64, -2.0..2.0f64).prop_map(|(re, im)| Complex64::new(re, im))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn transform_matches_quadrature(x in signal(4), z in point()) {
        let exact = x.fourier_transform(z);
        let quad = x.fourier_transform_quadrature(z, 4001).unwrap();
        prop_assert!((exact - quad).norm() <= 1e-6 * (1.0 + exact.norm()));
    }

    #[test]
    fn transform_is_linear(
        coeffs in prop::collection::vec((complex(), complex()), 1..6),
        a in complex(),
        b in complex(),
        z in point(),
    ) {
        let n = 2 * (coeffs.len() / 2) + 1;
        let (cx, cy): (Vec<_>, Vec<_>) = coeffs.iter().cycle().take(n).copied().unzip();
        let x = TimeLimitedSignal::new(1.3, cx.clone()).unwrap();
        let y = TimeLimitedSignal::new(1.3, cy.clone()).unwrap();
        let combo = TimeLimitedSignal::new(1.3, cx.iter().zip(&cy).map(|(p, q)| a * p + b * q).collect()).unwrap();
        let lhs = combo.fourier_transform(z);
        let rhs = a * x.fourier_transform(z) + b * y.fourier_transform(z);
        prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + lhs.norm()));
    }

    #[test]
    fn real_time_series_has_conjugate_symmetric_transform(
        half in prop::collection::vec(complex(), 0..5),
        c0 in -2.0..2.0f64,
        xi in -50.0..50.0f64,
    ) {
        // x(t) real  <=>  c_{-j} = conj(c_j)
        let mut coeffs: Vec<Complex64> = half.iter().rev().map(|c| c.conj()).collect();
        coeffs.push(Complex64::new(c0, 0.0));
        coeffs.extend(half.iter().copied());
        let x = TimeLimitedSignal::new(1.0, coeffs).unwrap();
        let plus = x.fourier_transform(Complex64::new(xi, 0.0));
        let minus = x.fourier_transform(Complex64::new(-xi, 0.0));
        prop_assert!((minus - plus.conj()).norm() <= 1e-12 * (1.0 + plus.norm()));
    }

    #[test]
    fn cardinal_sine_is_even(re in -100.0..100.0f64, im in -5.0..5.0f64) {
        let z = Complex64::new(re, im);
        let d = (cardinal_sine(z) - cardinal_sine(-z)).norm();
        prop_assert!(d <= 1e-15 * (1.0 + cardinal_sine(z).norm()));
    }

    #[test]
    fn rank_one_identity(v0 in complex(), v1 in complex()) {
        let frame = FrameFamily::canonical_k2();
        let v = [v0, v1];
        let q = rank_one_recover(&frame.intensities(&v).unwrap(), &frame).unwrap();
        prop_assert!(q.max_abs_diff(&outer_product(&v)) <= 1e-10);
    }

    #[test]
    fn rank_one_is_homogeneous(v0 in complex(), v1 in complex(), s in 0.0..10.0f64) {
        let frame = FrameFamily::canonical_k2();
        let c = frame.intensities(&[v0, v1]).unwrap();
        let scaled: Vec<f64> = c.iter().map(|x| s * x).collect();
        let q = rank_one_recover(&c, &frame).unwrap().scaled(s);
        let qs = rank_one_recover(&scaled, &frame).unwrap();
        let scale = q.entries().iter().map(|e| e.norm()).fold(1.0, f64::max);
        prop_assert!(q.max_abs_diff(&qs) <= 1e-12 * scale);
    }

    #[test]
    fn intensities_are_phase_blind(v0 in complex(), v1 in complex()) {
        let frame = FrameFamily::canonical_k2();
        let base = frame.intensities(&[v0, v1]).unwrap();
        for theta in [std::f64::consts::PI / 7.0, std::f64::consts::FRAC_PI_2, 1.0] {
            let r = Complex64::from_polar(1.0, theta);
            let rotated = frame.intensities(&[v0 * r, v1 * r]).unwrap();
            for (a, b) in base.iter().zip(&rotated) {
                prop_assert!((a - b).abs() <= 1e-13 * (1.0 + a.abs()));
            }
        }
    }

    #[test]
    fn measurement_homogeneity_and_nonnegativity(x in signal(3), s in 0.0..5.0f64) {
        let t_prime = x.interval_length().max(1.0);
        let grid = InterpolationGrid::shannon(t_prime, 2, 1, -6, 5, 0.0).unwrap();
        let bank = ModulatorBank::new(FrameFamily::canonical_k2(), grid).unwrap();
        let base = measure(&x, &bank);
        let scaled = measure(&x.scaled(Complex64::new(s, 0.0)), &bank);
        for (a, b) in base.samples().iter().zip(scaled.samples()) {
            prop_assert!(*a >= 0.0);
            prop_assert!((b - s * s * a).abs() <= 1e-12 * (s * s * a).max(1e-300) + 1e-300);
        }
    }

    #[test]
    fn shannon_grid_structure(
        k in 2usize..6,
        a_frac in 0.0..1.0f64,
        t_prime in 0.5..3.0f64,
        shift in -1.0..1.0f64,
        n_min in -6i64..0,
        len in 1i64..8,
    ) {
        let a = 1 + ((k - 1) as f64 * a_frac) as usize % (k - 1);
        let grid = InterpolationGrid::shannon(t_prime, k, a, n_min, n_min + len, shift).unwrap();
        prop_assert!(grid.validate_overlap_condition().ok);
        for n in n_min + 1..=n_min + len {
            for i in 0..a {
                prop_assert_eq!(grid.point(n, i), grid.point(n - 1, k - a + i));
            }
        }
        // beta-periodicity inside the window
        let pts = grid.distinct_points();
        let beta = grid.block_spacing();
        let (lo, hi) = (pts[0].re, pts[pts.len() - 1].re);
        for p in &pts {
            if p.re + beta <= hi + 1e-9 {
                prop_assert!(pts.iter().any(|q| (q - (p + beta)).norm() <= 1e-9 * (1.0 + beta)));
            }
            prop_assert!(p.re >= lo);
        }
    }

    #[test]
    fn rate_is_monotone(k in 2usize..8, t in 0.5..2.0f64, ratio in 1.0..3.0f64, bump in 0.01..1.0f64) {
        let t_prime = t * ratio;
        for a in 1..k - 1 {
            let lo = sampling_rate(k, a, t_prime, t).unwrap();
            let hi = sampling_rate(k, a + 1, t_prime, t).unwrap();
            prop_assert!(hi.rate > lo.rate && hi.nyquist_multiple > lo.nyquist_multiple);
        }
        let base = sampling_rate(k, 1, t_prime, t).unwrap();
        let wider = sampling_rate(k, 1, t_prime + bump, t).unwrap();
        prop_assert!(wider.rate > base.rate);
    }
}
