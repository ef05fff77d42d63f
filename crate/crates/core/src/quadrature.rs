//! Composite Simpson quadrature on uniform nodes.

use num_complex::Complex64;

/// Integrates `f` over `[a, b]` using `nodes` equally spaced samples.
///
/// An odd node count uses the composite Simpson rule directly. An even count
/// closes the last three panels with Simpson's 3/8 rule. Two nodes fall back to
/// the trapezoid rule.
pub fn simpson<F>(f: F, a: f64, b: f64, nodes: usize) -> Complex64
where
    F: Fn(f64) -> Complex64,
{
    assert!(nodes >= 2, "quadrature needs at least two nodes");
    let intervals = nodes - 1;
    let h = (b - a) / intervals as f64;
    let x = |i: usize| if i == intervals { b } else { a + h * i as f64 };

    if nodes == 2 {
        return (f(a) + f(b)) * (h / 2.0);
    }
    if nodes == 3 {
        return (f(a) + f(x(1)) * 4.0 + f(b)) * (h / 3.0);
    }

    // Panels handled by the 1/3 rule; an odd interval count leaves three for the 3/8 rule.
    let simpson_intervals = if intervals.is_multiple_of(2) {
        intervals
    } else {
        intervals - 3
    };

    let mut sum = Complex64::new(0.0, 0.0);
    if simpson_intervals > 0 {
        let mut odd = Complex64::new(0.0, 0.0);
        let mut even = Complex64::new(0.0, 0.0);
        for i in 1..simpson_intervals {
            if i % 2 == 1 {
                odd += f(x(i));
            } else {
                even += f(x(i));
            }
        }
        sum += (f(x(0)) + odd * 4.0 + even * 2.0 + f(x(simpson_intervals))) * (h / 3.0);
    }
    if simpson_intervals < intervals {
        let s = simpson_intervals;
        sum += (f(x(s)) + f(x(s + 1)) * 3.0 + f(x(s + 2)) * 3.0 + f(x(s + 3))) * (3.0 * h / 8.0);
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cubic(t: f64) -> Complex64 {
        Complex64::new(t * t * t - 2.0 * t + 1.0, 0.5 * t * t)
    }

    #[test]
    fn exact_on_cubics_for_both_parities() {
        // int_0^2 (t^3 - 2t + 1) dt = 4 - 4 + 2 = 2, int_0^2 t^2/2 dt = 4/3
        for nodes in [3, 4, 5, 6, 7, 10, 101] {
            let v = simpson(cubic, 0.0, 2.0, nodes);
            assert!((v.re - 2.0).abs() < 1e-12, "nodes={nodes}: {v}");
            assert!((v.im - 4.0 / 3.0).abs() < 1e-12, "nodes={nodes}: {v}");
        }
    }

    #[test]
    fn trapezoid_with_two_nodes() {
        let v = simpson(|t| Complex64::new(t, 0.0), 0.0, 1.0, 2);
        assert!((v.re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn converges_on_oscillatory_integrand() {
        // int_0^pi sin t dt = 2
        let f = |t: f64| Complex64::new(t.sin(), 0.0);
        let e1 = (simpson(f, 0.0, std::f64::consts::PI, 101).re - 2.0).abs();
        let e2 = (simpson(f, 0.0, std::f64::consts::PI, 201).re - 2.0).abs();
        assert!(e2 < e1 / 10.0);
    }
}
