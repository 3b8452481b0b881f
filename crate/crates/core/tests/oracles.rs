//! Library results against brute-force or closed-form oracles computed here.

use std::f64::consts::FRAC_PI_2;

use conecalib::catalog::{params_for, row1, Shape};
use conecalib::comass::{psi, psi_prime, PsiEnclosure};
use conecalib::interval::Interval;
use conecalib::profile::convolve;
use conecalib::quad::log_sin_integral;
use conecalib::rk::{integrate, RkOptions};
use proptest::prelude::*;

fn midpoint(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    (0..n).map(|i| f(a + h * (i as f64 + 0.5))).sum::<f64>() * h
}

#[test]
fn log_sin_integral_matches_riemann_sum() {
    let g = |x: f64| 1.0 / x.sin().ln();
    for (a, b) in [(0.0, 0.5), (0.05, 0.1), (0.3, 1.2)] {
        let exact = log_sin_integral(a, b);
        let riemann = midpoint(g, a, b, 1_000_000);
        let rel = ((exact - riemann) / riemann).abs();
        assert!(rel < 1e-8, "[{a}, {b}]: {exact} vs {riemann} (rel {rel:.2e})");
    }
}

#[test]
fn mollified_step_matches_direct_convolution() {
    let eps = 0.01;
    let bump = |u: f64| {
        let s = u / eps;
        if s.abs() >= 1.0 {
            0.0
        } else {
            (-1.0 / (1.0 - s * s)).exp()
        }
    };
    let mass = midpoint(bump, -eps, eps, 200_000);
    let step = |t: f64| if t < 0.3 { 1.0 } else { 0.0 };
    for theta in [0.285, 0.295, 0.298, 0.3, 0.303, 0.309, 0.32] {
        let direct = midpoint(|u| step(theta - u) * bump(u), -eps, eps, 200_000) / mass;
        let lib = convolve(&step, &[0.3], eps, theta);
        assert!((lib - direct).abs() < 1e-8, "theta {theta}: {lib} vs {direct}");
    }
}

#[test]
fn rk_matches_closed_form() {
    let opts = RkOptions::default().with_tol(1e-12);
    let (sol, _) = integrate(|t, y| y * t.cos(), 0.0, 1.0, 3.0, opts, None).unwrap();
    for t in [0.0, 0.7, 1.9, 2.6, 3.0] {
        let (y, dy) = sol.eval(t);
        let exact = t.sin().exp();
        assert!((y - exact).abs() < 1e-9 * exact, "t={t}: {y} vs {exact}");
        assert!((dy - exact * t.cos()).abs() < 1e-5 * exact, "t={t}: dy {dy}");
    }
    let (_, hit) = integrate(|_, _| -1.0, 0.0, 1.0, 5.0, opts, Some(&|_, y| y - 0.25)).unwrap();
    assert!((hit.unwrap().t - 0.75).abs() < 1e-10);
}

fn row1_pair() -> impl Strategy<Value = (u32, u32)> {
    (2u32..=12, 2u32..=12)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn row1_is_symmetric_under_reflection((r, s) in row1_pair(), t in 0.02f64..1.55, beta in 0.8f64..1.6) {
        let a = psi(t, &row1(r, s).unwrap(), beta);
        let b = psi(FRAC_PI_2 - t, &row1(s, r).unwrap(), beta);
        prop_assert!((a / b - 1.0).abs() < 1e-11, "{a} vs {b}");
    }

    #[test]
    fn psi_prime_matches_difference_quotient((r, s) in row1_pair(), t in 0.05f64..1.52, beta in 0.8f64..1.6) {
        let p = row1(r, s).unwrap();
        let h = 1e-5;
        let fd = (psi(t + h, &p, beta) - psi(t - h, &p, beta)) / (2.0 * h);
        let d = psi_prime(t, &p, beta);
        let scale = psi(t, &p, beta).max(1.0);
        prop_assert!((fd - d).abs() < 1e-5 * scale.max(d.abs()), "{d} vs {fd}");
    }

    #[test]
    fn enclosure_contains_point_values(
        row in 1u8..=4,
        k in 3u32..=9,
        lo in 0.01f64..1.5,
        w in 1e-6f64..0.05,
        beta in 0.8f64..1.6,
    ) {
        let p = match row {
            1 => row1(k, 12 - k).unwrap(),
            r => params_for(r, Shape::K { k }).unwrap(),
        };
        let hi = (lo + w).min(FRAC_PI_2 - 1e-3);
        prop_assume!(hi > lo);
        let enc = PsiEnclosure::new(&p, beta);
        let box_ = enc.psi(Interval::new(lo, hi), p.domain_end());
        for i in 0..=8 {
            let t = lo + (hi - lo) * i as f64 / 8.0;
            let v = psi(t, &p, beta);
            prop_assert!(box_.lo() <= v * (1.0 + 1e-14) && v <= box_.hi() * (1.0 + 1e-14), "psi({t}) = {v} outside [{}, {}]", box_.lo(), box_.hi());
        }
    }

    #[test]
    fn psi_is_positive_and_one_on_the_critical_ray((r, s) in row1_pair(), beta in 0.8f64..1.6) {
        let p = row1(r, s).unwrap();
        let v = psi(p.theta0, &p, beta);
        prop_assert!((v - 1.0).abs() < 1e-12);
        for i in 1..50 {
            prop_assert!(psi(FRAC_PI_2 * i as f64 / 50.0, &p, beta) > 0.0);
        }
    }
}
