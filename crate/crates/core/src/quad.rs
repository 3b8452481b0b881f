//! Quadrature: adaptive Simpson, Gauss–Legendre rules and the log-sine
//! integral `∫ dγ / ln sin γ`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::OnceLock;

const MAX_DEPTH: u32 = 48;

/// Adaptive Simpson with the classic `|S₂ − S| ≤ 15 tol` acceptance test.
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (fa, fb) = (f(a), f(b));
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[−1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

pub(crate) fn gl8() -> &'static (Vec<f64>, Vec<f64>) {
    static R: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    R.get_or_init(|| gauss_legendre(8))
}

pub(crate) fn gl64() -> &'static (Vec<f64>, Vec<f64>) {
    static R: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    R.get_or_init(|| gauss_legendre(64))
}

/// Integrate `f` over `[a, b]` with a fixed Gauss–Legendre rule.
pub fn gauss_fixed(rule: &(Vec<f64>, Vec<f64>), f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (h, c) = (0.5 * (b - a), 0.5 * (a + b));
    rule.0.iter().zip(&rule.1).map(|(x, w)| w * f(c + h * x)).sum::<f64>() * h
}

/// `1 / ln sin γ`, extended by its limit 0 at `γ = 0`.
pub fn log_sin_integrand(gamma: f64) -> f64 {
    if gamma <= 0.0 {
        0.0
    } else {
        1.0 / gamma.sin().ln()
    }
}

const LOG_SIN_TOL: f64 = 1e-12;
const SUBST_BELOW: f64 = 1e-3;
const U_MAX: f64 = 60.0;

/// `∫_a^b dγ / ln sin γ` for `0 ≤ a ≤ b < π/2`.
///
/// Below `γ = 10⁻³` the integrand approaches 0 only like `1/ln γ`, so that
/// piece is integrated in `u = −ln γ`, where it becomes the smooth, rapidly
/// decaying `e^(−u) / ln sin e^(−u)`.
pub fn log_sin_integral(a: f64, b: f64) -> f64 {
    assert!(0.0 <= a && a <= b && b < FRAC_PI_2, "log_sin_integral({a}, {b})");
    if a == b {
        return 0.0;
    }
    let mut total = 0.0;
    let mut lo = a;
    if a < SUBST_BELOW {
        let hi = b.min(SUBST_BELOW);
        let u_lo = -hi.ln();
        let u_hi = if a == 0.0 { U_MAX } else { (-a.ln()).min(U_MAX) };
        let g = |u: f64| {
            let gamma = (-u).exp();
            gamma / gamma.sin().ln()
        };
        if u_hi > u_lo {
            total += adaptive_simpson(&g, u_lo, u_hi, 0.5 * LOG_SIN_TOL);
        }
        lo = hi;
    }
    if b > lo {
        total += adaptive_simpson(&log_sin_integrand, lo, b, 0.5 * LOG_SIN_TOL);
    }
    total
}

/// Cumulative `∫_lo^θ dγ / ln sin γ` on a fixed window, evaluated by panels
/// of 8-point Gauss–Legendre.
#[derive(Debug, Clone)]
pub struct LogSinTable {
    lo: f64,
    hi: f64,
    width: f64,
    cumulative: Vec<f64>,
    edge_values: Vec<f64>,
}

impl LogSinTable {
    pub fn new(lo: f64, hi: f64, panels: usize) -> Self {
        assert!(0.0 < lo && lo < hi && hi < FRAC_PI_2);
        let width = (hi - lo) / panels as f64;
        let mut cumulative = Vec::with_capacity(panels + 1);
        cumulative.push(0.0);
        let mut acc = 0.0;
        for i in 0..panels {
            let a = lo + width * i as f64;
            acc += gauss_fixed(gl8(), log_sin_integrand, a, a + width);
            cumulative.push(acc);
        }
        let edge_values =
            (0..=panels).map(|i| log_sin_integrand(lo + width * i as f64)).collect();
        Self { lo, hi, width, cumulative, edge_values }
    }

    pub fn total(&self) -> f64 {
        *self.cumulative.last().expect("nonempty")
    }

    /// `∫_lo^θ`, with `θ` clamped into the window.
    pub fn integral_to(&self, theta: f64) -> f64 {
        let (i, a, t) = self.locate(theta);
        self.cumulative[i] + gauss_fixed(gl8(), log_sin_integrand, a, t)
    }

    /// Cubic Hermite interpolation of the cumulative integral between panel
    /// edges, using the integrand as derivative. Cheaper than
    /// [`integral_to`](Self::integral_to), accurate to about `width⁴`.
    pub fn integral_to_fast(&self, theta: f64) -> f64 {
        let (i, a, t) = self.locate(theta);
        let h = self.width;
        let s = (t - a) / h;
        let (s2, s3) = (s * s, s * s * s);
        (2.0 * s3 - 3.0 * s2 + 1.0) * self.cumulative[i]
            + (s3 - 2.0 * s2 + s) * h * self.edge_values[i]
            + (-2.0 * s3 + 3.0 * s2) * self.cumulative[i + 1]
            + (s3 - s2) * h * self.edge_values[i + 1]
    }

    fn locate(&self, theta: f64) -> (usize, f64, f64) {
        let t = theta.clamp(self.lo, self.hi);
        let last = self.cumulative.len() - 2;
        let i = (((t - self.lo) / self.width) as usize).min(last);
        (i, self.lo + self.width * i as f64, t)
    }
}
