//! Sampled angular functions and mollification by an even bump kernel.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::quad::{gauss_fixed, gauss_legendre, gl64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothness {
    Lipschitz,
    Smooth,
}

/// Samples `(θ, value, derivative)` of a function of the angle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngularProfile {
    pub theta: Vec<f64>,
    pub value: Vec<f64>,
    pub derivative: Vec<f64>,
    pub class: Smoothness,
}

impl AngularProfile {
    /// Sample `f` (returning value and derivative) at the given angles.
    pub fn sample(thetas: Vec<f64>, class: Smoothness, f: impl Fn(f64) -> (f64, f64)) -> Self {
        assert!(thetas.windows(2).all(|w| w[0] < w[1]), "angles must increase");
        let (value, derivative) = thetas.iter().map(|&t| f(t)).unzip();
        Self { theta: thetas, value, derivative, class }
    }

    pub fn constant(thetas: Vec<f64>, c: f64) -> Self {
        Self::sample(thetas, Smoothness::Smooth, |_| (c, 0.0))
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    /// Interpolated value and derivative: cubic Hermite for smooth profiles,
    /// piecewise linear for Lipschitz ones. Constant extension outside.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        let n = self.theta.len();
        if t <= self.theta[0] {
            return (self.value[0], if t == self.theta[0] { self.derivative[0] } else { 0.0 });
        }
        if t >= self.theta[n - 1] {
            return (self.value[n - 1], if t == self.theta[n - 1] { self.derivative[n - 1] } else { 0.0 });
        }
        let i = self.theta.partition_point(|&x| x <= t) - 1;
        let (t0, t1) = (self.theta[i], self.theta[i + 1]);
        let (y0, y1) = (self.value[i], self.value[i + 1]);
        let h = t1 - t0;
        let s = (t - t0) / h;
        match self.class {
            Smoothness::Lipschitz => (y0 + s * (y1 - y0), (y1 - y0) / h),
            Smoothness::Smooth => {
                let (d0, d1) = (self.derivative[i], self.derivative[i + 1]);
                let (s2, s3) = (s * s, s * s * s);
                let y = (2.0 * s3 - 3.0 * s2 + 1.0) * y0
                    + (s3 - 2.0 * s2 + s) * h * d0
                    + (-2.0 * s3 + 3.0 * s2) * y1
                    + (s3 - s2) * h * d1;
                let dy = (6.0 * s2 - 6.0 * s) / h * y0
                    + (3.0 * s2 - 4.0 * s + 1.0) * d0
                    + (-6.0 * s2 + 6.0 * s) / h * y1
                    + (3.0 * s2 - 2.0 * s) * d1;
                (y, dy)
            }
        }
    }

    /// Largest gap between the stored derivative and a centered difference of
    /// the stored values, over interior samples.
    pub fn derivative_mismatch(&self) -> f64 {
        (1..self.len().saturating_sub(1))
            .map(|i| {
                let fd = (self.value[i + 1] - self.value[i - 1]) / (self.theta[i + 1] - self.theta[i - 1]);
                (fd - self.derivative[i]).abs()
            })
            .fold(0.0, f64::max)
    }
}

const PANEL_CUTS: [f64; 9] = [-1.0, -0.75, -0.5, -0.25, 0.0, 0.25, 0.5, 0.75, 1.0];

/// The standard bump `exp(−1/(1−u²))` on `(−1, 1)`, unnormalized.
fn bump(u: f64) -> f64 {
    let d = 1.0 - u * u;
    if d <= 0.0 {
        0.0
    } else {
        (-1.0 / d).exp()
    }
}

fn bump_mass() -> f64 {
    static M: OnceLock<f64> = OnceLock::new();
    *M.get_or_init(|| {
        let rule = gauss_legendre(64);
        PANEL_CUTS.windows(2).map(|w| gauss_fixed(&rule, bump, w[0], w[1])).sum()
    })
}

/// Unit-mass even mollifier of radius `eps`.
pub fn kernel(u: f64, eps: f64) -> f64 {
    bump(u / eps) / (eps * bump_mass())
}

/// `∫ g(θ − y) ρ_ε(y) dy` for a function that is smooth between `kinks`.
/// The kernel support is cut into eight panels plus the kinks, and each piece
/// is integrated with 64-point Gauss–Legendre.
pub fn convolve(g: &impl Fn(f64) -> f64, kinks: &[f64], eps: f64, theta: f64) -> f64 {
    let mut cuts = PANEL_CUTS.to_vec();
    for &k in kinks {
        let u = (theta - k) / eps;
        if -1.0 < u && u < 1.0 {
            cuts.push(u);
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| gauss_fixed(gl64(), |u| g(theta - eps * u) * bump(u), w[0], w[1]))
        .sum::<f64>()
        / bump_mass()
}

/// Convolve a value/derivative pair in one pass over the same nodes.
pub fn convolve_pair(g: &impl Fn(f64) -> (f64, f64), kinks: &[f64], eps: f64, theta: f64) -> (f64, f64) {
    let mut cuts = PANEL_CUTS.to_vec();
    for &k in kinks {
        let u = (theta - k) / eps;
        if -1.0 < u && u < 1.0 {
            cuts.push(u);
        }
    }
    cuts.sort_by(f64::total_cmp);
    let (nodes, weights) = gl64();
    let (mut v, mut d) = (0.0, 0.0);
    for w in cuts.windows(2).filter(|w| w[1] > w[0]) {
        let (h, c) = (0.5 * (w[1] - w[0]), 0.5 * (w[0] + w[1]));
        let (mut pv, mut pd) = (0.0, 0.0);
        for (x, wt) in nodes.iter().zip(weights) {
            let u = c + h * x;
            let k = wt * bump(u);
            let (a, b) = g(theta - eps * u);
            pv += k * a;
            pd += k * b;
        }
        v += h * pv;
        d += h * pd;
    }
    let m = bump_mass();
    (v / m, d / m)
}

/// A piecewise-smooth function together with its derivative and kinks, ready
/// for analytic mollification.
pub struct Mollified<F> {
    pub f: F,
    pub kinks: Vec<f64>,
    pub eps: f64,
}

impl<F: Fn(f64) -> (f64, f64)> Mollified<F> {
    /// `(f * ρ_ε)(θ)` and its derivative `(f′ * ρ_ε)(θ)`.
    pub fn eval(&self, theta: f64) -> (f64, f64) {
        convolve_pair(&self.f, &self.kinks, self.eps, theta)
    }
}

/// Mollify a sampled profile: every sample angle is treated as a possible
/// kink of the interpolant.
pub fn mollify(profile: &AngularProfile, eps: f64) -> AngularProfile {
    assert!(eps > 0.0);
    let interp = |t: f64| profile.eval(t);
    let thetas = profile.theta.clone();
    AngularProfile::sample(thetas, Smoothness::Smooth, |t| {
        let lo = profile.theta.partition_point(|&x| x < t - eps);
        let hi = profile.theta.partition_point(|&x| x <= t + eps);
        let kinks = &profile.theta[lo..hi];
        convolve_pair(&interp, kinks, eps, t)
    })
}

/// `C^∞` step: 0 for `t ≤ 0`, 1 for `t ≥ 1`.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / t).exp();
        let b = (-1.0 / (1.0 - t)).exp();
        a / (a + b)
    }
}

/// Derivative of [`smooth_step`].
pub fn smooth_step_deriv(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        return 0.0;
    }
    let a = (-1.0 / t).exp();
    let b = (-1.0 / (1.0 - t)).exp();
    let da = a / (t * t);
    let db = b / ((1.0 - t) * (1.0 - t));
    (da * b + a * db) / ((a + b) * (a + b))
}
