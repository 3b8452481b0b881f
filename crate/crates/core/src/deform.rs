//! Smoothing the potential near the singular orbits.
//!
//! The potential `f = C α⁻¹ r^α c^k s^t` with `k = βp`, `t = βq`,
//! `C = τ^(−β)` is deformed to `C α⁻¹ r^α c^(k+μ) s^(t+λ)`, where `λ` is a
//! mollified log-sine ramp from `N − t` down to 0 near `θ = 0`, and `μ` the
//! analogous ramp near `θ = π/2`. The new exponents make the ambient form
//! smooth along the singular orbits, and the deformation has to keep the
//! comass at most one.

use std::f64::consts::FRAC_PI_2;

use num_rational::Rational64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::{to_f64, MetricParams};
use crate::certify::{certify, Verdict, DEFAULT_TOL};
use crate::error::DeformError;
use crate::profile::{convolve_pair, AngularProfile, Smoothness};
pub use crate::quad::log_sin_integral;
use crate::quad::LogSinTable;

pub const COMASS_SLACK: f64 = 1e-6;
pub const UNIFORM_GRID: usize = 100_000;
pub const CLUSTER_POINTS: usize = 1_000;
const MAX_SHRINKS: usize = 20;
const TABLE_PANELS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    NearZero,
    NearPiOver2,
}

/// Data of a one-sided deformation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeformationSpec {
    pub k: f64,
    pub t: f64,
    pub c: f64,
    pub n: i64,
    pub x0: f64,
    pub eps: f64,
    pub side: Side,
}

impl DeformationSpec {
    /// The spec of the undeformed `β` potential on the given side.
    pub fn for_beta(params: &MetricParams, beta: f64, n: i64, x0: f64, eps: f64, side: Side) -> Self {
        Self {
            k: beta * params.cos_exp(),
            t: beta * params.sin_exp(),
            c: params.tau.powf(-beta),
            n,
            x0,
            eps,
            side,
        }
    }

    /// The exponent being deformed: `t` near 0, `k` near π/2.
    pub fn base_exponent(&self) -> f64 {
        match self.side {
            Side::NearZero => self.t,
            Side::NearPiOver2 => self.k,
        }
    }
}

/// `λ_x`: `N − t` on `[0, x/2]`, 0 on `[x, ∞)`, and the normalized log-sine
/// integral in between.
pub fn lambda_x(theta: f64, x: f64, n: f64, t: f64) -> f64 {
    if theta <= 0.5 * x {
        n - t
    } else if theta >= x {
        0.0
    } else {
        let total = log_sin_integral(0.5 * x, x);
        (n - t) * (1.0 - log_sin_integral(0.5 * x, theta) / total)
    }
}

/// Tabulated `λ_x` with its derivative, for dense evaluation.
#[derive(Debug, Clone)]
pub struct LambdaX {
    pub x: f64,
    pub amplitude: f64,
    table: LogSinTable,
}

impl LambdaX {
    pub fn new(x: f64, amplitude: f64) -> Self {
        Self { x, amplitude, table: LogSinTable::new(0.5 * x, x, TABLE_PANELS) }
    }

    pub fn total_integral(&self) -> f64 {
        self.table.total()
    }

    pub fn kinks(&self) -> [f64; 2] {
        [0.5 * self.x, self.x]
    }

    pub fn eval(&self, theta: f64) -> (f64, f64) {
        if theta <= 0.5 * self.x {
            (self.amplitude, 0.0)
        } else if theta >= self.x {
            (0.0, 0.0)
        } else {
            let total = self.table.total();
            let v = self.amplitude * (1.0 - self.table.integral_to_fast(theta) / total);
            let d = -self.amplitude / (total * theta.sin().ln());
            (v, d)
        }
    }
}

/// `λ_x` convolved with the bump kernel of radius `eps`.
#[derive(Debug, Clone)]
pub struct MollifiedRamp {
    pub ramp: LambdaX,
    pub eps: f64,
}

impl MollifiedRamp {
    pub fn new(x: f64, amplitude: f64, eps: f64) -> Self {
        Self { ramp: LambdaX::new(x, amplitude), eps }
    }

    pub fn eval(&self, y: f64) -> (f64, f64) {
        let x = self.ramp.x;
        if y <= 0.5 * x - self.eps {
            return (self.ramp.amplitude, 0.0);
        }
        if y >= x + self.eps {
            return (0.0, 0.0);
        }
        convolve_pair(&|t| self.ramp.eval(t), &self.ramp.kinks(), self.eps, y)
    }

    /// `σ^ε(y)`, defined by `λ_ε′(y) = −σ^ε(y) (N−t) / (I · ln sin y)` with
    /// `I = ∫_{x/2}^x dγ / ln sin γ`.
    pub fn sigma(&self, y: f64) -> f64 {
        let d = self.eval(y).1;
        -d * self.ramp.total_integral() * y.sin().ln() / self.ramp.amplitude
    }

    /// Largest `σ^ε` over `[x/2 − ε, x + ε]`.
    pub fn sigma_max(&self, samples: usize) -> f64 {
        let (a, b) = (0.5 * self.ramp.x - self.eps, self.ramp.x + self.eps);
        (0..=samples)
            .map(|i| self.sigma(a + (b - a) * i as f64 / samples as f64))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Squared comass of the one-sided deformed potential.
pub fn deformed_comass_sq(
    theta: f64,
    params: &MetricParams,
    spec: &DeformationSpec,
    lambda_val: f64,
    lambda_deriv: f64,
) -> f64 {
    let (p, q) = (params.cos_exp(), params.sin_exp());
    let (c, s) = (theta.cos(), theta.sin());
    let (ln_c, ln_s) = (c.ln(), s.ln());
    let (ck, st, g) = match spec.side {
        Side::NearZero => (
            spec.k,
            spec.t + lambda_val,
            lambda_deriv * ln_s + (spec.t + lambda_val) / theta.tan() - spec.k * theta.tan(),
        ),
        Side::NearPiOver2 => (
            spec.k + lambda_val,
            spec.t,
            lambda_deriv * ln_c + spec.t / theta.tan() - (spec.k + lambda_val) * theta.tan(),
        ),
    };
    let alpha = params.alpha_f64();
    let ln_pre = params.tau.ln() + 2.0 * spec.c.ln() + (2.0 * ck - p) * ln_c + (2.0 * st - q) * ln_s;
    ln_pre.exp() * (1.0 + (g / alpha).powi(2))
}

/// Squared comass with both ends deformed: `λ` on the sine exponent and `μ`
/// on the cosine exponent, each given as `(value, θ-derivative)`.
pub fn combined_comass_sq(
    theta: f64,
    params: &MetricParams,
    beta: f64,
    lambda: (f64, f64),
    mu: (f64, f64),
) -> f64 {
    let (p, q) = (params.cos_exp(), params.sin_exp());
    let (k, t) = (beta * p, beta * q);
    let (c, s) = (theta.cos(), theta.sin());
    let (ln_c, ln_s) = (c.ln(), s.ln());
    let g = lambda.1 * ln_s + mu.1 * ln_c + (t + lambda.0) / theta.tan()
        - (k + mu.0) * theta.tan();
    let alpha = params.alpha_f64();
    let ln_pre = (1.0 - 2.0 * beta) * params.tau.ln()
        + (2.0 * (k + mu.0) - p) * ln_c
        + (2.0 * (t + lambda.0) - q) * ln_s;
    ln_pre.exp() * (1.0 + (g / alpha).powi(2))
}

/// `(sin^ρ x / ∫_{x/2}^x dγ / ln sin γ)²` for each `x`.
pub fn vanishing_limit_check(rho: f64, xs: &[f64]) -> Vec<f64> {
    xs.iter()
        .map(|&x| (x.sin().powf(rho) / log_sin_integral(0.5 * x, x)).powi(2))
        .collect()
}

/// Whether `r` and `s` are even and at least 4, so the undeformed `β = 1`
/// potential already gives a form singular only at the origin.
pub fn ambient_parity_check(r: u32, s: u32) -> bool {
    r >= 4 && s >= 4 && r % 2 == 0 && s % 2 == 0
}

/// `N − e/2 − 1` is a positive even integer and `N > base`.
pub fn target_exponent_ok(n: i64, exponent: Rational64, base: f64) -> bool {
    let m = Rational64::from_integer(n) - exponent / 2 - 1;
    m.is_integer() && *m.numer() > 0 && m.numer() % 2 == 0 && n as f64 > base
}

/// Outcome summary of [`build_endpoint_deformation`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeformReport {
    pub beta: f64,
    pub n_left: i64,
    pub n_right: i64,
    pub x0: f64,
    pub eps: f64,
    pub attempts: usize,
    pub max_comass_sq: f64,
    /// `max_comass_sq − 1`; at most [`COMASS_SLACK`] on success.
    pub max_residual: f64,
    pub ambient_parity: bool,
    pub sigma_max_left: f64,
    pub sigma_max_right: f64,
    pub grid_points: usize,
    pub note: Option<String>,
}

/// Deformation exponents `λ` (sine side) and `μ` (cosine side) sampled on the
/// verification grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deformation {
    pub lambda: AngularProfile,
    pub mu: AngularProfile,
    pub comass_sq: Vec<f64>,
    pub report: DeformReport,
}

struct TwoSided {
    left: MollifiedRamp,
    right: MollifiedRamp,
}

impl TwoSided {
    fn lambda(&self, theta: f64) -> (f64, f64) {
        self.left.eval(theta)
    }

    fn mu(&self, theta: f64) -> (f64, f64) {
        let (v, d) = self.right.eval(FRAC_PI_2 - theta);
        (v, -d)
    }

    fn breakpoints(&self) -> [f64; 4] {
        let x = self.left.ramp.x;
        [0.5 * x, x, FRAC_PI_2 - 0.5 * x, FRAC_PI_2 - x]
    }
}

fn uniform_grid(n: usize) -> Vec<f64> {
    (1..=n).map(|i| FRAC_PI_2 * i as f64 / (n + 1) as f64).collect()
}

fn verification_points(def: &TwoSided) -> Vec<f64> {
    let eps = def.left.eps;
    let mut pts = uniform_grid(UNIFORM_GRID);
    for b in def.breakpoints() {
        for j in 0..CLUSTER_POINTS {
            let t = b - eps + 2.0 * eps * (j as f64 + 0.5) / CLUSTER_POINTS as f64;
            if 0.0 < t && t < FRAC_PI_2 {
                pts.push(t);
            }
        }
    }
    pts
}

/// Dense samples of the two transition windows only; outside them the
/// comass is the undeformed `ψ`.
fn window_points(def: &TwoSided) -> Vec<f64> {
    let (x, eps) = (def.left.ramp.x, def.left.eps);
    let (a, b) = (0.5 * x - eps, x + eps);
    let n = 4000;
    let mut pts = Vec::with_capacity(2 * n);
    for i in 0..n {
        let y = a + (b - a) * (i as f64 + 0.5) / n as f64;
        pts.push(y);
        pts.push(FRAC_PI_2 - y);
    }
    pts
}

fn max_comass(params: &MetricParams, beta: f64, def: &TwoSided, pts: &[f64]) -> f64 {
    pts.par_iter()
        .map(|&t| combined_comass_sq(t, params, beta, def.lambda(t), def.mu(t)))
        .reduce(|| f64::NEG_INFINITY, f64::max)
}

/// Build and verify the two-sided deformation for a row-1 cone.
///
/// Halves `x0` and `eps` together until the deformed comass is at most
/// `1 + COMASS_SLACK` on the uniform grid and on points clustered around the
/// four breakpoints.
pub fn build_endpoint_deformation(
    params: &MetricParams,
    beta: f64,
    n_left: i64,
    n_right: i64,
    x0: f64,
    eps: f64,
) -> Result<Deformation, DeformError> {
    let (r, s) = params.spheres().ok_or_else(|| {
        DeformError::Precondition(format!("{} is not a row-1 cone", params.label()))
    })?;
    let grid = uniform_grid(UNIFORM_GRID);
    let ambient_parity = ambient_parity_check(r, s);
    if beta == 1.0 && ambient_parity {
        let lambda = AngularProfile::constant(grid.clone(), 0.0);
        let mu = lambda.clone();
        let comass_sq: Vec<f64> = grid.par_iter().map(|&t| crate::comass::psi(t, params, 1.0)).collect();
        let max = comass_sq.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        return Ok(Deformation {
            lambda,
            mu,
            comass_sq,
            report: DeformReport {
                beta,
                n_left,
                n_right,
                x0,
                eps,
                attempts: 0,
                max_comass_sq: max,
                max_residual: max - 1.0,
                ambient_parity,
                sigma_max_left: 0.0,
                sigma_max_right: 0.0,
                grid_points: grid.len(),
                note: Some("even exponents need no deformation".into()),
            },
        });
    }
    if !(x0 > 0.0 && x0 < 0.5 && eps > 0.0 && eps < x0 / 5.0) {
        return Err(DeformError::Precondition(format!(
            "need 0 < x0 < 0.5 and 0 < eps < x0/5, got x0={x0}, eps={eps}"
        )));
    }
    let (p, q) = (params.cos_exp(), params.sin_exp());
    let (k, t) = (beta * p, beta * q);
    if !(2.0 * k - p > 2.0 && 2.0 * t - q > 2.0) {
        return Err(DeformError::Precondition(format!(
            "calibration margin fails: 2k-p = {}, 2t-q = {}",
            2.0 * k - p,
            2.0 * t - q
        )));
    }
    if !target_exponent_ok(n_left, params.q, t) {
        return Err(DeformError::Precondition(format!(
            "N_left = {n_left}: need N - q/2 - 1 a positive even integer and N > t = {t}"
        )));
    }
    if !target_exponent_ok(n_right, params.p, k) {
        return Err(DeformError::Precondition(format!(
            "N_right = {n_right}: need N - p/2 - 1 a positive even integer and N > k = {k}"
        )));
    }
    let v = certify(params, beta, DEFAULT_TOL)?;
    if v.verdict != Verdict::Global {
        return Err(DeformError::Precondition(format!(
            "beta = {beta} does not certify a global calibration for {}",
            params.label()
        )));
    }

    let (mut x, mut e) = (x0, eps);
    let mut last_max = f64::NAN;
    for attempt in 1..=MAX_SHRINKS {
        let def = TwoSided {
            left: MollifiedRamp::new(x, n_left as f64 - t, e),
            right: MollifiedRamp::new(x, n_right as f64 - k, e),
        };
        last_max = max_comass(params, beta, &def, &window_points(&def));
        let mut checked = 0;
        if last_max <= 1.0 + COMASS_SLACK {
            let pts = verification_points(&def);
            checked = pts.len();
            last_max = max_comass(params, beta, &def, &pts);
        }
        if last_max <= 1.0 + COMASS_SLACK {
            let lambda = AngularProfile::sample(grid.clone(), Smoothness::Smooth, |t| def.lambda(t));
            let mu = AngularProfile::sample(grid.clone(), Smoothness::Smooth, |t| def.mu(t));
            let comass_sq = grid
                .par_iter()
                .map(|&t| combined_comass_sq(t, params, beta, def.lambda(t), def.mu(t)))
                .collect();
            return Ok(Deformation {
                lambda,
                mu,
                comass_sq,
                report: DeformReport {
                    beta,
                    n_left,
                    n_right,
                    x0: x,
                    eps: e,
                    attempts: attempt,
                    max_comass_sq: last_max,
                    max_residual: last_max - 1.0,
                    ambient_parity,
                    sigma_max_left: def.left.sigma_max(2000),
                    sigma_max_right: def.right.sigma_max(2000),
                    grid_points: checked,
                    note: None,
                },
            });
        }
        x *= 0.5;
        e *= 0.5;
    }
    Err(DeformError::NoAdmissibleWindow { attempts: MAX_SHRINKS, last_max })
}

/// Default target exponents: the smallest admissible `N` on each side.
pub fn default_targets(params: &MetricParams, beta: f64) -> (i64, i64) {
    let pick = |e: Rational64, base: f64| {
        let mut n = (to_f64(e) / 2.0 + 1.0).ceil() as i64;
        while !target_exponent_ok(n, e, base) {
            n += 1;
        }
        n
    };
    (pick(params.q, beta * params.sin_exp()), pick(params.p, beta * params.cos_exp()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::row1;
    use crate::comass::psi;

    #[test]
    fn lambda_x_branches() {
        let (x, n, t) = (0.2, 9.0, 8.0);
        assert_eq!(lambda_x(x / 4.0, x, n, t), 1.0);
        assert_eq!(lambda_x(x, x, n, t), 0.0);
        let mut prev = 1.0;
        for i in 1..20 {
            let v = lambda_x(0.1 + 0.005 * i as f64, x, n, t);
            assert!(v < prev);
            prev = v;
        }
        let tab = LambdaX::new(x, 1.0);
        assert!((tab.eval(0.137).0 - lambda_x(0.137, x, n, t)).abs() < 1e-11);
        let h = 1e-6;
        let fd = (tab.eval(0.137 + h).0 - tab.eval(0.137 - h).0) / (2.0 * h);
        assert!((fd - tab.eval(0.137).1).abs() < 1e-6);
    }

    #[test]
    fn zero_deformation_is_psi() {
        let pr = row1(3, 5).unwrap();
        let spec = DeformationSpec::for_beta(&pr, 1.2, 11, 0.2, 0.02, Side::NearZero);
        for i in 1..50 {
            let th = 1.5 * i as f64 / 50.0;
            let a = deformed_comass_sq(th, &pr, &spec, 0.0, 0.0);
            let b = combined_comass_sq(th, &pr, 1.2, (0.0, 0.0), (0.0, 0.0));
            let c = psi(th, &pr, 1.2);
            assert!((a - c).abs() <= 1e-12 * c.max(1.0) && (b - c).abs() <= 1e-12 * c.max(1.0));
        }
        assert!((deformed_comass_sq(pr.theta0, &pr, &spec, 0.0, 0.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mollified_ramp_support() {
        let m = MollifiedRamp::new(0.2, 1.0, 0.02);
        assert_eq!(m.eval(0.08), (1.0, 0.0));
        assert_eq!(m.eval(0.22), (0.0, 0.0));
        let h = 1e-6;
        for i in 0..60 {
            let y = 0.08 + 0.0024 * i as f64;
            let fd = (m.eval(y + h).0 - m.eval(y - h).0) / (2.0 * h);
            assert!((fd - m.eval(y).1).abs() < 1e-4);
        }
    }

    #[test]
    fn parity() {
        assert!(ambient_parity_check(4, 4));
        assert!(!ambient_parity_check(3, 5));
        assert!(ambient_parity_check(4, 6));
        assert!(!ambient_parity_check(2, 6));
        let pr = row1(3, 5).unwrap();
        assert_eq!(default_targets(&pr, 1.0), (9, 5));
        assert_eq!(default_targets(&row1(2, 7).unwrap(), 1.2), (15, 4));
        assert!(!target_exponent_ok(10, pr.q, 8.0));
    }
}
