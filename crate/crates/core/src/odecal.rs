//! ODE constructions.
//!
//! Two pieces live here. The first is the exponent ODE for the `k = 4` cone
//! of row 3, where no power `φ^β` calibrates: the cosine exponent is made a
//! function `4 + λ(θ)` chosen so that the comass stays exactly one across the
//! second peak of `ψ`, and the solution is then glued smoothly to zero. The
//! second is the slope-field construction of a profile `Φ₀` that solves
//! `y² + (y′/α)² ≤ E` (the envelope `E = c^p s^q / τ`, or `s^q` for type I
//! rows), equals one at `θ₀` and vanishes near both ends of the domain.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::{params_for, MetricParams, Shape};
use crate::certify::{certify, certify_below, Verdict, DEFAULT_TOL};
use crate::comass::{phi, slope_factor};
use crate::error::OdeCalError;
use crate::profile::{convolve_pair, smooth_step, smooth_step_deriv, AngularProfile, Smoothness};
use crate::rk::{integrate, DenseSolution, RkOptions};

pub const LAMBDA1_START: f64 = 1.007;
/// Default right end of the exponent ODE. It runs past the zero near 1.21 so
/// that the zero is bracketed.
pub const LAMBDA1_END: f64 = 1.25;
/// Local tolerance of the exponent ODE. Errors made near the start, where
/// `1/E − 1` is of order `10⁻⁷`, are amplified about a millionfold by `θ₁`.
pub const ODE_TOL: f64 = 1e-13;
/// Largest tolerated negative value of `1/E − 1` before the ODE is declared
/// out of comass budget.
pub const BUDGET_FLOOR: f64 = -1e-12;
pub const GLUE_SLACK: f64 = 1e-6;
pub const GLUE_WIDTH: f64 = 0.01;
pub const GLUE_RETRIES: usize = 10;
pub const GLUE_BAND: (f64, f64) = (0.9, 1.3);
pub const PHI0_RESIDUAL_TOL: f64 = 1e-9;
pub const PHI0_GRID: usize = 100_000;
pub const PHI0_SAMPLES: usize = 4001;
const SEED_SAMPLES: usize = 40_001;
const CLUSTER_POINTS: usize = 1000;

const K4_P: f64 = 4.0;
const K4_Q: f64 = 10.0;
const K4_ALPHA: f64 = 7.5;

/// `1/τ = (14/4)² (14/10)⁵` for `p = 4`, `q = 10`.
fn k4_inv_tau() -> f64 {
    3.5f64.powi(2) * 1.4f64.powi(5)
}

/// Metric data of the row-3, `k = 4` cone.
pub fn k4_params() -> MetricParams {
    params_for(3, Shape::K { k: 4 }).expect("row 3 accepts k = 4")
}

fn k4_envelope(theta: f64, lambda: f64) -> f64 {
    k4_inv_tau() * ((K4_P + 2.0 * lambda) * theta.cos().ln() + K4_Q * theta.sin().ln()).exp()
}

/// Squared comass of `d(r^7.5 c^(4+λ) s^10)/(7.5 τ)`.
pub fn star_comass_sq(theta: f64, lambda: f64, dlambda: f64) -> f64 {
    let g = dlambda * theta.cos().ln() + K4_Q / theta.tan() - (K4_P + lambda) * theta.tan();
    k4_envelope(theta, lambda) * (1.0 + (g / K4_ALPHA).powi(2))
}

/// `1/E − 1`, the room left under the comass bound at `(θ, λ)`.
pub fn comass_budget(theta: f64, lambda: f64) -> f64 {
    1.0 / k4_envelope(theta, lambda) - 1.0
}

/// The largest slope `λ′` keeping the comass at most one; the exponent ODE
/// follows it.
pub fn lambda1_rhs(theta: f64, lambda: f64) -> f64 {
    let root = K4_ALPHA * comass_budget(theta, lambda).max(0.0).sqrt();
    (root + K4_Q / theta.tan() - (K4_P + lambda) * theta.tan()) / -theta.cos().ln()
}

/// Dense solution of the exponent ODE.
#[derive(Debug, Clone)]
pub struct OdeSolution {
    pub theta_start: f64,
    pub theta_end: f64,
    pub knots: Vec<f64>,
    pub values: Vec<f64>,
    pub derivs: Vec<f64>,
    pub steps: usize,
    pub rejected: usize,
    pub max_error: f64,
    pub tol: f64,
    /// Zeros of `λ` after the start, in increasing order.
    pub zeros: Vec<f64>,
    /// The last zero, where `λ` crosses back up to zero.
    pub theta1: Option<f64>,
    /// `(θ, λ)` at the maximum and minimum of the interpolant.
    pub peak: (f64, f64),
    pub trough: (f64, f64),
    pub min_budget: f64,
    dense: DenseSolution,
}

impl OdeSolution {
    /// `(λ, λ′)` with `λ′` taken from the right-hand side at the interpolated
    /// value, so the pair lies on the comass-one level set.
    pub fn eval(&self, theta: f64) -> (f64, f64) {
        let v = self.dense.eval(theta).0;
        (v, lambda1_rhs(theta, v))
    }

    /// Largest `|★ − 1|` over knots and knot midpoints.
    pub fn star_deviation(&self) -> f64 {
        let mids = self.knots.windows(2).map(|w| 0.5 * (w[0] + w[1]));
        self.knots
            .iter()
            .copied()
            .chain(mids)
            .map(|t| {
                let (v, d) = self.eval(t);
                (star_comass_sq(t, v, d) - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }
}

fn dense_zeros(sol: &DenseSolution, start: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 1..sol.t.len().saturating_sub(1) {
        let (a, b) = (sol.t[i], sol.t[i + 1]);
        let (ya, yb) = (sol.y[i], sol.y[i + 1]);
        if a <= start || ya == 0.0 || ya.signum() == yb.signum() {
            continue;
        }
        let (mut lo, mut hi) = (a, b);
        for _ in 0..200 {
            if hi - lo <= 1e-14 {
                break;
            }
            let m = 0.5 * (lo + hi);
            if sol.eval(m).0.signum() == ya.signum() {
                lo = m;
            } else {
                hi = m;
            }
        }
        out.push(0.5 * (lo + hi));
    }
    out
}

/// Extremum of `sign · y` on the dense interpolant: best knot, then golden
/// section on its two neighbouring steps.
fn extremum(sol: &DenseSolution, sign: f64) -> (f64, f64) {
    let n = sol.t.len();
    let i = (0..n).max_by(|&a, &b| (sign * sol.y[a]).total_cmp(&(sign * sol.y[b]))).expect("nonempty");
    let (mut a, mut b) = (sol.t[i.saturating_sub(1)], sol.t[(i + 1).min(n - 1)]);
    let f = |t: f64| sign * sol.eval(t).0;
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        if (b - a).abs() <= 1e-13 {
            break;
        }
        let (x1, x2) = (b - g * (b - a), a + g * (b - a));
        if f(x1) >= f(x2) {
            b = x2;
        } else {
            a = x1;
        }
    }
    let mut best = (sol.t[i], sol.y[i]);
    let m = 0.5 * (a + b);
    if f(m) > sign * best.1 {
        best = (m, sol.eval(m).0);
    }
    best
}

/// Solve the exponent ODE from `λ(start) = 0`.
pub fn solve_lambda1(start: f64, end: f64) -> Result<OdeSolution, OdeCalError> {
    solve_lambda1_with(start, end, ODE_TOL)
}

pub fn solve_lambda1_with(start: f64, end: f64, tol: f64) -> Result<OdeSolution, OdeCalError> {
    let theta0 = (K4_Q / K4_P).sqrt().atan();
    if !(theta0 < start && start < end && end < std::f64::consts::FRAC_PI_2) {
        return Err(OdeCalError::Precondition(format!(
            "need theta0 = {theta0:.6} < start < end < pi/2, got [{start}, {end}]"
        )));
    }
    let opts = RkOptions { max_step: (end - start) / 400.0, ..RkOptions::default().with_tol(tol) };
    let (dense, _) = integrate(lambda1_rhs, start, 0.0, end, opts, None)?;
    let mut min_budget = f64::INFINITY;
    for (&t, &y) in dense.t.iter().zip(&dense.y) {
        let b = comass_budget(t, y);
        if b < BUDGET_FLOOR {
            return Err(OdeCalError::BudgetExhausted { theta: t });
        }
        min_budget = min_budget.min(b);
    }
    let zeros = dense_zeros(&dense, start);
    Ok(OdeSolution {
        theta_start: start,
        theta_end: end,
        knots: dense.t.clone(),
        values: dense.y.clone(),
        derivs: dense.dy.clone(),
        steps: dense.steps,
        rejected: dense.rejected,
        max_error: dense.max_error,
        tol,
        theta1: zeros.last().copied(),
        zeros,
        peak: extremum(&dense, 1.0),
        trough: extremum(&dense, -1.0),
        min_budget,
        dense,
    })
}

/// Differences between a solution and a rerun at 1/32 of the tolerance and
/// half the step cap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalvingCheck {
    pub theta1_gap: f64,
    pub peak_gap: f64,
    pub trough_gap: f64,
    pub max_value_gap: f64,
}

impl HalvingCheck {
    pub fn max_gap(&self) -> f64 {
        self.theta1_gap.max(self.peak_gap).max(self.trough_gap).max(self.max_value_gap)
    }
}

pub fn step_halving_check(sol: &OdeSolution) -> Result<HalvingCheck, OdeCalError> {
    let (start, end) = (sol.theta_start, sol.theta_end);
    let opts = RkOptions {
        max_step: (end - start) / 800.0,
        ..RkOptions::default().with_tol(sol.tol / 32.0)
    };
    let (fine, _) = integrate(lambda1_rhs, start, 0.0, end, opts, None)?;
    let zeros = dense_zeros(&fine, start);
    let theta1_gap = match (sol.theta1, zeros.last()) {
        (Some(a), Some(b)) => (a - b).abs(),
        (None, None) => 0.0,
        _ => f64::INFINITY,
    };
    let fine_max = extremum(&fine, 1.0).1;
    let fine_min = extremum(&fine, -1.0).1;
    let n = 2000;
    let max_value_gap = (0..=n)
        .map(|i| {
            let t = start + (end - start) * i as f64 / n as f64;
            (sol.dense.eval(t).0 - fine.eval(t).0).abs()
        })
        .fold(0.0, f64::max);
    Ok(HalvingCheck {
        theta1_gap,
        peak_gap: (sol.peak.1 - fine_max).abs(),
        trough_gap: (sol.trough.1 - fine_min).abs(),
        max_value_gap,
    })
}

/// A smooth exponent profile that is zero outside a compact window and keeps
/// the comass of the deformed potential at most one.
#[derive(Debug, Clone)]
pub struct GluedLambda {
    start: f64,
    width: f64,
    left: DenseSolution,
    right: DenseSolution,
    z: f64,
    lambda_inf: f64,
    pub report: GlueReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlueReport {
    pub left_window: (f64, f64),
    pub right_window: (f64, f64),
    pub width: f64,
    pub attempts: usize,
    /// Support of `λ`.
    pub support: (f64, f64),
    /// Max of the deformed comass on the verification band.
    pub max_comass_sq: f64,
    pub max_location: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Value frozen at the right window before the final ramp to zero.
    pub lambda_frozen: f64,
    /// `ψ ≤ 1` proved by enclosure outside the band.
    pub outer_certified: bool,
    pub grid_points: usize,
}

impl GluedLambda {
    /// `(λ, λ′)` at `θ`.
    pub fn eval(&self, theta: f64) -> (f64, f64) {
        let w = self.width;
        if theta <= self.start || theta >= self.z + w {
            (0.0, 0.0)
        } else if theta <= self.z - w {
            let v = self.left.eval(theta).0;
            (v, left_rhs(self.start, w, theta, v))
        } else if theta <= self.z {
            let v = self.right.eval(theta).0;
            (v, right_rhs(self.z, w, theta, v))
        } else {
            let u = (theta - self.z) / w;
            (
                self.lambda_inf * (1.0 - smooth_step(u)),
                -self.lambda_inf * smooth_step_deriv(u) / w,
            )
        }
    }

    pub fn comass_sq(&self, theta: f64) -> f64 {
        let (v, d) = self.eval(theta);
        star_comass_sq(theta, v, d)
    }

    pub fn sample(&self, thetas: Vec<f64>) -> AngularProfile {
        AngularProfile::sample(thetas, Smoothness::Smooth, |t| self.eval(t))
    }
}

fn left_rhs(start: f64, w: f64, theta: f64, lambda: f64) -> f64 {
    smooth_step((theta - start) / w) * lambda1_rhs(theta, lambda)
}

fn right_rhs(z: f64, w: f64, theta: f64, lambda: f64) -> f64 {
    (1.0 - smooth_step((theta - (z - w)) / w)) * lambda1_rhs(theta, lambda)
}

fn glue_once(sol: &OdeSolution, w: f64) -> Result<Option<GluedLambda>, OdeCalError> {
    let start = sol.theta_start;
    let end = sol.theta_end;
    let opts = RkOptions { max_step: w / 20.0, ..RkOptions::default().with_tol(ODE_TOL) };
    let (left, _) = integrate(|t, y| left_rhs(start, w, t, y), start, 0.0, end, opts, None)?;
    let Some(&z) = dense_zeros(&left, start + w).last() else {
        return Ok(None);
    };
    if left.eval(z - 1e-9).0 >= 0.0 || z - w <= start + w {
        return Ok(None);
    }
    let y_in = left.eval(z - w).0;
    let (right, _) = integrate(|t, y| right_rhs(z, w, t, y), z - w, y_in, z, opts, None)?;
    let lambda_inf = *right.y.last().expect("nonempty");
    Ok(Some(GluedLambda {
        start,
        width: w,
        left,
        right,
        z,
        lambda_inf,
        report: GlueReport {
            left_window: (start, start + w),
            right_window: (z - w, z + w),
            width: w,
            attempts: 0,
            support: (start, z + w),
            max_comass_sq: f64::NAN,
            max_location: f64::NAN,
            lambda_min: 0.0,
            lambda_max: 0.0,
            lambda_frozen: lambda_inf,
            outer_certified: false,
            grid_points: 0,
        },
    }))
}

fn band_grid(lo: f64, hi: f64, breaks: &[f64], halo: f64) -> Vec<f64> {
    let mut pts: Vec<f64> =
        (1..crate::deform::UNIFORM_GRID).map(|i| lo + (hi - lo) * i as f64 / crate::deform::UNIFORM_GRID as f64).collect();
    for &b in breaks {
        for j in 0..CLUSTER_POINTS {
            let t = b - halo + 2.0 * halo * (j as f64 + 0.5) / CLUSTER_POINTS as f64;
            if lo < t && t < hi {
                pts.push(t);
            }
        }
    }
    pts
}

/// Glue `0` to the max-slope integral curve at the left window and back to
/// `0` at the right window, shrinking the windows until the deformed comass
/// is at most `1 + GLUE_SLACK` on the band and `ψ ≤ 1` is proved outside it.
pub fn glue_lambda1(sol: &OdeSolution, left_window: f64, right_window: f64) -> Result<GluedLambda, OdeCalError> {
    glue_lambda1_with(sol, left_window, right_window, GLUE_SLACK)
}

/// [`glue_lambda1`] with an explicit slack on the deformed comass.
pub fn glue_lambda1_with(
    sol: &OdeSolution,
    left_window: f64,
    right_window: f64,
    slack: f64,
) -> Result<GluedLambda, OdeCalError> {
    if !(left_window > 0.0 && right_window > 0.0) {
        return Err(OdeCalError::Precondition("glue windows must have positive width".into()));
    }
    let params = k4_params();
    let (band_lo, band_hi) = GLUE_BAND;
    let outer = certify_below(&params, 1.0, (0.0, band_lo), 1.0)?
        && certify_below(&params, 1.0, (band_hi, params.domain_end()), 1.0)?;
    let mut w = left_window.min(right_window);
    let mut last_max = f64::NAN;
    for attempt in 1..=GLUE_RETRIES {
        if let Some(mut g) = glue_once(sol, w)? {
            let r = &g.report;
            let breaks = [r.left_window.0, r.left_window.1, r.right_window.0, g.z, r.right_window.1];
            let pts = band_grid(band_lo, band_hi, &breaks, w);
            let vals: Vec<(f64, f64, f64)> = pts
                .par_iter()
                .map(|&t| {
                    let (v, d) = g.eval(t);
                    (t, v, star_comass_sq(t, v, d))
                })
                .collect();
            let (mut max, mut at) = (f64::NEG_INFINITY, f64::NAN);
            let (mut lmin, mut lmax) = (0.0f64, 0.0f64);
            for &(t, v, c) in &vals {
                if c > max {
                    max = c;
                    at = t;
                }
                lmin = lmin.min(v);
                lmax = lmax.max(v);
            }
            last_max = max;
            if max <= 1.0 + slack && outer && g.report.support.1 < band_hi {
                g.report.attempts = attempt;
                g.report.max_comass_sq = max;
                g.report.max_location = at;
                g.report.lambda_min = lmin;
                g.report.lambda_max = lmax;
                g.report.outer_certified = outer;
                g.report.grid_points = pts.len();
                return Ok(g);
            }
        }
        w *= 0.5;
    }
    Err(OdeCalError::GlueInfeasible { attempts: GLUE_RETRIES, max_comass: last_max })
}

/// Right-hand side of the calibration inequality: `c^p s^q / τ` (type II)
/// or `s^q` (type I).
pub fn envelope(theta: f64, params: &MetricParams) -> f64 {
    let end = params.domain_end();
    if theta <= 0.0 || theta >= end {
        return 0.0;
    }
    phi(theta, params)
}

/// Slope `α √(E − y²)` of the extremal integral curve through `(θ, y)`.
pub fn gamma_slope(params: &MetricParams, theta: f64, y: f64) -> f64 {
    params.alpha_f64() * (envelope(theta, params) - y * y).max(0.0).sqrt()
}

/// `|α √(E − y²)|` strictly decreases in `y` for every `θ` of the grid, with
/// `y = f √E` for each fraction `f ∈ [0, 1)` (taken in increasing order).
pub fn slope_field_monotonicity_check(params: &MetricParams, thetas: &[f64], fractions: &[f64]) -> bool {
    let mut fr = fractions.to_vec();
    fr.sort_by(f64::total_cmp);
    thetas.iter().all(|&t| {
        let root = envelope(t, params).sqrt();
        let slopes: Vec<f64> = fr.iter().map(|f| gamma_slope(params, t, f * root)).collect();
        slopes.windows(2).all(|w| w[1] < w[0])
    })
}

/// `Φ = φ^β` with its exact derivative, sampled uniformly on the closed
/// domain.
pub fn power_seed(params: &MetricParams, beta: f64, samples: usize) -> AngularProfile {
    let end = params.domain_end();
    let thetas = (0..samples).map(|i| end * i as f64 / (samples - 1) as f64).collect();
    AngularProfile::sample(thetas, Smoothness::Smooth, |t| {
        if t <= 0.0 || t >= end {
            return (0.0, 0.0);
        }
        let v = phi(t, params).powf(beta);
        (v, beta * v * slope_factor(t, params))
    })
}

/// The first `β ∈ {1, 1.05, …, 2}` with a global verdict.
pub fn find_seed_beta(params: &MetricParams) -> Result<f64, OdeCalError> {
    for i in 0..=20 {
        let beta = (20 + i) as f64 / 20.0;
        if certify(params, beta, DEFAULT_TOL)?.verdict == Verdict::Global {
            return Ok(beta);
        }
    }
    Err(OdeCalError::NoSeed(params.label()))
}

pub fn default_seed(params: &MetricParams) -> Result<(f64, AngularProfile), OdeCalError> {
    let beta = find_seed_beta(params)?;
    Ok((beta, power_seed(params, beta, SEED_SAMPLES)))
}

/// At `points` seed points on each side of `θ₀`, the ascending extremal curve
/// is at least as steep as the seed on the left and the descending one at
/// most as steep on the right.
pub fn extremal_slope_check(params: &MetricParams, seed: &AngularProfile, points: usize) -> bool {
    let (t0, end) = (params.theta0, params.domain_end());
    (1..=points).all(|i| {
        let f = i as f64 / (points + 1) as f64;
        let (tl, tr) = (t0 * f, t0 + (end - t0) * f);
        let (yl, dl) = seed.eval(tl);
        let (yr, dr) = seed.eval(tr);
        let slack = |d: f64| 1e-12 * d.abs().max(1.0);
        gamma_slope(params, tl, yl) + slack(dl) >= dl && -gamma_slope(params, tr, yr) - slack(dr) <= dr
    })
}

/// `Φ₀` as built by [`build_phi0`], with its verification record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phi0Profile {
    pub profile: AngularProfile,
    /// `Φ₀` vanishes outside `[support.0, support.1]`.
    pub support: (f64, f64),
    /// Corners of the unsmoothed splice: the two zeros and the two points
    /// where the extremal curves leave the seed.
    pub glue_points: [f64; 4],
    pub eps: f64,
    /// Slope factors of the two extremal curves.
    pub kappa: (f64, f64),
    pub theta0: f64,
    pub value_at_theta0: f64,
    pub residual_max: f64,
    pub residual_argmax: f64,
    /// Largest `Φ₀ − √E` and smallest `Φ₀` on the grid.
    pub envelope_excess: f64,
    pub min_value: f64,
    pub grid_points: usize,
    pub eps_halvings: usize,
    pub curve_retries: usize,
}

impl Phi0Profile {
    /// `Φ₀² + (Φ₀′/α)² − E` at the stored samples.
    pub fn residuals(&self, params: &MetricParams) -> Vec<f64> {
        let a = params.alpha_f64();
        self.profile
            .theta
            .iter()
            .zip(self.profile.value.iter().zip(&self.profile.derivative))
            .map(|(&t, (&y, &d))| y * y + (d / a).powi(2) - envelope(t, params))
            .collect()
    }
}

struct Splice<'a> {
    params: &'a MetricParams,
    seed: &'a AngularProfile,
    alpha: f64,
    kinks: [f64; 4],
    kappa: (f64, f64),
    g1: DenseSolution,
    g2: DenseSolution,
}

impl Splice<'_> {
    fn piecewise(&self, t: f64) -> (f64, f64) {
        let [a, c, d, b] = self.kinks;
        let slope = |k: f64, y: f64| k * self.alpha * (envelope(t, self.params) - y * y).max(0.0).sqrt();
        if t <= a || t >= b {
            (0.0, 0.0)
        } else if t < c {
            let y = self.g1.eval(t).0.max(0.0);
            (y, slope(self.kappa.0, y))
        } else if t <= d {
            self.seed.eval(t)
        } else {
            let y = self.g2.eval(t).0.max(0.0);
            (y, -slope(self.kappa.1, y))
        }
    }

    fn smoothed(&self, t: f64, eps: f64) -> (f64, f64) {
        let pw = self.piecewise(t);
        let Some(&k) = self.kinks.iter().find(|&&k| (t - k).abs() < 4.0 * eps) else {
            return pw;
        };
        let u = ((t - k).abs() - 2.0 * eps) / (2.0 * eps);
        let chi = 1.0 - smooth_step(u);
        let dchi = -smooth_step_deriv(u) * (t - k).signum() / (2.0 * eps);
        let (m, dm) = convolve_pair(&|s| self.piecewise(s), &[k], eps, t);
        (pw.0 + chi * (m - pw.0), pw.1 + dchi * (m - pw.0) + chi * (dm - pw.1))
    }
}

fn max_kappa_sq(params: &MetricParams, seed: &AngularProfile, lo: f64, hi: f64) -> f64 {
    let a = params.alpha_f64();
    seed.theta
        .iter()
        .zip(seed.value.iter().zip(&seed.derivative))
        .filter(|(&t, _)| lo < t && t < hi)
        .map(|(&t, (&y, &d))| {
            let room = envelope(t, params) - y * y;
            if room > 0.0 {
                (d / a).powi(2) / room
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max)
}

fn extremal_curve(
    params: &MetricParams,
    kappa: f64,
    from: f64,
    y0: f64,
    to: f64,
) -> Result<Option<(DenseSolution, f64)>, OdeCalError> {
    let alpha = params.alpha_f64();
    let sign = if to < from { 1.0 } else { -1.0 };
    let rhs = |t: f64, y: f64| sign * kappa * alpha * (envelope(t, params) - y * y).max(0.0).sqrt();
    let ev = |_t: f64, y: f64| y;
    let opts = RkOptions { max_step: (to - from).abs() / 200.0, ..RkOptions::default().with_tol(1e-12) };
    let (sol, hit) = integrate(rhs, from, y0, to, opts, Some(&ev))?;
    Ok(hit.map(|h| (sol, h.t)))
}

/// Splice `0 | Γ₁ | seed | Γ₂ | 0` and smooth the four corners.
///
/// `Γ₁` ascends with slope `κ₁ α √(E − y²)` and is traced backward from
/// `θ_c < θ₀` until it reaches zero; `Γ₂` descends from `θ_d > θ₀`. Each
/// `κ² = (1 + max κ_Φ²)/2` over its side, where `κ_Φ² = (Φ′/α)² / (E − Φ²)`
/// is the slope fraction the seed itself uses, so the curves are steeper
/// than the seed yet keep the strict inequality needed to absorb the
/// mollification.
pub fn build_phi0(params: &MetricParams, seed: &AngularProfile) -> Result<Phi0Profile, OdeCalError> {
    let (t0, end) = (params.theta0, params.domain_end());
    let alpha = params.alpha_f64();
    let (v0, _) = seed.eval(t0);
    if (v0 - 1.0).abs() > 1e-10 {
        return Err(OdeCalError::Precondition(format!("seed value at theta0 is {v0}, expected 1")));
    }
    let mut frac = 0.5;
    let mut splice = None;
    let mut retries = 0;
    for retry in 0..=10 {
        let (c, d) = (t0 * (1.0 - frac), t0 + (end - t0) * frac);
        let k1 = max_kappa_sq(params, seed, 0.0, c);
        let k2 = max_kappa_sq(params, seed, d, end);
        if k1 >= 1.0 || k2 >= 1.0 {
            return Err(OdeCalError::Precondition(format!(
                "seed saturates the inequality away from theta0 (kappa^2 = {k1}, {k2})"
            )));
        }
        let kappa = (((1.0 + k1) / 2.0).sqrt(), ((1.0 + k2) / 2.0).sqrt());
        let left = extremal_curve(params, kappa.0, c, seed.eval(c).0, 0.0)?;
        let right = extremal_curve(params, kappa.1, d, seed.eval(d).0, end)?;
        if let (Some((g1, a)), Some((g2, b))) = (left, right) {
            if a > 0.0 && b < end {
                splice = Some(Splice { params, seed, alpha, kinks: [a, c, d, b], kappa, g1, g2 });
                retries = retry;
                break;
            }
        }
        frac *= 0.5;
    }
    let splice = splice.ok_or(OdeCalError::CurveDidNotClose { attempts: 10 })?;
    let [a, c, d, b] = splice.kinks;
    let gap = [a, c - a, d - c, b - d, end - b].into_iter().fold(f64::INFINITY, f64::min);
    let mut eps = (gap / 10.0).min(1e-2);
    let mut last = f64::NAN;
    for halvings in 0..30 {
        let grid = phi0_grid(end, &splice.kinks, eps);
        let evals: Vec<(f64, f64, f64)> = grid
            .par_iter()
            .map(|&t| {
                let (y, dy) = splice.smoothed(t, eps);
                (t, y, dy)
            })
            .collect();
        let support = (a - eps, b + eps);
        let mut stats = GridStats::default();
        for &(t, y, dy) in &evals {
            stats.push(params, alpha, t, y, dy, support);
        }
        last = stats.residual_max;
        if stats.residual_max <= PHI0_RESIDUAL_TOL && stats.min_value >= 0.0 && stats.zero_ok {
            let thetas: Vec<f64> = (0..PHI0_SAMPLES).map(|i| end * i as f64 / (PHI0_SAMPLES - 1) as f64).collect();
            let profile = AngularProfile::sample(thetas, Smoothness::Smooth, |t| splice.smoothed(t, eps));
            return Ok(Phi0Profile {
                profile,
                support,
                glue_points: splice.kinks,
                eps,
                kappa: splice.kappa,
                theta0: t0,
                value_at_theta0: splice.smoothed(t0, eps).0,
                residual_max: stats.residual_max,
                residual_argmax: stats.residual_argmax,
                envelope_excess: stats.excess,
                min_value: stats.min_value,
                grid_points: grid.len(),
                eps_halvings: halvings,
                curve_retries: retries,
            });
        }
        eps *= 0.5;
    }
    Err(OdeCalError::Precondition(format!(
        "corner smoothing never met the residual tolerance (last max residual {last:e})"
    )))
}

fn phi0_grid(end: f64, kinks: &[f64; 4], eps: f64) -> Vec<f64> {
    let mut pts: Vec<f64> = (1..PHI0_GRID).map(|i| end * i as f64 / PHI0_GRID as f64).collect();
    for &k in kinks {
        for j in 0..CLUSTER_POINTS {
            pts.push(k - 4.0 * eps + 8.0 * eps * (j as f64 + 0.5) / CLUSTER_POINTS as f64);
        }
    }
    pts
}

struct GridStats {
    residual_max: f64,
    residual_argmax: f64,
    excess: f64,
    min_value: f64,
    zero_ok: bool,
}

impl Default for GridStats {
    fn default() -> Self {
        Self {
            residual_max: f64::NEG_INFINITY,
            residual_argmax: f64::NAN,
            excess: f64::NEG_INFINITY,
            min_value: f64::INFINITY,
            zero_ok: true,
        }
    }
}

impl GridStats {
    fn push(&mut self, params: &MetricParams, alpha: f64, t: f64, y: f64, dy: f64, support: (f64, f64)) {
        let e = envelope(t, params);
        let r = y * y + (dy / alpha).powi(2) - e;
        if r > self.residual_max {
            self.residual_max = r;
            self.residual_argmax = t;
        }
        self.excess = self.excess.max(y - e.sqrt());
        self.min_value = self.min_value.min(y);
        if (t < support.0 || t > support.1) && (y != 0.0 || dy != 0.0) {
            self.zero_ok = false;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::row1;
    use crate::comass::psi;

    #[test]
    fn star_normalization() {
        let p = k4_params();
        assert!((k4_inv_tau() * p.tau - 1.0).abs() < 1e-14);
        assert!((star_comass_sq(p.theta0, 0.0, 0.0) - 1.0).abs() < 1e-13);
        for t in [0.3, 0.8, 1.1, 1.4] {
            assert!((star_comass_sq(t, 0.0, 0.0) - psi(t, &p, 1.0)).abs() < 1e-13);
        }
    }

    #[test]
    fn rhs_sits_on_level_set() {
        for t in [1.01, 1.1, 1.2] {
            for l in [-0.003, 0.0, 0.002] {
                if comass_budget(t, l) > 0.0 {
                    assert!((star_comass_sq(t, l, lambda1_rhs(t, l)) - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn rejects_start_left_of_theta0() {
        assert!(matches!(solve_lambda1(1.0, 1.2), Err(OdeCalError::Precondition(_))));
    }

    #[test]
    fn envelope_values() {
        let p = row1(3, 5).unwrap();
        assert!((envelope(p.theta0, &p) - 1.0).abs() < 1e-14);
        assert_eq!(envelope(0.0, &p), 0.0);
        assert_eq!(envelope(std::f64::consts::FRAC_PI_2, &p), 0.0);
        let r9 = params_for(9, Shape::Fixed).unwrap();
        assert!((envelope(std::f64::consts::FRAC_PI_2, &r9) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn slope_field_monotone() {
        let p = row1(3, 5).unwrap();
        let thetas: Vec<f64> = (1..50).map(|i| i as f64 * 0.03).collect();
        let fr: Vec<f64> = (0..5).map(|i| 0.2 * i as f64).collect();
        assert!(slope_field_monotonicity_check(&p, &thetas, &fr));
        let t = 0.7;
        assert_eq!(gamma_slope(&p, t, envelope(t, &p).sqrt()), 0.0);
    }
}
