//! Pointwise comass of the trial potential `f = r^α φ^β` and the analytic
//! positivity tests for `η_β`.
//!
//! With `φ = c^p s^q / τ` the squared comass of `df` in the stretched orbit
//! metric is
//!
//! ```text
//! ψ = φ^(2β−1) [1 + (β/α)² (q cot θ − p tan θ)²]
//! ```
//!
//! and `ψ′ = φ^(2β−1) (q cot θ − p tan θ) η_β`. Type I rows use the envelope
//! `s^q` with `τ = 1`, which amounts to dropping every `p`-term.

use num_rational::Rational64;
use num_traits::Signed;
use serde::{Deserialize, Serialize};

use crate::catalog::{to_f64, MetricParams};
use crate::interval::Interval;

/// Tolerance for deciding that `q(2β−1) = 2` (or the `p` analogue).
const BORDERLINE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComassPoint {
    pub theta: f64,
    pub psi: f64,
    pub eta: f64,
    pub phi: f64,
}

/// Which end of the angular domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Endpoint {
    Start,
    End,
}

/// Limit of `ψ` at an endpoint of the domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum EndpointLimit {
    Zero,
    Finite(f64),
    Divergent,
}

impl EndpointLimit {
    pub fn value(self) -> f64 {
        match self {
            EndpointLimit::Zero => 0.0,
            EndpointLimit::Finite(v) => v,
            EndpointLimit::Divergent => f64::INFINITY,
        }
    }

    pub fn is_divergent(self) -> bool {
        matches!(self, EndpointLimit::Divergent)
    }
}

fn ln_envelope(theta: f64, params: &MetricParams) -> f64 {
    let (p, q) = (params.cos_exp(), params.sin_exp());
    let ln_s = theta.sin().ln();
    if params.is_type_one() {
        q * ln_s
    } else {
        p * theta.cos().ln() + q * ln_s - params.tau.ln()
    }
}

/// `q cot θ − p tan θ` (type I: `q cot θ`).
pub fn slope_factor(theta: f64, params: &MetricParams) -> f64 {
    let (p, q) = (params.cos_exp(), params.sin_exp());
    q / theta.tan() - p * theta.tan()
}

/// `φ = c^p s^q / τ` on the open domain (`s^q` for type I rows).
pub fn phi(theta: f64, params: &MetricParams) -> f64 {
    ln_envelope(theta, params).exp()
}

/// Limit of `ψ` at the given endpoint.
pub fn endpoint_limit(params: &MetricParams, beta: f64, end: Endpoint) -> EndpointLimit {
    let exponent = match (end, params.is_type_one()) {
        (Endpoint::Start, _) | (Endpoint::End, true) => params.sin_exp(),
        (Endpoint::End, false) => params.cos_exp(),
    };
    let m = exponent * (2.0 * beta - 1.0);
    if (m - 2.0).abs() <= BORDERLINE_EPS {
        let ratio = beta * exponent / params.alpha_f64();
        EndpointLimit::Finite(ratio * ratio * params.tau.powf(1.0 - 2.0 * beta))
    } else if m > 2.0 {
        EndpointLimit::Zero
    } else {
        EndpointLimit::Divergent
    }
}

/// Squared comass of `d(r^α φ^β)`. At the exact endpoints the analytic limit
/// is returned, with `+∞` standing for divergence.
pub fn psi(theta: f64, params: &MetricParams, beta: f64) -> f64 {
    let end = params.domain_end();
    if theta <= 0.0 {
        return endpoint_limit(params, beta, Endpoint::Start).value();
    }
    if theta >= end {
        return endpoint_limit(params, beta, Endpoint::End).value();
    }
    let k = beta / params.alpha_f64();
    let g = slope_factor(theta, params);
    ((2.0 * beta - 1.0) * ln_envelope(theta, params)).exp() * (1.0 + k * k * g * g)
}

/// `η_β`, the factor of `ψ′` that decides its sign.
pub fn eta(theta: f64, params: &MetricParams, beta: f64) -> f64 {
    let (p, q) = (params.cos_exp(), params.sin_exp());
    let b = 2.0 * beta - 1.0;
    let k = (beta / params.alpha_f64()).powi(2);
    let t2 = theta.tan().powi(2);
    let mut out = b - 2.0 * k * (b * p * q + p + q) + k * (b * q * q - 2.0 * q) / t2;
    if p != 0.0 {
        out += k * (b * p * p - 2.0 * p) * t2;
    }
    out
}

/// `ψ′ = φ^(2β−1) (q cot θ − p tan θ) η_β` on the open domain.
pub fn psi_prime(theta: f64, params: &MetricParams, beta: f64) -> f64 {
    ((2.0 * beta - 1.0) * ln_envelope(theta, params)).exp()
        * slope_factor(theta, params)
        * eta(theta, params, beta)
}

pub fn comass_point(theta: f64, params: &MetricParams, beta: f64) -> ComassPoint {
    ComassPoint {
        theta,
        psi: psi(theta, params, beta),
        eta: eta(theta, params, beta),
        phi: phi(theta, params),
    }
}

/// Exact coefficients for `β = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactQuadratic {
    pub a: Rational64,
    pub b: Rational64,
    pub c: Rational64,
    pub discriminant: Rational64,
}

/// `4α² tan²θ · η_β` written as `A Y² + B Y + C` in `Y = tan²θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticTest {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub discriminant: f64,
    pub exact: Option<ExactQuadratic>,
}

impl QuadraticTest {
    /// `A > 0`, `C > 0` and `Δ < 0`: the quadratic, hence `η_β`, is positive
    /// for every `Y > 0`. For type I rows `A = 0` and the test reduces to
    /// `B ≥ 0, C > 0` (a linear function positive on `Y > 0`).
    pub fn proves_positive(&self, type_one: bool) -> bool {
        match (self.exact, type_one) {
            (Some(e), false) => {
                e.a.is_positive() && e.c.is_positive() && e.discriminant.is_negative()
            }
            (Some(e), true) => !e.b.is_negative() && e.c.is_positive(),
            (None, false) => self.a > 0.0 && self.c > 0.0 && self.discriminant < 0.0,
            (None, true) => self.b >= 0.0 && self.c > 0.0,
        }
    }
}

/// Coefficients of the quadratic in `Y = tan²θ` whose sign is that of `η_β`.
/// For `β = 1` the arithmetic is exact.
pub fn quadratic_test(params: &MetricParams, beta: f64) -> QuadraticTest {
    let p = params.cos_exp_exact();
    let q = params.q;
    if beta == 1.0 {
        let four = Rational64::from_integer(4);
        let two = Rational64::from_integer(2);
        let a = four * (p * p - two * p);
        let b = four * params.alpha * params.alpha - Rational64::from_integer(8) * (p + q + p * q);
        let c = four * (q * q - two * q);
        let discriminant = b * b - four * a * c;
        return QuadraticTest {
            a: to_f64(a),
            b: to_f64(b),
            c: to_f64(c),
            discriminant: to_f64(discriminant),
            exact: Some(ExactQuadratic { a, b, c, discriminant }),
        };
    }
    let (p, q, alpha) = (to_f64(p), to_f64(q), params.alpha_f64());
    let m = 2.0 * beta - 1.0;
    let bb = 4.0 * beta * beta;
    let a = bb * (m * p * p - 2.0 * p);
    let b = 4.0 * alpha * alpha * m - 2.0 * bb * (m * p * q + p + q);
    let c = bb * (m * q * q - 2.0 * q);
    QuadraticTest { a, b, c, discriminant: b * b - 4.0 * a * c, exact: None }
}

/// `(Σ−2)(Σ−18)` with `Σ = p + q`, a lower bound for `4α²η₁` on row 1.
/// `None` for other rows.
pub fn sigma_bound(params: &MetricParams) -> Option<f64> {
    params.spheres()?;
    let sigma = to_f64(params.p + params.q);
    Some((sigma - 2.0) * (sigma - 18.0))
}

/// Exact companion of [`sigma_bound`].
pub fn sigma_bound_exact(params: &MetricParams) -> Option<Rational64> {
    params.spheres()?;
    let sigma = params.p + params.q;
    Some((sigma - Rational64::from_integer(2)) * (sigma - Rational64::from_integer(18)))
}

/// Rigorous enclosures of `ψ` and `ψ′` over angle boxes.
///
/// Works with the product form
///
/// ```text
/// ψ = τ^(1−2β) [(c²)^(P/2)(s²)^(Q/2) + (β/α)² (c²)^((P−2)/2)(s²)^((Q−2)/2) h²]
/// ```
///
/// where `P = p(2β−1)`, `Q = q(2β−1)` and `h = (p+q)c² − p = sc(q cot − p tan)`,
/// which stays valid up to the endpoints.
#[derive(Debug, Clone)]
pub struct PsiEnclosure {
    type_one: bool,
    p: f64,
    q: f64,
    tau_pow: Interval,
    k: Interval,
    half_p: Interval,
    half_q: Interval,
    half_p_m2: Interval,
    half_q_m2: Interval,
    half_p_m1: Interval,
    half_q_m1: Interval,
    eta0: Interval,
    eta_cot: Interval,
    eta_tan: Interval,
}

impl PsiEnclosure {
    pub fn new(params: &MetricParams, beta: f64) -> Self {
        let (p, q) = (params.cos_exp(), params.sin_exp());
        let type_one = params.is_type_one();
        let m = Interval::point(beta).scale(2.0) + (-1.0);
        let big_p = m.scale(p);
        let big_q = m.scale(q);
        let k = (Interval::point(beta) * Interval::around(1.0 / params.alpha_f64())).sqr();
        let tau_pow = if type_one {
            Interval::point(1.0)
        } else {
            let sum = p + q;
            let ln_tau = Interval::around(p / sum).ln().scale(0.5 * p)
                + Interval::around(q / sum).ln().scale(0.5 * q);
            (ln_tau * -m).exp()
        };
        let eta0 = m - k.scale(2.0) * (m.scale(p * q) + (p + q));
        let eta_cot = k * (m.scale(q * q) + (-2.0 * q));
        let eta_tan = k * (m.scale(p * p) + (-2.0 * p));
        Self {
            type_one,
            p,
            q,
            tau_pow,
            k,
            half_p: big_p.scale(0.5),
            half_q: big_q.scale(0.5),
            half_p_m2: (big_p + (-2.0)).scale(0.5),
            half_q_m2: (big_q + (-2.0)).scale(0.5),
            half_p_m1: (big_p + (-1.0)).scale(0.5),
            half_q_m1: (big_q + (-1.0)).scale(0.5),
            eta0,
            eta_cot,
            eta_tan,
        }
    }

    /// Enclosure of `ψ` over the angle box `theta` (natural interval form).
    pub fn psi_natural(&self, theta: Interval) -> Interval {
        let s2 = theta.sin_on_half_turn().sqr();
        let c = theta.cos_on_half_turn();
        let c2 = c.sqr();
        if self.type_one {
            let t1 = s2.pow_iv(self.half_q);
            let t2 = self.k.scale(self.q * self.q) * c2 * s2.pow_iv(self.half_q_m2);
            return (t1 + t2).clamp_nonneg();
        }
        let c2 = c2.clamp_unit();
        let h = c2.scale(self.p + self.q) + (-self.p);
        let t1 = c2.pow_iv(self.half_p) * s2.pow_iv(self.half_q);
        let t2 = self.k * c2.pow_iv(self.half_p_m2) * s2.pow_iv(self.half_q_m2) * h.sqr();
        (self.tau_pow * (t1 + t2)).clamp_nonneg()
    }

    /// Enclosure of `ψ′` over a box strictly inside the open domain.
    pub fn psi_prime(&self, theta: Interval) -> Interval {
        let s2 = theta.sin_on_half_turn().sqr();
        let c = theta.cos_on_half_turn();
        let c2 = c.sqr();
        let cot2 = c2 * s2.powf(-1.0);
        if self.type_one {
            let eta = self.eta0 + self.eta_cot * cot2;
            return s2.pow_iv(self.half_q_m1) * c.scale(self.q) * eta;
        }
        let c2 = c2.clamp_unit();
        let tan2 = s2 * c2.powf(-1.0);
        let eta = self.eta0 + self.eta_cot * cot2 + self.eta_tan * tan2;
        let h = c2.scale(self.p + self.q) + (-self.p);
        self.tau_pow * c2.pow_iv(self.half_p_m1) * s2.pow_iv(self.half_q_m1) * h * eta
    }

    /// Natural form intersected with the mean-value form around the midpoint.
    /// Falls back to the natural form on boxes touching the domain ends.
    pub fn psi(&self, theta: Interval, domain_end: f64) -> Interval {
        let natural = self.psi_natural(theta);
        if theta.lo() <= 0.0 || theta.hi() >= domain_end || !natural.is_finite() {
            return natural;
        }
        let m = theta.mid();
        let center = self.psi_natural(Interval::point(m));
        let d = self.psi_prime(theta);
        if !d.is_finite() {
            return natural;
        }
        let offset = theta - Interval::point(m);
        let mean_value = center + d * offset;
        natural.intersect(&mean_value).unwrap_or(natural)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{params_for, row1, Shape};
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn normalization_at_theta0() {
        for (r, s) in [(3, 5), (2, 6), (4, 4), (7, 2)] {
            let pr = row1(r, s).unwrap();
            for beta in [1.0, 1.2, 0.8] {
                assert!((psi(pr.theta0, &pr, beta) - 1.0).abs() < 1e-12);
            }
            assert!((phi(pr.theta0, &pr) - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn symmetric_phi() {
        let pr = row1(2, 2).unwrap();
        assert!((pr.tau - 0.25).abs() < 1e-15);
        assert!((phi(FRAC_PI_2 / 2.0, &pr) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn borderline_endpoint_2_6() {
        let pr = row1(2, 6).unwrap();
        let lim = psi(FRAC_PI_2, &pr, 1.0);
        let expect = (2.0f64 / 7.0).powi(2) * 46656.0 / 3125.0;
        assert!((lim - expect).abs() < 1e-12, "{lim}");
        assert!((psi(FRAC_PI_2 - 1e-7, &pr, 1.0) - lim).abs() < 1e-4);
        assert!((psi(5f64.sqrt().atan(), &pr, 1.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn divergent_endpoint_is_flagged() {
        let pr = params_for(3, Shape::K { k: 4 }).unwrap();
        assert_eq!(endpoint_limit(&pr, 0.6, Endpoint::End), EndpointLimit::Divergent);
        assert_eq!(psi(FRAC_PI_2, &pr, 0.6), f64::INFINITY);
    }

    #[test]
    fn quadratic_exact_values() {
        let t = quadratic_test(&row1(3, 5).unwrap(), 1.0);
        let e = t.exact.unwrap();
        let r = Rational64::from_integer;
        assert_eq!((e.a, e.b, e.c, e.discriminant), (r(32), r(-156), r(192), r(-240)));
        assert!(t.proves_positive(false));
        let t = quadratic_test(&row1(4, 4).unwrap(), 1.0);
        assert_eq!(t.exact.unwrap().discriminant, r(-1520));
        assert_eq!(quadratic_test(&row1(2, 6).unwrap(), 1.0).a, 0.0);
    }

    #[test]
    fn general_beta_matches_exact_path() {
        let pr = row1(3, 5).unwrap();
        let exact = quadratic_test(&pr, 1.0);
        let near = quadratic_test(&pr, 1.0 + 1e-13);
        assert!((exact.b - near.b).abs() < 1e-8);
        assert!((exact.a - near.a).abs() < 1e-8);
    }

    #[test]
    fn sigma_values() {
        assert_eq!(sigma_bound(&row1(6, 5).unwrap()), Some(0.0));
        assert_eq!(sigma_bound(&row1(7, 5).unwrap()), Some(36.0));
        assert_eq!(sigma_bound(&row1(2, 2).unwrap()), Some(-28.0));
        assert_eq!(sigma_bound(&params_for(5, Shape::Fixed).unwrap()), None);
    }

    #[test]
    fn enclosure_contains_point_values() {
        let cases = [
            (row1(3, 5).unwrap(), 1.0),
            (row1(2, 6).unwrap(), 1.0),
            (params_for(2, Shape::K { k: 9 }).unwrap(), 1.2),
            (params_for(9, Shape::Fixed).unwrap(), 1.0),
        ];
        for (pr, beta) in cases {
            let enc = PsiEnclosure::new(&pr, beta);
            let end = pr.domain_end();
            for i in 0..200 {
                let a = end * i as f64 / 200.0;
                let b = end * (i + 1) as f64 / 200.0;
                let iv = enc.psi(Interval::new(a, b), end);
                for j in 0..=10 {
                    let t = a + (b - a) * j as f64 / 10.0;
                    let v = psi(t, &pr, beta);
                    assert!(iv.contains(v), "{} θ={t} ψ={v} not in {iv:?}", pr.label());
                    if t > 0.0 && t < end {
                        let d = enc.psi_prime(Interval::point(t));
                        let exact = psi_prime(t, &pr, beta);
                        assert!(
                            d.contains(exact) || (d.mid() - exact).abs() <= 1e-12 * exact.abs(),
                            "{} θ={t}: ψ′={exact} vs {d:?}",
                            pr.label()
                        );
                    }
                }
            }
        }
    }
}
