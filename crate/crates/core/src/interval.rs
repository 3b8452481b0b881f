//! Closed intervals of `f64` with outward rounding.
//!
//! Sums and products are widened by one ulp only when the error-free
//! transformation (two-sum, fma) shows the rounded result is inexact and on
//! the wrong side, so exact values stay point intervals. Library functions
//! (`exp`, `ln`, `powf`, `sin`, `cos`) are widened by [`LIBM_ULPS`] ulps.

use std::f64::consts::{FRAC_PI_2, PI};
use std::ops::{Add, Mul, Neg, Sub};

/// Ulps of slack granted to libm transcendental functions.
pub const LIBM_ULPS: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

fn down(x: f64) -> f64 {
    if x.is_finite() {
        x.next_down()
    } else {
        x
    }
}

fn up(x: f64) -> f64 {
    if x.is_finite() {
        x.next_up()
    } else {
        x
    }
}

fn add_down(a: f64, b: f64) -> f64 {
    let r = a + b;
    if !r.is_finite() {
        return r;
    }
    let bb = r - a;
    let err = (a - (r - bb)) + (b - bb);
    if err < 0.0 {
        r.next_down()
    } else {
        r
    }
}

fn add_up(a: f64, b: f64) -> f64 {
    -add_down(-a, -b)
}

fn mul_down(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        return 0.0;
    }
    let r = a * b;
    if !r.is_finite() {
        return r;
    }
    if a.mul_add(b, -r) < 0.0 {
        r.next_down()
    } else {
        r
    }
}

fn mul_up(a: f64, b: f64) -> f64 {
    -mul_down(-a, b)
}

fn down_n(mut x: f64, n: u32) -> f64 {
    for _ in 0..n {
        x = down(x);
    }
    x
}

fn up_n(mut x: f64, n: u32) -> f64 {
    for _ in 0..n {
        x = up(x);
    }
    x
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi || lo.is_nan() || hi.is_nan(), "[{lo}, {hi}]");
        Self { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Self { lo: x, hi: x }
    }

    /// Enclosure of a real number known only through a libm-rounded value.
    pub fn around(x: f64) -> Self {
        Self { lo: down_n(x, LIBM_ULPS), hi: up_n(x, LIBM_ULPS) }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn mid(&self) -> f64 {
        0.5 * self.lo + 0.5 * self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval::new(self.lo.min(other.lo), self.hi.max(other.hi))
    }

    /// Intersection; `None` when disjoint.
    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }

    /// Clamp to `[0, ∞)`; used where the exact quantity is known nonnegative.
    pub fn clamp_nonneg(self) -> Interval {
        Interval { lo: self.lo.max(0.0), hi: self.hi.max(0.0) }
    }

    pub fn clamp_unit(self) -> Interval {
        Interval { lo: self.lo.clamp(0.0, 1.0), hi: self.hi.clamp(0.0, 1.0) }
    }

    pub fn sqr(self) -> Interval {
        let (l, h) = (self.lo, self.hi);
        if l >= 0.0 {
            Interval::new(mul_down(l, l), mul_up(h, h))
        } else if h <= 0.0 {
            Interval::new(mul_down(h, h), mul_up(l, l))
        } else {
            Interval::new(0.0, mul_up(l, l).max(mul_up(h, h)))
        }
    }

    pub fn scale(self, k: f64) -> Interval {
        self * Interval::point(k)
    }

    /// `x^e` for `x ≥ 0`. Negative exponents send a zero lower end to `+∞`.
    pub fn powf(self, e: f64) -> Interval {
        let x = self.clamp_nonneg();
        if e == 0.0 {
            return Interval::point(1.0);
        }
        let p = |v: f64| -> f64 {
            if v == 0.0 {
                if e > 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                v.powf(e)
            }
        };
        let (a, b) = if e > 0.0 { (p(x.lo), p(x.hi)) } else { (p(x.hi), p(x.lo)) };
        Interval::new(down_n(a, LIBM_ULPS).max(0.0), up_n(b, LIBM_ULPS))
    }

    /// `x^e` for `x ⊆ [0, ∞)` and an exponent interval. Exact zero exponents
    /// give exactly 1, so `0^0` borderline limits stay finite.
    pub fn pow_iv(self, e: Interval) -> Interval {
        if e.lo == e.hi {
            return self.powf(e.lo);
        }
        let corners = [self.powf(e.lo), self.powf(e.hi)];
        Interval::new(corners[0].lo.min(corners[1].lo), corners[0].hi.max(corners[1].hi))
    }

    pub fn exp(self) -> Interval {
        Interval::new(down_n(self.lo.exp(), LIBM_ULPS).max(0.0), up_n(self.hi.exp(), LIBM_ULPS))
    }

    /// Natural log of a positive interval.
    pub fn ln(self) -> Interval {
        Interval::new(down_n(self.lo.ln(), LIBM_ULPS), up_n(self.hi.ln(), LIBM_ULPS))
    }

    /// Enclosure of `sin θ` for `θ ∈ self ⊆ [0, π]`. An upper end at the
    /// float `PI` stands for π itself, so the enclosure then reaches 0.
    pub fn sin_on_half_turn(self) -> Interval {
        let (a, b) = (self.lo.max(0.0), self.hi.min(PI));
        let (sa, sb) = (a.sin(), b.sin());
        // sin peaks at π/2; the float FRAC_PI_2 is within an ulp of it.
        let hi = if a <= up(FRAC_PI_2) && b >= down(FRAC_PI_2) { 1.0 } else { sa.max(sb) };
        let lo = if b >= PI { 0.0 } else { sa.min(sb) };
        Interval::new(down_n(lo, LIBM_ULPS).max(0.0), up_n(hi, LIBM_ULPS).min(1.0))
    }

    /// Enclosure of `cos θ` for `θ ∈ self ⊆ [0, π]` (decreasing there). An
    /// end at the float `FRAC_PI_2` also covers the exact π/2, where cos is 0.
    pub fn cos_on_half_turn(self) -> Interval {
        let (a, b) = (self.lo.max(0.0), self.hi.min(PI));
        let mut lo = down_n(b.cos(), LIBM_ULPS).max(-1.0);
        let mut hi = up_n(a.cos(), LIBM_ULPS).min(1.0);
        if b >= FRAC_PI_2 {
            lo = lo.min(0.0);
        }
        if a >= FRAC_PI_2 {
            hi = hi.max(0.0);
        }
        Interval::new(lo, hi)
    }
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, o: Interval) -> Interval {
        Interval::new(add_down(self.lo, o.lo), add_up(self.hi, o.hi))
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, o: Interval) -> Interval {
        Interval::new(add_down(self.lo, -o.hi), add_up(self.hi, -o.lo))
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval { lo: -self.hi, hi: -self.lo }
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, o: Interval) -> Interval {
        // 0·∞ is taken as 0: every infinite end here stands for an unbounded
        // but finite-valued quantity.
        let pairs = [(self.lo, o.lo), (self.lo, o.hi), (self.hi, o.lo), (self.hi, o.hi)];
        let lo = pairs.iter().map(|&(a, b)| mul_down(a, b)).fold(f64::INFINITY, f64::min);
        let hi = pairs.iter().map(|&(a, b)| mul_up(a, b)).fold(f64::NEG_INFINITY, f64::max);
        Interval::new(lo, hi)
    }
}

impl Add<f64> for Interval {
    type Output = Interval;
    fn add(self, k: f64) -> Interval {
        self + Interval::point(k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sqr_straddling_zero() {
        let x = Interval::new(-2.0, 1.0).sqr();
        assert_eq!(x.lo(), 0.0);
        assert!(x.hi() >= 4.0);
    }

    #[test]
    fn powf_edges() {
        let x = Interval::new(0.0, 0.5);
        assert_eq!(x.powf(0.0), Interval::point(1.0));
        assert_eq!(x.powf(2.0).lo(), 0.0);
        assert_eq!(x.powf(-1.0).hi(), f64::INFINITY);
    }

    #[test]
    fn sin_peak_included() {
        let s = Interval::new(1.5, 1.6).sin_on_half_turn();
        assert_eq!(s.hi(), 1.0);
        assert!(s.lo() <= 1.5f64.sin().min(1.6f64.sin()));
    }

    proptest! {
        #[test]
        fn enclosures_contain_samples(a in 0.0f64..3.1, w in 0.0f64..0.5, t in 0.0f64..1.0, e in -3.0f64..3.0) {
            let b = (a + w).min(PI);
            let x = a + t * (b - a);
            let iv = Interval::new(a, b);
            prop_assert!(iv.sin_on_half_turn().contains(x.sin()));
            prop_assert!(iv.cos_on_half_turn().contains(x.cos()));
            let c = iv.cos_on_half_turn();
            prop_assert!((c * c).contains(x.cos() * x.cos()));
            prop_assert!(c.sqr().contains(x.cos() * x.cos()));
            if a > 0.0 {
                prop_assert!(iv.powf(e).contains(x.powf(e)));
                prop_assert!(iv.ln().contains(x.ln()));
            }
            prop_assert!((iv - iv.scale(0.5)).contains(x - 0.5 * x));
            prop_assert!(iv.exp().contains(x.exp()));
        }
    }
}
