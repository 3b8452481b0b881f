//! Certified verdicts for the comass inequality `ψ ≤ 1`.
//!
//! The analytic tests come first (Σ-bound, discriminant), then a
//! branch-and-bound supremum over interval enclosures, and finally the
//! largest verified interval around `θ₀` when the global bound fails.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_traits::Signed;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::{row1, MetricParams};
use crate::comass::{
    endpoint_limit, eta, psi, quadratic_test, sigma_bound_exact, Endpoint, EndpointLimit,
    PsiEnclosure,
};
use crate::error::CertifyError;
use crate::interval::Interval;

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_SCAN_POINTS: usize = 10_000;
const ROOT_TOL: f64 = 1e-12;
const MAX_BOXES: usize = 4_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Verdict {
    NoCertificate,
    Local,
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    AnalyticSigmaBound,
    AnalyticDiscriminant,
    CertifiedSup,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComassVerdict {
    pub verdict: Verdict,
    /// Certified upper bound for `sup ψ` on the closed domain; `None` when an
    /// endpoint limit diverges.
    pub sup_psi: Option<f64>,
    pub sup_location: f64,
    pub local_interval: Option<(f64, f64)>,
    pub eta_roots: Vec<f64>,
    pub beta: f64,
    pub tol: f64,
    pub method: Method,
}

impl ComassVerdict {
    pub fn local_width(&self) -> f64 {
        self.local_interval.map_or(0.0, |(a, b)| b - a)
    }
}

/// Result of [`certified_sup`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupBound {
    /// Rigorous upper bound for the supremum.
    pub upper: f64,
    /// Rigorous lower bound, attained (up to rounding) at `argmax`.
    pub lower: f64,
    pub argmax: f64,
    pub boxes: usize,
}

/// Sign changes of `η_β` on a uniform scan of the open domain, refined by
/// bisection.
pub fn find_eta_roots(params: &MetricParams, beta: f64, scan_points: usize) -> Vec<f64> {
    let end = params.domain_end();
    let n = scan_points.max(2);
    let f = |t: f64| eta(t, params, beta);
    let mut roots = Vec::new();
    let mut prev_t = end / n as f64;
    let mut prev = f(prev_t);
    for i in 2..n {
        let t = end * i as f64 / n as f64;
        let v = f(t);
        if prev == 0.0 {
            roots.push(prev_t);
        } else if prev.signum() != v.signum() && v != 0.0 {
            roots.push(bisect(&f, prev_t, t, prev));
        }
        prev_t = t;
        prev = v;
    }
    roots
}

fn bisect(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, fa: f64) -> f64 {
    let sa = fa.signum();
    while b - a > ROOT_TOL {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if fm.signum() == sa {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    lo: f64,
    hi: f64,
    upper: f64,
}

impl PartialEq for Cell {
    fn eq(&self, o: &Self) -> bool {
        self.upper.total_cmp(&o.upper) == Ordering::Equal
    }
}
impl Eq for Cell {}
impl PartialOrd for Cell {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Cell {
    fn cmp(&self, o: &Self) -> Ordering {
        self.upper.total_cmp(&o.upper)
    }
}

enum Stop {
    Converged,
    Below(f64),
}

fn check_interval(params: &MetricParams, beta: f64, a: f64, b: f64) -> Result<(), CertifyError> {
    let end = params.domain_end();
    if beta.is_nan() || beta <= 0.5 {
        return Err(CertifyError::InvalidArgument(format!("beta must exceed 1/2, got {beta}")));
    }
    if !(0.0 <= a && a <= b && b <= end) {
        return Err(CertifyError::InvalidArgument(format!(
            "interval [{a}, {b}] is not inside the domain [0, {end}]"
        )));
    }
    if a == 0.0 && endpoint_limit(params, beta, Endpoint::Start).is_divergent() {
        return Err(CertifyError::UnboundedComass { endpoint: 0.0 });
    }
    if b == end && endpoint_limit(params, beta, Endpoint::End).is_divergent() {
        return Err(CertifyError::UnboundedComass { endpoint: end });
    }
    Ok(())
}

fn branch_and_bound(
    params: &MetricParams,
    beta: f64,
    a: f64,
    b: f64,
    tol: f64,
    stop: Stop,
) -> SupBound {
    let end = params.domain_end();
    let enc = PsiEnclosure::new(params, beta);
    let point_lower = |t: f64| enc.psi_natural(Interval::point(t)).lo();
    let (mut lower, mut argmax) = (point_lower(a), a);
    for t in [b, 0.5 * (a + b)] {
        let v = point_lower(t);
        if v > lower {
            lower = v;
            argmax = t;
        }
    }
    let mut heap = BinaryHeap::new();
    let root = enc.psi(Interval::new(a, b), end).hi();
    heap.push(Cell { lo: a, hi: b, upper: root });
    let mut boxes = 1;
    let mut stuck = f64::NEG_INFINITY;
    while let Some(cell) = heap.pop() {
        let top = cell.upper.max(stuck);
        let done = match stop {
            Stop::Converged => top <= lower + tol,
            Stop::Below(bound) => top <= bound || lower > bound,
        };
        if done || boxes >= MAX_BOXES {
            return SupBound { upper: top, lower, argmax, boxes };
        }
        let m = 0.5 * (cell.lo + cell.hi);
        if !(cell.lo < m && m < cell.hi) || cell.hi - cell.lo < 1e-15 {
            stuck = stuck.max(cell.upper);
            continue;
        }
        let v = point_lower(m);
        if v > lower {
            lower = v;
            argmax = m;
        }
        for (lo, hi) in [(cell.lo, m), (m, cell.hi)] {
            let upper = enc.psi(Interval::new(lo, hi), end).hi();
            heap.push(Cell { lo, hi, upper });
            boxes += 1;
        }
    }
    SupBound { upper: stuck.max(lower), lower, argmax, boxes }
}

/// Upper bound for `sup ψ` over `[interval.0, interval.1]` within `tol` of
/// the true supremum.
pub fn certified_sup(
    params: &MetricParams,
    beta: f64,
    interval: (f64, f64),
    tol: f64,
) -> Result<SupBound, CertifyError> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(CertifyError::InvalidArgument(format!("tol must be positive, got {tol}")));
    }
    let (a, b) = interval;
    check_interval(params, beta, a, b)?;
    Ok(branch_and_bound(params, beta, a, b, tol, Stop::Converged))
}

/// Whether `ψ ≤ bound` on the interval, proved by enclosure. Stops as soon as
/// the question is settled either way.
pub fn certify_below(
    params: &MetricParams,
    beta: f64,
    interval: (f64, f64),
    bound: f64,
) -> Result<bool, CertifyError> {
    let (a, b) = interval;
    check_interval(params, beta, a, b)?;
    let r = branch_and_bound(params, beta, a, b, 0.0, Stop::Below(bound));
    Ok(r.upper <= bound)
}

fn limit_ok(l: EndpointLimit) -> bool {
    match l {
        EndpointLimit::Zero => true,
        EndpointLimit::Finite(v) => v <= 1.0,
        EndpointLimit::Divergent => false,
    }
}

/// Run the certification cascade for one `(params, β)`.
pub fn certify(params: &MetricParams, beta: f64, tol: f64) -> Result<ComassVerdict, CertifyError> {
    if !(tol > 0.0 && tol <= 1e-3) {
        return Err(CertifyError::InvalidArgument(format!("tol must lie in (0, 1e-3], got {tol}")));
    }
    if beta.is_nan() || beta <= 0.5 {
        return Err(CertifyError::InvalidArgument(format!("beta must exceed 1/2, got {beta}")));
    }
    let theta0 = params.theta0;
    let end = params.domain_end();
    let eta_roots = find_eta_roots(params, beta, DEFAULT_SCAN_POINTS);
    let start_lim = endpoint_limit(params, beta, Endpoint::Start);
    let end_lim = endpoint_limit(params, beta, Endpoint::End);
    let ends_ok = limit_ok(start_lim) && limit_ok(end_lim);
    let verdict = |verdict, sup_psi, sup_location, local_interval, method| ComassVerdict {
        verdict,
        sup_psi,
        sup_location,
        local_interval,
        eta_roots: eta_roots.clone(),
        beta,
        tol,
        method,
    };

    if ends_ok && beta == 1.0 {
        if let Some(bound) = sigma_bound_exact(params) {
            let sigma = params.p + params.q;
            if sigma >= num_rational::Rational64::from_integer(18) && !bound.is_negative() {
                return Ok(verdict(Verdict::Global, Some(1.0), theta0, None, Method::AnalyticSigmaBound));
            }
        }
    }
    if ends_ok && quadratic_test(params, beta).proves_positive(params.is_type_one()) {
        return Ok(verdict(Verdict::Global, Some(1.0), theta0, None, Method::AnalyticDiscriminant));
    }

    let full = if start_lim.is_divergent() || end_lim.is_divergent() {
        None
    } else {
        Some(branch_and_bound(params, beta, 0.0, end, tol, Stop::Converged))
    };
    let (sup_psi, sup_location) = match full {
        Some(s) => (Some(s.upper), s.argmax),
        None => (None, if start_lim.is_divergent() { 0.0 } else { end }),
    };
    if let Some(s) = full {
        if s.upper <= 1.0 + tol {
            return Ok(verdict(Verdict::Global, sup_psi, sup_location, None, Method::CertifiedSup));
        }
    }
    if eta(theta0, params, beta) > 0.0 {
        if let Some(iv) = local_interval(params, beta, tol)? {
            return Ok(verdict(Verdict::Local, sup_psi, sup_location, Some(iv), Method::CertifiedSup));
        }
    }
    Ok(verdict(Verdict::NoCertificate, sup_psi, sup_location, None, Method::CertifiedSup))
}

/// First point walking from `theta0` towards `limit` where `ψ > 1 + 1e−13`,
/// refined by bisection, or `limit` if there is none.
fn crossing(params: &MetricParams, beta: f64, limit: f64) -> f64 {
    let theta0 = params.theta0;
    let over = |t: f64| psi(t, params, beta) > 1.0 + 1e-13;
    let span = limit - theta0;
    let steps = 20_000;
    let mut prev = theta0;
    for i in 1..=steps {
        let t = theta0 + span * i as f64 / steps as f64;
        if over(t) {
            let (mut inside, mut outside) = (prev, t);
            while (outside - inside).abs() > ROOT_TOL {
                let m = 0.5 * (inside + outside);
                if over(m) {
                    outside = m;
                } else {
                    inside = m;
                }
            }
            return inside;
        }
        prev = t;
    }
    limit
}

/// Largest verified interval around `θ₀` with `ψ ≤ 1 + tol`.
pub fn local_interval(
    params: &MetricParams,
    beta: f64,
    tol: f64,
) -> Result<Option<(f64, f64)>, CertifyError> {
    let theta0 = params.theta0;
    let end = params.domain_end();
    let mut lo = crossing(params, beta, 0.0);
    let mut hi = crossing(params, beta, end);
    if lo == 0.0 && endpoint_limit(params, beta, Endpoint::Start).is_divergent() {
        lo = theta0 * 1e-3;
    }
    if hi == end && endpoint_limit(params, beta, Endpoint::End).is_divergent() {
        hi = end - (end - theta0) * 1e-3;
    }
    for _ in 0..20 {
        if !(lo < theta0 && theta0 < hi) {
            return Ok(None);
        }
        if certify_below(params, beta, (lo, hi), 1.0 + tol)? {
            return Ok(Some((lo, hi)));
        }
        lo = theta0 - 0.9 * (theta0 - lo);
        hi = theta0 + 0.9 * (hi - theta0);
    }
    Ok(None)
}

/// One cell of the row-1 classification table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub r: u32,
    pub s: u32,
    pub verdict: ComassVerdict,
}

fn better(a: &ComassVerdict, b: &ComassVerdict) -> bool {
    match a.verdict.cmp(&b.verdict) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => a.verdict == Verdict::Local && a.local_width() > b.local_width(),
    }
}

/// Best verdict over `betas` for every `2 ≤ r ≤ r_max`, `2 ≤ s ≤ s_max`.
pub fn sweep_row1(
    r_max: u32,
    s_max: u32,
    betas: &[f64],
    tol: f64,
) -> Result<Vec<SweepRow>, CertifyError> {
    if !(2..=12).contains(&r_max) || !(2..=12).contains(&s_max) {
        return Err(CertifyError::InvalidArgument(format!(
            "sweep bounds must lie in 2..=12, got r_max={r_max}, s_max={s_max}"
        )));
    }
    if betas.is_empty() {
        return Err(CertifyError::InvalidArgument("empty beta list".into()));
    }
    let pairs: Vec<(u32, u32)> =
        (2..=r_max).flat_map(|r| (2..=s_max).map(move |s| (r, s))).collect();
    pairs
        .par_iter()
        .map(|&(r, s)| {
            let params = row1(r, s).expect("r, s >= 2");
            let mut best: Option<ComassVerdict> = None;
            for &beta in betas {
                let v = certify(&params, beta, tol)?;
                if best.as_ref().is_none_or(|b| better(&v, b)) {
                    best = Some(v);
                }
            }
            Ok(SweepRow { r, s, verdict: best.expect("nonempty betas") })
        })
        .collect()
}

/// Best verdict over a list of exponents for arbitrary params.
pub fn best_over_betas(
    params: &MetricParams,
    betas: &[f64],
    tol: f64,
) -> Result<Option<ComassVerdict>, CertifyError> {
    let verdicts: Vec<ComassVerdict> =
        betas.par_iter().map(|&b| certify(params, b, tol)).collect::<Result<_, _>>()?;
    let mut best: Option<ComassVerdict> = None;
    for v in verdicts {
        if best.as_ref().is_none_or(|b| better(&v, b)) {
            best = Some(v);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{params_for, Shape};

    #[test]
    fn roots_case_b() {
        let k9 = params_for(2, Shape::K { k: 9 }).unwrap();
        let r = find_eta_roots(&k9, 1.2, DEFAULT_SCAN_POINTS);
        assert_eq!(r.len(), 2);
        assert!(k9.theta0 < r[0] && r[0] < r[1]);
        for t in &r {
            assert!(eta(*t, &k9, 1.2).abs() < 1e-10);
        }
        let k8 = params_for(2, Shape::K { k: 8 }).unwrap();
        let r = find_eta_roots(&k8, 1.0, DEFAULT_SCAN_POINTS);
        assert_eq!(r.len(), 1);
        assert!(r[0] > k8.theta0);
        assert!(find_eta_roots(&row1(3, 5).unwrap(), 1.0, DEFAULT_SCAN_POINTS).is_empty());
    }

    #[test]
    fn sup_3_5() {
        let p = row1(3, 5).unwrap();
        let s = certified_sup(&p, 1.0, (0.0, p.domain_end()), 1e-9).unwrap();
        assert!(s.upper <= 1.0 + 1e-9 && s.upper >= 1.0, "{s:?}");
    }

    #[test]
    fn sup_2_6() {
        let p = row1(2, 6).unwrap();
        let s = certified_sup(&p, 1.0, (1.145, 1.165), 1e-9).unwrap();
        assert!(s.upper <= 1.0 + 1e-9, "{s:?}");
        assert!(certify_below(&p, 1.0, (1.145, 1.165), 1.0 + 1e-12).unwrap());
        let s = certified_sup(&p, 1.0, (0.0, p.domain_end()), 1e-6).unwrap();
        assert!(s.upper > 1.2);
    }

    #[test]
    fn divergent_interval_errors() {
        let p = params_for(3, Shape::K { k: 4 }).unwrap();
        let e = certified_sup(&p, 0.6, (0.0, p.domain_end()), 1e-9).unwrap_err();
        assert!(matches!(e, CertifyError::UnboundedComass { .. }));
    }

    #[test]
    fn verdicts() {
        let v = certify(&row1(3, 5).unwrap(), 1.0, DEFAULT_TOL).unwrap();
        assert_eq!((v.verdict, v.method), (Verdict::Global, Method::AnalyticDiscriminant));
        let v = certify(&row1(6, 5).unwrap(), 1.0, DEFAULT_TOL).unwrap();
        assert_eq!((v.verdict, v.method), (Verdict::Global, Method::AnalyticSigmaBound));
        let v = certify(&row1(2, 6).unwrap(), 1.0, DEFAULT_TOL).unwrap();
        assert_eq!(v.verdict, Verdict::Local);
        let (a, b) = v.local_interval.unwrap();
        assert!(a <= 1.145 && b >= 1.165, "{a} {b}");
        let v = certify(&params_for(2, Shape::K { k: 9 }).unwrap(), 1.2, DEFAULT_TOL).unwrap();
        assert_eq!(v.verdict, Verdict::Global);
        let v = certify(&row1(2, 2).unwrap(), 1.0, DEFAULT_TOL).unwrap();
        assert_eq!(v.verdict, Verdict::NoCertificate);
    }
}
