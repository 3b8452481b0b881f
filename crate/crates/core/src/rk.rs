//! Dormand–Prince 5(4) for scalar ODEs, with cubic Hermite dense output and
//! event location.

use crate::error::OdeError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RkOptions {
    pub atol: f64,
    pub rtol: f64,
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for RkOptions {
    fn default() -> Self {
        Self { atol: 1e-10, rtol: 1e-10, max_step: f64::INFINITY, max_steps: 2_000_000 }
    }
}

impl RkOptions {
    pub fn with_tol(self, tol: f64) -> Self {
        Self { atol: tol, rtol: tol, ..self }
    }
}

/// Accepted knots of an integration, in the direction of integration.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSolution {
    pub t: Vec<f64>,
    pub y: Vec<f64>,
    pub dy: Vec<f64>,
    pub steps: usize,
    pub rejected: usize,
    /// Largest accepted local error estimate.
    pub max_error: f64,
}

impl DenseSolution {
    pub fn t_start(&self) -> f64 {
        self.t[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.t.last().expect("nonempty")
    }

    fn segment(&self, t: f64) -> usize {
        let n = self.t.len();
        if n < 2 {
            return 0;
        }
        let forward = self.t[1] > self.t[0];
        let idx = if forward {
            self.t.partition_point(|&x| x <= t)
        } else {
            self.t.partition_point(|&x| x >= t)
        };
        idx.clamp(1, n - 1) - 1
    }

    /// Cubic Hermite interpolant `(y, y′)` at `t`.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        if self.t.len() == 1 {
            return (self.y[0], self.dy[0]);
        }
        let i = self.segment(t);
        hermite(self.t[i], self.t[i + 1], self.y[i], self.y[i + 1], self.dy[i], self.dy[i + 1], t)
    }
}

fn hermite(t0: f64, t1: f64, y0: f64, y1: f64, d0: f64, d1: f64, t: f64) -> (f64, f64) {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let (s2, s3) = (s * s, s * s * s);
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    let y = h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1;
    let dh00 = (6.0 * s2 - 6.0 * s) / h;
    let dh10 = 3.0 * s2 - 4.0 * s + 1.0;
    let dh01 = (-6.0 * s2 + 6.0 * s) / h;
    let dh11 = 3.0 * s2 - 2.0 * s;
    (y, dh00 * y0 + dh10 * d0 + dh01 * y1 + dh11 * d1)
}

/// Where an event function changed sign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventHit {
    pub t: f64,
    pub y: f64,
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrate `y′ = f(t, y)` from `(t0, y0)` to `t_end` (either direction).
/// A non-finite right-hand side rejects the step. If `event` is given, the
/// integration stops at the first sign change of `event(t, y)`.
pub fn integrate(
    f: impl Fn(f64, f64) -> f64,
    t0: f64,
    y0: f64,
    t_end: f64,
    opts: RkOptions,
    event: Option<&dyn Fn(f64, f64) -> f64>,
) -> Result<(DenseSolution, Option<EventHit>), OdeError> {
    let dir = if t_end >= t0 { 1.0 } else { -1.0 };
    let span = (t_end - t0).abs();
    let k1 = f(t0, y0);
    if !k1.is_finite() {
        return Err(OdeError::NonFinite { t: t0 });
    }
    let mut sol = DenseSolution {
        t: vec![t0],
        y: vec![y0],
        dy: vec![k1],
        steps: 0,
        rejected: 0,
        max_error: 0.0,
    };
    if span == 0.0 {
        return Ok((sol, None));
    }
    let (mut t, mut y, mut k1) = (t0, y0, k1);
    let mut h = (1e-3 * span).min(opts.max_step).min(span);
    let mut g_prev = event.map(|e| e(t, y));
    while (t_end - t) * dir > 0.0 {
        if sol.steps + sol.rejected >= opts.max_steps {
            return Err(OdeError::TooManySteps(opts.max_steps));
        }
        let remaining = (t_end - t).abs();
        let last = h >= remaining;
        let hh = if last { remaining } else { h };
        if hh <= 1e-14 * t.abs().max(1.0) && !last {
            return Err(OdeError::StepUnderflow { t });
        }
        let s = dir * hh;
        let k2 = f(t + s / 5.0, y + s * A21 * k1);
        let k3 = f(t + 3.0 * s / 10.0, y + s * (A31 * k1 + A32 * k2));
        let k4 = f(t + 4.0 * s / 5.0, y + s * (A41 * k1 + A42 * k2 + A43 * k3));
        let k5 = f(t + 8.0 * s / 9.0, y + s * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4));
        let k6 = f(t + s, y + s * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5));
        let y_new = y + s * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6);
        let t_new = if last { t_end } else { t + s };
        let k7 = f(t_new, y_new);
        let err = s * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7);
        let scale = opts.atol + opts.rtol * y.abs().max(y_new.abs());
        let ratio = (err / scale).abs();
        if !ratio.is_finite() || !y_new.is_finite() || !k7.is_finite() {
            sol.rejected += 1;
            h = 0.5 * hh;
            if h <= 1e-14 * t.abs().max(1.0) {
                return Err(OdeError::StepUnderflow { t });
            }
            continue;
        }
        if ratio > 1.0 {
            sol.rejected += 1;
            h = hh * (0.9 * ratio.powf(-0.2)).max(0.2);
            continue;
        }
        sol.steps += 1;
        sol.max_error = sol.max_error.max(err.abs());
        if let (Some(ev), Some(gp)) = (event, g_prev) {
            let g_new = ev(t_new, y_new);
            if gp != 0.0 && (g_new == 0.0 || g_new.signum() != gp.signum()) {
                let hit = locate(ev, (t, y, k1), (t_new, y_new, k7), gp);
                let d = f(hit.t, hit.y);
                sol.t.push(hit.t);
                sol.y.push(hit.y);
                sol.dy.push(if d.is_finite() { d } else { k7 });
                return Ok((sol, Some(hit)));
            }
            g_prev = Some(g_new);
        }
        sol.t.push(t_new);
        sol.y.push(y_new);
        sol.dy.push(k7);
        t = t_new;
        y = y_new;
        k1 = k7;
        let grow = if ratio == 0.0 { 5.0 } else { (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0) };
        h = (hh * grow).min(opts.max_step);
    }
    Ok((sol, None))
}

fn locate(
    ev: &dyn Fn(f64, f64) -> f64,
    a: (f64, f64, f64),
    b: (f64, f64, f64),
    g_a: f64,
) -> EventHit {
    let at = |t: f64| hermite(a.0, b.0, a.1, b.1, a.2, b.2, t).0;
    let (mut lo, mut hi) = (a.0, b.0);
    for _ in 0..200 {
        if (hi - lo).abs() <= 1e-14 * lo.abs().max(1.0) {
            break;
        }
        let m = 0.5 * (lo + hi);
        let g = ev(m, at(m));
        if g == 0.0 {
            return EventHit { t: m, y: at(m) };
        }
        if g.signum() == g_a.signum() {
            lo = m;
        } else {
            hi = m;
        }
    }
    EventHit { t: hi, y: at(hi) }
}
