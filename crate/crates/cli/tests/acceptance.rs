//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::f64::consts::FRAC_PI_2;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use conecalib::catalog::{params_for, row1, MetricParams, Shape};
use conecalib::certify::{certified_sup, certify, find_eta_roots, sweep_row1, Verdict};
use conecalib::comass::{eta, psi, quadratic_test, sigma_bound};
use conecalib::deform::{ambient_parity_check, build_endpoint_deformation, default_targets, vanishing_limit_check};
use conecalib::odecal::{
    build_phi0, default_seed, glue_lambda1, solve_lambda1, star_comass_sq, step_halving_check, GLUE_WIDTH,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: u64) -> Result<Duration, String> {
    let t = start.elapsed();
    ensure(t < Duration::from_secs(limit), || format!("took {t:.2?}, limit {limit} s"))?;
    Ok(t)
}

/// Independent evaluation of the squared comass for type II rows:
/// `(u² + (u′/α)²) / E` with `u = E^β`, `E = cᵖ sᵠ / τ` and `τ` taken at the
/// critical angle `atan √(q/p)`.
struct Oracle {
    p: f64,
    q: f64,
    alpha: f64,
    theta0: f64,
    tau: f64,
}

impl Oracle {
    fn new(params: &MetricParams) -> Self {
        let (_, p, q) = params.exponents_f64();
        let alpha = params.alpha_f64();
        let theta0 = (q / p).sqrt().atan();
        let tau = theta0.cos().powf(p) * theta0.sin().powf(q);
        Self { p, q, alpha, theta0, tau }
    }

    fn envelope(&self, t: f64) -> f64 {
        t.cos().powf(self.p) * t.sin().powf(self.q) / self.tau
    }

    fn psi(&self, t: f64, beta: f64) -> f64 {
        let e = self.envelope(t);
        let u = e.powf(beta);
        let du = beta * u * (self.q * t.cos() / t.sin() - self.p * t.sin() / t.cos());
        (u * u + (du / self.alpha).powi(2)) / e
    }

    fn dpsi(&self, t: f64, beta: f64) -> f64 {
        let h = 1e-6 * t.min(FRAC_PI_2 - t).min(1.0);
        (self.psi(t + h, beta) - self.psi(t - h, beta)) / (2.0 * h)
    }
}

fn shapes_rows_1_to_6() -> Vec<MetricParams> {
    let mut out = Vec::new();
    for r in 2..=6 {
        for s in 2..=6 {
            out.push(row1(r, s).unwrap());
        }
    }
    for (row, ks) in [(2u8, 3..=10u32), (3, 2..=9), (4, 2..=8)] {
        for k in ks {
            out.push(params_for(row, Shape::K { k }).unwrap());
        }
    }
    out.push(params_for(5, Shape::Fixed).unwrap());
    out.push(params_for(6, Shape::Fixed).unwrap());
    out
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let all = shapes_rows_1_to_6();
    ensure(all.len() == 50, || format!("{} shape instances", all.len()))?;
    let mut worst = 0.0f64;
    for params in &all {
        let o = Oracle::new(params);
        ensure((params.theta0 - o.theta0).abs() < 1e-14, || format!("{}: theta0 {} vs {}", params.label(), params.theta0, o.theta0))?;
        ensure((params.tau / o.tau - 1.0).abs() < 1e-13, || format!("{}: tau {} vs {}", params.label(), params.tau, o.tau))?;
        for beta in [1.0, 1.2] {
            let v = psi(params.theta0, params, beta);
            worst = worst.max((v - 1.0).abs());
            ensure((v - 1.0).abs() <= 1e-12, || format!("{} beta={beta}: psi(theta0) = {v:.17}", params.label()))?;
            for t in [0.3, 0.7, 1.1, 1.4] {
                let (a, b) = (psi(t, params, beta), o.psi(t, beta));
                ensure((a / b - 1.0).abs() < 1e-12, || format!("{} beta={beta} theta={t}: {a} vs oracle {b}", params.label()))?;
            }
        }
    }
    let t = within(start, 1)?;
    Ok(format!("50 shapes x 2 betas, max |psi(theta0) - 1| = {worst:.1e}, {t:.2?}"))
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let table = sweep_row1(12, 12, &[1.0, 1.2], 1e-9).map_err(|e| e.to_string())?;
    let mut counts = [0usize; 3];
    for row in &table {
        let (r, s) = (row.r, row.s);
        let v = &row.verdict;
        counts[v.verdict as usize] += 1;
        let global = r + s >= 9 || matches!((r, s), (4, 4) | (3, 5) | (5, 3));
        if global {
            ensure(v.verdict == Verdict::Global, || format!("({r},{s}) expected Global, got {:?}", v.verdict))?;
        } else {
            ensure(v.verdict != Verdict::Global, || format!("({r},{s}) unexpectedly Global"))?;
        }
        if r + s < 8 {
            ensure(v.verdict == Verdict::NoCertificate, || format!("({r},{s}) expected NoCertificate, got {:?}", v.verdict))?;
        }
        if matches!((r, s), (2, 6) | (6, 2)) {
            ensure(v.verdict == Verdict::Local, || format!("({r},{s}) expected Local, got {:?}", v.verdict))?;
            let (lo, hi) = v.local_interval.ok_or("missing local interval")?;
            ensure(lo <= 1.145 && hi >= 1.165, || format!("({r},{s}) local interval [{lo}, {hi}]"))?;
        }
    }
    let t = within(start, 60)?;
    Ok(format!("{} cones: {} Global, {} Local, {} none, {t:.2?}", table.len(), counts[2], counts[1], counts[0]))
}

fn criterion_3() -> Outcome {
    let p = row1(3, 5).unwrap();
    let qt = quadratic_test(&p, 1.0);
    let exact = qt.exact.ok_or("no exact coefficients at beta = 1")?;
    let (_, pp, q) = p.exponents_f64();
    let a2 = p.alpha_f64().powi(2);
    let (a, b, c) = (4.0 * (pp * pp - 2.0 * pp), 4.0 * a2 - 8.0 * (pp + q + pp * q), 4.0 * (q * q - 2.0 * q));
    let oracle = b * b - 4.0 * a * c;
    ensure(oracle == -240.0, || format!("oracle discriminant {oracle}"))?;
    ensure(*exact.discriminant.numer() == -240 && *exact.discriminant.denom() == 1, || {
        format!("discriminant {}", exact.discriminant)
    })?;
    ensure(qt.discriminant < 0.0 && qt.proves_positive(false), || "quadratic test does not prove positivity".into())?;
    let sup = certified_sup(&p, 1.0, p.domain(), 1e-10).map_err(|e| e.to_string())?;
    ensure(sup.upper <= 1.0 + 1e-9, || format!("certified sup {}", sup.upper))?;
    let mut checked = 0;
    for r in 2..=12u32 {
        for s in 2..=12u32 {
            if r + s < 11 {
                continue;
            }
            let params = row1(r, s).unwrap();
            let sb = sigma_bound(&params).ok_or("no sigma bound")?;
            ensure(sb >= 0.0, || format!("({r},{s}) sigma bound {sb}"))?;
            let n = 10_000;
            let min = (1..n).map(|i| eta(FRAC_PI_2 * i as f64 / n as f64, &params, 1.0)).fold(f64::INFINITY, f64::min);
            ensure(min > 0.0, || format!("({r},{s}) grid min eta_1 = {min}"))?;
            checked += 1;
        }
    }
    Ok(format!("Delta = {}, sup psi <= {:.12}, {checked} cones with r+s >= 11", exact.discriminant, sup.upper))
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let p9 = params_for(2, Shape::K { k: 9 }).unwrap();
    let roots = find_eta_roots(&p9, 1.2, 10_000);
    ensure(roots.len() == 2, || format!("k=9: {} eta roots", roots.len()))?;
    let (t1, t2) = (roots[0], roots[1]);
    ensure(p9.theta0 < t1 && t1 < t2, || format!("k=9 roots {t1}, {t2}, theta0 {}", p9.theta0))?;
    let at2 = psi(t2, &p9, 1.2);
    ensure(at2 < 1.0 && Oracle::new(&p9).psi(t2, 1.2) < 1.0, || format!("psi(theta2) = {at2}"))?;
    let v9 = certify(&p9, 1.2, 1e-9).map_err(|e| e.to_string())?;
    ensure(v9.verdict == Verdict::Global, || format!("k=9 verdict {:?}", v9.verdict))?;
    let p8 = params_for(2, Shape::K { k: 8 }).unwrap();
    let roots8 = find_eta_roots(&p8, 1.0, 10_000);
    ensure(roots8.len() == 1 && roots8[0] > p8.theta0, || format!("k=8 eta roots {roots8:?}"))?;
    let v8 = certify(&p8, 1.0, 1e-9).map_err(|e| e.to_string())?;
    ensure(v8.verdict == Verdict::Local, || format!("k=8 verdict {:?}", v8.verdict))?;
    let t = within(start, 10)?;
    Ok(format!("k=9 roots ({t1:.6}, {t2:.6}), psi(theta2) = {at2:.6}; k=8 root {:.6}, {t:.2?}", roots8[0]))
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let p = params_for(3, Shape::K { k: 4 }).unwrap();
    for i in 0..=28 {
        let beta = (12 + i) as f64 / 20.0;
        let v = certify(&p, beta, 1e-9).map_err(|e| e.to_string())?;
        ensure(v.verdict != Verdict::Global, || format!("beta = {beta} is Global"))?;
    }
    let sol = solve_lambda1(1.007, 1.25).map_err(|e| e.to_string())?;
    let (l0, _) = sol.eval(1.007);
    ensure(l0 == 0.0, || format!("lambda1(1.007) = {l0}"))?;
    let theta1 = sol.theta1.ok_or("no zero of lambda1")?;
    ensure(1.15 < theta1 && theta1 < 1.25, || format!("theta1 = {theta1}"))?;
    let n = 5000;
    let mut dev = 0.0f64;
    for i in 0..=n {
        let t = 1.007 + (1.25 - 1.007) * i as f64 / n as f64;
        let (v, d) = sol.eval(t);
        dev = dev.max((star_comass_sq(t, v, d) - 1.0).abs());
    }
    ensure(dev <= 1e-8, || format!("star comass deviation {dev}"))?;
    let h = step_halving_check(&sol).map_err(|e| e.to_string())?;
    ensure(h.max_gap() <= 1e-7, || format!("step-halving gap {:?}", h))?;
    let g = glue_lambda1(&sol, GLUE_WIDTH, GLUE_WIDTH).map_err(|e| e.to_string())?;
    let r = &g.report;
    ensure(r.outer_certified, || "psi <= 1 not certified outside the band".into())?;
    ensure(r.max_comass_sq <= 1.0 + 1e-6, || format!("glued comass {}", r.max_comass_sq))?;
    let t = within(start, 30)?;
    Ok(format!(
        "theta1 = {theta1:.7}, star dev {dev:.1e}, halving {:.1e}, glued max {:.10}, {t:.2?}",
        h.max_gap(),
        r.max_comass_sq
    ))
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    for r in 2..=12u32 {
        for s in 2..=12u32 {
            let expected = r >= 4 && s >= 4 && r % 2 == 0 && s % 2 == 0;
            ensure(ambient_parity_check(r, s) == expected, || format!("parity ({r},{s})"))?;
        }
    }
    let mut maxes = Vec::new();
    for (r, s, beta) in [(3u32, 5u32, 1.0), (2, 7, 1.2)] {
        let p = row1(r, s).unwrap();
        let (nl, nr) = default_targets(&p, beta);
        let d = build_endpoint_deformation(&p, beta, nl, nr, 0.2, 0.02).map_err(|e| e.to_string())?;
        ensure(d.report.grid_points >= 100_000, || format!("({r},{s}) grid {}", d.report.grid_points))?;
        let max = d.comass_sq.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        ensure(max <= 1.0 + 1e-6 && d.report.max_comass_sq <= 1.0 + 1e-6, || format!("({r},{s}) max comass {max}"))?;
        maxes.push(max);
    }
    let xs: Vec<f64> = (0..=6).map(|i| 0.1 * 0.5f64.powi(i)).collect();
    for rho in [1.5, 2.0, 3.0, 5.0] {
        let v = vanishing_limit_check(rho, &xs);
        ensure(v.iter().all(|x| *x > 0.0), || format!("rho={rho}: nonpositive {v:?}"))?;
        ensure(v.windows(2).all(|w| w[1] < w[0]), || format!("rho={rho}: not decreasing {v:?}"))?;
    }
    let t = within(start, 60)?;
    Ok(format!("max deformed comass (3,5) {:.12}, (2,7) {:.12}, {t:.2?}", maxes[0], maxes[1]))
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let cases: Vec<MetricParams> = [
        (1u8, Shape::Spheres { r: 4, s: 4 }),
        (1, Shape::Spheres { r: 3, s: 5 }),
        (1, Shape::Spheres { r: 2, s: 7 }),
        (1, Shape::Spheres { r: 5, s: 6 }),
        (2, Shape::K { k: 9 }),
        (3, Shape::K { k: 5 }),
        (4, Shape::K { k: 2 }),
        (5, Shape::Fixed),
        (6, Shape::Fixed),
        (9, Shape::Fixed),
        (10, Shape::Fixed),
    ]
    .into_iter()
    .map(|(row, shape)| params_for(row, shape).unwrap())
    .collect();
    let mut worst = f64::NEG_INFINITY;
    for p in &cases {
        let label = p.label();
        let (_, seed) = default_seed(p).map_err(|e| format!("{label}: {e}"))?;
        let f = build_phi0(p, &seed).map_err(|e| format!("{label}: {e}"))?;
        ensure((f.value_at_theta0 - 1.0).abs() <= 1e-10, || format!("{label}: Phi0(theta0) = {}", f.value_at_theta0))?;
        let (lo, hi) = f.support;
        ensure(lo > 0.0 && hi < p.domain_end(), || format!("{label}: support [{lo}, {hi}]"))?;
        let prof = &f.profile;
        let outside: Vec<usize> = (0..prof.len()).filter(|&i| prof.theta[i] < lo || prof.theta[i] > hi).collect();
        ensure(outside.iter().any(|&i| prof.theta[i] < lo) && outside.iter().any(|&i| prof.theta[i] > hi), || {
            format!("{label}: no samples outside the support")
        })?;
        ensure(outside.iter().all(|&i| prof.value[i] == 0.0 && prof.derivative[i] == 0.0), || {
            format!("{label}: nonzero outside the support")
        })?;
        ensure(f.grid_points >= 100_000 && f.residual_max <= 1e-9, || {
            format!("{label}: residual {} on {} points", f.residual_max, f.grid_points)
        })?;
        // Independent residual at the stored samples against an envelope
        // computed here.
        let (_, pp, q) = p.exponents_f64();
        let alpha = p.alpha_f64();
        let tau = Oracle::new(p).tau;
        let env = |t: f64| {
            if p.is_type_one() {
                t.sin().powf(q)
            } else {
                t.cos().powf(pp) * t.sin().powf(q) / tau
            }
        };
        for i in 0..prof.len() {
            let t = prof.theta[i];
            if t <= 0.0 || t >= p.domain_end() {
                continue;
            }
            let res = prof.value[i].powi(2) + (prof.derivative[i] / alpha).powi(2) - env(t);
            worst = worst.max(res);
            ensure(res <= 1e-9, || format!("{label}: oracle residual {res} at {t}"))?;
        }
        worst = worst.max(f.residual_max);
    }
    let t = within(start, 120)?;
    Ok(format!("{} profiles, max residual {worst:.1e}, {t:.2?}", cases.len()))
}

fn criterion_8() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0x5eed_2024);
    let pool = shapes_rows_1_to_6();
    let tol = 1e-9;
    let mut worst_gap = 0.0f64;
    for case in 0..10 {
        let p = pool[rng.gen_range(0..pool.len())];
        let beta = rng.gen_range(1.0..1.5);
        let o = Oracle::new(&p);
        let a = rng.gen_range(0.05..o.theta0);
        let b = rng.gen_range(o.theta0..FRAC_PI_2 - 0.05);
        let sup = certified_sup(&p, beta, (a, b), tol).map_err(|e| e.to_string())?;
        let n = 1_000_000;
        let h = (b - a) / n as f64;
        let (mut grid_max, mut lip) = (f64::NEG_INFINITY, 0.0f64);
        for i in 0..=n {
            let t = a + h * i as f64;
            grid_max = grid_max.max(o.psi(t, beta));
            if i % 100 == 0 {
                lip = lip.max(o.dpsi(t, beta).abs());
            }
        }
        // Lipschitz bound on the distance from the grid maximum to the true
        // supremum, padded for the coarse derivative sampling.
        let resolution = 2.0 * lip * h;
        let slack = 1e-13 * grid_max;
        ensure(sup.upper + slack >= grid_max, || {
            format!("case {case} {} beta={beta:.4}: certified {} below grid {grid_max}", p.label(), sup.upper)
        })?;
        let gap = sup.upper - grid_max;
        ensure(gap <= tol + resolution, || {
            format!("case {case} {} beta={beta:.4}: gap {gap:.3e} > {:.3e}", p.label(), tol + resolution)
        })?;
        worst_gap = worst_gap.max(gap);
    }
    Ok(format!("10 random cases, max certified - grid = {worst_gap:.2e}"))
}

fn run_cli(dir: &Path, args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_conecalib"))
        .args(["--stable", "--out-dir"])
        .arg(dir)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)))?;
    Ok(out.stdout)
}

fn criterion_9() -> Outcome {
    let commands: [&[&str]; 7] = [
        &["certify", "--row", "1", "--r", "3", "--s", "5", "--json", "--out", "cert.json"],
        &["sweep", "--max", "8", "--csv", "--out", "sweep.csv"],
        &["plot", "psi", "--row", "2", "--k", "9", "--beta", "1.2", "--csv", "psi.csv", "--svg", "psi.svg"],
        &["ode", "lambda1", "--glue", "--csv", "glue.csv", "--report", "glue.json"],
        &["deform", "--row", "1", "--r", "2", "--s", "7", "--beta", "1.2", "--csv", "deform.csv", "--report", "deform.json"],
        &["phi0", "--row", "3", "--k", "5", "--csv", "phi0.csv", "--report", "phi0.json"],
        &["catalog", "list", "--json"],
    ];
    let files = [
        "cert.json", "sweep.csv", "psi.csv", "psi.svg", "glue.csv", "glue.json", "deform.csv", "deform.json",
        "phi0.csv", "phi0.json",
    ];
    let dirs = [tempfile::tempdir().map_err(|e| e.to_string())?, tempfile::tempdir().map_err(|e| e.to_string())?];
    let mut stdouts = [Vec::new(), Vec::new()];
    for (d, out) in dirs.iter().zip(stdouts.iter_mut()) {
        for args in commands {
            out.extend(run_cli(d.path(), args)?);
        }
    }
    ensure(stdouts[0] == stdouts[1], || "stdout differs between runs".into())?;
    let mut bytes = 0;
    for f in files {
        let a = std::fs::read(dirs[0].path().join(f)).map_err(|e| format!("{f}: {e}"))?;
        let b = std::fs::read(dirs[1].path().join(f)).map_err(|e| format!("{f}: {e}"))?;
        ensure(a == b, || format!("{f} differs between runs"))?;
        ensure(!String::from_utf8_lossy(&a).contains("wall_time"), || format!("{f} has wall_time"))?;
        bytes += a.len();
    }
    Ok(format!("{} files ({bytes} bytes) and stdout identical across two runs", files.len()))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("normalization", criterion_1),
        ("row-1 classification sweep", criterion_2),
        ("analytic tests", criterion_3),
        ("two-root and one-root cases", criterion_4),
        ("exponent ODE and gluing", criterion_5),
        ("endpoint deformation", criterion_6),
        ("compactly supported profiles", criterion_7),
        ("certified sup vs brute force", criterion_8),
        ("determinism", criterion_9),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let id = format!("criterion {}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|x| id.contains(x.as_str()) || name.contains(x.as_str())) {
            continue;
        }
        match f() {
            Ok(detail) => println!("PASS {id} ({name}): {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {id} ({name}): {why}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
