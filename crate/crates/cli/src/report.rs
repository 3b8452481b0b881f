//! Serializable reports, run configuration and file emission.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use conecalib::catalog::{entry, MetricParams, Shape};
use conecalib::certify::{ComassVerdict, Method, Verdict, DEFAULT_TOL};
use conecalib::odecal::{GLUE_SLACK, ODE_TOL};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SCHEMA: u32 = 1;
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeId {
    pub row: u8,
    pub group: String,
    pub shape: Shape,
}

impl ConeId {
    pub fn of(params: &MetricParams) -> Self {
        let group = entry(params.row).map(|e| e.group_label.to_string()).unwrap_or_default();
        Self { row: params.row, group, shape: params.shape }
    }
}

/// Floating-point echo of the metric data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamsEcho {
    pub l: f64,
    pub p: f64,
    pub q: f64,
    pub alpha: f64,
    pub theta0: f64,
    pub tau: f64,
}

impl ParamsEcho {
    pub fn of(params: &MetricParams) -> Self {
        let (l, p, q) = params.exponents_f64();
        Self { l, p, q, alpha: params.alpha_f64(), theta0: params.theta0, tau: params.tau }
    }
}

/// One certification run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertReport {
    pub schema: u32,
    pub cone: ConeId,
    pub params: ParamsEcho,
    pub beta: f64,
    pub verdict: Verdict,
    pub sup_psi: Option<f64>,
    pub sup_location: f64,
    pub local_interval: Option<(f64, f64)>,
    pub eta_roots: Vec<f64>,
    pub method: Method,
    pub tol: f64,
    pub version: String,
    /// Seconds; omitted in stable mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time: Option<f64>,
}

impl CertReport {
    pub fn new(params: &MetricParams, v: &ComassVerdict, wall_time: Option<f64>) -> Self {
        Self {
            schema: SCHEMA,
            cone: ConeId::of(params),
            params: ParamsEcho::of(params),
            beta: v.beta,
            verdict: v.verdict,
            sup_psi: v.sup_psi,
            sup_location: v.sup_location,
            local_interval: v.local_interval,
            eta_roots: v.eta_roots.clone(),
            method: v.method,
            tol: v.tol,
            version: VERSION.to_string(),
            wall_time,
        }
    }
}

/// Tolerances, grid sizes and output settings shared by all commands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub sup_tol: f64,
    pub ode_tol: f64,
    pub glue_tol: f64,
    /// Sample count for CSV traces.
    pub samples: usize,
    pub betas: Vec<f64>,
    pub out_dir: Option<PathBuf>,
    pub stable: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            sup_tol: DEFAULT_TOL,
            ode_tol: ODE_TOL,
            glue_tol: GLUE_SLACK,
            samples: 2001,
            betas: vec![1.0, 1.2],
            out_dir: None,
            stable: false,
        }
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64, CliError> {
    v.trim().parse().map_err(|_| CliError::Config(format!("{key}: not a number: {v:?}")))
}

pub fn parse_betas(v: &str) -> Result<Vec<f64>, CliError> {
    v.split(',').map(|b| parse_f64("betas", b)).collect()
}

impl RunConfig {
    /// Parse `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<BTreeMap<String, String>, CliError> {
        let mut out = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", i + 1)))?;
            out.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(out)
    }

    pub fn apply(&mut self, pairs: &BTreeMap<String, String>) -> Result<(), CliError> {
        for (k, v) in pairs {
            match k.as_str() {
                "sup_tol" => self.sup_tol = parse_f64(k, v)?,
                "ode_tol" => self.ode_tol = parse_f64(k, v)?,
                "glue_tol" => self.glue_tol = parse_f64(k, v)?,
                "samples" => {
                    self.samples = v.parse().map_err(|_| CliError::Config(format!("samples: {v:?}")))?
                }
                "betas" => self.betas = parse_betas(v)?,
                "out_dir" => self.out_dir = Some(PathBuf::from(v)),
                "stable" => {
                    self.stable = v.parse().map_err(|_| CliError::Config(format!("stable: {v:?}")))?
                }
                _ => return Err(CliError::Config(format!("unknown key {k:?}"))),
            }
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        for (name, t) in [("sup_tol", self.sup_tol), ("ode_tol", self.ode_tol), ("glue_tol", self.glue_tol)] {
            if t.is_nan() || t <= 0.0 {
                return Err(CliError::Config(format!("{name} must be positive, got {t}")));
            }
        }
        if self.samples < 1000 {
            return Err(CliError::Config(format!("samples must be at least 1000, got {}", self.samples)));
        }
        if self.betas.is_empty() || self.betas.iter().any(|b| b.is_nan() || *b <= 0.5) {
            return Err(CliError::Config("betas must be a nonempty list of values above 1/2".into()));
        }
        Ok(())
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        match &self.out_dir {
            Some(dir) if path.is_relative() => dir.join(path),
            _ => path.to_path_buf(),
        }
    }
}

/// Full-precision decimal: 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Comma-separated table with a header row and LF line endings.
pub fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>, CliError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.into_error()))
}

pub fn numeric_csv(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<Vec<u8>, CliError> {
    csv_bytes(header, rows.into_iter().map(|r| r.into_iter().map(num).collect()))
}

pub fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}

/// Write via a temporary file in the target directory and rename it into
/// place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .map_err(|e| CliError::Output(format!("{}: {e}", dir.display())))?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file().set_permissions(std::fs::Permissions::from_mode(0o644))?;
    }
    tmp.persist(path).map_err(|e| CliError::Output(format!("{}: {}", path.display(), e.error)))?;
    Ok(())
}

/// Minimal line chart: one polyline, axes, and a dashed reference line at
/// `y = reference`.
pub fn svg_chart(points: &[(f64, f64)], reference: f64, title: &str, x_label: &str, y_label: &str) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const M: f64 = 50.0;
    let finite: Vec<(f64, f64)> = points.iter().copied().filter(|(x, y)| x.is_finite() && y.is_finite()).collect();
    let x_min = finite.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let x_max = finite.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let y_top = finite.iter().map(|p| p.1).fold(reference, f64::max).min(3.0 * reference.abs().max(1.0)) * 1.05;
    let sx = |x: f64| M + (x - x_min) / (x_max - x_min) * (W - 2.0 * M);
    let sy = |y: f64| H - M - (y.clamp(0.0, y_top) / y_top) * (H - 2.0 * M);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<path d="M{M} {M} V{b} H{r}" fill="none" stroke="black"/>"#,
        b = H - M,
        r = W - M
    );
    for i in 0..=4 {
        let x = x_min + (x_max - x_min) * i as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="11">{x:.3}</text>"#,
            sx(x),
            H - M + 16.0
        );
        let y = y_top * i as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-size="11">{y:.3}</text>"#,
            M - 6.0,
            sy(y) + 4.0
        );
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{}</text>"#, W / 2.0, H - 12.0, escape(x_label));
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" font-size="12" transform="rotate(-90 14 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(y_label)
    );
    let _ = writeln!(
        s,
        r##"<line x1="{M}" y1="{y:.2}" x2="{r}" y2="{y:.2}" stroke="#999" stroke-dasharray="6 4"/>"##,
        y = sy(reference),
        r = W - M
    );
    let mut path = String::new();
    for (i, &(x, y)) in finite.iter().enumerate() {
        let _ = write!(path, "{}{:.2},{:.2}", if i == 0 { "" } else { " " }, sx(x), sy(y));
    }
    let _ = writeln!(s, r##"<polyline points="{path}" fill="none" stroke="#1f5fbf" stroke-width="1.5"/>"##);
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use conecalib::catalog::row1;
    use conecalib::certify::certify;

    #[test]
    fn report_round_trip() {
        let p = row1(2, 6).unwrap();
        let v = certify(&p, 1.0, 1e-9).unwrap();
        let r = CertReport::new(&p, &v, Some(0.25));
        let text = serde_json::to_string(&r).unwrap();
        let back: CertReport = serde_json::from_str(&text).unwrap();
        assert_eq!(r, back);
        let stable = CertReport { wall_time: None, ..r };
        let text = serde_json::to_string(&stable).unwrap();
        assert!(!text.contains("wall_time"));
        assert!(text.contains("\"schema\":1"));
        assert_eq!(serde_json::from_str::<CertReport>(&text).unwrap(), stable);
    }

    #[test]
    fn config_merge() {
        let mut c = RunConfig::default();
        let pairs = RunConfig::parse("# comment\nsup_tol = 1e-8\nbetas = 1, 1.1, 1.2\n\nsamples=5000\n").unwrap();
        c.apply(&pairs).unwrap();
        assert_eq!(c.sup_tol, 1e-8);
        assert_eq!(c.betas, vec![1.0, 1.1, 1.2]);
        assert_eq!(c.samples, 5000);
        assert!(RunConfig::default().apply(&RunConfig::parse("samples = 10").unwrap()).is_err());
        assert!(RunConfig::default().apply(&RunConfig::parse("bogus = 1").unwrap()).is_err());
        assert!(RunConfig::parse("no equals sign").is_err());
    }

    #[test]
    fn csv_format() {
        let b = numeric_csv(&["x", "y"], vec![vec![0.1, 1.0 / 3.0]]).unwrap();
        let s = String::from_utf8(b).unwrap();
        assert_eq!(s, "x,y\n1.0000000000000001e-1,3.3333333333333331e-1\n");
        let back: f64 = s.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(back, 1.0 / 3.0);
    }

    #[test]
    fn svg_has_reference_line() {
        let pts: Vec<(f64, f64)> = (0..50).map(|i| (i as f64 * 0.03, (i as f64 * 0.03).sin())).collect();
        let s = svg_chart(&pts, 1.0, "sine", "theta", "psi");
        assert!(s.starts_with("<svg") && s.ends_with("</svg>\n"));
        assert!(s.contains("stroke-dasharray") && s.contains("<polyline"));
    }
}
