//! The thirteen cohomogeneity-two families and the orbit-space metrics
//! they induce.
//!
//! Every orbit space is a planar cone of angle `A` carrying the metric
//! `V²(dx² + dy²)`. Rows 1–6 (type II) are stretched to a quarter plane with
//! metric `r^l c^p s^q (r² dθ² + dr²)`, where `c = cos θ` and `s = sin θ`.
//! Rows 7–13 (type I) have `V² ∝ Im{(x+iy)^p}^q` and stretch to a half plane
//! with metric `r^(2α−2) s^q (r² dθ² + dr²)`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::error::CatalogError;

/// Which of the two orbit-space normal forms a row reduces to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    /// Rows 1–6: stretched to angle π/2, metric `r^l c^p s^q`.
    TypeIIStretchable,
    /// Rows 7–13: `V² ∝ Im{(x+iy)^p}^q`, stretched to angle π.
    TypeIIm,
}

/// Exponent data of the squared volume function `V²` (up to a constant).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VolumeDescriptor {
    /// `x^(2r−2) y^(2s−2)`.
    SphereProduct,
    /// `(xy)^(xy_slope·k + xy_offset) (x² − y²)^diff_power`.
    XyDiff {
        xy_slope: i64,
        xy_offset: i64,
        diff_power: i64,
    },
    /// `(xy)^xy_power Im{(x+iy)^im_degree}^im_power`.
    XyIm {
        xy_power: i64,
        im_degree: i64,
        im_power: i64,
    },
    /// `Im{(x+iy)^degree}^power`.
    Im { degree: i64, power: i64 },
}

/// One row of the classification table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConeEntry {
    pub row_id: u8,
    pub group_label: &'static str,
    pub link_label: &'static str,
    /// Cone angle `A` as a rational multiple of π.
    #[serde(with = "rational_serde")]
    pub cone_angle: Rational64,
    pub family: Family,
    pub volume: VolumeDescriptor,
    /// Whether the default area-minimizing sweeps include this row.
    pub area_minimizing: bool,
    /// Alternate spelling of the group label used elsewhere in the literature.
    pub group_alias: Option<&'static str>,
}

impl ConeEntry {
    pub fn angle_radians(&self) -> f64 {
        PI * (*self.cone_angle.numer() as f64) / (*self.cone_angle.denom() as f64)
    }

    /// The family parameter this row needs, if any.
    pub fn shape_kind(&self) -> ShapeKind {
        match self.row_id {
            1 => ShapeKind::RS,
            2..=4 => ShapeKind::K,
            _ => ShapeKind::None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapeKind {
    None,
    RS,
    K,
}

/// Family-specific shape parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    /// Rows 5–13 have no free parameter.
    Fixed,
    /// Row 1: `S^(r−1) × S^(s−1)`.
    Spheres { r: u32, s: u32 },
    /// Rows 2–4.
    K { k: u32 },
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shape::Fixed => write!(f, "-"),
            Shape::Spheres { r, s } => write!(f, "r={r},s={s}"),
            Shape::K { k } => write!(f, "k={k}"),
        }
    }
}

const fn q(n: i64, d: i64) -> Rational64 {
    Rational64::new_raw(n, d)
}

static TABLE: [ConeEntry; 13] = [
    ConeEntry {
        row_id: 1,
        group_label: "SO(r)xSO(s)",
        link_label: "S^(r-1)xS^(s-1)",
        cone_angle: q(1, 2),
        family: Family::TypeIIStretchable,
        volume: VolumeDescriptor::SphereProduct,
        area_minimizing: true,
        group_alias: None,
    },
    ConeEntry {
        row_id: 2,
        group_label: "SO(2)xSO(k)",
        link_label: "SO(2)xSO(k)/Z2xSO(k-2)",
        cone_angle: q(1, 4),
        family: Family::TypeIIStretchable,
        volume: VolumeDescriptor::XyDiff { xy_slope: 2, xy_offset: -4, diff_power: 2 },
        area_minimizing: true,
        group_alias: None,
    },
    ConeEntry {
        row_id: 3,
        group_label: "SU(2)xSU(k)",
        link_label: "SU(2)xSU(k)/T1xSU(k-2)",
        cone_angle: q(1, 4),
        family: Family::TypeIIStretchable,
        volume: VolumeDescriptor::XyDiff { xy_slope: 4, xy_offset: -6, diff_power: 4 },
        area_minimizing: true,
        group_alias: None,
    },
    ConeEntry {
        row_id: 4,
        group_label: "Sp(2)xSp(k)",
        link_label: "Sp(2)xSp(k)/Sp(1)^2xSp(k-2)",
        cone_angle: q(1, 4),
        family: Family::TypeIIStretchable,
        volume: VolumeDescriptor::XyDiff { xy_slope: 8, xy_offset: -10, diff_power: 8 },
        area_minimizing: true,
        group_alias: None,
    },
    ConeEntry {
        row_id: 5,
        group_label: "U(5)",
        link_label: "U(5)/SU(2)xSU(2)xT1",
        cone_angle: q(1, 4),
        family: Family::TypeIIStretchable,
        volume: VolumeDescriptor::XyIm { xy_power: 2, im_degree: 4, im_power: 8 },
        area_minimizing: true,
        group_alias: Some("SU(5)"),
    },
    ConeEntry {
        row_id: 6,
        group_label: "U(1)·Spin(10)",
        link_label: "U(1)·Spin(10)/T1·SU(4)",
        cone_angle: q(1, 4),
        family: Family::TypeIIStretchable,
        volume: VolumeDescriptor::XyIm { xy_power: 6, im_degree: 4, im_power: 12 },
        area_minimizing: true,
        group_alias: None,
    },
    ConeEntry {
        row_id: 7,
        group_label: "SO(3)",
        link_label: "SO(3)/Z2+Z2",
        cone_angle: q(1, 3),
        family: Family::TypeIIm,
        volume: VolumeDescriptor::Im { degree: 3, power: 2 },
        area_minimizing: false,
        group_alias: None,
    },
    ConeEntry {
        row_id: 8,
        group_label: "SU(3)",
        link_label: "SU(3)/T2",
        cone_angle: q(1, 3),
        family: Family::TypeIIm,
        volume: VolumeDescriptor::Im { degree: 3, power: 4 },
        area_minimizing: false,
        group_alias: None,
    },
    ConeEntry {
        row_id: 9,
        group_label: "Sp(3)",
        link_label: "Sp(3)/Sp(1)^3",
        cone_angle: q(1, 3),
        family: Family::TypeIIm,
        volume: VolumeDescriptor::Im { degree: 3, power: 8 },
        area_minimizing: true,
        group_alias: None,
    },
    ConeEntry {
        row_id: 10,
        group_label: "F4",
        link_label: "F4/Spin(8)",
        cone_angle: q(1, 3),
        family: Family::TypeIIm,
        volume: VolumeDescriptor::Im { degree: 3, power: 16 },
        area_minimizing: true,
        group_alias: None,
    },
    ConeEntry {
        row_id: 11,
        group_label: "Sp(2)",
        link_label: "Sp(2)/T2",
        cone_angle: q(1, 4),
        family: Family::TypeIIm,
        volume: VolumeDescriptor::Im { degree: 4, power: 4 },
        area_minimizing: false,
        group_alias: None,
    },
    ConeEntry {
        row_id: 12,
        group_label: "G2",
        link_label: "G2/T2",
        cone_angle: q(1, 6),
        family: Family::TypeIIm,
        volume: VolumeDescriptor::Im { degree: 6, power: 4 },
        area_minimizing: false,
        group_alias: None,
    },
    ConeEntry {
        row_id: 13,
        group_label: "SO(4)",
        link_label: "SO(4)/Z2+Z2",
        cone_angle: q(1, 6),
        family: Family::TypeIIm,
        volume: VolumeDescriptor::Im { degree: 6, power: 2 },
        area_minimizing: false,
        group_alias: None,
    },
];

/// All thirteen rows, in table order.
pub fn list_catalog() -> &'static [ConeEntry] {
    &TABLE
}

pub fn entry(row: u8) -> Result<&'static ConeEntry, CatalogError> {
    TABLE
        .iter()
        .find(|e| e.row_id == row)
        .ok_or(CatalogError::UnknownRow(row))
}

/// Orbit-space metric data consumed by every formula in the crate.
///
/// The exponents are exact rationals. `theta0` and `tau` are derived floats.
/// For type I rows `p` is the degree of `Im{(x+iy)^p}` and does not enter
/// the comass formulas as a cosine exponent; see [`MetricParams::cos_exp`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricParams {
    pub row: u8,
    pub shape: Shape,
    pub family: Family,
    #[serde(with = "rational_serde")]
    pub l: Rational64,
    #[serde(with = "rational_serde")]
    pub p: Rational64,
    #[serde(with = "rational_serde")]
    pub q: Rational64,
    #[serde(with = "rational_serde")]
    pub alpha: Rational64,
    pub theta0: f64,
    pub tau: f64,
}

impl MetricParams {
    /// Exponent of `cos θ` in the envelope; zero for type I rows.
    pub fn cos_exp(&self) -> f64 {
        match self.family {
            Family::TypeIIStretchable => to_f64(self.p),
            Family::TypeIIm => 0.0,
        }
    }

    pub fn cos_exp_exact(&self) -> Rational64 {
        match self.family {
            Family::TypeIIStretchable => self.p,
            Family::TypeIIm => Rational64::from_integer(0),
        }
    }

    pub fn sin_exp(&self) -> f64 {
        to_f64(self.q)
    }

    /// `(l, p, q)` as floats.
    pub fn exponents_f64(&self) -> (f64, f64, f64) {
        (to_f64(self.l), to_f64(self.p), to_f64(self.q))
    }

    pub fn alpha_f64(&self) -> f64 {
        to_f64(self.alpha)
    }

    /// Upper end of the angular domain: π/2 (type II) or π (type I).
    pub fn domain_end(&self) -> f64 {
        match self.family {
            Family::TypeIIStretchable => FRAC_PI_2,
            Family::TypeIIm => PI,
        }
    }

    pub fn domain(&self) -> (f64, f64) {
        (0.0, self.domain_end())
    }

    pub fn is_type_one(&self) -> bool {
        self.family == Family::TypeIIm
    }

    /// `(r, s)` when this is a row-1 instance.
    pub fn spheres(&self) -> Option<(u32, u32)> {
        match self.shape {
            Shape::Spheres { r, s } if self.row == 1 => Some((r, s)),
            _ => None,
        }
    }

    pub fn label(&self) -> String {
        format!("row {} ({})", self.row, self.shape)
    }
}

pub(crate) fn to_f64(x: Rational64) -> f64 {
    *x.numer() as f64 / *x.denom() as f64
}

/// `τ = (p/(p+q))^(p/2) (q/(p+q))^(q/2)`, which equals `cos^p θ₀ sin^q θ₀`.
pub fn tau_closed_form(p: f64, q: f64) -> f64 {
    let sum = p + q;
    (0.5 * p * (p / sum).ln() + 0.5 * q * (q / sum).ln()).exp()
}

/// Derive the stretched orbit-space metric for a row and its shape.
pub fn derive_params(entry: &ConeEntry, shape: Shape) -> Result<MetricParams, CatalogError> {
    let row = entry.row_id;
    let int = Rational64::from_integer;
    let (p, q, l) = match (entry.volume, shape) {
        (VolumeDescriptor::SphereProduct, Shape::Spheres { r, s }) => {
            if r < 2 || s < 2 {
                return Err(CatalogError::ShapeOutOfRange { row, constraint: "r,s >= 2" });
            }
            let p = 2 * r as i64 - 2;
            let q = 2 * s as i64 - 2;
            (int(p), int(q), int(p + q))
        }
        (VolumeDescriptor::XyDiff { xy_slope, xy_offset, diff_power }, Shape::K { k }) => {
            let min_k = if row == 2 { 3 } else { 2 };
            if k < min_k {
                let constraint = if row == 2 { "k >= 3" } else { "k >= 2" };
                return Err(CatalogError::ShapeOutOfRange { row, constraint });
            }
            // re^{iθ} = z²: xy ↦ s, x² − y² ↦ c, and |dz|² = |dw|²/(4r).
            let sq = xy_slope * k as i64 + xy_offset;
            (int(diff_power), int(sq), int(sq + diff_power - 1))
        }
        (VolumeDescriptor::XyIm { xy_power, im_degree, im_power }, Shape::Fixed) => {
            debug_assert_eq!(im_degree, 4);
            // Im{z⁴} = Im{w²} ∝ r² s c.
            let sq = xy_power + im_power;
            (int(im_power), int(sq), int(xy_power + 2 * im_power - 1))
        }
        (VolumeDescriptor::Im { degree, power }, Shape::Fixed) => {
            let p = int(degree);
            let q = int(power);
            // 2α − 2 = q − (2p − 2)/p
            let l = q - (int(2) * p - int(2)) / p;
            (p, q, l)
        }
        (_, shape) => {
            return Err(CatalogError::ShapeMismatch { row, shape: shape.to_string() });
        }
    };
    let alpha = (l + int(2)) / int(2);
    let (theta0, tau) = match entry.family {
        Family::TypeIIStretchable => {
            let (pf, qf) = (to_f64(p), to_f64(q));
            ((qf / pf).sqrt().atan(), tau_closed_form(pf, qf))
        }
        Family::TypeIIm => (FRAC_PI_2, 1.0),
    };
    Ok(MetricParams { row, shape, family: entry.family, l, p, q, alpha, theta0, tau })
}

/// Convenience wrapper: look up `row` and derive its metric.
pub fn params_for(row: u8, shape: Shape) -> Result<MetricParams, CatalogError> {
    derive_params(entry(row)?, shape)
}

pub fn row1(r: u32, s: u32) -> Result<MetricParams, CatalogError> {
    params_for(1, Shape::Spheres { r, s })
}

pub(crate) mod rational_serde {
    use num_rational::Rational64;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Rational64, ser: S) -> Result<S::Ok, S::Error> {
        if *x.denom() == 1 {
            ser.serialize_str(&x.numer().to_string())
        } else {
            ser.serialize_str(&format!("{}/{}", x.numer(), x.denom()))
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Rational64, D::Error> {
        let s = String::deserialize(de)?;
        s.parse::<Rational64>().map_err(D::Error::custom)
    }
}
