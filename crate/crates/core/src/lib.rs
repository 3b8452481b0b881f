//! Certification toolkit for calibrations of homogeneous hypercones.
//!
//! The orbit space of a cohomogeneity-two action is a planar cone; after
//! stretching, a radial potential `f = r^α φ^β` is a calibration exactly
//! when the squared comass `ψ` of `df` stays at most one. The modules here
//! evaluate `ψ`, certify its supremum with interval arithmetic, and build
//! the deformations and ODE solutions that repair the cases where the
//! plain potential fails.

pub mod catalog;
pub mod certify;
pub mod comass;
pub mod deform;
pub mod error;
pub mod interval;
pub mod odecal;
pub mod profile;
pub mod quad;
pub mod rk;

pub use catalog::{list_catalog, params_for, row1, ConeEntry, Family, MetricParams, Shape};
pub use certify::{certified_sup, certify, find_eta_roots, sweep_row1, ComassVerdict, Method, Verdict};
pub use comass::{eta, phi, psi, quadratic_test, sigma_bound, ComassPoint, QuadraticTest};
pub use error::{CatalogError, CertifyError, DeformError, OdeCalError, OdeError};
pub use interval::Interval;
pub use deform::{ambient_parity_check, build_endpoint_deformation, Deformation, DeformReport};
pub use odecal::{build_phi0, glue_lambda1, solve_lambda1, GluedLambda, OdeSolution, Phi0Profile};
