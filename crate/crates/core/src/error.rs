use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CatalogError {
    #[error("unknown catalog row {0} (rows are 1..=13)")]
    UnknownRow(u8),
    #[error("row {row}: shape violates table constraint {constraint}")]
    ShapeOutOfRange { row: u8, constraint: &'static str },
    #[error("row {row} does not take shape parameters {shape}")]
    ShapeMismatch { row: u8, shape: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertifyError {
    #[error("unbounded comass: psi diverges at the endpoint theta = {endpoint}")]
    UnboundedComass { endpoint: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("non-finite right-hand side at t = {t}")]
    NonFinite { t: f64 },
    #[error("step budget of {0} steps exhausted")]
    TooManySteps(usize),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DeformError {
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("no admissible (x0, eps) found after {attempts} shrink attempts (last max residual {last_max})")]
    NoAdmissibleWindow { attempts: usize, last_max: f64 },
    #[error(transparent)]
    Certify(#[from] CertifyError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeCalError {
    #[error("comass budget exhausted at theta = {theta}")]
    BudgetExhausted { theta: f64 },
    #[error("glue window infeasible after {attempts} retries (max comass {max_comass})")]
    GlueInfeasible { attempts: usize, max_comass: f64 },
    #[error("integral curve failed to reach zero before the domain endpoint after {attempts} retries")]
    CurveDidNotClose { attempts: usize },
    #[error("no seed exponent beta certifies the calibration inequality for {0}")]
    NoSeed(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error(transparent)]
    Certify(#[from] CertifyError),
}
