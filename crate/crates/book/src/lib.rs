//! Guide chapters, compiled as doc-tests.

#[doc = include_str!("../../../book/src/overview.md")]
pub mod overview {}
#[doc = include_str!("../../../book/src/catalog.md")]
pub mod catalog {}
#[doc = include_str!("../../../book/src/comass.md")]
pub mod comass {}
#[doc = include_str!("../../../book/src/certify.md")]
pub mod certify {}
#[doc = include_str!("../../../book/src/deform.md")]
pub mod deform {}
#[doc = include_str!("../../../book/src/ode.md")]
pub mod ode {}
#[doc = include_str!("../../../book/src/phi0.md")]
pub mod phi0 {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
