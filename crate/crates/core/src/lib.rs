//! LP-relaxation detectors for two-dimensional intersymbol-interference
//! channels.
//!
//! A binary word on an `n × n` torus is sent through a five-tap channel with
//! additive Gaussian noise. Detection is posed as an Ising-type quadratic
//! minimization and relaxed to belief LPs of increasing strength: the
//! pairwise LP, the block LP with one five-site clique per site, and the
//! pairwise LP tightened with triangles along frustrated cycles.

pub mod detect;
pub mod error;
pub mod frustration;
pub mod harness;
pub mod ip_oracle;
pub mod lp_build;
pub mod lp_solve;
pub mod model;
pub mod sparse;

pub use error::{Error, Result};
