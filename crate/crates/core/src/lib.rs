//! Numerical verification of smoothness inequalities for polynomial images
//! of log-concave measures.

pub mod cli;
pub mod constants;
pub mod error;
pub mod measure;
pub mod metrics;
pub mod polynomial;
pub mod pushforward;
pub mod quadrature;
pub mod sampler;
pub mod special;
pub mod verifier;

pub use error::{Error, Result};
pub use measure::{AffineMap, LogConcaveMeasure, Support};
pub use polynomial::Polynomial;
pub use sampler::{SeededStream, Samples};
