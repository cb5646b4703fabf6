//! Clifford Kolmogorov-Arnold networks over arbitrary signatures Cl(p,q,r).
//!
//! The crate is organized around a handful of small modules:
//!
//! * [`algebra`] — signatures, Cayley tables and exact multivector arithmetic
//! * [`sobol`] — Owen-scrambled Sobol sequences with embedded direction numbers
//! * [`grid`] — full Cartesian and Sobol RBF center grids
//! * [`network`] — RBF kernels, ClSiLU residuals, batch normalization and the
//!   full model forward/backward pass
//! * [`training`] — Adam, the plateau scheduler / early-stopping protocol,
//!   metrics and k-fold cross-validation
//! * [`data`] — synthetic regression datasets over any supported algebra
//! * [`oracle`] — brute-force reference implementations used by tests and the
//!   `verify` command

pub mod algebra;
pub mod data;
pub mod error;
pub mod grid;
pub mod math;
pub mod network;
pub mod norm;
pub mod oracle;
pub mod sobol;
pub mod training;

pub use algebra::{Algebra, Multivector, Signature};
pub use error::Error;
pub use grid::{Grid, GridKind, GridSpec};
pub use network::{Model, ModelConfig, NormKind, RbfKind};
pub use training::{CrossValResult, FoldResult, TrainConfig};
