//! Algorithmic stability of first-order optimizers: losses, optimizers,
//! closed-form stability bounds, empirical stability measurement, the
//! two-point lower-bound construction and numerical checks of the matrix
//! inequalities behind the momentum bounds.

pub mod bounds;
pub mod error;
pub mod exec;
pub mod harness;
pub mod lecam;
pub mod losses;
pub mod matrixlemmas;
pub mod optimizers;
pub mod stability;

pub use error::{Error, Result};
pub use exec::Exec;
pub use losses::{DataPoint, Dataset, LossConstants, LossFamily, LossSpec, ParamVector, QuadraticForm};
pub use optimizers::{Method, OptimizerConfig, StepSchedule};
