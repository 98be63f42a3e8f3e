//! Gaussian-process emulation of step-discontinuous functions.

pub mod benchmark;
pub mod design;
pub mod domain;
pub mod error;
pub mod gp;
pub mod hyperopt;
pub mod kernels;
#[doc(hidden)]
pub mod testing;

pub use benchmark::{rmse, run_experiment, summarize, ExperimentConfig, ExperimentResult, Method, TestFunction};
pub use design::{maximin_lhs, uniform_test_set, Design, DesignSpec};
pub use domain::Domain;
pub use error::{GpError, Result};
pub use gp::{fit, FittedGP, Prediction, TrainingSet};
pub use hyperopt::{log_likelihood, maximize_likelihood, MLProblem, MLResult};
pub use kernels::Kernel;
