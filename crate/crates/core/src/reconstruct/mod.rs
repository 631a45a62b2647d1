//! Variational reconstruction of a hidden Markovian system–environment model
//! from a target process tensor.

mod ansatz;
pub mod bfgs;
mod fit;
mod objective;

pub use ansatz::{AnsatzFile, ReconstructionAnsatz, PSI_NORM_TOL};
pub use fit::{fit, fit_from, fit_restarts, restart_seed, FitConfig, FitReport, StageReport};
pub use objective::{loss, loss_gradient, Gradient, Objective};
