//! Concrete physical models: the dissipative two-spin XX chain, the
//! random-unitary dephasing channel and the unitary dephasing model with a
//! continuous environment.

mod uqdm;
mod xx;

pub use uqdm::{uqdm_env_entropy, uqdm_memory_series, uqdm_model, UqdmModel, UqdmParams};
pub use xx::{xx_chain_lindblad, xx_chain_model, SystemPreparation, XxChainParams};

use crate::channels::{lindblad_superoperator, ChannelTensor, LindbladSpec};
use crate::error::{Error, Result};
use crate::tensorops::matrix_exp;
use crate::{CMat, C64};

pub fn pauli_x() -> CMat {
    CMat::from_row_slice(2, 2, &[C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0)])
}

pub fn pauli_y() -> CMat {
    CMat::from_row_slice(2, 2, &[C64::new(0.0, 0.0), C64::new(0.0, -1.0), C64::new(0.0, 1.0), C64::new(0.0, 0.0)])
}

pub fn pauli_z() -> CMat {
    CMat::from_row_slice(2, 2, &[C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(-1.0, 0.0)])
}

/// `|0⟩⟨1|`, taking the excited state `|1⟩` to `|0⟩`.
pub fn sigma_minus() -> CMat {
    CMat::from_row_slice(2, 2, &[C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)])
}

pub fn sigma_plus() -> CMat {
    sigma_minus().adjoint()
}

/// Random-unitary dephasing `dρ/dt = γ(σz ρ σz − ρ)` over one step, embedded
/// with a trivial environment (`D = 1`).
pub fn ruqdm_channel(gamma: f64, delta: f64) -> Result<ChannelTensor> {
    if !(gamma >= 0.0) || !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!("need gamma >= 0 and delta > 0, got ({gamma}, {delta})")));
    }
    let spec = LindbladSpec { hamiltonian: CMat::zeros(2, 2), jumps: vec![(pauli_z(), gamma)] };
    let gen = lindblad_superoperator(&spec)?;
    ChannelTensor::from_superop(matrix_exp(&gen, delta)?, 2, 1)
}
