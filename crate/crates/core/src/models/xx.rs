use super::{pauli_x, pauli_y, sigma_minus, sigma_plus};
use crate::channels::{check_cptp, kraus_to_w, lindblad_superoperator, superop_to_kraus, ChannelTensor, LindbladSpec};
use crate::error::{Error, Result};
use crate::tensorops::{matrix_exp, DensityMatrix};
use crate::{CMat, C64};
use serde::{Deserialize, Serialize};

/// Initial system state for the XX-chain experiments.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemPreparation {
    Zero,
    #[default]
    Plus,
    MaximallyMixed,
}

impl SystemPreparation {
    pub fn density(&self) -> DensityMatrix {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            Self::Zero => DensityMatrix::pure(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]).unwrap(),
            Self::Plus => DensityMatrix::pure(&[C64::new(h, 0.0), C64::new(h, 0.0)]).unwrap(),
            Self::MaximallyMixed => DensityMatrix::maximally_mixed(2),
        }
    }
}

impl std::str::FromStr for SystemPreparation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(Self::Zero),
            "plus" => Ok(Self::Plus),
            "maximally_mixed" | "mixed" => Ok(Self::MaximallyMixed),
            other => Err(Error::InvalidArgument(format!("unknown system preparation `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct XxChainParams {
    pub j: f64,
    pub gamma: f64,
    pub n: f64,
    pub delta: f64,
    #[serde(default)]
    pub system: SystemPreparation,
}

impl Default for XxChainParams {
    fn default() -> Self {
        Self { j: 1.0, gamma: 0.0, n: 0.0, delta: 0.3, system: SystemPreparation::default() }
    }
}

impl XxChainParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.n) {
            return Err(Error::InvalidArgument(format!("n must lie in [0, 1], got {}", self.n)));
        }
        if !(self.gamma >= 0.0) {
            return Err(Error::InvalidArgument(format!("Gamma must be >= 0, got {}", self.gamma)));
        }
        if !(self.delta > 0.0) {
            return Err(Error::InvalidArgument(format!("Delta must be > 0, got {}", self.delta)));
        }
        Ok(())
    }

    /// `(1 − n)|0⟩⟨0| + n|1⟩⟨1|`.
    pub fn env_steady_state(&self) -> CMat {
        CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![C64::new(1.0 - self.n, 0.0), C64::new(self.n, 0.0)]))
    }
}

/// `H = J(σx⊗σx + σy⊗σy)` with environment decay `2Γ(1 − n)` through σ₋ and
/// excitation `2Γn` through σ₊.
pub fn xx_chain_lindblad(p: &XxChainParams) -> Result<LindbladSpec> {
    p.validate()?;
    let id = CMat::identity(2, 2);
    let h = (pauli_x().kronecker(&pauli_x()) + pauli_y().kronecker(&pauli_y())) * C64::new(p.j, 0.0);
    Ok(LindbladSpec {
        hamiltonian: h,
        jumps: vec![
            (id.kronecker(&sigma_minus()), 2.0 * p.gamma * (1.0 - p.n)),
            (id.kronecker(&sigma_plus()), 2.0 * p.gamma * p.n),
        ],
    })
}

/// One-step channel `exp(LΔ)` and `ρ0 = ρ0^S ⊗ ρ^E_st`.
pub fn xx_chain_model(p: &XxChainParams) -> Result<(ChannelTensor, DensityMatrix)> {
    let gen = lindblad_superoperator(&xx_chain_lindblad(p)?)?;
    let s = matrix_exp(&gen, p.delta)?;
    let kraus = superop_to_kraus(&s, 2, 2, 1e-9)?;
    let ch = kraus_to_w(&kraus);
    let report = check_cptp(&ch, 1e-9);
    if !report.pass {
        return Err(Error::NotCompletelyPositive(report.cp_min_eigenvalue));
    }
    let rho_e = DensityMatrix::new(p.env_steady_state())?;
    Ok((ch, p.system.density().tensor(&rho_e)))
}
