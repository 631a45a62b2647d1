//! Spectra and entropies. All entropies are in bits (log base 2).

use super::linalg::eig_hermitian;
use crate::error::{Error, Result};
use crate::CMat;

/// Eigenvalues below `-CLIP_TOL` are rejected; those in `[-CLIP_TOL, 0)` are
/// set to zero.
pub const CLIP_TOL: f64 = 1e-12;
pub const SUM_TOL: f64 = 1e-8;

/// Real spectrum sorted in descending order.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    values: Vec<f64>,
}

impl Spectrum {
    pub fn new(mut values: Vec<f64>) -> Self {
        values.sort_by(|a, b| b.total_cmp(a));
        Self { values }
    }

    /// Spectrum of a Hermitian matrix.
    pub fn of_hermitian(m: &CMat) -> Result<Self> {
        let (values, _) = eig_hermitian(m)?;
        Ok(Self { values })
    }

    /// Divides every value by their sum; used when the operator carries an
    /// arbitrary overall scale.
    pub fn normalized(&self) -> Result<Self> {
        let sum: f64 = self.values.iter().sum();
        if !(sum > 0.0) || !sum.is_finite() {
            return Err(Error::NotNormalized(sum));
        }
        Ok(Self { values: self.values.iter().map(|v| v / sum).collect() })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Clipped probabilities: validates the spectrum as a density-matrix
    /// spectrum and renormalizes away the sub-tolerance drift.
    fn probabilities(&self) -> Result<Vec<f64>> {
        if let Some(&min) = self.values.last() {
            if min < -CLIP_TOL {
                return Err(Error::NegativeEigenvalue(min));
            }
        }
        let clipped: Vec<f64> = self.values.iter().map(|&v| v.clamp(0.0, 1.0)).collect();
        let sum: f64 = clipped.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::NotNormalized(sum));
        }
        Ok(clipped.into_iter().map(|v| v / sum).collect())
    }
}

pub fn von_neumann_entropy(s: &Spectrum) -> Result<f64> {
    let p = s.probabilities()?;
    let h: f64 = p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.log2()).sum();
    Ok(h.max(0.0))
}

pub fn renyi_entropy(s: &Spectrum, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) || alpha == 1.0 || !alpha.is_finite() {
        return Err(Error::InvalidArgument(format!("Renyi order must be positive and != 1, got {alpha}")));
    }
    let p = s.probabilities()?;
    let moment: f64 = p.iter().filter(|&&x| x > 0.0).map(|&x| x.powf(alpha)).sum();
    Ok((moment.log2() / (1.0 - alpha)).max(0.0))
}

/// Entropy of order `alpha`; `None` selects von Neumann.
pub fn entropy(s: &Spectrum, alpha: Option<f64>) -> Result<f64> {
    match alpha {
        None => von_neumann_entropy(s),
        Some(a) => renyi_entropy(s, a),
    }
}
