use crate::error::{Error, Result};
use crate::tensorops::entropy::{Spectrum, CLIP_TOL};
use crate::tensorops::linalg::{eig_hermitian, hermiticity_defect};
use crate::{CMat, C64};

/// Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(CMat);

impl DensityMatrix {
    pub const TOL: f64 = 1e-9;

    pub fn new(m: CMat) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
        }
        let defect = hermiticity_defect(&m);
        if defect > Self::TOL {
            return Err(Error::NotHermitian(defect));
        }
        let tr = m.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > Self::TOL {
            return Err(Error::NotNormalized(tr.re));
        }
        let (vals, _) = eig_hermitian(&m)?;
        if let Some(&min) = vals.last() {
            if min < -Self::TOL {
                return Err(Error::NegativeEigenvalue(min));
            }
        }
        Ok(Self(m))
    }

    /// Pure state `|v><v|` (v is normalized first).
    pub fn pure(v: &[C64]) -> Result<Self> {
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidArgument("zero state vector".into()));
        }
        let n = v.len();
        Ok(Self(CMat::from_fn(n, n, |r, c| v[r] * v[c].conj() / (norm * norm))))
    }

    pub fn maximally_mixed(n: usize) -> Self {
        Self(CMat::identity(n, n) / C64::new(n as f64, 0.0))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.0
    }

    pub fn into_matrix(self) -> CMat {
        self.0
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        DensityMatrix(self.0.kronecker(&other.0))
    }

    pub fn spectrum(&self) -> Result<Spectrum> {
        Spectrum::of_hermitian(&self.0)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        eig_hermitian(&self.0).map(|(v, _)| *v.last().unwrap()).unwrap_or(f64::NAN)
    }
}

/// Partial trace of a `(d*env) x (d*env)` matrix over the environment factor
/// (system is the slow index).
pub fn trace_env(m: &CMat, d: usize, env: usize) -> CMat {
    CMat::from_fn(d, d, |i, j| (0..env).map(|a| m[(i * env + a, j * env + a)]).sum())
}

/// Partial trace over the system factor.
pub fn trace_system(m: &CMat, d: usize, env: usize) -> CMat {
    CMat::from_fn(env, env, |a, b| (0..d).map(|i| m[(i * env + a, i * env + b)]).sum())
}

/// Clips tiny negative eigenvalues and restores unit trace.
pub fn clean_density(m: &CMat) -> Result<DensityMatrix> {
    let (vals, vecs) = eig_hermitian(m)?;
    if let Some(&min) = vals.last() {
        if min < -CLIP_TOL.max(1e-9) {
            return Err(Error::NegativeEigenvalue(min));
        }
    }
    let n = m.nrows();
    let mut out = CMat::zeros(n, n);
    let total: f64 = vals.iter().map(|v| v.max(0.0)).sum();
    for (k, &v) in vals.iter().enumerate() {
        if v <= 0.0 {
            continue;
        }
        let col = vecs.column(k);
        out += col * col.adjoint() * C64::new(v / total, 0.0);
    }
    Ok(DensityMatrix(out))
}
