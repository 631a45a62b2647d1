use crate::channels::{ChannelTensor, KrausChannel};
use crate::error::{Error, Result};
use crate::io::{from_pair, to_pair, Pair};
use crate::process_tensor::ProcessTensor;
use crate::tensorops::random::complex_gaussian;
use crate::{CMat, C64};
use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

pub const PSI_NORM_TOL: f64 = 1e-10;

/// A single site tensor `Ā_s[(o, β), (i, α)]`, `s < R`, shared by every
/// step, plus a pure initial state `ψ` on system ⊗ environment.
#[derive(Clone, Debug, PartialEq)]
pub struct ReconstructionAnsatz {
    d: usize,
    env_dim: usize,
    a_bar: Vec<CMat>,
    psi0: DVector<C64>,
}

impl ReconstructionAnsatz {
    pub fn new(a_bar: Vec<CMat>, psi0: DVector<C64>, d: usize, env_dim: usize) -> Result<Self> {
        let n = d * env_dim;
        if a_bar.is_empty() || a_bar.len() > n * n {
            return Err(Error::InvalidArgument(format!("rank must lie in 1..={}, got {}", n * n, a_bar.len())));
        }
        if a_bar.iter().any(|a| a.nrows() != n || a.ncols() != n) || psi0.len() != n {
            return Err(Error::DimensionMismatch(format!("ansatz blocks must be {n}x{n} with a length-{n} state")));
        }
        let norm = psi0.norm();
        if (norm - 1.0).abs() > PSI_NORM_TOL {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self { d, env_dim, a_bar, psi0 })
    }

    /// Complex Gaussian blocks scaled so that `tr Σ Ā†Ā = dD`, the value for
    /// a trace-preserving map, and a uniformly random unit state.
    pub fn random<R: Rng + ?Sized>(d: usize, env_dim: usize, rank: usize, rng: &mut R) -> Self {
        let n = d * env_dim;
        let mut a_bar: Vec<CMat> = (0..rank).map(|_| CMat::from_fn(n, n, |_, _| complex_gaussian(rng))).collect();
        let total: f64 = a_bar.iter().map(|a| a.norm_squared()).sum();
        let scale = C64::new((n as f64 / total).sqrt(), 0.0);
        a_bar.iter_mut().for_each(|a| *a *= scale);
        let psi = DVector::from_fn(n, |_, _| complex_gaussian(rng));
        let psi0 = &psi / C64::new(psi.norm(), 0.0);
        Self { d, env_dim, a_bar, psi0 }
    }

    /// Embeds a known channel and initial state; missing Kraus slots are
    /// zero-padded up to `rank`.
    pub fn from_kraus(ch: &KrausChannel, psi0: DVector<C64>, rank: usize) -> Result<Self> {
        let n = ch.d() * ch.env_dim();
        if ch.rank() > rank {
            return Err(Error::InvalidArgument(format!("channel has Kraus rank {} > {rank}", ch.rank())));
        }
        let mut a_bar = ch.ops().to_vec();
        a_bar.resize(rank, CMat::zeros(n, n));
        Self::new(a_bar, psi0, ch.d(), ch.env_dim())
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn env_dim(&self) -> usize {
        self.env_dim
    }

    pub fn rank(&self) -> usize {
        self.a_bar.len()
    }

    pub fn n(&self) -> usize {
        self.d * self.env_dim
    }

    pub fn a_bar(&self) -> &[CMat] {
        &self.a_bar
    }

    pub fn psi0(&self) -> &DVector<C64> {
        &self.psi0
    }

    /// `W̄ = Σ_s Ā_s ⊗ conj(Ā_s)`.
    pub fn channel(&self) -> ChannelTensor {
        let n = self.n();
        let mut s = CMat::zeros(n * n, n * n);
        for a in &self.a_bar {
            s += a.kronecker(&a.map(|z| z.conj()));
        }
        ChannelTensor::from_superop(s, self.d, self.env_dim).expect("consistent ansatz shape")
    }

    pub fn rho0(&self) -> CMat {
        &self.psi0 * self.psi0.adjoint()
    }

    /// `Ῡ_{k:0}`; normalization of `W̄` is not enforced.
    pub fn predict(&self, k: usize) -> Result<ProcessTensor> {
        if k == 0 {
            return Err(Error::InvalidArgument("predict needs k >= 1".into()));
        }
        ProcessTensor::from_parts(self.rho0(), vec![self.channel(); k])
    }

    /// `max |Σ_s Ā_s†Ā_s − I|`, the entrywise deviation from trace
    /// preservation.
    pub fn normalization_residual(&self) -> f64 {
        let n = self.n();
        let mut q = -CMat::identity(n, n);
        for a in &self.a_bar {
            q += a.adjoint() * a;
        }
        q.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Multiplies every block by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let f = C64::new(factor, 0.0);
        Self { a_bar: self.a_bar.iter().map(|a| a * f).collect(), ..self.clone() }
    }

    /// Number of real parameters: real and imaginary parts of every entry
    /// of `Ā` followed by those of the unnormalized state.
    pub fn num_params(&self) -> usize {
        2 * (self.rank() * self.n() * self.n() + self.n())
    }

    /// Flattens `(Ā, ψ)`; blocks are row-major, each complex entry is
    /// stored as `re, im`.
    pub fn to_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for a in &self.a_bar {
            for r in 0..a.nrows() {
                for c in 0..a.ncols() {
                    out.extend([a[(r, c)].re, a[(r, c)].im]);
                }
            }
        }
        for z in self.psi0.iter() {
            out.extend([z.re, z.im]);
        }
        out
    }

    /// Inverse of [`to_params`](Self::to_params); the state is divided by
    /// its norm.
    pub fn from_params(params: &[f64], d: usize, env_dim: usize, rank: usize) -> Result<Self> {
        let n = d * env_dim;
        if params.len() != 2 * (rank * n * n + n) {
            return Err(Error::DimensionMismatch(format!("{} parameters for (d, D, R) = ({d}, {env_dim}, {rank})", params.len())));
        }
        let z = |k: usize| C64::new(params[2 * k], params[2 * k + 1]);
        let a_bar = (0..rank).map(|s| CMat::from_fn(n, n, |r, c| z(s * n * n + r * n + c))).collect();
        let phi = DVector::from_fn(n, |i, _| z(rank * n * n + i));
        let norm = phi.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self { d, env_dim, a_bar, psi0: phi / C64::new(norm, 0.0) })
    }
}

/// `{d, D, R, a_bar[s][o][β][i][α], psi0}` with complex entries as pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnsatzFile {
    pub d: usize,
    #[serde(rename = "D")]
    pub env_dim: usize,
    #[serde(rename = "R")]
    pub rank: usize,
    pub a_bar: Vec<Vec<Vec<Vec<Vec<Pair>>>>>,
    pub psi0: Vec<Pair>,
}

impl AnsatzFile {
    pub fn from_ansatz(a: &ReconstructionAnsatz) -> Self {
        let (d, e) = (a.d, a.env_dim);
        let a_bar = a
            .a_bar
            .iter()
            .map(|m| {
                (0..d)
                    .map(|o| {
                        (0..e)
                            .map(|b| (0..d).map(|i| (0..e).map(|al| to_pair(m[(o * e + b, i * e + al)])).collect()).collect())
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Self { d, env_dim: e, rank: a.rank(), a_bar, psi0: a.psi0.iter().map(|&z| to_pair(z)).collect() }
    }

    pub fn to_ansatz(&self) -> Result<ReconstructionAnsatz> {
        let (d, e) = (self.d, self.env_dim);
        let bad = |field: String, reason: &str| Error::Format { field, reason: reason.to_string() };
        if self.a_bar.len() != self.rank {
            return Err(bad("a_bar".into(), "length differs from R"));
        }
        let mut blocks = Vec::with_capacity(self.rank);
        for (s, t) in self.a_bar.iter().enumerate() {
            let ok = t.len() == d
                && t.iter().all(|x| x.len() == e && x.iter().all(|y| y.len() == d && y.iter().all(|z| z.len() == e)));
            if !ok {
                return Err(bad(format!("a_bar[{s}]"), "shape must be [d][D][d][D]"));
            }
            blocks.push(CMat::from_fn(d * e, d * e, |r, c| from_pair(t[r / e][r % e][c / e][c % e])));
        }
        if self.psi0.len() != d * e {
            return Err(bad("psi0".into(), "length must be d*D"));
        }
        let psi = DVector::from_iterator(d * e, self.psi0.iter().map(|&p| from_pair(p)));
        ReconstructionAnsatz::new(blocks, psi, d, e).map_err(|err| bad("psi0".into(), &err.to_string()))
    }
}
