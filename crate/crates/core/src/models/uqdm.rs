use crate::channels::{sandwich, ChannelTensor};
use crate::error::{Error, Result};
use crate::measures::{MeasureKind, MeasureSeries};
use crate::tensorops::{entropy, DensityMatrix, Spectrum};
use crate::{CMat, C64};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UqdmParams {
    pub gamma: f64,
    pub g: f64,
    pub delta: f64,
    pub grid_points: usize,
    /// Half-width of the position grid in units of `gamma`.
    pub grid_halfwidth: f64,
}

impl Default for UqdmParams {
    fn default() -> Self {
        Self { gamma: 1.0, g: 1.0, delta: 0.1, grid_points: 5000, grid_halfwidth: 100.0 }
    }
}

impl UqdmParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0) || !(self.delta > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "need gamma > 0 and delta > 0, got ({}, {})",
                self.gamma, self.delta
            )));
        }
        if self.grid_points < 2 || !(self.grid_halfwidth > 0.0) {
            return Err(Error::InvalidArgument("grid needs N >= 2 points and a positive half-width".into()));
        }
        Ok(())
    }
}

/// Spin coupled to a discretized position operator through
/// `H = (g/2) σz ⊗ x`. The system state `|0⟩` sees `U = exp(−i g Δ x / 2)` per
/// step, `|1⟩` sees `U†`.
#[derive(Clone, Debug)]
pub struct UqdmModel {
    pub params: UqdmParams,
    pub x: Vec<f64>,
    pub psi: Vec<C64>,
    /// Diagonal of `U`.
    pub phases: Vec<C64>,
}

pub fn uqdm_model(p: &UqdmParams) -> Result<UqdmModel> {
    p.validate()?;
    let n = p.grid_points;
    let half = p.grid_halfwidth * p.gamma;
    let x: Vec<f64> = (0..n).map(|i| -half + 2.0 * half * i as f64 / (n - 1) as f64).collect();
    let amp = (p.gamma / std::f64::consts::PI).sqrt();
    let mut psi: Vec<C64> = x.iter().map(|&xi| C64::new(amp, 0.0) / C64::new(xi, p.gamma)).collect();
    let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    psi.iter_mut().for_each(|z| *z /= norm);
    let phases = x.iter().map(|&xi| C64::from_polar(1.0, -p.g * p.delta * xi / 2.0)).collect();
    Ok(UqdmModel { params: *p, x, psi, phases })
}

impl UqdmModel {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// `⟨ψ|U^m|ψ⟩`.
    pub fn overlap(&self, m: i64) -> C64 {
        let (g, dt) = (self.params.g, self.params.delta);
        self.x
            .iter()
            .zip(&self.psi)
            .map(|(&xi, z)| C64::from_polar(z.norm_sqr(), -(m as f64) * g * dt * xi / 2.0))
            .sum()
    }

    /// Continuum value of `|⟨ψ|U^m|ψ⟩|` for the untruncated Lorentzian.
    pub fn analytic_overlap(&self, m: i64) -> f64 {
        (-self.params.gamma * self.params.g * self.params.delta * (m.unsigned_abs() as f64) / 2.0).exp()
    }

    /// Evolves `(a|0⟩ + b|1⟩) ⊗ |ψ⟩` for `flips.len()` steps, applying `σx` to
    /// the system before step `m` whenever `flips[m]` is set. Returns the
    /// system state after every step, starting with the initial one.
    pub fn simulate(&self, a: C64, b: C64, flips: &[bool]) -> Vec<CMat> {
        let mut c0: Vec<C64> = self.psi.iter().map(|z| z * a).collect();
        let mut c1: Vec<C64> = self.psi.iter().map(|z| z * b).collect();
        let reduced = |c0: &[C64], c1: &[C64]| {
            let dot = |u: &[C64], v: &[C64]| u.iter().zip(v).map(|(p, q)| p * q.conj()).sum::<C64>();
            CMat::from_row_slice(2, 2, &[dot(c0, c0), dot(c0, c1), dot(c1, c0), dot(c1, c1)])
        };
        let mut out = vec![reduced(&c0, &c1)];
        for &flip in flips {
            if flip {
                std::mem::swap(&mut c0, &mut c1);
            }
            for ((z0, z1), u) in c0.iter_mut().zip(c1.iter_mut()).zip(&self.phases) {
                *z0 *= u;
                *z1 *= u.conj();
            }
            out.push(reduced(&c0, &c1));
        }
        out
    }

    /// Joint unitary `|0⟩⟨0| ⊗ U + |1⟩⟨1| ⊗ U†` as a channel tensor; only
    /// sensible on small grids.
    pub fn channel_tensor(&self) -> Result<ChannelTensor> {
        let n = self.len();
        if n > 32 {
            return Err(Error::TooLarge { k: n, limit: 32 });
        }
        let mut u = CMat::zeros(2 * n, 2 * n);
        for (i, z) in self.phases.iter().enumerate() {
            u[(i, i)] = *z;
            u[(n + i, n + i)] = z.conj();
        }
        ChannelTensor::from_superop(sandwich(&u, &u.adjoint()), 2, n)
    }

    /// `ρ^S ⊗ |ψ⟩⟨ψ|`.
    pub fn initial_state(&self, rho_s: &DensityMatrix) -> DensityMatrix {
        let env = DensityMatrix::pure(&self.psi).expect("normalized grid state");
        rho_s.tensor(&env)
    }
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    for i in 1..=n {
        out[i] = out[i - 1] + (i as f64).ln();
    }
    out
}

/// `S(ρ^E_j)` for `ρ^E_j = Σ_m w_m U^m|ψ⟩⟨ψ|U^{−m}`, `m ∈ {−j, −j+2, …, j}`
/// with binomial weights, from the `(j+1) x (j+1)` weighted Gram matrix.
pub fn uqdm_env_entropy(model: &UqdmModel, j: usize) -> Result<f64> {
    let overlaps: Vec<C64> = (0..=2 * j as i64).map(|m| model.overlap(m)).collect();
    gram_entropy(&overlaps, &ln_factorials(j), j)
}

fn gram_entropy(overlaps: &[C64], lnf: &[f64], j: usize) -> Result<f64> {
    if j == 0 {
        return Ok(0.0);
    }
    let ln2j = j as f64 * std::f64::consts::LN_2;
    let w: Vec<f64> = (0..=j).map(|a| (lnf[j] - lnf[a] - lnf[j - a] - ln2j).exp()).collect();
    // ⟨ψ_{m_a}|ψ_{m_b}⟩ = ⟨ψ|U^{m_b − m_a}|ψ⟩ with m_b − m_a = 2(b − a)
    let lag = |a: usize, b: usize| {
        if b >= a {
            overlaps[2 * (b - a)]
        } else {
            overlaps[2 * (a - b)].conj()
        }
    };
    let imag = (0..=2 * j).map(|l| overlaps[l].im.abs()).fold(0.0, f64::max);
    let values = if imag < 1e-13 {
        let g = DMatrix::<f64>::from_fn(j + 1, j + 1, |a, b| (w[a] * w[b]).sqrt() * lag(a, b).re);
        g.symmetric_eigenvalues().iter().copied().collect()
    } else {
        let g = CMat::from_fn(j + 1, j + 1, |a, b| lag(a, b) * (w[a] * w[b]).sqrt());
        crate::tensorops::linalg::eigvals_hermitian(&g)?
    };
    let s = Spectrum::new(values.into_iter().map(|v: f64| if v.abs() < 1e-14 { 0.0 } else { v }).collect());
    entropy(&s, None)
}

/// `C_0 … C_{j_max}` via [`uqdm_env_entropy`].
pub fn uqdm_memory_series(model: &UqdmModel, j_max: usize) -> Result<MeasureSeries> {
    if j_max == 0 {
        return Err(Error::InvalidArgument("memory series needs j_max >= 1".into()));
    }
    let overlaps: Vec<C64> = (0..=2 * j_max as i64).map(|m| model.overlap(m)).collect();
    let lnf = ln_factorials(j_max);
    let values = (0..=j_max).map(|j| gram_entropy(&overlaps, &lnf, j)).collect::<Result<Vec<_>>>()?;
    Ok(MeasureSeries {
        kind: MeasureKind::MemoryComplexity,
        steps: (0..=j_max).collect(),
        values,
        boundary_flagged: Vec::new(),
    })
}
