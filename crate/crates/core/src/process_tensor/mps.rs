//! Transfer-matrix view of a process tensor.
//!
//! Physical indices of site `m` are flattened into
//! `p = ((i*d + i')*d + o)*d + o'` and the bond pair `(α, α')` into a single
//! index of size `D²`, so the tensor reads
//! `Υ[p0, p1, …, pk] = L[p0, :] · M1_{p1} ⋯ Mk_{pk} · r`.

use crate::channels::ChannelTensor;
use crate::{CMat, C64};
use nalgebra::DVector;

#[derive(Clone, Debug)]
pub struct MpsView {
    pub d: usize,
    pub env_dim: usize,
    /// `d² x D²`, rows `(o, o')`.
    pub left: CMat,
    /// `sites[m][p]` is a `D² x D²` matrix.
    pub sites: Vec<Vec<CMat>>,
    pub right: DVector<C64>,
}

/// `L[(o, o'), (α, α')] = ρ[(oα), (o'α')]`.
pub fn left_boundary(rho0: &CMat, d: usize, env: usize) -> CMat {
    CMat::from_fn(d * d, env * env, |p, x| rho0[((p / d) * env + x / env, (p % d) * env + x % env)])
}

pub fn site_matrices(w: &ChannelTensor) -> Vec<CMat> {
    let (d, e) = (w.d(), w.env_dim());
    let chi = e * e;
    (0..d.pow(4))
        .map(|p| {
            let (i, ip, o, op) = (p / (d * d * d), (p / (d * d)) % d, (p / d) % d, p % d);
            CMat::from_fn(chi, chi, |x, y| w.w_at(i, ip, o, op, x / e, x % e, y / e, y % e))
        })
        .collect()
}

/// `r[(β, β')] = δ_{ββ'}`.
pub fn right_boundary(env: usize) -> DVector<C64> {
    DVector::from_fn(env * env, |x, _| if x / env == x % env { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
}

impl MpsView {
    pub fn new(rho0: &CMat, sites: &[ChannelTensor], d: usize, env: usize) -> Self {
        Self {
            d,
            env_dim: env,
            left: left_boundary(rho0, d, env),
            sites: sites.iter().map(site_matrices).collect(),
            right: right_boundary(env),
        }
    }

    pub fn k(&self) -> usize {
        self.sites.len()
    }

    pub fn chi(&self) -> usize {
        self.env_dim * self.env_dim
    }
}

/// `E_0 = La† Lb`, `E_m = Σ_p Ma_p† E_{m-1} Mb_p`. Returns `E_0 … E_k`.
pub fn left_envs(a: &MpsView, b: &MpsView) -> Vec<CMat> {
    let mut out = Vec::with_capacity(a.k() + 1);
    out.push(a.left.adjoint() * &b.left);
    for (ma, mb) in a.sites.iter().zip(&b.sites) {
        let prev = out.last().unwrap();
        let mut next = CMat::zeros(ma[0].ncols(), mb[0].ncols());
        for (x, y) in ma.iter().zip(mb) {
            next += x.adjoint() * prev * y;
        }
        out.push(next);
    }
    out
}

/// `R_k = conj(ra) rbᵀ`, `R_{m-1} = Σ_p conj(Ma_p) R_m Mb_pᵀ`, so that
/// `⟨a, b⟩ = Σ_{xy} E_m[x,y] R_m[x,y]` for every `m`. Returns `R_0 … R_k`.
pub fn right_envs(a: &MpsView, b: &MpsView) -> Vec<CMat> {
    let k = a.k();
    let mut out = vec![CMat::zeros(0, 0); k + 1];
    out[k] = a.right.map(|z| z.conj()) * b.right.transpose();
    for m in (1..=k).rev() {
        let (ma, mb) = (&a.sites[m - 1], &b.sites[m - 1]);
        let mut next = CMat::zeros(ma[0].nrows(), mb[0].nrows());
        for (x, y) in ma.iter().zip(mb) {
            next += x.map(|z| z.conj()) * &out[m] * y.transpose();
        }
        out[m - 1] = next;
    }
    out
}

/// Frobenius inner product `Σ conj(a) b` over all physical indices.
pub fn inner(a: &MpsView, b: &MpsView) -> C64 {
    let e = left_envs(a, b);
    let last = e.last().unwrap();
    (a.right.map(|z| z.conj()).transpose() * last * &b.right)[(0, 0)]
}

/// Elementwise sum `Σ_{xy} a[x,y] b[x,y]`.
pub fn pair(a: &CMat, b: &CMat) -> C64 {
    a.component_mul(b).sum()
}
