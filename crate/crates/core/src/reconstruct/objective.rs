//! Squared distance between a predicted and a target process tensor, and its
//! analytic gradient assembled from cached transfer environments.

use super::ansatz::ReconstructionAnsatz;
use crate::error::{Error, Result};
use crate::process_tensor::mps::{self, MpsView};
use crate::process_tensor::ProcessTensor;
use crate::{CMat, C64};
use nalgebra::DVector;

/// Gradient of a real function of `(Ā, ψ)` in the form
/// `∂f/∂Re z + i ∂f/∂Im z` for every complex entry `z`.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradient {
    pub a_bar: Vec<CMat>,
    pub psi0: DVector<C64>,
}

impl Gradient {
    pub fn a_re(&self) -> Vec<CMat> {
        self.a_bar.iter().map(|g| g.map(|z| C64::new(z.re, 0.0))).collect()
    }

    pub fn a_im(&self) -> Vec<CMat> {
        self.a_bar.iter().map(|g| g.map(|z| C64::new(z.im, 0.0))).collect()
    }

    pub fn psi_re(&self) -> Vec<f64> {
        self.psi0.iter().map(|z| z.re).collect()
    }

    pub fn psi_im(&self) -> Vec<f64> {
        self.psi0.iter().map(|z| z.im).collect()
    }

    /// Gradient with respect to an unnormalized `φ` at `ψ = φ/|φ|`, given
    /// `|φ|`: `(g − ψ Re⟨ψ, g⟩) / |φ|`.
    pub fn psi_tangential(&self, psi: &DVector<C64>, phi_norm: f64) -> DVector<C64> {
        let overlap = psi.dotc(&self.psi0).re;
        (&self.psi0 - psi * C64::new(overlap, 0.0)) / C64::new(phi_norm, 0.0)
    }

    pub fn inf_norm(&self) -> f64 {
        self.a_bar
            .iter()
            .flat_map(|g| g.iter())
            .chain(self.psi0.iter())
            .fold(0.0, |m, z| m.max(z.re.abs()).max(z.im.abs()))
    }
}

/// Target data reused across evaluations at a fixed `k`.
#[derive(Clone, Debug)]
pub struct Objective {
    target: MpsView,
    target_norm: f64,
    k: usize,
    /// Weight of the optional `‖Σ Ā†Ā − I‖²` penalty.
    pub penalty: f64,
}

impl Objective {
    pub fn new(target: &ProcessTensor, k: usize) -> Result<Self> {
        if k == 0 || k > target.k() {
            return Err(Error::OutOfRange { index: k, max: target.k() });
        }
        let view = target.truncated(k)?.mps();
        let target_norm = mps::inner(&view, &view).re;
        Ok(Self { target: view, target_norm, k, penalty: 0.0 })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `⟨Υ, Υ⟩` of the target; the loss carries round-off of order
    /// `1e-15` times this.
    pub fn target_norm(&self) -> f64 {
        self.target_norm
    }

    fn check(&self, a: &ReconstructionAnsatz) -> Result<()> {
        if a.d() != self.target.d {
            return Err(Error::DimensionMismatch(format!("ansatz d = {}, target d = {}", a.d(), self.target.d)));
        }
        Ok(())
    }

    fn view(&self, a: &ReconstructionAnsatz) -> MpsView {
        MpsView::new(&a.rho0(), &vec![a.channel(); self.k], a.d(), a.env_dim())
    }

    fn penalty_value(&self, a: &ReconstructionAnsatz) -> f64 {
        if self.penalty == 0.0 {
            return 0.0;
        }
        let n = a.n();
        let mut q = -CMat::identity(n, n);
        for blk in a.a_bar() {
            q += blk.adjoint() * blk;
        }
        self.penalty * q.norm_squared()
    }

    pub fn loss(&self, a: &ReconstructionAnsatz) -> Result<f64> {
        self.check(a)?;
        let v = self.view(a);
        let aa = mps::inner(&v, &v).re;
        let ab = mps::inner(&v, &self.target).re;
        Ok((aa - 2.0 * ab + self.target_norm).max(0.0) + self.penalty_value(a))
    }

    /// Loss and its gradient. The loss is not clamped here so that it stays
    /// consistent with the gradient.
    pub fn loss_and_gradient(&self, a: &ReconstructionAnsatz) -> Result<(f64, Gradient)> {
        self.check(a)?;
        let (d, e) = (a.d(), a.env_dim());
        let n = d * e;
        let v = self.view(a);
        let (laa, raa) = (mps::left_envs(&v, &v), mps::right_envs(&v, &v));
        let (lab, rab) = (mps::left_envs(&v, &self.target), mps::right_envs(&v, &self.target));
        let aa = mps::pair(&laa[0], &raa[0]).re;
        let ab = mps::pair(&lab[0], &rab[0]).re;
        let mut loss = aa - 2.0 * ab + self.target_norm;

        // Φ_p = ∂f/∂conj(M_p) summed over sites
        let chi = e * e;
        let mut phi = vec![CMat::zeros(chi, chi); d.pow(4)];
        for m in 1..=self.k {
            let rt_aa = raa[m].transpose();
            let rt_ab = rab[m].transpose();
            for (p, acc) in phi.iter_mut().enumerate() {
                *acc += &laa[m - 1] * &v.sites[m - 1][p] * &rt_aa;
                *acc -= &lab[m - 1] * &self.target.sites[m - 1][p] * &rt_ab;
            }
        }
        // F[(X,X'),(Y,Y')] with X=(o,β), X'=(o',β'), Y=(i,α), Y'=(i',α')
        let mut f = CMat::zeros(n * n, n * n);
        for (p, blk) in phi.iter().enumerate() {
            let (i, ip, o, op) = (p / (d * d * d), (p / (d * d)) % d, (p / d) % d, p % d);
            for x in 0..chi {
                let (al, alp) = (x / e, x % e);
                for y in 0..chi {
                    let (be, bep) = (y / e, y % e);
                    f[((o * e + be) * n + op * e + bep, (i * e + al) * n + ip * e + alp)] = blk[(x, y)];
                }
            }
        }
        let mut grad_a = Vec::with_capacity(a.rank());
        for blk in a.a_bar() {
            let mut g = CMat::zeros(n, n);
            for x in 0..n {
                for y in 0..n {
                    let mut acc = C64::new(0.0, 0.0);
                    for xp in 0..n {
                        for yp in 0..n {
                            // Σ F[(X,X'),(Y,Y')] A[X',Y'] + Σ conj(F[(X',X),(Y',Y)]) A[X',Y']
                            acc += f[(x * n + xp, y * n + yp)] * blk[(xp, yp)];
                            acc += f[(xp * n + x, yp * n + y)].conj() * blk[(xp, yp)];
                        }
                    }
                    g[(x, y)] = acc * 2.0;
                }
            }
            grad_a.push(g);
        }

        // boundary: Φ0 = La R0ᵀ − Lb R0ᵀ over rows (o,o'), columns (α,α')
        let phi0 = &v.left * raa[0].transpose() - &self.target.left * rab[0].transpose();
        let f0 = CMat::from_fn(n, n, |z, zp| {
            let (o, al, op, alp) = (z / e, z % e, zp / e, zp % e);
            phi0[(o * d + op, al * e + alp)]
        });
        let psi = a.psi0();
        let grad_psi = (&f0 * psi + f0.adjoint() * psi) * C64::new(2.0, 0.0);

        if self.penalty != 0.0 {
            let mut q = -CMat::identity(n, n);
            for blk in a.a_bar() {
                q += blk.adjoint() * blk;
            }
            loss += self.penalty * q.norm_squared();
            for (g, blk) in grad_a.iter_mut().zip(a.a_bar()) {
                *g += blk * &q * C64::new(4.0 * self.penalty, 0.0);
            }
        }
        Ok((loss, Gradient { a_bar: grad_a, psi0: grad_psi }))
    }
}

/// `|Ῡ_{k:0} − Υ_{k:0}|²` by three transfer contractions.
pub fn loss(ansatz: &ReconstructionAnsatz, target: &ProcessTensor, k: usize) -> Result<f64> {
    Objective::new(target, k)?.loss(ansatz)
}

/// Analytic gradient of [`loss`] with respect to the raw entries of `Ā` and
/// `ψ` (the state is treated as unconstrained here).
pub fn loss_gradient(ansatz: &ReconstructionAnsatz, target: &ProcessTensor, k: usize) -> Result<Gradient> {
    Ok(Objective::new(target, k)?.loss_and_gradient(ansatz)?.1)
}
