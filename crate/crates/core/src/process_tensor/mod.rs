//! Process tensors in matrix-product form: a joint initial state followed by
//! one channel tensor per time step.

mod intervention;
pub mod mps;

pub use intervention::{Intervention, OperationSequence};

use crate::channels::{check_cptp, ChannelTensor};
use crate::error::{Error, Result};
use crate::tensorops::linalg::{eig_hermitian_unchecked, hermiticity_defect};
use crate::tensorops::{contract, trace_env, trace_system, DensityMatrix, LabeledTensor};
use crate::{CMat, C64};
use mps::MpsView;

/// Default guard for dense materialization.
pub const K_MAX_MATERIALIZE: usize = 4;

/// Tolerance for the per-site normalization check in [`ProcessTensor::build`].
pub const SITE_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct ProcessTensor {
    rho0: CMat,
    sites: Vec<ChannelTensor>,
    d: usize,
    env_dim: usize,
}

/// Environment states produced by the averaged recursion, together with the
/// largest relative deviation of an unnormalized step from trace `d`.
#[derive(Clone, Debug)]
pub struct EnvTrajectory {
    pub states: Vec<CMat>,
    pub trace_defect: f64,
}

impl ProcessTensor {
    /// Time-independent model: `k` copies of `channel` after `rho0`.
    pub fn build(channel: &ChannelTensor, rho0: &DensityMatrix, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("process tensor needs k >= 1".into()));
        }
        if rho0.dim() != channel.n() {
            return Err(Error::DimensionMismatch(format!(
                "initial state has dimension {}, channel acts on {}",
                rho0.dim(),
                channel.n()
            )));
        }
        let report = check_cptp(channel, SITE_TOL);
        if report.tp_residual > SITE_TOL {
            return Err(Error::NotTracePreserving(report.tp_residual));
        }
        Ok(Self {
            rho0: rho0.matrix().clone(),
            sites: vec![channel.clone(); k],
            d: channel.d(),
            env_dim: channel.env_dim(),
        })
    }

    /// Assembles a process tensor from arbitrary parts. Only shapes are
    /// checked, so fitted models that violate normalization slightly are
    /// accepted.
    pub fn from_parts(rho0: CMat, sites: Vec<ChannelTensor>) -> Result<Self> {
        let first = sites
            .first()
            .ok_or_else(|| Error::InvalidArgument("process tensor needs k >= 1".into()))?;
        let (d, env_dim) = (first.d(), first.env_dim());
        if sites.iter().any(|s| s.d() != d || s.env_dim() != env_dim) {
            return Err(Error::DimensionMismatch("sites disagree on (d, D)".into()));
        }
        if rho0.nrows() != d * env_dim || rho0.ncols() != d * env_dim {
            return Err(Error::DimensionMismatch("initial state does not match sites".into()));
        }
        Ok(Self { rho0, sites, d, env_dim })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn env_dim(&self) -> usize {
        self.env_dim
    }

    pub fn k(&self) -> usize {
        self.sites.len()
    }

    pub fn rho0(&self) -> &CMat {
        &self.rho0
    }

    pub fn sites(&self) -> &[ChannelTensor] {
        &self.sites
    }

    /// `ρ0` with labels `(o0, o0', a0, a0')`.
    pub fn rho0_tensor(&self) -> LabeledTensor {
        let (d, e) = (self.d, self.env_dim);
        LabeledTensor::from_fn(vec!["o0", "o0'", "a0", "a0'"], vec![d, d, e, e], |ix| {
            self.rho0[(ix[0] * e + ix[2], ix[1] * e + ix[3])]
        })
        .expect("consistent rho0 shape")
    }

    /// The first `k` steps.
    pub fn truncated(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.k() {
            return Err(Error::OutOfRange { index: k, max: self.k() });
        }
        Ok(Self { rho0: self.rho0.clone(), sites: self.sites[..k].to_vec(), d: self.d, env_dim: self.env_dim })
    }

    pub fn mps(&self) -> MpsView {
        MpsView::new(&self.rho0, &self.sites, self.d, self.env_dim)
    }

    fn check_ops(&self, ops: &[Intervention], max: usize) -> Result<()> {
        if ops.len() > max {
            return Err(Error::DimensionMismatch(format!("{} interventions for {max} steps", ops.len())));
        }
        if let Some(op) = ops.iter().find(|op| op.d() != self.d) {
            return Err(Error::DimensionMismatch(format!("intervention on d={}, process on d={}", op.d(), self.d)));
        }
        Ok(())
    }

    /// Joint state after `ops.len()` steps, environment still attached.
    fn evolve(&self, ops: &[Intervention]) -> CMat {
        let mut rho = self.rho0.clone();
        for (op, site) in ops.iter().zip(&self.sites) {
            rho = op.apply_on_system(&rho, self.env_dim);
            rho = site.apply(&rho);
        }
        rho
    }

    /// Final system state `tr_E(E Λ_{k-1} ⋯ E Λ_0 ρ0)`. The result is not
    /// renormalized, so non-trace-preserving interventions yield the
    /// corresponding subnormalized state.
    pub fn apply(&self, seq: &OperationSequence) -> Result<CMat> {
        if seq.len() != self.k() {
            return Err(Error::DimensionMismatch(format!("{} interventions for {} steps", seq.len(), self.k())));
        }
        self.check_ops(&seq.ops, self.k())?;
        Ok(trace_env(&self.evolve(&seq.ops), self.d, self.env_dim))
    }

    /// `tr(M ρ_j)` after the `j = seq.len()` interventions of `seq`.
    pub fn expectation(&self, seq: &OperationSequence) -> Result<f64> {
        self.check_ops(&seq.ops, self.k())?;
        let m = match &seq.final_measurement {
            Some(m) => m.clone(),
            None => CMat::identity(self.d, self.d),
        };
        check_observable(&m, self.d)?;
        let rho = trace_env(&self.evolve(&seq.ops), self.d, self.env_dim);
        Ok((m * rho).trace().re)
    }

    /// Averaged-history environment states `ρ^E_0 … ρ^E_j`:
    /// `ρ^E_0 = tr_S ρ0`, `ρ^E_m ∝ tr_S E_m(I ⊗ ρ^E_{m-1})`, each rescaled to
    /// unit trace.
    pub fn env_states(&self, j: usize) -> Result<EnvTrajectory> {
        if j > self.k() {
            return Err(Error::OutOfRange { index: j, max: self.k() });
        }
        let (d, e) = (self.d, self.env_dim);
        let id = CMat::identity(d, d);
        let mut states = Vec::with_capacity(j + 1);
        let mut defect: f64 = 0.0;
        let first = trace_system(&self.rho0, d, e);
        states.push(first);
        for site in &self.sites[..j] {
            let prev = states.last().unwrap();
            let next = trace_system(&site.apply(&id.kronecker(prev)), d, e);
            let tr = next.trace().re;
            defect = defect.max((tr / d as f64 - 1.0).abs());
            if !(tr.abs() > 0.0) || !tr.is_finite() {
                return Err(Error::NotNormalized(tr));
            }
            states.push(next / C64::new(tr, 0.0));
        }
        Ok(EnvTrajectory { states, trace_defect: defect })
    }

    /// Expectation of `m` at step `j` with every earlier intervention replaced
    /// by the identity-diagonal contraction: `tr(M E_j(I ⊗ ρ^E_{j-1}))` for
    /// `j ≥ 1` and `tr(M tr_E ρ0)` for `j = 0`. The environment state carries
    /// unit trace, so `M = I` yields `d`.
    pub fn local_expectation_averaged(&self, m: &CMat, j: usize) -> Result<f64> {
        check_observable(m, self.d)?;
        if j > self.k() {
            return Err(Error::OutOfRange { index: j, max: self.k() });
        }
        let (d, e) = (self.d, self.env_dim);
        if j == 0 {
            return Ok((m * trace_env(&self.rho0, d, e)).trace().re);
        }
        let env = self.env_states(j - 1)?;
        let rho_e = env.states.last().unwrap();
        let out = self.sites[j - 1].apply(&CMat::identity(d, d).kronecker(rho_e));
        Ok((m * trace_env(&out, d, e)).trace().re)
    }

    /// Expectation of `m` at step `j` when nothing is done in between:
    /// `tr(M E^j ρ0)`.
    pub fn expectation_do_nothing(&self, m: &CMat, j: usize) -> Result<f64> {
        if j > self.k() {
            return Err(Error::OutOfRange { index: j, max: self.k() });
        }
        let ops = vec![Intervention::identity(self.d); j];
        self.expectation(&OperationSequence::with_measurement(ops, m.clone()))
    }

    /// Dense `Υ`, refused above [`K_MAX_MATERIALIZE`] steps.
    pub fn materialize(&self) -> Result<ChoiTensor> {
        self.materialize_with_limit(K_MAX_MATERIALIZE)
    }

    pub fn materialize_with_limit(&self, limit: usize) -> Result<ChoiTensor> {
        let k = self.k();
        if k > limit {
            return Err(Error::TooLarge { k, limit });
        }
        let mut t = self.rho0_tensor();
        let w = self.sites.iter().map(ChannelTensor::w);
        for (m, wm) in (1..=k).zip(w) {
            let (i, ip) = (format!("i{}", m - 1), format!("i{}'", m - 1));
            let (o, op) = (format!("o{m}"), format!("o{m}'"));
            let (a, ap) = (format!("a{}", m - 1), format!("a{}'", m - 1));
            let (b, bp) = (format!("a{m}"), format!("a{m}'"));
            let wm = [("i", &i), ("i'", &ip), ("o", &o), ("o'", &op), ("a", &a), ("a'", &ap), ("b", &b), ("b'", &bp)]
                .into_iter()
                .try_fold(wm, |acc, (from, to)| acc.relabel(from, to))?;
            t = contract(&t, &wm, &[(a.as_str(), a.as_str()), (ap.as_str(), ap.as_str())])?;
        }
        let (a, ap) = (format!("a{k}"), format!("a{k}'"));
        t = t.trace(&[(a.as_str(), ap.as_str())])?;
        let order = choi_labels(k);
        let order: Vec<&str> = order.iter().map(String::as_str).collect();
        Ok(ChoiTensor { tensor: t.permute(&order)?, k, d: self.d })
    }

    /// Compares `tr_{o_m} Υ_{m:0}` with `δ_{i_{m-1} i_{m-1}'} ⊗ Υ_{m-1:0}` for
    /// every `m ≤ min(k, limit)`; `Υ_{0:0}` is the reduced initial state.
    pub fn check_containment(&self, tol: f64, limit: usize) -> Result<ContainmentReport> {
        let kmax = self.k().min(limit);
        let mut residual: f64 = 0.0;
        let mut prev = {
            let r = trace_env(&self.rho0, self.d, self.env_dim);
            LabeledTensor::from_fn(vec!["o0", "o0'"], vec![self.d, self.d], |ix| r[(ix[0], ix[1])])?
        };
        for m in 1..=kmax {
            let cur = self.truncated(m)?.materialize_with_limit(limit)?.tensor;
            let (o, op) = (format!("o{m}"), format!("o{m}'"));
            let lhs = cur.trace(&[(o.as_str(), op.as_str())])?;
            let d = self.d;
            let delta = LabeledTensor::from_fn(vec![format!("i{}", m - 1), format!("i{}'", m - 1)], vec![d, d], |ix| {
                C64::new((ix[0] == ix[1]) as u8 as f64, 0.0)
            })?;
            let rhs = contract(&prev, &delta, &[])?;
            residual = residual.max(lhs.max_abs_diff(&rhs)?);
            prev = cur;
        }
        Ok(ContainmentReport { residual, pass: residual < tol, steps_checked: kmax })
    }

    /// Conjugates every environment index by `u`.
    pub fn gauge_transform_env(&self, u: &CMat) -> Result<Self> {
        let e = self.env_dim;
        if u.nrows() != e || u.ncols() != e {
            return Err(Error::DimensionMismatch(format!("gauge must be {e}x{e}")));
        }
        let dev = (u.adjoint() * u - CMat::identity(e, e)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if dev > 1e-10 {
            return Err(Error::NotUnitary(format!("|u†u - I| = {dev:.3e}")));
        }
        let big = CMat::identity(self.d, self.d).kronecker(u);
        Ok(Self {
            rho0: &big * &self.rho0 * big.adjoint(),
            sites: self.sites.iter().map(|s| s.gauge(u)).collect(),
            d: self.d,
            env_dim: e,
        })
    }
}

fn check_observable(m: &CMat, d: usize) -> Result<()> {
    if m.nrows() != d || m.ncols() != d {
        return Err(Error::DimensionMismatch(format!("measurement must be {d}x{d}")));
    }
    let defect = hermiticity_defect(m);
    if defect > 1e-10 {
        return Err(Error::NotHermitian(defect));
    }
    Ok(())
}

/// `⟨a, b⟩ = Σ conj(Υ_a) Υ_b` by transfer contraction; bond dimensions may
/// differ.
pub fn inner_product(a: &ProcessTensor, b: &ProcessTensor) -> Result<C64> {
    if a.d != b.d || a.k() != b.k() {
        return Err(Error::DimensionMismatch(format!(
            "(d, k) = ({}, {}) vs ({}, {})",
            a.d,
            a.k(),
            b.d,
            b.k()
        )));
    }
    Ok(mps::inner(&a.mps(), &b.mps()))
}

/// Labels `o0, o0', i0, i0', o1, o1', …, o_k, o_k'`.
pub fn choi_labels(k: usize) -> Vec<String> {
    let mut out = vec!["o0".to_string(), "o0'".to_string()];
    for m in 1..=k {
        out.push(format!("i{}", m - 1));
        out.push(format!("i{}'", m - 1));
        out.push(format!("o{m}"));
        out.push(format!("o{m}'"));
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContainmentReport {
    pub residual: f64,
    pub pass: bool,
    pub steps_checked: usize,
}

/// Dense `Υ_{k:0}` over [`choi_labels`].
#[derive(Clone, Debug)]
pub struct ChoiTensor {
    tensor: LabeledTensor,
    k: usize,
    d: usize,
}

impl ChoiTensor {
    pub fn tensor(&self) -> &LabeledTensor {
        &self.tensor
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Unprimed indices as rows, primed as columns.
    pub fn as_matrix(&self) -> CMat {
        let labels = choi_labels(self.k);
        let rows: Vec<&str> = labels.iter().step_by(2).map(String::as_str).collect();
        let cols: Vec<&str> = labels.iter().skip(1).step_by(2).map(String::as_str).collect();
        self.tensor.to_matrix(&rows, &cols).expect("choi labels present")
    }

    pub fn hermiticity_defect(&self) -> f64 {
        hermiticity_defect(&self.as_matrix())
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let m = self.as_matrix();
        let h = (&m + m.adjoint()) * C64::new(0.5, 0.0);
        *eig_hermitian_unchecked(&h).0.last().unwrap()
    }

    /// `Σ conj(self) other`.
    pub fn inner(&self, other: &ChoiTensor) -> C64 {
        self.tensor.data().iter().zip(other.tensor.data()).map(|(a, b)| a.conj() * b).sum()
    }

    /// Contracts with the interventions and final measurement directly on
    /// the dense tensor.
    pub fn expectation(&self, seq: &OperationSequence) -> Result<C64> {
        if seq.len() != self.k {
            return Err(Error::DimensionMismatch(format!("{} interventions for {} steps", seq.len(), self.k)));
        }
        let d = self.d;
        let mut t = self.tensor.clone();
        for (j, op) in seq.ops.iter().enumerate() {
            let (i, ip) = (format!("i{j}"), format!("i{j}'"));
            let (o, op_) = (format!("o{j}"), format!("o{j}'"));
            let l = LabeledTensor::from_matrix(
                op.superop(),
                &[(i.as_str(), d), (ip.as_str(), d)],
                &[(o.as_str(), d), (op_.as_str(), d)],
            )?;
            t = contract(&t, &l, &[(i.as_str(), i.as_str()), (ip.as_str(), ip.as_str()), (o.as_str(), o.as_str()), (op_.as_str(), op_.as_str())])?;
        }
        let k = self.k;
        let m = seq.final_measurement.clone().unwrap_or_else(|| CMat::identity(d, d));
        let (o, op) = (format!("o{k}"), format!("o{k}'"));
        // tr(M ρ) = Σ M[o', o] ρ[o, o']
        let mt = LabeledTensor::from_matrix(&m, &[(op.as_str(), d)], &[(o.as_str(), d)])?;
        contract(&t, &mt, &[(o.as_str(), o.as_str()), (op.as_str(), op.as_str())])?.to_scalar()
    }
}
