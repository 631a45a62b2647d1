//! Non-Markovianity measures: operator-space entanglement entropy of the
//! process tensor, entropy of the effective environment state, and the memory
//! complexity of unitary models.

use crate::channels::superop_to_kraus;
use crate::error::{Error, Result};
use crate::process_tensor::mps::MpsView;
use crate::process_tensor::ProcessTensor;
use crate::tensorops::linalg::{eig_hermitian_unchecked, eigvals_hermitian};
use crate::tensorops::{entropy, trace_system, DensityMatrix, Spectrum};
use crate::{CMat, C64};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// Allowed deviation of the unnormalized recursion trace from `d` for
/// models that satisfy the channel normalization exactly.
pub const ENV_TRACE_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct EnvState {
    pub rho: DensityMatrix,
    pub step: usize,
    /// Largest `|tr/d − 1|` seen along the recursion before rescaling.
    pub trace_defect: f64,
}

pub fn env_state(pt: &ProcessTensor, j: usize) -> Result<EnvState> {
    let traj = pt.env_states(j)?;
    let last = traj.states.last().unwrap();
    let herm = (last + last.adjoint()) * C64::new(0.5, 0.0);
    Ok(EnvState { rho: crate::tensorops::density::clean_density(&herm)?, step: j, trace_defect: traj.trace_defect })
}

/// `N^ee_j = S(ρ^E_j)` in bits.
pub fn nm_ee(pt: &ProcessTensor, j: usize) -> Result<f64> {
    nm_ee_with(pt, j, None)
}

pub fn nm_ee_with(pt: &ProcessTensor, j: usize, alpha: Option<f64>) -> Result<f64> {
    if j == 0 || j > pt.k() {
        return Err(Error::OutOfRange { index: j, max: pt.k() });
    }
    let st = env_state(pt, j)?;
    entropy(&st.rho.spectrum()?, alpha)
}

/// Where the bipartition of the process tensor sits relative to step `j`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cut {
    /// Between the site tensors of steps `j` and `j + 1`.
    #[default]
    BetweenSites,
    /// After the input index `i_j` feeding step `j + 1`.
    AfterInput,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct OseeOptions {
    pub cut: Cut,
    /// Rényi order; `None` is von Neumann.
    pub alpha: Option<f64>,
}

/// Left and right Gram matrices of the vectorized process tensor at every
/// bond, each rescaled to unit trace.
struct Grams {
    left: Vec<CMat>,
    right: Vec<CMat>,
}

fn unit_trace(m: CMat) -> CMat {
    let t = m.trace().re;
    if t > 0.0 && t.is_finite() {
        m / C64::new(t, 0.0)
    } else {
        m
    }
}

fn grams(view: &MpsView) -> Grams {
    let k = view.k();
    let mut left = Vec::with_capacity(k + 1);
    left.push(unit_trace(view.left.adjoint() * &view.left));
    for site in &view.sites {
        let prev = left.last().unwrap();
        let mut next = CMat::zeros(prev.nrows(), prev.ncols());
        for m in site {
            next += m.adjoint() * prev * m;
        }
        left.push(unit_trace(next));
    }
    let mut right = vec![CMat::zeros(0, 0); k + 1];
    right[k] = unit_trace(&view.right * view.right.adjoint());
    for m in (1..=k).rev() {
        let mut next = CMat::zeros(right[m].nrows(), right[m].ncols());
        for s in &view.sites[m - 1] {
            next += s * &right[m] * s.adjoint();
        }
        right[m - 1] = unit_trace(next);
    }
    Grams { left, right }
}

/// Schmidt spectrum from `sqrt(G) B sqrt(G)`.
fn schmidt_spectrum(g: &CMat, b: &CMat) -> Result<Spectrum> {
    let (vals, vecs) = eig_hermitian_unchecked(&((g + g.adjoint()) * C64::new(0.5, 0.0)));
    let sq: Vec<C64> = vals.iter().map(|v| C64::new(v.max(0.0).sqrt(), 0.0)).collect();
    let root = &vecs * CMat::from_diagonal(&nalgebra::DVector::from_vec(sq)) * vecs.adjoint();
    let m = &root * b * &root;
    let m = (&m + m.adjoint()) * C64::new(0.5, 0.0);
    let vals = eigvals_hermitian(&m)?;
    let scale = vals.iter().map(|v| v.abs()).fold(0.0, f64::max);
    // round-off of order eps·scale is clipped before normalizing
    let vals: Vec<f64> = vals.into_iter().map(|v| if v.abs() < 1e-13 * scale { 0.0 } else { v }).collect();
    Spectrum::new(vals).normalized()
}

fn cut_spectrum(view: &MpsView, gr: &Grams, j: usize, cut: Cut) -> Result<Spectrum> {
    match cut {
        Cut::BetweenSites => schmidt_spectrum(&gr.left[j], &gr.right[j]),
        Cut::AfterInput => {
            let d2 = view.d * view.d;
            let chi = view.chi();
            let g = CMat::identity(d2, d2).kronecker(&gr.left[j]);
            let mut b = CMat::zeros(d2 * chi, d2 * chi);
            let site = &view.sites[j];
            for q in 0..d2 {
                for qp in 0..d2 {
                    let mut blk = CMat::zeros(chi, chi);
                    for r in 0..d2 {
                        blk += &site[q * d2 + r] * &gr.right[j + 1] * site[qp * d2 + r].adjoint();
                    }
                    b.view_mut((q * chi, qp * chi), (chi, chi)).copy_from(&blk);
                }
            }
            schmidt_spectrum(&g, &b)
        }
    }
}

fn check_osee_step(pt: &ProcessTensor, j: usize) -> Result<()> {
    if j == 0 || j >= pt.k() {
        return Err(Error::OutOfRange { index: j, max: pt.k().saturating_sub(1) });
    }
    Ok(())
}

/// `N^osee_j = S^o_j / 2` in bits, for `1 ≤ j < k`.
pub fn osee(pt: &ProcessTensor, j: usize) -> Result<f64> {
    osee_with(pt, j, &OseeOptions::default())
}

pub fn osee_with(pt: &ProcessTensor, j: usize, opts: &OseeOptions) -> Result<f64> {
    check_osee_step(pt, j)?;
    let view = pt.mps();
    let gr = grams(&view);
    Ok(entropy(&cut_spectrum(&view, &gr, j, opts.cut)?, opts.alpha)? / 2.0)
}

/// Normalized Schmidt spectrum of the vectorized process tensor at cut `j`.
pub fn osee_spectrum(pt: &ProcessTensor, j: usize, cut: Cut) -> Result<Spectrum> {
    check_osee_step(pt, j)?;
    let view = pt.mps();
    cut_spectrum(&view, &grams(&view), j, cut)
}

/// Joint unitary `U` with `E(ρ) = U ρ U†`.
pub fn extract_unitary(ch: &crate::channels::ChannelTensor) -> Result<CMat> {
    let kraus = superop_to_kraus(ch.superop(), ch.d(), ch.env_dim(), 1e-9)?;
    let u = kraus.ops()[0].clone();
    let n = ch.n();
    let dev = (u.adjoint() * &u - CMat::identity(n, n)).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if dev > 1e-9 {
        return Err(Error::NotUnitary(format!("rank {} channel, |U†U − I| = {dev:.3e}", kraus.rank())));
    }
    Ok(u)
}

/// `C_0 … C_j` for a process tensor whose sites are unitary conjugations:
/// `ρ^E_m = (1/d) Σ_{o,i} K_{oi} ρ^E_{m-1} K_{oi}†` with `K_{oi} = ⟨o|U|i⟩`.
pub fn memory_complexity_series(pt: &ProcessTensor, j: usize) -> Result<Vec<f64>> {
    if j > pt.k() {
        return Err(Error::OutOfRange { index: j, max: pt.k() });
    }
    let (d, e) = (pt.d(), pt.env_dim());
    let mut rho = trace_system(pt.rho0(), d, e);
    let mut out = vec![entropy(&Spectrum::of_hermitian(&hermitize(&rho))?, None)?];
    let mut cached: Option<(&crate::channels::ChannelTensor, Vec<CMat>)> = None;
    for site in &pt.sites()[..j] {
        let blocks = match &cached {
            Some((c, b)) if *c == site => b.clone(),
            _ => {
                let u = extract_unitary(site)?;
                let b: Vec<CMat> = (0..d * d).map(|oi| u.view(((oi / d) * e, (oi % d) * e), (e, e)).into_owned()).collect();
                cached = Some((site, b.clone()));
                b
            }
        };
        let mut next = CMat::zeros(e, e);
        for k in &blocks {
            next += k * &rho * k.adjoint();
        }
        rho = next / C64::new(d as f64, 0.0);
        out.push(entropy(&Spectrum::of_hermitian(&hermitize(&rho))?, None)?);
    }
    Ok(out)
}

pub fn memory_complexity(pt: &ProcessTensor, j: usize) -> Result<f64> {
    Ok(*memory_complexity_series(pt, j)?.last().unwrap())
}

fn hermitize(m: &CMat) -> CMat {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureKind {
    Osee,
    Ee,
    MemoryComplexity,
}

impl MeasureKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            MeasureKind::Osee => "osee",
            MeasureKind::Ee => "ee",
            MeasureKind::MemoryComplexity => "memory_complexity",
        }
    }
}

impl std::str::FromStr for MeasureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "osee" => Ok(Self::Osee),
            "ee" => Ok(Self::Ee),
            "memory_complexity" | "mc" => Ok(Self::MemoryComplexity),
            other => Err(Error::InvalidArgument(format!("unknown measure `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureSeries {
    pub kind: MeasureKind,
    pub steps: Vec<usize>,
    pub values: Vec<f64>,
    pub boundary_flagged: Vec<usize>,
}

impl MeasureSeries {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn value_at(&self, j: usize) -> Option<f64> {
        self.steps.iter().position(|&s| s == j).map(|p| self.values[p])
    }

    pub fn is_flagged(&self, j: usize) -> bool {
        self.boundary_flagged.contains(&j)
    }

    /// Columns `j,value_bits,boundary_flag`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("j,value_bits,boundary_flag\n");
        for (&j, &v) in self.steps.iter().zip(&self.values) {
            let _ = writeln!(out, "{j},{},{}", crate::io::fmt_float(v), self.is_flagged(j) as u8);
        }
        out
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SeriesOptions {
    /// Boundary margin for OSEE flags; defaults to `k / 5`.
    pub margin: Option<usize>,
    pub osee: OseeOptions,
    pub alpha: Option<f64>,
}

/// Sweeps `j` over `1..k` (OSEE) or `1..=k` (environment entropies).
pub fn measure_series(pt: &ProcessTensor, kind: MeasureKind) -> Result<MeasureSeries> {
    measure_series_with(pt, kind, &SeriesOptions::default())
}

pub fn measure_series_with(pt: &ProcessTensor, kind: MeasureKind, opts: &SeriesOptions) -> Result<MeasureSeries> {
    let k = pt.k();
    if k < 2 {
        return Err(Error::InvalidArgument("measure series needs k >= 2".into()));
    }
    let (steps, values, flagged) = match kind {
        MeasureKind::Osee => {
            let view = pt.mps();
            let gr = grams(&view);
            let steps: Vec<usize> = (1..k).collect();
            let values = steps
                .iter()
                .map(|&j| Ok(entropy(&cut_spectrum(&view, &gr, j, opts.osee.cut)?, opts.osee.alpha)? / 2.0))
                .collect::<Result<Vec<_>>>()?;
            let margin = opts.margin.unwrap_or(k / 5);
            let flagged = steps.iter().copied().filter(|&j| j + margin >= k).collect();
            (steps, values, flagged)
        }
        MeasureKind::Ee => {
            let traj = pt.env_states(k)?;
            let values = traj.states[1..]
                .iter()
                .map(|r| entropy(&crate::tensorops::density::clean_density(&hermitize(r))?.spectrum()?, opts.alpha))
                .collect::<Result<Vec<_>>>()?;
            ((1..=k).collect(), values, Vec::new())
        }
        MeasureKind::MemoryComplexity => {
            let values = memory_complexity_series(pt, k)?[1..].to_vec();
            ((1..=k).collect(), values, Vec::new())
        }
    };
    Ok(MeasureSeries { kind, steps, values, boundary_flagged: flagged })
}
