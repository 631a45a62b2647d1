//! Quantum channels on system ⊗ environment.
//!
//! Conventions used throughout the crate:
//!
//! * Composite indices are `system ⊗ environment` with the system as the slow
//!   index: `x = s * env_dim + e`.
//! * Operators are vectorized row-major, `vec(ρ)[x * n + y] = ρ[x, y]`, so that
//!   `vec(A ρ B) = (A ⊗ Bᵀ) vec(ρ)`.
//! * A channel is stored as its superoperator `S` acting on `vec(ρ)`. The
//!   eight-index channel tensor is a view of the same numbers:
//!   `W[i, i', o, o', α, α', β, β'] = S[(oβ)·n + (o'β'), (iα)·n + (i'α')]`,
//!   which for a Kraus set equals `Σ_s A_s[oβ, iα] · conj(A_s[o'β', i'α'])`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::tensorops::linalg::{eig_hermitian_unchecked, hermiticity_defect};
use crate::tensorops::random::random_isometry;
use crate::tensorops::LabeledTensor;
use crate::{CMat, C64};

/// Trace-preservation tolerance for Kraus sets.
pub const KRAUS_TP_TOL: f64 = 1e-9;
/// Choi eigenvalues below this are dropped when extracting Kraus operators.
pub const KRAUS_TRUNCATION: f64 = 1e-12;

pub const W_LABELS: [&str; 8] = ["i", "i'", "o", "o'", "a", "a'", "b", "b'"];

/// Row-major vectorization.
pub fn vectorize(m: &CMat) -> nalgebra::DVector<C64> {
    nalgebra::DVector::from_iterator(m.len(), m.transpose().iter().copied())
}

pub fn unvectorize(v: &nalgebra::DVector<C64>, n: usize) -> CMat {
    CMat::from_fn(n, n, |r, c| v[r * n + c])
}

/// Applies a superoperator to an `n x n` operator.
pub fn apply_superop(s: &CMat, rho: &CMat) -> CMat {
    unvectorize(&(s * vectorize(rho)), rho.nrows())
}

/// Superoperator of `ρ ↦ A ρ B`.
pub fn sandwich(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(&b.transpose())
}

/// Reshuffles a superoperator into its Choi matrix
/// `C[(x, y), (x', y')] = S[(x, x'), (y, y')]` and back (the map is an involution).
pub fn reshuffle(s: &CMat, n: usize) -> CMat {
    CMat::from_fn(n * n, n * n, |r, c| {
        let (x, y) = (r / n, r % n);
        let (xp, yp) = (c / n, c % n);
        s[(x * n + xp, y * n + yp)]
    })
}

#[derive(Clone, Debug)]
pub struct KrausChannel {
    ops: Vec<CMat>,
    d: usize,
    env_dim: usize,
}

impl KrausChannel {
    pub fn new(ops: Vec<CMat>, d: usize, env_dim: usize) -> Result<Self> {
        let n = d * env_dim;
        if ops.is_empty() {
            return Err(Error::InvalidArgument("empty Kraus set".into()));
        }
        if ops.len() > n * n {
            return Err(Error::InvalidArgument(format!("{} Kraus operators exceed (dD)^2 = {}", ops.len(), n * n)));
        }
        if let Some(bad) = ops.iter().find(|a| a.nrows() != n || a.ncols() != n) {
            return Err(Error::DimensionMismatch(format!(
                "Kraus operator is {}x{}, expected {n}x{n}",
                bad.nrows(),
                bad.ncols()
            )));
        }
        let ch = Self { ops, d, env_dim };
        let res = ch.tp_residual();
        if res > KRAUS_TP_TOL {
            return Err(Error::NotTracePreserving(res));
        }
        Ok(ch)
    }

    /// Max deviation of `Σ A†A` from the identity.
    pub fn tp_residual(&self) -> f64 {
        let n = self.d * self.env_dim;
        let mut acc = CMat::zeros(n, n);
        for a in &self.ops {
            acc += a.adjoint() * a;
        }
        (acc - CMat::identity(n, n)).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn ops(&self) -> &[CMat] {
        &self.ops
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn env_dim(&self) -> usize {
        self.env_dim
    }

    pub fn rank(&self) -> usize {
        self.ops.len()
    }

    pub fn apply(&self, rho: &CMat) -> CMat {
        self.ops.iter().map(|a| a * rho * a.adjoint()).fold(CMat::zeros(rho.nrows(), rho.ncols()), |acc, t| acc + t)
    }

    /// Stinespring sampling: the Kraus operators are blocks of a random isometry.
    pub fn random<R: Rng + ?Sized>(d: usize, env_dim: usize, rank: usize, rng: &mut R) -> Self {
        let n = d * env_dim;
        let v = random_isometry(rank * n, n, rng);
        let ops = (0..rank).map(|s| v.rows(s * n, n).into_owned()).collect();
        Self { ops, d, env_dim }
    }

    pub fn unitary(u: CMat, d: usize, env_dim: usize) -> Result<Self> {
        Self::new(vec![u], d, env_dim)
    }
}

/// Superoperator representation of a channel on system ⊗ environment.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelTensor {
    superop: CMat,
    d: usize,
    env_dim: usize,
}

impl ChannelTensor {
    /// Wraps a superoperator without checking complete positivity or trace
    /// preservation; see [`check_cptp`].
    pub fn from_superop(superop: CMat, d: usize, env_dim: usize) -> Result<Self> {
        let n2 = (d * env_dim).pow(2);
        if superop.nrows() != n2 || superop.ncols() != n2 {
            return Err(Error::DimensionMismatch(format!(
                "superoperator is {}x{}, expected {n2}x{n2}",
                superop.nrows(),
                superop.ncols()
            )));
        }
        Ok(Self { superop, d, env_dim })
    }

    pub fn identity(d: usize, env_dim: usize) -> Self {
        let n2 = (d * env_dim).pow(2);
        Self { superop: CMat::identity(n2, n2), d, env_dim }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn env_dim(&self) -> usize {
        self.env_dim
    }

    pub fn n(&self) -> usize {
        self.d * self.env_dim
    }

    pub fn superop(&self) -> &CMat {
        &self.superop
    }

    pub fn apply(&self, rho: &CMat) -> CMat {
        apply_superop(&self.superop, rho)
    }

    pub fn choi(&self) -> CMat {
        reshuffle(&self.superop, self.n())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { superop: &self.superop * C64::new(factor, 0.0), d: self.d, env_dim: self.env_dim }
    }

    /// `W[i, i', o, o', α, α', β, β']`.
    #[allow(clippy::too_many_arguments)]
    pub fn w_at(&self, i: usize, ip: usize, o: usize, op: usize, a: usize, ap: usize, b: usize, bp: usize) -> C64 {
        let (e, n) = (self.env_dim, self.n());
        self.superop[((o * e + b) * n + (op * e + bp), (i * e + a) * n + (ip * e + ap))]
    }

    /// The channel as an eight-index tensor labelled by [`W_LABELS`].
    pub fn w(&self) -> LabeledTensor {
        let (d, e) = (self.d, self.env_dim);
        LabeledTensor::from_fn(W_LABELS.to_vec(), vec![d, d, d, d, e, e, e, e], |ix| {
            self.w_at(ix[0], ix[1], ix[2], ix[3], ix[4], ix[5], ix[6], ix[7])
        })
        .expect("consistent W shape")
    }

    /// `T[(iα), (i'α')] = Σ_{o,β} W[i, i', o, o, α, α', β, β]`; equals the
    /// identity for a trace-preserving channel.
    pub fn normalization_matrix(&self) -> CMat {
        let n = self.n();
        CMat::from_fn(n, n, |y, yp| (0..n).map(|x| self.superop[(x * n + x, y * n + yp)]).sum())
    }

    /// Conjugates the environment factor by a unitary: `E' = U_E E U_E†`.
    pub fn gauge(&self, u_env: &CMat) -> Self {
        let big = CMat::identity(self.d, self.d).kronecker(u_env);
        let outer = sandwich(&big, &big.adjoint());
        let inner = sandwich(&big.adjoint(), &big);
        Self { superop: &outer * &self.superop * inner, d: self.d, env_dim: self.env_dim }
    }
}

/// `W = Σ_s A_s ⊗ conj(A_s)`.
pub fn kraus_to_w(ch: &KrausChannel) -> ChannelTensor {
    let n = ch.d * ch.env_dim;
    let mut s = CMat::zeros(n * n, n * n);
    for a in &ch.ops {
        s += a.kronecker(&a.map(|z| z.conj()));
    }
    ChannelTensor { superop: s, d: ch.d, env_dim: ch.env_dim }
}

/// Lindblad generator `H` plus jump operators with rates; the dissipator uses
/// the convention `γ (L ρ L† − ½{L†L, ρ})`.
#[derive(Clone, Debug)]
pub struct LindbladSpec {
    pub hamiltonian: CMat,
    pub jumps: Vec<(CMat, f64)>,
}

impl LindbladSpec {
    pub fn validate(&self) -> Result<()> {
        let h = &self.hamiltonian;
        if h.nrows() != h.ncols() {
            return Err(Error::NotSquare { rows: h.nrows(), cols: h.ncols() });
        }
        let defect = hermiticity_defect(h);
        if defect > 1e-10 {
            return Err(Error::NotHermitian(defect));
        }
        for (l, rate) in &self.jumps {
            if !(*rate >= 0.0) {
                return Err(Error::InvalidArgument(format!("negative jump rate {rate}")));
            }
            if l.nrows() != h.nrows() || l.ncols() != h.ncols() {
                return Err(Error::DimensionMismatch("jump operator shape differs from H".into()));
            }
        }
        Ok(())
    }
}

/// Vectorized Lindblad generator.
pub fn lindblad_superoperator(spec: &LindbladSpec) -> Result<CMat> {
    spec.validate()?;
    let n = spec.hamiltonian.nrows();
    let id = CMat::identity(n, n);
    let mi = C64::new(0.0, -1.0);
    let mut gen = (sandwich(&spec.hamiltonian, &id) - sandwich(&id, &spec.hamiltonian)) * mi;
    for (l, rate) in &spec.jumps {
        if *rate == 0.0 {
            continue;
        }
        let ldl = l.adjoint() * l;
        let half = C64::new(0.5, 0.0);
        let term = sandwich(l, &l.adjoint()) - (sandwich(&ldl, &id) + sandwich(&id, &ldl)) * half;
        gen += term * C64::new(*rate, 0.0);
    }
    Ok(gen)
}

/// Kraus decomposition from the Choi eigen-decomposition of a superoperator.
pub fn superop_to_kraus(s: &CMat, d: usize, env_dim: usize, tol: f64) -> Result<KrausChannel> {
    let n = d * env_dim;
    if s.nrows() != n * n || s.ncols() != n * n {
        return Err(Error::DimensionMismatch("superoperator shape".into()));
    }
    let choi = reshuffle(s, n);
    let defect = hermiticity_defect(&choi);
    let scale = choi.iter().map(|z| z.norm()).fold(1.0, f64::max);
    if defect > tol * scale {
        return Err(Error::NotHermitian(defect));
    }
    let (vals, vecs) = eig_hermitian_unchecked(&choi);
    let min = *vals.last().unwrap();
    if min < -tol {
        return Err(Error::NotCompletelyPositive(min));
    }
    let ops: Vec<CMat> = vals
        .iter()
        .enumerate()
        .filter(|(_, &v)| v >= KRAUS_TRUNCATION)
        .map(|(k, &v)| {
            let amp = C64::new(v.sqrt(), 0.0);
            CMat::from_fn(n, n, |x, y| vecs[(x * n + y, k)] * amp)
        })
        .collect();
    if ops.is_empty() {
        return Err(Error::NotCompletelyPositive(min));
    }
    let ch = KrausChannel { ops, d, env_dim };
    let res = ch.tp_residual();
    if res > tol.max(KRAUS_TP_TOL) {
        return Err(Error::NotTracePreserving(res));
    }
    Ok(ch)
}

/// Outcome of [`check_cptp`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CptpReport {
    /// Entrywise L1 distance of the normalization contraction from `δδ`.
    pub tp_residual: f64,
    pub cp_min_eigenvalue: f64,
    pub pass: bool,
}

pub fn check_cptp(ch: &ChannelTensor, tol: f64) -> CptpReport {
    let n = ch.n();
    let t = ch.normalization_matrix();
    let tp_residual = (t - CMat::identity(n, n)).iter().map(|z| z.norm()).sum();
    let choi = ch.choi();
    let (vals, _) = eig_hermitian_unchecked(&choi);
    let cp_min_eigenvalue = *vals.last().unwrap();
    let herm = hermiticity_defect(&choi);
    CptpReport {
        tp_residual,
        cp_min_eigenvalue,
        pass: tp_residual < tol && cp_min_eigenvalue > -tol && herm < tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensorops::linalg::frobenius_distance;
    use crate::tensorops::matrix_exp;
    use crate::tensorops::random::{random_density, random_hermitian, random_unitary};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn sz() -> CMat {
        CMat::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)])
    }

    #[test]
    fn identity_channel_w() {
        let ch = kraus_to_w(&KrausChannel::new(vec![CMat::identity(4, 4)], 2, 2).unwrap());
        let w = ch.w();
        let mut worst: f64 = 0.0;
        LabeledTensor::from_fn(W_LABELS.to_vec(), vec![2; 8], |ix| {
            let expect = (ix[0] == ix[2] && ix[4] == ix[6] && ix[1] == ix[3] && ix[5] == ix[7]) as u8 as f64;
            worst = worst.max((w.get(ix) - c(expect)).norm());
            c(0.0)
        })
        .unwrap();
        assert_eq!(worst, 0.0);
        let rep = check_cptp(&ch, 1e-9);
        assert!(rep.pass && rep.tp_residual == 0.0);
    }

    #[test]
    fn dephasing_kraus_action() {
        let p: f64 = 0.2;
        let ops = vec![CMat::identity(2, 2) * c((1.0 - p).sqrt()), sz() * c(p.sqrt())];
        let ch = kraus_to_w(&KrausChannel::new(ops, 2, 1).unwrap());
        let rho = CMat::from_row_slice(2, 2, &[c(0.6), C64::new(0.1, 0.3), C64::new(0.1, -0.3), c(0.4)]);
        // contract W with ρ by hand: out[o,o'] = Σ ρ[i,i'] W[i,i',o,o',0,0,0,0]
        let mut out = CMat::zeros(2, 2);
        for o in 0..2 {
            for op in 0..2 {
                for i in 0..2 {
                    for ip in 0..2 {
                        out[(o, op)] += rho[(i, ip)] * ch.w_at(i, ip, o, op, 0, 0, 0, 0);
                    }
                }
            }
        }
        assert!((out[(0, 0)] - rho[(0, 0)]).norm() < 1e-15);
        assert!((out[(0, 1)] - rho[(0, 1)] * c(1.0 - 2.0 * p)).norm() < 1e-15);
        assert!((out[(1, 0)] - rho[(1, 0)] * c(1.0 - 2.0 * p)).norm() < 1e-15);
    }

    #[test]
    fn scaled_channel_fails_tp() {
        let ch = ChannelTensor::identity(2, 2).scaled(1.01);
        let rep = check_cptp(&ch, 1e-9);
        assert!(!rep.pass);
        assert!((rep.tp_residual - 0.01 * 4.0).abs() < 1e-12);
    }

    #[test]
    fn lindblad_zero_and_dephasing() {
        let spec = LindbladSpec { hamiltonian: CMat::zeros(2, 2), jumps: vec![] };
        assert!(lindblad_superoperator(&spec).unwrap().iter().all(|z| *z == c(0.0)));

        let gamma = 0.7;
        let spec = LindbladSpec { hamiltonian: CMat::zeros(2, 2), jumps: vec![(sz(), gamma)] };
        let l = lindblad_superoperator(&spec).unwrap();
        let rho = CMat::from_row_slice(2, 2, &[c(0.5), C64::new(0.2, 0.1), C64::new(0.2, -0.1), c(0.5)]);
        let drho = apply_superop(&l, &rho);
        assert!((drho[(0, 1)] - rho[(0, 1)] * c(-2.0 * gamma)).norm() < 1e-14);
        assert!(drho[(0, 0)].norm() < 1e-15);
    }

    #[test]
    fn lindblad_rejects() {
        let bad_h = CMat::from_row_slice(2, 2, &[c(0.0), c(1.0), c(0.0), c(0.0)]);
        assert!(lindblad_superoperator(&LindbladSpec { hamiltonian: bad_h, jumps: vec![] }).is_err());
        let spec = LindbladSpec { hamiltonian: CMat::zeros(2, 2), jumps: vec![(sz(), -1.0)] };
        assert!(lindblad_superoperator(&spec).is_err());
    }

    #[test]
    fn kraus_of_identity_and_dephasing() {
        let k = superop_to_kraus(&CMat::identity(16, 16), 2, 2, 1e-9).unwrap();
        assert_eq!(k.rank(), 1);
        let a = &k.ops()[0];
        let phase = a[(0, 0)];
        assert!((phase.norm() - 1.0).abs() < 1e-12);
        assert!(frobenius_distance(&(a / phase), &CMat::identity(4, 4)) < 1e-12);

        let gamma_delta = 0.1;
        let spec = LindbladSpec { hamiltonian: CMat::zeros(2, 2), jumps: vec![(sz(), 1.0)] };
        let s = matrix_exp(&lindblad_superoperator(&spec).unwrap(), gamma_delta).unwrap();
        let k = superop_to_kraus(&s, 2, 1, 1e-9).unwrap();
        assert_eq!(k.rank(), 2);
        let rho = CMat::from_row_slice(2, 2, &[c(0.3), C64::new(0.1, 0.2), C64::new(0.1, -0.2), c(0.7)]);
        let out = k.apply(&rho);
        assert!((out[(0, 0)] - rho[(0, 0)]).norm() < 1e-12);
        assert!((out[(1, 1)] - rho[(1, 1)]).norm() < 1e-12);
        assert!((out[(0, 1)] - rho[(0, 1)] * c((-0.2f64).exp())).norm() < 1e-12);
    }

    #[test]
    fn kraus_of_unitary_conjugation() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let u = random_unitary(4, &mut rng);
        let k = superop_to_kraus(&sandwich(&u, &u.adjoint()), 2, 2, 1e-9).unwrap();
        assert_eq!(k.rank(), 1);
        let a = &k.ops()[0];
        // fix the global phase on the largest entry
        let (r, cc) = (0..16).map(|x| (x / 4, x % 4)).max_by(|p, q| u[*p].norm().total_cmp(&u[*q].norm())).unwrap();
        let phase = u[(r, cc)] / a[(r, cc)];
        assert!(frobenius_distance(&(a * phase), &u) < 1e-10);
    }

    #[test]
    fn superop_to_kraus_rejects_non_cp() {
        // transpose map is positive but not completely positive
        let n = 2;
        let t = CMat::from_fn(4, 4, |r, cc| {
            let (x, xp) = (r / n, r % n);
            let (y, yp) = (cc / n, cc % n);
            c((x == yp && xp == y) as u8 as f64)
        });
        assert!(matches!(superop_to_kraus(&t, 2, 1, 1e-9), Err(Error::NotCompletelyPositive(_))));
    }

    #[test]
    fn exp_zero_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let spec = LindbladSpec { hamiltonian: random_hermitian(4, &mut rng), jumps: vec![] };
        let l = lindblad_superoperator(&spec).unwrap();
        let e = matrix_exp(&l, 0.0).unwrap();
        assert!(frobenius_distance(&e, &CMat::identity(16, 16)) < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn stinespring_channels_normalized(seed in any::<u64>(), rank in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let ch = KrausChannel::random(2, 2, rank, &mut rng);
            let w = kraus_to_w(&ch);
            let rep = check_cptp(&w, 1e-9);
            prop_assert!(rep.pass, "{:?}", rep);
        }

        #[test]
        fn superop_kraus_roundtrip(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = random_hermitian(4, &mut rng);
            let l1 = crate::tensorops::random::random_matrix(4, 4, &mut rng);
            let spec = LindbladSpec { hamiltonian: h, jumps: vec![(l1, 0.4)] };
            let s = matrix_exp(&lindblad_superoperator(&spec).unwrap(), 0.3).unwrap();
            let k = superop_to_kraus(&s, 2, 2, 1e-9).unwrap();
            let w = kraus_to_w(&k);
            for _ in 0..10 {
                let rho = random_density(4, 4, &mut rng);
                let direct = apply_superop(&s, &rho);
                prop_assert!(frobenius_distance(&w.apply(&rho), &direct) < 1e-8);
                prop_assert!(hermiticity_defect(&direct) < 1e-10);
            }
        }
    }
}
