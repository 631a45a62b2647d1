//! Dense linear algebra on complex matrices.

use nalgebra::DMatrix;

use super::tensor::LabeledTensor;
use crate::error::{Error, Result};
use crate::{CMat, C64};

pub const HERMITIAN_TOL: f64 = 1e-10;

pub fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

pub fn one() -> C64 {
    C64::new(1.0, 0.0)
}

pub fn dagger(m: &CMat) -> CMat {
    m.adjoint()
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Largest elementwise deviation of `m` from its adjoint.
pub fn hermiticity_defect(m: &CMat) -> f64 {
    let mut worst: f64 = 0.0;
    for r in 0..m.nrows() {
        for c in r..m.ncols() {
            worst = worst.max((m[(r, c)] - m[(c, r)].conj()).norm());
        }
    }
    worst
}

fn check_square(m: &CMat) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    Ok(())
}

/// Frobenius norm of `a - b`.
pub fn frobenius_distance(a: &CMat, b: &CMat) -> f64 {
    (a - b).norm()
}

/// Eigen-decomposition of a Hermitian matrix; eigenvalues are returned in
/// descending order with the matching eigenvector columns.
pub fn eig_hermitian(m: &CMat) -> Result<(Vec<f64>, CMat)> {
    check_square(m)?;
    let scale = m.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let defect = hermiticity_defect(m);
    if defect > HERMITIAN_TOL * scale {
        return Err(Error::NotHermitian(defect));
    }
    Ok(eig_hermitian_unchecked(m))
}

pub(crate) fn eig_hermitian_unchecked(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    let sym = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Eigenvalues only, descending.
pub fn eigvals_hermitian(m: &CMat) -> Result<Vec<f64>> {
    eig_hermitian(m).map(|(v, _)| v)
}

/// Splits `t` into `U · diag(s) · V` across the bipartition given by
/// `left_labels`. The new bond index is labelled `bond` on both factors.
pub fn svd_split(t: &LabeledTensor, left_labels: &[&str]) -> Result<(LabeledTensor, Vec<f64>, LabeledTensor)> {
    if left_labels.is_empty() || left_labels.len() >= t.rank() {
        return Err(Error::InvalidArgument("left labels must be a nonempty proper subset".into()));
    }
    for l in left_labels {
        t.axis(l)?;
    }
    let right: Vec<&str> = t.labels().iter().map(String::as_str).filter(|l| !left_labels.contains(l)).collect();
    if right.len() + left_labels.len() != t.rank() {
        return Err(Error::DuplicateLabel("repeated left label".into()));
    }
    let m = t.to_matrix(left_labels, &right)?;
    let svd = m.svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    let k = svd.singular_values.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let s: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let u = DMatrix::from_fn(u.nrows(), k, |r, c| u[(r, order[c])]);
    let v = DMatrix::from_fn(k, v_t.ncols(), |r, c| v_t[(order[r], c)]);

    let left_groups: Vec<(&str, usize)> = left_labels.iter().map(|l| (*l, t.dim_of(l).unwrap())).collect();
    let right_groups: Vec<(&str, usize)> = right.iter().map(|l| (*l, t.dim_of(l).unwrap())).collect();
    let ut = LabeledTensor::from_matrix(&u, &left_groups, &[("bond", k)])?;
    let vt = LabeledTensor::from_matrix(&v, &[("bond", k)], &right_groups)?;
    Ok((ut, s, vt))
}

const THETA_13: f64 = 5.371_920_351_148_152;
const PADE_13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

fn is_skew_hermitian(m: &CMat, tol: f64) -> bool {
    let mut worst: f64 = 0.0;
    for r in 0..m.nrows() {
        for c in r..m.ncols() {
            worst = worst.max((m[(r, c)] + m[(c, r)].conj()).norm());
        }
    }
    worst <= tol
}

/// `exp(m * t)`.
///
/// Hermitian and skew-Hermitian inputs go through the eigen-decomposition;
/// everything else (Liouvillians are generally non-normal) uses
/// scaling-and-squaring with a degree-13 Padé approximant.
pub fn matrix_exp(m: &CMat, t: f64) -> Result<CMat> {
    check_square(m)?;
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) || !t.is_finite() {
        return Err(Error::InvalidArgument("non-finite entry".into()));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(CMat::zeros(0, 0));
    }
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let tol = 1e-14 * scale.max(1.0);
    if hermiticity_defect(m) <= tol {
        let (vals, vecs) = eig_hermitian_unchecked(m);
        let diag = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
            n,
            vals.iter().map(|&l| C64::new((l * t).exp(), 0.0)),
        ));
        return Ok(&vecs * diag * vecs.adjoint());
    }
    if is_skew_hermitian(m, tol) {
        // m = i h with h Hermitian
        let h = m * C64::new(0.0, -1.0);
        let (vals, vecs) = eig_hermitian_unchecked(&h);
        let diag = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
            n,
            vals.iter().map(|&l| C64::from_polar(1.0, l * t)),
        ));
        return Ok(&vecs * diag * vecs.adjoint());
    }
    Ok(expm_pade13(&(m * C64::new(t, 0.0))))
}

fn one_norm(m: &CMat) -> f64 {
    (0..m.ncols()).map(|c| m.column(c).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

fn expm_pade13(a: &CMat) -> CMat {
    let n = a.nrows();
    let norm = one_norm(a);
    let s = if norm > THETA_13 { (norm / THETA_13).log2().ceil() as i32 } else { 0 };
    let a = a * C64::new(2f64.powi(-s), 0.0);
    let ident = CMat::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = |i: usize| C64::new(PADE_13[i], 0.0);
    let u_inner = &a6 * (&a6 * b(13) + &a4 * b(11) + &a2 * b(9)) + &a6 * b(7) + &a4 * b(5) + &a2 * b(3) + &ident * b(1);
    let u = &a * u_inner;
    let v = &a6 * (&a6 * b(12) + &a4 * b(10) + &a2 * b(8)) + &a6 * b(6) + &a4 * b(4) + &a2 * b(2) + &ident * b(0);
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.lu().solve(&p).expect("Padé denominator is nonsingular after scaling");
    for _ in 0..s {
        r = &r * &r;
    }
    r
}
