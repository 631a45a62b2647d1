use crate::channels::{reshuffle, sandwich};
use crate::error::{Error, Result};
use crate::tensorops::linalg::{eig_hermitian_unchecked, hermiticity_defect};
use crate::{CMat, C64};

/// A CP map on the system, stored as a `d² x d²` superoperator in the
/// crate-wide row-major convention. Applied between consecutive environment
/// steps it maps output indices `(o, o')` onto the next input `(i, i')`.
#[derive(Clone, Debug, PartialEq)]
pub struct Intervention {
    superop: CMat,
    d: usize,
}

impl Intervention {
    pub const CP_TOL: f64 = 1e-9;

    pub fn from_superop(superop: CMat, d: usize) -> Result<Self> {
        if superop.nrows() != d * d || superop.ncols() != d * d {
            return Err(Error::DimensionMismatch(format!("intervention must be {0}x{0}", d * d)));
        }
        let choi = reshuffle(&superop, d);
        let defect = hermiticity_defect(&choi);
        if defect > Self::CP_TOL {
            return Err(Error::NotCompletelyPositive(-defect));
        }
        let (vals, _) = eig_hermitian_unchecked(&choi);
        let min = *vals.last().unwrap();
        if min < -Self::CP_TOL {
            return Err(Error::NotCompletelyPositive(min));
        }
        Ok(Self { superop, d })
    }

    /// Measurement with effect `m` followed by preparation of `p`:
    /// `ρ ↦ tr(m ρ) p`.
    pub fn measure_prepare(m: &CMat, p: &CMat) -> Result<Self> {
        let d = m.nrows();
        if m.ncols() != d || p.nrows() != d || p.ncols() != d {
            return Err(Error::DimensionMismatch("measurement and preparation must be d x d".into()));
        }
        // L[(i,i'),(o,o')] = p[i,i'] m[o',o]
        let s = CMat::from_fn(d * d, d * d, |r, c| p[(r / d, r % d)] * m[(c % d, c / d)]);
        Self::from_superop(s, d)
    }

    pub fn identity(d: usize) -> Self {
        Self { superop: CMat::identity(d * d, d * d), d }
    }

    pub fn unitary(u: &CMat) -> Result<Self> {
        Self::from_superop(sandwich(u, &u.adjoint()), u.nrows())
    }

    /// `ρ ↦ tr(ρ) I`: the contraction with identity pairs used for averaged
    /// (local) expectation values.
    pub fn trace_and_identity(d: usize) -> Self {
        let id = CMat::identity(d, d);
        Self::measure_prepare(&id, &id).expect("identity pair is CP")
    }

    pub fn superop(&self) -> &CMat {
        &self.superop
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn is_trace_preserving(&self, tol: f64) -> bool {
        let d = self.d;
        // Σ_i L[(i,i),(o,o')] = δ_{oo'}
        (0..d * d).all(|c| {
            let v: C64 = (0..d).map(|i| self.superop[(i * d + i, c)]).sum();
            let expect = if c / d == c % d { 1.0 } else { 0.0 };
            (v - C64::new(expect, 0.0)).norm() < tol
        })
    }

    /// Applies the map to the system factor of a `(d·env) x (d·env)` operator.
    pub fn apply_on_system(&self, rho: &CMat, env: usize) -> CMat {
        let d = self.d;
        let n = d * env;
        let mut out = CMat::zeros(n, n);
        for i in 0..d {
            for ip in 0..d {
                for o in 0..d {
                    for op in 0..d {
                        let l = self.superop[(i * d + ip, o * d + op)];
                        if l == C64::new(0.0, 0.0) {
                            continue;
                        }
                        for a in 0..env {
                            for ap in 0..env {
                                out[(i * env + a, ip * env + ap)] += l * rho[(o * env + a, op * env + ap)];
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// `k` interventions plus an optional final measurement operator.
#[derive(Clone, Debug, Default)]
pub struct OperationSequence {
    pub ops: Vec<Intervention>,
    pub final_measurement: Option<CMat>,
}

impl OperationSequence {
    pub fn new(ops: Vec<Intervention>) -> Self {
        Self { ops, final_measurement: None }
    }

    pub fn with_measurement(ops: Vec<Intervention>, m: CMat) -> Self {
        Self { ops, final_measurement: Some(m) }
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }
}
