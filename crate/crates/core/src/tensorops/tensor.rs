//! Dense complex tensors with named indices.
//!
//! Data is stored row-major: the last label varies fastest. Contraction is
//! performed by permuting both operands into matrix form and multiplying.

use std::collections::HashSet;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::{CMat, C64};

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledTensor {
    data: Vec<C64>,
    labels: Vec<String>,
    dims: Vec<usize>,
}

fn row_major_strides(dims: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; dims.len()];
    for ax in (0..dims.len().saturating_sub(1)).rev() {
        strides[ax] = strides[ax + 1] * dims[ax + 1];
    }
    strides
}

impl LabeledTensor {
    pub fn new<S: Into<String>>(data: Vec<C64>, labels: Vec<S>, dims: Vec<usize>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.len() != dims.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} labels for rank-{} tensor",
                labels.len(),
                dims.len()
            )));
        }
        let mut seen = HashSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(Error::DuplicateLabel(l.clone()));
            }
        }
        if dims.contains(&0) {
            return Err(Error::DimensionMismatch("zero-sized index".into()));
        }
        let size: usize = dims.iter().product();
        if size != data.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} elements for dims {:?}",
                data.len(),
                dims
            )));
        }
        Ok(Self { data, labels, dims })
    }

    pub fn zeros<S: Into<String>>(labels: Vec<S>, dims: Vec<usize>) -> Result<Self> {
        let size = dims.iter().product();
        Self::new(vec![C64::new(0.0, 0.0); size], labels, dims)
    }

    pub fn scalar(value: C64) -> Self {
        Self { data: vec![value], labels: Vec::new(), dims: Vec::new() }
    }

    /// Builds a tensor by evaluating `f` on every multi-index.
    pub fn from_fn<S, F>(labels: Vec<S>, dims: Vec<usize>, mut f: F) -> Result<Self>
    where
        S: Into<String>,
        F: FnMut(&[usize]) -> C64,
    {
        let size: usize = dims.iter().product();
        let mut data = Vec::with_capacity(size);
        let mut idx = vec![0usize; dims.len()];
        for _ in 0..size {
            data.push(f(&idx));
            increment(&mut idx, &dims);
        }
        Self::new(data, labels, dims)
    }

    pub fn rank(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn axis(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn dim_of(&self, label: &str) -> Result<usize> {
        Ok(self.dims[self.axis(label)?])
    }

    /// Element at a multi-index given in label order.
    pub fn get(&self, idx: &[usize]) -> C64 {
        let strides = row_major_strides(&self.dims);
        let off: usize = idx.iter().zip(&strides).map(|(i, s)| i * s).sum();
        self.data[off]
    }

    /// Value of a rank-0 tensor.
    pub fn to_scalar(&self) -> Result<C64> {
        if self.rank() != 0 {
            return Err(Error::DimensionMismatch(format!("expected scalar, got rank {}", self.rank())));
        }
        Ok(self.data[0])
    }

    pub fn relabel(mut self, from: &str, to: &str) -> Result<Self> {
        let ax = self.axis(from)?;
        if from != to && self.labels.iter().any(|l| l == to) {
            return Err(Error::DuplicateLabel(to.to_string()));
        }
        self.labels[ax] = to.to_string();
        Ok(self)
    }

    /// Reorders the axes to follow `order`, which must name every label once.
    pub fn permute(&self, order: &[&str]) -> Result<Self> {
        if order.len() != self.rank() {
            return Err(Error::DimensionMismatch(format!(
                "permutation of length {} for rank {}",
                order.len(),
                self.rank()
            )));
        }
        let axes = order.iter().map(|l| self.axis(l)).collect::<Result<Vec<_>>>()?;
        let mut seen = HashSet::new();
        for l in order {
            if !seen.insert(*l) {
                return Err(Error::DuplicateLabel(l.to_string()));
            }
        }
        Ok(self.permute_axes(&axes))
    }

    fn permute_axes(&self, axes: &[usize]) -> Self {
        let src_strides = row_major_strides(&self.dims);
        let dims: Vec<usize> = axes.iter().map(|&a| self.dims[a]).collect();
        let strides: Vec<usize> = axes.iter().map(|&a| src_strides[a]).collect();
        let labels: Vec<String> = axes.iter().map(|&a| self.labels[a].clone()).collect();
        let mut data = Vec::with_capacity(self.data.len());
        let mut idx = vec![0usize; dims.len()];
        let mut off = 0usize;
        for _ in 0..self.data.len() {
            data.push(self.data[off]);
            // odometer increment with incremental offset update
            for ax in (0..dims.len()).rev() {
                idx[ax] += 1;
                off += strides[ax];
                if idx[ax] < dims[ax] {
                    break;
                }
                off -= strides[ax] * dims[ax];
                idx[ax] = 0;
            }
        }
        Self { data, labels, dims }
    }

    /// Views the tensor as a matrix with the given row and column label groups.
    pub fn to_matrix(&self, rows: &[&str], cols: &[&str]) -> Result<CMat> {
        let order: Vec<&str> = rows.iter().chain(cols).copied().collect();
        let p = self.permute(&order)?;
        let nr: usize = p.dims[..rows.len()].iter().product();
        let nc: usize = p.dims[rows.len()..].iter().product();
        Ok(DMatrix::from_row_slice(nr, nc, &p.data))
    }

    /// Inverse of [`to_matrix`](Self::to_matrix): reshapes a matrix into a tensor.
    pub fn from_matrix(m: &CMat, rows: &[(&str, usize)], cols: &[(&str, usize)]) -> Result<Self> {
        let nr: usize = rows.iter().map(|r| r.1).product();
        let nc: usize = cols.iter().map(|c| c.1).product();
        if m.nrows() != nr || m.ncols() != nc {
            return Err(Error::DimensionMismatch(format!(
                "matrix {}x{} vs groups {}x{}",
                m.nrows(),
                m.ncols(),
                nr,
                nc
            )));
        }
        let mut data = Vec::with_capacity(nr * nc);
        for r in 0..nr {
            for c in 0..nc {
                data.push(m[(r, c)]);
            }
        }
        let labels: Vec<&str> = rows.iter().chain(cols).map(|x| x.0).collect();
        let dims: Vec<usize> = rows.iter().chain(cols).map(|x| x.1).collect();
        Self::new(data, labels, dims)
    }

    /// Sums over pairs of indices of this tensor (partial trace).
    pub fn trace(&self, pairs: &[(&str, &str)]) -> Result<Self> {
        let mut traced = Vec::new();
        for (a, b) in pairs {
            let (ia, ib) = (self.axis(a)?, self.axis(b)?);
            if ia == ib || self.dims[ia] != self.dims[ib] {
                return Err(Error::DimensionMismatch(format!("cannot trace `{a}` with `{b}`")));
            }
            traced.push((ia, ib));
        }
        let used: HashSet<usize> = traced.iter().flat_map(|&(a, b)| [a, b]).collect();
        if used.len() != 2 * traced.len() {
            return Err(Error::DuplicateLabel("index traced twice".into()));
        }
        let free: Vec<usize> = (0..self.rank()).filter(|a| !used.contains(a)).collect();
        let strides = row_major_strides(&self.dims);
        let out_dims: Vec<usize> = free.iter().map(|&a| self.dims[a]).collect();
        let out_labels: Vec<String> = free.iter().map(|&a| self.labels[a].clone()).collect();
        let tr_dims: Vec<usize> = traced.iter().map(|&(a, _)| self.dims[a]).collect();
        let tr_strides: Vec<usize> = traced.iter().map(|&(a, b)| strides[a] + strides[b]).collect();
        let out_size: usize = out_dims.iter().product();
        let tr_size: usize = tr_dims.iter().product();
        let mut data = vec![C64::new(0.0, 0.0); out_size];
        let mut oidx = vec![0usize; out_dims.len()];
        for slot in data.iter_mut() {
            let base: usize = oidx.iter().zip(&free).map(|(i, &a)| i * strides[a]).sum();
            let mut tidx = vec![0usize; tr_dims.len()];
            let mut acc = C64::new(0.0, 0.0);
            for _ in 0..tr_size {
                let off: usize = base + tidx.iter().zip(&tr_strides).map(|(i, s)| i * s).sum::<usize>();
                acc += self.data[off];
                increment(&mut tidx, &tr_dims);
            }
            *slot = acc;
            increment(&mut oidx, &out_dims);
        }
        Self::new(data, out_labels, out_dims)
    }

    pub fn conj(&self) -> Self {
        Self {
            data: self.data.iter().map(|z| z.conj()).collect(),
            labels: self.labels.clone(),
            dims: self.dims.clone(),
        }
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            data: self.data.iter().map(|z| z * factor).collect(),
            labels: self.labels.clone(),
            dims: self.dims.clone(),
        }
    }

    /// Largest elementwise deviation from `other` after aligning labels.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        let order: Vec<&str> = self.labels.iter().map(String::as_str).collect();
        let o = other.permute(&order)?;
        if o.dims != self.dims {
            return Err(Error::DimensionMismatch("tensor shapes differ".into()));
        }
        Ok(self.data.iter().zip(&o.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

fn increment(idx: &mut [usize], dims: &[usize]) {
    for ax in (0..dims.len()).rev() {
        idx[ax] += 1;
        if idx[ax] < dims[ax] {
            return;
        }
        idx[ax] = 0;
    }
}

/// Contracts `a` and `b` over the given `(label_in_a, label_in_b)` pairs.
///
/// The result carries the uncontracted labels of `a` followed by those of `b`.
pub fn contract(a: &LabeledTensor, b: &LabeledTensor, pairs: &[(&str, &str)]) -> Result<LabeledTensor> {
    let mut a_sum = Vec::with_capacity(pairs.len());
    let mut b_sum = Vec::with_capacity(pairs.len());
    for (la, lb) in pairs {
        let (da, db) = (a.dim_of(la)?, b.dim_of(lb)?);
        if da != db {
            return Err(Error::DimensionMismatch(format!("`{la}` has dim {da}, `{lb}` has dim {db}")));
        }
        a_sum.push(*la);
        b_sum.push(*lb);
    }
    let a_free: Vec<&str> = a.labels.iter().map(String::as_str).filter(|l| !a_sum.contains(l)).collect();
    let b_free: Vec<&str> = b.labels.iter().map(String::as_str).filter(|l| !b_sum.contains(l)).collect();
    if a_free.len() + a_sum.len() != a.rank() || b_free.len() + b_sum.len() != b.rank() {
        return Err(Error::DuplicateLabel("label contracted twice".into()));
    }
    let mut seen = HashSet::new();
    for l in a_free.iter().chain(&b_free) {
        if !seen.insert(*l) {
            return Err(Error::DuplicateLabel(l.to_string()));
        }
    }
    let ma = a.to_matrix(&a_free, &a_sum)?;
    let mb = b.to_matrix(&b_sum, &b_free)?;
    let prod = ma * mb;
    let mut dims = Vec::with_capacity(a_free.len() + b_free.len());
    for l in &a_free {
        dims.push(a.dim_of(l)?);
    }
    for l in &b_free {
        dims.push(b.dim_of(l)?);
    }
    let labels: Vec<String> = a_free.iter().chain(&b_free).map(|s| s.to_string()).collect();
    let mut data = Vec::with_capacity(prod.len());
    for r in 0..prod.nrows() {
        for c in 0..prod.ncols() {
            data.push(prod[(r, c)]);
        }
    }
    LabeledTensor::new(data, labels, dims)
}
