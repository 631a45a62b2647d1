//! JSON containers shared with the command-line tool. Complex numbers are
//! always `[re, im]` pairs.

use crate::channels::{kraus_to_w, ChannelTensor, KrausChannel};
use crate::error::{Error, Result};
use crate::process_tensor::ProcessTensor;
use crate::tensorops::LabeledTensor;
use crate::{CMat, C64};
use serde::{Deserialize, Serialize};

pub type Pair = [f64; 2];

/// Twelve significant digits in scientific notation.
pub fn fmt_float(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:.11e}")
}

pub fn to_pair(z: C64) -> Pair {
    [z.re, z.im]
}

pub fn from_pair(p: Pair) -> C64 {
    C64::new(p[0], p[1])
}

pub fn matrix_to_rows(m: &CMat) -> Vec<Vec<Pair>> {
    (0..m.nrows()).map(|r| (0..m.ncols()).map(|c| to_pair(m[(r, c)])).collect()).collect()
}

pub fn rows_to_matrix(rows: &[Vec<Pair>], field: &str) -> Result<CMat> {
    let nr = rows.len();
    let nc = rows.first().map_or(0, Vec::len);
    if let Some((r, row)) = rows.iter().enumerate().find(|(_, row)| row.len() != nc) {
        return Err(format_err(&format!("{field}[{r}]"), format!("row has {} entries, expected {nc}", row.len())));
    }
    Ok(CMat::from_fn(nr, nc, |r, c| from_pair(rows[r][c])))
}

fn format_err(field: &str, reason: impl Into<String>) -> Error {
    Error::Format { field: field.to_string(), reason: reason.into() }
}

/// `{d, D, kraus}` with each Kraus operator a `dD x dD` matrix of pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelFile {
    pub d: usize,
    #[serde(rename = "D")]
    pub env_dim: usize,
    pub kraus: Vec<Vec<Vec<Pair>>>,
}

impl ChannelFile {
    pub fn from_kraus(ch: &KrausChannel) -> Self {
        Self { d: ch.d(), env_dim: ch.env_dim(), kraus: ch.ops().iter().map(matrix_to_rows).collect() }
    }

    pub fn to_kraus(&self) -> Result<KrausChannel> {
        let n = self.d * self.env_dim;
        if n == 0 {
            return Err(format_err("d", "d and D must be positive"));
        }
        if self.kraus.is_empty() {
            return Err(format_err("kraus", "no Kraus operators"));
        }
        let mut ops = Vec::with_capacity(self.kraus.len());
        for (s, rows) in self.kraus.iter().enumerate() {
            let field = format!("kraus[{s}]");
            let m = rows_to_matrix(rows, &field)?;
            if m.nrows() != n || m.ncols() != n {
                return Err(format_err(&field, format!("shape {}x{}, expected {n}x{n}", m.nrows(), m.ncols())));
            }
            ops.push(m);
        }
        KrausChannel::new(ops, self.d, self.env_dim).map_err(|e| format_err("kraus", e.to_string()))
    }

    pub fn to_channel(&self) -> Result<ChannelTensor> {
        Ok(kraus_to_w(&self.to_kraus()?))
    }
}

/// Dense labelled tensor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorFile {
    pub labels: Vec<String>,
    pub dims: Vec<usize>,
    pub data: Vec<Pair>,
}

impl TensorFile {
    pub fn from_tensor(t: &LabeledTensor) -> Self {
        Self { labels: t.labels().to_vec(), dims: t.dims().to_vec(), data: t.data().iter().map(|&z| to_pair(z)).collect() }
    }

    pub fn to_tensor(&self) -> Result<LabeledTensor> {
        LabeledTensor::new(self.data.iter().map(|&p| from_pair(p)).collect(), self.labels.clone(), self.dims.clone())
            .map_err(|e| format_err("data", e.to_string()))
    }
}

/// Process tensor as per-site dense arrays.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProcessTensorFile {
    pub d: usize,
    #[serde(rename = "D")]
    pub env_dim: usize,
    pub k: usize,
    pub rho0: TensorFile,
    pub sites: Vec<TensorFile>,
}

impl ProcessTensorFile {
    pub fn from_process_tensor(pt: &ProcessTensor) -> Self {
        Self {
            d: pt.d(),
            env_dim: pt.env_dim(),
            k: pt.k(),
            rho0: TensorFile::from_tensor(&pt.rho0_tensor()),
            sites: pt.sites().iter().map(|s| TensorFile::from_tensor(&s.w())).collect(),
        }
    }

    pub fn to_process_tensor(&self) -> Result<ProcessTensor> {
        let (d, e) = (self.d, self.env_dim);
        if self.sites.len() != self.k {
            return Err(format_err("sites", format!("{} sites for k = {}", self.sites.len(), self.k)));
        }
        let r = self.rho0.to_tensor()?;
        let rho0 = r.to_matrix(&["o0", "a0"], &["o0'", "a0'"]).map_err(|e| format_err("rho0", e.to_string()))?;
        let n = d * e;
        let mut sites = Vec::with_capacity(self.k);
        for (m, s) in self.sites.iter().enumerate() {
            let field = format!("sites[{m}]");
            let w = s.to_tensor().map_err(|e| format_err(&field, e.to_string()))?;
            let s = w
                .to_matrix(&["o", "b", "o'", "b'"], &["i", "a", "i'", "a'"])
                .map_err(|e| format_err(&field, e.to_string()))?;
            if s.nrows() != n * n {
                return Err(format_err(&field, "site shape does not match (d, D)"));
            }
            sites.push(ChannelTensor::from_superop(s, d, e)?);
        }
        ProcessTensor::from_parts(rho0, sites)
    }
}

pub fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable")
}

/// Parses JSON; errors name the offending field path and position.
pub fn from_json<T: for<'de> Deserialize<'de>>(s: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(s);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = match e.path().to_string() {
            p if p == "." => "document".to_string(),
            p => p,
        };
        Error::Format { field, reason: e.into_inner().to_string() }
    })
}
