//! Single-head scaled dot-product attention over a sequence of hidden states.
//!
//! The query comes from one state (`h_last`), keys and values from the whole
//! sequence:
//!
//! ```text
//! Q = h_last·W_q   K = H·W_k   V = H·W_v
//! a = softmax(Q·Kᵀ / √d_k)
//! context = a·V
//! ```

use serde::{Deserialize, Serialize};

use super::{Matrix, Parameters};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionParams {
    /// `H × d_k`.
    pub w_q: Matrix,
    /// `H × d_k`.
    pub w_k: Matrix,
    /// `H × d_v`.
    pub w_v: Matrix,
}

pub type AttentionGrads = AttentionParams;

impl AttentionParams {
    pub fn zeros(hidden: usize, d_k: usize, d_v: usize) -> Self {
        Self {
            w_q: Matrix::zeros(hidden, d_k),
            w_k: Matrix::zeros(hidden, d_k),
            w_v: Matrix::zeros(hidden, d_v),
        }
    }

    /// Uniform in ±1/√hidden; draw order W_q, W_k, W_v.
    pub fn init(hidden: usize, d_k: usize, d_v: usize, rng: &mut SplitMix64) -> Self {
        let mut p = Self::zeros(hidden, d_k, d_v);
        let s = 1.0 / (hidden as f64).sqrt();
        for w in [&mut p.w_q, &mut p.w_k, &mut p.w_v] {
            for v in w.data_mut() {
                *v = rng.uniform(-s, s);
            }
        }
        p
    }

    pub fn hidden_dim(&self) -> usize {
        self.w_q.rows()
    }

    pub fn d_k(&self) -> usize {
        self.w_q.cols()
    }

    pub fn d_v(&self) -> usize {
        self.w_v.cols()
    }

    pub fn validate(&self) -> Result<()> {
        let h = self.w_q.rows();
        if self.d_k() == 0 || self.d_v() == 0 || h == 0 {
            return Err(Error::Shape("attention dimensions must be >= 1".into()));
        }
        if self.w_k.shape() != self.w_q.shape() || self.w_v.rows() != h {
            return Err(Error::Shape(format!(
                "attention weights W_q {:?}, W_k {:?}, W_v {:?} are inconsistent",
                self.w_q.shape(),
                self.w_k.shape(),
                self.w_v.shape()
            )));
        }
        if !(self.w_q.is_finite() && self.w_k.is_finite() && self.w_v.is_finite()) {
            return Err(Error::NonFinite("attention parameters".into()));
        }
        Ok(())
    }
}

impl Parameters for AttentionParams {
    fn tensors(&self) -> Vec<&[f64]> {
        vec![self.w_q.data(), self.w_k.data(), self.w_v.data()]
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        vec![self.w_q.data_mut(), self.w_k.data_mut(), self.w_v.data_mut()]
    }
}

#[derive(Debug, Clone)]
pub struct AttentionTape {
    fingerprint: u64,
    h_seq: Matrix,
    h_last: Matrix,
    q: Matrix,
    k: Matrix,
    v: Matrix,
    weights: Matrix,
}

impl AttentionTape {
    /// Attention weights over the sequence (`1 × n`).
    pub fn weights(&self) -> &Matrix {
        &self.weights
    }
}

/// Row-wise softmax with max subtraction.
pub fn softmax_rows(m: &Matrix) -> Matrix {
    let mut out = m.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    out
}

/// Context vector (`1 × d_v`) for `h_seq` (`n × H`) queried by `h_last` (`1 × H`).
pub fn attention_forward(h_seq: &Matrix, h_last: &Matrix, p: &AttentionParams) -> Result<(Matrix, AttentionTape)> {
    let h = p.hidden_dim();
    if h_seq.cols() != h || h_last.shape() != (1, h) || h_seq.rows() == 0 {
        return Err(Error::Shape(format!(
            "attention inputs {:?} / {:?} do not match hidden size {h}",
            h_seq.shape(),
            h_last.shape()
        )));
    }
    let q = h_last.matmul(&p.w_q)?;
    let k = h_seq.matmul(&p.w_k)?;
    let v = h_seq.matmul(&p.w_v)?;
    let mut logits = q.matmul_t(&k)?;
    logits.scale(1.0 / (p.d_k() as f64).sqrt());
    let weights = softmax_rows(&logits);
    let context = weights.matmul(&v)?;
    if !context.is_finite() {
        return Err(Error::NonFinite("attention context".into()));
    }
    let tape = AttentionTape {
        fingerprint: p.fingerprint(),
        h_seq: h_seq.clone(),
        h_last: h_last.clone(),
        q,
        k,
        v,
        weights,
    };
    Ok((context, tape))
}

/// Gradients of the context with respect to `h_seq`, `h_last`, and the
/// projection weights, through the softmax Jacobian and the 1/√d_k scale.
pub fn attention_backward(
    d_context: &Matrix,
    tape: &AttentionTape,
    p: &AttentionParams,
) -> Result<(Matrix, Matrix, AttentionGrads)> {
    if tape.fingerprint != p.fingerprint() || tape.q.cols() != p.d_k() || tape.v.cols() != p.d_v() {
        return Err(Error::StaleTape("attention tape was recorded with other parameters".into()));
    }
    if d_context.shape() != (1, p.d_v()) {
        return Err(Error::Shape(format!(
            "attention upstream gradient {:?}, expected (1, {})",
            d_context.shape(),
            p.d_v()
        )));
    }
    let scale = 1.0 / (p.d_k() as f64).sqrt();
    let a = &tape.weights;

    let d_v = a.t_matmul(d_context)?; // n × d_v
    let d_a = d_context.matmul_t(&tape.v)?; // 1 × n
    let inner: f64 = a.data().iter().zip(d_a.data()).map(|(x, y)| x * y).sum();
    let mut d_logits = Matrix::zeros(1, a.cols());
    for j in 0..a.cols() {
        d_logits.set(0, j, a.get(0, j) * (d_a.get(0, j) - inner) * scale);
    }
    let d_q = d_logits.matmul(&tape.k)?; // 1 × d_k
    let d_k = d_logits.t_matmul(&tape.q)?; // n × d_k

    let grads = AttentionParams {
        w_q: tape.h_last.t_matmul(&d_q)?,
        w_k: tape.h_seq.t_matmul(&d_k)?,
        w_v: tape.h_seq.t_matmul(&d_v)?,
    };
    let d_h_last = d_q.matmul_t(&p.w_q)?;
    let mut d_h_seq = d_k.matmul_t(&p.w_k)?;
    d_h_seq.add_assign(&d_v.matmul_t(&p.w_v)?)?;
    Ok((d_h_seq, d_h_last, grads))
}
