//! Single-layer LSTM over a window, with backpropagation through time.
//!
//! Each gate reads the concatenation `z_t = [x_t, h_{t-1}]`:
//!
//! ```text
//! i = σ(z·W_i + b_i)   f = σ(z·W_f + b_f)   o = σ(z·W_o + b_o)
//! g = tanh(z·W_g + b_g)
//! c_t = f ⊙ c_{t-1} + i ⊙ g
//! h_t = o ⊙ tanh(c_t)
//! ```
//!
//! with `h_0 = c_0 = 0`.

use serde::{Deserialize, Serialize};

use super::{outer_acc, mat_vec_acc, sigmoid, vec_mat_acc, Matrix, Parameters};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmParams {
    pub input_dim: usize,
    pub hidden_dim: usize,
    /// `(input_dim + hidden_dim) × hidden_dim` each.
    pub w_i: Matrix,
    pub w_f: Matrix,
    pub w_o: Matrix,
    pub w_g: Matrix,
    pub b_i: Vec<f64>,
    pub b_f: Vec<f64>,
    pub b_o: Vec<f64>,
    pub b_g: Vec<f64>,
}

impl LstmParams {
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        let w = || Matrix::zeros(input_dim + hidden_dim, hidden_dim);
        Self {
            input_dim,
            hidden_dim,
            w_i: w(),
            w_f: w(),
            w_o: w(),
            w_g: w(),
            b_i: vec![0.0; hidden_dim],
            b_f: vec![0.0; hidden_dim],
            b_o: vec![0.0; hidden_dim],
            b_g: vec![0.0; hidden_dim],
        }
    }

    /// Weights uniform in ±1/√(input_dim + hidden_dim); forget bias 1, other
    /// biases 0. Draw order: W_i, W_f, W_o, W_g, each row-major.
    pub fn init(input_dim: usize, hidden_dim: usize, rng: &mut SplitMix64) -> Self {
        let mut p = Self::zeros(input_dim, hidden_dim);
        let s = 1.0 / ((input_dim + hidden_dim) as f64).sqrt();
        for w in [&mut p.w_i, &mut p.w_f, &mut p.w_o, &mut p.w_g] {
            for v in w.data_mut() {
                *v = rng.uniform(-s, s);
            }
        }
        p.b_f.fill(1.0);
        p
    }

    pub fn validate(&self) -> Result<()> {
        let z = self.input_dim + self.hidden_dim;
        if self.input_dim == 0 || self.hidden_dim == 0 {
            return Err(Error::Shape("LSTM dimensions must be >= 1".into()));
        }
        for (name, w) in [("w_i", &self.w_i), ("w_f", &self.w_f), ("w_o", &self.w_o), ("w_g", &self.w_g)] {
            if w.shape() != (z, self.hidden_dim) {
                return Err(Error::Shape(format!(
                    "LSTM {name} is {:?}, expected ({z}, {})",
                    w.shape(),
                    self.hidden_dim
                )));
            }
        }
        for (name, b) in [("b_i", &self.b_i), ("b_f", &self.b_f), ("b_o", &self.b_o), ("b_g", &self.b_g)] {
            if b.len() != self.hidden_dim {
                return Err(Error::Shape(format!(
                    "LSTM {name} has length {}, expected {}",
                    b.len(),
                    self.hidden_dim
                )));
            }
        }
        if self.tensors().iter().any(|t| t.iter().any(|v| !v.is_finite())) {
            return Err(Error::NonFinite("LSTM parameters".into()));
        }
        Ok(())
    }
}

impl Parameters for LstmParams {
    fn tensors(&self) -> Vec<&[f64]> {
        vec![
            self.w_i.data(),
            self.w_f.data(),
            self.w_o.data(),
            self.w_g.data(),
            &self.b_i,
            &self.b_f,
            &self.b_o,
            &self.b_g,
        ]
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        vec![
            self.w_i.data_mut(),
            self.w_f.data_mut(),
            self.w_o.data_mut(),
            self.w_g.data_mut(),
            &mut self.b_i,
            &mut self.b_f,
            &mut self.b_o,
            &mut self.b_g,
        ]
    }
}

/// Forward intermediates, one row per time step.
#[derive(Debug, Clone)]
pub struct LstmTape {
    fingerprint: u64,
    /// `n × (d_in + H)`.
    z: Matrix,
    i: Matrix,
    f: Matrix,
    o: Matrix,
    g: Matrix,
    c: Matrix,
    tanh_c: Matrix,
}

impl LstmTape {
    pub fn steps(&self) -> usize {
        self.z.rows()
    }
}

/// Runs the cell over `x_seq` (`n × d_in`). Returns all hidden states
/// (`n × H`), the last one (`1 × H`), and the tape.
pub fn lstm_forward(x_seq: &Matrix, p: &LstmParams) -> Result<(Matrix, Matrix, LstmTape)> {
    let (n, d) = x_seq.shape();
    let h = p.hidden_dim;
    if d != p.input_dim {
        return Err(Error::Shape(format!(
            "LSTM input has {d} columns, parameters expect {}",
            p.input_dim
        )));
    }
    if n == 0 {
        return Err(Error::Shape("LSTM input has no time steps".into()));
    }
    let mut z = Matrix::zeros(n, d + h);
    let mut gi = Matrix::zeros(n, h);
    let mut gf = Matrix::zeros(n, h);
    let mut go = Matrix::zeros(n, h);
    let mut gg = Matrix::zeros(n, h);
    let mut c = Matrix::zeros(n, h);
    let mut tanh_c = Matrix::zeros(n, h);
    let mut h_seq = Matrix::zeros(n, h);

    let mut h_prev = vec![0.0; h];
    let mut c_prev = vec![0.0; h];
    let mut pre = vec![0.0; h];
    for t in 0..n {
        {
            let zt = z.row_mut(t);
            zt[..d].copy_from_slice(x_seq.row(t));
            zt[d..].copy_from_slice(&h_prev);
        }
        let zt = z.row(t).to_vec();

        for (w, b, out, act) in [
            (&p.w_i, &p.b_i, &mut gi, sigmoid as fn(f64) -> f64),
            (&p.w_f, &p.b_f, &mut gf, sigmoid),
            (&p.w_o, &p.b_o, &mut go, sigmoid),
            (&p.w_g, &p.b_g, &mut gg, f64::tanh),
        ] {
            pre.copy_from_slice(b);
            vec_mat_acc(&zt, w, &mut pre);
            for (dst, &a) in out.row_mut(t).iter_mut().zip(&pre) {
                *dst = act(a);
            }
        }

        for k in 0..h {
            let ct = gf.get(t, k) * c_prev[k] + gi.get(t, k) * gg.get(t, k);
            let tc = ct.tanh();
            let ht = go.get(t, k) * tc;
            c.set(t, k, ct);
            tanh_c.set(t, k, tc);
            h_seq.set(t, k, ht);
            c_prev[k] = ct;
            h_prev[k] = ht;
        }
    }

    if !h_seq.is_finite() || !c.is_finite() {
        return Err(Error::NonFinite(format!(
            "LSTM forward produced non-finite states (max |input| = {})",
            x_seq.max_abs()
        )));
    }

    let h_last = Matrix::row_vector(h_seq.row(n - 1).to_vec());
    let tape = LstmTape {
        fingerprint: p.fingerprint(),
        z,
        i: gi,
        f: gf,
        o: go,
        g: gg,
        c,
        tanh_c,
    };
    Ok((h_seq, h_last, tape))
}

/// Backpropagation through time. `d_h_seq` (`n × H`) is the upstream gradient
/// on every hidden state; `d_h_last` (`1 × H`) is added to the final step.
pub fn lstm_backward(
    d_h_seq: &Matrix,
    d_h_last: &Matrix,
    tape: &LstmTape,
    p: &LstmParams,
) -> Result<(Matrix, LstmParams)> {
    let n = tape.steps();
    let h = p.hidden_dim;
    let d = p.input_dim;
    if tape.fingerprint != p.fingerprint() || tape.z.cols() != d + h {
        return Err(Error::StaleTape("LSTM tape was recorded with other parameters".into()));
    }
    if d_h_seq.shape() != (n, h) || d_h_last.shape() != (1, h) {
        return Err(Error::Shape(format!(
            "LSTM upstream gradients {:?} / {:?}, expected ({n}, {h}) / (1, {h})",
            d_h_seq.shape(),
            d_h_last.shape()
        )));
    }

    let mut grads = LstmParams::zeros(d, h);
    let mut d_x = Matrix::zeros(n, d);
    let mut dh_next = vec![0.0; h];
    let mut dc_next = vec![0.0; h];
    let mut da_i = vec![0.0; h];
    let mut da_f = vec![0.0; h];
    let mut da_o = vec![0.0; h];
    let mut da_g = vec![0.0; h];
    let mut dz = vec![0.0; d + h];

    for t in (0..n).rev() {
        for k in 0..h {
            let mut dh = d_h_seq.get(t, k) + dh_next[k];
            if t == n - 1 {
                dh += d_h_last.get(0, k);
            }
            let i = tape.i.get(t, k);
            let f = tape.f.get(t, k);
            let o = tape.o.get(t, k);
            let g = tape.g.get(t, k);
            let tc = tape.tanh_c.get(t, k);
            let c_prev = if t > 0 { tape.c.get(t - 1, k) } else { 0.0 };

            let d_o = dh * tc;
            let dc = dc_next[k] + dh * o * (1.0 - tc * tc);
            let d_i = dc * g;
            let d_g = dc * i;
            let d_f = dc * c_prev;
            dc_next[k] = dc * f;

            da_i[k] = d_i * i * (1.0 - i);
            da_f[k] = d_f * f * (1.0 - f);
            da_o[k] = d_o * o * (1.0 - o);
            da_g[k] = d_g * (1.0 - g * g);
        }

        let zt = tape.z.row(t);
        dz.fill(0.0);
        for (w, gw, gb, da) in [
            (&p.w_i, &mut grads.w_i, &mut grads.b_i, &da_i),
            (&p.w_f, &mut grads.w_f, &mut grads.b_f, &da_f),
            (&p.w_o, &mut grads.w_o, &mut grads.b_o, &da_o),
            (&p.w_g, &mut grads.w_g, &mut grads.b_g, &da_g),
        ] {
            outer_acc(zt, da, gw);
            for (b, v) in gb.iter_mut().zip(da.iter()) {
                *b += v;
            }
            mat_vec_acc(w, da, &mut dz);
        }
        d_x.row_mut(t).copy_from_slice(&dz[..d]);
        dh_next.copy_from_slice(&dz[d..]);
    }
    Ok((d_x, grads))
}
