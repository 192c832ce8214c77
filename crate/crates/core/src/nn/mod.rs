//! Hand-written dense layers with exact backward passes.
//!
//! Every layer is a pair of pure functions: `*_forward` returns its output
//! together with a tape of the intermediates, and `*_backward` consumes that
//! tape to produce input and parameter gradients. Tapes record a fingerprint
//! of the parameters they were produced with; replaying a tape against
//! different parameters is an error.

mod adam;
mod attention;
mod gradcheck;
mod loss;
mod lstm;
mod matrix;

pub use adam::{adam_step, Adam, AdamConfig, AdamMoments};
pub use attention::{attention_backward, attention_forward, softmax_rows, AttentionGrads, AttentionParams, AttentionTape};
pub use gradcheck::{
    attention_gradient_error, gradient_check, lstm_gradient_error, relative_error, FD_EPS, RELATIVE_FLOOR,
};

pub(crate) use gradcheck::{random_matrix, scaled};
pub use loss::mse_loss;
pub use lstm::{lstm_backward, lstm_forward, LstmParams, LstmTape};
pub use matrix::{dot, Matrix};

pub(crate) use matrix::{mat_vec_acc, outer_acc, vec_mat_acc};

/// A set of parameter tensors visited in a fixed order.
pub trait Parameters {
    fn tensors(&self) -> Vec<&[f64]>;
    fn tensors_mut(&mut self) -> Vec<&mut [f64]>;

    fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    /// All parameters concatenated.
    fn flatten(&self) -> Vec<f64> {
        self.tensors().concat()
    }

    /// Inverse of [`Parameters::flatten`]. Panics on length mismatch.
    fn assign_flat(&mut self, flat: &[f64]) {
        let mut offset = 0;
        for t in self.tensors_mut() {
            let n = t.len();
            t.copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
        assert_eq!(offset, flat.len(), "flat parameter length mismatch");
    }

    /// FNV-1a over the bit patterns of every parameter.
    fn fingerprint(&self) -> u64 {
        let mut h = FNV_OFFSET;
        for t in self.tensors() {
            h = fnv1a_f64(h, t);
        }
        h
    }
}

pub(crate) const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;

pub(crate) fn fnv1a_f64(mut h: u64, values: &[f64]) -> u64 {
    for v in values {
        for b in v.to_bits().to_le_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
