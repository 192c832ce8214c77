//! Central-difference gradient checking; a test oracle for the analytic
//! backward passes.

use super::{
    attention_backward, attention_forward, lstm_backward, lstm_forward, AttentionParams, LstmParams, Matrix,
    Parameters,
};
use crate::error::Result;
use crate::rng::SplitMix64;

/// Finite-difference step used by the layer probes.
pub const FD_EPS: f64 = 1e-5;

/// Smallest denominator in [`relative_error`]. A central difference at
/// ε = 1e-5 carries roughly `1e-11·|f|` of rounding error, so components much
/// smaller than this cannot be resolved relative to themselves.
pub const RELATIVE_FLOOR: f64 = 1e-6;

/// `|a − n| / max(|a|, |n|, RELATIVE_FLOOR)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(RELATIVE_FLOOR)
}

/// Largest relative error between `analytic` and the central difference
/// `(f(θ + ε) − f(θ − ε)) / 2ε` taken coordinate by coordinate at `theta`.
pub fn gradient_check(mut f: impl FnMut(&[f64]) -> f64, theta: &[f64], analytic: &[f64], eps: f64) -> f64 {
    assert_eq!(theta.len(), analytic.len(), "gradient length mismatch");
    let mut work = theta.to_vec();
    let mut worst = 0.0f64;
    for i in 0..theta.len() {
        let orig = work[i];
        work[i] = orig + eps;
        let up = f(&work);
        work[i] = orig - eps;
        let down = f(&work);
        work[i] = orig;
        let numeric = (up - down) / (2.0 * eps);
        worst = worst.max(relative_error(analytic[i], numeric));
    }
    worst
}

pub(crate) fn random_matrix(rows: usize, cols: usize, rng: &mut SplitMix64) -> Matrix {
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.uniform(-1.0, 1.0)).collect())
}

pub(crate) fn weighted_sum(m: &Matrix, w: &Matrix) -> f64 {
    m.data().iter().zip(w.data()).map(|(a, b)| a * b).sum()
}

pub(crate) fn scaled(v: Vec<f64>, k: f64) -> Vec<f64> {
    v.into_iter().map(|g| g * k).collect()
}

/// Worst relative error over a seeded LSTM's weights and inputs, for the
/// scalar loss `Σ R ∘ h_seq + r · h_last` with random `R`, `r`.
///
/// The analytic gradient is multiplied by `analytic_scale` before comparing;
/// pass 1.0 for a real check, anything else to confirm a corrupted gradient
/// is caught.
pub fn lstm_gradient_error(seed: u64, steps: usize, input_dim: usize, hidden: usize, analytic_scale: f64) -> Result<f64> {
    let mut rng = SplitMix64::new(seed);
    let p = LstmParams::init(input_dim, hidden, &mut rng);
    let x = random_matrix(steps, input_dim, &mut rng);
    let r_seq = random_matrix(steps, hidden, &mut rng);
    let r_last = random_matrix(1, hidden, &mut rng);

    let loss = |p: &LstmParams, x: &Matrix| {
        let (h_seq, h_last, _) = lstm_forward(x, p).expect("shapes fixed above");
        weighted_sum(&h_seq, &r_seq) + weighted_sum(&h_last, &r_last)
    };
    let (_, _, tape) = lstm_forward(&x, &p)?;
    let (d_x, grads) = lstm_backward(&r_seq, &r_last, &tape, &p)?;

    let weights = gradient_check(
        |theta| {
            let mut q = p.clone();
            q.assign_flat(theta);
            loss(&q, &x)
        },
        &p.flatten(),
        &scaled(grads.flatten(), analytic_scale),
        FD_EPS,
    );
    let inputs = gradient_check(
        |theta| loss(&p, &Matrix::from_vec(steps, input_dim, theta.to_vec())),
        x.data(),
        &scaled(d_x.data().to_vec(), analytic_scale),
        FD_EPS,
    );
    Ok(weights.max(inputs))
}

/// Worst relative error over seeded attention weights, `h_seq`, and `h_last`
/// for the loss `r · context`. See [`lstm_gradient_error`] for `analytic_scale`.
pub fn attention_gradient_error(seed: u64, steps: usize, hidden: usize, analytic_scale: f64) -> Result<f64> {
    let mut rng = SplitMix64::new(seed);
    let p = AttentionParams::init(hidden, hidden, hidden, &mut rng);
    let h_seq = random_matrix(steps, hidden, &mut rng);
    let h_last = random_matrix(1, hidden, &mut rng);
    let r = random_matrix(1, hidden, &mut rng);

    let loss = |p: &AttentionParams, seq: &Matrix, last: &Matrix| {
        let (ctx, _) = attention_forward(seq, last, p).expect("shapes fixed above");
        weighted_sum(&ctx, &r)
    };
    let (_, tape) = attention_forward(&h_seq, &h_last, &p)?;
    let (d_seq, d_last, grads) = attention_backward(&r, &tape, &p)?;

    let weights = gradient_check(
        |theta| {
            let mut q = p.clone();
            q.assign_flat(theta);
            loss(&q, &h_seq, &h_last)
        },
        &p.flatten(),
        &scaled(grads.flatten(), analytic_scale),
        FD_EPS,
    );
    let seq = gradient_check(
        |theta| loss(&p, &Matrix::from_vec(steps, hidden, theta.to_vec()), &h_last),
        h_seq.data(),
        &scaled(d_seq.data().to_vec(), analytic_scale),
        FD_EPS,
    );
    let last = gradient_check(
        |theta| loss(&p, &h_seq, &Matrix::row_vector(theta.to_vec())),
        h_last.data(),
        &scaled(d_last.data().to_vec(), analytic_scale),
        FD_EPS,
    );
    Ok(weights.max(seq).max(last))
}
