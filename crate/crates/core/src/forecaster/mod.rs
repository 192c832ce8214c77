//! The two forecasting models.
//!
//! Case 1 runs an LSTM over a window of DLR values and feeds the final hidden
//! state to a dense head. Case 2 runs the LSTM over the six-feature window,
//! attends over all hidden states with the final one as query, and feeds
//! `[h_last; context]` to the head. Both predict the next step's normalized
//! DLR.

mod persist;
mod train;

pub use persist::{load_model, save_model, model_from_json, model_to_json, MODEL_FILE_VERSION};
pub use train::{train, TrainReport};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::dataset::{window_matrix, Case, Normalizer, TimeSeries, DEFAULT_TRAIN_FRAC, DEFAULT_WINDOW_LEN, DLR_FEATURE};
use crate::error::{Error, Result};
use crate::nn::{
    attention_backward, attention_forward, gradient_check, lstm_backward, lstm_forward, mse_loss, random_matrix,
    scaled, AttentionParams, AttentionTape, LstmParams, LstmTape, Matrix, Parameters, FD_EPS,
};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub case: Case,
    pub window_len: usize,
    pub hidden_dim: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub early_stop_patience: usize,
    /// Chronological fraction of the series used for training; the rest is
    /// the test tail.
    pub train_frac: f64,
    /// Reshuffle the fit windows each epoch with a seeded permutation;
    /// off means contiguous chronological batches.
    pub shuffle: bool,
}

impl ModelConfig {
    pub fn new(case: Case) -> Self {
        Self {
            case,
            window_len: DEFAULT_WINDOW_LEN,
            hidden_dim: 32,
            epochs: 200,
            learning_rate: 1e-3,
            batch_size: 32,
            seed: 42,
            early_stop_patience: 20,
            train_frac: DEFAULT_TRAIN_FRAC,
            shuffle: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidInput(format!("model config: {msg}")));
        if self.window_len < 2 {
            return bad("window length must be >= 2");
        }
        if self.hidden_dim < 1 {
            return bad("hidden size must be >= 1");
        }
        if self.epochs < 1 {
            return bad("epochs must be >= 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be > 0");
        }
        if self.batch_size < 1 {
            return bad("batch size must be >= 1");
        }
        if !(self.train_frac > 0.0 && self.train_frac < 1.0) {
            return bad("train fraction must lie in (0, 1)");
        }
        Ok(())
    }
}

/// Trainable weights of either case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub lstm: LstmParams,
    /// Present for Case 2 only.
    pub attention: Option<AttentionParams>,
    /// `(H or 2H) × 1`.
    pub head_w: Matrix,
    pub head_b: Vec<f64>,
}

impl Network {
    pub fn zeros_like(&self) -> Network {
        let h = self.lstm.hidden_dim;
        Network {
            lstm: LstmParams::zeros(self.lstm.input_dim, h),
            attention: self
                .attention
                .as_ref()
                .map(|a| AttentionParams::zeros(a.hidden_dim(), a.d_k(), a.d_v())),
            head_w: Matrix::zeros(self.head_w.rows(), 1),
            head_b: vec![0.0],
        }
    }

    pub fn case(&self) -> Case {
        if self.attention.is_some() {
            Case::Multivariate
        } else {
            Case::Univariate
        }
    }

    pub fn head_width(&self) -> usize {
        self.head_w.rows()
    }

    pub fn add_assign(&mut self, other: &Network) {
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, k: f64) {
        for t in self.tensors_mut() {
            for v in t {
                *v *= k;
            }
        }
    }

    pub fn validate(&self, case: Case, hidden: usize) -> Result<()> {
        self.lstm.validate()?;
        if self.lstm.input_dim != case.input_dim() || self.lstm.hidden_dim != hidden {
            return Err(Error::Shape(format!(
                "LSTM is {}→{}, case {case} with hidden {hidden} needs {}→{hidden}",
                self.lstm.input_dim,
                self.lstm.hidden_dim,
                case.input_dim()
            )));
        }
        let width = match (case, &self.attention) {
            (Case::Univariate, None) => hidden,
            (Case::Multivariate, Some(a)) => {
                a.validate()?;
                if a.hidden_dim() != hidden || a.d_k() != hidden || a.d_v() != hidden {
                    return Err(Error::Shape(format!(
                        "attention must be {hidden}x{hidden}, got W_q {:?}, W_v {:?}",
                        a.w_q.shape(),
                        a.w_v.shape()
                    )));
                }
                2 * hidden
            }
            (Case::Univariate, Some(_)) => {
                return Err(Error::Shape("case 1 model carries attention weights".into()));
            }
            (Case::Multivariate, None) => {
                return Err(Error::Shape("case 2 model lacks attention weights".into()));
            }
        };
        if self.head_w.shape() != (width, 1) || self.head_b.len() != 1 {
            return Err(Error::Shape(format!(
                "output head is {:?} + {} bias, expected ({width}, 1) + 1",
                self.head_w.shape(),
                self.head_b.len()
            )));
        }
        if !self.head_w.is_finite() || !self.head_b[0].is_finite() {
            return Err(Error::NonFinite("output head".into()));
        }
        Ok(())
    }
}

impl Parameters for Network {
    fn tensors(&self) -> Vec<&[f64]> {
        let mut t = self.lstm.tensors();
        if let Some(a) = &self.attention {
            t.extend(a.tensors());
        }
        t.push(self.head_w.data());
        t.push(&self.head_b);
        t
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut t = self.lstm.tensors_mut();
        if let Some(a) = &mut self.attention {
            t.extend(a.tensors_mut());
        }
        t.push(self.head_w.data_mut());
        t.push(&mut self.head_b);
        t
    }
}

/// Forward intermediates of one window through a [`Network`].
#[derive(Debug, Clone)]
pub struct NetworkTape {
    lstm: LstmTape,
    attention: Option<AttentionTape>,
    features: Vec<f64>,
    steps: usize,
}

impl NetworkTape {
    /// Attention weights over the window (Case 2 only).
    pub fn attention_weights(&self) -> Option<&Matrix> {
        self.attention.as_ref().map(AttentionTape::weights)
    }
}

/// Normalized prediction for one window.
pub fn network_forward(window: &Matrix, net: &Network) -> Result<(f64, NetworkTape)> {
    let (h_seq, h_last, lstm_tape) = lstm_forward(window, &net.lstm)?;
    let (features, attention) = match &net.attention {
        None => (h_last.data().to_vec(), None),
        Some(att) => {
            let (context, tape) = attention_forward(&h_seq, &h_last, att)?;
            let mut f = h_last.data().to_vec();
            f.extend_from_slice(context.data());
            (f, Some(tape))
        }
    };
    if features.len() != net.head_w.rows() {
        return Err(Error::Shape(format!(
            "head expects {} features, network produced {}",
            net.head_w.rows(),
            features.len()
        )));
    }
    let y = net.head_b[0] + features.iter().zip(net.head_w.data()).map(|(a, b)| a * b).sum::<f64>();
    if !y.is_finite() {
        return Err(Error::NonFinite("network output".into()));
    }
    Ok((
        y,
        NetworkTape {
            lstm: lstm_tape,
            attention,
            features,
            steps: window.rows(),
        },
    ))
}

/// Gradient of `dy · y` with respect to the window and every weight.
pub fn network_backward(dy: f64, tape: &NetworkTape, net: &Network) -> Result<(Matrix, Network)> {
    let h = net.lstm.hidden_dim;
    let mut grads = net.zeros_like();
    for (g, f) in grads.head_w.data_mut().iter_mut().zip(&tape.features) {
        *g = f * dy;
    }
    grads.head_b[0] = dy;
    let d_features: Vec<f64> = net.head_w.data().iter().map(|w| w * dy).collect();

    let mut d_h_last = Matrix::row_vector(d_features[..h].to_vec());
    let d_h_seq = match (&net.attention, &tape.attention) {
        (None, None) => Matrix::zeros(tape.steps, h),
        (Some(att), Some(att_tape)) => {
            let d_context = Matrix::row_vector(d_features[h..].to_vec());
            let (d_seq, d_last, g_att) = attention_backward(&d_context, att_tape, att)?;
            d_h_last.add_assign(&d_last)?;
            grads.attention = Some(g_att);
            d_seq
        }
        _ => return Err(Error::StaleTape("network tape and weights disagree on attention".into())),
    };
    let (d_x, g_lstm) = lstm_backward(&d_h_seq, &d_h_last, &tape.lstm, &net.lstm)?;
    grads.lstm = g_lstm;
    Ok((d_x, grads))
}

/// Worst central-difference relative error of the MSE loss through a freshly
/// initialized network of `case` (LSTM, attention for Case 2, dense head),
/// over every weight and the input window. See
/// [`crate::nn::lstm_gradient_error`] for `analytic_scale`.
pub fn network_gradient_error(seed: u64, case: Case, steps: usize, hidden: usize, analytic_scale: f64) -> Result<f64> {
    let cfg = ModelConfig {
        window_len: steps,
        hidden_dim: hidden,
        seed,
        ..ModelConfig::new(case)
    };
    let net = build_model(&cfg)?.network;
    let d = case.input_dim();
    let mut rng = SplitMix64::new(seed.wrapping_add(1));
    let x = random_matrix(steps, d, &mut rng);
    let target = rng.uniform(-2.0, 2.0);

    let loss = |net: &Network, x: &Matrix| {
        let (y, _) = network_forward(x, net).expect("shapes fixed above");
        mse_loss(&[y], &[target]).expect("one prediction").0
    };
    let (y, tape) = network_forward(&x, &net)?;
    let (_, dy) = mse_loss(&[y], &[target])?;
    let (d_x, grads) = network_backward(dy[0], &tape, &net)?;

    let weights = gradient_check(
        |theta| {
            let mut q = net.clone();
            q.assign_flat(theta);
            loss(&q, &x)
        },
        &net.flatten(),
        &scaled(grads.flatten(), analytic_scale),
        FD_EPS,
    );
    let inputs = gradient_check(
        |theta| loss(&net, &Matrix::from_vec(steps, d, theta.to_vec())),
        x.data(),
        &scaled(d_x.data().to_vec(), analytic_scale),
        FD_EPS,
    );
    Ok(weights.max(inputs))
}

/// Provenance recorded by training.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub trained: bool,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub final_train_mse: f64,
    pub best_val_mse: f64,
    pub train_windows: usize,
    pub val_windows: usize,
    /// FNV-1a of the training windows and targets, hex.
    pub data_fingerprint: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub network: Network,
    pub normalizer: Normalizer,
    pub metadata: TrainingMetadata,
}

/// Fresh model with weights drawn from `cfg.seed`. The normalizer is the
/// identity until training replaces it.
pub fn build_model(cfg: &ModelConfig) -> Result<Model> {
    cfg.validate()?;
    let mut rng = SplitMix64::new(cfg.seed);
    let h = cfg.hidden_dim;
    let lstm = LstmParams::init(cfg.case.input_dim(), h, &mut rng);
    let attention = match cfg.case {
        Case::Univariate => None,
        Case::Multivariate => Some(AttentionParams::init(h, h, h, &mut rng)),
    };
    let width = if attention.is_some() { 2 * h } else { h };
    let s = 1.0 / (width as f64).sqrt();
    let head_w = Matrix::from_vec(width, 1, (0..width).map(|_| rng.uniform(-s, s)).collect());
    Ok(Model {
        config: cfg.clone(),
        network: Network {
            lstm,
            attention,
            head_w,
            head_b: vec![0.0],
        },
        normalizer: Normalizer::identity(),
        metadata: TrainingMetadata::default(),
    })
}

impl Model {
    pub fn case(&self) -> Case {
        self.config.case
    }

    fn check_window(&self, window: &Matrix) -> Result<()> {
        let case = self.case();
        if window.cols() != case.input_dim() {
            let other = if case == Case::Univariate {
                Case::Multivariate
            } else {
                Case::Univariate
            };
            if window.cols() == other.input_dim() {
                return Err(Error::CaseMismatch {
                    model: case.tag(),
                    window: other.tag(),
                });
            }
            return Err(Error::Shape(format!(
                "window has {} feature columns, case {case} expects {}",
                window.cols(),
                case.input_dim()
            )));
        }
        if window.rows() != self.config.window_len {
            return Err(Error::Shape(format!(
                "window has {} steps, model expects {}",
                window.rows(),
                self.config.window_len
            )));
        }
        Ok(())
    }

    /// Prediction in normalized units.
    pub fn predict_normalized(&self, window: &Matrix) -> Result<f64> {
        self.check_window(window)?;
        Ok(network_forward(window, &self.network)?.0)
    }

    /// Next-step DLR in amps for a window of normalized features.
    pub fn predict(&self, window: &Matrix) -> Result<f64> {
        let y = self.predict_normalized(window)?;
        Ok(self.normalizer.inverse_transform(DLR_FEATURE, y))
    }

    /// One 15-minute-ahead forecast per window of `ts`, including the window
    /// ending at the last record. Each forecast is stamped with the time it
    /// predicts.
    pub fn forecast_series(&self, ts: &TimeSeries) -> Result<Vec<(DateTime<Utc>, f64)>> {
        let n = self.config.window_len;
        let records = ts.records();
        if records.len() < n {
            return Err(Error::InvalidInput(format!(
                "series of {} records is shorter than the window of {n}",
                records.len()
            )));
        }
        (0..=records.len() - n)
            .map(|k| {
                let window = window_matrix(&records[k..k + n], &self.normalizer, self.case());
                let at = records[k + n - 1].timestamp + ts.step();
                Ok((at, self.predict(&window)?))
            })
            .collect()
    }
}

/// Same as [`build_model`] for a case with default settings.
pub fn default_model(case: Case) -> Result<Model> {
    build_model(&ModelConfig::new(case))
}

pub fn predict(model: &Model, window: &Matrix) -> Result<f64> {
    model.predict(window)
}
