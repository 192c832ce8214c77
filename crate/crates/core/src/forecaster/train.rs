use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{network_backward, network_forward, Model, Network};
use crate::dataset::WindowedDataset;
use crate::error::{Error, Result};
use crate::nn::{fnv1a_f64, Adam, AdamConfig, FNV_OFFSET};
use crate::rng::SplitMix64;

/// Fraction of training windows (the chronological tail) held out for early
/// stopping.
pub const VALIDATION_FRAC: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean per-window loss over each epoch's batches, normalized units.
    pub train_mse: Vec<f64>,
    /// Validation MSE after each epoch, normalized units.
    pub val_mse: Vec<f64>,
    pub epochs_run: usize,
    /// 1-based epoch whose parameters were returned.
    pub best_epoch: usize,
    pub best_val_mse: f64,
    pub wall_time_s: f64,
}

fn dataset_fingerprint(ds: &WindowedDataset) -> String {
    let mut h = FNV_OFFSET;
    for w in &ds.inputs {
        h = fnv1a_f64(h, w.data());
    }
    h = fnv1a_f64(h, &ds.targets);
    format!("{h:016x}")
}

fn mean_loss(net: &Network, ds: &WindowedDataset, range: std::ops::Range<usize>) -> Result<f64> {
    let n = range.len() as f64;
    let mut total = 0.0;
    for k in range {
        let (y, _) = network_forward(&ds.inputs[k], net)?;
        let d = y - ds.targets[k];
        total += d * d;
    }
    Ok(total / n)
}

/// Mini-batch Adam on MSE over normalized targets, with early stopping on the
/// last 10% of windows. Returns the parameters of the best validation epoch.
pub fn train(mut model: Model, train_ds: &WindowedDataset) -> Result<(Model, TrainReport)> {
    let cfg = model.config.clone();
    cfg.validate()?;
    if train_ds.case != cfg.case {
        return Err(Error::CaseMismatch {
            model: cfg.case.tag(),
            window: train_ds.case.tag(),
        });
    }
    if train_ds.window_len != cfg.window_len {
        return Err(Error::Shape(format!(
            "dataset windows have {} steps, model expects {}",
            train_ds.window_len, cfg.window_len
        )));
    }
    let total = train_ds.len();
    if total < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 training windows, got {total}"
        )));
    }
    let n_val = ((total as f64 * VALIDATION_FRAC).floor() as usize).max(1);
    let n_fit = total - n_val;

    let started = Instant::now();
    let mut adam = Adam::new(
        &model.network,
        AdamConfig {
            lr: cfg.learning_rate,
            ..AdamConfig::default()
        },
    );
    let mut shuffle_rng = SplitMix64::new(cfg.seed ^ 0x5EE_D0FB_A7C4);
    let mut order: Vec<usize> = (0..n_fit).collect();

    let mut report = TrainReport {
        train_mse: Vec::new(),
        val_mse: Vec::new(),
        epochs_run: 0,
        best_epoch: 0,
        best_val_mse: f64::INFINITY,
        wall_time_s: 0.0,
    };
    let mut best = model.network.clone();
    let mut since_best = 0;

    for epoch in 1..=cfg.epochs {
        if cfg.shuffle {
            for i in (1..order.len()).rev() {
                let j = shuffle_rng.below(i + 1);
                order.swap(i, j);
            }
        }
        let mut epoch_loss = 0.0;
        for (batch_idx, batch) in order.chunks(cfg.batch_size).enumerate() {
            let b = batch.len() as f64;
            let mut grads = model.network.zeros_like();
            let mut batch_loss = 0.0;
            for &k in batch {
                let (y, tape) = network_forward(&train_ds.inputs[k], &model.network)?;
                let diff = y - train_ds.targets[k];
                batch_loss += diff * diff;
                let (_, g) = network_backward(2.0 * diff / b, &tape, &model.network)?;
                grads.add_assign(&g);
            }
            if !batch_loss.is_finite() {
                return Err(Error::NonFinite(format!(
                    "training loss at epoch {epoch}, batch {batch_idx}"
                )));
            }
            epoch_loss += batch_loss;
            adam.step(&mut model.network, &grads)?;
        }
        let train_mse = epoch_loss / n_fit as f64;
        let val_mse = mean_loss(&model.network, train_ds, n_fit..total)?;
        if !val_mse.is_finite() {
            return Err(Error::NonFinite(format!("validation loss at epoch {epoch}")));
        }
        report.train_mse.push(train_mse);
        report.val_mse.push(val_mse);
        report.epochs_run = epoch;

        if val_mse < report.best_val_mse {
            report.best_val_mse = val_mse;
            report.best_epoch = epoch;
            best = model.network.clone();
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.early_stop_patience {
                break;
            }
        }
    }
    report.wall_time_s = started.elapsed().as_secs_f64();

    model.network = best;
    model.normalizer = train_ds.normalizer.clone();
    model.metadata = super::TrainingMetadata {
        trained: true,
        epochs_run: report.epochs_run,
        best_epoch: report.best_epoch,
        final_train_mse: *report.train_mse.last().unwrap_or(&f64::NAN),
        best_val_mse: report.best_val_mse,
        train_windows: n_fit,
        val_windows: n_val,
        data_fingerprint: dataset_fingerprint(train_ds),
    };
    Ok((model, report))
}
