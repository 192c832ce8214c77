//! Test-set metrics in amps.
//!
//! "Accuracy" is reported as `100 · R²`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dataset::{make_windows, Case, TimeSeries, DLR_FEATURE};
use crate::error::{Error, Result};
use crate::forecaster::Model;

/// Neumaier-compensated sum.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn check_pair(pred: &[f64], actual: &[f64], min_len: usize) -> Result<()> {
    if pred.len() != actual.len() {
        return Err(Error::Shape(format!(
            "{} predictions vs {} actual values",
            pred.len(),
            actual.len()
        )));
    }
    if pred.len() < min_len {
        return Err(Error::InvalidInput(format!(
            "need at least {min_len} values, got {}",
            pred.len()
        )));
    }
    Ok(())
}

pub fn mse(pred: &[f64], actual: &[f64]) -> Result<f64> {
    check_pair(pred, actual, 1)?;
    let ss = compensated_sum(pred.iter().zip(actual).map(|(p, a)| (p - a) * (p - a)));
    Ok(ss / pred.len() as f64)
}

pub fn mae(pred: &[f64], actual: &[f64]) -> Result<f64> {
    check_pair(pred, actual, 1)?;
    let s = compensated_sum(pred.iter().zip(actual).map(|(p, a)| (p - a).abs()));
    Ok(s / pred.len() as f64)
}

/// Coefficient of determination `1 − SS_res / SS_tot`.
pub fn r_squared(pred: &[f64], actual: &[f64]) -> Result<f64> {
    check_pair(pred, actual, 2)?;
    let mean = compensated_sum(actual.iter().copied()) / actual.len() as f64;
    let ss_tot = compensated_sum(actual.iter().map(|a| (a - mean) * (a - mean)));
    if !(ss_tot > 0.0) {
        return Err(Error::InvalidInput(
            "actual values have zero variance; R² is undefined".into(),
        ));
    }
    let ss_res = compensated_sum(pred.iter().zip(actual).map(|(p, a)| (p - a) * (p - a)));
    Ok(1.0 - ss_res / ss_tot)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub case: Case,
    pub n_samples: usize,
    /// amps²
    pub mse: f64,
    /// amps
    pub mae: f64,
    pub r_squared: f64,
    pub accuracy_pct: f64,
}

impl MetricsReport {
    pub fn from_predictions(case: Case, pred: &[f64], actual: &[f64]) -> Result<Self> {
        let r2 = r_squared(pred, actual)?;
        Ok(Self {
            case,
            n_samples: pred.len(),
            mse: mse(pred, actual)?,
            mae: mae(pred, actual)?,
            r_squared: r2,
            accuracy_pct: 100.0 * r2,
        })
    }

    pub fn rmse(&self) -> f64 {
        self.mse.sqrt()
    }

    /// Flat `key=value` text.
    pub fn to_text(&self) -> String {
        format!(
            "case={}\nn_samples={}\nmse={}\nmae={}\nr_squared={}\naccuracy_pct={}\n",
            self.case, self.n_samples, self.mse, self.mae, self.r_squared, self.accuracy_pct
        )
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut case = None;
        let mut n_samples = None;
        let (mut mse, mut mae, mut r2, mut acc) = (None, None, None, None);
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let bad = |msg: String| Error::Parse {
                line: idx as u64 + 1,
                msg,
            };
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("expected key=value, got `{line}`")))?;
            let num = || v.parse::<f64>().map_err(|_| bad(format!("`{v}` is not a number")));
            match k {
                "case" => {
                    let tag: u8 = v.parse().map_err(|_| bad(format!("bad case `{v}`")))?;
                    case = Some(Case::from_tag(tag)?);
                }
                "n_samples" => {
                    n_samples = Some(v.parse().map_err(|_| bad(format!("bad count `{v}`")))?)
                }
                "mse" => mse = Some(num()?),
                "mae" => mae = Some(num()?),
                "r_squared" => r2 = Some(num()?),
                "accuracy_pct" => acc = Some(num()?),
                other => return Err(bad(format!("unknown key `{other}`"))),
            }
        }
        let missing = |k: &str| Error::InvalidInput(format!("report is missing `{k}`"));
        Ok(Self {
            case: case.ok_or_else(|| missing("case"))?,
            n_samples: n_samples.ok_or_else(|| missing("n_samples"))?,
            mse: mse.ok_or_else(|| missing("mse"))?,
            mae: mae.ok_or_else(|| missing("mae"))?,
            r_squared: r2.ok_or_else(|| missing("r_squared"))?,
            accuracy_pct: acc.ok_or_else(|| missing("accuracy_pct"))?,
        })
    }
}

/// Windows `test` with the model's normalizer and window length, predicts
/// every target, and scores the predictions in amps.
pub fn evaluate(model: &Model, test: &TimeSeries) -> Result<MetricsReport> {
    let (pred, actual) = evaluate_predictions(model, test)?;
    MetricsReport::from_predictions(model.case(), &pred, &actual)
}

/// Predicted and actual DLR (amps) for each test window.
pub fn evaluate_predictions(model: &Model, test: &TimeSeries) -> Result<(Vec<f64>, Vec<f64>)> {
    let ds = make_windows(test, &model.normalizer, model.case(), model.config.window_len)?;
    let n = model.config.window_len;
    let actual: Vec<f64> = test.records()[n..].iter().map(|r| r.dlr_a).collect();
    let pred = ds
        .inputs
        .iter()
        .map(|w| model.predict(w))
        .collect::<Result<Vec<_>>>()?;
    debug_assert_eq!(pred.len(), actual.len());
    debug_assert!(ds
        .targets
        .iter()
        .zip(&actual)
        .all(|(t, a)| (model.normalizer.inverse_transform(DLR_FEATURE, *t) - a).abs() < 1e-6 * a.abs().max(1.0)));
    Ok((pred, actual))
}

/// Side-by-side Case 1 / Case 2 document.
pub fn comparison_text(case1: &MetricsReport, case2: &MetricsReport) -> String {
    let mut out = String::new();
    for (prefix, r) in [("case1", case1), ("case2", case2)] {
        let _ = write!(
            out,
            "{prefix}.n_samples={}\n{prefix}.mse={}\n{prefix}.mae={}\n{prefix}.r_squared={}\n{prefix}.accuracy_pct={}\n",
            r.n_samples, r.mse, r.mae, r.r_squared, r.accuracy_pct
        );
    }
    let _ = write!(
        out,
        "case2_r_squared_ge_case1={}\ncase2_mse_le_case1={}\ncase2_mae_le_case1={}\n",
        case2.r_squared >= case1.r_squared,
        case2.mse <= case1.mse,
        case2.mae <= case1.mae
    );
    out
}
