//! Sensor records, normalization, and supervised windowing.

mod csvio;

pub use csvio::{parse_timestamp, read_csv, read_csv_str, write_csv, write_csv_string, CSV_HEADER};

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Matrix;
use crate::thermal::WeatherPoint;

/// Model input features, in the fixed column order used by every window.
pub const FEATURES: [&str; 6] = [
    "dlr_a",
    "ambient_temp_c",
    "wind_speed_ms",
    "humidity_pct",
    "cable_temp_c",
    "irradiance_wm2",
];

/// Index of the DLR column within [`FEATURES`].
pub const DLR_FEATURE: usize = 0;

pub const DEFAULT_WINDOW_LEN: usize = 16;
pub const DEFAULT_TRAIN_FRAC: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub timestamp: DateTime<Utc>,
    pub ambient_temp_c: f64,
    pub cable_temp_c: f64,
    pub wind_speed_ms: f64,
    pub humidity_pct: f64,
    pub irradiance_wm2: f64,
    pub current_a: f64,
    pub dlr_a: f64,
}

impl Measurement {
    pub fn weather(&self) -> WeatherPoint {
        WeatherPoint {
            ambient_temp_c: self.ambient_temp_c,
            wind_speed_ms: self.wind_speed_ms,
            humidity_pct: self.humidity_pct,
            irradiance_wm2: self.irradiance_wm2,
        }
    }

    /// Feature vector in [`FEATURES`] order.
    pub fn features(&self) -> [f64; 6] {
        [
            self.dlr_a,
            self.ambient_temp_c,
            self.wind_speed_ms,
            self.humidity_pct,
            self.cable_temp_c,
            self.irradiance_wm2,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.ambient_temp_c,
            self.cable_temp_c,
            self.wind_speed_ms,
            self.humidity_pct,
            self.irradiance_wm2,
            self.current_a,
            self.dlr_a,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite field".into()));
        }
        if self.dlr_a < 0.0 {
            return Err(Error::InvalidInput(format!("dlr_a {} < 0", self.dlr_a)));
        }
        if self.wind_speed_ms < 0.0 {
            return Err(Error::InvalidInput(format!(
                "wind_speed_ms {} < 0",
                self.wind_speed_ms
            )));
        }
        if self.irradiance_wm2 < 0.0 {
            return Err(Error::InvalidInput(format!(
                "irradiance_wm2 {} < 0",
                self.irradiance_wm2
            )));
        }
        if !(0.0..=100.0).contains(&self.humidity_pct) {
            return Err(Error::InvalidInput(format!(
                "humidity_pct {} outside [0, 100]",
                self.humidity_pct
            )));
        }
        Ok(())
    }
}

/// Records on a strictly increasing, evenly spaced time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    records: Vec<Measurement>,
    step: Duration,
}

impl TimeSeries {
    /// Validates ordering, spacing, and per-record ranges. The grid step is
    /// taken from the first interval.
    pub fn new(records: Vec<Measurement>) -> Result<Self> {
        if records.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "a time series needs at least 2 records, got {}",
                records.len()
            )));
        }
        for (i, r) in records.iter().enumerate() {
            r.validate()
                .map_err(|e| Error::InvalidInput(format!("record {i}: {e}")))?;
        }
        let step = check_grid(&records)?;
        Ok(Self { records, step })
    }

    pub fn records(&self) -> &[Measurement] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn step(&self) -> Duration {
        self.step
    }

    pub fn into_records(self) -> Vec<Measurement> {
        self.records
    }
}

/// Checks strict ordering over the whole sequence first, then even spacing.
/// Errors carry the offending record index in `line`. Returns the step.
pub(crate) fn check_grid(records: &[Measurement]) -> Result<Duration> {
    if records.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "a time series needs at least 2 records, got {}",
            records.len()
        )));
    }
    for i in 1..records.len() {
        if records[i].timestamp <= records[i - 1].timestamp {
            return Err(Error::Ordering {
                line: i as u64,
                timestamp: format_timestamp(&records[i].timestamp),
            });
        }
    }
    let step = records[1].timestamp - records[0].timestamp;
    for i in 1..records.len() {
        let dt = records[i].timestamp - records[i - 1].timestamp;
        if dt != step {
            return Err(Error::Spacing {
                line: i as u64,
                expected_s: step.num_seconds(),
                found_s: dt.num_seconds(),
            });
        }
    }
    Ok(step)
}

/// `YYYY-MM-DDTHH:MM:SSZ`.
pub fn format_timestamp(t: &DateTime<Utc>) -> String {
    t.format("%Y-%m-%dT%H:%M:%SZ").to_string()
}

/// First `floor(train_frac · N)` records train, the rest test. No shuffling.
pub fn chronological_split(ts: &TimeSeries, train_frac: f64) -> Result<(TimeSeries, TimeSeries)> {
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(Error::InvalidInput(format!(
            "train fraction must lie in (0, 1), got {train_frac}"
        )));
    }
    let n = ts.len();
    if n < 10 {
        return Err(Error::InvalidInput(format!(
            "series of {n} records is too short to split (need >= 10)"
        )));
    }
    let n_train = (train_frac * n as f64).floor() as usize;
    if n_train < 2 || n - n_train < 2 {
        return Err(Error::InvalidInput(format!(
            "split of {n} records at {train_frac} leaves a side with fewer than 2 records"
        )));
    }
    let (train, test) = ts.records.split_at(n_train);
    Ok((
        TimeSeries {
            records: train.to_vec(),
            step: ts.step,
        },
        TimeSeries {
            records: test.to_vec(),
            step: ts.step,
        },
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    pub name: String,
    pub mean: f64,
    pub std: f64,
}

/// Per-feature z-score statistics, fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub features: Vec<FeatureStats>,
    pub fitted_on: usize,
}

/// Population statistics with a standard deviation below this are rejected.
const MIN_STD: f64 = 1e-12;

impl Normalizer {
    /// Mean 0, std 1 for every feature; what a model carries before training.
    pub fn identity() -> Self {
        Self {
            features: FEATURES
                .iter()
                .map(|name| FeatureStats {
                    name: (*name).to_string(),
                    mean: 0.0,
                    std: 1.0,
                })
                .collect(),
            fitted_on: 0,
        }
    }

    pub fn stats(&self, feature: usize) -> &FeatureStats {
        &self.features[feature]
    }

    pub fn transform(&self, feature: usize, value: f64) -> f64 {
        let s = &self.features[feature];
        (value - s.mean) / s.std
    }

    pub fn inverse_transform(&self, feature: usize, value: f64) -> f64 {
        let s = &self.features[feature];
        value * s.std + s.mean
    }

    pub fn validate(&self) -> Result<()> {
        if self.features.len() != FEATURES.len() {
            return Err(Error::Shape(format!(
                "normalizer has {} features, expected {}",
                self.features.len(),
                FEATURES.len()
            )));
        }
        for (s, name) in self.features.iter().zip(FEATURES) {
            if s.name != name {
                return Err(Error::Shape(format!(
                    "normalizer feature `{}` where `{name}` was expected",
                    s.name
                )));
            }
            if !s.mean.is_finite() || !s.std.is_finite() || s.std < MIN_STD {
                return Err(Error::NonFinite(format!(
                    "normalizer statistics for `{name}`: mean {}, std {}",
                    s.mean, s.std
                )));
            }
        }
        Ok(())
    }
}

/// Mean and population standard deviation of every feature over `train`.
pub fn fit_normalizer(train: &TimeSeries) -> Result<Normalizer> {
    fit_rows(train.records())
}

fn fit_rows(rows: &[Measurement]) -> Result<Normalizer> {
    if rows.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 rows to fit a normalizer, got {}",
            rows.len()
        )));
    }
    let n = rows.len() as f64;
    let mut features = Vec::with_capacity(FEATURES.len());
    for (j, name) in FEATURES.iter().enumerate() {
        let mean = rows.iter().map(|r| r.features()[j]).sum::<f64>() / n;
        let var = rows
            .iter()
            .map(|r| {
                let d = r.features()[j] - mean;
                d * d
            })
            .sum::<f64>()
            / n;
        let std = var.sqrt();
        if !(std >= MIN_STD) {
            return Err(Error::ConstantFeature((*name).to_string()));
        }
        features.push(FeatureStats {
            name: (*name).to_string(),
            mean,
            std,
        });
    }
    Ok(Normalizer {
        features,
        fitted_on: rows.len(),
    })
}

/// Which forecasting setup a dataset or model belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Case {
    /// DLR history only.
    Univariate,
    /// DLR plus the five weather/cable features.
    Multivariate,
}

impl Case {
    pub fn tag(self) -> u8 {
        match self {
            Case::Univariate => 1,
            Case::Multivariate => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            1 => Ok(Case::Univariate),
            2 => Ok(Case::Multivariate),
            other => Err(Error::InvalidInput(format!(
                "case must be 1 or 2, got {other}"
            ))),
        }
    }

    /// Feature columns per time step.
    pub fn input_dim(self) -> usize {
        match self {
            Case::Univariate => 1,
            Case::Multivariate => FEATURES.len(),
        }
    }
}

impl TryFrom<u8> for Case {
    type Error = Error;
    fn try_from(tag: u8) -> Result<Self> {
        Case::from_tag(tag)
    }
}

impl From<Case> for u8 {
    fn from(c: Case) -> u8 {
        c.tag()
    }
}

impl std::fmt::Display for Case {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.tag())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowedDataset {
    pub case: Case,
    pub window_len: usize,
    /// One `window_len × case.input_dim()` matrix of normalized features per pair.
    pub inputs: Vec<Matrix>,
    /// Normalized DLR of the record right after each window.
    pub targets: Vec<f64>,
    pub normalizer: Normalizer,
}

impl WindowedDataset {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    /// Contiguous sub-range of pairs.
    pub fn slice(&self, range: std::ops::Range<usize>) -> WindowedDataset {
        WindowedDataset {
            case: self.case,
            window_len: self.window_len,
            inputs: self.inputs[range.clone()].to_vec(),
            targets: self.targets[range].to_vec(),
            normalizer: self.normalizer.clone(),
        }
    }
}

/// Normalized feature matrix for records `rows` (one row per record).
pub fn window_matrix(rows: &[Measurement], norm: &Normalizer, case: Case) -> Matrix {
    let d = case.input_dim();
    let mut data = Vec::with_capacity(rows.len() * d);
    for r in rows {
        let f = r.features();
        for (j, &value) in f.iter().enumerate().take(d) {
            data.push(norm.transform(j, value));
        }
    }
    Matrix::from_vec(rows.len(), d, data)
}

/// Sliding windows of length `n`; pair `k` covers records `[k, k+n)` and
/// targets record `k+n`.
pub fn make_windows(ts: &TimeSeries, norm: &Normalizer, case: Case, n: usize) -> Result<WindowedDataset> {
    if n == 0 {
        return Err(Error::InvalidInput("window length must be >= 1".into()));
    }
    norm.validate()?;
    let records = ts.records();
    if records.len() < n + 1 {
        return Err(Error::InvalidInput(format!(
            "series of {} records is shorter than window {n} + 1",
            records.len()
        )));
    }
    let count = records.len() - n;
    let mut inputs = Vec::with_capacity(count);
    let mut targets = Vec::with_capacity(count);
    for k in 0..count {
        inputs.push(window_matrix(&records[k..k + n], norm, case));
        targets.push(norm.transform(DLR_FEATURE, records[k + n].dlr_a));
    }
    Ok(WindowedDataset {
        case,
        window_len: n,
        inputs,
        targets,
        normalizer: norm.clone(),
    })
}
