//! Dynamic line rating: conductor ampacity from weather, synthetic sensor
//! data, and 15-minute-ahead DLR forecasting with a univariate LSTM (case 1)
//! and a multivariate attention-LSTM (case 2).
//!
//! The pipeline is `synth::generate` (or `dataset::read_csv`) →
//! `dataset::chronological_split` → `dataset::fit_normalizer` →
//! `dataset::make_windows` → `forecaster::train` → `evaluation::evaluate`.

pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod forecaster;
pub mod nn;
pub mod rng;
pub mod synth;
pub mod thermal;

pub use dataset::{Case, Measurement, Normalizer, TimeSeries, WindowedDataset};
pub use error::{Error, Result};
pub use evaluation::MetricsReport;
pub use forecaster::{Model, ModelConfig, TrainReport};
pub use synth::GenConfig;
pub use thermal::{ConductorSpec, WeatherPoint};
