//! Shared fixtures for the criterion benches.

use dlr_core::dataset::{chronological_split, fit_normalizer, make_windows, Case, WindowedDataset};
use dlr_core::synth::{generate, GenConfig};
use dlr_core::ConductorSpec;

/// Training windows from `days` of default synthetic data.
pub fn training_windows(days: u32, case: Case, window: usize) -> WindowedDataset {
    let cfg = GenConfig {
        days,
        ..GenConfig::default()
    };
    let ts = generate(&cfg, &ConductorSpec::default()).expect("synthetic data");
    let (train, _) = chronological_split(&ts, 0.8).expect("split");
    let norm = fit_normalizer(&train).expect("normalizer");
    make_windows(&train, &norm, case, window).expect("windows")
}
