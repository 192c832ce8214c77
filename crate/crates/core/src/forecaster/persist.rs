//! Versioned JSON model files.
//!
//! ```text
//! {
//!   "version": 1,
//!   "case": 1 | 2,
//!   "config": { ... },
//!   "feature_names": ["dlr_a", ...],
//!   "normalizer": { "features": [{"name", "mean", "std"}, ...], "fitted_on" },
//!   "weights": { "lstm": {...}, "attention": {...} | null, "head_w": [[...]], "head_b": [...] },
//!   "metadata": { ... }
//! }
//! ```
//!
//! Matrices are arrays of rows. Floats are written in shortest round-trip
//! form and parsed with correct rounding, so a reload is bit-exact.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Model, ModelConfig, Network, TrainingMetadata};
use crate::dataset::{Case, Normalizer, FEATURES};
use crate::error::{Error, Result};

pub const MODEL_FILE_VERSION: i64 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    version: i64,
    case: Case,
    config: ModelConfig,
    feature_names: Vec<String>,
    normalizer: Normalizer,
    weights: Network,
    metadata: TrainingMetadata,
}

fn validate(model: &Model) -> Result<()> {
    model.config.validate()?;
    model
        .network
        .validate(model.config.case, model.config.hidden_dim)?;
    model.normalizer.validate()
}

pub fn model_to_json(model: &Model) -> Result<String> {
    validate(model)?;
    let meta = &model.metadata;
    if !meta.final_train_mse.is_finite() && meta.trained {
        return Err(Error::NonFinite("training metadata".into()));
    }
    let file = ModelFile {
        version: MODEL_FILE_VERSION,
        case: model.config.case,
        config: model.config.clone(),
        feature_names: FEATURES.iter().map(|s| s.to_string()).collect(),
        normalizer: model.normalizer.clone(),
        weights: model.network.clone(),
        metadata: model.metadata.clone(),
    };
    serde_json::to_string_pretty(&file).map_err(|e| Error::ModelFormat(e.to_string()))
}

pub fn model_from_json(text: &str) -> Result<Model> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::ModelFormat(format!("parse error: {e}")))?;
    let version = value
        .get("version")
        .ok_or_else(|| Error::ModelFormat("missing `version` field".into()))?;
    let found = version
        .as_i64()
        .or_else(|| version.as_str().and_then(|s| s.parse().ok()))
        .ok_or_else(|| Error::ModelFormat(format!("unreadable version {version}")))?;
    if found != MODEL_FILE_VERSION || !version.is_i64() {
        return Err(Error::Version {
            found,
            expected: MODEL_FILE_VERSION,
        });
    }
    let file: ModelFile =
        serde_json::from_value(value).map_err(|e| Error::ModelFormat(e.to_string()))?;
    if file.case != file.config.case {
        return Err(Error::ModelFormat(format!(
            "top-level case {} disagrees with config case {}",
            file.case, file.config.case
        )));
    }
    if file.feature_names != FEATURES {
        return Err(Error::ModelFormat(format!(
            "feature names {:?} differ from {:?}",
            file.feature_names, FEATURES
        )));
    }
    let model = Model {
        config: file.config,
        network: file.weights,
        normalizer: file.normalizer,
        metadata: file.metadata,
    };
    validate(&model)?;
    Ok(model)
}

pub fn save_model(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = model_to_json(model)?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Model> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forecaster::build_model;
    use crate::nn::Matrix;
    use crate::rng::SplitMix64;

    fn model(case: Case) -> Model {
        let mut m = build_model(&ModelConfig {
            hidden_dim: 5,
            window_len: 8,
            ..ModelConfig::new(case)
        })
        .unwrap();
        m.normalizer.features[0].mean = 123.456_789_012_345_6;
        m.normalizer.features[0].std = 0.1 + 0.2;
        m
    }

    #[test]
    fn round_trip_predicts_bitwise_equal() {
        let mut rng = SplitMix64::new(9);
        for case in [Case::Univariate, Case::Multivariate] {
            let m = model(case);
            let back = model_from_json(&model_to_json(&m).unwrap()).unwrap();
            assert_eq!(back, m);
            for _ in 0..100 {
                let d = case.input_dim();
                let w = Matrix::from_vec(8, d, (0..8 * d).map(|_| rng.uniform(-3.0, 3.0)).collect());
                assert_eq!(m.predict(&w).unwrap().to_bits(), back.predict(&w).unwrap().to_bits());
            }
        }
    }

    #[test]
    fn version_99_rejected() {
        let text = model_to_json(&model(Case::Univariate)).unwrap();
        let bumped = text.replacen("\"version\": 1", "\"version\": 99", 1);
        assert!(matches!(
            model_from_json(&bumped).unwrap_err(),
            Error::Version { found: 99, .. }
        ));
        let quoted = text.replacen("\"version\": 1", "\"version\": \"99\"", 1);
        assert!(matches!(model_from_json(&quoted).unwrap_err(), Error::Version { .. }));
    }

    #[test]
    fn truncated_file_rejected() {
        let text = model_to_json(&model(Case::Multivariate)).unwrap();
        let cut = &text[..text.len() / 2];
        assert!(matches!(model_from_json(cut).unwrap_err(), Error::ModelFormat(_)));
    }

    #[test]
    fn inconsistent_shapes_rejected() {
        let mut m = model(Case::Multivariate);
        m.network.head_w = Matrix::zeros(5, 1);
        assert!(model_to_json(&m).is_err());

        let good = model_to_json(&model(Case::Univariate)).unwrap();
        let wrong_case = good.replacen("\"case\": 1", "\"case\": 2", 2);
        assert!(model_from_json(&wrong_case).is_err());
        let nulled = good.replacen("\"fitted_on\"", "\"fitted_on\": null, \"x\"", 1);
        assert!(model_from_json(&nulled).is_err());
    }
}
