//! Model persistence: one versioned JSON document holding the trained model
//! together with everything needed to replay preprocessing at predict time
//! (code maps, discretizer state, selected features, training domains).

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{LearnerKind, LearnerModel};
use crate::discretize::DiscretizerState;
use crate::encode::Encoder;
use crate::error::{Error, Result};
use crate::events::EventSpaceSpec;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelBundle {
    pub format_version: u32,
    /// Metadata block: learner kind and feature count, readable without
    /// touching the model payload.
    pub learner: LearnerKind,
    pub n_features: usize,
    pub model: LearnerModel,
    /// Fitted categorical code maps (when trained from a raw CSV).
    pub encoder: Option<Encoder>,
    /// Fitted magnitude ranges and variance-filter drops.
    pub discretizer: Option<DiscretizerState>,
    /// Names of the features the model consumes, in model column order.
    pub selected_features: Vec<String>,
    /// Observed training domain of each model feature; the forecast stage
    /// builds its event space from this.
    pub space: Option<EventSpaceSpec>,
    /// Holdout accuracy, used to weight forecasts.
    pub accuracy: f64,
}

impl ModelBundle {
    /// Wrap a trained model with its preprocessing context.
    pub fn new(
        model: LearnerModel,
        encoder: Option<Encoder>,
        discretizer: Option<DiscretizerState>,
        space: Option<EventSpaceSpec>,
        accuracy: f64,
    ) -> ModelBundle {
        ModelBundle {
            format_version: FORMAT_VERSION,
            learner: model.kind(),
            n_features: model.meta.n_features(),
            selected_features: model.meta.features.iter().map(|f| f.name.clone()).collect(),
            model,
            encoder,
            discretizer,
            space,
            accuracy,
        }
    }

    /// Serialize to pretty JSON bytes (deterministic field order).
    pub fn to_json(&self) -> Result<Vec<u8>> {
        serde_json::to_vec_pretty(self)
            .map_err(|e| Error::invariant(format!("bundle serialization failed: {e}")))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?)
            .map_err(|e| Error::data(format!("cannot write {}: {e}", path.display())))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<ModelBundle> {
        let path = path.as_ref();
        let bytes = std::fs::read(path)
            .map_err(|e| Error::data(format!("cannot read {}: {e}", path.display())))?;
        let bundle: ModelBundle = serde_json::from_slice(&bytes).map_err(|e| {
            Error::bundle(format!(
                "{} is corrupt or not a model bundle: {e}",
                path.display()
            ))
        })?;
        if bundle.format_version != FORMAT_VERSION {
            return Err(Error::bundle(format!(
                "{}: format version {} is not supported (expected {FORMAT_VERSION})",
                path.display(),
                bundle.format_version
            )));
        }
        if bundle.n_features != bundle.model.meta.n_features() {
            return Err(Error::bundle(format!(
                "{}: metadata says {} features but the model has {}",
                path.display(),
                bundle.n_features,
                bundle.model.meta.n_features()
            )));
        }
        Ok(bundle)
    }
}

/// Save a bare model without preprocessing context.
pub fn save_model(model: &LearnerModel, path: impl AsRef<Path>) -> Result<()> {
    ModelBundle::new(model.clone(), None, None, None, 0.0).save(path)
}

/// Load a bundle and return its model.
pub fn load_model(path: impl AsRef<Path>) -> Result<LearnerModel> {
    Ok(ModelBundle::load(path)?.model)
}
