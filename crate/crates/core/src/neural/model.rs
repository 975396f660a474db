//! Model files: encoder description, network weights, training settings.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::encoder::EncoderSpec;
use super::scorer::Network;
use super::train::{LossTrace, TrainConfig};
use crate::error::{Error, Result};

pub const MODEL_FORMAT: &str = "clarq-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Initial scorer trained on pairs.
    Init,
    /// Initial scorer trained on graded triplets.
    Minit,
    /// Marginal-relevance scorer trained on triplets under history prefixes.
    Mmrbert,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub kind: ModelKind,
    pub encoder: EncoderSpec,
    pub network: Network<f64>,
    pub train_config: TrainConfig,
    pub seed: u64,
    pub loss_trace: LossTrace,
    /// Model whose encoder statistics this one reused.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_model: Option<String>,
}

impl ModelFile {
    pub fn new(
        kind: ModelKind,
        encoder: EncoderSpec,
        network: Network<f64>,
        train_config: TrainConfig,
        loss_trace: LossTrace,
    ) -> Self {
        Self {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            kind,
            encoder,
            network,
            seed: train_config.seed,
            train_config,
            loss_trace,
            base_model: None,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: ModelFile = serde_json::from_str(text)?;
        if m.format != MODEL_FORMAT || m.version != MODEL_VERSION {
            return Err(Error::Invalid(format!(
                "unsupported model file {} v{}",
                m.format, m.version
            )));
        }
        m.network.validate()?;
        let expected = match &m.network {
            Network::Init(s) => s.mlp0.input_dim(),
            Network::Mmr(s) => s.mlp1.input_dim(),
        };
        if expected != m.encoder.dim() {
            return Err(Error::Shape(format!(
                "network input {expected} does not match encoder dimension {}",
                m.encoder.dim()
            )));
        }
        Ok(m)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::super::encoder::LexicalEncoder;
    use super::super::train::{LossKind, NetworkShape};
    use super::*;

    #[test]
    fn round_trip_and_dimension_check() {
        let enc = EncoderSpec::Lexical(LexicalEncoder::fit(["a b", "b c"], 2));
        let net = NetworkShape::Init {
            input: 10,
            hidden: Some(4),
        }
        .initialize::<f64>(5, 0.05)
        .unwrap();
        let m = ModelFile::new(
            ModelKind::Init,
            enc.clone(),
            net,
            TrainConfig::new(LossKind::Pairwise, 5),
            LossTrace::default(),
        );
        let text = m.to_json().unwrap();
        assert_eq!(ModelFile::from_json(&text).unwrap(), m);

        let wrong = NetworkShape::Init { input: 9, hidden: None }
            .initialize::<f64>(5, 0.05)
            .unwrap();
        let bad = ModelFile::new(
            ModelKind::Init,
            enc,
            wrong,
            TrainConfig::new(LossKind::Pairwise, 5),
            LossTrace::default(),
        );
        assert!(ModelFile::from_json(&bad.to_json().unwrap()).is_err());
    }
}
