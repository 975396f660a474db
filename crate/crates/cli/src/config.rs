use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use clarq::corpus::{Grade, LabelConfig};
use clarq::feedback::NegativeModelConfig;
use clarq::pipeline::ModelSettings;
use clarq::simulator::{ConversationConfig, PolicyKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimilarityKind {
    Lexical,
    /// Sigmoid of the trained initial scorer.
    Neural,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum IdealKind {
    /// The conversation's own asked list.
    Asked,
    /// The topic's whole candidate pool.
    Pool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    pub lambda: f64,
    pub alpha: f64,
    /// Terms kept in the negative topic model.
    pub terms: usize,
    pub similarity: SimilarityKind,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            kind: PolicyKind::Ql,
            lambda: 0.5,
            alpha: 0.9,
            terms: 10,
            similarity: SimilarityKind::Lexical,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grids {
    pub lambda: Vec<f64>,
    pub alpha: Vec<f64>,
    pub terms: Vec<usize>,
    pub w: Vec<f64>,
}

impl Default for Grids {
    fn default() -> Self {
        Self {
            lambda: (0..=10).map(|i| f64::from(i) / 10.0).collect(),
            alpha: vec![0.8, 0.85, 0.9, 0.95, 0.99],
            terms: vec![10, 20, 30],
            w: (0..=20).map(|i| f64::from(i) * 0.05).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Corpus file written by `ingest`.
    pub corpus: Option<PathBuf>,
    pub documents: Option<PathBuf>,
    pub qrels: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out_dir: PathBuf,
    pub unanswered_grade: u8,
    pub pool_size: usize,
    pub turns: usize,
    pub preset_counts: bool,
    pub question_mu: f64,
    pub document_mu: f64,
    /// Documents retrieved per conversation.
    pub doc_depth: usize,
    /// Topic weight of the conversational document query.
    pub w: f64,
    pub policy: PolicyConfig,
    pub negative_model: NegativeModelConfig,
    pub grids: Grids,
    pub model: ModelSettings,
    pub init_model: Option<PathBuf>,
    pub mmr_model: Option<PathBuf>,
    pub ideal: IdealKind,
    pub fisher_iterations: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            corpus: None,
            documents: None,
            qrels: None,
            seed: None,
            out_dir: PathBuf::from("out"),
            unanswered_grade: 1,
            pool_size: 100,
            turns: 5,
            preset_counts: true,
            question_mu: 100.0,
            document_mu: 1000.0,
            doc_depth: 100,
            w: 0.5,
            policy: PolicyConfig::default(),
            negative_model: NegativeModelConfig::default(),
            grids: Grids::default(),
            model: ModelSettings::default(),
            init_model: None,
            mmr_model: None,
            ideal: IdealKind::Asked,
            fisher_iterations: clarq::eval::DEFAULT_ITERATIONS,
        }
    }
}

impl ExperimentConfig {
    /// Reads the config file (if any), applies `key=value` overrides, then
    /// deserializes. Keys are dotted paths; values are JSON, falling back to
    /// a plain string.
    pub fn load(path: Option<&Path>, overrides: &[(String, Value)]) -> anyhow::Result<Self> {
        let mut doc = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
                serde_json::from_str(&text).with_context(|| format!("parsing config {}", p.display()))?
            }
            None => Value::Object(Default::default()),
        };
        for (key, value) in overrides {
            set_path(&mut doc, key, value.clone())?;
        }
        let cfg: Self = serde_json::from_value(doc).context("invalid configuration")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.pool_size == 0 || self.turns == 0 || self.doc_depth == 0 {
            bail!("pool_size, turns and doc_depth must be positive");
        }
        if self.unanswered_grade > 1 {
            bail!("unanswered_grade must be 0 or 1");
        }
        Ok(())
    }

    pub fn seed(&self) -> anyhow::Result<u64> {
        self.seed
            .context("a seed is required: set \"seed\" in the config or pass --seed")
    }

    pub fn corpus_path(&self) -> anyhow::Result<&Path> {
        self.corpus
            .as_deref()
            .context("no corpus: set \"corpus\" in the config or pass --corpus")
    }

    pub fn labels(&self) -> LabelConfig {
        LabelConfig {
            unanswered_same_topic: if self.unanswered_grade == 0 {
                Grade::Zero
            } else {
                Grade::One
            },
        }
    }

    pub fn conversation(&self) -> ConversationConfig {
        ConversationConfig {
            turns: self.turns,
            preset_counts: self.preset_counts,
        }
    }

    /// Writes the effective configuration next to the outputs.
    pub fn echo(&self) -> anyhow::Result<()> {
        std::fs::create_dir_all(&self.out_dir).with_context(|| format!("creating {}", self.out_dir.display()))?;
        let path = self.out_dir.join("config.effective.json");
        std::fs::write(&path, serde_json::to_string_pretty(self)?)
            .with_context(|| format!("writing {}", path.display()))
    }
}

fn set_path(doc: &mut Value, key: &str, value: Value) -> anyhow::Result<()> {
    let mut cur = doc;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let Value::Object(map) = cur else {
            bail!("cannot set {key}: {} is not an object", parts[..i].join("."));
        };
        if i + 1 == parts.len() {
            map.insert(part.to_string(), value);
            return Ok(());
        }
        cur = map
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    bail!("empty override key")
}

/// Parses `key=value`.
pub fn parse_override(s: &str) -> Result<(String, Value), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected key=value, got {s:?}"))?;
    let value = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_owned()));
    Ok((k.trim().to_owned(), value))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_and_defaults() {
        let o = vec![
            parse_override("seed=4").unwrap(),
            parse_override("policy.kind=mmr").unwrap(),
            parse_override("policy.lambda=0.3").unwrap(),
        ];
        let c = ExperimentConfig::load(None, &o).unwrap();
        assert_eq!(c.seed, Some(4));
        assert_eq!(c.policy.kind, PolicyKind::Mmr);
        assert_eq!(c.policy.lambda, 0.3);
        assert_eq!(c.turns, 5);
        assert_eq!(c.grids.w.len(), 21);
        assert!(ExperimentConfig::load(None, &[parse_override("bogus=1").unwrap()]).is_err());
        assert!(ExperimentConfig::load(None, &[parse_override("turns=0").unwrap()]).is_err());
    }
}
