//! Run configuration file: strict JSON with `preprocess`, `model`,
//! `coherence`, `paths` and `seed` sections. Command-line flags override
//! file values; the fully resolved result is hashed and recorded.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::coherence::CoherenceConfig;
use crate::corpus::{emoji, parse_stopwords, PreprocessConfig, STOPWORDS_VERSION};
use crate::embed::EmbedConfig;
use crate::io::sha256_hex;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub preprocess: PreprocessSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSection>,
    #[serde(default)]
    pub coherence: CoherenceConfig,
    #[serde(default)]
    pub paths: PathsSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

pub const BUILTIN_STOPWORDS: &str = "builtin";
pub const BUILTIN_EMOJI: &str = "builtin";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PreprocessSection {
    pub lowercase: bool,
    pub strip_urls: bool,
    pub strip_mentions: bool,
    pub strip_punctuation: bool,
    /// Unset means: on for lda/gsdmm, off for embed or when no model is set.
    pub stemming: Option<bool>,
    pub min_token_len: usize,
    /// `"builtin"` or a path to a one-word-per-line file.
    pub stopwords: String,
    /// `"builtin"` or a path to a JSON object layered over the built-in table.
    pub emoji_map: String,
}

impl Default for PreprocessSection {
    fn default() -> Self {
        Self {
            lowercase: true,
            strip_urls: true,
            strip_mentions: true,
            strip_punctuation: true,
            stemming: None,
            min_token_len: 2,
            stopwords: BUILTIN_STOPWORDS.into(),
            emoji_map: BUILTIN_EMOJI.into(),
        }
    }
}

impl PreprocessSection {
    pub fn build(&self) -> Result<PreprocessConfig, CliError> {
        let stopwords = if self.stopwords == BUILTIN_STOPWORDS {
            crate::corpus::builtin_stopwords()
        } else {
            let text = std::fs::read_to_string(&self.stopwords).map_err(|e| {
                CliError::data(format!("cannot read stopwords {}: {e}", self.stopwords))
            })?;
            parse_stopwords(&text)
        };
        let emoji_map = if self.emoji_map == BUILTIN_EMOJI {
            emoji::builtin_table()
        } else {
            emoji::load_override(Path::new(&self.emoji_map))?
        };
        let cfg = PreprocessConfig {
            lowercase: self.lowercase,
            strip_urls: self.strip_urls,
            strip_mentions: self.strip_mentions,
            strip_punctuation: self.strip_punctuation,
            emoji_map,
            stopwords,
            stemming: self.stemming.unwrap_or(false),
            min_token_len: self.min_token_len,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn stopwords_label(&self) -> String {
        if self.stopwords == BUILTIN_STOPWORDS {
            format!("builtin:{STOPWORDS_VERSION}")
        } else {
            self.stopwords.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum ModelSection {
    Lda(LdaSection),
    Gsdmm(GsdmmSection),
    Embed(EmbedConfig),
}

impl ModelSection {
    pub fn method(&self) -> Method {
        match self {
            ModelSection::Lda(_) => Method::Lda,
            ModelSection::Gsdmm(_) => Method::Gsdmm,
            ModelSection::Embed(_) => Method::Embed,
        }
    }

    pub fn default_for(method: Method) -> Self {
        match method {
            Method::Lda => ModelSection::Lda(LdaSection::default()),
            Method::Gsdmm => ModelSection::Gsdmm(GsdmmSection::default()),
            Method::Embed => ModelSection::Embed(EmbedConfig::default()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Lda,
    Gsdmm,
    Embed,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Lda => "lda",
            Method::Gsdmm => "gsdmm",
            Method::Embed => "embed",
        }
    }

    pub fn stems_by_default(self) -> bool {
        !matches!(self, Method::Embed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LdaSection {
    /// Required; there is no default topic count.
    pub num_topics: Option<usize>,
    /// Defaults to `1 / num_topics`.
    pub alpha: Option<f64>,
    pub eta: f64,
    pub iterations: usize,
    pub keep_assignments: bool,
}

impl Default for LdaSection {
    fn default() -> Self {
        Self {
            num_topics: None,
            alpha: None,
            eta: 0.01,
            iterations: 200,
            keep_assignments: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GsdmmSection {
    pub num_topics: usize,
    pub lambda_alpha: f64,
    pub lambda_beta: f64,
    pub iterations: usize,
}

impl Default for GsdmmSection {
    fn default() -> Self {
        Self {
            num_topics: 60,
            lambda_alpha: 0.1,
            lambda_beta: 0.1,
            iterations: 30,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathsSection {
    /// Raw JSONL documents.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    /// Preprocessed corpus JSON.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corpus: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub embeddings: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::usage(format!("invalid config {}: {e}", path.display())))
    }

    /// Stemming default follows the configured model family.
    pub fn resolve_stemming(&mut self) {
        if self.preprocess.stemming.is_none() {
            let stem = self
                .model
                .as_ref()
                .is_some_and(|m| m.method().stems_by_default());
            self.preprocess.stemming = Some(stem);
        }
    }

    pub fn output_path(
        &self,
        flag: Option<PathBuf>,
        default_name: &str,
    ) -> Result<PathBuf, CliError> {
        match (flag, &self.paths.output_dir) {
            (Some(p), _) => Ok(p),
            (None, Some(dir)) => Ok(dir.join(default_name)),
            (None, None) => Err(CliError::usage(
                "no --output given and no paths.output_dir configured",
            )),
        }
    }
}

/// What a command actually ran with; its hash tags every output.
#[derive(Debug, Clone, Serialize)]
pub struct Resolved {
    pub command: &'static str,
    pub config: RunConfig,
    pub params: serde_json::Value,
}

impl Resolved {
    pub fn to_value(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }

    pub fn hash(&self) -> String {
        sha256_hex(&serde_json::to_vec(&self.to_value()).expect("value serializes"))
    }
}
