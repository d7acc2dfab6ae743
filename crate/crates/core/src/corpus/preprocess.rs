use std::collections::{BTreeMap, BTreeSet};
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{emoji, stem, CorpusError, RawDocument};

static URL_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?:https?://|www\.)\S+").expect("url regex"));
static MENTION_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"@\w+").expect("mention regex"));

pub const STOPWORDS_VERSION: &str = "en-1";
const STOPWORDS_EN: &str = include_str!("../../data/stopwords_en.txt");

/// The bundled English stopword list.
pub fn builtin_stopwords() -> BTreeSet<String> {
    parse_stopwords(STOPWORDS_EN)
}

/// One word per line, `#` comments. Entries containing an apostrophe are
/// also registered with the apostrophe removed.
pub fn parse_stopwords(text: &str) -> BTreeSet<String> {
    let mut set = BTreeSet::new();
    for line in text.lines() {
        let word = line.trim();
        if word.is_empty() || word.starts_with('#') {
            continue;
        }
        if word.contains('\'') {
            set.insert(word.replace('\'', ""));
        }
        set.insert(word.to_string());
    }
    set
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    pub lowercase: bool,
    pub strip_urls: bool,
    pub strip_mentions: bool,
    pub strip_punctuation: bool,
    pub emoji_map: BTreeMap<String, String>,
    pub stopwords: BTreeSet<String>,
    pub stemming: bool,
    pub min_token_len: usize,
}

impl Default for PreprocessConfig {
    /// Defaults for the embedding-cluster model: no stemming.
    fn default() -> Self {
        Self {
            lowercase: true,
            strip_urls: true,
            strip_mentions: true,
            strip_punctuation: true,
            emoji_map: emoji::builtin_table(),
            stopwords: builtin_stopwords(),
            stemming: false,
            min_token_len: 2,
        }
    }
}

impl PreprocessConfig {
    /// Defaults for the count-based models (LDA, GSDMM): stemming on.
    pub fn for_count_models() -> Self {
        Self {
            stemming: true,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.min_token_len < 1 {
            return Err(CorpusError::InvalidConfig(
                "min_token_len must be at least 1".into(),
            ));
        }
        if self.lowercase {
            if let Some(bad) = self.stopwords.iter().find(|w| w.to_lowercase() != **w) {
                return Err(CorpusError::InvalidConfig(format!(
                    "stopword {bad:?} is not lowercase while lowercase=true"
                )));
            }
        }
        Ok(())
    }
}

/// A [`PreprocessConfig`] with its emoji table pre-sorted for matching.
pub struct Preprocessor<'a> {
    cfg: &'a PreprocessConfig,
    // longest keys first so multi-codepoint sequences win over their prefixes
    emoji: Vec<(&'a str, String)>,
}

impl<'a> Preprocessor<'a> {
    pub fn new(cfg: &'a PreprocessConfig) -> Self {
        let mut emoji: Vec<(&str, String)> = cfg
            .emoji_map
            .iter()
            .filter(|(k, _)| !k.is_empty())
            .map(|(k, v)| (k.as_str(), format!(" {v} ")))
            .collect();
        emoji.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(b.0)));
        Self { cfg, emoji }
    }

    pub fn tokens(&self, text: &str) -> Vec<String> {
        let cfg = self.cfg;
        let mut text = text.to_string();
        if cfg.strip_urls {
            text = URL_RE.replace_all(&text, " ").into_owned();
        }
        if cfg.strip_mentions {
            text = MENTION_RE.replace_all(&text, " ").into_owned();
        }
        for (key, token) in &self.emoji {
            if text.contains(key) {
                text = text.replace(key, token);
            }
        }
        if cfg.strip_punctuation {
            text.retain(|c| c.is_alphanumeric() || c.is_whitespace());
        }
        if cfg.lowercase {
            text = text.to_lowercase();
        }
        text.split_whitespace()
            .filter(|t| !cfg.stopwords.contains(*t))
            .filter(|t| t.chars().count() >= cfg.min_token_len)
            .map(|t| {
                if cfg.stemming {
                    stem::stem(t)
                } else {
                    t.to_string()
                }
            })
            .collect()
    }
}

/// Runs the preprocessing pipeline on one document: URL removal, mention
/// removal, emoji mapping, punctuation stripping, lowercasing, whitespace
/// tokenization, stopword removal, minimum-length filter, optional stemming.
pub fn preprocess(raw: &RawDocument, cfg: &PreprocessConfig) -> Vec<String> {
    Preprocessor::new(cfg).tokens(&raw.text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn raw(text: &str) -> RawDocument {
        RawDocument {
            id: "x".into(),
            text: text.into(),
            timestamp: None,
        }
    }

    #[test]
    fn tweet_example() {
        let cfg = PreprocessConfig::default();
        let tokens = preprocess(&raw("Stay home! https://t.co/x @pm #covid"), &cfg);
        assert_eq!(tokens, vec!["stay", "home", "covid"]);
    }

    #[test]
    fn empty_input() {
        assert!(preprocess(&raw(""), &PreprocessConfig::default()).is_empty());
    }

    #[test]
    fn lowercase_folds_case_variants() {
        let tokens = preprocess(&raw("COVID covid CoViD"), &PreprocessConfig::default());
        assert_eq!(tokens, vec!["covid", "covid", "covid"]);
    }

    #[test]
    fn emoji_become_tokens() {
        let tokens = preprocess(&raw("get well soon😷🙏"), &PreprocessConfig::default());
        assert_eq!(tokens, vec!["get", "well", "soon", "facemask", "pray"]);
    }

    #[test]
    fn variation_selector_sequences_match_whole() {
        let tokens = preprocess(&raw("love❤️india"), &PreprocessConfig::default());
        assert_eq!(tokens, vec!["love", "heart", "india"]);
    }

    #[test]
    fn www_urls_and_hyphens() {
        let tokens = preprocess(
            &raw("see www.mohfw.gov.in for covid-19 updates"),
            &PreprocessConfig::default(),
        );
        assert_eq!(tokens, vec!["see", "covid19", "updates"]);
    }

    #[test]
    fn apostrophe_stopwords_match_after_stripping() {
        let tokens = preprocess(&raw("Don't panic, it's fine"), &PreprocessConfig::default());
        assert_eq!(tokens, vec!["panic", "fine"]);
    }

    #[test]
    fn stemming_runs_last() {
        let cfg = PreprocessConfig::for_count_models();
        let tokens = preprocess(&raw("Vaccines are being administered"), &cfg);
        assert_eq!(tokens, vec!["vaccin", "administ"]);
    }

    #[test]
    fn min_len_counts_chars() {
        let cfg = PreprocessConfig {
            min_token_len: 3,
            ..PreprocessConfig::default()
        };
        assert_eq!(preprocess(&raw("né été xy abc"), &cfg), vec!["été", "abc"]);
    }

    #[test]
    fn validation() {
        let cfg = PreprocessConfig {
            min_token_len: 0,
            ..PreprocessConfig::default()
        };
        assert!(cfg.validate().is_err());
        let mut cfg = PreprocessConfig::default();
        cfg.stopwords.insert("The".into());
        assert!(cfg.validate().is_err());
        cfg.lowercase = false;
        assert!(cfg.validate().is_ok());
    }

    fn tweetish() -> impl Strategy<Value = String> {
        let piece = prop_oneof![
            "[a-zA-Z]{1,8}",
            "[0-9]{1,3}",
            Just("https://t.co/abc".to_string()),
            Just("www.example.org/x".to_string()),
            Just("@user_1".to_string()),
            Just("#Covid19".to_string()),
            Just("😷".to_string()),
            Just("❤️".to_string()),
            Just("🤷".to_string()),
            Just("don't".to_string()),
            Just("Été".to_string()),
            "[!?.,;:'\"()-]{1,3}",
        ];
        prop::collection::vec((piece, prop_oneof![Just(" "), Just(""), Just("  ")]), 0..20)
            .prop_map(|parts| parts.into_iter().map(|(p, s)| p + s).collect())
    }

    proptest! {
        #[test]
        fn idempotent_under_default_config(text in tweetish()) {
            let cfg = PreprocessConfig::default();
            let once = preprocess(&raw(&text), &cfg);
            let twice = preprocess(&raw(&once.join(" ")), &cfg);
            prop_assert_eq!(once, twice);
        }
    }
}
