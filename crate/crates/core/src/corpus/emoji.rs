//! Built-in emoji → ascii token table.
//!
//! Tokens are lowercase ascii letters only so they survive punctuation
//! stripping and never collide with the stopword list.

use std::collections::BTreeMap;
use std::path::Path;

use super::CorpusError;

pub const BUILTIN_EMOJI: &[(&str, &str)] = &[
    ("😀", "grinning"),
    ("😃", "smiley"),
    ("😄", "smile"),
    ("😁", "grin"),
    ("😆", "laughing"),
    ("😅", "sweatsmile"),
    ("😂", "joy"),
    ("🤣", "rofl"),
    ("😊", "blush"),
    ("😇", "innocent"),
    ("🙂", "slightsmile"),
    ("😉", "wink"),
    ("😍", "hearteyes"),
    ("😘", "kiss"),
    ("😋", "yum"),
    ("😎", "cool"),
    ("🤔", "thinking"),
    ("😐", "neutral"),
    ("😑", "expressionless"),
    ("😒", "unamused"),
    ("🙄", "eyeroll"),
    ("😔", "pensive"),
    ("😟", "worried"),
    ("😕", "confused"),
    ("🙁", "frown"),
    ("😢", "cry"),
    ("😭", "sob"),
    ("😤", "triumph"),
    ("😠", "angry"),
    ("😡", "rage"),
    ("🤬", "cursing"),
    ("😱", "scream"),
    ("😨", "fearful"),
    ("😰", "anxious"),
    ("😷", "facemask"),
    ("🤒", "thermometerface"),
    ("🤕", "bandageface"),
    ("🤢", "nauseated"),
    ("🤮", "vomiting"),
    ("🤧", "sneezing"),
    ("🥵", "hotface"),
    ("🥶", "coldface"),
    ("😴", "sleeping"),
    ("🙏", "pray"),
    ("👍", "thumbsup"),
    ("👎", "thumbsdown"),
    ("👏", "clap"),
    ("🙌", "raisedhands"),
    ("💪", "muscle"),
    ("✊", "fist"),
    ("❤️", "heart"),
    ("❤", "heart"),
    ("💔", "brokenheart"),
    ("💯", "hundred"),
    ("🔥", "fire"),
    ("✅", "checkmark"),
    ("❌", "crossmark"),
    ("⚠️", "warning"),
    ("⚠", "warning"),
    ("🚨", "siren"),
    ("🏥", "hospital"),
    ("💉", "syringe"),
    ("💊", "pill"),
    ("🦠", "microbe"),
    ("🧪", "testtube"),
    ("🩺", "stethoscope"),
    ("🚑", "ambulance"),
    ("🏠", "house"),
    ("🇮🇳", "flagindia"),
    ("🌍", "earth"),
    ("📢", "loudspeaker"),
    ("📰", "newspaper"),
    ("⚰️", "coffin"),
    ("⚰", "coffin"),
    ("🕯️", "candle"),
    ("🕯", "candle"),
];

/// The built-in table as an owned map.
pub fn builtin_table() -> BTreeMap<String, String> {
    BUILTIN_EMOJI
        .iter()
        .map(|(e, t)| (e.to_string(), t.to_string()))
        .collect()
}

/// Loads a JSON object `{"<emoji>": "<token>", ...}` and layers it over the
/// built-in table.
pub fn load_override(path: &Path) -> Result<BTreeMap<String, String>, CorpusError> {
    let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let overrides: BTreeMap<String, String> =
        serde_json::from_str(&text).map_err(|e| CorpusError::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
    let mut table = builtin_table();
    table.extend(overrides);
    Ok(table)
}
