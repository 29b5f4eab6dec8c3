//! Text cleaning for short free-form messages.
//!
//! [`clean`] runs the fixed pipeline: lowercase, drop link tokens, strip
//! everything but ASCII letters, tokenize on whitespace, remove stop words,
//! then stem. Stop words are matched on surface forms (before stemming), and
//! `#`/`@` markers are stripped while their word bodies are kept unless
//! configured otherwise.

mod porter;
mod stopwords;

pub use porter::stem;
pub use stopwords::{default_stoplist, load_stoplist, parse_stoplist, DEFAULT_STOPWORDS};

use std::collections::HashSet;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TextPrepError {
    #[error("failed to read stop-word list {path}: {source}")]
    Stoplist {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("unknown stemmer {0:?} (expected \"porter\" or \"none\")")]
    UnknownStemmer(String),
}

/// Which stemmer the cleaner applies to the surviving tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StemmerKind {
    #[default]
    Porter,
    None,
}

impl std::str::FromStr for StemmerKind {
    type Err = TextPrepError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "porter" => Ok(StemmerKind::Porter),
            "none" => Ok(StemmerKind::None),
            other => Err(TextPrepError::UnknownStemmer(other.to_string())),
        }
    }
}

/// Settings for [`clean`]. The default configuration uses the bundled English
/// stop-word list, removes link tokens, keeps `#`/`@` word bodies, and stems
/// with [`stem`].
#[derive(Debug, Clone)]
pub struct CleanConfig {
    pub stoplist: HashSet<String>,
    pub strip_urls: bool,
    pub keep_hash_mention_bodies: bool,
    pub stemmer: StemmerKind,
}

impl Default for CleanConfig {
    fn default() -> Self {
        CleanConfig {
            stoplist: default_stoplist(),
            strip_urls: true,
            keep_hash_mention_bodies: true,
            stemmer: StemmerKind::Porter,
        }
    }
}

/// Clean one message into its token list.
///
/// Link removal happens before punctuation stripping (stripping first would
/// leave junk fragments like `httptco`); a whitespace-delimited token counts
/// as a link when it starts with `http:`, `https:`, or `www.`. Within the
/// remaining tokens every character outside `a-z` is dropped in place, so
/// `"don't"` becomes `dont` and digit-only tokens vanish.
pub fn clean(text: &str, config: &CleanConfig) -> Vec<String> {
    let lower = text.to_lowercase();
    let mut tokens = Vec::new();
    for raw in lower.split_whitespace() {
        if config.strip_urls && is_link_token(raw) {
            continue;
        }
        if !config.keep_hash_mention_bodies && raw.starts_with(['#', '@']) {
            continue;
        }
        let letters: String = raw.chars().filter(char::is_ascii_alphabetic).collect();
        if letters.is_empty() || config.stoplist.contains(&letters) {
            continue;
        }
        tokens.push(match config.stemmer {
            StemmerKind::Porter => stem(&letters),
            StemmerKind::None => letters,
        });
    }
    tokens
}

/// Clean raw bytes that may not be valid UTF-8.
///
/// Invalid sequences are replaced before cleaning (and then stripped with the
/// rest of the non-letter characters); the second return value counts the
/// replacements so callers can surface a warning.
pub fn clean_lossy(bytes: &[u8], config: &CleanConfig) -> (Vec<String>, usize) {
    let text = String::from_utf8_lossy(bytes);
    let replaced = text.matches('\u{FFFD}').count();
    (clean(&text, config), replaced)
}

fn is_link_token(token: &str) -> bool {
    token.starts_with("http:") || token.starts_with("https:") || token.starts_with("www.")
}
