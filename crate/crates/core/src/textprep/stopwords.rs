//! Stop-word lists: the bundled English default plus file loading.
//!
//! List files hold one word per line; blank lines and lines starting with `#`
//! are ignored, and entries are lowercased on load.

use std::collections::HashSet;
use std::path::Path;

use super::TextPrepError;

/// The bundled English list (`data/stopwords_en_v1.txt`).
pub const DEFAULT_STOPWORDS: &str = include_str!("../../data/stopwords_en_v1.txt");

/// The bundled English stop-word set.
pub fn default_stoplist() -> HashSet<String> {
    parse_stoplist(DEFAULT_STOPWORDS)
}

/// Parse stop-list text (one word per line, `#` comments).
pub fn parse_stoplist(text: &str) -> HashSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|line| !line.is_empty() && !line.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

/// Load a stop-word list from a file.
pub fn load_stoplist(path: &Path) -> Result<HashSet<String>, TextPrepError> {
    let text = std::fs::read_to_string(path).map_err(|source| TextPrepError::Stoplist {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(parse_stoplist(&text))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_list_has_core_words() {
        let stops = default_stoplist();
        for word in ["a", "the", "and", "of", "is"] {
            assert!(stops.contains(word), "missing {word:?}");
        }
        assert!(!stops.contains("veterans"));
        assert!(!stops.contains("still"));
    }

    #[test]
    fn parse_skips_comments_and_blanks() {
        let stops = parse_stoplist("# header\n\n The \nAND\n# and more\n");
        assert_eq!(stops.len(), 2);
        assert!(stops.contains("the"));
        assert!(stops.contains("and"));
    }

    #[test]
    fn load_missing_file_is_an_error() {
        assert!(load_stoplist(Path::new("/no/such/stoplist.txt")).is_err());
    }
}
