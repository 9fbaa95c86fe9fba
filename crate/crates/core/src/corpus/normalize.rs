//! Transcript text normalization.
//!
//! Fieldworker transcriptions arrive with arbitrary casing and punctuation.
//! Everything downstream (token counts, keyword matching, the POS lexicon)
//! works on the normalized form produced here: lowercase, whitespace-split,
//! punctuation trimmed from token edges. The literal token `unk` marks
//! unintelligible speech and passes through normalization untouched.

/// Marker token for unintelligible speech.
pub const UNK: &str = "unk";

/// An ordered sequence of normalized tokens.
///
/// Invariants: every token is lowercase, non-empty, and free of leading or
/// trailing punctuation. Constructed via [`normalize_text`].
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenSequence {
    tokens: Vec<String>,
}

impl TokenSequence {
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, String> {
        self.tokens.iter()
    }

    /// Joins the tokens back into a single space-separated string.
    pub fn join(&self) -> String {
        self.tokens.join(" ")
    }
}

impl IntoIterator for TokenSequence {
    type Item = String;
    type IntoIter = std::vec::IntoIter<String>;

    fn into_iter(self) -> Self::IntoIter {
        self.tokens.into_iter()
    }
}

impl<'a> IntoIterator for &'a TokenSequence {
    type Item = &'a String;
    type IntoIter = std::slice::Iter<'a, String>;

    fn into_iter(self) -> Self::IntoIter {
        self.tokens.iter()
    }
}

/// Normalizes a raw transcription string into tokens.
///
/// Lowercases, splits on whitespace, strips leading and trailing
/// non-alphanumeric characters from each token, and drops tokens that
/// become empty. Interior punctuation (hyphens, apostrophes) is kept.
pub fn normalize_text(raw: &str) -> TokenSequence {
    let tokens = raw
        .to_lowercase()
        .split_whitespace()
        .map(|word| {
            word.trim_matches(|c: char| !c.is_alphanumeric())
                .to_string()
        })
        .filter(|token| !token.is_empty())
        .collect();
    TokenSequence { tokens }
}

/// Folds a diacritic-marked Latin letter to its base letter.
///
/// Covers the marked vowels and consonants that occur in Afrikaans and
/// isiXhosa orthography; anything else is returned unchanged.
pub fn fold_diacritic(c: char) -> char {
    match c {
        'á' | 'à' | 'â' | 'ä' | 'ã' => 'a',
        'é' | 'è' | 'ê' | 'ë' => 'e',
        'í' | 'ì' | 'î' | 'ï' => 'i',
        'ó' | 'ò' | 'ô' | 'ö' => 'o',
        'ú' | 'ù' | 'û' | 'ü' => 'u',
        'ý' | 'ÿ' => 'y',
        'ñ' => 'n',
        'ç' => 'c',
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(raw: &str) -> Vec<String> {
        normalize_text(raw).tokens().to_vec()
    }

    #[test]
    fn lowercases_and_strips_punctuation() {
        assert_eq!(toks("Die Kat, klim!"), vec!["die", "kat", "klim"]);
    }

    #[test]
    fn preserves_unk() {
        assert_eq!(toks("unk unk inja"), vec!["unk", "unk", "inja"]);
    }

    #[test]
    fn punctuation_only_yields_empty() {
        assert!(toks("...").is_empty());
        assert!(normalize_text("").is_empty());
    }

    #[test]
    fn keeps_interior_punctuation_and_diacritics() {
        assert_eq!(toks("sê-goed 'n"), vec!["sê-goed", "n"]);
    }

    #[test]
    fn folds_diacritics() {
        assert_eq!(fold_diacritic('ë'), 'e');
        assert_eq!(fold_diacritic('ô'), 'o');
        assert_eq!(fold_diacritic('k'), 'k');
    }

    #[test]
    fn normalization_is_idempotent() {
        for raw in ["Die Kat, klim!", "unk...  WIL?  sê", "12ab3 --x--"] {
            let once = normalize_text(raw);
            let twice = normalize_text(&once.join());
            assert_eq!(once, twice);
        }
    }
}
