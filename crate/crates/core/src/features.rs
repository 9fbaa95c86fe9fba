//! Feature extraction from narrative records.
//!
//! Three feature groups feed three separate models:
//!
//! * **proficiency** — token count, unique words, mean utterance length in
//!   seconds, articulation rate in characters per second, and a
//!   Flesch–Kincaid grade score;
//! * **grammatical** — counts of seven universal POS tags shared by both
//!   languages;
//! * **keywords** — counts of ten selected keywords plus a binary story
//!   control.
//!
//! All values are raw counts or rates; nothing here centers or scales.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::corpus::{normalize_text, Corpus, Language, NarrativeRecord, Split, Story, Utterance};

/// Feature column names of the proficiency group, in matrix order.
pub const PROFICIENCY_FEATURES: [&str; 5] = [
    "tokens",
    "unique_words",
    "mean_utt_len",
    "artic_rate",
    "flesch_kincaid",
];

/// Name of the binary cat/dog story control column (1 = dog story).
pub const STORY_CONTROL_FEATURE: &str = "story_dog";

#[derive(Debug, thiserror::Error)]
pub enum FeatureError {
    #[error("record {child_id} has no utterances")]
    NoUtterances { child_id: String },
    #[error("record {child_id} has no tokens")]
    NoTokens { child_id: String },
    #[error("record {child_id} has zero total utterance duration")]
    ZeroDuration { child_id: String },
    #[error("keyword spec is for {expected} but record {child_id} is {found}")]
    LanguageMismatch {
        child_id: String,
        expected: Language,
        found: Language,
    },
    #[error("found only {found} distinct words, need at least {needed}")]
    TooFewWords { found: usize, needed: usize },
    #[error("feature vector is malformed: {0}")]
    MalformedVector(String),
    #[error("the {group} group needs a {resource}")]
    MissingResource {
        group: FeatureGroup,
        resource: &'static str,
    },
    #[error("no {language} records{}", match .split { Some(s) => format!(" in the {s} split"), None => String::new() })]
    EmptySelection {
        language: Language,
        split: Option<Split>,
    },
    #[error("{path} line {line}: {message}")]
    Lexicon {
        path: String,
        line: usize,
        message: String,
    },
    #[error("keyword spec is malformed: {0}")]
    MalformedKeywordSpec(String),
}

/// The three model input groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FeatureGroup {
    Proficiency,
    Grammatical,
    Keywords,
}

impl FeatureGroup {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureGroup::Proficiency => "proficiency",
            FeatureGroup::Grammatical => "grammatical",
            FeatureGroup::Keywords => "keywords",
        }
    }

    pub const ALL: [FeatureGroup; 3] = [
        FeatureGroup::Proficiency,
        FeatureGroup::Grammatical,
        FeatureGroup::Keywords,
    ];
}

impl fmt::Display for FeatureGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureGroup {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "proficiency" => Ok(FeatureGroup::Proficiency),
            "grammatical" => Ok(FeatureGroup::Grammatical),
            "keywords" => Ok(FeatureGroup::Keywords),
            other => Err(format!(
                "unknown group \"{other}\" (expected proficiency, grammatical or keywords)"
            )),
        }
    }
}

/// The seven universal POS tags shared by both languages, in the fixed
/// column order used by the grammatical feature group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum UposTag {
    Verb,
    Noun,
    Pron,
    Adv,
    Adj,
    Aux,
    Part,
}

impl UposTag {
    pub const ALL: [UposTag; 7] = [
        UposTag::Verb,
        UposTag::Noun,
        UposTag::Pron,
        UposTag::Adv,
        UposTag::Adj,
        UposTag::Aux,
        UposTag::Part,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            UposTag::Verb => "VERB",
            UposTag::Noun => "NOUN",
            UposTag::Pron => "PRON",
            UposTag::Adv => "ADV",
            UposTag::Adj => "ADJ",
            UposTag::Aux => "AUX",
            UposTag::Part => "PART",
        }
    }

    fn index(self) -> usize {
        UposTag::ALL
            .iter()
            .position(|t| *t == self)
            .expect("tag present in ALL")
    }
}

impl fmt::Display for UposTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for UposTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "VERB" => Ok(UposTag::Verb),
            "NOUN" => Ok(UposTag::Noun),
            "PRON" => Ok(UposTag::Pron),
            "ADV" => Ok(UposTag::Adv),
            "ADJ" => Ok(UposTag::Adj),
            "AUX" => Ok(UposTag::Aux),
            "PART" => Ok(UposTag::Part),
            other => Err(format!(
                "unknown UPOS tag \"{other}\" (expected one of VERB, NOUN, PRON, ADV, ADJ, AUX, PART)"
            )),
        }
    }
}

/// Named feature values for one record.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    names: Vec<String>,
    values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(names: Vec<String>, values: Vec<f64>) -> Result<Self, FeatureError> {
        if names.len() != values.len() {
            return Err(FeatureError::MalformedVector(format!(
                "{} names but {} values",
                names.len(),
                values.len()
            )));
        }
        let mut seen = HashSet::new();
        for name in &names {
            if !seen.insert(name) {
                return Err(FeatureError::MalformedVector(format!(
                    "duplicate feature name {name}"
                )));
            }
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(FeatureError::MalformedVector(format!(
                "non-finite value {bad}"
            )));
        }
        Ok(Self { names, values })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.values[i])
    }
}

/// A rectangular feature matrix over a record selection, with parallel
/// record ids and optional RI labels, rows in manifest order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    feature_names: Vec<String>,
    rows: Vec<Vec<f64>>,
    record_ids: Vec<String>,
    labels: Vec<Option<u8>>,
}

impl FeatureMatrix {
    pub fn new(
        feature_names: Vec<String>,
        rows: Vec<Vec<f64>>,
        record_ids: Vec<String>,
        labels: Vec<Option<u8>>,
    ) -> Result<Self, FeatureError> {
        if rows.len() != record_ids.len() || rows.len() != labels.len() {
            return Err(FeatureError::MalformedVector(
                "rows, ids and labels must have equal length".to_string(),
            ));
        }
        for row in &rows {
            if row.len() != feature_names.len() {
                return Err(FeatureError::MalformedVector(format!(
                    "row width {} does not match {} feature names",
                    row.len(),
                    feature_names.len()
                )));
            }
        }
        Ok(Self {
            feature_names,
            rows,
            record_ids,
            labels,
        })
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn record_ids(&self) -> &[String] {
        &self.record_ids
    }

    pub fn labels(&self) -> &[Option<u8>] {
        &self.labels
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn column(&self, index: usize) -> Vec<f64> {
        self.rows.iter().map(|row| row[index]).collect()
    }

    /// A copy with unlabeled rows dropped (training and evaluation use
    /// labeled records only); row order is preserved.
    pub fn retain_labeled(&self) -> FeatureMatrix {
        let mut rows = Vec::new();
        let mut record_ids = Vec::new();
        let mut labels = Vec::new();
        for i in 0..self.n_rows() {
            if self.labels[i].is_some() {
                rows.push(self.rows[i].clone());
                record_ids.push(self.record_ids[i].clone());
                labels.push(self.labels[i]);
            }
        }
        FeatureMatrix {
            feature_names: self.feature_names.clone(),
            rows,
            record_ids,
            labels,
        }
    }

    /// CSV export: feature-name header plus trailing record_id and ri
    /// columns; ri is left empty for unlabeled records.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.feature_names.join(","));
        out.push_str(",record_id,ri\n");
        for i in 0..self.n_rows() {
            let values: Vec<String> = self.rows[i].iter().map(|v| v.to_string()).collect();
            out.push_str(&values.join(","));
            out.push(',');
            out.push_str(&self.record_ids[i]);
            out.push(',');
            if let Some(label) = self.labels[i] {
                out.push_str(&label.to_string());
            }
            out.push('\n');
        }
        out
    }
}

/// Word-to-tag lookup for the grammatical group.
#[derive(Debug, Clone, Default)]
pub struct PosLexicon {
    entries: BTreeMap<String, UposTag>,
}

impl PosLexicon {
    pub fn new(entries: BTreeMap<String, UposTag>) -> Self {
        Self { entries }
    }

    pub fn get(&self, word: &str) -> Option<UposTag> {
        self.entries.get(word).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Parses `word<TAB>TAG` lines. Later entries override earlier ones.
    /// Words are normalized the same way transcripts are, so lookups match.
    pub fn parse(content: &str, origin: &str) -> Result<Self, FeatureError> {
        let mut entries = BTreeMap::new();
        for (index, line) in content.lines().enumerate() {
            let line_no = index + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (word, tag) = trimmed
                .split_once('\t')
                .ok_or_else(|| FeatureError::Lexicon {
                    path: origin.to_string(),
                    line: line_no,
                    message: "expected word<TAB>TAG".to_string(),
                })?;
            let tag: UposTag = tag
                .trim()
                .parse()
                .map_err(|message| FeatureError::Lexicon {
                    path: origin.to_string(),
                    line: line_no,
                    message,
                })?;
            let normalized = normalize_text(word);
            if normalized.len() != 1 {
                return Err(FeatureError::Lexicon {
                    path: origin.to_string(),
                    line: line_no,
                    message: format!("\"{word}\" does not normalize to a single token"),
                });
            }
            entries.insert(normalized.tokens()[0].clone(), tag);
        }
        Ok(Self { entries })
    }

    pub fn from_file(path: &Path) -> Result<Self, FeatureError> {
        let content = std::fs::read_to_string(path).map_err(|e| FeatureError::Lexicon {
            path: path.display().to_string(),
            line: 0,
            message: e.to_string(),
        })?;
        Self::parse(&content, &path.display().to_string())
    }
}

/// The selected keywords for one language plus the story-control flag.
#[derive(Debug, Clone, PartialEq)]
pub struct KeywordSpec {
    pub language: Language,
    keywords: Vec<String>,
    pub include_story_control: bool,
}

impl KeywordSpec {
    /// Keyword lists are usually exactly ten words (the default selection
    /// size); any non-empty duplicate-free list of normalized tokens is
    /// accepted so smaller experiments stay expressible.
    pub fn new(
        language: Language,
        keywords: Vec<String>,
        include_story_control: bool,
    ) -> Result<Self, FeatureError> {
        if keywords.is_empty() {
            return Err(FeatureError::MalformedKeywordSpec(
                "no keywords given".to_string(),
            ));
        }
        let mut seen = HashSet::new();
        for word in &keywords {
            let normalized = normalize_text(word);
            if normalized.len() != 1 || normalized.tokens()[0] != *word {
                return Err(FeatureError::MalformedKeywordSpec(format!(
                    "\"{word}\" is not a normalized token"
                )));
            }
            if !seen.insert(word.clone()) {
                return Err(FeatureError::MalformedKeywordSpec(format!(
                    "duplicate keyword {word}"
                )));
            }
        }
        Ok(Self {
            language,
            keywords,
            include_story_control,
        })
    }

    pub fn keywords(&self) -> &[String] {
        &self.keywords
    }

    const VERSION: &'static str = "kw-v1";

    /// Flat key=value serialization, with optional provenance lines
    /// (candidates, chosen penalty, weights) that readers ignore.
    pub fn to_file_string(&self, provenance: Option<&KeywordProvenance>) -> String {
        let mut out = String::new();
        out.push_str(&format!("version = {}\n", Self::VERSION));
        out.push_str(&format!("language = {}\n", self.language));
        out.push_str(&format!(
            "include_story_control = {}\n",
            self.include_story_control
        ));
        out.push_str(&format!("keywords = {}\n", self.keywords.join(",")));
        if let Some(p) = provenance {
            out.push_str(&format!("candidates = {}\n", p.candidates.join(",")));
            out.push_str(&format!("chosen_c = {}\n", p.chosen_c));
            let weights: Vec<String> = p.candidate_weights.iter().map(|w| w.to_string()).collect();
            out.push_str(&format!("candidate_weights = {}\n", weights.join(" ")));
        }
        out
    }

    pub fn from_file_string(content: &str) -> Result<Self, FeatureError> {
        let mut fields = BTreeMap::new();
        for line in content.lines() {
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed.split_once('=').ok_or_else(|| {
                FeatureError::MalformedKeywordSpec(format!(
                    "expected key = value, got \"{trimmed}\""
                ))
            })?;
            fields.insert(key.trim().to_string(), value.trim().to_string());
        }
        let version = fields
            .get("version")
            .ok_or_else(|| FeatureError::MalformedKeywordSpec("missing version".to_string()))?;
        if version != Self::VERSION {
            return Err(FeatureError::MalformedKeywordSpec(format!(
                "unsupported version {version}"
            )));
        }
        let language: Language = fields
            .get("language")
            .ok_or_else(|| FeatureError::MalformedKeywordSpec("missing language".to_string()))?
            .parse()
            .map_err(|e| FeatureError::MalformedKeywordSpec(format!("{e}")))?;
        let include_story_control = fields
            .get("include_story_control")
            .map(|v| v == "true")
            .unwrap_or(true);
        let keywords: Vec<String> = fields
            .get("keywords")
            .ok_or_else(|| FeatureError::MalformedKeywordSpec("missing keywords".to_string()))?
            .split(',')
            .map(|w| w.trim().to_string())
            .filter(|w| !w.is_empty())
            .collect();
        Self::new(language, keywords, include_story_control)
    }

    pub fn from_file(path: &Path) -> Result<Self, FeatureError> {
        let content = std::fs::read_to_string(path).map_err(|e| {
            FeatureError::MalformedKeywordSpec(format!("cannot read {}: {e}", path.display()))
        })?;
        Self::from_file_string(&content)
    }
}

/// How a keyword list was chosen; written into the keyword file for auditing.
#[derive(Debug, Clone)]
pub struct KeywordProvenance {
    pub candidates: Vec<String>,
    pub chosen_c: f64,
    pub candidate_weights: Vec<f64>,
}

fn tokens_of(record: &NarrativeRecord) -> impl Iterator<Item = String> + '_ {
    record
        .utterances
        .iter()
        .flat_map(|u| normalize_text(&u.text))
}

/// Total token count across all utterances, `unk` included.
pub fn count_tokens(record: &NarrativeRecord) -> usize {
    tokens_of(record).count()
}

/// Number of distinct normalized tokens across the record.
pub fn count_types(record: &NarrativeRecord) -> usize {
    tokens_of(record).collect::<HashSet<_>>().len()
}

/// Arithmetic mean utterance duration in seconds.
pub fn mean_utterance_length(record: &NarrativeRecord) -> Result<f64, FeatureError> {
    if record.utterances.is_empty() {
        return Err(FeatureError::NoUtterances {
            child_id: record.child_id.clone(),
        });
    }
    let total: f64 = record.utterances.iter().map(Utterance::duration).sum();
    Ok(total / record.utterances.len() as f64)
}

/// Non-whitespace characters of normalized text per second of utterance
/// time. Pauses between utterances never enter the denominator.
pub fn articulation_rate(record: &NarrativeRecord) -> Result<f64, FeatureError> {
    let duration: f64 = record.utterances.iter().map(Utterance::duration).sum();
    if duration <= 0.0 {
        return Err(FeatureError::ZeroDuration {
            child_id: record.child_id.clone(),
        });
    }
    let characters: usize = tokens_of(record).map(|token| token.chars().count()).sum();
    Ok(characters as f64 / duration)
}

/// Counts syllables as maximal runs of vowel letters, after folding
/// diacritics to base letters. Words without any vowel count as one
/// syllable.
pub fn count_syllables(word: &str, vowels: &[char]) -> usize {
    let mut syllables = 0;
    let mut in_run = false;
    for c in word.chars().map(crate::corpus::fold_diacritic) {
        if vowels.contains(&c) {
            if !in_run {
                syllables += 1;
                in_run = true;
            }
        } else {
            in_run = false;
        }
    }
    syllables.max(1)
}

/// Flesch–Kincaid grade-level score with one utterance treated as one
/// sentence: `0.39*(words/sentences) + 11.8*(syllables/words) - 15.59`.
pub fn flesch_kincaid(record: &NarrativeRecord, vowels: &[char]) -> Result<f64, FeatureError> {
    if record.utterances.is_empty() {
        return Err(FeatureError::NoUtterances {
            child_id: record.child_id.clone(),
        });
    }
    let mut words = 0usize;
    let mut syllables = 0usize;
    for token in tokens_of(record) {
        words += 1;
        syllables += count_syllables(&token, vowels);
    }
    if words == 0 {
        return Err(FeatureError::NoTokens {
            child_id: record.child_id.clone(),
        });
    }
    let sentences = record.utterances.len() as f64;
    let words = words as f64;
    Ok(0.39 * (words / sentences) + 11.8 * (syllables as f64 / words) - 15.59)
}

/// Per-tag token counts over the seven universal tags, in fixed order.
/// Tokens take their tag from the record's own `pos_tags` first, then the
/// lexicon; untagged tokens count toward no tag.
pub fn pos_counts(record: &NarrativeRecord, lexicon: &PosLexicon) -> FeatureVector {
    let mut counts = [0usize; 7];
    for token in tokens_of(record) {
        let tag = record
            .pos_tags
            .get(&token)
            .copied()
            .or_else(|| lexicon.get(&token));
        if let Some(tag) = tag {
            counts[tag.index()] += 1;
        }
    }
    let names = UposTag::ALL
        .iter()
        .map(|t| t.as_str().to_string())
        .collect();
    let values = counts.iter().map(|&c| c as f64).collect();
    FeatureVector::new(names, values).expect("fixed tag names are well formed")
}

/// The `n` most frequent normalized tokens over the given records of one
/// language, descending by count with lexicographic tie-breaks.
pub fn top_n_words(
    records: &[&NarrativeRecord],
    language: Language,
    n: usize,
) -> Result<Vec<String>, FeatureError> {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for record in records.iter().filter(|r| r.language == language) {
        for token in tokens_of(record) {
            *counts.entry(token).or_insert(0) += 1;
        }
    }
    if counts.len() < n {
        return Err(FeatureError::TooFewWords {
            found: counts.len(),
            needed: n,
        });
    }
    let mut ranked: Vec<(String, usize)> = counts.into_iter().collect();
    // BTreeMap iteration is already lexicographic, so a stable sort by
    // descending count leaves ties in lexicographic order.
    ranked.sort_by_key(|entry| std::cmp::Reverse(entry.1));
    Ok(ranked.into_iter().take(n).map(|(word, _)| word).collect())
}

/// One count per keyword, plus the story control (1 = dog story) when the
/// spec asks for it.
pub fn keyword_counts(
    record: &NarrativeRecord,
    spec: &KeywordSpec,
) -> Result<FeatureVector, FeatureError> {
    if record.language != spec.language {
        return Err(FeatureError::LanguageMismatch {
            child_id: record.child_id.clone(),
            expected: spec.language,
            found: record.language,
        });
    }
    let mut counts: BTreeMap<&str, usize> =
        spec.keywords().iter().map(|w| (w.as_str(), 0)).collect();
    for token in tokens_of(record) {
        if let Some(count) = counts.get_mut(token.as_str()) {
            *count += 1;
        }
    }
    let mut names: Vec<String> = spec.keywords().to_vec();
    let mut values: Vec<f64> = spec
        .keywords()
        .iter()
        .map(|w| counts[w.as_str()] as f64)
        .collect();
    if spec.include_story_control {
        names.push(STORY_CONTROL_FEATURE.to_string());
        values.push(if record.story == Story::Dog { 1.0 } else { 0.0 });
    }
    FeatureVector::new(names, values)
}

/// Resources and filters for [`build_feature_matrix`].
#[derive(Debug, Clone, Copy, Default)]
pub struct FeatureConfig<'a> {
    /// Restrict to one split; `None` takes every split.
    pub split: Option<Split>,
    /// Required for the grammatical group (unless every record carries its
    /// own `pos_tags`).
    pub lexicon: Option<&'a PosLexicon>,
    /// Required for the keywords group.
    pub keywords: Option<&'a KeywordSpec>,
}

/// Featurizes one record for one group.
pub fn feature_vector(
    record: &NarrativeRecord,
    group: FeatureGroup,
    config: &FeatureConfig<'_>,
) -> Result<FeatureVector, FeatureError> {
    match group {
        FeatureGroup::Proficiency => {
            let language = record.language;
            let names = PROFICIENCY_FEATURES.iter().map(|s| s.to_string()).collect();
            let values = vec![
                count_tokens(record) as f64,
                count_types(record) as f64,
                mean_utterance_length(record)?,
                articulation_rate(record)?,
                flesch_kincaid(record, language.vowels())?,
            ];
            FeatureVector::new(names, values)
        }
        FeatureGroup::Grammatical => {
            static EMPTY: PosLexicon = PosLexicon {
                entries: BTreeMap::new(),
            };
            let lexicon = match config.lexicon {
                Some(lexicon) => lexicon,
                None if !record.pos_tags.is_empty() => &EMPTY,
                None => {
                    return Err(FeatureError::MissingResource {
                        group,
                        resource: "POS lexicon (or per-record pos_tags)",
                    })
                }
            };
            Ok(pos_counts(record, lexicon))
        }
        FeatureGroup::Keywords => {
            let spec = config.keywords.ok_or(FeatureError::MissingResource {
                group,
                resource: "keyword spec",
            })?;
            keyword_counts(record, spec)
        }
    }
}

/// Builds the feature matrix for one (language, group) pair over the
/// selected split(s), rows in manifest order. Values stay raw.
pub fn build_feature_matrix(
    corpus: &Corpus,
    language: Language,
    group: FeatureGroup,
    config: &FeatureConfig<'_>,
) -> Result<FeatureMatrix, FeatureError> {
    let records = corpus.select(language, config.split);
    if records.is_empty() {
        return Err(FeatureError::EmptySelection {
            language,
            split: config.split,
        });
    }
    let mut feature_names = Vec::new();
    let mut rows = Vec::new();
    let mut record_ids = Vec::new();
    let mut labels = Vec::new();
    for record in records {
        let vector = feature_vector(record, group, config)?;
        if feature_names.is_empty() {
            feature_names = vector.names().to_vec();
        }
        rows.push(vector.values().to_vec());
        record_ids.push(record.child_id.clone());
        labels.push(record.ri);
    }
    FeatureMatrix::new(feature_names, rows, record_ids, labels)
}
