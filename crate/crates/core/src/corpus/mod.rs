//! Corpus data model and loading.
//!
//! A corpus is a set of [`NarrativeRecord`]s, one per (child, story): the
//! time-aligned utterances a child produced, the elicitation story, an
//! optional requires-intervention label, and a train/dev/test split
//! assignment. Records arrive through a line-delimited JSON manifest that
//! points at Praat TextGrid alignment files or carries utterances inline.
//!
//! Loading is strict about hygiene: a child may not appear in more than one
//! split, and a (child, story) pair may not appear twice. All validation
//! failures for a manifest are collected and reported together.

pub mod normalize;
pub mod textgrid;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use normalize::{fold_diacritic, normalize_text, TokenSequence, UNK};
pub use textgrid::{
    parse_textgrid, parse_textgrid_bytes, serialize_utterances, TextGridError, TextGridForm,
};

use crate::features::UposTag;

/// The two languages the corpus covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    Afrikaans,
    #[serde(rename = "isixhosa")]
    IsiXhosa,
}

impl Language {
    pub fn as_str(self) -> &'static str {
        match self {
            Language::Afrikaans => "afrikaans",
            Language::IsiXhosa => "isixhosa",
        }
    }

    /// Vowel letters used for syllable counting, applied after diacritics
    /// are folded to their base letters.
    pub fn vowels(self) -> &'static [char] {
        match self {
            Language::Afrikaans => &['a', 'e', 'i', 'o', 'u', 'y'],
            Language::IsiXhosa => &['a', 'e', 'i', 'o', 'u'],
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Language {
    type Err = ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "afrikaans" => Ok(Language::Afrikaans),
            "isixhosa" => Ok(Language::IsiXhosa),
            other => Err(ParseEnumError::new(
                "language",
                other,
                &["afrikaans", "isixhosa"],
            )),
        }
    }
}

/// Which picture sequence elicited the narrative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Story {
    Cat,
    Dog,
}

impl Story {
    pub fn as_str(self) -> &'static str {
        match self {
            Story::Cat => "cat",
            Story::Dog => "dog",
        }
    }
}

impl fmt::Display for Story {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Story {
    type Err = ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cat" => Ok(Story::Cat),
            "dog" => Ok(Story::Dog),
            other => Err(ParseEnumError::new("story", other, &["cat", "dog"])),
        }
    }
}

/// Dataset partition a record belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "dev" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            other => Err(ParseEnumError::new(
                "split",
                other,
                &["train", "dev", "test"],
            )),
        }
    }
}

/// Error for enum-valued fields parsed from text.
#[derive(Debug, Clone, thiserror::Error)]
#[error("unknown {field} value \"{value}\" (expected one of: {})", choices.join(", "))]
pub struct ParseEnumError {
    field: &'static str,
    value: String,
    choices: Vec<&'static str>,
}

impl ParseEnumError {
    fn new(field: &'static str, value: &str, choices: &[&'static str]) -> Self {
        Self {
            field,
            value: value.to_string(),
            choices: choices.to_vec(),
        }
    }
}

/// One time-aligned stretch of child speech.
#[derive(Debug, Clone, PartialEq)]
pub struct Utterance {
    pub text: String,
    /// Start time in seconds.
    pub start: f64,
    /// End time in seconds; always greater than `start`.
    pub end: f64,
}

impl Utterance {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

/// One child's narrative: utterances plus labels and split assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct NarrativeRecord {
    pub child_id: String,
    pub language: Language,
    pub story: Story,
    pub utterances: Vec<Utterance>,
    /// Requires-intervention label: 1 = intervention needed, 0 = not.
    /// Absent for unlabeled children, who can be featurized but take no
    /// part in training or evaluation.
    pub ri: Option<u8>,
    pub split: Split,
    /// Optional per-record POS tags (word -> tag) that override or stand in
    /// for a global lexicon.
    pub pos_tags: BTreeMap<String, UposTag>,
}

impl NarrativeRecord {
    /// Checks the record invariants, returning the violations found.
    pub fn violations(&self) -> Vec<String> {
        let mut problems = Vec::new();
        let id = &self.child_id;
        if self.child_id.trim().is_empty() {
            problems.push("record has an empty child_id".to_string());
        }
        if self.utterances.is_empty() {
            problems.push(format!("child {id}: record has no utterances"));
        }
        if let Some(ri) = self.ri {
            if ri > 1 {
                problems.push(format!("child {id}: ri must be 0 or 1, got {ri}"));
            }
        }
        let mut previous_end: Option<f64> = None;
        for (i, u) in self.utterances.iter().enumerate() {
            if !u.start.is_finite() || !u.end.is_finite() || u.start < 0.0 {
                problems.push(format!(
                    "child {id}: utterance {} has invalid times [{}, {}]",
                    i + 1,
                    u.start,
                    u.end
                ));
                continue;
            }
            if u.end <= u.start {
                problems.push(format!(
                    "child {id}: utterance {} has end {} <= start {}",
                    i + 1,
                    u.end,
                    u.start
                ));
            }
            if u.text.trim().is_empty() {
                problems.push(format!("child {id}: utterance {} has empty text", i + 1));
            }
            if let Some(prev) = previous_end {
                if u.start < prev {
                    problems.push(format!(
                        "child {id}: utterance {} starting at {} overlaps the previous one ending at {prev}",
                        i + 1,
                        u.start
                    ));
                }
            }
            previous_end = Some(u.end);
        }
        problems
    }
}

/// The full record collection, validated for split hygiene.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    records: Vec<NarrativeRecord>,
}

impl Corpus {
    /// Builds a corpus, rejecting records that violate per-record invariants
    /// or split hygiene (a child in more than one split, or a duplicated
    /// (child, story) pair).
    pub fn new(records: Vec<NarrativeRecord>) -> Result<Self, CorpusError> {
        let violations = corpus_violations(&records);
        if violations.is_empty() {
            Ok(Self { records })
        } else {
            Err(CorpusError::Validation { violations })
        }
    }

    pub fn records(&self) -> &[NarrativeRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records for one language, optionally restricted to a split, in
    /// manifest order.
    pub fn select(&self, language: Language, split: Option<Split>) -> Vec<&NarrativeRecord> {
        self.records
            .iter()
            .filter(|r| r.language == language && split.is_none_or(|s| r.split == s))
            .collect()
    }
}

fn corpus_violations(records: &[NarrativeRecord]) -> Vec<String> {
    let mut violations = Vec::new();
    for record in records {
        violations.extend(record.violations());
    }
    let mut split_by_child: HashMap<&str, Split> = HashMap::new();
    let mut seen_pairs: HashMap<(&str, Story), usize> = HashMap::new();
    for record in records {
        match split_by_child.get(record.child_id.as_str()) {
            Some(&first) if first != record.split => violations.push(format!(
                "child {} appears in both the {} and {} splits",
                record.child_id, first, record.split
            )),
            Some(_) => {}
            None => {
                split_by_child.insert(&record.child_id, record.split);
            }
        }
        let count = seen_pairs
            .entry((record.child_id.as_str(), record.story))
            .or_insert(0);
        *count += 1;
        if *count == 2 {
            violations.push(format!(
                "duplicate record for child {} and the {} story",
                record.child_id, record.story
            ));
        }
    }
    violations
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("corpus validation failed with {} violation(s):\n{}", violations.len(), violations.join("\n"))]
    Validation { violations: Vec<String> },
}

/// One manifest line. Exactly one of `textgrid_path` and `utterances`
/// must be present.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestEntry {
    child_id: String,
    language: Language,
    story: Story,
    split: Split,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ri: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    textgrid_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    utterances: Option<Vec<(f64, f64, String)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pos_tags: Option<BTreeMap<String, String>>,
}

/// Options for [`load_corpus`].
#[derive(Debug, Clone, Default)]
pub struct LoadOptions {
    /// Name of the TextGrid tier holding child speech. Defaults to the
    /// first interval tier of each file.
    pub tier: Option<String>,
}

/// Loads and validates a corpus from a line-delimited JSON manifest.
///
/// Each non-empty line describes one record. TextGrid paths are resolved
/// relative to the manifest's directory. Every validation problem across
/// the whole manifest is collected into one [`CorpusError::Validation`].
pub fn load_corpus(manifest: &Path, options: &LoadOptions) -> Result<Corpus, CorpusError> {
    let content = std::fs::read_to_string(manifest).map_err(|source| CorpusError::Io {
        path: manifest.to_path_buf(),
        source,
    })?;
    let base_dir = manifest.parent().unwrap_or_else(|| Path::new("."));

    let mut records = Vec::new();
    let mut violations = Vec::new();
    for (index, line) in content.lines().enumerate() {
        let line_no = index + 1;
        if line.trim().is_empty() {
            continue;
        }
        let entry: ManifestEntry = match serde_json::from_str(line) {
            Ok(entry) => entry,
            Err(e) => {
                violations.push(format!("manifest line {line_no}: {e}"));
                continue;
            }
        };
        match realize_entry(entry, base_dir, options, line_no) {
            Ok(record) => records.push(record),
            Err(problem) => violations.push(problem),
        }
    }

    violations.extend(corpus_violations(&records));
    if violations.is_empty() {
        Ok(Corpus { records })
    } else {
        Err(CorpusError::Validation { violations })
    }
}

fn realize_entry(
    entry: ManifestEntry,
    base_dir: &Path,
    options: &LoadOptions,
    line_no: usize,
) -> Result<NarrativeRecord, String> {
    let child_id = entry.child_id.clone();
    let utterances = match (entry.textgrid_path, entry.utterances) {
        (Some(_), Some(_)) => {
            return Err(format!(
                "manifest line {line_no} (child {child_id}): has both textgrid_path and inline utterances"
            ))
        }
        (None, None) => {
            return Err(format!(
                "manifest line {line_no} (child {child_id}): needs textgrid_path or inline utterances"
            ))
        }
        (Some(path), None) => {
            let resolved = base_dir.join(&path);
            let bytes = std::fs::read(&resolved).map_err(|e| {
                format!(
                    "manifest line {line_no} (child {child_id}): cannot read {}: {e}",
                    resolved.display()
                )
            })?;
            parse_textgrid_bytes(&bytes, options.tier.as_deref()).map_err(|e| {
                format!("manifest line {line_no} (child {child_id}): {}: {e}", resolved.display())
            })?
        }
        (None, Some(triples)) => triples
            .into_iter()
            .map(|(start, end, text)| Utterance { text, start, end })
            .collect(),
    };

    let mut pos_tags = BTreeMap::new();
    if let Some(raw_tags) = entry.pos_tags {
        for (word, tag) in raw_tags {
            let tag = tag.parse::<UposTag>().map_err(|e| {
                format!("manifest line {line_no} (child {child_id}): pos_tags[{word}]: {e}")
            })?;
            pos_tags.insert(word, tag);
        }
    }

    let record = NarrativeRecord {
        child_id,
        language: entry.language,
        story: entry.story,
        utterances,
        ri: entry.ri,
        split: entry.split,
        pos_tags,
    };
    let problems = record.violations();
    if problems.is_empty() {
        Ok(record)
    } else {
        Err(problems
            .into_iter()
            .map(|p| format!("manifest line {line_no}: {p}"))
            .collect::<Vec<_>>()
            .join("\n"))
    }
}

/// Writes a corpus as a manifest with inline utterances (the synthetic-data
/// path; real corpora usually reference TextGrid files instead).
pub fn write_manifest(corpus: &Corpus, path: &Path) -> Result<(), CorpusError> {
    let mut out = String::new();
    for record in corpus.records() {
        let entry = ManifestEntry {
            child_id: record.child_id.clone(),
            language: record.language,
            story: record.story,
            split: record.split,
            ri: record.ri,
            textgrid_path: None,
            utterances: Some(
                record
                    .utterances
                    .iter()
                    .map(|u| (u.start, u.end, u.text.clone()))
                    .collect(),
            ),
            pos_tags: if record.pos_tags.is_empty() {
                None
            } else {
                Some(
                    record
                        .pos_tags
                        .iter()
                        .map(|(w, t)| (w.clone(), t.to_string()))
                        .collect(),
                )
            },
        };
        out.push_str(&serde_json::to_string(&entry).expect("manifest entries serialize"));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn record(child_id: &str, split: Split) -> NarrativeRecord {
        NarrativeRecord {
            child_id: child_id.to_string(),
            language: Language::Afrikaans,
            story: Story::Cat,
            utterances: vec![Utterance {
                text: "die kat".to_string(),
                start: 0.0,
                end: 1.0,
            }],
            ri: Some(0),
            split,
            pos_tags: BTreeMap::new(),
        }
    }

    #[test]
    fn accepts_clean_records() {
        let corpus = Corpus::new(vec![record("a", Split::Train), record("b", Split::Dev)]).unwrap();
        assert_eq!(corpus.len(), 2);
    }

    #[test]
    fn rejects_speaker_overlap_naming_the_child() {
        let err = Corpus::new(vec![record("kid7", Split::Train), {
            let mut r = record("kid7", Split::Dev);
            r.story = Story::Dog;
            r
        }])
        .unwrap_err();
        let message = err.to_string();
        assert!(
            message.contains("kid7"),
            "message should name the child: {message}"
        );
        // Removing the offending record makes the corpus acceptable.
        assert!(Corpus::new(vec![record("kid7", Split::Train)]).is_ok());
    }

    #[test]
    fn rejects_duplicate_child_story_pair() {
        let err =
            Corpus::new(vec![record("a", Split::Train), record("a", Split::Train)]).unwrap_err();
        assert!(err.to_string().contains("duplicate record"));
    }

    #[test]
    fn rejects_overlapping_utterances() {
        let mut r = record("a", Split::Train);
        r.utterances = vec![
            Utterance {
                text: "x".to_string(),
                start: 0.0,
                end: 2.0,
            },
            Utterance {
                text: "y".to_string(),
                start: 1.0,
                end: 3.0,
            },
        ];
        assert!(Corpus::new(vec![r]).is_err());
    }

    #[test]
    fn loads_manifest_with_inline_and_textgrid_records() {
        let dir = tempfile::tempdir().unwrap();
        let grid = textgrid::serialize_utterances(
            &[Utterance {
                text: "molo".to_string(),
                start: 0.0,
                end: 2.5,
            }],
            "child",
            TextGridForm::Short,
        );
        std::fs::write(dir.path().join("x1.TextGrid"), grid).unwrap();
        let manifest = dir.path().join("manifest.jsonl");
        let mut f = std::fs::File::create(&manifest).unwrap();
        writeln!(
            f,
            r#"{{"child_id":"a","language":"afrikaans","story":"cat","split":"train","ri":1,"utterances":[[0.0,1.0,"die kat"],[1.5,2.0,"val"]]}}"#
        )
        .unwrap();
        writeln!(
            f,
            r#"{{"child_id":"x","language":"isixhosa","story":"dog","split":"dev","ri":0,"textgrid_path":"x1.TextGrid"}}"#
        )
        .unwrap();
        writeln!(
            f,
            r#"{{"child_id":"b","language":"afrikaans","story":"dog","split":"train","utterances":[[0.0,0.8,"unk"]]}}"#
        )
        .unwrap();
        drop(f);

        let corpus = load_corpus(&manifest, &LoadOptions::default()).unwrap();
        assert_eq!(corpus.len(), 3);
        assert_eq!(corpus.records()[1].utterances[0].text, "molo");
        assert_eq!(corpus.records()[2].ri, None);
    }

    #[test]
    fn collects_all_violations_together() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = dir.path().join("manifest.jsonl");
        let mut f = std::fs::File::create(&manifest).unwrap();
        // Unknown language, missing file, and a speaker-overlap pair.
        writeln!(f, r#"{{"child_id":"a","language":"klingon","story":"cat","split":"train","utterances":[[0,1,"x"]]}}"#).unwrap();
        writeln!(f, r#"{{"child_id":"b","language":"afrikaans","story":"cat","split":"train","textgrid_path":"missing.TextGrid"}}"#).unwrap();
        writeln!(f, r#"{{"child_id":"c","language":"afrikaans","story":"cat","split":"train","utterances":[[0,1,"x"]]}}"#).unwrap();
        writeln!(f, r#"{{"child_id":"c","language":"afrikaans","story":"dog","split":"dev","utterances":[[0,1,"x"]]}}"#).unwrap();
        drop(f);

        match load_corpus(&manifest, &LoadOptions::default()) {
            Err(CorpusError::Validation { violations }) => {
                assert_eq!(violations.len(), 3, "violations: {violations:?}");
                assert!(violations[0].contains("line 1"));
                assert!(violations[1].contains("missing.TextGrid"));
                assert!(violations[2].contains("c appears in both"));
            }
            other => panic!("expected validation failure, got {other:?}"),
        }
    }

    #[test]
    fn missing_manifest_is_an_io_error() {
        let err = load_corpus(
            Path::new("/nonexistent/manifest.jsonl"),
            &LoadOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, CorpusError::Io { .. }));
    }

    #[test]
    fn manifest_round_trip() {
        let corpus =
            Corpus::new(vec![record("a", Split::Train), record("b", Split::Test)]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.jsonl");
        write_manifest(&corpus, &path).unwrap();
        let reloaded = load_corpus(&path, &LoadOptions::default()).unwrap();
        assert_eq!(reloaded.records(), corpus.records());
    }
}
