//! Praat TextGrid reading and writing.
//!
//! Supports both the long ("text") and short ("short text") forms of the
//! TextGrid format, in UTF-8 or UTF-16 (detected via BOM). Parsing works on
//! a token stream: quoted strings, numbers and `<exists>`-style flags carry
//! meaning, while the long form's decorative labels (`xmin =`, `item [1]:`)
//! are skipped. This makes one parser handle both forms.
//!
//! Only interval tiers carry utterances; point tiers are parsed (and
//! re-serialized) but otherwise ignored.

use std::fmt;

use super::Utterance;

/// A parsed TextGrid document.
#[derive(Debug, Clone, PartialEq)]
pub struct TextGridDocument {
    pub xmin: f64,
    pub xmax: f64,
    pub tiers: Vec<Tier>,
}

/// One annotation tier.
#[derive(Debug, Clone, PartialEq)]
pub struct Tier {
    pub name: String,
    pub kind: TierKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TierKind {
    Interval(Vec<Interval>),
    Point(Vec<Point>),
}

/// A labelled time interval. Empty labels denote silence.
#[derive(Debug, Clone, PartialEq)]
pub struct Interval {
    pub xmin: f64,
    pub xmax: f64,
    pub text: String,
}

/// A labelled time point (TextTier entry).
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub time: f64,
    pub mark: String,
}

#[derive(Debug, thiserror::Error)]
pub enum TextGridError {
    #[error("line {line}: malformed header: {message}")]
    Header { line: usize, message: String },
    #[error("line {line}: expected {expected}, found {found}")]
    Unexpected {
        line: usize,
        expected: &'static str,
        found: String,
    },
    #[error("line {line}: unterminated string")]
    UnterminatedString { line: usize },
    #[error("line {line}: unknown tier class \"{class}\"")]
    UnknownTierClass { line: usize, class: String },
    #[error("line {line}: interval has xmax ({xmax}) <= xmin ({xmin})")]
    DegenerateInterval { line: usize, xmin: f64, xmax: f64 },
    #[error("unexpected end of file after line {line} (unbalanced tier structure)")]
    UnexpectedEnd { line: usize },
    #[error("document declares no tiers")]
    NoTiers,
    #[error("no interval tier found{}", match .wanted { Some(name) => format!(" with name \"{name}\""), None => String::new() })]
    NoIntervalTier { wanted: Option<String> },
    #[error("invalid UTF-8 content at byte {position}")]
    InvalidUtf8 { position: usize },
    #[error("invalid UTF-16 content")]
    InvalidUtf16,
}

/// Decodes raw TextGrid file bytes to text, honoring a UTF-16 or UTF-8 BOM.
pub fn decode_textgrid_bytes(bytes: &[u8]) -> Result<String, TextGridError> {
    if bytes.starts_with(&[0xFE, 0xFF]) {
        return decode_utf16(&bytes[2..], u16::from_be_bytes);
    }
    if bytes.starts_with(&[0xFF, 0xFE]) {
        return decode_utf16(&bytes[2..], u16::from_le_bytes);
    }
    let body = bytes.strip_prefix(&[0xEF, 0xBB, 0xBF]).unwrap_or(bytes);
    String::from_utf8(body.to_vec()).map_err(|e| TextGridError::InvalidUtf8 {
        position: e.utf8_error().valid_up_to(),
    })
}

fn decode_utf16(bytes: &[u8], make: fn([u8; 2]) -> u16) -> Result<String, TextGridError> {
    if !bytes.len().is_multiple_of(2) {
        return Err(TextGridError::InvalidUtf16);
    }
    let units: Vec<u16> = bytes
        .chunks_exact(2)
        .map(|pair| make([pair[0], pair[1]]))
        .collect();
    char::decode_utf16(units)
        .collect::<Result<String, _>>()
        .map_err(|_| TextGridError::InvalidUtf16)
}

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    Number(f64),
    Text(String),
    Flag(String),
}

#[derive(Debug, Clone)]
struct Token {
    line: usize,
    kind: TokenKind,
}

/// Reduces both TextGrid forms to the shared value stream: quoted strings,
/// numbers and `<...>` flags. Unquoted words that are not numbers (the long
/// form's `xmin`, `=`, `item [1]:` furniture) are dropped.
fn tokenize(content: &str) -> Result<Vec<Token>, TextGridError> {
    let mut tokens = Vec::new();
    let mut chars = content.chars().peekable();
    let mut line = 1usize;

    while let Some(&c) = chars.peek() {
        match c {
            '\n' => {
                line += 1;
                chars.next();
            }
            c if c.is_whitespace() => {
                chars.next();
            }
            '"' => {
                chars.next();
                let start_line = line;
                let mut text = String::new();
                loop {
                    match chars.next() {
                        None => return Err(TextGridError::UnterminatedString { line: start_line }),
                        Some('"') => {
                            // A doubled quote is an escaped literal quote.
                            if chars.peek() == Some(&'"') {
                                chars.next();
                                text.push('"');
                            } else {
                                break;
                            }
                        }
                        Some('\n') => {
                            line += 1;
                            text.push('\n');
                        }
                        Some(other) => text.push(other),
                    }
                }
                tokens.push(Token {
                    line: start_line,
                    kind: TokenKind::Text(text),
                });
            }
            '<' => {
                chars.next();
                let start_line = line;
                let mut flag = String::new();
                loop {
                    match chars.next() {
                        None => {
                            return Err(TextGridError::Unexpected {
                                line: start_line,
                                expected: "closing '>' of flag",
                                found: "end of file".to_string(),
                            })
                        }
                        Some('>') => break,
                        Some(other) => flag.push(other),
                    }
                }
                tokens.push(Token {
                    line: start_line,
                    kind: TokenKind::Flag(flag),
                });
            }
            _ => {
                let mut word = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_whitespace() || c == '"' || c == '<' {
                        break;
                    }
                    word.push(c);
                    chars.next();
                }
                // Bare words are only meaningful when numeric.
                if let Ok(value) = word.parse::<f64>() {
                    if value.is_finite() {
                        tokens.push(Token {
                            line,
                            kind: TokenKind::Number(value),
                        });
                    }
                }
            }
        }
    }
    Ok(tokens)
}

struct TokenStream {
    tokens: Vec<Token>,
    pos: usize,
    last_line: usize,
}

impl TokenStream {
    fn next(&mut self) -> Option<Token> {
        let token = self.tokens.get(self.pos).cloned()?;
        self.pos += 1;
        self.last_line = token.line;
        Some(token)
    }

    fn expect_number(&mut self, expected: &'static str) -> Result<(f64, usize), TextGridError> {
        match self.next() {
            Some(Token {
                line,
                kind: TokenKind::Number(v),
            }) => Ok((v, line)),
            Some(Token { line, kind }) => Err(TextGridError::Unexpected {
                line,
                expected,
                found: describe(&kind),
            }),
            None => Err(TextGridError::UnexpectedEnd {
                line: self.last_line,
            }),
        }
    }

    fn expect_count(&mut self, expected: &'static str) -> Result<usize, TextGridError> {
        let (value, line) = self.expect_number(expected)?;
        if !(0.0..=1e7).contains(&value) || value.fract() != 0.0 {
            return Err(TextGridError::Unexpected {
                line,
                expected,
                found: format!("number {value}"),
            });
        }
        Ok(value as usize)
    }

    fn expect_text(&mut self, expected: &'static str) -> Result<(String, usize), TextGridError> {
        match self.next() {
            Some(Token {
                line,
                kind: TokenKind::Text(s),
            }) => Ok((s, line)),
            Some(Token { line, kind }) => Err(TextGridError::Unexpected {
                line,
                expected,
                found: describe(&kind),
            }),
            None => Err(TextGridError::UnexpectedEnd {
                line: self.last_line,
            }),
        }
    }
}

fn describe(kind: &TokenKind) -> String {
    match kind {
        TokenKind::Number(v) => format!("number {v}"),
        TokenKind::Text(s) => format!("string \"{s}\""),
        TokenKind::Flag(f) => format!("flag <{f}>"),
    }
}

/// Parses a TextGrid document from text (long or short form).
pub fn parse_document(content: &str) -> Result<TextGridDocument, TextGridError> {
    let mut stream = TokenStream {
        tokens: tokenize(content)?,
        pos: 0,
        last_line: 1,
    };

    let (file_type, line) = stream.expect_text("file type header")?;
    if file_type != "ooTextFile" && file_type != "ooTextFile short" {
        return Err(TextGridError::Header {
            line,
            message: format!("file type \"{file_type}\" is not a text TextGrid"),
        });
    }
    let (object_class, line) = stream.expect_text("object class header")?;
    if object_class != "TextGrid" {
        return Err(TextGridError::Header {
            line,
            message: format!("object class \"{object_class}\" is not \"TextGrid\""),
        });
    }

    let (xmin, _) = stream.expect_number("document xmin")?;
    let (xmax, _) = stream.expect_number("document xmax")?;

    // The tiers-exist flag precedes the tier count. In the long form it is
    // `tiers? <exists>`; absent tiers short-circuit to an empty document.
    let tier_count = match stream.next() {
        Some(Token {
            kind: TokenKind::Flag(flag),
            ..
        }) => {
            if flag == "absent" {
                0
            } else {
                stream.expect_count("tier count")?
            }
        }
        Some(Token {
            line,
            kind: TokenKind::Number(v),
        }) => {
            if !(0.0..=1e7).contains(&v) || v.fract() != 0.0 {
                return Err(TextGridError::Unexpected {
                    line,
                    expected: "tier count",
                    found: format!("number {v}"),
                });
            }
            v as usize
        }
        Some(Token { line, kind }) => {
            return Err(TextGridError::Unexpected {
                line,
                expected: "tiers flag or tier count",
                found: describe(&kind),
            })
        }
        None => {
            return Err(TextGridError::UnexpectedEnd {
                line: stream.last_line,
            })
        }
    };

    let mut tiers = Vec::with_capacity(tier_count);
    for _ in 0..tier_count {
        let (class, class_line) = stream.expect_text("tier class")?;
        let (name, _) = stream.expect_text("tier name")?;
        let (_tier_xmin, _) = stream.expect_number("tier xmin")?;
        let (_tier_xmax, _) = stream.expect_number("tier xmax")?;
        let count = stream.expect_count("tier entry count")?;
        let kind = match class.as_str() {
            "IntervalTier" => {
                let mut intervals = Vec::with_capacity(count);
                for _ in 0..count {
                    let (ixmin, min_line) = stream.expect_number("interval xmin")?;
                    let (ixmax, _) = stream.expect_number("interval xmax")?;
                    let (text, _) = stream.expect_text("interval text")?;
                    if ixmax <= ixmin {
                        return Err(TextGridError::DegenerateInterval {
                            line: min_line,
                            xmin: ixmin,
                            xmax: ixmax,
                        });
                    }
                    intervals.push(Interval {
                        xmin: ixmin,
                        xmax: ixmax,
                        text,
                    });
                }
                TierKind::Interval(intervals)
            }
            "TextTier" => {
                let mut points = Vec::with_capacity(count);
                for _ in 0..count {
                    let (time, _) = stream.expect_number("point time")?;
                    let (mark, _) = stream.expect_text("point mark")?;
                    points.push(Point { time, mark });
                }
                TierKind::Point(points)
            }
            other => {
                return Err(TextGridError::UnknownTierClass {
                    line: class_line,
                    class: other.to_string(),
                })
            }
        };
        tiers.push(Tier { name, kind });
    }

    Ok(TextGridDocument { xmin, xmax, tiers })
}

/// Extracts utterances from TextGrid text.
///
/// Takes the first interval tier, or the interval tier named `tier` when
/// given. Intervals whose label is empty after trimming (silence) are
/// dropped; the rest are returned ordered by start time.
pub fn parse_textgrid(content: &str, tier: Option<&str>) -> Result<Vec<Utterance>, TextGridError> {
    let document = parse_document(content)?;
    if document.tiers.is_empty() {
        return Err(TextGridError::NoTiers);
    }
    let selected = document
        .tiers
        .iter()
        .find(|t| {
            matches!(t.kind, TierKind::Interval(_)) && tier.is_none_or(|wanted| t.name == wanted)
        })
        .ok_or_else(|| TextGridError::NoIntervalTier {
            wanted: tier.map(String::from),
        })?;

    let TierKind::Interval(intervals) = &selected.kind else {
        unreachable!()
    };
    let mut utterances: Vec<Utterance> = intervals
        .iter()
        .filter(|iv| !iv.text.trim().is_empty())
        .map(|iv| Utterance {
            text: iv.text.clone(),
            start: iv.xmin,
            end: iv.xmax,
        })
        .collect();
    utterances.sort_by(|a, b| a.start.total_cmp(&b.start));
    Ok(utterances)
}

/// Same as [`parse_textgrid`] but starting from raw file bytes.
pub fn parse_textgrid_bytes(
    bytes: &[u8],
    tier: Option<&str>,
) -> Result<Vec<Utterance>, TextGridError> {
    parse_textgrid(&decode_textgrid_bytes(bytes)?, tier)
}

/// Builds a single-tier document from utterances, padding the gaps between
/// them with empty (silence) intervals so the tier is contiguous.
pub fn document_from_utterances(utterances: &[Utterance], tier_name: &str) -> TextGridDocument {
    let xmin = utterances.first().map_or(0.0, |u| u.start.min(0.0));
    let xmax = utterances.last().map_or(1.0, |u| u.end);
    let mut intervals = Vec::new();
    let mut cursor = xmin;
    for utterance in utterances {
        if utterance.start > cursor {
            intervals.push(Interval {
                xmin: cursor,
                xmax: utterance.start,
                text: String::new(),
            });
        }
        intervals.push(Interval {
            xmin: utterance.start,
            xmax: utterance.end,
            text: utterance.text.clone(),
        });
        cursor = utterance.end;
    }
    if intervals.is_empty() {
        intervals.push(Interval {
            xmin,
            xmax,
            text: String::new(),
        });
    }
    TextGridDocument {
        xmin,
        xmax,
        tiers: vec![Tier {
            name: tier_name.to_string(),
            kind: TierKind::Interval(intervals),
        }],
    }
}

fn escape(text: &str) -> String {
    text.replace('"', "\"\"")
}

/// Serializes a document in the long text form.
pub fn write_long(document: &TextGridDocument) -> String {
    let mut out = String::new();
    out.push_str("File type = \"ooTextFile\"\nObject class = \"TextGrid\"\n\n");
    out.push_str(&format!("xmin = {}\n", document.xmin));
    out.push_str(&format!("xmax = {}\n", document.xmax));
    out.push_str("tiers? <exists>\n");
    out.push_str(&format!("size = {}\n", document.tiers.len()));
    out.push_str("item []:\n");
    for (t, tier) in document.tiers.iter().enumerate() {
        out.push_str(&format!("    item [{}]:\n", t + 1));
        match &tier.kind {
            TierKind::Interval(intervals) => {
                out.push_str("        class = \"IntervalTier\"\n");
                out.push_str(&format!("        name = \"{}\"\n", escape(&tier.name)));
                let (txmin, txmax) = tier_range(document, &tier.kind);
                out.push_str(&format!("        xmin = {txmin}\n"));
                out.push_str(&format!("        xmax = {txmax}\n"));
                out.push_str(&format!("        intervals: size = {}\n", intervals.len()));
                for (i, interval) in intervals.iter().enumerate() {
                    out.push_str(&format!("        intervals [{}]:\n", i + 1));
                    out.push_str(&format!("            xmin = {}\n", interval.xmin));
                    out.push_str(&format!("            xmax = {}\n", interval.xmax));
                    out.push_str(&format!(
                        "            text = \"{}\"\n",
                        escape(&interval.text)
                    ));
                }
            }
            TierKind::Point(points) => {
                out.push_str("        class = \"TextTier\"\n");
                out.push_str(&format!("        name = \"{}\"\n", escape(&tier.name)));
                let (txmin, txmax) = tier_range(document, &tier.kind);
                out.push_str(&format!("        xmin = {txmin}\n"));
                out.push_str(&format!("        xmax = {txmax}\n"));
                out.push_str(&format!("        points: size = {}\n", points.len()));
                for (i, point) in points.iter().enumerate() {
                    out.push_str(&format!("        points [{}]:\n", i + 1));
                    out.push_str(&format!("            number = {}\n", point.time));
                    out.push_str(&format!("            mark = \"{}\"\n", escape(&point.mark)));
                }
            }
        }
    }
    out
}

/// Serializes a document in the short text form.
pub fn write_short(document: &TextGridDocument) -> String {
    let mut out = String::new();
    out.push_str("File type = \"ooTextFile\"\nObject class = \"TextGrid\"\n\n");
    out.push_str(&format!(
        "{}\n{}\n<exists>\n{}\n",
        document.xmin,
        document.xmax,
        document.tiers.len()
    ));
    for tier in &document.tiers {
        let (txmin, txmax) = tier_range(document, &tier.kind);
        match &tier.kind {
            TierKind::Interval(intervals) => {
                out.push_str(&format!(
                    "\"IntervalTier\"\n\"{}\"\n{txmin}\n{txmax}\n{}\n",
                    escape(&tier.name),
                    intervals.len()
                ));
                for interval in intervals {
                    out.push_str(&format!(
                        "{}\n{}\n\"{}\"\n",
                        interval.xmin,
                        interval.xmax,
                        escape(&interval.text)
                    ));
                }
            }
            TierKind::Point(points) => {
                out.push_str(&format!(
                    "\"TextTier\"\n\"{}\"\n{txmin}\n{txmax}\n{}\n",
                    escape(&tier.name),
                    points.len()
                ));
                for point in points {
                    out.push_str(&format!("{}\n\"{}\"\n", point.time, escape(&point.mark)));
                }
            }
        }
    }
    out
}

fn tier_range(document: &TextGridDocument, kind: &TierKind) -> (f64, f64) {
    match kind {
        TierKind::Interval(intervals) => {
            let lo = intervals.first().map_or(document.xmin, |iv| iv.xmin);
            let hi = intervals.last().map_or(document.xmax, |iv| iv.xmax);
            (lo, hi)
        }
        TierKind::Point(_) => (document.xmin, document.xmax),
    }
}

/// Which serialization form to emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TextGridForm {
    Long,
    Short,
}

impl fmt::Display for TextGridForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TextGridForm::Long => write!(f, "long"),
            TextGridForm::Short => write!(f, "short"),
        }
    }
}

/// Serializes utterances as a one-tier TextGrid in the requested form.
pub fn serialize_utterances(
    utterances: &[Utterance],
    tier_name: &str,
    form: TextGridForm,
) -> String {
    let document = document_from_utterances(utterances, tier_name);
    match form {
        TextGridForm::Long => write_long(&document),
        TextGridForm::Short => write_short(&document),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LONG: &str = r#"File type = "ooTextFile"
Object class = "TextGrid"

xmin = 0
xmax = 3
tiers? <exists>
size = 1
item []:
    item [1]:
        class = "IntervalTier"
        name = "utterances"
        xmin = 0
        xmax = 3
        intervals: size = 3
        intervals [1]:
            xmin = 0
            xmax = 1
            text = "die kat"
        intervals [2]:
            xmin = 1
            xmax = 2
            text = ""
        intervals [3]:
            xmin = 2
            xmax = 3
            text = "val"
"#;

    const SHORT: &str = "File type = \"ooTextFile\"\nObject class = \"TextGrid\"\n\n0\n3\n<exists>\n1\n\"IntervalTier\"\n\"utterances\"\n0\n3\n3\n0\n1\n\"die kat\"\n1\n2\n\"\"\n2\n3\n\"val\"\n";

    #[test]
    fn long_form_drops_empty_intervals() {
        let utterances = parse_textgrid(LONG, None).unwrap();
        assert_eq!(utterances.len(), 2);
        assert_eq!(utterances[0].text, "die kat");
        assert_eq!((utterances[0].start, utterances[0].end), (0.0, 1.0));
        assert_eq!(utterances[1].text, "val");
        assert_eq!((utterances[1].start, utterances[1].end), (2.0, 3.0));
    }

    #[test]
    fn short_form_parses_identically() {
        assert_eq!(
            parse_textgrid(SHORT, None).unwrap(),
            parse_textgrid(LONG, None).unwrap()
        );
    }

    #[test]
    fn single_interval_duration() {
        let content = "File type = \"ooTextFile\"\nObject class = \"TextGrid\"\n\n0\n2.5\n<exists>\n1\n\"IntervalTier\"\n\"t\"\n0\n2.5\n1\n0\n2.5\n\"molo\"\n";
        let utterances = parse_textgrid(content, None).unwrap();
        assert_eq!(utterances.len(), 1);
        assert_eq!(utterances[0].end - utterances[0].start, 2.5);
    }

    #[test]
    fn degenerate_interval_is_an_error_with_line() {
        let content = SHORT.replace("0\n1\n\"die kat\"", "1\n1\n\"die kat\"");
        let err = parse_textgrid(&content, None).unwrap_err();
        match err {
            TextGridError::DegenerateInterval { line, .. } => assert_eq!(line, 13),
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn named_tier_selection() {
        let two_tier = "File type = \"ooTextFile\"\nObject class = \"TextGrid\"\n\n0\n1\n<exists>\n2\n\"IntervalTier\"\n\"noise\"\n0\n1\n1\n0\n1\n\"brr\"\n\"IntervalTier\"\n\"child\"\n0\n1\n1\n0\n1\n\"molo\"\n";
        let by_name = parse_textgrid(two_tier, Some("child")).unwrap();
        assert_eq!(by_name[0].text, "molo");
        let default = parse_textgrid(two_tier, None).unwrap();
        assert_eq!(default[0].text, "brr");
        assert!(matches!(
            parse_textgrid(two_tier, Some("missing")),
            Err(TextGridError::NoIntervalTier { .. })
        ));
    }

    #[test]
    fn point_tiers_are_skipped_for_utterances() {
        let mixed = "File type = \"ooTextFile\"\nObject class = \"TextGrid\"\n\n0\n1\n<exists>\n2\n\"TextTier\"\n\"clicks\"\n0\n1\n1\n0.5\n\"x\"\n\"IntervalTier\"\n\"child\"\n0\n1\n1\n0\n1\n\"molo\"\n";
        let utterances = parse_textgrid(mixed, None).unwrap();
        assert_eq!(utterances[0].text, "molo");
    }

    #[test]
    fn quote_escapes_round_trip() {
        let utterances = vec![Utterance {
            text: "say \"no\"".to_string(),
            start: 0.5,
            end: 1.5,
        }];
        for form in [TextGridForm::Long, TextGridForm::Short] {
            let text = serialize_utterances(&utterances, "t", form);
            assert_eq!(parse_textgrid(&text, None).unwrap(), utterances);
        }
    }

    #[test]
    fn utf16_round_trip() {
        let utf8 = serialize_utterances(
            &[Utterance {
                text: "môre sê".to_string(),
                start: 0.0,
                end: 1.0,
            }],
            "t",
            TextGridForm::Long,
        );
        for (bom, to_bytes) in [
            (
                [0xFFu8, 0xFE],
                (|u: u16| u.to_le_bytes()) as fn(u16) -> [u8; 2],
            ),
            ([0xFE, 0xFF], |u: u16| u.to_be_bytes()),
        ] {
            let mut bytes = bom.to_vec();
            for unit in utf8.encode_utf16() {
                bytes.extend_from_slice(&to_bytes(unit));
            }
            let decoded = decode_textgrid_bytes(&bytes).unwrap();
            assert_eq!(decoded, utf8);
            assert_eq!(
                parse_textgrid_bytes(&bytes, None).unwrap(),
                parse_textgrid(&utf8, None).unwrap()
            );
        }
    }

    #[test]
    fn header_errors() {
        assert!(matches!(
            parse_textgrid(
                "File type = \"ooBinaryFile\"\nObject class = \"TextGrid\"\n",
                None
            ),
            Err(TextGridError::Header { line: 1, .. })
        ));
        let truncated = "File type = \"ooTextFile\"\nObject class = \"TextGrid\"\n\n0\n3\n<exists>\n1\n\"IntervalTier\"\n\"t\"\n0\n3\n2\n0\n1\n\"a\"\n";
        assert!(matches!(
            parse_textgrid(truncated, None),
            Err(TextGridError::UnexpectedEnd { .. })
        ));
    }
}
