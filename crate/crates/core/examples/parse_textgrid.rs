//! Parse Praat TextGrid annotations: long form, short form, and UTF-16
//! bytes all land in the same utterance list.
//!
//! ```bash
//! cargo run -p narrative-screen --example parse_textgrid
//! ```

use narrative_screen::corpus::{
    parse_textgrid, parse_textgrid_bytes, serialize_utterances, TextGridForm,
};

const LONG_FORM: &str = r#"File type = "ooTextFile"
Object class = "TextGrid"

xmin = 0
xmax = 6.2
tiers? <exists>
size = 1
item []:
    item [1]:
        class = "IntervalTier"
        name = "child"
        xmin = 0
        xmax = 6.2
        intervals: size = 5
        intervals [1]:
            xmin = 0
            xmax = 1.4
            text = "die kat klim op"
        intervals [2]:
            xmin = 1.4
            xmax = 2.1
            text = ""
        intervals [3]:
            xmin = 2.1
            xmax = 3.9
            text = "hy wil die voël vang"
        intervals [4]:
            xmin = 3.9
            xmax = 4.6
            text = ""
        intervals [5]:
            xmin = 4.6
            xmax = 6.2
            text = "toe val hy af"
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Empty-label intervals are silence and disappear.
    let utterances = parse_textgrid(LONG_FORM, Some("child"))?;
    println!("parsed {} utterances from the long form:", utterances.len());
    for u in &utterances {
        println!("  [{:>4.1} - {:>4.1}] {}", u.start, u.end, u.text);
    }

    // The short text form round-trips to the same utterances.
    let short = serialize_utterances(&utterances, "child", TextGridForm::Short);
    assert_eq!(parse_textgrid(&short, None)?, utterances);
    println!("\nshort-form round trip: identical");

    // Praat files are often UTF-16 with a BOM; byte decoding is automatic.
    let mut utf16 = vec![0xFF, 0xFE];
    for unit in LONG_FORM.encode_utf16() {
        utf16.extend_from_slice(&unit.to_le_bytes());
    }
    assert_eq!(parse_textgrid_bytes(&utf16, None)?, utterances);
    println!("utf-16 little-endian input: identical");

    Ok(())
}
