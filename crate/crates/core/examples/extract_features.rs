//! Compute the three feature groups for one narrative record.
//!
//! ```bash
//! cargo run -p narrative-screen --example extract_features
//! ```

use std::collections::BTreeMap;

use narrative_screen::corpus::{Language, NarrativeRecord, Split, Story, Utterance};
use narrative_screen::features::{
    count_syllables, feature_vector, FeatureConfig, FeatureGroup, KeywordSpec, PosLexicon,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let record = NarrativeRecord {
        child_id: "demo-01".to_string(),
        language: Language::Afrikaans,
        story: Story::Cat,
        utterances: vec![
            Utterance {
                text: "Die kat klim op die boom".to_string(),
                start: 0.0,
                end: 2.1,
            },
            Utterance {
                text: "hy wil die voël vang".to_string(),
                start: 2.8,
                end: 4.3,
            },
            Utterance {
                text: "toe val die kat af unk".to_string(),
                start: 5.0,
                end: 6.9,
            },
        ],
        ri: Some(0),
        split: Split::Train,
        pos_tags: BTreeMap::new(),
    };

    // Verbal proficiency: counts, timing rates and readability.
    let proficiency = feature_vector(
        &record,
        FeatureGroup::Proficiency,
        &FeatureConfig::default(),
    )?;
    println!("proficiency features:");
    for (name, value) in proficiency.names().iter().zip(proficiency.values()) {
        println!("  {name:<16} {value:.3}");
    }

    // Grammatical: counts over seven universal POS tags from a lexicon.
    let lexicon = PosLexicon::parse(
        "kat\tNOUN\nboom\tNOUN\nvoël\tNOUN\nklim\tVERB\nvang\tVERB\nval\tVERB\n\
         hy\tPRON\nwil\tAUX\ntoe\tADV\naf\tPART\nop\tPART\n",
        "inline",
    )?;
    let grammatical = feature_vector(
        &record,
        FeatureGroup::Grammatical,
        &FeatureConfig {
            lexicon: Some(&lexicon),
            ..Default::default()
        },
    )?;
    println!("\ngrammatical features:");
    for (name, value) in grammatical.names().iter().zip(grammatical.values()) {
        println!("  {name:<6} {value}");
    }

    // Keywords: counts of selected words plus the story control.
    let spec = KeywordSpec::new(
        Language::Afrikaans,
        vec!["toe".to_string(), "wil".to_string(), "kat".to_string()],
        true,
    )?;
    let keywords = feature_vector(
        &record,
        FeatureGroup::Keywords,
        &FeatureConfig {
            keywords: Some(&spec),
            ..Default::default()
        },
    )?;
    println!("\nkeyword features:");
    for (name, value) in keywords.names().iter().zip(keywords.values()) {
        println!("  {name:<10} {value}");
    }

    // The syllable heuristic behind the readability score.
    println!("\nsyllables (vowel-run heuristic):");
    for word in ["kat", "voël", "ibhaloni"] {
        let vowels = if word == "ibhaloni" {
            Language::IsiXhosa.vowels()
        } else {
            Language::Afrikaans.vowels()
        };
        println!("  {word:<10} {}", count_syllables(word, vowels));
    }

    Ok(())
}
