//! The whole pipeline in one call, as the `run` subcommand would do it:
//! synthesize a corpus, select keywords, then produce features, models,
//! metrics, importance rankings and plots for all three groups.
//!
//! ```bash
//! cargo run -p narrative-screen --example full_pipeline
//! ```

use narrative_screen::corpus::{write_manifest, Language, Split};
use narrative_screen::features::FeatureGroup;
use narrative_screen::glm::PenaltyConfig;
use narrative_screen::pipeline::{cmd_keywords, cmd_run, RunConfig};
use narrative_screen::synth::{generate_corpus, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let base = std::env::temp_dir().join("narrative-screen-pipeline");
    std::fs::create_dir_all(&base)?;

    // Synthetic stand-in for the private child data: a unique-word effect
    // plus two class-dependent keywords.
    let corpus = generate_corpus(&SynthConfig {
        train_records: 200,
        dev_records: 38,
        test_records: 0,
        ri_rate: 0.36,
        unique_words_effect: 1.5,
        keyword_effects: vec![("toe".to_string(), 0.5), ("wil".to_string(), 0.4)],
        vocabulary_size: 60,
        seed: 13,
        ..Default::default()
    })?;
    let manifest = base.join("manifest.jsonl");
    write_manifest(&corpus, &manifest)?;

    // A tiny POS lexicon over the synthetic vocabulary.
    let mut lexicon = String::from("toe\tADV\nwil\tAUX\n");
    for (index, tag) in ["VERB", "NOUN", "PRON", "ADV", "ADJ", "AUX", "PART"]
        .iter()
        .enumerate()
    {
        for repeat in 0..4 {
            lexicon.push_str(&format!("w{:03}\t{tag}\n", index * 4 + repeat));
        }
    }
    let lexicon_path = base.join("upos.tsv");
    std::fs::write(&lexicon_path, lexicon)?;

    let keywords_path = base.join("afrikaans.kw");
    let selection = cmd_keywords(&manifest, Language::Afrikaans, None, &keywords_path)?;
    println!(
        "selected keywords (C = {}): {}",
        selection.chosen_c,
        selection.spec.keywords().join(", ")
    );

    let out = base.join("out");
    let config = RunConfig {
        manifest,
        language: Language::Afrikaans,
        groups: vec![
            FeatureGroup::Proficiency,
            FeatureGroup::Grammatical,
            FeatureGroup::Keywords,
        ],
        lexicon: Some(lexicon_path),
        keywords_file: Some(keywords_path),
        penalty: PenaltyConfig::default(),
        repetitions: 100,
        seed: 13,
        split: Split::Train,
        tier: None,
        jobs: 1,
        out_dir: out.clone(),
    };
    let written = cmd_run(&config)?;

    println!("\npipeline outputs:");
    for path in &written {
        println!("  {}", path.display());
    }
    println!("\n{}", std::fs::read_to_string(out.join("metrics.txt"))?);
    Ok(())
}
