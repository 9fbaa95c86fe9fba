//! Keyword selection: rank the 20 most frequent training words, then let
//! an L1 penalty pick the 10 that carry label signal.
//!
//! ```bash
//! cargo run -p narrative-screen --example select_keywords
//! ```

use narrative_screen::corpus::{Language, Split};
use narrative_screen::features::{
    build_feature_matrix, top_n_words, FeatureConfig, FeatureGroup, KeywordSpec,
};
use narrative_screen::glm::select_keywords_detailed;
use narrative_screen::synth::{generate_corpus, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Two planted words are used far more by the non-RI group.
    let corpus = generate_corpus(&SynthConfig {
        train_records: 200,
        dev_records: 0,
        test_records: 0,
        ri_rate: 0.5,
        vocabulary_size: 60,
        keyword_effects: vec![("vula".to_string(), 0.5), ("hamba".to_string(), 0.5)],
        language: Language::IsiXhosa,
        seed: 19,
        ..Default::default()
    })?;

    let records = corpus.select(Language::IsiXhosa, Some(Split::Train));
    let candidates = top_n_words(&records, Language::IsiXhosa, 20)?;
    println!("top-20 candidates: {}", candidates.join(", "));

    let candidate_spec = KeywordSpec::new(Language::IsiXhosa, candidates.clone(), true)?;
    let matrix = build_feature_matrix(
        &corpus,
        Language::IsiXhosa,
        FeatureGroup::Keywords,
        &FeatureConfig {
            split: Some(Split::Train),
            keywords: Some(&candidate_spec),
            ..Default::default()
        },
    )?
    .retain_labeled();

    let selection = select_keywords_detailed(Language::IsiXhosa, &candidates, &matrix, 10)?;
    println!("\nchosen at C = {}:", selection.chosen_c);
    for keyword in selection.spec.keywords() {
        let weight = selection
            .candidates
            .iter()
            .position(|c| c == keyword)
            .map(|i| selection.candidate_weights[i])
            .unwrap_or(0.0);
        let marker = if keyword == "vula" || keyword == "hamba" {
            "  <- planted"
        } else {
            ""
        };
        println!("  {keyword:<8} weight {weight:>9.5}{marker}");
    }

    println!(
        "\nspec file:\n{}",
        selection.spec.to_file_string(Some(&selection.provenance()))
    );
    Ok(())
}
