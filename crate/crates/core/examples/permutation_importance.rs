//! Rank features by permutation importance: shuffle one column at a time
//! and measure the drop in balanced accuracy.
//!
//! ```bash
//! cargo run -p narrative-screen --example permutation_importance
//! ```

use narrative_screen::analysis::{permutation_importance, pfi_to_csv, Metric, PfiOptions};
use narrative_screen::corpus::{Language, Split};
use narrative_screen::features::{build_feature_matrix, FeatureConfig, FeatureGroup};
use narrative_screen::glm::{train, PenaltyConfig};
use narrative_screen::synth::{generate_corpus, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = generate_corpus(&SynthConfig {
        train_records: 200,
        dev_records: 0,
        test_records: 0,
        ri_rate: 0.36,
        unique_words_effect: 1.5,
        seed: 3,
        ..Default::default()
    })?;
    let matrix = build_feature_matrix(
        &corpus,
        Language::Afrikaans,
        FeatureGroup::Proficiency,
        &FeatureConfig {
            split: Some(Split::Train),
            ..Default::default()
        },
    )?
    .retain_labeled();
    let model = train(&matrix, &PenaltyConfig::default())?;

    // 100 shuffles per feature; every (feature, repetition) pair derives
    // its own generator from the master seed, so jobs > 1 changes nothing.
    let options = PfiOptions {
        repetitions: 100,
        master_seed: 3,
        jobs: 2,
        ..Default::default()
    };
    let mut results = permutation_importance(&model, &matrix, Metric::BalancedAccuracy, &options)?;
    results.sort_by(|a, b| b.mean_drop.total_cmp(&a.mean_drop));

    println!(
        "baseline balanced accuracy: {:.3}",
        results[0].baseline_score
    );
    println!("{:<16} {:>10} {:>10}  sign", "feature", "mean drop", "std");
    for r in &results {
        println!(
            "{:<16} {:>10.4} {:>10.4}  {}",
            r.feature_name,
            r.mean_drop,
            r.std_drop(),
            r.coefficient_sign.as_str()
        );
    }
    println!(
        "\nthe planted unique-word effect dominates; its negative sign means\n\
         more unique words predict no intervention"
    );

    println!("\nCSV export:\n{}", pfi_to_csv(&results));
    Ok(())
}
