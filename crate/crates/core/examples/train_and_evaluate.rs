//! Train the proficiency model on synthetic data and report balanced
//! accuracy and F1 on the train and dev splits.
//!
//! ```bash
//! cargo run -p narrative-screen --example train_and_evaluate
//! ```

use narrative_screen::analysis::confusion;
use narrative_screen::corpus::{Language, Split};
use narrative_screen::features::{build_feature_matrix, FeatureConfig, FeatureGroup};
use narrative_screen::glm::{predict_matrix, train_detailed, ModelMeta, PenaltyConfig};
use narrative_screen::report::{emit_metrics_table, MetricsRow};
use narrative_screen::synth::{generate_corpus, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = generate_corpus(&SynthConfig {
        train_records: 200,
        dev_records: 38,
        test_records: 0,
        ri_rate: 0.36,
        unique_words_effect: 1.5,
        seed: 11,
        ..Default::default()
    })?;

    let matrix_for = |split| {
        build_feature_matrix(
            &corpus,
            Language::Afrikaans,
            FeatureGroup::Proficiency,
            &FeatureConfig {
                split: Some(split),
                ..Default::default()
            },
        )
        .map(|m| m.retain_labeled())
    };
    let train_matrix = matrix_for(Split::Train)?;
    let dev_matrix = matrix_for(Split::Dev)?;

    let meta = ModelMeta {
        group: Some(FeatureGroup::Proficiency),
        language: Some(Language::Afrikaans),
        seed: Some(11),
    };
    let (model, diagnostics) =
        train_detailed(&train_matrix, &PenaltyConfig::default(), meta, None)?;
    println!(
        "converged in {} Newton steps (gradient norm {:.2e})",
        diagnostics.iterations, diagnostics.final_optimality
    );
    println!("weights:");
    for (name, weight) in model.feature_names.iter().zip(&model.weights) {
        println!("  {name:<16} {weight:>9.5}");
    }
    println!("  {:<16} {:>9.5}", "intercept", model.intercept);

    let mut rows = Vec::new();
    for (split, matrix) in [(Split::Train, &train_matrix), (Split::Dev, &dev_matrix)] {
        let predictions = predict_matrix(&model, matrix)?;
        let labels: Vec<u8> = matrix.labels().iter().map(|l| l.unwrap()).collect();
        rows.push(MetricsRow {
            group: FeatureGroup::Proficiency,
            language: Language::Afrikaans,
            split,
            counts: confusion(&predictions, &labels)?,
        });
    }
    let table = emit_metrics_table(&rows)?;
    println!("\n{}", table.text);

    Ok(())
}
