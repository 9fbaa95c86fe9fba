//! Render the two figure types: a permutation-importance bar chart and
//! RI-grouped box plots, each with its CSV twin.
//!
//! ```bash
//! cargo run -p narrative-screen --example render_plots
//! ```

use narrative_screen::analysis::{permutation_importance, pfi_to_csv, Metric, PfiOptions};
use narrative_screen::corpus::{Language, Split};
use narrative_screen::features::{build_feature_matrix, count_types, FeatureConfig, FeatureGroup};
use narrative_screen::glm::{train, PenaltyConfig};
use narrative_screen::report::{box_groups_csv, render_box_plot, render_pfi_plot, BoxGroups};
use narrative_screen::synth::{generate_corpus, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = generate_corpus(&SynthConfig {
        train_records: 160,
        dev_records: 0,
        test_records: 0,
        ri_rate: 0.4,
        unique_words_effect: 1.5,
        seed: 5,
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
    let results = permutation_importance(
        &model,
        &matrix,
        Metric::BalancedAccuracy,
        &PfiOptions {
            master_seed: 5,
            ..Default::default()
        },
    )?;

    let out = std::env::temp_dir().join("narrative-screen-plots");
    std::fs::create_dir_all(&out)?;

    let bar = render_pfi_plot(&results, "Permutation importance: proficiency", Some(5))?;
    std::fs::write(out.join("pfi_proficiency.svg"), &bar.svg)?;
    std::fs::write(out.join("pfi_proficiency.csv"), pfi_to_csv(&results))?;

    // Box plot of unique words, grouped by RI label. RI boxes draw red and
    // left; non-RI blue and right; dotted line marks the mean.
    let mut groups = BoxGroups::new();
    for record in corpus.records() {
        if let Some(ri) = record.ri {
            groups
                .entry((Language::Afrikaans, ri))
                .or_default()
                .push(count_types(record) as f64);
        }
    }
    let boxes = render_box_plot(&groups, "unique_words")?;
    std::fs::write(out.join("box_unique_words.svg"), &boxes.svg)?;
    std::fs::write(out.join("box_unique_words.csv"), box_groups_csv(&groups)?)?;

    println!("wrote:");
    for name in [
        "pfi_proficiency.svg",
        "pfi_proficiency.csv",
        "box_unique_words.svg",
        "box_unique_words.csv",
    ] {
        println!("  {}", out.join(name).display());
    }
    println!("\nrendering is pure: identical inputs give byte-identical SVGs");
    let again = render_pfi_plot(&results, "Permutation importance: proficiency", Some(5))?;
    assert_eq!(bar.svg, again.svg);

    Ok(())
}
