//! Generate a synthetic labeled corpus with a planted unique-word effect
//! and write it as a standard manifest.
//!
//! ```bash
//! cargo run -p narrative-screen --example synthesize_corpus
//! ```

use narrative_screen::corpus::write_manifest;
use narrative_screen::features::{count_tokens, count_types};
use narrative_screen::synth::{generate_corpus, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = SynthConfig {
        train_records: 200,
        dev_records: 38,
        test_records: 28,
        ri_rate: 0.36,
        unique_words_effect: 1.5,
        keyword_effects: vec![("qkw1".to_string(), 0.5)],
        seed: 7,
        ..Default::default()
    };
    let corpus = generate_corpus(&config)?;

    let positives = corpus.records().iter().filter(|r| r.ri == Some(1)).count();
    println!(
        "generated {} records ({} labeled RI) across train/dev/test",
        corpus.len(),
        positives
    );

    let mean = |label: u8, f: &dyn Fn(&narrative_screen::corpus::NarrativeRecord) -> usize| {
        let values: Vec<f64> = corpus
            .records()
            .iter()
            .filter(|r| r.ri == Some(label))
            .map(|r| f(r) as f64)
            .collect();
        values.iter().sum::<f64>() / values.len() as f64
    };
    println!(
        "mean tokens:       RI {:.1} vs non-RI {:.1} (no planted effect)",
        mean(1, &count_tokens),
        mean(0, &count_tokens)
    );
    println!(
        "mean unique words: RI {:.1} vs non-RI {:.1} (planted 1.5 SD shift)",
        mean(1, &count_types),
        mean(0, &count_types)
    );

    let dir = std::env::temp_dir().join("narrative-screen-example");
    std::fs::create_dir_all(&dir)?;
    let manifest = dir.join("synth_manifest.jsonl");
    write_manifest(&corpus, &manifest)?;
    println!("\nmanifest written to {}", manifest.display());
    println!(
        "try: narrative-screen validate --manifest {}",
        manifest.display()
    );

    Ok(())
}
