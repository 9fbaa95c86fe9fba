//! Integration tests for the pipeline commands and the binary's exit
//! codes.

use std::path::{Path, PathBuf};
use std::process::Command;

use narrative_screen::corpus::{write_manifest, Language, Split};
use narrative_screen::features::FeatureGroup;
use narrative_screen::glm::{load_model, PenaltyConfig};
use narrative_screen::pipeline::{
    cmd_evaluate, cmd_featurize, cmd_keywords, cmd_pfi, cmd_plot_boxes, cmd_plot_pfi_csv, cmd_run,
    cmd_synth, cmd_train, cmd_validate, PipelineError, RunConfig,
};
use narrative_screen::synth::{generate_corpus, SynthConfig};

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_narrative-screen"))
}

fn synth_manifest(dir: &Path, seed: u64) -> PathBuf {
    let corpus = generate_corpus(&SynthConfig {
        train_records: 60,
        dev_records: 16,
        test_records: 0,
        ri_rate: 0.4,
        unique_words_effect: 1.2,
        keyword_effects: vec![("qkw1".to_string(), 0.5), ("qkw2".to_string(), 0.4)],
        vocabulary_size: 50,
        seed,
        ..Default::default()
    })
    .unwrap();
    let path = dir.join("manifest.jsonl");
    write_manifest(&corpus, &path).unwrap();
    path
}

#[test]
fn validate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth_manifest(dir.path(), 1);

    let clean = binary()
        .args(["validate", "--manifest"])
        .arg(&manifest)
        .output()
        .unwrap();
    assert_eq!(
        clean.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&clean.stderr)
    );

    // Speaker overlap: exit 2 and the message names the child.
    let mut content = std::fs::read_to_string(&manifest).unwrap();
    let first_line = content.lines().next().unwrap().to_string();
    content.push_str(
        &first_line
            .replace("\"train\"", "\"dev\"")
            .replace("cat", "dog"),
    );
    content.push('\n');
    let broken = dir.path().join("broken.jsonl");
    std::fs::write(&broken, content).unwrap();
    let overlap = binary()
        .args(["validate", "--manifest"])
        .arg(&broken)
        .output()
        .unwrap();
    assert_eq!(overlap.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&overlap.stderr).contains("syn-train-0000"));

    // Unreadable manifest: exit 1.
    let missing = binary()
        .args(["validate", "--manifest", "/nonexistent/manifest.jsonl"])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn synth_and_run_through_the_binary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("synth");
    let synth = binary()
        .args([
            "synth",
            "--seed",
            "9",
            "--train-records",
            "40",
            "--dev-records",
            "10",
        ])
        .args(["--test-records", "0", "--effect-unique-words", "1.2"])
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(
        synth.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&synth.stderr)
    );
    let manifest = out.join("synth_manifest.jsonl");
    assert!(manifest.exists());

    let run_out = dir.path().join("run");
    let run = binary()
        .args([
            "run",
            "--language",
            "afrikaans",
            "--group",
            "proficiency",
            "--seed",
            "3",
        ])
        .arg("--manifest")
        .arg(&manifest)
        .arg("--out")
        .arg(&run_out)
        .output()
        .unwrap();
    assert_eq!(
        run.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&run.stderr)
    );
    for expected in [
        "features_afrikaans_proficiency_train.csv",
        "features_afrikaans_proficiency_dev.csv",
        "model_afrikaans_proficiency.glm",
        "pfi_afrikaans_proficiency.csv",
        "pfi_afrikaans_proficiency.svg",
        "box_afrikaans_unique_words.svg",
        "metrics.csv",
        "metrics.txt",
        "run_manifest.txt",
    ] {
        assert!(run_out.join(expected).exists(), "missing {expected}");
    }
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth_manifest(dir.path(), 2);
    let config_path = dir.path().join("screen.conf");
    std::fs::write(
        &config_path,
        format!(
            "manifest = {}\nlanguage = afrikaans\ngroup = proficiency\nseed = 5\n",
            manifest.display()
        ),
    )
    .unwrap();

    let out_a = dir.path().join("a");
    let from_config = binary()
        .args(["run", "--config"])
        .arg(&config_path)
        .arg("--out")
        .arg(&out_a)
        .output()
        .unwrap();
    assert_eq!(
        from_config.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&from_config.stderr)
    );
    let manifest_text = std::fs::read_to_string(out_a.join("run_manifest.txt")).unwrap();
    assert!(manifest_text.contains("seed = 5"));

    // A flag overrides the config file's seed.
    let out_b = dir.path().join("b");
    let overridden = binary()
        .args(["run", "--config"])
        .arg(&config_path)
        .args(["--seed", "11"])
        .arg("--out")
        .arg(&out_b)
        .output()
        .unwrap();
    assert_eq!(overridden.status.code(), Some(0));
    let manifest_text = std::fs::read_to_string(out_b.join("run_manifest.txt")).unwrap();
    assert!(manifest_text.contains("seed = 11"));
}

#[test]
fn library_commands_chain_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth_manifest(dir.path(), 3);

    assert_eq!(cmd_validate(&manifest, None).unwrap(), 76);

    let features = cmd_featurize(
        &manifest,
        Language::Afrikaans,
        FeatureGroup::Proficiency,
        Some(Split::Train),
        None,
        None,
        None,
        &dir.path().join("features"),
    )
    .unwrap();
    let csv = std::fs::read_to_string(&features[0]).unwrap();
    assert!(
        csv.starts_with("tokens,unique_words,mean_utt_len,artic_rate,flesch_kincaid,record_id,ri")
    );
    assert_eq!(csv.lines().count(), 61);

    // Keyword selection needs a corpus large enough that ten candidate
    // columns stay active under the L1 schedule.
    let selection_corpus = generate_corpus(&SynthConfig {
        train_records: 200,
        dev_records: 0,
        test_records: 0,
        ri_rate: 0.5,
        vocabulary_size: 60,
        keyword_effects: vec![("qkw1".to_string(), 0.5), ("qkw2".to_string(), 0.4)],
        seed: 30,
        ..Default::default()
    })
    .unwrap();
    let selection_manifest = dir.path().join("selection.jsonl");
    write_manifest(&selection_corpus, &selection_manifest).unwrap();
    let keywords_path = dir.path().join("kw/afrikaans.kw");
    let selection = cmd_keywords(
        &selection_manifest,
        Language::Afrikaans,
        None,
        &keywords_path,
    )
    .unwrap();
    assert_eq!(selection.spec.keywords().len(), 10);
    assert_eq!(selection.candidates.len(), 20);
    assert!(keywords_path.exists());

    let model_path = dir.path().join("models/prof.glm");
    let model = cmd_train(
        &manifest,
        Language::Afrikaans,
        FeatureGroup::Proficiency,
        PenaltyConfig::default(),
        None,
        None,
        None,
        42,
        &model_path,
    )
    .unwrap();
    assert_eq!(model.meta.seed, Some(42));
    let reloaded = load_model(&model_path).unwrap();
    assert_eq!(reloaded.weights, model.weights);

    let row = cmd_evaluate(&manifest, &model_path, Split::Dev, None, None, None).unwrap();
    assert_eq!(row.split, Split::Dev);
    assert!(row.counts.total() > 0);

    let pfi_out = dir.path().join("pfi");
    let results = cmd_pfi(
        &manifest,
        &model_path,
        Split::Train,
        50,
        42,
        2,
        None,
        None,
        None,
        &pfi_out,
    )
    .unwrap();
    assert_eq!(results.len(), 5);
    let pfi_csv = pfi_out.join("pfi_afrikaans_proficiency.csv");
    assert!(pfi_csv.exists());

    // Re-render the SVG from the CSV twin.
    let replot = cmd_plot_pfi_csv(&pfi_csv, &dir.path().join("replot")).unwrap();
    assert!(replot[0]
        .to_str()
        .unwrap()
        .ends_with("pfi_afrikaans_proficiency.svg"));

    let boxes = cmd_plot_boxes(
        &manifest,
        Language::Afrikaans,
        Split::Train,
        None,
        &dir.path().join("boxes"),
    )
    .unwrap();
    assert_eq!(boxes.len(), 10, "5 features x (svg + csv)");
}

#[test]
fn keywords_group_without_spec_points_at_the_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth_manifest(dir.path(), 4);
    let config = RunConfig {
        groups: vec![FeatureGroup::Keywords],
        ..RunConfig::new(manifest, Language::Afrikaans, dir.path().join("out"))
    };
    let error = cmd_run(&config).unwrap_err();
    match &error {
        PipelineError::Usage(message) => {
            assert!(
                message.contains("keywords subcommand"),
                "message: {message}"
            )
        }
        other => panic!("expected a usage error, got {other:?}"),
    }
    assert_eq!(error.exit_code(), 1);
    assert!(
        !dir.path().join("out").exists(),
        "failed runs must leave no outputs"
    );
}

#[test]
fn synth_writes_a_loadable_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let config = SynthConfig {
        train_records: 12,
        dev_records: 5,
        test_records: 2,
        seed: 8,
        ..Default::default()
    };
    let path = cmd_synth(&config, dir.path()).unwrap();
    assert_eq!(cmd_validate(&path, None).unwrap(), 19);
}

#[test]
fn non_convergence_maps_to_exit_code_3() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth_manifest(dir.path(), 5);
    let out = dir.path().join("model.glm");
    let error = cmd_train(
        &manifest,
        Language::Afrikaans,
        FeatureGroup::Proficiency,
        PenaltyConfig {
            max_iterations: 1,
            tolerance: 1e-14,
            ..Default::default()
        },
        None,
        None,
        None,
        0,
        &out,
    )
    .unwrap_err();
    assert_eq!(error.exit_code(), 3, "got {error:?}");
}
