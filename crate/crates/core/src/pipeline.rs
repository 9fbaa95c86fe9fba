//! End-to-end orchestration behind the command-line interface.
//!
//! Every command stages its outputs in memory and writes them in one final
//! flush, so a failing run leaves no partial files behind. All randomness
//! flows from the single `seed` field; reruns with the same inputs and
//! seed produce byte-identical outputs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::analysis::{
    confusion, permutation_importance, pfi_to_csv, AnalysisError, Metric, PfiOptions, PfiResult,
};
use crate::corpus::{load_corpus, CorpusError, Language, LoadOptions, Split};
use crate::features::{
    build_feature_matrix, FeatureConfig, FeatureError, FeatureGroup, FeatureMatrix, KeywordSpec,
    PosLexicon, PROFICIENCY_FEATURES,
};
use crate::glm::{
    load_model, save_model, select_keywords_detailed, train_detailed, GlmError, KeywordSelection,
    ModelMeta, PenaltyConfig, TrainedModel,
};
use crate::report::{
    box_groups_csv, emit_metrics_table, render_box_plot, render_pfi_plot, BoxGroups, MetricsRow,
    ReportError,
};
use crate::synth::{generate_corpus, SynthConfig, SynthError};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Glm(#[from] GlmError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error(transparent)]
    Synth(#[from] SynthError),
}

impl PipelineError {
    /// Process exit code: 1 for I/O and usage problems, 2 for validation
    /// failures, 3 for numerical failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            PipelineError::Usage(_) | PipelineError::Io { .. } => 1,
            PipelineError::Corpus(CorpusError::Io { .. }) => 1,
            PipelineError::Corpus(CorpusError::Validation { .. }) => 2,
            PipelineError::Feature(FeatureError::MissingResource { .. }) => 1,
            PipelineError::Feature(_) => 2,
            PipelineError::Glm(GlmError::NonConvergence { .. }) => 3,
            PipelineError::Glm(GlmError::ModelFile(_))
            | PipelineError::Glm(GlmError::InvalidPenalty(_))
            | PipelineError::Glm(GlmError::BadThreshold(_)) => 1,
            PipelineError::Glm(_) => 2,
            PipelineError::Analysis(_) => 2,
            PipelineError::Report(_) => 2,
            PipelineError::Synth(SynthError::Infeasible(_)) => 1,
            PipelineError::Synth(SynthError::Corpus(CorpusError::Io { .. })) => 1,
            PipelineError::Synth(SynthError::Corpus(_)) => 2,
        }
    }
}

/// Everything `run` needs.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub manifest: PathBuf,
    pub language: Language,
    pub groups: Vec<FeatureGroup>,
    pub lexicon: Option<PathBuf>,
    pub keywords_file: Option<PathBuf>,
    pub penalty: PenaltyConfig,
    /// Permutation repetitions per feature.
    pub repetitions: usize,
    pub seed: u64,
    /// Split the importance analysis and box plots score on.
    pub split: Split,
    /// TextGrid tier override.
    pub tier: Option<String>,
    pub jobs: usize,
    pub out_dir: PathBuf,
}

impl RunConfig {
    pub fn new(manifest: PathBuf, language: Language, out_dir: PathBuf) -> Self {
        Self {
            manifest,
            language,
            groups: vec![FeatureGroup::Proficiency],
            lexicon: None,
            keywords_file: None,
            penalty: PenaltyConfig::default(),
            repetitions: 100,
            seed: 0,
            split: Split::Train,
            tier: None,
            jobs: 1,
            out_dir,
        }
    }

    /// Canonical key=value echo of the config (output directory excluded,
    /// so the same analysis into two directories hashes identically).
    fn canonical(&self) -> String {
        let groups: Vec<&str> = self.groups.iter().map(|g| g.as_str()).collect();
        let mut lines = vec![
            format!("c = {}", self.penalty.c),
            format!("groups = {}", groups.join(",")),
            format!("jobs = {}", self.jobs),
            format!("keywords_file = {}", display_opt(&self.keywords_file)),
            format!("language = {}", self.language),
            format!("lexicon = {}", display_opt(&self.lexicon)),
            format!("manifest = {}", self.manifest.display()),
            format!("max_iterations = {}", self.penalty.max_iterations),
            format!("penalty = {}", self.penalty.kind),
            format!("repetitions = {}", self.repetitions),
            format!("seed = {}", self.seed),
            format!("split = {}", self.split),
            format!("tier = {}", self.tier.clone().unwrap_or_default()),
            format!("tolerance = {}", self.penalty.tolerance),
        ];
        lines.sort();
        lines.join("\n") + "\n"
    }
}

fn display_opt(path: &Option<PathBuf>) -> String {
    path.as_ref()
        .map(|p| p.display().to_string())
        .unwrap_or_default()
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// In-memory output staging; nothing touches disk until [`Stage::flush`].
struct Stage {
    root: PathBuf,
    files: Vec<(String, Vec<u8>)>,
}

impl Stage {
    fn new(root: &Path) -> Self {
        Self {
            root: root.to_path_buf(),
            files: Vec::new(),
        }
    }

    fn add(&mut self, name: impl Into<String>, bytes: impl Into<Vec<u8>>) {
        self.files.push((name.into(), bytes.into()));
    }

    fn flush(self) -> Result<Vec<PathBuf>, PipelineError> {
        std::fs::create_dir_all(&self.root).map_err(|source| PipelineError::Io {
            path: self.root.clone(),
            source,
        })?;
        let mut written = Vec::new();
        for (name, bytes) in &self.files {
            let path = self.root.join(name);
            if let Err(source) = std::fs::write(&path, bytes) {
                for done in &written {
                    let _ = std::fs::remove_file(done);
                }
                return Err(PipelineError::Io { path, source });
            }
            written.push(path);
        }
        Ok(written)
    }
}

fn load_options(tier: &Option<String>) -> LoadOptions {
    LoadOptions { tier: tier.clone() }
}

/// Validates a manifest; `Ok` means a clean corpus.
pub fn cmd_validate(manifest: &Path, tier: Option<String>) -> Result<usize, PipelineError> {
    let corpus = load_corpus(manifest, &load_options(&tier))?;
    Ok(corpus.len())
}

/// Loads optional group resources from disk.
fn load_resources(
    lexicon: &Option<PathBuf>,
    keywords_file: &Option<PathBuf>,
) -> Result<(Option<PosLexicon>, Option<KeywordSpec>), PipelineError> {
    let lexicon = match lexicon {
        Some(path) => Some(PosLexicon::from_file(path)?),
        None => None,
    };
    let keywords = match keywords_file {
        Some(path) => Some(KeywordSpec::from_file(path)?),
        None => None,
    };
    Ok((lexicon, keywords))
}

fn group_matrix(
    corpus: &crate::corpus::Corpus,
    language: Language,
    group: FeatureGroup,
    split: Option<Split>,
    lexicon: Option<&PosLexicon>,
    keywords: Option<&KeywordSpec>,
) -> Result<FeatureMatrix, PipelineError> {
    if group == FeatureGroup::Keywords && keywords.is_none() {
        return Err(PipelineError::Usage(
            "the keywords group needs --keywords-file; generate one with the keywords subcommand"
                .to_string(),
        ));
    }
    Ok(build_feature_matrix(
        corpus,
        language,
        group,
        &FeatureConfig {
            split,
            lexicon,
            keywords,
        },
    )?)
}

/// Writes feature CSVs for one group. With `split = None` a single CSV over
/// all splits is staged, otherwise one per requested split.
#[allow(clippy::too_many_arguments)]
pub fn cmd_featurize(
    manifest: &Path,
    language: Language,
    group: FeatureGroup,
    split: Option<Split>,
    lexicon: Option<PathBuf>,
    keywords_file: Option<PathBuf>,
    tier: Option<String>,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, PipelineError> {
    let corpus = load_corpus(manifest, &load_options(&tier))?;
    let (lexicon, keywords) = load_resources(&lexicon, &keywords_file)?;
    let mut stage = Stage::new(out_dir);
    let splits: Vec<Option<Split>> = match split {
        Some(s) => vec![Some(s)],
        None => vec![None],
    };
    for split in splits {
        let matrix = group_matrix(
            &corpus,
            language,
            group,
            split,
            lexicon.as_ref(),
            keywords.as_ref(),
        )?;
        let suffix = split.map(|s| format!("_{s}")).unwrap_or_default();
        stage.add(
            format!("features_{language}_{group}{suffix}.csv"),
            matrix.to_csv(),
        );
    }
    stage.flush()
}

/// Ranks the top 20 training words and selects 10 keywords by L1 fit.
pub fn cmd_keywords(
    manifest: &Path,
    language: Language,
    tier: Option<String>,
    out_file: &Path,
) -> Result<KeywordSelection, PipelineError> {
    let corpus = load_corpus(manifest, &load_options(&tier))?;
    let train_records = corpus.select(language, Some(Split::Train));
    if train_records.is_empty() {
        return Err(FeatureError::EmptySelection {
            language,
            split: Some(Split::Train),
        }
        .into());
    }
    let candidates = crate::features::top_n_words(&train_records, language, 20)?;
    let candidate_spec = KeywordSpec::new(language, candidates.clone(), true)?;
    let matrix = build_feature_matrix(
        &corpus,
        language,
        FeatureGroup::Keywords,
        &FeatureConfig {
            split: Some(Split::Train),
            lexicon: None,
            keywords: Some(&candidate_spec),
        },
    )?
    .retain_labeled();
    let selection = select_keywords_detailed(language, &candidates, &matrix, 10)?;
    let content = selection.spec.to_file_string(Some(&selection.provenance()));
    if let Some(parent) = out_file.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|source| PipelineError::Io {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    std::fs::write(out_file, content).map_err(|source| PipelineError::Io {
        path: out_file.to_path_buf(),
        source,
    })?;
    Ok(selection)
}

/// Trains one group model on the training split and saves it.
#[allow(clippy::too_many_arguments)]
pub fn cmd_train(
    manifest: &Path,
    language: Language,
    group: FeatureGroup,
    penalty: PenaltyConfig,
    lexicon: Option<PathBuf>,
    keywords_file: Option<PathBuf>,
    tier: Option<String>,
    seed: u64,
    out_file: &Path,
) -> Result<TrainedModel, PipelineError> {
    let corpus = load_corpus(manifest, &load_options(&tier))?;
    let (lexicon, keywords) = load_resources(&lexicon, &keywords_file)?;
    let matrix = group_matrix(
        &corpus,
        language,
        group,
        Some(Split::Train),
        lexicon.as_ref(),
        keywords.as_ref(),
    )?
    .retain_labeled();
    let meta = ModelMeta {
        group: Some(group),
        language: Some(language),
        seed: Some(seed),
    };
    let (model, _) = train_detailed(&matrix, &penalty, meta, None)?;
    if let Some(parent) = out_file.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|source| PipelineError::Io {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    save_model(&model, out_file)?;
    Ok(model)
}

/// Scores a saved model on one split.
pub fn cmd_evaluate(
    manifest: &Path,
    model_file: &Path,
    split: Split,
    lexicon: Option<PathBuf>,
    keywords_file: Option<PathBuf>,
    tier: Option<String>,
) -> Result<MetricsRow, PipelineError> {
    let model = load_model(model_file)?;
    let group = model.meta.group.ok_or_else(|| {
        PipelineError::Usage(format!("{} records no feature group", model_file.display()))
    })?;
    let language = model.meta.language.ok_or_else(|| {
        PipelineError::Usage(format!("{} records no language", model_file.display()))
    })?;
    let corpus = load_corpus(manifest, &load_options(&tier))?;
    let (lexicon, keywords) = load_resources(&lexicon, &keywords_file)?;
    let matrix = group_matrix(
        &corpus,
        language,
        group,
        Some(split),
        lexicon.as_ref(),
        keywords.as_ref(),
    )?
    .retain_labeled();
    let row = evaluate_model(&model, &matrix, group, language, split)?;
    Ok(row)
}

fn evaluate_model(
    model: &TrainedModel,
    labeled: &FeatureMatrix,
    group: FeatureGroup,
    language: Language,
    split: Split,
) -> Result<MetricsRow, PipelineError> {
    let predictions = crate::glm::predict_matrix(model, labeled)?;
    let labels: Vec<u8> = labeled
        .labels()
        .iter()
        .map(|l| l.expect("labeled matrix"))
        .collect();
    let counts = confusion(&predictions, &labels)?;
    Ok(MetricsRow {
        group,
        language,
        split,
        counts,
    })
}

/// Permutation importance of a saved model on one split, as CSV + SVG.
#[allow(clippy::too_many_arguments)]
pub fn cmd_pfi(
    manifest: &Path,
    model_file: &Path,
    split: Split,
    repetitions: usize,
    seed: u64,
    jobs: usize,
    lexicon: Option<PathBuf>,
    keywords_file: Option<PathBuf>,
    tier: Option<String>,
    out_dir: &Path,
) -> Result<Vec<PfiResult>, PipelineError> {
    let model = load_model(model_file)?;
    let group = model.meta.group.ok_or_else(|| {
        PipelineError::Usage(format!("{} records no feature group", model_file.display()))
    })?;
    let language = model.meta.language.ok_or_else(|| {
        PipelineError::Usage(format!("{} records no language", model_file.display()))
    })?;
    let corpus = load_corpus(manifest, &load_options(&tier))?;
    let (lexicon, keywords) = load_resources(&lexicon, &keywords_file)?;
    let matrix = group_matrix(
        &corpus,
        language,
        group,
        Some(split),
        lexicon.as_ref(),
        keywords.as_ref(),
    )?
    .retain_labeled();
    let options = PfiOptions {
        repetitions,
        master_seed: seed,
        exhaustive: false,
        jobs,
    };
    let results = permutation_importance(&model, &matrix, Metric::BalancedAccuracy, &options)?;
    let mut stage = Stage::new(out_dir);
    stage_pfi(&mut stage, &results, language, group, seed)?;
    stage.flush()?;
    Ok(results)
}

fn stage_pfi(
    stage: &mut Stage,
    results: &[PfiResult],
    language: Language,
    group: FeatureGroup,
    seed: u64,
) -> Result<(), PipelineError> {
    let title = format!("Permutation importance: {group} ({language})");
    let plot = render_pfi_plot(results, &title, Some(seed))?;
    stage.add(format!("pfi_{language}_{group}.csv"), pfi_to_csv(results));
    stage.add(format!("pfi_{language}_{group}.svg"), plot.svg);
    Ok(())
}

fn stage_box_plots(
    stage: &mut Stage,
    corpus: &crate::corpus::Corpus,
    language: Language,
    split: Split,
) -> Result<(), PipelineError> {
    let records = corpus.select(language, Some(split));
    for (index, feature) in PROFICIENCY_FEATURES.iter().enumerate() {
        let mut groups = BoxGroups::new();
        for record in records.iter().filter(|r| r.ri.is_some()) {
            let vector = crate::features::feature_vector(
                record,
                FeatureGroup::Proficiency,
                &FeatureConfig::default(),
            )?;
            groups
                .entry((language, record.ri.unwrap()))
                .or_default()
                .push(vector.values()[index]);
        }
        if groups.values().all(|v| v.is_empty()) {
            continue;
        }
        let plot = render_box_plot(&groups, feature)?;
        stage.add(format!("box_{language}_{feature}.svg"), plot.svg);
        stage.add(
            format!("box_{language}_{feature}.csv"),
            box_groups_csv(&groups)?,
        );
    }
    Ok(())
}

/// Re-renders a PFI SVG from its CSV twin.
pub fn cmd_plot_pfi_csv(pfi_csv: &Path, out_dir: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    let content = std::fs::read_to_string(pfi_csv).map_err(|source| PipelineError::Io {
        path: pfi_csv.to_path_buf(),
        source,
    })?;
    let results = parse_pfi_csv(&content)
        .map_err(|message| PipelineError::Usage(format!("{}: {message}", pfi_csv.display())))?;
    let stem = pfi_csv
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("pfi");
    let plot = render_pfi_plot(&results, stem, None)?;
    let mut stage = Stage::new(out_dir);
    stage.add(format!("{stem}.svg"), plot.svg);
    stage.flush()
}

fn parse_pfi_csv(content: &str) -> Result<Vec<PfiResult>, String> {
    let mut lines = content.lines();
    let header = lines.next().ok_or("empty file")?;
    if !header.starts_with("feature,mean_drop,std_drop,coefficient_sign,baseline_score") {
        return Err("not a permutation-importance CSV".to_string());
    }
    let mut results = Vec::new();
    for (number, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 6 {
            return Err(format!("line {}: expected 6 columns", number + 2));
        }
        let mean_drop: f64 = fields[1]
            .parse()
            .map_err(|e| format!("line {}: {e}", number + 2))?;
        let baseline_score: f64 = fields[4]
            .parse()
            .map_err(|e| format!("line {}: {e}", number + 2))?;
        let coefficient_sign = match fields[3] {
            "positive" => crate::analysis::CoefficientSign::Positive,
            "negative" => crate::analysis::CoefficientSign::Negative,
            "zero" => crate::analysis::CoefficientSign::Zero,
            other => return Err(format!("line {}: unknown sign {other}", number + 2)),
        };
        results.push(PfiResult {
            feature_name: fields[0].to_string(),
            baseline_score,
            drops: vec![mean_drop],
            mean_drop,
            coefficient_sign,
        });
    }
    Ok(results)
}

/// Renders the RI box plots for the proficiency features of one split.
pub fn cmd_plot_boxes(
    manifest: &Path,
    language: Language,
    split: Split,
    tier: Option<String>,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, PipelineError> {
    let corpus = load_corpus(manifest, &load_options(&tier))?;
    let mut stage = Stage::new(out_dir);
    stage_box_plots(&mut stage, &corpus, language, split)?;
    stage.flush()
}

/// Generates a synthetic corpus and writes its manifest.
pub fn cmd_synth(config: &SynthConfig, out_dir: &Path) -> Result<PathBuf, PipelineError> {
    let corpus = generate_corpus(config)?;
    std::fs::create_dir_all(out_dir).map_err(|source| PipelineError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let path = out_dir.join("synth_manifest.jsonl");
    crate::corpus::write_manifest(&corpus, &path)?;
    Ok(path)
}

/// The full pipeline: features, models, metrics, importance and plots for
/// every requested group, plus a run manifest. Returns the written paths.
pub fn cmd_run(config: &RunConfig) -> Result<Vec<PathBuf>, PipelineError> {
    if config.repetitions == 0 {
        return Err(PipelineError::Usage(
            "repetitions must be at least 1".to_string(),
        ));
    }
    if config.groups.is_empty() {
        return Err(PipelineError::Usage(
            "no feature groups requested".to_string(),
        ));
    }
    let corpus = load_corpus(&config.manifest, &load_options(&config.tier))?;
    let (lexicon, keywords) = load_resources(&config.lexicon, &config.keywords_file)?;

    let mut stage = Stage::new(&config.out_dir);
    let mut metrics_rows = Vec::new();

    for &group in &config.groups {
        // Feature CSVs for train and dev (all records, labeled or not).
        let mut split_matrices = BTreeMap::new();
        for split in [Split::Train, Split::Dev] {
            match group_matrix(
                &corpus,
                config.language,
                group,
                Some(split),
                lexicon.as_ref(),
                keywords.as_ref(),
            ) {
                Ok(matrix) => {
                    stage.add(
                        format!("features_{}_{group}_{split}.csv", config.language),
                        matrix.to_csv(),
                    );
                    split_matrices.insert(split, matrix);
                }
                Err(PipelineError::Feature(FeatureError::EmptySelection { .. }))
                    if split == Split::Dev =>
                {
                    // A corpus without a dev split still gets the rest of
                    // the analysis.
                }
                Err(e) => return Err(e),
            }
        }
        let train_matrix = split_matrices
            .get(&Split::Train)
            .ok_or(PipelineError::Feature(FeatureError::EmptySelection {
                language: config.language,
                split: Some(Split::Train),
            }))?
            .retain_labeled();

        let meta = ModelMeta {
            group: Some(group),
            language: Some(config.language),
            seed: Some(config.seed),
        };
        let (model, _) = train_detailed(&train_matrix, &config.penalty, meta, None)?;
        stage.add(
            format!("model_{}_{group}.glm", config.language),
            crate::glm::model_to_string(&model)?,
        );

        metrics_rows.push(evaluate_model(
            &model,
            &train_matrix,
            group,
            config.language,
            Split::Train,
        )?);
        if let Some(dev) = split_matrices.get(&Split::Dev) {
            let dev_labeled = dev.retain_labeled();
            match evaluate_model(&model, &dev_labeled, group, config.language, Split::Dev) {
                Ok(row) => metrics_rows.push(row),
                // A dev split with one class (or none) has no balanced
                // accuracy; leave the row out rather than fail the run.
                Err(PipelineError::Analysis(AnalysisError::MissingClass { .. })) => {}
                Err(other) => return Err(other),
            }
        }

        let analysis_matrix = match config.split {
            Split::Train => train_matrix.clone(),
            other => split_matrices
                .get(&other)
                .map(|m| m.retain_labeled())
                .filter(|m| m.n_rows() > 0)
                .ok_or(PipelineError::Feature(FeatureError::EmptySelection {
                    language: config.language,
                    split: Some(other),
                }))?,
        };
        let options = PfiOptions {
            repetitions: config.repetitions,
            master_seed: config.seed,
            exhaustive: false,
            jobs: config.jobs,
        };
        let results =
            permutation_importance(&model, &analysis_matrix, Metric::BalancedAccuracy, &options)?;
        stage_pfi(&mut stage, &results, config.language, group, config.seed)?;

        if group == FeatureGroup::Proficiency {
            stage_box_plots(&mut stage, &corpus, config.language, config.split)?;
        }
    }

    let table = emit_metrics_table(&metrics_rows)?;
    stage.add("metrics.csv", table.csv);
    stage.add("metrics.txt", table.text);

    let canonical = config.canonical();
    let mut manifest = String::new();
    manifest.push_str(&format!(
        "tool = narrative-screen {}\n",
        env!("CARGO_PKG_VERSION")
    ));
    manifest.push_str(&format!("seed = {}\n", config.seed));
    manifest.push_str(&format!(
        "config_hash = {}\n",
        sha256_hex(canonical.as_bytes())
    ));
    manifest.push('\n');
    manifest.push_str(&canonical);
    stage.add("run_manifest.txt", manifest);

    stage.flush()
}
