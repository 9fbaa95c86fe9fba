//! Thin command-line front end over [`narrative_screen::pipeline`].
//!
//! Flags override a `key = value` config file (`--config`), which overrides
//! defaults. Exit codes: 0 success, 1 I/O or usage error, 2 validation
//! failure, 3 numerical failure.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use narrative_screen::corpus::{Language, Split};
use narrative_screen::features::FeatureGroup;
use narrative_screen::glm::{PenaltyConfig, PenaltyKind};
use narrative_screen::pipeline::{
    cmd_evaluate, cmd_featurize, cmd_keywords, cmd_pfi, cmd_plot_boxes, cmd_plot_pfi_csv, cmd_run,
    cmd_synth, cmd_train, cmd_validate, PipelineError, RunConfig,
};
use narrative_screen::report::emit_metrics_table;
use narrative_screen::synth::SynthConfig;

#[derive(Parser)]
#[command(
    name = "narrative-screen",
    version,
    about = "Oral-narrative screening pipeline"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by the data-driven subcommands. Every value is optional so
/// a config file can supply it.
#[derive(Args, Clone, Default)]
struct Shared {
    /// Line-delimited JSON corpus manifest.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Language to analyze: afrikaans or isixhosa.
    #[arg(long)]
    language: Option<String>,
    /// Feature group(s): proficiency, grammatical or keywords.
    #[arg(long = "group")]
    groups: Vec<String>,
    /// POS lexicon file (word<TAB>TAG).
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Keyword spec file produced by the keywords subcommand.
    #[arg(long = "keywords-file")]
    keywords_file: Option<PathBuf>,
    /// Inverse regularization strength.
    #[arg(long = "C")]
    c: Option<f64>,
    /// Penalty kind: l1 or l2.
    #[arg(long)]
    penalty: Option<String>,
    /// Permutation repetitions per feature.
    #[arg(long)]
    repetitions: Option<usize>,
    /// Master seed for all randomness.
    #[arg(long)]
    seed: Option<u64>,
    /// Split to analyze: train, dev or test.
    #[arg(long)]
    split: Option<String>,
    /// Output directory (or file, where a subcommand writes one file).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for featurization and importance.
    #[arg(long)]
    jobs: Option<usize>,
    /// TextGrid tier name holding child speech.
    #[arg(long)]
    tier: Option<String>,
    /// key = value config file supplying defaults for the flags above.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Check a manifest and its transcripts; exit 2 on violations.
    Validate(Shared),
    /// Export feature CSVs for one group.
    Featurize(Shared),
    /// Select 10 keywords from the top 20 training words via L1 fits.
    Keywords(Shared),
    /// Train one group model on the training split.
    Train(Shared),
    /// Score a saved model on a split.
    Evaluate {
        #[command(flatten)]
        shared: Shared,
        /// Saved model file (.glm).
        #[arg(long)]
        model: PathBuf,
    },
    /// Permutation feature importance for a saved model.
    Pfi {
        #[command(flatten)]
        shared: Shared,
        /// Saved model file (.glm).
        #[arg(long)]
        model: PathBuf,
    },
    /// Render plots: box plots from a manifest, or an SVG from a PFI CSV.
    Plot {
        #[command(flatten)]
        shared: Shared,
        /// Re-render this importance CSV instead of reading a manifest.
        #[arg(long = "pfi-csv")]
        pfi_csv: Option<PathBuf>,
    },
    /// The full pipeline: features, models, metrics, importance, plots.
    Run(Shared),
    /// Generate a synthetic corpus manifest with planted effects.
    Synth {
        #[command(flatten)]
        shared: Shared,
        #[arg(long, default_value_t = 200)]
        train_records: usize,
        #[arg(long, default_value_t = 38)]
        dev_records: usize,
        #[arg(long, default_value_t = 28)]
        test_records: usize,
        #[arg(long, default_value_t = 0.36)]
        ri_rate: f64,
        #[arg(long, default_value_t = 120)]
        vocab_size: usize,
        #[arg(long, default_value_t = 0.0)]
        effect_unique_words: f64,
        #[arg(long, default_value_t = 0.0)]
        effect_utterance_length: f64,
        #[arg(long, default_value_t = 0.0)]
        effect_articulation_rate: f64,
        /// Planted keyword effect as word:delta; repeatable.
        #[arg(long = "keyword-effect")]
        keyword_effects: Vec<String>,
    },
}

/// Values merged from flags over the config file over defaults.
struct Merged {
    shared: Shared,
    file: BTreeMap<String, String>,
}

impl Merged {
    fn new(shared: Shared) -> Result<Self, PipelineError> {
        let file = match &shared.config {
            Some(path) => {
                let content =
                    std::fs::read_to_string(path).map_err(|source| PipelineError::Io {
                        path: path.clone(),
                        source,
                    })?;
                parse_config_file(&content)
                    .map_err(|m| PipelineError::Usage(format!("{}: {m}", path.display())))?
            }
            None => BTreeMap::new(),
        };
        Ok(Self { shared, file })
    }

    fn parsed<T>(&self, flag: Option<&T>, key: &str) -> Result<Option<T>, PipelineError>
    where
        T: FromStr + Clone,
        T::Err: std::fmt::Display,
    {
        if let Some(value) = flag {
            return Ok(Some(value.clone()));
        }
        match self.file.get(key) {
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|e| PipelineError::Usage(format!("config {key}: {e}"))),
            None => Ok(None),
        }
    }

    fn manifest(&self) -> Result<PathBuf, PipelineError> {
        self.parsed(self.shared.manifest.as_ref(), "manifest")?
            .ok_or_else(|| PipelineError::Usage("--manifest is required".to_string()))
    }

    fn language(&self) -> Result<Language, PipelineError> {
        let raw = self
            .parsed(self.shared.language.as_ref(), "language")?
            .ok_or_else(|| PipelineError::Usage("--language is required".to_string()))?;
        raw.parse::<Language>()
            .map_err(|e| PipelineError::Usage(e.to_string()))
    }

    fn groups(&self) -> Result<Vec<FeatureGroup>, PipelineError> {
        let raw: Vec<String> = if !self.shared.groups.is_empty() {
            self.shared.groups.clone()
        } else if let Some(value) = self.file.get("group") {
            value.split(',').map(|s| s.trim().to_string()).collect()
        } else {
            Vec::new()
        };
        raw.iter()
            .map(|g| g.parse::<FeatureGroup>().map_err(PipelineError::Usage))
            .collect()
    }

    fn one_group(&self) -> Result<FeatureGroup, PipelineError> {
        let groups = self.groups()?;
        match groups.len() {
            0 => Err(PipelineError::Usage("--group is required".to_string())),
            1 => Ok(groups[0]),
            _ => Err(PipelineError::Usage(
                "this subcommand takes a single --group".to_string(),
            )),
        }
    }

    fn penalty(&self, default_kind: PenaltyKind) -> Result<PenaltyConfig, PipelineError> {
        let kind = match self.parsed(self.shared.penalty.as_ref(), "penalty")? {
            Some(raw) => raw.parse::<PenaltyKind>().map_err(PipelineError::Usage)?,
            None => default_kind,
        };
        let c = self.parsed(self.shared.c.as_ref(), "c")?.unwrap_or(1.0);
        Ok(PenaltyConfig {
            kind,
            c,
            ..PenaltyConfig::default()
        })
    }

    fn split(&self, default: Split) -> Result<Split, PipelineError> {
        match self.parsed(self.shared.split.as_ref(), "split")? {
            Some(raw) => raw
                .parse::<Split>()
                .map_err(|e| PipelineError::Usage(e.to_string())),
            None => Ok(default),
        }
    }

    fn split_opt(&self) -> Result<Option<Split>, PipelineError> {
        match self.parsed(self.shared.split.as_ref(), "split")? {
            Some(raw) => raw
                .parse::<Split>()
                .map(Some)
                .map_err(|e| PipelineError::Usage(e.to_string())),
            None => Ok(None),
        }
    }

    fn seed(&self) -> Result<u64, PipelineError> {
        Ok(self.parsed(self.shared.seed.as_ref(), "seed")?.unwrap_or(0))
    }

    fn repetitions(&self) -> Result<usize, PipelineError> {
        Ok(self
            .parsed(self.shared.repetitions.as_ref(), "repetitions")?
            .unwrap_or(100))
    }

    fn jobs(&self) -> Result<usize, PipelineError> {
        Ok(self
            .parsed(self.shared.jobs.as_ref(), "jobs")?
            .unwrap_or(1)
            .max(1))
    }

    fn out(&self, default: &str) -> Result<PathBuf, PipelineError> {
        Ok(self
            .parsed(self.shared.out.as_ref(), "out")?
            .unwrap_or_else(|| PathBuf::from(default)))
    }

    fn tier(&self) -> Result<Option<String>, PipelineError> {
        self.parsed(self.shared.tier.as_ref(), "tier")
    }

    fn lexicon(&self) -> Result<Option<PathBuf>, PipelineError> {
        self.parsed(self.shared.lexicon.as_ref(), "lexicon")
    }

    fn keywords_file(&self) -> Result<Option<PathBuf>, PipelineError> {
        self.parsed(self.shared.keywords_file.as_ref(), "keywords-file")
    }
}

fn parse_config_file(content: &str) -> Result<BTreeMap<String, String>, String> {
    let mut map = BTreeMap::new();
    for (index, line) in content.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (key, value) = trimmed
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected key = value", index + 1))?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn parse_keyword_effects(raw: &[String]) -> Result<Vec<(String, f64)>, PipelineError> {
    raw.iter()
        .map(|entry| {
            let (word, delta) = entry.split_once(':').ok_or_else(|| {
                PipelineError::Usage(format!(
                    "--keyword-effect needs word:delta, got \"{entry}\""
                ))
            })?;
            let delta: f64 = delta
                .parse()
                .map_err(|e| PipelineError::Usage(format!("--keyword-effect {entry}: {e}")))?;
            Ok((word.to_string(), delta))
        })
        .collect()
}

fn dispatch(command: Command) -> Result<(), PipelineError> {
    match command {
        Command::Validate(shared) => {
            let merged = Merged::new(shared)?;
            let count = cmd_validate(&merged.manifest()?, merged.tier()?)?;
            println!("ok: {count} records");
            Ok(())
        }
        Command::Featurize(shared) => {
            let merged = Merged::new(shared)?;
            let written = cmd_featurize(
                &merged.manifest()?,
                merged.language()?,
                merged.one_group()?,
                merged.split_opt()?,
                merged.lexicon()?,
                merged.keywords_file()?,
                merged.tier()?,
                &merged.out("out")?,
            )?;
            for path in written {
                println!("{}", path.display());
            }
            Ok(())
        }
        Command::Keywords(shared) => {
            let merged = Merged::new(shared)?;
            let out = merged.out("keywords.kw")?;
            let selection = cmd_keywords(
                &merged.manifest()?,
                merged.language()?,
                merged.tier()?,
                &out,
            )?;
            println!(
                "selected {} keywords at C = {}: {}",
                selection.spec.keywords().len(),
                selection.chosen_c,
                selection.spec.keywords().join(", ")
            );
            println!("{}", out.display());
            Ok(())
        }
        Command::Train(shared) => {
            let merged = Merged::new(shared)?;
            let group = merged.one_group()?;
            let out = merged.out(&format!("model_{group}.glm"))?;
            let model = cmd_train(
                &merged.manifest()?,
                merged.language()?,
                group,
                merged.penalty(PenaltyKind::L2)?,
                merged.lexicon()?,
                merged.keywords_file()?,
                merged.tier()?,
                merged.seed()?,
                &out,
            )?;
            println!(
                "trained {} model ({} features) -> {}",
                group,
                model.feature_names.len(),
                out.display()
            );
            Ok(())
        }
        Command::Evaluate { shared, model } => {
            let merged = Merged::new(shared)?;
            let row = cmd_evaluate(
                &merged.manifest()?,
                &model,
                merged.split(Split::Dev)?,
                merged.lexicon()?,
                merged.keywords_file()?,
                merged.tier()?,
            )?;
            let table = emit_metrics_table(&[row])?;
            print!("{}", table.text);
            Ok(())
        }
        Command::Pfi { shared, model } => {
            let merged = Merged::new(shared)?;
            let results = cmd_pfi(
                &merged.manifest()?,
                &model,
                merged.split(Split::Train)?,
                merged.repetitions()?,
                merged.seed()?,
                merged.jobs()?,
                merged.lexicon()?,
                merged.keywords_file()?,
                merged.tier()?,
                &merged.out("out")?,
            )?;
            for result in results {
                println!(
                    "{}: mean drop {:.4} ({})",
                    result.feature_name,
                    result.mean_drop,
                    result.coefficient_sign.as_str()
                );
            }
            Ok(())
        }
        Command::Plot { shared, pfi_csv } => {
            let merged = Merged::new(shared)?;
            let out = merged.out("out")?;
            let written = match pfi_csv {
                Some(csv) => cmd_plot_pfi_csv(&csv, &out)?,
                None => cmd_plot_boxes(
                    &merged.manifest()?,
                    merged.language()?,
                    merged.split(Split::Train)?,
                    merged.tier()?,
                    &out,
                )?,
            };
            for path in written {
                println!("{}", path.display());
            }
            Ok(())
        }
        Command::Run(shared) => {
            let merged = Merged::new(shared)?;
            let groups = {
                let groups = merged.groups()?;
                if groups.is_empty() {
                    vec![FeatureGroup::Proficiency]
                } else {
                    groups
                }
            };
            let config = RunConfig {
                manifest: merged.manifest()?,
                language: merged.language()?,
                groups,
                lexicon: merged.lexicon()?,
                keywords_file: merged.keywords_file()?,
                penalty: merged.penalty(PenaltyKind::L2)?,
                repetitions: merged.repetitions()?,
                seed: merged.seed()?,
                split: merged.split(Split::Train)?,
                tier: merged.tier()?,
                jobs: merged.jobs()?,
                out_dir: merged.out("out")?,
            };
            let written = cmd_run(&config)?;
            for path in written {
                println!("{}", path.display());
            }
            Ok(())
        }
        Command::Synth {
            shared,
            train_records,
            dev_records,
            test_records,
            ri_rate,
            vocab_size,
            effect_unique_words,
            effect_utterance_length,
            effect_articulation_rate,
            keyword_effects,
        } => {
            let merged = Merged::new(shared)?;
            let language = match merged.parsed(merged.shared.language.as_ref(), "language")? {
                Some(raw) => raw
                    .parse::<Language>()
                    .map_err(|e| PipelineError::Usage(e.to_string()))?,
                None => Language::Afrikaans,
            };
            let config = SynthConfig {
                language,
                train_records,
                dev_records,
                test_records,
                ri_rate,
                vocabulary_size: vocab_size,
                unique_words_effect: effect_unique_words,
                utterance_length_effect: effect_utterance_length,
                articulation_rate_effect: effect_articulation_rate,
                keyword_effects: parse_keyword_effects(&keyword_effects)?,
                seed: merged.seed()?,
            };
            let path = cmd_synth(&config, &merged.out("out")?)?;
            println!("{}", path.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::from(error.exit_code())
        }
    }
}
