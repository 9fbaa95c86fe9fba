//! Synthetic labeled corpora with planted, configurable group effects.
//!
//! The real child data is private, so end-to-end behavior is exercised on
//! generated narratives instead. Token streams draw from a power-law
//! vocabulary (type counts grow sublinearly with tokens); per-record type
//! budgets couple to token counts so the unique-word effect is recoverable
//! by a model that sees both. Effect sizes are mean shifts between the RI
//! and non-RI groups in pooled-standard-deviation units; positive effects
//! raise the non-RI group, matching the direction the study found for
//! healthy development.
//!
//! One generator stream drives a whole corpus, so equal seeds give equal
//! corpora byte for byte.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;

use crate::corpus::{normalize_text, Corpus, Language, NarrativeRecord, Split, Story, Utterance};

const TOKEN_MEAN: f64 = 120.0;
const TOKEN_SD: f64 = 30.0;
const TOKEN_MIN: usize = 30;
/// Expected types per token (budget slope); couples type budgets to
/// token counts.
const TYPE_SLOPE: f64 = 0.35;
/// Residual spread of the type budget around its token-coupled mean.
const TYPE_NOISE_SD: f64 = 3.0;
const DURATION_MEAN: f64 = 2.0;
const DURATION_SD: f64 = 0.5;
const DURATION_MIN: f64 = 0.2;
const RATE_MEAN: f64 = 12.0;
const RATE_SD: f64 = 2.0;
const RATE_MIN: f64 = 1.0;
const ZIPF_EXPONENT: f64 = 1.1;
/// Base per-utterance usage probability for keyword-effect words.
const KEYWORD_BASE_PROB: f64 = 0.3;

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("infeasible config: {0}")]
    Infeasible(String),
    #[error(transparent)]
    Corpus(#[from] crate::corpus::CorpusError),
}

/// Generator configuration.
#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub language: Language,
    pub train_records: usize,
    pub dev_records: usize,
    pub test_records: usize,
    /// Probability that a record is labeled RI = 1.
    pub ri_rate: f64,
    /// Words in the synthetic vocabulary (at least 20).
    pub vocabulary_size: usize,
    /// Mean shift of the per-record unique-word budget between classes, in
    /// pooled standard deviations of the realized unique-word count.
    pub unique_words_effect: f64,
    /// Mean shift of utterance durations between classes, in duration
    /// standard deviations.
    pub utterance_length_effect: f64,
    /// Mean shift of articulation rate between classes, in rate standard
    /// deviations. When nonzero, durations derive from the sampled rate.
    pub articulation_rate_effect: f64,
    /// Words whose per-utterance usage probability differs by class:
    /// `(word, delta)` uses `0.3 + delta/2` for non-RI and `0.3 - delta/2`
    /// for RI records.
    pub keyword_effects: Vec<(String, f64)>,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            language: Language::Afrikaans,
            train_records: 200,
            dev_records: 38,
            test_records: 28,
            ri_rate: 0.36,
            vocabulary_size: 120,
            unique_words_effect: 0.0,
            utterance_length_effect: 0.0,
            articulation_rate_effect: 0.0,
            keyword_effects: Vec::new(),
            seed: 0,
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<(), SynthError> {
        if !(self.ri_rate > 0.0 && self.ri_rate < 1.0) {
            return Err(SynthError::Infeasible(format!(
                "ri_rate must lie strictly between 0 and 1, got {}",
                self.ri_rate
            )));
        }
        if self.vocabulary_size < 20 {
            return Err(SynthError::Infeasible(format!(
                "vocabulary_size must be at least 20, got {}",
                self.vocabulary_size
            )));
        }
        if self.train_records + self.dev_records + self.test_records == 0 {
            return Err(SynthError::Infeasible("no records requested".to_string()));
        }
        for effect in [
            self.unique_words_effect,
            self.utterance_length_effect,
            self.articulation_rate_effect,
        ] {
            if !effect.is_finite() {
                return Err(SynthError::Infeasible(format!(
                    "effect size {effect} is not finite"
                )));
            }
        }
        if DURATION_MEAN - self.utterance_length_effect.abs() * DURATION_SD <= 0.0 {
            return Err(SynthError::Infeasible(
                "utterance_length_effect pushes mean duration to zero or below".to_string(),
            ));
        }
        for (word, delta) in &self.keyword_effects {
            if !delta.is_finite() {
                return Err(SynthError::Infeasible(format!(
                    "keyword effect for \"{word}\" is not finite"
                )));
            }
            let normalized = normalize_text(word);
            if normalized.len() != 1 || normalized.tokens()[0] != *word {
                return Err(SynthError::Infeasible(format!(
                    "keyword \"{word}\" is not a normalized token"
                )));
            }
        }
        Ok(())
    }

    /// Pooled standard deviation of the realized unique-word count implied
    /// by the generator parameters (token coupling plus residual noise).
    pub fn unique_words_pooled_sd() -> f64 {
        (TYPE_SLOPE * TYPE_SLOPE * TOKEN_SD * TOKEN_SD + TYPE_NOISE_SD * TYPE_NOISE_SD).sqrt()
    }
}

struct Generator {
    rng: ChaCha8Rng,
    zipf_weights: Vec<f64>,
}

impl Generator {
    fn normal(&mut self, mean: f64, sd: f64) -> f64 {
        Normal::new(mean, sd)
            .expect("finite parameters")
            .sample(&mut self.rng)
    }

    fn truncated_normal(&mut self, mean: f64, sd: f64, minimum: f64) -> f64 {
        for _ in 0..100 {
            let value = self.normal(mean, sd);
            if value >= minimum {
                return value;
            }
        }
        minimum
    }

    fn bernoulli(&mut self, p: f64) -> bool {
        self.rng.random::<f64>() < p
    }

    /// Weighted sampling without replacement (exponential-keys method):
    /// the `count` vocabulary ranks with the largest `u^(1/w)` keys.
    fn choose_word_ranks(&mut self, count: usize) -> Vec<usize> {
        let mut keyed: Vec<(f64, usize)> = Vec::with_capacity(self.zipf_weights.len());
        for rank in 0..self.zipf_weights.len() {
            let weight = self.zipf_weights[rank];
            let u: f64 = self.rng.random();
            keyed.push((u.powf(1.0 / weight), rank));
        }
        keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let mut ranks: Vec<usize> = keyed
            .into_iter()
            .take(count)
            .map(|(_, rank)| rank)
            .collect();
        ranks.sort_unstable();
        ranks
    }
}

fn word_for_rank(rank: usize) -> String {
    format!("w{rank:03}")
}

/// Generates a corpus according to the config. Deterministic in the seed;
/// the output always passes corpus validation.
pub fn generate_corpus(config: &SynthConfig) -> Result<Corpus, SynthError> {
    config.validate()?;
    let zipf_weights: Vec<f64> = (0..config.vocabulary_size)
        .map(|k| 1.0 / ((k + 1) as f64).powf(ZIPF_EXPONENT))
        .collect();
    let mut generator = Generator {
        rng: ChaCha8Rng::seed_from_u64(config.seed),
        zipf_weights,
    };

    let mut records = Vec::new();
    let splits = [
        (Split::Train, config.train_records),
        (Split::Dev, config.dev_records),
        (Split::Test, config.test_records),
    ];
    for (split, count) in splits {
        for index in 0..count {
            let child_id = format!("syn-{split}-{index:04}");
            records.push(generate_record(config, &mut generator, child_id, split)?);
        }
    }
    Ok(Corpus::new(records)?)
}

fn generate_record(
    config: &SynthConfig,
    generator: &mut Generator,
    child_id: String,
    split: Split,
) -> Result<NarrativeRecord, SynthError> {
    let ri = u8::from(generator.bernoulli(config.ri_rate));
    // Positive effects raise the non-RI group.
    let class_sign = if ri == 1 { -1.0 } else { 1.0 };
    let story = if generator.bernoulli(0.5) {
        Story::Dog
    } else {
        Story::Cat
    };

    let tokens_total =
        (generator.normal(TOKEN_MEAN, TOKEN_SD).round() as i64).max(TOKEN_MIN as i64) as usize;

    let type_shift =
        class_sign * config.unique_words_effect * SynthConfig::unique_words_pooled_sd() / 2.0;
    let type_budget =
        TYPE_SLOPE * tokens_total as f64 + type_shift + generator.normal(0.0, TYPE_NOISE_SD);
    let type_budget = (type_budget.round() as i64)
        .clamp(5, tokens_total.min(config.vocabulary_size) as i64) as usize;

    // Record vocabulary: `type_budget` distinct words, frequent ranks
    // favored; every chosen word appears at least once so the realized
    // type count equals the budget.
    let ranks = generator.choose_word_ranks(type_budget);
    let weights: Vec<f64> = ranks
        .iter()
        .map(|&rank| generator.zipf_weights[rank])
        .collect();
    let mut tokens: Vec<String> = ranks.iter().map(|&rank| word_for_rank(rank)).collect();
    if tokens_total > tokens.len() {
        let index = WeightedIndex::new(&weights)
            .map_err(|e| SynthError::Infeasible(format!("degenerate vocabulary weights: {e}")))?;
        for _ in 0..tokens_total - tokens.len() {
            let pick = index.sample(&mut generator.rng);
            tokens.push(word_for_rank(ranks[pick]));
        }
    }
    // Shuffle so first occurrences are not clustered at the front.
    for i in (1..tokens.len()).rev() {
        let j = generator.rng.random_range(0..=i);
        tokens.swap(i, j);
    }

    let utterance_count = generator.rng.random_range(4..=12).min(tokens.len());
    let base = tokens.len() / utterance_count;
    let remainder = tokens.len() % utterance_count;
    let mut utterance_tokens: Vec<Vec<String>> = Vec::with_capacity(utterance_count);
    let mut cursor = 0usize;
    for u in 0..utterance_count {
        let size = base + usize::from(u < remainder);
        utterance_tokens.push(tokens[cursor..cursor + size].to_vec());
        cursor += size;
    }

    for (word, delta) in &config.keyword_effects {
        let p = (KEYWORD_BASE_PROB + class_sign * delta / 2.0).clamp(0.0, 1.0);
        for utterance in utterance_tokens.iter_mut() {
            if generator.bernoulli(p) {
                let position = generator.rng.random_range(0..=utterance.len());
                utterance.insert(position, word.clone());
            }
        }
    }

    let duration_shift = class_sign * config.utterance_length_effect * DURATION_SD / 2.0;
    let rate_shift = class_sign * config.articulation_rate_effect * RATE_SD / 2.0;
    let mut utterances = Vec::with_capacity(utterance_count);
    let mut clock = 0.0;
    for words in &utterance_tokens {
        let text = words.join(" ");
        let duration = if config.articulation_rate_effect != 0.0 {
            let characters: usize = words.iter().map(|w| w.chars().count()).sum();
            let rate = generator.truncated_normal(RATE_MEAN + rate_shift, RATE_SD, RATE_MIN);
            (characters as f64 / rate).max(DURATION_MIN)
        } else {
            generator.truncated_normal(DURATION_MEAN + duration_shift, DURATION_SD, DURATION_MIN)
        };
        let start = clock;
        let end = start + duration;
        utterances.push(Utterance { text, start, end });
        clock = end + 0.25 + 0.5 * generator.rng.random::<f64>();
    }

    Ok(NarrativeRecord {
        child_id,
        language: config.language,
        story,
        utterances,
        ri: Some(ri),
        split,
        pos_tags: Default::default(),
    })
}
