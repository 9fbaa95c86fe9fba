//! Flat-text model serialization (`glm-v1`).
//!
//! Weights and the intercept are written with Rust's shortest round-trip
//! float formatting, so save/load reproduces the parameters bit for bit.

use std::collections::BTreeMap;
use std::path::Path;

use crate::corpus::Language;
use crate::features::FeatureGroup;

use super::{GlmError, ModelMeta, PenaltyConfig, PenaltyKind, TrainedModel};

const VERSION: &str = "glm-v1";

pub fn to_string(model: &TrainedModel) -> Result<String, GlmError> {
    for name in &model.feature_names {
        if name.contains(',') || name.chars().any(char::is_whitespace) || name.is_empty() {
            return Err(GlmError::ModelFile(format!(
                "feature name \"{name}\" cannot be serialized (must be non-empty without commas or whitespace)"
            )));
        }
    }
    let mut out = String::new();
    out.push_str(&format!("version = {VERSION}\n"));
    out.push_str(&format!("penalty = {}\n", model.penalty.kind));
    out.push_str(&format!("c = {}\n", model.penalty.c));
    out.push_str(&format!("tolerance = {}\n", model.penalty.tolerance));
    out.push_str(&format!(
        "max_iterations = {}\n",
        model.penalty.max_iterations
    ));
    if let Some(group) = model.meta.group {
        out.push_str(&format!("group = {group}\n"));
    }
    if let Some(language) = model.meta.language {
        out.push_str(&format!("language = {language}\n"));
    }
    if let Some(seed) = model.meta.seed {
        out.push_str(&format!("seed = {seed}\n"));
    }
    out.push_str(&format!(
        "feature_names = {}\n",
        model.feature_names.join(",")
    ));
    let weights: Vec<String> = model.weights.iter().map(|w| w.to_string()).collect();
    out.push_str(&format!("weights = {}\n", weights.join(" ")));
    out.push_str(&format!("intercept = {}\n", model.intercept));
    Ok(out)
}

pub fn from_string(content: &str) -> Result<TrainedModel, GlmError> {
    let mut fields: BTreeMap<&str, &str> = BTreeMap::new();
    for line in content.lines() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (key, value) = trimmed.split_once('=').ok_or_else(|| {
            GlmError::ModelFile(format!("expected key = value, got \"{trimmed}\""))
        })?;
        fields.insert(key.trim(), value.trim());
    }

    let version = require(&fields, "version")?;
    if version != VERSION {
        return Err(GlmError::ModelFile(format!(
            "unsupported version {version}"
        )));
    }
    let kind = match require(&fields, "penalty")? {
        "l2" => PenaltyKind::L2,
        "l1" => PenaltyKind::L1,
        other => return Err(GlmError::ModelFile(format!("unknown penalty {other}"))),
    };
    let penalty = PenaltyConfig {
        kind,
        c: parse_float(&fields, "c")?,
        tolerance: parse_float(&fields, "tolerance")?,
        max_iterations: require(&fields, "max_iterations")?
            .parse()
            .map_err(|e| GlmError::ModelFile(format!("max_iterations: {e}")))?,
    };
    let meta = ModelMeta {
        group: match fields.get("group") {
            Some(raw) => Some(raw.parse::<FeatureGroup>().map_err(GlmError::ModelFile)?),
            None => None,
        },
        language: match fields.get("language") {
            Some(raw) => Some(
                raw.parse::<Language>()
                    .map_err(|e| GlmError::ModelFile(e.to_string()))?,
            ),
            None => None,
        },
        seed: match fields.get("seed") {
            Some(raw) => Some(
                raw.parse()
                    .map_err(|e| GlmError::ModelFile(format!("seed: {e}")))?,
            ),
            None => None,
        },
    };
    let feature_names: Vec<String> = require(&fields, "feature_names")?
        .split(',')
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect();
    let weights: Vec<f64> = require(&fields, "weights")?
        .split_whitespace()
        .map(|w| {
            w.parse()
                .map_err(|e| GlmError::ModelFile(format!("weight \"{w}\": {e}")))
        })
        .collect::<Result<_, _>>()?;
    let intercept = parse_float(&fields, "intercept")?;
    if weights.len() != feature_names.len() {
        return Err(GlmError::ModelFile(format!(
            "{} weights for {} feature names",
            weights.len(),
            feature_names.len()
        )));
    }
    TrainedModel::new(feature_names, weights, intercept, penalty, meta)
}

pub fn save(model: &TrainedModel, path: &Path) -> Result<(), GlmError> {
    std::fs::write(path, to_string(model)?)
        .map_err(|e| GlmError::ModelFile(format!("cannot write {}: {e}", path.display())))
}

pub fn load(path: &Path) -> Result<TrainedModel, GlmError> {
    let content = std::fs::read_to_string(path)
        .map_err(|e| GlmError::ModelFile(format!("cannot read {}: {e}", path.display())))?;
    from_string(&content)
}

fn require<'a>(fields: &BTreeMap<&str, &'a str>, key: &str) -> Result<&'a str, GlmError> {
    fields
        .get(key)
        .copied()
        .ok_or_else(|| GlmError::ModelFile(format!("missing field {key}")))
}

fn parse_float(fields: &BTreeMap<&str, &str>, key: &str) -> Result<f64, GlmError> {
    require(fields, key)?
        .parse()
        .map_err(|e| GlmError::ModelFile(format!("{key}: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let model = TrainedModel::new(
            vec!["tokens".to_string(), "unique_words".to_string()],
            vec![0.1 + 0.2, -1.0 / 3.0],
            std::f64::consts::PI,
            PenaltyConfig::default(),
            ModelMeta {
                group: Some(FeatureGroup::Proficiency),
                language: Some(Language::Afrikaans),
                seed: Some(42),
            },
        )
        .unwrap();
        let text = to_string(&model).unwrap();
        let reloaded = from_string(&text).unwrap();
        assert_eq!(reloaded.weights[0].to_bits(), model.weights[0].to_bits());
        assert_eq!(reloaded.weights[1].to_bits(), model.weights[1].to_bits());
        assert_eq!(reloaded.intercept.to_bits(), model.intercept.to_bits());
        assert_eq!(reloaded.feature_names, model.feature_names);
        assert_eq!(reloaded.meta.seed, Some(42));
        assert!(text.starts_with("version = glm-v1\n"));
    }

    #[test]
    fn rejects_malformed_documents() {
        assert!(from_string("version = glm-v2\n").is_err());
        let missing_weights = "version = glm-v1\npenalty = l2\nc = 1\ntolerance = 0.00000001\nmax_iterations = 1000\nfeature_names = a,b\nweights = 1\nintercept = 0\n";
        assert!(from_string(missing_weights).is_err());
    }
}
