//! Experiment specification schema: JSON in, dispatchable experiments out.

use anyhow::{bail, Context};
use funvol::convex::ConvexFunction;
use funvol::corpus;
use funvol::density::Density;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Top-level experiment file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub experiments: Vec<ExperimentDef>,
}

/// Reference to a density: a corpus id, a descriptor file, or an inline
/// descriptor.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DensityRef {
    Corpus { corpus: String },
    File { file: String },
    Inline { inline: Box<Density> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FunctionRef {
    Corpus { corpus: String },
    File { file: String },
    Inline { inline: Box<ConvexFunction> },
}

/// Expected oracle value and tolerance for assertion-type experiments.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Expectation {
    pub oracle: f64,
    pub tolerance: f64,
}

/// One experiment: the operation name plus its inputs and parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentDef {
    pub id: String,
    pub operation: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<DensityRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function: Option<FunctionRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function2: Option<FunctionRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axes: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<BoxDef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<Expectation>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoxDef {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl ExperimentSpec {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read experiment spec {}", path.display()))?;
        let spec: ExperimentSpec = serde_json::from_str(&text)
            .with_context(|| format!("invalid experiment spec {}", path.display()))?;
        let mut seen = std::collections::HashSet::new();
        for e in &spec.experiments {
            if !seen.insert(&e.id) {
                bail!("duplicate experiment id {:?}", e.id);
            }
        }
        Ok(spec)
    }
}

pub fn resolve_density(r: &DensityRef, base: &Path) -> anyhow::Result<Density> {
    match r {
        DensityRef::Corpus { corpus: id } => corpus::density(id)
            .with_context(|| format!("unknown corpus density id {id:?}")),
        DensityRef::File { file } => {
            let path = base.join(file);
            let text = std::fs::read_to_string(&path)
                .with_context(|| format!("cannot read density file {}", path.display()))?;
            serde_json::from_str(&text)
                .with_context(|| format!("invalid density descriptor {}", path.display()))
        }
        DensityRef::Inline { inline } => Ok((**inline).clone()),
    }
}

pub fn resolve_function(r: &FunctionRef, base: &Path) -> anyhow::Result<ConvexFunction> {
    match r {
        FunctionRef::Corpus { corpus: id } => corpus::function(id)
            .with_context(|| format!("unknown corpus function id {id:?}")),
        FunctionRef::File { file } => {
            let path = base.join(file);
            let text = std::fs::read_to_string(&path)
                .with_context(|| format!("cannot read function file {}", path.display()))?;
            serde_json::from_str(&text)
                .with_context(|| format!("invalid function descriptor {}", path.display()))
        }
        FunctionRef::Inline { inline } => Ok((**inline).clone()),
    }
}
