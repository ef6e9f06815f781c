//! Versioned JSON serialization of trained PPM-C models.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use faultrace_core::vmm::VmmModel;
use faultrace_core::Symbol;

const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    max_order: usize,
    alphabet_size: usize,
    /// context symbol ids -> [(symbol id, count), ...]
    contexts: Vec<(Vec<u32>, Vec<(u32, u32)>)>,
}

pub fn to_json(model: &VmmModel) -> Result<String> {
    let contexts = model
        .contexts()
        .map(|(ctx, stats)| {
            (
                ctx.iter().map(|s| s.0).collect(),
                stats.successors().map(|(s, c)| (s.0, c)).collect(),
            )
        })
        .collect();
    let file = ModelFile {
        version: FORMAT_VERSION,
        max_order: model.max_order(),
        alphabet_size: model.alphabet_size(),
        contexts,
    };
    Ok(serde_json::to_string_pretty(&file)?)
}

pub fn from_json(text: &str) -> Result<VmmModel> {
    let file: ModelFile = serde_json::from_str(text).context("cannot parse model file")?;
    if file.version != FORMAT_VERSION {
        bail!("unsupported model format version {}", file.version);
    }
    let entries = file.contexts.into_iter().map(|(ctx, counts)| {
        (
            ctx.into_iter().map(Symbol).collect(),
            counts.into_iter().map(|(s, c)| (Symbol(s), c)).collect(),
        )
    });
    Ok(VmmModel::from_parts(file.max_order, file.alphabet_size, entries)?)
}

pub fn save(model: &VmmModel, path: &Path) -> Result<()> {
    fs::write(path, to_json(model)?)
        .with_context(|| format!("cannot write model to {}", path.display()))
}

pub fn load(path: &Path) -> Result<VmmModel> {
    from_json(
        &fs::read_to_string(path)
            .with_context(|| format!("cannot read model from {}", path.display()))?,
    )
}
