//! Campaign spec files (TOML) and on-disk campaign generation with ground
//! truth.
//!
//! A campaign spec defines the workload model, the noise levels, the fault
//! catalog and the campaign sizes. `generate` materializes the trace-file
//! layout (`faultfree/`, `faulty/`, `idle/`) plus `ground_truth.json`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use faultrace_core::sim;
use faultrace_core::{EventKey, FaultEdit, FaultSpec, NoiseSpec, Symbol, WorkloadSpec};

use crate::ingest::write_trace;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EventTypeDef {
    pub sender: String,
    pub api: String,
    pub status: String,
}

impl EventTypeDef {
    fn key(&self) -> EventKey {
        EventKey { sender: self.sender.clone(), api: self.api.clone(), status: self.status.clone() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct NoiseDef {
    #[serde(default)]
    pub swap_prob: f64,
    #[serde(default)]
    pub optional_event_prob: f64,
    /// (backbone position, event type index) pairs.
    #[serde(default)]
    pub optional_events: Vec<(usize, u32)>,
    #[serde(default)]
    pub background_prob: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum EditDef {
    Insert { position: usize, symbol: u32 },
    Delete { position: usize },
    ReplaceStatus { position: usize, symbol: u32 },
}

impl EditDef {
    fn to_core(&self) -> FaultEdit {
        match *self {
            EditDef::Insert { position, symbol } => {
                FaultEdit::Insert { position, symbol: Symbol(symbol) }
            }
            EditDef::Delete { position } => FaultEdit::Delete { position },
            EditDef::ReplaceStatus { position, symbol } => {
                FaultEdit::ReplaceStatus { position, symbol: Symbol(symbol) }
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FaultDef {
    pub mode_label: String,
    pub edits: Vec<EditDef>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CampaignSizes {
    pub n_faultfree: usize,
    pub n_per_fault: usize,
}

/// The whole campaign spec file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CampaignSpec {
    pub name: String,
    pub seed: u64,
    pub event_types: Vec<EventTypeDef>,
    /// Backbone as event-type indices.
    pub backbone: Vec<u32>,
    #[serde(default)]
    pub idle_types: Vec<u32>,
    #[serde(default)]
    pub noise: NoiseDef,
    pub campaign: CampaignSizes,
    pub faults: Vec<FaultDef>,
}

impl CampaignSpec {
    pub fn from_toml(text: &str) -> Result<CampaignSpec> {
        let spec: CampaignSpec = toml::from_str(text).context("cannot parse campaign spec")?;
        if spec.faults.is_empty() {
            bail!("campaign spec declares no faults");
        }
        if spec.campaign.n_faultfree == 0 || spec.campaign.n_per_fault == 0 {
            bail!("campaign sizes must be positive");
        }
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<CampaignSpec> {
        CampaignSpec::from_toml(
            &fs::read_to_string(path)
                .with_context(|| format!("cannot read campaign spec {}", path.display()))?,
        )
    }

    pub fn workload(&self) -> WorkloadSpec {
        WorkloadSpec {
            name: self.name.clone(),
            event_types: self.event_types.iter().map(EventTypeDef::key).collect(),
            backbone: self.backbone.iter().map(|&i| Symbol(i)).collect(),
            noise: NoiseSpec {
                swap_prob: self.noise.swap_prob,
                optional_event_prob: self.noise.optional_event_prob,
                optional_events: self
                    .noise
                    .optional_events
                    .iter()
                    .map(|&(p, s)| (p, Symbol(s)))
                    .collect(),
                background_prob: self.noise.background_prob,
            },
            idle_types: self.idle_types.iter().map(|&i| Symbol(i)).collect(),
            seed: self.seed,
        }
    }

    pub fn fault_specs(&self) -> Vec<FaultSpec> {
        self.faults
            .iter()
            .map(|f| FaultSpec {
                mode_label: f.mode_label.clone(),
                edits: f.edits.iter().map(EditDef::to_core).collect(),
            })
            .collect()
    }
}

/// Ground-truth record of one planted anomaly, identified by event type so
/// it stays valid under any symbol-table numbering.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlantedEventJson {
    /// Position in the idle-filtered faulty symbol sequence (spurious) or
    /// the backbone (missing).
    pub position: usize,
    pub sender: String,
    pub api: String,
    pub status: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentTruthJson {
    pub mode_label: String,
    pub spurious: Vec<PlantedEventJson>,
    pub missing: Vec<PlantedEventJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundTruthJson {
    /// Experiments per failure-mode label.
    pub class_sizes: BTreeMap<String, usize>,
    pub experiments: BTreeMap<String, ExperimentTruthJson>,
}

impl GroundTruthJson {
    pub fn load(path: &Path) -> Result<GroundTruthJson> {
        serde_json::from_str(
            &fs::read_to_string(path)
                .with_context(|| format!("cannot read ground truth {}", path.display()))?,
        )
        .context("cannot parse ground truth")
    }

    pub fn labels(&self) -> BTreeMap<String, String> {
        self.experiments
            .iter()
            .map(|(id, e)| (id.clone(), e.mode_label.clone()))
            .collect()
    }
}

fn planted_json(spec: &WorkloadSpec, planted: &sim::PlantedAnomaly) -> ExperimentTruthJson {
    let to_json = |&(position, sym): &(usize, Symbol)| {
        let key = &spec.event_types[sym.index()];
        PlantedEventJson {
            position,
            sender: key.sender.clone(),
            api: key.api.clone(),
            status: key.status.clone(),
        }
    };
    ExperimentTruthJson {
        mode_label: planted.mode_label.clone(),
        spurious: planted.spurious.iter().map(to_json).collect(),
        missing: planted.missing.iter().map(to_json).collect(),
    }
}

/// Generates the full campaign under `out_dir`. Fully reproducible from the
/// spec: same spec and seed give byte-identical files.
pub fn generate(spec: &CampaignSpec, out_dir: &Path) -> Result<PathBuf> {
    let workload = spec.workload();
    let faults = spec.fault_specs();
    fs::create_dir_all(out_dir)
        .with_context(|| format!("cannot create campaign dir {}", out_dir.display()))?;

    let fault_free = sim::gen_faultfree(&workload, spec.campaign.n_faultfree)?;
    for trace in &fault_free {
        write_trace(&out_dir.join("faultfree"), trace)?;
    }
    if !workload.idle_types.is_empty() {
        let idle = sim::gen_idle(&workload)?;
        write_trace(&out_dir.join("idle"), &idle)?;
    } else {
        fs::create_dir_all(out_dir.join("idle"))?;
    }

    let mut experiments = BTreeMap::new();
    let mut class_sizes: BTreeMap<String, usize> = BTreeMap::new();
    let mut instance: u64 = 0;
    for (fi, fault) in faults.iter().enumerate() {
        for rep in 0..spec.campaign.n_per_fault {
            let trace_id = format!("{}_f{fi:02}_{rep:04}", spec.name);
            let (trace, planted) = sim::gen_faulty(&workload, fault, instance, &trace_id)?;
            write_trace(&out_dir.join("faulty"), &trace)?;
            experiments.insert(trace_id, planted_json(&workload, &planted));
            *class_sizes.entry(fault.mode_label.clone()).or_insert(0) += 1;
            instance += 1;
        }
    }
    let truth = GroundTruthJson { class_sizes, experiments };
    fs::write(
        out_dir.join("ground_truth.json"),
        serde_json::to_string_pretty(&truth)?,
    )?;
    Ok(out_dir.to_path_buf())
}
