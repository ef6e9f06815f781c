//! End-to-end drivers: campaign analysis (parallel fan-out per experiment),
//! report persistence, clustering, and metrics scoring.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use faultrace_core::detect::{self, AnomalyReport, EventLabel, LabeledEvent};
use faultrace_core::vmm::VmmModel;
use faultrace_core::{
    build_symbol_table, build_vectors, filter_idle, purity, select_k, select_reference,
    ClusterResult, EventKey, GroundTruth, Metrics, PlantedSet, Representation, Symbol,
    SymbolSequence, SymbolTable, Thresholds, Trace, TraceKind,
};

use crate::campaign::GroundTruthJson;
use crate::config::RunConfig;
use crate::ingest::{load_campaign, Campaign};
use crate::report;

// ---------------------------------------------------------------------------
// JSON shapes

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SymbolJson {
    pub id: u32,
    pub sender: String,
    pub api: String,
    pub status: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EventJson {
    /// "faulty" or "reference".
    pub side: String,
    pub position: usize,
    pub symbol: u32,
    pub label: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probability: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportJson {
    pub experiment_id: String,
    pub selected_reference_id: String,
    pub reference_nlcs: f64,
    pub degenerate: bool,
    pub events: Vec<EventJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSummaryJson {
    pub experiment_id: String,
    pub common: usize,
    pub spurious: usize,
    pub missing: usize,
    pub filtered_spurious: usize,
    pub filtered_missing: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsJson {
    pub hits: usize,
    pub false_alarms: usize,
    pub total_anomalous: usize,
    pub total_non_anomalous: usize,
    pub hit_rate: Option<f64>,
    pub false_alarm_rate: Option<f64>,
}

impl From<Metrics> for MetricsJson {
    fn from(m: Metrics) -> MetricsJson {
        MetricsJson {
            hits: m.hits,
            false_alarms: m.false_alarms,
            total_anomalous: m.total_anomalous,
            total_non_anomalous: m.total_non_anomalous,
            hit_rate: m.hit_rate,
            false_alarm_rate: m.false_alarm_rate,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryJson {
    pub campaign_dir: String,
    pub dictionary_size: usize,
    pub max_order: usize,
    pub eps_spurious: f64,
    pub eps_missing: f64,
    pub n_fault_free: usize,
    pub n_experiments: usize,
    pub symbols: Vec<SymbolJson>,
    pub per_experiment: Vec<ExperimentSummaryJson>,
    /// Rates with the probabilistic filter applied.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics_vmm: Option<MetricsJson>,
    /// Rates counting every LCS difference as an anomaly.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics_lcs: Option<MetricsJson>,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generated_at: Option<String>,
}

fn label_str(label: EventLabel) -> &'static str {
    match label {
        EventLabel::Common => "common",
        EventLabel::Spurious => "spurious",
        EventLabel::Missing => "missing",
        EventLabel::FilteredSpurious => "filtered_spurious",
        EventLabel::FilteredMissing => "filtered_missing",
    }
}

fn label_from_str(s: &str) -> Result<EventLabel> {
    Ok(match s {
        "common" => EventLabel::Common,
        "spurious" => EventLabel::Spurious,
        "missing" => EventLabel::Missing,
        "filtered_spurious" => EventLabel::FilteredSpurious,
        "filtered_missing" => EventLabel::FilteredMissing,
        other => bail!("unknown event label {other:?}"),
    })
}

pub fn report_to_json(report: &AnomalyReport) -> ReportJson {
    ReportJson {
        experiment_id: report.experiment_id.clone(),
        selected_reference_id: report.selected_reference_id.clone(),
        reference_nlcs: report.reference_nlcs,
        degenerate: report.degenerate,
        events: report
            .events
            .iter()
            .map(|e| EventJson {
                side: match e.label {
                    EventLabel::Missing | EventLabel::FilteredMissing => "reference",
                    _ => "faulty",
                }
                .to_string(),
                position: e.position,
                symbol: e.symbol.0,
                label: label_str(e.label).to_string(),
                probability: e.probability,
            })
            .collect(),
    }
}

pub fn report_from_json(json: &ReportJson) -> Result<AnomalyReport> {
    Ok(AnomalyReport {
        experiment_id: json.experiment_id.clone(),
        selected_reference_id: json.selected_reference_id.clone(),
        selected_reference_index: 0,
        reference_nlcs: json.reference_nlcs,
        degenerate: json.degenerate,
        events: json
            .events
            .iter()
            .map(|e| {
                Ok(LabeledEvent {
                    position: e.position,
                    symbol: Symbol(e.symbol),
                    label: label_from_str(&e.label)?,
                    probability: e.probability,
                })
            })
            .collect::<Result<_>>()?,
    })
}

// ---------------------------------------------------------------------------
// analysis

/// Symbolized campaign ready for analysis.
pub struct PreparedCampaign {
    pub table: SymbolTable,
    pub pool: Vec<SymbolSequence>,
    pub faulty: Vec<SymbolSequence>,
    pub warnings: Vec<String>,
}

/// Builds the frozen symbol table over the whole corpus and idle-filters
/// every workload trace.
pub fn prepare(campaign: &Campaign) -> Result<PreparedCampaign> {
    if campaign.fault_free.len() < 2 {
        bail!(
            "campaign has {} fault-free trace(s); at least 2 are required",
            campaign.fault_free.len()
        );
    }
    let mut all: Vec<Trace> = Vec::new();
    all.extend(campaign.fault_free.iter().cloned());
    all.extend(campaign.faulty.iter().cloned());
    all.extend(campaign.idle.iter().cloned());
    let table = build_symbol_table(&all)?;

    // union of all idle traces as the background filter
    let idle_union: Vec<faultrace_core::Event> = campaign
        .idle
        .iter()
        .flat_map(|t| t.events().iter().cloned())
        .collect();
    let idle = Trace::new("idle_union".to_string(), TraceKind::Idle, idle_union);

    let mut warnings = Vec::new();
    let mut symbolize = |traces: &[Trace]| -> Result<Vec<SymbolSequence>> {
        traces
            .iter()
            .map(|t| {
                let (seq, emptied) = filter_idle(t, &idle, &table)?;
                if emptied {
                    warnings.push(format!(
                        "trace {} consists solely of idle event types; sequence is empty",
                        t.trace_id
                    ));
                }
                Ok(seq)
            })
            .collect()
    };
    let pool = symbolize(&campaign.fault_free)?;
    let faulty = symbolize(&campaign.faulty)?;
    Ok(PreparedCampaign { table, pool, faulty, warnings })
}

/// Analyzes every faulty trace against the fault-free pool, fanning out to
/// `workers` threads. Leave-one-out models are memoized per reference index
/// and shared. Results come back in input order.
pub fn analyze_parallel(
    faulty: &[SymbolSequence],
    pool: &[SymbolSequence],
    thresholds: &Thresholds,
    max_order: usize,
    alphabet_size: usize,
    workers: usize,
) -> Vec<std::result::Result<AnomalyReport, faultrace_core::CoreError>> {
    let workers = workers.max(1);
    let models: Mutex<BTreeMap<usize, Arc<VmmModel>>> = Mutex::new(BTreeMap::new());
    let next = AtomicUsize::new(0);
    let results: Vec<Mutex<Option<_>>> = (0..faulty.len()).map(|_| Mutex::new(None)).collect();

    let analyze_one = |seq: &SymbolSequence| {
        if pool.len() < 2 {
            return Err(faultrace_core::CoreError::PoolTooSmall { size: pool.len() });
        }
        let (ref_idx, value) = select_reference(seq, pool);
        let model = {
            let cached = models.lock().unwrap().get(&ref_idx).cloned();
            match cached {
                Some(m) => m,
                None => {
                    let trained =
                        Arc::new(detect::train_excluding(pool, ref_idx, max_order, alphabet_size)?);
                    models
                        .lock()
                        .unwrap()
                        .entry(ref_idx)
                        .or_insert_with(|| trained.clone())
                        .clone()
                }
            }
        };
        detect::analyze_with_model(seq, &pool[ref_idx], ref_idx, value, &model, thresholds)
    };

    std::thread::scope(|scope| {
        for _ in 0..workers.min(faulty.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= faulty.len() {
                    break;
                }
                *results[i].lock().unwrap() = Some(analyze_one(&faulty[i]));
            });
        }
    });
    results
        .into_iter()
        .map(|m| m.into_inner().unwrap().expect("worker filled every slot"))
        .collect()
}

/// Relabels filtered differences as anomalous, i.e. the plain-LCS view of
/// the same reports.
pub fn as_plain_lcs(report: &AnomalyReport) -> AnomalyReport {
    let mut out = report.clone();
    for e in &mut out.events {
        e.label = match e.label {
            EventLabel::FilteredSpurious => EventLabel::Spurious,
            EventLabel::FilteredMissing => EventLabel::Missing,
            other => other,
        };
    }
    out
}

/// Converts on-disk ground truth into symbol-level ground truth for scoring.
pub fn ground_truth_to_core(
    json: &GroundTruthJson,
    table: &SymbolTable,
) -> Result<GroundTruth> {
    let mut experiments = BTreeMap::new();
    for (id, truth) in &json.experiments {
        let lookup = |sender: &str, api: &str, status: &str| -> Result<Symbol> {
            let key = EventKey {
                sender: sender.to_string(),
                api: api.to_string(),
                status: status.to_string(),
            };
            Ok(table.encode(&key)?)
        };
        let spurious = truth
            .spurious
            .iter()
            .map(|p| Ok((p.position, lookup(&p.sender, &p.api, &p.status)?)))
            .collect::<Result<Vec<_>>>()?;
        let missing = truth
            .missing
            .iter()
            .map(|p| lookup(&p.sender, &p.api, &p.status))
            .collect::<Result<Vec<_>>>()?;
        experiments.insert(
            id.clone(),
            PlantedSet { spurious, missing, mode_label: truth.mode_label.clone() },
        );
    }
    Ok(GroundTruth { experiments })
}

pub struct AnalysisOutput {
    pub reports_dir: PathBuf,
    pub summary: SummaryJson,
}

fn timestamp_field(deterministic: bool) -> Option<String> {
    if deterministic {
        None
    } else {
        let now = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Some(format!("unix:{now}"))
    }
}

/// The `analyze` command: load, symbolize, classify, score, persist.
pub fn run_analyze(config: &RunConfig, out_dir: &Path) -> Result<AnalysisOutput> {
    let campaign = load_campaign(&config.campaign_dir)?;
    let prepared = prepare(&campaign)?;
    let thresholds = config.thresholds();
    thresholds.validate()?;
    let outcomes = analyze_parallel(
        &prepared.faulty,
        &prepared.pool,
        &thresholds,
        config.max_order,
        prepared.table.len(),
        config.workers,
    );

    fs::create_dir_all(out_dir)?;
    let mut per_experiment = Vec::new();
    let mut ok_reports = Vec::new();
    for (seq, outcome) in prepared.faulty.iter().zip(outcomes) {
        match outcome {
            Ok(report) => {
                let json = report_to_json(&report);
                fs::write(
                    out_dir.join(format!("{}.json", report.experiment_id)),
                    serde_json::to_string_pretty(&json)?,
                )?;
                per_experiment.push(ExperimentSummaryJson {
                    experiment_id: report.experiment_id.clone(),
                    common: report.count(EventLabel::Common),
                    spurious: report.count(EventLabel::Spurious),
                    missing: report.count(EventLabel::Missing),
                    filtered_spurious: report.count(EventLabel::FilteredSpurious),
                    filtered_missing: report.count(EventLabel::FilteredMissing),
                    error: None,
                });
                ok_reports.push(report);
            }
            Err(err) => per_experiment.push(ExperimentSummaryJson {
                experiment_id: seq.trace_id.clone(),
                common: 0,
                spurious: 0,
                missing: 0,
                filtered_spurious: 0,
                filtered_missing: 0,
                error: Some(err.to_string()),
            }),
        }
    }

    let truth_path = config.campaign_dir.join("ground_truth.json");
    let (metrics_vmm, metrics_lcs) = if truth_path.is_file() {
        let truth_json = GroundTruthJson::load(&truth_path)?;
        let truth = ground_truth_to_core(&truth_json, &prepared.table)?;
        let vmm = detect::score_metrics(&ok_reports, &truth)?;
        let lcs_reports: Vec<AnomalyReport> = ok_reports.iter().map(as_plain_lcs).collect();
        let lcs = detect::score_metrics(&lcs_reports, &truth)?;
        (Some(vmm.into()), Some(lcs.into()))
    } else {
        (None, None)
    };

    let symbols = (0..prepared.table.len())
        .map(|i| {
            let key = prepared.table.decode(Symbol(i as u32)).expect("dense ids");
            SymbolJson {
                id: i as u32,
                sender: key.sender.clone(),
                api: key.api.clone(),
                status: key.status.clone(),
            }
        })
        .collect();

    let summary = SummaryJson {
        campaign_dir: config.campaign_dir.display().to_string(),
        dictionary_size: prepared.table.len(),
        max_order: config.max_order,
        eps_spurious: config.eps_spurious,
        eps_missing: config.eps_missing,
        n_fault_free: prepared.pool.len(),
        n_experiments: prepared.faulty.len(),
        symbols,
        per_experiment,
        metrics_vmm,
        metrics_lcs,
        warnings: prepared.warnings.clone(),
        generated_at: timestamp_field(config.deterministic),
    };
    fs::write(out_dir.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    Ok(AnalysisOutput { reports_dir: out_dir.to_path_buf(), summary })
}

// ---------------------------------------------------------------------------
// clustering

pub struct LoadedReports {
    pub summary: SummaryJson,
    pub reports: Vec<AnomalyReport>,
}

pub fn load_reports(dir: &Path) -> Result<LoadedReports> {
    let summary: SummaryJson = serde_json::from_str(
        &fs::read_to_string(dir.join("summary.json"))
            .with_context(|| format!("cannot read {}/summary.json", dir.display()))?,
    )
    .context("cannot parse summary.json")?;
    let mut reports = Vec::new();
    for exp in &summary.per_experiment {
        if exp.error.is_some() {
            continue;
        }
        let path = dir.join(format!("{}.json", exp.experiment_id));
        let json: ReportJson = serde_json::from_str(
            &fs::read_to_string(&path)
                .with_context(|| format!("cannot read {}", path.display()))?,
        )?;
        reports.push(report_from_json(&json)?);
    }
    Ok(LoadedReports { summary, reports })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterSummaryJson {
    pub cluster: usize,
    pub size: usize,
    pub medoid: String,
    pub members: Vec<String>,
    /// Most frequent confirmed-spurious event types in the cluster.
    pub top_spurious: Vec<String>,
    pub top_missing: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub purity: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClustersJson {
    pub representation: String,
    pub seed: u64,
    pub k_curve: Vec<(usize, f64)>,
    pub k_star: usize,
    pub global_silhouette: f64,
    pub assignments: BTreeMap<String, usize>,
    pub clusters: Vec<ClusterSummaryJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub purity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generated_at: Option<String>,
}

fn top_event_types(
    reports: &[&AnomalyReport],
    summary: &SummaryJson,
    want: EventLabel,
) -> Vec<String> {
    let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
    for report in reports {
        for e in &report.events {
            if e.label == want {
                *counts.entry(e.symbol.0).or_insert(0) += 1;
            }
        }
    }
    let mut entries: Vec<(u32, usize)> = counts.into_iter().collect();
    entries.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    entries
        .into_iter()
        .take(3)
        .map(|(id, n)| {
            let s = summary
                .symbols
                .iter()
                .find(|s| s.id == id)
                .map(|s| format!("{} {} [{}]", s.sender, s.api, s.status))
                .unwrap_or_else(|| format!("symbol {id}"));
            format!("{s} x{n}")
        })
        .collect()
}

pub struct ClusterOutput {
    pub clusters: ClustersJson,
    pub out_dir: PathBuf,
}

/// The `cluster` command: vectors, K selection, purity, JSON + HTML report.
pub fn run_cluster(
    reports_dir: &Path,
    config: &RunConfig,
    out_dir: &Path,
) -> Result<ClusterOutput> {
    let loaded = load_reports(reports_dir)?;
    if loaded.reports.is_empty() {
        bail!("no successful experiment reports under {}", reports_dir.display());
    }
    let d = loaded.summary.dictionary_size;
    let vectors = build_vectors(&loaded.reports, d, config.representation);
    let (best, curve): (ClusterResult, Vec<(usize, f64)>) =
        select_k(&vectors, config.k_min, config.k_max, config.seed)?;

    // ground truth, if the campaign still has it
    let truth_path = Path::new(&loaded.summary.campaign_dir).join("ground_truth.json");
    let labels = if truth_path.is_file() {
        Some(GroundTruthJson::load(&truth_path)?.labels())
    } else {
        None
    };
    let (overall_purity, per_cluster_purity) = match &labels {
        Some(labels) => {
            let (p, per) = purity(&vectors, &best, labels)?;
            (Some(p), Some(per))
        }
        None => (None, None),
    };

    let mut assignments = BTreeMap::new();
    for (i, v) in vectors.iter().enumerate() {
        assignments.insert(v.experiment_id.clone(), best.assignments[i]);
    }
    let clusters: Vec<ClusterSummaryJson> = (0..best.k)
        .map(|c| {
            let member_idx: Vec<usize> =
                (0..vectors.len()).filter(|&i| best.assignments[i] == c).collect();
            let members: Vec<String> = member_idx
                .iter()
                .map(|&i| vectors[i].experiment_id.clone())
                .collect();
            let member_reports: Vec<&AnomalyReport> = member_idx
                .iter()
                .map(|&i| &loaded.reports[i])
                .collect();
            ClusterSummaryJson {
                cluster: c,
                size: members.len(),
                medoid: vectors[best.medoids[c]].experiment_id.clone(),
                members,
                top_spurious: top_event_types(&member_reports, &loaded.summary, EventLabel::Spurious),
                top_missing: top_event_types(&member_reports, &loaded.summary, EventLabel::Missing),
                purity: per_cluster_purity.as_ref().map(|p| p[c]),
            }
        })
        .collect();

    let clusters_json = ClustersJson {
        representation: match config.representation {
            Representation::Vmm => "vmm",
            Representation::Lcs => "lcs",
            Representation::Seq => "seq",
        }
        .to_string(),
        seed: config.seed,
        k_curve: curve,
        k_star: best.k,
        global_silhouette: best.global_silhouette,
        assignments,
        clusters,
        purity: overall_purity,
        generated_at: timestamp_field(config.deterministic),
    };

    fs::create_dir_all(out_dir)?;
    fs::write(
        out_dir.join("clusters.json"),
        serde_json::to_string_pretty(&clusters_json)?,
    )?;
    report::write_html_report(out_dir, &clusters_json, &loaded)?;
    Ok(ClusterOutput { clusters: clusters_json, out_dir: out_dir.to_path_buf() })
}

/// The `metrics` command: score stored reports against a ground-truth file.
pub fn run_metrics(reports_dir: &Path, truth_path: &Path) -> Result<(MetricsJson, MetricsJson)> {
    let loaded = load_reports(reports_dir)?;
    let truth_json = GroundTruthJson::load(truth_path)?;
    // rebuild the triple -> symbol map from the summary
    let mut table_entries: Vec<Trace> = Vec::new();
    // symbols are already dense in the summary; build a table by synthesizing
    // one event per type in id order
    let events: Vec<faultrace_core::Event> = loaded
        .summary
        .symbols
        .iter()
        .enumerate()
        .map(|(i, s)| faultrace_core::Event {
            timestamp_us: i as u64,
            sender: s.sender.clone(),
            service_api: s.api.clone(),
            response_status: s.status.clone(),
            duration_us: 0,
        })
        .collect();
    table_entries.push(Trace::new("synthetic".to_string(), TraceKind::FaultFree, events));
    let table = build_symbol_table(&table_entries)?;
    let truth = ground_truth_to_core(&truth_json, &table)?;
    let vmm = detect::score_metrics(&loaded.reports, &truth)?;
    let lcs_reports: Vec<AnomalyReport> = loaded.reports.iter().map(as_plain_lcs).collect();
    let lcs = detect::score_metrics(&lcs_reports, &truth)?;
    Ok((vmm.into(), lcs.into()))
}
