//! Anomaly classification: per-experiment LCS diff, leave-one-out PPM-C
//! scoring of the differences, and labeling of every event as common,
//! spurious, missing, or filtered (a difference the model considers
//! explainable by ordinary non-determinism).

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::align::{diff, select_reference};
use crate::error::CoreError;
use crate::trace::{Symbol, SymbolSequence};
use crate::vmm::VmmModel;

/// Probability thresholds for confirming LCS differences as anomalies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    /// A faulty-only event with probability strictly below this is spurious.
    pub eps_spurious: f64,
    /// A reference-only event with probability strictly above this is missing.
    pub eps_missing: f64,
}

impl Default for Thresholds {
    fn default() -> Thresholds {
        Thresholds { eps_spurious: 0.20, eps_missing: 0.80 }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<(), CoreError> {
        for (name, v) in [("eps_spurious", self.eps_spurious), ("eps_missing", self.eps_missing)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(CoreError::InvalidParameter(alloc::format!(
                    "{name} must be in [0,1], got {v}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventLabel {
    Common,
    Spurious,
    Missing,
    /// Faulty-only LCS difference the model deems likely enough to ignore.
    FilteredSpurious,
    /// Reference-only LCS difference the model deems unlikely enough to ignore.
    FilteredMissing,
}

/// One classified event. Spurious-side positions index the faulty sequence;
/// missing-side positions index the selected reference sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledEvent {
    pub position: usize,
    pub symbol: Symbol,
    pub label: EventLabel,
    pub probability: Option<f64>,
}

/// Full classification of one experiment.
///
/// `events` lists every faulty-sequence event first (in faulty order, labels
/// Common / Spurious / FilteredSpurious), followed by the reference-only
/// events (in reference order, labels Missing / FilteredMissing).
#[derive(Debug, Clone, PartialEq)]
pub struct AnomalyReport {
    pub experiment_id: String,
    pub selected_reference_id: String,
    pub selected_reference_index: usize,
    pub reference_nlcs: f64,
    /// Set when the faulty sequence was empty.
    pub degenerate: bool,
    pub events: Vec<LabeledEvent>,
}

impl AnomalyReport {
    pub fn count(&self, label: EventLabel) -> usize {
        self.events.iter().filter(|e| e.label == label).count()
    }

    /// Faulty-side entries, covering the whole faulty sequence in order.
    pub fn faulty_side(&self) -> impl Iterator<Item = &LabeledEvent> + '_ {
        self.events.iter().filter(|e| {
            matches!(
                e.label,
                EventLabel::Common | EventLabel::Spurious | EventLabel::FilteredSpurious
            )
        })
    }

    /// Reference-only entries (missing candidates) in reference order.
    pub fn missing_side(&self) -> impl Iterator<Item = &LabeledEvent> + '_ {
        self.events
            .iter()
            .filter(|e| matches!(e.label, EventLabel::Missing | EventLabel::FilteredMissing))
    }
}

/// Trains a PPM-C model on the pool with one trace left out.
pub fn train_excluding(
    pool: &[SymbolSequence],
    exclude: usize,
    max_order: usize,
    alphabet_size: usize,
) -> Result<VmmModel, CoreError> {
    let training: Vec<SymbolSequence> = pool
        .iter()
        .enumerate()
        .filter_map(|(i, s)| (i != exclude).then(|| s.clone()))
        .collect();
    if training.is_empty() {
        return Err(CoreError::PoolTooSmall { size: pool.len() });
    }
    VmmModel::train(&training, max_order, alphabet_size)
}

/// Classifies one experiment against an already-selected reference and an
/// already-trained leave-one-out model.
pub fn analyze_with_model(
    faulty: &SymbolSequence,
    reference: &SymbolSequence,
    reference_index: usize,
    reference_nlcs: f64,
    model: &VmmModel,
    thresholds: &Thresholds,
) -> Result<AnomalyReport, CoreError> {
    thresholds.validate()?;
    let d = diff(faulty, reference);
    let mut events = Vec::with_capacity(faulty.len() + d.only_faultfree.len());
    let mut faulty_side: Vec<LabeledEvent> = Vec::with_capacity(faulty.len());
    for (pos, _, sym) in &d.common {
        faulty_side.push(LabeledEvent {
            position: *pos,
            symbol: *sym,
            label: EventLabel::Common,
            probability: None,
        });
    }
    for (pos, sym) in &d.only_faulty {
        let p = model.prob(&faulty.symbols[..*pos], *sym);
        let label = if p < thresholds.eps_spurious {
            EventLabel::Spurious
        } else {
            EventLabel::FilteredSpurious
        };
        faulty_side.push(LabeledEvent {
            position: *pos,
            symbol: *sym,
            label,
            probability: Some(p),
        });
    }
    faulty_side.sort_by_key(|e| e.position);
    events.extend(faulty_side);
    for (pos, sym) in &d.only_faultfree {
        let p = model.prob(&reference.symbols[..*pos], *sym);
        let label = if p > thresholds.eps_missing {
            EventLabel::Missing
        } else {
            EventLabel::FilteredMissing
        };
        events.push(LabeledEvent { position: *pos, symbol: *sym, label, probability: Some(p) });
    }
    Ok(AnomalyReport {
        experiment_id: faulty.trace_id.clone(),
        selected_reference_id: reference.trace_id.clone(),
        selected_reference_index: reference_index,
        reference_nlcs,
        degenerate: faulty.is_empty(),
        events,
    })
}

/// Full per-experiment pipeline: select the reference, train the model on
/// the remaining pool, classify.
pub fn analyze_experiment(
    faulty: &SymbolSequence,
    pool: &[SymbolSequence],
    thresholds: &Thresholds,
    max_order: usize,
    alphabet_size: usize,
) -> Result<AnomalyReport, CoreError> {
    if pool.len() < 2 {
        return Err(CoreError::PoolTooSmall { size: pool.len() });
    }
    let (ref_idx, value) = select_reference(faulty, pool);
    let model = train_excluding(pool, ref_idx, max_order, alphabet_size)?;
    analyze_with_model(faulty, &pool[ref_idx], ref_idx, value, &model, thresholds)
}

/// Analyzes a batch of experiments sequentially, memoizing the leave-one-out
/// model per reference index. Per-experiment failures are reported in place;
/// the batch continues.
pub fn analyze_campaign(
    faulty_set: &[SymbolSequence],
    pool: &[SymbolSequence],
    thresholds: &Thresholds,
    max_order: usize,
    alphabet_size: usize,
) -> Vec<Result<AnomalyReport, CoreError>> {
    let mut models: BTreeMap<usize, VmmModel> = BTreeMap::new();
    faulty_set
        .iter()
        .map(|faulty| {
            if pool.len() < 2 {
                return Err(CoreError::PoolTooSmall { size: pool.len() });
            }
            let (ref_idx, value) = select_reference(faulty, pool);
            if !models.contains_key(&ref_idx) {
                let m = train_excluding(pool, ref_idx, max_order, alphabet_size)?;
                models.insert(ref_idx, m);
            }
            analyze_with_model(faulty, &pool[ref_idx], ref_idx, value, &models[&ref_idx], thresholds)
        })
        .collect()
}

/// Planted anomalies for one experiment, as recorded by the campaign
/// generator. Spurious entries carry final faulty-sequence positions;
/// missing entries are matched by symbol.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PlantedSet {
    pub spurious: Vec<(usize, Symbol)>,
    pub missing: Vec<Symbol>,
    pub mode_label: String,
}

/// Ground truth for a whole campaign, keyed by experiment id.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GroundTruth {
    pub experiments: BTreeMap<String, PlantedSet>,
}

/// Hit-rate / false-alarm-rate summary over a campaign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub hits: usize,
    pub false_alarms: usize,
    pub total_anomalous: usize,
    pub total_non_anomalous: usize,
    /// hits / total_anomalous; None when there are no planted anomalies.
    pub hit_rate: Option<f64>,
    /// false_alarms / total_non_anomalous; None when every event is anomalous.
    pub false_alarm_rate: Option<f64>,
}

fn multiset_counts(symbols: impl Iterator<Item = Symbol>) -> BTreeMap<Symbol, usize> {
    let mut m = BTreeMap::new();
    for s in symbols {
        *m.entry(s).or_insert(0) += 1;
    }
    m
}

/// Scores detector reports against planted ground truth.
///
/// Spurious detections match planted spurious events by faulty-sequence
/// position; missing detections match planted missing events by symbol
/// (multiset intersection). The non-anomalous universe per experiment is
/// every faulty event that was not planted spurious, plus every
/// reference-only difference not accounted for by a planted missing event.
pub fn score_metrics(
    reports: &[AnomalyReport],
    ground_truth: &GroundTruth,
) -> Result<Metrics, CoreError> {
    let mut hits = 0usize;
    let mut false_alarms = 0usize;
    let mut total_anomalous = 0usize;
    let mut total_non_anomalous = 0usize;
    for report in reports {
        let planted = ground_truth
            .experiments
            .get(&report.experiment_id)
            .ok_or_else(|| CoreError::MissingGroundTruth(report.experiment_id.clone()))?;

        // spurious side: exact position match
        let planted_pos: alloc::collections::BTreeSet<usize> =
            planted.spurious.iter().map(|(p, _)| *p).collect();
        let faulty_len = report.faulty_side().count();
        let detected_sp: Vec<usize> = report
            .events
            .iter()
            .filter(|e| e.label == EventLabel::Spurious)
            .map(|e| e.position)
            .collect();
        let hits_sp = detected_sp.iter().filter(|p| planted_pos.contains(p)).count();
        hits += hits_sp;
        false_alarms += detected_sp.len() - hits_sp;
        total_anomalous += planted.spurious.len();
        total_non_anomalous += faulty_len - planted_pos.len();

        // missing side: multiset match by symbol
        let planted_mi = multiset_counts(planted.missing.iter().copied());
        let candidates = multiset_counts(report.missing_side().map(|e| e.symbol));
        let detected_mi = multiset_counts(
            report
                .events
                .iter()
                .filter(|e| e.label == EventLabel::Missing)
                .map(|e| e.symbol),
        );
        let mut hits_mi = 0usize;
        let mut matched_planted = 0usize;
        for (&sym, &planted_count) in &planted_mi {
            let cand = candidates.get(&sym).copied().unwrap_or(0);
            let det = detected_mi.get(&sym).copied().unwrap_or(0);
            hits_mi += det.min(planted_count);
            matched_planted += cand.min(planted_count);
        }
        let detected_total: usize = detected_mi.values().sum();
        let candidate_total: usize = candidates.values().sum();
        hits += hits_mi;
        false_alarms += detected_total - hits_mi;
        total_anomalous += planted.missing.len();
        total_non_anomalous += candidate_total - matched_planted;
    }
    let hit_rate = (total_anomalous > 0).then(|| hits as f64 / total_anomalous as f64);
    let false_alarm_rate =
        (total_non_anomalous > 0).then(|| false_alarms as f64 / total_non_anomalous as f64);
    Ok(Metrics { hits, false_alarms, total_anomalous, total_non_anomalous, hit_rate, false_alarm_rate })
}
