//! Synthetic campaign generator: fault-free, idle and faulty traces from a
//! stochastic workload model with planted, labeled anomalies.
//!
//! Each trace is a deterministic backbone perturbed by two kinds of
//! non-determinism, adjacent transpositions and optional events, plus
//! background (idle-type) events that the pipeline is expected to filter
//! out. Faults are planted as edits on top of the noisy sequence; the
//! generator records exactly which events they produced, giving the
//! ground truth that the real testbed lacks.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::CoreError;
use crate::trace::{Event, EventKey, Symbol, Trace, TraceKind};

/// Non-determinism applied to every generated trace.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    /// Probability of transposing a pair of adjacent events, per position.
    pub swap_prob: f64,
    /// Inclusion probability for each optional event.
    pub optional_event_prob: f64,
    /// Optional events as (backbone position, symbol); inserted before the
    /// backbone event at that position when drawn.
    pub optional_events: Vec<(usize, Symbol)>,
    /// Per idle type, the probability of one background occurrence showing
    /// up at a random point of the trace.
    pub background_prob: f64,
}

impl NoiseSpec {
    pub fn none() -> NoiseSpec {
        NoiseSpec {
            swap_prob: 0.0,
            optional_event_prob: 0.0,
            optional_events: Vec::new(),
            background_prob: 0.0,
        }
    }
}

/// The stochastic workload model for one campaign.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadSpec {
    pub name: String,
    /// Event-type triples; the symbol id of a type is its index here.
    pub event_types: Vec<EventKey>,
    /// Deterministic workload skeleton.
    pub backbone: Vec<Symbol>,
    pub noise: NoiseSpec,
    /// Background event types, disjoint from the backbone.
    pub idle_types: Vec<Symbol>,
    pub seed: u64,
}

impl WorkloadSpec {
    pub fn validate(&self) -> Result<(), CoreError> {
        let d = self.event_types.len();
        let check_sym = |s: Symbol| -> Result<(), CoreError> {
            if s.index() >= d {
                return Err(CoreError::UnknownSymbol { id: s.0, alphabet: d as u32 });
            }
            Ok(())
        };
        for &s in self.backbone.iter().chain(self.idle_types.iter()) {
            check_sym(s)?;
        }
        for &(pos, s) in &self.noise.optional_events {
            check_sym(s)?;
            if pos > self.backbone.len() {
                return Err(CoreError::EditOutOfRange {
                    position: pos,
                    backbone_len: self.backbone.len(),
                });
            }
        }
        for p in [
            self.noise.swap_prob,
            self.noise.optional_event_prob,
            self.noise.background_prob,
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(CoreError::InvalidParameter(alloc::format!(
                    "noise probability {p} outside [0,1]"
                )));
            }
        }
        if self.idle_types.iter().any(|s| self.backbone.contains(s)) {
            return Err(CoreError::InvalidParameter(
                "idle types must be disjoint from the backbone".into(),
            ));
        }
        Ok(())
    }
}

/// One trace-level fault edit against the backbone.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FaultEdit {
    /// Insert `symbol` before the backbone event at `position`.
    Insert { position: usize, symbol: Symbol },
    /// Drop the backbone event at `position`.
    Delete { position: usize },
    /// Replace the backbone event at `position` with `symbol` (the same
    /// call observed with a different response status).
    ReplaceStatus { position: usize, symbol: Symbol },
}

/// A planted failure mode: a labeled set of edits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FaultSpec {
    pub mode_label: String,
    pub edits: Vec<FaultEdit>,
}

/// Ground truth for one faulty experiment.
///
/// Spurious entries are (final position in the faulty symbol sequence,
/// symbol); missing entries are (backbone position, symbol).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlantedAnomaly {
    pub mode_label: String,
    pub spurious: Vec<(usize, Symbol)>,
    pub missing: Vec<(usize, Symbol)>,
}

struct Elem {
    symbol: Symbol,
    origin: Option<usize>,
    planted: bool,
}

fn unit(rng: &mut ChaCha8Rng) -> f64 {
    rng.next_u32() as f64 / 4294967296.0
}

fn rng_for(spec: &WorkloadSpec, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(stream);
    rng
}

/// Backbone with optional events and transpositions applied.
fn noisy_sequence(spec: &WorkloadSpec, rng: &mut ChaCha8Rng) -> Vec<Elem> {
    let mut included: Vec<(usize, Symbol)> = Vec::new();
    for &(pos, sym) in &spec.noise.optional_events {
        if unit(rng) < spec.noise.optional_event_prob {
            included.push((pos, sym));
        }
    }
    let mut elems: Vec<Elem> = Vec::with_capacity(spec.backbone.len() + included.len());
    for (i, &sym) in spec.backbone.iter().enumerate() {
        for &(_, opt) in included.iter().filter(|(p, _)| *p == i) {
            elems.push(Elem { symbol: opt, origin: None, planted: false });
        }
        elems.push(Elem { symbol: sym, origin: Some(i), planted: false });
    }
    for &(_, opt) in included.iter().filter(|(p, _)| *p == spec.backbone.len()) {
        elems.push(Elem { symbol: opt, origin: None, planted: false });
    }
    let mut i = 0;
    while i + 1 < elems.len() {
        if unit(rng) < spec.noise.swap_prob {
            elems.swap(i, i + 1);
            i += 2;
        } else {
            i += 1;
        }
    }
    elems
}

/// Materializes a symbol list as a trace, sprinkling background events in.
fn materialize(
    spec: &WorkloadSpec,
    trace_id: &str,
    kind: TraceKind,
    elems: &[Elem],
    rng: &mut ChaCha8Rng,
) -> Trace {
    let mut symbols: Vec<Symbol> = elems.iter().map(|e| e.symbol).collect();
    for &idle in &spec.idle_types {
        if unit(rng) < spec.noise.background_prob {
            let pos = (rng.next_u64() % (symbols.len() as u64 + 1)) as usize;
            symbols.insert(pos, idle);
        }
    }
    let events = symbols
        .iter()
        .enumerate()
        .map(|(i, sym)| {
            let key = &spec.event_types[sym.index()];
            Event {
                timestamp_us: (i as u64 + 1) * 1_000,
                sender: key.sender.clone(),
                service_api: key.api.clone(),
                response_status: key.status.clone(),
                duration_us: 100,
            }
        })
        .collect();
    Trace::new(trace_id.to_string(), kind, events)
}

/// Generates `count` fault-free traces, each from an independent seeded
/// noise draw. Deterministic given the spec seed.
pub fn gen_faultfree(spec: &WorkloadSpec, count: usize) -> Result<Vec<Trace>, CoreError> {
    spec.validate()?;
    if count == 0 {
        return Err(CoreError::EmptyInput("gen_faultfree needs count >= 1"));
    }
    Ok((0..count)
        .map(|i| {
            let mut rng = rng_for(spec, i as u64);
            let elems = noisy_sequence(spec, &mut rng);
            materialize(
                spec,
                &alloc::format!("{}_ff_{i:04}", spec.name),
                TraceKind::FaultFree,
                &elems,
                &mut rng,
            )
        })
        .collect())
}

/// The campaign's idle trace: each background type observed a few times
/// with no workload running.
pub fn gen_idle(spec: &WorkloadSpec) -> Result<Trace, CoreError> {
    spec.validate()?;
    let symbols: Vec<Symbol> = spec
        .idle_types
        .iter()
        .chain(spec.idle_types.iter())
        .copied()
        .collect();
    let elems: Vec<Elem> =
        symbols.into_iter().map(|s| Elem { symbol: s, origin: None, planted: false }).collect();
    let mut rng = rng_for(spec, u64::MAX);
    Ok(materialize(
        spec,
        &alloc::format!("{}_idle_0000", spec.name),
        TraceKind::Idle,
        &elems,
        &mut rng,
    ))
}

/// Generates one faulty trace: noise first, then the fault edits, recording
/// the planted anomalies. `instance` separates repeated injections of the
/// same fault.
pub fn gen_faulty(
    spec: &WorkloadSpec,
    fault: &FaultSpec,
    instance: u64,
    trace_id: &str,
) -> Result<(Trace, PlantedAnomaly), CoreError> {
    spec.validate()?;
    let backbone_len = spec.backbone.len();
    let mut touched: Vec<usize> = Vec::new();
    for edit in &fault.edits {
        let (pos, limit) = match edit {
            FaultEdit::Insert { position, .. } => (*position, backbone_len + 1),
            FaultEdit::Delete { position } | FaultEdit::ReplaceStatus { position, .. } => {
                (*position, backbone_len)
            }
        };
        if pos >= limit {
            return Err(CoreError::EditOutOfRange { position: pos, backbone_len });
        }
        if !matches!(edit, FaultEdit::Insert { .. }) {
            if touched.contains(&pos) {
                return Err(CoreError::InvalidParameter(alloc::format!(
                    "two edits target backbone position {pos}"
                )));
            }
            touched.push(pos);
        }
    }

    let mut rng = rng_for(spec, (1 << 32) | instance);
    let mut elems = noisy_sequence(spec, &mut rng);
    let mut missing: Vec<(usize, Symbol)> = Vec::new();
    for edit in &fault.edits {
        match *edit {
            FaultEdit::Insert { position, symbol } => {
                let idx = elems
                    .iter()
                    .position(|e| e.origin.is_some_and(|o| o >= position))
                    .unwrap_or(elems.len());
                elems.insert(idx, Elem { symbol, origin: None, planted: true });
            }
            FaultEdit::Delete { position } => {
                let idx = elems
                    .iter()
                    .position(|e| e.origin == Some(position))
                    .expect("validated backbone position present");
                elems.remove(idx);
                missing.push((position, spec.backbone[position]));
            }
            FaultEdit::ReplaceStatus { position, symbol } => {
                let idx = elems
                    .iter()
                    .position(|e| e.origin == Some(position))
                    .expect("validated backbone position present");
                missing.push((position, elems[idx].symbol));
                elems[idx] = Elem { symbol, origin: None, planted: true };
            }
        }
    }
    let spurious: Vec<(usize, Symbol)> = elems
        .iter()
        .enumerate()
        .filter_map(|(i, e)| e.planted.then_some((i, e.symbol)))
        .collect();
    let trace = materialize(spec, trace_id, TraceKind::Faulty, &elems, &mut rng);
    Ok((
        trace,
        PlantedAnomaly { mode_label: fault.mode_label.clone(), spurious, missing },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::build_symbol_table;
    use alloc::vec;

    fn key(i: usize) -> EventKey {
        EventKey {
            sender: alloc::format!("svc{i}"),
            api: alloc::format!("op{i}"),
            status: "200".to_string(),
        }
    }

    fn spec(noise: NoiseSpec) -> WorkloadSpec {
        WorkloadSpec {
            name: "w".to_string(),
            event_types: (0..8).map(key).collect(),
            backbone: [0u32, 1, 2, 3, 4, 0, 1, 2].iter().map(|&i| Symbol(i)).collect(),
            noise,
            idle_types: vec![Symbol(7)],
            seed: 42,
        }
    }

    fn seq_of(trace: &Trace, spec: &WorkloadSpec) -> Vec<u32> {
        trace
            .events()
            .iter()
            .map(|e| {
                spec.event_types.iter().position(|k| *k == e.key()).unwrap() as u32
            })
            .collect()
    }

    #[test]
    fn zero_noise_reproduces_the_backbone() {
        let s = spec(NoiseSpec::none());
        let traces = gen_faultfree(&s, 3).unwrap();
        for t in &traces {
            assert_eq!(seq_of(t, &s), vec![0, 1, 2, 3, 4, 0, 1, 2]);
        }
    }

    #[test]
    fn forced_transposition_swaps_every_pair() {
        let mut s = spec(NoiseSpec::none());
        s.backbone = vec![Symbol(0), Symbol(1)];
        s.noise.swap_prob = 1.0;
        let t = &gen_faultfree(&s, 1).unwrap()[0];
        assert_eq!(seq_of(t, &s), vec![1, 0]);
    }

    #[test]
    fn optional_event_frequency_is_calibrated() {
        let mut s = spec(NoiseSpec::none());
        s.noise.optional_events = vec![(3, Symbol(5))];
        s.noise.optional_event_prob = 0.3;
        let traces = gen_faultfree(&s, 10_000).unwrap();
        let included = traces
            .iter()
            .filter(|t| seq_of(t, &s).contains(&5))
            .count();
        let freq = included as f64 / 10_000.0;
        assert!((freq - 0.3).abs() < 0.02, "observed {freq}");
    }

    #[test]
    fn generation_is_deterministic_given_seed() {
        let s = spec(NoiseSpec {
            swap_prob: 0.2,
            optional_event_prob: 0.5,
            optional_events: vec![(2, Symbol(5))],
            background_prob: 0.5,
        });
        assert_eq!(gen_faultfree(&s, 5).unwrap(), gen_faultfree(&s, 5).unwrap());
        let f = FaultSpec {
            mode_label: "m".to_string(),
            edits: vec![FaultEdit::Insert { position: 1, symbol: Symbol(6) }],
        };
        assert_eq!(
            gen_faulty(&s, &f, 3, "x").unwrap(),
            gen_faulty(&s, &f, 3, "x").unwrap()
        );
    }

    #[test]
    fn insert_plants_one_spurious_event() {
        let s = spec(NoiseSpec::none());
        let f = FaultSpec {
            mode_label: "ins".to_string(),
            edits: vec![FaultEdit::Insert { position: 2, symbol: Symbol(6) }],
        };
        let (t, gt) = gen_faulty(&s, &f, 0, "f0").unwrap();
        assert_eq!(seq_of(&t, &s), vec![0, 1, 6, 2, 3, 4, 0, 1, 2]);
        assert_eq!(gt.spurious, vec![(2, Symbol(6))]);
        assert!(gt.missing.is_empty());
    }

    #[test]
    fn delete_plants_one_missing_event() {
        let s = spec(NoiseSpec::none());
        let f = FaultSpec {
            mode_label: "del".to_string(),
            edits: vec![FaultEdit::Delete { position: 3 }],
        };
        let (t, gt) = gen_faulty(&s, &f, 0, "f0").unwrap();
        assert_eq!(seq_of(&t, &s), vec![0, 1, 2, 4, 0, 1, 2]);
        assert!(gt.spurious.is_empty());
        assert_eq!(gt.missing, vec![(3, Symbol(3))]);
    }

    #[test]
    fn replace_status_plants_spurious_plus_missing() {
        let s = spec(NoiseSpec::none());
        let f = FaultSpec {
            mode_label: "err".to_string(),
            edits: vec![FaultEdit::ReplaceStatus { position: 4, symbol: Symbol(6) }],
        };
        let (t, gt) = gen_faulty(&s, &f, 0, "f0").unwrap();
        assert_eq!(seq_of(&t, &s), vec![0, 1, 2, 3, 6, 0, 1, 2]);
        assert_eq!(gt.spurious, vec![(4, Symbol(6))]);
        assert_eq!(gt.missing, vec![(4, Symbol(4))]);
    }

    #[test]
    fn edit_out_of_range_is_an_error() {
        let s = spec(NoiseSpec::none());
        let f = FaultSpec {
            mode_label: "bad".to_string(),
            edits: vec![FaultEdit::Delete { position: 99 }],
        };
        assert!(matches!(
            gen_faulty(&s, &f, 0, "f0"),
            Err(CoreError::EditOutOfRange { .. })
        ));
    }

    #[test]
    fn planted_counts_equal_edit_counts() {
        let s = spec(NoiseSpec {
            swap_prob: 0.3,
            optional_event_prob: 0.5,
            optional_events: vec![(1, Symbol(5)), (6, Symbol(5))],
            background_prob: 0.0,
        });
        let f = FaultSpec {
            mode_label: "mix".to_string(),
            edits: vec![
                FaultEdit::Insert { position: 0, symbol: Symbol(6) },
                FaultEdit::Delete { position: 2 },
                FaultEdit::ReplaceStatus { position: 5, symbol: Symbol(6) },
            ],
        };
        for instance in 0..50 {
            let (_, gt) = gen_faulty(&s, &f, instance, "f").unwrap();
            assert_eq!(gt.spurious.len(), 2);
            assert_eq!(gt.missing.len(), 2);
        }
    }

    #[test]
    fn planted_positions_point_at_the_planted_symbols() {
        let s = spec(NoiseSpec {
            swap_prob: 0.2,
            optional_event_prob: 0.4,
            optional_events: vec![(3, Symbol(5))],
            background_prob: 0.0,
        });
        let f = FaultSpec {
            mode_label: "m".to_string(),
            edits: vec![FaultEdit::Insert { position: 4, symbol: Symbol(6) }],
        };
        for instance in 0..30 {
            let (t, gt) = gen_faulty(&s, &f, instance, "f").unwrap();
            let ids = seq_of(&t, &s);
            for (pos, sym) in &gt.spurious {
                assert_eq!(ids[*pos], sym.0);
            }
        }
    }

    #[test]
    fn zero_noise_diff_equals_planted_edits_end_to_end() {
        use crate::align::diff;
        let s = spec(NoiseSpec::none());
        let ff = gen_faultfree(&s, 2).unwrap();
        let f = FaultSpec {
            mode_label: "m".to_string(),
            edits: vec![
                FaultEdit::Insert { position: 3, symbol: Symbol(6) },
                FaultEdit::Delete { position: 6 },
            ],
        };
        let (ft, gt) = gen_faulty(&s, &f, 0, "f0").unwrap();
        let idle = gen_idle(&s).unwrap();
        let all = [ff[0].clone(), ff[1].clone(), ft.clone(), idle.clone()];
        let table = build_symbol_table(&all).unwrap();
        let (faulty_seq, _) = crate::trace::filter_idle(&ft, &idle, &table).unwrap();
        let (ref_seq, _) = crate::trace::filter_idle(&ff[0], &idle, &table).unwrap();
        let d = diff(&faulty_seq, &ref_seq);
        // symbol ids may differ between spec and table; compare via triples
        assert_eq!(d.only_faulty.len(), 1);
        assert_eq!(d.only_faultfree.len(), 1);
        let (pos, sym) = d.only_faulty[0];
        assert_eq!(pos, gt.spurious[0].0);
        assert_eq!(table.decode(sym).unwrap(), &s.event_types[gt.spurious[0].1.index()]);
        let (_, msym) = d.only_faultfree[0];
        assert_eq!(table.decode(msym).unwrap(), &s.event_types[gt.missing[0].1.index()]);
    }
}
