//! Traces, events, the symbol dictionary and idle-event filtering.
//!
//! Every event type is identified by the triple (sender, service API,
//! response status). The symbol table assigns each distinct triple a dense
//! integer id in first-occurrence order and is frozen once built over the
//! whole campaign corpus.

use alloc::collections::BTreeMap;
use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::CoreError;

/// One observed message: a remote API invocation with its outcome.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    /// Microseconds since the campaign epoch.
    pub timestamp_us: u64,
    /// Component that invoked the API (message sender).
    pub sender: String,
    /// Remote method name.
    pub service_api: String,
    /// Response status, e.g. an HTTP code or "OK"/"ERR".
    pub response_status: String,
    /// Call duration in microseconds. Carried for reporting only; it plays
    /// no role in symbolization.
    pub duration_us: u64,
}

impl Event {
    pub fn key(&self) -> EventKey {
        EventKey {
            sender: self.sender.clone(),
            api: self.service_api.clone(),
            status: self.response_status.clone(),
        }
    }
}

/// The identity triple of an event type.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EventKey {
    pub sender: String,
    pub api: String,
    pub status: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceKind {
    FaultFree,
    Faulty,
    Idle,
}

/// An ordered list of events from one run.
///
/// Events are kept sorted by timestamp; ties preserve ingestion order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub trace_id: String,
    pub kind: TraceKind,
    events: Vec<Event>,
}

impl Trace {
    /// Builds a trace, stably sorting events by timestamp.
    pub fn new(trace_id: String, kind: TraceKind, mut events: Vec<Event>) -> Trace {
        events.sort_by_key(|e| e.timestamp_us);
        Trace { trace_id, kind, events }
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

/// Dense integer identifier of an event type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol(pub u32);

impl Symbol {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Bijective event-type ↔ symbol dictionary, frozen after construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolTable {
    forward: BTreeMap<EventKey, Symbol>,
    reverse: Vec<EventKey>,
}

impl SymbolTable {
    /// Number of distinct symbols.
    pub fn len(&self) -> usize {
        self.reverse.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reverse.is_empty()
    }

    pub fn encode(&self, key: &EventKey) -> Result<Symbol, CoreError> {
        self.forward.get(key).copied().ok_or_else(|| CoreError::UnknownEventType {
            sender: key.sender.clone(),
            api: key.api.clone(),
            status: key.status.clone(),
        })
    }

    pub fn decode(&self, symbol: Symbol) -> Result<&EventKey, CoreError> {
        self.reverse.get(symbol.index()).ok_or(CoreError::UnknownSymbol {
            id: symbol.0,
            alphabet: self.reverse.len() as u32,
        })
    }

    /// Symbolizes a whole trace.
    pub fn encode_trace(&self, trace: &Trace) -> Result<SymbolSequence, CoreError> {
        let mut symbols = Vec::with_capacity(trace.len());
        for event in trace.events() {
            symbols.push(self.encode(&event.key())?);
        }
        Ok(SymbolSequence { trace_id: trace.trace_id.clone(), symbols })
    }
}

/// A trace rendered as a string of symbols.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolSequence {
    pub trace_id: String,
    pub symbols: Vec<Symbol>,
}

impl SymbolSequence {
    pub fn new(trace_id: String, symbols: Vec<Symbol>) -> SymbolSequence {
        SymbolSequence { trace_id, symbols }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

/// Assigns a dense symbol id to every distinct event type across the whole
/// corpus, in first-occurrence order.
pub fn build_symbol_table(traces: &[Trace]) -> Result<SymbolTable, CoreError> {
    if traces.is_empty() {
        return Err(CoreError::EmptyInput("build_symbol_table needs at least one trace"));
    }
    let mut forward = BTreeMap::new();
    let mut reverse = Vec::new();
    for trace in traces {
        for event in trace.events() {
            let key = event.key();
            if !forward.contains_key(&key) {
                let symbol = Symbol(reverse.len() as u32);
                forward.insert(key.clone(), symbol);
                reverse.push(key);
            }
        }
    }
    Ok(SymbolTable { forward, reverse })
}

/// Symbolizes `trace` and drops every event whose type occurs anywhere in the
/// idle trace. Removal is by event type (all occurrences); survivor order is
/// preserved.
///
/// Returns the filtered sequence and a flag telling whether it came out
/// empty even though the input was not.
pub fn filter_idle(
    trace: &Trace,
    idle: &Trace,
    table: &SymbolTable,
) -> Result<(SymbolSequence, bool), CoreError> {
    let mut idle_types: BTreeSet<Symbol> = BTreeSet::new();
    for event in idle.events() {
        idle_types.insert(table.encode(&event.key())?);
    }
    let full = table.encode_trace(trace)?;
    let symbols: Vec<Symbol> =
        full.symbols.into_iter().filter(|s| !idle_types.contains(s)).collect();
    let emptied = symbols.is_empty() && !trace.is_empty();
    Ok((SymbolSequence { trace_id: full.trace_id, symbols }, emptied))
}
