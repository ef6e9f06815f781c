//! Trace-file ingestion: JSON Lines, one event per line, laid out as
//! `<campaign>/<kind>/<trace_id>.jsonl` with kind in {faultfree, faulty,
//! idle}.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use faultrace_core::{Event, Trace, TraceKind};

/// Wire format of one event record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EventRecord {
    pub ts_us: u64,
    pub sender: String,
    pub api: String,
    pub status: String,
    pub dur_us: u64,
}

impl From<&Event> for EventRecord {
    fn from(e: &Event) -> EventRecord {
        EventRecord {
            ts_us: e.timestamp_us,
            sender: e.sender.clone(),
            api: e.service_api.clone(),
            status: e.response_status.clone(),
            dur_us: e.duration_us,
        }
    }
}

impl EventRecord {
    fn into_event(self) -> Event {
        Event {
            timestamp_us: self.ts_us,
            sender: self.sender,
            service_api: self.api,
            response_status: self.status,
            duration_us: self.dur_us,
        }
    }
}

/// Canonical field names for error messages, keyed by wire name.
const REQUIRED_FIELDS: [(&str, &str); 5] = [
    ("ts_us", "timestamp_us"),
    ("sender", "sender"),
    ("api", "service_api"),
    ("status", "response_status"),
    ("dur_us", "duration_us"),
];

fn parse_line(line: &str, lineno: usize) -> Result<Event> {
    let value: serde_json::Value = serde_json::from_str(line)
        .with_context(|| format!("malformed record at line {lineno}"))?;
    let obj = value
        .as_object()
        .with_context(|| format!("record at line {lineno} is not a JSON object"))?;
    for (wire, canonical) in REQUIRED_FIELDS {
        if !obj.contains_key(wire) {
            bail!("missing field {canonical} at line {lineno}");
        }
    }
    let record: EventRecord = serde_json::from_value(value)
        .with_context(|| format!("malformed record at line {lineno}"))?;
    if record.sender.is_empty() {
        bail!("empty sender at line {lineno}");
    }
    if record.api.is_empty() {
        bail!("empty service_api at line {lineno}");
    }
    Ok(record.into_event())
}

/// Reads one trace file. The trace id is the file stem.
pub fn ingest_trace_file(path: &Path, kind: TraceKind) -> Result<Trace> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read trace file {}", path.display()))?;
    let trace_id = path
        .file_stem()
        .and_then(|s| s.to_str())
        .with_context(|| format!("bad trace file name {}", path.display()))?
        .to_string();
    let mut events = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        events.push(
            parse_line(line, i + 1)
                .with_context(|| format!("in trace file {}", path.display()))?,
        );
    }
    if events.is_empty() {
        bail!("trace file {} contains no events", path.display());
    }
    Ok(Trace::new(trace_id, kind, events))
}

/// Reads every `.jsonl` file under `dir` (sorted by name) as traces of the
/// given kind.
pub fn ingest_traces(dir: &Path, kind: TraceKind) -> Result<Vec<Trace>> {
    if !dir.is_dir() {
        bail!("trace directory {} does not exist", dir.display());
    }
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("cannot list {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    paths.sort();
    paths.iter().map(|p| ingest_trace_file(p, kind)).collect()
}

/// A campaign directory loaded into memory.
pub struct Campaign {
    pub fault_free: Vec<Trace>,
    pub faulty: Vec<Trace>,
    pub idle: Vec<Trace>,
}

pub fn load_campaign(dir: &Path) -> Result<Campaign> {
    let fault_free = ingest_traces(&dir.join("faultfree"), TraceKind::FaultFree)?;
    let faulty = ingest_traces(&dir.join("faulty"), TraceKind::Faulty)?;
    let idle_dir = dir.join("idle");
    let idle = if idle_dir.is_dir() {
        ingest_traces(&idle_dir, TraceKind::Idle)?
    } else {
        Vec::new()
    };
    Ok(Campaign { fault_free, faulty, idle })
}

/// Writes one trace as a JSONL file under `dir`.
pub fn write_trace(dir: &Path, trace: &Trace) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(format!("{}.jsonl", trace.trace_id));
    let mut out = String::new();
    for event in trace.events() {
        out.push_str(&serde_json::to_string(&EventRecord::from(event))?);
        out.push('\n');
    }
    fs::write(&path, out).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(path)
}
