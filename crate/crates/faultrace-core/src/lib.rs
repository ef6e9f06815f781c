//! Core analytics for fault-injection trace campaigns.
//!
//! The pipeline turns raw execution traces into symbol sequences, aligns each
//! faulty trace against its most similar fault-free reference with an LCS
//! diff, filters non-deterministic differences with a PPM-C variable-order
//! Markov model, and clusters the surviving anomalies into failure modes.
//!
//! This crate is `no_std` (with `alloc`); all IO, file formats and the CLI
//! live in the companion `faultrace` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod align;
pub mod cluster;
pub mod detect;
pub mod error;
pub mod sim;
pub mod trace;
pub mod vmm;

pub use align::{diff, lcs_length, nlcs, select_reference, LcsDiff};
pub use cluster::{
    build_vectors, kmedoids, purity, select_k, silhouette, ClusterResult, FeatureVector,
    Representation,
};
pub use detect::{
    analyze_campaign, analyze_experiment, score_metrics, AnomalyReport, EventLabel,
    GroundTruth, LabeledEvent, Metrics, PlantedSet, Thresholds,
};
pub use error::CoreError;
pub use sim::{gen_faultfree, gen_faulty, FaultEdit, FaultSpec, NoiseSpec, PlantedAnomaly, WorkloadSpec};
pub use trace::{
    build_symbol_table, filter_idle, Event, EventKey, Symbol, SymbolSequence, SymbolTable, Trace,
    TraceKind,
};
