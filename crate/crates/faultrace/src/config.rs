//! Analysis configuration and defaults.

use std::path::PathBuf;

use faultrace_core::{Representation, Thresholds};

pub const DEFAULT_MAX_ORDER: usize = 5;
pub const DEFAULT_EPS_SPURIOUS: f64 = 0.20;
pub const DEFAULT_EPS_MISSING: f64 = 0.80;
pub const DEFAULT_K_MIN: usize = 2;
pub const DEFAULT_K_MAX: usize = 20;

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub campaign_dir: PathBuf,
    pub max_order: usize,
    pub eps_spurious: f64,
    pub eps_missing: f64,
    pub representation: Representation,
    pub k_min: usize,
    pub k_max: usize,
    pub seed: u64,
    pub workers: usize,
    /// Omit wall-clock fields from outputs so reruns are byte-identical.
    pub deterministic: bool,
}

impl RunConfig {
    pub fn new(campaign_dir: PathBuf) -> RunConfig {
        RunConfig {
            campaign_dir,
            max_order: DEFAULT_MAX_ORDER,
            eps_spurious: DEFAULT_EPS_SPURIOUS,
            eps_missing: DEFAULT_EPS_MISSING,
            representation: Representation::Vmm,
            k_min: DEFAULT_K_MIN,
            k_max: DEFAULT_K_MAX,
            seed: 0,
            workers: 1,
            deterministic: false,
        }
    }

    pub fn thresholds(&self) -> Thresholds {
        Thresholds { eps_spurious: self.eps_spurious, eps_missing: self.eps_missing }
    }
}

pub fn parse_representation(s: &str) -> Result<Representation, String> {
    match s.to_ascii_lowercase().as_str() {
        "vmm" => Ok(Representation::Vmm),
        "lcs" => Ok(Representation::Lcs),
        "seq" => Ok(Representation::Seq),
        other => Err(format!("unknown representation {other:?} (expected vmm|lcs|seq)")),
    }
}

/// Parses a K range of the form "A..B" or a single "K".
pub fn parse_k_range(s: &str) -> Result<(usize, usize), String> {
    let parse = |t: &str| t.parse::<usize>().map_err(|e| format!("bad K value {t:?}: {e}"));
    if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (parse(a)?, parse(b)?);
        if a < 2 || b < a {
            return Err(format!("invalid K range {s:?}"));
        }
        Ok((a, b))
    } else {
        let k = parse(s)?;
        if k < 2 {
            return Err("K must be at least 2".to_string());
        }
        Ok((k, k))
    }
}
