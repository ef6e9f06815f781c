//! Command-line entry points.
//!
//! Exit codes: 0 on success, 1 on analysis errors, 2 on usage errors.
//! `TF_SEED` and `TF_WORKERS` provide environment defaults; flags win.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use crate::campaign::{self, CampaignSpec};
use crate::config::{self, RunConfig};
use crate::pipeline;

#[derive(Parser)]
#[command(
    name = "faultrace",
    about = "Failure-mode analytics for fault-injection trace campaigns",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonFlags {
    /// Omit wall-clock fields so reruns are byte-identical.
    #[arg(long, global = true)]
    deterministic: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic campaign from a TOML spec.
    Generate {
        /// Campaign spec file.
        spec: PathBuf,
        /// Output campaign directory (default: ./<campaign name>).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Analyze a campaign directory into per-experiment anomaly reports.
    Analyze {
        /// Campaign directory (faultfree/, faulty/, idle/).
        campaign: PathBuf,
        /// Maximum context order of the probabilistic model.
        #[arg(long = "d", value_name = "N", default_value_t = config::DEFAULT_MAX_ORDER)]
        max_order: usize,
        #[arg(long, default_value_t = config::DEFAULT_EPS_SPURIOUS)]
        eps_spurious: f64,
        #[arg(long, default_value_t = config::DEFAULT_EPS_MISSING)]
        eps_missing: f64,
        /// Analysis worker threads.
        #[arg(long, env = "TF_WORKERS", default_value_t = 1)]
        workers: usize,
        /// Output reports directory (default: <campaign>/reports).
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: CommonFlags,
    },
    /// Cluster analyzed experiments into failure modes and emit the report.
    Cluster {
        /// Reports directory produced by `analyze`.
        reports: PathBuf,
        /// K range to scan, e.g. 2..20 or a single K.
        #[arg(long, value_name = "A..B", default_value = "2..20")]
        k_range: String,
        /// Feature representation: vmm, lcs or seq.
        #[arg(long, default_value = "vmm")]
        representation: String,
        #[arg(long, env = "TF_SEED", default_value_t = 0)]
        seed: u64,
        /// Output directory (default: <reports>/clusters).
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: CommonFlags,
    },
    /// Score stored reports against a ground-truth file.
    Metrics {
        /// Reports directory produced by `analyze`.
        reports: PathBuf,
        /// ground_truth.json file.
        ground_truth: PathBuf,
    },
}

fn usage_error(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn run_command(command: Command) -> Result<ExitCode> {
    match command {
        Command::Generate { spec, out } => {
            if !spec.is_file() {
                return Ok(usage_error(&format!("spec not found: {}", spec.display())));
            }
            let parsed = CampaignSpec::load(&spec)?;
            let out_dir = out.unwrap_or_else(|| PathBuf::from(&parsed.name));
            let dir = campaign::generate(&parsed, &out_dir)?;
            println!("campaign written to {}", dir.display());
        }
        Command::Analyze {
            campaign,
            max_order,
            eps_spurious,
            eps_missing,
            workers,
            out,
            common,
        } => {
            if !campaign.is_dir() {
                return Ok(usage_error(&format!(
                    "campaign directory not found: {}",
                    campaign.display()
                )));
            }
            if !(1..=8).contains(&max_order) {
                return Ok(usage_error("--d must be in 1..=8"));
            }
            let mut config = RunConfig::new(campaign.clone());
            config.max_order = max_order;
            config.eps_spurious = eps_spurious;
            config.eps_missing = eps_missing;
            config.workers = workers;
            config.deterministic = common.deterministic;
            let out_dir = out.unwrap_or_else(|| campaign.join("reports"));
            let output = pipeline::run_analyze(&config, &out_dir)?;
            println!("reports written to {}", output.reports_dir.display());
            if let Some(m) = &output.summary.metrics_vmm {
                println!(
                    "hit rate: {}   false-alarm rate: {}",
                    m.hit_rate.map(|v| format!("{v:.4}")).unwrap_or_else(|| "n/a".into()),
                    m.false_alarm_rate.map(|v| format!("{v:.4}")).unwrap_or_else(|| "n/a".into()),
                );
            }
        }
        Command::Cluster { reports, k_range, representation, seed, out, common } => {
            if !reports.is_dir() {
                return Ok(usage_error(&format!(
                    "reports directory not found: {}",
                    reports.display()
                )));
            }
            let (k_min, k_max) = match config::parse_k_range(&k_range) {
                Ok(r) => r,
                Err(e) => return Ok(usage_error(&e)),
            };
            let repr = match config::parse_representation(&representation) {
                Ok(r) => r,
                Err(e) => return Ok(usage_error(&e)),
            };
            let mut config = RunConfig::new(reports.clone());
            config.k_min = k_min;
            config.k_max = k_max;
            config.representation = repr;
            config.seed = seed;
            config.deterministic = common.deterministic;
            let out_dir = out.unwrap_or_else(|| reports.join("clusters"));
            let output = pipeline::run_cluster(&reports, &config, &out_dir)?;
            println!(
                "K* = {} (silhouette {:.4}); report at {}",
                output.clusters.k_star,
                output.clusters.global_silhouette,
                output.out_dir.join("report.html").display()
            );
            if let Some(p) = output.clusters.purity {
                println!("purity: {p:.4}");
            }
        }
        Command::Metrics { reports, ground_truth } => {
            if !ground_truth.is_file() {
                return Ok(usage_error(&format!(
                    "ground truth not found: {}",
                    ground_truth.display()
                )));
            }
            let (vmm, lcs) = pipeline::run_metrics(&reports, &ground_truth)?;
            let out = serde_json::json!({ "vmm": vmm, "lcs": lcs });
            println!("{}", serde_json::to_string_pretty(&out)?);
        }
    }
    Ok(ExitCode::SUCCESS)
}

pub fn run() -> ExitCode {
    let cli = Cli::parse();
    match run_command(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
