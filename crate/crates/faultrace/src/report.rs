//! Static, self-contained HTML reports derived from the cluster and
//! experiment JSON: a failure-mode distribution page and one timeline page
//! per experiment with events colored by label.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::Result;

use crate::pipeline::{ClustersJson, LoadedReports};

const STYLE: &str = r#"
body { font-family: sans-serif; margin: 2em; color: #222; }
h1, h2 { font-weight: 600; }
.bar { background: #4878a8; height: 1.2em; display: inline-block; vertical-align: middle; }
.barrow { margin: 0.2em 0; }
.barlabel { display: inline-block; width: 18em; }
table { border-collapse: collapse; margin: 1em 0; }
td, th { border: 1px solid #ccc; padding: 0.3em 0.6em; text-align: left; }
.ev { display: inline-block; padding: 0.15em 0.35em; margin: 0.1em; border-radius: 3px; font-size: 0.85em; }
.common { background: #e4e4e4; }
.spurious { background: #d9534f; color: #fff; }
.missing { background: #f0ad4e; }
.filtered_spurious { background: #f3c6c4; }
.filtered_missing { background: #f8e3c2; }
.legend span { margin-right: 0.8em; }
"#;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn page(title: &str, body: &str) -> String {
    format!(
        "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\">\
         <title>{title}</title><style>{STYLE}</style></head>\n\
         <body>\n{body}\n</body></html>\n",
        title = escape(title),
    )
}

fn symbol_name(loaded: &LoadedReports, id: u32) -> String {
    loaded
        .summary
        .symbols
        .iter()
        .find(|s| s.id == id)
        .map(|s| format!("{} {} [{}]", s.sender, s.api, s.status))
        .unwrap_or_else(|| format!("symbol {id}"))
}

fn distribution_page(clusters: &ClustersJson, loaded: &LoadedReports) -> String {
    let total: usize = clusters.clusters.iter().map(|c| c.size).sum();
    let mut body = String::new();
    let _ = writeln!(body, "<h1>Failure-mode distribution</h1>");
    let _ = writeln!(
        body,
        "<p>{} experiments, K* = {} (global silhouette {:.3}{})</p>",
        total,
        clusters.k_star,
        clusters.global_silhouette,
        clusters
            .purity
            .map(|p| format!(", purity {p:.3}"))
            .unwrap_or_default()
    );
    for c in &clusters.clusters {
        let width = if total > 0 { 400 * c.size / total } else { 0 };
        let _ = writeln!(
            body,
            "<div class=\"barrow\"><span class=\"barlabel\">cluster {} ({} exp.)</span>\
             <span class=\"bar\" style=\"width:{}px\"></span></div>",
            c.cluster, c.size, width.max(2)
        );
    }
    let _ = writeln!(body, "<h2>Per-cluster anomaly summary</h2>");
    let _ = writeln!(
        body,
        "<table><tr><th>cluster</th><th>size</th><th>medoid</th>\
         <th>top spurious</th><th>top missing</th><th>purity</th></tr>"
    );
    for c in &clusters.clusters {
        let _ = writeln!(
            body,
            "<tr><td>{}</td><td>{}</td><td>{}</td><td>{}</td><td>{}</td><td>{}</td></tr>",
            c.cluster,
            c.size,
            escape(&c.medoid),
            escape(&c.top_spurious.join("; ")),
            escape(&c.top_missing.join("; ")),
            c.purity.map(|p| format!("{p:.3}")).unwrap_or_else(|| "-".into()),
        );
    }
    let _ = writeln!(body, "</table>");
    let _ = writeln!(body, "<h2>K selection curve</h2><table><tr><th>K</th><th>silhouette</th></tr>");
    for (k, s) in &clusters.k_curve {
        let star = if *k == clusters.k_star { " *" } else { "" };
        let _ = writeln!(body, "<tr><td>{k}{star}</td><td>{s:.4}</td></tr>");
    }
    let _ = writeln!(body, "</table>");
    let _ = writeln!(body, "<h2>Experiment timelines</h2><ul>");
    for report in &loaded.reports {
        let _ = writeln!(
            body,
            "<li><a href=\"timelines/{id}.html\">{id}</a> (cluster {})</li>",
            clusters.assignments.get(&report.experiment_id).copied().unwrap_or(0),
            id = escape(&report.experiment_id),
        );
    }
    let _ = writeln!(body, "</ul>");
    page("Failure-mode report", &body)
}

fn timeline_page(loaded: &LoadedReports, idx: usize) -> String {
    use faultrace_core::detect::EventLabel;
    let report = &loaded.reports[idx];
    let mut body = String::new();
    let _ = writeln!(body, "<h1>{}</h1>", escape(&report.experiment_id));
    let _ = writeln!(
        body,
        "<p>reference: {} (nLCS {:.4})</p>",
        escape(&report.selected_reference_id),
        report.reference_nlcs
    );
    let _ = writeln!(
        body,
        "<p class=\"legend\"><span class=\"ev common\">common</span>\
         <span class=\"ev spurious\">spurious</span>\
         <span class=\"ev missing\">missing</span>\
         <span class=\"ev filtered_spurious\">filtered spurious</span>\
         <span class=\"ev filtered_missing\">filtered missing</span></p>"
    );
    let _ = writeln!(body, "<h2>Faulty trace</h2><div>");
    for e in report.faulty_side() {
        let class = match e.label {
            EventLabel::Common => "common",
            EventLabel::Spurious => "spurious",
            _ => "filtered_spurious",
        };
        let prob = e.probability.map(|p| format!(" p={p:.3}")).unwrap_or_default();
        let _ = writeln!(
            body,
            "<span class=\"ev {class}\" title=\"position {}\">{}{}</span>",
            e.position,
            escape(&symbol_name(loaded, e.symbol.0)),
            prob
        );
    }
    let _ = writeln!(body, "</div><h2>Events missing from the faulty trace</h2><div>");
    for e in report.missing_side() {
        let class = if e.label == EventLabel::Missing { "missing" } else { "filtered_missing" };
        let prob = e.probability.map(|p| format!(" p={p:.3}")).unwrap_or_default();
        let _ = writeln!(
            body,
            "<span class=\"ev {class}\" title=\"reference position {}\">{}{}</span>",
            e.position,
            escape(&symbol_name(loaded, e.symbol.0)),
            prob
        );
    }
    let _ = writeln!(body, "</div><p><a href=\"../report.html\">back</a></p>");
    page(&report.experiment_id.clone(), &body)
}

/// Writes `report.html` and `timelines/<experiment>.html` under `out_dir`.
/// The pages are self-contained: inline CSS, no scripts, no network.
pub fn write_html_report(
    out_dir: &Path,
    clusters: &ClustersJson,
    loaded: &LoadedReports,
) -> Result<()> {
    fs::write(out_dir.join("report.html"), distribution_page(clusters, loaded))?;
    let tl_dir = out_dir.join("timelines");
    fs::create_dir_all(&tl_dir)?;
    for idx in 0..loaded.reports.len() {
        let id = &loaded.reports[idx].experiment_id;
        fs::write(tl_dir.join(format!("{id}.html")), timeline_page(loaded, idx))?;
    }
    Ok(())
}
