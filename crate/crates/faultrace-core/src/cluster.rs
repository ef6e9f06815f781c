//! Failure-mode discovery: anomaly feature vectors, K-Medoids clustering
//! with squared Euclidean distance, silhouette-based K selection, and purity
//! scoring against ground-truth classes.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand_core::{RngCore, SeedableRng};

use crate::detect::{AnomalyReport, EventLabel};
use crate::error::CoreError;
use crate::trace::Symbol;

/// How an experiment is turned into a feature vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    /// 2d vector of confirmed Spurious / Missing counts per symbol.
    Vmm,
    /// 2d vector of all LCS differences per symbol, filtered or not.
    Lcs,
    /// d vector of raw per-symbol occurrence counts in the faulty trace.
    Seq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub experiment_id: String,
    pub values: Vec<f64>,
}

/// Builds one feature vector per report. `d` is the dictionary size.
pub fn build_vectors(
    reports: &[AnomalyReport],
    d: usize,
    representation: Representation,
) -> Vec<FeatureVector> {
    reports
        .iter()
        .map(|report| {
            let mut values = match representation {
                Representation::Seq => vec![0.0; d],
                _ => vec![0.0; 2 * d],
            };
            let mut bump = |sym: Symbol, offset: usize| {
                values[offset + sym.index()] += 1.0;
            };
            for e in &report.events {
                match (representation, e.label) {
                    (Representation::Vmm, EventLabel::Spurious) => bump(e.symbol, 0),
                    (Representation::Vmm, EventLabel::Missing) => bump(e.symbol, d),
                    (
                        Representation::Lcs,
                        EventLabel::Spurious | EventLabel::FilteredSpurious,
                    ) => bump(e.symbol, 0),
                    (Representation::Lcs, EventLabel::Missing | EventLabel::FilteredMissing) => {
                        bump(e.symbol, d)
                    }
                    (
                        Representation::Seq,
                        EventLabel::Common | EventLabel::Spurious | EventLabel::FilteredSpurious,
                    ) => bump(e.symbol, 0),
                    _ => {}
                }
            }
            FeatureVector { experiment_id: report.experiment_id.clone(), values }
        })
        .collect()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterResult {
    pub k: usize,
    /// Cluster index per input vector.
    pub assignments: Vec<usize>,
    /// Indices into the input vectors of each cluster's medoid.
    pub medoids: Vec<usize>,
    pub global_silhouette: f64,
}

fn distinct_count(vectors: &[FeatureVector]) -> usize {
    let mut seen: Vec<&[f64]> = Vec::new();
    for v in vectors {
        if !seen.iter().any(|s| *s == v.values.as_slice()) {
            seen.push(&v.values);
        }
    }
    seen.len()
}

/// PAM-style K-Medoids with squared Euclidean distance.
///
/// Initialization is greedy farthest-point from a seeded random start, which
/// guarantees K distinct medoids. Alternates assignment and medoid update
/// until the medoid set is stable (at most 100 iterations). Deterministic
/// given the seed.
pub fn kmedoids(
    vectors: &[FeatureVector],
    k: usize,
    seed: u64,
) -> Result<ClusterResult, CoreError> {
    let n = vectors.len();
    if k < 2 {
        return Err(CoreError::InvalidParameter(alloc::format!("K must be >= 2, got {k}")));
    }
    if k > distinct_count(vectors) {
        return Err(CoreError::InvalidParameter(alloc::format!(
            "K = {k} exceeds the number of distinct vectors ({})",
            distinct_count(vectors)
        )));
    }
    let dist = |i: usize, j: usize| sq_dist(&vectors[i].values, &vectors[j].values);

    // farthest-point initialization
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut medoids = vec![(rng.next_u64() % n as u64) as usize];
    while medoids.len() < k {
        let mut best = (0usize, f64::NEG_INFINITY);
        for i in 0..n {
            let min_d = medoids.iter().map(|&m| dist(i, m)).fold(f64::INFINITY, f64::min);
            if min_d > best.1 {
                best = (i, min_d);
            }
        }
        medoids.push(best.0);
    }

    let mut assignments = vec![0usize; n];
    for _ in 0..100 {
        // assignment step: nearest medoid, ties to the lowest cluster index
        for i in 0..n {
            let mut best = (0usize, f64::INFINITY);
            for (c, &m) in medoids.iter().enumerate() {
                let d = dist(i, m);
                if d < best.1 {
                    best = (c, d);
                }
            }
            assignments[i] = best.0;
        }
        // update step: member minimizing total within-cluster distance
        let mut changed = false;
        for c in 0..k {
            let members: Vec<usize> =
                (0..n).filter(|&i| assignments[i] == c).collect();
            let mut best = (medoids[c], f64::INFINITY);
            for &cand in &members {
                let total: f64 = members.iter().map(|&m| dist(cand, m)).sum();
                if total < best.1 {
                    best = (cand, total);
                }
            }
            if best.0 != medoids[c] {
                medoids[c] = best.0;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    // final assignment against the settled medoids
    for i in 0..n {
        let mut best = (0usize, f64::INFINITY);
        for (c, &m) in medoids.iter().enumerate() {
            let d = dist(i, m);
            if d < best.1 {
                best = (c, d);
            }
        }
        assignments[i] = best.0;
    }
    let mut result = ClusterResult { k, assignments, medoids, global_silhouette: 0.0 };
    result.global_silhouette = silhouette(vectors, &result)?;
    Ok(result)
}

/// Global silhouette: per-sample widths s_i = (b_i - a_i) / max(a_i, b_i),
/// averaged within each cluster, then averaged over clusters. Singleton
/// clusters (and the degenerate a_i = b_i = 0 case) contribute width 0.
pub fn silhouette(vectors: &[FeatureVector], result: &ClusterResult) -> Result<f64, CoreError> {
    if result.k < 2 {
        return Err(CoreError::InvalidParameter("silhouette needs K >= 2".into()));
    }
    let n = vectors.len();
    let mut cluster_widths: Vec<Vec<f64>> = vec![Vec::new(); result.k];
    for i in 0..n {
        let own = result.assignments[i];
        let own_size = result.assignments.iter().filter(|&&c| c == own).count();
        let s = if own_size <= 1 {
            0.0
        } else {
            let mut sums = vec![0.0f64; result.k];
            let mut counts = vec![0usize; result.k];
            for j in 0..n {
                if j != i {
                    sums[result.assignments[j]] += sq_dist(&vectors[i].values, &vectors[j].values);
                    counts[result.assignments[j]] += 1;
                }
            }
            let a = sums[own] / (own_size - 1) as f64;
            let b = (0..result.k)
                .filter(|&c| c != own && counts[c] > 0)
                .map(|c| sums[c] / counts[c] as f64)
                .fold(f64::INFINITY, f64::min);
            let denom = a.max(b);
            if denom == 0.0 {
                0.0
            } else {
                (b - a) / denom
            }
        };
        cluster_widths[own].push(s);
    }
    let per_cluster: Vec<f64> = cluster_widths
        .iter()
        .map(|w| if w.is_empty() { 0.0 } else { w.iter().sum::<f64>() / w.len() as f64 })
        .collect();
    Ok(per_cluster.iter().sum::<f64>() / per_cluster.len() as f64)
}

/// Runs K-Medoids for each K in [k_min, k_max] and picks the silhouette
/// argmax (ties toward the smallest K). Returns the winning result and the
/// full (K, silhouette) curve for knee inspection.
pub fn select_k(
    vectors: &[FeatureVector],
    k_min: usize,
    k_max: usize,
    seed: u64,
) -> Result<(ClusterResult, Vec<(usize, f64)>), CoreError> {
    if k_min < 2 || k_max < k_min {
        return Err(CoreError::InvalidParameter(alloc::format!(
            "invalid K range {k_min}..{k_max}"
        )));
    }
    let upper = k_max.min(distinct_count(vectors));
    if upper < k_min {
        return Err(CoreError::InvalidParameter(alloc::format!(
            "fewer distinct vectors than k_min = {k_min}"
        )));
    }
    let mut curve = Vec::new();
    let mut best: Option<ClusterResult> = None;
    for k in k_min..=upper {
        let result = kmedoids(vectors, k, seed)?;
        curve.push((k, result.global_silhouette));
        let better = match &best {
            None => true,
            Some(b) => result.global_silhouette > b.global_silhouette,
        };
        if better {
            best = Some(result);
        }
    }
    Ok((best.expect("range checked non-empty"), curve))
}

/// Weighted purity: for each cluster the fraction of members in its majority
/// ground-truth class, weighted by cluster size. Also returns the per-cluster
/// purities.
pub fn purity(
    vectors: &[FeatureVector],
    result: &ClusterResult,
    labels: &BTreeMap<String, String>,
) -> Result<(f64, Vec<f64>), CoreError> {
    let n = vectors.len();
    let mut per_cluster = Vec::with_capacity(result.k);
    let mut weighted = 0.0;
    for c in 0..result.k {
        let members: Vec<usize> = (0..n).filter(|&i| result.assignments[i] == c).collect();
        if members.is_empty() {
            per_cluster.push(0.0);
            continue;
        }
        let mut class_counts: BTreeMap<&str, usize> = BTreeMap::new();
        for &i in &members {
            let label = labels
                .get(&vectors[i].experiment_id)
                .ok_or_else(|| CoreError::MissingGroundTruth(vectors[i].experiment_id.clone()))?;
            *class_counts.entry(label.as_str()).or_insert(0) += 1;
        }
        let max = *class_counts.values().max().unwrap();
        let p = max as f64 / members.len() as f64;
        per_cluster.push(p);
        weighted += members.len() as f64 / n as f64 * p;
    }
    Ok((weighted, per_cluster))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::LabeledEvent;
    use alloc::string::ToString;

    fn fv(id: &str, values: &[f64]) -> FeatureVector {
        FeatureVector { experiment_id: id.to_string(), values: values.to_vec() }
    }

    fn report_with(id: &str, events: Vec<(usize, u32, EventLabel)>) -> AnomalyReport {
        AnomalyReport {
            experiment_id: id.to_string(),
            selected_reference_id: "ref".to_string(),
            selected_reference_index: 0,
            reference_nlcs: 1.0,
            degenerate: false,
            events: events
                .into_iter()
                .map(|(position, sym, label)| LabeledEvent {
                    position,
                    symbol: Symbol(sym),
                    label,
                    probability: None,
                })
                .collect(),
        }
    }

    #[test]
    fn vmm_vector_matches_worked_example() {
        // d=3: one spurious A, one spurious B, two missing B, three missing C
        let report = report_with(
            "e",
            alloc::vec![
                (0, 0, EventLabel::Spurious),
                (1, 1, EventLabel::Spurious),
                (0, 1, EventLabel::Missing),
                (1, 1, EventLabel::Missing),
                (2, 2, EventLabel::Missing),
                (3, 2, EventLabel::Missing),
                (4, 2, EventLabel::Missing),
            ],
        );
        let v = build_vectors(&[report], 3, Representation::Vmm);
        assert_eq!(v[0].values, alloc::vec![1.0, 1.0, 0.0, 0.0, 2.0, 3.0]);
    }

    #[test]
    fn empty_diff_gives_zero_vector_and_seq_counts_occurrences() {
        let report = report_with(
            "e",
            alloc::vec![
                (0, 0, EventLabel::Common),
                (1, 0, EventLabel::Common),
                (2, 1, EventLabel::Common),
                (3, 2, EventLabel::Common),
            ],
        );
        let vmm = build_vectors(core::slice::from_ref(&report), 3, Representation::Vmm);
        assert!(vmm[0].values.iter().all(|&x| x == 0.0));
        let lcs = build_vectors(core::slice::from_ref(&report), 3, Representation::Lcs);
        assert!(lcs[0].values.iter().all(|&x| x == 0.0));
        let seq = build_vectors(&[report], 3, Representation::Seq);
        assert_eq!(seq[0].values, alloc::vec![2.0, 1.0, 1.0]);
    }

    #[test]
    fn lcs_vector_includes_filtered_differences() {
        let report = report_with(
            "e",
            alloc::vec![
                (0, 0, EventLabel::Spurious),
                (1, 0, EventLabel::FilteredSpurious),
                (0, 1, EventLabel::FilteredMissing),
            ],
        );
        let v = build_vectors(&[report], 2, Representation::Lcs);
        assert_eq!(v[0].values, alloc::vec![2.0, 0.0, 0.0, 1.0]);
    }

    fn two_clouds() -> Vec<FeatureVector> {
        let mut vs = Vec::new();
        for i in 0..6 {
            vs.push(fv(&alloc::format!("a{i}"), &[i as f64 * 0.1, 0.0]));
        }
        for i in 0..6 {
            vs.push(fv(&alloc::format!("b{i}"), &[100.0 + i as f64 * 0.1, 0.0]));
        }
        vs
    }

    #[test]
    fn kmedoids_recovers_two_separated_clouds() {
        let vs = two_clouds();
        for seed in 0..10u64 {
            let r = kmedoids(&vs, 2, seed).unwrap();
            let first = r.assignments[0];
            assert!(r.assignments[..6].iter().all(|&c| c == first));
            assert!(r.assignments[6..].iter().all(|&c| c != first));
            // medoids belong to their own clusters
            for (c, &m) in r.medoids.iter().enumerate() {
                assert_eq!(r.assignments[m], c);
            }
        }
    }

    #[test]
    fn duplicate_vectors_always_co_assigned() {
        let mut vs = two_clouds();
        vs.push(fv("dup1", &[0.0, 0.0]));
        vs.push(fv("dup2", &[0.0, 0.0]));
        let r = kmedoids(&vs, 2, 3).unwrap();
        assert_eq!(r.assignments[12], r.assignments[13]);
        assert_eq!(r.assignments[12], r.assignments[0]);
    }

    #[test]
    fn k_exceeding_distinct_vectors_is_an_error() {
        let vs = alloc::vec![fv("a", &[0.0]), fv("b", &[0.0]), fv("c", &[1.0])];
        assert!(kmedoids(&vs, 3, 0).is_err());
        assert!(kmedoids(&vs, 2, 0).is_ok());
    }

    #[test]
    fn silhouette_extremes() {
        // two clusters of mutually identical points, far apart -> 1.0
        let vs = alloc::vec![
            fv("a1", &[0.0]),
            fv("a2", &[0.0]),
            fv("b1", &[50.0]),
            fv("b2", &[50.0]),
        ];
        let r = ClusterResult {
            k: 2,
            assignments: alloc::vec![0, 0, 1, 1],
            medoids: alloc::vec![0, 2],
            global_silhouette: 0.0,
        };
        assert_eq!(silhouette(&vs, &r).unwrap(), 1.0);
        // all points identical with K=2 forced -> 0.0
        let vs = alloc::vec![fv("a", &[1.0]), fv("b", &[1.0]), fv("c", &[1.0]), fv("d", &[1.0])];
        let r = ClusterResult {
            k: 2,
            assignments: alloc::vec![0, 0, 1, 1],
            medoids: alloc::vec![0, 2],
            global_silhouette: 0.0,
        };
        assert_eq!(silhouette(&vs, &r).unwrap(), 0.0);
    }

    #[test]
    fn silhouette_matches_brute_force_reimplementation() {
        use rand_core::{RngCore, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let vs: Vec<FeatureVector> = (0..30)
            .map(|i| {
                fv(
                    &alloc::format!("e{i}"),
                    &[
                        (rng.next_u32() % 100) as f64,
                        (rng.next_u32() % 100) as f64,
                    ],
                )
            })
            .collect();
        let r = kmedoids(&vs, 3, 5).unwrap();

        // direct transcription of the formula, written independently
        let d = |a: &FeatureVector, b: &FeatureVector| -> f64 {
            let dx = a.values[0] - b.values[0];
            let dy = a.values[1] - b.values[1];
            dx * dx + dy * dy
        };
        let mut widths = alloc::vec![Vec::new(); 3];
        for (i, vi) in vs.iter().enumerate() {
            let own = r.assignments[i];
            let same: Vec<usize> = (0..vs.len())
                .filter(|&j| j != i && r.assignments[j] == own)
                .collect();
            let s = if same.is_empty() {
                0.0
            } else {
                let a: f64 =
                    same.iter().map(|&j| d(vi, &vs[j])).sum::<f64>() / same.len() as f64;
                let mut b = f64::INFINITY;
                for c in 0..3 {
                    if c == own {
                        continue;
                    }
                    let others: Vec<usize> =
                        (0..vs.len()).filter(|&j| r.assignments[j] == c).collect();
                    if !others.is_empty() {
                        let m = others.iter().map(|&j| d(vi, &vs[j])).sum::<f64>()
                            / others.len() as f64;
                        b = b.min(m);
                    }
                }
                (b - a) / a.max(b)
            };
            widths[own].push(s);
        }
        let expected: f64 = widths
            .iter()
            .map(|w| {
                if w.is_empty() {
                    0.0
                } else {
                    w.iter().sum::<f64>() / w.len() as f64
                }
            })
            .sum::<f64>()
            / 3.0;
        assert!((silhouette(&vs, &r).unwrap() - expected).abs() < 1e-12);
    }

    fn planted(k: usize, per: usize, spread: f64, gap: f64, seed: u64) -> Vec<FeatureVector> {
        use rand_core::{RngCore, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut vs = Vec::new();
        for c in 0..k {
            for i in 0..per {
                let jitter = |rng: &mut rand_chacha::ChaCha8Rng| {
                    (rng.next_u32() % 1000) as f64 / 1000.0 * spread
                };
                vs.push(fv(
                    &alloc::format!("c{c}_{i}"),
                    &[c as f64 * gap + jitter(&mut rng), jitter(&mut rng)],
                ));
            }
        }
        vs
    }

    #[test]
    fn select_k_finds_planted_cluster_count() {
        for seed in 0..5u64 {
            let vs = planted(4, 8, 1.0, 50.0, seed);
            let (best, curve) = select_k(&vs, 2, 10, seed).unwrap();
            assert_eq!(best.k, 4, "curve: {curve:?}");
        }
    }

    #[test]
    fn single_blob_selects_k_min() {
        let vs = planted(1, 20, 1.0, 0.0, 9);
        let (best, _) = select_k(&vs, 2, 6, 1).unwrap();
        assert_eq!(best.k, 2);
    }

    #[test]
    fn purity_perfect_and_collapsed() {
        let vs = planted(2, 5, 0.5, 100.0, 2);
        let mut labels = BTreeMap::new();
        for v in &vs {
            labels.insert(
                v.experiment_id.clone(),
                v.experiment_id[..2].to_string(),
            );
        }
        let r = kmedoids(&vs, 2, 0).unwrap();
        let (p, per) = purity(&vs, &r, &labels).unwrap();
        assert_eq!(p, 1.0);
        assert!(per.iter().all(|&x| x == 1.0));
        // one cluster holding everything: purity = max class fraction
        let all = ClusterResult {
            k: 1,
            assignments: alloc::vec![0; vs.len()],
            medoids: alloc::vec![0],
            global_silhouette: 0.0,
        };
        let (p, _) = purity(&vs, &all, &labels).unwrap();
        assert_eq!(p, 0.5);
    }

    #[test]
    fn purity_matches_hand_computed_weighted_sum() {
        let vs = alloc::vec![
            fv("x1", &[0.0]),
            fv("x2", &[0.0]),
            fv("y1", &[0.0]),
            fv("y2", &[0.0]),
            fv("y3", &[0.0]),
        ];
        let mut labels = BTreeMap::new();
        for v in &vs {
            labels.insert(v.experiment_id.clone(), v.experiment_id[..1].to_string());
        }
        // cluster 0 = {x1, y1, y2}, cluster 1 = {x2, y3}
        let r = ClusterResult {
            k: 2,
            assignments: alloc::vec![0, 1, 0, 0, 1],
            medoids: alloc::vec![0, 1],
            global_silhouette: 0.0,
        };
        let (p, per) = purity(&vs, &r, &labels).unwrap();
        assert!((per[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((per[1] - 0.5).abs() < 1e-12);
        assert!((p - (3.0 / 5.0 * 2.0 / 3.0 + 2.0 / 5.0 * 0.5)).abs() < 1e-12);
    }

    #[test]
    fn purity_invariant_under_cluster_relabeling() {
        let vs = planted(3, 4, 0.5, 30.0, 4);
        let mut labels = BTreeMap::new();
        for v in &vs {
            labels.insert(v.experiment_id.clone(), v.experiment_id[..2].to_string());
        }
        let r = kmedoids(&vs, 3, 1).unwrap();
        let permuted = ClusterResult {
            k: 3,
            assignments: r.assignments.iter().map(|&c| (c + 1) % 3).collect(),
            medoids: alloc::vec![r.medoids[2], r.medoids[0], r.medoids[1]],
            global_silhouette: r.global_silhouette,
        };
        let (a, _) = purity(&vs, &r, &labels).unwrap();
        let (b, _) = purity(&vs, &permuted, &labels).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn kmedoids_objective_is_non_increasing_and_deterministic() {
        let vs = planted(3, 10, 5.0, 20.0, 7);
        let a = kmedoids(&vs, 3, 42).unwrap();
        let b = kmedoids(&vs, 3, 42).unwrap();
        assert_eq!(a, b);
    }
}
