//! Metrics as re-rankers of candidate translations of the same source.
//!
//! Both the metric and the humans may tie for first place, so each side
//! selects a *set* of best candidates and the per-segment precision is
//! `|best_metric ∩ best_human| / |best_metric|`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{ordered_mean, Exec};
use crate::ingest::{Dataset, PairwiseScoreTable, SegKey};
use crate::mqm::SCORE_EPS;

/// One candidate in a segment group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub system: String,
    pub metric: Option<f64>,
    pub human: f64,
}

/// All candidate translations of one source segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegGroup {
    pub seg: u64,
    pub entries: Vec<Candidate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegRerank {
    pub seg: u64,
    pub precision: f64,
    pub metric_best: Vec<String>,
    pub human_best: Vec<String>,
    /// Mean human score of the metric's selection.
    pub selected_mqm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RerankReport {
    /// Re-Ranking Precision: mean of the per-segment precisions.
    pub rrp: f64,
    pub avg_selected_mqm: f64,
    pub per_seg: Vec<SegRerank>,
}

fn best_indices(values: &[f64], tie_tol: f64) -> Vec<usize> {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v >= max - tie_tol)
        .map(|(i, _)| i)
        .collect()
}

/// Systems scoring within `tie_tol` of the maximum.
pub fn best_set(scores: &BTreeMap<String, f64>, tie_tol: f64) -> Result<BTreeSet<String>> {
    if scores.is_empty() {
        return Err(Error::Invalid("best_set of an empty score map".into()));
    }
    check_tol(tie_tol)?;
    let values: Vec<f64> = scores.values().copied().collect();
    let names: Vec<&String> = scores.keys().collect();
    Ok(best_indices(&values, tie_tol)
        .into_iter()
        .map(|i| names[i].clone())
        .collect())
}

fn check_tol(tie_tol: f64) -> Result<()> {
    if !(tie_tol >= 0.0) || !tie_tol.is_finite() {
        return Err(Error::Invalid(format!("tie tolerance must be ≥ 0, got {tie_tol}")));
    }
    Ok(())
}

fn score_group(group: &SegGroup, tie_tol: f64) -> Result<SegRerank> {
    if group.entries.is_empty() {
        return Err(Error::Invalid(format!("segment {} has no candidates", group.seg)));
    }
    let metric: Vec<f64> = group
        .entries
        .iter()
        .map(|c| {
            c.metric.ok_or_else(|| {
                Error::MissingMetricScore(SegKey::new(c.system.clone(), group.seg).to_string())
            })
        })
        .collect::<Result<_>>()?;
    let human: Vec<f64> = group.entries.iter().map(|c| c.human).collect();

    let by_metric = best_indices(&metric, tie_tol);
    // MQM values are decimal; anything closer than SCORE_EPS is the same score.
    let by_human = best_indices(&human, SCORE_EPS);
    let hits = by_metric.iter().filter(|i| by_human.contains(i)).count();
    let selected: Vec<f64> = by_metric.iter().map(|&i| human[i]).collect();
    let names = |idx: &[usize]| -> Vec<String> {
        idx.iter().map(|&i| group.entries[i].system.clone()).collect()
    };
    Ok(SegRerank {
        seg: group.seg,
        precision: hits as f64 / by_metric.len() as f64,
        metric_best: names(&by_metric),
        human_best: names(&by_human),
        selected_mqm: ordered_mean(&selected).unwrap_or_default(),
    })
}

/// Precision of the metric's tie-inclusive top set against the humans'.
pub fn rrp_segment(group: &SegGroup, tie_tol: f64) -> Result<f64> {
    check_tol(tie_tol)?;
    score_group(group, tie_tol).map(|s| s.precision)
}

fn report(groups: &[SegGroup], tie_tol: f64, exec: Exec) -> Result<RerankReport> {
    check_tol(tie_tol)?;
    if groups.is_empty() {
        return Err(Error::Invalid("no segments to re-rank".into()));
    }
    let per_seg = exec
        .map(groups, |g| score_group(g, tie_tol))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let precisions: Vec<f64> = per_seg.iter().map(|s| s.precision).collect();
    let selected: Vec<f64> = per_seg.iter().map(|s| s.selected_mqm).collect();
    Ok(RerankReport {
        rrp: ordered_mean(&precisions).unwrap_or_default(),
        avg_selected_mqm: ordered_mean(&selected).unwrap_or_default(),
        per_seg,
    })
}

/// Segment groups of the dataset with the given metric's scores attached.
pub fn seg_groups(dataset: &Dataset, metric: &str) -> Result<Vec<SegGroup>> {
    let table = dataset.metric(metric)?;
    Ok(dataset
        .human_by_segment()
        .into_iter()
        .map(|(seg, members)| SegGroup {
            seg,
            entries: members
                .into_iter()
                .map(|(system, human)| {
                    let metric = table.scores.get(&SegKey::new(system.clone(), seg)).copied();
                    Candidate {
                        system,
                        metric,
                        human,
                    }
                })
                .collect(),
        })
        .collect())
}

pub fn rerank_report(dataset: &Dataset, metric: &str, tie_tol: f64) -> Result<RerankReport> {
    rerank_report_with(dataset, metric, tie_tol, Exec::default())
}

pub fn rerank_report_with(
    dataset: &Dataset,
    metric: &str,
    tie_tol: f64,
    exec: Exec,
) -> Result<RerankReport> {
    report(&seg_groups(dataset, metric)?, tie_tol, exec)
}

/// Expected utility of each candidate: the mean of its pairwise scores
/// against every other candidate of the segment. A lone candidate has no
/// pseudo-references and gets utility 0.
pub fn mbr_utilities(
    pairwise: &PairwiseScoreTable,
    seg: u64,
    systems: &[String],
) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for hyp in systems {
        let mut sum = 0.0;
        for reference in systems.iter().filter(|r| *r != hyp) {
            sum += pairwise.get(seg, hyp, reference).ok_or_else(|| {
                Error::MissingPair(format!("(seg {seg}, hyp {hyp}, ref {reference})"))
            })?;
        }
        let others = systems.len().saturating_sub(1);
        let utility = if others == 0 { 0.0 } else { sum / others as f64 };
        out.insert(hyp.clone(), utility);
    }
    Ok(out)
}

pub fn mbr_rerank_report(
    dataset: &Dataset,
    pairwise: &PairwiseScoreTable,
    tie_tol: f64,
) -> Result<RerankReport> {
    mbr_rerank_report_with(dataset, pairwise, tie_tol, Exec::default())
}

pub fn mbr_rerank_report_with(
    dataset: &Dataset,
    pairwise: &PairwiseScoreTable,
    tie_tol: f64,
    exec: Exec,
) -> Result<RerankReport> {
    let groups = dataset
        .human_by_segment()
        .into_iter()
        .map(|(seg, members)| {
            let systems: Vec<String> = members.iter().map(|(s, _)| s.clone()).collect();
            let utilities = mbr_utilities(pairwise, seg, &systems)?;
            Ok(SegGroup {
                seg,
                entries: members
                    .into_iter()
                    .map(|(system, human)| Candidate {
                        metric: utilities.get(&system).copied(),
                        system,
                        human,
                    })
                    .collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    report(&groups, tie_tol, exec)
}
