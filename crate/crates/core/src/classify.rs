//! Metrics as binary classifiers.
//!
//! A metric predicts Good when its score reaches a threshold `τ`
//! (inclusive). Precision and Recall are computed per MT system and
//! averaged over systems; F is the F_β of the two averages.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{ordered_mean, Exec};
use crate::ingest::Dataset;
use crate::mqm::{is_positive, ClassSpec};

/// β = 1/√2 weights Precision twice as much as Recall.
pub const DEFAULT_BETA: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    fn tally(rows: &[(f64, f64)], tau: f64, spec: &ClassSpec) -> Self {
        let mut c = ConfusionCounts::default();
        for &(score, human) in rows {
            match (score >= tau, is_positive(human, spec)) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifySettings {
    pub beta: f64,
    pub spec: ClassSpec,
}

impl ClassifySettings {
    pub fn new(beta: f64, spec: ClassSpec) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::Invalid(format!("beta must be positive, got {beta}")));
        }
        Ok(ClassifySettings { beta, spec })
    }
}

impl Default for ClassifySettings {
    fn default() -> Self {
        ClassifySettings {
            beta: DEFAULT_BETA,
            spec: ClassSpec::good(),
        }
    }
}

/// Confusion counts of one system's translations at threshold `tau`.
pub fn confusion(
    dataset: &Dataset,
    metric: &str,
    system: &str,
    tau: f64,
    spec: &ClassSpec,
) -> Result<ConfusionCounts> {
    let rows = dataset.system_rows(metric)?;
    let (_, rows) = rows
        .iter()
        .find(|(s, _)| s == system)
        .ok_or_else(|| Error::UnknownSystem(system.to_string()))?;
    Ok(ConfusionCounts::tally(rows, tau, spec))
}

/// Precision and Recall; `None` where the denominator is zero.
pub fn prf(counts: &ConfusionCounts) -> (Option<f64>, Option<f64>) {
    let ratio = |num: u64, den: u64| (den > 0).then(|| num as f64 / den as f64);
    (
        ratio(counts.tp, counts.tp + counts.fp),
        ratio(counts.tp, counts.tp + counts.fn_),
    )
}

/// `(1+β²)PR / (β²P + R)`, or 0 when the denominator vanishes.
pub fn f_beta(precision: f64, recall: f64, beta: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(Error::Invalid(format!("beta must be positive, got {beta}")));
    }
    Ok(f_beta_unchecked(precision, recall, beta * beta))
}

fn f_beta_unchecked(precision: f64, recall: f64, beta2: f64) -> f64 {
    let den = beta2 * precision + recall;
    if den == 0.0 {
        0.0
    } else {
        (1.0 + beta2) * precision * recall / den
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemPrf {
    pub system: String,
    pub counts: ConfusionCounts,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub tau: f64,
    /// Mean of the defined per-system precisions.
    pub precision: Option<f64>,
    /// Mean of the defined per-system recalls.
    pub recall: Option<f64>,
    pub f: Option<f64>,
    pub per_system: Vec<SystemPrf>,
    /// Systems left out of the precision average (no predicted positives).
    pub excluded_from_precision: usize,
    /// Systems left out of the recall average (no human positives).
    pub excluded_from_recall: usize,
}

impl ThresholdResult {
    /// Precision is undefined for every system at this threshold.
    pub fn is_degenerate(&self) -> bool {
        self.precision.is_none()
    }
}

/// Averages per-system (P, R) and combines them. Shared by the fixed-τ
/// path and the sweep so both produce bit-identical F values.
fn aggregate(per_system: &[(Option<f64>, Option<f64>)], beta2: f64) -> (Option<f64>, Option<f64>, Option<f64>) {
    let ps: Vec<f64> = per_system.iter().filter_map(|(p, _)| *p).collect();
    let rs: Vec<f64> = per_system.iter().filter_map(|(_, r)| *r).collect();
    let p = ordered_mean(&ps);
    let r = ordered_mean(&rs);
    let f = match (p, r) {
        (Some(p), Some(r)) => Some(f_beta_unchecked(p, r, beta2)),
        _ => None,
    };
    (p, r, f)
}

pub fn system_grouped_prf(
    dataset: &Dataset,
    metric: &str,
    tau: f64,
    settings: &ClassifySettings,
) -> Result<ThresholdResult> {
    let rows = dataset.system_rows(metric)?;
    if rows.is_empty() {
        return Err(Error::Invalid(format!("metric {metric} scores no translations")));
    }
    let per_system: Vec<SystemPrf> = rows
        .iter()
        .map(|(system, rows)| {
            let counts = ConfusionCounts::tally(rows, tau, &settings.spec);
            let (precision, recall) = prf(&counts);
            SystemPrf {
                system: system.clone(),
                counts,
                precision,
                recall,
            }
        })
        .collect();
    let pr: Vec<_> = per_system.iter().map(|s| (s.precision, s.recall)).collect();
    let (precision, recall, f) = aggregate(&pr, settings.beta * settings.beta);
    Ok(ThresholdResult {
        tau,
        precision,
        recall,
        f,
        excluded_from_precision: pr.iter().filter(|(p, _)| p.is_none()).count(),
        excluded_from_recall: pr.iter().filter(|(_, r)| r.is_none()).count(),
        per_system,
    })
}

/// Sorted distinct scores the metric assigns on this dataset.
pub fn candidate_thresholds(dataset: &Dataset, metric: &str) -> Result<Vec<f64>> {
    let table = dataset.metric(metric)?;
    let mut values: Vec<f64> = table.scores.values().copied().collect();
    values.sort_by(f64::total_cmp);
    values.dedup();
    Ok(values)
}

/// Per-system scores split by human label and sorted, so the number of
/// predicted positives at any τ is a binary search.
struct SweepIndex {
    systems: Vec<(Vec<f64>, Vec<f64>)>,
}

impl SweepIndex {
    fn build(dataset: &Dataset, metric: &str, spec: &ClassSpec) -> Result<Self> {
        let systems = dataset
            .system_rows(metric)?
            .into_iter()
            .map(|(_, rows)| {
                let (mut pos, mut neg): (Vec<f64>, Vec<f64>) = (Vec::new(), Vec::new());
                for (score, human) in rows {
                    if is_positive(human, spec) {
                        pos.push(score);
                    } else {
                        neg.push(score);
                    }
                }
                pos.sort_by(f64::total_cmp);
                neg.sort_by(f64::total_cmp);
                (pos, neg)
            })
            .collect();
        Ok(SweepIndex { systems })
    }

    fn f_at(&self, tau: f64, beta2: f64) -> Option<f64> {
        let at_or_above = |sorted: &[f64]| (sorted.len() - sorted.partition_point(|&s| s < tau)) as u64;
        let pr: Vec<_> = self
            .systems
            .iter()
            .map(|(pos, neg)| {
                let tp = at_or_above(pos);
                let fp = at_or_above(neg);
                let counts = ConfusionCounts {
                    tp,
                    fp,
                    fn_: pos.len() as u64 - tp,
                    tn: neg.len() as u64 - fp,
                };
                prf(&counts)
            })
            .collect();
        aggregate(&pr, beta2).2
    }
}

/// Picks the candidate with the highest F; equal F goes to the larger τ.
fn select_best(scored: &[(f64, Option<f64>)]) -> Option<(f64, f64)> {
    let mut best: Option<(f64, f64)> = None;
    for &(tau, f) in scored {
        let Some(f) = f else { continue };
        best = match best {
            Some((bt, bf)) if f < bf || (f == bf && tau < bt) => Some((bt, bf)),
            _ => Some((tau, f)),
        };
    }
    best
}

pub fn optimize_threshold(
    dataset: &Dataset,
    metric: &str,
    settings: &ClassifySettings,
) -> Result<ThresholdResult> {
    optimize_threshold_with(dataset, metric, settings, Exec::default())
}

/// Exhaustive search over [`candidate_thresholds`], run with the given
/// execution strategy.
pub fn optimize_threshold_with(
    dataset: &Dataset,
    metric: &str,
    settings: &ClassifySettings,
    exec: Exec,
) -> Result<ThresholdResult> {
    let candidates = candidate_thresholds(dataset, metric)?;
    if candidates.is_empty() {
        return Err(Error::Invalid(format!("metric {metric} has no scores")));
    }
    let index = SweepIndex::build(dataset, metric, &settings.spec)?;
    let beta2 = settings.beta * settings.beta;
    let scored = exec.map(&candidates, |&tau| (tau, index.f_at(tau, beta2)));
    let (tau, _) = select_best(&scored).ok_or_else(|| Error::Degenerate(metric.to_string()))?;
    system_grouped_prf(dataset, metric, tau, settings)
}

/// Fixed-threshold evaluation, e.g. with a τ tuned on a development set.
pub fn evaluate_with_threshold(
    dataset: &Dataset,
    metric: &str,
    tau: f64,
    settings: &ClassifySettings,
) -> Result<ThresholdResult> {
    system_grouped_prf(dataset, metric, tau, settings)
}
