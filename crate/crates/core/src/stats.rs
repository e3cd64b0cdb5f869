//! Random baseline, segment-grouped correlations, and the false-positive
//! Δ analysis.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{ordered_mean, Exec};
use crate::ingest::{Dataset, ScoreTable, SegKey};
use crate::mqm::{is_positive, ClassSpec};
use crate::rerank::seg_groups;

/// Generator used by [`random_sysname`], recorded in reports.
pub const RNG_ALGORITHM: &str = "ChaCha8 (rand_chacha), stream = system index";

pub const RANDOM_SYSNAME: &str = "Random-sysname";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomBaselineParams {
    pub mean_low: f64,
    pub mean_high: f64,
    pub stddev: f64,
    pub seed: u64,
}

impl Default for RandomBaselineParams {
    fn default() -> Self {
        RandomBaselineParams {
            mean_low: 0.0,
            mean_high: 9.0,
            stddev: 2.0,
            seed: 0,
        }
    }
}

impl RandomBaselineParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.mean_low <= self.mean_high) || !self.mean_low.is_finite() || !self.mean_high.is_finite() {
            return Err(Error::Invalid(format!(
                "mean range [{}, {}] is invalid",
                self.mean_low, self.mean_high
            )));
        }
        if !(self.stddev > 0.0) || !self.stddev.is_finite() {
            return Err(Error::Invalid(format!("stddev must be > 0, got {}", self.stddev)));
        }
        Ok(())
    }
}

/// The per-system mean and integer scores drawn for one system.
fn draw_system(index: usize, segs: usize, params: &RandomBaselineParams) -> (f64, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    rng.set_stream(index as u64);
    let mean = rng.random_range(params.mean_low..=params.mean_high);
    let normal = Normal::new(mean, params.stddev).expect("validated stddev");
    let scores = (0..segs).map(|_| normal.sample(&mut rng).round()).collect();
    (mean, scores)
}

/// Per-system means drawn by [`random_sysname`] for the same inputs.
pub fn random_sysname_means(systems: &[String], params: &RandomBaselineParams) -> Result<Vec<f64>> {
    params.validate()?;
    Ok((0..systems.len()).map(|i| draw_system(i, 0, params).0).collect())
}

/// Each system gets a mean drawn uniformly from `[mean_low, mean_high]`;
/// each of its segments scores `round(N(mean, stddev))`.
pub fn random_sysname(
    systems: &[String],
    segs: &[u64],
    params: &RandomBaselineParams,
) -> Result<ScoreTable> {
    random_sysname_with(systems, segs, params, Exec::default())
}

pub fn random_sysname_with(
    systems: &[String],
    segs: &[u64],
    params: &RandomBaselineParams,
    exec: Exec,
) -> Result<ScoreTable> {
    params.validate()?;
    if systems.is_empty() || segs.is_empty() {
        return Err(Error::Invalid("random baseline needs systems and segments".into()));
    }
    let indexed: Vec<(usize, &String)> = systems.iter().enumerate().collect();
    let drawn = exec.map(&indexed, |&(i, _)| draw_system(i, segs.len(), params).1);
    let mut scores = BTreeMap::new();
    for ((_, system), values) in indexed.iter().zip(drawn) {
        for (&seg, value) in segs.iter().zip(values) {
            scores.insert(SegKey::new((*system).clone(), seg), value);
        }
    }
    ScoreTable::new(RANDOM_SYSNAME, scores)
}

fn check_pair(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(Error::Invalid("correlation needs at least two items".into()));
    }
    Ok(())
}

fn sign(v: f64) -> i8 {
    match v.partial_cmp(&0.0) {
        Some(Ordering::Greater) => 1,
        Some(Ordering::Less) => -1,
        _ => 0,
    }
}

/// Kendall's τ-b; `None` when either side is constant.
pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> Result<Option<f64>> {
    check_pair(x, y)?;
    let n = x.len();
    let (mut concordant, mut discordant) = (0i64, 0i64);
    let (mut tied_x, mut tied_y) = (0i64, 0i64);
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = sign(x[i] - x[j]);
            let dy = sign(y[i] - y[j]);
            if dx == 0 {
                tied_x += 1;
            }
            if dy == 0 {
                tied_y += 1;
            }
            match dx * dy {
                1 => concordant += 1,
                -1 => discordant += 1,
                _ => {}
            }
        }
    }
    let n0 = (n * (n - 1) / 2) as i64;
    let den = ((n0 - tied_x) as f64 * (n0 - tied_y) as f64).sqrt();
    if den == 0.0 {
        return Ok(None);
    }
    Ok(Some((concordant - discordant) as f64 / den))
}

/// Sample Pearson correlation; `None` when either side has zero variance.
pub fn pearson_rho(x: &[f64], y: &[f64]) -> Result<Option<f64>> {
    check_pair(x, y)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(None);
    }
    Ok(Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0)))
}

/// Tie-aware pairwise accuracy. Metric differences within `tie_eps` count
/// as ties; human ties are exact.
pub fn acc_eq(x: &[f64], y: &[f64], tie_eps: f64) -> Result<f64> {
    check_pair(x, y)?;
    if !(tie_eps >= 0.0) {
        return Err(Error::Invalid(format!("tie epsilon must be ≥ 0, got {tie_eps}")));
    }
    let n = x.len();
    let mut correct = 0u64;
    for i in 0..n {
        for j in (i + 1)..n {
            let dm = x[i] - x[j];
            let dh = y[i] - y[j];
            let metric_tie = dm.abs() <= tie_eps;
            let human_tie = dh == 0.0;
            let ok = match (metric_tie, human_tie) {
                (true, true) => true,
                (false, false) => sign(dm) == sign(dh),
                _ => false,
            };
            correct += ok as u64;
        }
    }
    Ok(correct as f64 / (n * (n - 1) / 2) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coefficient {
    KendallTauB,
    Pearson,
    AccEq,
}

impl Coefficient {
    pub const ALL: [Coefficient; 3] = [Coefficient::KendallTauB, Coefficient::Pearson, Coefficient::AccEq];
}

impl fmt::Display for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Coefficient::KendallTauB => "kendall_tau_b",
            Coefficient::Pearson => "pearson",
            Coefficient::AccEq => "acc_eq",
        })
    }
}

impl FromStr for Coefficient {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "kendall" | "kendall_tau_b" | "tau" => Ok(Coefficient::KendallTauB),
            "pearson" | "rho" => Ok(Coefficient::Pearson),
            "acc_eq" | "acc-eq" => Ok(Coefficient::AccEq),
            other => Err(Error::Invalid(format!("unknown coefficient: {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupedCorrelation {
    pub coefficient: Coefficient,
    pub value: f64,
    pub groups_used: usize,
    /// Groups where the coefficient is undefined (constant side or < 2 items).
    pub groups_skipped: usize,
    pub tie_eps: f64,
}

/// `(metric, human)` vectors of every segment group.
fn correlation_groups(dataset: &Dataset, metric: &str) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    seg_groups(dataset, metric)?
        .into_iter()
        .map(|g| {
            let seg = g.seg;
            let mut xs = Vec::with_capacity(g.entries.len());
            let mut ys = Vec::with_capacity(g.entries.len());
            for c in g.entries {
                let m = c.metric.ok_or_else(|| {
                    Error::MissingMetricScore(SegKey::new(c.system.clone(), seg).to_string())
                })?;
                xs.push(m);
                ys.push(c.human);
            }
            Ok((xs, ys))
        })
        .collect()
}

fn coefficient_value(coefficient: Coefficient, x: &[f64], y: &[f64], tie_eps: f64) -> Result<Option<f64>> {
    if x.len() < 2 {
        return Ok(None);
    }
    match coefficient {
        Coefficient::KendallTauB => kendall_tau_b(x, y),
        Coefficient::Pearson => pearson_rho(x, y),
        Coefficient::AccEq => acc_eq(x, y, tie_eps).map(Some),
    }
}

/// Mean over source segments of the coefficient computed within each
/// segment's candidate group.
pub fn segment_grouped_correlation(
    dataset: &Dataset,
    metric: &str,
    coefficient: Coefficient,
    tie_eps: f64,
) -> Result<GroupedCorrelation> {
    let groups = correlation_groups(dataset, metric)?;
    let values = Exec::default()
        .map(&groups, |(x, y)| coefficient_value(coefficient, x, y, tie_eps))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let defined: Vec<f64> = values.iter().filter_map(|v| *v).collect();
    let value = ordered_mean(&defined).ok_or(Error::AllGroupsUndefined)?;
    Ok(GroupedCorrelation {
        coefficient,
        value,
        groups_used: defined.len(),
        groups_skipped: values.len() - defined.len(),
        tie_eps,
    })
}

/// Finds the metric tie epsilon that maximizes segment-grouped acc_eq.
/// Candidates are 0 and every within-group metric difference; among equal
/// accuracies the smallest epsilon wins.
pub fn calibrate_tie_eps(dataset: &Dataset, metric: &str) -> Result<GroupedCorrelation> {
    let groups: Vec<_> = correlation_groups(dataset, metric)?
        .into_iter()
        .filter(|(x, _)| x.len() >= 2)
        .collect();
    if groups.is_empty() {
        return Err(Error::AllGroupsUndefined);
    }
    // Accuracy as a step function of epsilon: each pair contributes its
    // weight on an interval bounded by |metric difference|.
    let mut base = 0.0;
    let mut events: Vec<(f64, f64)> = Vec::new();
    let group_weight = 1.0 / groups.len() as f64;
    for (x, y) in &groups {
        let n = x.len();
        let w = group_weight / (n * (n - 1) / 2) as f64;
        for i in 0..n {
            for j in (i + 1)..n {
                let dm = x[i] - x[j];
                let dh = y[i] - y[j];
                if dh == 0.0 {
                    events.push((dm.abs(), w));
                } else if sign(dm) == sign(dh) {
                    base += w;
                    events.push((dm.abs(), -w));
                }
            }
        }
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best_eps = 0.0;
    let mut best_acc = f64::NEG_INFINITY;
    let mut acc = base;
    let mut i = 0;
    // Epsilon 0 is always a candidate even when no difference is 0.
    if events.first().is_none_or(|e| e.0 > 0.0) {
        best_acc = acc;
    }
    while i < events.len() {
        let eps = events[i].0;
        while i < events.len() && events[i].0 == eps {
            acc += events[i].1;
            i += 1;
        }
        if acc > best_acc + 1e-12 {
            best_acc = acc;
            best_eps = eps;
        }
    }
    segment_grouped_correlation(dataset, metric, Coefficient::AccEq, best_eps)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub low: f64,
    pub high: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaStats {
    /// `h − human_threshold` of every false positive; all strictly negative.
    pub deltas: Vec<f64>,
    pub mean: Option<f64>,
    /// Sample standard deviation (n − 1 denominator).
    pub stddev: Option<f64>,
    pub histogram: Vec<HistogramBin>,
}

impl DeltaStats {
    /// Plot-ready `bin_low,bin_high,count` CSV.
    pub fn histogram_csv(&self) -> String {
        let mut out = String::from("bin_low,bin_high,count\n");
        for b in &self.histogram {
            out.push_str(&format!("{},{},{}\n", b.low, b.high, b.count));
        }
        out
    }
}

/// Distance below the human threshold of each translation the metric
/// wrongly accepts at `tau`.
pub fn fp_delta_distribution(
    dataset: &Dataset,
    metric: &str,
    tau: f64,
    spec: &ClassSpec,
    bin_width: f64,
) -> Result<DeltaStats> {
    if !(bin_width > 0.0) || !bin_width.is_finite() {
        return Err(Error::Invalid(format!("bin width must be > 0, got {bin_width}")));
    }
    let table = dataset.metric(metric)?;
    let deltas: Vec<f64> = table
        .scores
        .iter()
        .filter_map(|(key, &score)| {
            let h = dataset.human[key].0;
            (score >= tau && !is_positive(h, spec)).then_some(h - spec.human_threshold)
        })
        .collect();

    let mean = ordered_mean(&deltas);
    let stddev = match (mean, deltas.len()) {
        (Some(m), n) if n >= 2 => {
            let ss: f64 = deltas.iter().map(|d| (d - m) * (d - m)).sum();
            Some((ss / (n - 1) as f64).sqrt())
        }
        _ => None,
    };

    let bin_index = |d: f64| ((d / bin_width + 1e-9).floor() as i64).min(-1);
    let histogram = match deltas.iter().map(|&d| bin_index(d)).min() {
        None => Vec::new(),
        Some(lowest) => {
            let mut counts = vec![0usize; (-lowest) as usize];
            for &d in &deltas {
                counts[(bin_index(d) - lowest) as usize] += 1;
            }
            counts
                .into_iter()
                .enumerate()
                .map(|(i, count)| {
                    let k = lowest + i as i64;
                    HistogramBin {
                        low: k as f64 * bin_width,
                        high: (k + 1) as f64 * bin_width,
                        count,
                    }
                })
                .collect()
        }
    };
    Ok(DeltaStats {
        deltas,
        mean,
        stddev,
        histogram,
    })
}
