//! File formats and the joined [`Dataset`].
//!
//! Canonical inputs are tab-separated UTF-8 with a mandatory header:
//!
//! | file          | required columns                                  |
//! |---------------|---------------------------------------------------|
//! | `mqm.tsv`     | system, seg_id, rater, severity, category         |
//! | `human.tsv`   | system, seg_id, mqm                               |
//! | `scores.tsv`  | metric, system, seg_id, score                     |
//! | `pairwise.tsv`| metric, seg_id, hyp_system, ref_system, score     |
//!
//! Column order is free and unknown columns are ignored.

mod tsv;
pub mod wmt;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::mqm::{aggregate_ratings, score_mqm_with, ErrorSpan, MqmScore, MqmWeights, Severity};
use tsv::{non_empty, parse_score, parse_seg_id, TsvReader};

/// Identity of one translation: the system that produced it and the
/// source segment it translates.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SegKey {
    pub system: String,
    pub seg: u64,
}

impl SegKey {
    pub fn new(system: impl Into<String>, seg: u64) -> Self {
        SegKey {
            system: system.into(),
            seg,
        }
    }
}

impl fmt::Display for SegKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.system, self.seg)
    }
}

/// Segment-level scores of one metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreTable {
    pub metric: String,
    pub scores: BTreeMap<SegKey, f64>,
    /// Declared `[m1, m2]` output range, when known.
    pub range: Option<(f64, f64)>,
}

impl ScoreTable {
    pub fn new(metric: impl Into<String>, scores: BTreeMap<SegKey, f64>) -> Result<Self> {
        let metric = metric.into();
        if let Some((k, v)) = scores.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Invalid(format!(
                "{metric}: non-finite score {v} at {k}"
            )));
        }
        Ok(ScoreTable {
            metric,
            scores,
            range: None,
        })
    }

    pub fn with_range(mut self, low: f64, high: f64) -> Result<Self> {
        if !(low <= high) {
            return Err(Error::Invalid(format!("bad score range [{low}, {high}]")));
        }
        if let Some((k, v)) = self.scores.iter().find(|(_, &v)| v < low || v > high) {
            return Err(Error::Invalid(format!(
                "{}: score {v} at {k} outside declared range [{low}, {high}]",
                self.metric
            )));
        }
        self.range = Some((low, high));
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Writes the canonical `scores.tsv` layout. Numbers use the shortest
    /// representation that parses back to the same value.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "metric\tsystem\tseg_id\tscore")?;
        for (key, score) in &self.scores {
            writeln!(out, "{}\t{}\t{}\t{}", self.metric, key.system, key.seg, score)?;
        }
        Ok(())
    }

    pub(crate) fn restricted_to(&self, keys: &BTreeSet<SegKey>) -> ScoreTable {
        ScoreTable {
            metric: self.metric.clone(),
            scores: self
                .scores
                .iter()
                .filter(|(k, _)| keys.contains(*k))
                .map(|(k, v)| (k.clone(), *v))
                .collect(),
            range: self.range,
        }
    }
}

/// Key of a pairwise (hypothesis, pseudo-reference) score.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PairKey {
    pub seg: u64,
    pub hyp: String,
    pub reference: String,
}

/// Metric scores of every candidate against every other candidate of the
/// same segment, used as MBR utilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseScoreTable {
    pub metric: String,
    pub scores: BTreeMap<PairKey, f64>,
    /// Rows with `hyp == ref`; kept but never used as utilities.
    pub self_pairs: Vec<PairKey>,
}

impl PairwiseScoreTable {
    pub fn get(&self, seg: u64, hyp: &str, reference: &str) -> Option<f64> {
        self.scores
            .get(&PairKey {
                seg,
                hyp: hyp.to_string(),
                reference: reference.to_string(),
            })
            .copied()
    }
}

/// Annotations grouped by translation and rater.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Annotations {
    pub by_key: BTreeMap<SegKey, BTreeMap<String, Vec<ErrorSpan>>>,
    pub lang_pair: Option<String>,
}

impl Annotations {
    /// Per-translation MQM score: each rater's errors are scored and the
    /// raters are averaged.
    pub fn scores(&self, weights: &MqmWeights) -> Result<BTreeMap<SegKey, MqmScore>> {
        self.by_key
            .iter()
            .map(|(key, raters)| {
                let per_rater: Vec<MqmScore> = raters
                    .values()
                    .map(|errors| score_mqm_with(errors, weights))
                    .collect();
                Ok((key.clone(), aggregate_ratings(&per_rater)?))
            })
            .collect()
    }
}

pub fn parse_mqm_annotations<R: Read>(input: R) -> Result<Annotations> {
    let reader = TsvReader::new(input)?;
    let system = reader.required("system")?;
    let seg_id = reader.required("seg_id")?;
    let rater = reader.required("rater")?;
    let severity = reader.required("severity")?;
    let category = reader.required("category")?;
    let lp = reader.optional("lp");
    let span_start = reader.optional("span_start");
    let span_end = reader.optional("span_end");

    let mut out = Annotations::default();
    for row in reader.rows() {
        let row = row?;
        let line = row.line;
        let key = SegKey::new(
            non_empty(row.get(system), "system", line)?,
            parse_seg_id(row.get(seg_id), line)?,
        );
        let rater_id = non_empty(row.get(rater), "rater", line)?;
        if out.lang_pair.is_none() {
            out.lang_pair = row.opt(lp).map(str::to_string);
        }
        let errors = out.by_key.entry(key).or_default().entry(rater_id).or_default();

        let sev = row.get(severity).trim();
        if sev.eq_ignore_ascii_case("no-error") {
            continue;
        }
        let sev: Severity = sev
            .parse()
            .map_err(|_| Error::parse(line, format!("unknown severity: {sev:?}")))?;
        let cat = row.get(category).trim();
        if cat.is_empty() {
            return Err(Error::parse(line, "empty category"));
        }
        let mut span = ErrorSpan::new(sev, cat)?;
        if let (Some(s), Some(e)) = (row.opt(span_start), row.opt(span_end)) {
            let parse = |v: &str| {
                v.parse::<usize>()
                    .map_err(|_| Error::parse(line, format!("bad span offset: {v:?}")))
            };
            span = span.with_span(parse(s)?, parse(e)?);
        }
        errors.push(span);
    }
    Ok(out)
}

/// Parses precomputed per-translation MQM scores (`system, seg_id, mqm`).
pub fn parse_human_scores<R: Read>(input: R) -> Result<BTreeMap<SegKey, MqmScore>> {
    let reader = TsvReader::new(input)?;
    let system = reader.required("system")?;
    let seg_id = reader.required("seg_id")?;
    let mqm = reader.required("mqm")?;
    let mut out = BTreeMap::new();
    for row in reader.rows() {
        let row = row?;
        let key = SegKey::new(
            non_empty(row.get(system), "system", row.line)?,
            parse_seg_id(row.get(seg_id), row.line)?,
        );
        let value = parse_score(row.get(mqm), row.line)?;
        if out.insert(key.clone(), MqmScore(value)).is_some() {
            return Err(Error::DuplicateScore {
                line: row.line,
                key: key.to_string(),
            });
        }
    }
    Ok(out)
}

pub fn parse_segment_scores<R: Read>(input: R) -> Result<ScoreTable> {
    let reader = TsvReader::new(input)?;
    let metric = reader.required("metric")?;
    let system = reader.required("system")?;
    let seg_id = reader.required("seg_id")?;
    let score = reader.required("score")?;

    let mut name: Option<String> = None;
    let mut scores = BTreeMap::new();
    for row in reader.rows() {
        let row = row?;
        let line = row.line;
        let m = non_empty(row.get(metric), "metric", line)?;
        match &name {
            None => name = Some(m),
            Some(first) if *first != m => {
                return Err(Error::MixedMetrics {
                    line,
                    first: first.clone(),
                    other: m,
                })
            }
            Some(_) => {}
        }
        let key = SegKey::new(
            non_empty(row.get(system), "system", line)?,
            parse_seg_id(row.get(seg_id), line)?,
        );
        let value = parse_score(row.get(score), line)?;
        if scores.insert(key.clone(), value).is_some() {
            return Err(Error::DuplicateScore {
                line,
                key: key.to_string(),
            });
        }
    }
    let name = name.ok_or_else(|| Error::Invalid("score file has no rows".into()))?;
    ScoreTable::new(name, scores)
}

pub fn parse_pairwise_scores<R: Read>(input: R) -> Result<PairwiseScoreTable> {
    let reader = TsvReader::new(input)?;
    let metric = reader.required("metric")?;
    let seg_id = reader.required("seg_id")?;
    let hyp = reader.required("hyp_system")?;
    let reference = reader.required("ref_system")?;
    let score = reader.required("score")?;

    let mut name: Option<String> = None;
    let mut scores = BTreeMap::new();
    let mut self_pairs = Vec::new();
    for row in reader.rows() {
        let row = row?;
        let line = row.line;
        let m = non_empty(row.get(metric), "metric", line)?;
        match &name {
            None => name = Some(m),
            Some(first) if *first != m => {
                return Err(Error::MixedMetrics {
                    line,
                    first: first.clone(),
                    other: m,
                })
            }
            Some(_) => {}
        }
        let key = PairKey {
            seg: parse_seg_id(row.get(seg_id), line)?,
            hyp: non_empty(row.get(hyp), "hyp_system", line)?,
            reference: non_empty(row.get(reference), "ref_system", line)?,
        };
        let value = parse_score(row.get(score), line)?;
        if key.hyp == key.reference {
            self_pairs.push(key.clone());
        }
        if scores.insert(key.clone(), value).is_some() {
            return Err(Error::DuplicateScore {
                line,
                key: format!("(seg {}, {} vs {})", key.seg, key.hyp, key.reference),
            });
        }
    }
    let metric = name.ok_or_else(|| Error::Invalid("pairwise file has no rows".into()))?;
    Ok(PairwiseScoreTable {
        metric,
        scores,
        self_pairs,
    })
}

/// Human side of a dataset.
#[derive(Debug, Clone)]
pub enum HumanInput {
    Annotations(Annotations, MqmWeights),
    Scores(BTreeMap<SegKey, MqmScore>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JoinMode {
    /// Every metric score must have a human score.
    #[default]
    Strict,
    /// Keep only translations scored by the humans and by every table.
    Intersect,
}

/// SHA-256 of one consumed input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    pub name: String,
    pub sha256: String,
}

impl InputDigest {
    pub fn of(name: impl Into<String>, bytes: &[u8]) -> Self {
        InputDigest {
            name: name.into(),
            sha256: hex::encode(Sha256::digest(bytes)),
        }
    }
}

/// Human MQM scores joined with metric score tables over one
/// (system × segment) grid. Immutable once assembled.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub lang_pair: String,
    pub systems: Vec<String>,
    pub segs: Vec<u64>,
    pub human: BTreeMap<SegKey, MqmScore>,
    pub metrics: BTreeMap<String, ScoreTable>,
    /// Fraction of human-scored translations each table covers.
    pub coverage: BTreeMap<String, f64>,
    pub provenance: Vec<InputDigest>,
}

const MAX_LISTED_KEYS: usize = 10;

pub fn assemble_dataset(
    human: HumanInput,
    tables: Vec<ScoreTable>,
    mode: JoinMode,
) -> Result<Dataset> {
    if tables.is_empty() {
        return Err(Error::Invalid("at least one score table is required".into()));
    }
    let (human, lang_pair) = match human {
        HumanInput::Annotations(ann, weights) => (ann.scores(&weights)?, ann.lang_pair),
        HumanInput::Scores(scores) => (scores, None),
    };
    if human.is_empty() {
        return Err(Error::Invalid("no human scores".into()));
    }
    let mut seen = BTreeSet::new();
    for t in &tables {
        if !seen.insert(t.metric.as_str()) {
            return Err(Error::Invalid(format!("metric {} supplied twice", t.metric)));
        }
    }

    let human_total = human.len() as f64;
    let coverage: BTreeMap<String, f64> = tables
        .iter()
        .map(|t| {
            let covered = t.scores.keys().filter(|k| human.contains_key(*k)).count();
            (t.metric.clone(), covered as f64 / human_total)
        })
        .collect();

    let (human, metrics) = match mode {
        JoinMode::Strict => {
            // Both directions: a score without a human judgment, or a judged
            // translation that some metric did not score.
            let unjudged = tables
                .iter()
                .flat_map(|t| t.scores.keys())
                .filter(|k| !human.contains_key(*k));
            let unscored = human
                .keys()
                .filter(|k| tables.iter().any(|t| !t.scores.contains_key(*k)));
            let missing: Vec<&SegKey> = unjudged
                .chain(unscored)
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            if !missing.is_empty() {
                return Err(Error::CoverageGap {
                    count: missing.len(),
                    sample: missing
                        .iter()
                        .take(MAX_LISTED_KEYS)
                        .map(|k| k.to_string())
                        .collect(),
                });
            }
            let metrics = tables.into_iter().map(|t| (t.metric.clone(), t)).collect();
            (human, metrics)
        }
        JoinMode::Intersect => {
            let mut keys: BTreeSet<SegKey> = human.keys().cloned().collect();
            for t in &tables {
                keys.retain(|k| t.scores.contains_key(k));
            }
            if keys.is_empty() {
                return Err(Error::EmptyIntersection);
            }
            let human = human
                .into_iter()
                .filter(|(k, _)| keys.contains(k))
                .collect();
            let metrics = tables
                .iter()
                .map(|t| (t.metric.clone(), t.restricted_to(&keys)))
                .collect();
            (human, metrics)
        }
    };

    Ok(Dataset::from_parts(
        lang_pair.unwrap_or_default(),
        human,
        metrics,
        coverage,
    ))
}

impl Dataset {
    fn from_parts(
        lang_pair: String,
        human: BTreeMap<SegKey, MqmScore>,
        metrics: BTreeMap<String, ScoreTable>,
        coverage: BTreeMap<String, f64>,
    ) -> Self {
        let systems: BTreeSet<&str> = human.keys().map(|k| k.system.as_str()).collect();
        let segs: BTreeSet<u64> = human.keys().map(|k| k.seg).collect();
        Dataset {
            lang_pair,
            systems: systems.into_iter().map(str::to_string).collect(),
            segs: segs.into_iter().collect(),
            human,
            metrics,
            coverage,
            provenance: Vec::new(),
        }
    }

    /// A dataset with human scores and no metric tables yet, e.g. for MBR
    /// re-ranking driven by a pairwise table.
    pub fn human_only(human: HumanInput) -> Result<Self> {
        let (human, lang_pair) = match human {
            HumanInput::Annotations(ann, weights) => (ann.scores(&weights)?, ann.lang_pair),
            HumanInput::Scores(scores) => (scores, None),
        };
        if human.is_empty() {
            return Err(Error::Invalid("no human scores".into()));
        }
        Ok(Dataset::from_parts(
            lang_pair.unwrap_or_default(),
            human,
            BTreeMap::new(),
            BTreeMap::new(),
        ))
    }

    pub fn with_lang_pair(mut self, lang_pair: impl Into<String>) -> Self {
        self.lang_pair = lang_pair.into();
        self
    }

    pub fn with_provenance(mut self, digests: Vec<InputDigest>) -> Self {
        self.provenance = digests;
        self
    }

    /// Adds one more table under the strict rule, e.g. a generated baseline.
    pub fn with_metric(mut self, table: ScoreTable) -> Result<Self> {
        if self.metrics.contains_key(&table.metric) {
            return Err(Error::Invalid(format!("metric {} supplied twice", table.metric)));
        }
        let missing: Vec<String> = table
            .scores
            .keys()
            .filter(|k| !self.human.contains_key(*k))
            .map(|k| k.to_string())
            .collect();
        if !missing.is_empty() {
            return Err(Error::CoverageGap {
                count: missing.len(),
                sample: missing.into_iter().take(MAX_LISTED_KEYS).collect(),
            });
        }
        let covered = table.len() as f64 / self.human.len() as f64;
        self.coverage.insert(table.metric.clone(), covered);
        self.metrics.insert(table.metric.clone(), table);
        Ok(self)
    }

    pub fn metric(&self, name: &str) -> Result<&ScoreTable> {
        self.metrics
            .get(name)
            .ok_or_else(|| Error::UnknownMetric(name.to_string()))
    }

    pub fn metric_names(&self) -> impl Iterator<Item = &str> {
        self.metrics.keys().map(String::as_str)
    }

    pub fn human_score(&self, key: &SegKey) -> Option<MqmScore> {
        self.human.get(key).copied()
    }

    /// `(metric score, human score)` pairs of each system, systems in
    /// sorted order. Systems the metric never scores are omitted.
    pub fn system_rows(&self, metric: &str) -> Result<Vec<(String, Vec<(f64, f64)>)>> {
        let table = self.metric(metric)?;
        let mut out: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
        for (key, &score) in &table.scores {
            let h = self.human[key].0;
            match out.last_mut() {
                Some((sys, rows)) if *sys == key.system => rows.push((score, h)),
                _ => out.push((key.system.clone(), vec![(score, h)])),
            }
        }
        Ok(out)
    }

    /// Human scores grouped by segment: `(seg, [(system, h)])`, both levels
    /// sorted.
    pub fn human_by_segment(&self) -> Vec<(u64, Vec<(String, f64)>)> {
        let mut groups: BTreeMap<u64, Vec<(String, f64)>> = BTreeMap::new();
        for (key, h) in &self.human {
            groups
                .entry(key.seg)
                .or_default()
                .push((key.system.clone(), h.0));
        }
        groups.into_iter().collect()
    }
}
