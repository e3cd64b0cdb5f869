//! MQM error annotations, segment scores and binary quality labels.
//!
//! Penalties are kept in integer tenths of an MQM point so that sums of
//! the standard weights (−25, −5, −0.1, −1) are exact.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance for comparisons against a human threshold.
pub const SCORE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Severity {
    Major,
    Minor,
}

impl FromStr for Severity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "major" => Ok(Severity::Major),
            "minor" => Ok(Severity::Minor),
            other => Err(Error::Invalid(format!("unknown severity: {other:?}"))),
        }
    }
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Severity::Major => f.write_str("Major"),
            Severity::Minor => f.write_str("Minor"),
        }
    }
}

/// One annotated translation error.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorSpan {
    pub severity: Severity,
    pub category: String,
    /// Character offsets of the span; carried through, never scored.
    pub span: Option<(usize, usize)>,
}

impl ErrorSpan {
    pub fn new(severity: Severity, category: impl Into<String>) -> Result<Self> {
        let category = category.into();
        if category.trim().is_empty() {
            return Err(Error::Invalid("error category is empty".into()));
        }
        Ok(ErrorSpan {
            severity,
            category,
            span: None,
        })
    }

    pub fn with_span(mut self, start: usize, end: usize) -> Self {
        self.span = Some((start, end));
        self
    }
}

/// Which weighting-table row a category falls in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CategoryClass {
    NonTranslation,
    Punctuation,
    Other,
}

fn classify_category(category: &str) -> CategoryClass {
    let c = category.trim().to_lowercase();
    if c.ends_with("non-translation") {
        CategoryClass::NonTranslation
    } else if c.ends_with("punctuation") {
        CategoryClass::Punctuation
    } else {
        CategoryClass::Other
    }
}

/// Penalty weights in tenths of an MQM point. All weights are ≤ 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MqmWeights {
    pub major_non_translation: i64,
    pub major: i64,
    pub minor_punctuation: i64,
    pub minor: i64,
}

impl Default for MqmWeights {
    fn default() -> Self {
        MqmWeights {
            major_non_translation: -250,
            major: -50,
            minor_punctuation: -1,
            minor: -10,
        }
    }
}

impl MqmWeights {
    /// Builds weights from decimal penalties such as `-25` or `-0.1`.
    /// Each must be a non-positive multiple of 0.1.
    pub fn from_points(
        major_non_translation: f64,
        major: f64,
        minor_punctuation: f64,
        minor: f64,
    ) -> Result<Self> {
        let tenths = |w: f64| -> Result<i64> {
            let t = (w * 10.0).round();
            if !w.is_finite() || w > 0.0 || ((w * 10.0) - t).abs() > 1e-6 {
                return Err(Error::Invalid(format!(
                    "MQM weight {w} is not a non-positive multiple of 0.1"
                )));
            }
            Ok(t as i64)
        };
        Ok(MqmWeights {
            major_non_translation: tenths(major_non_translation)?,
            major: tenths(major)?,
            minor_punctuation: tenths(minor_punctuation)?,
            minor: tenths(minor)?,
        })
    }

    /// Penalty of a single error, in tenths.
    pub fn penalty_tenths(&self, error: &ErrorSpan) -> i64 {
        match (error.severity, classify_category(&error.category)) {
            (Severity::Major, CategoryClass::NonTranslation) => self.major_non_translation,
            (Severity::Major, _) => self.major,
            (Severity::Minor, CategoryClass::Punctuation) => self.minor_punctuation,
            (Severity::Minor, _) => self.minor,
        }
    }
}

/// A segment-level MQM score `h`, in penalty units (≤ 0 when derived from
/// annotations).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MqmScore(pub f64);

impl MqmScore {
    pub fn value(self) -> f64 {
        self.0
    }

    fn from_tenths(tenths: i64) -> Self {
        MqmScore(tenths as f64 / 10.0)
    }
}

/// Sum of penalties in tenths; exact and additive.
pub fn penalty_tenths(errors: &[ErrorSpan], weights: &MqmWeights) -> i64 {
    errors.iter().map(|e| weights.penalty_tenths(e)).sum()
}

/// MQM score under the standard weighting table.
pub fn score_mqm(errors: &[ErrorSpan]) -> MqmScore {
    score_mqm_with(errors, &MqmWeights::default())
}

pub fn score_mqm_with(errors: &[ErrorSpan], weights: &MqmWeights) -> MqmScore {
    MqmScore::from_tenths(penalty_tenths(errors, weights))
}

/// Mean of several raters' scores for the same translation.
pub fn aggregate_ratings(per_rater: &[MqmScore]) -> Result<MqmScore> {
    if per_rater.is_empty() {
        return Err(Error::NoRatings);
    }
    let sum: f64 = per_rater.iter().map(|s| s.0).sum();
    Ok(MqmScore(sum / per_rater.len() as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ClassName {
    Good,
    Perfect,
}

impl fmt::Display for ClassName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassName::Good => f.write_str("good"),
            ClassName::Perfect => f.write_str("perfect"),
        }
    }
}

/// A binary labeling rule: translations with `h ≥ human_threshold` are
/// positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassSpec {
    pub name: ClassName,
    pub human_threshold: f64,
}

impl ClassSpec {
    /// `h ≥ −4`: no Major error and at most four Minor ones.
    pub fn good() -> Self {
        ClassSpec {
            name: ClassName::Good,
            human_threshold: -4.0,
        }
    }

    /// `h ≥ −1`: at most one Minor error.
    pub fn perfect() -> Self {
        ClassSpec {
            name: ClassName::Perfect,
            human_threshold: -1.0,
        }
    }

    pub fn new(name: ClassName, human_threshold: f64) -> Result<Self> {
        if !human_threshold.is_finite() {
            return Err(Error::Invalid(format!(
                "human threshold must be finite, got {human_threshold}"
            )));
        }
        Ok(ClassSpec {
            name,
            human_threshold,
        })
    }

    /// Short label used in reports, e.g. `good` or `h>=-2.5`.
    pub fn label(&self) -> String {
        let default = match self.name {
            ClassName::Good => -4.0,
            ClassName::Perfect => -1.0,
        };
        if self.human_threshold == default {
            self.name.to_string()
        } else {
            format!("{}(h>={})", self.name, self.human_threshold)
        }
    }
}

/// Parses `good`, `perfect` or `h>=<value>`. A bare threshold is
/// reported under the `Good` name.
impl FromStr for ClassSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        match t.as_str() {
            "good" => Ok(ClassSpec::good()),
            "perfect" => Ok(ClassSpec::perfect()),
            _ => {
                let value = t
                    .strip_prefix("h>=")
                    .ok_or_else(|| Error::Invalid(format!("unknown class spec: {s:?}")))?;
                let threshold: f64 = value
                    .trim()
                    .parse()
                    .map_err(|_| Error::Invalid(format!("bad threshold in class spec: {s:?}")))?;
                ClassSpec::new(ClassName::Good, threshold)
            }
        }
    }
}

/// Human oracle label: `true` for Good/Perfect, `false` for Bad/Other.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BinaryLabel {
    pub positive: bool,
}

/// Inclusive threshold test with an absolute tolerance of [`SCORE_EPS`].
pub fn is_positive(score: f64, spec: &ClassSpec) -> bool {
    score >= spec.human_threshold - SCORE_EPS
}

pub fn binarize(score: MqmScore, spec: &ClassSpec) -> BinaryLabel {
    BinaryLabel {
        positive: is_positive(score.0, spec),
    }
}
