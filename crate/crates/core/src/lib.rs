//! Interpretable meta-evaluation of machine-translation metrics.
//!
//! Human MQM annotations become scores and binary Good/Perfect labels
//! ([`mqm`]); score files are parsed and joined into a [`Dataset`]
//! ([`ingest`]). A metric is then evaluated as a binary classifier with
//! system-grouped Precision/Recall/F_β ([`classify`]), as a re-ranker with
//! tie-aware precision ([`rerank`]), and through correlations, a random
//! baseline and the false-positive Δ analysis ([`stats`]).
//!
//! The threshold sweep, per-segment re-ranking and baseline generation run
//! on rayon when the default `parallel` feature is on; see [`Exec`].

// `!(x > 0.0)` style checks are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classify;
pub mod error;
pub mod exec;
pub mod ingest;
pub mod mqm;
pub mod rerank;
pub mod stats;

pub use classify::{
    candidate_thresholds, confusion, evaluate_with_threshold, f_beta, optimize_threshold,
    optimize_threshold_with, prf, system_grouped_prf, ClassifySettings, ConfusionCounts,
    SystemPrf, ThresholdResult, DEFAULT_BETA,
};
pub use error::{Error, Result};
pub use exec::Exec;
pub use ingest::{
    assemble_dataset, parse_human_scores, parse_mqm_annotations, parse_pairwise_scores,
    parse_segment_scores, Annotations, Dataset, HumanInput, InputDigest, JoinMode,
    PairwiseScoreTable, ScoreTable, SegKey,
};
pub use mqm::{
    aggregate_ratings, binarize, score_mqm, score_mqm_with, BinaryLabel, ClassName, ClassSpec,
    ErrorSpan, MqmScore, MqmWeights, Severity,
};
pub use rerank::{
    best_set, mbr_rerank_report, mbr_utilities, rerank_report, rrp_segment, RerankReport,
    SegGroup,
};
pub use stats::{
    acc_eq, fp_delta_distribution, kendall_tau_b, pearson_rho, random_sysname,
    segment_grouped_correlation, Coefficient, DeltaStats, RandomBaselineParams,
};
