//! Pairwise verification and group comparisons: predictive scores, score
//! matrices, thresholds, clustering and multiple-testing corrected tests.

mod matrix;
mod scores;
mod stats;
mod threshold;

pub use matrix::{score_matrix, ScoreKind, ScoreMatrix, ScoreOptions};
pub use scores::{
    coverage_rate, energy_score, energy_score_with, energy_spread, rank_score, CoverageBands, EnergySpread,
    RankReference, EXACT_ENERGY_LIMIT, SUBSAMPLED_PAIRS,
};
pub use stats::{
    benjamini_yekutieli, group_tests, harmonic, wilcoxon_exact, wilcoxon_normal, wilcoxon_rank_sum, Direction,
    GroupTestResult,
};
pub use threshold::{
    cluster_by_threshold, pairwise_f1, partition_f1, roc_auc, select_threshold, upper_pairs, PairF1, ThresholdRule,
};
