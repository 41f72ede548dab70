//! Human judgment collection: assignments, the judgment log and per-pair
//! aggregation with exclusion rules.
//!
//! Ratings are on a 1 to 7 scale relative to presentation order (1: the
//! first sentence shown is far more natural). Before aggregation they are
//! recoded onto an unshifted-first scale, `r -> 8 - r` when the shifted
//! sentence was shown first.

mod service;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

pub use service::{AttentionCheck, StudyConfig, StudyError, StudyService};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PresentationOrder {
    UnshiftedFirst,
    ShiftedFirst,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssignmentItem {
    pub pair_id: String,
    pub presentation_order: PresentationOrder,
    pub is_attention_check: bool,
    /// The sentence shown first.
    pub sentence_a: String,
    /// The sentence shown second.
    pub sentence_b: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub participant_id: String,
    pub items: Vec<AssignmentItem>,
    /// Unix time in milliseconds.
    pub issued_at: u64,
}

impl Assignment {
    pub fn item(&self, pair_id: &str) -> Option<&AssignmentItem> {
        self.items.iter().find(|i| i.pair_id == pair_id)
    }

    pub fn scored_items(&self) -> usize {
        self.items.iter().filter(|i| !i.is_attention_check).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgmentRecord {
    pub participant_id: String,
    pub pair_id: String,
    pub presentation_order: PresentationOrder,
    pub rating: u8,
    #[serde(default)]
    pub response_time_ms: u64,
    /// Unix time in milliseconds; filled in by the service when 0.
    #[serde(default)]
    pub submitted_at: u64,
    /// Set by the service from the issued assignment.
    #[serde(default)]
    pub is_attention_check: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateJudgment {
    pub pair_id: String,
    pub n: usize,
    /// Mean recoded rating (unshifted-first scale).
    pub mean: f64,
    /// Sample standard deviation; 0 when fewer than two ratings.
    pub stddev: f64,
    pub excluded: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExclusionConfig {
    pub max_stddev: f64,
    pub min_quorum: usize,
    /// Participants failing more than this fraction of their attention
    /// checks are dropped.
    pub max_attention_fail_fraction: f64,
    /// Highest recoded rating that still passes an attention check.
    pub attention_pass_max: u8,
}

impl Default for ExclusionConfig {
    fn default() -> Self {
        ExclusionConfig { max_stddev: 1.5, min_quorum: 3, max_attention_fail_fraction: 0.5, attention_pass_max: 3 }
    }
}

/// Maps a rating onto the unshifted-first scale. Applying it twice with the
/// same order returns the original rating.
pub fn recode(rating: u8, order: PresentationOrder) -> u8 {
    match order {
        PresentationOrder::UnshiftedFirst => rating,
        PresentationOrder::ShiftedFirst => 8 - rating,
    }
}

/// Mean and sample standard deviation.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let sd = if n > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    (mean, sd)
}

/// Participants whose attention-check failure rate exceeds the threshold.
pub fn failing_participants(log: &[JudgmentRecord], cfg: &ExclusionConfig) -> BTreeSet<String> {
    let mut tally: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for j in log.iter().filter(|j| j.is_attention_check) {
        let t = tally.entry(j.participant_id.as_str()).or_default();
        t.0 += 1;
        if recode(j.rating, j.presentation_order) > cfg.attention_pass_max {
            t.1 += 1;
        }
    }
    tally
        .into_iter()
        .filter(|(_, (total, failed))| *failed as f64 > cfg.max_attention_fail_fraction * *total as f64)
        .map(|(p, _)| p.to_string())
        .collect()
}

/// Pure fold over the judgment log: drops failing participants, recodes,
/// and computes per-pair statistics with exclusion flags. Output is sorted
/// by pair id.
pub fn aggregate(log: &[JudgmentRecord], cfg: &ExclusionConfig) -> Vec<AggregateJudgment> {
    let dropped = failing_participants(log, cfg);
    let mut per_pair: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for j in log {
        if j.is_attention_check || dropped.contains(&j.participant_id) {
            continue;
        }
        per_pair
            .entry(j.pair_id.as_str())
            .or_default()
            .push(f64::from(recode(j.rating, j.presentation_order)));
    }
    per_pair
        .into_iter()
        .map(|(pair_id, ratings)| {
            let (mean, stddev) = mean_sd(&ratings);
            let reason = if ratings.len() < cfg.min_quorum {
                Some(format!("fewer than {} ratings", cfg.min_quorum))
            } else if stddev > cfg.max_stddev {
                Some(format!("standard deviation above {}", cfg.max_stddev))
            } else {
                None
            };
            AggregateJudgment {
                pair_id: pair_id.to_string(),
                n: ratings.len(),
                mean,
                stddev,
                excluded: reason.is_some(),
                reason,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn j(p: &str, pair: &str, order: PresentationOrder, rating: u8, attn: bool) -> JudgmentRecord {
        JudgmentRecord {
            participant_id: p.into(),
            pair_id: pair.into(),
            presentation_order: order,
            rating,
            response_time_ms: 1000,
            submitted_at: 0,
            is_attention_check: attn,
        }
    }

    use PresentationOrder::*;

    #[test]
    fn recode_is_an_involution() {
        for r in 1..=7 {
            for o in [UnshiftedFirst, ShiftedFirst] {
                assert_eq!(recode(recode(r, o), o), r);
            }
        }
        assert_eq!(recode(2, ShiftedFirst), 6);
    }

    #[test]
    fn uniform_ratings_are_kept() {
        let log: Vec<_> = ["a", "b", "c"].iter().map(|p| j(p, "x", UnshiftedFirst, 4, false)).collect();
        let agg = aggregate(&log, &ExclusionConfig::default());
        assert_eq!(agg.len(), 1);
        assert_eq!((agg[0].n, agg[0].mean, agg[0].stddev, agg[0].excluded), (3, 4.0, 0.0, false));
    }

    #[test]
    fn polarized_ratings_are_excluded() {
        // recoded [1, 7, 1, 7]; the last two arrive shifted-first
        let log = vec![
            j("a", "x", UnshiftedFirst, 1, false),
            j("b", "x", UnshiftedFirst, 7, false),
            j("c", "x", ShiftedFirst, 7, false),
            j("d", "x", ShiftedFirst, 1, false),
        ];
        let agg = aggregate(&log, &ExclusionConfig::default());
        assert_eq!(agg[0].mean, 4.0);
        assert!((agg[0].stddev - 12f64.sqrt()).abs() < 1e-12);
        assert!(agg[0].excluded);
    }

    #[test]
    fn quorum() {
        let log = vec![j("a", "x", UnshiftedFirst, 3, false), j("b", "x", UnshiftedFirst, 3, false)];
        assert!(aggregate(&log, &ExclusionConfig::default())[0].excluded);
    }

    #[test]
    fn attention_failures_drop_the_participant() {
        let mut log = vec![
            j("bad", "attn-1", UnshiftedFirst, 7, true),
            j("bad", "attn-2", ShiftedFirst, 1, true),
            j("bad", "x", UnshiftedFirst, 1, false),
        ];
        for p in ["a", "b", "c"] {
            log.push(j(p, "attn-1", UnshiftedFirst, 1, true));
            log.push(j(p, "x", UnshiftedFirst, 5, false));
        }
        let cfg = ExclusionConfig::default();
        assert_eq!(failing_participants(&log, &cfg).into_iter().collect::<Vec<_>>(), ["bad"]);
        let agg = aggregate(&log, &cfg);
        assert_eq!((agg[0].n, agg[0].mean), (3, 5.0));
    }
}
