use serde::{Deserialize, Serialize};

use crate::config::DeadlineConfig;
use crate::model::TranscriptBundle;

/// Number of original-transcript requests issued before any alternative.
pub const ORIGINAL_HEAD: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SuggestionRequest {
    /// 0 is the original transcript, `i >= 1` the i-th alternative.
    pub variant_index: usize,
    /// 1-based slot within the variant's quota.
    pub slot: usize,
    /// Position in the plan.
    pub scheduled_order: usize,
}

/// Orders suggestion requests for one turn.
///
/// The original gets its first three slots up front. The remaining slots go
/// round-robin by slot number across the alternatives, and after each round
/// the original's next unused slot (4, 5, ...) is appended. Every
/// (variant, slot) pair appears exactly once, `(n + 1) * quota` in total.
pub fn plan_requests(bundle: &TranscriptBundle, cfg: &DeadlineConfig) -> Vec<SuggestionRequest> {
    plan_for(bundle.alternatives.len(), cfg.per_variant_quota)
}

pub fn plan_for(alternatives: usize, quota: usize) -> Vec<SuggestionRequest> {
    let mut order: Vec<(usize, usize)> = Vec::with_capacity((alternatives + 1) * quota);
    let head = ORIGINAL_HEAD.min(quota);
    order.extend((1..=head).map(|slot| (0, slot)));
    let mut next_original = head + 1;
    for round in 1..=quota {
        order.extend((1..=alternatives).map(|variant| (variant, round)));
        if next_original <= quota {
            order.push((0, next_original));
            next_original += 1;
        }
    }
    order
        .into_iter()
        .enumerate()
        .map(|(scheduled_order, (variant_index, slot))| SuggestionRequest {
            variant_index,
            slot,
            scheduled_order,
        })
        .collect()
}
