//! Word-level precision and recall between two spans of text, following the
//! SQuAD evaluation convention (normalized tokens, multiset intersection).

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::text::normalize_tokens;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlapScore {
    pub precision: f64,
    pub recall: f64,
}

impl OverlapScore {
    pub const ZERO: OverlapScore = OverlapScore {
        precision: 0.0,
        recall: 0.0,
    };

    pub fn f1(&self) -> f64 {
        if self.precision + self.recall == 0.0 {
            0.0
        } else {
            2.0 * self.precision * self.recall / (self.precision + self.recall)
        }
    }
}

/// Overlap of `candidate` against `reference`.
pub fn overlap(candidate: &str, reference: &str) -> OverlapScore {
    overlap_tokens(&normalize_tokens(candidate), &normalize_tokens(reference))
}

/// Overlap on already-normalized token lists.
pub fn overlap_tokens<S: AsRef<str>>(candidate: &[S], reference: &[S]) -> OverlapScore {
    if candidate.is_empty() || reference.is_empty() {
        return OverlapScore::ZERO;
    }
    let shared = common_count(candidate, reference);
    OverlapScore {
        precision: shared as f64 / candidate.len() as f64,
        recall: shared as f64 / reference.len() as f64,
    }
}

/// Size of the multiset intersection of two token lists.
pub fn common_count<S: AsRef<str>>(a: &[S], b: &[S]) -> usize {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for t in b {
        *counts.entry(t.as_ref()).or_default() += 1;
    }
    let mut shared = 0;
    for t in a {
        if let Some(c) = counts.get_mut(t.as_ref()) {
            if *c > 0 {
                *c -= 1;
                shared += 1;
            }
        }
    }
    shared
}
