//! Groups a paragraph's QA pairs into trees: GENERAL roots, SPECIFIC
//! children.
//!
//! A SPECIFIC pair hangs under the GENERAL pair whose answer contains the
//! largest share of its answer words (word-level precision). Without any
//! overlap it goes to the closest GENERAL answer that starts before it, or
//! to the first GENERAL pair when none does.

use serde::{Deserialize, Serialize};

use crate::filtering::{QAPair, RelaxedStage, StageCounts};
use crate::overlap::overlap;
use crate::taxonomy::SpecificityLabel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QATree {
    pub root: QAPair,
    pub children: Vec<QAPair>,
}

/// Per-paragraph bookkeeping carried into the output.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ForestMetadata {
    pub counts: StageCounts,
    pub relaxed: Vec<RelaxedStage>,
    pub relaxation_exhausted: bool,
    pub unanswerable_rate: f64,
    /// Set when SPECIFIC pairs exist but no GENERAL pair does.
    pub orphaned: bool,
    /// Backend error that emptied this paragraph, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QAForest {
    pub paragraph: usize,
    pub trees: Vec<QATree>,
    pub orphans: Vec<QAPair>,
    pub metadata: ForestMetadata,
}

impl QAForest {
    pub fn empty(paragraph: usize) -> Self {
        Self {
            paragraph,
            trees: Vec::new(),
            orphans: Vec::new(),
            metadata: ForestMetadata::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.trees.iter().map(|t| 1 + t.children.len()).sum::<usize>() + self.orphans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every pair: roots, each followed by its children, then orphans.
    pub fn pairs(&self) -> impl Iterator<Item = &QAPair> {
        self.trees
            .iter()
            .flat_map(|t| std::iter::once(&t.root).chain(&t.children))
            .chain(&self.orphans)
    }

    pub fn into_pairs(self) -> Vec<QAPair> {
        let mut out = Vec::with_capacity(self.len());
        for t in self.trees {
            out.push(t.root);
            out.extend(t.children);
        }
        out.extend(self.orphans);
        out
    }
}

fn reading_order(a: &QAPair, b: &QAPair) -> std::cmp::Ordering {
    (a.answer.start, &a.question)
        .cmp(&(b.answer.start, &b.question))
        .then(b.score.total_cmp(&a.score))
}

/// Index into `generals` of the parent for `specific`. `generals` must be
/// in reading order (answer start, then question text).
pub fn assign_parent(specific: &QAPair, generals: &[QAPair]) -> Option<usize> {
    let first = (!generals.is_empty()).then_some(0)?;
    let mut best: Option<(usize, f64)> = None;
    for (i, g) in generals.iter().enumerate() {
        let p = overlap(&specific.answer_text, &g.answer_text).precision;
        if p > 0.0 && best.is_none_or(|(_, bp)| p > bp) {
            best = Some((i, p));
        }
    }
    if let Some((i, _)) = best {
        return Some(i);
    }
    let start = specific.answer.start;
    let mut preceding: Option<usize> = None;
    for (i, g) in generals.iter().enumerate() {
        if g.answer.start < start && preceding.is_none_or(|j| generals[j].answer.start < g.answer.start) {
            preceding = Some(i);
        }
    }
    Some(preceding.unwrap_or(first))
}

/// Builds the forest for one paragraph from its surviving pairs.
pub fn build_forest(paragraph: usize, pairs: Vec<QAPair>) -> QAForest {
    let (mut generals, mut specifics): (Vec<QAPair>, Vec<QAPair>) = pairs
        .into_iter()
        .partition(|p| p.specificity == SpecificityLabel::General);
    generals.sort_by(reading_order);
    specifics.sort_by(reading_order);

    let mut forest = QAForest::empty(paragraph);
    if generals.is_empty() {
        forest.metadata.orphaned = !specifics.is_empty();
        forest.orphans = specifics;
        return forest;
    }
    let parents: Vec<usize> = specifics
        .iter()
        .map(|s| assign_parent(s, &generals).expect("generals is non-empty"))
        .collect();
    forest.trees = generals
        .into_iter()
        .map(|root| QATree {
            root,
            children: Vec::new(),
        })
        .collect();
    for (s, parent) in specifics.into_iter().zip(parents) {
        forest.trees[parent].children.push(s);
    }
    forest
}
