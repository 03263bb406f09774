//! QA budget: keep a fraction of GENERAL and SPECIFIC pairs.
//!
//! SPECIFIC pairs are trimmed within the tree they belong to (orphans form
//! one group), GENERAL pairs across the paragraph, each keeping the
//! `ceil(fraction * n)` best by generation score. The kept pairs are then
//! regrouped with [`build_forest`], which moves children of dropped roots
//! to surviving ones and leaves every other child where it was.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filtering::QAPair;
use crate::hierarchy::{build_forest, QAForest};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BudgetConfig {
    pub general_fraction: f64,
    pub specific_fraction: f64,
}

impl Default for BudgetConfig {
    fn default() -> Self {
        Self {
            general_fraction: 1.0,
            specific_fraction: 1.0,
        }
    }
}

impl BudgetConfig {
    pub fn new(general_fraction: f64, specific_fraction: f64) -> Result<Self> {
        let c = Self {
            general_fraction,
            specific_fraction,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, f) in [
            ("general_fraction", self.general_fraction),
            ("specific_fraction", self.specific_fraction),
        ] {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::InvalidConfig(format!("{name} = {f} is outside (0, 1]")));
            }
        }
        Ok(())
    }
}

/// `ceil(fraction * n)`, computed so that exact products are not pushed up
/// by rounding error.
pub fn kept_count(fraction: f64, n: usize) -> usize {
    let x = fraction * n as f64;
    let r = x.round();
    let k = if (x - r).abs() < 1e-9 { r } else { x.ceil() };
    (k as usize).min(n)
}

fn top(mut pairs: Vec<QAPair>, fraction: f64) -> Vec<QAPair> {
    let k = kept_count(fraction, pairs.len());
    pairs.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.origin.cmp(&b.origin))
            .then(a.question.cmp(&b.question))
            .then(a.answer.start.cmp(&b.answer.start))
    });
    pairs.truncate(k);
    pairs
}

pub fn apply_budget(forest: &QAForest, cfg: &BudgetConfig) -> Result<QAForest> {
    cfg.validate()?;
    let mut roots = Vec::with_capacity(forest.trees.len());
    let mut kept = Vec::new();
    for t in &forest.trees {
        roots.push(t.root.clone());
        kept.extend(top(t.children.clone(), cfg.specific_fraction));
    }
    kept.extend(top(forest.orphans.clone(), cfg.specific_fraction));
    kept.extend(top(roots, cfg.general_fraction));

    let mut out = build_forest(forest.paragraph, kept);
    let orphaned = out.metadata.orphaned;
    out.metadata = forest.metadata.clone();
    out.metadata.orphaned = orphaned;
    Ok(out)
}
