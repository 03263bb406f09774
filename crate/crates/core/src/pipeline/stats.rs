//! Label distribution reports over a labeled corpus.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::taxonomy::{rule_coverage_stats, LabelSource, LabeledQuestion, SpecificityLabel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsRow {
    /// `label` or `source`.
    pub group: String,
    pub key: String,
    pub count: usize,
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub total: usize,
    pub rows: Vec<StatsRow>,
}

impl StatsReport {
    pub fn percent(&self, group: &str, key: &str) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.group == group && r.key == key)
            .map(|r| r.percent)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r).map_err(|e| std::io::Error::other(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }
}

fn percent(n: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        // two decimals keep reports stable across platforms
        (10_000.0 * n as f64 / total as f64).round() / 100.0
    }
}

pub fn corpus_stats(corpus: &[LabeledQuestion]) -> StatsReport {
    let stats = rule_coverage_stats(corpus);
    let mut rows = Vec::new();
    for label in SpecificityLabel::ALL {
        let count = stats.by_label.get(&label).copied().unwrap_or(0);
        rows.push(StatsRow {
            group: "label".into(),
            key: label.as_str().into(),
            count,
            percent: percent(count, stats.total),
        });
    }
    for (source, key) in [
        (LabelSource::Rule, "rule"),
        (LabelSource::Hand, "hand"),
        (LabelSource::Fallback, "fallback"),
    ] {
        let count = stats.by_source.get(&source).copied().unwrap_or(0);
        rows.push(StatsRow {
            group: "source".into(),
            key: key.into(),
            count,
            percent: percent(count, stats.total),
        });
    }
    StatsReport {
        total: stats.total,
        rows,
    }
}
