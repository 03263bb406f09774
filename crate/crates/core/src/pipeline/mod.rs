//! End-to-end orchestration.
//!
//! Each paragraph runs through span selection, generation, filtering,
//! hierarchy construction and the budget on its own, on a bounded pool of
//! worker threads. Results come back in input order.

pub mod config;
pub mod ingest;
pub mod stats;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::backends::mock::{MockAnswerer, MockGenerator};
use crate::backends::{self, QuestionAnswerer, QuestionGenerator};
use crate::budget::{apply_budget, BudgetConfig};
use crate::error::{BackendError, Error, Result};
use crate::filtering::{filter_with_fallback, QAPair};
use crate::hierarchy::{build_forest, ForestMetadata, QAForest};
use crate::spans::select_spans;
use crate::text::{Document, Paragraph, Segmenter};

pub use config::{BackendConfig, PipelineConfig, MOCK};

/// Output format version.
pub const VERSION: &str = "1.0";

/// The generation and answering backends a run uses.
#[derive(Clone, Copy)]
pub struct Backends<'a> {
    pub generator: &'a dyn QuestionGenerator,
    pub answerer: &'a dyn QuestionAnswerer,
}

/// Owned mock backends.
pub struct MockBackends {
    pub generator: MockGenerator,
    pub answerer: MockAnswerer,
}

impl MockBackends {
    pub fn new(seed: u64) -> Self {
        Self {
            generator: MockGenerator::new(seed),
            answerer: MockAnswerer,
        }
    }

    pub fn backends(&self) -> Backends<'_> {
        Backends {
            generator: &self.generator,
            answerer: &self.answerer,
        }
    }
}

/// Filtered forests before the budget, one per paragraph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquashRun {
    pub document: Document,
    pub forests: Vec<QAForest>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerOut {
    pub start: usize,
    pub end: usize,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeOut {
    pub question: String,
    pub answer: AnswerOut,
    pub score: f64,
}

impl From<&QAPair> for NodeOut {
    fn from(p: &QAPair) -> Self {
        Self {
            question: p.question.clone(),
            answer: AnswerOut {
                start: p.answer.start,
                end: p.answer.end,
                text: p.answer_text.clone(),
            },
            score: p.score,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeOut {
    pub root: NodeOut,
    pub children: Vec<NodeOut>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParagraphOut {
    pub index: usize,
    pub text: String,
    pub trees: Vec<TreeOut>,
    pub orphans: Vec<NodeOut>,
    pub metadata: ForestMetadata,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquashOutput {
    pub document_id: String,
    pub paragraphs: Vec<ParagraphOut>,
    pub config: PipelineConfig,
    pub version: String,
}

impl SquashOutput {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("output serializes")
    }
}

fn paragraph_out(p: &Paragraph, forest: &QAForest) -> ParagraphOut {
    ParagraphOut {
        index: p.index,
        text: p.text.clone(),
        trees: forest
            .trees
            .iter()
            .map(|t| TreeOut {
                root: (&t.root).into(),
                children: t.children.iter().map(Into::into).collect(),
            })
            .collect(),
        orphans: forest.orphans.iter().map(Into::into).collect(),
        metadata: forest.metadata.clone(),
    }
}

fn squash_paragraph(p: &Paragraph, config: &PipelineConfig, b: Backends<'_>) -> Result<QAForest> {
    let spans = select_spans(p)?;
    let requests: Vec<_> = spans.iter().map(|s| config.decode.request(&p.text, s)).collect();
    for r in &requests {
        backends::check_request(r)?;
    }
    let replies = b.generator.generate_batch(&requests)?;
    if replies.len() != requests.len() {
        return Err(BackendError::Protocol {
            endpoint: "generate".into(),
            message: format!("expected {} results, got {}", requests.len(), replies.len()),
        }
        .into());
    }
    let mut candidates = Vec::new();
    for (reply, source) in replies.into_iter().zip(&spans) {
        backends::check_reply("generate", config.decode.policy, &reply)?;
        candidates.extend(backends::attach(reply, source));
    }
    let outcome = filter_with_fallback(p, &candidates, &config.filter, |qs| {
        Ok(backends::answer(b.answerer, &p.text, qs)?)
    })?;
    let metadata = ForestMetadata {
        counts: outcome.counts,
        unanswerable_rate: outcome.unanswerable_rate(),
        relaxed: outcome.relaxed.clone(),
        relaxation_exhausted: outcome.exhausted,
        orphaned: false,
        failure: None,
    };
    let mut forest = build_forest(p.index, outcome.pairs);
    forest.metadata = ForestMetadata {
        orphaned: forest.metadata.orphaned,
        ..metadata
    };
    Ok(forest)
}

/// Runs every paragraph and returns the unbudgeted forests in input order.
/// A failing paragraph yields an empty forest with `failure` set; the run
/// fails only when every paragraph does.
pub fn run(document: &Document, config: &PipelineConfig, b: Backends<'_>) -> Result<SquashRun> {
    config.validate()?;
    let n = document.paragraphs.len();
    if n == 0 {
        return Err(Error::InvalidInput("document has no paragraphs".into()));
    }
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<QAForest>>>> = Mutex::new((0..n).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..config.workers.min(n) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let r = squash_paragraph(&document.paragraphs[i], config, b);
                results.lock().expect("no worker panicked")[i] = Some(r);
            });
        }
    });
    let results = results.into_inner().expect("no worker panicked");

    let mut forests = Vec::with_capacity(n);
    let mut failures = Vec::new();
    for (p, r) in document.paragraphs.iter().zip(results) {
        match r.expect("every paragraph ran") {
            Ok(f) => forests.push(f),
            Err(e) => {
                tracing::warn!(paragraph = p.index, error = %e, "paragraph failed");
                failures.push(format!("paragraph {}: {e}", p.index));
                let mut f = QAForest::empty(p.index);
                f.metadata.failure = Some(e.to_string());
                forests.push(f);
            }
        }
    }
    if failures.len() == n {
        return Err(Error::AllParagraphsFailed(failures.join("; ")));
    }
    let total: usize = forests.iter().map(|f| f.metadata.counts.relevant).sum();
    let answerable: usize = forests.iter().map(|f| f.metadata.counts.answerable).sum();
    if total > 0 {
        tracing::info!(
            unanswerable_rate = (total - answerable) as f64 / total as f64,
            "unanswerable candidates pruned"
        );
    }
    Ok(SquashRun {
        document: document.clone(),
        forests,
    })
}

/// Applies a budget to a run and renders the output document.
pub fn render(run: &SquashRun, config: &PipelineConfig, budget: &BudgetConfig) -> Result<SquashOutput> {
    let mut paragraphs = Vec::with_capacity(run.forests.len());
    for (p, f) in run.document.paragraphs.iter().zip(&run.forests) {
        paragraphs.push(paragraph_out(p, &apply_budget(f, budget)?));
    }
    Ok(SquashOutput {
        document_id: run.document.id.clone(),
        paragraphs,
        config: PipelineConfig {
            budget: *budget,
            ..config.clone()
        },
        version: VERSION.into(),
    })
}

pub fn squash(document: &Document, config: &PipelineConfig, b: Backends<'_>) -> Result<SquashOutput> {
    let r = run(document, config, b)?;
    render(&r, config, &config.budget)
}

/// Parses raw input (text or JSON) with the configured paragraph limit.
pub fn parse_document(raw: &str, config: &PipelineConfig) -> Result<Document> {
    Segmenter {
        max_paragraph_chars: config.max_paragraph_chars,
        ..Segmenter::default()
    }
    .parse(raw)
}

/// Parses and squashes `raw` with the mock backends seeded from the config.
pub fn squash_with_mocks(raw: &str, config: &PipelineConfig) -> Result<SquashOutput> {
    let document = parse_document(raw, config)?;
    let mocks = MockBackends::new(config.seed);
    squash(&document, config, mocks.backends())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::{AnswerPrediction, GeneratedQuestion, GenerationRequest};
    use crate::taxonomy::SpecificityLabel;

    const TEXT: &str =
        "In 1942, Dodds enlisted in the US army and served as an anti aircraft gunner during World War II.\n\n\
                        Weston was born in Springfield. He later moved to Chicago with his band.";

    #[test]
    fn paragraphs_in_order_with_top_level_keys() {
        let out = squash_with_mocks(TEXT, &PipelineConfig::default()).unwrap();
        assert_eq!(out.paragraphs.len(), 2);
        assert_eq!(out.paragraphs[1].index, 1);
        let v = serde_json::to_value(&out).unwrap();
        let mut keys: Vec<&String> = v.as_object().unwrap().keys().collect();
        keys.sort();
        assert_eq!(keys, ["config", "document_id", "paragraphs", "version"]);
        let p = v["paragraphs"][0].as_object().unwrap();
        let mut keys: Vec<&String> = p.keys().collect();
        keys.sort();
        assert_eq!(keys, ["index", "metadata", "orphans", "text", "trees"]);
    }

    #[test]
    fn single_sentence_document() {
        let out = squash_with_mocks("Dodds enlisted in the army in 1942.", &PipelineConfig::default()).unwrap();
        let trees = &out.paragraphs[0].trees;
        assert!(trees.len() <= 1);
        for t in trees {
            let q = crate::taxonomy::Classifier::default()
                .classify_by_rules(&t.root.question)
                .unwrap();
            assert_eq!(q.map(|m| m.label), Some(SpecificityLabel::General));
        }
    }

    #[test]
    fn worker_count_does_not_change_output() {
        let one = PipelineConfig {
            workers: 1,
            seed: 7,
            ..Default::default()
        };
        let four = PipelineConfig {
            workers: 4,
            ..one.clone()
        };
        assert_eq!(
            squash_with_mocks(TEXT, &one).unwrap().to_json(),
            squash_with_mocks(TEXT, &four).unwrap().to_json()
        );
    }

    #[test]
    fn counts_telescope() {
        let out = squash_with_mocks(TEXT, &PipelineConfig::default()).unwrap();
        for p in &out.paragraphs {
            let c = p.metadata.counts;
            assert!(c.generated >= c.deduplicated);
            assert!(c.deduplicated >= c.relevant);
            assert!(c.relevant >= c.answerable);
            assert!(c.answerable >= c.thresholded);
            assert!(c.thresholded >= c.selected);
        }
    }

    struct Failing;
    impl QuestionGenerator for Failing {
        fn generate(&self, _: &GenerationRequest) -> std::result::Result<Vec<GeneratedQuestion>, BackendError> {
            Err(BackendError::Transport {
                endpoint: "http://qg".into(),
                attempts: 3,
                retryable: true,
                message: "connection refused".into(),
            })
        }
    }

    /// Fails on the second paragraph only.
    struct FailSecond(MockGenerator);
    impl QuestionGenerator for FailSecond {
        fn generate(&self, r: &GenerationRequest) -> std::result::Result<Vec<GeneratedQuestion>, BackendError> {
            if r.paragraph.starts_with("Weston") {
                Failing.generate(r)
            } else {
                self.0.generate(r)
            }
        }
    }

    struct NeverAnswers;
    impl QuestionAnswerer for NeverAnswers {
        fn answer(&self, _: &str, _: &str) -> std::result::Result<AnswerPrediction, BackendError> {
            Ok(AnswerPrediction::unanswerable())
        }
    }

    #[test]
    fn partial_and_total_failure() {
        let config = PipelineConfig::default();
        let doc = parse_document(TEXT, &config).unwrap();
        let gen = FailSecond(MockGenerator::new(0));
        let b = Backends {
            generator: &gen,
            answerer: &MockAnswerer,
        };
        let out = squash(&doc, &config, b).unwrap();
        assert!(out.paragraphs[0].metadata.failure.is_none());
        assert!(out.paragraphs[1].metadata.failure.is_some());
        assert!(out.paragraphs[1].trees.is_empty());

        let b = Backends {
            generator: &Failing,
            answerer: &MockAnswerer,
        };
        assert!(matches!(squash(&doc, &config, b), Err(Error::AllParagraphsFailed(_))));
    }

    #[test]
    fn unanswerable_everywhere_gives_empty_forests() {
        let config = PipelineConfig::default();
        let doc = parse_document(TEXT, &config).unwrap();
        let gen = MockGenerator::new(0);
        let out = squash(
            &doc,
            &config,
            Backends {
                generator: &gen,
                answerer: &NeverAnswers,
            },
        )
        .unwrap();
        for p in &out.paragraphs {
            assert!(p.trees.is_empty() && p.orphans.is_empty());
            assert!(p.metadata.relaxation_exhausted);
        }
    }
}
