//! Multi-stage question filter.
//!
//! Stages, in order: [`dedup`] (normalized duplicates and the generic
//! blacklist), [`filter_irrelevant`] (unknown or repeated content words),
//! unanswerable removal and overlap thresholds ([`filter_by_answers`]), and
//! [`select_per_span`]. [`filter_with_fallback`] runs the whole stack and
//! relaxes it when a paragraph ends up without any GENERAL question.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::backends::{AnswerPrediction, Origin, QuestionCandidate};
use crate::error::{Error, Result};
use crate::lexicon;
use crate::overlap::{overlap, OverlapScore};
use crate::spans::{AnswerSpanCandidate, SpanKind};
use crate::taxonomy::SpecificityLabel;
use crate::text::{content_tokens, normalize_tokens, word_chunks, CharSpan, Paragraph};

/// A question that survived filtering together with its answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QAPair {
    pub question: String,
    pub specificity: SpecificityLabel,
    pub source: AnswerSpanCandidate,
    pub prediction: AnswerPrediction,
    /// Display range: always the predicted span.
    pub answer: CharSpan,
    pub answer_text: String,
    pub score: f64,
    pub origin: Origin,
}

/// How generation scores are compared when picking per-span survivors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreNormalization {
    #[default]
    Raw,
    /// Score divided by the question's token count.
    PerToken,
}

pub const DEFAULT_BLACKLIST: &[&str] = &[
    "what happened in this article",
    "what happened in this *",
    "what is this article about",
    "what is this * about",
    "where was he born",
    "where was she born",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    pub general_sentence_min_recall: f64,
    pub specific_entity_min_recall: f64,
    pub specific_sentence_min_precision: f64,
    pub specific_sentence_top_n: usize,
    /// Normalized token patterns. `*` matches any one token, `<number>` any
    /// digit or number-word token.
    pub blacklist: Vec<String>,
    pub fallback: bool,
    pub score_normalization: ScoreNormalization,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            general_sentence_min_recall: 0.3,
            specific_entity_min_recall: 0.8,
            specific_sentence_min_precision: 1.0,
            specific_sentence_top_n: 10,
            blacklist: DEFAULT_BLACKLIST.iter().map(|s| s.to_string()).collect(),
            fallback: true,
            score_normalization: ScoreNormalization::Raw,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("general_sentence_min_recall", self.general_sentence_min_recall),
            ("specific_entity_min_recall", self.specific_entity_min_recall),
            ("specific_sentence_min_precision", self.specific_sentence_min_precision),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidConfig(format!("{name} = {v} is outside [0, 1]")));
            }
        }
        if self.specific_sentence_top_n == 0 {
            return Err(Error::InvalidConfig(
                "specific_sentence_top_n must be at least 1".into(),
            ));
        }
        if let Some(p) = self.blacklist.iter().find(|p| normalize_tokens(p).is_empty()) {
            return Err(Error::InvalidConfig(format!("blacklist pattern {p:?} is empty")));
        }
        Ok(())
    }

    pub fn is_blacklisted(&self, question: &str) -> bool {
        let tokens = normalize_tokens(question);
        self.blacklist
            .iter()
            .any(|p| pattern_matches(&normalize_pattern(p), &tokens))
    }

    fn rank_score(&self, pair: &QAPair) -> f64 {
        match self.score_normalization {
            ScoreNormalization::Raw => pair.score,
            ScoreNormalization::PerToken => pair.score / normalize_tokens(&pair.question).len().max(1) as f64,
        }
    }
}

// Wildcards would lose their brackets in normalize_tokens.
fn normalize_pattern(pattern: &str) -> Vec<String> {
    pattern
        .split_whitespace()
        .flat_map(|w| match w {
            "*" | "<number>" => vec![w.to_owned()],
            _ => normalize_tokens(w),
        })
        .collect()
}

fn pattern_matches(pattern: &[String], tokens: &[String]) -> bool {
    pattern.len() == tokens.len()
        && pattern.iter().zip(tokens).all(|(p, t)| match p.as_str() {
            "*" => true,
            "<number>" => t.chars().all(|c| c.is_ascii_digit()) || lexicon::is_number_word(t),
            _ => p == t,
        })
}

/// Candidate order used for every tie: higher score, BEAM first, question text.
fn better(a_score: f64, a_origin: Origin, a_q: &str, b_score: f64, b_origin: Origin, b_q: &str) -> bool {
    a_score
        .total_cmp(&b_score)
        .reverse()
        .then(a_origin.cmp(&b_origin))
        .then(a_q.cmp(b_q))
        .is_lt()
}

/// Removes blacklisted questions and normalized duplicates, keeping the
/// best-scoring instance of each. Survivors stay in input order.
pub fn dedup(candidates: &[QuestionCandidate], config: &FilterConfig) -> Vec<QuestionCandidate> {
    let mut best: HashMap<Vec<String>, usize> = HashMap::new();
    for (i, c) in candidates.iter().enumerate() {
        let key = normalize_tokens(&c.question);
        if key.is_empty() || config.is_blacklisted(&c.question) {
            continue;
        }
        best.entry(key)
            .and_modify(|j| {
                let o = &candidates[*j];
                if better(c.score, c.origin, &c.question, o.score, o.origin, &o.question) {
                    *j = i;
                }
            })
            .or_insert(i);
    }
    let mut keep: Vec<usize> = best.into_values().collect();
    keep.sort_unstable();
    keep.into_iter().map(|i| candidates[i].clone()).collect()
}

/// Normalized tokens of capitalized words past the first one: names the
/// question refers to even when they collide with function vocabulary.
fn entity_like_tokens(question: &str) -> Vec<String> {
    let whole = CharSpan::new(0, question.chars().count());
    word_chunks(question, whole)
        .into_iter()
        .enumerate()
        .skip(1)
        .filter_map(|(_, c)| {
            let first = question.chars().nth(c.span.start)?;
            if first.is_uppercase() && c.token.as_deref() != Some("i") {
                c.token
            } else {
                None
            }
        })
        .collect()
}

/// Content words the relevance filter checks, entity-like words included.
pub fn checked_tokens(question: &str) -> Vec<String> {
    let mut tokens = content_tokens(question);
    let entities = entity_like_tokens(question);
    let mut seen: HashMap<&str, usize> = HashMap::new();
    for t in &tokens {
        *seen.entry(t.as_str()).or_default() += 1;
    }
    let mut extra = Vec::new();
    let mut used: HashMap<&str, usize> = HashMap::new();
    for e in &entities {
        let u = used.entry(e.as_str()).or_default();
        *u += 1;
        if *u > seen.get(e.as_str()).copied().unwrap_or(0) {
            extra.push(e.clone());
        }
    }
    tokens.extend(extra);
    tokens
}

/// True when the question names something absent from the paragraph or
/// repeats a content word.
pub fn is_irrelevant(question: &str, paragraph_tokens: &HashSet<String>) -> bool {
    let tokens = checked_tokens(question);
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for t in &tokens {
        if !paragraph_tokens.contains(t) {
            return true;
        }
        let n = counts.entry(t.as_str()).or_default();
        *n += 1;
        if *n >= 2 {
            return true;
        }
    }
    false
}

pub fn filter_irrelevant(candidates: &[QuestionCandidate], paragraph: &Paragraph) -> Vec<QuestionCandidate> {
    let vocab: HashSet<String> = normalize_tokens(&paragraph.text).into_iter().collect();
    candidates
        .iter()
        .filter(|c| !is_irrelevant(&c.question, &vocab))
        .cloned()
        .collect()
}

/// The overlap inequality a candidate must meet, by span kind and target.
pub fn passes_threshold(kind: SpanKind, target: SpecificityLabel, score: OverlapScore, config: &FilterConfig) -> bool {
    match (target, kind) {
        (SpecificityLabel::General, SpanKind::Sentence) => score.recall >= config.general_sentence_min_recall,
        (SpecificityLabel::Specific, SpanKind::Entity | SpanKind::Numeric) => {
            score.recall >= config.specific_entity_min_recall
        }
        (SpecificityLabel::Specific, SpanKind::Sentence) => score.precision >= config.specific_sentence_min_precision,
        _ => true,
    }
}

fn to_pairs(
    paragraph: &Paragraph,
    candidates: &[QuestionCandidate],
    answers: &[AnswerPrediction],
    config: Option<&FilterConfig>,
) -> Result<Vec<QAPair>> {
    if candidates.len() != answers.len() {
        return Err(Error::InvalidInput(format!(
            "{} candidates but {} answers",
            candidates.len(),
            answers.len()
        )));
    }
    let mut out = Vec::new();
    for (c, a) in candidates.iter().zip(answers) {
        let Some(span) = a.span.filter(|_| a.answerable) else {
            continue;
        };
        let answer_text = paragraph.slice(span).to_owned();
        if let Some(config) = config {
            let score = overlap(&answer_text, paragraph.slice(c.source.span));
            if !passes_threshold(c.source.kind, c.target(), score, config) {
                continue;
            }
        }
        out.push(QAPair {
            question: c.question.clone(),
            specificity: c.target(),
            source: c.source,
            prediction: a.clone(),
            answer: span,
            answer_text,
            score: c.score,
            origin: c.origin,
        });
    }
    Ok(out)
}

/// Drops unanswerable candidates and those failing the overlap thresholds.
pub fn filter_by_answers(
    paragraph: &Paragraph,
    candidates: &[QuestionCandidate],
    answers: &[AnswerPrediction],
    config: &FilterConfig,
) -> Result<Vec<QAPair>> {
    to_pairs(paragraph, candidates, answers, Some(config))
}

/// Keeps the best pair per source span, or the best `top_n` for SPECIFIC
/// sentence spans. Output is ordered by span, then rank.
pub fn select_per_span(pairs: &[QAPair], config: &FilterConfig) -> Vec<QAPair> {
    let mut groups: BTreeMap<AnswerSpanCandidate, Vec<&QAPair>> = BTreeMap::new();
    for p in pairs {
        groups.entry(p.source).or_default().push(p);
    }
    let mut out = Vec::new();
    for (source, mut group) in groups {
        group.sort_by(|a, b| {
            config
                .rank_score(b)
                .total_cmp(&config.rank_score(a))
                .then(a.origin.cmp(&b.origin))
                .then(a.question.cmp(&b.question))
        });
        let keep = match (source.target, source.kind) {
            (SpecificityLabel::Specific, SpanKind::Sentence) => config.specific_sentence_top_n,
            _ => 1,
        };
        out.extend(group.into_iter().take(keep).cloned());
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelaxedStage {
    Thresholds,
    Irrelevant,
}

/// Survivor counts after each stage. Each count is the next stage's input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StageCounts {
    pub generated: usize,
    pub deduplicated: usize,
    pub relevant: usize,
    pub answerable: usize,
    pub thresholded: usize,
    pub selected: usize,
    /// GENERAL pairs brought back by relaxation.
    pub readmitted: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterOutcome {
    pub pairs: Vec<QAPair>,
    pub counts: StageCounts,
    pub relaxed: Vec<RelaxedStage>,
    /// Every relaxation stage ran and no GENERAL pair exists.
    pub exhausted: bool,
}

impl FilterOutcome {
    /// Share of non-duplicate, relevant candidates the answerer rejected.
    pub fn unanswerable_rate(&self) -> f64 {
        if self.counts.relevant == 0 {
            0.0
        } else {
            (self.counts.relevant - self.counts.answerable) as f64 / self.counts.relevant as f64
        }
    }
}

fn generals(pairs: Vec<QAPair>) -> Vec<QAPair> {
    pairs
        .into_iter()
        .filter(|p| p.specificity == SpecificityLabel::General)
        .collect()
}

/// Runs the full stack. `answer` is called with question lists to answer;
/// candidates removed by the relevance filter are only answered if the
/// second relaxation stage runs.
pub fn filter_with_fallback<F>(
    paragraph: &Paragraph,
    candidates: &[QuestionCandidate],
    config: &FilterConfig,
    mut answer: F,
) -> Result<FilterOutcome>
where
    F: FnMut(&[String]) -> Result<Vec<AnswerPrediction>>,
{
    let mut counts = StageCounts {
        generated: candidates.len(),
        ..Default::default()
    };
    let deduped = dedup(candidates, config);
    counts.deduplicated = deduped.len();

    let vocab: HashSet<String> = normalize_tokens(&paragraph.text).into_iter().collect();
    let (relevant, irrelevant): (Vec<_>, Vec<_>) =
        deduped.into_iter().partition(|c| !is_irrelevant(&c.question, &vocab));
    counts.relevant = relevant.len();

    let questions: Vec<String> = relevant.iter().map(|c| c.question.clone()).collect();
    let answers = if questions.is_empty() {
        Vec::new()
    } else {
        answer(&questions)?
    };
    counts.answerable = to_pairs(paragraph, &relevant, &answers, None)?.len();
    let thresholded = to_pairs(paragraph, &relevant, &answers, Some(config))?;
    counts.thresholded = thresholded.len();
    let mut pairs = select_per_span(&thresholded, config);
    counts.selected = pairs.len();

    let mut relaxed = Vec::new();
    let mut exhausted = false;
    let has_general = |ps: &[QAPair]| ps.iter().any(|p| p.specificity == SpecificityLabel::General);
    if config.fallback && !has_general(&pairs) {
        relaxed.push(RelaxedStage::Thresholds);
        let mut back = generals(select_per_span(
            &to_pairs(paragraph, &relevant, &answers, None)?,
            config,
        ));
        if back.is_empty() {
            relaxed.push(RelaxedStage::Irrelevant);
            let questions: Vec<String> = irrelevant.iter().map(|c| c.question.clone()).collect();
            let extra = if questions.is_empty() {
                Vec::new()
            } else {
                answer(&questions)?
            };
            let mut all = relevant.clone();
            all.extend(irrelevant.iter().cloned());
            let mut all_answers = answers.clone();
            all_answers.extend(extra);
            back = generals(select_per_span(&to_pairs(paragraph, &all, &all_answers, None)?, config));
        }
        exhausted = back.is_empty();
        counts.readmitted = back.len();
        pairs.extend(back);
        pairs.sort_by_key(|p| p.source);
    }

    let outcome = FilterOutcome {
        pairs,
        counts,
        relaxed,
        exhausted,
    };
    tracing::debug!(
        paragraph = paragraph.index,
        unanswerable_rate = outcome.unanswerable_rate(),
        relaxed = ?outcome.relaxed,
        "filtered candidates"
    );
    Ok(outcome)
}
