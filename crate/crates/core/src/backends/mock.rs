//! Deterministic stand-ins for the neural backends.
//!
//! [`MockGenerator`] fills fixed question templates with words taken from
//! the answer span and decodes them with the same beam / top-k / nucleus
//! shapes a real model would use, seeded per request so output never
//! depends on call order. Every template opens with a form the rule table
//! maps to the requested label.
//!
//! [`MockAnswerer`] returns the contiguous word window, inside a single
//! sentence, with the best token F1 against the question's content words.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::{
    check_request, AnswerPrediction, DecodePolicy, GeneratedQuestion, GenerationRequest, Origin, QuestionAnswerer,
    QuestionGenerator,
};
use crate::error::BackendError;
use crate::taxonomy::{question_tokens, SpecificityLabel};
use crate::text::{
    char_slice, content_tokens, word_chunks, CharSpan, MentionKind, Paragraph, RuleSplitter, SentenceSplitter,
};

type BackendResult<T> = std::result::Result<T, BackendError>;

const JUDGEMENTAL_WORDS: &[&str] = &["you", "your", "yours", "yourself", "yourselves"];

const GENERAL_TEMPLATES: &[(&str, f64)] = &[
    ("why {}?", 0.24),
    ("what happened after {}?", 0.16),
    ("what led to {}?", 0.14),
    ("how did {} happen?", 0.12),
    ("what was the reason {}?", 0.12),
    ("what happened before {}?", 0.08),
    ("what was the purpose of {}?", 0.08),
    ("what do you think about {}?", 0.06),
];

const ENTITY_TEMPLATES: &[(&str, f64)] = &[
    ("who is {}?", 0.30),
    ("who was {}?", 0.20),
    ("where is {}?", 0.15),
    ("when was {} born?", 0.10),
    ("where was {} born?", 0.10),
    ("who did {} work with?", 0.08),
    ("when did {} start?", 0.07),
];

const NUMERIC_TEMPLATES: &[(&str, f64)] = &[
    ("when was {}?", 0.30),
    ("how many {}?", 0.20),
    ("when did {} happen?", 0.15),
    ("how long was {}?", 0.10),
    ("who was there in {}?", 0.10),
];

const HEAD_TEMPLATES: &[(&str, f64)] = &[("who {}?", 0.05), ("when {}?", 0.04), ("where {}?", 0.03)];

fn fill(template: &str, words: &[String]) -> String {
    template.replacen("{}", &words.join(" "), 1)
}

/// Lowercased span words with judgemental words removed so that a filled
/// template keeps the label its opening words select.
fn phrase(text: &str) -> Vec<String> {
    let words: Vec<String> = question_tokens(text)
        .into_iter()
        .filter(|w| !JUDGEMENTAL_WORDS.contains(&w.as_str()))
        .collect();
    if words.is_empty() {
        vec!["this".to_owned()]
    } else {
        words
    }
}

/// The first `n` words, shortened to end on a content word when possible.
fn head(words: &[String], n: usize) -> &[String] {
    let mut h = &words[..n.min(words.len())];
    while h.len() > 1 && content_tokens(&h[h.len() - 1]).is_empty() {
        h = &h[..h.len() - 1];
    }
    h
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SpanRole {
    Sentence(usize),
    Entity,
    Numeric,
}

/// A weighted list of distinct questions, most probable first.
#[derive(Debug, Clone, Default)]
struct Pool {
    entries: Vec<(String, f64)>,
}

impl Pool {
    fn push(&mut self, question: String, weight: f64) {
        match self.entries.iter_mut().find(|(q, _)| *q == question) {
            Some((_, w)) => *w += weight,
            None => self.entries.push((question, weight)),
        }
    }

    fn finish(mut self) -> Vec<(String, f64)> {
        let total: f64 = self.entries.iter().map(|(_, w)| w).sum();
        for (_, w) in &mut self.entries {
            *w /= total;
        }
        self.entries
            .sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        self.entries
    }
}

fn draw<'a>(rng: &mut ChaCha8Rng, entries: &'a [(String, f64)]) -> &'a (String, f64) {
    let total: f64 = entries.iter().map(|(_, w)| w).sum();
    let mut x = rng.random::<f64>() * total;
    for e in entries {
        if x < e.1 {
            return e;
        }
        x -= e.1;
    }
    entries.last().expect("non-empty pool")
}

fn length_penalty(question: &str) -> f64 {
    0.05 * question.split_whitespace().count() as f64
}

/// Template-based question generator.
#[derive(Debug, Clone, Copy)]
pub struct MockGenerator {
    pub seed: u64,
}

impl MockGenerator {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    fn request_seed(&self, r: &GenerationRequest) -> u64 {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        h.update(r.paragraph.as_bytes());
        h.update((r.span.start as u64).to_le_bytes());
        h.update((r.span.end as u64).to_le_bytes());
        h.update(r.label.as_str().as_bytes());
        h.update([r.policy as u8]);
        h.update(r.k.to_le_bytes());
        h.update(r.p.to_bits().to_le_bytes());
        let digest = h.finalize();
        let mut bytes = [0u8; 8];
        bytes.copy_from_slice(&digest[..8]);
        u64::from_le_bytes(bytes)
    }

    fn role(paragraph: &Paragraph, span: CharSpan) -> SpanRole {
        if let Some(i) = paragraph.sentences.iter().position(|s| *s == span) {
            return SpanRole::Sentence(i);
        }
        match paragraph.mentions.iter().find(|m| m.span == span) {
            Some(m) if m.kind == MentionKind::Numeric => SpanRole::Numeric,
            Some(_) => SpanRole::Entity,
            None => {
                let text = paragraph.slice(span);
                if text.chars().any(|c| c.is_ascii_digit()) {
                    SpanRole::Numeric
                } else {
                    SpanRole::Entity
                }
            }
        }
    }

    fn pool(paragraph: &Paragraph, span: CharSpan, label: SpecificityLabel) -> Vec<(String, f64)> {
        let mut pool = Pool::default();
        let text = paragraph.slice(span);
        match (label, Self::role(paragraph, span)) {
            (_, SpanRole::Sentence(_)) if label == SpecificityLabel::General => {
                let words = phrase(text);
                for (n, factor) in [(8, 1.0), (6, 0.8), (4, 0.6)] {
                    for (t, w) in GENERAL_TEMPLATES {
                        pool.push(fill(t, head(&words, n)), w * factor);
                    }
                }
            }
            (_, SpanRole::Sentence(i)) => {
                let sentence = paragraph.sentences[i];
                for m in paragraph.mentions.iter().filter(|m| sentence.contains(&m.span)) {
                    let words = phrase(&m.text);
                    let templates = match m.kind {
                        MentionKind::Entity => &ENTITY_TEMPLATES[..3],
                        MentionKind::Numeric => &NUMERIC_TEMPLATES[..2],
                    };
                    for (t, w) in templates {
                        pool.push(fill(t, &words), w * 0.5);
                    }
                }
                let words = phrase(text);
                for n in [4, 6] {
                    for (t, w) in HEAD_TEMPLATES {
                        pool.push(fill(t, head(&words, n)), *w);
                    }
                }
            }
            (_, SpanRole::Entity) => {
                let words = phrase(text);
                for (t, w) in ENTITY_TEMPLATES {
                    pool.push(fill(t, &words), *w);
                }
            }
            (_, SpanRole::Numeric) => {
                let words = phrase(text);
                for (t, w) in NUMERIC_TEMPLATES {
                    pool.push(fill(t, &words), *w);
                }
                // "when in 1942 did dodds enlisted ...": numeric plus the words after it
                if let Some(s) = paragraph.sentences.iter().find(|s| s.contains(&span)) {
                    let after = char_slice(&paragraph.text, CharSpan::new(span.end, s.end));
                    let ctx: Vec<String> = phrase(after)
                        .into_iter()
                        .filter(|w| !content_tokens(w).is_empty())
                        .take(3)
                        .collect();
                    if !ctx.is_empty() {
                        let mut all = words.clone();
                        all.push("did".into());
                        all.extend(ctx);
                        pool.push(fill("when in {}?", &all), 0.15);
                    }
                }
            }
        }
        pool.finish()
    }
}

impl QuestionGenerator for MockGenerator {
    fn generate(&self, request: &GenerationRequest) -> BackendResult<Vec<GeneratedQuestion>> {
        check_request(request)?;
        let paragraph = Paragraph::new(0, request.paragraph.clone());
        let pool = Self::pool(&paragraph, request.span, request.label);
        let mut rng = ChaCha8Rng::seed_from_u64(self.request_seed(request));

        let sampled = |rng: &mut ChaCha8Rng, entries: &[(String, f64)], penalty: f64| {
            let (q, prob) = draw(rng, entries);
            let jitter: f64 = rng.random_range(0.0..0.5);
            GeneratedQuestion {
                question: q.clone(),
                origin: Origin::Sampled,
                score: round6(prob.ln() - length_penalty(q) - penalty - jitter),
            }
        };

        match request.policy {
            DecodePolicy::Overgenerate => {
                let mut out: Vec<GeneratedQuestion> = pool
                    .iter()
                    .cycle()
                    .take(super::BEAM_WIDTH)
                    .map(|(q, prob)| GeneratedQuestion {
                        question: q.clone(),
                        origin: Origin::Beam,
                        score: round6(prob.ln() - length_penalty(q)),
                    })
                    .collect();
                out.sort_by(|a, b| b.score.total_cmp(&a.score));
                let top_k = &pool[..(request.k as usize).min(pool.len())];
                for _ in 0..super::SAMPLED_CANDIDATES {
                    out.push(sampled(&mut rng, top_k, 1.0));
                }
                Ok(out)
            }
            DecodePolicy::Single => {
                let mut mass = 0.0;
                let mut cut = pool.len();
                for (i, (_, w)) in pool.iter().enumerate() {
                    mass += w;
                    if mass >= request.p {
                        cut = i + 1;
                        break;
                    }
                }
                Ok(vec![sampled(&mut rng, &pool[..cut], 0.0)])
            }
        }
    }
}

/// Extractive answerer scoring word windows by F1 over content words.
/// Function words inside a window are free, so answers extend across them.
#[derive(Debug, Clone, Copy, Default)]
pub struct MockAnswerer;

struct SentenceTokens {
    spans: Vec<CharSpan>,
    tokens: Vec<String>,
    content: Vec<bool>,
}

fn sentence_tokens(paragraph: &str) -> Vec<SentenceTokens> {
    RuleSplitter
        .split(paragraph)
        .into_iter()
        .map(|s| {
            let (spans, tokens): (Vec<_>, Vec<_>) = word_chunks(paragraph, s)
                .into_iter()
                .filter_map(|c| c.token.map(|t| (c.span, t)))
                .unzip();
            let content = tokens.iter().map(|t| !content_tokens(t).is_empty()).collect();
            SentenceTokens { spans, tokens, content }
        })
        .collect()
}

fn best_window(sentences: &[SentenceTokens], question: &[String]) -> AnswerPrediction {
    if question.is_empty() {
        return AnswerPrediction::unanswerable();
    }
    let mut wanted: HashMap<&str, usize> = HashMap::new();
    for t in question {
        *wanted.entry(t.as_str()).or_default() += 1;
    }
    let q_len = question.len();
    // best as (common, window_len, span); F1 = 2c / (len + q_len)
    let mut best: Option<(usize, usize, CharSpan)> = None;
    for s in sentences {
        for a in 0..s.tokens.len() {
            if !wanted.contains_key(s.tokens[a].as_str()) {
                continue;
            }
            let mut remaining = wanted.clone();
            let mut common = 0;
            let mut len = 0;
            for b in a..s.tokens.len() {
                len += usize::from(s.content[b]);
                match remaining.get_mut(s.tokens[b].as_str()) {
                    Some(c) if *c > 0 => {
                        *c -= 1;
                        common += 1;
                    }
                    _ => continue,
                }
                let better = match best {
                    None => true,
                    // strictly greater F1 only: earlier and shorter windows win ties
                    Some((bc, bl, _)) => common * (bl + q_len) > bc * (len + q_len),
                };
                if better {
                    best = Some((common, len, CharSpan::new(s.spans[a].start, s.spans[b].end)));
                }
            }
        }
    }
    match best {
        Some((common, len, span)) => {
            let f1 = 2.0 * common as f64 / (len + q_len) as f64;
            AnswerPrediction::answered(span, round6(f1))
        }
        None => AnswerPrediction::unanswerable(),
    }
}

impl QuestionAnswerer for MockAnswerer {
    fn answer(&self, paragraph: &str, question: &str) -> BackendResult<AnswerPrediction> {
        let mut out = self.answer_batch(paragraph, &[question.to_owned()])?;
        Ok(out.remove(0))
    }

    fn answer_batch(&self, paragraph: &str, questions: &[String]) -> BackendResult<Vec<AnswerPrediction>> {
        if paragraph.trim().is_empty() {
            return Err(BackendError::InvalidRequest("paragraph is empty".into()));
        }
        if questions.iter().any(|q| q.trim().is_empty()) {
            return Err(BackendError::InvalidRequest("question is empty".into()));
        }
        let sentences = sentence_tokens(paragraph);
        Ok(questions
            .iter()
            .map(|q| best_window(&sentences, &content_tokens(q)))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::{DEFAULT_TOP_K, DEFAULT_TOP_P};
    use crate::taxonomy::Classifier;

    const DODDS: &str =
        "In 1942, Dodds enlisted in the US army and served as an anti aircraft gunner during World War II.";

    fn request(text: &str, span: CharSpan, label: SpecificityLabel, policy: DecodePolicy) -> GenerationRequest {
        GenerationRequest {
            paragraph: text.into(),
            span,
            label,
            policy,
            k: DEFAULT_TOP_K,
            p: DEFAULT_TOP_P,
        }
    }

    #[test]
    fn overgenerate_shape() {
        let p = Paragraph::new(0, DODDS);
        let g = MockGenerator::new(7);
        let out = g
            .generate(&request(
                DODDS,
                p.sentences[0],
                SpecificityLabel::General,
                DecodePolicy::Overgenerate,
            ))
            .unwrap();
        assert_eq!(out.len(), 13);
        assert_eq!(out.iter().filter(|c| c.origin == Origin::Beam).count(), 3);
        assert!(out[..3].windows(2).all(|w| w[0].score >= w[1].score));
    }

    #[test]
    fn single_shape() {
        let p = Paragraph::new(0, DODDS);
        let out = MockGenerator::new(7)
            .generate(&request(
                DODDS,
                p.sentences[0],
                SpecificityLabel::Specific,
                DecodePolicy::Single,
            ))
            .unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].origin, Origin::Sampled);
    }

    #[test]
    fn entity_template_table() {
        let p = Paragraph::new(0, DODDS);
        let dodds = p.mentions.iter().find(|m| m.text == "Dodds").unwrap();
        let out = MockGenerator::new(7)
            .generate(&request(
                DODDS,
                dodds.span,
                SpecificityLabel::Specific,
                DecodePolicy::Overgenerate,
            ))
            .unwrap();
        // the most probable entity template fills the first beam
        assert_eq!(out[0].question, "who is dodds?");
        assert_eq!(out[1].question, "who was dodds?");
        assert_eq!(out[2].question, "where is dodds?");
    }

    #[test]
    fn deterministic_per_seed() {
        let p = Paragraph::new(0, DODDS);
        let r = request(
            DODDS,
            p.sentences[0],
            SpecificityLabel::Specific,
            DecodePolicy::Overgenerate,
        );
        let a = MockGenerator::new(7).generate(&r).unwrap();
        let b = MockGenerator::new(7).generate(&r).unwrap();
        let c = MockGenerator::new(8).generate(&r).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn questions_classify_to_requested_label() {
        let classifier = Classifier::default();
        let p = Paragraph::new(0, DODDS);
        let g = MockGenerator::new(3);
        let mut spans: Vec<(CharSpan, SpecificityLabel)> = vec![
            (p.sentences[0], SpecificityLabel::General),
            (p.sentences[0], SpecificityLabel::Specific),
        ];
        spans.extend(p.mentions.iter().map(|m| (m.span, SpecificityLabel::Specific)));
        for (span, label) in spans {
            for q in g
                .generate(&request(DODDS, span, label, DecodePolicy::Overgenerate))
                .unwrap()
            {
                let m = classifier.classify_by_rules(&q.question).unwrap();
                assert_eq!(m.map(|m| m.label), Some(label), "{}", q.question);
            }
        }
    }

    #[test]
    fn yesno_requests_rejected() {
        let r = request(
            DODDS,
            CharSpan::new(0, 5),
            SpecificityLabel::Yesno,
            DecodePolicy::Single,
        );
        assert!(matches!(
            MockGenerator::new(1).generate(&r),
            Err(BackendError::InvalidRequest(_))
        ));
    }

    #[test]
    fn answer_picks_best_window() {
        let text = "Weston was born in Springfield. He later moved to Chicago with his band.";
        let a = MockAnswerer.answer(text, "who moved to chicago?").unwrap();
        assert!(a.answerable);
        assert_eq!(char_slice(text, a.span.unwrap()), "Chicago");
        // "moved" is a frame verb, so only "chicago" is content: F1 = 2*1/(1+1)
        assert_eq!(a.confidence, 1.0);

        // "was born in" costs nothing: F1 = 2*2/(2+3) beats "Weston" alone at 2/4
        let a = MockAnswerer
            .answer(text, "when did weston arrive in springfield?")
            .unwrap();
        assert_eq!(char_slice(text, a.span.unwrap()), "Weston was born in Springfield");
        assert_eq!(a.confidence, 0.8);

        let text = "In 1991 the Chicago Bulls won their first title.";
        let a = MockAnswerer.answer(text, "who are the chicago bulls?").unwrap();
        assert_eq!(char_slice(text, a.span.unwrap()), "Chicago Bulls");
    }

    #[test]
    fn no_overlap_is_unanswerable() {
        let a = MockAnswerer.answer("The cat sat.", "who is gandalf?").unwrap();
        assert_eq!(a, AnswerPrediction::unanswerable());
    }

    #[test]
    fn empty_paragraph_is_an_error() {
        assert!(MockAnswerer.answer("  ", "who?").is_err());
    }
}
