//! Oracles and generators shared by the acceptance and property tests.
//! The oracles deliberately avoid the library's own helpers.

#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;

use rand::seq::IndexedRandom;
use rand::Rng;
use sha2::{Digest, Sha256};

use squash_core::backends::mock::MockAnswerer;
use squash_core::backends::{AnswerPrediction, Origin, QuestionAnswerer};
use squash_core::filtering::QAPair;
use squash_core::hierarchy::QAForest;
use squash_core::spans::{AnswerSpanCandidate, SpanKind};
use squash_core::{BackendError, CharSpan, SpecificityLabel};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

// ---- overlap ----

pub const VOCAB: &[&str] = &[
    "a", "an", "the", "war", "army", "dodds", "weston", "river", "bridge", "band", "born", "in", "of", "to", "1942",
    "three", "café", "naïve", "über", "gunner", "hawaii", "x", "it's",
];

const EDGE_PUNCT: &[&str] = &[
    "", "", "", ",", ".", "?", "!", "\"", "(", ")", ";", ":", "'", "“", "”", "—",
];

/// Tokens as the oracle sees them after normalization: articles dropped,
/// inner apostrophes removed.
pub fn oracle_normalize(tokens: &[&str]) -> Vec<String> {
    tokens
        .iter()
        .filter(|t| !matches!(**t, "a" | "an" | "the"))
        .map(|t| t.replace('\'', ""))
        .collect()
}

/// Renders lowercase tokens with random case, edge punctuation and spacing.
pub fn decorate<R: Rng>(rng: &mut R, tokens: &[&str]) -> String {
    let mut out = String::new();
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 {
            out.push_str([" ", "  ", "\t", "\n", " — "].choose(rng).unwrap());
        }
        let word = match rng.random_range(0..3) {
            0 => t.to_string(),
            1 => t.to_uppercase(),
            _ => {
                let mut c = t.chars();
                c.next()
                    .map(|f| f.to_uppercase().chain(c).collect())
                    .unwrap_or_default()
            }
        };
        out.push_str(EDGE_PUNCT.choose(rng).unwrap());
        out.push_str(&word);
        out.push_str(EDGE_PUNCT.choose(rng).unwrap());
    }
    out
}

pub fn random_tokens<R: Rng>(rng: &mut R, max: usize) -> Vec<&'static str> {
    let n = rng.random_range(0..=max);
    (0..n).map(|_| *VOCAB.choose(rng).unwrap()).collect()
}

/// Multiset intersection size by sorting and merging.
pub fn oracle_common(a: &[String], b: &[String]) -> usize {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort();
    b.sort();
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// `(shared, candidate_len, reference_len)` over normalized tokens.
pub fn oracle_overlap(candidate: &[String], reference: &[String]) -> (usize, usize, usize) {
    (oracle_common(candidate, reference), candidate.len(), reference.len())
}

/// The survival inequalities in integer arithmetic.
pub fn oracle_passes(kind: SpanKind, target: SpecificityLabel, shared: usize, clen: usize, rlen: usize) -> bool {
    let nonempty = clen > 0 && rlen > 0;
    match (target, kind) {
        (SpecificityLabel::General, SpanKind::Sentence) => nonempty && 10 * shared >= 3 * rlen,
        (SpecificityLabel::Specific, SpanKind::Entity | SpanKind::Numeric) => nonempty && 5 * shared >= 4 * rlen,
        (SpecificityLabel::Specific, SpanKind::Sentence) => nonempty && shared == clen,
        _ => true,
    }
}

// ---- QA pairs ----

pub fn pair(question: &str, label: SpecificityLabel, answer: &str, start: usize, score: f64) -> QAPair {
    let span = CharSpan::new(start, start + answer.chars().count().max(1));
    QAPair {
        question: question.into(),
        specificity: label,
        source: AnswerSpanCandidate {
            paragraph: 0,
            span,
            kind: if label == SpecificityLabel::General {
                SpanKind::Sentence
            } else {
                SpanKind::Entity
            },
            target: label,
            sentence: 0,
        },
        prediction: AnswerPrediction::answered(span, 1.0),
        answer: span,
        answer_text: answer.into(),
        score,
        origin: Origin::Beam,
    }
}

const PAIR_WORDS: &[&str] = &["alpha", "beta", "gamma", "delta", "the", "war", "river", "band"];

/// `n` pairs with unique questions, answers drawn from a small vocabulary
/// so that overlaps and ties are common.
pub fn random_pairs<R: Rng>(rng: &mut R, n: usize) -> Vec<QAPair> {
    (0..n)
        .map(|i| {
            let label = if rng.random_bool(0.4) {
                SpecificityLabel::General
            } else {
                SpecificityLabel::Specific
            };
            let words: Vec<&str> = (0..rng.random_range(1..=4))
                .map(|_| *PAIR_WORDS.choose(rng).unwrap())
                .collect();
            let start = rng.random_range(0..12) * 5;
            let score = -(rng.random_range(0..6) as f64) / 2.0;
            pair(&format!("q{i:02}"), label, &words.join(" "), start, score)
        })
        .collect()
}

fn words(text: &str) -> Vec<String> {
    text.split_whitespace()
        .filter(|w| !matches!(*w, "a" | "an" | "the"))
        .map(str::to_lowercase)
        .collect()
}

type ParentKey = (u8, i64, usize, String);

/// How good `general` is as a parent of `specific`; smaller is better.
fn parent_key(specific: &QAPair, general: &QAPair) -> ParentKey {
    let s = words(&specific.answer_text);
    let shared = oracle_common(&s, &words(&general.answer_text));
    let q = general.question.clone();
    if shared > 0 {
        (0, -(shared as i64), general.answer.start, q)
    } else if general.answer.start < specific.answer.start {
        (1, -(general.answer.start as i64), 0, q)
    } else {
        (2, general.answer.start as i64, 0, q)
    }
}

/// Parent question of every SPECIFIC question, found by scoring every
/// possible assignment of SPECIFIC pairs to GENERAL pairs. `None` when
/// there are no GENERAL pairs.
pub fn oracle_parents(pairs: &[QAPair]) -> BTreeMap<String, Option<String>> {
    let generals: Vec<&QAPair> = pairs
        .iter()
        .filter(|p| p.specificity == SpecificityLabel::General)
        .collect();
    let specifics: Vec<&QAPair> = pairs
        .iter()
        .filter(|p| p.specificity == SpecificityLabel::Specific)
        .collect();
    if generals.is_empty() {
        return specifics.iter().map(|s| (s.question.clone(), None)).collect();
    }
    let g = generals.len();
    let total = g.pow(specifics.len() as u32);
    let mut best: Option<(Vec<ParentKey>, Vec<usize>)> = None;
    let mut ties = 0;
    for code in 0..total {
        let mut c = code;
        let assignment: Vec<usize> = (0..specifics.len())
            .map(|_| {
                let a = c % g;
                c /= g;
                a
            })
            .collect();
        let cost: Vec<_> = specifics
            .iter()
            .zip(&assignment)
            .map(|(s, &a)| parent_key(s, generals[a]))
            .collect();
        match &best {
            Some((b, _)) if cost > *b => {}
            Some((b, _)) if cost == *b => ties += 1,
            _ => {
                best = Some((cost, assignment));
                ties = 0;
            }
        }
    }
    assert_eq!(ties, 0, "oracle optimum is not unique");
    let (_, assignment) = best.unwrap();
    specifics
        .iter()
        .zip(assignment)
        .map(|(s, a)| (s.question.clone(), Some(generals[a].question.clone())))
        .collect()
}

/// The forest's parent map in the oracle's shape.
pub fn forest_parents(forest: &QAForest) -> BTreeMap<String, Option<String>> {
    let mut out = BTreeMap::new();
    for t in &forest.trees {
        for c in &t.children {
            out.insert(c.question.clone(), Some(t.root.question.clone()));
        }
    }
    for o in &forest.orphans {
        out.insert(o.question.clone(), None);
    }
    out
}

pub fn questions(forest: &QAForest) -> Vec<String> {
    let mut q: Vec<String> = forest.pairs().map(|p| p.question.clone()).collect();
    q.sort();
    q
}

// ---- documents and answerers ----

const NAMES: &[&str] = &["Dodds", "Weston", "Anna Keller", "Luke", "Marta Silva", "Yoda"];
const PLACES: &[&str] = &["Springfield", "Chicago", "Hawaii", "Dagobah", "Lisbon", "Baltimore"];
const YEARS: &[&str] = &["1931", "1942", "1990", "2004"];
const COUNTS: &[&str] = &["three", "twelve", "540", "two"];
const NOUNS: &[&str] = &["bridge", "army", "band", "river", "store", "album"];
const ADJS: &[&str] = &["famous", "closed", "flooded", "expensive", "popular"];

pub fn random_sentence<R: Rng>(rng: &mut R) -> String {
    let name = NAMES.choose(rng).unwrap();
    let place = PLACES.choose(rng).unwrap();
    let year = YEARS.choose(rng).unwrap();
    let count = COUNTS.choose(rng).unwrap();
    let noun = NOUNS.choose(rng).unwrap();
    let adj = ADJS.choose(rng).unwrap();
    match rng.random_range(0..6) {
        0 => format!("{name} was born in {place} in {year}."),
        1 => format!("In {year}, {name} moved to {place} with the {noun}."),
        2 => format!("{name} stayed in {place} for {count} years because the {noun} was {adj}."),
        3 => format!("The {noun} was {adj} after the war."),
        4 => format!("{name} opened a {noun} in {place} and it became {adj}."),
        _ => format!("After {year} the {noun} in {place} was {adj}."),
    }
}

pub fn random_document<R: Rng>(rng: &mut R, paragraphs: usize, sentences: usize) -> String {
    (0..paragraphs)
        .map(|_| {
            (0..rng.random_range(1..=sentences))
                .map(|_| random_sentence(rng))
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect::<Vec<_>>()
        .join("\n\n")
}

/// The mock answerer with a deterministic, seed-dependent share of its
/// answers withheld.
pub struct FlakyAnswerer {
    pub seed: u64,
    pub withhold: f64,
}

impl FlakyAnswerer {
    fn withheld(&self, paragraph: &str, question: &str) -> bool {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        h.update(paragraph.as_bytes());
        h.update([0]);
        h.update(question.as_bytes());
        let d = h.finalize();
        let x = u64::from_le_bytes(d[..8].try_into().unwrap());
        (x as f64 / u64::MAX as f64) < self.withhold
    }
}

impl QuestionAnswerer for FlakyAnswerer {
    fn answer(&self, paragraph: &str, question: &str) -> Result<AnswerPrediction, BackendError> {
        if self.withheld(paragraph, question) {
            Ok(AnswerPrediction::unanswerable())
        } else {
            MockAnswerer.answer(paragraph, question)
        }
    }
}

pub fn count_by_label(pairs: &[QAPair]) -> HashMap<SpecificityLabel, usize> {
    let mut out = HashMap::new();
    for p in pairs {
        *out.entry(p.specificity).or_default() += 1;
    }
    out
}
