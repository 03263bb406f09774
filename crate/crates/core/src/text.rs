//! Document structure: paragraphs, sentences, entity and numeric mentions,
//! and the token normalization every overlap computation relies on.
//!
//! All offsets are Unicode scalar positions into the paragraph text, never
//! byte offsets.

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::lexicon;

/// Half-open character range `[start, end)` into a paragraph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CharSpan {
    pub start: usize,
    pub end: usize,
}

impl CharSpan {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end, "inverted span {start}..{end}");
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start >= self.end
    }

    /// True when `other` lies entirely inside `self`.
    pub fn contains(&self, other: &CharSpan) -> bool {
        self.start <= other.start && other.end <= self.end
    }
}

/// Byte offset of every char boundary in a string, for O(1) char slicing.
#[derive(Debug, Clone)]
pub struct CharIndex {
    bytes: Vec<usize>,
}

impl CharIndex {
    pub fn new(text: &str) -> Self {
        let mut bytes: Vec<usize> = text.char_indices().map(|(b, _)| b).collect();
        bytes.push(text.len());
        Self { bytes }
    }

    /// Number of chars in the indexed text.
    pub fn char_len(&self) -> usize {
        self.bytes.len() - 1
    }

    pub fn byte_of(&self, char_pos: usize) -> usize {
        self.bytes[char_pos]
    }

    /// Char position of a byte offset that falls on a char boundary.
    pub fn char_of(&self, byte: usize) -> usize {
        self.bytes
            .binary_search(&byte)
            .expect("byte offset is not on a char boundary")
    }

    pub fn slice<'a>(&self, text: &'a str, span: CharSpan) -> &'a str {
        &text[self.byte_of(span.start)..self.byte_of(span.end)]
    }
}

/// Slice `text` by char positions. Panics if the span is out of range.
pub fn char_slice(text: &str, span: CharSpan) -> &str {
    let mut iter = text.char_indices().map(|(b, _)| b).chain(std::iter::once(text.len()));
    let start = iter.nth(span.start).expect("span start out of range");
    let end = if span.end == span.start {
        start
    } else {
        iter.nth(span.end - span.start - 1).expect("span end out of range")
    };
    &text[start..end]
}

fn is_punct(c: char) -> bool {
    c.is_ascii_punctuation() || matches!(c, '‘' | '’' | '“' | '”' | '–' | '—' | '…' | '«' | '»' | '¿' | '¡' | '·')
}

/// SQuAD-style normalization: lowercase, strip punctuation, drop the
/// articles `a`, `an`, `the`, split on whitespace.
pub fn normalize_tokens(text: &str) -> Vec<String> {
    let stripped: String = text.to_lowercase().chars().filter(|c| !is_punct(*c)).collect();
    stripped
        .split_whitespace()
        .filter(|t| !matches!(*t, "a" | "an" | "the"))
        .map(str::to_owned)
        .collect()
}

/// Normalized tokens that carry content: everything except function words,
/// wh-words, pronouns, common verbs and question-frame vocabulary.
pub fn content_tokens(text: &str) -> Vec<String> {
    normalize_tokens(text)
        .into_iter()
        .filter(|t| !lexicon::is_frame_token(t))
        .collect()
}

/// A whitespace-delimited chunk of text and the normalized token it carries,
/// if any. Punctuation removal never splits a chunk, so a chunk holds at
/// most one token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordChunk {
    pub span: CharSpan,
    pub token: Option<String>,
}

/// Whitespace chunks of `text` inside `within`, with leading and trailing
/// punctuation trimmed from each chunk's span.
pub fn word_chunks(text: &str, within: CharSpan) -> Vec<WordChunk> {
    let chars: Vec<char> = text.chars().skip(within.start).take(within.len()).collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if chars[i].is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        while i < chars.len() && !chars[i].is_whitespace() {
            i += 1;
        }
        let raw: String = chars[start..i].iter().collect();
        let mut tokens = normalize_tokens(&raw);
        let token = if tokens.len() == 1 { tokens.pop() } else { None };
        let mut s = start;
        let mut e = i;
        while s < e && is_punct(chars[s]) {
            s += 1;
        }
        while e > s && is_punct(chars[e - 1]) {
            e -= 1;
        }
        if s == e {
            s = start;
            e = i;
        }
        out.push(WordChunk {
            span: CharSpan::new(within.start + s, within.start + e),
            token,
        });
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum MentionKind {
    Entity,
    Numeric,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mention {
    pub span: CharSpan,
    pub kind: MentionKind,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Paragraph {
    pub index: usize,
    pub text: String,
    pub sentences: Vec<CharSpan>,
    pub mentions: Vec<Mention>,
}

impl Paragraph {
    /// Segments `text` into sentences and detects mentions with the
    /// default rule-based components.
    pub fn new(index: usize, text: impl Into<String>) -> Self {
        Self::with(index, text.into(), &RuleSplitter, &HeuristicMentions)
    }

    pub fn with(index: usize, text: String, splitter: &dyn SentenceSplitter, detector: &dyn MentionDetector) -> Self {
        let sentences = splitter.split(&text);
        let mut paragraph = Self {
            index,
            text,
            sentences,
            mentions: Vec::new(),
        };
        paragraph.mentions = detector.detect(&paragraph);
        paragraph
    }

    pub fn slice(&self, span: CharSpan) -> &str {
        char_slice(&self.text, span)
    }

    pub fn char_len(&self) -> usize {
        self.text.chars().count()
    }

    /// Index of the sentence containing `span`, if any.
    pub fn sentence_of(&self, span: CharSpan) -> Option<usize> {
        self.sentences.iter().position(|s| s.contains(&span))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub title: Option<String>,
    pub paragraphs: Vec<Paragraph>,
}

/// JSON input form: `{"title": ..., "paragraphs": ["...", ...]}`.
#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct DocumentInput {
    #[serde(default)]
    pub id: Option<String>,
    #[serde(default)]
    pub title: Option<String>,
    pub paragraphs: Vec<String>,
}

pub trait SentenceSplitter: Send + Sync {
    fn split(&self, text: &str) -> Vec<CharSpan>;
}

pub trait MentionDetector: Send + Sync {
    fn detect(&self, paragraph: &Paragraph) -> Vec<Mention>;
}

pub const DEFAULT_MAX_PARAGRAPH_CHARS: usize = 2000;

/// Splits raw input into a [`Document`].
pub struct Segmenter<'a> {
    pub splitter: &'a dyn SentenceSplitter,
    pub detector: &'a dyn MentionDetector,
    /// Paragraphs longer than this are cut on sentence boundaries.
    pub max_paragraph_chars: usize,
}

impl Default for Segmenter<'_> {
    fn default() -> Self {
        Self {
            splitter: &RuleSplitter,
            detector: &HeuristicMentions,
            max_paragraph_chars: DEFAULT_MAX_PARAGRAPH_CHARS,
        }
    }
}

impl Segmenter<'_> {
    /// Plain text input: paragraphs are separated by blank lines.
    pub fn segment(&self, raw: &str) -> Result<Document> {
        if raw.trim().is_empty() {
            return Err(Error::InvalidInput("document is empty".into()));
        }
        let mut blocks: Vec<String> = Vec::new();
        let mut current: Vec<&str> = Vec::new();
        for line in raw.lines() {
            if line.trim().is_empty() {
                if !current.is_empty() {
                    blocks.push(current.join("\n"));
                    current.clear();
                }
            } else {
                current.push(line);
            }
        }
        if !current.is_empty() {
            blocks.push(current.join("\n"));
        }
        self.build(document_id(raw), None, blocks)
    }

    pub fn from_input(&self, input: DocumentInput) -> Result<Document> {
        let blocks: Vec<String> = input.paragraphs.into_iter().filter(|p| !p.trim().is_empty()).collect();
        if blocks.is_empty() {
            return Err(Error::InvalidInput("document has no non-empty paragraphs".into()));
        }
        let id = match input.id {
            Some(id) => id,
            None => document_id(&blocks.join("\n\n")),
        };
        self.build(id, input.title, blocks)
    }

    /// Accepts either the JSON input form or blank-line separated text.
    pub fn parse(&self, raw: &str) -> Result<Document> {
        let trimmed = raw.trim_start();
        if trimmed.starts_with('{') {
            let input: DocumentInput = serde_json::from_str(trimmed).map_err(|e| Error::Parse {
                location: format!("line {} column {}", e.line(), e.column()),
                message: e.to_string(),
            })?;
            self.from_input(input)
        } else {
            self.segment(raw)
        }
    }

    fn build(&self, id: String, title: Option<String>, blocks: Vec<String>) -> Result<Document> {
        let mut paragraphs = Vec::new();
        for block in blocks {
            for piece in self.split_long(block) {
                let index = paragraphs.len();
                paragraphs.push(Paragraph::with(index, piece, self.splitter, self.detector));
            }
        }
        Ok(Document { id, title, paragraphs })
    }

    fn split_long(&self, block: String) -> Vec<String> {
        let index = CharIndex::new(&block);
        if index.char_len() <= self.max_paragraph_chars {
            return vec![block];
        }
        let sentences = self.splitter.split(&block);
        let mut pieces = Vec::new();
        let mut group: Option<CharSpan> = None;
        for s in sentences {
            group = match group {
                Some(g) if s.end - g.start <= self.max_paragraph_chars => Some(CharSpan::new(g.start, s.end)),
                Some(g) => {
                    pieces.push(index.slice(&block, g).to_owned());
                    Some(s)
                }
                None => Some(s),
            };
        }
        if let Some(g) = group {
            pieces.push(index.slice(&block, g).to_owned());
        }
        pieces
    }
}

/// Segments blank-line separated text with the default components.
pub fn segment(raw: &str) -> Result<Document> {
    Segmenter::default().segment(raw)
}

fn document_id(raw: &str) -> String {
    let digest = Sha256::digest(raw.as_bytes());
    let hex: String = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();
    format!("doc-{hex}")
}

/// Sentence splitter on `.`, `!` and `?` followed by whitespace and a
/// capital letter, with an abbreviation exception list.
#[derive(Debug, Clone, Copy, Default)]
pub struct RuleSplitter;

const CLOSERS: &[char] = &['"', '\'', ')', ']', '”', '’', '»'];
const OPENERS: &[char] = &['"', '\'', '(', '[', '“', '‘', '«'];

impl RuleSplitter {
    fn is_abbreviation(chars: &[char], dot: usize) -> bool {
        let mut start = dot;
        while start > 0 && !chars[start - 1].is_whitespace() {
            start -= 1;
        }
        let word: String = chars[start..dot]
            .iter()
            .collect::<String>()
            .trim_start_matches(OPENERS)
            .to_string();
        if word.is_empty() {
            return false;
        }
        let letters: Vec<char> = word.chars().collect();
        // single initial such as "B."
        if letters.len() == 1 && letters[0].is_alphabetic() && letters[0].is_uppercase() {
            return true;
        }
        let lower = word.to_lowercase();
        if lexicon::contains(lexicon::ABBREVIATIONS, &lower) {
            return true;
        }
        // dotted acronyms such as "U.S" or "e.g"
        lower.contains('.')
            && lower
                .split('.')
                .all(|part| (1..=2).contains(&part.chars().count()) && part.chars().all(char::is_alphabetic))
    }
}

impl SentenceSplitter for RuleSplitter {
    fn split(&self, text: &str) -> Vec<CharSpan> {
        let chars: Vec<char> = text.chars().collect();
        let n = chars.len();
        let mut spans = Vec::new();
        let mut start = match chars.iter().position(|c| !c.is_whitespace()) {
            Some(s) => s,
            None => return spans,
        };
        let mut i = start;
        while i < n {
            let c = chars[i];
            if !matches!(c, '.' | '!' | '?') {
                i += 1;
                continue;
            }
            let mut j = i + 1;
            while j < n && (matches!(chars[j], '.' | '!' | '?') || CLOSERS.contains(&chars[j])) {
                j += 1;
            }
            if j >= n || !chars[j].is_whitespace() {
                i = j.max(i + 1);
                continue;
            }
            let mut k = j;
            while k < n && chars[k].is_whitespace() {
                k += 1;
            }
            if k >= n {
                break;
            }
            let mut first = k;
            while first < n && OPENERS.contains(&chars[first]) {
                first += 1;
            }
            let capital = first < n && chars[first].is_uppercase();
            if !capital || (c == '.' && j == i + 1 && Self::is_abbreviation(&chars, i)) {
                i = k;
                continue;
            }
            spans.push(CharSpan::new(start, j));
            start = k;
            i = k;
        }
        let mut end = n;
        while end > start && chars[end - 1].is_whitespace() {
            end -= 1;
        }
        if end > start {
            spans.push(CharSpan::new(start, end));
        }
        spans
    }
}

static WORD: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"[\p{L}\p{N}]+(?:['’.,\-/:][\p{L}\p{N}]+)*%?").expect("valid word regex"));

#[derive(Debug, Clone)]
struct WordToken {
    span: CharSpan,
    text: String,
    sentence: usize,
    sentence_initial: bool,
}

impl WordToken {
    fn has_digit(&self) -> bool {
        self.text.chars().any(|c| c.is_ascii_digit())
    }

    fn is_capitalized(&self) -> bool {
        self.text.chars().next().is_some_and(char::is_uppercase)
    }

    fn is_year(&self) -> bool {
        self.text.len() == 4 && self.text.chars().all(|c| c.is_ascii_digit())
    }

    fn is_day(&self) -> bool {
        self.text.len() <= 2
            && self.text.chars().all(|c| c.is_ascii_digit())
            && self.text.parse::<u32>().is_ok_and(|d| (1..=31).contains(&d))
    }
}

/// Entity and numeric detection by orthographic rules.
///
/// Numerics are digit tokens, spelled-out number words and dates built
/// from month names. Entities are maximal runs of capitalized tokens; a
/// sentence-initial word only counts when it also appears capitalized
/// somewhere it is not sentence-initial.
#[derive(Debug, Clone, Copy, Default)]
pub struct HeuristicMentions;

impl HeuristicMentions {
    fn tokens(paragraph: &Paragraph) -> Vec<WordToken> {
        let index = CharIndex::new(&paragraph.text);
        let mut out: Vec<WordToken> = Vec::new();
        let mut last_sentence = None;
        for m in WORD.find_iter(&paragraph.text) {
            let span = CharSpan::new(index.char_of(m.start()), index.char_of(m.end()));
            let Some(sentence) = paragraph.sentence_of(span) else {
                continue;
            };
            let sentence_initial = last_sentence != Some(sentence);
            last_sentence = Some(sentence);
            out.push(WordToken {
                span,
                text: m.as_str().to_owned(),
                sentence,
                sentence_initial,
            });
        }
        out
    }

    fn gap<'a>(paragraph: &'a Paragraph, index: &CharIndex, a: &WordToken, b: &WordToken) -> &'a str {
        index.slice(&paragraph.text, CharSpan::new(a.span.end, b.span.start))
    }

    fn numeric_groups(paragraph: &Paragraph, tokens: &[WordToken]) -> Vec<(usize, usize)> {
        let index = CharIndex::new(&paragraph.text);
        let ws = |a: &WordToken, b: &WordToken| {
            a.sentence == b.sentence && {
                let g = Self::gap(paragraph, &index, a, b);
                !g.is_empty() && g.chars().all(char::is_whitespace)
            }
        };
        let comma_ws = |a: &WordToken, b: &WordToken| {
            a.sentence == b.sentence && {
                let g = Self::gap(paragraph, &index, a, b);
                let g = g.strip_prefix(',').unwrap_or(g);
                !g.is_empty() && g.chars().all(char::is_whitespace)
            }
        };
        let mut groups = Vec::new();
        let mut i = 0;
        while i < tokens.len() {
            let t = &tokens[i];
            let next = tokens.get(i + 1);
            let after = tokens.get(i + 2);
            // Month Day[, Year] or Month Year
            if lexicon::is_month(&t.text) && t.is_capitalized() {
                if let Some(n) = next.filter(|n| (n.is_day() || n.is_year()) && ws(t, n)) {
                    let end = match after {
                        Some(y) if n.is_day() && y.is_year() && comma_ws(n, y) => i + 2,
                        _ => i + 1,
                    };
                    groups.push((i, end));
                    i = end + 1;
                    continue;
                }
            }
            // Day Month [Year]
            if t.is_day() {
                if let Some(m) = next.filter(|m| lexicon::is_month(&m.text) && m.is_capitalized() && ws(t, m)) {
                    let end = match after {
                        Some(y) if y.is_year() && ws(m, y) => i + 2,
                        _ => i + 1,
                    };
                    groups.push((i, end));
                    i = end + 1;
                    continue;
                }
            }
            if t.has_digit() {
                groups.push((i, i));
                i += 1;
                continue;
            }
            if lexicon::is_number_word(&t.text) {
                let mut end = i;
                while end + 1 < tokens.len()
                    && lexicon::is_number_word(&tokens[end + 1].text)
                    && ws(&tokens[end], &tokens[end + 1])
                {
                    end += 1;
                }
                groups.push((i, end));
                i = end + 1;
                continue;
            }
            i += 1;
        }
        groups
    }
}

impl MentionDetector for HeuristicMentions {
    fn detect(&self, paragraph: &Paragraph) -> Vec<Mention> {
        let tokens = Self::tokens(paragraph);
        let index = CharIndex::new(&paragraph.text);
        let mut mentions = Vec::new();
        let mut numeric = vec![false; tokens.len()];
        for (a, b) in Self::numeric_groups(paragraph, &tokens) {
            numeric[a..=b].iter_mut().for_each(|x| *x = true);
            let span = CharSpan::new(tokens[a].span.start, tokens[b].span.end);
            mentions.push(Mention {
                span,
                kind: MentionKind::Numeric,
                text: index.slice(&paragraph.text, span).to_owned(),
            });
        }

        let eligible = |i: usize| {
            let t = &tokens[i];
            !numeric[i] && t.is_capitalized() && t.text != "I"
        };
        let capitalized_elsewhere = |word: &str| {
            tokens
                .iter()
                .enumerate()
                .any(|(j, t)| !t.sentence_initial && eligible(j) && t.text == word)
        };
        let mut i = 0;
        while i < tokens.len() {
            if !eligible(i) {
                i += 1;
                continue;
            }
            let mut end = i;
            while end + 1 < tokens.len() && eligible(end + 1) && tokens[end + 1].sentence == tokens[i].sentence && {
                let g = Self::gap(paragraph, &index, &tokens[end], &tokens[end + 1]);
                !g.is_empty() && g.chars().all(char::is_whitespace)
            } {
                end += 1;
            }
            let mut start = i;
            if tokens[i].sentence_initial && !capitalized_elsewhere(&tokens[i].text) {
                start += 1;
            }
            if start <= end {
                let span = CharSpan::new(tokens[start].span.start, tokens[end].span.end);
                mentions.push(Mention {
                    span,
                    kind: MentionKind::Entity,
                    text: index.slice(&paragraph.text, span).to_owned(),
                });
            }
            i = end + 1;
        }
        mentions.sort_by_key(|m| (m.span.start, m.span.end, m.kind));
        mentions.dedup_by_key(|m| m.span);
        mentions
    }
}
