//! Answer-span selection: every sentence is a span for both a GENERAL and a
//! SPECIFIC question, every entity and numeric mention is a span for a
//! SPECIFIC question. YESNO is never a generation target.

use std::cmp::Reverse;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::taxonomy::SpecificityLabel;
use crate::text::{CharSpan, MentionKind, Paragraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum SpanKind {
    Sentence,
    Entity,
    Numeric,
}

impl From<MentionKind> for SpanKind {
    fn from(k: MentionKind) -> Self {
        match k {
            MentionKind::Entity => SpanKind::Entity,
            MentionKind::Numeric => SpanKind::Numeric,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AnswerSpanCandidate {
    pub paragraph: usize,
    pub span: CharSpan,
    pub kind: SpanKind,
    pub target: SpecificityLabel,
    pub sentence: usize,
}

impl AnswerSpanCandidate {
    /// Sort key: start offset, longer spans first, GENERAL before SPECIFIC.
    pub fn order_key(&self) -> (usize, Reverse<usize>, SpecificityLabel, SpanKind) {
        (self.span.start, Reverse(self.span.end), self.target, self.kind)
    }
}

impl PartialOrd for AnswerSpanCandidate {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for AnswerSpanCandidate {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.order_key()
            .cmp(&other.order_key())
            .then(self.paragraph.cmp(&other.paragraph))
            .then(self.sentence.cmp(&other.sentence))
    }
}

pub fn select_spans(paragraph: &Paragraph) -> Result<Vec<AnswerSpanCandidate>> {
    if paragraph.sentences.is_empty() {
        return Err(Error::InvalidInput(format!(
            "paragraph {} has no sentences",
            paragraph.index
        )));
    }
    let mut out = Vec::with_capacity(2 * paragraph.sentences.len() + paragraph.mentions.len());
    for (i, s) in paragraph.sentences.iter().enumerate() {
        for target in [SpecificityLabel::General, SpecificityLabel::Specific] {
            out.push(AnswerSpanCandidate {
                paragraph: paragraph.index,
                span: *s,
                kind: SpanKind::Sentence,
                target,
                sentence: i,
            });
        }
    }
    for m in &paragraph.mentions {
        let Some(sentence) = paragraph.sentence_of(m.span) else {
            continue;
        };
        // a mention covering its whole sentence duplicates the sentence span
        if paragraph.sentences[sentence] == m.span {
            continue;
        }
        out.push(AnswerSpanCandidate {
            paragraph: paragraph.index,
            span: m.span,
            kind: m.kind.into(),
            target: SpecificityLabel::Specific,
            sentence,
        });
    }
    out.sort();
    Ok(out)
}
