//! Reading-comprehension datasets as labeled question corpora.
//!
//! SQuAD, QuAC and CoQA style JSON files are flattened into questions with
//! their gold answers. Unanswerable questions and answers that do not sit
//! inside a single paragraph are dropped, each distinct question is kept
//! at most [`MAX_DUPLICATES`] times, and the rest are labeled.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::taxonomy::{Classifier, FallbackClassifier, LabelSource, LabeledQuestion, SpecificityLabel};
use crate::text::normalize_tokens;

pub const MAX_DUPLICATES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetFormat {
    Squad,
    Quac,
    Coqa,
}

impl FromStr for DatasetFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "squad" => Ok(Self::Squad),
            "quac" => Ok(Self::Quac),
            "coqa" => Ok(Self::Coqa),
            _ => Err(Error::InvalidInput(format!("unknown dataset format {s:?}"))),
        }
    }
}

impl fmt::Display for DatasetFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Squad => "squad",
            Self::Quac => "quac",
            Self::Coqa => "coqa",
        })
    }
}

/// A question with its gold answer, before labeling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RcQuestion {
    pub question: String,
    pub answer: String,
    pub context_id: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub total: usize,
    pub unanswerable: usize,
    pub multi_paragraph: usize,
    pub downsampled: usize,
    pub retained: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestedCorpus {
    pub questions: Vec<LabeledQuestion>,
    pub report: IngestReport,
}

fn parse_error(location: &str, message: impl Into<String>) -> Error {
    Error::Parse {
        location: location.to_owned(),
        message: message.into(),
    }
}

fn field<'a>(v: &'a Value, at: &str, name: &str) -> Result<&'a Value> {
    v.get(name)
        .ok_or_else(|| parse_error(at, format!("missing field {name:?}")))
}

fn array<'a>(v: &'a Value, at: &str, name: &str) -> Result<&'a Vec<Value>> {
    field(v, at, name)?
        .as_array()
        .ok_or_else(|| parse_error(&format!("{at}.{name}"), "expected an array"))
}

fn string<'a>(v: &'a Value, at: &str, name: &str) -> Result<&'a str> {
    field(v, at, name)?
        .as_str()
        .ok_or_else(|| parse_error(&format!("{at}.{name}"), "expected a string"))
}

fn integer(v: &Value, at: &str, name: &str) -> Result<i64> {
    field(v, at, name)?
        .as_i64()
        .ok_or_else(|| parse_error(&format!("{at}.{name}"), "expected an integer"))
}

/// Whether `[start, start + len)` lies inside `context` without crossing a
/// blank-line paragraph break.
fn within_one_paragraph(context: &str, start: i64, len: usize) -> bool {
    let Ok(start) = usize::try_from(start) else {
        return false;
    };
    let chars: Vec<char> = context.chars().collect();
    if len == 0 || start + len > chars.len() {
        return false;
    }
    let span: String = chars[start..start + len].iter().collect();
    !span.contains("\n\n") && !span.contains("\r\n\r\n")
}

enum Item {
    Keep(RcQuestion),
    Unanswerable,
    MultiParagraph,
}

fn squad_like(root: &Value, quac: bool) -> Result<Vec<Item>> {
    let mut out = Vec::new();
    for (i, article) in array(root, "$", "data")?.iter().enumerate() {
        let at = format!("data[{i}]");
        for (j, para) in array(article, &at, "paragraphs")?.iter().enumerate() {
            let at = format!("data[{i}].paragraphs[{j}]");
            let context = string(para, &at, "context")?;
            for (k, qa) in array(para, &at, "qas")?.iter().enumerate() {
                let at = format!("{at}.qas[{k}]");
                let question = string(qa, &at, "question")?.to_owned();
                let impossible = qa.get("is_impossible").and_then(Value::as_bool).unwrap_or(false);
                let answer = match (quac, qa.get("orig_answer")) {
                    (true, Some(orig)) => Some(orig),
                    _ => array(qa, &at, "answers")?.first(),
                };
                let Some(answer) = answer.filter(|_| !impossible) else {
                    out.push(Item::Unanswerable);
                    continue;
                };
                let answer_at = format!("{at}.answers[0]");
                let text = string(answer, &answer_at, "text")?;
                if quac && text == "CANNOTANSWER" {
                    out.push(Item::Unanswerable);
                    continue;
                }
                let start = integer(answer, &answer_at, "answer_start")?;
                if !within_one_paragraph(context, start, text.chars().count()) {
                    out.push(Item::MultiParagraph);
                    continue;
                }
                out.push(Item::Keep(RcQuestion {
                    question,
                    answer: text.to_owned(),
                    context_id: format!("data[{i}].paragraphs[{j}]"),
                }));
            }
        }
    }
    Ok(out)
}

fn coqa(root: &Value) -> Result<Vec<Item>> {
    let mut out = Vec::new();
    for (i, story) in array(root, "$", "data")?.iter().enumerate() {
        let at = format!("data[{i}]");
        let text = string(story, &at, "story")?;
        let id = story
            .get("id")
            .and_then(Value::as_str)
            .map_or_else(|| at.clone(), str::to_owned);
        let questions = array(story, &at, "questions")?;
        let answers = array(story, &at, "answers")?;
        if questions.len() != answers.len() {
            return Err(parse_error(
                &at,
                format!("{} questions but {} answers", questions.len(), answers.len()),
            ));
        }
        for (k, (q, a)) in questions.iter().zip(answers).enumerate() {
            let q_at = format!("{at}.questions[{k}]");
            let a_at = format!("{at}.answers[{k}]");
            let question = string(q, &q_at, "input_text")?.to_owned();
            let start = integer(a, &a_at, "span_start")?;
            let end = integer(a, &a_at, "span_end")?;
            let free = string(a, &a_at, "input_text")?;
            if start < 0 || end <= start || free.trim().eq_ignore_ascii_case("unknown") {
                out.push(Item::Unanswerable);
                continue;
            }
            // span_start/span_end delimit the extractive evidence for the answer
            if !within_one_paragraph(text, start, (end - start) as usize) {
                out.push(Item::MultiParagraph);
                continue;
            }
            let evidence: String = text.chars().skip(start as usize).take((end - start) as usize).collect();
            out.push(Item::Keep(RcQuestion {
                question,
                answer: evidence.trim().to_owned(),
                context_id: id.clone(),
            }));
        }
    }
    Ok(out)
}

/// Guesses the format from the file's shape.
pub fn detect_format(root: &Value) -> DatasetFormat {
    let data = root.get("data").and_then(Value::as_array);
    let first = data.and_then(|d| d.first());
    if first.is_some_and(|a| a.get("story").is_some()) {
        return DatasetFormat::Coqa;
    }
    let has_orig = data.into_iter().flatten().any(|a| {
        a.get("paragraphs")
            .and_then(Value::as_array)
            .into_iter()
            .flatten()
            .flat_map(|p| p.get("qas").and_then(Value::as_array).into_iter().flatten())
            .any(|qa| qa.get("orig_answer").is_some())
    });
    if has_orig {
        DatasetFormat::Quac
    } else {
        DatasetFormat::Squad
    }
}

/// Keeps at most `max` occurrences of each normalized question, first
/// occurrences first.
pub fn downsample(questions: Vec<RcQuestion>, max: usize) -> (Vec<RcQuestion>, usize) {
    let mut seen: HashMap<Vec<String>, usize> = HashMap::new();
    let mut dropped = 0;
    let kept = questions
        .into_iter()
        .filter(|q| {
            let n = seen.entry(normalize_tokens(&q.question)).or_default();
            *n += 1;
            if *n > max {
                dropped += 1;
            }
            *n <= max
        })
        .collect();
    (kept, dropped)
}

/// Parses a dataset, applying the answerability, locality and duplicate
/// rules. `format` of `None` detects it.
pub fn parse_rc_dataset(text: &str, format: Option<DatasetFormat>) -> Result<(Vec<RcQuestion>, IngestReport)> {
    let root: Value = serde_json::from_str(text)
        .map_err(|e| parse_error(&format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
    let format = format.unwrap_or_else(|| detect_format(&root));
    let items = match format {
        DatasetFormat::Squad => squad_like(&root, false)?,
        DatasetFormat::Quac => squad_like(&root, true)?,
        DatasetFormat::Coqa => coqa(&root)?,
    };
    let mut report = IngestReport {
        total: items.len(),
        ..Default::default()
    };
    let mut kept = Vec::new();
    for item in items {
        match item {
            Item::Keep(q) => kept.push(q),
            Item::Unanswerable => report.unanswerable += 1,
            Item::MultiParagraph => report.multi_paragraph += 1,
        }
    }
    let (kept, dropped) = downsample(kept, MAX_DUPLICATES);
    report.downsampled = dropped;
    report.retained = kept.len();
    Ok((kept, report))
}

pub fn label(
    questions: Vec<RcQuestion>,
    classifier: &Classifier,
    fallback: &dyn FallbackClassifier,
) -> Result<Vec<LabeledQuestion>> {
    let texts: Vec<String> = questions.iter().map(|q| q.question.clone()).collect();
    let labels = classifier.classify_batch(&texts, fallback)?;
    Ok(questions
        .into_iter()
        .zip(labels)
        .map(|(q, c)| LabeledQuestion {
            question: q.question,
            label: c.label,
            source: c.source,
            template_id: c.rule.map(|r| r.template_id),
            answer: Some(q.answer),
            context_id: Some(q.context_id),
        })
        .collect())
}

pub fn ingest_rc_dataset(
    path: &Path,
    format: Option<DatasetFormat>,
    classifier: &Classifier,
    fallback: &dyn FallbackClassifier,
) -> Result<IngestedCorpus> {
    let text = std::fs::read_to_string(path)?;
    let (questions, report) = parse_rc_dataset(&text, format).map_err(|e| match e {
        Error::Parse { location, message } => Error::Parse {
            location: format!("{}: {location}", path.display()),
            message,
        },
        other => other,
    })?;
    tracing::info!(?report, "ingested dataset");
    Ok(IngestedCorpus {
        questions: label(questions, classifier, fallback)?,
        report,
    })
}

/// Reads hand-labeled questions: one `question<TAB>LABEL` per line, `#`
/// comments and blank lines ignored. Further columns are notes.
pub fn parse_labeled_tsv(text: &str) -> Result<Vec<LabeledQuestion>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let at = format!("line {}", n + 1);
        let mut cols = line.split('\t');
        let (Some(question), Some(label)) = (cols.next(), cols.next()) else {
            return Err(parse_error(&at, "expected question<TAB>label"));
        };
        let label: SpecificityLabel = label
            .trim()
            .parse()
            .map_err(|_| parse_error(&at, format!("unknown label {:?}", label.trim())))?;
        out.push(LabeledQuestion {
            question: question.trim().to_owned(),
            label,
            source: LabelSource::Hand,
            template_id: None,
            answer: None,
            context_id: None,
        });
    }
    Ok(out)
}
