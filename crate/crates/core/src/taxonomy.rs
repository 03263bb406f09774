//! Question specificity classification.
//!
//! Questions are mapped onto GENERAL, SPECIFIC or YESNO through a table of
//! surface templates keyed to Lehnert's conceptual question categories.
//! Questions no template covers go to a pluggable [`FallbackClassifier`].
//!
//! Rules are tried in table order and the first match wins, so the table
//! order is the priority order:
//! Quantification, causal templates, Instrumental, Judgemental,
//! Where/When/Who, then first-word-VERB.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{BackendError, Error, Result};
use crate::lexicon;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum SpecificityLabel {
    General,
    Specific,
    Yesno,
}

impl SpecificityLabel {
    pub const ALL: [SpecificityLabel; 3] = [Self::General, Self::Specific, Self::Yesno];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::General => "GENERAL",
            Self::Specific => "SPECIFIC",
            Self::Yesno => "YESNO",
        }
    }
}

impl fmt::Display for SpecificityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SpecificityLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().replace('-', "").as_str() {
            "GENERAL" => Ok(Self::General),
            "SPECIFIC" => Ok(Self::Specific),
            "YESNO" => Ok(Self::Yesno),
            other => Err(Error::InvalidInput(format!("unknown specificity label {other:?}"))),
        }
    }
}

/// The 13 conceptual question categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConceptualCategory {
    CausalAntecedent,
    GoalOriented,
    Enablement,
    CausalConsequent,
    Expectational,
    Instrumental,
    Judgemental,
    ConceptCompletion,
    FeatureSpecification,
    Quantification,
    Verification,
    Disjunctive,
    Request,
}

impl ConceptualCategory {
    pub const ALL: [ConceptualCategory; 13] = [
        Self::CausalAntecedent,
        Self::GoalOriented,
        Self::Enablement,
        Self::CausalConsequent,
        Self::Expectational,
        Self::Instrumental,
        Self::Judgemental,
        Self::ConceptCompletion,
        Self::FeatureSpecification,
        Self::Quantification,
        Self::Verification,
        Self::Disjunctive,
        Self::Request,
    ];

    /// Labels a template of this category may assign. Request has none.
    pub fn allowed_labels(&self) -> &'static [SpecificityLabel] {
        use SpecificityLabel::*;
        match self {
            Self::CausalAntecedent
            | Self::GoalOriented
            | Self::Enablement
            | Self::CausalConsequent
            | Self::Expectational
            | Self::Instrumental
            | Self::Judgemental => &[General],
            Self::ConceptCompletion | Self::FeatureSpecification => &[General, Specific],
            Self::Quantification => &[Specific],
            Self::Verification | Self::Disjunctive => &[Yesno],
            Self::Request => &[],
        }
    }
}

/// Coarse part-of-speech tags consumed by the rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum PosTag {
    Verb,
    Wh,
    Pronoun,
    Numberword,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenAnnotation {
    pub text: String,
    pub tag: PosTag,
    pub position: usize,
}

pub trait PosTagger: Send + Sync {
    fn tag(&self, token: &str) -> PosTag;
}

/// Closed-class lexicon tagger.
#[derive(Debug, Clone, Copy, Default)]
pub struct LexiconTagger;

impl PosTagger for LexiconTagger {
    fn tag(&self, token: &str) -> PosTag {
        if lexicon::contains(lexicon::WH_WORDS, token) {
            PosTag::Wh
        } else if lexicon::contains(lexicon::VERBS, token) {
            PosTag::Verb
        } else if lexicon::contains(lexicon::PRONOUNS, token) {
            PosTag::Pronoun
        } else if lexicon::is_number_word(token)
            || (!token.is_empty() && token.chars().all(|c| c.is_ascii_digit() || c == ',' || c == '.'))
        {
            PosTag::Numberword
        } else {
            PosTag::Other
        }
    }
}

/// Lowercases, splits on whitespace and strips punctuation from token
/// edges. Internal apostrophes survive ("didn't").
pub fn question_tokens(question: &str) -> Vec<String> {
    question
        .split_whitespace()
        .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase())
        .filter(|t| !t.is_empty())
        .collect()
}

pub fn annotate(question: &str, tagger: &dyn PosTagger) -> Vec<TokenAnnotation> {
    question_tokens(question)
        .into_iter()
        .enumerate()
        .map(|(position, text)| TokenAnnotation {
            tag: tagger.tag(&text),
            text,
            position,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Pattern {
    /// The question starts with these words.
    Prefix { words: Vec<String> },
    /// Any of these words occurs anywhere.
    ContainsAny { words: Vec<String> },
    /// "how" followed by a VERB that is not a quantity word. Stands in for
    /// a dependency check that the head of "how" is a verb.
    HowVerb { exclude: Vec<String> },
    /// First token is tagged VERB.
    FirstWordVerb,
    /// First token is tagged VERB and one of these words occurs.
    FirstWordVerbWithAny { words: Vec<String> },
}

impl Pattern {
    fn matches(&self, tokens: &[TokenAnnotation]) -> bool {
        let first_is_verb = tokens.first().is_some_and(|t| t.tag == PosTag::Verb);
        match self {
            Pattern::Prefix { words } => {
                words.len() <= tokens.len() && words.iter().zip(tokens).all(|(w, t)| *w == t.text)
            }
            Pattern::ContainsAny { words } => tokens.iter().any(|t| words.contains(&t.text)),
            Pattern::HowVerb { exclude } => match tokens {
                [how, next, ..] => how.text == "how" && next.tag == PosTag::Verb && !exclude.contains(&next.text),
                _ => false,
            },
            Pattern::FirstWordVerb => first_is_verb,
            Pattern::FirstWordVerbWithAny { words } => {
                first_is_verb && tokens.iter().skip(1).any(|t| words.contains(&t.text))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rule {
    pub id: String,
    pub category: ConceptualCategory,
    pub label: SpecificityLabel,
    pub pattern: Pattern,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleMatch {
    pub category: ConceptualCategory,
    pub label: SpecificityLabel,
    pub template_id: String,
}

pub const QUANTITY_WORDS: &[&str] = &["many", "long", "much", "old", "far", "often", "big", "tall"];

/// Ordered rule table. Earlier rules win.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleTable {
    pub rules: Vec<Rule>,
}

fn words(ws: &[&str]) -> Vec<String> {
    ws.iter().map(|w| w.to_string()).collect()
}

fn prefix(id: &str, category: ConceptualCategory, label: SpecificityLabel, ws: &[&str]) -> Rule {
    Rule {
        id: id.into(),
        category,
        label,
        pattern: Pattern::Prefix { words: words(ws) },
    }
}

impl Default for RuleTable {
    fn default() -> Self {
        use ConceptualCategory::*;
        use SpecificityLabel::*;
        let rules = vec![
            prefix("quantification.how_many", Quantification, Specific, &["how", "many"]),
            prefix("quantification.how_long", Quantification, Specific, &["how", "long"]),
            prefix("causal.why", CausalAntecedent, General, &["why"]),
            prefix(
                "causal.what_happened_after",
                CausalConsequent,
                General,
                &["what", "happened", "after"],
            ),
            prefix(
                "causal.what_happened_before",
                CausalAntecedent,
                General,
                &["what", "happened", "before"],
            ),
            prefix(
                "causal.what_was_the_cause",
                CausalAntecedent,
                General,
                &["what", "was", "the", "cause"],
            ),
            prefix(
                "causal.what_was_the_reason",
                CausalAntecedent,
                General,
                &["what", "was", "the", "reason"],
            ),
            prefix(
                "goal.what_was_the_purpose",
                GoalOriented,
                General,
                &["what", "was", "the", "purpose"],
            ),
            prefix("enablement.what_led_to", Enablement, General, &["what", "led", "to"]),
            Rule {
                id: "instrumental.how_verb".into(),
                category: Instrumental,
                label: General,
                pattern: Pattern::HowVerb {
                    exclude: words(QUANTITY_WORDS),
                },
            },
            Rule {
                id: "judgemental.you".into(),
                category: Judgemental,
                label: General,
                pattern: Pattern::ContainsAny {
                    words: words(&["you", "your", "yours", "yourself", "yourselves"]),
                },
            },
            prefix("completion.where", ConceptCompletion, Specific, &["where"]),
            prefix("completion.when", ConceptCompletion, Specific, &["when"]),
            prefix("completion.who", ConceptCompletion, Specific, &["who"]),
            Rule {
                id: "disjunctive.verb_or".into(),
                category: Disjunctive,
                label: Yesno,
                pattern: Pattern::FirstWordVerbWithAny { words: words(&["or"]) },
            },
            Rule {
                id: "verification.first_verb".into(),
                category: Verification,
                label: Yesno,
                pattern: Pattern::FirstWordVerb,
            },
        ];
        Self { rules }
    }
}

impl RuleTable {
    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for rule in &self.rules {
            if !seen.insert(rule.id.as_str()) {
                return Err(Error::InvalidConfig(format!("duplicate rule id {:?}", rule.id)));
            }
            if !rule.category.allowed_labels().contains(&rule.label) {
                return Err(Error::InvalidConfig(format!(
                    "rule {:?}: category {:?} cannot assign {}",
                    rule.id, rule.category, rule.label
                )));
            }
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let table: RuleTable = toml::from_str(text).map_err(|e| Error::Parse {
            location: e
                .span()
                .map(|s| format!("byte {}", s.start))
                .unwrap_or_else(|| "rule table".into()),
            message: e.message().to_owned(),
        })?;
        table.validate()?;
        Ok(table)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("rule table serializes")
    }

    pub fn get(&self, id: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| r.id == id)
    }

    /// First matching rule, or `None` when no template covers the question.
    pub fn classify_by_rules(&self, tokens: &[TokenAnnotation]) -> Result<Option<RuleMatch>> {
        if tokens.is_empty() {
            return Err(Error::InvalidInput("question is empty".into()));
        }
        Ok(self
            .rules
            .iter()
            .find(|r| r.pattern.matches(tokens))
            .map(|r| RuleMatch {
                category: r.category,
                label: r.label,
                template_id: r.id.clone(),
            }))
    }
}

/// Labels questions the rules do not cover.
pub trait FallbackClassifier: Send + Sync {
    fn classify(&self, questions: &[String]) -> std::result::Result<Vec<SpecificityLabel>, BackendError>;
}

/// SPECIFIC when the question has a factoid wh-word (who, when, where,
/// which, how many, how long) or a number word; GENERAL otherwise.
#[derive(Debug, Clone, Copy, Default)]
pub struct HeuristicFallback;

impl HeuristicFallback {
    pub fn label(&self, question: &str) -> SpecificityLabel {
        let tokens = annotate(question, &LexiconTagger);
        let factoid = tokens.iter().enumerate().any(|(i, t)| {
            matches!(t.text.as_str(), "who" | "when" | "where" | "which")
                || (t.text == "how" && tokens.get(i + 1).is_some_and(|n| n.text == "many" || n.text == "long"))
                || t.tag == PosTag::Numberword
        });
        if factoid {
            SpecificityLabel::Specific
        } else {
            SpecificityLabel::General
        }
    }
}

impl FallbackClassifier for HeuristicFallback {
    fn classify(&self, questions: &[String]) -> std::result::Result<Vec<SpecificityLabel>, BackendError> {
        Ok(questions.iter().map(|q| self.label(q)).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelSource {
    Rule,
    Hand,
    Fallback,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub label: SpecificityLabel,
    pub source: LabelSource,
    pub rule: Option<RuleMatch>,
}

/// Rule table plus tagger. Stateless after construction.
pub struct Classifier {
    pub rules: RuleTable,
    pub tagger: Box<dyn PosTagger>,
}

impl Default for Classifier {
    fn default() -> Self {
        Self::new(RuleTable::default())
    }
}

impl Classifier {
    pub fn new(rules: RuleTable) -> Self {
        Self {
            rules,
            tagger: Box::new(LexiconTagger),
        }
    }

    pub fn classify_by_rules(&self, question: &str) -> Result<Option<RuleMatch>> {
        self.rules.classify_by_rules(&annotate(question, self.tagger.as_ref()))
    }

    pub fn classify(&self, question: &str, fallback: &dyn FallbackClassifier) -> Result<Classification> {
        let mut out = self.classify_batch(&[question.to_owned()], fallback)?;
        Ok(out.remove(0))
    }

    /// Classifies many questions, sending all rule-uncovered ones to the
    /// fallback in a single call.
    pub fn classify_batch(
        &self,
        questions: &[String],
        fallback: &dyn FallbackClassifier,
    ) -> Result<Vec<Classification>> {
        let mut out: Vec<Option<Classification>> = Vec::with_capacity(questions.len());
        let mut uncovered = Vec::new();
        for (i, q) in questions.iter().enumerate() {
            match self.classify_by_rules(q)? {
                Some(m) => out.push(Some(Classification {
                    label: m.label,
                    source: LabelSource::Rule,
                    rule: Some(m),
                })),
                None => {
                    uncovered.push(i);
                    out.push(None);
                }
            }
        }
        if !uncovered.is_empty() {
            let batch: Vec<String> = uncovered.iter().map(|&i| questions[i].clone()).collect();
            let labels = fallback.classify(&batch).map_err(|source| Error::Fallback {
                question: batch.join(" | "),
                source,
            })?;
            if labels.len() != batch.len() {
                return Err(Error::Fallback {
                    question: batch.join(" | "),
                    source: BackendError::Protocol {
                        endpoint: "classify".into(),
                        message: format!("expected {} labels, got {}", batch.len(), labels.len()),
                    },
                });
            }
            for (&i, label) in uncovered.iter().zip(labels) {
                out[i] = Some(Classification {
                    label,
                    source: LabelSource::Fallback,
                    rule: None,
                });
            }
        }
        Ok(out.into_iter().map(|c| c.expect("every question classified")).collect())
    }
}

/// A question with its specificity label and where the label came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledQuestion {
    pub question: String,
    pub label: SpecificityLabel,
    pub source: LabelSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context_id: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CoverageStats {
    pub total: usize,
    pub by_source: BTreeMap<LabelSource, usize>,
    pub by_label: BTreeMap<SpecificityLabel, usize>,
}

impl CoverageStats {
    pub fn source_fraction(&self, source: LabelSource) -> f64 {
        fraction(self.by_source.get(&source).copied().unwrap_or(0), self.total)
    }

    pub fn label_fraction(&self, label: SpecificityLabel) -> f64 {
        fraction(self.by_label.get(&label).copied().unwrap_or(0), self.total)
    }
}

fn fraction(n: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        n as f64 / total as f64
    }
}

/// Counts of labels and label sources over a corpus.
pub fn rule_coverage_stats(corpus: &[LabeledQuestion]) -> CoverageStats {
    let mut stats = CoverageStats {
        total: corpus.len(),
        ..Default::default()
    };
    for q in corpus {
        *stats.by_source.entry(q.source).or_default() += 1;
        *stats.by_label.entry(q.label).or_default() += 1;
    }
    stats
}
