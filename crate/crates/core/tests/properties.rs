mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use squash_core::backends::mock::MockGenerator;
use squash_core::backends::{AnswerPrediction, DecodeConfig, DecodePolicy, QuestionCandidate, QuestionGenerator};
use squash_core::budget::{apply_budget, kept_count, BudgetConfig};
use squash_core::filtering::{filter_with_fallback, FilterConfig};
use squash_core::hierarchy::build_forest;
use squash_core::spans::select_spans;
use squash_core::taxonomy::Classifier;
use squash_core::text::{char_slice, CharIndex};
use squash_core::{normalize_tokens, overlap, segment, CharSpan, Paragraph, SpecificityLabel};

use common::*;

fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn normalize_is_idempotent(s in "\\PC{0,60}") {
        let once = normalize_tokens(&s);
        prop_assert_eq!(normalize_tokens(&once.join(" ")), once);
    }

    #[test]
    fn char_offsets_round_trip(s in "\\PC{0,40}", a in 0usize..50, b in 0usize..50) {
        let index = CharIndex::new(&s);
        let n = s.chars().count();
        prop_assert_eq!(index.char_len(), n);
        for c in 0..=n {
            prop_assert_eq!(index.char_of(index.byte_of(c)), c);
        }
        let (a, b) = (a.min(b).min(n), a.max(b).min(n));
        let expected: String = s.chars().skip(a).take(b - a).collect();
        prop_assert_eq!(char_slice(&s, CharSpan::new(a, b)), expected.as_str());
    }

    #[test]
    fn overlap_matches_oracle_and_is_symmetric(seed in any::<u64>()) {
        let mut r = seeded(seed);
        let a = random_tokens(&mut r, 10);
        let b = random_tokens(&mut r, 10);
        let (sa, sb) = (decorate(&mut r, &a), decorate(&mut r, &b));
        let (shared, alen, blen) = oracle_overlap(&oracle_normalize(&a), &oracle_normalize(&b));
        let got = overlap(&sa, &sb);
        if alen == 0 || blen == 0 {
            prop_assert_eq!((got.precision, got.recall), (0.0, 0.0));
        } else {
            prop_assert_eq!(got.precision, shared as f64 / alen as f64);
            prop_assert_eq!(got.recall, shared as f64 / blen as f64);
        }
        let swapped = overlap(&sb, &sa);
        prop_assert_eq!((swapped.precision, swapped.recall), (got.recall, got.precision));
    }

    #[test]
    fn hierarchy_matches_exhaustive_oracle(seed in any::<u64>(), n in 0usize..=8) {
        let pairs = random_pairs(&mut seeded(seed), n);
        let forest = build_forest(0, pairs.clone());
        prop_assert_eq!(forest.len(), n);
        prop_assert_eq!(forest_parents(&forest), oracle_parents(&pairs));
    }

    #[test]
    fn kept_count_is_ceil(k in 1usize..=20, d in 1usize..=20, n in 0usize..200) {
        prop_assume!(k <= d);
        prop_assert_eq!(kept_count(k as f64 / d as f64, n), (k * n).div_ceil(d));
    }

    #[test]
    fn budget_partitions_and_is_monotone(
        seed in any::<u64>(),
        n in 0usize..=10,
        g in (0.01f64..=1.0, 0.01f64..=1.0),
        s in (0.01f64..=1.0, 0.01f64..=1.0),
    ) {
        let forest = build_forest(0, random_pairs(&mut seeded(seed), n));
        prop_assert_eq!(&apply_budget(&forest, &BudgetConfig::default()).unwrap(), &forest);

        let small = BudgetConfig::new(g.0.min(g.1), s.0.min(s.1)).unwrap();
        let large = BudgetConfig::new(g.0.max(g.1), s.0.max(s.1)).unwrap();
        let a = apply_budget(&forest, &small).unwrap();
        let b = apply_budget(&forest, &large).unwrap();
        let input: BTreeSet<String> = questions(&forest).into_iter().collect();
        for out in [&a, &b] {
            let kept = questions(out);
            let unique: BTreeSet<String> = kept.iter().cloned().collect();
            prop_assert_eq!(unique.len(), kept.len());
            prop_assert!(unique.is_subset(&input));
            let pairs: Vec<_> = out.pairs().cloned().collect();
            prop_assert_eq!(forest_parents(out), oracle_parents(&pairs));
        }
        let (qa, qb): (BTreeSet<_>, BTreeSet<_>) =
            (questions(&a).into_iter().collect(), questions(&b).into_iter().collect());
        prop_assert!(qa.is_subset(&qb));
        prop_assert_eq!(a.trees.len(), kept_count(small.general_fraction, forest.trees.len()));
    }

    #[test]
    fn segmentation_and_spans_stay_in_bounds(seed in any::<u64>()) {
        let raw = random_document(&mut seeded(seed), 3, 4);
        let doc = segment(&raw).unwrap();
        for p in &doc.paragraphs {
            let n = p.char_len();
            let mut last = 0;
            for s in &p.sentences {
                prop_assert!(s.start >= last && s.start < s.end && s.end <= n);
                last = s.end;
            }
            for span in select_spans(p).unwrap() {
                prop_assert!(!span.span.is_empty() && span.span.end <= n);
                prop_assert!(p.sentences[span.sentence].contains(&span.span));
                prop_assert_ne!(span.target, SpecificityLabel::Yesno);
            }
        }
    }

    #[test]
    fn mock_questions_classify_back(seed in any::<u64>()) {
        let raw = random_document(&mut seeded(seed), 1, 4);
        let p = Paragraph::new(0, raw);
        let generator = MockGenerator::new(seed);
        let classifier = Classifier::default();
        for span in select_spans(&p).unwrap() {
            for policy in [DecodePolicy::Overgenerate, DecodePolicy::Single] {
                let request = DecodeConfig { policy, ..Default::default() }.request(&p.text, &span);
                for q in generator.generate(&request).unwrap() {
                    let label = classifier.classify_by_rules(&q.question).unwrap().map(|m| m.label);
                    prop_assert_eq!(label, Some(span.target), "{}", q.question);
                }
            }
        }
    }

    /// Answers are arbitrary, including malformed ones, and the filter must
    /// still never keep a pair whose answer is missing or unanswerable.
    #[test]
    fn filter_never_keeps_unanswerable_and_counts_shrink(
        seed in any::<u64>(),
        answers in prop::collection::vec((0u8..4, 0usize..200, 1usize..40), 1..60),
        fallback in any::<bool>(),
        recall in 0.0f64..=1.0,
    ) {
        let raw = random_document(&mut seeded(seed), 1, 3);
        let p = Paragraph::new(0, raw);
        let n = p.char_len();
        let generator = MockGenerator::new(seed);
        let mut candidates = Vec::new();
        for span in select_spans(&p).unwrap() {
            let request = DecodeConfig::default().request(&p.text, &span);
            for q in generator.generate(&request).unwrap() {
                candidates.push(QuestionCandidate { question: q.question, origin: q.origin, score: q.score, source: span });
            }
        }
        let predict = |i: usize| {
            let (kind, start, len) = answers[i % answers.len()];
            let start = start % n.max(1);
            let span = CharSpan::new(start, (start + len).min(n));
            match kind {
                0 => AnswerPrediction::unanswerable(),
                1 => AnswerPrediction { answerable: false, span: Some(span), confidence: 0.5 },
                2 => AnswerPrediction { answerable: true, span: None, confidence: 0.5 },
                _ => AnswerPrediction::answered(span, 0.9),
            }
        };
        let config = FilterConfig { fallback, general_sentence_min_recall: recall, ..Default::default() };
        let mut calls = 0;
        let outcome = filter_with_fallback(&p, &candidates, &config, |qs| {
            let out = (0..qs.len()).map(|i| predict(calls + i)).collect();
            calls += qs.len();
            Ok(out)
        }).unwrap();
        for pair in &outcome.pairs {
            prop_assert!(pair.prediction.answerable && pair.prediction.span == Some(pair.answer));
        }
        let c = outcome.counts;
        prop_assert!(c.generated >= c.deduplicated && c.deduplicated >= c.relevant);
        prop_assert!(c.relevant >= c.answerable && c.answerable >= c.thresholded && c.thresholded >= c.selected);
        prop_assert_eq!(outcome.pairs.len(), c.selected + c.readmitted);
    }
}
