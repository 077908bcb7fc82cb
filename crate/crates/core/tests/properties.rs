use std::collections::{BTreeSet, HashSet};
use std::time::Duration;

use codemix::corpus::{self, LanguageTag, SplitOptions, Task, Token, TokenKind, Utterance};
use codemix::eval::{self, ConfusionMatrix};
use codemix::pipeline::{self, ConvertedText};
use codemix::providers::{cache_key, Cache, Clock, ManualClock, RateLimiter};
use codemix::translit::{in_devanagari_block, TransliterationTable};
use codemix::Corpus;
use proptest::prelude::*;

fn corpus_of(labels: &[u8]) -> Corpus {
    let utterances = labels
        .iter()
        .enumerate()
        .map(|(i, &label)| Utterance { id: format!("u{i:04}"), tokens: vec![Token::new("ok", Some(LanguageTag::English))], label })
        .collect();
    Corpus::new("prop", Task::Sarcasm, utterances).unwrap()
}

/// Every segmentation of `word` into rules, as piece lengths.
fn all_segmentations(word: &str, rules: &HashSet<&str>) -> Vec<Vec<usize>> {
    if word.is_empty() {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for n in 1..=word.len() {
        if rules.contains(&word[..n]) {
            for mut rest in all_segmentations(&word[n..], rules) {
                rest.insert(0, n);
                out.push(rest);
            }
        }
    }
    out
}

proptest! {
    #[test]
    fn split_parts_are_disjoint_exhaustive_and_sized(
        labels in prop::collection::vec(0u8..2, 10..300),
        seed in any::<u64>(),
        stratify in any::<bool>(),
    ) {
        let c = corpus_of(&labels);
        let s = corpus::split(&c, SplitOptions { seed, stratify, ..SplitOptions::default() }).unwrap();
        let ids: BTreeSet<&String> = s.train.iter().chain(&s.val).chain(&s.test).collect();
        prop_assert_eq!(ids.len(), labels.len());
        prop_assert_eq!(s.train.len() + s.val.len() + s.test.len(), labels.len());
        let (test, val) = corpus::split_sizes(labels.len(), 0.1, 0.1);
        prop_assert_eq!((s.test.len(), s.val.len()), (test, val));
        prop_assert_eq!(corpus::split(&c, SplitOptions { seed, stratify, ..SplitOptions::default() }).unwrap(), s);
    }

    #[test]
    fn rule_concatenations_stay_in_the_devanagari_block(picks in prop::collection::vec(any::<prop::sample::Index>(), 1..10)) {
        let table = TransliterationTable::bundled();
        let word: String = picks.iter().map(|i| i.get(table.rules()).latin.as_str()).collect();
        let out = table.transliterate_word(&word).unwrap();
        prop_assert!(!out.is_empty());
        prop_assert!(out.chars().all(in_devanagari_block), "{} -> {}", word, out);
        prop_assert_eq!(table.transliterate_word(&word.to_uppercase()).unwrap(), out);
    }

    #[test]
    fn greedy_segmentation_is_the_longest_first_exhaustive_one(word in "[a-z]{1,9}") {
        let table = TransliterationTable::bundled();
        let rules: HashSet<&str> = table.rules().iter().map(|r| r.latin.as_str()).collect();
        let best = all_segmentations(&word, &rules).into_iter().max();
        let greedy: Vec<usize> = table.segment(&word).unwrap().iter().map(|r| r.latin.len()).collect();
        prop_assert_eq!(Some(greedy), best);
    }

    #[test]
    fn metrics_follow_their_definitions(tp in 0u64..1000, fp in 0u64..1000, fn_ in 0u64..1000, tn in 1u64..1000) {
        let cm = ConfusionMatrix { tp, fp, fn_, tn };
        let m = eval::metrics(&cm).unwrap();
        for v in [m.precision, m.recall, m.f1, m.accuracy] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        if tp > 0 {
            prop_assert!(!m.degenerate);
            prop_assert!((1.0 / m.f1 - 0.5 * (1.0 / m.precision + 1.0 / m.recall)).abs() < 1e-9);
            prop_assert!(m.f1 <= m.precision.max(m.recall) + 1e-12 && m.f1 >= m.precision.min(m.recall) - 1e-12);
        } else {
            prop_assert_eq!(m.f1, 0.0);
        }
    }

    #[test]
    fn crosslingual_touches_only_hindi_words(
        picks in prop::collection::vec((prop::sample::select(vec!["yaar", "dil", "kya", "office", "joke", "#fun", "@dost", "!", "42"]), 0usize..2), 1..12),
    ) {
        let tokens: Vec<Token> = picks
            .iter()
            .map(|&(t, hi)| Token::new(t, Some(if hi == 1 { LanguageTag::Hindi } else { LanguageTag::English })))
            .collect();
        let c = Corpus::new("prop", Task::Sarcasm, vec![Utterance { id: "a".into(), tokens: tokens.clone(), label: 1 }]).unwrap();
        let cc = pipeline::convert_crosslingual(&c, &TransliterationTable::bundled()).unwrap();
        let ConvertedText::Tokens(out) = &cc.utterances[0].text else { panic!("token output expected") };
        prop_assert_eq!(out.len(), tokens.len());
        for (src, dst) in tokens.iter().zip(out) {
            if src.lang == Some(LanguageTag::Hindi) && src.kind == TokenKind::Word {
                prop_assert!(dst.t.chars().all(in_devanagari_block));
            } else {
                prop_assert_eq!(&dst.t, &src.text);
            }
        }
    }

    #[test]
    fn rate_limiter_never_exceeds_its_window(rate in 1u32..8, gaps in prop::collection::vec(0u64..400, 1..40)) {
        let clock = ManualClock::new();
        let limiter = RateLimiter::new(rate);
        let mut issued = Vec::new();
        for g in gaps {
            clock.advance(Duration::from_millis(g));
            limiter.acquire(&clock);
            issued.push(clock.now());
        }
        for (i, &t) in issued.iter().enumerate() {
            let in_window = issued[i..].iter().take_while(|&&u| u < t + Duration::from_secs(1)).count();
            prop_assert!(in_window <= rate as usize);
        }
    }

    #[test]
    fn cache_survives_reopen(pairs in prop::collection::btree_map("[a-z ]{0,12}", "\\PC{0,12}", 1..20)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        {
            let cache = Cache::open(&path).unwrap();
            for (k, v) in &pairs {
                cache.put(&cache_key("echo", "hi", "en", k), v).unwrap();
            }
        }
        let cache = Cache::open(&path).unwrap();
        prop_assert_eq!(cache.len(), pairs.len());
        for (k, v) in &pairs {
            prop_assert_eq!(cache.get(&cache_key("echo", "hi", "en", k)), Some(v.clone()));
        }
    }
}
