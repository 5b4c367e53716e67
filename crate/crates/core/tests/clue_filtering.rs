use cluefuse::clues::{cluster_clues, filter_clues, similarity_ratio, ContextualClue};
use cluefuse_testkit::oracles;
use proptest::prelude::*;

const ALPHABET: &[char] = &['a', 'b', 'c', 'd', ' ', '1', '2', 'é'];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn ratio_matches_exhaustive_oracle(a in "[abcd 12é]{0,40}", b in "[abcd 12é]{0,40}") {
        prop_assert!((similarity_ratio(&a, &b) - oracles::gestalt_ratio(&a, &b)).abs() < 1e-12);
    }

    #[test]
    fn kept_clue_is_most_likely(clues in prop::collection::vec(("[ab ]{1,12}", -10.0f64..0.0), 1..25), cutoff in 0.0f64..=1.0) {
        let clues: Vec<ContextualClue> = clues.into_iter().map(|(t, l)| ContextualClue::new(t, l)).collect();
        let clusters = cluster_clues(&clues, cutoff).unwrap();
        prop_assert_eq!(clusters.iter().map(|c| c.members.len()).sum::<usize>(), clues.len());
        for c in &clusters {
            let rep = c.representative();
            prop_assert!(c.members.iter().all(|m| m.logprob <= rep.logprob));
            prop_assert!(c.members.iter().filter(|m| m.logprob == rep.logprob).all(|m| m.text >= rep.text));
        }
        let kept = filter_clues(&clusters);
        prop_assert_eq!(kept.len(), clusters.len());
        prop_assert!(kept.len() <= clues.len());
        prop_assert_eq!(kept.len() == clues.len(), clusters.iter().all(|c| c.members.len() == 1));
    }

    #[test]
    fn cutoff_extremes(texts in prop::collection::btree_set("[abc]{1,10}", 1..15)) {
        let clues: Vec<ContextualClue> = texts.iter().enumerate().map(|(i, t)| ContextualClue::new(t.clone(), -(i as f64))).collect();
        prop_assert_eq!(cluster_clues(&clues, 0.0).unwrap().len(), 1);
        // Distinct texts never reach ratio 1.
        prop_assert_eq!(cluster_clues(&clues, 1.0).unwrap().len(), clues.len());
    }
}

#[test]
fn oracle_agrees_on_random_pairs() {
    let mut rng = cluefuse_testkit::rng(5);
    for _ in 0..300 {
        let a = cluefuse_testkit::random_string(&mut rng, 60, ALPHABET);
        let b = cluefuse_testkit::random_string(&mut rng, 60, ALPHABET);
        assert!((similarity_ratio(&a, &b) - oracles::gestalt_ratio(&a, &b)).abs() < 1e-12, "{a:?} {b:?}");
    }
}

#[test]
fn duplicate_rich_sets_shrink() {
    // 100 clues: 10 templates, each with 10 single-digit variants.
    let mut clues = Vec::new();
    for t in 0..10 {
        for d in 0..10 {
            clues.push(ContextualClue::new(
                format!("template number {t} says the event happened in 19{t}{d} in the city"),
                -(t as f64) - 0.01 * d as f64,
            ));
        }
    }
    let kept = filter_clues(&cluster_clues(&clues, 0.8).unwrap());
    assert!(kept.len() < clues.len());
    assert!(!kept.is_empty());
}
