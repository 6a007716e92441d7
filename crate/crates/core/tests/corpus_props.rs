mod support;

use std::collections::BTreeSet;

use proptest::prelude::*;
use wslrec_core::corpus::{
    build_sequences, eval_split, filter_corpus, split_users, training_instances, InteractionEvent, RawSequence,
};
use wslrec_core::Error;

fn raw_strategy() -> impl Strategy<Value = Vec<RawSequence>> {
    prop::collection::vec(prop::collection::vec(0u8..12, 0..12), 1..40).prop_map(|users| {
        users
            .into_iter()
            .enumerate()
            .map(|(u, items)| RawSequence {
                user: format!("u{u}"),
                items: items.into_iter().map(|i| format!("i{i}")).collect(),
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn filtering_matches_one_at_a_time_deletion(raw in raw_strategy(), mu in 1usize..8, mi in 1usize..6) {
        let expected = support::brute_force_filter(&raw, mu, mi);
        match filter_corpus(&raw, mu, mi) {
            Ok(corpus) => {
                let got: Vec<(String, Vec<String>)> = corpus
                    .sequences()
                    .iter()
                    .map(|s| {
                        let user = corpus.users().external(s.user).unwrap().to_string();
                        let items = s.items.iter().map(|&i| corpus.items().external(i).unwrap().to_string()).collect();
                        (user, items)
                    })
                    .collect();
                prop_assert_eq!(got, expected);
            }
            Err(Error::EmptyCorpus) => prop_assert!(expected.is_empty()),
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }

    #[test]
    fn filtered_corpus_is_a_fixpoint(raw in raw_strategy(), mu in 1usize..8, mi in 1usize..6) {
        if let Ok(corpus) = filter_corpus(&raw, mu, mi) {
            let mut users_of = vec![BTreeSet::new(); corpus.n_items()];
            for s in corpus.sequences() {
                prop_assert!(s.items.len() >= mu);
                for &v in &s.items {
                    users_of[v as usize].insert(s.user);
                }
            }
            prop_assert!(users_of.iter().all(|u| u.len() >= mi));
        }
    }

    #[test]
    fn sequences_are_time_ordered_permutations(
        events in prop::collection::vec((0u8..5, 0u8..9, 0u64..50), 1..80)
    ) {
        let events: Vec<InteractionEvent> = events
            .into_iter()
            .map(|(u, i, ts)| InteractionEvent { user: format!("u{u}"), item: format!("i{i}"), timestamp: ts })
            .collect();
        let seqs = build_sequences(&events);
        let total: usize = seqs.iter().map(|s| s.items.len()).sum();
        prop_assert_eq!(total, events.len());
        for s in &seqs {
            let mine: Vec<&InteractionEvent> = events.iter().filter(|e| e.user == s.user).collect();
            let mut expected = mine.clone();
            expected.sort_by_key(|e| e.timestamp);
            let items: Vec<&str> = expected.iter().map(|e| e.item.as_str()).collect();
            prop_assert_eq!(s.items.iter().map(String::as_str).collect::<Vec<_>>(), items);
        }
    }

    #[test]
    fn split_partitions_users(n in 3usize..300, r in (1u32..10, 1u32..10, 1u32..10), seed: u64) {
        let ratios = [r.0, r.1, r.2];
        let Ok(split) = split_users(n, ratios, seed) else {
            return Ok(());
        };
        let mut all: Vec<u32> = split.train.iter().chain(&split.valid).chain(&split.test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n as u32).collect::<Vec<_>>());
        let total: u32 = ratios.iter().sum();
        prop_assert_eq!(split.train.len(), n * r.0 as usize / total as usize);
        prop_assert_eq!(split.train.len() + split.valid.len(), n * (r.0 + r.1) as usize / total as usize);
        prop_assert_eq!(split, split_users(n, ratios, seed).unwrap());
    }

    #[test]
    fn instances_cover_every_split_point(len in 5usize..40, max_history in 1usize..30) {
        let items: Vec<u32> = (0..len as u32).map(|i| i % 7).collect();
        let seq = wslrec_core::corpus::BehaviorSequence { user: 0, items: items.clone() };
        let all: Vec<_> = training_instances(&seq, max_history).unwrap().collect();
        prop_assert_eq!(all.len(), len - 4);
        for inst in &all {
            prop_assert_eq!(inst.next_item, items[inst.t]);
            prop_assert_eq!(inst.history, &items[inst.t.saturating_sub(max_history)..inst.t]);
            let future: BTreeSet<u32> = items[inst.t..].iter().copied().collect();
            prop_assert_eq!(&inst.future, &future.into_iter().collect::<Vec<_>>());
        }
        let (hist, truth) = eval_split(&seq).unwrap();
        let cut = len * 4 / 5;
        prop_assert_eq!(hist, &items[..cut]);
        let expected: BTreeSet<u32> = items[cut..].iter().copied().collect();
        prop_assert_eq!(truth, expected.into_iter().collect::<Vec<_>>());
    }
}

#[test]
fn fixture_loads_all_six_users() {
    let corpus = support::fixture_corpus();
    assert_eq!(corpus.n_users(), 6);
    assert_eq!(corpus.n_items(), 12);
    assert_eq!(corpus.users().external(0), Some("u1"));
}
