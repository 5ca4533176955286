use std::collections::{BTreeSet, HashSet};

use historiographer::attack::{reconstruct, AttackConfig, Discipline};
use historiographer::eval::brute_force_recoverable;
use historiographer::history::SearchHistory;
use historiographer::oracle::{GenericCorpus, OracleConfig, SuggestionService};
use historiographer::planner::{all_strings, PlanConfig, PrefixPlan};
use historiographer::text::{normalize, Alphabet};
use proptest::prelude::*;

fn small_alphabet() -> Alphabet {
    "abc ".parse().unwrap()
}

/// Searches over a tiny alphabet so that prefixes collide often.
fn arb_history(max_entries: usize) -> impl Strategy<Value = SearchHistory> {
    proptest::collection::vec(("[abc][abc ]{1,6}", any::<bool>(), 1u32..4, 0i64..1000), 0..=max_entries).prop_map(
        |searches| {
            let mut h = SearchHistory::new("p");
            for (raw, clicked, times, t) in searches {
                let q = normalize(&raw);
                if q.chars().count() < 2 || h.get(&q).is_some() {
                    continue;
                }
                for i in 0..times {
                    h.insert_search(&q, t + i as i64, clicked.then_some("http://r/")).unwrap();
                }
            }
            h
        },
    )
}

fn exhaustive_plan() -> PrefixPlan {
    let alphabet = small_alphabet();
    let config = PlanConfig { alphabet: alphabet.clone(), max_stats_length: 2, mass_fraction: 1.0, ..PlanConfig::default() };
    PrefixPlan::build(&all_strings(&alphabet, 2), config).unwrap()
}

fn partial_plan() -> PrefixPlan {
    let corpus = ["ab", "abc", "ac", "aca", "ba", "bab", "b c", "ca", "cab"];
    let config = PlanConfig { alphabet: small_alphabet(), mass_fraction: 0.6, ..PlanConfig::default() };
    PrefixPlan::build(&corpus, config).unwrap()
}

fn clicked(h: &SearchHistory) -> BTreeSet<String> {
    h.clicked_entries().map(|e| e.query.clone()).collect()
}

fn attack(h: &SearchHistory, plan: &PrefixPlan, config: &AttackConfig) -> historiographer::ReconstructionResult {
    let oracle_config = OracleConfig::default();
    let corpus = GenericCorpus::empty();
    reconstruct(&SuggestionService::new(h, &corpus, &oracle_config), plan, config).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn every_recovered_query_was_clicked(
        h in arb_history(40),
        budget in proptest::option::of(0u64..60),
        depth in proptest::option::of(2usize..6),
        level in any::<bool>(),
        full in any::<bool>(),
    ) {
        let plan = if full { exhaustive_plan() } else { partial_plan() };
        let discipline = if level { Discipline::LevelOrder } else { Discipline::Priority };
        let config = AttackConfig { budget, max_depth: depth, discipline, ..AttackConfig::default() };
        let r = attack(&h, &plan, &config);
        prop_assert!(r.recovered.is_subset(&clicked(&h)));
        prop_assert_eq!(r.requests_used as usize, r.request_log.len());
        if let Some(b) = budget {
            prop_assert!(r.requests_used <= b);
        }
        let distinct: HashSet<&str> = r.request_log.iter().map(|l| l.prefix.as_str()).collect();
        prop_assert_eq!(distinct.len(), r.request_log.len());
        prop_assert!(r.request_log.iter().all(|l| l.history_count <= 3));
    }

    #[test]
    fn larger_budget_recovers_a_superset(h in arb_history(40), b1 in 0u64..40, extra in 0u64..40, full in any::<bool>()) {
        let plan = if full { exhaustive_plan() } else { partial_plan() };
        let small = attack(&h, &plan, &AttackConfig { budget: Some(b1), ..AttackConfig::default() });
        let large = attack(&h, &plan, &AttackConfig { budget: Some(b1 + extra), ..AttackConfig::default() });
        prop_assert!(small.recovered.is_subset(&large.recovered));
        prop_assert!(small.request_log.iter().zip(&large.request_log).all(|(a, b)| a == b));
    }

    #[test]
    fn exhaustive_plan_matches_brute_force(h in arb_history(30)) {
        let r = attack(&h, &exhaustive_plan(), &AttackConfig::default());
        prop_assert_eq!(r.recovered, brute_force_recoverable(&h, &OracleConfig::default()));
        prop_assert!(r.frontier_exhausted);
    }

    #[test]
    fn attack_leaves_history_untouched(h in arb_history(20)) {
        let before = h.clone();
        attack(&h, &partial_plan(), &AttackConfig::default());
        prop_assert_eq!(before, h);
    }
}

#[test]
fn unsaturated_seed_reveals_everything_beneath_it() {
    let mut h = SearchHistory::new("u");
    h.insert_search("ab c", 1, Some("http://r/")).unwrap();
    h.insert_search("abba", 2, Some("http://r/")).unwrap();
    let r = attack(&h, &exhaustive_plan(), &AttackConfig::default());
    assert_eq!(r.recovered, clicked(&h));
    assert!(r.request_log.iter().all(|l| l.prefix.chars().count() == 2));
}
