mod common;

use common::{fuzz_sequence, join_algebra_violations, random_tree};
use mht_core::cluster_ops::remove_leaf;
use mht_core::pruning::flush_certainties;
use mht_core::{IdAllocator, Journal, MhtError, PruneStrategy};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn fuzzed_sequences_keep_every_invariant() {
    for seed in 0..500 {
        let problems = fuzz_sequence(seed, 8);
        assert!(problems.is_empty(), "seed {seed}: {problems:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fuzzed_sequences_prop(seed in any::<u64>(), steps in 1u64..12) {
        let problems = fuzz_sequence(seed, steps);
        prop_assert!(problems.is_empty(), "{:?}", problems);
    }

    #[test]
    fn join_follows_product_rule(seed in any::<u64>()) {
        let problems = join_algebra_violations(seed);
        prop_assert!(problems.is_empty(), "{:?}", problems);
    }

    #[test]
    fn remove_leaf_keeps_cluster_valid(seed in any::<u64>(), depth in 1u64..5, removals in 1usize..10) {
        let mut ids = IdAllocator::new();
        let mut c = random_tree(seed, depth, &mut ids);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        for _ in 0..removals {
            let leaves = c.leaf_ids();
            let victim = leaves[rng.random_range(0..leaves.len())];
            match remove_leaf(&mut c, victim, &mut Journal::new()) {
                Ok(()) => {}
                Err(MhtError::LastLeaf(_)) => prop_assert_eq!(leaves.len(), 1),
                Err(e) => return Err(TestCaseError::fail(e.to_string())),
            }
            let problems = mht_core::validate_cluster(&c);
            prop_assert!(problems.is_empty(), "{:?}", problems);
        }
    }

    #[test]
    fn flush_is_idempotent(seed in any::<u64>(), depth in 1u64..5) {
        let mut ids = IdAllocator::new();
        let mut c = random_tree(seed, depth, &mut ids);
        mht_core::pruning::prune(&mut c, &[PruneStrategy::BestK(1)], &mut Journal::new());
        let first = flush_certainties(&mut c, &mut ids, &mut Journal::new());
        let dot = mht_core::dot::cluster_to_dot(&c);
        let second = flush_certainties(&mut c, &mut ids, &mut Journal::new());
        prop_assert!(second.certain.is_empty() && second.fact_clusters.is_empty());
        prop_assert_eq!(dot, mht_core::dot::cluster_to_dot(&c));
        // best-1 then flush leaves only certain events and singleton fact clusters
        prop_assert!(c.groups().count() == 1 && c.events().next().is_none());
        for fc in &first.fact_clusters {
            prop_assert_eq!(fc.facts().count(), 1);
            prop_assert!(mht_core::validate_cluster(fc).is_empty());
        }
    }
}
