mod common;

use common::oracle_gap;
use proptest::prelude::*;

#[test]
fn fixed_seeds_match_oracle() {
    for seed in 0..200 {
        let gap = oracle_gap(seed, 4, 3).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
        assert!(gap < 1e-9, "seed {seed}: gap {gap}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_scripts_match_oracle(seed in any::<u64>(), steps in 1usize..6, max_hyps in 1usize..4) {
        let gap = oracle_gap(seed, steps, max_hyps).map_err(TestCaseError::fail)?;
        prop_assert!(gap < 1e-9, "gap {}", gap);
    }
}
