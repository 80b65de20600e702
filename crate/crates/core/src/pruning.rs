//! Leaf pruning and certainty flushing.

use std::collections::BTreeSet;

use crate::cluster_ops::remove_leaf_unnormalized;
use crate::ids::{FactId, IdAllocator, LeafId};
use crate::journal::{Change, Journal};
use crate::model::{Cluster, Event};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PruneStrategy {
    /// Keep the `k` most probable leaves (ties: older leaf wins).
    BestK(usize),
    /// Keep leaves with probability at least `r` times the best one.
    RatioThreshold(f64),
    /// Bound tree depth (edges from the root) by committing to the best
    /// leaf's branch at the level that has to become certain. The cut only
    /// shows once the following flush promotes the resulting trunk.
    DepthLimit(usize),
}

/// Applies the strategies in order. Never removes the last leaf. Leaves the
/// cluster normalized; does not flush.
pub fn prune<E, F>(
    cluster: &mut Cluster<E, F>,
    strategies: &[PruneStrategy],
    journal: &mut Journal<E, F>,
) {
    for strategy in strategies {
        let victims = select_victims(cluster, *strategy);
        if victims.is_empty() {
            continue;
        }
        for leaf in victims {
            remove_leaf_unnormalized(cluster, leaf, journal);
        }
        cluster.sweep_orphan_facts(journal);
        cluster.normalize();
    }
}

/// Leaves ordered best first: probability descending, then id ascending.
pub fn ranked_leaves<E, F>(cluster: &Cluster<E, F>) -> Vec<(LeafId, f64)> {
    let mut ranked: Vec<_> = cluster
        .leaves()
        .map(|l| (l.id(), l.probability()))
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked
}

fn select_victims<E, F>(cluster: &Cluster<E, F>, strategy: PruneStrategy) -> Vec<LeafId> {
    let ranked = ranked_leaves(cluster);
    match strategy {
        PruneStrategy::BestK(k) => ranked.iter().skip(k.max(1)).map(|l| l.0).collect(),
        PruneStrategy::RatioThreshold(r) => {
            let floor = ranked[0].1 * r;
            ranked[1..]
                .iter()
                .filter(|l| l.1 < floor)
                .map(|l| l.0)
                .collect()
        }
        PruneStrategy::DepthLimit(d) => {
            let depth = cluster.depth();
            if depth <= d {
                return Vec::new();
            }
            let best = cluster.leaf(ranked[0].0).unwrap();
            let path = cluster.path_to_root(best.group());
            // path[last] is the root, path[last - k] sits at depth k
            let commit_depth = (depth - d).min(path.len() - 1);
            let anchor = path[path.len() - 1 - commit_depth];
            ranked
                .iter()
                .rev()
                .filter(|(id, _)| {
                    !cluster
                        .path_to_root(cluster.leaf(*id).unwrap().group())
                        .contains(&anchor)
                })
                .map(|l| l.0)
                .collect()
        }
    }
}

/// Result of promoting certain groups out of a cluster.
#[derive(Debug)]
pub struct FlushOutcome<E, F> {
    pub certain: Vec<Event<E>>,
    /// One singleton cluster per fact that became certain.
    pub fact_clusters: Vec<Cluster<E, F>>,
}

impl<E, F> Default for FlushOutcome<E, F> {
    fn default() -> Self {
        Self {
            certain: Vec::new(),
            fact_clusters: Vec::new(),
        }
    }
}

/// While the root has exactly one child, that child is certain: its events
/// leave the engine as certain events, each fact depending on it moves into a
/// singleton cluster of its own, and its children are re-parented to the root.
pub fn flush_certainties<E, F>(
    cluster: &mut Cluster<E, F>,
    ids: &mut IdAllocator,
    journal: &mut Journal<E, F>,
) -> FlushOutcome<E, F> {
    let mut outcome = FlushOutcome::default();
    let root = cluster.root;
    loop {
        let root_node = &cluster.groups[&root];
        if root_node.children.len() != 1 || root_node.leaf.is_some() {
            break;
        }
        let promoted = root_node.children[0];
        cluster.detach_from_constraints(promoted);
        let node = cluster.groups.remove(&promoted).expect("child exists");
        for e in node.events {
            let event = cluster.events.remove(&e).expect("event exists");
            journal.push(Change::EventCertain(event.clone()));
            outcome.certain.push(event);
        }
        let certain_facts: BTreeSet<FactId> = cluster
            .facts
            .values()
            .filter(|f| f.depends_on == promoted)
            .map(|f| f.id)
            .collect();
        if !certain_facts.is_empty() {
            for leaf in cluster.leaves.values_mut() {
                leaf.facts.retain(|f| !certain_facts.contains(f));
            }
            for f in certain_facts {
                let fact = cluster.facts.remove(&f).unwrap();
                outcome
                    .fact_clusters
                    .push(Cluster::singleton_fact(ids, fact));
            }
        }
        for child in &node.children {
            cluster.groups.get_mut(child).unwrap().parent = Some(root);
        }
        let root_node = cluster.groups.get_mut(&root).unwrap();
        root_node.children = node.children;
        if let Some(leaf) = node.leaf {
            root_node.leaf = Some(leaf);
            cluster.leaves.get_mut(&leaf).unwrap().group = root;
        }
    }
    outcome
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypgen::{generate_for_cluster, GeneratedHypothesis};
    use crate::ids::GenerationSerial;
    use crate::model::Fact;
    use crate::validate::validate_cluster;

    type C = Cluster<String, String>;

    fn grow(
        c: &mut C,
        ids: &mut IdAllocator,
        serial: u64,
        hyps: Vec<GeneratedHypothesis<String, String>>,
    ) {
        let mut gen = move |_: &[Event<String>], _: &[Fact<String>]| hyps.clone();
        generate_for_cluster(
            c,
            &BTreeSet::new(),
            &BTreeSet::new(),
            &mut gen,
            GenerationSerial(serial),
            ids,
            &mut Journal::new(),
        )
        .unwrap();
    }

    fn ev(name: &str, p: f64) -> GeneratedHypothesis<String, String> {
        GeneratedHypothesis::new(vec![name.to_string()], vec![], p)
    }

    fn probs(c: &C) -> Vec<f64> {
        ranked_leaves(c).into_iter().map(|l| l.1).collect()
    }

    fn three_leaves(ids: &mut IdAllocator) -> C {
        let mut c = C::new(ids);
        grow(
            &mut c,
            ids,
            1,
            vec![ev("a", 0.5), ev("b", 0.3), ev("c", 0.2)],
        );
        c
    }

    #[test]
    fn best_k_keeps_top_and_renormalizes() {
        let mut ids = IdAllocator::new();
        let mut c = three_leaves(&mut ids);
        prune(&mut c, &[PruneStrategy::BestK(2)], &mut Journal::new());
        let p = probs(&c);
        assert!((p[0] - 0.625).abs() < 1e-12 && (p[1] - 0.375).abs() < 1e-12);
        assert!(validate_cluster(&c).is_empty());
    }

    #[test]
    fn ratio_threshold_is_relative_to_best() {
        let mut ids = IdAllocator::new();
        let mut c = three_leaves(&mut ids);
        prune(
            &mut c,
            &[PruneStrategy::RatioThreshold(0.5)],
            &mut Journal::new(),
        );
        let p = probs(&c);
        assert_eq!(p.len(), 2);
        assert!((p[0] - 0.625).abs() < 1e-12 && (p[1] - 0.375).abs() < 1e-12);
    }

    #[test]
    fn best_k_ties_favour_older_leaf() {
        let mut ids = IdAllocator::new();
        let mut c = C::new(&mut ids);
        grow(&mut c, &mut ids, 1, vec![ev("a", 0.5), ev("b", 0.5)]);
        let oldest = c.leaf_ids()[0];
        prune(&mut c, &[PruneStrategy::BestK(1)], &mut Journal::new());
        assert_eq!(c.leaf_ids(), vec![oldest]);
    }

    #[test]
    fn best_one_then_flush_emits_the_whole_path() {
        let mut ids = IdAllocator::new();
        let mut c = three_leaves(&mut ids);
        grow(&mut c, &mut ids, 2, vec![ev("x", 0.9), ev("y", 0.1)]);
        prune(&mut c, &[PruneStrategy::BestK(1)], &mut Journal::new());
        assert_eq!(c.best_leaf().probability(), 1.0);
        let out = flush_certainties(&mut c, &mut ids, &mut Journal::new());
        let names: Vec<String> = out.certain.iter().map(|e| (*e.payload).clone()).collect();
        assert_eq!(names, vec!["a", "x"]);
        assert!(c.is_vacuous());
        assert!(
            validate_cluster(&c).is_empty(),
            "{:?}",
            validate_cluster(&c)
        );
    }

    #[test]
    fn flush_promotes_single_child_and_reparents_grandchildren() {
        let mut ids = IdAllocator::new();
        let mut c = C::new(&mut ids);
        grow(&mut c, &mut ids, 1, vec![ev("e", 1.0)]);
        grow(&mut c, &mut ids, 2, vec![ev("g1", 0.5), ev("g2", 0.5)]);
        let e_group = c.group(c.root()).unwrap().children()[0];
        assert!((c.group_probability(e_group) - 1.0).abs() < 1e-12);
        let out = flush_certainties(&mut c, &mut ids, &mut Journal::new());
        assert_eq!(out.certain.len(), 1);
        assert_eq!(*out.certain[0].payload, "e");
        assert_eq!(c.group(c.root()).unwrap().children().len(), 2);
        assert!(
            validate_cluster(&c).is_empty(),
            "{:?}",
            validate_cluster(&c)
        );
    }

    #[test]
    fn certain_fact_moves_to_singleton_cluster() {
        let mut ids = IdAllocator::new();
        let mut c = C::new(&mut ids);
        grow(
            &mut c,
            &mut ids,
            1,
            vec![GeneratedHypothesis::new(vec![], vec!["f".to_string()], 1.0)],
        );
        let f = c.facts().next().unwrap().id;
        let out = flush_certainties(&mut c, &mut ids, &mut Journal::new());
        assert!(out.certain.is_empty());
        assert_eq!(out.fact_clusters.len(), 1);
        let single = &out.fact_clusters[0];
        assert_eq!(single.fact(f).unwrap().depends_on, single.root());
        assert!(validate_cluster(single).is_empty());
        assert!(c.fact(f).is_none());
        assert!(c.is_vacuous());
    }

    #[test]
    fn root_with_two_children_flushes_nothing() {
        let mut ids = IdAllocator::new();
        let mut c = three_leaves(&mut ids);
        let out = flush_certainties(&mut c, &mut ids, &mut Journal::new());
        assert!(out.certain.is_empty() && out.fact_clusters.is_empty());
        assert_eq!(c.leaf_count(), 3);
    }

    #[test]
    fn flush_is_idempotent() {
        let mut ids = IdAllocator::new();
        let mut c = C::new(&mut ids);
        grow(&mut c, &mut ids, 1, vec![ev("e", 1.0)]);
        grow(&mut c, &mut ids, 2, vec![ev("g1", 0.5), ev("g2", 0.5)]);
        flush_certainties(&mut c, &mut ids, &mut Journal::new());
        let dot = crate::dot::cluster_to_dot(&c);
        let again = flush_certainties(&mut c, &mut ids, &mut Journal::new());
        assert!(again.certain.is_empty() && again.fact_clusters.is_empty());
        assert_eq!(dot, crate::dot::cluster_to_dot(&c));
    }

    #[test]
    fn depth_limit_commits_then_flush_restores_bound() {
        let mut ids = IdAllocator::new();
        let mut c = C::new(&mut ids);
        for serial in 1..=4 {
            grow(&mut c, &mut ids, serial, vec![ev("l", 0.6), ev("r", 0.4)]);
        }
        assert_eq!(c.depth(), 4);
        prune(&mut c, &[PruneStrategy::DepthLimit(2)], &mut Journal::new());
        flush_certainties(&mut c, &mut ids, &mut Journal::new());
        assert!(c.depth() <= 2);
        assert_eq!(c.leaf_count(), 4);
        assert!(
            validate_cluster(&c).is_empty(),
            "{:?}",
            validate_cluster(&c)
        );
    }
}
