//! Structural integrity checks for clusters.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::ids::{EventGroupId, EventId, FactId};
use crate::model::Cluster;

pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// Lists every broken invariant of `cluster`. Empty means well-formed.
pub fn validate_cluster<E, F>(cluster: &Cluster<E, F>) -> Vec<String> {
    let mut out = Vec::new();
    check_tree(cluster, &mut out);
    check_leaves(cluster, &mut out);
    check_constraints(cluster, &mut out);
    check_events(cluster, &mut out);
    check_facts(cluster, &mut out);
    out
}

fn check_tree<E, F>(cluster: &Cluster<E, F>, out: &mut Vec<String>) {
    let Some(root) = cluster.groups.get(&cluster.root) else {
        out.push(format!("root {} missing", cluster.root));
        return;
    };
    if root.parent.is_some() {
        out.push(format!("root {} has a parent", root.id));
    }
    for g in cluster.groups.values() {
        if g.id != cluster.root {
            match g.parent.and_then(|p| cluster.groups.get(&p)) {
                None => out.push(format!("group {} has no live parent", g.id)),
                Some(p) if !p.children.contains(&g.id) => out.push(format!(
                    "group {} missing from parent {} children",
                    g.id, p.id
                )),
                _ => {}
            }
        }
        let unique: BTreeSet<_> = g.children.iter().collect();
        if unique.len() != g.children.len() {
            out.push(format!("group {} lists a child twice", g.id));
        }
        for c in &g.children {
            match cluster.groups.get(c) {
                None => out.push(format!("group {} has dangling child {}", g.id, c)),
                Some(child) if child.parent != Some(g.id) => {
                    out.push(format!("child {} of {} points to another parent", c, g.id))
                }
                _ => {}
            }
        }
    }
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::from([cluster.root]);
    while let Some(g) = queue.pop_front() {
        if !seen.insert(g) {
            out.push(format!("group {g} reached twice: cycle or shared child"));
            continue;
        }
        if let Some(node) = cluster.groups.get(&g) {
            queue.extend(node.children.iter().copied());
        }
    }
    for g in cluster.groups.keys() {
        if !seen.contains(g) {
            out.push(format!("group {g} unreachable from root"));
        }
    }
}

fn check_leaves<E, F>(cluster: &Cluster<E, F>, out: &mut Vec<String>) {
    if cluster.leaves.is_empty() {
        out.push("cluster has no leaves".into());
        return;
    }
    for leaf in cluster.leaves.values() {
        match cluster.groups.get(&leaf.group) {
            None => out.push(format!(
                "leaf {} sits on missing group {}",
                leaf.id, leaf.group
            )),
            Some(g) => {
                if g.leaf != Some(leaf.id) {
                    out.push(format!(
                        "group {} does not point back to leaf {}",
                        g.id, leaf.id
                    ));
                }
                if !g.children.is_empty() {
                    out.push(format!("leaf {} sits on interior group {}", leaf.id, g.id));
                }
            }
        }
        if !(0.0..=1.0).contains(&leaf.probability) || !leaf.probability.is_finite() {
            out.push(format!(
                "leaf {} probability {} outside [0,1]",
                leaf.id, leaf.probability
            ));
        }
    }
    for g in cluster.groups.values() {
        match g.leaf {
            Some(l) => {
                if cluster.leaves.get(&l).map(|leaf| leaf.group) != Some(g.id) {
                    out.push(format!("group {} points to foreign leaf {}", g.id, l));
                }
            }
            None if g.children.is_empty() => out.push(format!("bottom group {} has no leaf", g.id)),
            None => {}
        }
    }
    let sum = cluster.probability_sum();
    if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
        out.push(format!(
            "normalization violated: leaf probabilities sum to {sum}"
        ));
    }
}

fn check_constraints<E, F>(cluster: &Cluster<E, F>, out: &mut Vec<String>) {
    for c in cluster.constraints.values() {
        if c.groups.is_empty() {
            out.push(format!("constraint {} is empty", c.id));
        }
        for g in &c.groups {
            match cluster.groups.get(g) {
                None => out.push(format!("constraint {} names foreign group {}", c.id, g)),
                Some(node) if !node.constraints.contains(&c.id) => {
                    out.push(format!("group {} lacks back-reference to {}", g, c.id))
                }
                _ => {}
            }
        }
        if c.groups.contains(&cluster.root) {
            out.push(format!("constraint {} contains the root", c.id));
        }
    }
    for g in cluster.groups.values() {
        for c in &g.constraints {
            if !cluster
                .constraints
                .get(c)
                .is_some_and(|constraint| constraint.groups.contains(&g.id))
            {
                out.push(format!(
                    "group {} back-references stale constraint {}",
                    g.id, c
                ));
            }
        }
        if g.id != cluster.root && g.constraints.is_empty() {
            out.push(format!("group {} belongs to no constraint", g.id));
        }
    }
}

fn check_events<E, F>(cluster: &Cluster<E, F>, out: &mut Vec<String>) {
    let mut owner: BTreeMap<EventId, EventGroupId> = BTreeMap::new();
    for g in cluster.groups.values() {
        for e in &g.events {
            if let Some(prev) = owner.insert(*e, g.id) {
                out.push(format!("event {} in groups {} and {}", e, prev, g.id));
            }
            if !cluster.events.contains_key(e) {
                out.push(format!("group {} lists missing event {}", g.id, e));
            }
        }
    }
    for e in cluster.events.keys() {
        if !owner.contains_key(e) {
            out.push(format!("event {e} belongs to no group"));
        }
    }
}

fn check_facts<E, F>(cluster: &Cluster<E, F>, out: &mut Vec<String>) {
    let mut held: BTreeSet<FactId> = BTreeSet::new();
    for leaf in cluster.leaves.values() {
        let path = cluster.path_to_root(leaf.group);
        for f in &leaf.facts {
            held.insert(*f);
            match cluster.facts.get(f) {
                None => out.push(format!("leaf {} holds missing fact {}", leaf.id, f)),
                Some(fact) if !path.contains(&fact.depends_on) => out.push(format!(
                    "fact {} in leaf {} depends on {} which is not on its path",
                    f, leaf.id, fact.depends_on
                )),
                _ => {}
            }
        }
    }
    for f in cluster.facts.keys() {
        if !held.contains(f) {
            out.push(format!("fact {f} is held by no leaf"));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ids::IdAllocator;

    #[test]
    fn fresh_cluster_is_valid() {
        let mut ids = IdAllocator::new();
        let cluster: Cluster<String, String> = Cluster::new(&mut ids);
        assert!(validate_cluster(&cluster).is_empty());
    }

    #[test]
    fn unnormalized_cluster_reports_normalization() {
        let mut ids = IdAllocator::new();
        let mut cluster: Cluster<String, String> = Cluster::new(&mut ids);
        for leaf in cluster.leaves.values_mut() {
            leaf.probability = 0.8;
        }
        let violations = validate_cluster(&cluster);
        assert_eq!(violations.len(), 1);
        assert!(violations[0].contains("normalization"));
    }

    #[test]
    fn orphan_child_is_reported() {
        let mut ids = IdAllocator::new();
        let mut cluster: Cluster<String, String> = Cluster::new(&mut ids);
        let root = cluster.root;
        let leaf = cluster.best_leaf().id;
        cluster.take_leaf(leaf);
        let child: EventGroupId = ids.fresh();
        cluster.insert_group(child, root, None, child);
        cluster.add_leaf(&mut ids, child, BTreeSet::new(), 1.0);
        // the child is in no constraint
        let violations = validate_cluster(&cluster);
        assert!(violations.iter().any(|v| v.contains("no constraint")));
    }
}
