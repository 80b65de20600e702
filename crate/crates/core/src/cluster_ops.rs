//! Structural operations on clusters: joining, constraint unification, leaf
//! removal and splitting into independent clusters.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet};

use crate::error::{MhtError, Result};
use crate::ids::{ClusterId, ConstraintId, EventGroupId, EventId, FactId, IdAllocator, LeafId};
use crate::journal::{Change, Journal};
use crate::model::{Cluster, EventGroup, Leaf};
use crate::union_find::UnionFind;

/// Which clusters take part in a join, in processing order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JoinPlan {
    pub target: ClusterId,
    pub sources: Vec<ClusterId>,
}

impl JoinPlan {
    /// Target is the cluster with most leaves; sources follow in ascending
    /// leaf count. Ties go to the smaller cluster id. `clusters` holds
    /// `(id, leaf count)` pairs and must be non-empty.
    pub fn new(clusters: &[(ClusterId, usize)]) -> Self {
        let mut order = clusters.to_vec();
        order.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        order.dedup_by_key(|c| c.0);
        let target = order[0].0;
        let mut sources: Vec<_> = order[1..].to_vec();
        sources.sort_by(|a, b| a.1.cmp(&b.1).then(a.0.cmp(&b.0)));
        Self {
            target,
            sources: sources.into_iter().map(|c| c.0).collect(),
        }
    }
}

/// Where the events and facts of a consumed cluster went.
#[derive(Debug, Clone, Default)]
pub struct Translation {
    pub events: BTreeMap<EventId, Vec<EventId>>,
    pub facts: BTreeMap<FactId, Vec<FactId>>,
}

impl Translation {
    pub fn absorb(&mut self, other: Translation) {
        for (k, v) in other.events {
            self.events.entry(k).or_default().extend(v);
        }
        for (k, v) in other.facts {
            self.facts.entry(k).or_default().extend(v);
        }
    }

    /// Replaces every translated id by its copies; untranslated ids pass through.
    pub fn events_of(&self, requested: &BTreeSet<EventId>) -> BTreeSet<EventId> {
        requested
            .iter()
            .flat_map(|e| match self.events.get(e) {
                Some(copies) => copies.clone(),
                None => vec![*e],
            })
            .collect()
    }

    pub fn facts_of(&self, requested: &BTreeSet<FactId>) -> BTreeSet<FactId> {
        requested
            .iter()
            .flat_map(|f| match self.facts.get(f) {
                Some(copies) => copies.clone(),
                None => vec![*f],
            })
            .collect()
    }
}

/// Grafts one copy of `source` below every leaf of `target`.
///
/// Each new leaf carries the facts of the target leaf it descends from and
/// the product of both leaf probabilities. Constraints of the copies are
/// merged index-wise by [`unify_constraints`]. A source root that carries no
/// events and no facts is elided: its children hang directly below the target
/// leaf's group. A root that does carry content is kept, and all its copies
/// are tied by one extra constraint. `source` is consumed.
pub fn join_pair<E, F>(
    target: &mut Cluster<E, F>,
    source: Cluster<E, F>,
    ids: &mut IdAllocator,
    journal: &mut Journal<E, F>,
) -> Result<Translation> {
    let mut translation = Translation::default();
    let keep_root = !source.groups[&source.root].events.is_empty()
        || source.facts.values().any(|f| f.depends_on == source.root);
    for e in source.events.keys() {
        journal.push(Change::EventRemoved(*e));
    }
    for f in source.facts.keys() {
        journal.push(Change::FactRemoved(*f));
    }

    let anchors: Vec<Leaf> = target.leaves.values().cloned().collect();
    let mut clone_constraints: Vec<Vec<BTreeSet<EventGroupId>>> = Vec::with_capacity(anchors.len());
    let mut clone_roots = Vec::new();

    for anchor in anchors {
        let (copy, map) = source.clone_fresh(ids);
        for (old, new) in &map.events {
            translation.events.entry(*old).or_default().push(*new);
        }
        for (old, new) in &map.facts {
            translation.facts.entry(*old).or_default().push(*new);
        }
        target.take_leaf(anchor.id);

        let copy_root = copy.root;
        let place = |g: EventGroupId| {
            if !keep_root && g == copy_root {
                anchor.group
            } else {
                g
            }
        };
        clone_constraints.push(
            map.constraints
                .iter()
                .map(|(_, c)| copy.constraints[c].groups.clone())
                .collect(),
        );

        let Cluster {
            groups,
            events,
            facts,
            leaves,
            ..
        } = copy;
        for (gid, mut group) in groups {
            group.constraints.clear();
            if gid == copy_root {
                if keep_root {
                    group.parent = Some(anchor.group);
                    target
                        .groups
                        .get_mut(&anchor.group)
                        .unwrap()
                        .children
                        .push(gid);
                    group.leaf = None;
                    target.groups.insert(gid, group);
                    clone_roots.push(gid);
                } else {
                    let children = group.children.clone();
                    target
                        .groups
                        .get_mut(&anchor.group)
                        .unwrap()
                        .children
                        .extend(children);
                }
                continue;
            }
            group.parent = group.parent.map(place);
            group.leaf = None;
            target.groups.insert(gid, group);
        }
        for (id, event) in events {
            journal.push(Change::EventAdded(event.clone()));
            target.events.insert(id, event);
        }
        for (id, mut fact) in facts {
            fact.depends_on = place(fact.depends_on);
            journal.push(Change::FactAdded(fact.clone()));
            target.facts.insert(id, fact);
        }
        for (_, mut leaf) in leaves {
            leaf.group = place(leaf.group);
            leaf.facts.extend(anchor.facts.iter().copied());
            leaf.probability *= anchor.probability;
            target.insert_leaf(leaf);
        }
    }

    unify_constraints(target, &clone_constraints, ids)?;
    if keep_root {
        target.add_constraint(ids, clone_roots);
    }
    target.normalize();
    Ok(translation)
}

/// For every constraint index of the cloned source, adds one constraint to
/// `target` holding the union over all clones of that constraint's groups.
/// `clones[k][i]` is the member set of the i-th constraint of clone k.
pub fn unify_constraints<E, F>(
    target: &mut Cluster<E, F>,
    clones: &[Vec<BTreeSet<EventGroupId>>],
    ids: &mut IdAllocator,
) -> Result<Vec<ConstraintId>> {
    let Some(first) = clones.first() else {
        return Ok(Vec::new());
    };
    if let Some(bad) = clones.iter().find(|c| c.len() != first.len()) {
        return Err(MhtError::MismatchedClones {
            expected: first.len(),
            found: bad.len(),
        });
    }
    let mut created = Vec::with_capacity(first.len());
    for i in 0..first.len() {
        let members = clones.iter().flat_map(|c| c[i].iter().copied());
        if let Some(id) = target.add_constraint(ids, members) {
            created.push(id);
        }
    }
    Ok(created)
}

/// Removes a leaf, then every ancestor left without children (stopping at the
/// root). Empty constraints vanish, orphaned facts are dropped and the
/// survivors are renormalized.
pub fn remove_leaf<E, F>(
    cluster: &mut Cluster<E, F>,
    leaf: LeafId,
    journal: &mut Journal<E, F>,
) -> Result<()> {
    if !cluster.leaves.contains_key(&leaf) {
        return Err(MhtError::UnknownLeaf(leaf));
    }
    if cluster.leaves.len() == 1 {
        return Err(MhtError::LastLeaf(leaf));
    }
    remove_leaf_unnormalized(cluster, leaf, journal);
    cluster.sweep_orphan_facts(journal);
    cluster.normalize();
    Ok(())
}

pub(crate) fn remove_leaf_unnormalized<E, F>(
    cluster: &mut Cluster<E, F>,
    leaf: LeafId,
    journal: &mut Journal<E, F>,
) {
    let Some(leaf) = cluster.take_leaf(leaf) else {
        return;
    };
    let mut cursor = leaf.group;
    while cursor != cluster.root {
        let node = &cluster.groups[&cursor];
        if !node.children.is_empty() || node.leaf.is_some() {
            break;
        }
        let parent = node.parent.expect("non-root group has a parent");
        cluster.remove_group(cursor, journal);
        cursor = parent;
    }
}

/// Groups constraint indices into connected components of the overlap graph
/// (two constraints touch when they share an event group).
pub fn constraint_components<E, F>(cluster: &Cluster<E, F>) -> Vec<Vec<ConstraintId>> {
    let constraints: Vec<_> = cluster.constraints.values().collect();
    let mut uf = UnionFind::new(constraints.len());
    let mut owner: BTreeMap<EventGroupId, usize> = BTreeMap::new();
    for (i, c) in constraints.iter().enumerate() {
        for g in &c.groups {
            match owner.entry(*g) {
                Entry::Occupied(o) => {
                    uf.union(i, *o.get());
                }
                Entry::Vacant(v) => {
                    v.insert(i);
                }
            }
        }
    }
    uf.groups()
        .into_iter()
        .map(|members| members.into_iter().map(|i| constraints[i].id).collect())
        .collect()
}

/// Splits a cluster along the connected components of its constraints.
///
/// With at most one component the cluster comes back untouched. Otherwise
/// each component becomes a cluster holding the component's groups (each
/// re-parented to its nearest kept ancestor), their events, the facts
/// depending on them and the component's constraints. Every original leaf is
/// projected onto its nearest kept ancestor-or-self; leaves that land on the
/// same group are merged by summing probability. Components without any event
/// or fact carry no information and are dropped. Facts depending on the root
/// are certain and each get a singleton cluster. Event, fact, group and
/// constraint ids are preserved; clusters, roots and leaves are fresh.
pub fn split<E, F>(cluster: Cluster<E, F>, ids: &mut IdAllocator) -> Vec<Cluster<E, F>> {
    let components = constraint_components(&cluster);
    if components.len() <= 1 {
        return vec![cluster];
    }

    let mut out = Vec::with_capacity(components.len());
    for component in &components {
        let kept: BTreeSet<EventGroupId> = component
            .iter()
            .flat_map(|c| cluster.constraints[c].groups.iter().copied())
            .collect();
        let has_content = kept.iter().any(|g| !cluster.groups[g].events.is_empty())
            || cluster.facts.values().any(|f| kept.contains(&f.depends_on));
        if !has_content {
            continue;
        }
        out.push(project(&cluster, component, &kept, ids));
    }
    for fact in cluster.facts.values() {
        if fact.depends_on == cluster.root {
            out.push(Cluster::singleton_fact(ids, fact.clone()));
        }
    }
    out
}

fn project<E, F>(
    cluster: &Cluster<E, F>,
    component: &[ConstraintId],
    kept: &BTreeSet<EventGroupId>,
    ids: &mut IdAllocator,
) -> Cluster<E, F> {
    let mut part = Cluster::bare(ids.fresh(), ids.fresh());
    let new_root = part.root;
    let nearest_kept = |mut g: EventGroupId| loop {
        if kept.contains(&g) {
            return g;
        }
        match cluster.groups[&g].parent {
            Some(p) => g = p,
            None => return new_root,
        }
    };

    for g in kept {
        let node = &cluster.groups[g];
        let parent = node.parent.map(nearest_kept).unwrap_or(new_root);
        part.groups.insert(
            *g,
            EventGroup {
                id: *g,
                events: node.events.clone(),
                parent: Some(parent),
                children: Vec::new(),
                leaf: None,
                generation: node.generation,
                origin: node.origin,
                constraints: node.constraints.clone(),
            },
        );
        for e in &node.events {
            part.events.insert(*e, cluster.events[e].clone());
        }
    }
    for g in kept {
        let parent = part.groups[g].parent.unwrap();
        part.groups.get_mut(&parent).unwrap().children.push(*g);
    }
    for c in component {
        part.constraints.insert(*c, cluster.constraints[c].clone());
    }
    for fact in cluster.facts.values() {
        if kept.contains(&fact.depends_on) {
            part.facts.insert(fact.id, fact.clone());
        }
    }
    for leaf in cluster.leaves.values() {
        let at = nearest_kept(leaf.group);
        match part.groups[&at].leaf {
            Some(existing) => {
                let merged = part.leaves.get_mut(&existing).unwrap();
                merged.probability += leaf.probability;
            }
            None => {
                let facts = leaf
                    .facts
                    .iter()
                    .filter(|f| part.facts.contains_key(f))
                    .copied()
                    .collect();
                part.add_leaf(ids, at, facts, leaf.probability);
            }
        }
    }
    part.normalize();
    part
}
