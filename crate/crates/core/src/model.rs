//! Identifier-based data model of one hypothesis tree.
//!
//! A [`Cluster`] owns its event groups, events, facts, leaves and constraints
//! in id-keyed maps. Nodes refer to each other only by id, so deep copies,
//! re-parenting and splitting never fight the borrow checker and iteration
//! order is always id (creation) order.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::ids::{
    ClusterId, ConstraintId, EventGroupId, EventId, FactId, GenerationSerial, IdAllocator, LeafId,
};
use crate::journal::{Change, Journal};

/// Application data carried by events and facts.
///
/// The engine never looks inside a payload. `encode` gives the canonical byte
/// form used when comparing hypotheses produced by different systems.
pub trait Payload: fmt::Debug + Send + Sync + 'static {
    fn encode(&self) -> Vec<u8>;

    fn timestamp(&self) -> Option<i64> {
        None
    }
}

impl Payload for Vec<u8> {
    fn encode(&self) -> Vec<u8> {
        self.clone()
    }
}

impl Payload for String {
    fn encode(&self) -> Vec<u8> {
        self.as_bytes().to_vec()
    }
}

/// A piece of (possibly) true world history.
#[derive(Debug)]
pub struct Event<E> {
    pub id: EventId,
    pub payload: Arc<E>,
    pub timestamp: Option<i64>,
    /// Generation call that produced the event.
    pub generation: Option<GenerationSerial>,
}

impl<E> Clone for Event<E> {
    fn clone(&self) -> Self {
        Self {
            id: self.id,
            payload: Arc::clone(&self.payload),
            timestamp: self.timestamp,
            generation: self.generation,
        }
    }
}

/// A current-state assertion. Lives in leaves; `depends_on` names the event
/// group whose probability it shares.
#[derive(Debug)]
pub struct Fact<F> {
    pub id: FactId,
    pub payload: Arc<F>,
    pub depends_on: EventGroupId,
}

impl<F> Clone for Fact<F> {
    fn clone(&self) -> Self {
        Self {
            id: self.id,
            payload: Arc::clone(&self.payload),
            depends_on: self.depends_on,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EventGroup {
    pub(crate) id: EventGroupId,
    pub(crate) events: Vec<EventId>,
    pub(crate) parent: Option<EventGroupId>,
    pub(crate) children: Vec<EventGroupId>,
    pub(crate) leaf: Option<LeafId>,
    pub(crate) generation: Option<GenerationSerial>,
    /// Id of the group this one was (transitively) cloned from, or its own id.
    pub(crate) origin: EventGroupId,
    pub(crate) constraints: BTreeSet<ConstraintId>,
}

impl EventGroup {
    pub fn id(&self) -> EventGroupId {
        self.id
    }
    pub fn events(&self) -> &[EventId] {
        &self.events
    }
    pub fn parent(&self) -> Option<EventGroupId> {
        self.parent
    }
    pub fn children(&self) -> &[EventGroupId] {
        &self.children
    }
    pub fn leaf(&self) -> Option<LeafId> {
        self.leaf
    }
    pub fn generation(&self) -> Option<GenerationSerial> {
        self.generation
    }
    pub fn origin(&self) -> EventGroupId {
        self.origin
    }
    pub fn constraints(&self) -> &BTreeSet<ConstraintId> {
        &self.constraints
    }
}

#[derive(Debug, Clone)]
pub struct Leaf {
    pub(crate) id: LeafId,
    pub(crate) group: EventGroupId,
    pub(crate) facts: BTreeSet<FactId>,
    pub(crate) probability: f64,
}

impl Leaf {
    pub fn id(&self) -> LeafId {
        self.id
    }
    pub fn group(&self) -> EventGroupId {
        self.group
    }
    pub fn facts(&self) -> &BTreeSet<FactId> {
        &self.facts
    }
    pub fn probability(&self) -> f64 {
        self.probability
    }
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub(crate) id: ConstraintId,
    pub(crate) groups: BTreeSet<EventGroupId>,
}

impl Constraint {
    pub fn id(&self) -> ConstraintId {
        self.id
    }
    pub fn groups(&self) -> &BTreeSet<EventGroupId> {
        &self.groups
    }
}

/// Id translation produced by [`Cluster::clone_fresh`].
#[derive(Debug, Clone, Default)]
pub struct CloneMap {
    pub groups: BTreeMap<EventGroupId, EventGroupId>,
    pub events: BTreeMap<EventId, EventId>,
    pub facts: BTreeMap<FactId, FactId>,
    pub leaves: BTreeMap<LeafId, LeafId>,
    /// `(source, copy)` pairs in source constraint order.
    pub constraints: Vec<(ConstraintId, ConstraintId)>,
}

/// One hypothesis tree.
#[derive(Debug)]
pub struct Cluster<E, F> {
    pub(crate) id: ClusterId,
    pub(crate) root: EventGroupId,
    pub(crate) groups: BTreeMap<EventGroupId, EventGroup>,
    pub(crate) events: BTreeMap<EventId, Event<E>>,
    pub(crate) facts: BTreeMap<FactId, Fact<F>>,
    pub(crate) leaves: BTreeMap<LeafId, Leaf>,
    pub(crate) constraints: BTreeMap<ConstraintId, Constraint>,
}

impl<E, F> Clone for Cluster<E, F> {
    fn clone(&self) -> Self {
        Self {
            id: self.id,
            root: self.root,
            groups: self.groups.clone(),
            events: self.events.clone(),
            facts: self.facts.clone(),
            leaves: self.leaves.clone(),
            constraints: self.constraints.clone(),
        }
    }
}

impl<E, F> Cluster<E, F> {
    /// A cluster holding a single empty root group and one certain leaf.
    pub fn new(ids: &mut IdAllocator) -> Self {
        let id = ids.fresh();
        let root = ids.fresh();
        let mut cluster = Self::bare(id, root);
        cluster.add_leaf(ids, root, BTreeSet::new(), 1.0);
        cluster
    }

    /// A cluster whose only content is `fact`, re-associated with the root.
    pub(crate) fn singleton_fact(ids: &mut IdAllocator, mut fact: Fact<F>) -> Self {
        let id = ids.fresh();
        let root = ids.fresh();
        let mut cluster = Self::bare(id, root);
        fact.depends_on = root;
        let fact_id = fact.id;
        cluster.facts.insert(fact_id, fact);
        cluster.add_leaf(ids, root, BTreeSet::from([fact_id]), 1.0);
        cluster
    }

    pub(crate) fn bare(id: ClusterId, root: EventGroupId) -> Self {
        let mut groups = BTreeMap::new();
        groups.insert(
            root,
            EventGroup {
                id: root,
                events: Vec::new(),
                parent: None,
                children: Vec::new(),
                leaf: None,
                generation: None,
                origin: root,
                constraints: BTreeSet::new(),
            },
        );
        Self {
            id,
            root,
            groups,
            events: BTreeMap::new(),
            facts: BTreeMap::new(),
            leaves: BTreeMap::new(),
            constraints: BTreeMap::new(),
        }
    }

    pub fn id(&self) -> ClusterId {
        self.id
    }
    pub fn root(&self) -> EventGroupId {
        self.root
    }
    pub fn group(&self, id: EventGroupId) -> Option<&EventGroup> {
        self.groups.get(&id)
    }
    pub fn groups(&self) -> impl Iterator<Item = &EventGroup> {
        self.groups.values()
    }
    pub fn event(&self, id: EventId) -> Option<&Event<E>> {
        self.events.get(&id)
    }
    pub fn events(&self) -> impl Iterator<Item = &Event<E>> {
        self.events.values()
    }
    pub fn fact(&self, id: FactId) -> Option<&Fact<F>> {
        self.facts.get(&id)
    }
    pub fn facts(&self) -> impl Iterator<Item = &Fact<F>> {
        self.facts.values()
    }
    pub fn leaf(&self, id: LeafId) -> Option<&Leaf> {
        self.leaves.get(&id)
    }
    pub fn leaves(&self) -> impl Iterator<Item = &Leaf> {
        self.leaves.values()
    }
    pub fn leaf_ids(&self) -> Vec<LeafId> {
        self.leaves.keys().copied().collect()
    }
    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }
    pub fn constraint(&self, id: ConstraintId) -> Option<&Constraint> {
        self.constraints.get(&id)
    }
    pub fn constraints(&self) -> impl Iterator<Item = &Constraint> {
        self.constraints.values()
    }

    /// `group` followed by its ancestors up to and including the root.
    pub fn path_to_root(&self, group: EventGroupId) -> Vec<EventGroupId> {
        let mut path = Vec::new();
        let mut cursor = Some(group);
        while let Some(g) = cursor {
            path.push(g);
            cursor = self.groups.get(&g).and_then(|node| node.parent);
        }
        path
    }

    /// Events on the path from the leaf to the root, bottom first.
    pub fn leaf_events(&self, leaf: &Leaf) -> Vec<&Event<E>> {
        self.path_to_root(leaf.group)
            .into_iter()
            .flat_map(|g| self.groups[&g].events.iter())
            .map(|e| &self.events[e])
            .collect()
    }

    pub fn leaf_facts<'a>(&'a self, leaf: &'a Leaf) -> impl Iterator<Item = &'a Fact<F>> + 'a {
        leaf.facts.iter().map(move |f| &self.facts[f])
    }

    pub fn probability_sum(&self) -> f64 {
        self.leaves.values().map(|l| l.probability).sum()
    }

    /// Most probable leaf; ties go to the older (smaller id) leaf.
    pub fn best_leaf(&self) -> &Leaf {
        self.leaves
            .values()
            .fold(None::<&Leaf>, |best, leaf| match best {
                Some(b) if b.probability >= leaf.probability => Some(b),
                _ => Some(leaf),
            })
            .expect("cluster has at least one leaf")
    }

    /// Depth of a group in edges from the root.
    pub fn group_depth(&self, group: EventGroupId) -> usize {
        self.path_to_root(group).len() - 1
    }

    /// Deepest leaf, in event-group edges from the root.
    pub fn depth(&self) -> usize {
        self.leaves
            .values()
            .map(|l| self.group_depth(l.group))
            .max()
            .unwrap_or(0)
    }

    /// Probability mass of all leaves below (or at) `group`.
    pub fn group_probability(&self, group: EventGroupId) -> f64 {
        self.leaves
            .values()
            .filter(|l| self.path_to_root(l.group).contains(&group))
            .map(|l| l.probability)
            .sum()
    }

    pub fn event_probability(&self, event: EventId) -> Option<f64> {
        self.groups
            .values()
            .find(|g| g.events.contains(&event))
            .map(|g| self.group_probability(g.id))
    }

    /// True when the cluster carries no information at all.
    pub fn is_vacuous(&self) -> bool {
        self.groups.len() == 1 && self.events.is_empty() && self.facts.is_empty()
    }

    pub fn normalize(&mut self) {
        let total = self.probability_sum();
        if total > 0.0 && total.is_finite() {
            for leaf in self.leaves.values_mut() {
                leaf.probability /= total;
            }
        } else if !self.leaves.is_empty() {
            let uniform = 1.0 / self.leaves.len() as f64;
            for leaf in self.leaves.values_mut() {
                leaf.probability = uniform;
            }
        }
    }

    pub(crate) fn insert_group(
        &mut self,
        id: EventGroupId,
        parent: EventGroupId,
        generation: Option<GenerationSerial>,
        origin: EventGroupId,
    ) {
        self.groups.insert(
            id,
            EventGroup {
                id,
                events: Vec::new(),
                parent: Some(parent),
                children: Vec::new(),
                leaf: None,
                generation,
                origin,
                constraints: BTreeSet::new(),
            },
        );
        self.groups
            .get_mut(&parent)
            .expect("parent group exists")
            .children
            .push(id);
    }

    pub(crate) fn insert_event(&mut self, group: EventGroupId, event: Event<E>) {
        self.groups
            .get_mut(&group)
            .expect("group exists")
            .events
            .push(event.id);
        self.events.insert(event.id, event);
    }

    pub(crate) fn add_leaf(
        &mut self,
        ids: &mut IdAllocator,
        group: EventGroupId,
        facts: BTreeSet<FactId>,
        probability: f64,
    ) -> LeafId {
        let id = ids.fresh();
        self.insert_leaf(Leaf {
            id,
            group,
            facts,
            probability,
        });
        id
    }

    pub(crate) fn insert_leaf(&mut self, leaf: Leaf) {
        let node = self.groups.get_mut(&leaf.group).expect("leaf group exists");
        debug_assert!(node.leaf.is_none(), "one leaf per bottom group");
        node.leaf = Some(leaf.id);
        self.leaves.insert(leaf.id, leaf);
    }

    pub(crate) fn take_leaf(&mut self, id: LeafId) -> Option<Leaf> {
        let leaf = self.leaves.remove(&id)?;
        if let Some(node) = self.groups.get_mut(&leaf.group) {
            node.leaf = None;
        }
        Some(leaf)
    }

    /// Adds a constraint over `groups`; nothing is created for an empty set.
    pub(crate) fn add_constraint(
        &mut self,
        ids: &mut IdAllocator,
        groups: impl IntoIterator<Item = EventGroupId>,
    ) -> Option<ConstraintId> {
        let groups: BTreeSet<_> = groups.into_iter().collect();
        if groups.is_empty() {
            return None;
        }
        let id = ids.fresh();
        self.insert_constraint(Constraint { id, groups });
        Some(id)
    }

    pub(crate) fn insert_constraint(&mut self, constraint: Constraint) {
        for g in &constraint.groups {
            self.groups
                .get_mut(g)
                .expect("constraint member exists")
                .constraints
                .insert(constraint.id);
        }
        self.constraints.insert(constraint.id, constraint);
    }

    /// Removes `group` from every constraint; constraints left empty are deleted.
    pub(crate) fn detach_from_constraints(&mut self, group: EventGroupId) {
        let Some(node) = self.groups.get_mut(&group) else {
            return;
        };
        for c in std::mem::take(&mut node.constraints) {
            let constraint = self
                .constraints
                .get_mut(&c)
                .expect("back-index is coherent");
            constraint.groups.remove(&group);
            if constraint.groups.is_empty() {
                self.constraints.remove(&c);
            }
        }
    }

    /// Deletes a childless, leafless group together with its events.
    pub(crate) fn remove_group(&mut self, group: EventGroupId, journal: &mut Journal<E, F>) {
        self.detach_from_constraints(group);
        let node = self.groups.remove(&group).expect("group exists");
        debug_assert!(node.children.is_empty() && node.leaf.is_none());
        if let Some(parent) = node.parent.and_then(|p| self.groups.get_mut(&p)) {
            parent.children.retain(|c| *c != group);
        }
        for e in node.events {
            self.events.remove(&e);
            journal.push(Change::EventRemoved(e));
        }
    }

    /// Drops facts no longer held by any leaf.
    pub(crate) fn sweep_orphan_facts(&mut self, journal: &mut Journal<E, F>) {
        let held: BTreeSet<FactId> = self
            .leaves
            .values()
            .flat_map(|l| l.facts.iter().copied())
            .collect();
        let orphans: Vec<FactId> = self
            .facts
            .keys()
            .filter(|f| !held.contains(f))
            .copied()
            .collect();
        for f in orphans {
            self.facts.remove(&f);
            journal.push(Change::FactRemoved(f));
        }
    }

    /// Deep copy with fresh ids for every node, event, fact, leaf and
    /// constraint. Payloads are shared. The copy's cluster id is fresh too.
    pub fn clone_fresh(&self, ids: &mut IdAllocator) -> (Self, CloneMap) {
        let mut map = CloneMap::default();
        for g in self.groups.keys() {
            map.groups.insert(*g, ids.fresh());
        }
        for e in self.events.keys() {
            map.events.insert(*e, ids.fresh());
        }
        for f in self.facts.keys() {
            map.facts.insert(*f, ids.fresh());
        }
        for l in self.leaves.keys() {
            map.leaves.insert(*l, ids.fresh());
        }
        for c in self.constraints.keys() {
            map.constraints.push((*c, ids.fresh()));
        }
        let constraint_map: BTreeMap<_, _> = map.constraints.iter().copied().collect();

        let groups = self
            .groups
            .values()
            .map(|g| {
                let copy = EventGroup {
                    id: map.groups[&g.id],
                    events: g.events.iter().map(|e| map.events[e]).collect(),
                    parent: g.parent.map(|p| map.groups[&p]),
                    children: g.children.iter().map(|c| map.groups[c]).collect(),
                    leaf: g.leaf.map(|l| map.leaves[&l]),
                    generation: g.generation,
                    origin: g.origin,
                    constraints: g.constraints.iter().map(|c| constraint_map[c]).collect(),
                };
                (copy.id, copy)
            })
            .collect();
        let events = self
            .events
            .values()
            .map(|e| {
                let id = map.events[&e.id];
                (id, Event { id, ..e.clone() })
            })
            .collect();
        let facts = self
            .facts
            .values()
            .map(|f| {
                let id = map.facts[&f.id];
                (
                    id,
                    Fact {
                        id,
                        payload: Arc::clone(&f.payload),
                        depends_on: map.groups[&f.depends_on],
                    },
                )
            })
            .collect();
        let leaves = self
            .leaves
            .values()
            .map(|l| {
                let id = map.leaves[&l.id];
                (
                    id,
                    Leaf {
                        id,
                        group: map.groups[&l.group],
                        facts: l.facts.iter().map(|f| map.facts[f]).collect(),
                        probability: l.probability,
                    },
                )
            })
            .collect();
        let constraints = self
            .constraints
            .values()
            .map(|c| {
                let id = constraint_map[&c.id];
                (
                    id,
                    Constraint {
                        id,
                        groups: c.groups.iter().map(|g| map.groups[g]).collect(),
                    },
                )
            })
            .collect();
        let copy = Self {
            id: ids.fresh(),
            root: map.groups[&self.root],
            groups,
            events,
            facts,
            leaves,
            constraints,
        };
        (copy, map)
    }
}
