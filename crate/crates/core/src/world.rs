//! The world: a registry of clusters plus the generation pipeline
//! (join, generate, prune, flush, split, relevance collapse).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::cluster_ops::{join_pair, split, JoinPlan, Translation};
use crate::error::{MhtError, Result};
use crate::hypgen::{generate_for_cluster, GenerationRecord, HypothesisGenerator};
use crate::ids::{ClusterId, EventId, FactId, GenerationSerial, IdAllocator};
use crate::journal::{Change, Journal};
use crate::model::{Cluster, Event, Fact, Payload};
use crate::pruning::{flush_certainties, prune, PruneStrategy};
use crate::validate::validate_cluster;

pub type CertainSink<E> = Box<dyn FnMut(&Event<E>, ClusterId) + Send>;
pub type ChangeSink<E, F> = Box<dyn FnMut(&Change<E, F>) + Send>;
/// Returns false when a cluster can never be requested again.
pub type RelevancePredicate<E, F> = Box<dyn Fn(&Cluster<E, F>) -> bool + Send>;

/// Outcome of one [`World::generate`] call.
#[derive(Debug, Clone)]
pub struct GenerateReport<E> {
    pub serial: GenerationSerial,
    /// Live clusters touched by this call, ascending.
    pub clusters: Vec<ClusterId>,
    /// Events that became certain during this call, in emission order.
    pub certain: Vec<Event<E>>,
    pub records: Vec<GenerationRecord>,
}

/// Every live event and fact, keyed by id.
#[derive(Debug)]
pub struct Snapshot<E, F> {
    pub events: BTreeMap<EventId, Event<E>>,
    pub facts: BTreeMap<FactId, Fact<F>>,
}

impl<E, F> Default for Snapshot<E, F> {
    fn default() -> Self {
        Self {
            events: BTreeMap::new(),
            facts: BTreeMap::new(),
        }
    }
}

impl<E, F> Clone for Snapshot<E, F> {
    fn clone(&self) -> Self {
        Self {
            events: self.events.clone(),
            facts: self.facts.clone(),
        }
    }
}

impl<E: Payload, F: Payload> Snapshot<E, F> {
    /// Replays one notification.
    pub fn apply(&mut self, change: &Change<E, F>) {
        match change {
            Change::EventAdded(e) => {
                self.events.insert(e.id, e.clone());
            }
            Change::EventRemoved(id) => {
                self.events.remove(id);
            }
            Change::EventCertain(e) => {
                self.events.remove(&e.id);
            }
            Change::FactAdded(f) => {
                self.facts.insert(f.id, f.clone());
            }
            Change::FactRemoved(id) => {
                self.facts.remove(id);
            }
        }
    }

    /// Same ids with byte-equal payloads.
    pub fn same_content(&self, other: &Self) -> bool {
        self.events.len() == other.events.len()
            && self.facts.len() == other.facts.len()
            && self.events.iter().all(|(id, e)| {
                other
                    .events
                    .get(id)
                    .is_some_and(|o| o.payload.encode() == e.payload.encode())
            })
            && self.facts.iter().all(|(id, f)| {
                other
                    .facts
                    .get(id)
                    .is_some_and(|o| o.payload.encode() == f.payload.encode())
            })
    }
}

pub struct World<E, F> {
    clusters: BTreeMap<ClusterId, Cluster<E, F>>,
    event_index: BTreeMap<EventId, ClusterId>,
    fact_index: BTreeMap<FactId, ClusterId>,
    strategies: Vec<PruneStrategy>,
    certain_sink: Option<CertainSink<E>>,
    change_sinks: Vec<ChangeSink<E, F>>,
    relevance: Option<RelevancePredicate<E, F>>,
    ids: IdAllocator,
    serial: u64,
    journal: Journal<E, F>,
}

impl<E, F> fmt::Debug for World<E, F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("World")
            .field("clusters", &self.clusters.len())
            .field("events", &self.event_index.len())
            .field("facts", &self.fact_index.len())
            .field("strategies", &self.strategies)
            .field("serial", &self.serial)
            .finish()
    }
}

impl<E: Payload, F: Payload> Default for World<E, F> {
    fn default() -> Self {
        Self::new(Vec::new())
    }
}

impl<E: Payload, F: Payload> World<E, F> {
    /// A world pruning with `strategies` (empty means never prune).
    pub fn new(strategies: Vec<PruneStrategy>) -> Self {
        Self {
            clusters: BTreeMap::new(),
            event_index: BTreeMap::new(),
            fact_index: BTreeMap::new(),
            strategies,
            certain_sink: None,
            change_sinks: Vec::new(),
            relevance: None,
            ids: IdAllocator::new(),
            serial: 0,
            journal: Journal::new(),
        }
    }

    pub fn set_strategies(&mut self, strategies: Vec<PruneStrategy>) {
        self.strategies = strategies;
    }

    pub fn strategies(&self) -> &[PruneStrategy] {
        &self.strategies
    }

    pub fn on_certain(&mut self, sink: impl FnMut(&Event<E>, ClusterId) + Send + 'static) {
        self.certain_sink = Some(Box::new(sink));
    }

    pub fn subscribe_changes(&mut self, sink: impl FnMut(&Change<E, F>) + Send + 'static) {
        self.change_sinks.push(Box::new(sink));
    }

    pub fn set_relevance(&mut self, predicate: impl Fn(&Cluster<E, F>) -> bool + Send + 'static) {
        self.relevance = Some(Box::new(predicate));
    }

    pub fn clusters(&self) -> impl Iterator<Item = &Cluster<E, F>> {
        self.clusters.values()
    }

    pub fn cluster(&self, id: ClusterId) -> Option<&Cluster<E, F>> {
        self.clusters.get(&id)
    }

    pub fn cluster_count(&self) -> usize {
        self.clusters.len()
    }

    pub fn cluster_of_event(&self, id: EventId) -> Option<ClusterId> {
        self.event_index.get(&id).copied()
    }

    pub fn cluster_of_fact(&self, id: FactId) -> Option<ClusterId> {
        self.fact_index.get(&id).copied()
    }

    pub fn event(&self, id: EventId) -> Option<&Event<E>> {
        self.clusters[self.event_index.get(&id)?].event(id)
    }

    pub fn fact(&self, id: FactId) -> Option<&Fact<F>> {
        self.clusters[self.fact_index.get(&id)?].fact(id)
    }

    pub fn event_count(&self) -> usize {
        self.event_index.len()
    }

    pub fn fact_count(&self) -> usize {
        self.fact_index.len()
    }

    pub fn total_leaves(&self) -> usize {
        self.clusters.values().map(Cluster::leaf_count).sum()
    }

    pub fn max_cluster_leaves(&self) -> usize {
        self.clusters
            .values()
            .map(Cluster::leaf_count)
            .max()
            .unwrap_or(0)
    }

    /// Serial of the last generation call (0 before the first).
    pub fn serial(&self) -> GenerationSerial {
        GenerationSerial(self.serial)
    }

    /// Everything the application may currently request.
    pub fn requestable_info(&self) -> Snapshot<E, F> {
        let mut snap = Snapshot::default();
        for c in self.clusters.values() {
            snap.events.extend(c.events().map(|e| (e.id, e.clone())));
            snap.facts.extend(c.facts().map(|f| (f.id, f.clone())));
        }
        snap
    }

    /// Full consistency check of every cluster and of the id indices.
    pub fn validate(&self) -> Vec<String> {
        let mut problems = Vec::new();
        let mut events = BTreeMap::new();
        let mut facts = BTreeMap::new();
        for (id, c) in &self.clusters {
            if c.id() != *id {
                problems.push(format!("{id} registered under wrong key {}", c.id()));
            }
            problems.extend(
                validate_cluster(c)
                    .into_iter()
                    .map(|p| format!("{id}: {p}")),
            );
            for e in c.events() {
                if let Some(other) = events.insert(e.id, *id) {
                    problems.push(format!("{} in both {other} and {id}", e.id));
                }
            }
            for f in c.facts() {
                if let Some(other) = facts.insert(f.id, *id) {
                    problems.push(format!("{} in both {other} and {id}", f.id));
                }
            }
            if c.is_vacuous() {
                problems.push(format!("{id} is vacuous but still registered"));
            }
        }
        if events != self.event_index {
            problems.push("event index out of sync".to_string());
        }
        if facts != self.fact_index {
            problems.push("fact index out of sync".to_string());
        }
        problems
    }

    /// Runs one generation over the clusters holding the requested ids.
    ///
    /// With nothing requested a fresh cluster is created and the generator
    /// is called once with empty inputs. On a generator error the clusters
    /// that were joined stay joined (which changes no hypothesis) and
    /// nothing else happens.
    pub fn generate(
        &mut self,
        req_events: &BTreeSet<EventId>,
        req_facts: &BTreeSet<FactId>,
        generator: &mut dyn HypothesisGenerator<E, F>,
    ) -> Result<GenerateReport<E>> {
        let mut involved = BTreeSet::new();
        for e in req_events {
            involved.insert(*self.event_index.get(e).ok_or(MhtError::UnknownEvent(*e))?);
        }
        for f in req_facts {
            involved.insert(*self.fact_index.get(f).ok_or(MhtError::UnknownFact(*f))?);
        }
        self.serial += 1;
        let serial = GenerationSerial(self.serial);
        let mut certain = Vec::new();

        let (mut cluster, translation) = self.join_stage(&involved)?;
        self.commit();

        let events = translation.events_of(req_events);
        let facts = translation.facts_of(req_facts);
        let records = match generate_for_cluster(
            &mut cluster,
            &events,
            &facts,
            generator,
            serial,
            &mut self.ids,
            &mut self.journal,
        ) {
            Ok(records) => records,
            Err(err) => {
                if !cluster.is_vacuous() {
                    self.put(cluster);
                }
                self.commit();
                return Err(err);
            }
        };
        prune(&mut cluster, &self.strategies, &mut self.journal);
        let mut touched = self.flush_into(&mut cluster, &mut certain);
        self.commit();

        for mut part in split(cluster, &mut self.ids) {
            touched.extend(self.flush_into(&mut part, &mut certain));
            if part.is_vacuous() {
                continue;
            }
            touched.push(part.id());
            self.put(part);
        }
        self.commit();

        self.collapse(&touched, &mut certain);
        self.commit();

        let clusters: BTreeSet<ClusterId> = touched
            .into_iter()
            .filter(|c| self.clusters.contains_key(c))
            .collect();
        Ok(GenerateReport {
            serial,
            clusters: clusters.into_iter().collect(),
            certain,
            records,
        })
    }

    /// Collapses every cluster the relevance predicate rejects to its best
    /// leaf and flushes it. `generate` does this for the clusters it
    /// produced; this call sweeps the whole world.
    pub fn relevance_collapse(&mut self) -> Vec<Event<E>> {
        let all: Vec<ClusterId> = self.clusters.keys().copied().collect();
        let mut certain = Vec::new();
        self.collapse(&all, &mut certain);
        self.commit();
        certain
    }

    fn collapse(&mut self, candidates: &[ClusterId], certain: &mut Vec<Event<E>>) {
        let Some(relevant) = &self.relevance else {
            return;
        };
        let doomed: Vec<ClusterId> = candidates
            .iter()
            .filter(|id| self.clusters.get(id).is_some_and(|c| !relevant(c)))
            .copied()
            .collect();
        for id in doomed {
            let mut cluster = self.take(id);
            prune(&mut cluster, &[PruneStrategy::BestK(1)], &mut self.journal);
            self.flush_into(&mut cluster, certain);
            if !cluster.is_vacuous() {
                self.put(cluster);
            }
        }
    }

    /// Joins the involved clusters into one, pruning after each pairwise
    /// join. The result is out of the registry.
    fn join_stage(
        &mut self,
        involved: &BTreeSet<ClusterId>,
    ) -> Result<(Cluster<E, F>, Translation)> {
        let mut translation = Translation::default();
        if involved.is_empty() {
            return Ok((Cluster::new(&mut self.ids), translation));
        }
        let sizes: Vec<_> = involved
            .iter()
            .map(|id| (*id, self.clusters[id].leaf_count()))
            .collect();
        let plan = JoinPlan::new(&sizes);
        let mut target = self.take(plan.target);
        for source in plan.sources {
            let source = self.take(source);
            translation.absorb(join_pair(
                &mut target,
                source,
                &mut self.ids,
                &mut self.journal,
            )?);
            prune(&mut target, &self.strategies, &mut self.journal);
        }
        Ok((target, translation))
    }

    /// Flushes certainties out of `cluster`, registering the singleton fact
    /// clusters it spawns. Returns their ids.
    fn flush_into(
        &mut self,
        cluster: &mut Cluster<E, F>,
        certain: &mut Vec<Event<E>>,
    ) -> Vec<ClusterId> {
        let outcome = flush_certainties(cluster, &mut self.ids, &mut self.journal);
        if let Some(sink) = &mut self.certain_sink {
            for e in &outcome.certain {
                sink(e, cluster.id());
            }
        }
        certain.extend(outcome.certain);
        outcome
            .fact_clusters
            .into_iter()
            .map(|c| {
                let id = c.id();
                self.put(c);
                id
            })
            .collect()
    }

    fn take(&mut self, id: ClusterId) -> Cluster<E, F> {
        let cluster = self.clusters.remove(&id).expect("registered cluster");
        for e in cluster.events() {
            self.event_index.remove(&e.id);
        }
        for f in cluster.facts() {
            self.fact_index.remove(&f.id);
        }
        cluster
    }

    fn put(&mut self, cluster: Cluster<E, F>) {
        let id = cluster.id();
        for e in cluster.events() {
            self.event_index.insert(e.id, id);
        }
        for f in cluster.facts() {
            self.fact_index.insert(f.id, id);
        }
        self.clusters.insert(id, cluster);
    }

    /// Ends a pipeline stage: delivers its net changes.
    fn commit(&mut self) {
        if self.journal.is_empty() {
            return;
        }
        let changes = self.journal.drain_net();
        for sink in &mut self.change_sinks {
            for change in &changes {
                sink(change);
            }
        }
    }
}
