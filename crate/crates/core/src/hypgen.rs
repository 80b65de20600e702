//! Hypothesis generation: asks the application for hypotheses once per leaf
//! and wires the results into the tree together with the two kinds of
//! clustering constraints.
//!
//! For every leaf the provided sets are the requested events on the leaf's
//! path and the requested facts held by the leaf. One constraint per leaf ties
//! the groups that hold that provided information to the groups born from the
//! leaf (premise dependency). One constraint per call ties every group the
//! call created (one-of-N exclusivity).

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::error::{MhtError, Result};
use crate::ids::{
    ConstraintId, EventGroupId, EventId, FactId, GenerationSerial, IdAllocator, LeafId,
};
use crate::journal::{Change, Journal};
use crate::model::{Cluster, Event, Fact, Leaf, Payload};

/// One interpretation returned by the application for one leaf.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedHypothesis<E, F> {
    pub events: Vec<E>,
    pub facts: Vec<F>,
    /// Non-negative, unnormalized weight.
    pub probability: f64,
}

impl<E, F> GeneratedHypothesis<E, F> {
    pub fn new(events: Vec<E>, facts: Vec<F>, probability: f64) -> Self {
        Self {
            events,
            facts,
            probability,
        }
    }

    /// "Nothing happened" with the given weight.
    pub fn empty(probability: f64) -> Self {
        Self::new(Vec::new(), Vec::new(), probability)
    }
}

/// Application callback producing hypotheses from the information true in
/// one leaf. Must be deterministic in the provided payloads and must not
/// call back into the engine.
pub trait HypothesisGenerator<E, F> {
    fn generate(
        &mut self,
        events: &[Event<E>],
        facts: &[Fact<F>],
    ) -> Vec<GeneratedHypothesis<E, F>>;
}

impl<E, F, T> HypothesisGenerator<E, F> for T
where
    T: FnMut(&[Event<E>], &[Fact<F>]) -> Vec<GeneratedHypothesis<E, F>>,
{
    fn generate(
        &mut self,
        events: &[Event<E>],
        facts: &[Fact<F>],
    ) -> Vec<GeneratedHypothesis<E, F>> {
        self(events, facts)
    }
}

/// What happened for one leaf during a generation call.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRecord {
    pub serial: GenerationSerial,
    pub leaf: LeafId,
    pub leaf_probability: f64,
    pub provided_events: Vec<EventId>,
    pub provided_facts: Vec<FactId>,
    pub produced_groups: Vec<EventGroupId>,
    pub raw_probabilities: Vec<f64>,
    /// Origins of every group in the leaf's premise constraint.
    pub premise_origins: Vec<EventGroupId>,
    pub premise_constraint: Option<ConstraintId>,
}

/// Checks one generator answer; zero-weight hypotheses are legal but dropped.
pub fn check_generation<E, F>(leaf: LeafId, hyps: &[GeneratedHypothesis<E, F>]) -> Result<()> {
    if hyps.is_empty() {
        return Err(MhtError::EmptyGeneration { leaf });
    }
    if let Some(bad) = hyps
        .iter()
        .find(|h| !h.probability.is_finite() || h.probability < 0.0)
    {
        return Err(MhtError::InvalidProbability {
            leaf,
            value: bad.probability,
        });
    }
    if hyps.iter().all(|h| h.probability == 0.0) {
        return Err(MhtError::ZeroMass { leaf });
    }
    Ok(())
}

struct Pending<E, F> {
    leaf: Leaf,
    premise_groups: BTreeSet<EventGroupId>,
    provided_events: Vec<EventId>,
    provided_facts: BTreeSet<FactId>,
    hyps: Vec<GeneratedHypothesis<E, F>>,
}

/// Runs one generation over every leaf of `cluster`, in leaf-id order.
///
/// All generator calls happen before the tree is touched, so an error leaves
/// the cluster unchanged. Leaf probabilities are normalized on return;
/// pruning is the caller's business.
pub fn generate_for_cluster<E: Payload, F: Payload>(
    cluster: &mut Cluster<E, F>,
    req_events: &BTreeSet<EventId>,
    req_facts: &BTreeSet<FactId>,
    generator: &mut dyn HypothesisGenerator<E, F>,
    serial: GenerationSerial,
    ids: &mut IdAllocator,
    journal: &mut Journal<E, F>,
) -> Result<Vec<GenerationRecord>> {
    let leaves: Vec<Leaf> = cluster.leaves.values().cloned().collect();
    let mut pending = Vec::with_capacity(leaves.len());
    for leaf in leaves {
        let mut premise_groups = BTreeSet::new();
        let mut events = Vec::new();
        for g in cluster.path_to_root(leaf.group) {
            for e in &cluster.groups[&g].events {
                if req_events.contains(e) {
                    events.push(cluster.events[e].clone());
                    premise_groups.insert(g);
                }
            }
        }
        events.sort_by_key(|e| e.id);
        let facts: Vec<Fact<F>> = leaf
            .facts
            .intersection(req_facts)
            .map(|f| cluster.facts[f].clone())
            .collect();
        premise_groups.extend(
            facts
                .iter()
                .map(|f| f.depends_on)
                .filter(|g| *g != cluster.root),
        );
        let hyps = generator.generate(&events, &facts);
        check_generation(leaf.id, &hyps)?;
        pending.push(Pending {
            premise_groups,
            provided_events: events.iter().map(|e| e.id).collect(),
            provided_facts: facts.iter().map(|f| f.id).collect(),
            leaf,
            hyps,
        });
    }

    let mut records = Vec::with_capacity(pending.len());
    let mut all_new = Vec::new();
    for Pending {
        leaf,
        mut premise_groups,
        provided_events,
        provided_facts,
        hyps,
    } in pending
    {
        cluster.take_leaf(leaf.id);
        let inherited: BTreeSet<FactId> = leaf.facts.difference(&provided_facts).copied().collect();
        let mut produced = Vec::new();
        let mut raw = Vec::with_capacity(hyps.len());
        for hyp in hyps {
            raw.push(hyp.probability);
            if hyp.probability == 0.0 {
                continue;
            }
            let group: EventGroupId = ids.fresh();
            cluster.insert_group(group, leaf.group, Some(serial), group);
            for payload in hyp.events {
                let event = Event {
                    id: ids.fresh(),
                    timestamp: payload.timestamp(),
                    payload: Arc::new(payload),
                    generation: Some(serial),
                };
                journal.push(Change::EventAdded(event.clone()));
                cluster.insert_event(group, event);
            }
            let mut facts = inherited.clone();
            for payload in hyp.facts {
                let fact = Fact {
                    id: ids.fresh(),
                    payload: Arc::new(payload),
                    depends_on: group,
                };
                journal.push(Change::FactAdded(fact.clone()));
                facts.insert(fact.id);
                cluster.facts.insert(fact.id, fact);
            }
            cluster.add_leaf(ids, group, facts, hyp.probability * leaf.probability);
            produced.push(group);
        }
        premise_groups.extend(produced.iter().copied());
        let premise_origins = premise_groups
            .iter()
            .map(|g| cluster.groups[g].origin)
            .collect();
        let premise_constraint = cluster.add_constraint(ids, premise_groups);
        all_new.extend(produced.iter().copied());
        records.push(GenerationRecord {
            serial,
            leaf: leaf.id,
            leaf_probability: leaf.probability,
            provided_events,
            provided_facts: provided_facts.into_iter().collect(),
            produced_groups: produced,
            raw_probabilities: raw,
            premise_origins,
            premise_constraint,
        });
    }
    cluster.add_constraint(ids, all_new);
    cluster.sweep_orphan_facts(journal);
    cluster.normalize();
    Ok(records)
}
