//! Brute-force reference: an explicit list of global hypotheses with no
//! clusters, constraints or pruning. Exponential by design; test sizes only.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use crate::error::{MhtError, Result};
use crate::hypgen::{check_generation, HypothesisGenerator};
use crate::ids::{EventGroupId, EventId, FactId, GenerationSerial, IdAllocator, LeafId};
use crate::model::{Event, Fact, Payload};
use crate::world::World;

/// Payload bytes plus generation serial; ids never match across engines.
pub type EventKey = (Vec<u8>, u64);

/// One complete interpretation of the world, in comparable form.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalHypothesis {
    /// Sorted multiset.
    pub events: Vec<EventKey>,
    /// Sorted.
    pub facts: Vec<Vec<u8>>,
    pub probability: f64,
}

fn event_key<E: Payload>(e: &Event<E>) -> EventKey {
    (
        e.payload.encode(),
        e.generation.map_or(0, GenerationSerial::get),
    )
}

/// Global hypotheses with equal content merged by summing probability.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Distribution {
    pub entries: BTreeMap<(Vec<EventKey>, Vec<Vec<u8>>), f64>,
}

impl Distribution {
    pub fn from_hypotheses(hyps: impl IntoIterator<Item = GlobalHypothesis>) -> Self {
        let mut entries = BTreeMap::new();
        for h in hyps {
            *entries.entry((h.events, h.facts)).or_insert(0.0) += h.probability;
        }
        Self { entries }
    }

    /// Adds events known to hold in every hypothesis.
    pub fn with_certain<E: Payload>(self, certain: &[Event<E>]) -> Self {
        let extra: Vec<EventKey> = certain.iter().map(event_key).collect();
        Self::from_hypotheses(self.entries.into_iter().map(|((mut events, facts), p)| {
            events.extend(extra.iter().cloned());
            events.sort();
            GlobalHypothesis {
                events,
                facts,
                probability: p,
            }
        }))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.entries.values().sum()
    }

    /// Largest probability gap over the union of both supports.
    /// Same hypothesis keys, whatever the probabilities.
    pub fn same_support(&self, other: &Self) -> bool {
        self.entries.len() == other.entries.len() && self.entries.keys().eq(other.entries.keys())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, p) in &self.entries {
            worst = worst.max((p - other.entries.get(k).copied().unwrap_or(0.0)).abs());
        }
        for (k, p) in &other.entries {
            if !self.entries.contains_key(k) {
                worst = worst.max(p.abs());
            }
        }
        worst
    }
}

/// Cartesian product over the world's clusters of their leaf
/// interpretations. Certain events already flushed are not included; see
/// [`Distribution::with_certain`].
pub fn cross_product<E: Payload, F: Payload>(
    world: &World<E, F>,
    bound: usize,
) -> Result<Vec<GlobalHypothesis>> {
    let mut acc = vec![GlobalHypothesis {
        events: Vec::new(),
        facts: Vec::new(),
        probability: 1.0,
    }];
    for cluster in world.clusters() {
        let size = acc.len().saturating_mul(cluster.leaf_count());
        if size > bound {
            return Err(MhtError::SizeGuard { size, bound });
        }
        let local: Vec<GlobalHypothesis> = cluster
            .leaves()
            .map(|leaf| GlobalHypothesis {
                events: cluster
                    .leaf_events(leaf)
                    .into_iter()
                    .map(event_key)
                    .collect(),
                facts: cluster
                    .leaf_facts(leaf)
                    .map(|f| f.payload.encode())
                    .collect(),
                probability: leaf.probability(),
            })
            .collect();
        acc = acc
            .iter()
            .flat_map(|a| {
                local.iter().map(move |b| {
                    let mut events = a.events.clone();
                    events.extend(b.events.iter().cloned());
                    events.sort();
                    let mut facts = a.facts.clone();
                    facts.extend(b.facts.iter().cloned());
                    facts.sort();
                    GlobalHypothesis {
                        events,
                        facts,
                        probability: a.probability * b.probability,
                    }
                })
            })
            .collect();
    }
    Ok(acc)
}

struct Flat<E, F> {
    events: Vec<Event<E>>,
    facts: Vec<Fact<F>>,
    probability: f64,
}

/// Flat-enumeration MHT.
pub struct Oracle<E, F> {
    hyps: Vec<Flat<E, F>>,
    ids: IdAllocator,
    serial: u64,
    bound: usize,
}

impl<E, F> std::fmt::Debug for Oracle<E, F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Oracle")
            .field("hypotheses", &self.hyps.len())
            .field("serial", &self.serial)
            .field("bound", &self.bound)
            .finish()
    }
}

impl<E: Payload, F: Payload> Oracle<E, F> {
    /// One empty hypothesis of probability one. Generations that would grow
    /// past `bound` hypotheses fail with `SizeGuard`.
    pub fn new(bound: usize) -> Self {
        Self {
            hyps: vec![Flat {
                events: Vec::new(),
                facts: Vec::new(),
                probability: 1.0,
            }],
            ids: IdAllocator::new(),
            serial: 0,
            bound,
        }
    }

    pub fn len(&self) -> usize {
        self.hyps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hyps.is_empty()
    }

    /// True when the event (by identity) is part of every hypothesis. Such
    /// events have left the engine and cannot be requested.
    fn certain_uids(&self) -> HashMap<EventId, usize> {
        let mut counts: HashMap<EventId, usize> = HashMap::new();
        for h in &self.hyps {
            for e in &h.events {
                *counts.entry(e.id).or_default() += 1;
            }
        }
        counts.retain(|_, n| *n == self.hyps.len());
        counts
    }

    /// Uncertain events matching `select`, deduplicated by identity.
    pub fn requestable_events(&self, select: &dyn Fn(&Event<E>) -> bool) -> Vec<Event<E>> {
        let certain = self.certain_uids();
        let mut out: BTreeMap<EventId, Event<E>> = BTreeMap::new();
        for h in &self.hyps {
            for e in &h.events {
                if !certain.contains_key(&e.id) && select(e) {
                    out.entry(e.id).or_insert_with(|| e.clone());
                }
            }
        }
        out.into_values().collect()
    }

    /// Every fact of every hypothesis, deduplicated by identity.
    pub fn facts(&self) -> Vec<Fact<F>> {
        let mut out: BTreeMap<FactId, Fact<F>> = BTreeMap::new();
        for h in &self.hyps {
            for f in &h.facts {
                out.entry(f.id).or_insert_with(|| f.clone());
            }
        }
        out.into_values().collect()
    }

    /// Branches every hypothesis by the generator's answer for the events
    /// and facts picked by the selectors.
    pub fn generate(
        &mut self,
        select_event: &dyn Fn(&Event<E>) -> bool,
        select_fact: &dyn Fn(&Fact<F>) -> bool,
        generator: &mut dyn HypothesisGenerator<E, F>,
    ) -> Result<()> {
        self.serial += 1;
        let serial = GenerationSerial(self.serial);
        let certain = self.certain_uids();
        let mut answers = Vec::with_capacity(self.hyps.len());
        let mut size = 0usize;
        for (i, h) in self.hyps.iter().enumerate() {
            let mut events: Vec<Event<E>> = h
                .events
                .iter()
                .filter(|e| !certain.contains_key(&e.id) && select_event(e))
                .cloned()
                .collect();
            events.sort_by_key(|e| e.id);
            let mut facts: Vec<Fact<F>> =
                h.facts.iter().filter(|f| select_fact(f)).cloned().collect();
            facts.sort_by_key(|f| f.id);
            let answer = generator.generate(&events, &facts);
            if let Err(err) = check_generation(LeafId(i as u64), &answer) {
                self.serial -= 1;
                return Err(err);
            }
            size += answer.iter().filter(|a| a.probability > 0.0).count();
            answers.push((
                facts.into_iter().map(|f| f.id).collect::<Vec<FactId>>(),
                answer,
            ));
        }
        if size > self.bound {
            self.serial -= 1;
            return Err(MhtError::SizeGuard {
                size,
                bound: self.bound,
            });
        }

        let mut next = Vec::with_capacity(size);
        for (h, (provided, answer)) in self.hyps.iter().zip(answers) {
            let inherited: Vec<Fact<F>> = h
                .facts
                .iter()
                .filter(|f| !provided.contains(&f.id))
                .cloned()
                .collect();
            for a in answer {
                if a.probability == 0.0 {
                    continue;
                }
                let mut events = h.events.clone();
                for payload in a.events {
                    events.push(Event {
                        id: self.ids.fresh(),
                        timestamp: payload.timestamp(),
                        payload: Arc::new(payload),
                        generation: Some(serial),
                    });
                }
                let mut facts = inherited.clone();
                for payload in a.facts {
                    facts.push(Fact {
                        id: self.ids.fresh(),
                        payload: Arc::new(payload),
                        depends_on: EventGroupId(0),
                    });
                }
                next.push(Flat {
                    events,
                    facts,
                    probability: h.probability * a.probability,
                });
            }
        }
        let total: f64 = next.iter().map(|h| h.probability).sum();
        for h in &mut next {
            h.probability /= total;
        }
        self.hyps = next;
        Ok(())
    }

    pub fn hypotheses(&self) -> Vec<GlobalHypothesis> {
        self.hyps
            .iter()
            .map(|h| {
                let mut events: Vec<EventKey> = h.events.iter().map(event_key).collect();
                events.sort();
                let mut facts: Vec<Vec<u8>> = h.facts.iter().map(|f| f.payload.encode()).collect();
                facts.sort();
                GlobalHypothesis {
                    events,
                    facts,
                    probability: h.probability,
                }
            })
            .collect()
    }

    pub fn distribution(&self) -> Distribution {
        Distribution::from_hypotheses(self.hypotheses())
    }
}
