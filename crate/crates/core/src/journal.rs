//! Change notifications.
//!
//! Engine operations append raw [`Change`] records to a [`Journal`]. The world
//! commits a journal once per pipeline stage: ids that were both created and
//! destroyed within the stage are dropped, and removals are delivered before
//! additions.

use std::collections::BTreeSet;

use crate::ids::{EventId, FactId};
use crate::model::{Event, Fact};

#[derive(Debug, Clone)]
pub enum Change<E, F> {
    EventAdded(Event<E>),
    EventRemoved(EventId),
    /// The event reached probability one and left the engine.
    EventCertain(Event<E>),
    FactAdded(Fact<F>),
    FactRemoved(FactId),
}

impl<E, F> Change<E, F> {
    pub fn is_removal(&self) -> bool {
        matches!(
            self,
            Change::EventRemoved(_) | Change::EventCertain(_) | Change::FactRemoved(_)
        )
    }
}

#[derive(Debug)]
pub struct Journal<E, F> {
    changes: Vec<Change<E, F>>,
}

impl<E, F> Default for Journal<E, F> {
    fn default() -> Self {
        Self {
            changes: Vec::new(),
        }
    }
}

impl<E, F> Journal<E, F> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, change: Change<E, F>) {
        self.changes.push(change);
    }

    pub fn is_empty(&self) -> bool {
        self.changes.is_empty()
    }

    pub fn raw(&self) -> &[Change<E, F>] {
        &self.changes
    }

    /// Net changes of the stage, removals first.
    ///
    /// An id added and removed within the same journal is invisible. Certainty
    /// notices are always kept since the certain-event stream is meaningful
    /// even for short-lived events.
    pub fn drain_net(&mut self) -> Vec<Change<E, F>> {
        let mut added_events = BTreeSet::new();
        let mut added_facts = BTreeSet::new();
        let mut removed_events = BTreeSet::new();
        let mut removed_facts = BTreeSet::new();
        for change in &self.changes {
            match change {
                Change::EventAdded(e) => {
                    added_events.insert(e.id);
                }
                Change::FactAdded(f) => {
                    added_facts.insert(f.id);
                }
                Change::EventRemoved(id) => {
                    removed_events.insert(*id);
                }
                Change::EventCertain(e) => {
                    removed_events.insert(e.id);
                }
                Change::FactRemoved(id) => {
                    removed_facts.insert(*id);
                }
            }
        }
        let (removals, additions): (Vec<_>, Vec<_>) = std::mem::take(&mut self.changes)
            .into_iter()
            .filter(|change| match change {
                Change::EventAdded(e) => !removed_events.contains(&e.id),
                Change::FactAdded(f) => !removed_facts.contains(&f.id),
                Change::EventRemoved(id) => !added_events.contains(id),
                Change::FactRemoved(id) => !added_facts.contains(id),
                Change::EventCertain(_) => true,
            })
            .partition(Change::is_removal);
        removals.into_iter().chain(additions).collect()
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::ids::EventGroupId;

    fn event(id: u64) -> Event<String> {
        Event {
            id: EventId(id),
            payload: Arc::new(format!("e{id}")),
            timestamp: None,
            generation: None,
        }
    }

    #[test]
    fn transient_ids_cancel_and_removals_come_first() {
        let mut journal: Journal<String, String> = Journal::new();
        journal.push(Change::EventAdded(event(10)));
        journal.push(Change::EventAdded(event(11)));
        journal.push(Change::FactRemoved(FactId(3)));
        journal.push(Change::EventRemoved(EventId(10)));
        journal.push(Change::FactAdded(Fact {
            id: FactId(12),
            payload: Arc::new("f".into()),
            depends_on: EventGroupId(1),
        }));
        let net = journal.drain_net();
        assert!(journal.is_empty());
        assert_eq!(net.len(), 3);
        assert!(matches!(net[0], Change::FactRemoved(FactId(3))));
        assert!(matches!(&net[1], Change::EventAdded(e) if e.id == EventId(11)));
        assert!(matches!(&net[2], Change::FactAdded(f) if f.id == FactId(12)));
    }

    #[test]
    fn certainty_survives_netting() {
        let mut journal: Journal<String, String> = Journal::new();
        journal.push(Change::EventAdded(event(5)));
        journal.push(Change::EventCertain(event(5)));
        let net = journal.drain_net();
        assert_eq!(net.len(), 1);
        assert!(matches!(net[0], Change::EventCertain(_)));
    }
}
