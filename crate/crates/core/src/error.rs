use thiserror::Error;

use crate::ids::{ClusterId, EventId, FactId, LeafId};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MhtError {
    #[error("event {0} is not live in any cluster")]
    UnknownEvent(EventId),
    #[error("fact {0} is not live in any cluster")]
    UnknownFact(FactId),
    #[error("cluster {0} does not exist")]
    UnknownCluster(ClusterId),
    #[error("leaf {0} is not part of the cluster")]
    UnknownLeaf(LeafId),
    #[error("generator returned no hypotheses for leaf {leaf}")]
    EmptyGeneration { leaf: LeafId },
    #[error("generator returned only zero-probability hypotheses for leaf {leaf}")]
    ZeroMass { leaf: LeafId },
    #[error("generator returned invalid probability {value} for leaf {leaf}")]
    InvalidProbability { leaf: LeafId, value: f64 },
    #[error("leaf {0} is the last leaf of its cluster; delete the cluster instead")]
    LastLeaf(LeafId),
    #[error("cloned clusters disagree on constraint count: expected {expected}, found {found}")]
    MismatchedClones { expected: usize, found: usize },
    #[error("global hypothesis count {size} exceeds bound {bound}")]
    SizeGuard { size: usize, bound: usize },
}

pub type Result<T, E = MhtError> = std::result::Result<T, E>;
