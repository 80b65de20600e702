//! Domain-independent multiple hypothesis tracking engine.
//!
//! The application supplies a [`HypothesisGenerator`]; the engine keeps the
//! hypothesis trees, splits them into independent clusters, prunes them and
//! reports events that became certain.

pub mod cluster_ops;
pub mod dot;
pub mod error;
pub mod hypgen;
pub mod ids;
pub mod journal;
pub mod model;
pub mod oracle;
pub mod pruning;
pub mod union_find;
pub mod validate;
pub mod world;

pub use error::{MhtError, Result};
pub use hypgen::{GeneratedHypothesis, GenerationRecord, HypothesisGenerator};
pub use ids::{
    ClusterId, ConstraintId, EventGroupId, EventId, FactId, GenerationSerial, IdAllocator, LeafId,
};
pub use journal::{Change, Journal};
pub use model::{Cluster, Event, EventGroup, Fact, Leaf, Payload};
pub use oracle::{cross_product, Distribution, GlobalHypothesis, Oracle};
pub use pruning::PruneStrategy;
pub use validate::validate_cluster;
pub use world::{GenerateReport, Snapshot, World};
