//! Opaque identifiers.
//!
//! Every identifier kind is a 64-bit newtype. A single [`IdAllocator`] hands
//! out values for all kinds within one world, so ids strictly increase across
//! the whole mutation history and are never reused.

use std::fmt;

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident, $prefix:literal) => {
        $(#[$meta])*
        #[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(pub u64);

        impl $name {
            pub fn get(self) -> u64 {
                self.0
            }
        }

        impl From<u64> for $name {
            fn from(raw: u64) -> Self {
                Self(raw)
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0)
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                fmt::Debug::fmt(self, f)
            }
        }
    };
}

id_type!(EventId, "E");
id_type!(FactId, "F");
id_type!(
    /// Identifies one node of a hypothesis tree.
    EventGroupId,
    "EG"
);
id_type!(ConstraintId, "C");
id_type!(ClusterId, "K");
id_type!(LeafId, "L");
id_type!(
    /// Serial number of one hypothesis-generation call. Every event group
    /// produced by that call, and every clone of such a group, carries it.
    GenerationSerial,
    "G"
);

/// Monotonic id source shared by all id kinds of one world.
#[derive(Debug, Clone)]
pub struct IdAllocator {
    next: u64,
}

impl Default for IdAllocator {
    fn default() -> Self {
        Self::new()
    }
}

impl IdAllocator {
    pub fn new() -> Self {
        Self { next: 1 }
    }

    pub fn fresh<T: From<u64>>(&mut self) -> T {
        let raw = self.next;
        self.next += 1;
        T::from(raw)
    }

    /// The value the next call to [`IdAllocator::fresh`] will return.
    pub fn peek(&self) -> u64 {
        self.next
    }
}
