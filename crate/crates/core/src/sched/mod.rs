//! Stream schedulers.
//!
//! All schedulers share one contract: requests are [`enqueue`]d as they
//! arrive, each [`allocate`] call hands out at most one quantum of bytes, and
//! the caller commits every returned [`Allocation`] through
//! [`on_delivered`] before the next `allocate`.
//!
//! [`enqueue`]: Scheduler::enqueue
//! [`allocate`]: Scheduler::allocate
//! [`on_delivered`]: Scheduler::on_delivered

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

use crate::priority::{EpsPriority, Urgency};

mod baseline;
mod mixed;
mod shares;

pub use baseline::{IncPrioritizedScheduler, NiPrioritizedScheduler, SequentialScheduler};
pub use mixed::MixedScheduler;

/// Opaque request identifier. Cheap to clone.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ResourceId(Arc<str>);

impl ResourceId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for ResourceId {
    fn from(s: &str) -> Self {
        ResourceId(Arc::from(s))
    }
}

impl From<String> for ResourceId {
    fn from(s: String) -> Self {
        ResourceId(Arc::from(s))
    }
}

impl fmt::Display for ResourceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Bytes handed out per `allocate` call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Quantum(u64);

impl Quantum {
    /// One typical QUIC packet payload.
    pub const DEFAULT: Quantum = Quantum(1448);

    pub const fn new(bytes: u64) -> Option<Quantum> {
        if bytes == 0 {
            None
        } else {
            Some(Quantum(bytes))
        }
    }

    pub const fn bytes(self) -> u64 {
        self.0
    }
}

impl Default for Quantum {
    fn default() -> Self {
        Quantum::DEFAULT
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Request {
    pub resource_id: ResourceId,
    pub priority: EpsPriority,
    pub total_bytes: u64,
    /// Arrival order; ties in urgency are broken by it. Unique per scheduler.
    pub arrival_seq: u64,
}

impl Request {
    pub fn new(
        resource_id: impl Into<ResourceId>,
        priority: EpsPriority,
        total_bytes: u64,
        arrival_seq: u64,
    ) -> Request {
        Request {
            resource_id: resource_id.into(),
            priority,
            total_bytes,
            arrival_seq,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Allocation {
    pub resource_id: ResourceId,
    pub bytes: u64,
    /// The allocation covers the request's last byte.
    pub completes: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Delivery {
    Partial { remaining: u64 },
    Complete,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchedError {
    #[error("request `{0}` is already pending")]
    DuplicateRequest(ResourceId),
    #[error("arrival sequence {0} was already used")]
    DuplicateSequence(u64),
    #[error("no pending request `{0}`")]
    UnknownResource(ResourceId),
    #[error("request `{0}` is queued but has not been allocated any bytes")]
    NotInService(ResourceId),
    #[error("delivering {bytes} bytes to `{id}` exceeds the {remaining} remaining")]
    OverDelivery {
        id: ResourceId,
        bytes: u64,
        remaining: u64,
    },
}

/// Bandwidth weight of an incremental stream: `8 - urgency`.
pub fn weight(urgency: Urgency) -> u64 {
    8 - u64::from(urgency.level())
}

pub trait Scheduler: Send {
    fn kind(&self) -> SchedulerKind;

    /// Zero-byte requests complete immediately and never show up in
    /// allocations.
    fn enqueue(&mut self, req: Request) -> Result<(), SchedError>;

    /// Hands out at most one quantum. Empty only when idle.
    fn allocate(&mut self) -> Vec<Allocation>;

    fn on_delivered(&mut self, id: &ResourceId, bytes: u64) -> Result<Delivery, SchedError>;

    fn is_idle(&self) -> bool;

    /// Resources in the order they finished.
    fn completion_order(&self) -> &[ResourceId];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchedulerKind {
    Sequential,
    NiPrioritized,
    IncPrioritized,
    Mixed,
}

impl SchedulerKind {
    pub const ALL: [SchedulerKind; 4] = [
        SchedulerKind::Sequential,
        SchedulerKind::NiPrioritized,
        SchedulerKind::IncPrioritized,
        SchedulerKind::Mixed,
    ];

    /// Short name used on the command line and in CSV output.
    pub fn name(self) -> &'static str {
        match self {
            SchedulerKind::Sequential => "sequential",
            SchedulerKind::NiPrioritized => "ni",
            SchedulerKind::IncPrioritized => "inc",
            SchedulerKind::Mixed => "mixed",
        }
    }

    pub fn build(self, quantum: Quantum) -> Box<dyn Scheduler> {
        match self {
            SchedulerKind::Sequential => Box::new(SequentialScheduler::new(quantum)),
            SchedulerKind::NiPrioritized => Box::new(NiPrioritizedScheduler::new(quantum)),
            SchedulerKind::IncPrioritized => Box::new(IncPrioritizedScheduler::new(quantum)),
            SchedulerKind::Mixed => Box::new(MixedScheduler::new(quantum)),
        }
    }
}

impl fmt::Display for SchedulerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown scheduler `{0}` (expected sequential, ni, inc or mixed)")]
pub struct UnknownSchedulerKind(pub String);

impl FromStr for SchedulerKind {
    type Err = UnknownSchedulerKind;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sequential" | "standard" | "seq" => Ok(SchedulerKind::Sequential),
            "ni" | "ni-prioritized" | "non-incremental" => Ok(SchedulerKind::NiPrioritized),
            "inc" | "inc-prioritized" | "incremental" => Ok(SchedulerKind::IncPrioritized),
            "mixed" => Ok(SchedulerKind::Mixed),
            _ => Err(UnknownSchedulerKind(s.to_string())),
        }
    }
}

/// Bookkeeping common to every scheduler: duplicate detection and the
/// completion log.
#[derive(Debug, Default)]
struct Registry {
    pending: HashSet<ResourceId>,
    seqs: HashSet<u64>,
    completed: Vec<ResourceId>,
}

impl Registry {
    /// Returns `false` when the request completes on admission (zero bytes).
    fn admit(&mut self, req: &Request) -> Result<bool, SchedError> {
        if self.pending.contains(&req.resource_id) {
            return Err(SchedError::DuplicateRequest(req.resource_id.clone()));
        }
        if !self.seqs.insert(req.arrival_seq) {
            return Err(SchedError::DuplicateSequence(req.arrival_seq));
        }
        if req.total_bytes == 0 {
            self.completed.push(req.resource_id.clone());
            return Ok(false);
        }
        self.pending.insert(req.resource_id.clone());
        Ok(true)
    }

    fn reject_unknown(&self, id: &ResourceId) -> SchedError {
        if self.pending.contains(id) {
            SchedError::NotInService(id.clone())
        } else {
            SchedError::UnknownResource(id.clone())
        }
    }

    fn retire(&mut self, id: &ResourceId) {
        self.pending.remove(id);
        self.completed.push(id.clone());
    }
}

/// A request being served (or waiting) with its undelivered byte count.
#[derive(Debug, Clone)]
struct Transfer {
    id: ResourceId,
    remaining: u64,
}

impl Transfer {
    fn allocation(&self, quantum: Quantum) -> Allocation {
        let bytes = self.remaining.min(quantum.bytes());
        Allocation {
            resource_id: self.id.clone(),
            bytes,
            completes: bytes == self.remaining,
        }
    }

    fn deliver(&mut self, bytes: u64) -> Result<Delivery, SchedError> {
        if bytes > self.remaining {
            return Err(SchedError::OverDelivery {
                id: self.id.clone(),
                bytes,
                remaining: self.remaining,
            });
        }
        self.remaining -= bytes;
        Ok(if self.remaining == 0 {
            Delivery::Complete
        } else {
            Delivery::Partial {
                remaining: self.remaining,
            }
        })
    }
}
