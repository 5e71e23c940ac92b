//! Comparison strategies sharing the mixed scheduler's contract.

use std::collections::BTreeMap;

use super::shares::WeightedShares;
use super::{
    Allocation, Delivery, Quantum, Registry, Request, ResourceId, SchedError, Scheduler,
    SchedulerKind, Transfer,
};
use crate::priority::Urgency;

/// Serves one request at a time, to completion, choosing the smallest key
/// whenever the link frees up.
#[derive(Debug)]
struct OneAtATime<K> {
    quantum: Quantum,
    queue: BTreeMap<K, Transfer>,
    active: Option<Transfer>,
    registry: Registry,
}

impl<K: Ord> OneAtATime<K> {
    fn new(quantum: Quantum) -> Self {
        OneAtATime {
            quantum,
            queue: BTreeMap::new(),
            active: None,
            registry: Registry::default(),
        }
    }

    fn enqueue(&mut self, req: Request, key: K) -> Result<(), SchedError> {
        if self.registry.admit(&req)? {
            self.queue.insert(
                key,
                Transfer {
                    id: req.resource_id,
                    remaining: req.total_bytes,
                },
            );
        }
        Ok(())
    }

    fn allocate(&mut self) -> Vec<Allocation> {
        if self.active.is_none() {
            self.active = self.queue.pop_first().map(|(_, t)| t);
        }
        self.active
            .iter()
            .map(|t| t.allocation(self.quantum))
            .collect()
    }

    fn on_delivered(&mut self, id: &ResourceId, bytes: u64) -> Result<Delivery, SchedError> {
        let Some(active) = self.active.as_mut().filter(|t| &t.id == id) else {
            return Err(self.registry.reject_unknown(id));
        };
        let delivery = active.deliver(bytes)?;
        if delivery == Delivery::Complete {
            self.active = None;
            self.registry.retire(id);
        }
        Ok(delivery)
    }

    fn is_idle(&self) -> bool {
        self.active.is_none() && self.queue.is_empty()
    }
}

/// First come, first served. Priorities are ignored.
#[derive(Debug)]
pub struct SequentialScheduler(OneAtATime<u64>);

impl SequentialScheduler {
    pub fn new(quantum: Quantum) -> Self {
        SequentialScheduler(OneAtATime::new(quantum))
    }
}

impl Scheduler for SequentialScheduler {
    fn kind(&self) -> SchedulerKind {
        SchedulerKind::Sequential
    }

    fn enqueue(&mut self, req: Request) -> Result<(), SchedError> {
        let key = req.arrival_seq;
        self.0.enqueue(req, key)
    }

    fn allocate(&mut self) -> Vec<Allocation> {
        self.0.allocate()
    }

    fn on_delivered(&mut self, id: &ResourceId, bytes: u64) -> Result<Delivery, SchedError> {
        self.0.on_delivered(id, bytes)
    }

    fn is_idle(&self) -> bool {
        self.0.is_idle()
    }

    fn completion_order(&self) -> &[ResourceId] {
        &self.0.registry.completed
    }
}

/// Every request treated as non-incremental: strict `(urgency, arrival)`
/// order, one complete transfer at a time, no preemption.
#[derive(Debug)]
pub struct NiPrioritizedScheduler(OneAtATime<(Urgency, u64)>);

impl NiPrioritizedScheduler {
    pub fn new(quantum: Quantum) -> Self {
        NiPrioritizedScheduler(OneAtATime::new(quantum))
    }
}

impl Scheduler for NiPrioritizedScheduler {
    fn kind(&self) -> SchedulerKind {
        SchedulerKind::NiPrioritized
    }

    fn enqueue(&mut self, req: Request) -> Result<(), SchedError> {
        let key = (req.priority.urgency, req.arrival_seq);
        self.0.enqueue(req, key)
    }

    fn allocate(&mut self) -> Vec<Allocation> {
        self.0.allocate()
    }

    fn on_delivered(&mut self, id: &ResourceId, bytes: u64) -> Result<Delivery, SchedError> {
        self.0.on_delivered(id, bytes)
    }

    fn is_idle(&self) -> bool {
        self.0.is_idle()
    }

    fn completion_order(&self) -> &[ResourceId] {
        &self.0.registry.completed
    }
}

/// Every request treated as incremental: all active requests share each
/// quantum by urgency weight.
#[derive(Debug)]
pub struct IncPrioritizedScheduler {
    quantum: Quantum,
    shares: WeightedShares,
    registry: Registry,
}

impl IncPrioritizedScheduler {
    pub fn new(quantum: Quantum) -> Self {
        IncPrioritizedScheduler {
            quantum,
            shares: WeightedShares::default(),
            registry: Registry::default(),
        }
    }
}

impl Scheduler for IncPrioritizedScheduler {
    fn kind(&self) -> SchedulerKind {
        SchedulerKind::IncPrioritized
    }

    fn enqueue(&mut self, req: Request) -> Result<(), SchedError> {
        if self.registry.admit(&req)? {
            self.shares.insert(
                req.resource_id,
                req.arrival_seq,
                req.priority.urgency,
                req.total_bytes,
            );
        }
        Ok(())
    }

    fn allocate(&mut self) -> Vec<Allocation> {
        self.shares.allocate(self.quantum)
    }

    fn on_delivered(&mut self, id: &ResourceId, bytes: u64) -> Result<Delivery, SchedError> {
        match self.shares.deliver(id, bytes)? {
            Some(delivery) => {
                if delivery == Delivery::Complete {
                    self.registry.retire(id);
                }
                Ok(delivery)
            }
            None => Err(self.registry.reject_unknown(id)),
        }
    }

    fn is_idle(&self) -> bool {
        self.shares.is_empty()
    }

    fn completion_order(&self) -> &[ResourceId] {
        &self.registry.completed
    }
}
