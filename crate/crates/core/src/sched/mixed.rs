use std::collections::BTreeMap;

use super::shares::WeightedShares;
use super::{
    Allocation, Delivery, Quantum, Registry, Request, ResourceId, SchedError, Scheduler,
    SchedulerKind, Transfer,
};
use crate::priority::Urgency;

/// Mixed non-incremental / incremental scheduler.
///
/// Non-incremental requests wait in a priority queue ordered by
/// `(urgency, arrival_seq)` and are sent one at a time, each in its
/// entirety. Only when that queue is empty and no non-incremental transfer is
/// in flight do incremental requests get served, all at once, sharing each
/// quantum in proportion to `8 - urgency`.
///
/// A started non-incremental transfer is never preempted, not even by a more
/// urgent non-incremental arrival. Incremental service, on the other hand,
/// yields at the next quantum boundary to any non-incremental arrival, so a
/// steady supply of non-incremental work starves the incremental queue.
#[derive(Debug)]
pub struct MixedScheduler {
    quantum: Quantum,
    ni_queue: BTreeMap<(Urgency, u64), Transfer>,
    active_ni: Option<Transfer>,
    incremental: WeightedShares,
    registry: Registry,
}

impl MixedScheduler {
    pub fn new(quantum: Quantum) -> MixedScheduler {
        MixedScheduler {
            quantum,
            ni_queue: BTreeMap::new(),
            active_ni: None,
            incremental: WeightedShares::default(),
            registry: Registry::default(),
        }
    }

    pub fn quantum(&self) -> Quantum {
        self.quantum
    }

    /// Queued (not yet started) non-incremental requests in service order.
    pub fn ni_queue(&self) -> impl Iterator<Item = &ResourceId> {
        self.ni_queue.values().map(|t| &t.id)
    }

    pub fn active_ni(&self) -> Option<&ResourceId> {
        self.active_ni.as_ref().map(|t| &t.id)
    }

    pub fn has_incremental(&self) -> bool {
        !self.incremental.is_empty()
    }
}

impl Scheduler for MixedScheduler {
    fn kind(&self) -> SchedulerKind {
        SchedulerKind::Mixed
    }

    fn enqueue(&mut self, req: Request) -> Result<(), SchedError> {
        if !self.registry.admit(&req)? {
            return Ok(());
        }
        let Request {
            resource_id,
            priority,
            total_bytes,
            arrival_seq,
        } = req;
        if priority.incremental {
            self.incremental
                .insert(resource_id, arrival_seq, priority.urgency, total_bytes);
        } else {
            self.ni_queue.insert(
                (priority.urgency, arrival_seq),
                Transfer {
                    id: resource_id,
                    remaining: total_bytes,
                },
            );
        }
        Ok(())
    }

    fn allocate(&mut self) -> Vec<Allocation> {
        if self.active_ni.is_none() {
            self.active_ni = self.ni_queue.pop_first().map(|(_, t)| t);
        }
        match &self.active_ni {
            Some(transfer) => vec![transfer.allocation(self.quantum)],
            None => self.incremental.allocate(self.quantum),
        }
    }

    fn on_delivered(&mut self, id: &ResourceId, bytes: u64) -> Result<Delivery, SchedError> {
        if let Some(active) = self.active_ni.as_mut().filter(|t| &t.id == id) {
            let delivery = active.deliver(bytes)?;
            if delivery == Delivery::Complete {
                self.active_ni = None;
                self.registry.retire(id);
            }
            return Ok(delivery);
        }
        match self.incremental.deliver(id, bytes)? {
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
        self.active_ni.is_none() && self.ni_queue.is_empty() && self.incremental.is_empty()
    }

    fn completion_order(&self) -> &[ResourceId] {
        &self.registry.completed
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::priority::EpsPriority;

    fn n(id: &str, u: u8, bytes: u64, seq: u64) -> Request {
        Request::new(id, EpsPriority::new(u, false), bytes, seq)
    }

    fn i(id: &str, u: u8, bytes: u64, seq: u64) -> Request {
        Request::new(id, EpsPriority::new(u, true), bytes, seq)
    }

    fn ids<'a>(it: impl Iterator<Item = &'a ResourceId>) -> Vec<&'a str> {
        it.map(|id| id.as_str()).collect()
    }

    fn commit(s: &mut MixedScheduler, allocs: &[Allocation]) {
        for a in allocs {
            s.on_delivered(&a.resource_id, a.bytes).unwrap();
        }
    }

    #[test]
    fn ni_queue_orders_by_urgency_then_arrival() {
        let mut s = MixedScheduler::new(Quantum::DEFAULT);
        s.enqueue(n("u1", 1, 10, 0)).unwrap();
        s.enqueue(n("u3", 3, 10, 1)).unwrap();
        assert_eq!(ids(s.ni_queue()), ["u1", "u3"]);

        let mut s = MixedScheduler::new(Quantum::DEFAULT);
        s.enqueue(n("late", 3, 10, 5)).unwrap();
        s.enqueue(n("seq1", 3, 10, 1)).unwrap();
        s.enqueue(n("seq2", 3, 10, 2)).unwrap();
        assert_eq!(ids(s.ni_queue()), ["seq1", "seq2", "late"]);
    }

    #[test]
    fn incremental_requests_bypass_ni_queue() {
        let mut s = MixedScheduler::new(Quantum::DEFAULT);
        s.enqueue(i("x", 2, 10, 0)).unwrap();
        assert!(s.has_incremental());
        assert_eq!(s.ni_queue().count(), 0);
    }

    #[test]
    fn duplicate_pending_request_is_rejected() {
        let mut s = MixedScheduler::new(Quantum::DEFAULT);
        s.enqueue(n("a", 1, 10, 0)).unwrap();
        assert_eq!(
            s.enqueue(i("a", 1, 10, 1)),
            Err(SchedError::DuplicateRequest("a".into()))
        );
        assert_eq!(
            s.enqueue(n("b", 1, 10, 0)),
            Err(SchedError::DuplicateSequence(0))
        );
    }

    #[test]
    fn head_of_ni_queue_gets_one_quantum() {
        let mut s = MixedScheduler::new(Quantum::DEFAULT);
        s.enqueue(n("a", 3, 4000, 0)).unwrap();
        s.enqueue(n("b", 1, 2000, 1)).unwrap();
        assert_eq!(
            s.allocate(),
            [Allocation {
                resource_id: "b".into(),
                bytes: 1448,
                completes: false
            }]
        );
    }

    #[test]
    fn incremental_quantum_split() {
        let mut s = MixedScheduler::new(Quantum::new(900).unwrap());
        s.enqueue(i("x", 2, 6000, 0)).unwrap();
        s.enqueue(i("y", 5, 3000, 1)).unwrap();
        let got: Vec<_> = s
            .allocate()
            .into_iter()
            .map(|a| (a.resource_id.to_string(), a.bytes))
            .collect();
        assert_eq!(got, [("x".to_string(), 600), ("y".to_string(), 300)]);
    }

    #[test]
    fn ni_beats_more_urgent_incremental() {
        let mut s = MixedScheduler::new(Quantum::DEFAULT);
        s.enqueue(i("i", 0, 5000, 0)).unwrap();
        s.enqueue(n("n", 7, 5000, 1)).unwrap();
        let allocs = s.allocate();
        assert_eq!(allocs.len(), 1);
        assert_eq!(allocs[0].resource_id.as_str(), "n");
    }

    #[test]
    fn idle_scheduler_allocates_nothing() {
        let mut s = MixedScheduler::new(Quantum::DEFAULT);
        assert!(s.is_idle());
        assert!(s.allocate().is_empty());
        s.enqueue(n("a", 0, 100, 0)).unwrap();
        assert!(!s.is_idle());
        let allocs = s.allocate();
        commit(&mut s, &allocs);
        assert!(s.is_idle());
        assert_eq!(ids(s.completion_order().iter()), ["a"]);
    }

    #[test]
    fn delivery_accounting() {
        let mut s = MixedScheduler::new(Quantum::new(50).unwrap());
        s.enqueue(n("a", 0, 100, 0)).unwrap();
        s.allocate();
        assert_eq!(
            s.on_delivered(&"a".into(), 50),
            Ok(Delivery::Partial { remaining: 50 })
        );
        assert_eq!(
            s.on_delivered(&"a".into(), 200),
            Err(SchedError::OverDelivery {
                id: "a".into(),
                bytes: 200,
                remaining: 50
            })
        );
        assert_eq!(s.on_delivered(&"a".into(), 50), Ok(Delivery::Complete));
        assert!(s.is_idle());
        assert_eq!(
            s.on_delivered(&"a".into(), 1),
            Err(SchedError::UnknownResource("a".into()))
        );
    }

    #[test]
    fn queued_but_unstarted_request_cannot_take_delivery() {
        let mut s = MixedScheduler::new(Quantum::DEFAULT);
        s.enqueue(n("a", 0, 100, 0)).unwrap();
        s.enqueue(n("b", 1, 100, 1)).unwrap();
        s.allocate();
        assert_eq!(
            s.on_delivered(&"b".into(), 1),
            Err(SchedError::NotInService("b".into()))
        );
    }

    #[test]
    fn started_transfer_is_not_preempted() {
        let mut s = MixedScheduler::new(Quantum::new(100).unwrap());
        s.enqueue(n("slow", 5, 300, 0)).unwrap();
        let allocs = s.allocate();
        commit(&mut s, &allocs);
        s.enqueue(n("urgent", 0, 100, 1)).unwrap();
        for _ in 0..2 {
            let allocs = s.allocate();
            assert_eq!(allocs[0].resource_id.as_str(), "slow");
            commit(&mut s, &allocs);
        }
        assert_eq!(s.allocate()[0].resource_id.as_str(), "urgent");
    }

    #[test]
    fn ni_arrival_preempts_incremental_at_next_quantum() {
        let mut s = MixedScheduler::new(Quantum::new(100).unwrap());
        s.enqueue(i("x", 0, 1000, 0)).unwrap();
        let allocs = s.allocate();
        assert_eq!(allocs[0].resource_id.as_str(), "x");
        commit(&mut s, &allocs);
        s.enqueue(n("n", 7, 100, 1)).unwrap();
        assert_eq!(s.allocate()[0].resource_id.as_str(), "n");
    }

    #[test]
    fn zero_byte_request_completes_on_enqueue() {
        let mut s = MixedScheduler::new(Quantum::DEFAULT);
        s.enqueue(n("empty", 3, 0, 0)).unwrap();
        assert!(s.is_idle());
        assert_eq!(ids(s.completion_order().iter()), ["empty"]);
    }
}
