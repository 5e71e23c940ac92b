//! Deterministic replay of a scenario over a single rate- and delay-limited
//! link.
//!
//! The link is a fluid pipe of fixed byte rate. Each scheduler `allocate`
//! call forms one round: the round lasts `round_bytes / rate` and every
//! stream in it progresses at its proportional share, so all of a round's
//! allocations finish together at the round's end. Packet loss and
//! congestion control are not modeled.
//!
//! A resource is activated (its request reaches the server) when its
//! trigger fires. `AtTime` triggers activate at that time. Dependent triggers
//! fire when the parent's sender-side byte count crosses the threshold, then
//! activate after `delta` plus one round trip (`2 * one_way_delay`) for the
//! client to issue the request. Completion is the time the last byte leaves
//! the server plus `one_way_delay`.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use thiserror::Error;

use crate::priority::EpsPriority;
use crate::scenario::{effective_request, DiscoveryTrigger, Scenario};
use crate::sched::{Quantum, ResourceId, SchedError, SchedulerKind};
use crate::time::SimTime;

mod export;
mod validate;

pub(crate) use export::csv_field;
pub use export::{resources_csv, trace_csv, RESOURCES_CSV_HEADER, TRACE_CSV_HEADER};
pub use validate::{validate_scenario, ValidationError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkConfig {
    /// Bytes per second.
    pub rate: f64,
    pub one_way_delay: SimTime,
}

impl LinkConfig {
    pub const DEFAULT_DELAY: SimTime = SimTime::from_micros(10_000);

    pub fn new(rate: f64, one_way_delay: SimTime) -> LinkConfig {
        LinkConfig {
            rate,
            one_way_delay,
        }
    }

    /// Default 10 ms one-way delay.
    pub fn with_rate(rate: f64) -> LinkConfig {
        LinkConfig::new(rate, LinkConfig::DEFAULT_DELAY)
    }

    fn check(&self) -> Result<(), SimError> {
        if self.rate.is_finite() && self.rate > 0.0 {
            Ok(())
        } else {
            Err(SimError::NonPositiveRate(self.rate))
        }
    }

    /// Time to push `bytes` through the link, rounded to the microsecond.
    fn transmit(&self, bytes: f64) -> SimTime {
        SimTime::from_micros((bytes * 1e6 / self.rate).round() as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("link rate must be positive and finite, got {0}")]
    NonPositiveRate(f64),
    #[error("invalid scenario: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<ValidationError>),
    #[error("resources never completed: {}", .0.join(", "))]
    UnreachableResource(Vec<String>),
    #[error("scheduler rejected an operation: {0}")]
    Scheduler(#[from] SchedError),
}

impl SimError {
    /// True when the scenario failed validation with a dependency cycle.
    pub fn is_cyclic(&self) -> bool {
        matches!(self, SimError::Invalid(errs)
            if errs.iter().any(|e| matches!(e, ValidationError::CyclicDependency(_))))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    Activate,
    Send,
    Complete,
}

impl EventKind {
    pub fn name(self) -> &'static str {
        match self {
            EventKind::Activate => "activate",
            EventKind::Send => "send",
            EventKind::Complete => "complete",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEvent {
    pub time: SimTime,
    pub resource_id: ResourceId,
    /// Bytes sent for `Send`, the resource size for `Complete`, zero for
    /// `Activate`.
    pub bytes: u64,
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResourceTiming {
    pub id: ResourceId,
    pub priority: EpsPriority,
    pub size_bytes: u64,
    pub activation: SimTime,
    /// Arrival of the first byte at the client. `None` for empty resources.
    pub first_byte: Option<SimTime>,
    /// Arrival of the last byte at the client.
    pub completion: SimTime,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeliveryTrace {
    pub scheduler: SchedulerKind,
    pub quantum: Quantum,
    /// Sorted by time; ties keep the order in which they happened.
    pub events: Vec<TraceEvent>,
    /// One entry per scenario resource, in scenario order.
    pub resources: Vec<ResourceTiming>,
}

impl DeliveryTrace {
    pub fn timing(&self, id: &str) -> Option<&ResourceTiming> {
        self.resources.iter().find(|r| r.id.as_str() == id)
    }

    pub fn sends(&self) -> impl Iterator<Item = &TraceEvent> {
        self.events.iter().filter(|e| e.kind == EventKind::Send)
    }
}

/// A dependent resource waiting on its parent's progress.
struct Waiter {
    child: usize,
    threshold: u64,
    delta: SimTime,
}

#[derive(Default, Clone)]
struct Progress {
    activation: Option<SimTime>,
    delivered: u64,
    first_byte: Option<SimTime>,
    completion: Option<SimTime>,
}

struct Replay<'a> {
    scenario: &'a Scenario,
    link: LinkConfig,
    index: HashMap<&'a str, usize>,
    progress: Vec<Progress>,
    priorities: Vec<EpsPriority>,
    /// Per parent, dependents sorted by threshold; `next_waiter` marks the
    /// first not yet fired.
    waiters: Vec<Vec<Waiter>>,
    next_waiter: Vec<usize>,
    pending: BinaryHeap<Reverse<(SimTime, usize)>>,
    events: Vec<TraceEvent>,
    next_seq: u64,
}

impl<'a> Replay<'a> {
    fn new(scenario: &'a Scenario, link: LinkConfig) -> Self {
        let n = scenario.resources.len();
        let index: HashMap<&str, usize> = scenario
            .resources
            .iter()
            .enumerate()
            .map(|(i, r)| (r.id.as_str(), i))
            .collect();
        let priorities = scenario
            .resources
            .iter()
            .map(|r| r.eps_priority())
            .collect::<Result<Vec<_>, _>>()
            .expect("validated priority fields");

        let mut waiters: Vec<Vec<Waiter>> = (0..n).map(|_| Vec::new()).collect();
        let mut pending = BinaryHeap::new();
        for (i, r) in scenario.resources.iter().enumerate() {
            match &r.trigger {
                DiscoveryTrigger::AtTime(t) => pending.push(Reverse((*t, i))),
                DiscoveryTrigger::AfterComplete { parent, delta } => {
                    let p = index[parent.as_str()];
                    waiters[p].push(Waiter {
                        child: i,
                        threshold: scenario.resources[p].size_bytes,
                        delta: *delta,
                    });
                }
                DiscoveryTrigger::AfterFraction {
                    parent,
                    fraction,
                    delta,
                } => {
                    let p = index[parent.as_str()];
                    let size = scenario.resources[p].size_bytes;
                    waiters[p].push(Waiter {
                        child: i,
                        threshold: fraction_threshold(*fraction, size),
                        delta: *delta,
                    });
                }
            }
        }
        for list in &mut waiters {
            list.sort_by_key(|w| (w.threshold, w.child));
        }

        Replay {
            scenario,
            link,
            index,
            progress: vec![Progress::default(); n],
            priorities,
            waiters,
            next_waiter: vec![0; n],
            pending,
            events: Vec::new(),
            next_seq: 0,
        }
    }

    fn id(&self, i: usize) -> ResourceId {
        ResourceId::from(self.scenario.resources[i].id.as_str())
    }

    fn event(&mut self, time: SimTime, i: usize, bytes: u64, kind: EventKind) {
        let resource_id = self.id(i);
        self.events.push(TraceEvent {
            time,
            resource_id,
            bytes,
            kind,
        });
    }

    /// Schedules activation of every dependent of `parent` whose threshold
    /// is at most `delivered`, using `fire_at` to time each crossing.
    fn fire_waiters(&mut self, parent: usize, delivered: u64, fire_at: impl Fn(u64) -> SimTime) {
        let rtt = self.link.one_way_delay + self.link.one_way_delay;
        let list = &self.waiters[parent];
        let mut next = self.next_waiter[parent];
        while let Some(w) = list.get(next).filter(|w| w.threshold <= delivered) {
            let at = fire_at(w.threshold) + w.delta + rtt;
            self.pending.push(Reverse((at, w.child)));
            next += 1;
        }
        self.next_waiter[parent] = next;
    }
}

/// Smallest byte count that is at least `fraction` of `size`.
fn fraction_threshold(fraction: f64, size: u64) -> u64 {
    // Tolerate representation error such as 0.1 * 30000 = 3000.0000000000005.
    let exact = fraction * size as f64;
    let threshold = (exact - 1e-9 * exact.max(1.0)).ceil();
    (threshold.max(0.0) as u64).min(size)
}

/// Replays `scenario` through a fresh scheduler of `kind`.
pub fn run(
    scenario: &Scenario,
    kind: SchedulerKind,
    link: LinkConfig,
    quantum: Quantum,
) -> Result<DeliveryTrace, SimError> {
    link.check()?;
    validate_scenario(scenario).map_err(SimError::Invalid)?;

    let mut replay = Replay::new(scenario, link);
    let mut scheduler = kind.build(quantum);
    let delay = link.one_way_delay;

    let mut now = SimTime::ZERO;
    // Bytes sent since the link last went busy; times are measured from
    // `busy_since` so rounding never accumulates.
    let mut busy_since = SimTime::ZERO;
    let mut busy_bytes: u64 = 0;

    loop {
        while let Some(&Reverse((at, i))) = replay.pending.peek() {
            if at > now {
                break;
            }
            replay.pending.pop();
            replay.progress[i].activation = Some(at);
            replay.event(at, i, 0, EventKind::Activate);
            let spec = &scenario.resources[i];
            let request =
                effective_request(spec, replay.next_seq).expect("validated priority field");
            replay.next_seq += 1;
            scheduler.enqueue(request)?;
            if spec.size_bytes == 0 {
                replay.progress[i].completion = Some(at);
                replay.event(at, i, 0, EventKind::Complete);
            }
            // Fraction-zero dependents (and all dependents of an empty resource).
            replay.fire_waiters(i, 0, |_| at);
        }

        if scheduler.is_idle() {
            match replay.pending.peek() {
                Some(&Reverse((at, _))) => {
                    now = at;
                    busy_since = at;
                    busy_bytes = 0;
                    continue;
                }
                None => break,
            }
        }

        let allocations = scheduler.allocate();
        let round_bytes: u64 = allocations.iter().map(|a| a.bytes).sum();
        debug_assert!(round_bytes > 0, "busy scheduler returned an empty round");
        let round_start = busy_bytes;
        let round_end = busy_since + link.transmit((round_start + round_bytes) as f64);

        for alloc in &allocations {
            let i = replay.index[alloc.resource_id.as_str()];
            let before = replay.progress[i].delivered;
            let after = before + alloc.bytes;
            // Link position (in bytes since `busy_since`) at which this stream
            // has sent `k` of its bytes for the round.
            let share = alloc.bytes as f64;
            let crossing = |k: u64| {
                let position = round_start as f64 + (k as f64 * round_bytes as f64) / share;
                busy_since + link.transmit(position)
            };
            if before == 0 {
                replay.progress[i].first_byte = Some(crossing(1) + delay);
            }
            replay.fire_waiters(i, after, |threshold| crossing(threshold - before));
            replay.progress[i].delivered = after;
            scheduler.on_delivered(&alloc.resource_id, alloc.bytes)?;
            replay.event(round_end, i, alloc.bytes, EventKind::Send);
            if alloc.completes {
                replay.progress[i].completion = Some(round_end + delay);
                let size = scenario.resources[i].size_bytes;
                replay.event(round_end + delay, i, size, EventKind::Complete);
            }
        }
        busy_bytes += round_bytes;
        now = round_end;
    }

    let unfinished: Vec<String> = replay
        .progress
        .iter()
        .zip(&scenario.resources)
        .filter(|(p, _)| p.completion.is_none())
        .map(|(_, r)| r.id.clone())
        .collect();
    if !unfinished.is_empty() {
        return Err(SimError::UnreachableResource(unfinished));
    }

    let resources = replay
        .progress
        .iter()
        .enumerate()
        .map(|(i, p)| ResourceTiming {
            id: replay.id(i),
            priority: replay.priorities[i],
            size_bytes: scenario.resources[i].size_bytes,
            activation: p.activation.expect("completed implies activated"),
            first_byte: p.first_byte,
            completion: p.completion.expect("checked above"),
        })
        .collect();
    let mut events = replay.events;
    events.sort_by_key(|e| e.time);

    Ok(DeliveryTrace {
        scheduler: kind,
        quantum,
        events,
        resources,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::priority::{ChromiumPriority, ResourceType};
    use crate::scenario::ResourceSpec;

    fn secs(t: SimTime) -> f64 {
        t.as_secs_f64()
    }

    fn doc(size: u64) -> ResourceSpec {
        ResourceSpec::new(
            "doc",
            ResourceType::Document,
            size,
            ChromiumPriority::VeryHigh,
            DiscoveryTrigger::AtTime(SimTime::ZERO),
        )
    }

    #[test]
    fn rejects_bad_rate() {
        let s = Scenario::new("s", vec![doc(10)]);
        for rate in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            assert!(matches!(
                run(
                    &s,
                    SchedulerKind::Mixed,
                    LinkConfig::with_rate(rate),
                    Quantum::DEFAULT
                ),
                Err(SimError::NonPositiveRate(_))
            ));
        }
    }

    #[test]
    fn rejects_cycles() {
        let a = ResourceSpec::new(
            "a",
            ResourceType::Script,
            10,
            ChromiumPriority::High,
            DiscoveryTrigger::AfterComplete {
                parent: "a".into(),
                delta: SimTime::ZERO,
            },
        );
        let err = run(
            &Scenario::new("s", vec![doc(10), a]),
            SchedulerKind::Mixed,
            LinkConfig::with_rate(1000.0),
            Quantum::DEFAULT,
        )
        .unwrap_err();
        assert!(err.is_cyclic());
    }

    #[test]
    fn single_resource_timing() {
        let s = Scenario::new("s", vec![doc(3000)]);
        let trace = run(
            &s,
            SchedulerKind::Mixed,
            LinkConfig::with_rate(1000.0),
            Quantum::DEFAULT,
        )
        .unwrap();
        let t = trace.timing("doc").unwrap();
        assert_eq!(t.completion, SimTime::from_micros(3_010_000));
        assert_eq!(t.first_byte, Some(SimTime::from_micros(11_000)));
        let sends: Vec<u64> = trace.sends().map(|e| e.bytes).collect();
        assert_eq!(sends, [1448, 1448, 104]);
    }

    #[test]
    fn after_complete_waits_a_round_trip() {
        let child = ResourceSpec::new(
            "img",
            ResourceType::Media,
            1000,
            ChromiumPriority::Low,
            DiscoveryTrigger::AfterComplete {
                parent: "doc".into(),
                delta: SimTime::from_micros(500_000),
            },
        );
        let s = Scenario::new("s", vec![doc(1000), child]);
        let link = LinkConfig::new(1000.0, SimTime::from_micros(100_000));
        let trace = run(&s, SchedulerKind::Sequential, link, Quantum::DEFAULT).unwrap();
        let img = trace.timing("img").unwrap();
        // Parent's last byte leaves at 1.0, +0.5 delta, +0.2 round trip.
        assert_eq!(secs(img.activation), 1.7);
        assert_eq!(secs(img.completion), 2.8);
    }

    #[test]
    fn zero_size_resource_completes_on_activation() {
        let mut empty = ResourceSpec::new(
            "beacon",
            ResourceType::Other,
            0,
            ChromiumPriority::VeryLow,
            DiscoveryTrigger::AtTime(SimTime::from_micros(250_000)),
        );
        empty.render_blocking = false;
        let mut s = Scenario::new("s", vec![doc(100), empty]);
        s.allow_zero_size = true;
        let trace = run(
            &s,
            SchedulerKind::Mixed,
            LinkConfig::with_rate(1000.0),
            Quantum::DEFAULT,
        )
        .unwrap();
        let b = trace.timing("beacon").unwrap();
        assert_eq!(b.activation, b.completion);
        assert_eq!(b.first_byte, None);
    }

    #[test]
    fn fraction_thresholds() {
        assert_eq!(fraction_threshold(0.5, 2000), 1000);
        assert_eq!(fraction_threshold(0.1, 30_000), 3000);
        assert_eq!(fraction_threshold(0.0, 10), 0);
        assert_eq!(fraction_threshold(1.0, 10), 10);
        assert_eq!(fraction_threshold(0.33, 10), 4);
    }

    #[test]
    fn idle_gap_restarts_the_clock() {
        let late = ResourceSpec::new(
            "late",
            ResourceType::Other,
            500,
            ChromiumPriority::Low,
            DiscoveryTrigger::AtTime(SimTime::from_micros(5_000_000)),
        );
        let s = Scenario::new("s", vec![doc(1000), late]);
        let trace = run(
            &s,
            SchedulerKind::Mixed,
            LinkConfig::new(1000.0, SimTime::ZERO),
            Quantum::DEFAULT,
        )
        .unwrap();
        assert_eq!(secs(trace.timing("late").unwrap().completion), 5.5);
    }
}
