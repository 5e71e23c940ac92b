//! Urgency-aware HTTP/3 stream scheduling.
//!
//! The centerpiece is [`sched::MixedScheduler`], which drains non-incremental
//! requests strictly by urgency and shares leftover capacity among
//! incremental requests in proportion to their urgency. Around it sit the
//! comparison schedulers, a Chromium-priority mapping ([`priority`]), a
//! deterministic link simulator ([`sim`]) that replays page-load scenarios
//! ([`scenario`]), and load-time proxies for comparing the results
//! ([`metrics`]).

pub mod metrics;
pub mod priority;
pub mod scenario;
pub mod sched;
pub mod sim;
pub mod time;

pub use priority::{ChromiumPriority, EpsPriority, ResourceType, Urgency};
pub use scenario::{ResourceSpec, Scenario};
pub use sched::{Quantum, SchedulerKind};
pub use sim::{run, DeliveryTrace, LinkConfig};
pub use time::SimTime;
