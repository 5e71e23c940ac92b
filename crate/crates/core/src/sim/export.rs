use std::fmt::Write;

use super::DeliveryTrace;

pub const TRACE_CSV_HEADER: &str = "time_s,resource_id,bytes,event";
pub const RESOURCES_CSV_HEADER: &str =
    "resource_id,priority,size_bytes,activation_s,first_byte_s,completion_s";

/// Quotes a CSV field when it contains a delimiter, quote or line break.
pub(crate) fn csv_field(s: &str) -> std::borrow::Cow<'_, str> {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\"")).into()
    } else {
        s.into()
    }
}

/// One line per trace event: `time_s,resource_id,bytes,event`.
pub fn trace_csv(trace: &DeliveryTrace) -> String {
    let mut out = String::with_capacity(32 * (trace.events.len() + 1));
    out.push_str(TRACE_CSV_HEADER);
    out.push('\n');
    for e in &trace.events {
        writeln!(
            out,
            "{},{},{},{}",
            e.time,
            csv_field(e.resource_id.as_str()),
            e.bytes,
            e.kind.name()
        )
        .unwrap();
    }
    out
}

/// Per-resource summary annotated with the priority field each request
/// carried.
pub fn resources_csv(trace: &DeliveryTrace) -> String {
    let mut out = String::new();
    out.push_str(RESOURCES_CSV_HEADER);
    out.push('\n');
    for r in &trace.resources {
        let first_byte = r.first_byte.map(|t| t.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{}",
            csv_field(r.id.as_str()),
            csv_field(&r.priority.to_string()),
            r.size_bytes,
            r.activation,
            first_byte,
            r.completion
        )
        .unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::priority::{ChromiumPriority, ResourceType};
    use crate::scenario::{DiscoveryTrigger, ResourceSpec, Scenario};
    use crate::sched::{Quantum, SchedulerKind};
    use crate::sim::{run, LinkConfig};
    use crate::time::SimTime;

    fn trace() -> DeliveryTrace {
        let doc = ResourceSpec::new(
            "index.html",
            ResourceType::Document,
            3000,
            ChromiumPriority::VeryHigh,
            DiscoveryTrigger::AtTime(SimTime::ZERO),
        );
        run(
            &Scenario::new("one", vec![doc]),
            SchedulerKind::Mixed,
            LinkConfig::with_rate(1000.0),
            Quantum::DEFAULT,
        )
        .unwrap()
    }

    #[test]
    fn trace_csv_format() {
        let csv = trace_csv(&trace());
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(
            lines,
            [
                "time_s,resource_id,bytes,event",
                "0.000000,index.html,0,activate",
                "1.448000,index.html,1448,send",
                "2.896000,index.html,1448,send",
                "3.000000,index.html,104,send",
                "3.010000,index.html,3000,complete",
            ]
        );
    }

    #[test]
    fn resources_csv_carries_priority_field() {
        let csv = resources_csv(&trace());
        assert_eq!(
            csv.lines().nth(1).unwrap(),
            "index.html,u=0,3000,0.000000,0.011000,3.010000"
        );
    }

    #[test]
    fn fields_with_commas_are_quoted() {
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
        assert_eq!(csv_field("plain"), "plain");
        assert_eq!(csv_field("u=1, i"), "\"u=1, i\"");
    }
}
