//! Page-load scenarios: the resources a page fetches, how each is
//! discovered, and how each maps to a scheduling priority.

use serde::{Deserialize, Serialize};

use crate::priority::{
    effective_priority, parse_priority, ChromiumPriority, EpsPriority, PriorityError, ResourceType,
};
use crate::sched::Request;
use crate::time::SimTime;

mod generate;
mod manifest;

pub use generate::{generate_synthetic, GeneratorError, GeneratorParams};
pub use manifest::{load_scenario, to_manifest_json, ScenarioError, SCHEMA_VERSION};

/// When the client issues the request for a resource.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscoveryTrigger {
    /// Requested at an absolute time.
    AtTime(SimTime),
    /// Requested `delta` after the parent's last byte leaves the server.
    AfterComplete {
        parent: String,
        #[serde(default)]
        delta: SimTime,
    },
    /// Requested `delta` after `fraction` of the parent's bytes have left the
    /// server.
    AfterFraction {
        parent: String,
        fraction: f64,
        #[serde(default)]
        delta: SimTime,
    },
}

impl DiscoveryTrigger {
    pub fn parent(&self) -> Option<&str> {
        match self {
            DiscoveryTrigger::AtTime(_) => None,
            DiscoveryTrigger::AfterComplete { parent, .. }
            | DiscoveryTrigger::AfterFraction { parent, .. } => Some(parent),
        }
    }
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResourceSpec {
    pub id: String,
    #[serde(rename = "type")]
    pub rtype: ResourceType,
    pub size_bytes: u64,
    pub chromium_priority: ChromiumPriority,
    /// Explicit priority field; overrides the Chromium mapping when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub priority_field: Option<String>,
    pub trigger: DiscoveryTrigger,
    #[serde(default, skip_serializing_if = "is_false")]
    pub render_blocking: bool,
    #[serde(default, skip_serializing_if = "is_false")]
    pub lcp_candidate: bool,
}

impl ResourceSpec {
    pub fn new(
        id: impl Into<String>,
        rtype: ResourceType,
        size_bytes: u64,
        chromium_priority: ChromiumPriority,
        trigger: DiscoveryTrigger,
    ) -> ResourceSpec {
        ResourceSpec {
            id: id.into(),
            rtype,
            size_bytes,
            chromium_priority,
            priority_field: None,
            trigger,
            render_blocking: false,
            lcp_candidate: false,
        }
    }

    pub fn with_priority_field(mut self, field: impl Into<String>) -> Self {
        self.priority_field = Some(field.into());
        self
    }

    pub fn render_blocking(mut self) -> Self {
        self.render_blocking = true;
        self
    }

    pub fn lcp_candidate(mut self) -> Self {
        self.lcp_candidate = true;
        self
    }

    /// The explicit priority field if present, otherwise the Chromium mapping
    /// (with its `u=3` fallback). Never unmapped.
    pub fn eps_priority(&self) -> Result<EpsPriority, PriorityError> {
        match &self.priority_field {
            Some(field) => parse_priority(field),
            None => Ok(effective_priority(self.chromium_priority, self.rtype)),
        }
    }

    /// The main document is the document requested at time zero.
    pub fn is_main_document(&self) -> bool {
        self.rtype == ResourceType::Document
            && self.trigger == DiscoveryTrigger::AtTime(SimTime::ZERO)
    }
}

pub fn effective_request(spec: &ResourceSpec, arrival_seq: u64) -> Result<Request, PriorityError> {
    Ok(Request::new(
        spec.id.as_str(),
        spec.eps_priority()?,
        spec.size_bytes,
        arrival_seq,
    ))
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Scenario {
    pub name: String,
    /// Permits `size_bytes == 0`; such resources complete on activation.
    pub allow_zero_size: bool,
    pub resources: Vec<ResourceSpec>,
}

impl Scenario {
    pub fn new(name: impl Into<String>, resources: Vec<ResourceSpec>) -> Scenario {
        Scenario {
            name: name.into(),
            allow_zero_size: false,
            resources,
        }
    }

    pub fn main_document(&self) -> Option<&ResourceSpec> {
        self.resources.iter().find(|r| r.is_main_document())
    }

    pub fn get(&self, id: &str) -> Option<&ResourceSpec> {
        self.resources.iter().find(|r| r.id == id)
    }

    pub fn total_bytes(&self) -> u64 {
        self.resources.iter().map(|r| r.size_bytes).sum()
    }
}
