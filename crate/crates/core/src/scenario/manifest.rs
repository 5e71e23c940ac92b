//! JSON manifest format.
//!
//! ```json
//! {
//!   "schema": 1,
//!   "name": "example",
//!   "resources": [
//!     {"id": "index.html", "type": "document", "size_bytes": 30000,
//!      "chromium_priority": "very_high", "trigger": {"at_time": 0.0},
//!      "render_blocking": true},
//!     {"id": "app.js", "type": "script", "size_bytes": 12000,
//!      "chromium_priority": "low", "priority_field": "u=2",
//!      "trigger": {"after_fraction": {"parent": "index.html", "fraction": 0.5, "delta": 0.0}}}
//!   ]
//! }
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{ResourceSpec, Scenario};
use crate::sim::{validate_scenario, ValidationError};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    schema: u32,
    name: String,
    #[serde(default, skip_serializing_if = "super::is_false")]
    allow_zero_size: bool,
    resources: Vec<ResourceSpec>,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("unsupported manifest schema version {0} (expected {SCHEMA_VERSION})")]
    UnsupportedSchema(u32),
    #[error("invalid scenario: {}", join(.0))]
    Invalid(Vec<ValidationError>),
}

fn join(errors: &[ValidationError]) -> String {
    errors
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

/// Parses and validates a manifest.
pub fn load_scenario(bytes: &[u8]) -> Result<Scenario, ScenarioError> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    let manifest: Manifest = serde_path_to_error::deserialize(de).map_err(|err| {
        let mut path = err.path().to_string();
        let message = err.inner().to_string();
        // A missing key is reported against its enclosing object; point at the key.
        if let Some(field) = message
            .strip_prefix("missing field `")
            .and_then(|rest| rest.split('`').next())
        {
            path = if path == "." {
                field.to_string()
            } else {
                format!("{path}.{field}")
            };
        }
        ScenarioError::Schema { path, message }
    })?;
    if manifest.schema != SCHEMA_VERSION {
        return Err(ScenarioError::UnsupportedSchema(manifest.schema));
    }
    let scenario = Scenario {
        name: manifest.name,
        allow_zero_size: manifest.allow_zero_size,
        resources: manifest.resources,
    };
    validate_scenario(&scenario).map_err(ScenarioError::Invalid)?;
    Ok(scenario)
}

/// Pretty-printed manifest, newline terminated.
pub fn to_manifest_json(scenario: &Scenario) -> String {
    let manifest = Manifest {
        schema: SCHEMA_VERSION,
        name: scenario.name.clone(),
        allow_zero_size: scenario.allow_zero_size,
        resources: scenario.resources.clone(),
    };
    let mut out = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    out.push('\n');
    out
}
