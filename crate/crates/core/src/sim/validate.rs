use std::collections::HashMap;

use thiserror::Error;

use crate::priority::PriorityError;
use crate::scenario::{DiscoveryTrigger, Scenario};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationError {
    #[error("scenario has no resources")]
    Empty,
    #[error("resource id is empty (resources[{0}])")]
    EmptyId(usize),
    #[error("duplicate resource id `{0}`")]
    DuplicateId(String),
    #[error("`{id}` depends on unknown resource `{parent}`")]
    UnknownParent { id: String, parent: String },
    #[error("dependency cycle through {}", .0.join(" -> "))]
    CyclicDependency(Vec<String>),
    #[error("`{id}` has discovery fraction {fraction} outside [0, 1]")]
    FractionOutOfRange { id: String, fraction: f64 },
    #[error("`{0}` has zero size but the scenario does not allow zero-size resources")]
    ZeroSize(String),
    #[error("no main document (a document requested at time 0)")]
    NoMainDocument,
    #[error("more than one main document: {}", .0.join(", "))]
    MultipleMainDocuments(Vec<String>),
    #[error("`{id}` has an invalid priority field: {source}")]
    Priority { id: String, source: PriorityError },
}

/// Checks ids, field ranges, priority fields, the main document and the
/// dependency graph. Returns every problem found.
pub fn validate_scenario(scenario: &Scenario) -> Result<(), Vec<ValidationError>> {
    let mut errors = Vec::new();
    if scenario.resources.is_empty() {
        return Err(vec![ValidationError::Empty]);
    }

    let mut index: HashMap<&str, usize> = HashMap::new();
    for (i, r) in scenario.resources.iter().enumerate() {
        if r.id.is_empty() {
            errors.push(ValidationError::EmptyId(i));
        } else if index.insert(&r.id, i).is_some() {
            errors.push(ValidationError::DuplicateId(r.id.clone()));
        }
        if r.size_bytes == 0 && !scenario.allow_zero_size {
            errors.push(ValidationError::ZeroSize(r.id.clone()));
        }
        if let DiscoveryTrigger::AfterFraction { fraction, .. } = r.trigger {
            if !(0.0..=1.0).contains(&fraction) {
                errors.push(ValidationError::FractionOutOfRange {
                    id: r.id.clone(),
                    fraction,
                });
            }
        }
        if let Err(source) = r.eps_priority() {
            errors.push(ValidationError::Priority {
                id: r.id.clone(),
                source,
            });
        }
    }

    let mains: Vec<String> = scenario
        .resources
        .iter()
        .filter(|r| r.is_main_document())
        .map(|r| r.id.clone())
        .collect();
    match mains.len() {
        0 => errors.push(ValidationError::NoMainDocument),
        1 => {}
        _ => errors.push(ValidationError::MultipleMainDocuments(mains)),
    }

    // Parent of each resource, by position; the first occurrence wins for duplicate ids.
    let mut parents: Vec<Option<usize>> = vec![None; scenario.resources.len()];
    for (i, r) in scenario.resources.iter().enumerate() {
        if let Some(parent) = r.trigger.parent() {
            match index.get(parent) {
                Some(&p) => parents[i] = Some(p),
                None => errors.push(ValidationError::UnknownParent {
                    id: r.id.clone(),
                    parent: parent.to_string(),
                }),
            }
        }
    }
    errors.extend(find_cycles(scenario, &parents));

    if errors.is_empty() {
        Ok(())
    } else {
        Err(errors)
    }
}

/// Every node has at most one parent, so each cycle is found by walking up
/// the parent chain until a node repeats.
fn find_cycles(scenario: &Scenario, parents: &[Option<usize>]) -> Vec<ValidationError> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Unseen,
        OnPath(usize),
        Done,
    }
    let mut marks = vec![Mark::Unseen; parents.len()];
    let mut cycles = Vec::new();
    for start in 0..parents.len() {
        let mut path = Vec::new();
        let mut node = Some(start);
        while let Some(n) = node {
            match marks[n] {
                Mark::Done => break,
                Mark::OnPath(pos) => {
                    let ids = path[pos..]
                        .iter()
                        .map(|&i: &usize| scenario.resources[i].id.clone())
                        .collect();
                    cycles.push(ValidationError::CyclicDependency(ids));
                    break;
                }
                Mark::Unseen => {
                    marks[n] = Mark::OnPath(path.len());
                    path.push(n);
                    node = parents[n];
                }
            }
        }
        for n in path {
            marks[n] = Mark::Done;
        }
    }
    cycles
}
