#![allow(dead_code)]

use std::path::PathBuf;

use eps_sched::scenario::{generate_synthetic, load_scenario, DiscoveryTrigger, GeneratorParams};
use eps_sched::{Scenario, SimTime};
use rand::Rng;

/// Synthetic page with extra dependency chains and random discovery delays.
pub fn random_scenario(rng: &mut impl Rng, max_count: usize) -> Scenario {
    let count = rng.random_range(1..=max_count);
    let mut s = generate_synthetic(&GeneratorParams::new(count, rng.random())).unwrap();
    for i in 1..s.resources.len() {
        if rng.random_bool(0.3) {
            let parent = s.resources[rng.random_range(0..i)].id.clone();
            let delta = SimTime::from_micros(rng.random_range(0..50_000));
            s.resources[i].trigger = if rng.random_bool(0.5) {
                DiscoveryTrigger::AfterComplete { parent, delta }
            } else {
                DiscoveryTrigger::AfterFraction {
                    parent,
                    fraction: rng.random_range(0.0..=1.0),
                    delta,
                }
            };
        }
    }
    s
}

/// Forces every resource onto one delivery mode with random urgencies.
pub fn override_priorities(s: &mut Scenario, rng: &mut impl Rng, incremental: bool) {
    for r in &mut s.resources {
        let u = rng.random_range(0..=7);
        r.priority_field = Some(if incremental {
            format!("u={u}, i")
        } else {
            format!("u={u}")
        });
    }
}

pub fn shipped(name: &str) -> Scenario {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "scenarios", name]
        .iter()
        .collect();
    let bytes = std::fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    load_scenario(&bytes).unwrap()
}
