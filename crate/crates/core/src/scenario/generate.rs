use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::{DiscoveryTrigger, ResourceSpec, Scenario};
use crate::priority::{ChromiumPriority, ResourceType};
use crate::time::SimTime;

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorParams {
    pub name: String,
    /// Total resources, main document included.
    pub resource_count: usize,
    /// Relative count weight of each sub-resource type.
    pub proportions: BTreeMap<ResourceType, f64>,
    /// Inclusive `(min, max)` size in bytes per type. The document range is
    /// always required; other types only when their proportion is non-zero.
    pub size_ranges: BTreeMap<ResourceType, (u64, u64)>,
    pub seed: u64,
}

impl GeneratorParams {
    /// Mix loosely modeled on a commercial landing page: mostly media and
    /// scripts, a handful of stylesheets and fonts.
    pub fn new(resource_count: usize, seed: u64) -> GeneratorParams {
        use ResourceType::*;
        GeneratorParams {
            name: format!("synthetic-{resource_count}-{seed}"),
            resource_count,
            proportions: BTreeMap::from([
                (Document, 0.0),
                (Stylesheet, 0.10),
                (Font, 0.05),
                (Script, 0.32),
                (Media, 0.35),
                (Other, 0.18),
            ]),
            size_ranges: BTreeMap::from([
                (Document, (20_000, 120_000)),
                (Stylesheet, (2_000, 60_000)),
                (Font, (15_000, 50_000)),
                (Script, (2_000, 200_000)),
                (Media, (3_000, 250_000)),
                (Other, (200, 10_000)),
            ]),
            seed,
        }
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn only(mut self, rtype: ResourceType) -> Self {
        for (t, w) in self.proportions.iter_mut() {
            *w = if *t == rtype { 1.0 } else { 0.0 };
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeneratorError {
    #[error("resource_count must be at least 1")]
    NoResources,
    #[error("proportions must be finite, non-negative and not all zero")]
    BadProportions,
    #[error("no size range for {0:?}")]
    MissingSizeRange(ResourceType),
    #[error("size range for {0:?} has min > max or a zero-byte bound")]
    BadSizeRange(ResourceType),
}

fn validate(params: &GeneratorParams) -> Result<(), GeneratorError> {
    if params.resource_count == 0 {
        return Err(GeneratorError::NoResources);
    }
    let weights = params.proportions.values();
    if weights.clone().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(GeneratorError::BadProportions);
    }
    if params.resource_count > 1 && weights.sum::<f64>() <= 0.0 {
        return Err(GeneratorError::BadProportions);
    }
    let used = params
        .proportions
        .iter()
        .filter(|(_, w)| **w > 0.0)
        .map(|(t, _)| *t)
        .chain([ResourceType::Document]);
    for rtype in used {
        let &(min, max) = params
            .size_ranges
            .get(&rtype)
            .ok_or(GeneratorError::MissingSizeRange(rtype))?;
        if min == 0 || min > max {
            return Err(GeneratorError::BadSizeRange(rtype));
        }
    }
    Ok(())
}

fn chromium_priority(rtype: ResourceType, rng: &mut impl Rng) -> ChromiumPriority {
    use ChromiumPriority::*;
    match rtype {
        ResourceType::Document | ResourceType::Stylesheet => VeryHigh,
        ResourceType::Font => High,
        ResourceType::Script | ResourceType::Media => [High, Medium, Low][rng.random_range(0..3)],
        ResourceType::Other => [Low, VeryLow][rng.random_range(0..2)],
    }
}

fn file_name(rtype: ResourceType, index: usize) -> String {
    let (stem, ext) = match rtype {
        ResourceType::Document => ("frame", "html"),
        ResourceType::Stylesheet => ("style", "css"),
        ResourceType::Font => ("font", "woff2"),
        ResourceType::Script => ("script", "js"),
        ResourceType::Media => ("image", "jpg"),
        ResourceType::Other => ("data", "json"),
    };
    format!("{stem}-{index}.{ext}")
}

/// Builds a deterministic synthetic page.
///
/// The main document is requested at time zero; every other resource is
/// discovered after a random tenth (10%..100%) of the document has been
/// sent. Stylesheets and fonts are render-blocking. The LCP candidate is the
/// hero image: the earliest-discovered high-priority image, or the largest
/// image when none is high priority.
pub fn generate_synthetic(params: &GeneratorParams) -> Result<Scenario, GeneratorError> {
    validate(params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let size = |rtype: ResourceType, rng: &mut ChaCha8Rng| {
        let (min, max) = params.size_ranges[&rtype];
        rng.random_range(min..=max)
    };

    let doc_id = "index.html".to_string();
    let mut resources = vec![ResourceSpec::new(
        doc_id.clone(),
        ResourceType::Document,
        size(ResourceType::Document, &mut rng),
        ChromiumPriority::VeryHigh,
        DiscoveryTrigger::AtTime(SimTime::ZERO),
    )
    .render_blocking()];

    if params.resource_count > 1 {
        let types: Vec<ResourceType> = params.proportions.keys().copied().collect();
        let picker = WeightedIndex::new(params.proportions.values().copied())
            .map_err(|_| GeneratorError::BadProportions)?;
        for index in 1..params.resource_count {
            let rtype = types[picker.sample(&mut rng)];
            let size_bytes = size(rtype, &mut rng);
            let chromium = chromium_priority(rtype, &mut rng);
            let tenths: u32 = rng.random_range(1..=10);
            let mut spec = ResourceSpec::new(
                file_name(rtype, index),
                rtype,
                size_bytes,
                chromium,
                DiscoveryTrigger::AfterFraction {
                    parent: doc_id.clone(),
                    fraction: f64::from(tenths) / 10.0,
                    delta: SimTime::ZERO,
                },
            );
            spec.render_blocking = matches!(rtype, ResourceType::Stylesheet | ResourceType::Font);
            resources.push(spec);
        }
    }

    if let Some(i) = hero_image(&resources) {
        resources[i].lcp_candidate = true;
    }

    Ok(Scenario::new(params.name.clone(), resources))
}

fn discovery_fraction(r: &ResourceSpec) -> f64 {
    match r.trigger {
        DiscoveryTrigger::AfterFraction { fraction, .. } => fraction,
        DiscoveryTrigger::AfterComplete { .. } => 1.0,
        DiscoveryTrigger::AtTime(_) => 0.0,
    }
}

fn hero_image(resources: &[ResourceSpec]) -> Option<usize> {
    let media = || {
        resources
            .iter()
            .enumerate()
            .filter(|(_, r)| r.rtype == ResourceType::Media)
    };
    media()
        .filter(|(_, r)| r.chromium_priority == ChromiumPriority::High)
        .min_by(|(ia, a), (ib, b)| {
            discovery_fraction(a)
                .total_cmp(&discovery_fraction(b))
                .then(ia.cmp(ib))
        })
        .or_else(|| {
            media().max_by(|(ia, a), (ib, b)| a.size_bytes.cmp(&b.size_bytes).then(ib.cmp(ia)))
        })
        .map(|(i, _)| i)
}
