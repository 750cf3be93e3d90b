//! The pure model-selection strategies: cheapest, quality, balanced, cascade.
//! Each is a deterministic function of the catalog snapshot.

use std::collections::BTreeMap;

use super::catalog::{Catalog, ModelInfo};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum RouteError {
    #[error("catalog is empty")]
    EmptyCatalog,
    #[error("no model meets quality threshold {0}")]
    NoEligibleModel(f64),
    #[error("cascade exhausted: {0:?}")]
    CascadeExhausted(Vec<(String, String)>),
}

/// Min-max normalized combined rate per model; a single-model catalog
/// normalizes to 0 (no cost signal).
pub fn cost_norm(catalog: &Catalog) -> BTreeMap<String, f64> {
    let rates: Vec<(String, i64)> = catalog
        .models()
        .map(|m| (m.model_id.clone(), m.combined_rate().micros()))
        .collect();
    let min = rates.iter().map(|(_, r)| *r).min().unwrap_or(0);
    let max = rates.iter().map(|(_, r)| *r).max().unwrap_or(0);
    let range = (max - min) as f64;
    rates
        .into_iter()
        .map(|(id, r)| {
            let norm = if range > 0.0 {
                (r - min) as f64 / range
            } else {
                0.0
            };
            (id, norm)
        })
        .collect()
}

/// Cheapest model with quality >= `quality_min`; ties by model id.
pub fn route_cheapest(catalog: &Catalog, quality_min: f64) -> Result<&ModelInfo, RouteError> {
    if catalog.is_empty() {
        return Err(RouteError::EmptyCatalog);
    }
    catalog
        .models()
        .filter(|m| m.quality_score >= quality_min)
        .min_by(|a, b| {
            (a.combined_rate().micros(), a.model_id.as_str())
                .cmp(&(b.combined_rate().micros(), b.model_id.as_str()))
        })
        .ok_or(RouteError::NoEligibleModel(quality_min))
}

/// Highest quality score; ties by cheaper combined rate, then model id.
pub fn route_quality(catalog: &Catalog) -> Result<&ModelInfo, RouteError> {
    catalog
        .models()
        .max_by(|a, b| {
            (a.quality_score, -a.combined_rate().micros())
                .partial_cmp(&(b.quality_score, -b.combined_rate().micros()))
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(b.model_id.as_str().cmp(a.model_id.as_str()))
        })
        .ok_or(RouteError::EmptyCatalog)
}

pub const BALANCED_QUALITY_WEIGHT: f64 = 0.7;

/// Weighted blend of quality and inverse normalized cost:
/// `w * quality + (1 - w) * (1 - cost_norm)`; ties by model id.
pub fn route_balanced(catalog: &Catalog, quality_weight: f64) -> Result<&ModelInfo, RouteError> {
    if catalog.is_empty() {
        return Err(RouteError::EmptyCatalog);
    }
    let norms = cost_norm(catalog);
    catalog
        .models()
        .map(|m| {
            let score = quality_weight * m.quality_score
                + (1.0 - quality_weight) * (1.0 - norms[&m.model_id]);
            (m, score)
        })
        .max_by(|(a, sa), (b, sb)| {
            sa.partial_cmp(sb)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(b.model_id.as_str().cmp(a.model_id.as_str()))
        })
        .map(|(m, _)| m)
        .ok_or(RouteError::EmptyCatalog)
}

/// Tries models in quality-descending order (ties by model id); the first
/// successful attempt wins. All failures are reported on exhaustion.
pub fn route_cascade<T>(
    catalog: &Catalog,
    mut attempt: impl FnMut(&ModelInfo) -> Result<T, String>,
) -> Result<(&ModelInfo, T), RouteError> {
    if catalog.is_empty() {
        return Err(RouteError::EmptyCatalog);
    }
    let mut order: Vec<&ModelInfo> = catalog.models().collect();
    order.sort_by(|a, b| {
        b.quality_score
            .partial_cmp(&a.quality_score)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.model_id.cmp(&b.model_id))
    });
    let mut failures = Vec::new();
    for model in order {
        match attempt(model) {
            Ok(value) => return Ok((model, value)),
            Err(err) => failures.push((model.model_id.clone(), err)),
        }
    }
    Err(RouteError::CascadeExhausted(failures))
}

/// The model cascade order without attempting calls. Used when a strategy
/// must be resolved to a single model up front.
pub fn cascade_order(catalog: &Catalog) -> Vec<&ModelInfo> {
    let mut order: Vec<&ModelInfo> = catalog.models().collect();
    order.sort_by(|a, b| {
        b.quality_score
            .partial_cmp(&a.quality_score)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.model_id.cmp(&b.model_id))
    });
    order
}
