//! Model catalog: discovery across providers, static overrides, TTL caching.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::usd::Usd;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Static,
    Discovered,
}

/// One catalog entry: identity, quality score, pricing, context window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub model_id: String,
    pub provider: String,
    /// Quality score in [0, 1]; discovered models without one default to 0.5.
    pub quality_score: f64,
    /// USD per million input tokens.
    pub input_rate: Usd,
    /// USD per million output tokens.
    pub output_rate: Usd,
    pub context_window: u64,
    pub origin: Origin,
}

impl ModelInfo {
    /// Combined per-Mtoken rate used by cost-sensitive strategies.
    pub fn combined_rate(&self) -> Usd {
        self.input_rate + self.output_rate
    }
}

pub const DEFAULT_TTL_SECONDS: u64 = 3600;

/// Immutable catalog snapshot keyed by model id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Catalog {
    models: BTreeMap<String, ModelInfo>,
    pub fetched_at_ms: u64,
    pub ttl_seconds: u64,
}

impl Catalog {
    pub fn from_models(models: Vec<ModelInfo>, fetched_at_ms: u64, ttl_seconds: u64) -> Catalog {
        Catalog {
            models: models
                .into_iter()
                .map(|m| (m.model_id.clone(), m))
                .collect(),
            fetched_at_ms,
            ttl_seconds,
        }
    }

    pub fn get(&self, model_id: &str) -> Option<&ModelInfo> {
        self.models.get(model_id)
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    /// Models in ascending model-id order.
    pub fn models(&self) -> impl Iterator<Item = &ModelInfo> {
        self.models.values()
    }

    pub fn is_fresh(&self, now_ms: u64) -> bool {
        now_ms.saturating_sub(self.fetched_at_ms) < self.ttl_seconds * 1000
    }
}

/// A provider catalog endpoint. Desk-scale deployments back this with
/// fixture files; a live deployment would query the provider API.
pub trait ProviderClient: Send + Sync {
    fn name(&self) -> &str;
    fn list_models(&self) -> Result<Vec<ModelInfo>, String>;
}

/// Reads a provider's model list from a JSON fixture document.
pub struct FixtureProvider {
    name: String,
    path: PathBuf,
}

impl FixtureProvider {
    pub fn new(name: impl Into<String>, path: impl Into<PathBuf>) -> FixtureProvider {
        FixtureProvider {
            name: name.into(),
            path: path.into(),
        }
    }

    /// Loads every `*.json` fixture in a directory as one provider each.
    pub fn load_dir(dir: &std::path::Path) -> Result<Vec<FixtureProvider>, String> {
        let mut providers = Vec::new();
        let entries = fs::read_dir(dir).map_err(|e| format!("read {}: {e}", dir.display()))?;
        let mut paths: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        for path in paths {
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().to_string())
                .unwrap_or_else(|| "provider".to_string());
            providers.push(FixtureProvider::new(name, path));
        }
        Ok(providers)
    }
}

#[derive(Debug, Deserialize)]
struct FixtureDoc {
    provider: Option<String>,
    models: Vec<FixtureModel>,
}

#[derive(Debug, Deserialize)]
struct FixtureModel {
    id: String,
    quality: Option<f64>,
    input_per_mtok: f64,
    output_per_mtok: f64,
    context_window: Option<u64>,
}

impl ProviderClient for FixtureProvider {
    fn name(&self) -> &str {
        &self.name
    }

    fn list_models(&self) -> Result<Vec<ModelInfo>, String> {
        let text =
            fs::read_to_string(&self.path).map_err(|e| format!("provider {}: {e}", self.name))?;
        let doc: FixtureDoc = serde_json::from_str(&text)
            .map_err(|e| format!("provider {}: bad fixture: {e}", self.name))?;
        let provider = doc.provider.unwrap_or_else(|| self.name.clone());
        Ok(doc
            .models
            .into_iter()
            .map(|m| ModelInfo {
                model_id: m.id,
                provider: provider.clone(),
                quality_score: m.quality.unwrap_or(0.5),
                input_rate: Usd::from_dollars(m.input_per_mtok),
                output_rate: Usd::from_dollars(m.output_per_mtok),
                context_window: m.context_window.unwrap_or(8192),
                origin: Origin::Discovered,
            })
            .collect())
    }
}

#[derive(Debug)]
pub struct DiscoveryOutcome {
    pub catalog: Catalog,
    /// One warning per provider that failed; discovery proceeds regardless.
    pub warnings: Vec<String>,
}

/// Unions all provider listings with the static entries. Static entries win
/// on id collision; a failing provider yields a warning, not an error.
pub fn discover(
    providers: &[&dyn ProviderClient],
    static_entries: &[ModelInfo],
    now_ms: u64,
    ttl_seconds: u64,
) -> DiscoveryOutcome {
    let mut models: BTreeMap<String, ModelInfo> = BTreeMap::new();
    let mut warnings = Vec::new();
    for provider in providers {
        match provider.list_models() {
            Ok(list) => {
                for mut model in list {
                    model.origin = Origin::Discovered;
                    models.entry(model.model_id.clone()).or_insert(model);
                }
            }
            Err(err) => warnings.push(format!("provider {} failed: {err}", provider.name())),
        }
    }
    for entry in static_entries {
        let mut model = entry.clone();
        model.origin = Origin::Static;
        match models.entry(model.model_id.clone()) {
            Entry::Occupied(mut slot) => {
                slot.insert(model);
            }
            Entry::Vacant(slot) => {
                slot.insert(model);
            }
        }
    }
    DiscoveryOutcome {
        catalog: Catalog {
            models,
            fetched_at_ms: now_ms,
            ttl_seconds,
        },
        warnings,
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CacheError {
    #[error("catalog refresh failed with no cached fallback: {0}")]
    RefreshFailed(String),
}

#[derive(Debug)]
pub struct CacheHit {
    pub catalog: Catalog,
    pub refreshed: bool,
    /// Set when a refresh failed and a stale cache was served instead.
    pub stale_warning: Option<String>,
}

/// TTL cache over catalog snapshots.
#[derive(Default)]
pub struct CatalogCache {
    current: Option<Catalog>,
}

impl CatalogCache {
    pub fn new() -> CatalogCache {
        CatalogCache::default()
    }

    pub fn with_catalog(catalog: Catalog) -> CatalogCache {
        CatalogCache {
            current: Some(catalog),
        }
    }

    /// Serves the cache while fresh; refreshes when expired or forced.
    /// A failed refresh falls back to the stale cache with a warning.
    pub fn get_or_refresh(
        &mut self,
        now_ms: u64,
        force: bool,
        refresh: impl FnOnce() -> Result<Catalog, String>,
    ) -> Result<CacheHit, CacheError> {
        if !force {
            if let Some(cached) = &self.current {
                if cached.is_fresh(now_ms) {
                    return Ok(CacheHit {
                        catalog: cached.clone(),
                        refreshed: false,
                        stale_warning: None,
                    });
                }
            }
        }
        match refresh() {
            Ok(catalog) => {
                self.current = Some(catalog.clone());
                Ok(CacheHit {
                    catalog,
                    refreshed: true,
                    stale_warning: None,
                })
            }
            Err(err) => match &self.current {
                Some(stale) => Ok(CacheHit {
                    catalog: stale.clone(),
                    refreshed: false,
                    stale_warning: Some(format!("refresh failed, serving stale catalog: {err}")),
                }),
                None => Err(CacheError::RefreshFailed(err)),
            },
        }
    }
}

/// Convenience constructor for tests and fixtures.
pub fn model(id: &str, quality: f64, input: f64, output: f64) -> ModelInfo {
    ModelInfo {
        model_id: id.to_string(),
        provider: "fixture".to_string(),
        quality_score: quality,
        input_rate: Usd::from_dollars(input),
        output_rate: Usd::from_dollars(output),
        context_window: 8192,
        origin: Origin::Static,
    }
}
