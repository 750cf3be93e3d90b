//! Deterministic scenario-driven mocks, the loop benchmark, and engine
//! assembly helpers for the CLI and tests.

pub mod bench;
pub mod mock;
pub mod scenario;
pub mod stats;

pub use bench::{run_loop_benchmark, BenchConfig, BenchError, BenchResult};
pub use mock::{ScriptedExecutor, ScriptedJudge};
pub use scenario::{
    AgentRule, BenchScript, JudgeRule, ScenarioError, ScenarioScript, TurnResponse,
};
pub use stats::{paired_t_test, StatsError, TTest};

use std::sync::Arc;

use crate::config::Config;
use crate::judge::{JudgeEntry, JudgePanel};
use crate::orchestrator::{Engine, EngineBuilder};
use crate::router::catalog::{
    discover, Catalog, FixtureProvider, ModelInfo, Origin, ProviderClient,
};
use crate::usd::Usd;

/// Builds an engine wired with scripted mocks from a scenario (or defaults
/// when none is given) and the configured judge panel.
pub fn engine_from_config(config: Config, scenario: Option<ScenarioScript>) -> Engine {
    let script = Arc::new(scenario.unwrap_or_default());
    let catalog = catalog_from_config(&config);
    let panel = panel_from_config(&config, &script);
    EngineBuilder::new()
        .config(config)
        .catalog(catalog)
        .executor(Arc::new(ScriptedExecutor::new(script.clone())))
        .panel(panel)
        .build()
}

/// Judge panel backed by scripted judges for every configured seat.
pub fn panel_from_config(config: &Config, script: &Arc<ScenarioScript>) -> JudgePanel {
    let entry = |seat: &crate::config::JudgeSeat| {
        JudgeEntry::new(Arc::new(ScriptedJudge::new(
            &seat.id,
            seat.tier,
            script.clone(),
        )))
    };
    JudgePanel::new(
        config.judges.panel.iter().map(entry).collect(),
        config.judges.reserves.iter().map(entry).collect(),
    )
}

/// Catalog from configured fixture/static files, or the built-in catalog.
pub fn catalog_from_config(config: &Config) -> Catalog {
    let mut static_entries: Vec<ModelInfo> = Vec::new();
    if let Some(path) = &config.router.static_models {
        if let Ok(mut models) = FixtureProvider::new("static", path).list_models() {
            for model in &mut models {
                model.origin = Origin::Static;
            }
            static_entries = models;
        }
    }
    if let Some(dir) = &config.router.fixtures_dir {
        if let Ok(providers) = FixtureProvider::load_dir(dir) {
            let refs: Vec<&dyn ProviderClient> =
                providers.iter().map(|p| p as &dyn ProviderClient).collect();
            let outcome = discover(&refs, &static_entries, 0, config.router.ttl_seconds);
            if !outcome.catalog.is_empty() {
                return outcome.catalog;
            }
        }
    }
    if !static_entries.is_empty() {
        return Catalog::from_models(static_entries, 0, config.router.ttl_seconds);
    }
    crate::orchestrator::builtin_catalog()
}

/// Convenience task spec constructor used by the CLI and tests.
pub fn task_spec(id: &str, prompt: &str, budget: Usd, config: &Config) -> crate::task::TaskSpec {
    crate::task::TaskSpec {
        id: id.to_string(),
        prompt: prompt.to_string(),
        task_type: crate::forge::classify_task(prompt),
        budget,
        mode: config.mode,
    }
}
