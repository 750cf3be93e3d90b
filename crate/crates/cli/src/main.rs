//! orchid command-line interface: run tasks against scripted scenarios,
//! steer running tasks through their steering files, inspect task status,
//! discover model catalogs from fixtures, and run the loop benchmark.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use orchid::config::{load_config, Config};
use orchid::harness::{
    engine_from_config, run_loop_benchmark, task_spec, BenchConfig, ScenarioScript,
};
use orchid::orchestrator::{RunOptions, SteeringCommand, SteeringController, TaskState};
use orchid::router::catalog::{
    discover, Catalog, FixtureProvider, ModelInfo, Origin, ProviderClient,
};
use orchid::topology::TopologyKind;
use orchid::usd::Usd;

#[derive(Parser)]
#[command(name = "orchid", version, about = "Multi-agent orchestration kernel")]
struct Cli {
    /// Config file (TOML); defaults apply when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory override (default from config: ./runs).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a task through the 12-step pipeline.
    Run {
        #[arg(long)]
        prompt: String,
        /// Budget in USD, e.g. 1.00.
        #[arg(long)]
        budget: Option<String>,
        /// Operating mode: companion or power.
        #[arg(long)]
        mode: Option<String>,
        /// Force a topology instead of the forge's choice.
        #[arg(long)]
        topology: Option<String>,
        /// Scenario script driving the mock agents and judges.
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Task identifier; generated when omitted.
        #[arg(long)]
        task_id: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Steer a running task: pause, resume, redirect, or cancel.
    Steer {
        task_id: String,
        #[arg(value_enum)]
        command: SteerKind,
        /// New prompt (redirect only).
        #[arg(long)]
        prompt: Option<String>,
    },
    /// Show a task's persisted state.
    Status { task_id: String },
    /// Discover models from provider fixture files.
    Discover {
        /// Directory of provider fixture JSON documents.
        #[arg(long)]
        fixtures: PathBuf,
        /// Static model entries that shadow discovered ones.
        #[arg(long)]
        r#static: Option<PathBuf>,
        /// Refresh even if the cached catalog is fresh.
        #[arg(long)]
        force: bool,
    },
    /// Benchmarks over the design/judge/learning loop.
    Bench {
        #[command(subcommand)]
        which: BenchCommand,
    },
}

#[derive(Subcommand)]
enum BenchCommand {
    /// N tasks x M iterations with scripted judge trajectories.
    Loop {
        #[arg(long, default_value_t = 10)]
        tasks: usize,
        #[arg(long, default_value_t = 3)]
        iterations: usize,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SteerKind {
    Pause,
    Resume,
    Redirect,
    Cancel,
}

fn main() -> Result<()> {
    // Default SIGPIPE handling so piping into `head` terminates quietly
    // instead of panicking on a closed stdout.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    let mut config = match &cli.config {
        Some(path) => load_config(path).map_err(|e| anyhow::anyhow!(e))?,
        None => Config::default(),
    };
    if let Some(out) = &cli.out {
        config.out_dir = out.clone();
    }
    match cli.command {
        Command::Run {
            prompt,
            budget,
            mode,
            topology,
            scenario,
            task_id,
            seed,
        } => run(
            config, prompt, budget, mode, topology, scenario, task_id, seed,
        ),
        Command::Steer {
            task_id,
            command,
            prompt,
        } => steer(&config, &task_id, command, prompt),
        Command::Status { task_id } => status(&config, &task_id),
        Command::Discover {
            fixtures,
            r#static,
            force,
        } => discover_catalog(&config, &fixtures, r#static.as_deref(), force),
        Command::Bench { which } => match which {
            BenchCommand::Loop {
                tasks,
                iterations,
                scenario,
                seed,
            } => bench_loop(&config, tasks, iterations, &scenario, seed),
        },
    }
}

#[allow(clippy::too_many_arguments)]
fn run(
    mut config: Config,
    prompt: String,
    budget: Option<String>,
    mode: Option<String>,
    topology: Option<String>,
    scenario: Option<PathBuf>,
    task_id: Option<String>,
    seed: Option<u64>,
) -> Result<()> {
    if let Some(mode) = mode {
        config.mode = mode.parse().map_err(|e| anyhow::anyhow!("{e}"))?;
    }
    if let Some(seed) = seed {
        config.seed = seed;
    }
    let budget = match budget {
        Some(text) => Usd::parse_dollars(&text).context("parsing --budget")?,
        None => Usd::from_dollars(config.default_budget_usd),
    };
    let forced_topology = topology
        .map(|t| t.parse::<TopologyKind>())
        .transpose()
        .map_err(|e| anyhow::anyhow!(e))?;
    let script = scenario
        .map(|path| ScenarioScript::load(&path))
        .transpose()
        .context("loading scenario")?;
    let task_id = task_id.unwrap_or_else(generated_task_id);
    let engine = engine_from_config(config.clone(), script);
    let spec = task_spec(&task_id, &prompt, budget, &config);
    println!(
        "task {task_id}: {} ({:?})",
        spec.task_type.as_str(),
        config.mode
    );
    let result = engine.run_task_with(
        spec,
        RunOptions {
            forced_topology,
            ..Default::default()
        },
    )?;
    println!("status:     {}", result.status.as_str());
    println!("redesigns:  {}", result.redesign_count);
    if let Some(score) = result.score {
        println!("score:      {score:.3}");
    }
    if let Some(reward) = result.reward {
        println!("reward:     {reward:.3}");
    }
    println!("spent:      {}", result.spent);
    println!("artifacts:  {}", result.run_dir.display());
    if let Some(output) = &result.final_output {
        let preview: String = output.chars().take(400).collect();
        println!("--- final output ---\n{preview}");
    }
    Ok(())
}

fn generated_task_id() -> String {
    let millis = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0);
    format!("task-{millis}")
}

fn steer(config: &Config, task_id: &str, kind: SteerKind, prompt: Option<String>) -> Result<()> {
    let command = match kind {
        SteerKind::Pause => SteeringCommand::Pause,
        SteerKind::Resume => SteeringCommand::Resume,
        SteerKind::Cancel => SteeringCommand::Cancel,
        SteerKind::Redirect => {
            let prompt = prompt.context("redirect requires --prompt")?;
            SteeringCommand::Redirect { prompt }
        }
    };
    command.validate().map_err(|e| anyhow::anyhow!(e))?;
    let path = config.out_dir.join(task_id).join("steering.jsonl");
    SteeringController::append_to_file(&path, &command)?;
    println!(
        "queued {command:?} for task {task_id} at {}",
        path.display()
    );
    Ok(())
}

fn status(config: &Config, task_id: &str) -> Result<()> {
    let run_dir = config.out_dir.join(task_id);
    let state = TaskState::load(&run_dir).map_err(|e| anyhow::anyhow!(e))?;
    println!("task:       {}", state.task_id);
    println!("status:     {}", state.status.as_str());
    println!("step:       {}", state.current_step);
    println!("redesigns:  {}", state.redesign_count);
    println!("spent:      {}", state.spent);
    if let Some(detail) = &state.detail {
        println!("detail:     {detail}");
    }
    Ok(())
}

fn discover_catalog(
    config: &Config,
    fixtures: &Path,
    static_models: Option<&Path>,
    force: bool,
) -> Result<()> {
    let cache_path = config.out_dir.join("catalog.json");
    let now_ms = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0);
    if !force {
        if let Ok(text) = std::fs::read_to_string(&cache_path) {
            if let Ok(cached) = serde_json::from_str::<Catalog>(&text) {
                if cached.is_fresh(now_ms) {
                    println!(
                        "catalog cache hit ({} models, ttl {}s)",
                        cached.len(),
                        cached.ttl_seconds
                    );
                    print_catalog(&cached);
                    return Ok(());
                }
            }
        }
    }
    let providers = FixtureProvider::load_dir(fixtures).map_err(|e| anyhow::anyhow!(e))?;
    if providers.is_empty() {
        bail!("no provider fixtures found in {}", fixtures.display());
    }
    let refs: Vec<&dyn ProviderClient> =
        providers.iter().map(|p| p as &dyn ProviderClient).collect();
    let mut static_entries: Vec<ModelInfo> = Vec::new();
    if let Some(path) = static_models {
        let mut models = FixtureProvider::new("static", path)
            .list_models()
            .map_err(|e| anyhow::anyhow!(e))?;
        for model in &mut models {
            model.origin = Origin::Static;
        }
        static_entries = models;
    }
    let outcome = discover(&refs, &static_entries, now_ms, config.router.ttl_seconds);
    for warning in &outcome.warnings {
        eprintln!("warning: {warning}");
    }
    std::fs::create_dir_all(&config.out_dir)?;
    std::fs::write(
        &cache_path,
        serde_json::to_string_pretty(&outcome.catalog).expect("catalog serializes"),
    )?;
    println!(
        "discovered {} models from {} providers ({} warnings); cached at {}",
        outcome.catalog.len(),
        providers.len(),
        outcome.warnings.len(),
        cache_path.display()
    );
    print_catalog(&outcome.catalog);
    Ok(())
}

fn print_catalog(catalog: &Catalog) {
    println!(
        "{:<24} {:<12} {:>8} {:>12} {:>12} {:>10}",
        "model", "provider", "quality", "in $/Mtok", "out $/Mtok", "origin"
    );
    for model in catalog.models() {
        println!(
            "{:<24} {:<12} {:>8.2} {:>12.4} {:>12.4} {:>10}",
            model.model_id,
            model.provider,
            model.quality_score,
            model.input_rate.as_dollars(),
            model.output_rate.as_dollars(),
            match model.origin {
                Origin::Static => "static",
                Origin::Discovered => "discovered",
            }
        );
    }
}

fn bench_loop(
    config: &Config,
    tasks: usize,
    iterations: usize,
    scenario: &Path,
    seed: u64,
) -> Result<()> {
    let script = ScenarioScript::load(scenario).context("loading scenario")?;
    let result = run_loop_benchmark(
        &BenchConfig {
            tasks,
            iterations,
            budget: config.default_budget_usd,
            seed,
        },
        &script,
    )?;
    print!("{}", result.render_table());
    std::fs::create_dir_all(&config.out_dir)?;
    let report_path = config.out_dir.join("bench_report.json");
    std::fs::write(
        &report_path,
        serde_json::to_string_pretty(&result.to_json_report()).expect("report serializes"),
    )?;
    println!("report written to {}", report_path.display());
    Ok(())
}
