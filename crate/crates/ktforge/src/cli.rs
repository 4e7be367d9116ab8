//! Command surface: index, generate, related, trace, integrate, eval.
//!
//! Exit codes: 0 success, 1 task failures (some artifacts abandoned),
//! 2 fatal config or I/O errors. Errors print to stderr with stable
//! `error[KT###]:` prefixes.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::config::{Config, CONFIG_KEY_HELP};
use crate::frontend::model::CallableId;
use crate::frontend::{parse_project, FileSelection};
use crate::gateway::{ChatBackend, LiveBackend, LiveConfig, MockBackend, RecordBackend, ReplayBackend};
use crate::kb::{build_index, load_units, save_index, FunctionIndex};
use crate::mining::{build_call_graph, build_cfg, discover_callers, mine_usage_traces};
use crate::pipeline::{run_pipeline, ArtifactStatus, PipelineSettings, TestClassArtifact, TranscriptEntry};
use crate::refine::BuildAdapter;
use crate::retrieval::related_from_units;

#[derive(Parser)]
#[command(
    name = "ktforge",
    about = "Knowledge-driven unit test generation for Java codebases",
    after_help = CONFIG_KEY_HELP,
    version
)]
struct Cli {
    /// Config file (TOML). Flags override file values.
    #[arg(long, global = true, default_value = "ktforge.toml")]
    config: PathBuf,

    /// Log format: human or structured (JSON lines).
    #[arg(long, global = true, default_value = "human")]
    log_format: String,

    #[command(subcommand)]
    command: Commands,
}

#[derive(Subcommand)]
enum Commands {
    /// Build the knowledge base for a subject project.
    Index {
        /// Subject source root (defaults to the config's project_root).
        root: Option<PathBuf>,
        /// Output index file.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Include globs (repeatable).
        #[arg(long)]
        include: Vec<String>,
        /// Exclude globs (repeatable).
        #[arg(long)]
        exclude: Vec<String>,
    },
    /// Run the generation pipeline for one focal method or the whole task list.
    Generate {
        /// Focal method id, e.g. `com.acme.Account#deposit(long)`.
        focal: Option<String>,
        /// Run every focal method in the config's task list.
        #[arg(long)]
        all: bool,
        /// Gateway backend override: live, replay, record, mock.
        #[arg(long)]
        backend: Option<String>,
        /// Artifact output directory override.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Rank functions related to a focal method by shared usage.
    Related {
        focal: String,
        /// How many related functions to print.
        #[arg(short = 'n', long, default_value_t = 5)]
        top: usize,
        /// Knowledge-base file (defaults to the config's index_path).
        #[arg(long)]
        index: Option<PathBuf>,
    },
    /// Export a focal method's CFG and usage traces for debugging.
    Trace {
        focal: String,
        /// Subject source root override.
        #[arg(long)]
        root: Option<PathBuf>,
    },
    /// Merge a framework and generated method files into one test class.
    Integrate {
        #[arg(long)]
        framework: PathBuf,
        #[arg(long, num_args = 1..)]
        methods: Vec<PathBuf>,
        /// Output file; stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Compute the metrics report over a directory of task results.
    Eval {
        /// Directory of per-task result JSON files.
        #[arg(long)]
        results: PathBuf,
        /// Output CSV path.
        #[arg(short, long)]
        output: PathBuf,
    },
}

/// Stable error identifiers for grep-able stderr lines.
#[derive(Debug, Clone, Copy)]
enum ErrorCode {
    Config = 1,
    Io = 2,
    Frontend = 3,
    Index = 4,
    UnknownFocal = 5,
    Gateway = 6,
    Eval = 7,
    Integrate = 8,
}

struct CliError {
    code: ErrorCode,
    message: String,
    exit: i32,
}

impl CliError {
    fn fatal(code: ErrorCode, message: impl Into<String>) -> Self {
        CliError { code, message: message.into(), exit: 2 }
    }
}

fn err_print(e: &CliError) {
    eprintln!("error[KT{:03}]: {}", e.code as i32, e.message);
}

type CliResult<T> = Result<T, CliError>;

// ---------------------------------------------------------------------------
// Logging
// ---------------------------------------------------------------------------

struct KtLogger {
    structured: bool,
}

impl log::Log for KtLogger {
    fn enabled(&self, metadata: &log::Metadata) -> bool {
        metadata.level() <= log::Level::Info
    }

    fn log(&self, record: &log::Record) {
        if !self.enabled(record.metadata()) {
            return;
        }
        if self.structured {
            let line = serde_json::json!({
                "level": record.level().to_string().to_lowercase(),
                "target": record.target(),
                "message": record.args().to_string(),
            });
            eprintln!("{}", line);
        } else {
            eprintln!("[{}] {}", record.level().to_string().to_lowercase(), record.args());
        }
    }

    fn flush(&self) {}
}

fn init_logger(format: &str) {
    let logger = KtLogger { structured: format == "structured" };
    if log::set_boxed_logger(Box::new(logger)).is_ok() {
        log::set_max_level(log::LevelFilter::Info);
    }
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

/// Parse argv and dispatch; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version with exit code 0
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    init_logger(&cli.log_format);

    let explicit_config = cli.config != PathBuf::from("ktforge.toml");
    let config = if cli.config.exists() {
        match Config::load(&cli.config) {
            Ok(c) => c,
            Err(e) => {
                err_print(&CliError::fatal(ErrorCode::Config, e.to_string()));
                return 2;
            }
        }
    } else if explicit_config {
        err_print(&CliError::fatal(
            ErrorCode::Config,
            format!("config file not found: {}", cli.config.display()),
        ));
        return 2;
    } else {
        Config::default()
    };

    let result = match cli.command {
        Commands::Index { root, output, include, exclude } => {
            cmd_index(&config, root, output, include, exclude)
        }
        Commands::Generate { focal, all, backend, output } => {
            cmd_generate(&config, focal, all, backend, output)
        }
        Commands::Related { focal, top, index } => cmd_related(&config, &focal, top, index),
        Commands::Trace { focal, root } => cmd_trace(&config, &focal, root),
        Commands::Integrate { framework, methods, output } => {
            cmd_integrate(&framework, &methods, output)
        }
        Commands::Eval { results, output } => cmd_eval(&results, &output),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            err_print(&e);
            e.exit
        }
    }
}

fn build_project_index(config: &Config, root: &Path, selection: &FileSelection) -> CliResult<FunctionIndex> {
    let _ = config;
    let model = parse_project(root, selection)
        .map_err(|e| CliError::fatal(ErrorCode::Frontend, e.to_string()))?;
    for diag in &model.diagnostics {
        log::warn!("skipped {}: {}", diag.path.display(), diag.message);
    }
    build_index(model).map_err(|e| CliError::fatal(ErrorCode::Index, e.to_string()))
}

fn cmd_index(
    config: &Config,
    root: Option<PathBuf>,
    output: Option<PathBuf>,
    include: Vec<String>,
    exclude: Vec<String>,
) -> CliResult<i32> {
    let root = root.unwrap_or_else(|| config.project_root.clone());
    let selection = FileSelection {
        includes: if include.is_empty() { config.include.clone() } else { include },
        excludes: if exclude.is_empty() { config.exclude.clone() } else { exclude },
    };
    let index = build_project_index(config, &root, &selection)?;
    let output = output.unwrap_or_else(|| config.index_path.clone());
    save_index(&index, &output).map_err(|e| CliError::fatal(ErrorCode::Io, e.to_string()))?;
    log::info!(
        "indexed {} units from {} classes -> {}",
        index.units.len(),
        index.model.classes.len(),
        output.display()
    );
    Ok(0)
}

fn cmd_related(
    config: &Config,
    focal: &str,
    top: usize,
    index_path: Option<PathBuf>,
) -> CliResult<i32> {
    let path = index_path.unwrap_or_else(|| config.index_path.clone());
    let units = load_units(&path).map_err(|e| CliError::fatal(ErrorCode::Index, e.to_string()))?;
    let focal_id = CallableId(focal.to_string());
    let related = related_from_units(&focal_id, &units, top).map_err(|e| CliError {
        code: ErrorCode::UnknownFocal,
        message: e.to_string(),
        exit: 2,
    })?;
    for (id, sim) in related {
        println!("{:.4}  {}", sim.value(), id);
    }
    Ok(0)
}

fn cmd_trace(config: &Config, focal: &str, root: Option<PathBuf>) -> CliResult<i32> {
    let root = root.unwrap_or_else(|| config.project_root.clone());
    let selection =
        FileSelection { includes: config.include.clone(), excludes: config.exclude.clone() };
    let index = build_project_index(config, &root, &selection)?;
    let focal_id = CallableId(focal.to_string());
    let Some(decl) = index.model.callable(&focal_id) else {
        return Err(CliError {
            code: ErrorCode::UnknownFocal,
            message: format!("unknown focal callable: {}", focal),
            exit: 2,
        });
    };
    let graph = build_call_graph(&index);
    if decl.body.is_some() {
        let cfg = build_cfg(&index.model, decl, &index.deps[&focal_id])
            .map_err(|e| CliError::fatal(ErrorCode::Frontend, e.to_string()))?;
        println!("{}", cfg.to_dot());
    }
    for chain in discover_callers(&focal_id, &graph) {
        println!(
            "// caller {} (chain: {})",
            chain.caller,
            chain.chain.iter().map(|c| c.as_str()).collect::<Vec<_>>().join(" -> ")
        );
    }
    for trace in mine_usage_traces(&focal_id, &index, &graph, config.max_usage_traces) {
        println!("{}", crate::mining::render_trace(&trace));
    }
    Ok(0)
}

fn cmd_integrate(
    framework: &Path,
    methods: &[PathBuf],
    output: Option<PathBuf>,
) -> CliResult<i32> {
    let framework_text = std::fs::read_to_string(framework)
        .map_err(|e| CliError::fatal(ErrorCode::Io, format!("{}: {}", framework.display(), e)))?;
    let mut snippets = Vec::new();
    for m in methods {
        let text = std::fs::read_to_string(m)
            .map_err(|e| CliError::fatal(ErrorCode::Io, format!("{}: {}", m.display(), e)))?;
        snippets.push(text);
    }
    let (merged, report) = crate::integrate::integrate(&framework_text, &snippets)
        .map_err(|e| CliError::fatal(ErrorCode::Integrate, e.to_string()))?;
    for diag in &report.diagnostics {
        log::warn!("skipped member: {} ({})", diag.message, diag.snippet_excerpt);
    }
    match output {
        Some(path) => std::fs::write(&path, merged)
            .map_err(|e| CliError::fatal(ErrorCode::Io, format!("{}: {}", path.display(), e)))?,
        None => print!("{}", merged),
    }
    Ok(0)
}

fn cmd_eval(results: &Path, output: &Path) -> CliResult<i32> {
    let tasks = crate::eval::load_task_results(results)
        .map_err(|e| CliError::fatal(ErrorCode::Eval, e.to_string()))?;
    let report = crate::eval::compute_metrics(&tasks)
        .map_err(|e| CliError::fatal(ErrorCode::Eval, e.to_string()))?;
    std::fs::write(output, report.to_csv())
        .map_err(|e| CliError::fatal(ErrorCode::Io, format!("{}: {}", output.display(), e)))?;
    println!("{}", report.to_csv().trim_end());
    Ok(0)
}

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

fn make_backend(config: &Config, backend_name: &str) -> CliResult<Box<dyn ChatBackend>> {
    match backend_name {
        "live" => {
            let live = LiveBackend::new(LiveConfig {
                base_url: config.gateway.base_url.clone(),
                api_key: std::env::var("KTFORGE_API_KEY").ok(),
                max_in_flight: config.gateway.max_in_flight,
                max_attempts: config.gateway.max_attempts,
                backoff_ms: config.gateway.backoff_ms,
                timeout_s: config.gateway.timeout_s,
            });
            Ok(Box::new(live))
        }
        "replay" => {
            let mut entries = std::collections::BTreeMap::new();
            let dir = &config.gateway.fixtures_dir;
            let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
                .map_err(|e| {
                    CliError::fatal(
                        ErrorCode::Gateway,
                        format!("fixtures dir {}: {}", dir.display(), e),
                    )
                })?
                .filter_map(|e| e.ok())
                .map(|e| e.path())
                .filter(|p| p.extension().map(|x| x == "jsonl").unwrap_or(false))
                .collect();
            files.sort();
            for file in files {
                let loaded = crate::gateway::load_fixture(&file)
                    .map_err(|e| CliError::fatal(ErrorCode::Gateway, e.to_string()))?;
                entries.extend(loaded);
            }
            Ok(Box::new(ReplayBackend::from_entries(entries)))
        }
        "record" => {
            let live = make_backend(config, "live")?;
            let dir = &config.gateway.fixtures_dir;
            std::fs::create_dir_all(dir)
                .map_err(|e| CliError::fatal(ErrorCode::Io, e.to_string()))?;
            // one fixture file per recorded run
            let mut n = 0;
            let path = loop {
                let candidate = dir.join(format!("run-{:03}.jsonl", n));
                if !candidate.exists() {
                    break candidate;
                }
                n += 1;
            };
            let recorder = RecordBackend::create(live, &path)
                .map_err(|e| CliError::fatal(ErrorCode::Gateway, e.to_string()))?;
            Ok(Box::new(recorder))
        }
        "mock" => {
            let Some(script_path) = &config.gateway.mock_script else {
                return Err(CliError::fatal(
                    ErrorCode::Config,
                    "mock backend requires gateway.mock_script",
                ));
            };
            let text = std::fs::read_to_string(script_path)
                .map_err(|e| CliError::fatal(ErrorCode::Io, e.to_string()))?;
            let script: Vec<String> = serde_json::from_str(&text)
                .map_err(|e| CliError::fatal(ErrorCode::Config, e.to_string()))?;
            Ok(Box::new(MockBackend::new(script)))
        }
        other => Err(CliError::fatal(
            ErrorCode::Config,
            format!("unknown gateway backend `{}` (live|replay|record|mock)", other),
        )),
    }
}

/// Directory-safe form of a callable id.
pub fn sanitize_focal_id(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_alphanumeric() || c == '.' || c == '_' || c == '-' { c } else { '_' })
        .collect()
}

/// Write one artifact's files under its own subdirectory.
pub fn write_artifact(
    outdir: &Path,
    artifact: &TestClassArtifact,
    transcript: &[TranscriptEntry],
) -> std::io::Result<PathBuf> {
    let dir = outdir.join(sanitize_focal_id(&artifact.focal_id));
    std::fs::create_dir_all(&dir)?;
    if let Some(source) = &artifact.integrated_source {
        let class_name = crate::integrate::parse_test_class(source)
            .ok()
            .and_then(|c| {
                c.class_header
                    .split_whitespace()
                    .skip_while(|t| *t != "class")
                    .nth(1)
                    .map(|s| s.to_string())
            })
            .unwrap_or_else(|| "GeneratedTest".into());
        std::fs::write(dir.join(format!("{}.java", class_name)), source)?;
    }
    std::fs::write(
        dir.join("design.json"),
        serde_json::to_string_pretty(&artifact.groups).expect("groups serialize"),
    )?;
    let mut transcript_text = String::new();
    for entry in transcript {
        transcript_text.push_str(&serde_json::to_string(entry).expect("entry serializes"));
        transcript_text.push('\n');
    }
    std::fs::write(dir.join("transcript.jsonl"), transcript_text)?;
    std::fs::write(
        dir.join("artifact.json"),
        serde_json::to_string_pretty(artifact).expect("artifact serializes"),
    )?;
    Ok(dir)
}

fn cmd_generate(
    config: &Config,
    focal: Option<String>,
    all: bool,
    backend_override: Option<String>,
    output_override: Option<PathBuf>,
) -> CliResult<i32> {
    let tasks: Vec<String> = if all {
        if config.focal_methods.is_empty() {
            return Err(CliError::fatal(
                ErrorCode::Config,
                "generate --all needs focal_methods in the config",
            ));
        }
        config.focal_methods.clone()
    } else {
        match focal {
            Some(f) => vec![f],
            None => {
                return Err(CliError::fatal(
                    ErrorCode::Config,
                    "generate needs a focal method id or --all",
                ))
            }
        }
    };

    let selection =
        FileSelection { includes: config.include.clone(), excludes: config.exclude.clone() };
    let index = build_project_index(config, &config.project_root, &selection)?;
    let graph = build_call_graph(&index);
    let settings: PipelineSettings = config
        .pipeline_settings()
        .map_err(|e| CliError::fatal(ErrorCode::Config, e.to_string()))?;
    let backend_name =
        backend_override.unwrap_or_else(|| config.gateway.backend.clone());
    let backend = make_backend(config, &backend_name)?;
    let outdir = output_override.unwrap_or_else(|| config.output_dir.clone());
    std::fs::create_dir_all(&outdir)
        .map_err(|e| CliError::fatal(ErrorCode::Io, e.to_string()))?;

    let workers = if config.workers == 0 {
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    } else {
        config.workers
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.min(tasks.len().max(1)))
        .build()
        .map_err(|e| CliError::fatal(ErrorCode::Config, e.to_string()))?;

    let results: Vec<Result<ArtifactStatus, String>> = pool.install(|| {
        use rayon::prelude::*;
        tasks
            .par_iter()
            .map(|task| {
                let focal_id = CallableId(task.clone());
                let artifact_dir = outdir.join(sanitize_focal_id(task));
                let adapter: BuildAdapter = config.build_adapter(&artifact_dir.join("build"));
                match run_pipeline(&focal_id, &index, &graph, &settings, backend.as_ref(), &adapter)
                {
                    Ok((artifact, transcript)) => {
                        let status = artifact.status;
                        write_artifact(&outdir, &artifact, &transcript)
                            .map_err(|e| format!("{}: {}", task, e))?;
                        log::info!(
                            "{}: {:?} (groups: {}, methods: {}, repairs: {})",
                            task,
                            status,
                            artifact.groups.len(),
                            artifact.methods.len(),
                            artifact.repair_history.len()
                        );
                        Ok(status)
                    }
                    Err(e) => Err(format!("{}: {}", task, e)),
                }
            })
            .collect()
    });

    let mut worst = 0;
    for result in &results {
        match result {
            Ok(ArtifactStatus::Abandoned) => worst = worst.max(1),
            Ok(_) => {}
            Err(message) => {
                err_print(&CliError {
                    code: ErrorCode::UnknownFocal,
                    message: message.clone(),
                    exit: 2,
                });
                worst = worst.max(2);
            }
        }
    }
    Ok(worst)
}
