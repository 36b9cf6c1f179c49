mod report;

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use layoutminer_core::analysis::{SdConvention, TaskKind, DEFAULT_CLUSTER_THRESHOLD_M};
use layoutminer_core::reconstruct::{self, SceneOptions, DEFAULT_QUAD_WIDTH_M, SCENE_EXTENSION};
use layoutminer_core::script::{check_convergence, SessionScript};
use layoutminer_core::{ScenarioKey, Store, StoreOptions, SyncMode};
use layoutminer_sim::{Client, PlacementOptions, PreviewOptions, ScriptShape};
use rand::SeedableRng;

use report::{ClusterMode, Report, ReportOptions};

const DEFAULT_PORT: u16 = 8787;

#[derive(Parser)]
#[command(
    name = "layoutminer",
    version,
    about = "Collect, mirror and analyze XR widget layouts"
)]
#[command(arg_required_else_help = true)]
struct Cli {
    /// Store directory [env: LAYOUTMINER_DATA_DIR, DATA_DIR]
    #[arg(long, global = true)]
    data_dir: Option<PathBuf>,
    /// Service port [env: LAYOUTMINER_PORT, PORT]
    #[arg(long, global = true)]
    port: Option<u16>,
    /// Preview poll interval in milliseconds
    #[arg(long, global = true, default_value_t = 250)]
    poll_ms: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sync and annotation HTTP service
    Serve(ServeArgs),
    /// Load a dataset directory into the store
    Import { dir: PathBuf },
    /// Write the store as a dataset directory
    Export { dir: PathBuf },
    /// Compute an analysis report as JSON
    Analyze(AnalyzeArgs),
    /// Run a placement script against a running service
    Simulate(SimulateArgs),
    /// Mirror a scenario's layout from a running service
    Preview(PreviewArgs),
    /// Export a scenario as a scene file, or one per step
    Scene(SceneArgs),
    /// Write a random, valid placement script
    GenScript(GenScriptArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Durability {
    /// fsync every record before acknowledging it
    Full,
    /// leave flushing to the OS
    Os,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    #[arg(long, value_enum, default_value_t = Durability::Full)]
    durability: Durability,
}

#[derive(Clone, Copy, ValueEnum)]
enum Sd {
    Population,
    Sample,
}

fn parse_task_kind(s: &str) -> Result<(String, TaskKind), String> {
    let (task, kind) = s
        .split_once('=')
        .ok_or_else(|| format!("expected TASK=static|dynamic, got `{s}`"))?;
    let kind = match kind {
        "static" => TaskKind::Static,
        "dynamic" => TaskKind::Dynamic,
        other => return Err(format!("unknown task kind `{other}`")),
    };
    Ok((task.to_owned(), kind))
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(value_enum)]
    report: Report,
    /// Restrict to one environment
    #[arg(long)]
    env: Option<String>,
    /// Distance threshold for computed clusters
    #[arg(long = "threshold-m", alias = "threshold", default_value_t = DEFAULT_CLUSTER_THRESHOLD_M)]
    threshold_m: f64,
    #[arg(long, value_enum, default_value_t = ClusterMode::Annotated)]
    clusters: ClusterMode,
    /// Standard deviation convention
    #[arg(long, value_enum, default_value_t = Sd::Population)]
    sd: Sd,
    /// Entries in the functionalities report
    #[arg(long, default_value_t = 10)]
    top: usize,
    /// Task label for static-dynamic, e.g. `relaxing=static` (repeatable)
    #[arg(long = "task-kind", value_parser = parse_task_kind)]
    task_kinds: Vec<(String, TaskKind)>,
    /// Write the report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EndpointArgs {
    /// Service base URL [default: http://127.0.0.1:<port>]
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long, default_value = "cli")]
    client_id: String,
}

#[derive(Args)]
struct SimulateArgs {
    script: PathBuf,
    #[command(flatten)]
    endpoint: EndpointArgs,
    /// Honor the script's at_ms spacing in wall time
    #[arg(long)]
    realtime: bool,
    /// Afterwards, mirror the layout and check it against the transcript
    #[arg(long)]
    verify: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PreviewArgs {
    /// participant/environment/task
    scenario: ScenarioKey,
    #[command(flatten)]
    endpoint: EndpointArgs,
    #[arg(long, default_value_t = 3)]
    quiet_polls: u32,
    /// Long-poll budget per request
    #[arg(long, default_value_t = 0)]
    wait_ms: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SceneArgs {
    /// participant/environment/task
    scenario: ScenarioKey,
    /// One scene per event, written into the --out directory
    #[arg(long)]
    step: bool,
    /// Scene after this seq instead of the whole log
    #[arg(long, conflicts_with = "step")]
    as_of: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_QUAD_WIDTH_M)]
    quad_width_m: f64,
    #[arg(long)]
    flip_normals: bool,
    /// Reference copied into the scene, e.g. a room scan (repeatable)
    #[arg(long)]
    overlay: Vec<String>,
    /// Width/height of screenshots whose image cannot be decoded
    #[arg(long, default_value_t = 1.0)]
    fallback_aspect: f64,
    /// File (or directory with --step)
    #[arg(long, required_if_eq("step", "true"))]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenScriptArgs {
    /// participant/environment/task
    scenario: ScenarioKey,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    min_widgets: usize,
    #[arg(long, default_value_t = 40)]
    max_widgets: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn data_dir(cli: &Cli) -> PathBuf {
    cli.data_dir
        .clone()
        .or_else(|| std::env::var_os("LAYOUTMINER_DATA_DIR").map(PathBuf::from))
        .or_else(|| std::env::var_os("DATA_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("layoutminer-data"))
}

fn port(cli: &Cli) -> Result<u16> {
    if let Some(p) = cli.port {
        return Ok(p);
    }
    for var in ["LAYOUTMINER_PORT", "PORT"] {
        if let Ok(v) = std::env::var(var) {
            return v
                .parse()
                .with_context(|| format!("{var}=`{v}` is not a port"));
        }
    }
    Ok(DEFAULT_PORT)
}

fn endpoint(cli: &Cli, args: &EndpointArgs) -> Result<Client> {
    let base = match &args.endpoint {
        Some(e) => e.clone(),
        None => format!("http://127.0.0.1:{}", port(cli)?),
    };
    Ok(Client::new(base))
}

fn open_store(cli: &Cli) -> Result<Store> {
    let dir = data_dir(cli);
    Store::open(&dir).with_context(|| format!("opening store at {}", dir.display()))
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent)?;
            }
            fs::write(path, text).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(stdout.flush()?)
        }
    }
}

fn pretty<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("output serializes");
    s.push('\n');
    s
}

fn serve(cli: &Cli, args: &ServeArgs) -> Result<()> {
    let opts = StoreOptions {
        sync: match args.durability {
            Durability::Full => SyncMode::Full,
            Durability::Os => SyncMode::OsBuffered,
        },
        ..Default::default()
    };
    let dir = data_dir(cli);
    let store = Store::open_with(&dir, opts)
        .with_context(|| format!("opening store at {}", dir.display()))?;
    let addr: SocketAddr = format!("{}:{}", args.host, port(cli)?)
        .parse()
        .context("invalid --host/--port")?;
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .with_context(|| format!("binding {addr}"))?;
        let bound = listener.local_addr()?;
        tracing::info!(data_dir = %dir.display(), "serving");
        // scripts parse this line to find the port when --port 0 is used
        println!("listening on http://{bound}");
        std::io::stdout().flush()?;
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        layoutminer_server::serve(listener, Arc::new(store), shutdown).await?;
        Ok(())
    })
}

fn analyze(cli: &Cli, args: &AnalyzeArgs) -> Result<()> {
    let ds = open_store(cli)?.snapshot();
    let opts = ReportOptions {
        environment: args.env.clone(),
        threshold_m: args.threshold_m,
        clusters: args.clusters,
        sd: match args.sd {
            Sd::Population => SdConvention::Population,
            Sd::Sample => SdConvention::Sample,
        },
        top_k: args.top,
        task_kinds: args.task_kinds.iter().cloned().collect::<BTreeMap<_, _>>(),
    };
    let value = report::analyze(&ds, args.report, &opts)?;
    emit(&pretty(&value), args.out.as_deref())
}

fn simulate(cli: &Cli, args: &SimulateArgs) -> Result<()> {
    let text = fs::read_to_string(&args.script)
        .with_context(|| format!("reading {}", args.script.display()))?;
    let script = SessionScript::from_json(&text).context("parsing script")?;
    script.validate()?;
    let client = endpoint(cli, &args.endpoint)?;
    let opts = PlacementOptions {
        client_id: args.endpoint.client_id.clone(),
        realtime: args.realtime,
    };
    let transcript = layoutminer_sim::run_placement(&script, &client, &opts)?;
    if args.verify {
        let preview = layoutminer_sim::run_preview(
            &script.scenario,
            &client,
            &PreviewOptions {
                poll_interval: Duration::from_millis(cli.poll_ms),
                ..Default::default()
            },
        )?;
        let report = check_convergence(&transcript, &preview.layout);
        if !report.equal {
            bail!(
                "preview did not converge: {}",
                serde_json::to_string(&report)?
            );
        }
    }
    emit(&pretty(&transcript), args.out.as_deref())
}

fn preview(cli: &Cli, args: &PreviewArgs) -> Result<()> {
    let client = endpoint(cli, &args.endpoint)?;
    let opts = PreviewOptions {
        client_id: args.endpoint.client_id.clone(),
        poll_interval: Duration::from_millis(cli.poll_ms),
        stop_after_quiet_polls: args.quiet_polls.max(1),
        wait_ms: args.wait_ms,
        ..Default::default()
    };
    let out = layoutminer_sim::run_preview(&args.scenario, &client, &opts)?;
    emit(&pretty(&out.layout), args.out.as_deref())
}

fn scene_file_stem(s: &ScenarioKey) -> String {
    [s.participant_id(), s.environment(), s.task()]
        .iter()
        .map(|part| {
            part.chars()
                .map(|c| {
                    if c.is_ascii_alphanumeric() || c == '-' {
                        c
                    } else {
                        '_'
                    }
                })
                .collect::<String>()
        })
        .collect::<Vec<_>>()
        .join("__")
}

fn scene(cli: &Cli, args: &SceneArgs) -> Result<()> {
    let ds = open_store(cli)?.snapshot();
    let opts = SceneOptions {
        quad_width_m: args.quad_width_m,
        flip_normals: args.flip_normals,
        overlay_refs: args.overlay.clone(),
        fallback_screenshot_aspect: args.fallback_aspect,
    };
    if args.step {
        let dir = args
            .out
            .as_deref()
            .expect("clap requires --out with --step");
        fs::create_dir_all(dir)?;
        let steps = reconstruct::step_history(&ds, &args.scenario, &opts)?;
        let stem = scene_file_stem(&args.scenario);
        for scene in &steps {
            let name = format!("{stem}.{:06}{SCENE_EXTENSION}", scene.as_of_seq);
            fs::write(dir.join(name), scene.to_json())?;
        }
        eprintln!("wrote {} scene(s) to {}", steps.len(), dir.display());
        return Ok(());
    }
    let scene = reconstruct::export_scene(&ds, &args.scenario, args.as_of, &opts)?;
    emit(&scene.to_json(), args.out.as_deref())
}

fn gen_script(args: &GenScriptArgs) -> Result<()> {
    if args.min_widgets == 0 || args.min_widgets > args.max_widgets {
        bail!("need 1 <= --min-widgets <= --max-widgets");
    }
    let shape = ScriptShape {
        min_widgets: args.min_widgets,
        max_widgets: args.max_widgets,
        ..Default::default()
    };
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(args.seed);
    let script = layoutminer_sim::random_script(&mut rng, args.scenario.clone(), &shape);
    emit(&script.to_json(), args.out.as_deref())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Serve(a) => serve(cli, a),
        Command::Import { dir } => {
            let store = open_store(cli)?;
            let manifest = store
                .import_dataset(dir)
                .with_context(|| format!("importing {}", dir.display()))?;
            emit(&pretty(&manifest), None)
        }
        Command::Export { dir } => {
            let store = open_store(cli)?;
            let manifest = store
                .export_dataset(dir)
                .with_context(|| format!("exporting to {}", dir.display()))?;
            emit(&pretty(&manifest), None)
        }
        Command::Analyze(a) => analyze(cli, a),
        Command::Simulate(a) => simulate(cli, a),
        Command::Preview(a) => preview(cli, a),
        Command::Scene(a) => scene(cli, a),
        Command::GenScript(a) => gen_script(a),
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("warn")),
        )
        .with_writer(std::io::stderr)
        .init();
    // clap exits with 2 on usage errors and prints help to stderr
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
