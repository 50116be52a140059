use std::fs;
use std::io::{self, BufWriter, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use dc2g::bridge::{self, BridgeClient, SharedBridge, Transport};
use dc2g::dataset::{build_training_set, generate_worlds, DatasetConfig};
use dc2g::estimator::OracleEstimator;
use dc2g::eval::benchmark::{run_benchmark, run_one, sample_starts, BenchmarkConfig, EstimatorKind, PlannerSpec};
use dc2g::eval::metrics::score_predictions;
use dc2g::eval::similarity::{build_similarity_model, similarity_score, DEFAULT_BLOCK};
use dc2g::semantic::{load_semantic_png, read_png, resize_nearest, Palette, SemanticGrid};
use dc2g::sim::{Heading, Pose, SensorConfig, SensorModel};
use dc2g::world::{generate_world, World, WorldSpec};

#[derive(Parser)]
#[command(name = "dc2g", version, about = "Cost-to-go guided exploration toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate worlds and write (partial map, masked cost-to-go) PNG pairs.
    GenData(GenData),
    /// Run one episode and write its JSONL trace.
    Simulate(Simulate),
    /// Run a planner sweep from a JSON config.
    Benchmark(Benchmark),
    /// Pixel metrics of predicted cost-to-go images against a dataset.
    ScorePredictions(ScorePredictions),
    /// Bag-of-words similarity of test maps to training maps.
    Similarity(Similarity),
    /// Serve the ground-truth estimator over the bridge protocol.
    ServeOracle(ServeOracle),
}

#[derive(Args)]
struct GenData {
    #[arg(long)]
    worlds: usize,
    #[arg(long)]
    masks: usize,
    #[arg(long, default_value_t = 50)]
    dims: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Train,val,test fractions of worlds.
    #[arg(long, default_value = "0.8,0.1,0.1")]
    split: String,
    #[arg(long, default_value_t = 256)]
    image_size: u32,
}

#[derive(Args)]
struct WorldArgs {
    /// Semantic map PNG; overrides --seed/--dims.
    #[arg(long)]
    map: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 50)]
    dims: usize,
}

impl WorldArgs {
    fn load(&self) -> Result<World> {
        match &self.map {
            Some(path) => {
                let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
                let grid = load_semantic_png(&bytes, Palette::default_palette()).with_context(|| path.display().to_string())?;
                Ok(World::from_grid(grid)?)
            }
            None => Ok(generate_world(&WorldSpec::with_seed(self.seed, self.dims))?),
        }
    }
}

#[derive(Args)]
struct BridgeArgs {
    /// Response timeout for bridge requests, milliseconds.
    #[arg(long, default_value_t = 30_000)]
    bridge_timeout_ms: u64,
    /// Server command for a stdio bridge (transport set by DC2G_BRIDGE).
    #[arg(last = true)]
    bridge_cmd: Vec<String>,
}

impl BridgeArgs {
    fn connect(&self) -> Result<SharedBridge> {
        let transport = Transport::from_env()?;
        let client = BridgeClient::connect(&transport, &self.bridge_cmd, Duration::from_millis(self.bridge_timeout_ms))?;
        Ok(SharedBridge::new(client))
    }
}

#[derive(Args)]
struct Simulate {
    #[command(flatten)]
    world: WorldArgs,
    /// oracle, frontier, dc2g:oracle, dc2g:heuristic or dc2g:bridge.
    #[arg(long, default_value = "dc2g:oracle")]
    planner: PlannerSpec,
    /// Start pose as ROW,COL,HEADING; drawn from road cells when absent.
    #[arg(long)]
    start: Option<String>,
    #[arg(long, default_value_t = 10_000)]
    max_steps: usize,
    #[arg(long, default_value_t = 90.0)]
    fov: f64,
    #[arg(long, default_value_t = 8)]
    range: u32,
    /// Trace file; stdout when absent.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[command(flatten)]
    bridge: BridgeArgs,
}

#[derive(Args)]
struct Benchmark {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    summary: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    bridge: BridgeArgs,
}

#[derive(Args)]
struct ScorePredictions {
    /// Dataset directory holding manifest.json.
    #[arg(long)]
    data: PathBuf,
    /// Directory of predicted PNGs named like the targets.
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    split: Option<String>,
    /// Include per-image scores.
    #[arg(long)]
    per_image: bool,
}

#[derive(Args)]
struct Similarity {
    /// Training map PNGs or directories of them; `*_c2g.png` files in
    /// directories are skipped.
    #[arg(long, required = true, num_args = 1..)]
    train: Vec<PathBuf>,
    /// Test map PNGs or directories of them.
    #[arg(long, required = true, num_args = 1..)]
    test: Vec<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_BLOCK)]
    block: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Resample maps to GRID x GRID cells first (dataset PNGs are upscaled).
    #[arg(long)]
    grid: Option<u32>,
}

#[derive(Args)]
struct ServeOracle {
    #[command(flatten)]
    world: WorldArgs,
    /// Listen address; overrides DC2G_BRIDGE.
    #[arg(long)]
    tcp: Option<String>,
}

fn parse_split(s: &str) -> Result<[f64; 3]> {
    let parts: Vec<f64> = s.split(',').map(|p| p.trim().parse::<f64>()).collect::<Result<_, _>>()?;
    match parts.as_slice() {
        [a, b, c] => Ok([*a, *b, *c]),
        _ => bail!("--split needs three comma-separated fractions, got {s:?}"),
    }
}

fn parse_start(s: &str) -> Result<Pose> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [r, c, h] = parts.as_slice() else {
        bail!("--start must be ROW,COL,HEADING, got {s:?}");
    };
    Ok(Pose::new(r.parse()?, c.parse()?, h.parse::<Heading>().map_err(anyhow::Error::msg)?))
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn gen_data(args: GenData) -> Result<()> {
    let config = DatasetConfig {
        seed: args.seed,
        image_size: args.image_size,
        split: parse_split(&args.split)?,
        ..Default::default()
    };
    let worlds = generate_worlds(args.worlds, args.dims, args.dims, args.seed)?;
    let manifest = build_training_set(&worlds, args.masks, &args.out, &config)?;
    eprintln!("wrote {} pairs to {}", manifest.pairs.len(), args.out.display());
    Ok(())
}

fn simulate(args: Simulate) -> Result<()> {
    let world = args.world.load()?;
    let start = match &args.start {
        Some(s) => parse_start(s)?,
        None => *sample_starts(&world, 1, args.world.seed)
            .first()
            .context("world has no traversable start cell")?,
    };
    let sensor = SensorModel::new(SensorConfig::new(args.fov, args.range)?);
    let bridge = match args.planner {
        PlannerSpec::Dc2g(EstimatorKind::Bridge) => Some(args.bridge.connect()?),
        _ => None,
    };
    let res = run_one(args.planner, &world, start, &sensor, args.max_steps, bridge.as_ref());
    let mut out = String::new();
    for rec in &res.trace {
        out.push_str(&serde_json::to_string(rec)?);
        out.push('\n');
    }
    write_output(args.trace.as_deref(), &out)?;
    eprintln!(
        "{}: {} after {} steps (goal {},{})",
        args.planner,
        res.status.label(),
        res.steps,
        world.goal.row,
        world.goal.col
    );
    if let dc2g::EpisodeStatus::Error(e) = &res.status {
        bail!("episode failed: {e}");
    }
    Ok(())
}

fn benchmark(args: Benchmark) -> Result<()> {
    let mut config: BenchmarkConfig = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| path.display().to_string())?
        }
        None => BenchmarkConfig::default(),
    };
    if args.threads.is_some() {
        config.threads = args.threads;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let bridge = if config.planners.contains(&PlannerSpec::Dc2g(EstimatorKind::Bridge)) {
        Some(args.bridge.connect()?)
    } else {
        None
    };
    let report = run_benchmark(&config, bridge.as_ref())?;
    write_output(args.csv.as_deref(), &report.csv_string())?;
    let summary = report.summary_json();
    match &args.summary {
        Some(p) => fs::write(p, summary + "\n").with_context(|| format!("writing {}", p.display()))?,
        None => eprintln!("{summary}"),
    }
    Ok(())
}

fn score(args: ScorePredictions) -> Result<()> {
    let mut report = score_predictions(&args.data, &args.pred, args.split.as_deref())?;
    if !args.per_image {
        report.images.clear();
    }
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn collect_maps(paths: &[PathBuf], grid: Option<u32>) -> Result<Vec<(String, SemanticGrid)>> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut entries: Vec<PathBuf> = fs::read_dir(p)
                .with_context(|| p.display().to_string())?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "png"))
                .filter(|f| !f.to_string_lossy().ends_with("_c2g.png"))
                .collect();
            entries.sort();
            files.extend(entries);
        } else {
            files.push(p.clone());
        }
    }
    files
        .into_iter()
        .map(|f| {
            let mut img = read_png(&f)?;
            if let Some(n) = grid {
                img = resize_nearest(&img, n, n);
            }
            let map = SemanticGrid::from_image(&img, Palette::default_palette()).with_context(|| f.display().to_string())?;
            Ok((f.display().to_string(), map))
        })
        .collect()
}

fn similarity(args: Similarity) -> Result<()> {
    let train: Vec<SemanticGrid> = collect_maps(&args.train, args.grid)?.into_iter().map(|(_, g)| g).collect();
    let model = build_similarity_model(&train, args.block, args.seed)?;
    let scores: serde_json::Map<String, serde_json::Value> = collect_maps(&args.test, args.grid)?
        .into_iter()
        .map(|(name, grid)| (name, similarity_score(&model, &grid).into()))
        .collect();
    println!("{}", serde_json::to_string_pretty(&scores)?);
    Ok(())
}

fn serve_oracle(args: ServeOracle) -> Result<()> {
    let mut oracle = OracleEstimator::new(args.world.load()?)?;
    let transport = match args.tcp {
        Some(addr) => Transport::Tcp(addr),
        None => Transport::from_env()?,
    };
    match transport {
        Transport::Stdio => {
            let stdin = io::stdin().lock();
            let stdout = BufWriter::new(io::stdout().lock());
            bridge::serve_bridge(&mut oracle, stdin, stdout)?;
        }
        Transport::Tcp(addr) => {
            let listener = TcpListener::bind(&addr).with_context(|| format!("binding {addr}"))?;
            eprintln!("listening on {}", listener.local_addr()?);
            bridge::serve_tcp(&mut oracle, listener)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenData(a) => gen_data(a),
        Command::Simulate(a) => simulate(a),
        Command::Benchmark(a) => benchmark(a),
        Command::ScorePredictions(a) => score(a),
        Command::Similarity(a) => similarity(a),
        Command::ServeOracle(a) => serve_oracle(a),
    };
    match result {
        Ok(()) => {
            let _ = io::stdout().flush();
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
