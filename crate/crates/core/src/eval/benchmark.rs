//! Planner x estimator sweeps over generated worlds, reported as CSV rows and
//! a per-planner JSON summary.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bridge::SharedBridge;
use crate::dataset::{derive_seed, generate_worlds};
use crate::estimator::{CostToGoEstimator, HeuristicEstimator, OracleEstimator};
use crate::eval::metrics::extra_time_pct;
use crate::planner::{oracle_plan, run_episode, Dc2gPlanner, EpisodeResult, EpisodeStatus, FrontierPlanner, OraclePlanner, Planner};
use crate::semantic::Cell;
use crate::sim::{Heading, Pose, SensorConfig, SensorModel};
use crate::world::{World, WorldError};

pub const CSV_HEADER: &str = "world,planner,estimator,start_row,start_col,start_heading,steps,oracle_steps,extra_pct,status";

#[derive(Debug, Error)]
pub enum BenchmarkError {
    #[error(transparent)]
    World(#[from] WorldError),
    #[error("could not build thread pool: {0}")]
    ThreadPool(String),
    #[error("unknown planner {0:?}; expected oracle, frontier or dc2g:<oracle|heuristic|bridge>")]
    UnknownPlanner(String),
    #[error("a bridge planner was requested but no bridge connection was given")]
    NoBridge,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EstimatorKind {
    Oracle,
    Heuristic,
    Bridge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum PlannerSpec {
    Oracle,
    Frontier,
    Dc2g(EstimatorKind),
}

impl PlannerSpec {
    pub fn planner_name(&self) -> &'static str {
        match self {
            PlannerSpec::Oracle => "oracle",
            PlannerSpec::Frontier => "frontier",
            PlannerSpec::Dc2g(_) => "dc2g",
        }
    }

    pub fn estimator_name(&self) -> &'static str {
        match self {
            PlannerSpec::Dc2g(EstimatorKind::Oracle) => "oracle",
            PlannerSpec::Dc2g(EstimatorKind::Heuristic) => "heuristic",
            PlannerSpec::Dc2g(EstimatorKind::Bridge) => "bridge",
            _ => "none",
        }
    }
}

impl fmt::Display for PlannerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlannerSpec::Dc2g(_) => write!(f, "dc2g:{}", self.estimator_name()),
            other => f.write_str(other.planner_name()),
        }
    }
}

impl FromStr for PlannerSpec {
    type Err = BenchmarkError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "oracle" => PlannerSpec::Oracle,
            "frontier" => PlannerSpec::Frontier,
            "dc2g:oracle" => PlannerSpec::Dc2g(EstimatorKind::Oracle),
            "dc2g" | "dc2g:heuristic" => PlannerSpec::Dc2g(EstimatorKind::Heuristic),
            "dc2g:bridge" => PlannerSpec::Dc2g(EstimatorKind::Bridge),
            other => return Err(BenchmarkError::UnknownPlanner(other.to_string())),
        })
    }
}

impl TryFrom<String> for PlannerSpec {
    type Error = BenchmarkError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<PlannerSpec> for String {
    fn from(p: PlannerSpec) -> String {
        p.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchmarkConfig {
    /// Number of generated worlds.
    pub worlds: usize,
    pub dims: usize,
    pub seed: u64,
    /// Start poses sampled per world; every planner runs from each.
    pub starts_per_world: usize,
    pub planners: Vec<PlannerSpec>,
    pub max_steps: usize,
    pub sensor: SensorConfig,
    /// Worker threads; `None` uses the rayon default.
    pub threads: Option<usize>,
    /// Wall off every goal so no path exists.
    pub sealed: bool,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            worlds: 10,
            dims: 50,
            seed: 0,
            starts_per_world: 3,
            planners: vec![
                PlannerSpec::Oracle,
                PlannerSpec::Frontier,
                PlannerSpec::Dc2g(EstimatorKind::Oracle),
                PlannerSpec::Dc2g(EstimatorKind::Heuristic),
            ],
            max_steps: 10_000,
            sensor: SensorConfig::default(),
            threads: None,
            sealed: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkRow {
    pub world: String,
    pub planner: PlannerSpec,
    pub start: Pose,
    pub start_index: usize,
    pub steps: usize,
    /// `None` when the goal is unreachable from the start.
    pub oracle_steps: Option<usize>,
    pub extra_pct: Option<f64>,
    pub status: EpisodeStatus,
}

impl BenchmarkRow {
    pub fn csv_line(&self) -> String {
        let opt = |v: Option<String>| v.unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.world,
            self.planner.planner_name(),
            self.planner.estimator_name(),
            self.start.cell.row,
            self.start.cell.col,
            self.start.heading,
            self.steps,
            opt(self.oracle_steps.map(|s| s.to_string())),
            opt(self.extra_pct.map(|e| format!("{e:.6}"))),
            self.status.label(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlannerSummary {
    pub episodes: usize,
    /// Over episodes that reached the goal; `None` if there were none.
    pub mean_extra_pct: Option<f64>,
    pub median_extra_pct: Option<f64>,
    pub success_rate: f64,
    pub mean_steps: f64,
}

#[derive(Debug, Clone)]
pub struct BenchmarkReport {
    pub rows: Vec<BenchmarkRow>,
    pub summary: BTreeMap<String, PlannerSummary>,
}

impl BenchmarkReport {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for row in &self.rows {
            writeln!(w, "{}", row.csv_line())?;
        }
        Ok(())
    }

    pub fn csv_string(&self) -> String {
        let mut out = Vec::new();
        self.write_csv(&mut out).expect("writing to memory");
        String::from_utf8(out).expect("ascii csv")
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(&self.summary).expect("summary serializes")
    }

    pub fn rows_for(&self, planner: PlannerSpec) -> impl Iterator<Item = &BenchmarkRow> {
        self.rows.iter().filter(move |r| r.planner == planner)
    }
}

fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    })
}

pub fn summarize(rows: &[BenchmarkRow]) -> BTreeMap<String, PlannerSummary> {
    let mut groups: BTreeMap<String, Vec<&BenchmarkRow>> = BTreeMap::new();
    for row in rows {
        groups.entry(row.planner.to_string()).or_default().push(row);
    }
    groups
        .into_iter()
        .map(|(name, rows)| {
            let mut extra: Vec<f64> = rows
                .iter()
                .filter(|r| r.status == EpisodeStatus::ReachedGoal)
                .filter_map(|r| r.extra_pct)
                .collect();
            let successes = rows.iter().filter(|r| r.status == EpisodeStatus::ReachedGoal).count();
            let summary = PlannerSummary {
                episodes: rows.len(),
                mean_extra_pct: (!extra.is_empty()).then(|| extra.iter().sum::<f64>() / extra.len() as f64),
                median_extra_pct: median(&mut extra),
                success_rate: successes as f64 / rows.len() as f64,
                mean_steps: rows.iter().map(|r| r.steps as f64).sum::<f64>() / rows.len() as f64,
            };
            (name, summary)
        })
        .collect()
}

/// Start poses drawn uniformly over road cells (all traversable cells if the
/// world has no road), with uniform headings.
pub fn sample_starts(world: &World, count: usize, seed: u64) -> Vec<Pose> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool: Vec<Cell> = world.cells_of_class("road");
    if pool.is_empty() {
        pool = world.grid.iter_cells().filter(|&c| world.grid.is_traversable(c) && c != world.goal).collect();
    }
    (0..count)
        .filter_map(|_| {
            let cell = *pool.choose(&mut rng)?;
            Some(Pose {
                cell,
                heading: Heading::ALL[rng.gen_range(0..4)],
            })
        })
        .collect()
}

pub fn build_planner(
    spec: PlannerSpec,
    world: &World,
    sensor: SensorModel,
    bridge: Option<&SharedBridge>,
) -> Result<Box<dyn Planner>, String> {
    let estimator: Box<dyn CostToGoEstimator> = match spec {
        PlannerSpec::Oracle => return Ok(Box::new(OraclePlanner::new(world.clone()))),
        PlannerSpec::Frontier => return Ok(Box::new(FrontierPlanner::new(sensor))),
        PlannerSpec::Dc2g(EstimatorKind::Oracle) => Box::new(OracleEstimator::new(world.clone()).map_err(|e| e.to_string())?),
        PlannerSpec::Dc2g(EstimatorKind::Heuristic) => Box::new(HeuristicEstimator::new(world.grid.palette().clone())),
        PlannerSpec::Dc2g(EstimatorKind::Bridge) => Box::new(bridge.ok_or("no bridge connection")?.clone()),
    };
    Ok(Box::new(Dc2gPlanner::new(estimator, sensor)))
}

/// Runs one planner spec from `start` on `world`.
pub fn run_one(
    spec: PlannerSpec,
    world: &World,
    start: Pose,
    sensor: &SensorModel,
    max_steps: usize,
    bridge: Option<&SharedBridge>,
) -> EpisodeResult {
    match build_planner(spec, world, sensor.clone(), bridge) {
        Ok(mut planner) => run_episode(world, start, &mut planner, sensor, max_steps),
        Err(message) => EpisodeResult {
            steps: 0,
            status: EpisodeStatus::Error(message),
            trajectory: vec![start],
            plan_ms: Vec::new(),
            trace: Vec::new(),
            belief: crate::sim::Belief::blank_like(&world.grid),
        },
    }
}

/// Worlds the benchmark runs on, in order.
pub fn benchmark_worlds(config: &BenchmarkConfig) -> Result<Vec<World>, BenchmarkError> {
    let worlds = generate_worlds(config.worlds, config.dims, config.dims, config.seed)?;
    if config.sealed {
        return Ok(worlds.iter().map(World::sealed).collect::<Result<_, _>>()?);
    }
    Ok(worlds)
}

pub fn run_benchmark(config: &BenchmarkConfig, bridge: Option<&SharedBridge>) -> Result<BenchmarkReport, BenchmarkError> {
    if bridge.is_none() && config.planners.contains(&PlannerSpec::Dc2g(EstimatorKind::Bridge)) {
        return Err(BenchmarkError::NoBridge);
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = config.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| BenchmarkError::ThreadPool(e.to_string()))?;
    pool.install(|| {
        let worlds = benchmark_worlds(config)?;
        let starts: Vec<Vec<Pose>> = worlds
            .iter()
            .enumerate()
            .map(|(i, w)| sample_starts(w, config.starts_per_world, derive_seed(config.seed, 0x57a7, i as u64)))
            .collect();
        let oracle_steps: Vec<Vec<Option<usize>>> = worlds
            .par_iter()
            .zip(&starts)
            .map(|(w, ss)| {
                ss.iter()
                    .map(|&s| oracle_plan(&w.grid, s, w.goal).ok().map(|o| o.actions.len()))
                    .collect()
            })
            .collect();
        let mut jobs = Vec::new();
        for (wi, ss) in starts.iter().enumerate() {
            for &planner in &config.planners {
                for si in 0..ss.len() {
                    jobs.push((wi, planner, si));
                }
            }
        }
        let sensor = SensorModel::new(config.sensor);
        let rows = jobs
            .par_iter()
            .map(|&(wi, planner, si)| {
                let start = starts[wi][si];
                let res = run_one(planner, &worlds[wi], start, &sensor, config.max_steps, bridge);
                let oracle = oracle_steps[wi][si];
                BenchmarkRow {
                    world: format!("w{wi:04}"),
                    planner,
                    start,
                    start_index: si,
                    steps: res.steps,
                    oracle_steps: oracle,
                    extra_pct: oracle.and_then(|o| extra_time_pct(res.steps, o).ok()),
                    status: res.status,
                }
            })
            .collect::<Vec<_>>();
        let summary = summarize(&rows);
        Ok(BenchmarkReport { rows, summary })
    })
}
