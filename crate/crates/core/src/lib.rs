//! Cost-to-go guided exploration for finding an unseen goal in a semantic gridmap.
//!
//! The crate covers the whole offline/online loop:
//!
//! * [`semantic`]: terrain palette, semantic grids, PNG I/O, HSV and resizing.
//! * [`costmap`]: Dijkstra cost-to-go fields and their gray/red/black image encoding.
//! * [`world`] and [`dataset`]: procedural house layouts, observation masks and
//!   (partial map, masked cost-to-go) training pairs.
//! * [`sim`]: gridworld dynamics, the wedge sensor and belief accumulation.
//! * [`planner`]: the cost-to-go guided frontier planner, the nearest-frontier
//!   baseline, the prior-map oracle and the episode loop.
//! * [`estimator`] and [`bridge`]: cost-to-go estimators, including a
//!   length-prefixed PNG protocol for out-of-process models.
//! * [`eval`]: image metrics, map similarity and the benchmark harness.

pub mod bridge;
pub mod costmap;
pub mod dataset;
pub mod estimator;
pub mod eval;
pub mod planner;
pub mod semantic;
pub mod sim;
pub mod world;

pub use costmap::{CellCost, CostField, ScoreGrid};
pub use estimator::{CostToGoEstimator, EstimatorError};
pub use planner::{EpisodeResult, EpisodeStatus, PlanOutcome, Planner};
pub use semantic::{BinaryGrid, Cell, Palette, SemanticGrid};
pub use sim::{Belief, Heading, PlannerAction, Pose, SensorConfig};
pub use world::{World, WorldSpec};
