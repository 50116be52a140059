//! Image metrics, map similarity and the benchmark harness.

pub mod benchmark;
pub mod metrics;
pub mod similarity;

pub use benchmark::{run_benchmark, BenchmarkConfig, BenchmarkReport, BenchmarkRow, PlannerSpec};
pub use metrics::{classify_pixels, extra_time_pct, pixel_l1, precision_recall, PixelClassTask, PrecisionRecall};
pub use similarity::{build_similarity_model, similarity_score, SimilarityModel};
