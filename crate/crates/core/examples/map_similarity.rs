//! How far each test world is from the training worlds, in word-histogram L1.

use dc2g::eval::similarity::{build_similarity_model, similarity_score, DEFAULT_BLOCK};
use dc2g::world::{generate_world, WorldSpec};

pub fn run() -> anyhow::Result<Vec<f64>> {
    let maps = |seeds: std::ops::Range<u64>| -> anyhow::Result<Vec<_>> {
        seeds.map(|s| Ok(generate_world(&WorldSpec::with_seed(s, 50))?.grid)).collect()
    };
    let model = build_similarity_model(&maps(0..8)?, DEFAULT_BLOCK, 0)?;
    let scores: Vec<f64> = maps(100..104)?.iter().map(|m| similarity_score(&model, m)).collect();
    for (i, s) in scores.iter().enumerate() {
        println!("test world {i}: {s:.3}");
    }
    Ok(scores)
}

fn main() -> anyhow::Result<()> {
    run().map(|_| ())
}
