//! Writes a small (partial map, masked cost-to-go) dataset and checks it.

use std::path::Path;

use dc2g::dataset::{build_training_set, generate_worlds, verify_dataset, DatasetConfig, Manifest};

pub fn run(out: &Path) -> anyhow::Result<Manifest> {
    let worlds = generate_worlds(4, 50, 50, 7)?;
    let config = DatasetConfig {
        seed: 7,
        split: [0.5, 0.25, 0.25],
        ..Default::default()
    };
    let manifest = build_training_set(&worlds, 8, out, &config)?;
    let checked = verify_dataset(out)?;
    println!("{} pairs written, {checked} verified, under {}", manifest.pairs.len(), out.display());
    Ok(manifest)
}

fn main() -> anyhow::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "dc2g_data".into());
    run(Path::new(&out)).map(|_| ())
}
