//! Procedural house worlds: generate one, print it as text and save the PNG.

use dc2g::semantic::save_semantic_png;
use dc2g::world::{generate_world, WorldSpec};
use dc2g::World;

const GLYPHS: [char; 8] = ['=', 'd', 's', 'w', '.', '#', 'G', ' '];

pub fn run(seed: u64, out: Option<&std::path::Path>) -> anyhow::Result<World> {
    let world = generate_world(&WorldSpec::with_seed(seed, 50))?;
    for r in 0..world.grid.height() {
        let line: String = (0..world.grid.width())
            .map(|c| GLYPHS[world.grid.get(dc2g::Cell::new(r, c)) as usize])
            .collect();
        println!("{line}");
    }
    println!("goal at {:?}", world.goal);
    if let Some(path) = out {
        std::fs::write(path, save_semantic_png(&world.grid))?;
    }
    Ok(world)
}

fn main() -> anyhow::Result<()> {
    let seed = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(0);
    run(seed, Some(std::path::Path::new("world.png"))).map(|_| ())
}
