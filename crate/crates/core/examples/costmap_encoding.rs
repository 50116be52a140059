//! Cost-to-go of the 5x5 fixture world and its gray/red image encoding.

use dc2g::costmap::{decode_c2g, dijkstra_cost_to_go, encode_c2g, traversable_mask, CellCost};
use dc2g::world::t5_world;

pub fn run() -> anyhow::Result<Vec<Vec<CellCost>>> {
    let (grid, goal) = t5_world();
    let field = dijkstra_cost_to_go(&traversable_mask(&grid), goal)?;
    let img = encode_c2g(&field)?;
    let scores = decode_c2g(&img, grid.width(), grid.height());
    let mut rows = Vec::new();
    for r in 0..grid.height() {
        let mut line = String::new();
        let mut costs = Vec::new();
        for c in 0..grid.width() {
            let cell = dc2g::Cell::new(r, c);
            costs.push(field.get(cell));
            let px = img.get_pixel(c as u32, r as u32).0;
            match scores.get(cell) {
                Some(_) => line.push_str(&format!("{:>4}", px[0])),
                None => line.push_str("   x"),
            }
        }
        println!("{line}");
        rows.push(costs);
    }
    Ok(rows)
}

fn main() -> anyhow::Result<()> {
    run().map(|_| ())
}
