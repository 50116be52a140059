//! Ground-truth cost-to-go fields and their image encoding.
//!
//! A [`CostField`] holds the 4-connected, unit-cost shortest-path distance
//! from every traversable cell to the goal. [`encode_c2g`] renders it as a
//! grayscale image (white at the goal, darker farther away) with red for
//! unusable cells; [`decode_c2g`] turns any such rendering, exact or
//! estimated, back into per-cell planner scores.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use image::RgbImage;
use thiserror::Error;

use crate::semantic::{resize_nearest, rgb_to_hsv, BinaryGrid, Cell, SemanticGrid, BLACK, RED};

/// Pixels at or above this HSV saturation are not gray and carry no score.
pub const GRAY_SATURATION_LIMIT: f64 = 0.3;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CostmapError {
    #[error("goal cell {0} is not traversable")]
    GoalNotTraversable(Cell),
    #[error("cost field has no finite cells")]
    NoFiniteCells,
    #[error("dimension mismatch: image is {image:?}, mask is {mask:?}")]
    DimensionMismatch {
        image: (usize, usize),
        mask: (usize, usize),
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellCost {
    Finite(u32),
    /// Traversable, but no path to the goal exists.
    Unreachable,
    Untraversable,
}

impl CellCost {
    pub fn finite(self) -> Option<u32> {
        match self {
            CellCost::Finite(d) => Some(d),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostField {
    width: usize,
    height: usize,
    dist: Vec<CellCost>,
}

impl CostField {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, cell: Cell) -> CellCost {
        self.dist[cell.row * self.width + cell.col]
    }

    pub fn costs(&self) -> &[CellCost] {
        &self.dist
    }

    pub fn max_finite(&self) -> Option<u32> {
        self.dist.iter().filter_map(|c| c.finite()).max()
    }

    pub fn finite_mask(&self) -> BinaryGrid {
        BinaryGrid::from_fn(self.width, self.height, |c| self.get(c).finite().is_some())
    }
}

pub fn traversable_mask(grid: &SemanticGrid) -> BinaryGrid {
    let palette = grid.palette();
    let bits = grid.cells().iter().map(|&id| palette.is_traversable(id)).collect();
    BinaryGrid::from_bits(grid.width(), grid.height(), bits).expect("dims match")
}

/// Dijkstra from `goal` over the 4-connected traversable graph with unit edges.
pub fn dijkstra_cost_to_go(tr: &BinaryGrid, goal: Cell) -> Result<CostField, CostmapError> {
    if !tr.contains(goal) || !tr.get(goal) {
        return Err(CostmapError::GoalNotTraversable(goal));
    }
    let (w, h) = tr.dims();
    let mut best = vec![u32::MAX; w * h];
    let mut heap = BinaryHeap::new();
    best[goal.row * w + goal.col] = 0;
    heap.push(Reverse((0u32, goal)));
    while let Some(Reverse((d, cell))) = heap.pop() {
        if d > best[cell.row * w + cell.col] {
            continue;
        }
        for next in cell.neighbors4(w, h) {
            let idx = next.row * w + next.col;
            if tr.get(next) && d + 1 < best[idx] {
                best[idx] = d + 1;
                heap.push(Reverse((d + 1, next)));
            }
        }
    }
    let dist = best
        .iter()
        .zip(tr.bits())
        .map(|(&d, &t)| match (t, d) {
            (false, _) => CellCost::Untraversable,
            (true, u32::MAX) => CellCost::Unreachable,
            (true, d) => CellCost::Finite(d),
        })
        .collect();
    Ok(CostField {
        width: w,
        height: h,
        dist,
    })
}

/// Gray level for distance `d`: round(255 * (1 - d / (d_max + 1))), halves away from zero.
pub fn gray_level(d: u32, d_max: u32) -> u8 {
    let den = d_max as u64 + 1;
    let num = 255 * (den - d as u64);
    ((2 * num + den) / (2 * den)) as u8
}

pub fn encode_c2g(field: &CostField) -> Result<RgbImage, CostmapError> {
    let d_max = field.max_finite().ok_or(CostmapError::NoFiniteCells)?;
    let mut buf = Vec::with_capacity(field.dist.len() * 3);
    for cost in &field.dist {
        let px = match cost {
            CellCost::Finite(d) => [gray_level(*d, d_max); 3],
            CellCost::Unreachable | CellCost::Untraversable => RED,
        };
        buf.extend_from_slice(&px);
    }
    Ok(RgbImage::from_raw(field.width as u32, field.height as u32, buf).expect("dims match"))
}

/// Keeps pixels where the mask is set and blacks out the rest.
pub fn apply_mask(img: &RgbImage, mask: &BinaryGrid) -> Result<RgbImage, CostmapError> {
    let dims = (img.width() as usize, img.height() as usize);
    if dims != mask.dims() {
        return Err(CostmapError::DimensionMismatch {
            image: dims,
            mask: mask.dims(),
        });
    }
    let mut out = img.clone();
    for ((_, _, px), &keep) in out.enumerate_pixels_mut().zip(mask.bits()) {
        if !keep {
            px.0 = BLACK;
        }
    }
    Ok(out)
}

/// Per-cell planner score decoded from a cost-to-go rendering.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreGrid {
    width: usize,
    height: usize,
    score: Vec<Option<f64>>,
}

impl ScoreGrid {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// `None` for filtered (non-gray) cells.
    pub fn get(&self, cell: Cell) -> Option<f64> {
        self.score[cell.row * self.width + cell.col]
    }

    pub fn scores(&self) -> &[Option<f64>] {
        &self.score
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScoreGrid {
        ScoreGrid {
            score: self.score.iter().map(|s| s.map(&f)).collect(),
            ..*self
        }
    }
}

/// Resize to grid resolution, drop saturated pixels, score the rest by HSV value.
pub fn decode_c2g(img: &RgbImage, grid_w: usize, grid_h: usize) -> ScoreGrid {
    let small = resize_nearest(img, grid_w as u32, grid_h as u32);
    let score = small
        .pixels()
        .map(|px| {
            let hsv = rgb_to_hsv(px.0);
            (hsv.s < GRAY_SATURATION_LIMIT).then_some(hsv.v)
        })
        .collect();
    ScoreGrid {
        width: grid_w,
        height: grid_h,
        score,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::t5_world;
    use proptest::prelude::*;
    use std::collections::VecDeque;

    fn c(row: usize, col: usize) -> Cell {
        Cell::new(row, col)
    }

    #[test]
    fn t5_traversable_cells() {
        let (world, _) = t5_world();
        let tr = traversable_mask(&world);
        let mut expected: Vec<Cell> = (0..5).map(|col| c(4, col)).collect();
        expected.extend([c(3, 2), c(2, 2), c(1, 2)]);
        expected.sort();
        assert_eq!(tr.ones().collect::<Vec<_>>(), expected);
    }

    #[test]
    fn all_grass_is_untraversable() {
        let p = crate::semantic::Palette::default_palette();
        let grass = p.id_of_name("grass").unwrap();
        let g = SemanticGrid::filled(4, 3, grass, p).unwrap();
        assert_eq!(traversable_mask(&g).count_ones(), 0);
    }

    #[test]
    fn t5_distances() {
        let (world, goal) = t5_world();
        let field = dijkstra_cost_to_go(&traversable_mask(&world), goal).unwrap();
        let expect = [
            (c(1, 2), 0),
            (c(2, 2), 1),
            (c(3, 2), 2),
            (c(4, 2), 3),
            (c(4, 1), 4),
            (c(4, 3), 4),
            (c(4, 0), 5),
            (c(4, 4), 5),
        ];
        for (cell, d) in expect {
            assert_eq!(field.get(cell), CellCost::Finite(d), "at {cell}");
        }
        assert_eq!(field.get(c(0, 0)), CellCost::Untraversable);
    }

    #[test]
    fn goal_must_be_traversable() {
        let tr = BinaryGrid::new(3, 3, false);
        assert_eq!(
            dijkstra_cost_to_go(&tr, c(1, 1)),
            Err(CostmapError::GoalNotTraversable(c(1, 1)))
        );
    }

    #[test]
    fn single_cell_field() {
        let tr = BinaryGrid::new(1, 1, true);
        let field = dijkstra_cost_to_go(&tr, c(0, 0)).unwrap();
        assert_eq!(field.get(c(0, 0)), CellCost::Finite(0));
    }

    #[test]
    fn disconnected_cells_are_unreachable_and_red() {
        let tr = BinaryGrid::from_fn(3, 1, |cell| cell.col != 1);
        let field = dijkstra_cost_to_go(&tr, c(0, 0)).unwrap();
        assert_eq!(field.get(c(0, 2)), CellCost::Unreachable);
        let img = encode_c2g(&field).unwrap();
        assert_eq!(img.get_pixel(0, 0).0, [255; 3]);
        assert_eq!(img.get_pixel(1, 0).0, RED);
        assert_eq!(img.get_pixel(2, 0).0, RED);
    }

    #[test]
    fn t5_gray_levels() {
        assert_eq!(
            (0..=5).map(|d| gray_level(d, 5)).collect::<Vec<_>>(),
            vec![255, 213, 170, 128, 85, 43]
        );
    }

    #[test]
    fn t5_masked_by_lower_rows() {
        let (world, goal) = t5_world();
        let field = dijkstra_cost_to_go(&traversable_mask(&world), goal).unwrap();
        let img = encode_c2g(&field).unwrap();
        let mask = BinaryGrid::from_fn(5, 5, |cell| cell.row >= 3);
        let masked = apply_mask(&img, &mask).unwrap();
        for (x, y, px) in masked.enumerate_pixels() {
            if y < 3 {
                assert_eq!(px.0, BLACK);
            } else {
                assert_eq!(px, img.get_pixel(x, y));
            }
        }
        assert_eq!(apply_mask(&img, &BinaryGrid::new(5, 5, true)).unwrap(), img);
        assert!(apply_mask(&img, &BinaryGrid::new(5, 5, false))
            .unwrap()
            .pixels()
            .all(|p| p.0 == BLACK));
        assert!(matches!(
            apply_mask(&img, &BinaryGrid::new(4, 5, true)),
            Err(CostmapError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn encode_requires_a_finite_cell() {
        let field = CostField {
            width: 2,
            height: 1,
            dist: vec![CellCost::Untraversable, CellCost::Unreachable],
        };
        assert_eq!(encode_c2g(&field), Err(CostmapError::NoFiniteCells));
    }

    #[test]
    fn decode_basics() {
        let red = RgbImage::from_pixel(8, 8, image::Rgb(RED));
        assert!(decode_c2g(&red, 4, 4).scores().iter().all(|s| s.is_none()));
        let black = RgbImage::new(8, 8);
        assert!(decode_c2g(&black, 4, 4).scores().iter().all(|s| *s == Some(0.0)));
    }

    #[test]
    fn t5_encode_decode() {
        let (world, goal) = t5_world();
        let field = dijkstra_cost_to_go(&traversable_mask(&world), goal).unwrap();
        let scores = decode_c2g(&encode_c2g(&field).unwrap(), 5, 5);
        assert_eq!(scores.get(goal), Some(1.0));
        assert!((scores.get(c(4, 0)).unwrap() - 43.0 / 255.0).abs() < 1e-12);
        assert_eq!(scores.get(c(0, 0)), None);
        // upscaled rendering decodes to the same scores
        let up = resize_nearest(&encode_c2g(&field).unwrap(), 256, 256);
        assert_eq!(decode_c2g(&up, 5, 5), scores);
    }

    fn bfs_oracle(tr: &BinaryGrid, goal: Cell) -> Vec<Option<u32>> {
        let (w, h) = tr.dims();
        let mut dist = vec![None; w * h];
        let mut queue = VecDeque::from([goal]);
        dist[goal.row * w + goal.col] = Some(0);
        while let Some(cell) = queue.pop_front() {
            let d = dist[cell.row * w + cell.col].unwrap();
            for n in cell.neighbors4(w, h) {
                if tr.get(n) && dist[n.row * w + n.col].is_none() {
                    dist[n.row * w + n.col] = Some(d + 1);
                    queue.push_back(n);
                }
            }
        }
        dist
    }

    fn arb_grid() -> impl Strategy<Value = (BinaryGrid, Cell)> {
        (2usize..16, 2usize..16).prop_flat_map(|(w, h)| {
            (
                proptest::collection::vec(proptest::bool::weighted(0.65), w * h),
                0..h,
                0..w,
            )
                .prop_map(move |(mut bits, r, col)| {
                    bits[r * w + col] = true;
                    (BinaryGrid::from_bits(w, h, bits).unwrap(), Cell::new(r, col))
                })
        })
    }

    proptest! {
        #[test]
        fn dijkstra_matches_bfs((tr, goal) in arb_grid()) {
            let field = dijkstra_cost_to_go(&tr, goal).unwrap();
            let oracle = bfs_oracle(&tr, goal);
            for (i, cost) in field.costs().iter().enumerate() {
                prop_assert_eq!(cost.finite(), oracle[i]);
            }
        }

        #[test]
        fn dijkstra_local_consistency((tr, goal) in arb_grid()) {
            let field = dijkstra_cost_to_go(&tr, goal).unwrap();
            let (w, h) = tr.dims();
            for cell in tr.ones() {
                if let Some(d) = field.get(cell).finite() {
                    if cell != goal {
                        prop_assert!(cell.neighbors4(w, h).any(|n| field.get(n).finite() == Some(d - 1)));
                    }
                }
            }
        }

        #[test]
        fn encode_is_strictly_antitone(d_max in 0u32..=254) {
            for d in 0..d_max {
                prop_assert!(gray_level(d, d_max) > gray_level(d + 1, d_max));
            }
            prop_assert!(gray_level(d_max, d_max) > 0);
        }

        #[test]
        fn decode_of_encode_tracks_distance((tr, goal) in arb_grid()) {
            let field = dijkstra_cost_to_go(&tr, goal).unwrap();
            let scores = decode_c2g(&encode_c2g(&field).unwrap(), tr.width(), tr.height());
            let mut finite = Vec::new();
            for (cost, score) in field.costs().iter().zip(scores.scores()) {
                prop_assert_eq!(cost.finite().is_some(), score.is_some());
                if let (Some(d), Some(s)) = (cost.finite(), score) {
                    finite.push((d, *s));
                }
            }
            for &(d1, s1) in &finite {
                for &(d2, s2) in &finite {
                    if d1 < d2 {
                        prop_assert!(s1 > s2);
                    }
                }
            }
        }

        #[test]
        fn masks_compose_by_intersection(
            (tr, goal) in arb_grid(),
            seed_a in any::<u64>(),
            seed_b in any::<u64>(),
        ) {
            let field = dijkstra_cost_to_go(&tr, goal).unwrap();
            let img = encode_c2g(&field).unwrap();
            let (w, h) = tr.dims();
            let m1 = BinaryGrid::from_fn(w, h, |c| (seed_a >> ((c.row * w + c.col) % 64)) & 1 == 1);
            let m2 = BinaryGrid::from_fn(w, h, |c| (seed_b >> ((c.row * 7 + c.col) % 64)) & 1 == 1);
            let once = apply_mask(&img, &m1).unwrap();
            prop_assert_eq!(&apply_mask(&once, &m1).unwrap(), &once);
            prop_assert_eq!(
                apply_mask(&once, &m2).unwrap(),
                apply_mask(&img, &m1.and(&m2)).unwrap()
            );
        }
    }
}
