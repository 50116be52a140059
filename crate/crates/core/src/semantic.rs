//! Terrain palette, semantic and binary grids, colour conversion and PNG I/O.
//!
//! Every map in the crate is a [`SemanticGrid`]: a row-major array of class ids
//! that carries the [`Palette`] it was built against. Images are plain
//! [`RgbImage`] buffers; cost-to-go renderings and belief renderings share
//! that type.

use std::collections::HashMap;
use std::fmt;
use std::io::Cursor;
use std::path::Path;
use std::sync::Arc;

use image::codecs::png::{CompressionType, FilterType, PngEncoder};
use image::{ColorType, ImageEncoder, RgbImage};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Rgb = [u8; 3];

pub const BLACK: Rgb = [0, 0, 0];
pub const RED: Rgb = [255, 0, 0];

/// Name of the class the planner searches for.
pub const GOAL_CLASS: &str = "goal";
/// Name of the class that marks cells never seen by the agent.
pub const UNOBSERVED_CLASS: &str = "unobserved";

const DEFAULT_PALETTE_JSON: &str = include_str!("../palette.json");

#[derive(Debug, Error)]
pub enum SemanticError {
    #[error("pixel ({row}, {col}) has colour {rgb:?} which is not in the palette")]
    UnknownColor { row: usize, col: usize, rgb: Rgb },
    #[error("malformed PNG: {0}")]
    MalformedPng(String),
    #[error("invalid palette: {0}")]
    InvalidPalette(String),
    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },
    #[error("class id {0} is not in the palette")]
    UnknownClass(u8),
    #[error("grid dimensions must be positive")]
    EmptyGrid,
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// A grid cell addressed by row then column. The derived ordering is row-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }

    /// 4-neighbours that fall inside a `width` x `height` grid, in N, E, S, W order.
    pub fn neighbors4(self, width: usize, height: usize) -> impl Iterator<Item = Cell> {
        let Cell { row, col } = self;
        let up = (row > 0).then(|| Cell::new(row - 1, col));
        let right = (col + 1 < width).then(|| Cell::new(row, col + 1));
        let down = (row + 1 < height).then(|| Cell::new(row + 1, col));
        let left = (col > 0).then(|| Cell::new(row, col - 1));
        [up, right, down, left].into_iter().flatten()
    }

    pub fn is_adjacent4(self, other: Cell) -> bool {
        self.row.abs_diff(other.row) + self.col.abs_diff(other.col) == 1
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TerrainClass {
    pub id: u8,
    pub name: String,
    pub color: Rgb,
    pub traversable: bool,
}

#[derive(Serialize, Deserialize)]
struct PaletteFile {
    classes: Vec<TerrainClass>,
}

/// Ordered set of terrain classes with colour and id lookups.
#[derive(Debug, Clone)]
pub struct Palette {
    classes: Vec<TerrainClass>,
    by_color: HashMap<Rgb, u8>,
    goal: u8,
    unobserved: u8,
}

impl PartialEq for Palette {
    fn eq(&self, other: &Self) -> bool {
        self.classes == other.classes
    }
}

impl Eq for Palette {}

impl Palette {
    pub fn new(classes: Vec<TerrainClass>) -> Result<Self, SemanticError> {
        let invalid = |msg: String| Err(SemanticError::InvalidPalette(msg));
        if classes.is_empty() || classes.len() > 255 {
            return invalid(format!("expected 1..=255 classes, got {}", classes.len()));
        }
        let mut by_color = HashMap::new();
        for (i, class) in classes.iter().enumerate() {
            if class.id as usize != i {
                return invalid(format!(
                    "class ids must be contiguous from 0; position {i} has id {}",
                    class.id
                ));
            }
            if by_color.insert(class.color, class.id).is_some() {
                return invalid(format!("colour {:?} is used twice", class.color));
            }
        }
        let find_unique = |name: &str| -> Result<u8, SemanticError> {
            let mut hits = classes.iter().filter(|c| c.name == name);
            match (hits.next(), hits.next()) {
                (Some(c), None) => Ok(c.id),
                _ => Err(SemanticError::InvalidPalette(format!(
                    "exactly one class must be named {name:?}"
                ))),
            }
        };
        let goal = find_unique(GOAL_CLASS)?;
        let unobserved = find_unique(UNOBSERVED_CLASS)?;
        if !classes[goal as usize].traversable {
            return invalid("the goal class must be traversable".into());
        }
        let u = &classes[unobserved as usize];
        if u.traversable || u.color != BLACK {
            return invalid("the unobserved class must be black and non-traversable".into());
        }
        Ok(Self {
            classes,
            by_color,
            goal,
            unobserved,
        })
    }

    /// The eight-class suburban palette shipped in `palette.json`.
    pub fn default_palette() -> Arc<Palette> {
        static DEFAULT: std::sync::OnceLock<Arc<Palette>> = std::sync::OnceLock::new();
        DEFAULT
            .get_or_init(|| {
                Arc::new(Palette::from_json(DEFAULT_PALETTE_JSON).expect("bundled palette is valid"))
            })
            .clone()
    }

    pub fn from_json(json: &str) -> Result<Self, SemanticError> {
        let file: PaletteFile = serde_json::from_str(json)
            .map_err(|e| SemanticError::InvalidPalette(e.to_string()))?;
        Self::new(file.classes)
    }

    pub fn load(path: &Path) -> Result<Self, SemanticError> {
        let text = std::fs::read_to_string(path).map_err(|source| SemanticError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&PaletteFile {
            classes: self.classes.clone(),
        })
        .expect("palette serializes")
    }

    pub fn classes(&self) -> &[TerrainClass] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn class(&self, id: u8) -> Option<&TerrainClass> {
        self.classes.get(id as usize)
    }

    pub fn id_of_color(&self, rgb: Rgb) -> Option<u8> {
        self.by_color.get(&rgb).copied()
    }

    pub fn id_of_name(&self, name: &str) -> Option<u8> {
        self.classes.iter().find(|c| c.name == name).map(|c| c.id)
    }

    /// Panics if `id` is outside the palette; grids validate ids on construction.
    pub fn color(&self, id: u8) -> Rgb {
        self.classes[id as usize].color
    }

    pub fn is_traversable(&self, id: u8) -> bool {
        self.classes[id as usize].traversable
    }

    pub fn goal_id(&self) -> u8 {
        self.goal
    }

    pub fn unobserved_id(&self) -> u8 {
        self.unobserved
    }

    /// Whether a rendered colour belongs to a traversable class.
    pub fn color_is_traversable(&self, rgb: Rgb) -> bool {
        self.id_of_color(rgb).is_some_and(|id| self.is_traversable(id))
    }
}

/// H x W array of terrain class ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemanticGrid {
    width: usize,
    height: usize,
    cells: Vec<u8>,
    palette: Arc<Palette>,
}

impl SemanticGrid {
    pub fn filled(
        width: usize,
        height: usize,
        id: u8,
        palette: Arc<Palette>,
    ) -> Result<Self, SemanticError> {
        Self::from_cells(width, height, vec![id; width * height], palette)
    }

    pub fn from_cells(
        width: usize,
        height: usize,
        cells: Vec<u8>,
        palette: Arc<Palette>,
    ) -> Result<Self, SemanticError> {
        if width == 0 || height == 0 {
            return Err(SemanticError::EmptyGrid);
        }
        if cells.len() != width * height {
            return Err(SemanticError::DimensionMismatch {
                expected: (width, height),
                actual: (cells.len(), 1),
            });
        }
        if let Some(&bad) = cells.iter().find(|&&id| palette.class(id).is_none()) {
            return Err(SemanticError::UnknownClass(bad));
        }
        Ok(Self {
            width,
            height,
            cells,
            palette,
        })
    }

    /// Every cell set to the palette's unobserved class.
    pub fn unobserved(width: usize, height: usize, palette: Arc<Palette>) -> Result<Self, SemanticError> {
        let id = palette.unobserved_id();
        Self::filled(width, height, id, palette)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn palette(&self) -> &Arc<Palette> {
        &self.palette
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    pub fn contains(&self, cell: Cell) -> bool {
        cell.row < self.height && cell.col < self.width
    }

    pub fn get(&self, cell: Cell) -> u8 {
        self.cells[cell.row * self.width + cell.col]
    }

    pub fn set(&mut self, cell: Cell, id: u8) {
        assert!(self.palette.class(id).is_some(), "class id {id} not in palette");
        self.cells[cell.row * self.width + cell.col] = id;
    }

    pub fn is_traversable(&self, cell: Cell) -> bool {
        self.palette.is_traversable(self.get(cell))
    }

    pub fn is_observed(&self, cell: Cell) -> bool {
        self.get(cell) != self.palette.unobserved_id()
    }

    pub fn iter_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.height).flat_map(move |row| (0..self.width).map(move |col| Cell::new(row, col)))
    }

    /// Cells holding class `id`, row-major.
    pub fn cells_of(&self, id: u8) -> Vec<Cell> {
        self.iter_cells().filter(|&c| self.get(c) == id).collect()
    }

    pub fn to_image(&self) -> RgbImage {
        let mut buf = Vec::with_capacity(self.cells.len() * 3);
        for &id in &self.cells {
            buf.extend_from_slice(&self.palette.color(id));
        }
        RgbImage::from_raw(self.width as u32, self.height as u32, buf).expect("buffer size matches")
    }

    pub fn from_image(img: &RgbImage, palette: Arc<Palette>) -> Result<Self, SemanticError> {
        let (w, h) = (img.width() as usize, img.height() as usize);
        let mut cells = Vec::with_capacity(w * h);
        for (col, row, px) in img.enumerate_pixels() {
            let rgb = px.0;
            let id = palette.id_of_color(rgb).ok_or(SemanticError::UnknownColor {
                row: row as usize,
                col: col as usize,
                rgb,
            })?;
            cells.push(id);
        }
        Self::from_cells(w, h, cells, palette)
    }
}

/// Row-major boolean grid: traversability maps and observation masks.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryGrid {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryGrid {
    pub fn new(width: usize, height: usize, value: bool) -> Self {
        Self {
            width,
            height,
            bits: vec![value; width * height],
        }
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Result<Self, SemanticError> {
        if bits.len() != width * height {
            return Err(SemanticError::DimensionMismatch {
                expected: (width, height),
                actual: (bits.len(), 1),
            });
        }
        Ok(Self { width, height, bits })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(Cell) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                bits.push(f(Cell::new(row, col)));
            }
        }
        Self { width, height, bits }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn contains(&self, cell: Cell) -> bool {
        cell.row < self.height && cell.col < self.width
    }

    pub fn get(&self, cell: Cell) -> bool {
        self.bits[cell.row * self.width + cell.col]
    }

    pub fn set(&mut self, cell: Cell, value: bool) {
        self.bits[cell.row * self.width + cell.col] = value;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn ones(&self) -> impl Iterator<Item = Cell> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| Cell::new(i / self.width, i % self.width))
    }

    pub fn and(&self, other: &BinaryGrid) -> BinaryGrid {
        assert_eq!(self.dims(), other.dims());
        let bits = self.bits.iter().zip(&other.bits).map(|(a, b)| *a && *b).collect();
        BinaryGrid { bits, ..*self }
    }

    pub fn or(&self, other: &BinaryGrid) -> BinaryGrid {
        assert_eq!(self.dims(), other.dims());
        let bits = self.bits.iter().zip(&other.bits).map(|(a, b)| *a || *b).collect();
        BinaryGrid { bits, ..*self }
    }

    /// True when every set bit of `self` is also set in `other`.
    pub fn is_subset(&self, other: &BinaryGrid) -> bool {
        self.dims() == other.dims() && self.bits.iter().zip(&other.bits).all(|(a, b)| !*a || *b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hsv {
    /// Degrees in [0, 360).
    pub h: f64,
    pub s: f64,
    pub v: f64,
}

/// Hexcone RGB to HSV. Gray pixels (including black) have zero hue and saturation.
pub fn rgb_to_hsv(rgb: Rgb) -> Hsv {
    let [r, g, b] = rgb.map(|c| c as f64 / 255.0);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let s = if max == 0.0 { 0.0 } else { delta / max };
    let h = if delta == 0.0 {
        0.0
    } else if max == r {
        60.0 * ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    Hsv {
        h: if h >= 360.0 { h - 360.0 } else { h },
        s,
        v: max,
    }
}

/// Source index sampled by output index `i` when mapping `src` samples to `dst`.
fn center_sample(i: usize, src: usize, dst: usize) -> usize {
    // floor((i + 0.5) * src / dst) in exact integer arithmetic
    ((2 * i + 1) * src) / (2 * dst)
}

/// Nearest-neighbour resize using pixel-centre sampling.
pub fn resize_nearest(img: &RgbImage, out_w: u32, out_h: u32) -> RgbImage {
    assert!(out_w > 0 && out_h > 0, "output dimensions must be positive");
    let (w, h) = (img.width() as usize, img.height() as usize);
    if (w, h) == (out_w as usize, out_h as usize) {
        return img.clone();
    }
    let cols: Vec<usize> = (0..out_w as usize).map(|c| center_sample(c, w, out_w as usize)).collect();
    let src = img.as_raw();
    let mut out = Vec::with_capacity(out_w as usize * out_h as usize * 3);
    for r in 0..out_h as usize {
        let sr = center_sample(r, h, out_h as usize);
        let row = &src[sr * w * 3..(sr + 1) * w * 3];
        for &sc in &cols {
            out.extend_from_slice(&row[sc * 3..sc * 3 + 3]);
        }
    }
    RgbImage::from_raw(out_w, out_h, out).expect("buffer size matches")
}

pub fn encode_png(img: &RgbImage) -> Vec<u8> {
    let mut bytes = Vec::new();
    PngEncoder::new_with_quality(&mut bytes, CompressionType::Fast, FilterType::Sub)
        .write_image(img.as_raw(), img.width(), img.height(), ColorType::Rgb8.into())
        .expect("in-memory PNG encoding does not fail");
    bytes
}

/// Decodes an 8-bit RGB (or RGBA, alpha dropped) PNG.
pub fn decode_png(bytes: &[u8]) -> Result<RgbImage, SemanticError> {
    let reader = image::ImageReader::with_format(Cursor::new(bytes), image::ImageFormat::Png);
    let img = reader
        .decode()
        .map_err(|e| SemanticError::MalformedPng(e.to_string()))?;
    match img {
        image::DynamicImage::ImageRgb8(rgb) => Ok(rgb),
        image::DynamicImage::ImageRgba8(rgba) => Ok(image::DynamicImage::ImageRgba8(rgba).to_rgb8()),
        other => Err(SemanticError::MalformedPng(format!(
            "expected 8-bit RGB, got {:?}",
            other.color()
        ))),
    }
}

pub fn read_png(path: &Path) -> Result<RgbImage, SemanticError> {
    let bytes = std::fs::read(path).map_err(|source| SemanticError::Io {
        path: path.display().to_string(),
        source,
    })?;
    decode_png(&bytes)
}

pub fn write_png(path: &Path, img: &RgbImage) -> Result<(), SemanticError> {
    std::fs::write(path, encode_png(img)).map_err(|source| SemanticError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_semantic_png(bytes: &[u8], palette: Arc<Palette>) -> Result<SemanticGrid, SemanticError> {
    let img = decode_png(bytes)?;
    SemanticGrid::from_image(&img, palette)
}

pub fn save_semantic_png(grid: &SemanticGrid) -> Vec<u8> {
    encode_png(&grid.to_image())
}
