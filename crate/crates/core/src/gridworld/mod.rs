//! Ground-truth world: an immutable obstacle/free grid plus the geometric
//! queries the rest of the simulator is built on.

mod geometry;
mod map_io;
mod planner;

use thiserror::Error;

pub(crate) use geometry::cells_see_each_other;
pub use geometry::{line_of_sight, raycast, supercover_cells, trace_ray, RayHit};
pub use map_io::{dump_grid, load_map, MapParseError};
pub(crate) use planner::distance_field_until;
pub use planner::{distance_field, plan_path, DistanceField, PathCost};

/// Integer cell coordinate. `x` grows along a row, `y` along the rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub x: usize,
    pub y: usize,
}

impl Cell {
    pub const fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }

    /// Euclidean distance between cell centers, in cells.
    pub fn distance(self, other: Cell) -> f64 {
        let dx = self.x as f64 - other.x as f64;
        let dy = self.y as f64 - other.y as f64;
        dx.hypot(dy)
    }

    pub fn is_8_adjacent(self, other: Cell) -> bool {
        self != other && self.x.abs_diff(other.x) <= 1 && self.y.abs_diff(other.y) <= 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Terrain {
    Free,
    Obstacle,
}

/// Position in meters in the shared world frame, plus a heading in `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self { x, y, heading: heading.rem_euclid(std::f64::consts::TAU) }
    }

    pub fn at(x: f64, y: f64) -> Self {
        Self { x, y, heading: 0.0 }
    }

    /// Pose at the center of `cell`.
    pub fn at_cell(cell: Cell, resolution: f64) -> Self {
        Self::at((cell.x as f64 + 0.5) * resolution, (cell.y as f64 + 0.5) * resolution)
    }

    pub fn distance(&self, other: &Pose) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("grid dimensions must be positive, got {width}x{height}")]
    EmptyGrid { width: usize, height: usize },
    #[error("resolution must be positive and finite, got {0}")]
    BadResolution(f64),
    #[error("cell vector has {actual} entries, expected {expected}")]
    SizeMismatch { expected: usize, actual: usize },
    #[error("pose ({x:.3}, {y:.3}) lies outside the grid")]
    OutOfBounds { x: f64, y: f64 },
}

impl GridError {
    pub(crate) fn out_of_bounds(pose: &Pose) -> Self {
        GridError::OutOfBounds { x: pose.x, y: pose.y }
    }
}

/// Shared dimensions and indexing of every row-major grid in the crate.
pub trait GridShape {
    fn width(&self) -> usize;
    fn height(&self) -> usize;
    fn resolution(&self) -> f64;

    fn len(&self) -> usize {
        self.width() * self.height()
    }

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn index(&self, cell: Cell) -> usize {
        cell.y * self.width() + cell.x
    }

    fn cell_at(&self, index: usize) -> Cell {
        Cell::new(index % self.width(), index / self.width())
    }

    fn contains(&self, cell: Cell) -> bool {
        cell.x < self.width() && cell.y < self.height()
    }

    /// Cell containing a metric position, if inside the grid.
    fn cell_of(&self, pose: &Pose) -> Option<Cell> {
        let res = self.resolution();
        if !(pose.x.is_finite() && pose.y.is_finite()) || pose.x < 0.0 || pose.y < 0.0 {
            return None;
        }
        let cell = Cell::new((pose.x / res).floor() as usize, (pose.y / res).floor() as usize);
        self.contains(cell).then_some(cell)
    }

    /// In-bounds 8-neighbors of `cell`.
    fn neighbors8(&self, cell: Cell) -> Neighbors8 {
        Neighbors8 { center: cell, width: self.width(), height: self.height(), k: 0 }
    }
}

/// Bare dimensions of a grid, detached from its contents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridDims {
    pub width: usize,
    pub height: usize,
    pub resolution: f64,
}

impl GridDims {
    pub fn of<S: GridShape + ?Sized>(shape: &S) -> Self {
        Self { width: shape.width(), height: shape.height(), resolution: shape.resolution() }
    }
}

impl GridShape for GridDims {
    fn width(&self) -> usize {
        self.width
    }
    fn height(&self) -> usize {
        self.height
    }
    fn resolution(&self) -> f64 {
        self.resolution
    }
}

pub struct Neighbors8 {
    center: Cell,
    width: usize,
    height: usize,
    k: u8,
}

const OFFSETS8: [(isize, isize); 8] = [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)];

impl Iterator for Neighbors8 {
    type Item = Cell;

    fn next(&mut self) -> Option<Cell> {
        while (self.k as usize) < OFFSETS8.len() {
            let (dx, dy) = OFFSETS8[self.k as usize];
            self.k += 1;
            let x = self.center.x as isize + dx;
            let y = self.center.y as isize + dy;
            if x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height {
                return Some(Cell::new(x as usize, y as usize));
            }
        }
        None
    }
}

/// Ground-truth world map. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    width: usize,
    height: usize,
    resolution: f64,
    cells: Vec<Terrain>,
}

impl OccupancyGrid {
    pub fn new(width: usize, height: usize, resolution: f64, cells: Vec<Terrain>) -> Result<Self, GridError> {
        if width == 0 || height == 0 {
            return Err(GridError::EmptyGrid { width, height });
        }
        if !(resolution.is_finite() && resolution > 0.0) {
            return Err(GridError::BadResolution(resolution));
        }
        if cells.len() != width * height {
            return Err(GridError::SizeMismatch { expected: width * height, actual: cells.len() });
        }
        Ok(Self { width, height, resolution, cells })
    }

    /// Grid filled with one terrain value.
    pub fn filled(width: usize, height: usize, resolution: f64, terrain: Terrain) -> Result<Self, GridError> {
        Self::new(width, height, resolution, vec![terrain; width * height])
    }

    pub fn terrain(&self, cell: Cell) -> Terrain {
        self.cells[self.index(cell)]
    }

    pub fn is_free(&self, cell: Cell) -> bool {
        self.contains(cell) && self.terrain(cell) == Terrain::Free
    }

    pub fn set(&mut self, cell: Cell, terrain: Terrain) {
        let i = self.index(cell);
        self.cells[i] = terrain;
    }

    pub fn cells(&self) -> &[Terrain] {
        &self.cells
    }

    /// Forces every boundary cell to `Obstacle`, closing the world.
    pub fn close_border(&mut self) {
        let (w, h) = (self.width, self.height);
        for x in 0..w {
            self.set(Cell::new(x, 0), Terrain::Obstacle);
            self.set(Cell::new(x, h - 1), Terrain::Obstacle);
        }
        for y in 0..h {
            self.set(Cell::new(0, y), Terrain::Obstacle);
            self.set(Cell::new(w - 1, y), Terrain::Obstacle);
        }
    }

    pub fn free_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, t)| **t == Terrain::Free)
            .map(|(i, _)| self.cell_at(i))
    }

    pub fn free_count(&self) -> usize {
        self.cells.iter().filter(|t| **t == Terrain::Free).count()
    }

    /// Free cell nearest to the centroid of all Free cells (ties broken by
    /// row-major order). `None` for a grid without Free cells.
    pub fn free_space_center(&self) -> Option<Cell> {
        let n = self.free_count();
        if n == 0 {
            return None;
        }
        let (sx, sy) = self.free_cells().fold((0.0, 0.0), |(sx, sy), c| (sx + c.x as f64, sy + c.y as f64));
        let (cx, cy) = (sx / n as f64, sy / n as f64);
        self.free_cells().min_by(|a, b| {
            let da = (a.x as f64 - cx).hypot(a.y as f64 - cy);
            let db = (b.x as f64 - cx).hypot(b.y as f64 - cy);
            da.total_cmp(&db)
        })
    }

    pub fn width_m(&self) -> f64 {
        self.width as f64 * self.resolution
    }

    pub fn height_m(&self) -> f64 {
        self.height as f64 * self.resolution
    }
}

impl GridShape for OccupancyGrid {
    fn width(&self) -> usize {
        self.width
    }
    fn height(&self) -> usize {
        self.height
    }
    fn resolution(&self) -> f64 {
        self.resolution
    }
}

/// Sequence of 8-adjacent cells with its metric length.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPath {
    pub waypoints: Vec<Cell>,
    pub cost: PathCost,
    pub length: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn close_border_walls_every_edge() {
        let mut g = OccupancyGrid::filled(4, 3, 0.1, Terrain::Free).unwrap();
        g.close_border();
        let free: Vec<_> = g.free_cells().collect();
        assert_eq!(free, vec![Cell::new(1, 1), Cell::new(2, 1)]);
    }

    #[test]
    fn cell_of_rejects_outside_poses() {
        let g = OccupancyGrid::filled(10, 10, 0.1, Terrain::Free).unwrap();
        assert_eq!(g.cell_of(&Pose::at(0.05, 0.95)), Some(Cell::new(0, 9)));
        assert_eq!(g.cell_of(&Pose::at(1.0, 0.5)), None);
        assert_eq!(g.cell_of(&Pose::at(-0.01, 0.5)), None);
    }

    #[test]
    fn constructor_checks_invariants() {
        assert!(OccupancyGrid::new(0, 3, 0.1, vec![]).is_err());
        assert!(OccupancyGrid::new(2, 2, 0.0, vec![Terrain::Free; 4]).is_err());
        assert!(OccupancyGrid::new(2, 2, 0.1, vec![Terrain::Free; 3]).is_err());
    }

    #[test]
    fn neighbors_clip_at_corners() {
        let g = OccupancyGrid::filled(3, 3, 0.1, Terrain::Free).unwrap();
        assert_eq!(g.neighbors8(Cell::new(0, 0)).count(), 3);
        assert_eq!(g.neighbors8(Cell::new(1, 1)).count(), 8);
    }
}
