//! Simulated lidar and per-robot tri-state maps.

use std::ops::ControlFlow;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::gridworld::{raycast, trace_ray, Cell, GridDims, GridShape, OccupancyGrid, Pose, Terrain};

/// Belief about one cell. Ordered as a join lattice: `Unknown < Free < Obstacle`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum CellState {
    #[default]
    Unknown,
    Free,
    Obstacle,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PerceptionError {
    #[error("lidar needs at least 8 beams, got {0}")]
    TooFewBeams(usize),
    #[error("lidar range must be positive, got {0}")]
    BadRange(f64),
    #[error("pose ({x:.3}, {y:.3}) is not in a free cell")]
    PoseNotFree { x: f64, y: f64 },
    #[error("cannot merge maps of different shapes: {0:?} vs {1:?}")]
    ShapeMismatch((usize, usize), (usize, usize)),
    #[error("no maps to merge")]
    NothingToMerge,
}

/// Tri-state occupancy belief in the shared world frame.
#[derive(Debug, Clone, PartialEq)]
pub struct KnownMap {
    width: usize,
    height: usize,
    resolution: f64,
    cells: Vec<CellState>,
    known_count: usize,
    // Inclusive bounding box of known cells: (min_x, min_y, max_x, max_y).
    bounds: Option<(usize, usize, usize, usize)>,
}

impl KnownMap {
    pub fn unknown(width: usize, height: usize, resolution: f64) -> Self {
        Self {
            width,
            height,
            resolution,
            cells: vec![CellState::Unknown; width * height],
            known_count: 0,
            bounds: None,
        }
    }

    /// All-Unknown map shaped like `grid`.
    pub fn for_grid(grid: &OccupancyGrid) -> Self {
        Self::unknown(grid.width(), grid.height(), grid.resolution())
    }

    pub fn get(&self, cell: Cell) -> CellState {
        self.cells[self.index(cell)]
    }

    pub fn is_free(&self, cell: Cell) -> bool {
        self.get(cell) == CellState::Free
    }

    pub fn cells(&self) -> &[CellState] {
        &self.cells
    }

    /// Overwrites one cell; returns whether it changed.
    pub fn set(&mut self, cell: Cell, state: CellState) -> bool {
        let i = self.index(cell);
        let old = self.cells[i];
        if old == state {
            return false;
        }
        match (old, state) {
            (CellState::Unknown, _) => self.known_count += 1,
            (_, CellState::Unknown) => self.known_count -= 1,
            _ => {}
        }
        self.cells[i] = state;
        if state != CellState::Unknown {
            self.grow_bounds(cell);
        }
        true
    }

    /// Raises a cell to at least `state` on the lattice.
    pub fn observe(&mut self, cell: Cell, state: CellState) -> bool {
        if state > self.get(cell) {
            self.set(cell, state)
        } else {
            false
        }
    }

    fn grow_bounds(&mut self, c: Cell) {
        self.bounds = Some(match self.bounds {
            None => (c.x, c.y, c.x, c.y),
            Some((x0, y0, x1, y1)) => (x0.min(c.x), y0.min(c.y), x1.max(c.x), y1.max(c.y)),
        });
    }

    /// Inclusive bounding box of known cells.
    pub fn known_bounds(&self) -> Option<(Cell, Cell)> {
        self.bounds.map(|(x0, y0, x1, y1)| (Cell::new(x0, y0), Cell::new(x1, y1)))
    }

    pub fn known_count(&self) -> usize {
        self.known_count
    }

    pub fn known_area_m2(&self) -> f64 {
        self.known_count as f64 * self.resolution * self.resolution
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    /// ASCII dump: `#` obstacle, `.` free, space for unknown.
    pub fn dump(&self) -> String {
        let mut out = String::with_capacity((self.width + 1) * self.height);
        for row in self.cells.chunks(self.width) {
            out.extend(row.iter().map(|c| match c {
                CellState::Unknown => ' ',
                CellState::Free => '.',
                CellState::Obstacle => '#',
            }));
            out.push('\n');
        }
        out
    }
}

impl GridShape for KnownMap {
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

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Beam {
    pub angle: f64,
    pub range: f64,
    pub hit: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LidarScan {
    pub origin: Pose,
    pub max_range: f64,
    pub beams: Vec<Beam>,
}

fn check_scan_params(grid: &OccupancyGrid, pose: &Pose, range: f64, n_beams: usize) -> Result<(), PerceptionError> {
    if n_beams < 8 {
        return Err(PerceptionError::TooFewBeams(n_beams));
    }
    if !(range.is_finite() && range > 0.0) {
        return Err(PerceptionError::BadRange(range));
    }
    match grid.cell_of(pose) {
        Some(c) if grid.terrain(c) == Terrain::Free => Ok(()),
        _ => Err(PerceptionError::PoseNotFree { x: pose.x, y: pose.y }),
    }
}

/// One raycast per beam at angles `2πj / n_beams`.
pub fn simulate_lidar(grid: &OccupancyGrid, pose: &Pose, range: f64, n_beams: usize) -> Result<LidarScan, PerceptionError> {
    check_scan_params(grid, pose, range, n_beams)?;
    let beams = (0..n_beams)
        .map(|j| {
            let angle = std::f64::consts::TAU * j as f64 / n_beams as f64;
            let hit = raycast(grid, pose, angle, range).expect("pose checked in bounds");
            Beam { angle, range: hit.range, hit: hit.hit }
        })
        .collect();
    Ok(LidarScan { origin: *pose, max_range: range, beams })
}

/// Like [`simulate_lidar`] with zero-mean Gaussian noise added to every
/// range, clamped to `[0, range]`. Noisy scans can mark cells wrongly.
pub fn simulate_lidar_noisy<R: Rng>(
    grid: &OccupancyGrid,
    pose: &Pose,
    range: f64,
    n_beams: usize,
    sigma: f64,
    rng: &mut R,
) -> Result<LidarScan, PerceptionError> {
    let mut scan = simulate_lidar(grid, pose, range, n_beams)?;
    let noise = Normal::new(0.0, sigma.abs()).map_err(|_| PerceptionError::BadRange(sigma))?;
    for beam in &mut scan.beams {
        beam.range = (beam.range + noise.sample(rng)).clamp(0.0, range);
    }
    Ok(scan)
}

/// Marks the cells each beam crosses as Free and the struck cell as
/// Obstacle. Returns the number of cells whose state changed.
pub fn integrate_scan(known: &mut KnownMap, scan: &LidarScan) -> usize {
    let mut changed = 0;
    let dims = GridDims::of(known);
    for beam in &scan.beams {
        let _ = trace_ray(&dims, &scan.origin, beam.angle, scan.max_range, |cell, entry| {
            if beam.hit && entry >= beam.range {
                changed += known.observe(cell, CellState::Obstacle) as usize;
                ControlFlow::Break(())
            } else if entry >= beam.range {
                ControlFlow::Break(())
            } else {
                changed += known.observe(cell, CellState::Free) as usize;
                ControlFlow::Continue(())
            }
        });
    }
    changed
}

/// Cell-wise lattice join of all maps.
pub fn merge_maps<'a, I>(maps: I) -> Result<KnownMap, PerceptionError>
where
    I: IntoIterator<Item = &'a KnownMap>,
{
    let mut iter = maps.into_iter();
    let mut merged = iter.next().ok_or(PerceptionError::NothingToMerge)?.clone();
    for map in iter {
        merge_into(&mut merged, map)?;
    }
    Ok(merged)
}

/// Joins `other` into `target` in place.
pub fn merge_into(target: &mut KnownMap, other: &KnownMap) -> Result<(), PerceptionError> {
    if target.shape() != other.shape() {
        return Err(PerceptionError::ShapeMismatch(target.shape(), other.shape()));
    }
    let Some((lo, hi)) = other.known_bounds() else {
        return Ok(());
    };
    for y in lo.y..=hi.y {
        for x in lo.x..=hi.x {
            let c = Cell::new(x, y);
            target.observe(c, other.get(c));
        }
    }
    Ok(())
}
