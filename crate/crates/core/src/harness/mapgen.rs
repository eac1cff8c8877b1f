//! Procedural indoor maps: rooms hung off corridors.
//!
//! All three styles carve rooms and corridors out of solid rock with 0.2 m
//! walls, 2 m corridors and 1 m doors. Every room gets one door onto a
//! corridor; some neighboring rooms also get a connecting door.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::gridworld::{Cell, GridShape, OccupancyGrid, Terrain};

pub const DEFAULT_RESOLUTION: f64 = 0.1;

const WALL_M: f64 = 0.2;
const CORRIDOR_M: f64 = 2.0;
const DOOR_M: f64 = 1.0;
const MIN_ROOM_M: f64 = 2.5;
const SIDE_DOOR_PROBABILITY: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MapStyle {
    /// Rooms on both sides of a square corridor loop.
    Ring,
    /// Rooms between a grid of corridors.
    Office,
    /// Two office blocks joined by a corridor.
    Campus,
}

impl std::str::FromStr for MapStyle {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ring" => Ok(MapStyle::Ring),
            "office" => Ok(MapStyle::Office),
            "campus" => Ok(MapStyle::Campus),
            other => Err(format!("unknown map style {other:?} (expected ring, office or campus)")),
        }
    }
}

impl MapStyle {
    pub fn as_str(self) -> &'static str {
        match self {
            MapStyle::Ring => "ring",
            MapStyle::Office => "office",
            MapStyle::Campus => "campus",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MapGenError {
    #[error("map area must be positive, got {0} m²")]
    BadSize(f64),
    #[error("{0} m² is too small for a {1} map")]
    TooSmall(f64, &'static str),
    #[error("{rooms} rooms do not fit: a strip of {length_m:.1} m would need rooms under {min_m} m wide")]
    RoomsDoNotFit { rooms: usize, length_m: f64, min_m: f64 },
    #[error("generated free space is not connected ({0} components)")]
    Disconnected(usize),
}

/// Half-open cell rectangle `[x0, x1) × [y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Rect {
    x0: usize,
    y0: usize,
    x1: usize,
    y1: usize,
}

impl Rect {
    fn new(x0: usize, y0: usize, x1: usize, y1: usize) -> Self {
        Self { x0, y0, x1, y1 }
    }
}

/// Which side of a block faces its corridor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Facing {
    Up,
    Down,
    Left,
    Right,
}

/// A rectangle to be cut into rooms, each opening onto the corridor on the
/// `facing` side through a wall band `wall` cells thick.
#[derive(Debug, Clone, Copy)]
struct Block {
    rect: Rect,
    facing: Facing,
}

impl Block {
    /// Extent along which rooms are laid side by side.
    fn length(&self) -> usize {
        match self.facing {
            Facing::Up | Facing::Down => self.rect.x1 - self.rect.x0,
            Facing::Left | Facing::Right => self.rect.y1 - self.rect.y0,
        }
    }
}

struct Canvas {
    width: usize,
    height: usize,
    cells: Vec<Terrain>,
    wall: usize,
    door: usize,
    min_room: usize,
    resolution: f64,
}

impl Canvas {
    fn new(width: usize, height: usize, resolution: f64) -> Self {
        let cells_of = |m: f64| ((m / resolution).round() as usize).max(1);
        Self {
            width,
            height,
            cells: vec![Terrain::Obstacle; width * height],
            wall: cells_of(WALL_M),
            door: cells_of(DOOR_M),
            min_room: cells_of(MIN_ROOM_M),
            resolution,
        }
    }

    fn carve(&mut self, r: Rect) {
        for y in r.y0..r.y1.min(self.height) {
            for x in r.x0..r.x1.min(self.width) {
                self.cells[y * self.width + x] = Terrain::Free;
            }
        }
    }

    /// Splits `block` into `rooms` rooms with jittered widths, each with a
    /// door onto the facing corridor.
    fn rooms(&mut self, block: Block, rooms: usize, rng: &mut ChaCha8Rng) -> Result<(), MapGenError> {
        if rooms == 0 {
            return Ok(());
        }
        let len = block.length();
        let w = self.wall;
        if len < rooms * self.min_room + (rooms - 1) * w {
            return Err(MapGenError::RoomsDoNotFit {
                rooms,
                length_m: len as f64 * self.resolution,
                min_m: MIN_ROOM_M,
            });
        }
        // Jittered cut points, each room at least min_room wide.
        let slack = len - rooms * self.min_room - (rooms - 1) * w;
        let mut weights: Vec<f64> = (0..rooms).map(|_| rng.gen_range(0.8..1.2)).collect();
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|x| *x /= total);
        let mut extents = Vec::with_capacity(rooms);
        let mut start = 0usize;
        let mut used_slack = 0usize;
        for (i, wgt) in weights.iter().enumerate() {
            let extra = if i + 1 == rooms { slack - used_slack } else { ((slack as f64) * wgt).floor() as usize };
            used_slack += extra;
            let size = self.min_room + extra;
            extents.push((start, start + size));
            start += size + w;
        }
        let r = block.rect;
        let along = |a: usize, b: usize| match block.facing {
            Facing::Up | Facing::Down => Rect::new(r.x0 + a, r.y0, r.x0 + b, r.y1),
            Facing::Left | Facing::Right => Rect::new(r.x0, r.y0 + a, r.x1, r.y0 + b),
        };
        for (i, &(a, b)) in extents.iter().enumerate() {
            self.carve(along(a, b));
            let door_len = self.door.min(b - a - 2);
            let off = a + 1 + rng.gen_range(0..=(b - a - 2 - door_len));
            // Door through the wall band on the facing side.
            let door = match block.facing {
                Facing::Up => Rect::new(r.x0 + off, r.y0 - w, r.x0 + off + door_len, r.y0),
                Facing::Down => Rect::new(r.x0 + off, r.y1, r.x0 + off + door_len, r.y1 + w),
                Facing::Left => Rect::new(r.x0 - w, r.y0 + off, r.x0, r.y0 + off + door_len),
                Facing::Right => Rect::new(r.x1, r.y0 + off, r.x1 + w, r.y0 + off + door_len),
            };
            self.carve(door);
            if i + 1 < extents.len() && rng.gen_bool(SIDE_DOOR_PROBABILITY) {
                let depth = match block.facing {
                    Facing::Up | Facing::Down => r.y1 - r.y0,
                    Facing::Left | Facing::Right => r.x1 - r.x0,
                };
                if depth > self.door + 2 {
                    let d0 = 1 + rng.gen_range(0..=(depth - 2 - self.door));
                    let side = match block.facing {
                        Facing::Up | Facing::Down => {
                            Rect::new(r.x0 + b, r.y0 + d0, r.x0 + b + w, r.y0 + d0 + self.door)
                        }
                        Facing::Left | Facing::Right => {
                            Rect::new(r.x0 + d0, r.y0 + b, r.x0 + d0 + self.door, r.y0 + b + w)
                        }
                    };
                    self.carve(side);
                }
            }
        }
        Ok(())
    }

    fn into_grid(self) -> OccupancyGrid {
        let mut g = OccupancyGrid::new(self.width, self.height, self.resolution, self.cells).expect("canvas dims valid");
        g.close_border();
        g
    }
}

/// Splits `total` rooms across blocks in proportion to their lengths
/// (largest remainder, ties to the earlier block).
fn allocate(blocks: &[Block], total: usize) -> Vec<usize> {
    let lens: Vec<f64> = blocks.iter().map(|b| b.length() as f64).collect();
    let sum: f64 = lens.iter().sum();
    if sum == 0.0 || total == 0 {
        return vec![0; blocks.len()];
    }
    let quotas: Vec<f64> = lens.iter().map(|l| l / sum * total as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut left = total - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..blocks.len()).collect();
    order.sort_by(|&a, &b| (quotas[b] - quotas[b].floor()).total_cmp(&(quotas[a] - quotas[a].floor())).then(a.cmp(&b)));
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        counts[i] += 1;
        left -= 1;
    }
    counts
}

fn room_depth_cells(side_m: f64, resolution: f64) -> usize {
    ((side_m * 0.15).clamp(3.0, 8.0) / resolution).round() as usize
}

fn ring(canvas: &mut Canvas, rooms: usize, rng: &mut ChaCha8Rng) -> Result<(), MapGenError> {
    let s = canvas.width;
    let w = canvas.wall;
    let cw = (CORRIDOR_M / canvas.resolution).round() as usize;
    let mut depth = room_depth_cells(s as f64 * canvas.resolution, canvas.resolution);
    if rooms == 0 {
        depth = depth.min(s / 8);
    }
    let a = 2 * w + depth;
    let b = a + cw + w;
    if s < 2 * (a + cw) + 2 * w {
        return Err(MapGenError::TooSmall((s as f64 * canvas.resolution).powi(2), "ring"));
    }
    canvas.carve(Rect::new(a, a, s - a, a + cw));
    canvas.carve(Rect::new(a, s - a - cw, s - a, s - a));
    canvas.carve(Rect::new(a, a, a + cw, s - a));
    canvas.carve(Rect::new(s - a - cw, a, s - a, s - a));

    let mut blocks = vec![
        Block { rect: Rect::new(a, w, s - a, w + depth), facing: Facing::Down },
        Block { rect: Rect::new(s - w - depth, a, s - w, s - a), facing: Facing::Left },
        Block { rect: Rect::new(a, s - w - depth, s - a, s - w), facing: Facing::Up },
        Block { rect: Rect::new(w, a, w + depth, s - a), facing: Facing::Right },
    ];
    let inner = s.saturating_sub(2 * b);
    if inner >= 2 * depth + 2 * w + canvas.min_room {
        blocks.push(Block { rect: Rect::new(b, b, s - b, b + depth), facing: Facing::Up });
        blocks.push(Block { rect: Rect::new(s - b - depth, b + depth + w, s - b, s - b - depth - w), facing: Facing::Right });
        blocks.push(Block { rect: Rect::new(b, s - b - depth, s - b, s - b), facing: Facing::Down });
        blocks.push(Block { rect: Rect::new(b, b + depth + w, b + depth, s - b - depth - w), facing: Facing::Left });
    } else if inner >= depth {
        blocks.push(Block { rect: Rect::new(b, b, s - b, b + depth), facing: Facing::Up });
    }
    let counts = allocate(&blocks, rooms);
    for (block, n) in blocks.into_iter().zip(counts) {
        canvas.rooms(block, n, rng)?;
    }
    Ok(())
}

/// Office layout inside `area`: two vertical and two horizontal corridors,
/// rooms in the nine blocks between them. Returns the y range of the
/// horizontal corridors.
fn office(canvas: &mut Canvas, area: Rect, rooms: usize, rng: &mut ChaCha8Rng) -> Result<Vec<(usize, usize)>, MapGenError> {
    let w = canvas.wall;
    let cw = (CORRIDOR_M / canvas.resolution).round() as usize;
    let (iw, ih) = (area.x1 - area.x0 - 2 * w, area.y1 - area.y0 - 2 * w);
    let need = 3 * canvas.min_room + 2 * cw + 4 * w;
    if iw < need || ih < need {
        let side = (area.x1 - area.x0) as f64 * canvas.resolution;
        return Err(MapGenError::TooSmall(side * side, "office"));
    }
    // Corridor start offsets along each axis.
    let cuts = |extent: usize, origin: usize| -> Vec<usize> {
        (1..=2).map(|k| origin + w + extent * k / 3 - cw / 2).collect()
    };
    let vx = cuts(iw, area.x0);
    let hy = cuts(ih, area.y0);
    for &x in &vx {
        canvas.carve(Rect::new(x, area.y0 + w, x + cw, area.y1 - w));
    }
    for &y in &hy {
        canvas.carve(Rect::new(area.x0 + w, y, area.x1 - w, y + cw));
    }
    let cols = [
        (area.x0 + w, vx[0] - w),
        (vx[0] + cw + w, vx[1] - w),
        (vx[1] + cw + w, area.x1 - w),
    ];
    let rows = [
        (area.y0 + w, hy[0] - w),
        (hy[0] + cw + w, hy[1] - w),
        (hy[1] + cw + w, area.y1 - w),
    ];
    let mut blocks = Vec::new();
    for &(y0, y1) in &rows {
        for (ci, &(x0, x1)) in cols.iter().enumerate() {
            match ci {
                0 => blocks.push(Block { rect: Rect::new(x0, y0, x1, y1), facing: Facing::Right }),
                2 => blocks.push(Block { rect: Rect::new(x0, y0, x1, y1), facing: Facing::Left }),
                _ => {
                    let mid = (x0 + x1) / 2;
                    if mid - x0 >= 2 * canvas.min_room / 2 + w {
                        blocks.push(Block { rect: Rect::new(x0, y0, mid - w / 2, y1), facing: Facing::Left });
                        blocks.push(Block { rect: Rect::new(mid + (w - w / 2), y0, x1, y1), facing: Facing::Right });
                    } else {
                        blocks.push(Block { rect: Rect::new(x0, y0, x1, y1), facing: Facing::Left });
                    }
                }
            }
        }
    }
    let counts = allocate(&blocks, rooms);
    for (block, n) in blocks.into_iter().zip(counts) {
        canvas.rooms(block, n, rng)?;
    }
    Ok(hy.into_iter().map(|y| (y, y + cw)).collect())
}

fn campus(canvas: &mut Canvas, rooms: usize, rng: &mut ChaCha8Rng) -> Result<(), MapGenError> {
    let (s, h) = (canvas.width, canvas.height);
    let half = s / 2;
    let left = office(canvas, Rect::new(0, 0, half, h), rooms / 2 + rooms % 2, rng)?;
    office(canvas, Rect::new(half, 0, s, h), rooms / 2, rng)?;
    // Bridge the first horizontal corridor across both outer walls.
    let (y0, y1) = left[0];
    let reach = 6 * canvas.wall;
    canvas.carve(Rect::new(half - reach, y0, half + reach, y1));
    Ok(())
}

/// Generates a map of roughly `size_m2` square meters at 0.1 m resolution.
pub fn generate_map(style: MapStyle, size_m2: f64, room_count: usize, seed: u64) -> Result<OccupancyGrid, MapGenError> {
    generate_map_with_resolution(style, size_m2, room_count, seed, DEFAULT_RESOLUTION)
}

pub fn generate_map_with_resolution(
    style: MapStyle,
    size_m2: f64,
    room_count: usize,
    seed: u64,
    resolution: f64,
) -> Result<OccupancyGrid, MapGenError> {
    if !(size_m2.is_finite() && size_m2 > 0.0) {
        return Err(MapGenError::BadSize(size_m2));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side_m = size_m2.sqrt();
    let grid = match style {
        MapStyle::Ring | MapStyle::Office => {
            let s = (side_m / resolution).round() as usize;
            let mut canvas = Canvas::new(s, s, resolution);
            if style == MapStyle::Ring {
                ring(&mut canvas, room_count, &mut rng)?;
            } else {
                let area = Rect::new(0, 0, s, s);
                office(&mut canvas, area, room_count, &mut rng)?;
            }
            canvas.into_grid()
        }
        MapStyle::Campus => {
            // Two square blocks side by side.
            let h = ((size_m2 / 2.0).sqrt() / resolution).round() as usize;
            let mut canvas = Canvas::new(2 * h, h, resolution);
            campus(&mut canvas, room_count, &mut rng)?;
            canvas.into_grid()
        }
    };
    let n = free_components(&grid);
    if n != 1 {
        return Err(MapGenError::Disconnected(n));
    }
    Ok(grid)
}

/// Number of 4-connected components of Free space.
pub fn free_components(grid: &OccupancyGrid) -> usize {
    let mut seen = vec![false; grid.len()];
    let mut count = 0;
    let mut queue = VecDeque::new();
    for start in 0..grid.len() {
        if seen[start] || grid.cells()[start] != Terrain::Free {
            continue;
        }
        count += 1;
        seen[start] = true;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            let c = grid.cell_at(i);
            let cand = [
                (c.x.wrapping_sub(1), c.y),
                (c.x + 1, c.y),
                (c.x, c.y.wrapping_sub(1)),
                (c.x, c.y + 1),
            ];
            for (x, y) in cand {
                let n = Cell::new(x, y);
                if grid.contains(n) {
                    let ni = grid.index(n);
                    if !seen[ni] && grid.cells()[ni] == Terrain::Free {
                        seen[ni] = true;
                        queue.push_back(ni);
                    }
                }
            }
        }
    }
    count
}
