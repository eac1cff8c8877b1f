use std::ops::ControlFlow;

use super::{Cell, GridError, GridShape, OccupancyGrid, Pose, Terrain};

/// Every cell touched by the segment joining the centers of `a` and `b`,
/// in traversal order from `a`. When the segment passes exactly through a
/// cell corner, both side cells are included.
pub fn supercover_cells(a: Cell, b: Cell) -> Vec<Cell> {
    let mut out = Vec::with_capacity(a.x.abs_diff(b.x) + a.y.abs_diff(b.y) + 1);
    let _ = walk_supercover(a, b, |c| {
        out.push(c);
        ControlFlow::<()>::Continue(())
    });
    out
}

fn walk_supercover<B>(a: Cell, b: Cell, mut visit: impl FnMut(Cell) -> ControlFlow<B>) -> ControlFlow<B> {
    let dx = a.x.abs_diff(b.x) as i64;
    let dy = a.y.abs_diff(b.y) as i64;
    let sx: isize = if b.x >= a.x { 1 } else { -1 };
    let sy: isize = if b.y >= a.y { 1 } else { -1 };
    let (mut x, mut y) = (a.x as isize, a.y as isize);
    let cell = |x: isize, y: isize| Cell::new(x as usize, y as usize);
    visit(cell(x, y))?;
    let (mut ix, mut iy) = (0i64, 0i64);
    while ix < dx || iy < dy {
        // Compares the parameter of the next vertical and horizontal crossing.
        let decision = (1 + 2 * ix) * dy - (1 + 2 * iy) * dx;
        if decision == 0 {
            visit(cell(x + sx, y))?;
            visit(cell(x, y + sy))?;
            x += sx;
            y += sy;
            ix += 1;
            iy += 1;
        } else if decision < 0 {
            x += sx;
            ix += 1;
        } else {
            y += sy;
            iy += 1;
        }
        visit(cell(x, y))?;
    }
    ControlFlow::Continue(())
}

/// True iff no cell touched by the segment between the cells containing `a`
/// and `b` (both endpoint cells included) is an obstacle.
pub fn line_of_sight(grid: &OccupancyGrid, a: &Pose, b: &Pose) -> Result<bool, GridError> {
    let ca = grid.cell_of(a).ok_or_else(|| GridError::out_of_bounds(a))?;
    let cb = grid.cell_of(b).ok_or_else(|| GridError::out_of_bounds(b))?;
    Ok(cells_see_each_other(grid, ca, cb))
}

pub(crate) fn cells_see_each_other(grid: &OccupancyGrid, a: Cell, b: Cell) -> bool {
    walk_supercover(a, b, |c| {
        if grid.terrain(c) == Terrain::Obstacle {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    })
    .is_continue()
}

/// Walks the cells pierced by a ray, calling `visit(cell, entry_distance)` in
/// order. Stops at the grid edge, once the entry distance reaches
/// `max_range`, or when `visit` breaks.
pub fn trace_ray<S: GridShape + ?Sized, B>(
    shape: &S,
    origin: &Pose,
    angle: f64,
    max_range: f64,
    mut visit: impl FnMut(Cell, f64) -> ControlFlow<B>,
) -> ControlFlow<B> {
    let Some(start) = shape.cell_of(origin) else {
        return ControlFlow::Continue(());
    };
    let res = shape.resolution();
    let (dir_x, dir_y) = (angle.cos(), angle.sin());
    let (mut cx, mut cy) = (start.x as isize, start.y as isize);
    let step_x: isize = if dir_x > 0.0 { 1 } else { -1 };
    let step_y: isize = if dir_y > 0.0 { 1 } else { -1 };
    let delta_x = if dir_x != 0.0 { res / dir_x.abs() } else { f64::INFINITY };
    let delta_y = if dir_y != 0.0 { res / dir_y.abs() } else { f64::INFINITY };
    let mut next_x = if dir_x > 0.0 {
        ((cx + 1) as f64 * res - origin.x) / dir_x
    } else if dir_x < 0.0 {
        (origin.x - cx as f64 * res) / -dir_x
    } else {
        f64::INFINITY
    };
    let mut next_y = if dir_y > 0.0 {
        ((cy + 1) as f64 * res - origin.y) / dir_y
    } else if dir_y < 0.0 {
        (origin.y - cy as f64 * res) / -dir_y
    } else {
        f64::INFINITY
    };
    let (w, h) = (shape.width() as isize, shape.height() as isize);
    let mut entry = 0.0;
    loop {
        visit(Cell::new(cx as usize, cy as usize), entry)?;
        if next_x < next_y {
            entry = next_x;
            next_x += delta_x;
            cx += step_x;
        } else {
            entry = next_y;
            next_y += delta_y;
            cy += step_y;
        }
        if entry >= max_range || cx < 0 || cy < 0 || cx >= w || cy >= h {
            return ControlFlow::Continue(());
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit {
    pub range: f64,
    pub hit: bool,
}

/// Distance along the ray to the boundary of the first obstacle cell, capped
/// at `max_range`.
pub fn raycast(grid: &OccupancyGrid, origin: &Pose, angle: f64, max_range: f64) -> Result<RayHit, GridError> {
    if grid.cell_of(origin).is_none() {
        return Err(GridError::out_of_bounds(origin));
    }
    let found = trace_ray(grid, origin, angle, max_range, |cell, entry| {
        if grid.terrain(cell) == Terrain::Obstacle {
            ControlFlow::Break(entry)
        } else {
            ControlFlow::Continue(())
        }
    });
    Ok(match found {
        ControlFlow::Break(range) => RayHit { range, hit: true },
        ControlFlow::Continue(()) => RayHit { range: max_range, hit: false },
    })
}
