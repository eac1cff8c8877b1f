//! Shortest paths over the Free cells of a [`KnownMap`].
//!
//! Moves are 8-connected; a diagonal move is allowed only when both
//! orthogonal cells it sweeps past are Free too. Costs are tracked as exact
//! step counts so that equal-length paths compare equal.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::ControlFlow;

use super::{Cell, GridPath, GridShape};
use crate::perception::{CellState, KnownMap};

/// Path cost as counts of axis-aligned and diagonal steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct PathCost {
    pub axis: u32,
    pub diagonal: u32,
}

impl PathCost {
    /// Length in cells.
    pub fn cells(self) -> f64 {
        self.axis as f64 + self.diagonal as f64 * std::f64::consts::SQRT_2
    }

    pub fn meters(self, resolution: f64) -> f64 {
        self.cells() * resolution
    }

    fn step(self, diagonal: bool) -> Self {
        if diagonal {
            Self { diagonal: self.diagonal + 1, ..self }
        } else {
            Self { axis: self.axis + 1, ..self }
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
struct QueueEntry {
    key: f64,
    index: usize,
}

impl Eq for QueueEntry {}

impl Ord for QueueEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on key, then index.
        other.key.total_cmp(&self.key).then_with(|| other.index.cmp(&self.index))
    }
}

impl PartialOrd for QueueEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Calls `visit(neighbor_index, is_diagonal)` for every traversable move
/// out of the cell at `index`.
#[inline]
fn for_each_move(known: &KnownMap, index: usize, mut visit: impl FnMut(usize, bool)) {
    let cells = known.cells();
    let w = known.width();
    let (x, y) = (index % w, index / w);
    let free = |i: usize| cells[i] == CellState::Free;
    let left = x > 0 && free(index - 1);
    let right = x + 1 < w && free(index + 1);
    let up = y > 0 && free(index - w);
    let down = y + 1 < known.height() && free(index + w);
    if left {
        visit(index - 1, false);
    }
    if right {
        visit(index + 1, false);
    }
    if up {
        visit(index - w, false);
        if left && free(index - w - 1) {
            visit(index - w - 1, true);
        }
        if right && free(index - w + 1) {
            visit(index - w + 1, true);
        }
    }
    if down {
        visit(index + w, false);
        if left && free(index + w - 1) {
            visit(index + w - 1, true);
        }
        if right && free(index + w + 1) {
            visit(index + w + 1, true);
        }
    }
}

fn octile(a: Cell, b: Cell) -> f64 {
    let dx = a.x.abs_diff(b.x) as f64;
    let dy = a.y.abs_diff(b.y) as f64;
    let (lo, hi) = if dx < dy { (dx, dy) } else { (dy, dx) };
    (hi - lo) + lo * std::f64::consts::SQRT_2
}

/// A* from `from` to `to` over Free cells of `known`. `None` when `to` is not
/// Free or cannot be reached.
pub fn plan_path(known: &KnownMap, from: Cell, to: Cell) -> Option<GridPath> {
    if !known.is_free(from) || !known.is_free(to) {
        return None;
    }
    let n = known.len();
    let mut cost: Vec<Option<PathCost>> = vec![None; n];
    let mut parent = vec![usize::MAX; n];
    let mut closed = vec![false; n];
    let start = known.index(from);
    let goal = known.index(to);
    cost[start] = Some(PathCost::default());
    let mut open = BinaryHeap::new();
    open.push(QueueEntry { key: octile(from, to), index: start });
    while let Some(QueueEntry { index, .. }) = open.pop() {
        if closed[index] {
            continue;
        }
        closed[index] = true;
        if index == goal {
            break;
        }
        let g = cost[index].expect("queued cells have a cost");
        for_each_move(known, index, |ni, diagonal| {
            if closed[ni] {
                return;
            }
            let candidate = g.step(diagonal);
            if cost[ni].is_none_or(|c| candidate.cells() < c.cells()) {
                cost[ni] = Some(candidate);
                parent[ni] = index;
                open.push(QueueEntry { key: candidate.cells() + octile(known.cell_at(ni), to), index: ni });
            }
        });
    }
    let total = cost[goal]?;
    let mut waypoints = vec![to];
    let mut at = goal;
    while at != start {
        at = parent[at];
        waypoints.push(known.cell_at(at));
    }
    waypoints.reverse();
    Some(GridPath { waypoints, cost: total, length: total.meters(known.resolution()) })
}

/// Single-source shortest path costs from one cell to every reachable Free
/// cell.
#[derive(Debug, Clone)]
pub struct DistanceField {
    width: usize,
    resolution: f64,
    costs: Vec<Option<PathCost>>,
}

impl DistanceField {
    pub fn cost(&self, cell: Cell) -> Option<PathCost> {
        self.costs.get(cell.y * self.width + cell.x).copied().flatten()
    }

    /// Shortest path length in meters, `None` when unreachable.
    pub fn meters(&self, cell: Cell) -> Option<f64> {
        self.cost(cell).map(|c| c.meters(self.resolution))
    }
}

/// Dijkstra over Free cells of `known` from `from`.
pub fn distance_field(known: &KnownMap, from: Cell) -> DistanceField {
    distance_field_until(known, from, |_, _| ControlFlow::Continue(()))
}

/// Dijkstra that reports each cell as it is settled, in order of
/// nondecreasing cost, and stops early once `settled` breaks. Cells not
/// settled by then have no cost in the returned field.
pub(crate) fn distance_field_until(
    known: &KnownMap,
    from: Cell,
    mut settled: impl FnMut(Cell, PathCost) -> ControlFlow<()>,
) -> DistanceField {
    let n = known.len();
    let mut costs: Vec<Option<PathCost>> = vec![None; n];
    let mut closed = vec![false; n];
    if known.is_free(from) {
        let start = known.index(from);
        costs[start] = Some(PathCost::default());
        let mut open = BinaryHeap::new();
        open.push(QueueEntry { key: 0.0, index: start });
        while let Some(QueueEntry { index, .. }) = open.pop() {
            if closed[index] {
                continue;
            }
            closed[index] = true;
            let g = costs[index].expect("queued cells have a cost");
            if settled(known.cell_at(index), g).is_break() {
                // Tentative costs of unsettled cells are not final.
                for (c, done) in costs.iter_mut().zip(&closed) {
                    if !done {
                        *c = None;
                    }
                }
                break;
            }
            for_each_move(known, index, |ni, diagonal| {
                if closed[ni] {
                    return;
                }
                let candidate = g.step(diagonal);
                if costs[ni].is_none_or(|c| candidate.cells() < c.cells()) {
                    costs[ni] = Some(candidate);
                    open.push(QueueEntry { key: candidate.cells(), index: ni });
                }
            });
        }
    }
    DistanceField { width: known.width(), resolution: known.resolution(), costs }
}
