//! Frontier extraction, scoring and selection.
//!
//! A real frontier is an 8-connected group of Free cells that touch Unknown
//! space. Virtual frontiers come from information decay (see
//! [`crate::decay`]) and are scored the same way.

use std::collections::{BTreeMap, VecDeque};
use std::ops::ControlFlow;

use thiserror::Error;

use crate::gridworld::{distance_field_until, Cell, GridShape};
use crate::perception::{CellState, KnownMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FrontierId(pub u64);

/// Hands out unique frontier ids within one run.
#[derive(Debug, Clone, Default)]
pub struct FrontierIds {
    next: u64,
}

impl FrontierIds {
    pub fn next_id(&mut self) -> FrontierId {
        let id = FrontierId(self.next);
        self.next += 1;
        id
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FrontierKind {
    Real,
    Virtual,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frontier {
    pub id: FrontierId,
    pub kind: FrontierKind,
    /// Member cells, sorted.
    pub cells: Vec<Cell>,
    /// Navigation goal: the centroid cell, or the member nearest the centroid.
    pub target: Cell,
    pub length_m: f64,
}

impl Frontier {
    /// Builds a frontier over a non-empty cell group.
    pub fn from_cells(id: FrontierId, kind: FrontierKind, mut cells: Vec<Cell>, resolution: f64) -> Self {
        assert!(!cells.is_empty(), "frontier needs at least one cell");
        cells.sort_unstable();
        let target = snapped_centroid(&cells);
        let length_m = cells.len() as f64 * resolution;
        Self { id, kind, cells, target, length_m }
    }

    pub fn contains(&self, cell: Cell) -> bool {
        self.cells.binary_search(&cell).is_ok()
    }
}

/// Centroid cell of `cells` (sorted), or the member nearest the centroid
/// point when the centroid cell is not a member.
pub fn snapped_centroid(cells: &[Cell]) -> Cell {
    let n = cells.len() as f64;
    let mx = cells.iter().map(|c| c.x as f64).sum::<f64>() / n;
    let my = cells.iter().map(|c| c.y as f64).sum::<f64>() / n;
    let center = Cell::new((mx + 0.5).floor() as usize, (my + 0.5).floor() as usize);
    if cells.binary_search(&center).is_ok() {
        return center;
    }
    let dist = |c: &Cell| (c.x as f64 - mx).hypot(c.y as f64 - my);
    *cells
        .iter()
        .min_by(|a, b| dist(a).total_cmp(&dist(b)))
        .expect("non-empty")
}

/// Real frontiers `F` (or `F_C`) and virtual frontiers `F̄` (or `F̄_C`).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FrontierSet {
    pub real: Vec<Frontier>,
    pub virtual_: Vec<Frontier>,
}

impl FrontierSet {
    pub fn iter(&self) -> impl Iterator<Item = &Frontier> {
        self.real.iter().chain(self.virtual_.iter())
    }

    pub fn get(&self, id: FrontierId) -> Option<&Frontier> {
        self.iter().find(|f| f.id == id)
    }

    pub fn is_empty(&self) -> bool {
        self.real.is_empty() && self.virtual_.is_empty()
    }
}

/// Free cell with at least one Unknown 8-neighbor.
pub fn is_frontier_cell(known: &KnownMap, cell: Cell) -> bool {
    known.get(cell) == CellState::Free && known.neighbors8(cell).any(|n| known.get(n) == CellState::Unknown)
}

/// 8-connected components of a cell set given as a membership mask over a
/// grid of `width` columns. Components come out ordered by their smallest
/// row-major index; members are sorted.
pub(crate) fn components8<S: GridShape>(shape: &S, member: &[bool]) -> Vec<Vec<Cell>> {
    let mut seen = vec![false; member.len()];
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..member.len() {
        if !member[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut comp = Vec::new();
        while let Some(i) = queue.pop_front() {
            let c = shape.cell_at(i);
            comp.push(c);
            for n in shape.neighbors8(c) {
                let ni = shape.index(n);
                if member[ni] && !seen[ni] {
                    seen[ni] = true;
                    queue.push_back(ni);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Extracts real frontiers with at least `min_cells` cells.
pub fn extract_frontiers(known: &KnownMap, min_cells: usize, ids: &mut FrontierIds) -> Vec<Frontier> {
    let Some((lo, hi)) = known.known_bounds() else {
        return Vec::new();
    };
    let mut member = vec![false; known.len()];
    let mut any = false;
    for y in lo.y..=hi.y {
        for x in lo.x..=hi.x {
            let c = Cell::new(x, y);
            if is_frontier_cell(known, c) {
                member[known.index(c)] = true;
                any = true;
            }
        }
    }
    if !any {
        return Vec::new();
    }
    components8(known, &member)
        .into_iter()
        .filter(|comp| comp.len() >= min_cells.max(1))
        .map(|comp| Frontier::from_cells(ids.next_id(), FrontierKind::Real, comp, known.resolution()))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("alpha must lie in [0, 1], got {0}")]
pub struct AlphaOutOfRange(pub f64);

/// `α·len − (1−α)·dist`; larger is better.
pub fn score(length_m: f64, dist_m: f64, alpha: f64) -> Result<f64, AlphaOutOfRange> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(AlphaOutOfRange(alpha));
    }
    Ok(alpha * length_m - (1.0 - alpha) * dist_m)
}

pub fn frontier_score(f: &Frontier, dist_m: f64, alpha: f64) -> Result<f64, AlphaOutOfRange> {
    score(f.length_m, dist_m, alpha)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selection<'a> {
    pub frontier: &'a Frontier,
    pub dist_m: f64,
    pub score: f64,
}

/// Picks the reachable frontier (real or virtual) with the highest score,
/// measuring distance as the shortest known-Free path to its target. Ties go
/// to the shorter distance, then the smaller id.
pub fn select_frontier<'a>(
    fs: &'a FrontierSet,
    robot_cell: Cell,
    known: &KnownMap,
    alpha: f64,
) -> Result<Option<Selection<'a>>, AlphaOutOfRange> {
    score(0.0, 0.0, alpha)?;
    if fs.is_empty() {
        return Ok(None);
    }
    let mut by_target: BTreeMap<Cell, Vec<&'a Frontier>> = BTreeMap::new();
    for f in fs.iter() {
        by_target.entry(f.target).or_default().push(f);
    }
    let max_len = fs.iter().map(|f| f.length_m).fold(0.0, f64::max);
    let res = known.resolution();
    let mut pending = by_target.len();
    let mut best: Option<Selection<'a>> = None;
    // Targets are settled in order of distance, so once even the longest
    // frontier could not beat the best score at the current distance, no
    // later target can either.
    distance_field_until(known, robot_cell, |cell, cost| {
        let dist_m = cost.meters(res);
        if let Some(b) = &best {
            if alpha < 1.0 && score(max_len, dist_m, alpha).unwrap_or(f64::NEG_INFINITY) < b.score {
                return ControlFlow::Break(());
            }
        }
        if let Some(frontiers) = by_target.get(&cell) {
            for &f in frontiers {
                let s = score(f.length_m, dist_m, alpha).unwrap_or(f64::NEG_INFINITY);
                let better = match &best {
                    None => true,
                    Some(b) => {
                        s > b.score || (s == b.score && (dist_m < b.dist_m || (dist_m == b.dist_m && f.id < b.frontier.id)))
                    }
                };
                if better {
                    best = Some(Selection { frontier: f, dist_m, score: s });
                }
            }
            pending -= 1;
            if pending == 0 {
                return ControlFlow::Break(());
            }
        }
        ControlFlow::Continue(())
    });
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fr(id: u64, len_cells: usize, y: usize) -> Frontier {
        let cells = (0..len_cells).map(|x| Cell::new(x, y)).collect();
        Frontier::from_cells(FrontierId(id), FrontierKind::Real, cells, 1.0)
    }

    #[test]
    fn score_arithmetic() {
        assert_eq!(score(8.0, 4.0, 0.25).unwrap(), -1.0);
        assert_eq!(score(8.0, 123.0, 1.0).unwrap(), 8.0);
        assert!(score(2.0, 2.0, 0.25).unwrap() > score(2.0, 5.0, 0.25).unwrap());
        assert_eq!(score(1.0, 1.0, 1.5), Err(AlphaOutOfRange(1.5)));
        assert!(score(1.0, 1.0, -0.1).is_err());
    }

    #[test]
    fn single_cell_frontier() {
        let mut k = KnownMap::unknown(3, 3, 0.1);
        k.set(Cell::new(1, 1), CellState::Free);
        let fs = extract_frontiers(&k, 1, &mut FrontierIds::default());
        assert_eq!(fs.len(), 1);
        assert_eq!(fs[0].cells, vec![Cell::new(1, 1)]);
        assert_eq!(fs[0].target, Cell::new(1, 1));
        assert!((fs[0].length_m - 0.1).abs() < 1e-12);
    }

    #[test]
    fn no_boundary_no_frontiers() {
        let mut ids = FrontierIds::default();
        let mut k = KnownMap::unknown(4, 4, 0.1);
        assert!(extract_frontiers(&k, 1, &mut ids).is_empty());
        for i in 0..16 {
            k.set(k.cell_at(i), CellState::Free);
        }
        assert!(extract_frontiers(&k, 1, &mut ids).is_empty());
        let mut walls = KnownMap::unknown(4, 4, 0.1);
        walls.set(Cell::new(1, 1), CellState::Obstacle);
        assert!(extract_frontiers(&walls, 1, &mut ids).is_empty());
    }

    #[test]
    fn min_cells_filters_small_groups() {
        let mut k = KnownMap::unknown(8, 3, 0.1);
        for x in 0..2 {
            k.set(Cell::new(x, 1), CellState::Free);
        }
        for x in 4..8 {
            k.set(Cell::new(x, 1), CellState::Free);
        }
        let fs = extract_frontiers(&k, 3, &mut FrontierIds::default());
        assert_eq!(fs.len(), 1);
        assert_eq!(fs[0].cells.len(), 4);
    }

    #[test]
    fn centroid_snaps_onto_member() {
        // L-shape: the centroid cell (1,1) is not a member.
        let cells = vec![Cell::new(0, 0), Cell::new(0, 1), Cell::new(0, 2), Cell::new(1, 2), Cell::new(2, 2)];
        let f = Frontier::from_cells(FrontierId(0), FrontierKind::Real, cells.clone(), 0.1);
        assert!(cells.contains(&f.target));
        assert_ne!(f.target, Cell::new(1, 1));
    }

    fn open_known(w: usize, h: usize) -> KnownMap {
        let mut k = KnownMap::unknown(w, h, 1.0);
        for i in 0..w * h {
            k.set(k.cell_at(i), CellState::Free);
        }
        k
    }

    #[test]
    fn select_singleton_and_trade_off() {
        let k = open_known(12, 12);
        let robot = Cell::new(0, 0);
        let one = FrontierSet { real: vec![fr(3, 2, 5)], virtual_: vec![] };
        assert_eq!(select_frontier(&one, robot, &k, 0.25).unwrap().unwrap().frontier.id, FrontierId(3));

        // 8 m long frontier 4 m away vs 2 m long frontier 1 m away.
        let big = Frontier { target: Cell::new(4, 0), ..fr(0, 8, 9) };
        let small = Frontier { target: Cell::new(1, 0), ..fr(1, 2, 10) };
        let fs = FrontierSet { real: vec![big], virtual_: vec![small] };
        let sel = select_frontier(&fs, robot, &k, 0.25).unwrap().unwrap();
        assert_eq!(sel.frontier.id, FrontierId(1));
        assert_eq!(sel.score, -0.25);
    }

    #[test]
    fn ties_prefer_nearer_then_lower_id() {
        let k = open_known(10, 10);
        let a = Frontier { target: Cell::new(2, 0), ..fr(5, 3, 4) };
        let b = Frontier { target: Cell::new(0, 2), ..fr(2, 3, 6) };
        let fs = FrontierSet { real: vec![a, b], virtual_: vec![] };
        let sel = select_frontier(&fs, Cell::new(0, 0), &k, 0.5).unwrap().unwrap();
        assert_eq!(sel.frontier.id, FrontierId(2));
    }

    #[test]
    fn unreachable_frontiers_are_skipped() {
        let mut k = open_known(5, 5);
        for y in 0..5 {
            k.set(Cell::new(2, y), CellState::Obstacle);
        }
        let f = Frontier { target: Cell::new(4, 4), ..fr(0, 1, 4) };
        let fs = FrontierSet { real: vec![f], virtual_: vec![] };
        assert!(select_frontier(&fs, Cell::new(0, 0), &k, 0.25).unwrap().is_none());
        assert!(select_frontier(&fs, Cell::new(0, 0), &k, 2.0).is_err());
    }
}
