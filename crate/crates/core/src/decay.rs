//! Exploration traces and information decay.
//!
//! A trace is the area swept by a disk of radius `d` around the poses a
//! cluster leader has recorded. Poses are grouped into fixed-size chunks;
//! once the newest pose of a chunk is older than the decay horizon the whole
//! chunk is forgotten, and the inner contour of the region that vanished
//! becomes a set of virtual frontiers.

use std::collections::BTreeMap;

use crate::frontier::{components8, Frontier, FrontierIds, FrontierKind};
use crate::gridworld::{Cell, GridDims, GridShape, Pose};
use crate::perception::KnownMap;
use crate::team::RobotId;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePose {
    pub pose: Pose,
    pub timestamp: f64,
    /// `ordinal / chunk_size`, where `ordinal` counts the poses `source` has
    /// appended.
    pub chunk_id: u64,
    /// Robot that recorded the pose; differs from the trace owner after merges.
    pub source: RobotId,
}

impl TracePose {
    fn chunk_key(&self) -> (RobotId, u64) {
        (self.source, self.chunk_id)
    }
}

/// Grid cells whose centers lie within `radius` meters of `pose`.
pub fn disk_cells<S: GridShape>(shape: &S, pose: &Pose, radius: f64) -> impl Iterator<Item = Cell> {
    let res = shape.resolution();
    let (w, h) = (shape.width() as isize, shape.height() as isize);
    let x0 = (((pose.x - radius) / res).floor() as isize).max(0);
    let x1 = (((pose.x + radius) / res).floor() as isize).min(w - 1);
    let y0 = (((pose.y - radius) / res).floor() as isize).max(0);
    let y1 = (((pose.y + radius) / res).floor() as isize).min(h - 1);
    let (px, py, r2) = (pose.x, pose.y, radius * radius);
    (y0..=y1).flat_map(move |y| {
        (x0..=x1).filter_map(move |x| {
            let dx = (x as f64 + 0.5) * res - px;
            let dy = (y as f64 + 0.5) * res - py;
            (dx * dx + dy * dy <= r2).then(|| Cell::new(x as usize, y as usize))
        })
    })
}

/// Footprint of a pose sequence as a row-major membership mask.
pub fn footprint_of<'a, S: GridShape>(shape: &S, radius: f64, poses: impl IntoIterator<Item = &'a Pose>) -> Vec<bool> {
    let mut mask = vec![false; shape.len()];
    for p in poses {
        for c in disk_cells(shape, p, radius) {
            mask[shape.index(c)] = true;
        }
    }
    mask
}

/// Timestamped pose chain and its footprint.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplorationTrace {
    owner: RobotId,
    shape: GridDims,
    radius: f64,
    chunk_size: usize,
    /// Active head, ordered by `(timestamp, source)`.
    poses: Vec<TracePose>,
    /// Number of active disks covering each cell.
    coverage: Vec<u16>,
    covered: usize,
    appended: BTreeMap<RobotId, u64>,
}

impl ExplorationTrace {
    pub fn new<S: GridShape>(owner: RobotId, shape: &S, footprint_radius: f64, chunk_size: usize) -> Self {
        assert!(chunk_size >= 1, "chunk_size must be at least 1");
        let shape = GridDims::of(shape);
        Self {
            owner,
            shape,
            radius: footprint_radius,
            chunk_size,
            poses: Vec::new(),
            coverage: vec![0; shape.len()],
            covered: 0,
            appended: BTreeMap::new(),
        }
    }

    pub fn owner(&self) -> RobotId {
        self.owner
    }

    pub fn poses(&self) -> &[TracePose] {
        &self.poses
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    pub fn footprint_radius(&self) -> f64 {
        self.radius
    }

    pub fn chunk_size(&self) -> usize {
        self.chunk_size
    }

    pub fn last_timestamp(&self) -> Option<f64> {
        self.poses.iter().filter(|p| p.source == self.owner).map(|p| p.timestamp).next_back()
    }

    pub fn in_footprint(&self, cell: Cell) -> bool {
        self.coverage[self.shape.index(cell)] > 0
    }

    pub fn footprint_size(&self) -> usize {
        self.covered
    }

    pub fn footprint_mask(&self) -> Vec<bool> {
        self.coverage.iter().map(|&c| c > 0).collect()
    }

    pub fn footprint_cells(&self) -> Vec<Cell> {
        (0..self.coverage.len()).filter(|&i| self.coverage[i] > 0).map(|i| self.shape.cell_at(i)).collect()
    }

    fn add_disk(&mut self, pose: &Pose) {
        for c in disk_cells(&self.shape, pose, self.radius) {
            let i = self.shape.index(c);
            if self.coverage[i] == 0 {
                self.covered += 1;
            }
            self.coverage[i] += 1;
        }
    }

    /// Removes one disk and reports cells that are no longer covered.
    fn remove_disk(&mut self, pose: &Pose, vanished: &mut Vec<Cell>) {
        for c in disk_cells(&self.shape, pose, self.radius) {
            let i = self.shape.index(c);
            self.coverage[i] -= 1;
            if self.coverage[i] == 0 {
                self.covered -= 1;
                vanished.push(c);
            }
        }
    }

    /// Records a pose taken by the owner at time `now`.
    pub fn append_pose(&mut self, pose: Pose, now: f64) {
        let ordinal = self.appended.entry(self.owner).or_insert(0);
        let chunk_id = *ordinal / self.chunk_size as u64;
        *ordinal += 1;
        self.add_disk(&pose);
        self.poses.push(TracePose { pose, timestamp: now, chunk_id, source: self.owner });
    }

    /// Chunk whose newest pose is oldest, with that newest timestamp.
    fn stalest_chunk(&self) -> Option<((RobotId, u64), f64)> {
        let mut newest: BTreeMap<(RobotId, u64), f64> = BTreeMap::new();
        for p in &self.poses {
            let e = newest.entry(p.chunk_key()).or_insert(p.timestamp);
            *e = e.max(p.timestamp);
        }
        newest.into_iter().min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
    }
}

/// Outcome of forgetting one chunk.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayEvent {
    pub removed_poses: Vec<TracePose>,
    /// Cells in the footprint before removal and not after, sorted.
    pub vanished_region: Vec<Cell>,
    pub new_virtual_frontiers: Vec<Frontier>,
}

/// Forgets the stalest chunk if its newest pose is older than `horizon`
/// seconds at `now`, emitting virtual frontiers on the inner contour of the
/// vanished region.
pub fn decay_step(
    trace: &mut ExplorationTrace,
    known: &KnownMap,
    now: f64,
    horizon: f64,
    ids: &mut FrontierIds,
) -> Option<DecayEvent> {
    let (key, newest) = trace.stalest_chunk()?;
    if now - newest <= horizon {
        return None;
    }
    let (removed, kept): (Vec<TracePose>, Vec<TracePose>) =
        std::mem::take(&mut trace.poses).into_iter().partition(|p| p.chunk_key() == key);
    trace.poses = kept;
    let mut vanished = Vec::new();
    for p in &removed {
        trace.remove_disk(&p.pose, &mut vanished);
    }
    vanished.sort_unstable();
    let new_virtual_frontiers = contour_frontiers(&trace.shape, &vanished, known, ids);
    Some(DecayEvent { removed_poses: removed, vanished_region: vanished, new_virtual_frontiers })
}

/// Repeats [`decay_step`] until nothing is overdue.
pub fn decay_all(
    trace: &mut ExplorationTrace,
    known: &KnownMap,
    now: f64,
    horizon: f64,
    ids: &mut FrontierIds,
) -> Vec<DecayEvent> {
    std::iter::from_fn(|| decay_step(trace, known, now, horizon, ids)).collect()
}

/// Components of the Free cells of `region` that border a cell outside it.
fn contour_frontiers<S: GridShape>(shape: &S, region: &[Cell], known: &KnownMap, ids: &mut FrontierIds) -> Vec<Frontier> {
    if region.is_empty() {
        return Vec::new();
    }
    let mut inside = vec![false; shape.len()];
    for c in region {
        inside[shape.index(*c)] = true;
    }
    let mut contour = vec![false; shape.len()];
    for &c in region {
        if known.is_free(c) && shape.neighbors8(c).any(|n| !inside[shape.index(n)]) {
            contour[shape.index(c)] = true;
        }
    }
    components8(shape, &contour)
        .into_iter()
        .map(|cells| Frontier::from_cells(ids.next_id(), FrontierKind::Virtual, cells, shape.resolution()))
        .collect()
}

/// Merges cluster traces into one owned by `leader` and cuts every virtual
/// frontier down to its cells outside the merged footprint. Frontiers left
/// intact keep their id; split or trimmed ones are rebuilt with fresh ids.
pub fn merge_traces(
    leader: RobotId,
    traces: Vec<ExplorationTrace>,
    cluster_virtual: Vec<Frontier>,
    ids: &mut FrontierIds,
) -> (ExplorationTrace, Vec<Frontier>) {
    let mut iter = traces.into_iter();
    let mut merged = iter.next().expect("merge_traces needs at least one trace");
    merged.owner = leader;
    for t in iter {
        assert_eq!(t.shape, merged.shape, "traces must share a grid");
        for (i, &c) in t.coverage.iter().enumerate() {
            if c > 0 {
                if merged.coverage[i] == 0 {
                    merged.covered += 1;
                }
                merged.coverage[i] += c;
            }
        }
        for (src, n) in t.appended {
            let e = merged.appended.entry(src).or_insert(0);
            *e = (*e).max(n);
        }
        merged.poses.extend(t.poses);
    }
    merged.poses.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp).then(a.source.cmp(&b.source)));
    let pruned = prune_virtual(&merged, cluster_virtual, ids);
    (merged, pruned)
}

/// Removes virtual frontier cells lying inside the active footprint,
/// re-splitting what remains into 8-connected parts.
pub fn prune_virtual(trace: &ExplorationTrace, frontiers: Vec<Frontier>, ids: &mut FrontierIds) -> Vec<Frontier> {
    let mut out = Vec::with_capacity(frontiers.len());
    for f in frontiers {
        let surviving: Vec<Cell> = f.cells.iter().copied().filter(|c| !trace.in_footprint(*c)).collect();
        if surviving.len() == f.cells.len() {
            out.push(f);
            continue;
        }
        if surviving.is_empty() {
            continue;
        }
        let mut mask = vec![false; trace.shape.len()];
        for c in &surviving {
            mask[trace.shape.index(*c)] = true;
        }
        for part in components8(&trace.shape, &mask) {
            out.push(Frontier::from_cells(ids.next_id(), f.kind, part, trace.shape.resolution()));
        }
    }
    out
}

/// Drops virtual frontiers whose target the active footprint covers again.
pub fn drop_recovered(trace: &ExplorationTrace, frontiers: &mut Vec<Frontier>) {
    frontiers.retain(|f| !trace.in_footprint(f.target));
}
