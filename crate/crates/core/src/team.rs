//! Communication graph, clusters and leader-follower formation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::decay::{merge_traces, ExplorationTrace};
use crate::frontier::{extract_frontiers, FrontierIds, FrontierSet};
use crate::gridworld::{line_of_sight, OccupancyGrid, Pose};
use crate::perception::{merge_into, KnownMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RobotId(pub usize);

impl fmt::Display for RobotId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "R{}", self.0)
    }
}

/// Undirected graph over robots: an edge joins two robots within range `d`
/// of each other with a clear line of sight.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommGraph {
    n: usize,
    adjacency: Vec<BTreeSet<usize>>,
}

impl CommGraph {
    pub fn empty(n: usize) -> Self {
        Self { n, adjacency: vec![BTreeSet::new(); n] }
    }

    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (RobotId, RobotId)>) -> Self {
        let mut g = Self::empty(n);
        for (a, b) in edges {
            g.add_edge(a, b);
        }
        g
    }

    pub fn add_edge(&mut self, a: RobotId, b: RobotId) {
        if a != b {
            self.adjacency[a.0].insert(b.0);
            self.adjacency[b.0].insert(a.0);
        }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn has_edge(&self, a: RobotId, b: RobotId) -> bool {
        self.adjacency[a.0].contains(&b.0)
    }

    pub fn neighbors(&self, a: RobotId) -> impl Iterator<Item = RobotId> + '_ {
        self.adjacency[a.0].iter().map(|&i| RobotId(i))
    }

    /// Edges `(a, b)` with `a < b`, sorted.
    pub fn edges(&self) -> Vec<(RobotId, RobotId)> {
        let mut out = Vec::new();
        for (a, adj) in self.adjacency.iter().enumerate() {
            out.extend(adj.iter().filter(|&&b| b > a).map(|&b| (RobotId(a), RobotId(b))));
        }
        out
    }

    /// Connected components of the subgraph induced by `members`.
    pub fn components_within(&self, members: &BTreeSet<RobotId>) -> Vec<BTreeSet<RobotId>> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for &start in members {
            if !seen.insert(start) {
                continue;
            }
            let mut comp = BTreeSet::from([start]);
            let mut stack = vec![start];
            while let Some(r) = stack.pop() {
                for n in self.neighbors(r) {
                    if members.contains(&n) && seen.insert(n) {
                        comp.insert(n);
                        stack.push(n);
                    }
                }
            }
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        let all: BTreeSet<RobotId> = (0..self.n).map(RobotId).collect();
        self.components_within(&all).len() <= 1
    }
}

/// Builds the communication graph for robots `0..poses.len()`.
pub fn build_comm_graph(poses: &[Pose], grid: &OccupancyGrid, d: f64) -> CommGraph {
    let mut g = CommGraph::empty(poses.len());
    for i in 0..poses.len() {
        for j in i + 1..poses.len() {
            if poses[i].distance(&poses[j]) <= d && line_of_sight(grid, &poses[i], &poses[j]).unwrap_or(false) {
                g.add_edge(RobotId(i), RobotId(j));
            }
        }
    }
    g
}

/// Minimum id. Stand-in for a consensus round.
pub fn elect_leader(members: &BTreeSet<RobotId>) -> RobotId {
    *members.iter().next().expect("cluster has at least one member")
}

/// Disjoint-set forest with path halving and union by size.
#[derive(Debug, Clone)]
pub struct DisjointSets {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSets {
    pub fn new(n: usize) -> Self {
        Self { parent: (0..n).collect(), size: vec![1; n] }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        true
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergeEvent {
    /// The clusters that joined, each given by its member set.
    pub parts: Vec<BTreeSet<RobotId>>,
    pub members: BTreeSet<RobotId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitEvent {
    pub from: BTreeSet<RobotId>,
    pub parts: Vec<BTreeSet<RobotId>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionUpdate {
    /// New partition, sorted by smallest member.
    pub partition: Vec<BTreeSet<RobotId>>,
    pub merges: Vec<MergeEvent>,
    pub splits: Vec<SplitEvent>,
}

/// Advances a partition of robots given this tick's communication graph.
///
/// Clusters containing a `failed` robot split into their connected parts
/// first. Then any two clusters joined by at least one edge merge; merges
/// chain transitively.
pub fn update_partition(
    current: &[BTreeSet<RobotId>],
    graph: &CommGraph,
    failed: &BTreeSet<RobotId>,
) -> PartitionUpdate {
    let mut splits = Vec::new();
    let mut groups: Vec<BTreeSet<RobotId>> = Vec::with_capacity(current.len());
    for cluster in current {
        if cluster.len() > 1 && cluster.iter().any(|r| failed.contains(r)) {
            let parts = graph.components_within(cluster);
            if parts.len() > 1 {
                splits.push(SplitEvent { from: cluster.clone(), parts: parts.clone() });
                groups.extend(parts);
                continue;
            }
        }
        groups.push(cluster.clone());
    }

    let mut owner = vec![usize::MAX; graph.node_count()];
    for (gi, g) in groups.iter().enumerate() {
        for r in g {
            owner[r.0] = gi;
        }
    }
    let mut sets = DisjointSets::new(groups.len());
    for (a, b) in graph.edges() {
        sets.union(owner[a.0], owner[b.0]);
    }
    let mut by_root: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for gi in 0..groups.len() {
        by_root.entry(sets.find(gi)).or_default().push(gi);
    }
    let mut partition = Vec::new();
    let mut merges = Vec::new();
    for gis in by_root.into_values() {
        let members: BTreeSet<RobotId> = gis.iter().flat_map(|&gi| groups[gi].iter().copied()).collect();
        if gis.len() > 1 {
            let mut parts: Vec<_> = gis.iter().map(|&gi| groups[gi].clone()).collect();
            parts.sort();
            merges.push(MergeEvent { parts, members: members.clone() });
        }
        partition.push(members);
    }
    partition.sort();
    merges.sort_by(|a, b| a.members.cmp(&b.members));
    PartitionUpdate { partition, merges, splits }
}

/// A connected group of robots sharing one map, frontier set and trace.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub members: BTreeSet<RobotId>,
    pub leader: RobotId,
    pub merged_map: KnownMap,
    pub frontiers: FrontierSet,
    pub trace: ExplorationTrace,
}

impl Cluster {
    pub fn singleton(id: RobotId, map: KnownMap, trace: ExplorationTrace) -> Self {
        Self { members: BTreeSet::from([id]), leader: id, merged_map: map, frontiers: FrontierSet::default(), trace }
    }

    pub fn followers(&self) -> impl Iterator<Item = RobotId> + '_ {
        self.members.iter().copied().filter(move |&r| r != self.leader)
    }
}

/// Partition of the whole team into clusters, ordered by leader id.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSet {
    pub clusters: Vec<Cluster>,
}

impl ClusterSet {
    pub fn max_size(&self) -> usize {
        self.clusters.iter().map(|c| c.members.len()).max().unwrap_or(0)
    }

    pub fn membership(&self) -> Vec<BTreeSet<RobotId>> {
        self.clusters.iter().map(|c| c.members.clone()).collect()
    }

    pub fn cluster_of(&self, robot: RobotId) -> Option<&Cluster> {
        self.clusters.iter().find(|c| c.members.contains(&robot))
    }
}

/// Joins clusters: union of members, min-id leader, joined map, real
/// frontiers re-extracted from the joined map, traces merged and virtual
/// frontiers pruned against the merged footprint.
pub fn on_merge(parts: Vec<Cluster>, min_frontier_cells: usize, ids: &mut FrontierIds) -> Cluster {
    assert!(!parts.is_empty(), "nothing to merge");
    let members: BTreeSet<RobotId> = parts.iter().flat_map(|c| c.members.iter().copied()).collect();
    let leader = elect_leader(&members);
    let mut merged_map = parts[0].merged_map.clone();
    for p in &parts[1..] {
        merge_into(&mut merged_map, &p.merged_map).expect("clusters share the world frame");
    }
    let real = extract_frontiers(&merged_map, min_frontier_cells, ids);
    let mut virtual_ = Vec::new();
    let mut traces = Vec::with_capacity(parts.len());
    for p in parts {
        virtual_.extend(p.frontiers.virtual_);
        traces.push(p.trace);
    }
    let (trace, virtual_) = merge_traces(leader, traces, virtual_, ids);
    Cluster { members, leader, merged_map, frontiers: FrontierSet { real, virtual_ }, trace }
}

/// Places follower `j` at the point the leader passed `(j+1)·spacing` meters
/// of path ago. `history` runs oldest to newest; positions past the oldest
/// entry clamp to it.
pub fn formation_targets(history: &[Pose], n_followers: usize, spacing: f64) -> Vec<Pose> {
    assert!(spacing > 0.0, "spacing must be positive");
    if n_followers == 0 || history.is_empty() {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(n_followers);
    let mut idx = history.len() - 1;
    // Arc length from the newest pose back to `history[idx]`.
    let mut walked = 0.0;
    for j in 0..n_followers {
        let want = (j + 1) as f64 * spacing;
        loop {
            if idx == 0 {
                out.push(history[0]);
                break;
            }
            let seg = history[idx].distance(&history[idx - 1]);
            if walked + seg >= want {
                let (a, b) = (&history[idx], &history[idx - 1]);
                let t = if seg > 0.0 { (want - walked) / seg } else { 0.0 };
                let heading = (a.y - b.y).atan2(a.x - b.x);
                out.push(Pose::new(a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t, heading));
                break;
            }
            walked += seg;
            idx -= 1;
        }
    }
    out
}
