//! Brute-force reference implementations and random fixtures shared by the
//! integration tests and the acceptance suite. Every oracle works from the
//! textbook definition, independently of the library code it checks.

#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rendezvous_core::decay::DecayEvent;
use rendezvous_core::gridworld::GridShape;
use rendezvous_core::{Cell, CellState, KnownMap, OccupancyGrid, Pose, RobotId, Terrain};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------- fixtures

/// Random tri-state map: a blob of known space grown from random seeds,
/// obstacles sprinkled inside it.
pub fn random_known_map(rng: &mut ChaCha8Rng, max_side: usize) -> KnownMap {
    let w = rng.gen_range(1..=max_side);
    let h = rng.gen_range(1..=max_side);
    let mut k = KnownMap::unknown(w, h, 0.1);
    let p_known: f64 = rng.gen_range(0.2..0.9);
    let p_obstacle: f64 = rng.gen_range(0.0..0.4);
    for y in 0..h {
        for x in 0..w {
            if rng.gen_bool(p_known) {
                let s = if rng.gen_bool(p_obstacle) { CellState::Obstacle } else { CellState::Free };
                k.set(Cell::new(x, y), s);
            }
        }
    }
    k
}

/// Fully known random grid for path tests.
pub fn random_terrain(rng: &mut ChaCha8Rng, max_side: usize) -> (OccupancyGrid, KnownMap) {
    let w = rng.gen_range(2..=max_side);
    let h = rng.gen_range(2..=max_side);
    let p: f64 = rng.gen_range(0.0..0.45);
    let cells: Vec<Terrain> =
        (0..w * h).map(|_| if rng.gen_bool(p) { Terrain::Obstacle } else { Terrain::Free }).collect();
    let grid = OccupancyGrid::new(w, h, 0.1, cells).expect("valid dims");
    let mut known = KnownMap::for_grid(&grid);
    for i in 0..grid.len() {
        let c = grid.cell_at(i);
        known.set(c, if grid.is_free(c) { CellState::Free } else { CellState::Obstacle });
    }
    (grid, known)
}

/// Random undirected graph on `n` nodes as a boolean adjacency matrix.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<bool>> {
    let p: f64 = rng.gen_range(0.0..0.35);
    let mut adj = vec![vec![false; n]; n];
    for a in 0..n {
        for b in a + 1..n {
            if rng.gen_bool(p) {
                adj[a][b] = true;
                adj[b][a] = true;
            }
        }
    }
    adj
}

// ---------------------------------------------------------------- frontiers

fn neighbors8_raw(w: usize, h: usize, c: Cell) -> Vec<Cell> {
    let mut out = Vec::new();
    for dy in -1i64..=1 {
        for dx in -1i64..=1 {
            if dx == 0 && dy == 0 {
                continue;
            }
            let (x, y) = (c.x as i64 + dx, c.y as i64 + dy);
            if x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h {
                out.push(Cell::new(x as usize, y as usize));
            }
        }
    }
    out
}

/// Groups cells into 8-connected components by repeated pairwise merging.
pub fn brute_components8(cells: &[Cell]) -> BTreeSet<BTreeSet<Cell>> {
    let mut groups: Vec<BTreeSet<Cell>> = cells.iter().map(|&c| BTreeSet::from([c])).collect();
    loop {
        let mut merged = false;
        'outer: for i in 0..groups.len() {
            for j in i + 1..groups.len() {
                let touch = groups[i].iter().any(|a| groups[j].iter().any(|b| a != b && a.is_8_adjacent(*b)));
                if touch {
                    let g = groups.swap_remove(j);
                    groups[i].extend(g);
                    merged = true;
                    break 'outer;
                }
            }
        }
        if !merged {
            break;
        }
    }
    groups.into_iter().collect()
}

/// Frontier components straight from the definition: Free cells with an
/// Unknown 8-neighbor, 8-connected, at least `min_cells` large.
pub fn brute_frontiers(known: &KnownMap, min_cells: usize) -> BTreeSet<BTreeSet<Cell>> {
    let (w, h) = (known.width(), known.height());
    let mut cells = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let c = Cell::new(x, y);
            if known.get(c) == CellState::Free
                && neighbors8_raw(w, h, c).into_iter().any(|n| known.get(n) == CellState::Unknown)
            {
                cells.push(c);
            }
        }
    }
    brute_components8(&cells).into_iter().filter(|g| g.len() >= min_cells).collect()
}

// ---------------------------------------------------------------- graphs

/// Connected components by depth-first search over an adjacency matrix.
pub fn dfs_components(adj: &[Vec<bool>]) -> BTreeSet<BTreeSet<usize>> {
    let n = adj.len();
    let mut seen = vec![false; n];
    let mut out = BTreeSet::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        let mut comp = BTreeSet::new();
        let mut stack = vec![s];
        seen[s] = true;
        while let Some(a) = stack.pop() {
            comp.insert(a);
            for b in 0..n {
                if adj[a][b] && !seen[b] {
                    seen[b] = true;
                    stack.push(b);
                }
            }
        }
        out.insert(comp);
    }
    out
}

pub fn to_robot_sets(sets: &BTreeSet<BTreeSet<usize>>) -> BTreeSet<BTreeSet<RobotId>> {
    sets.iter().map(|s| s.iter().map(|&i| RobotId(i)).collect()).collect()
}

// ---------------------------------------------------------------- paths

/// Shortest 8-connected path length in cells by Bellman-Ford relaxation.
/// Diagonal steps require both orthogonal cells they sweep past to be Free.
pub fn ucs_length(known: &KnownMap, from: Cell, to: Cell) -> Option<f64> {
    let (w, h) = (known.width(), known.height());
    if !known.is_free(from) || !known.is_free(to) {
        return None;
    }
    let free = |x: i64, y: i64| x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h && known.is_free(Cell::new(x as usize, y as usize));
    let mut dist = vec![f64::INFINITY; w * h];
    dist[from.y * w + from.x] = 0.0;
    let mut changed = true;
    while changed {
        changed = false;
        for y in 0..h as i64 {
            for x in 0..w as i64 {
                let d = dist[y as usize * w + x as usize];
                if !d.is_finite() {
                    continue;
                }
                for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        if (dx, dy) == (0, 0) || !free(x + dx, y + dy) {
                            continue;
                        }
                        let diagonal = dx != 0 && dy != 0;
                        if diagonal && !(free(x + dx, y) && free(x, y + dy)) {
                            continue;
                        }
                        let step = if diagonal { std::f64::consts::SQRT_2 } else { 1.0 };
                        let ni = (y + dy) as usize * w + (x + dx) as usize;
                        if d + step < dist[ni] - 1e-12 {
                            dist[ni] = d + step;
                            changed = true;
                        }
                    }
                }
            }
        }
    }
    let d = dist[to.y * w + to.x];
    d.is_finite().then_some(d)
}

/// Checks a waypoint list is a legal move sequence between its endpoints.
pub fn path_is_legal(known: &KnownMap, waypoints: &[Cell]) -> bool {
    waypoints.iter().all(|&c| known.is_free(c))
        && waypoints.windows(2).all(|p| {
            let (a, b) = (p[0], p[1]);
            if !a.is_8_adjacent(b) {
                return false;
            }
            if a.x != b.x && a.y != b.y {
                known.is_free(Cell::new(b.x, a.y)) && known.is_free(Cell::new(a.x, b.y))
            } else {
                true
            }
        })
}

// ---------------------------------------------------------------- geometry

/// Whether the closed segment between the centers of `a` and `b` meets the
/// closed square of cell `c`. Exact, in doubled integer coordinates.
pub fn segment_touches_cell(a: Cell, b: Cell, c: Cell) -> bool {
    let (ax, ay) = (2 * a.x as i64 + 1, 2 * a.y as i64 + 1);
    let (bx, by) = (2 * b.x as i64 + 1, 2 * b.y as i64 + 1);
    let (x0, y0, x1, y1) = (2 * c.x as i64, 2 * c.y as i64, 2 * c.x as i64 + 2, 2 * c.y as i64 + 2);
    if ax.max(bx) < x0 || ax.min(bx) > x1 || ay.max(by) < y0 || ay.min(by) > y1 {
        return false;
    }
    let side = |px: i64, py: i64| ((bx - ax) * (py - ay) - (by - ay) * (px - ax)).signum();
    let s = [side(x0, y0), side(x1, y0), side(x0, y1), side(x1, y1)];
    !(s.iter().all(|&v| v > 0) || s.iter().all(|&v| v < 0))
}

/// Every cell whose closed square the center-to-center segment touches.
pub fn segment_cells(a: Cell, b: Cell) -> BTreeSet<Cell> {
    let mut out = BTreeSet::new();
    for y in a.y.min(b.y).saturating_sub(1)..=a.y.max(b.y) + 1 {
        for x in a.x.min(b.x).saturating_sub(1)..=a.x.max(b.x) + 1 {
            let c = Cell::new(x, y);
            if segment_touches_cell(a, b, c) {
                out.insert(c);
            }
        }
    }
    out
}

pub fn los_oracle(grid: &OccupancyGrid, a: Cell, b: Cell) -> bool {
    segment_cells(a, b).into_iter().all(|c| !grid.contains(c) || grid.is_free(c))
}

/// Distance to the first obstacle by marching in tiny steps. Returns the
/// range within `step` of the true boundary crossing. Leaving the grid
/// counts as seeing nothing.
pub fn march_ray(grid: &OccupancyGrid, origin: &Pose, angle: f64, max_range: f64, step: f64) -> (f64, bool) {
    let (dx, dy) = (angle.cos(), angle.sin());
    let mut s = 0.0;
    while s <= max_range {
        let p = Pose::at(origin.x + dx * s, origin.y + dy * s);
        match grid.cell_of(&p) {
            Some(c) if grid.is_free(c) => {}
            Some(_) => return (s, true),
            None => return (max_range, false),
        }
        s += step;
    }
    (max_range, false)
}

// ---------------------------------------------------------------- decay

/// Footprint by testing each cell near each pose for center distance.
pub fn disk_oracle<S: GridShape>(shape: &S, radius: f64, poses: &[Pose]) -> BTreeSet<Cell> {
    let res = shape.resolution();
    let reach = (radius / res).ceil() as i64 + 2;
    let mut out = BTreeSet::new();
    for p in poses {
        let (px, py) = ((p.x / res) as i64, (p.y / res) as i64);
        for y in (py - reach).max(0)..=(py + reach).min(shape.height() as i64 - 1) {
            for x in (px - reach).max(0)..=(px + reach).min(shape.width() as i64 - 1) {
                let (cx, cy) = ((x as f64 + 0.5) * res, (y as f64 + 0.5) * res);
                if (cx - p.x).powi(2) + (cy - p.y).powi(2) <= radius * radius {
                    out.insert(Cell::new(x as usize, y as usize));
                }
            }
        }
    }
    out
}

/// Checks one decay event against footprints recomputed from scratch:
/// vanished region = before \ after; every virtual frontier cell is a
/// vanished Free cell with a neighbor outside the region; and the frontier
/// components are exactly the 8-connected pieces of that contour.
pub fn check_decay_event<S: GridShape>(
    shape: &S,
    radius: f64,
    known: &KnownMap,
    before: &[Pose],
    after: &[Pose],
    event: &DecayEvent,
) -> Result<(), String> {
    let fb = disk_oracle(shape, radius, before);
    let fa = disk_oracle(shape, radius, after);
    let expected: BTreeSet<Cell> = fb.difference(&fa).copied().collect();
    let got: BTreeSet<Cell> = event.vanished_region.iter().copied().collect();
    if got != expected {
        return Err(format!("vanished region {} cells, oracle {} cells", got.len(), expected.len()));
    }
    let contour: Vec<Cell> = expected
        .iter()
        .copied()
        .filter(|&c| {
            known.get(c) == CellState::Free
                && neighbors8_raw(shape.width(), shape.height(), c).iter().any(|n| !expected.contains(n))
        })
        .collect();
    let want = brute_components8(&contour);
    let have: BTreeSet<BTreeSet<Cell>> =
        event.new_virtual_frontiers.iter().map(|f| f.cells.iter().copied().collect()).collect();
    if want != have {
        return Err(format!("{} virtual frontiers, oracle {}", have.len(), want.len()));
    }
    Ok(())
}

// ---------------------------------------------------------------- cases

use rendezvous_core::frontier::{extract_frontiers, FrontierIds};
use rendezvous_core::gridworld::plan_path;
use rendezvous_core::harness::mapgen::{generate_map, MapStyle};
use rendezvous_core::sim::Simulation;
use rendezvous_core::team::update_partition;
use rendezvous_core::{SimConfig, Strategy};

/// Random map number `seed`: extracted frontiers equal the brute-force ones.
pub fn frontier_case(seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let known = random_known_map(&mut r, 50);
    let min_cells = r.gen_range(1..=4);
    let got: BTreeSet<BTreeSet<Cell>> = extract_frontiers(&known, min_cells, &mut FrontierIds::default())
        .into_iter()
        .map(|f| f.cells.into_iter().collect())
        .collect();
    let want = brute_frontiers(&known, min_cells);
    if got == want {
        Ok(())
    } else {
        Err(format!("seed {seed}: {} components, oracle {}", got.len(), want.len()))
    }
}

/// Random graph number `seed`: connected components and one partition
/// update agree with depth-first search.
pub fn graph_case(seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let n = r.gen_range(1..=12);
    let adj = random_graph(&mut r, n);
    let edges: Vec<(RobotId, RobotId)> = (0..n)
        .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
        .filter(|&(a, b)| adj[a][b])
        .map(|(a, b)| (RobotId(a), RobotId(b)))
        .collect();
    let graph = rendezvous_core::CommGraph::from_edges(n, edges);
    let all: BTreeSet<RobotId> = (0..n).map(RobotId).collect();
    let got: BTreeSet<BTreeSet<RobotId>> = graph.components_within(&all).into_iter().collect();
    let want = to_robot_sets(&dfs_components(&adj));
    if got != want {
        return Err(format!("seed {seed}: components differ"));
    }
    if graph.is_connected() != (want.len() == 1) {
        return Err(format!("seed {seed}: is_connected disagrees"));
    }

    // Random current partition; merging means: complete graph inside each
    // cluster plus the communication edges.
    let labels: Vec<usize> = (0..n).map(|_| r.gen_range(0..n.max(1))).collect();
    let mut current: Vec<BTreeSet<RobotId>> = Vec::new();
    for l in 0..n {
        let s: BTreeSet<RobotId> = (0..n).filter(|&i| labels[i] == l).map(RobotId).collect();
        if !s.is_empty() {
            current.push(s);
        }
    }
    let mut joined = adj.clone();
    for a in 0..n {
        for b in 0..n {
            if a != b && labels[a] == labels[b] {
                joined[a][b] = true;
            }
        }
    }
    let update = update_partition(&current, &graph, &BTreeSet::new());
    let got: BTreeSet<BTreeSet<RobotId>> = update.partition.into_iter().collect();
    if got != to_robot_sets(&dfs_components(&joined)) {
        return Err(format!("seed {seed}: partition update differs"));
    }
    Ok(())
}

/// Random fully known grid number `seed`: planned paths are legal and as
/// short as relaxation finds, and exist exactly when the oracle's do.
pub fn path_case(seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let (grid, known) = random_terrain(&mut r, 30);
    let free: Vec<Cell> = grid.free_cells().collect();
    if free.len() < 2 {
        return Ok(());
    }
    for _ in 0..3 {
        let a = free[r.gen_range(0..free.len())];
        let b = free[r.gen_range(0..free.len())];
        let want = ucs_length(&known, a, b);
        match (plan_path(&known, a, b), want) {
            (None, None) => {}
            (Some(p), Some(w)) => {
                if p.waypoints.first() != Some(&a) || p.waypoints.last() != Some(&b) {
                    return Err(format!("seed {seed}: path endpoints wrong"));
                }
                if !path_is_legal(&known, &p.waypoints) {
                    return Err(format!("seed {seed}: illegal move in path"));
                }
                if (p.cost.cells() - w).abs() > 1e-9 {
                    return Err(format!("seed {seed}: cost {} vs oracle {w}", p.cost.cells()));
                }
            }
            (p, w) => return Err(format!("seed {seed}: reachability differs ({} vs {:?})", p.is_some(), w)),
        }
    }
    Ok(())
}

/// One single-robot FBR run on a small generated map. Every decay event is
/// checked against footprints rebuilt from the poses, and at the end the
/// active footprint plus everything that vanished must equal the footprint
/// of every pose ever recorded. Returns the number of events checked.
pub fn decay_run_case(seed: u64) -> Result<usize, String> {
    let grid = generate_map(MapStyle::Ring, 400.0, 6, seed).map_err(|e| e.to_string())?;
    let cfg = SimConfig {
        team_size: 1,
        strategy: Strategy::Fbr,
        decay_seconds: 60.0,
        seed,
        ..SimConfig::default()
    };
    let radius = cfg.comm_range;
    let mut sim = Simulation::new(&grid, cfg).map_err(|e| e.to_string())?;
    sim.record_decay_events(true);
    let key = |p: &rendezvous_core::TracePose| (p.source, p.chunk_id, p.timestamp.to_bits());
    let mut active: Vec<rendezvous_core::TracePose> = Vec::new();
    let mut history: Vec<Pose> = Vec::new();
    let mut vanished_union: BTreeSet<Cell> = BTreeSet::new();
    let mut checked = 0;
    for _ in 0..600 {
        sim.step().map_err(|e| e.to_string())?;
        let events = sim.take_decay_events();
        let cluster = sim.clusters().next().expect("one cluster");
        let trace = &cluster.trace;
        let known = &cluster.merged_map;
        let seen: BTreeSet<_> = active.iter().map(key).collect();
        let fresh: Vec<_> = trace.poses().iter().filter(|p| !seen.contains(&key(p))).copied().collect();
        history.extend(fresh.iter().map(|p| p.pose));
        let mut before = active.clone();
        before.extend(fresh);
        for (_, pristine, ev) in events {
            if !pristine {
                return Err(format!("seed {seed}: single robot trace marked merged"));
            }
            let gone: BTreeSet<_> = ev.removed_poses.iter().map(key).collect();
            let after: Vec<_> = before.iter().filter(|p| !gone.contains(&key(p))).copied().collect();
            if after.len() + gone.len() != before.len() {
                return Err(format!("seed {seed}: removed poses were not active"));
            }
            let bp: Vec<Pose> = before.iter().map(|p| p.pose).collect();
            let ap: Vec<Pose> = after.iter().map(|p| p.pose).collect();
            check_decay_event(known, radius, known, &bp, &ap, &ev).map_err(|e| format!("seed {seed}: {e}"))?;
            vanished_union.extend(ev.vanished_region.iter().copied());
            before = after;
            checked += 1;
        }
        let now: BTreeSet<_> = trace.poses().iter().map(key).collect();
        if now != before.iter().map(key).collect() {
            return Err(format!("seed {seed}: active poses drifted from the event log"));
        }
        active = before;
    }
    let trace = &sim.clusters().next().expect("one cluster").trace;
    let mut lhs: BTreeSet<Cell> = trace.footprint_cells().into_iter().collect();
    lhs.extend(vanished_union);
    if lhs != disk_oracle(&grid, radius, &history) {
        return Err(format!("seed {seed}: footprint not conserved"));
    }
    if checked == 0 {
        return Err(format!("seed {seed}: no decay happened"));
    }
    Ok(checked)
}
