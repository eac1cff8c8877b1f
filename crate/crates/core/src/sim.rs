//! Closed-loop simulation engine.
//!
//! Each tick, every cluster (in ascending leader id) senses, records its
//! trace, decays it, picks a frontier when idle, and moves; then the
//! communication graph is rebuilt and clusters that touch merge. A run ends
//! when all robots form one cluster or the time limit is reached.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::decay::{decay_all, drop_recovered, DecayEvent, ExplorationTrace};
use crate::frontier::{extract_frontiers, is_frontier_cell, select_frontier, FrontierIds, FrontierKind};
use crate::gridworld::{cells_see_each_other, line_of_sight, plan_path, Cell, GridShape, OccupancyGrid, Pose};
use crate::perception::{integrate_scan, simulate_lidar, simulate_lidar_noisy, CellState, KnownMap};
use crate::team::{build_comm_graph, formation_targets, on_merge, update_partition, Cluster, RobotId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    /// Plain frontier-based exploration over real frontiers.
    Fbe,
    /// Frontier-based rendezvous: real plus virtual frontiers from decay.
    Fbr,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Fbe => "fbe",
            Strategy::Fbr => "fbr",
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "fbe" => Ok(Strategy::Fbe),
            "fbr" => Ok(Strategy::Fbr),
            other => Err(format!("unknown strategy {other:?} (expected fbe or fbr)")),
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub team_size: usize,
    pub strategy: Strategy,
    /// Communication range `d`, meters. Also the trace footprint radius.
    pub comm_range: f64,
    /// Meters per second.
    pub speed: f64,
    pub lidar_range: f64,
    pub n_beams: usize,
    /// Weight of frontier length against distance.
    pub alpha: f64,
    /// Decay horizon `T`, seconds.
    pub decay_seconds: f64,
    pub pose_interval: f64,
    pub chunk_size: usize,
    pub min_frontier_cells: usize,
    pub tick: f64,
    pub seed: u64,
    pub time_limit: f64,
    /// Follower spacing along the leader path; `None` means `comm_range / 2`.
    pub follower_spacing: Option<f64>,
    /// Standard deviation of Gaussian range noise. Off by default.
    pub range_noise: Option<f64>,
    /// `(robot, time)` pairs: the robot stops moving from that time on.
    pub failures: Vec<(RobotId, f64)>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            team_size: 3,
            strategy: Strategy::Fbr,
            comm_range: 2.7,
            speed: 0.3,
            lidar_range: 10.0,
            n_beams: 360,
            alpha: 0.25,
            decay_seconds: 300.0,
            pose_interval: 2.0,
            chunk_size: 9,
            min_frontier_cells: 3,
            tick: 0.5,
            seed: 0,
            time_limit: 7200.0,
            follower_spacing: None,
            range_noise: None,
            failures: Vec::new(),
        }
    }
}

impl SimConfig {
    pub fn spacing(&self) -> f64 {
        self.follower_spacing.unwrap_or(self.comm_range / 2.0)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |what: &str| Err(SimError::Config(what.to_string()));
        if self.team_size < 1 {
            return bad("team size must be at least 1");
        }
        for (name, v) in [
            ("comm_range", self.comm_range),
            ("speed", self.speed),
            ("lidar_range", self.lidar_range),
            ("decay_seconds", self.decay_seconds),
            ("pose_interval", self.pose_interval),
            ("tick", self.tick),
            ("time_limit", self.time_limit),
            ("follower spacing", self.spacing()),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(SimError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.tick > self.pose_interval {
            return bad("tick must not exceed pose_interval");
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(SimError::Config(format!("alpha must lie in [0, 1], got {}", self.alpha)));
        }
        if self.n_beams < 8 {
            return bad("n_beams must be at least 8");
        }
        if self.chunk_size < 1 || self.min_frontier_cells < 1 {
            return bad("chunk_size and min_frontier_cells must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cannot place {wanted} robots: {reason}")]
    Spawn { wanted: usize, reason: String },
    #[error("simulation fault at t={time:.1}s: {robot} at ({x:.2}, {y:.2}) is not in free space")]
    Fault { robot: RobotId, x: f64, y: f64, time: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Leader,
    Follower,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Mode {
    Idle,
    Navigating { kind: FrontierKind, target: crate::frontier::FrontierId, goal: Cell, path: Vec<Cell>, next: usize },
    Fallback { path: Vec<Cell>, next: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobotState {
    pub id: RobotId,
    pub pose: Pose,
    pub role: Role,
    pub mode: Mode,
    pub odometer: f64,
    pub failed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TerminatedBy {
    Rendezvous,
    TimeLimit,
    Fault,
}

impl TerminatedBy {
    pub fn as_str(self) -> &'static str {
        match self {
            TerminatedBy::Rendezvous => "rendezvous",
            TerminatedBy::TimeLimit => "time_limit",
            TerminatedBy::Fault => "fault",
        }
    }
}

/// Metrics of one run. Times are on the run clock, which excludes seconds
/// spent travelling to the fallback location.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub success: bool,
    pub t_rendezvous: Option<f64>,
    /// `t_partial[i-1]`: first time the largest cluster had at least `i` robots.
    pub t_partial: Vec<Option<f64>>,
    /// `(time, max cluster size)` at every change, starting at `(0, 1)`.
    pub max_cluster_series: Vec<(f64, usize)>,
    pub area_union_m2: f64,
    pub area_intersection_m2: f64,
    pub odometers: Vec<f64>,
    pub fallback_time_excluded: f64,
    pub terminated_by: TerminatedBy,
    /// Wall time of the simulation when it stopped, fallback included.
    pub sim_time: f64,
    pub final_poses: Vec<Pose>,
    pub fault: Option<String>,
}

impl RunResult {
    pub fn total_distance(&self) -> f64 {
        self.odometers.iter().sum()
    }
}

/// Draws `team_size` distinct Free cells such that no two robots start able
/// to talk to each other.
pub fn spawn(grid: &OccupancyGrid, config: &SimConfig) -> Result<Vec<Pose>, SimError> {
    let m = config.team_size;
    let free: Vec<Cell> = grid.free_cells().collect();
    if free.len() < m {
        return Err(SimError::Spawn { wanted: m, reason: format!("only {} free cells", free.len()) });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let res = grid.resolution();
    let mut chosen: Vec<Cell> = Vec::with_capacity(m);
    let max_attempts = 10 * m * m;
    let mut attempts = 0;
    while chosen.len() < m {
        if attempts == max_attempts {
            return Err(SimError::Spawn {
                wanted: m,
                reason: format!("no separated placement found in {max_attempts} attempts"),
            });
        }
        attempts += 1;
        let c = free[rng.gen_range(0..free.len())];
        let clash = chosen.iter().any(|&o| {
            o == c || (o.distance(c) * res <= config.comm_range && cells_see_each_other(grid, o, c))
        });
        if !clash {
            chosen.push(c);
        }
    }
    Ok(chosen.into_iter().map(|c| Pose::at_cell(c, res)).collect())
}

#[derive(Debug, Clone)]
struct TeamState {
    cluster: Cluster,
    /// Leader positions, oldest first, trimmed to what the formation needs.
    history: Vec<Pose>,
    next_pose_at: f64,
    /// Map or frontier set changed since the last selection attempt.
    dirty: bool,
    /// Real frontiers in `cluster.frontiers.real` match the current map.
    real_fresh: bool,
    /// FBE only: no frontiers left and nothing more to do.
    last_scan: Option<Pose>,
    /// Cluster has never merged; its trace is owned by one robot.
    pristine: bool,
}

/// One run in progress.
pub struct Simulation<'g> {
    grid: &'g OccupancyGrid,
    config: SimConfig,
    robots: Vec<RobotState>,
    teams: Vec<TeamState>,
    ids: FrontierIds,
    rng: ChaCha8Rng,
    fallback_cell: Option<Cell>,
    time: f64,
    ticks: u64,
    fallback_excluded: f64,
    max_series: Vec<(f64, usize)>,
    t_partial: Vec<Option<f64>>,
    decay_log: Vec<(RobotId, bool, DecayEvent)>,
    keep_decay_log: bool,
}

impl<'g> Simulation<'g> {
    pub fn new(grid: &'g OccupancyGrid, config: SimConfig) -> Result<Self, SimError> {
        config.validate()?;
        let starts = spawn(grid, &config)?;
        let m = config.team_size;
        let robots: Vec<RobotState> = starts
            .iter()
            .enumerate()
            .map(|(i, &pose)| RobotState {
                id: RobotId(i),
                pose,
                role: Role::Leader,
                mode: Mode::Idle,
                odometer: 0.0,
                failed: false,
            })
            .collect();
        let teams = robots
            .iter()
            .map(|r| {
                let map = KnownMap::for_grid(grid);
                let trace = ExplorationTrace::new(r.id, grid, config.comm_range, config.chunk_size);
                TeamState {
                    cluster: Cluster::singleton(r.id, map, trace),
                    history: vec![r.pose],
                    next_pose_at: 0.0,
                    dirty: true,
                    real_fresh: false,
                    last_scan: None,
                    pristine: true,
                }
            })
            .collect();
        let mut t_partial = vec![None; m];
        t_partial[0] = Some(0.0);
        let rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed_0f5e_4501);
        Ok(Self {
            grid,
            fallback_cell: grid.free_space_center(),
            config,
            robots,
            teams,
            ids: FrontierIds::default(),
            rng,
            time: 0.0,
            ticks: 0,
            fallback_excluded: 0.0,
            max_series: vec![(0.0, 1)],
            t_partial,
            decay_log: Vec::new(),
            keep_decay_log: false,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn robots(&self) -> &[RobotState] {
        &self.robots
    }

    pub fn clusters(&self) -> impl Iterator<Item = &Cluster> {
        self.teams.iter().map(|t| &t.cluster)
    }

    pub fn poses(&self) -> Vec<Pose> {
        self.robots.iter().map(|r| r.pose).collect()
    }

    /// Simulated seconds elapsed.
    pub fn time(&self) -> f64 {
        self.time
    }

    /// Run clock: elapsed seconds minus fallback travel.
    pub fn run_clock(&self) -> f64 {
        self.time - self.fallback_excluded
    }

    pub fn max_cluster_size(&self) -> usize {
        self.teams.iter().map(|t| t.cluster.members.len()).max().unwrap_or(0)
    }

    /// Keeps every decay event so callers can audit traces; see
    /// [`Simulation::take_decay_events`].
    pub fn record_decay_events(&mut self, on: bool) {
        self.keep_decay_log = on;
    }

    /// Drains recorded events as `(leader, cluster_never_merged, event)`.
    pub fn take_decay_events(&mut self) -> Vec<(RobotId, bool, DecayEvent)> {
        std::mem::take(&mut self.decay_log)
    }

    /// Advances the world by one tick.
    pub fn step(&mut self) -> Result<(), SimError> {
        let now = self.time;
        let dt = self.config.tick;
        let mut in_fallback = false;
        for k in 0..self.teams.len() {
            self.sense_and_decay(k, now)?;
            self.choose_goal(k)?;
            in_fallback |= self.move_team(k, dt);
        }
        self.ticks += 1;
        self.time = self.ticks as f64 * dt;
        if in_fallback {
            self.fallback_excluded += dt;
        }
        self.check_positions()?;
        self.update_clusters();
        self.sample_metrics();
        Ok(())
    }

    fn sense_and_decay(&mut self, k: usize, now: f64) -> Result<(), SimError> {
        let cfg = &self.config;
        let team = &mut self.teams[k];
        let leader = &self.robots[team.cluster.leader.0];
        let pose = leader.pose;
        if team.last_scan != Some(pose) || cfg.range_noise.is_some() {
            let scan = match cfg.range_noise {
                None => simulate_lidar(self.grid, &pose, cfg.lidar_range, cfg.n_beams),
                Some(sigma) => simulate_lidar_noisy(self.grid, &pose, cfg.lidar_range, cfg.n_beams, sigma, &mut self.rng),
            }
            .map_err(|_| SimError::Fault { robot: leader.id, x: pose.x, y: pose.y, time: now })?;
            if integrate_scan(&mut team.cluster.merged_map, &scan) > 0 {
                team.dirty = true;
                team.real_fresh = false;
            }
            team.last_scan = Some(pose);
        }
        if cfg.strategy == Strategy::Fbe {
            return Ok(());
        }
        if now + 1e-9 >= team.next_pose_at {
            team.cluster.trace.append_pose(pose, now);
            team.next_pose_at += cfg.pose_interval;
        }
        let events = decay_all(&mut team.cluster.trace, &team.cluster.merged_map, now, cfg.decay_seconds, &mut self.ids);
        for ev in events {
            if !ev.new_virtual_frontiers.is_empty() {
                team.dirty = true;
            }
            team.cluster.frontiers.virtual_.extend(ev.new_virtual_frontiers.iter().cloned());
            if self.keep_decay_log {
                self.decay_log.push((team.cluster.leader, team.pristine, ev));
            }
        }
        let before = team.cluster.frontiers.virtual_.len();
        drop_recovered(&team.cluster.trace, &mut team.cluster.frontiers.virtual_);
        if team.cluster.frontiers.virtual_.len() != before {
            team.dirty = true;
        }
        Ok(())
    }

    /// Drops an invalidated goal and, when the leader is idle, selects a new
    /// frontier (or falls back to the map center under FBE).
    fn choose_goal(&mut self, k: usize) -> Result<(), SimError> {
        let team = &mut self.teams[k];
        let leader_id = team.cluster.leader;
        if self.robots[leader_id.0].failed {
            return Ok(());
        }
        let valid = match &self.robots[leader_id.0].mode {
            Mode::Idle => false,
            Mode::Fallback { .. } => true,
            Mode::Navigating { kind: FrontierKind::Real, goal, .. } => is_frontier_cell(&team.cluster.merged_map, *goal),
            Mode::Navigating { kind: FrontierKind::Virtual, target, .. } => {
                team.cluster.frontiers.virtual_.iter().any(|f| f.id == *target)
            }
        };
        if valid {
            return Ok(());
        }
        self.robots[leader_id.0].mode = Mode::Idle;
        if !team.dirty {
            return Ok(());
        }
        team.dirty = false;
        if !team.real_fresh {
            team.cluster.frontiers.real =
                extract_frontiers(&team.cluster.merged_map, self.config.min_frontier_cells, &mut self.ids);
            team.real_fresh = true;
        }
        let map = &team.cluster.merged_map;
        let here = map.cell_of(&self.robots[leader_id.0].pose).expect("robot inside grid");
        let choice = select_frontier(&team.cluster.frontiers, here, map, self.config.alpha)
            .map_err(|e| SimError::Config(e.to_string()))?
            .map(|s| (s.frontier.kind, s.frontier.id, s.frontier.target));
        if let Some((kind, target, goal)) = choice {
            if let Some(path) = plan_path(map, here, goal) {
                self.robots[leader_id.0].mode = Mode::Navigating { kind, target, goal, path: path.waypoints, next: 0 };
                return Ok(());
            }
        }
        if self.config.strategy == Strategy::Fbe {
            // Already at the fallback cell, or cut off from it: wait in place.
            let fallback = self.fallback_cell.filter(|&c| c != here).and_then(|c| plan_path(map, here, c));
            if let Some(path) = fallback {
                self.robots[leader_id.0].mode = Mode::Fallback { path: path.waypoints, next: 0 };
            }
        }
        Ok(())
    }

    /// Moves the leader along its path and places followers. Returns whether
    /// the leader spent the tick in fallback travel.
    fn move_team(&mut self, k: usize, dt: f64) -> bool {
        let res = self.grid.resolution();
        let budget = self.config.speed * dt;
        let team = &mut self.teams[k];
        let leader_id = team.cluster.leader;
        let leader = &mut self.robots[leader_id.0];
        if leader.failed {
            return false;
        }
        let was_fallback = matches!(leader.mode, Mode::Fallback { .. });
        let (path, next) = match &mut leader.mode {
            Mode::Idle => return false,
            Mode::Navigating { path, next, .. } | Mode::Fallback { path, next } => (path, next),
        };
        let mut remaining = budget;
        let mut pos = leader.pose;
        while remaining > 0.0 && *next < path.len() {
            let goal = Pose::at_cell(path[*next], res);
            let dist = pos.distance(&goal);
            if dist > 0.0 {
                pos.heading = (goal.y - pos.y).atan2(goal.x - pos.x).rem_euclid(std::f64::consts::TAU);
            }
            if dist <= remaining {
                remaining -= dist;
                pos.x = goal.x;
                pos.y = goal.y;
                *next += 1;
                if remaining > 0.0 {
                    team.history.push(pos);
                }
            } else {
                pos.x += (goal.x - pos.x) / dist * remaining;
                pos.y += (goal.y - pos.y) / dist * remaining;
                remaining = 0.0;
            }
        }
        let arrived = *next >= path.len();
        leader.odometer += budget - remaining;
        leader.pose = pos;
        if team.history.last() != Some(&pos) {
            team.history.push(pos);
        }
        if arrived {
            if let Mode::Navigating { kind: FrontierKind::Virtual, target, .. } = leader.mode {
                team.cluster.frontiers.virtual_.retain(|f| f.id != target);
            }
            leader.mode = Mode::Idle;
            team.dirty = true;
        }

        let followers: Vec<RobotId> = team.cluster.followers().filter(|r| !self.robots[r.0].failed).collect();
        let spacing = self.config.spacing();
        trim_history(&mut team.history, (followers.len() + 1) as f64 * spacing + 1.0);
        let slots = formation_targets(&team.history, followers.len(), spacing);
        // Each follower must keep a link to the robot ahead of it in the chain.
        // A slot that lost it behind a corner slides forward along the path.
        let (grid, d) = (self.grid, self.config.comm_range);
        let linked = |a: &Pose, b: &Pose| a.distance(b) <= d && line_of_sight(grid, a, b).unwrap_or(false);
        let step = grid.resolution() / 2.0;
        let mut ahead = (pos, 0.0);
        for (j, (r, slot)) in followers.into_iter().zip(slots).enumerate() {
            let nominal = (j + 1) as f64 * spacing;
            let mut placed = (slot, nominal);
            if !linked(&ahead.0, &slot) {
                placed = ahead;
                let mut s = nominal - step;
                while s > ahead.1 {
                    let p = formation_targets(&team.history, 1, s)[0];
                    if linked(&ahead.0, &p) {
                        placed = (p, s);
                        break;
                    }
                    s -= step;
                }
            }
            let robot = &mut self.robots[r.0];
            robot.odometer += robot.pose.distance(&placed.0);
            robot.pose = placed.0;
            ahead = placed;
        }
        was_fallback
    }

    fn check_positions(&self) -> Result<(), SimError> {
        for r in &self.robots {
            if !self.grid.cell_of(&r.pose).is_some_and(|c| self.grid.is_free(c)) {
                return Err(SimError::Fault { robot: r.id, x: r.pose.x, y: r.pose.y, time: self.time });
            }
        }
        Ok(())
    }

    fn update_clusters(&mut self) {
        for &(robot, at) in &self.config.failures {
            if self.time + 1e-9 >= at {
                self.robots[robot.0].failed = true;
            }
        }
        let failed: BTreeSet<RobotId> = self.robots.iter().filter(|r| r.failed).map(|r| r.id).collect();
        let graph = build_comm_graph(&self.poses(), self.grid, self.config.comm_range);
        let current: Vec<BTreeSet<RobotId>> = self.teams.iter().map(|t| t.cluster.members.clone()).collect();
        let update = update_partition(&current, &graph, &failed);
        if update.merges.is_empty() && update.splits.is_empty() {
            return;
        }

        let mut teams: Vec<TeamState> = std::mem::take(&mut self.teams);
        for split in &update.splits {
            let pos = teams.iter().position(|t| t.cluster.members == split.from).expect("split source exists");
            let old = teams.swap_remove(pos);
            for part in &split.parts {
                let leader = *part.iter().next().expect("non-empty part");
                let keeps_trace = part.contains(&old.cluster.leader);
                let mut cluster = old.cluster.clone();
                cluster.members = part.clone();
                cluster.leader = leader;
                if !keeps_trace {
                    cluster.trace = ExplorationTrace::new(leader, self.grid, self.config.comm_range, self.config.chunk_size);
                    cluster.frontiers.virtual_.clear();
                }
                teams.push(TeamState {
                    cluster,
                    history: if keeps_trace { old.history.clone() } else { vec![self.robots[leader.0].pose] },
                    next_pose_at: old.next_pose_at,
                    dirty: true,
                    real_fresh: false,
                    last_scan: None,
                    pristine: false,
                });
            }
        }
        for merge in &update.merges {
            let mut parts = Vec::with_capacity(merge.parts.len());
            let mut histories = Vec::new();
            let mut next_pose_at = f64::INFINITY;
            for members in &merge.parts {
                let pos = teams.iter().position(|t| &t.cluster.members == members).expect("merge part exists");
                let t = teams.swap_remove(pos);
                next_pose_at = next_pose_at.min(t.next_pose_at);
                histories.push((t.cluster.leader, t.history));
                parts.push(t.cluster);
            }
            let cluster = on_merge(parts, self.config.min_frontier_cells, &mut self.ids);
            let history = histories
                .into_iter()
                .find(|(l, _)| *l == cluster.leader)
                .map(|(_, h)| h)
                .unwrap_or_else(|| vec![self.robots[cluster.leader.0].pose]);
            teams.push(TeamState {
                cluster,
                history,
                next_pose_at,
                dirty: true,
                real_fresh: true,
                last_scan: None,
                pristine: false,
            });
        }
        teams.sort_by_key(|t| t.cluster.leader);
        for t in &teams {
            for &r in &t.cluster.members {
                let robot = &mut self.robots[r.0];
                if r == t.cluster.leader {
                    if robot.role == Role::Follower {
                        robot.mode = Mode::Idle;
                    }
                    robot.role = Role::Leader;
                } else {
                    robot.role = Role::Follower;
                    robot.mode = Mode::Idle;
                }
            }
        }
        for merge in &update.merges {
            let t = teams.iter().find(|t| t.cluster.members == merge.members).expect("merged team exists");
            // The merged team replans with the joined map.
            self.robots[t.cluster.leader.0].mode = Mode::Idle;
        }
        self.teams = teams;
    }

    fn sample_metrics(&mut self) {
        let size = self.max_cluster_size();
        let last = self.max_series.last().map_or(0, |s| s.1);
        if size > last {
            let t = self.run_clock();
            self.max_series.push((t, size));
            for slot in self.t_partial.iter_mut().take(size) {
                slot.get_or_insert(t);
            }
        }
    }

    fn result(&self, terminated_by: TerminatedBy, fault: Option<String>) -> RunResult {
        let maps: Vec<&KnownMap> = self.teams.iter().map(|t| &t.cluster.merged_map).collect();
        let n = maps[0].len();
        let (mut union, mut inter) = (0usize, 0usize);
        for i in 0..n {
            let mut any = false;
            let mut all = true;
            for m in &maps {
                let known = m.cells()[i] != CellState::Unknown;
                any |= known;
                all &= known;
            }
            union += any as usize;
            inter += all as usize;
        }
        let cell_area = self.grid.resolution() * self.grid.resolution();
        let success = terminated_by == TerminatedBy::Rendezvous;
        RunResult {
            success,
            t_rendezvous: success.then(|| self.run_clock()),
            t_partial: self.t_partial.clone(),
            max_cluster_series: self.max_series.clone(),
            area_union_m2: union as f64 * cell_area,
            area_intersection_m2: inter as f64 * cell_area,
            odometers: self.robots.iter().map(|r| r.odometer).collect(),
            fallback_time_excluded: self.fallback_excluded,
            terminated_by,
            sim_time: self.time,
            final_poses: self.poses(),
            fault,
        }
    }

    /// Steps until rendezvous, the time limit, or a fault.
    pub fn run_to_end(&mut self) -> RunResult {
        loop {
            if self.max_cluster_size() == self.config.team_size {
                return self.result(TerminatedBy::Rendezvous, None);
            }
            if self.time + 1e-9 >= self.config.time_limit {
                return self.result(TerminatedBy::TimeLimit, None);
            }
            if let Err(e) = self.step() {
                return self.result(TerminatedBy::Fault, Some(e.to_string()));
            }
        }
    }
}

fn trim_history(history: &mut Vec<Pose>, keep_m: f64) {
    let mut acc = 0.0;
    let mut cut = 0;
    for i in (1..history.len()).rev() {
        acc += history[i].distance(&history[i - 1]);
        if acc > keep_m {
            cut = i - 1;
            break;
        }
    }
    if cut > 64 {
        history.drain(..cut);
    }
}

/// Runs one simulation to completion.
pub fn run(grid: &OccupancyGrid, config: &SimConfig) -> Result<RunResult, SimError> {
    let mut sim = Simulation::new(grid, config.clone())?;
    Ok(sim.run_to_end())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridworld::{load_map, Terrain};

    fn room(w: usize, h: usize) -> OccupancyGrid {
        let mut g = OccupancyGrid::filled(w, h, 0.1, Terrain::Free).unwrap();
        g.close_border();
        g
    }

    #[test]
    fn defaults_validate() {
        let c = SimConfig::default();
        c.validate().unwrap();
        assert_eq!(c.spacing(), 1.35);
        assert!(SimConfig { tick: 3.0, ..c.clone() }.validate().is_err());
        assert!(SimConfig { alpha: 1.2, ..c.clone() }.validate().is_err());
        assert!(SimConfig { team_size: 0, ..c }.validate().is_err());
    }

    #[test]
    fn spawn_is_deterministic_and_separated() {
        let g = room(200, 200);
        let cfg = SimConfig { team_size: 5, seed: 11, ..SimConfig::default() };
        let a = spawn(&g, &cfg).unwrap();
        assert_eq!(a, spawn(&g, &cfg).unwrap());
        for i in 0..a.len() {
            for j in i + 1..a.len() {
                assert!(a[i].distance(&a[j]) > cfg.comm_range);
            }
        }
    }

    #[test]
    fn spawn_pigeonhole() {
        let g = load_map("resolution 0.1\n#####\n#...#\n#####\n").unwrap();
        let cfg = SimConfig { team_size: 4, ..SimConfig::default() };
        assert!(matches!(spawn(&g, &cfg), Err(SimError::Spawn { .. })));
    }

    #[test]
    fn single_robot_succeeds_immediately() {
        let g = room(50, 50);
        let r = run(&g, &SimConfig { team_size: 1, ..SimConfig::default() }).unwrap();
        assert!(r.success);
        assert_eq!(r.t_rendezvous, Some(0.0));
        assert_eq!(r.max_cluster_series, vec![(0.0, 1)]);
    }

    #[test]
    fn leader_advances_speed_times_tick() {
        let g = room(100, 30);
        let mut sim = Simulation::new(&g, SimConfig { team_size: 1, ..SimConfig::default() }).unwrap();
        let path: Vec<Cell> = (10..=20).map(|x| Cell::new(x, 15)).collect();
        sim.robots[0].pose = Pose::at_cell(path[0], 0.1);
        sim.robots[0].mode = Mode::Fallback { path, next: 0 };
        let start = sim.robots[0].pose;
        sim.move_team(0, 0.5);
        let moved = sim.robots[0].pose.distance(&start);
        assert!((moved - 0.15).abs() < 1e-9, "moved {moved}");
        assert!((sim.robots[0].odometer - 0.15).abs() < 1e-9);
    }

    #[test]
    fn walled_off_fbr_team_hits_time_limit() {
        let mut g = room(120, 60);
        for y in 0..60 {
            g.set(Cell::new(60, y), Terrain::Obstacle);
        }
        let cfg = SimConfig { team_size: 2, time_limit: 400.0, ..SimConfig::default() };
        let r = run(&g, &cfg).unwrap();
        assert!(!r.success);
        assert_eq!(r.terminated_by, TerminatedBy::TimeLimit);
        let fbe = run(&g, &SimConfig { strategy: Strategy::Fbe, ..cfg }).unwrap();
        assert!(!fbe.success);
    }

    #[test]
    fn fbe_without_unknown_falls_back_to_center() {
        let g = room(80, 80);
        let mut sim =
            Simulation::new(&g, SimConfig { team_size: 1, strategy: Strategy::Fbe, ..SimConfig::default() }).unwrap();
        let start = sim.grid.cell_of(&sim.robots[0].pose).unwrap();
        if start == sim.fallback_cell.unwrap() {
            return;
        }
        for i in 0..g.len() {
            let c = g.cell_at(i);
            let s = if g.is_free(c) { CellState::Free } else { CellState::Obstacle };
            sim.teams[0].cluster.merged_map.set(c, s);
        }
        sim.teams[0].real_fresh = false;
        sim.choose_goal(0).unwrap();
        assert!(matches!(sim.robots[0].mode, Mode::Fallback { .. }));
    }
}
