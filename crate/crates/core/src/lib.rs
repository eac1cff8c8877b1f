//! Deterministic multi-robot simulator for rendezvous through frontier-based
//! exploration.
//!
//! Robots start at unknown, mutually out-of-range locations on an indoor map
//! and explore it with a frontier-based strategy. With the decay-augmented
//! strategy ([`Strategy::Fbr`]) each team keeps an exploration trace whose old
//! poses are forgotten over time; the forgotten regions become *virtual
//! frontiers* that pull robots back over ground they already covered, which
//! raises the odds of accidental meetings. The baseline ([`Strategy::Fbe`])
//! explores real frontiers only.
//!
//! Modules, bottom-up:
//!
//! - [`gridworld`]: ground-truth grid, line of sight, raycasting, path planning
//! - [`perception`]: lidar simulation and tri-state map building and merging
//! - [`frontier`]: frontier extraction, scoring and selection
//! - [`decay`]: exploration traces, information decay, virtual frontiers
//! - [`team`]: communication graph, clusters, leader election, formation
//! - [`sim`]: the closed-loop engine and per-run metrics
//! - [`harness`]: map generation, batch experiments and CSV output

pub mod decay;
pub mod frontier;
pub mod gridworld;
pub mod harness;
pub mod perception;
pub mod sim;
pub mod team;

pub use decay::{DecayEvent, ExplorationTrace, TracePose};
pub use frontier::{Frontier, FrontierId, FrontierKind, FrontierSet};
pub use gridworld::{Cell, GridError, GridPath, GridShape, MapParseError, OccupancyGrid, Pose, Terrain};
pub use perception::{CellState, KnownMap, LidarScan};
pub use sim::{RunResult, SimConfig, SimError, Strategy, TerminatedBy};
pub use team::{Cluster, ClusterSet, CommGraph, RobotId};
