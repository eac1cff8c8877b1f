//! Shared fixtures for the criterion benches.

use rendezvous_core::gridworld::{GridShape, Pose};
use rendezvous_core::harness::mapgen::{generate_map, MapStyle};
use rendezvous_core::perception::{integrate_scan, simulate_lidar};
use rendezvous_core::{KnownMap, OccupancyGrid};

/// The ring map the acceptance suite runs on.
pub fn ring_map() -> OccupancyGrid {
    generate_map(MapStyle::Ring, 1600.0, 40, 7).expect("ring map generates")
}

/// A map as known after scanning from every 25th Free cell: large known
/// areas with plenty of frontiers left.
pub fn partly_explored(grid: &OccupancyGrid) -> KnownMap {
    let mut known = KnownMap::for_grid(grid);
    let res = grid.resolution();
    for cell in grid.free_cells().step_by(2500) {
        let scan = simulate_lidar(grid, &Pose::at_cell(cell, res), 10.0, 360).expect("scan from free cell");
        integrate_scan(&mut known, &scan);
    }
    known
}

/// Free cell nearest the middle of the map.
pub fn center_pose(grid: &OccupancyGrid) -> Pose {
    let cell = grid.free_space_center().expect("map has free space");
    Pose::at_cell(cell, grid.resolution())
}

/// Number of cells in the map, for throughput reporting.
pub fn cell_count(grid: &OccupancyGrid) -> u64 {
    grid.len() as u64
}
