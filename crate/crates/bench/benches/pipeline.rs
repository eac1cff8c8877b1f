use criterion::{black_box, criterion_group, criterion_main, Criterion, Throughput};
use rendezvous_bench::{cell_count, center_pose, partly_explored, ring_map};
use rendezvous_core::decay::{decay_all, ExplorationTrace};
use rendezvous_core::frontier::{extract_frontiers, select_frontier, FrontierIds, FrontierSet};
use rendezvous_core::gridworld::{plan_path, GridShape, Pose};
use rendezvous_core::perception::{integrate_scan, simulate_lidar};
use rendezvous_core::{sim, CellState, KnownMap, RobotId, SimConfig, Strategy};

fn perception(c: &mut Criterion) {
    let grid = ring_map();
    let pose = center_pose(&grid);
    let mut group = c.benchmark_group("perception");
    group.bench_function("simulate_lidar_360", |b| b.iter(|| simulate_lidar(&grid, black_box(&pose), 10.0, 360)));
    let scan = simulate_lidar(&grid, &pose, 10.0, 360).unwrap();
    group.bench_function("integrate_scan_360", |b| {
        b.iter(|| {
            let mut known = KnownMap::for_grid(&grid);
            integrate_scan(&mut known, black_box(&scan))
        })
    });
    group.finish();
}

fn frontiers(c: &mut Criterion) {
    let grid = ring_map();
    let known = partly_explored(&grid);
    let mut group = c.benchmark_group("frontier");
    group.throughput(Throughput::Elements(cell_count(&grid)));
    group.bench_function("extract", |b| b.iter(|| extract_frontiers(black_box(&known), 3, &mut FrontierIds::default())));
    let fs = FrontierSet { real: extract_frontiers(&known, 3, &mut FrontierIds::default()), virtual_: Vec::new() };
    let here = grid.free_cells().find(|&c| known.is_free(c)).unwrap();
    group.bench_function("select", |b| b.iter(|| select_frontier(&fs, black_box(here), &known, 0.25).unwrap().is_some()));
    group.finish();
}

fn planning(c: &mut Criterion) {
    let grid = ring_map();
    let mut known = KnownMap::for_grid(&grid);
    for i in 0..grid.len() {
        let cell = grid.cell_at(i);
        known.observe(cell, if grid.is_free(cell) { CellState::Free } else { CellState::Obstacle });
    }
    let free: Vec<_> = grid.free_cells().collect();
    let (from, to) = (free[0], free[free.len() - 1]);
    c.bench_function("plan_path/across_ring", |b| b.iter(|| plan_path(&known, black_box(from), black_box(to))));
}

fn decay(c: &mut Criterion) {
    let grid = ring_map();
    let known = partly_explored(&grid);
    let free: Vec<_> = grid.free_cells().step_by(40).take(300).collect();
    c.bench_function("decay/150_poses_then_expire", |b| {
        b.iter(|| {
            let mut trace = ExplorationTrace::new(RobotId(0), &grid, 2.7, 9);
            for (i, &cell) in free.iter().enumerate() {
                trace.append_pose(Pose::at_cell(cell, grid.resolution()), 2.0 * i as f64);
            }
            decay_all(&mut trace, &known, 1e4, 300.0, &mut FrontierIds::default()).len()
        })
    });
}

fn simulation(c: &mut Criterion) {
    let grid = ring_map();
    let mut group = c.benchmark_group("simulation");
    group.sample_size(10);
    for strategy in [Strategy::Fbe, Strategy::Fbr] {
        let config = SimConfig { team_size: 3, strategy, seed: 1, time_limit: 120.0, ..SimConfig::default() };
        group.bench_function(format!("{strategy}_3_robots_120s"), |b| b.iter(|| sim::run(&grid, black_box(&config))));
    }
    group.finish();
}

criterion_group!(benches, perception, frontiers, planning, decay, simulation);
criterion_main!(benches);
