//! `rendezvous`: run single simulations, experiment batches, or generate maps.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use rendezvous_core::gridworld::dump_grid;
use rendezvous_core::harness::mapgen::{generate_map, MapStyle};
use rendezvous_core::harness::{format_delta, run_batch, write_batch, ExperimentSpec, MapSource};
use rendezvous_core::{sim, GridShape, SimConfig, Strategy};

#[derive(Parser)]
#[command(name = "rendezvous", version, about = "Multi-robot exploration and rendezvous simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one run and print its metrics.
    Run(RunArgs),
    /// Execute an experiment spec and write CSV results.
    Batch {
        /// Experiment spec file (key = value lines).
        #[arg(long)]
        spec: PathBuf,
        /// Output directory for runs.csv, summary.csv and progression.csv.
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a procedural map and write it as a map file.
    Genmap {
        #[arg(long)]
        style: MapStyle,
        /// Map area in square meters.
        #[arg(long)]
        size: f64,
        #[arg(long)]
        rooms: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    /// Map file, or a generator spec `gen:<style>:<size_m2>:<rooms>:<seed>`.
    #[arg(long)]
    map: String,
    #[arg(long)]
    robots: usize,
    #[arg(long)]
    strategy: Strategy,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    alpha: Option<f64>,
    /// Communication range in meters.
    #[arg(long)]
    comm_range: Option<f64>,
    /// Decay horizon in seconds.
    #[arg(long)]
    decay_seconds: Option<f64>,
    /// Simulation tick in seconds.
    #[arg(long)]
    tick: Option<f64>,
    /// Time limit in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
}

impl RunArgs {
    fn config(&self) -> SimConfig {
        let mut c = SimConfig { team_size: self.robots, strategy: self.strategy, seed: self.seed, ..SimConfig::default() };
        c.alpha = self.alpha.unwrap_or(c.alpha);
        c.comm_range = self.comm_range.unwrap_or(c.comm_range);
        c.decay_seconds = self.decay_seconds.unwrap_or(c.decay_seconds);
        c.tick = self.tick.unwrap_or(c.tick);
        c.time_limit = self.time_limit.unwrap_or(c.time_limit);
        c
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".into())
}

fn run(args: RunArgs) -> Result<()> {
    let source = MapSource::parse(&args.map).map_err(anyhow::Error::msg)?;
    let grid = source.load()?;
    let result = sim::run(&grid, &args.config())?;
    println!("map: {}", source.name());
    println!("strategy: {}  robots: {}  seed: {}", args.strategy, args.robots, args.seed);
    println!("terminated_by: {}", result.terminated_by.as_str());
    println!("success: {}", result.success);
    println!("t_s: {}", fmt_opt(result.t_rendezvous));
    let partial: Vec<String> = result.t_partial.iter().map(|t| fmt_opt(*t)).collect();
    println!("t_i_s: {}", partial.join(" "));
    println!("fallback_excluded_s: {:.3}", result.fallback_time_excluded);
    println!("sim_time_s: {:.3}", result.sim_time);
    println!("area_union_m2: {:.3}", result.area_union_m2);
    println!("area_intersection_m2: {:.3}", result.area_intersection_m2);
    println!("total_distance_m: {:.3}", result.total_distance());
    if let Some(fault) = &result.fault {
        println!("fault: {fault}");
    }
    Ok(())
}

fn batch(spec: PathBuf, out: PathBuf) -> Result<()> {
    let spec = ExperimentSpec::from_file(&spec).with_context(|| format!("reading spec {}", spec.display()))?;
    eprintln!("running {} simulations", spec.run_count());
    let output = run_batch(&spec)?;
    write_batch(&output, &out).with_context(|| format!("writing results to {}", out.display()))?;
    println!("{:<28} {:>3} {:>4} {:>5} {:>10} {:>10} {:>7}", "map", "m", "alg", "R", "t_s", "sigma_t_s", "delta_t");
    for row in &output.summary {
        println!(
            "{:<28} {:>3} {:>4} {:>5.2} {:>10} {:>10} {:>7}",
            row.map,
            row.m,
            row.strategy,
            row.r,
            fmt_opt(row.mean_t),
            fmt_opt(row.sigma_t),
            row.delta_t.map(format_delta).unwrap_or_default(),
        );
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run(args) => run(args),
        Command::Batch { spec, out } => batch(spec, out),
        Command::Genmap { style, size, rooms, seed, out } => {
            let grid = generate_map(style, size, rooms, seed)?;
            std::fs::write(&out, dump_grid(&grid)).with_context(|| format!("writing {}", out.display()))?;
            eprintln!("wrote {}x{} cells to {}", grid.width(), grid.height(), out.display());
            Ok(())
        }
    }
}
