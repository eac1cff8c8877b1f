use rayon::prelude::*;
use thiserror::Error;

use super::spec::{ExperimentSpec, SpecError};
use crate::sim::{run, RunResult, SimConfig, SimError, Strategy, TerminatedBy};

/// Sampling interval of [`summarize_progression`], seconds.
pub const PROGRESSION_STEP: f64 = 10.0;

#[derive(Debug, Error)]
pub enum BatchError {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error("map {map}, m={m}, {strategy}, seed {seed}: {source}")]
    Run { map: String, m: usize, strategy: Strategy, seed: u64, source: SimError },
}

/// One finished run and the cell it belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub map: String,
    pub m: usize,
    pub strategy: Strategy,
    /// Index within the cell, `0..runs_per_cell`.
    pub run: usize,
    pub seed: u64,
    pub result: RunResult,
}

/// Statistics of one (map, m, strategy) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub map: String,
    pub m: usize,
    pub strategy: Strategy,
    pub runs: usize,
    pub successes: usize,
    pub faults: usize,
    /// Success rate over all runs.
    pub r: f64,
    /// Mean and sample standard deviation of t over successful runs.
    pub mean_t: Option<f64>,
    pub sigma_t: Option<f64>,
    /// Mean union area over successful runs.
    pub mean_area_m2: Option<f64>,
    /// Only on FBR rows whose FBE sibling has a mean time.
    pub delta_t: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchOutput {
    pub runs: Vec<RunRecord>,
    pub summary: Vec<SummaryRow>,
}

/// FNV-1a over the map name and team size. Strategy is left out on purpose
/// so FBE and FBR runs of a cell start from the same placements.
fn cell_hash(map: &str, m: usize) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    map.bytes()
        .chain([0u8])
        .chain((m as u64).to_le_bytes())
        .fold(OFFSET, |h, b| (h ^ b as u64).wrapping_mul(PRIME))
}

/// Seed of run `r` in cell (`map`, `m`): `base + hash(map, m) + r`, wrapping.
pub fn cell_seed(base_seed: u64, map: &str, m: usize, r: usize) -> u64 {
    base_seed.wrapping_add(cell_hash(map, m)).wrapping_add(r as u64)
}

/// Relative time gain of FBR over FBE: positive when FBR is faster.
pub fn delta_t(mean_t_fbr: f64, mean_t_fbe: f64) -> f64 {
    mean_t_fbe / mean_t_fbr - 1.0
}

/// Runs every (map × m × strategy × run) of the spec in parallel. Records
/// come back in spec order whatever the completion order.
pub fn run_batch(spec: &ExperimentSpec) -> Result<BatchOutput, BatchError> {
    spec.validate()?;
    let maps = spec.maps.iter().map(|src| Ok((src.name(), src.load()?))).collect::<Result<Vec<_>, SpecError>>()?;
    let mut jobs = Vec::with_capacity(spec.run_count());
    for (mi, (name, _)) in maps.iter().enumerate() {
        for &m in &spec.team_sizes {
            for &strategy in &spec.strategies {
                for r in 0..spec.runs_per_cell {
                    jobs.push((mi, m, strategy, r, cell_seed(spec.base_seed, name, m, r)));
                }
            }
        }
    }
    let runs = jobs
        .into_par_iter()
        .map(|(mi, m, strategy, r, seed)| {
            let (name, grid) = &maps[mi];
            let config = SimConfig { team_size: m, strategy, seed, ..spec.config.clone() };
            let result = run(grid, &config).map_err(|source| BatchError::Run {
                map: name.clone(),
                m,
                strategy,
                seed,
                source,
            })?;
            Ok(RunRecord { map: name.clone(), m, strategy, run: r, seed, result })
        })
        .collect::<Result<Vec<_>, BatchError>>()?;
    let summary = summarize(&runs);
    Ok(BatchOutput { runs, summary })
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Sample standard deviation; zero for a single value.
fn sample_std(xs: &[f64]) -> Option<f64> {
    let mu = mean(xs)?;
    if xs.len() < 2 {
        return Some(0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - mu) * (x - mu)).sum();
    Some((ss / (xs.len() - 1) as f64).sqrt())
}

/// One row per (map, m, strategy) cell, in order of first appearance.
pub fn summarize(records: &[RunRecord]) -> Vec<SummaryRow> {
    let mut cells: Vec<(String, usize, Strategy)> = Vec::new();
    for r in records {
        let key = (r.map.clone(), r.m, r.strategy);
        if !cells.contains(&key) {
            cells.push(key);
        }
    }
    let mut rows: Vec<SummaryRow> = cells
        .into_iter()
        .map(|(map, m, strategy)| {
            let runs: Vec<&RunResult> = records
                .iter()
                .filter(|r| r.map == map && r.m == m && r.strategy == strategy)
                .map(|r| &r.result)
                .collect();
            let ok: Vec<&RunResult> = runs.iter().copied().filter(|r| r.success).collect();
            let times: Vec<f64> = ok.iter().filter_map(|r| r.t_rendezvous).collect();
            let areas: Vec<f64> = ok.iter().map(|r| r.area_union_m2).collect();
            SummaryRow {
                map,
                m,
                strategy,
                runs: runs.len(),
                successes: ok.len(),
                faults: runs.iter().filter(|r| r.terminated_by == TerminatedBy::Fault).count(),
                r: ok.len() as f64 / runs.len() as f64,
                mean_t: mean(&times),
                sigma_t: sample_std(&times),
                mean_area_m2: mean(&areas),
                delta_t: None,
            }
        })
        .collect();
    let fbe_means: Vec<(String, usize, Option<f64>)> = rows
        .iter()
        .filter(|r| r.strategy == Strategy::Fbe)
        .map(|r| (r.map.clone(), r.m, r.mean_t))
        .collect();
    for row in rows.iter_mut().filter(|r| r.strategy == Strategy::Fbr) {
        let fbe = fbe_means.iter().find(|(map, m, _)| *map == row.map && *m == row.m).and_then(|x| x.2);
        row.delta_t = match (row.mean_t, fbe) {
            (Some(fbr), Some(fbe)) => Some(delta_t(fbr, fbe)),
            _ => None,
        };
    }
    rows
}

/// Mean largest-cluster size at one sample time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProgressionPoint {
    pub t: f64,
    pub mean_max_cluster: f64,
}

/// Resamples each run's max|C| step function every [`PROGRESSION_STEP`]
/// seconds (holding the last value past the end of a run) and averages
/// across runs. Samples run from 0 to the longest run's end.
pub fn summarize_progression(results: &[&RunResult]) -> Vec<ProgressionPoint> {
    let horizon = results
        .iter()
        .map(|r| r.max_cluster_series.last().map_or(0.0, |s| s.0).max(r.sim_time - r.fallback_time_excluded))
        .fold(0.0, f64::max);
    if results.is_empty() {
        return Vec::new();
    }
    let samples = (horizon / PROGRESSION_STEP).floor() as usize;
    (0..=samples)
        .map(|k| {
            let t = k as f64 * PROGRESSION_STEP;
            let total: usize = results
                .iter()
                .map(|r| r.max_cluster_series.iter().take_while(|s| s.0 <= t).last().map_or(1, |s| s.1))
                .sum();
            ProgressionPoint { t, mean_max_cluster: total as f64 / results.len() as f64 }
        })
        .collect()
}
