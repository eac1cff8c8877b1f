use std::path::Path;

use super::batch::{summarize_progression, BatchOutput, RunRecord, SummaryRow};
use crate::sim::RunResult;

/// Six decimals keeps CSV output byte-stable and precise enough to
/// recompute every summary from the per-run file.
fn num(x: f64) -> String {
    format!("{x:.6}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Two decimals, the precision the summary tables quote delta_t at.
pub fn format_delta(delta: f64) -> String {
    format!("{delta:.2}")
}

fn to_string(mut w: csv::Writer<Vec<u8>>) -> String {
    w.flush().expect("writing to memory cannot fail");
    String::from_utf8(w.into_inner().expect("writing to memory cannot fail")).expect("csv output is UTF-8")
}

/// Per-run CSV. `t1_s..tN_s` columns are padded to the largest team in the
/// batch; cells beyond a run's own team size are empty.
pub fn runs_csv(records: &[RunRecord]) -> String {
    let max_m = records.iter().map(|r| r.m).max().unwrap_or(0);
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> =
        ["map", "m", "strategy", "seed", "success", "t_s", "fallback_excluded_s"].map(String::from).to_vec();
    header.extend((1..=max_m).map(|i| format!("t{i}_s")));
    header.extend(["area_union_m2", "area_intersection_m2", "total_distance_m", "terminated_by"].map(String::from));
    w.write_record(&header).expect("in-memory write");
    for rec in records {
        let r: &RunResult = &rec.result;
        let mut row = vec![
            rec.map.clone(),
            rec.m.to_string(),
            rec.strategy.to_string(),
            rec.seed.to_string(),
            r.success.to_string(),
            opt(r.t_rendezvous),
            num(r.fallback_time_excluded),
        ];
        row.extend((0..max_m).map(|i| opt(r.t_partial.get(i).copied().flatten())));
        row.extend([
            num(r.area_union_m2),
            num(r.area_intersection_m2),
            num(r.total_distance()),
            r.terminated_by.as_str().to_string(),
        ]);
        w.write_record(&row).expect("in-memory write");
    }
    to_string(w)
}

/// Summary CSV; `faults` counts runs aborted by a simulation fault.
pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["map", "m", "strategy", "runs", "R", "mean_t_s", "sigma_t_s", "mean_area_m2", "delta_t", "faults"])
        .expect("in-memory write");
    for s in rows {
        w.write_record([
            s.map.clone(),
            s.m.to_string(),
            s.strategy.to_string(),
            s.runs.to_string(),
            num(s.r),
            opt(s.mean_t),
            opt(s.sigma_t),
            opt(s.mean_area_m2),
            opt(s.delta_t),
            s.faults.to_string(),
        ])
        .expect("in-memory write");
    }
    to_string(w)
}

/// Mean max|C| curve of every cell, long format.
pub fn progression_csv(records: &[RunRecord]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["map", "m", "strategy", "t_s", "mean_max_cluster"]).expect("in-memory write");
    let mut seen = Vec::new();
    for rec in records {
        let key = (&rec.map, rec.m, rec.strategy);
        if seen.contains(&key) {
            continue;
        }
        seen.push(key);
        let cell: Vec<&RunResult> = records
            .iter()
            .filter(|r| r.map == rec.map && r.m == rec.m && r.strategy == rec.strategy)
            .map(|r| &r.result)
            .collect();
        for p in summarize_progression(&cell) {
            w.write_record([rec.map.clone(), rec.m.to_string(), rec.strategy.to_string(), num(p.t), num(p.mean_max_cluster)])
                .expect("in-memory write");
        }
    }
    to_string(w)
}

/// Writes `runs.csv`, `summary.csv` and `progression.csv` into `dir`,
/// creating it if needed.
pub fn write_batch(out: &BatchOutput, dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("runs.csv"), runs_csv(&out.runs))?;
    std::fs::write(dir.join("summary.csv"), summary_csv(&out.summary))?;
    std::fs::write(dir.join("progression.csv"), progression_csv(&out.runs))?;
    Ok(())
}
