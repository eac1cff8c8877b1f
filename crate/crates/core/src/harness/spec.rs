//! Line-oriented experiment spec files.
//!
//! ```text
//! # comments and blank lines are ignored
//! map = gen:ring:1600:40:7      # style:size_m2:rooms:seed
//! map = maps/corridor.txt       # relative to the spec file
//! m = 3
//! m = 8
//! strategy = fbe
//! strategy = fbr
//! runs = 10
//! base_seed = 0
//! decay_seconds = 300           # any SimConfig override
//! ```

use std::path::{Path, PathBuf};

use thiserror::Error;

use super::mapgen::{generate_map, MapGenError, MapStyle};
use crate::gridworld::{load_map, MapParseError, OccupancyGrid};
use crate::sim::{SimConfig, Strategy};

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("spec lists no {0}")]
    Missing(&'static str),
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("map {name}: {source}")]
    MapFile { name: String, source: MapParseError },
    #[error("map {name}: {source}")]
    MapGen { name: String, source: MapGenError },
}

/// Where a map comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum MapSource {
    File(PathBuf),
    Generated { style: MapStyle, size_m2: f64, rooms: usize, seed: u64 },
}

impl MapSource {
    /// Parses `gen:<style>:<size_m2>:<rooms>:<seed>` or a file path.
    pub fn parse(text: &str) -> Result<Self, String> {
        let Some(rest) = text.strip_prefix("gen:") else {
            return Ok(MapSource::File(PathBuf::from(text)));
        };
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 4 {
            return Err(format!("generator spec {text:?} is not gen:<style>:<size_m2>:<rooms>:<seed>"));
        }
        let style = parts[0].parse()?;
        let size_m2 = parts[1].parse().map_err(|_| format!("bad map size {:?}", parts[1]))?;
        let rooms = parts[2].parse().map_err(|_| format!("bad room count {:?}", parts[2]))?;
        let seed = parts[3].parse().map_err(|_| format!("bad map seed {:?}", parts[3]))?;
        Ok(MapSource::Generated { style, size_m2, rooms, seed })
    }

    /// Stable label used in CSV output and seed derivation.
    pub fn name(&self) -> String {
        match self {
            MapSource::File(p) => p.display().to_string(),
            MapSource::Generated { style, size_m2, rooms, seed } => {
                format!("gen:{}:{}:{}:{}", style.as_str(), size_m2, rooms, seed)
            }
        }
    }

    pub fn load(&self) -> Result<OccupancyGrid, SpecError> {
        match self {
            MapSource::File(path) => {
                let text =
                    std::fs::read_to_string(path).map_err(|source| SpecError::Io { path: path.clone(), source })?;
                load_map(&text).map_err(|source| SpecError::MapFile { name: self.name(), source })
            }
            MapSource::Generated { style, size_m2, rooms, seed } => generate_map(*style, *size_m2, *rooms, *seed)
                .map_err(|source| SpecError::MapGen { name: self.name(), source }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub maps: Vec<MapSource>,
    pub team_sizes: Vec<usize>,
    pub strategies: Vec<Strategy>,
    pub runs_per_cell: usize,
    pub base_seed: u64,
    /// Template for every run; team size, strategy and seed are filled in
    /// per run.
    pub config: SimConfig,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            maps: Vec::new(),
            team_sizes: Vec::new(),
            strategies: vec![Strategy::Fbe, Strategy::Fbr],
            runs_per_cell: 10,
            base_seed: 0,
            config: SimConfig::default(),
        }
    }
}

impl ExperimentSpec {
    /// Parses spec text. Relative map paths are kept as written.
    pub fn parse(text: &str) -> Result<Self, SpecError> {
        let mut spec = ExperimentSpec::default();
        let mut strategies = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let err = |message: String| SpecError::Line { line, message };
            let (key, value) =
                content.split_once('=').ok_or_else(|| err(format!("expected key = value, got {content:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            let num = |v: &str| v.parse::<f64>().map_err(|_| err(format!("{key}: {v:?} is not a number")));
            let count = |v: &str| v.parse::<usize>().map_err(|_| err(format!("{key}: {v:?} is not a count")));
            let cfg = &mut spec.config;
            match key {
                "map" => spec.maps.push(MapSource::parse(value).map_err(err)?),
                "m" => spec.team_sizes.push(count(value)?),
                "strategy" => strategies.push(value.parse::<Strategy>().map_err(err)?),
                "runs" => spec.runs_per_cell = count(value)?,
                "base_seed" => {
                    spec.base_seed = value.parse().map_err(|_| err(format!("base_seed: {value:?} is not a u64")))?
                }
                "alpha" => cfg.alpha = num(value)?,
                "comm_range" => cfg.comm_range = num(value)?,
                "speed" => cfg.speed = num(value)?,
                "lidar_range" => cfg.lidar_range = num(value)?,
                "n_beams" => cfg.n_beams = count(value)?,
                "decay_seconds" => cfg.decay_seconds = num(value)?,
                "pose_interval" => cfg.pose_interval = num(value)?,
                "chunk_size" => cfg.chunk_size = count(value)?,
                "min_frontier_cells" => cfg.min_frontier_cells = count(value)?,
                "tick" => cfg.tick = num(value)?,
                "time_limit" => cfg.time_limit = num(value)?,
                "follower_spacing" => cfg.follower_spacing = Some(num(value)?),
                "range_noise" => cfg.range_noise = Some(num(value)?),
                other => return Err(err(format!("unknown key {other:?}"))),
            }
        }
        if !strategies.is_empty() {
            spec.strategies = strategies;
        }
        spec.validate()?;
        Ok(spec)
    }

    /// Reads a spec file; relative map paths resolve against its directory.
    pub fn from_file(path: &Path) -> Result<Self, SpecError> {
        let text = std::fs::read_to_string(path).map_err(|source| SpecError::Io { path: path.to_path_buf(), source })?;
        let mut spec = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for map in &mut spec.maps {
            if let MapSource::File(p) = map {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        if self.maps.is_empty() {
            return Err(SpecError::Missing("map"));
        }
        if self.team_sizes.is_empty() {
            return Err(SpecError::Missing("team size (m)"));
        }
        if self.runs_per_cell == 0 {
            return Err(SpecError::Missing("runs (runs must be at least 1)"));
        }
        Ok(())
    }

    pub fn run_count(&self) -> usize {
        self.maps.len() * self.team_sizes.len() * self.strategies.len() * self.runs_per_cell
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_repeated_entries_and_overrides() {
        let spec = ExperimentSpec::parse(
            "# demo\nmap = gen:ring:400:8:3\nm=3\nm = 8\nstrategy=fbr\nruns = 2 # short\nbase_seed=5\ndecay_seconds=120\n",
        )
        .unwrap();
        assert_eq!(spec.maps, vec![MapSource::Generated { style: MapStyle::Ring, size_m2: 400.0, rooms: 8, seed: 3 }]);
        assert_eq!(spec.team_sizes, vec![3, 8]);
        assert_eq!(spec.strategies, vec![Strategy::Fbr]);
        assert_eq!((spec.runs_per_cell, spec.base_seed), (2, 5));
        assert_eq!(spec.config.decay_seconds, 120.0);
        assert_eq!(spec.run_count(), 4);
    }

    #[test]
    fn strategies_default_to_both() {
        let spec = ExperimentSpec::parse("map=a.txt\nm=2").unwrap();
        assert_eq!(spec.strategies, vec![Strategy::Fbe, Strategy::Fbr]);
        assert_eq!(spec.maps[0].name(), "a.txt");
    }

    #[test]
    fn reports_bad_lines() {
        let e = ExperimentSpec::parse("map=a.txt\nm=two").unwrap_err();
        assert!(matches!(e, SpecError::Line { line: 2, .. }), "{e}");
        assert!(matches!(ExperimentSpec::parse("map=a\nm=3\nwat=1"), Err(SpecError::Line { line: 3, .. })));
        assert!(matches!(ExperimentSpec::parse("m=3"), Err(SpecError::Missing(_))));
        assert!(matches!(ExperimentSpec::parse("map=gen:ring:4"), Err(SpecError::Line { line: 1, .. })));
    }

    #[test]
    fn generator_names_round_trip() {
        let src = MapSource::parse("gen:office:900:6:1").unwrap();
        assert_eq!(MapSource::parse(&src.name()).unwrap(), src);
    }
}
