//! ASCII map format.
//!
//! ```text
//! resolution 0.1
//! #####
//! #...#
//! #####
//! ```
//!
//! The header may carry a trailing `open` flag to keep the border as written;
//! otherwise every boundary cell is forced to `#` on load.

use thiserror::Error;

use super::{Cell, GridShape, OccupancyGrid, Terrain};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MapParseError {
    #[error("malformed header: {0}")]
    Header(String),
    #[error("map has no rows")]
    NoRows,
    #[error("ragged row at line {line}: expected {expected} cells, found {found}")]
    RaggedRow { line: usize, expected: usize, found: usize },
    #[error("illegal character {ch:?} at line {line}, column {column}")]
    IllegalChar { line: usize, column: usize, ch: char },
}

/// Parses map text. Row line numbers count from the first row after the header.
pub fn load_map(text: &str) -> Result<OccupancyGrid, MapParseError> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| MapParseError::Header("empty input".into()))?;
    let mut tokens = header.split_whitespace();
    if tokens.next() != Some("resolution") {
        return Err(MapParseError::Header(format!("expected `resolution <meters>`, got {header:?}")));
    }
    let resolution: f64 = tokens
        .next()
        .ok_or_else(|| MapParseError::Header("missing resolution value".into()))?
        .parse()
        .map_err(|e| MapParseError::Header(format!("bad resolution: {e}")))?;
    if !(resolution.is_finite() && resolution > 0.0) {
        return Err(MapParseError::Header(format!("resolution must be positive, got {resolution}")));
    }
    let open = match tokens.next() {
        None => false,
        Some("open") => true,
        Some(other) => return Err(MapParseError::Header(format!("unknown header flag {other:?}"))),
    };
    if let Some(extra) = tokens.next() {
        return Err(MapParseError::Header(format!("unexpected token {extra:?}")));
    }

    let rows: Vec<&str> = lines.map(str::trim_end).collect();
    let rows = match rows.iter().rposition(|r| !r.is_empty()) {
        Some(last) => &rows[..=last],
        None => return Err(MapParseError::NoRows),
    };
    let width = rows[0].chars().count();
    let mut cells = Vec::with_capacity(width * rows.len());
    for (i, row) in rows.iter().enumerate() {
        let line = i + 1;
        let found = row.chars().count();
        if found != width {
            return Err(MapParseError::RaggedRow { line, expected: width, found });
        }
        for (column, ch) in row.chars().enumerate() {
            cells.push(match ch {
                '#' => Terrain::Obstacle,
                '.' => Terrain::Free,
                ch => return Err(MapParseError::IllegalChar { line, column: column + 1, ch }),
            });
        }
    }
    if width == 0 {
        return Err(MapParseError::NoRows);
    }
    let mut grid = OccupancyGrid::new(width, rows.len(), resolution, cells).expect("dimensions validated above");
    if !open {
        grid.close_border();
    }
    Ok(grid)
}

/// Serializes a grid in the format accepted by [`load_map`].
pub fn dump_grid(grid: &OccupancyGrid) -> String {
    let mut out = String::with_capacity((grid.width() + 1) * grid.height() + 24);
    out.push_str(&format!("resolution {}\n", grid.resolution()));
    for y in 0..grid.height() {
        for x in 0..grid.width() {
            out.push(match grid.terrain(Cell::new(x, y)) {
                Terrain::Obstacle => '#',
                Terrain::Free => '.',
            });
        }
        out.push('\n');
    }
    out
}
