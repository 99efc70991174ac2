//! The map file format.
//!
//! Plain text. A three-line header (`rows`, `cols`, `cell_side_m`) followed
//! by one record per cell in row-major order:
//!
//! ```text
//! rows 2
//! cols 2
//! cell_side_m 50
//! road 1 crime 5 zone 1
//! road 1 crime 0 zone 1
//! road 0 crime 2 zone 0
//! road 1 crime 0 zone 1
//! ```
//!
//! Field names are part of the contract; unknown fields are rejected.
//! `load_map(save_map(g))` reproduces `g` field for field.

use std::fs;
use std::path::Path;

use super::{Cell, GridMap, TerrainError};

pub fn save_map(grid: &GridMap, path: &Path) -> Result<(), TerrainError> {
    fs::write(path, format_map(grid))?;
    Ok(())
}

pub fn load_map(path: &Path) -> Result<GridMap, TerrainError> {
    let text = fs::read_to_string(path)?;
    parse_map(&text)
}

pub(crate) fn format_map(grid: &GridMap) -> String {
    let mut out = String::new();
    out.push_str(&format!("rows {}\n", grid.rows()));
    out.push_str(&format!("cols {}\n", grid.cols()));
    // f64 Display round-trips exactly, so the header survives a reload.
    out.push_str(&format!("cell_side_m {}\n", grid.cell_side_m()));
    for cell in grid.cells() {
        out.push_str(&format!(
            "road {} crime {} zone {}\n",
            u8::from(cell.has_road),
            cell.crime_count,
            u8::from(cell.in_zone)
        ));
    }
    out
}

pub(crate) fn parse_map(text: &str) -> Result<GridMap, TerrainError> {
    let err = |line: usize, message: String| TerrainError::ParseError { line, message };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());

    let mut header = |field: &str| -> Result<(usize, String), TerrainError> {
        let (idx, line) = lines
            .next()
            .ok_or_else(|| err(0, format!("missing `{field}` header")))?;
        let mut parts = line.split_whitespace();
        let name = parts.next().unwrap_or_default();
        if name != field {
            return Err(err(idx + 1, format!("expected field `{field}`, found `{name}`")));
        }
        let value = parts
            .next()
            .ok_or_else(|| err(idx + 1, format!("missing value for `{field}`")))?;
        if parts.next().is_some() {
            return Err(err(idx + 1, format!("trailing tokens after `{field}`")));
        }
        Ok((idx + 1, value.to_string()))
    };

    let (line_no, rows_str) = header("rows")?;
    let rows: usize = rows_str
        .parse()
        .map_err(|_| err(line_no, format!("invalid rows value `{rows_str}`")))?;
    let (line_no, cols_str) = header("cols")?;
    let cols: usize = cols_str
        .parse()
        .map_err(|_| err(line_no, format!("invalid cols value `{cols_str}`")))?;
    let (line_no, side_str) = header("cell_side_m")?;
    let cell_side_m: f64 = side_str
        .parse()
        .map_err(|_| err(line_no, format!("invalid cell_side_m value `{side_str}`")))?;

    let mut cells = Vec::new();
    let mut negative_crime_line = None;
    for (idx, line) in lines {
        let line_no = idx + 1;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 6 {
            return Err(err(
                line_no,
                format!("expected `road <0|1> crime <n> zone <0|1>`, found {} tokens", tokens.len()),
            ));
        }
        for (pos, expected) in [(0, "road"), (2, "crime"), (4, "zone")] {
            if tokens[pos] != expected {
                return Err(err(
                    line_no,
                    format!("unknown field `{}` (expected `{expected}`)", tokens[pos]),
                ));
            }
        }
        let flag = |s: &str, field: &str| -> Result<bool, TerrainError> {
            match s {
                "0" => Ok(false),
                "1" => Ok(true),
                other => Err(err(line_no, format!("invalid `{field}` value `{other}`"))),
            }
        };
        let has_road = flag(tokens[1], "road")?;
        let crime: i64 = tokens[3]
            .parse()
            .map_err(|_| err(line_no, format!("invalid `crime` value `{}`", tokens[3])))?;
        if crime < 0 {
            // Invariant, not syntax: report after the file shape is known good.
            negative_crime_line.get_or_insert(line_no);
        }
        let in_zone = flag(tokens[5], "zone")?;
        cells.push(Cell {
            has_road,
            crime_count: u32::try_from(crime.max(0)).map_err(|_| {
                err(line_no, format!("`crime` value {crime} out of range"))
            })?,
            in_zone,
        });
    }

    if rows.checked_mul(cols) != Some(cells.len()) {
        return Err(err(
            0,
            format!("header promises {rows}x{cols} cells, found {}", cells.len()),
        ));
    }
    if let Some(line) = negative_crime_line {
        return Err(TerrainError::InvariantViolation(format!(
            "crime_count must be >= 0 (line {line})"
        )));
    }
    GridMap::new(rows, cols, cell_side_m, cells)
}
