//! Synthetic map generation.
//!
//! Real deployments derive grids from street maps and geolocated crime
//! reports; that data is confidential. The generator stands in for it:
//! random road cells at a configurable density, plus a handful of crime
//! hotspots whose counts decay with Chebyshev distance from the peak.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Cell, GridMap, TerrainError, DEFAULT_CELL_SIDE_M};

/// Parameters for [`generate_synthetic_map`].
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub rows: usize,
    pub cols: usize,
    /// Number of crime hotspots to place.
    pub hotspots: usize,
    /// Inclusive range of peak crime counts; each hotspot draws one value.
    pub peak_min: u32,
    pub peak_max: u32,
    /// Probability that a cell carries a road, in (0, 1].
    pub road_density: f64,
    /// Chebyshev radius over which a hotspot's crime count decays to zero.
    pub decay_radius: usize,
    pub cell_side_m: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            rows: 20,
            cols: 20,
            hotspots: 3,
            peak_min: 20,
            peak_max: 60,
            road_density: 0.9,
            decay_radius: 3,
            cell_side_m: DEFAULT_CELL_SIDE_M,
        }
    }
}

impl SyntheticSpec {
    fn validate(&self) -> Result<(), TerrainError> {
        if self.rows == 0 || self.cols == 0 {
            return Err(TerrainError::InvalidSpec("rows and cols must be positive".into()));
        }
        if self.peak_min == 0 || self.peak_min > self.peak_max {
            return Err(TerrainError::InvalidSpec(format!(
                "empty peak range {}..={}",
                self.peak_min, self.peak_max
            )));
        }
        if self.road_density.is_nan() || self.road_density <= 0.0 || self.road_density > 1.0 {
            return Err(TerrainError::InvalidSpec(format!(
                "road density {} outside (0, 1]",
                self.road_density
            )));
        }
        if !self.cell_side_m.is_finite() || self.cell_side_m <= 0.0 {
            return Err(TerrainError::InvalidSpec("cell_side_m must be positive".into()));
        }
        Ok(())
    }
}

/// Generates a grid map deterministically from `(spec, seed)`.
///
/// Hotspot peaks are placed far enough apart that their decay cones do not
/// overlap, so each peak cell is the unique strict local maximum of its
/// neighborhood. Road cells are guaranteed to form a single connected
/// component: if sampling leaves the roads fragmented, straight corridors
/// are carved between components. All cells are in-zone.
pub fn generate_synthetic_map(
    spec: &SyntheticSpec,
    seed: u64,
) -> Result<GridMap, TerrainError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (rows, cols) = (spec.rows, spec.cols);

    let mut cells: Vec<Cell> = (0..rows * cols)
        .map(|_| Cell {
            has_road: rng.random::<f64>() < spec.road_density,
            crime_count: 0,
            in_zone: true,
        })
        .collect();

    let peaks = place_peaks(spec, &mut rng)?;
    let peak_values: Vec<u32> =
        peaks.iter().map(|_| rng.random_range(spec.peak_min..=spec.peak_max)).collect();

    let radius = spec.decay_radius;
    for row in 0..rows {
        for col in 0..cols {
            let mut crime = 0u32;
            for (&(pr, pc), &peak) in peaks.iter().zip(&peak_values) {
                let d = row.abs_diff(pr).max(col.abs_diff(pc));
                if d <= radius {
                    let span = (radius + 1) as u32;
                    crime = crime.max(peak * (span - d as u32) / span);
                }
            }
            cells[row * cols + col].crime_count = crime;
        }
    }
    // Hotspots must be reachable.
    for &(pr, pc) in &peaks {
        cells[pr * cols + pc].has_road = true;
    }
    if !cells.iter().any(|c| c.has_road) {
        cells[0].has_road = true;
    }

    connect_roads(&mut cells, rows, cols);
    GridMap::new(rows, cols, spec.cell_side_m, cells)
}

/// Picks hotspot cells with pairwise Chebyshev separation of at least
/// `2 * decay_radius + 2`, so decay cones stay disjoint. Candidate order is
/// shuffled; a handful of reshuffles deals with unlucky greedy dead ends.
fn place_peaks(
    spec: &SyntheticSpec,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<(usize, usize)>, TerrainError> {
    if spec.hotspots == 0 {
        return Ok(Vec::new());
    }
    let min_sep = 2 * spec.decay_radius + 2;
    let mut candidates: Vec<(usize, usize)> = (0..spec.rows)
        .flat_map(|r| (0..spec.cols).map(move |c| (r, c)))
        .collect();
    for _ in 0..32 {
        candidates.shuffle(rng);
        let mut picked: Vec<(usize, usize)> = Vec::with_capacity(spec.hotspots);
        for &(r, c) in &candidates {
            let far_enough = picked
                .iter()
                .all(|&(pr, pc)| r.abs_diff(pr).max(c.abs_diff(pc)) >= min_sep);
            if far_enough {
                picked.push((r, c));
                if picked.len() == spec.hotspots {
                    return Ok(picked);
                }
            }
        }
    }
    Err(TerrainError::InvalidSpec(format!(
        "cannot place {} hotspots with separation {} on a {}x{} grid",
        spec.hotspots, min_sep, spec.rows, spec.cols
    )))
}

/// Makes the road cells a single 4-connected component by carving L-shaped
/// corridors between components until one remains.
fn connect_roads(cells: &mut [Cell], rows: usize, cols: usize) {
    loop {
        let components = road_components(cells, rows, cols);
        if components.len() <= 1 {
            return;
        }
        // Merge the second component into the first; both are identified by
        // their smallest cell index, so the process is deterministic.
        let (r0, c0) = (components[0][0] / cols, components[0][0] % cols);
        let (r1, c1) = (components[1][0] / cols, components[1][0] % cols);
        let (mut r, mut c) = (r1, c1);
        while r != r0 {
            r = if r < r0 { r + 1 } else { r - 1 };
            cells[r * cols + c].has_road = true;
        }
        while c != c0 {
            c = if c < c0 { c + 1 } else { c - 1 };
            cells[r * cols + c].has_road = true;
        }
    }
}

fn road_components(cells: &[Cell], rows: usize, cols: usize) -> Vec<Vec<usize>> {
    let mut seen = vec![false; cells.len()];
    let mut components = Vec::new();
    for start in 0..cells.len() {
        if seen[start] || !cells[start].has_road {
            continue;
        }
        let mut comp = Vec::new();
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(idx) = stack.pop() {
            comp.push(idx);
            let (r, c) = (idx / cols, idx % cols);
            let mut push = |nr: usize, nc: usize, stack: &mut Vec<usize>| {
                let nidx = nr * cols + nc;
                if cells[nidx].has_road && !seen[nidx] {
                    seen[nidx] = true;
                    stack.push(nidx);
                }
            };
            if r > 0 {
                push(r - 1, c, &mut stack);
            }
            if r + 1 < rows {
                push(r + 1, c, &mut stack);
            }
            if c > 0 {
                push(r, c - 1, &mut stack);
            }
            if c + 1 < cols {
                push(r, c + 1, &mut stack);
            }
        }
        comp.sort_unstable();
        components.push(comp);
    }
    components.sort();
    components
}
