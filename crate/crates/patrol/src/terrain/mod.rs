//! Terrain representation: grid maps and the patrol graphs derived from them.
//!
//! An urban area is modelled as a rectangular raster of square cells
//! ([`GridMap`]). Cells carry a road flag, a raw crime count (the target
//! value), and a zone flag separating the surveillance area proper from
//! auxiliary padding cells that exist only so agents can move through them.
//! Skeletonization turns the raster into an undirected [`PatrolGraph`]: one
//! node per road cell, edges between 4-neighboring road cells, and the
//! monitored set restricted to in-zone nodes.

mod format;
mod synthetic;

pub use format::{load_map, save_map};
pub use synthetic::{generate_synthetic_map, SyntheticSpec};

use std::collections::VecDeque;

use thiserror::Error;

/// Dense node index into a [`PatrolGraph`].
pub type NodeId = usize;

/// Default physical cell side, in meters.
pub const DEFAULT_CELL_SIDE_M: f64 = 50.0;

#[derive(Debug, Error)]
pub enum TerrainError {
    /// No cell in the grid has a road; skeletonization would be empty.
    #[error("grid contains no road cells")]
    EmptyGraph,
    /// A node id outside the graph was passed to a query.
    #[error("unknown node id {0}")]
    UnknownNode(NodeId),
    /// A synthetic map spec failed validation.
    #[error("invalid synthetic map spec: {0}")]
    InvalidSpec(String),
    /// A map file could not be parsed.
    #[error("parse error at line {line}: {message}")]
    ParseError { line: usize, message: String },
    /// A parsed map violates a `GridMap` invariant.
    #[error("invariant violation: {0}")]
    InvariantViolation(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// One raster cell of a [`GridMap`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cell {
    /// Whether the cell contains a traversable road.
    pub has_road: bool,
    /// Raw target value: geolocated crime reports for the cell.
    pub crime_count: u32,
    /// True for cells inside the selected surveillance area; false for
    /// auxiliary padding cells that are traversable but never monitored.
    pub in_zone: bool,
}

/// Rectangular cell raster from which patrol graphs are derived.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMap {
    rows: usize,
    cols: usize,
    cell_side_m: f64,
    cells: Vec<Cell>,
}

impl GridMap {
    /// Builds a grid, checking the type invariants: positive dimensions,
    /// positive cell side, and `rows * cols == cells.len()`.
    pub fn new(
        rows: usize,
        cols: usize,
        cell_side_m: f64,
        cells: Vec<Cell>,
    ) -> Result<Self, TerrainError> {
        if rows == 0 {
            return Err(TerrainError::InvariantViolation("rows must be positive".into()));
        }
        if cols == 0 {
            return Err(TerrainError::InvariantViolation("cols must be positive".into()));
        }
        if !cell_side_m.is_finite() || cell_side_m <= 0.0 {
            return Err(TerrainError::InvariantViolation(
                "cell_side_m must be positive and finite".into(),
            ));
        }
        if rows.checked_mul(cols) != Some(cells.len()) {
            return Err(TerrainError::InvariantViolation(format!(
                "rows*cols = {} does not match cell count {}",
                rows * cols,
                cells.len()
            )));
        }
        Ok(Self { rows, cols, cell_side_m, cells })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn cell_side_m(&self) -> f64 {
        self.cell_side_m
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    /// Row-major index of a cell position.
    pub fn index(&self, row: usize, col: usize) -> usize {
        debug_assert!(row < self.rows && col < self.cols);
        row * self.cols + col
    }

    pub fn cell(&self, row: usize, col: usize) -> Cell {
        self.cells[self.index(row, col)]
    }
}

/// A node of a [`PatrolGraph`].
#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    /// Dense index, assigned in row-major cell order.
    pub id: NodeId,
    /// (row, col) of the source cell in the grid.
    pub grid_pos: (usize, usize),
    /// Target value σ of the node (the cell's crime count).
    pub sigma: f64,
    /// Whether the node belongs to the surveillance area.
    pub in_zone: bool,
}

/// Undirected graph of road cells. Immutable after construction; safe to
/// share across concurrent readers.
#[derive(Debug, Clone, PartialEq)]
pub struct PatrolGraph {
    nodes: Vec<Node>,
    adjacency: Vec<Vec<NodeId>>,
    monitored: Vec<NodeId>,
    monitored_mask: Vec<bool>,
    grid_rows: usize,
    grid_cols: usize,
    cell_to_node: Vec<Option<NodeId>>,
}

impl PatrolGraph {
    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    /// Neighbor ids of `id`, in ascending order. No self-loops: staying put
    /// is an action, not an edge.
    pub fn neighbors(&self, id: NodeId) -> &[NodeId] {
        &self.adjacency[id]
    }

    /// Total number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// The monitored set C: ids of in-zone nodes, ascending.
    pub fn monitored(&self) -> &[NodeId] {
        &self.monitored
    }

    pub fn is_monitored(&self, id: NodeId) -> bool {
        self.monitored_mask[id]
    }

    /// Dimensions of the source grid, (rows, cols).
    pub fn grid_dims(&self) -> (usize, usize) {
        (self.grid_rows, self.grid_cols)
    }

    /// Node occupying the given cell, if any.
    pub fn node_at(&self, row: usize, col: usize) -> Option<NodeId> {
        if row >= self.grid_rows || col >= self.grid_cols {
            return None;
        }
        self.cell_to_node[row * self.grid_cols + col]
    }

    /// Largest σ over all nodes (0 for an all-zero graph).
    pub fn max_sigma(&self) -> f64 {
        self.nodes.iter().map(|n| n.sigma).fold(0.0, f64::max)
    }

    /// Chebyshev distance between the grid positions of two nodes.
    pub fn chebyshev(&self, a: NodeId, b: NodeId) -> usize {
        let (ar, ac) = self.nodes[a].grid_pos;
        let (br, bc) = self.nodes[b].grid_pos;
        ar.abs_diff(br).max(ac.abs_diff(bc))
    }

    /// Hop distance δ(a, b): 0 if `a == b`, 1 if adjacent, otherwise the
    /// minimum hop count. `None` if no path exists.
    pub fn shortest_distance(
        &self,
        a: NodeId,
        b: NodeId,
    ) -> Result<Option<usize>, TerrainError> {
        if a >= self.len() {
            return Err(TerrainError::UnknownNode(a));
        }
        if b >= self.len() {
            return Err(TerrainError::UnknownNode(b));
        }
        if a == b {
            return Ok(Some(0));
        }
        let mut dist: Vec<Option<usize>> = vec![None; self.len()];
        dist[a] = Some(0);
        let mut queue = VecDeque::new();
        queue.push_back(a);
        while let Some(v) = queue.pop_front() {
            let d = dist[v].unwrap();
            for &u in &self.adjacency[v] {
                if dist[u].is_none() {
                    if u == b {
                        return Ok(Some(d + 1));
                    }
                    dist[u] = Some(d + 1);
                    queue.push_back(u);
                }
            }
        }
        Ok(None)
    }

    /// Connected components of the monitored set, computed on the subgraph
    /// induced by C. More than one component is a warning-level diagnostic,
    /// not an error: real zones have irregular holes.
    pub fn monitored_components(&self) -> Vec<Vec<NodeId>> {
        let mut seen = vec![false; self.len()];
        let mut components = Vec::new();
        for &start in &self.monitored {
            if seen[start] {
                continue;
            }
            let mut comp = Vec::new();
            let mut queue = VecDeque::new();
            seen[start] = true;
            queue.push_back(start);
            while let Some(v) = queue.pop_front() {
                comp.push(v);
                for &u in &self.adjacency[v] {
                    if self.monitored_mask[u] && !seen[u] {
                        seen[u] = true;
                        queue.push_back(u);
                    }
                }
            }
            comp.sort_unstable();
            components.push(comp);
        }
        components
    }

    /// Connected components of the whole graph.
    pub fn components(&self) -> Vec<Vec<NodeId>> {
        let mut seen = vec![false; self.len()];
        let mut components = Vec::new();
        for start in 0..self.len() {
            if seen[start] {
                continue;
            }
            let mut comp = Vec::new();
            let mut queue = VecDeque::new();
            seen[start] = true;
            queue.push_back(start);
            while let Some(v) = queue.pop_front() {
                comp.push(v);
                for &u in &self.adjacency[v] {
                    if !seen[u] {
                        seen[u] = true;
                        queue.push_back(u);
                    }
                }
            }
            comp.sort_unstable();
            components.push(comp);
        }
        components
    }

    /// Stable fingerprint of the graph structure and target values, used in
    /// config hashes so episode logs can be matched to their graph.
    pub fn fingerprint(&self) -> u64 {
        let mut text = String::new();
        text.push_str(&format!("g{}x{};", self.grid_rows, self.grid_cols));
        for n in &self.nodes {
            text.push_str(&format!(
                "n{},{},{},{},{};",
                n.id,
                n.grid_pos.0,
                n.grid_pos.1,
                n.sigma.to_bits(),
                u8::from(n.in_zone)
            ));
        }
        for (id, adj) in self.adjacency.iter().enumerate() {
            text.push_str(&format!("a{}:", id));
            for &u in adj {
                text.push_str(&format!("{},", u));
            }
        }
        crate::util::fnv1a64(text.as_bytes())
    }
}

/// Converts a grid into a patrol graph: one node per road cell, edges
/// between 4-neighboring road cells, σ taken from the cell crime count, and
/// the monitored set C from in-zone road cells.
///
/// 4-connectivity keeps every edge the same physical length, so one hop is
/// one unit of distance everywhere. Node ids are assigned in row-major cell
/// order, densely re-indexed over road cells only.
pub fn skeletonize(grid: &GridMap) -> Result<PatrolGraph, TerrainError> {
    let (rows, cols) = (grid.rows(), grid.cols());
    let mut cell_to_node: Vec<Option<NodeId>> = vec![None; rows * cols];
    let mut nodes = Vec::new();
    for row in 0..rows {
        for col in 0..cols {
            let cell = grid.cell(row, col);
            if cell.has_road {
                let id = nodes.len();
                cell_to_node[grid.index(row, col)] = Some(id);
                nodes.push(Node {
                    id,
                    grid_pos: (row, col),
                    sigma: f64::from(cell.crime_count),
                    in_zone: cell.in_zone,
                });
            }
        }
    }
    if nodes.is_empty() {
        return Err(TerrainError::EmptyGraph);
    }

    let mut adjacency: Vec<Vec<NodeId>> = vec![Vec::new(); nodes.len()];
    for node in &nodes {
        let (row, col) = node.grid_pos;
        // Right and down neighbors; the symmetric entries come for free.
        if col + 1 < cols {
            if let Some(other) = cell_to_node[row * cols + col + 1] {
                adjacency[node.id].push(other);
                adjacency[other].push(node.id);
            }
        }
        if row + 1 < rows {
            if let Some(other) = cell_to_node[(row + 1) * cols + col] {
                adjacency[node.id].push(other);
                adjacency[other].push(node.id);
            }
        }
    }
    for adj in &mut adjacency {
        adj.sort_unstable();
    }

    let monitored: Vec<NodeId> =
        nodes.iter().filter(|n| n.in_zone).map(|n| n.id).collect();
    let mut monitored_mask = vec![false; nodes.len()];
    for &id in &monitored {
        monitored_mask[id] = true;
    }

    Ok(PatrolGraph {
        nodes,
        adjacency,
        monitored,
        monitored_mask,
        grid_rows: rows,
        grid_cols: cols,
        cell_to_node,
    })
}
