//! Floor plans, grids, access points and synthetic radio maps.
//!
//! The propagation model is a 2-D log-distance path loss with per-wall
//! attenuation on the direct path. Access point heights are not modelled.

mod file;
pub mod geometry;
mod propagation;
mod radio_map;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use file::{load_environment, save_environment, EnvironmentFile};
pub use propagation::{
    sample_observation, sample_observation_with, simulate_radio_map, PropagationModel,
};
pub use radio_map::{format_value, Fingerprint, RadioMap};
pub(crate) use radio_map::header as radio_map_header;

/// A point on the floor plan, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn midpoint(&self, other: &Position) -> Position {
        Position::new(0.5 * (self.x + other.x), 0.5 * (self.y + other.y))
    }

    /// Bit-level key for exact position lookups; `-0.0` and `0.0` agree.
    pub(crate) fn key(&self) -> (u64, u64) {
        ((self.x + 0.0).to_bits(), (self.y + 0.0).to_bits())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Wall {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
    pub atten_db: f64,
    #[serde(default)]
    pub dissociating: bool,
}

impl Wall {
    pub fn start(&self) -> Position {
        Position::new(self.x1, self.y1)
    }

    pub fn end(&self) -> Position {
        Position::new(self.x2, self.y2)
    }

    /// Whether the direct segment `a -> b` properly crosses this wall.
    pub fn crossed_by(&self, a: Position, b: Position) -> bool {
        geometry::segments_cross(a, b, self.start(), self.end())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FloorPlan {
    pub width: f64,
    pub height: f64,
    pub walls: Vec<Wall>,
}

impl FloorPlan {
    pub fn new(width: f64, height: f64, walls: Vec<Wall>) -> Result<Self> {
        let plan = Self {
            width,
            height,
            walls,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn contains(&self, p: Position) -> bool {
        p.x >= 0.0 && p.y >= 0.0 && p.x <= self.width && p.y <= self.height
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.width > 0.0 && self.width.is_finite()) {
            return Err(Error::config(format!("plan width must be > 0, got {}", self.width)));
        }
        if !(self.height > 0.0 && self.height.is_finite()) {
            return Err(Error::config(format!("plan height must be > 0, got {}", self.height)));
        }
        for (n, wall) in self.walls.iter().enumerate() {
            if !(self.contains(wall.start()) && self.contains(wall.end())) {
                return Err(Error::config(format!(
                    "wall {n} ({}, {}) -> ({}, {}) leaves the {}x{} plan",
                    wall.x1, wall.y1, wall.x2, wall.y2, self.width, self.height
                )));
            }
            if !(wall.atten_db >= 0.0 && wall.atten_db.is_finite()) {
                return Err(Error::config(format!(
                    "wall {n} attenuation must be >= 0 dB, got {}",
                    wall.atten_db
                )));
            }
        }
        Ok(())
    }

    /// Total attenuation of the walls crossed by the direct segment `a -> b`.
    pub fn wall_loss(&self, a: Position, b: Position) -> f64 {
        self.walls
            .iter()
            .filter(|w| w.crossed_by(a, b))
            .map(|w| w.atten_db)
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccessPoint {
    /// 1-based, contiguous over the environment's access points.
    pub id: usize,
    pub position: Position,
    pub tx_dbm: f64,
}

/// Floor plan, access points and the optional lattice inclusion mask.
#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    pub plan: FloorPlan,
    pub aps: Vec<AccessPoint>,
    /// `mask[row][col]` selects lattice point `(col * spacing, row * spacing)`.
    pub mask: Option<Vec<Vec<bool>>>,
}

impl Environment {
    pub fn new(plan: FloorPlan, aps: Vec<AccessPoint>, mask: Option<Vec<Vec<bool>>>) -> Result<Self> {
        let env = Self { plan, aps, mask };
        env.validate()?;
        Ok(env)
    }

    pub fn validate(&self) -> Result<()> {
        self.plan.validate()?;
        if self.aps.is_empty() {
            return Err(Error::config("environment needs at least one access point"));
        }
        for (n, ap) in self.aps.iter().enumerate() {
            if ap.id != n + 1 {
                return Err(Error::config(format!(
                    "access point ids must be contiguous from 1; position {n} has id {}",
                    ap.id
                )));
            }
            if !self.plan.contains(ap.position) {
                return Err(Error::config(format!(
                    "access point {} at ({}, {}) lies outside the plan",
                    ap.id, ap.position.x, ap.position.y
                )));
            }
            if !ap.tx_dbm.is_finite() {
                return Err(Error::config(format!("access point {} has non-finite power", ap.id)));
            }
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.aps.len()
    }

    pub fn grid(&self, spacing: f64) -> Result<GridSpec> {
        build_grid(&self.plan, spacing, self.mask.as_deref())
    }
}

/// Row-major lattice of grid points, optionally masked.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub spacing: f64,
    pub rows: usize,
    pub cols: usize,
    positions: Vec<Position>,
    /// (row, col) of every grid point.
    cells: Vec<(usize, usize)>,
    /// Lattice cell -> grid index.
    lookup: Vec<Option<usize>>,
}

impl GridSpec {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Position] {
        &self.positions
    }

    pub fn position(&self, i: usize) -> Position {
        self.positions[i]
    }

    pub fn cell(&self, i: usize) -> (usize, usize) {
        self.cells[i]
    }

    pub fn index_at(&self, row: usize, col: usize) -> Option<usize> {
        if row < self.rows && col < self.cols {
            self.lookup[row * self.cols + col]
        } else {
            None
        }
    }

    /// Grid points one lattice step away (4-connectivity).
    pub fn lattice_neighbors(&self, i: usize) -> Vec<usize> {
        let (r, c) = self.cells[i];
        let mut out = Vec::with_capacity(4);
        if r > 0 {
            out.extend(self.index_at(r - 1, c));
        }
        if c > 0 {
            out.extend(self.index_at(r, c - 1));
        }
        out.extend(self.index_at(r, c + 1));
        out.extend(self.index_at(r + 1, c));
        out
    }

    /// Map from exact position to grid index.
    pub fn index_map(&self) -> HashMap<(u64, u64), usize> {
        self.positions
            .iter()
            .enumerate()
            .map(|(i, p)| (p.key(), i))
            .collect()
    }
}

/// Lays a square lattice of the given spacing over the plan, starting at the
/// origin, keeping only cells selected by `mask` when one is given.
pub fn build_grid(plan: &FloorPlan, spacing: f64, mask: Option<&[Vec<bool>]>) -> Result<GridSpec> {
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(Error::config(format!("grid spacing must be > 0, got {spacing}")));
    }
    if spacing >= plan.width.min(plan.height) {
        return Err(Error::config(format!(
            "grid spacing {spacing} leaves no interior points in a {}x{} plan",
            plan.width, plan.height
        )));
    }
    let cols = (plan.width / spacing + 1e-9).floor() as usize + 1;
    let rows = (plan.height / spacing + 1e-9).floor() as usize + 1;
    if let Some(mask) = mask {
        if mask.len() != rows || mask.iter().any(|r| r.len() != cols) {
            return Err(Error::config(format!(
                "mask must have {rows} rows of {cols} flags for spacing {spacing}"
            )));
        }
    }

    let mut positions = Vec::new();
    let mut cells = Vec::new();
    let mut lookup = vec![None; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            if mask.is_some_and(|m| !m[r][c]) {
                continue;
            }
            lookup[r * cols + c] = Some(positions.len());
            positions.push(Position::new(c as f64 * spacing, r as f64 * spacing));
            cells.push((r, c));
        }
    }
    if positions.len() < 2 {
        return Err(Error::config(format!(
            "grid with spacing {spacing} has {} points, need at least 2",
            positions.len()
        )));
    }
    Ok(GridSpec {
        spacing,
        rows,
        cols,
        positions,
        cells,
        lookup,
    })
}

/// Extended plan coordinate of `p`: x and y alternate, starting with x,
/// until the vector has `k` elements.
pub fn extended_coordinate(p: Position, k: usize) -> Vec<f64> {
    (0..k).map(|j| if j % 2 == 0 { p.x } else { p.y }).collect()
}

/// Extended plan coordinates for every grid point.
///
/// For even `k` pairwise distances are `sqrt(k / 2)` times the planar ones.
/// For odd `k` the metric is `sqrt(ceil(k/2) dx^2 + floor(k/2) dy^2)`.
pub fn make_plan_source(grid: &GridSpec, k: usize) -> Result<Vec<Vec<f64>>> {
    if k < 2 {
        return Err(Error::config(format!("extended coordinates need K >= 2, got {k}")));
    }
    Ok(grid
        .positions()
        .iter()
        .map(|&p| extended_coordinate(p, k))
        .collect())
}

/// True iff grid points `i` and `j` must not be neighbors: the segment between
/// them properly crosses a wall flagged as dissociating.
pub fn dissociation_filter(grid: &GridSpec, plan: &FloorPlan, i: usize, j: usize) -> bool {
    let (a, b) = (grid.position(i), grid.position(j));
    plan.walls
        .iter()
        .any(|w| w.dissociating && w.crossed_by(a, b))
}
