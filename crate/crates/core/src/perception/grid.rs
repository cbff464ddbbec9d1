//! Binary line-paint occupancy grid in the robot frame.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::field::FieldSpec;
use crate::geometry::{point_segment_distance, Pose2D, Vec2};

use super::NoiseModel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    /// Meters per cell.
    pub resolution: f64,
    pub cols: usize,
    pub rows: usize,
    /// Egocentric position of the outer corner of cell (0, 0).
    pub origin: Vec2,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            resolution: 0.05,
            cols: 120,
            rows: 120,
            origin: Vec2::new(0.0, -3.0),
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !self.resolution.is_finite() || self.resolution <= 0.0 {
            return Err(ConfigError::new("resolution", "must be finite and > 0"));
        }
        if self.cols == 0 || self.rows == 0 {
            return Err(ConfigError::new("cols", "grid must have at least one cell"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineGrid {
    pub resolution: f64,
    pub origin: Vec2,
    pub cols: usize,
    pub rows: usize,
    /// Row-major, `cells[row * cols + col]`; 1 where line paint is visible.
    pub cells: Vec<u8>,
}

impl LineGrid {
    pub fn empty(spec: &GridSpec) -> Self {
        Self {
            resolution: spec.resolution,
            origin: spec.origin,
            cols: spec.cols,
            rows: spec.rows,
            cells: vec![0; spec.cols * spec.rows],
        }
    }

    /// A grid with unit resolution and its origin at (0, 0), so cell centers
    /// sit at half-integer coordinates.
    pub fn unit(cols: usize, rows: usize) -> Self {
        Self::empty(&GridSpec {
            resolution: 1.0,
            cols,
            rows,
            origin: Vec2::ZERO,
        })
    }

    pub fn get(&self, col: usize, row: usize) -> bool {
        self.cells[row * self.cols + col] != 0
    }

    pub fn set(&mut self, col: usize, row: usize, on: bool) {
        self.cells[row * self.cols + col] = on as u8;
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&c| c != 0).count()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Egocentric center of a cell.
    pub fn cell_center(&self, col: usize, row: usize) -> Vec2 {
        self.origin
            + Vec2::new(
                (col as f64 + 0.5) * self.resolution,
                (row as f64 + 0.5) * self.resolution,
            )
    }

    pub fn occupied(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.rows).flat_map(move |r| {
            (0..self.cols).filter_map(move |c| self.get(c, r).then_some((c, r)))
        })
    }

    /// Plain PGM (P2), top row first.
    pub fn to_pgm(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "P2\n{} {}\n1", self.cols, self.rows);
        for row in (0..self.rows).rev() {
            let line: Vec<&str> = (0..self.cols)
                .map(|c| if self.get(c, row) { "1" } else { "0" })
                .collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }

    /// Sets the cells of a digital straight line between two cells.
    pub fn draw_line(&mut self, from: (i64, i64), to: (i64, i64)) {
        let (mut x, mut y) = from;
        let dx = (to.0 - x).abs();
        let dy = -(to.1 - y).abs();
        let sx = if x < to.0 { 1 } else { -1 };
        let sy = if y < to.1 { 1 } else { -1 };
        let mut err = dx + dy;
        loop {
            if x >= 0 && y >= 0 && (x as usize) < self.cols && (y as usize) < self.rows {
                self.set(x as usize, y as usize, true);
            }
            if (x, y) == to {
                break;
            }
            let e2 = 2 * err;
            if e2 >= dy {
                err += dy;
                x += sx;
            }
            if e2 <= dx {
                err += dx;
                y += sy;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PaintedLine {
    Straight(Vec2, Vec2),
    Circle { center: Vec2, radius: f64 },
}

impl PaintedLine {
    fn distance(&self, p: Vec2) -> f64 {
        match *self {
            PaintedLine::Straight(a, b) => point_segment_distance(p, a, b),
            PaintedLine::Circle { center, radius } => (p.distance(center) - radius).abs(),
        }
    }
}

/// All painted field lines in the field frame.
pub fn painted_lines(field: &FieldSpec) -> Vec<PaintedLine> {
    let mut lines: Vec<PaintedLine> = field
        .line_segments()
        .into_iter()
        .map(|(a, b)| PaintedLine::Straight(a, b))
        .collect();
    lines.push(PaintedLine::Circle {
        center: Vec2::ZERO,
        radius: field.center_circle_radius,
    });
    lines
}

/// Rasterizes the line paint visible from `pose`.
pub fn render_line_grid(
    pose: &Pose2D,
    field: &FieldSpec,
    view: &NoiseModel,
    spec: &GridSpec,
) -> LineGrid {
    rasterize(pose, &painted_lines(field), field.line_width, view, spec)
}

/// Sets every visible cell whose center lies within half a line width (or
/// half a cell, whichever is larger) of some painted line.
pub fn rasterize(
    pose: &Pose2D,
    lines: &[PaintedLine],
    line_width: f64,
    view: &NoiseModel,
    spec: &GridSpec,
) -> LineGrid {
    let mut grid = LineGrid::empty(spec);
    if lines.is_empty() {
        return grid;
    }
    let reach = (line_width / 2.0).max(spec.resolution / 2.0);
    for row in 0..spec.rows {
        for col in 0..spec.cols {
            let ego = grid.cell_center(col, row);
            if !view.is_visible(ego) {
                continue;
            }
            let p = pose.ego_to_field(ego);
            if lines.iter().any(|l| l.distance(p) <= reach) {
                grid.set(col, row, true);
            }
        }
    }
    grid
}
