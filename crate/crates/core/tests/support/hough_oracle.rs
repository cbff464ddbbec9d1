//! Exhaustive reference line finder for occupancy grids, plus the planted
//! line generator and the matching rule used by the Hough tests.
//!
//! The oracle tries every pair of occupied cells as a carrier, keeps the one
//! with the most inliers, refits it by total least squares and removes its
//! inliers before looking for the next line.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use soccer_core::geometry::Vec2;
use soccer_core::perception::grid::LineGrid;
use soccer_core::perception::hough::Segment;

pub const GRID: usize = 40;
pub const INLIER_TOL: f64 = 1.0;
pub const MIN_SUPPORT: usize = 10;

#[derive(Debug, Clone)]
pub struct OracleLine {
    pub point: Vec2,
    /// Unit direction.
    pub dir: Vec2,
    pub cells: Vec<(usize, usize)>,
}

impl OracleLine {
    pub fn angle_deg_to(&self, dir: Vec2) -> f64 {
        let c = (self.dir.x * dir.x + self.dir.y * dir.y).abs() / dir.norm();
        c.min(1.0).acos().to_degrees()
    }

    pub fn offset(&self, p: Vec2) -> f64 {
        let d = p - self.point;
        (d.x * self.dir.y - d.y * self.dir.x).abs()
    }
}

fn center(cell: (usize, usize)) -> Vec2 {
    Vec2::new(cell.0 as f64 + 0.5, cell.1 as f64 + 0.5)
}

fn offset(point: Vec2, dir: Vec2, p: Vec2) -> f64 {
    let d = p - point;
    (d.x * dir.y - d.y * dir.x).abs()
}

/// Total least squares line through `pts`: centroid plus the principal axis
/// of the scatter matrix, found from the 2x2 eigenproblem.
fn tls(pts: &[Vec2]) -> (Vec2, Vec2) {
    let n = pts.len() as f64;
    let cx = pts.iter().map(|p| p.x).sum::<f64>() / n;
    let cy = pts.iter().map(|p| p.y).sum::<f64>() / n;
    let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
    for p in pts {
        let (dx, dy) = (p.x - cx, p.y - cy);
        a += dx * dx;
        b += dx * dy;
        c += dy * dy;
    }
    let lambda = 0.5 * (a + c) + (0.25 * (a - c) * (a - c) + b * b).sqrt();
    let v = if b.abs() > 1e-12 {
        Vec2::new(b, lambda - a)
    } else if a >= c {
        Vec2::new(1.0, 0.0)
    } else {
        Vec2::new(0.0, 1.0)
    };
    (Vec2::new(cx, cy), v * (1.0 / v.norm()))
}

pub fn oracle_lines(grid: &LineGrid) -> Vec<OracleLine> {
    let mut remaining: Vec<(usize, usize)> = grid.occupied().collect();
    let mut out = Vec::new();
    loop {
        let pts: Vec<Vec2> = remaining.iter().map(|&c| center(c)).collect();
        let mut best: Option<(usize, Vec2, Vec2)> = None;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                let d = pts[j] - pts[i];
                let len = d.norm();
                if len < 1.0 {
                    continue;
                }
                let dir = d * (1.0 / len);
                let support = pts.iter().filter(|p| offset(pts[i], dir, **p) <= INLIER_TOL).count();
                if best.is_none_or(|(s, _, _)| support > s) {
                    best = Some((support, pts[i], dir));
                }
            }
        }
        let Some((support, point, dir)) = best else { break };
        if support < MIN_SUPPORT {
            break;
        }
        let inliers: Vec<Vec2> = pts
            .iter()
            .copied()
            .filter(|p| offset(point, dir, *p) <= INLIER_TOL)
            .collect();
        let (point, dir) = tls(&inliers);
        let (cells, rest): (Vec<_>, Vec<_>) = remaining
            .iter()
            .partition(|&&c| offset(point, dir, center(c)) <= INLIER_TOL);
        if cells.len() < MIN_SUPPORT {
            break;
        }
        remaining = rest;
        out.push(OracleLine { point, dir, cells });
    }
    out
}

/// A grid with 1 to 3 digital lines, each at least 15 cells long.
pub fn planted_grid(seed: u64) -> LineGrid {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut grid = LineGrid::unit(GRID, GRID);
    let n = rng.random_range(1..=3);
    let mut drawn = 0;
    while drawn < n {
        let a = (rng.random_range(0..GRID as i64), rng.random_range(0..GRID as i64));
        let b = (rng.random_range(0..GRID as i64), rng.random_range(0..GRID as i64));
        let len = (((a.0 - b.0).pow(2) + (a.1 - b.1).pow(2)) as f64).sqrt();
        if len < 15.0 {
            continue;
        }
        grid.draw_line(a, b);
        drawn += 1;
    }
    grid
}

/// Whether the extracted segments reproduce every oracle carrier: some
/// segments within `angle_tol_deg` of it and lying on it, whose spans cover at
/// least `coverage` of its inlier cells. Coverage is geometric, a cell near a
/// crossing counts even when the other line's segment claimed it.
pub fn segments_match(oracle: &[OracleLine], segments: &[Segment], angle_tol_deg: f64, coverage: f64) -> bool {
    oracle.iter().all(|line| {
        let matching: Vec<&Segment> = segments
            .iter()
            .filter(|s| {
                let dir = s.end - s.start;
                dir.norm() > 0.0
                    && line.angle_deg_to(dir) <= angle_tol_deg
                    && line.offset((s.start + s.end) * 0.5) <= 2.0 * INLIER_TOL
            })
            .collect();
        let hit = line
            .cells
            .iter()
            .filter(|&&c| {
                let p = center(c);
                matching.iter().any(|s| {
                    let d = s.end - s.start;
                    let len = d.norm();
                    let u = d * (1.0 / len);
                    let t = (p - s.start).x * u.x + (p - s.start).y * u.y;
                    let off = ((p - s.start).x * u.y - (p - s.start).y * u.x).abs();
                    off <= INLIER_TOL + 0.5 && t >= -1.0 && t <= len + 1.0
                })
            })
            .count();
        hit as f64 >= coverage * line.cells.len() as f64
    })
}
