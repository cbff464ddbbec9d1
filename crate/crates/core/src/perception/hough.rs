//! Probabilistic Hough segment extraction and collinear segment merging.
//!
//! Random pairs of occupied cells vote for the line through them in an
//! (angle, rho) accumulator. When a bin collects enough votes its carrier is
//! refined by a total-least-squares fit over nearby cells, the inliers are
//! walked along the carrier and split at gaps, and every run with enough
//! support becomes a segment whose cells are removed from further voting.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::geometry::{atan2, cos, round, sin, sqrt, Vec2};
use crate::rng::Substream;

use super::LineGrid;

/// Distances (`rho_resolution`, `max_gap`, `min_pair_distance`) are in cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HoughParams {
    pub min_support: usize,
    pub angle_bins: usize,
    pub rho_resolution: f64,
    pub max_gap: f64,
    /// Votes a bin needs before its carrier is examined.
    pub vote_threshold: u32,
    /// Cell pairs closer than this are not sampled.
    pub min_pair_distance: f64,
    /// Sampling budget, in draws per occupied cell.
    pub draws_per_cell: usize,
}

impl Default for HoughParams {
    fn default() -> Self {
        Self {
            min_support: 10,
            angle_bins: 180,
            rho_resolution: 1.0,
            max_gap: 3.0,
            vote_threshold: 3,
            min_pair_distance: 4.0,
            draws_per_cell: 60,
        }
    }
}

impl HoughParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.min_support < 2 {
            return Err(ConfigError::new("min_support", "must be >= 2"));
        }
        if self.angle_bins == 0 {
            return Err(ConfigError::new("angle_bins", "must be >= 1"));
        }
        if !self.rho_resolution.is_finite() || self.rho_resolution <= 0.0 {
            return Err(ConfigError::new("rho_resolution", "must be finite and > 0"));
        }
        if !self.max_gap.is_finite() || self.max_gap < 0.0 {
            return Err(ConfigError::new("max_gap", "must be finite and >= 0"));
        }
        if self.vote_threshold == 0 {
            return Err(ConfigError::new("vote_threshold", "must be >= 1"));
        }
        Ok(())
    }
}

/// A supported line segment in the grid's egocentric frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: Vec2,
    pub end: Vec2,
    pub support: usize,
    /// Inlier cells as `(col, row)`.
    pub cells: Vec<(usize, usize)>,
    /// Endpoints of every extracted segment folded into this one.
    pub merged_endpoints: Vec<Vec2>,
}

impl Segment {
    pub fn new(start: Vec2, end: Vec2, support: usize, cells: Vec<(usize, usize)>) -> Self {
        Self {
            start,
            end,
            support,
            cells,
            merged_endpoints: vec![start, end],
        }
    }

    pub fn direction(&self) -> Vec2 {
        (self.end - self.start).normalized()
    }

    pub fn length(&self) -> f64 {
        self.start.distance(self.end)
    }

    /// Direction angle folded into `[0, π)`.
    pub fn angle(&self) -> f64 {
        fold_angle((self.end - self.start).angle())
    }

    /// Perpendicular distance from `p` to the infinite carrier line.
    pub fn carrier_distance(&self, p: Vec2) -> f64 {
        (p - self.start).cross(self.direction()).abs()
    }
}

/// Folds an undirected line angle into `[0, π)`.
pub fn fold_angle(a: f64) -> f64 {
    let mut a = a % PI;
    if a < 0.0 {
        a += PI;
    }
    if a >= PI {
        a -= PI;
    }
    a
}

/// Smallest angle between two undirected lines, in `[0, π/2]`.
pub fn line_angle_between(a: f64, b: f64) -> f64 {
    let d = fold_angle(a - b);
    d.min(PI - d)
}

#[derive(Clone, Copy)]
struct Carrier {
    point: Vec2,
    dir: Vec2,
}

impl Carrier {
    fn offset(&self, p: Vec2) -> f64 {
        (p - self.point).cross(self.dir).abs()
    }

    fn along(&self, p: Vec2) -> f64 {
        (p - self.point).dot(self.dir)
    }
}

fn tls_fit(points: &[Vec2]) -> Option<Carrier> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let c = points.iter().fold(Vec2::ZERO, |acc, p| acc + *p) * (1.0 / n);
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for p in points {
        let d = *p - c;
        sxx += d.x * d.x;
        syy += d.y * d.y;
        sxy += d.x * d.y;
    }
    let angle = 0.5 * atan2(2.0 * sxy, sxx - syy);
    Some(Carrier {
        point: c,
        dir: Vec2::new(cos(angle), sin(angle)),
    })
}

/// Extracts line segments from `grid`. Every returned segment has at least
/// `min_support` inlier cells, all within `rho_resolution` cells of its
/// carrier, and no two consecutive inliers further apart than `max_gap`.
pub fn hough_segments(
    grid: &LineGrid,
    params: &HoughParams,
    rng: &mut Substream,
) -> Result<Vec<Segment>, ConfigError> {
    params.validate()?;
    let cells: Vec<(usize, usize)> = grid.occupied().collect();
    let points: Vec<Vec2> = cells
        .iter()
        .map(|&(c, r)| Vec2::new(c as f64 + 0.5, r as f64 + 0.5))
        .collect();
    let mut alive: Vec<usize> = (0..points.len()).collect();
    let mut out = Vec::new();
    if points.len() < params.min_support {
        return Ok(out);
    }

    let diag = sqrt((grid.cols * grid.cols + grid.rows * grid.rows) as f64);
    let rho_bins = (2.0 * diag / params.rho_resolution) as usize + 2;
    let mut acc = vec![0u32; params.angle_bins * rho_bins];
    let budget = params.draws_per_cell * points.len();

    for _ in 0..budget {
        if alive.len() < params.min_support {
            break;
        }
        let i = alive[rng.index(alive.len())];
        let j = alive[rng.index(alive.len())];
        let (p, q) = (points[i], points[j]);
        if p.distance(q) < params.min_pair_distance {
            continue;
        }
        let normal_angle = fold_angle((q - p).angle() + PI / 2.0);
        let normal = Vec2::new(cos(normal_angle), sin(normal_angle));
        let rho = p.dot(normal);
        let a_bin = ((normal_angle / PI * params.angle_bins as f64) as usize)
            .min(params.angle_bins - 1);
        let r_bin = round((rho + diag) / params.rho_resolution) as usize;
        let slot = a_bin * rho_bins + r_bin.min(rho_bins - 1);
        acc[slot] += 1;
        if acc[slot] < params.vote_threshold {
            continue;
        }

        let seed = Carrier {
            point: p,
            dir: (q - p).normalized(),
        };
        let found = extract_along(seed, &points, &alive, params);
        if found.is_empty() {
            acc[slot] = 0;
            continue;
        }
        let mut taken = vec![false; points.len()];
        for (carrier, run) in found {
            for &k in &run {
                taken[k] = true;
            }
            out.push(make_segment(grid, carrier, &run, &points, &cells));
        }
        alive.retain(|&k| !taken[k]);
        acc.iter_mut().for_each(|v| *v = 0);
    }
    Ok(out)
}

/// Refines a seed carrier against the alive cells and splits its inliers
/// into gap-free runs with enough support. Cells already claimed by earlier
/// segments bridge gaps, so a line crossing another one is not cut in two.
fn extract_along(
    seed: Carrier,
    points: &[Vec2],
    alive: &[usize],
    params: &HoughParams,
) -> Vec<(Carrier, Vec<usize>)> {
    let tol = params.rho_resolution;
    let support = |c: &Carrier| alive.iter().filter(|&&k| c.offset(points[k]) <= tol).count();
    let mut carrier = seed;
    let mut best = support(&carrier);
    // Wide bands absorb the quantization of the seed pair; a refit is only
    // kept when it gains support, which stops drift toward a nearby line.
    for widen in [2.0, 1.5, 1.0, 1.0, 1.0] {
        let near: Vec<Vec2> = alive
            .iter()
            .map(|&k| points[k])
            .filter(|p| carrier.offset(*p) <= tol * widen)
            .collect();
        let Some(fit) = tls_fit(&near) else { break };
        let s = support(&fit);
        if s >= best {
            carrier = fit;
            best = s;
        }
    }
    let mut is_alive = vec![false; points.len()];
    for &k in alive {
        is_alive[k] = true;
    }
    let mut inliers: Vec<(f64, usize)> = (0..points.len())
        .filter(|&k| carrier.offset(points[k]) <= tol)
        .map(|k| (carrier.along(points[k]), k))
        .collect();
    inliers.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut runs = Vec::new();
    let mut current: Vec<usize> = Vec::new();
    let mut last_t = f64::NEG_INFINITY;
    for (t, k) in inliers {
        if t - last_t > params.max_gap && !current.is_empty() {
            runs.push(core::mem::take(&mut current));
        }
        last_t = t;
        if is_alive[k] {
            current.push(k);
        }
    }
    runs.push(current);
    runs.into_iter()
        .filter(|r| r.len() >= params.min_support)
        .map(|r| (carrier, r))
        .collect()
}

fn make_segment(
    grid: &LineGrid,
    carrier: Carrier,
    run: &[usize],
    points: &[Vec2],
    cells: &[(usize, usize)],
) -> Segment {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &k in run {
        let t = carrier.along(points[k]);
        lo = lo.min(t);
        hi = hi.max(t);
    }
    let to_ego = |p: Vec2| grid.origin + p * grid.resolution;
    let start = to_ego(carrier.point + carrier.dir * lo);
    let end = to_ego(carrier.point + carrier.dir * hi);
    let mut run_cells: Vec<(usize, usize)> = run.iter().map(|&k| cells[k]).collect();
    run_cells.sort_unstable();
    Segment::new(start, end, run.len(), run_cells)
}

/// Tolerances for [`merge_segments`]; lengths in the segments' units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MergeTolerance {
    pub angle_tol: f64,
    pub gap_tol: f64,
    pub offset_tol: f64,
}

impl Default for MergeTolerance {
    fn default() -> Self {
        Self {
            angle_tol: 3.0_f64.to_radians(),
            gap_tol: 0.15,
            offset_tol: 0.05,
        }
    }
}

/// Repeatedly fuses near-collinear, near-adjacent segment pairs until no pair
/// qualifies. The fused segment keeps the longer member's carrier, so every
/// endpoint ever folded in stays within `offset_tol` of it.
pub fn merge_segments(segments: &[Segment], tol: &MergeTolerance) -> Vec<Segment> {
    let mut out: Vec<Segment> = segments.to_vec();
    'outer: loop {
        for i in 0..out.len() {
            for j in i + 1..out.len() {
                if let Some(merged) = try_merge(&out[i], &out[j], tol) {
                    out[i] = merged;
                    out.remove(j);
                    continue 'outer;
                }
            }
        }
        return out;
    }
}

fn try_merge(a: &Segment, b: &Segment, tol: &MergeTolerance) -> Option<Segment> {
    if line_angle_between(a.angle(), b.angle()) > tol.angle_tol {
        return None;
    }
    let base = if b.length() > a.length() { b } else { a };
    let carrier = Carrier {
        point: base.start,
        dir: base.direction(),
    };
    if carrier.dir == Vec2::ZERO {
        return None;
    }
    let all_close = a
        .merged_endpoints
        .iter()
        .chain(&b.merged_endpoints)
        .all(|p| carrier.offset(*p) <= tol.offset_tol);
    if !all_close {
        return None;
    }
    let span = |s: &Segment| {
        let (t0, t1) = (carrier.along(s.start), carrier.along(s.end));
        (t0.min(t1), t0.max(t1))
    };
    let (a0, a1) = span(a);
    let (b0, b1) = span(b);
    let gap = a0.max(b0) - a1.min(b1);
    if gap > tol.gap_tol {
        return None;
    }
    let lo = a0.min(b0);
    let hi = a1.max(b1);
    let mut cells = a.cells.clone();
    cells.extend_from_slice(&b.cells);
    cells.sort_unstable();
    cells.dedup();
    let mut merged_endpoints = a.merged_endpoints.clone();
    merged_endpoints.extend_from_slice(&b.merged_endpoints);
    Some(Segment {
        start: carrier.point + carrier.dir * lo,
        end: carrier.point + carrier.dir * hi,
        support: a.support + b.support,
        cells,
        merged_endpoints,
    })
}

/// Angle in degrees between two directions given as vectors, folded to
/// `[0, 90]`.
pub fn degrees_between(a: Vec2, b: Vec2) -> f64 {
    line_angle_between(a.angle(), b.angle()).to_degrees()
}
