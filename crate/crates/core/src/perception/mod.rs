//! Synthetic egocentric perception.
//!
//! [`observe`] turns ground truth into one noisy [`Observation`] frame: the
//! ball, point landmarks, visible portions of field lines and obstacle
//! candidates, each culled to the camera cone and range. The raster line
//! pipeline ([`grid`], [`hough`]) and obstacle tracking ([`obstacles`]) live in
//! submodules.

pub mod grid;
pub mod hough;
pub mod obstacles;

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, Result};
use crate::field::{Landmark, LandmarkKind, LandmarkShape};
use crate::geometry::{exp, normalize_angle, Vec2};
use crate::kick_timing::BallMeasurement;
use crate::rng::{substream, Module, Substream};
use crate::sim::WorldState;

pub use grid::{render_line_grid, GridSpec, LineGrid};
pub use hough::{hough_segments, merge_segments, HoughParams, MergeTolerance, Segment};
pub use obstacles::{
    classify_signature, expected_obstacle_size, update_clusters, ApparentSize, ClusterParams,
    Detection, HeightClass, ObstacleCluster, ObstacleLabel,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseModel {
    /// Full opening angle of the camera cone, radians.
    pub fov: f64,
    pub max_range: f64,
    /// Radial error standard deviation per meter of distance.
    pub range_noise_coeff: f64,
    pub bearing_noise_std: f64,
    pub false_negative_prob: f64,
    /// Ball detection confidence decays as `exp(-d / ball_confidence_range)`.
    pub ball_confidence_range: f64,
    /// Probability that a ball detection carries a spurious low confidence.
    pub ball_low_confidence_prob: f64,
    /// Standard deviation of the perceived direction of a line, radians.
    pub line_angle_noise_std: f64,
    /// Height of robots and obstacles as seen by the size gate, meters.
    pub obstacle_height: f64,
    /// Relative noise on apparent obstacle size.
    pub size_noise: f64,
    /// Per-bin noise added to observed color histograms before renormalizing.
    pub signature_noise: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            fov: 2.618,
            max_range: 6.0,
            range_noise_coeff: 0.02,
            bearing_noise_std: 0.01,
            false_negative_prob: 0.05,
            ball_confidence_range: 8.0,
            ball_low_confidence_prob: 0.05,
            line_angle_noise_std: 0.01,
            obstacle_height: 0.9,
            size_noise: 0.05,
            signature_noise: 0.01,
        }
    }
}

impl NoiseModel {
    /// Noise-free, loss-free sensing with the same cone and range.
    pub fn exact(&self) -> Self {
        Self {
            range_noise_coeff: 0.0,
            bearing_noise_std: 0.0,
            false_negative_prob: 0.0,
            ball_low_confidence_prob: 0.0,
            line_angle_noise_std: 0.0,
            size_noise: 0.0,
            signature_noise: 0.0,
            ..*self
        }
    }

    pub fn validate(&self) -> core::result::Result<(), ConfigError> {
        if !(self.fov > 0.0 && self.fov <= core::f64::consts::TAU) {
            return Err(ConfigError::new("fov", "must lie in (0, 2π]"));
        }
        if !self.max_range.is_finite() || self.max_range <= 0.0 {
            return Err(ConfigError::new("max_range", "must be finite and > 0"));
        }
        let nonneg = [
            ("range_noise_coeff", self.range_noise_coeff),
            ("bearing_noise_std", self.bearing_noise_std),
            ("line_angle_noise_std", self.line_angle_noise_std),
            ("size_noise", self.size_noise),
            ("signature_noise", self.signature_noise),
        ];
        for (key, v) in nonneg {
            if !v.is_finite() || v < 0.0 {
                return Err(ConfigError::new(key, "must be finite and >= 0"));
            }
        }
        for (key, p) in [
            ("false_negative_prob", self.false_negative_prob),
            ("ball_low_confidence_prob", self.ball_low_confidence_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(ConfigError::new(key, "must lie in [0, 1]"));
            }
        }
        if !self.ball_confidence_range.is_finite() || self.ball_confidence_range <= 0.0 {
            return Err(ConfigError::new("ball_confidence_range", "must be finite and > 0"));
        }
        if !self.obstacle_height.is_finite() || self.obstacle_height <= 0.0 {
            return Err(ConfigError::new("obstacle_height", "must be finite and > 0"));
        }
        Ok(())
    }

    /// Whether an egocentric point lies inside the camera cone and range.
    pub fn is_visible(&self, p: Vec2) -> bool {
        let d = p.norm();
        d <= self.max_range && d > 0.0 && p.angle().abs() <= self.fov / 2.0
    }

    /// Applies radial (∝ distance) and bearing noise to an egocentric point.
    pub fn perturb(&self, p: Vec2, rng: &mut Substream) -> Vec2 {
        let d = p.norm();
        let r = d + rng.gaussian(self.range_noise_coeff * d);
        let b = p.angle() + rng.gaussian(self.bearing_noise_std);
        Vec2::from_polar(r.max(0.0), b)
    }
}

/// Normalized color histogram standing in for an obstacle's appearance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ColorSignature {
    pub histogram: Vec<f64>,
}

pub const SIGNATURE_BINS: usize = 8;

impl ColorSignature {
    /// Normalizes `weights`; fails if any weight is negative or all are zero.
    pub fn new(weights: Vec<f64>) -> core::result::Result<Self, ConfigError> {
        if weights.is_empty() || weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(ConfigError::new(
                "histogram",
                "weights must be finite, nonnegative and nonempty",
            ));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(ConfigError::new("histogram", "weights must not all be zero"));
        }
        Ok(Self {
            histogram: weights.into_iter().map(|w| w / total).collect(),
        })
    }

    fn fixed(weights: [f64; SIGNATURE_BINS]) -> Self {
        Self::new(weights.to_vec()).expect("static weights are valid")
    }

    pub fn uniform(bins: usize) -> Self {
        Self {
            histogram: vec![1.0 / bins as f64; bins],
        }
    }

    pub fn teammate_default() -> Self {
        Self::fixed([0.05, 0.05, 0.5, 0.25, 0.05, 0.04, 0.03, 0.03])
    }

    pub fn rival_default() -> Self {
        Self::fixed([0.5, 0.25, 0.05, 0.05, 0.05, 0.04, 0.03, 0.03])
    }

    pub fn referee_default() -> Self {
        Self::fixed([0.03, 0.03, 0.04, 0.05, 0.05, 0.05, 0.25, 0.5])
    }

    pub fn is_normalized(&self) -> bool {
        let total: f64 = self.histogram.iter().sum();
        (total - 1.0).abs() < 1e-9 && self.histogram.iter().all(|w| *w >= 0.0)
    }

    /// L1 distance, in `[0, 2]` for normalized histograms of equal length.
    pub fn l1_distance(&self, other: &ColorSignature) -> f64 {
        self.histogram
            .iter()
            .zip(&other.histogram)
            .map(|(a, b)| (a - b).abs())
            .sum()
    }

    fn perturbed(&self, std: f64, rng: &mut Substream) -> ColorSignature {
        if std == 0.0 {
            return self.clone();
        }
        let weights: Vec<f64> = self
            .histogram
            .iter()
            .map(|w| (w + rng.gaussian(std)).max(0.0))
            .collect();
        ColorSignature::new(weights).unwrap_or_else(|_| self.clone())
    }
}

/// Signatures the perception model paints onto robots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SignatureModels {
    pub teammate: ColorSignature,
    pub rival: ColorSignature,
    pub referee: ColorSignature,
}

impl Default for SignatureModels {
    fn default() -> Self {
        Self {
            teammate: ColorSignature::teammate_default(),
            rival: ColorSignature::rival_default(),
            referee: ColorSignature::referee_default(),
        }
    }
}

impl SignatureModels {
    pub fn as_map(&self) -> alloc::collections::BTreeMap<ObstacleLabel, ColorSignature> {
        [
            (ObstacleLabel::Teammate, self.teammate.clone()),
            (ObstacleLabel::Rival, self.rival.clone()),
            (ObstacleLabel::Referee, self.referee.clone()),
        ]
        .into_iter()
        .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LandmarkSighting {
    pub kind: LandmarkKind,
    /// Egocentric position; the midpoint of the visible portion for lines.
    pub position: Vec2,
    /// Egocentric endpoints of the visible portion, lines only.
    pub segment: Option<(Vec2, Vec2)>,
    pub confidence: f64,
}

impl LandmarkSighting {
    /// Direction of a line sighting in the robot frame, modulo π.
    pub fn direction(&self) -> Option<f64> {
        self.segment.map(|(a, b)| (b - a).angle())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObstacleCandidate {
    pub position: Vec2,
    pub apparent_size: f64,
    pub signature: ColorSignature,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Observation {
    pub stamp: f64,
    pub ball: Option<BallMeasurement>,
    pub landmarks: Vec<LandmarkSighting>,
    pub obstacle_candidates: Vec<ObstacleCandidate>,
}

impl Observation {
    pub fn empty(stamp: f64) -> Self {
        Self {
            stamp,
            ..Self::default()
        }
    }

    /// Every egocentric position carried by the frame.
    pub fn positions(&self) -> impl Iterator<Item = Vec2> + '_ {
        let ball = self.ball.iter().map(|b| b.r);
        let landmarks = self.landmarks.iter().flat_map(|l| {
            let ends = l.segment.map(|(a, b)| [a, b]);
            core::iter::once(l.position).chain(ends.into_iter().flatten())
        });
        let obstacles = self.obstacle_candidates.iter().map(|o| o.position);
        ball.chain(landmarks).chain(obstacles)
    }
}

/// Produces robot `robot_id`'s observation of `world`. Draws come from the
/// `(world.seed, Perception, world.step_index, robot_id)` substream.
pub fn observe(
    world: &WorldState,
    robot_id: u32,
    noise: &NoiseModel,
    catalog: &[Landmark],
    signatures: &SignatureModels,
) -> Result<Observation> {
    let robot = world.robot(robot_id)?;
    let pose = robot.pose;
    let mut rng = substream(world.seed, Module::Perception, world.step_index, robot_id as u64);
    let mut obs = Observation::empty(world.time);

    let ball_ego = pose.field_to_ego(world.ball.position);
    if noise.is_visible(ball_ego) && !rng.chance(noise.false_negative_prob) {
        let r = noise.perturb(ball_ego, &mut rng);
        let mut p = exp(-ball_ego.norm() / noise.ball_confidence_range);
        if rng.chance(noise.ball_low_confidence_prob) {
            p *= rng.uniform() * 0.5;
        }
        if noise.is_visible(r) {
            obs.ball = Some(BallMeasurement {
                p: p.clamp(0.0, 1.0),
                r,
                t: world.time,
            });
        }
    }

    for landmark in catalog {
        match landmark.shape {
            LandmarkShape::Point(p) => {
                let ego = pose.field_to_ego(p);
                if !noise.is_visible(ego) || rng.chance(noise.false_negative_prob) {
                    continue;
                }
                let noisy = noise.perturb(ego, &mut rng);
                if noise.is_visible(noisy) {
                    obs.landmarks.push(LandmarkSighting {
                        kind: landmark.kind,
                        position: noisy,
                        segment: None,
                        confidence: 1.0 - 0.5 * ego.norm() / noise.max_range,
                    });
                }
            }
            LandmarkShape::Segment(a, b) => {
                let (a, b) = (pose.field_to_ego(a), pose.field_to_ego(b));
                let Some((va, vb)) = clip_to_view(a, b, noise) else {
                    continue;
                };
                if rng.chance(noise.false_negative_prob) {
                    continue;
                }
                if let Some(sighting) = perceive_line(va, vb, noise, &mut rng) {
                    obs.landmarks.push(sighting);
                }
            }
        }
    }

    let height = noise.obstacle_height;
    let others = world
        .robots
        .iter()
        .filter(|r| r.id != robot_id)
        .map(|r| {
            let sig = if r.team == robot.team {
                &signatures.teammate
            } else {
                &signatures.rival
            };
            (r.pose.position(), sig)
        });
    let statics = world.obstacles.iter().map(|o| (o.position, &o.signature));
    for (position, signature) in others.chain(statics) {
        let ego = pose.field_to_ego(position);
        if !noise.is_visible(ego) || rng.chance(noise.false_negative_prob) {
            continue;
        }
        let noisy = noise.perturb(ego, &mut rng);
        if !noise.is_visible(noisy) {
            continue;
        }
        let size = height / ego.norm() * (1.0 + rng.gaussian(noise.size_noise));
        obs.obstacle_candidates.push(ObstacleCandidate {
            position: noisy,
            apparent_size: size.max(0.0),
            signature: signature.perturbed(noise.signature_noise, &mut rng),
        });
    }
    Ok(obs)
}

fn perceive_line(
    a: Vec2,
    b: Vec2,
    noise: &NoiseModel,
    rng: &mut Substream,
) -> Option<LandmarkSighting> {
    let mid = (a + b) * 0.5;
    let half = (b - a) * 0.5;
    let noisy_mid = noise.perturb(mid, rng);
    let half = half.rotated(rng.gaussian(noise.line_angle_noise_std));
    let (na, nb) = clip_to_view(noisy_mid - half, noisy_mid + half, noise)?;
    if na.distance(nb) < 1e-6 {
        return None;
    }
    Some(LandmarkSighting {
        kind: LandmarkKind::LineSegment,
        position: (na + nb) * 0.5,
        segment: Some((na, nb)),
        confidence: 1.0 - 0.5 * mid.norm() / noise.max_range,
    })
}

/// Longest sub-segment of `a→b` inside the camera cone and range.
pub fn clip_to_view(a: Vec2, b: Vec2, noise: &NoiseModel) -> Option<(Vec2, Vec2)> {
    let d = b - a;
    let mut cuts: Vec<f64> = vec![0.0, 1.0];
    // Range circle.
    let qa = d.norm_squared();
    if qa > 0.0 {
        let qb = 2.0 * a.dot(d);
        let qc = a.norm_squared() - noise.max_range * noise.max_range;
        let disc = qb * qb - 4.0 * qa * qc;
        if disc >= 0.0 {
            let s = crate::geometry::sqrt(disc);
            cuts.push((-qb - s) / (2.0 * qa));
            cuts.push((-qb + s) / (2.0 * qa));
        }
    }
    // The two cone edge rays.
    for edge in [noise.fov / 2.0, -noise.fov / 2.0] {
        let dir = Vec2::from_polar(1.0, edge);
        let denom = d.cross(dir);
        if denom.abs() > 1e-15 {
            cuts.push(-a.cross(dir) / denom);
        }
    }
    cuts.retain(|t| (0.0..=1.0).contains(t));
    cuts.sort_by(f64::total_cmp);

    let mut best: Option<(f64, f64)> = None;
    let mut run: Option<(f64, f64)> = None;
    for w in cuts.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        if t1 - t0 < 1e-12 {
            continue;
        }
        let visible = noise.is_visible(a + d * ((t0 + t1) / 2.0));
        run = match (visible, run) {
            (true, Some((s, _))) => Some((s, t1)),
            (true, None) => Some((t0, t1)),
            (false, r) => {
                if let Some(r) = r {
                    best = longer(best, r);
                }
                None
            }
        };
    }
    if let Some(r) = run {
        best = longer(best, r);
    }
    best.map(|(t0, t1)| {
        // Pull endpoints a hair inward so they test as visible.
        let shrink = (t1 - t0) * 1e-9;
        (a + d * (t0 + shrink), a + d * (t1 - shrink))
    })
}

fn longer(best: Option<(f64, f64)>, cand: (f64, f64)) -> Option<(f64, f64)> {
    match best {
        Some(b) if b.1 - b.0 >= cand.1 - cand.0 => Some(b),
        _ => Some(cand),
    }
}

/// Bearing of an egocentric point, for FOV checks on logged data.
pub fn bearing(p: Vec2) -> f64 {
    normalize_angle(p.angle())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{landmark_catalog, FieldSpec};
    use crate::geometry::Pose2D;
    use crate::sim::{Robot, Team, VelocityCommand};

    fn world_with_ball(ball: Vec2) -> WorldState {
        let mut w = WorldState::new(FieldSpec::default(), 11);
        w.robots.push(Robot {
            id: 0,
            team: Team::Home,
            pose: Pose2D::new(0.0, 0.0, 0.0),
            command: VelocityCommand::stop(),
            radius: 0.12,
        });
        w.ball.position = ball;
        w
    }

    fn zero_noise() -> NoiseModel {
        NoiseModel::default().exact()
    }

    #[test]
    fn exact_ball_dead_ahead() {
        let w = world_with_ball(Vec2::new(2.0, 0.0));
        let obs = observe(&w, 0, &zero_noise(), &[], &SignatureModels::default()).unwrap();
        let ball = obs.ball.unwrap();
        assert!(ball.r.distance(Vec2::new(2.0, 0.0)) < 1e-12);
    }

    #[test]
    fn ball_behind_is_absent() {
        let w = world_with_ball(Vec2::new(-2.0, 0.0));
        let obs = observe(&w, 0, &zero_noise(), &[], &SignatureModels::default()).unwrap();
        assert!(obs.ball.is_none());
    }

    #[test]
    fn unknown_robot_is_an_error() {
        let w = world_with_ball(Vec2::new(2.0, 0.0));
        assert!(observe(&w, 9, &zero_noise(), &[], &SignatureModels::default()).is_err());
    }

    #[test]
    fn exact_landmarks_match_truth() {
        let field = FieldSpec::default();
        let catalog = landmark_catalog(&field).unwrap();
        let mut w = world_with_ball(Vec2::new(1.0, 0.5));
        w.robots[0].pose = Pose2D::new(-1.0, 0.3, 0.2);
        let obs = observe(&w, 0, &zero_noise(), &catalog, &SignatureModels::default()).unwrap();
        let pose = w.robots[0].pose;
        let mut points = 0;
        for s in &obs.landmarks {
            let f = pose.ego_to_field(s.position);
            match s.segment {
                None => {
                    points += 1;
                    assert!(catalog
                        .iter()
                        .any(|l| l.kind == s.kind && l.position().distance(f) < 1e-9));
                }
                Some((a, b)) => {
                    let (fa, fb) = (pose.ego_to_field(a), pose.ego_to_field(b));
                    assert!(catalog.iter().any(|l| l.segment().is_some_and(|(la, lb)| {
                        crate::geometry::point_segment_distance(fa, la, lb) < 1e-9
                            && crate::geometry::point_segment_distance(fb, la, lb) < 1e-9
                    })));
                }
            }
        }
        assert!(points > 3);
        for p in obs.positions() {
            assert!(zero_noise().is_visible(p));
        }
    }

    #[test]
    fn clip_keeps_visible_part() {
        let noise = zero_noise();
        let (a, b) = clip_to_view(Vec2::new(1.0, -10.0), Vec2::new(1.0, 10.0), &noise).unwrap();
        let half = noise.fov / 2.0;
        let edge_y = crate::geometry::sin(half) / crate::geometry::cos(half);
        assert!((a.y + edge_y).abs() < 1e-6 && (b.y - edge_y).abs() < 1e-6);
        assert!(clip_to_view(Vec2::new(-1.0, -1.0), Vec2::new(-1.0, 1.0), &noise).is_none());
    }
}
