//! Compassless global localization.
//!
//! Heading comes only from the integrated gyro. Four pose hypotheses are
//! seeded from the legal start poses, each with its own reference offset, so
//! `theta = reference_offset + yaw_integrated` for every hypothesis at every
//! instant. Landmark sightings score the hypotheses and nudge their positions;
//! the bank locks once one hypothesis leads by a margin and a goal post or the
//! center circle confirms it, or when the convergence window times out.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, Error, Result};
use crate::field::{Landmark, LandmarkKind, LandmarkShape, StartPose, StartPoseLabel};
use crate::geometry::{angle_diff, closest_point_on_segment, exp, Pose2D, Vec2};
use crate::perception::hough::line_angle_between;
use crate::perception::{LandmarkSighting, Observation};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LocalizationParams {
    /// Required lead of the best accumulated score over the runner-up.
    pub margin: f64,
    pub confirm_distance: f64,
    pub confirm_bearing: f64,
    pub timeout: f64,
    /// Point residual standard deviation: `sigma_floor + sigma_per_meter * d`.
    pub sigma_floor: f64,
    pub sigma_per_meter: f64,
    /// Line direction residual standard deviation, radians.
    pub sigma_angle: f64,
    /// Normalized residuals are clamped at this many standard deviations.
    pub gate: f64,
    /// Tikhonov term of the position correction, in units of 1/m².
    pub damping: f64,
    /// Fraction of the least-squares correction applied per frame.
    pub nudge_gain: f64,
    /// Sensor model: constant gyro rate bias, rad/s.
    pub gyro_bias: f64,
    pub gyro_noise_std: f64,
    /// Sensor model: odometry error standard deviation per meter walked.
    pub odometry_noise_coeff: f64,
}

impl Default for LocalizationParams {
    fn default() -> Self {
        Self {
            margin: 5.0,
            confirm_distance: 0.5,
            confirm_bearing: 0.2,
            timeout: 10.0,
            sigma_floor: 0.1,
            sigma_per_meter: 0.05,
            sigma_angle: 0.05,
            gate: 3.0,
            damping: 20.0,
            nudge_gain: 0.5,
            gyro_bias: 0.002,
            gyro_noise_std: 0.005,
            odometry_noise_coeff: 0.05,
        }
    }
}

impl LocalizationParams {
    pub fn validate(&self) -> core::result::Result<(), ConfigError> {
        let positive = [
            ("margin", self.margin),
            ("confirm_distance", self.confirm_distance),
            ("confirm_bearing", self.confirm_bearing),
            ("timeout", self.timeout),
            ("sigma_floor", self.sigma_floor),
            ("sigma_angle", self.sigma_angle),
            ("gate", self.gate),
        ];
        for (key, v) in positive {
            if !v.is_finite() || v <= 0.0 {
                return Err(ConfigError::new(key, "must be finite and > 0"));
            }
        }
        let nonneg = [
            ("sigma_per_meter", self.sigma_per_meter),
            ("damping", self.damping),
            ("gyro_noise_std", self.gyro_noise_std),
            ("odometry_noise_coeff", self.odometry_noise_coeff),
        ];
        for (key, v) in nonneg {
            if !v.is_finite() || v < 0.0 {
                return Err(ConfigError::new(key, "must be finite and >= 0"));
            }
        }
        if !self.gyro_bias.is_finite() {
            return Err(ConfigError::new("gyro_bias", "must be finite"));
        }
        if !(self.nudge_gain >= 0.0 && self.nudge_gain <= 1.0) {
            return Err(ConfigError::new("nudge_gain", "must lie in [0, 1]"));
        }
        Ok(())
    }

    fn sigma_point(&self, distance: f64) -> f64 {
        self.sigma_floor + self.sigma_per_meter * distance
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GyroState {
    pub yaw_integrated: f64,
    /// Rate bias the simulator adds to the true yaw rate.
    pub bias: f64,
    /// Value subtracted from `yaw_integrated` when the bank was initialized.
    pub reference_offset: f64,
}

impl GyroState {
    pub fn new(bias: f64) -> Self {
        Self {
            bias,
            ..Self::default()
        }
    }

    /// Sensor model: what the gyro reports for a true yaw rate.
    pub fn measure(&self, true_omega: f64, noise: f64) -> f64 {
        true_omega + self.bias + noise
    }
}

pub fn integrate_gyro(g: GyroState, omega_measured: f64, dt: f64) -> GyroState {
    GyroState {
        yaw_integrated: g.yaw_integrated + omega_measured * dt,
        ..g
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub pose: Pose2D,
    pub score: f64,
    pub start_label: StartPoseLabel,
    pub alive: bool,
    /// Heading of this hypothesis when the integrated yaw reads zero.
    pub reference_offset: f64,
    pub observations: u64,
    /// Log-likelihood added by the most recent frame.
    pub last_frame_score: f64,
    pub last_frame_sightings: usize,
}

impl Hypothesis {
    pub fn slaved_theta(&self, gyro: &GyroState) -> f64 {
        Pose2D::new(0.0, 0.0, self.reference_offset + gyro.yaw_integrated).theta
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BankMode {
    Converging,
    Locked,
}

impl BankMode {
    pub fn name(self) -> &'static str {
        match self {
            BankMode::Converging => "converging",
            BankMode::Locked => "locked",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LockInfo {
    pub index: usize,
    pub label: StartPoseLabel,
    pub at: f64,
    /// False when the lock was forced by the timeout.
    pub confirmed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisBank {
    pub hypotheses: Vec<Hypothesis>,
    pub mode: BankMode,
    pub started_at: f64,
    pub timeout: f64,
    pub best: Option<usize>,
    pub lock: Option<LockInfo>,
}

/// Four fresh hypotheses at the given start poses, zero scores, converging.
pub fn init_bank(
    start_poses: &[StartPose],
    gyro: &GyroState,
    now: f64,
    timeout: f64,
) -> core::result::Result<HypothesisBank, ConfigError> {
    if start_poses.len() != 4 {
        return Err(ConfigError::new("start_poses", "exactly four start poses are required"));
    }
    let hypotheses = start_poses
        .iter()
        .map(|sp| {
            let mut h = Hypothesis {
                pose: sp.pose,
                score: 0.0,
                start_label: sp.label,
                alive: true,
                reference_offset: sp.pose.theta - gyro.yaw_integrated,
                observations: 0,
                last_frame_score: 0.0,
                last_frame_sightings: 0,
            };
            h.pose.theta = h.slaved_theta(gyro);
            h
        })
        .collect();
    Ok(HypothesisBank {
        hypotheses,
        mode: BankMode::Converging,
        started_at: now,
        timeout,
        best: None,
        lock: None,
    })
}

/// Re-initialization after a restart: the robot re-enters from the sideline,
/// so only the two sideline hypotheses are alive.
pub fn reinit_from_sideline(
    start_poses: &[StartPose],
    gyro: &GyroState,
    now: f64,
    timeout: f64,
) -> core::result::Result<HypothesisBank, ConfigError> {
    let mut bank = init_bank(start_poses, gyro, now, timeout)?;
    for h in &mut bank.hypotheses {
        h.alive = matches!(
            h.start_label,
            StartPoseLabel::SidelineLeft | StartPoseLabel::SidelineRight
        );
    }
    Ok(bank)
}

/// A bank already locked to a known pose, for drills that skip the
/// start-pose classification.
pub fn known_pose_bank(
    start_poses: &[StartPose],
    pose: Pose2D,
    gyro: &GyroState,
    now: f64,
) -> core::result::Result<HypothesisBank, ConfigError> {
    let mut seeded: Vec<StartPose> = start_poses.to_vec();
    if let Some(first) = seeded.first_mut() {
        first.pose = pose;
    }
    let mut bank = init_bank(&seeded, gyro, now, f64::INFINITY)?;
    bank.lock_to(0, now, true);
    Ok(bank)
}

impl HypothesisBank {
    pub fn alive(&self) -> impl Iterator<Item = (usize, &Hypothesis)> {
        self.hypotheses.iter().enumerate().filter(|(_, h)| h.alive)
    }

    /// Alive hypothesis with the highest score; ties go to the lower index.
    pub fn argmax(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, h) in self.alive() {
            if best.is_none_or(|(_, s)| h.score > s) {
                best = Some((i, h.score));
            }
        }
        best.map(|(i, _)| i)
    }

    /// Dead-reckons every alive hypothesis by an egocentric displacement and
    /// re-slaves its heading to the gyro.
    pub fn predict(&mut self, odometry_delta: Vec2, gyro: &GyroState) {
        for h in self.hypotheses.iter_mut().filter(|h| h.alive) {
            let p = h.pose.position() + odometry_delta.rotated(h.pose.theta);
            h.pose = Pose2D::new(p.x, p.y, h.slaved_theta(gyro));
        }
    }

    /// Scores every alive hypothesis against one observation frame and nudges
    /// its position toward the associated landmarks.
    pub fn correct(&mut self, obs: &Observation, catalog: &[Landmark], params: &LocalizationParams) {
        for h in self.hypotheses.iter_mut().filter(|h| h.alive) {
            correct_one(h, obs, catalog, params);
        }
    }

    pub fn select_best(
        &mut self,
        now: f64,
        history: &[Observation],
        catalog: &[Landmark],
        params: &LocalizationParams,
    ) {
        if self.mode != BankMode::Converging {
            return;
        }
        let Some(best) = self.argmax() else {
            return;
        };
        self.best = Some(best);
        let runner_up = self
            .alive()
            .filter(|&(i, _)| i != best)
            .map(|(_, h)| h.score)
            .fold(f64::NEG_INFINITY, f64::max);
        let lead = self.hypotheses[best].score - runner_up;
        if lead > params.margin && confirms(&self.hypotheses[best].pose, history, catalog, params) {
            self.lock_to(best, now, true);
        } else if now - self.started_at > self.timeout {
            self.lock_to(best, now, false);
        }
    }

    fn lock_to(&mut self, index: usize, now: f64, confirmed: bool) {
        for (i, h) in self.hypotheses.iter_mut().enumerate() {
            h.alive = i == index;
        }
        self.mode = BankMode::Locked;
        self.best = Some(index);
        self.lock = Some(LockInfo {
            index,
            label: self.hypotheses[index].start_label,
            at: now,
            confirmed,
        });
    }

    pub fn locked_at(&self) -> Option<f64> {
        self.lock.map(|l| l.at)
    }
}

pub fn predict(bank: &HypothesisBank, odometry_delta: Vec2, gyro: &GyroState) -> HypothesisBank {
    let mut out = bank.clone();
    out.predict(odometry_delta, gyro);
    out
}

pub fn correct(
    bank: &HypothesisBank,
    obs: &Observation,
    catalog: &[Landmark],
    params: &LocalizationParams,
) -> HypothesisBank {
    let mut out = bank.clone();
    out.correct(obs, catalog, params);
    out
}

pub fn select_best(
    bank: &HypothesisBank,
    now: f64,
    history: &[Observation],
    catalog: &[Landmark],
    params: &LocalizationParams,
) -> HypothesisBank {
    let mut out = bank.clone();
    out.select_best(now, history, catalog, params);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseEstimate {
    pub pose: Pose2D,
    /// `exp` of the mean per-sighting log-likelihood of the latest frame.
    pub confidence: f64,
    pub low_confidence: bool,
}

pub fn pose_estimate(bank: &HypothesisBank) -> Result<PoseEstimate> {
    let idx = match bank.mode {
        BankMode::Locked => bank.best.filter(|&i| bank.hypotheses[i].alive),
        BankMode::Converging => bank.argmax(),
    }
    .ok_or(Error::State("no alive hypothesis"))?;
    let h = &bank.hypotheses[idx];
    let confidence = if h.last_frame_sightings == 0 {
        1.0
    } else {
        exp(h.last_frame_score / h.last_frame_sightings as f64)
    };
    Ok(PoseEstimate {
        pose: h.pose,
        confidence,
        low_confidence: bank.mode == BankMode::Converging,
    })
}

/// Normalized squared residual of one sighting against one catalog landmark,
/// plus the weighted correction it contributes (`weight`, `error`), all in the
/// field frame.
struct Residual {
    q: f64,
    weight: [[f64; 2]; 2],
    error: Vec2,
}

fn residual(
    pose: &Pose2D,
    sighting: &LandmarkSighting,
    landmark: &Landmark,
    params: &LocalizationParams,
) -> Option<Residual> {
    let sigma = params.sigma_point(sighting.position.norm());
    let inv_var = 1.0 / (sigma * sigma);
    match (landmark.shape, sighting.segment) {
        (LandmarkShape::Point(p), None) => {
            let seen = pose.ego_to_field(sighting.position);
            let error = p - seen;
            Some(Residual {
                q: error.norm_squared() * inv_var,
                weight: [[inv_var, 0.0], [0.0, inv_var]],
                error,
            })
        }
        (LandmarkShape::Segment(a, b), Some((sa, sb))) => {
            let seen = pose.ego_to_field(sighting.position);
            let error = closest_point_on_segment(seen, a, b) - seen;
            let seen_dir = (pose.ego_to_field(sb) - pose.ego_to_field(sa)).angle();
            let da = line_angle_between(seen_dir, (b - a).angle()) / params.sigma_angle;
            let n = (b - a).perp().normalized();
            Some(Residual {
                q: error.norm_squared() * inv_var + da * da,
                weight: [
                    [n.x * n.x * inv_var, n.x * n.y * inv_var],
                    [n.x * n.y * inv_var, n.y * n.y * inv_var],
                ],
                error,
            })
        }
        _ => None,
    }
}

/// Catalog landmark of the sighting's kind with the smallest residual; ties
/// go to the earlier catalog entry.
fn associate(
    pose: &Pose2D,
    sighting: &LandmarkSighting,
    catalog: &[Landmark],
    params: &LocalizationParams,
) -> Option<(usize, Residual)> {
    let mut best: Option<(usize, Residual)> = None;
    for (i, lm) in catalog.iter().enumerate() {
        if lm.kind != sighting.kind {
            continue;
        }
        if let Some(r) = residual(pose, sighting, lm, params) {
            if best.as_ref().is_none_or(|(_, b)| r.q < b.q) {
                best = Some((i, r));
            }
        }
    }
    best
}

fn correct_one(h: &mut Hypothesis, obs: &Observation, catalog: &[Landmark], params: &LocalizationParams) {
    let gate2 = params.gate * params.gate;
    let mut frame = 0.0;
    let mut a = [[params.damping, 0.0], [0.0, params.damping]];
    let mut rhs = Vec2::ZERO;
    let mut inliers = 0usize;
    for s in &obs.landmarks {
        let Some((_, r)) = associate(&h.pose, s, catalog, params) else {
            frame -= 0.5 * gate2;
            continue;
        };
        frame -= 0.5 * r.q.min(gate2);
        if r.q < gate2 {
            inliers += 1;
            for (i, row) in a.iter_mut().enumerate() {
                for (j, v) in row.iter_mut().enumerate() {
                    *v += r.weight[i][j];
                }
            }
            rhs.x += r.weight[0][0] * r.error.x + r.weight[0][1] * r.error.y;
            rhs.y += r.weight[1][0] * r.error.x + r.weight[1][1] * r.error.y;
        }
    }
    h.score += frame;
    h.observations += 1;
    h.last_frame_score = frame;
    h.last_frame_sightings = obs.landmarks.len();
    if inliers > 0 && params.nudge_gain > 0.0 {
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        if det.abs() > 1e-12 {
            let dx = (a[1][1] * rhs.x - a[0][1] * rhs.y) / det;
            let dy = (a[0][0] * rhs.y - a[1][0] * rhs.x) / det;
            h.pose.x += params.nudge_gain * dx;
            h.pose.y += params.nudge_gain * dy;
        }
    }
}

/// Whether some goal post or center circle sighting in `history` agrees with
/// `pose` within the confirmation gates.
fn confirms(pose: &Pose2D, history: &[Observation], catalog: &[Landmark], params: &LocalizationParams) -> bool {
    history.iter().flat_map(|o| &o.landmarks).any(|s| {
        s.kind.is_confirming()
            && catalog.iter().filter(|lm| lm.kind == s.kind).any(|lm| {
                let expected = pose.field_to_ego(lm.position());
                expected.distance(s.position) <= params.confirm_distance
                    && angle_diff(expected.angle(), s.position.angle()).abs() <= params.confirm_bearing
            })
    })
}

/// Per-frame score a pose would receive for `obs`, without mutating anything.
pub fn frame_score(pose: &Pose2D, obs: &Observation, catalog: &[Landmark], params: &LocalizationParams) -> f64 {
    let gate2 = params.gate * params.gate;
    obs.landmarks
        .iter()
        .map(|s| match associate(pose, s, catalog, params) {
            Some((_, r)) => -0.5 * r.q.min(gate2),
            None => -0.5 * gate2,
        })
        .sum()
}

/// Only the line sightings of a frame.
pub fn lines_only(obs: &Observation) -> Observation {
    Observation {
        landmarks: obs
            .landmarks
            .iter()
            .filter(|s| s.kind == LandmarkKind::LineSegment)
            .copied()
            .collect(),
        ..obs.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{landmark_catalog, start_poses, FieldSpec};
    use crate::geometry::mirror_pose;
    use crate::perception::{observe, NoiseModel, SignatureModels};
    use crate::sim::{Robot, Team, VelocityCommand, WorldState};
    use core::f64::consts::PI;

    fn world_at(pose: Pose2D) -> WorldState {
        let mut w = WorldState::new(FieldSpec::default(), 3);
        w.robots.push(Robot {
            id: 0,
            team: Team::Home,
            pose,
            command: VelocityCommand::stop(),
            radius: 0.12,
        });
        w.ball.position = Vec2::new(3.0, 2.5);
        w
    }

    fn exact_obs(pose: Pose2D) -> Observation {
        let field = FieldSpec::default();
        let catalog = landmark_catalog(&field).unwrap();
        let noise = NoiseModel::default().exact();
        observe(&world_at(pose), 0, &noise, &catalog, &SignatureModels::default()).unwrap()
    }

    #[test]
    fn gyro_integration() {
        let mut g = GyroState::default();
        for _ in 0..100 {
            g = integrate_gyro(g, 0.5, 0.02);
        }
        assert!((g.yaw_integrated - 1.0).abs() < 1e-12);

        let mut g = GyroState::new(0.002);
        for _ in 0..3000 {
            g = integrate_gyro(g, g.measure(0.0, 0.0), 0.02);
        }
        assert!((g.yaw_integrated - 0.12).abs() < 1e-9);
    }

    #[test]
    fn bank_initialization() {
        let field = FieldSpec::default();
        let poses = start_poses(&field);
        let g = GyroState::default();
        let bank = init_bank(&poses, &g, 0.0, 10.0).unwrap();
        let labels: Vec<_> = bank.hypotheses.iter().map(|h| h.start_label).collect();
        assert_eq!(labels, StartPoseLabel::ALL.to_vec());
        assert_eq!(bank.hypotheses.iter().filter(|h| h.pose.theta == 0.0).count(), 2);
        assert!(bank.hypotheses.iter().all(|h| h.alive && h.score == 0.0));
        assert_eq!(bank.mode, BankMode::Converging);
        assert_eq!(bank, init_bank(&poses, &g, 0.0, 10.0).unwrap());
        assert!(init_bank(&poses[..3], &g, 0.0, 10.0).is_err());
    }

    #[test]
    fn prediction_rotates_into_each_frame() {
        let field = FieldSpec::default();
        let mut poses = start_poses(&field);
        poses[1].pose = Pose2D::new(1.0, 0.0, PI);
        let g = GyroState::default();
        let bank = init_bank(&poses, &g, 0.0, 10.0).unwrap();
        let moved = predict(&bank, Vec2::new(0.1, 0.0), &g);
        assert!((moved.hypotheses[0].pose.x - (poses[0].pose.x + 0.1)).abs() < 1e-12);
        assert!((moved.hypotheses[1].pose.x - 0.9).abs() < 1e-12);
        assert_eq!(predict(&bank, Vec2::ZERO, &g), bank);
    }

    #[test]
    fn heading_stays_slaved() {
        let field = FieldSpec::default();
        let mut g = GyroState::new(0.01);
        let mut bank = init_bank(&start_poses(&field), &g, 0.0, 10.0).unwrap();
        for k in 0..200 {
            g = integrate_gyro(g, 0.3 + k as f64 * 1e-3, 0.02);
            bank.predict(Vec2::new(0.01, 0.002), &g);
            for h in &bank.hypotheses {
                assert_eq!(h.pose.theta, h.slaved_theta(&g));
            }
        }
    }

    #[test]
    fn true_pose_scores_highest() {
        let field = FieldSpec::default();
        let catalog = landmark_catalog(&field).unwrap();
        let params = LocalizationParams::default();
        let poses = start_poses(&field);
        for truth in &poses {
            let obs = exact_obs(truth.pose);
            let mut bank = init_bank(&poses, &GyroState::default(), 0.0, 10.0).unwrap();
            // Hypotheses carry the heading of their own start pose.
            bank.correct(&obs, &catalog, &params);
            let me = truth.label.index();
            for (i, h) in bank.hypotheses.iter().enumerate() {
                if i != me {
                    assert!(bank.hypotheses[me].score > h.score, "{:?} vs {:?}", truth.label, h.start_label);
                }
            }
        }
    }

    #[test]
    fn empty_observation_keeps_scores() {
        let field = FieldSpec::default();
        let catalog = landmark_catalog(&field).unwrap();
        let bank = init_bank(&start_poses(&field), &GyroState::default(), 0.0, 10.0).unwrap();
        let after = correct(&bank, &Observation::empty(0.0), &catalog, &LocalizationParams::default());
        for (a, b) in bank.hypotheses.iter().zip(&after.hypotheses) {
            assert_eq!(a.score, b.score);
            assert_eq!(a.pose, b.pose);
        }
    }

    #[test]
    fn correction_reduces_position_error() {
        let field = FieldSpec::default();
        let catalog = landmark_catalog(&field).unwrap();
        let truth = Pose2D::new(-1.2, 0.4, 0.2);
        let obs = exact_obs(truth);
        let mut poses = start_poses(&field);
        poses[0].pose = Pose2D::new(-1.0, 0.55, 0.2);
        let mut bank = init_bank(&poses, &GyroState::default(), 0.0, 10.0).unwrap();
        let before = bank.hypotheses[0].pose.position().distance(truth.position());
        bank.correct(&obs, &catalog, &LocalizationParams::default());
        let after = bank.hypotheses[0].pose.position().distance(truth.position());
        assert!(after < before, "{after} >= {before}");
    }

    #[test]
    fn mirror_pair_scores_tie_on_lines() {
        let field = FieldSpec::default();
        let catalog = landmark_catalog(&field).unwrap();
        let params = LocalizationParams::default();
        let truth = Pose2D::new(-1.7, 0.9, 0.35);
        let obs = lines_only(&exact_obs(truth));
        assert!(!obs.landmarks.is_empty());
        let a = frame_score(&truth, &obs, &catalog, &params);
        let b = frame_score(&mirror_pose(truth), &obs, &catalog, &params);
        assert!((a - b).abs() <= 1e-9);
    }

    fn locked_bank_inputs(label: StartPoseLabel) -> (HypothesisBank, Vec<Observation>, Vec<Landmark>) {
        let field = FieldSpec::default();
        let catalog = landmark_catalog(&field).unwrap();
        let poses = start_poses(&field);
        let obs = exact_obs(poses[label.index()].pose);
        let mut bank = init_bank(&poses, &GyroState::default(), 0.0, 10.0).unwrap();
        bank.correct(&obs, &catalog, &LocalizationParams::default());
        (bank, alloc::vec![obs], catalog)
    }

    #[test]
    fn lock_with_margin_and_center_circle() {
        let (mut bank, history, catalog) = locked_bank_inputs(StartPoseLabel::CenterFacingOpponent);
        assert!(history[0].landmarks.iter().any(|s| s.kind == LandmarkKind::CenterCircle));
        bank.select_best(0.02, &history, &catalog, &LocalizationParams::default());
        assert_eq!(bank.mode, BankMode::Locked);
        assert_eq!(bank.best, Some(0));
        assert!(bank.lock.unwrap().confirmed);
        assert_eq!(bank.alive().count(), 1);
    }

    #[test]
    fn confirmation_gate_blocks_lock() {
        let (mut bank, mut history, catalog) = locked_bank_inputs(StartPoseLabel::CenterFacingOpponent);
        for o in &mut history {
            for s in &mut o.landmarks {
                if s.kind.is_confirming() {
                    s.position += Vec2::new(0.0, 1.0);
                }
            }
        }
        bank.select_best(0.02, &history, &catalog, &LocalizationParams::default());
        assert_eq!(bank.mode, BankMode::Converging);
    }

    #[test]
    fn timeout_locks_unconfirmed() {
        let field = FieldSpec::default();
        let catalog = landmark_catalog(&field).unwrap();
        let mut bank = init_bank(&start_poses(&field), &GyroState::default(), 0.0, 10.0).unwrap();
        bank.hypotheses[2].score = 1e-3;
        bank.select_best(10.5, &[], &catalog, &LocalizationParams::default());
        assert_eq!(bank.mode, BankMode::Locked);
        assert_eq!(bank.best, Some(2));
        assert!(!bank.lock.unwrap().confirmed);
    }

    #[test]
    fn pose_estimate_modes() {
        let field = FieldSpec::default();
        let mut bank = init_bank(&start_poses(&field), &GyroState::default(), 0.0, 10.0).unwrap();
        bank.hypotheses[1].score = 3.0;
        let est = pose_estimate(&bank).unwrap();
        assert_eq!(est.pose, bank.hypotheses[1].pose);
        assert!(est.low_confidence);
        bank.lock_to(1, 1.0, true);
        let est = pose_estimate(&bank).unwrap();
        assert!(!est.low_confidence);
        assert_eq!(est.pose, bank.hypotheses[1].pose);
        for h in &mut bank.hypotheses {
            h.alive = false;
        }
        assert!(pose_estimate(&bank).is_err());
    }
}
