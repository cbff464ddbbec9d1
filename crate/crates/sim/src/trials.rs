//! Standalone localization trials: a robot standing at a start pose while the
//! hypothesis bank classifies it, and the mirrored-pair symmetry check.

use std::collections::VecDeque;

use soccer_core::field::{landmark_catalog, start_poses, StartPoseLabel};
use soccer_core::geometry::mirror_pose;
use soccer_core::localization::{
    frame_score, init_bank, integrate_gyro, lines_only, BankMode, GyroState, LocalizationParams,
};
use soccer_core::perception::{observe, NoiseModel, Observation};
use soccer_core::rng::{substream, Module};
use soccer_core::sim::{Robot, Team, VelocityCommand, WorldState};
use soccer_core::{Pose2D, Vec2};

use crate::config::RunConfig;
use crate::harness::{sense, HarnessError};

#[derive(Debug, Clone, PartialEq)]
pub struct LocTrialOutcome {
    pub truth: StartPoseLabel,
    pub locked: Option<StartPoseLabel>,
    pub lock_time: Option<f64>,
    pub confirmed: bool,
    /// Sum of squared position errors of the estimate after the lock, and
    /// the number of frames summed.
    pub sq_error_sum: f64,
    pub frames: usize,
}

impl LocTrialOutcome {
    pub fn correct(&self) -> bool {
        self.locked == Some(self.truth)
    }
}

fn standing_world(config: &RunConfig, seed: u64, pose: Pose2D) -> WorldState {
    let field = config.field;
    let mut world = WorldState::new(field, seed);
    world.robots.push(Robot {
        id: 0,
        team: Team::Home,
        pose,
        command: VelocityCommand::stop(),
        radius: config.sim.robot_radius,
    });
    // Ball parked in the far corner, out of the way.
    world.ball.position = Vec2::new(field.half_length() - 0.3, field.half_width() - 0.3);
    world
}

/// A robot placed at `label` (jittered by the scenario's placement jitter)
/// stands still for `duration` seconds while the bank converges.
pub fn run_localization_trial(
    config: &RunConfig,
    label: StartPoseLabel,
    seed: u64,
    duration: f64,
) -> Result<LocTrialOutcome, HarnessError> {
    let field = config.field;
    let params = config.localization;
    let catalog = landmark_catalog(&field).map_err(|e| e.in_section("field"))?;
    let starts = start_poses(&field);
    let mut rng = substream(seed, Module::Trial, 0, 0);
    let j = config.scenario.layout.placement_jitter;
    let nominal = starts[label.index()].pose;
    let truth = Pose2D::new(nominal.x + rng.range(-j, j), nominal.y + rng.range(-j, j), nominal.theta);
    let mut world = standing_world(config, seed, truth);
    let mut gyro = GyroState::new(params.gyro_bias);
    let mut bank = init_bank(&starts, &gyro, 0.0, params.timeout)?;
    let mut history: VecDeque<Observation> = VecDeque::new();
    let mut out = LocTrialOutcome {
        truth: label,
        locked: None,
        lock_time: None,
        confirmed: false,
        sq_error_sum: 0.0,
        frames: 0,
    };
    let steps = (duration / config.sim.dt).round() as u64;
    for step in 0..steps {
        world.time = step as f64 * config.sim.dt;
        world.step_index = step;
        let s = sense(config, seed, step, 0, &truth, &truth);
        gyro = integrate_gyro(gyro, s.omega_measured, s.dt);
        bank.predict(s.odometry, &gyro);
        let obs = observe(&world, 0, &config.noise, &catalog, &config.perception.signatures)?;
        bank.correct(&obs, &catalog, &params);
        history.push_back(obs);
        while history.len() > config.perception.confirm_window {
            history.pop_front();
        }
        bank.select_best(world.time, history.make_contiguous(), &catalog, &params);
        if bank.mode == BankMode::Locked {
            let lock = bank.lock.expect("locked bank has lock info");
            if out.locked.is_none() {
                out.locked = Some(lock.label);
                out.lock_time = Some(lock.at);
                out.confirmed = lock.confirmed;
            }
            let h = &bank.hypotheses[lock.index];
            out.sq_error_sum += h.pose.position().distance(truth.position()).powi(2);
            out.frames += 1;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryOutcome {
    /// Largest per-frame score difference between the pose and its mirror.
    pub max_score_gap: f64,
    pub locked: bool,
    pub frames: usize,
}

/// Replaces the two facing-opponent hypotheses by a generic pose `P` and its
/// mirror, feeds line-only observations taken from `P` and records whether
/// the bank ever tells them apart.
pub fn run_symmetry_trial(config: &RunConfig, seed: u64, duration: f64) -> Result<SymmetryOutcome, HarnessError> {
    let field = config.field;
    let params: LocalizationParams = config.localization;
    let noise: NoiseModel = config.noise;
    let catalog = landmark_catalog(&field).map_err(|e| e.in_section("field"))?;
    let starts = start_poses(&field);
    let mut rng = substream(seed, Module::Trial, 0, 1);
    let p = Pose2D::new(
        rng.range(-field.half_length() + 0.5, field.half_length() - 0.5),
        rng.range(-field.half_width() + 0.5, field.half_width() - 0.5),
        rng.range(-std::f64::consts::PI, std::f64::consts::PI),
    );
    let q = mirror_pose(p);
    let mut world = standing_world(config, seed, p);
    let gyro = GyroState::new(0.0);
    let mut bank = init_bank(&starts, &gyro, 0.0, params.timeout)?;
    for (idx, pose) in [
        (StartPoseLabel::CenterFacingOpponent.index(), p),
        (StartPoseLabel::GoalAreaFacingOpponent.index(), q),
    ] {
        let h = &mut bank.hypotheses[idx];
        h.pose = pose;
        h.reference_offset = pose.theta - gyro.yaw_integrated;
    }
    let (ip, iq) = (
        StartPoseLabel::CenterFacingOpponent.index(),
        StartPoseLabel::GoalAreaFacingOpponent.index(),
    );
    let mut out = SymmetryOutcome {
        max_score_gap: 0.0,
        locked: false,
        frames: 0,
    };
    let mut history: VecDeque<Observation> = VecDeque::new();
    let steps = (duration / config.sim.dt).round() as u64;
    for step in 0..steps {
        world.time = step as f64 * config.sim.dt;
        world.step_index = step;
        let obs = lines_only(&observe(&world, 0, &noise, &catalog, &config.perception.signatures)?);
        let before = (bank.hypotheses[ip].score, bank.hypotheses[iq].score);
        bank.correct(&obs, &catalog, &params);
        let frame_gap = ((bank.hypotheses[ip].score - before.0) - (bank.hypotheses[iq].score - before.1)).abs();
        let direct = (frame_score(&bank.hypotheses[ip].pose, &obs, &catalog, &params)
            - frame_score(&bank.hypotheses[iq].pose, &obs, &catalog, &params))
        .abs();
        out.max_score_gap = out.max_score_gap.max(frame_gap).max(direct);
        history.push_back(obs);
        while history.len() > config.perception.confirm_window {
            history.pop_front();
        }
        bank.select_best(world.time, history.make_contiguous(), &catalog, &params);
        out.locked |= bank.mode == BankMode::Locked;
        out.frames += 1;
    }
    Ok(out)
}
