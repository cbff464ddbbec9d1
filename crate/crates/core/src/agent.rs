//! The full per-robot stack: sensing → localization → obstacle clusters →
//! Game FSM → Behaviour FSM → velocity command.
//!
//! An agent reasons in its own team frame, where its own goal is at -x. The
//! harness feeds it egocentric observations, odometry and gyro rates and
//! forwards its commands to the simulator.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::behaviors::{
    behaviour_fsm_step, game_fsm_step, BehaviorContext, BehaviorParams, BehaviourOutput,
    BehaviourState, Body, GameMode, GameState,
};
use crate::error::{ConfigError, Result};
use crate::field::{landmark_catalog, start_poses, FieldSpec, Landmark, StartPose, StartPoseLabel};
use crate::geometry::{Pose2D, Vec2};
use crate::localization::{
    init_bank, integrate_gyro, known_pose_bank, pose_estimate, reinit_from_sideline, BankMode,
    GyroState, HypothesisBank, LocalizationParams, PoseEstimate,
};
use crate::perception::{
    classify_signature, expected_obstacle_size, update_clusters, ClusterParams, Detection,
    HeightClass, ObstacleCluster, ObstacleLabel, Observation, SignatureModels,
};
use crate::sim::VelocityCommand;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentParams {
    pub behavior: BehaviorParams,
    pub localization: LocalizationParams,
    pub clusters: ClusterParams,
    pub height_class: HeightClass,
    /// Apparent size per meter of height at one meter.
    pub height_scale: f64,
    pub classify_threshold: f64,
    pub signatures: SignatureModels,
    /// Frames kept for the landmark confirmation of a lock.
    pub confirm_window: usize,
}

impl Default for AgentParams {
    fn default() -> Self {
        Self {
            behavior: BehaviorParams::default(),
            localization: LocalizationParams::default(),
            clusters: ClusterParams::default(),
            height_class: HeightClass::default(),
            height_scale: 1.0,
            classify_threshold: 0.2,
            signatures: SignatureModels::default(),
            confirm_window: 25,
        }
    }
}

impl AgentParams {
    pub fn validate(&self) -> core::result::Result<(), ConfigError> {
        self.behavior.validate().map_err(|e| e.in_section("behavior"))?;
        self.localization.validate().map_err(|e| e.in_section("localization"))?;
        self.clusters.validate().map_err(|e| e.in_section("clusters"))?;
        if !(self.height_class.min > 0.0 && self.height_class.min <= self.height_class.max) {
            return Err(ConfigError::new("height_class", "need 0 < min <= max"));
        }
        if self.confirm_window == 0 {
            return Err(ConfigError::new("confirm_window", "must be >= 1"));
        }
        Ok(())
    }
}

/// Per-step sensor inputs besides the camera frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proprioception {
    /// Egocentric displacement since the previous step, from odometry.
    pub odometry: Vec2,
    /// Gyro yaw rate, bias and noise included.
    pub omega_measured: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgentOutput {
    pub command: VelocityCommand,
    pub game: GameState,
    pub game_transition: Option<(GameMode, GameMode)>,
    pub behaviour: Option<BehaviourOutput>,
    pub estimate: PoseEstimate,
    /// Set on the step the bank locked.
    pub locked_now: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    pub id: u32,
    pub params: AgentParams,
    pub field: FieldSpec,
    pub body: Body,
    pub home: StartPoseLabel,
    pub gyro: GyroState,
    pub bank: HypothesisBank,
    pub clusters: Vec<ObstacleCluster>,
    pub game: GameState,
    pub behaviour: BehaviourState,
    pub ball_ego: Option<Vec2>,
    pub ball_seen_at: f64,
    catalog: Vec<Landmark>,
    starts: [StartPose; 4],
    history: VecDeque<Observation>,
}

impl Agent {
    /// An agent that must first classify its start pose.
    pub fn new(
        id: u32,
        field: FieldSpec,
        body: Body,
        home: StartPoseLabel,
        params: AgentParams,
        now: f64,
    ) -> core::result::Result<Self, ConfigError> {
        params.validate()?;
        let catalog = landmark_catalog(&field)?;
        let starts = start_poses(&field);
        let gyro = GyroState::new(params.localization.gyro_bias);
        let bank = init_bank(&starts, &gyro, now, params.localization.timeout)?;
        Ok(Self {
            id,
            game: GameState::new(&field),
            behaviour: BehaviourState::new(&params.behavior),
            params,
            field,
            body,
            home,
            gyro,
            bank,
            clusters: Vec::new(),
            ball_ego: None,
            ball_seen_at: now,
            catalog,
            starts,
            history: VecDeque::new(),
        })
    }

    /// An agent that knows its initial team-frame pose.
    pub fn with_known_pose(
        id: u32,
        field: FieldSpec,
        body: Body,
        params: AgentParams,
        pose: Pose2D,
        now: f64,
    ) -> core::result::Result<Self, ConfigError> {
        let mut agent = Self::new(id, field, body, StartPoseLabel::CenterFacingOpponent, params, now)?;
        agent.bank = known_pose_bank(&agent.starts, pose, &agent.gyro, now)?;
        Ok(agent)
    }

    pub fn catalog(&self) -> &[Landmark] {
        &self.catalog
    }

    pub fn home_pose(&self) -> Pose2D {
        self.starts[self.home.index()].pose
    }

    /// Restart: the robot re-enters at the sideline and relocalizes.
    pub fn restart(&mut self, now: f64) -> core::result::Result<(), ConfigError> {
        self.bank = reinit_from_sideline(&self.starts, &self.gyro, now, self.params.localization.timeout)?;
        self.history.clear();
        self.clusters.clear();
        self.ball_ego = None;
        self.behaviour = BehaviourState::new(&self.params.behavior);
        Ok(())
    }

    fn detections(&self, obs: &Observation) -> Result<Vec<Detection>> {
        let models = self.params.signatures.as_map();
        let mut out = Vec::new();
        for c in &obs.obstacle_candidates {
            let d = c.position.norm();
            let gate = expected_obstacle_size(d, &self.params.height_class, self.params.height_scale)?;
            if !gate.contains(c.apparent_size) {
                continue;
            }
            let label = classify_signature(&c.signature, &models, self.params.classify_threshold)?;
            out.push(Detection {
                position: c.position,
                label,
            });
        }
        Ok(out)
    }

    /// One control cycle. `positioning` marks the walk back to kickoff.
    pub fn step(&mut self, obs: &Observation, sense: &Proprioception, positioning: bool) -> Result<AgentOutput> {
        let now = obs.stamp;
        self.gyro = integrate_gyro(self.gyro, sense.omega_measured, sense.dt);
        self.bank.predict(sense.odometry, &self.gyro);
        self.bank.correct(obs, &self.catalog, &self.params.localization);
        self.history.push_back(obs.clone());
        while self.history.len() > self.params.confirm_window {
            self.history.pop_front();
        }
        let was_locked = self.bank.mode == BankMode::Locked;
        let window = self.history.make_contiguous();
        self.bank
            .select_best(now, window, &self.catalog, &self.params.localization);
        let locked_now = !was_locked && self.bank.mode == BankMode::Locked;

        let ego_motion = Pose2D::new(sense.odometry.x, sense.odometry.y, sense.omega_measured * sense.dt);
        let detections = self.detections(obs)?;
        self.clusters = update_clusters(&self.clusters, &detections, &ego_motion, &self.params.clusters, now);

        match obs.ball {
            Some(b) => {
                self.ball_ego = Some(b.r);
                self.ball_seen_at = now;
            }
            None => self.ball_ego = self.ball_ego.map(|b| ego_motion.field_to_ego(b)),
        }

        let estimate = pose_estimate(&self.bank)?;
        if self.bank.mode != BankMode::Locked {
            // Stand still until the start pose is known.
            return Ok(AgentOutput {
                command: VelocityCommand::stop(),
                game: self.game,
                game_transition: None,
                behaviour: None,
                estimate,
                locked_now,
            });
        }

        let ctx = BehaviorContext {
            pose: estimate.pose,
            pose_confidence: estimate.confidence,
            ball_ego: self.ball_ego,
            ball_age: now - self.ball_seen_at,
            obstacles: &self.clusters,
            time: now,
            positioning,
            home_pose: self.home_pose(),
            field: &self.field,
            body: self.body,
        };
        let game = game_fsm_step(&self.game, &ctx, &self.params.behavior);
        let game_transition = (game.state != self.game.state).then_some((self.game.state, game.state));
        let out = behaviour_fsm_step(&self.behaviour, &game, &ctx, &self.params.behavior);
        self.game = game;
        self.behaviour = out.state;
        Ok(AgentOutput {
            command: out.command,
            game,
            game_transition,
            behaviour: Some(out),
            estimate,
            locked_now,
        })
    }

    /// Clusters labeled as anything but a teammate.
    pub fn hostile_clusters(&self) -> impl Iterator<Item = &ObstacleCluster> {
        self.clusters.iter().filter(|c| c.label != ObstacleLabel::Teammate)
    }
}
