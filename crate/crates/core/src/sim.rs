//! Deterministic discrete-time world simulation.
//!
//! Robots are first-order kinematic integrators under clamped velocity
//! commands, the ball rolls with constant friction deceleration, kicks are
//! impulses applied after a fixed motion latency, and goals are detected by
//! segment intersection of the ball's per-step path with the goal mouth.

use alloc::vec::Vec;
use core::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, Error, Result};
use crate::field::{start_poses, FieldSpec, StartPoseLabel};
use crate::geometry::{segment_intersection, Pose2D, Vec2};
use crate::perception::ColorSignature;
use crate::rng::{substream, Module};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Trigger {
    #[default]
    None,
    KickLeft,
    KickRight,
    PreKick,
}

impl Trigger {
    pub fn name(self) -> &'static str {
        match self {
            Trigger::None => "none",
            Trigger::KickLeft => "kick_left",
            Trigger::KickRight => "kick_right",
            Trigger::PreKick => "pre_kick",
        }
    }

    pub fn kick_foot(self) -> Option<Foot> {
        match self {
            Trigger::KickLeft => Some(Foot::Left),
            Trigger::KickRight => Some(Foot::Right),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Foot {
    Left,
    Right,
}

impl Foot {
    pub fn name(self) -> &'static str {
        match self {
            Foot::Left => "left",
            Foot::Right => "right",
        }
    }

    /// +1 for the left foot, -1 for the right.
    pub fn side(self) -> f64 {
        match self {
            Foot::Left => 1.0,
            Foot::Right => -1.0,
        }
    }

    pub fn trigger(self) -> Trigger {
        match self {
            Foot::Left => Trigger::KickLeft,
            Foot::Right => Trigger::KickRight,
        }
    }
}

/// Walking velocities in the robot frame plus a motion trigger.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VelocityCommand {
    pub vx: f64,
    pub vy: f64,
    pub omega: f64,
    pub trigger: Trigger,
}

impl VelocityCommand {
    pub fn new(vx: f64, vy: f64, omega: f64) -> Self {
        Self {
            vx,
            vy,
            omega,
            trigger: Trigger::None,
        }
    }

    pub fn stop() -> Self {
        Self::default()
    }

    pub fn linear(&self) -> Vec2 {
        Vec2::new(self.vx, self.vy)
    }

    pub fn speed(&self) -> f64 {
        self.linear().norm()
    }

    pub fn with_trigger(mut self, trigger: Trigger) -> Self {
        self.trigger = trigger;
        self
    }

    /// Scales the linear part into `v_max` and clips `omega` to `omega_max`.
    pub fn clamped(&self, v_max: f64, omega_max: f64) -> Self {
        let speed = self.speed();
        let scale = if speed > v_max { v_max / speed } else { 1.0 };
        Self {
            vx: self.vx * scale,
            vy: self.vy * scale,
            omega: self.omega.clamp(-omega_max, omega_max),
            trigger: self.trigger,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimParams {
    pub dt: f64,
    pub ball_friction_decel: f64,
    pub v_max: f64,
    pub omega_max: f64,
    pub kick_speed: f64,
    pub kick_region_radius: f64,
    pub rng_seed: u64,
    /// Standard deviation of the kick direction, radians.
    pub kick_angle_noise: f64,
    /// Delay between a kick trigger and foot-ball contact.
    pub kick_latency: f64,
    pub ball_radius: f64,
    pub robot_radius: f64,
    /// Restitution of ball-robot and ball-obstacle contact.
    pub restitution: f64,
    /// Forward offset of the foot contact point from the robot center.
    pub foot_reach: f64,
    /// Lateral offset of each foot contact point from the robot center.
    pub foot_offset: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            dt: 0.02,
            ball_friction_decel: 0.3,
            v_max: 0.4,
            omega_max: 1.2,
            kick_speed: 2.5,
            kick_region_radius: 0.2,
            rng_seed: 1,
            kick_angle_noise: 0.03,
            kick_latency: 0.3,
            ball_radius: 0.07,
            robot_radius: 0.12,
            restitution: 0.3,
            foot_reach: 0.2,
            foot_offset: 0.08,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> core::result::Result<(), ConfigError> {
        let positive = [
            ("dt", self.dt),
            ("v_max", self.v_max),
            ("omega_max", self.omega_max),
            ("kick_speed", self.kick_speed),
            ("kick_region_radius", self.kick_region_radius),
            ("ball_radius", self.ball_radius),
            ("robot_radius", self.robot_radius),
            ("foot_reach", self.foot_reach),
        ];
        for (key, v) in positive {
            if !v.is_finite() || v <= 0.0 {
                return Err(ConfigError::new(key, "must be finite and > 0"));
            }
        }
        let nonneg = [
            ("ball_friction_decel", self.ball_friction_decel),
            ("kick_angle_noise", self.kick_angle_noise),
            ("kick_latency", self.kick_latency),
            ("foot_offset", self.foot_offset),
        ];
        for (key, v) in nonneg {
            if !v.is_finite() || v < 0.0 {
                return Err(ConfigError::new(key, "must be finite and >= 0"));
            }
        }
        if !(0.0..=1.0).contains(&self.restitution) {
            return Err(ConfigError::new("restitution", "must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Contact point of `foot` in the robot frame.
    pub fn foot_point(&self, foot: Foot) -> Vec2 {
        Vec2::new(self.foot_reach, foot.side() * self.foot_offset)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Team {
    /// Attacks the goal at +x.
    Home,
    /// Attacks the goal at -x.
    Away,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Robot {
    pub id: u32,
    pub team: Team,
    pub pose: Pose2D,
    pub command: VelocityCommand,
    pub radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Ball {
    pub position: Vec2,
    pub velocity: Vec2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub id: u32,
    pub position: Vec2,
    pub radius: f64,
    pub signature: ColorSignature,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Score {
    pub own: u32,
    pub opponent: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Running,
    GoalScored,
    BallOut,
    Finished,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PendingKick {
    pub robot_id: u32,
    pub foot: Foot,
    pub due: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SimEvent {
    KickTriggered {
        robot_id: u32,
        foot: Foot,
        due: f64,
    },
    Kick {
        robot_id: u32,
        foot: Foot,
        ball: Vec2,
        velocity: Vec2,
    },
    KickRejected {
        robot_id: u32,
        foot: Foot,
        distance: f64,
    },
    Goal {
        scoring: Team,
        at: Vec2,
    },
    BallOut {
        at: Vec2,
    },
    /// Robot disc entered contact with an obstacle or another robot.
    Collision {
        robot_id: u32,
        other_id: u32,
        distance: f64,
    },
    BallContact {
        robot_id: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub time: f64,
    pub step_index: u64,
    pub seed: u64,
    pub robots: Vec<Robot>,
    pub ball: Ball,
    pub obstacles: Vec<Obstacle>,
    pub score: Score,
    pub status: Status,
    pub field: FieldSpec,
    pub pending_kicks: Vec<PendingKick>,
    /// Events emitted by the most recent `step`/`apply_kick`.
    pub events: Vec<SimEvent>,
    /// Pairs currently in contact, so collisions are reported on entry only.
    contacts: Vec<(u32, u32)>,
}

/// Obstacle ids start here so they never clash with robot ids.
pub const OBSTACLE_ID_BASE: u32 = 100;

impl WorldState {
    pub fn new(field: FieldSpec, seed: u64) -> Self {
        Self {
            time: 0.0,
            step_index: 0,
            seed,
            robots: Vec::new(),
            ball: Ball::default(),
            obstacles: Vec::new(),
            score: Score::default(),
            status: Status::Running,
            field,
            pending_kicks: Vec::new(),
            events: Vec::new(),
            contacts: Vec::new(),
        }
    }

    pub fn robot(&self, id: u32) -> Result<&Robot> {
        self.robots
            .iter()
            .find(|r| r.id == id)
            .ok_or(Error::UnknownRobot(id))
    }

    pub fn robot_mut(&mut self, id: u32) -> Result<&mut Robot> {
        self.robots
            .iter_mut()
            .find(|r| r.id == id)
            .ok_or(Error::UnknownRobot(id))
    }

    pub fn set_command(&mut self, id: u32, command: VelocityCommand) -> Result<()> {
        self.robot_mut(id)?.command = command;
        Ok(())
    }

    pub fn is_kicking(&self, id: u32) -> bool {
        self.pending_kicks.iter().any(|k| k.robot_id == id)
    }

    /// Advances the world by one `params.dt`.
    pub fn step(&mut self, params: &SimParams) -> Result<()> {
        if self.status != Status::Running {
            return Err(Error::State("step requires a running world"));
        }
        self.events.clear();
        let dt = params.dt;

        let due: Vec<PendingKick> = self
            .pending_kicks
            .iter()
            .copied()
            .filter(|k| k.due <= self.time + 1e-9)
            .collect();
        self.pending_kicks.retain(|k| k.due > self.time + 1e-9);
        for kick in due {
            self.kick_now(kick.robot_id, kick.foot, params)?;
        }

        let mut robot_velocity = Vec::with_capacity(self.robots.len());
        for i in 0..self.robots.len() {
            let id = self.robots[i].id;
            let kicking = self.is_kicking(id);
            let robot = &mut self.robots[i];
            let cmd = robot.command.clamped(params.v_max, params.omega_max);
            if let Some(foot) = cmd.trigger.kick_foot() {
                if !kicking {
                    let due = self.time + params.kick_latency;
                    self.pending_kicks.push(PendingKick {
                        robot_id: id,
                        foot,
                        due,
                    });
                    self.events.push(SimEvent::KickTriggered {
                        robot_id: id,
                        foot,
                        due,
                    });
                }
            }
            // The kick motion and its latency are spent standing.
            let moving = !kicking && cmd.kick_foot_is_none();
            let world_v = if moving {
                cmd.linear().rotated(robot.pose.theta)
            } else {
                Vec2::ZERO
            };
            let omega = if moving { cmd.omega } else { 0.0 };
            let p = robot.pose.position() + world_v * dt;
            robot.pose = Pose2D::new(p.x, p.y, robot.pose.theta + omega * dt);
            robot_velocity.push(world_v);
        }
        if self.pending_kicks.iter().any(|k| k.due <= self.time + 1e-9) {
            // Zero-latency kicks fire within the step that triggered them.
            let due: Vec<PendingKick> = self
                .pending_kicks
                .iter()
                .copied()
                .filter(|k| k.due <= self.time + 1e-9)
                .collect();
            self.pending_kicks.retain(|k| k.due > self.time + 1e-9);
            for kick in due {
                self.kick_now(kick.robot_id, kick.foot, params)?;
            }
        }

        self.resolve_robot_contacts();

        let start = self.ball.position;
        let speed = self.ball.velocity.norm();
        self.ball.position = start + self.ball.velocity * dt;
        if speed > 0.0 {
            let new_speed = (speed - params.ball_friction_decel * dt).max(0.0);
            self.ball.velocity = self.ball.velocity * (new_speed / speed);
        }
        self.resolve_ball_contacts(params, &robot_velocity);
        let end = self.ball.position;

        self.time = (self.step_index + 1) as f64 * dt;
        self.step_index += 1;

        if let Some((scoring, at)) = goal_crossing(&self.field, start, end) {
            match scoring {
                Team::Home => self.score.own += 1,
                Team::Away => self.score.opponent += 1,
            }
            self.status = Status::GoalScored;
            self.events.push(SimEvent::Goal { scoring, at });
        } else if !self.field.contains(end) {
            self.status = Status::BallOut;
            self.events.push(SimEvent::BallOut { at: end });
        }
        Ok(())
    }

    /// Applies a kick impulse if the ball lies in the foot's kick region;
    /// otherwise records a rejected kick and leaves the world unchanged.
    pub fn apply_kick(&mut self, robot_id: u32, foot: Foot, params: &SimParams) -> Result<()> {
        self.events.clear();
        self.kick_now(robot_id, foot, params)
    }

    fn kick_now(&mut self, robot_id: u32, foot: Foot, params: &SimParams) -> Result<()> {
        let pose = self.robot(robot_id)?.pose;
        let foot_point = pose.ego_to_field(params.foot_point(foot));
        let distance = foot_point.distance(self.ball.position);
        if distance > params.kick_region_radius {
            self.events.push(SimEvent::KickRejected {
                robot_id,
                foot,
                distance,
            });
            return Ok(());
        }
        let mut rng = substream(self.seed, Module::Kick, self.step_index, robot_id as u64);
        let direction = pose.theta + rng.gaussian(params.kick_angle_noise);
        let velocity = Vec2::from_polar(params.kick_speed, direction);
        self.ball.velocity = velocity;
        self.events.push(SimEvent::Kick {
            robot_id,
            foot,
            ball: self.ball.position,
            velocity,
        });
        Ok(())
    }

    fn resolve_robot_contacts(&mut self) {
        let mut touching = Vec::new();
        for i in 0..self.robots.len() {
            for o in &self.obstacles {
                let r = &mut self.robots[i];
                let delta = r.pose.position() - o.position;
                let d = delta.norm();
                let min = r.radius + o.radius;
                if d < min {
                    touching.push((r.id, o.id, d));
                    let n = if d > 1e-12 { delta * (1.0 / d) } else { Vec2::new(-1.0, 0.0) };
                    let p = o.position + n * min;
                    r.pose = Pose2D::new(p.x, p.y, r.pose.theta);
                }
            }
            for j in i + 1..self.robots.len() {
                let (a, b) = (self.robots[i].pose.position(), self.robots[j].pose.position());
                let delta = a - b;
                let d = delta.norm();
                let min = self.robots[i].radius + self.robots[j].radius;
                if d < min {
                    touching.push((self.robots[i].id, self.robots[j].id, d));
                    let n = if d > 1e-12 { delta * (1.0 / d) } else { Vec2::new(1.0, 0.0) };
                    let push = n * ((min - d) / 2.0);
                    let pa = a + push;
                    let pb = b - push;
                    let ri = &mut self.robots[i];
                    ri.pose = Pose2D::new(pa.x, pa.y, ri.pose.theta);
                    let rj = &mut self.robots[j];
                    rj.pose = Pose2D::new(pb.x, pb.y, rj.pose.theta);
                }
            }
        }
        for &(a, b, d) in &touching {
            if !self.contacts.contains(&(a, b)) {
                self.events.push(SimEvent::Collision {
                    robot_id: a,
                    other_id: b,
                    distance: d,
                });
            }
        }
        self.contacts = touching.into_iter().map(|(a, b, _)| (a, b)).collect();
    }

    fn resolve_ball_contacts(&mut self, params: &SimParams, robot_velocity: &[Vec2]) {
        let e = params.restitution;
        for (robot, &rv) in self.robots.iter().zip(robot_velocity) {
            let min = robot.radius + params.ball_radius;
            let delta = self.ball.position - robot.pose.position();
            let d = delta.norm();
            if d < min {
                let n = if d > 1e-12 { delta * (1.0 / d) } else { robot.pose.heading() };
                self.ball.position = robot.pose.position() + n * min;
                let rel = self.ball.velocity - rv;
                let approach = rel.dot(n);
                if approach < 0.0 {
                    self.ball.velocity -= n * ((1.0 + e) * approach);
                }
                self.events.push(SimEvent::BallContact { robot_id: robot.id });
            }
        }
        for o in &self.obstacles {
            let min = o.radius + params.ball_radius;
            let delta = self.ball.position - o.position;
            let d = delta.norm();
            if d < min {
                let n = if d > 1e-12 { delta * (1.0 / d) } else { Vec2::new(-1.0, 0.0) };
                self.ball.position = o.position + n * min;
                let approach = self.ball.velocity.dot(n);
                if approach < 0.0 {
                    self.ball.velocity -= n * ((1.0 + e) * approach);
                }
            }
        }
    }
}

impl VelocityCommand {
    fn kick_foot_is_none(&self) -> bool {
        self.trigger.kick_foot().is_none()
    }
}

/// Which team scores if the ball path `start→end` crosses a goal mouth.
pub fn goal_crossing(field: &FieldSpec, start: Vec2, end: Vec2) -> Option<(Team, Vec2)> {
    for (sign, team) in [(1.0, Team::Home), (-1.0, Team::Away)] {
        let (a, b) = field.goal_posts(sign);
        if let Some(t) = segment_intersection(start, end, a, b) {
            // Only count crossings from inside the field outwards.
            if (end.x - start.x) * sign > 0.0 {
                return Some((team, start.lerp(end, t)));
            }
        }
    }
    None
}

/// Free-function form of [`WorldState::step`].
pub fn step(world: &WorldState, params: &SimParams) -> Result<WorldState> {
    let mut next = world.clone();
    next.step(params)?;
    Ok(next)
}

/// Free-function form of [`WorldState::apply_kick`].
pub fn apply_kick(
    world: &WorldState,
    robot_id: u32,
    foot: Foot,
    params: &SimParams,
) -> Result<WorldState> {
    let mut next = world.clone();
    next.apply_kick(robot_id, foot, params)?;
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScenarioName {
    Match,
    MovingBallChallenge,
    ApproachDrill,
    AvoidanceDrill,
}

impl ScenarioName {
    pub const ALL: [ScenarioName; 4] = [
        ScenarioName::Match,
        ScenarioName::MovingBallChallenge,
        ScenarioName::ApproachDrill,
        ScenarioName::AvoidanceDrill,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioName::Match => "match",
            ScenarioName::MovingBallChallenge => "moving_ball",
            ScenarioName::ApproachDrill => "approach_drill",
            ScenarioName::AvoidanceDrill => "avoidance_drill",
        }
    }

    pub fn parse(name: &str) -> core::result::Result<Self, ConfigError> {
        Self::ALL
            .into_iter()
            .find(|s| s.name() == name)
            .ok_or_else(|| {
                ConfigError::new(
                    "name",
                    "unknown scenario; expected one of match, moving_ball, approach_drill, avoidance_drill",
                )
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub home_start: StartPoseLabel,
    pub away_start: StartPoseLabel,
    /// Distance along the goal-area line from the ball's start to the kick
    /// spot in the moving-ball challenge.
    pub d_ramp: f64,
    pub release_speed: f64,
    pub kick_foot: Foot,
    /// Uniform jitter applied to drill and match placements, meters.
    pub placement_jitter: f64,
    pub obstacle_radius: f64,
    pub rival_signature: ColorSignature,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            home_start: StartPoseLabel::CenterFacingOpponent,
            away_start: StartPoseLabel::CenterFacingOpponent,
            d_ramp: 2.0,
            release_speed: 0.8,
            kick_foot: Foot::Right,
            placement_jitter: 0.1,
            obstacle_radius: 0.15,
            rival_signature: ColorSignature::rival_default(),
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> core::result::Result<(), ConfigError> {
        if !self.d_ramp.is_finite() || self.d_ramp <= 0.0 {
            return Err(ConfigError::new("d_ramp", "must be finite and > 0"));
        }
        if !self.release_speed.is_finite() || self.release_speed < 0.0 {
            return Err(ConfigError::new("release_speed", "must be finite and >= 0"));
        }
        if !self.placement_jitter.is_finite() || self.placement_jitter < 0.0 {
            return Err(ConfigError::new("placement_jitter", "must be finite and >= 0"));
        }
        if !self.obstacle_radius.is_finite() || self.obstacle_radius <= 0.0 {
            return Err(ConfigError::new("obstacle_radius", "must be finite and > 0"));
        }
        Ok(())
    }
}

/// Kick spot of the moving-ball challenge: the goal-area line in front of
/// the opponent goal, on the field axis.
pub fn challenge_kick_spot(field: &FieldSpec) -> Vec2 {
    Vec2::new(field.half_length() - field.goal_area_length, 0.0)
}

/// Robot pose that puts `foot`'s contact point on the challenge kick spot,
/// facing the opponent goal.
pub fn challenge_pose(field: &FieldSpec, params: &SimParams, foot: Foot) -> Pose2D {
    let spot = challenge_kick_spot(field);
    let p = spot - params.foot_point(foot);
    Pose2D::new(p.x, p.y, 0.0)
}

/// Builds the initial world of a named scenario. Robot 0 is always the home
/// robot under test.
pub fn spawn_scenario(
    name: ScenarioName,
    field: &FieldSpec,
    params: &SimParams,
    config: &ScenarioConfig,
    seed: u64,
) -> core::result::Result<WorldState, ConfigError> {
    field.validate()?;
    params.validate()?;
    config.validate()?;
    let mut world = WorldState::new(*field, seed);
    let mut rng = substream(seed, Module::Scenario, 0, 0);
    let jitter = config.placement_jitter;
    let jit = |rng: &mut crate::rng::Substream| rng.range(-jitter, jitter);
    let robot = |id, team, pose| Robot {
        id,
        team,
        pose,
        command: VelocityCommand::stop(),
        radius: params.robot_radius,
    };

    match name {
        ScenarioName::Match => {
            let poses = start_poses(field);
            let home = poses[config.home_start.index()].pose;
            let away = crate::geometry::mirror_pose(poses[config.away_start.index()].pose);
            world.robots.push(robot(0, Team::Home, home));
            world.robots.push(robot(1, Team::Away, away));
            world.ball.position = Vec2::new(jit(&mut rng), jit(&mut rng));
        }
        ScenarioName::MovingBallChallenge => {
            let pose = challenge_pose(field, params, config.kick_foot);
            world.robots.push(robot(0, Team::Home, pose));
            let spot = challenge_kick_spot(field);
            world.ball.position = spot + Vec2::new(0.0, config.d_ramp);
            world.ball.velocity = Vec2::new(0.0, -config.release_speed);
        }
        ScenarioName::ApproachDrill => {
            let pose = Pose2D::new(
                -2.0 + jit(&mut rng),
                jit(&mut rng) * 5.0,
                rng.range(-PI, PI),
            );
            world.robots.push(robot(0, Team::Home, pose));
            world.ball.position = Vec2::new(0.5 + jit(&mut rng), jit(&mut rng) * 5.0);
        }
        ScenarioName::AvoidanceDrill => {
            let y = jit(&mut rng) * 2.0;
            world
                .robots
                .push(robot(0, Team::Home, Pose2D::new(-2.5, y, 0.0)));
            world.obstacles.push(Obstacle {
                id: OBSTACLE_ID_BASE,
                position: Vec2::new(-1.0 + jit(&mut rng), y + jit(&mut rng)),
                radius: config.obstacle_radius,
                signature: config.rival_signature.clone(),
            });
            world.ball.position = Vec2::new(0.5 + jit(&mut rng), y + jit(&mut rng));
        }
    }
    Ok(world)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::FRAC_PI_2;

    fn bare_world() -> WorldState {
        let mut w = WorldState::new(FieldSpec::default(), 1);
        w.robots.push(Robot {
            id: 0,
            team: Team::Home,
            pose: Pose2D::new(0.0, 0.0, 0.0),
            command: VelocityCommand::stop(),
            radius: 0.12,
        });
        w.ball.position = Vec2::new(-3.0, 2.0);
        w
    }

    fn params() -> SimParams {
        SimParams {
            dt: 0.1,
            ball_friction_decel: 0.5,
            v_max: 2.0,
            kick_angle_noise: 0.0,
            ..SimParams::default()
        }
    }

    #[test]
    fn euler_robot_step() {
        let mut w = bare_world();
        w.set_command(0, VelocityCommand::new(1.0, 0.0, 0.0)).unwrap();
        let w = step(&w, &params()).unwrap();
        let p = w.robots[0].pose;
        assert!((p.x - 0.1).abs() < 1e-12 && p.y.abs() < 1e-12 && p.theta == 0.0);
        assert!((w.time - 0.1).abs() < 1e-12);
    }

    #[test]
    fn ball_friction_and_clamp() {
        let mut w = bare_world();
        w.ball.velocity = Vec2::new(1.0, 0.0);
        let next = step(&w, &params()).unwrap();
        assert!((next.ball.velocity.norm() - 0.95).abs() < 1e-12);

        w.ball.velocity = Vec2::new(0.04, 0.0);
        let next = step(&w, &params()).unwrap();
        assert_eq!(next.ball.velocity.norm(), 0.0);
    }

    #[test]
    fn command_is_clamped() {
        let mut w = bare_world();
        let p = SimParams {
            v_max: 0.5,
            omega_max: 1.0,
            ..params()
        };
        w.set_command(0, VelocityCommand::new(3.0, 4.0, 9.0)).unwrap();
        let next = step(&w, &p).unwrap();
        assert!(next.robots[0].pose.position().norm() <= p.v_max * p.dt + 1e-12);
        assert!((next.robots[0].pose.theta - 0.1).abs() < 1e-12);
    }

    #[test]
    fn step_requires_running() {
        let mut w = bare_world();
        w.status = Status::GoalScored;
        assert!(matches!(step(&w, &params()), Err(Error::State(_))));
    }

    #[test]
    fn kick_directions_and_rejection() {
        let p = params();
        for (theta, expect) in [(0.0, Vec2::new(2.5, 0.0)), (FRAC_PI_2, Vec2::new(0.0, 2.5))] {
            let mut w = bare_world();
            w.robots[0].pose = Pose2D::new(0.0, 0.0, theta);
            w.ball.position = w.robots[0].pose.ego_to_field(p.foot_point(Foot::Right));
            let next = apply_kick(&w, 0, Foot::Right, &p).unwrap();
            assert!(next.ball.velocity.distance(expect) < 1e-12);
            assert!(matches!(next.events[0], SimEvent::Kick { .. }));
        }
        let mut w = bare_world();
        w.ball.position = Vec2::new(1.2, 0.0);
        let p = SimParams {
            kick_region_radius: 0.3,
            ..p
        };
        let next = apply_kick(&w, 0, Foot::Left, &p).unwrap();
        assert_eq!(next.ball, w.ball);
        assert!(matches!(next.events[0], SimEvent::KickRejected { .. }));
    }

    #[test]
    fn goal_detected_between_posts() {
        let mut w = bare_world();
        w.ball.position = Vec2::new(4.45, 0.3);
        w.ball.velocity = Vec2::new(2.0, 0.0);
        let next = step(&w, &params()).unwrap();
        assert_eq!(next.status, Status::GoalScored);
        assert_eq!(next.score.own, 1);

        w.ball.position = Vec2::new(4.45, 2.0);
        let next = step(&w, &params()).unwrap();
        assert_eq!(next.status, Status::BallOut);
        assert_eq!(next.score.own, 0);
    }

    #[test]
    fn unknown_scenario_rejected() {
        assert!(ScenarioName::parse("penalty_shootout").is_err());
        assert_eq!(ScenarioName::parse("moving_ball"), Ok(ScenarioName::MovingBallChallenge));
    }

    #[test]
    fn moving_ball_layout() {
        let field = FieldSpec::default();
        let p = SimParams::default();
        let cfg = ScenarioConfig {
            d_ramp: 2.0,
            release_speed: 0.8,
            ..ScenarioConfig::default()
        };
        let w = spawn_scenario(ScenarioName::MovingBallChallenge, &field, &p, &cfg, 3).unwrap();
        let line_x = field.half_length() - field.goal_area_length;
        assert!((w.ball.position.x - line_x).abs() < 1e-12);
        assert!((w.ball.position.y - 2.0).abs() < 1e-12);
        assert!((w.ball.velocity.norm() - 0.8).abs() < 1e-12);
        assert_eq!(w.ball.velocity.x, 0.0);
        let foot = w.robots[0].pose.ego_to_field(p.foot_point(cfg.kick_foot));
        assert!(foot.distance(challenge_kick_spot(&field)) < 1e-12);
    }

    #[test]
    fn match_spawn_is_deterministic_and_uses_start_pose() {
        let field = FieldSpec::default();
        let p = SimParams::default();
        let cfg = ScenarioConfig {
            home_start: StartPoseLabel::SidelineLeft,
            ..ScenarioConfig::default()
        };
        let a = spawn_scenario(ScenarioName::Match, &field, &p, &cfg, 7).unwrap();
        let b = spawn_scenario(ScenarioName::Match, &field, &p, &cfg, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.robots[0].pose, start_poses(&field)[2].pose);
    }
}
