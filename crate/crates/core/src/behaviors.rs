//! Game FSM and Behaviour FSM.
//!
//! The Game FSM picks the game-level action and the ball target. The
//! Behaviour FSM turns that into walking velocities and motion triggers: a
//! halo-respecting ball approach split into far and near cases, radial-cap
//! obstacle avoidance, kicking, and dribbling under a widened dribble lock.
//! Both are pure step functions over estimates only.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::field::FieldSpec;
use crate::geometry::{angle_diff, asin, cos, point_segment_distance, sqrt, Pose2D, Vec2};
use crate::perception::ObstacleCluster;
use crate::sim::{Foot, SimParams, VelocityCommand};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BehaviorParams {
    pub halo_radius: f64,
    /// Far→near below this ball distance.
    pub near_enter: f64,
    /// Near→far above this ball distance.
    pub near_exit: f64,
    pub near_speed_factor: f64,
    pub influence_radius: f64,
    /// Distance at which the radial cap crosses zero.
    pub d_repel: f64,
    /// Radial cap at the edge of the influence radius.
    pub v_cap: f64,
    /// Fraction by which speed drops as an obstacle approaches `d_repel`.
    pub avoid_slowdown: f64,
    pub avoid_omega_gain: f64,
    /// Clusters below this certainty are ignored.
    pub obstacle_min_certainty: f64,
    pub corridor_half_width: f64,
    pub close_threshold: f64,
    /// Safety margin inside each goal post for the rotated target ray.
    pub goal_margin: f64,
    pub kick_lateral_tol: f64,
    pub kick_heading_tol: f64,
    /// Slack on the along-line distance for approach completion.
    pub approach_position_tol: f64,
    pub dribble_lock_factor: f64,
    pub ball_lost_timeout: f64,
    pub last_defender: bool,
    /// In DefendGoal, engage the ball once it is this close.
    pub defend_engage_radius: f64,
    /// Distance of the defensive guard point from the own goal center.
    pub defend_guard_distance: f64,
    pub k_omega: f64,
    pub k_position: f64,
    pub k_lateral: f64,
    pub dribble_speed: f64,
    pub kick_walk_speed: f64,
    /// The kick fires once the ball is this far beyond the foot reach or closer.
    pub kick_trigger_reach: f64,
    /// Time the robot stands in the kick state after triggering, covering the
    /// kick latency.
    pub kick_hold: f64,
    pub search_omega: f64,
    pub pose_tolerance: f64,
}

impl Default for BehaviorParams {
    fn default() -> Self {
        Self {
            halo_radius: 0.65,
            near_enter: 1.0,
            near_exit: 1.3,
            near_speed_factor: 0.5,
            influence_radius: 1.5,
            d_repel: 0.35,
            v_cap: 0.4,
            avoid_slowdown: 0.5,
            avoid_omega_gain: 0.6,
            obstacle_min_certainty: 0.2,
            corridor_half_width: 0.45,
            close_threshold: 0.5,
            goal_margin: 0.2,
            kick_lateral_tol: 0.05,
            kick_heading_tol: 0.1,
            approach_position_tol: 0.1,
            dribble_lock_factor: 2.5,
            ball_lost_timeout: 5.0,
            last_defender: false,
            defend_engage_radius: 1.5,
            defend_guard_distance: 1.2,
            k_omega: 1.5,
            k_position: 1.0,
            k_lateral: 2.0,
            dribble_speed: 0.25,
            kick_walk_speed: 0.15,
            kick_trigger_reach: 0.06,
            kick_hold: 0.6,
            search_omega: 0.6,
            pose_tolerance: 0.1,
        }
    }
}

impl BehaviorParams {
    pub fn validate(&self) -> core::result::Result<(), ConfigError> {
        let positive = [
            ("halo_radius", self.halo_radius),
            ("near_enter", self.near_enter),
            ("near_exit", self.near_exit),
            ("near_speed_factor", self.near_speed_factor),
            ("influence_radius", self.influence_radius),
            ("v_cap", self.v_cap),
            ("corridor_half_width", self.corridor_half_width),
            ("kick_lateral_tol", self.kick_lateral_tol),
            ("kick_heading_tol", self.kick_heading_tol),
            ("dribble_lock_factor", self.dribble_lock_factor),
            ("ball_lost_timeout", self.ball_lost_timeout),
            ("k_omega", self.k_omega),
            ("k_position", self.k_position),
            ("dribble_speed", self.dribble_speed),
            ("kick_walk_speed", self.kick_walk_speed),
            ("pose_tolerance", self.pose_tolerance),
        ];
        for (key, v) in positive {
            if !v.is_finite() || v <= 0.0 {
                return Err(ConfigError::new(key, "must be finite and > 0"));
            }
        }
        let nonneg = [
            ("d_repel", self.d_repel),
            ("avoid_omega_gain", self.avoid_omega_gain),
            ("obstacle_min_certainty", self.obstacle_min_certainty),
            ("close_threshold", self.close_threshold),
            ("goal_margin", self.goal_margin),
            ("approach_position_tol", self.approach_position_tol),
            ("defend_engage_radius", self.defend_engage_radius),
            ("defend_guard_distance", self.defend_guard_distance),
            ("k_lateral", self.k_lateral),
            ("kick_trigger_reach", self.kick_trigger_reach),
            ("kick_hold", self.kick_hold),
            ("search_omega", self.search_omega),
        ];
        for (key, v) in nonneg {
            if !v.is_finite() || v < 0.0 {
                return Err(ConfigError::new(key, "must be finite and >= 0"));
            }
        }
        if self.near_enter >= self.near_exit {
            return Err(ConfigError::new("near_enter", "must be < near_exit"));
        }
        if self.d_repel >= self.influence_radius {
            return Err(ConfigError::new("d_repel", "must be < influence_radius"));
        }
        if !(0.0..1.0).contains(&self.avoid_slowdown) {
            return Err(ConfigError::new("avoid_slowdown", "must lie in [0, 1)"));
        }
        if self.near_speed_factor > 1.0 {
            return Err(ConfigError::new("near_speed_factor", "must be <= 1"));
        }
        if self.dribble_lock_factor < 1.0 {
            return Err(ConfigError::new("dribble_lock_factor", "must be >= 1"));
        }
        Ok(())
    }

    /// Radial speed limit toward an obstacle at distance `d`; negative inside
    /// `d_repel`.
    pub fn radial_cap(&self, d: f64) -> f64 {
        self.v_cap * (d - self.d_repel) / (self.influence_radius - self.d_repel)
    }
}

/// Body geometry and speed limits the behaviors plan against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Body {
    pub v_max: f64,
    pub omega_max: f64,
    pub foot_reach: f64,
    pub foot_offset: f64,
}

impl From<&SimParams> for Body {
    fn from(p: &SimParams) -> Self {
        Self {
            v_max: p.v_max,
            omega_max: p.omega_max,
            foot_reach: p.foot_reach,
            foot_offset: p.foot_offset,
        }
    }
}

impl Default for Body {
    fn default() -> Self {
        Self::from(&SimParams::default())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GameMode {
    ScoreGoal,
    AutoPosition,
    DefendGoal,
}

impl GameMode {
    pub const ALL: [GameMode; 3] = [GameMode::ScoreGoal, GameMode::AutoPosition, GameMode::DefendGoal];

    pub fn name(self) -> &'static str {
        match self {
            GameMode::ScoreGoal => "score_goal",
            GameMode::AutoPosition => "auto_position",
            GameMode::DefendGoal => "defend_goal",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DribbleFoot {
    Left,
    Right,
    Either,
}

impl DribbleFoot {
    pub fn name(self) -> &'static str {
        match self {
            DribbleFoot::Left => "left",
            DribbleFoot::Right => "right",
            DribbleFoot::Either => "either",
        }
    }

    pub fn foot(self) -> Option<Foot> {
        match self {
            DribbleFoot::Left => Some(Foot::Left),
            DribbleFoot::Right => Some(Foot::Right),
            DribbleFoot::Either => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameState {
    pub state: GameMode,
    /// Team-frame point the ball should travel toward.
    pub ball_target: Vec2,
    pub forced_dribble: bool,
    pub dribble_foot: DribbleFoot,
    /// Rotation applied to the goal target to clear obstacles.
    pub rotation: f64,
    /// Directive to the Behaviour FSM: the ball has been unseen too long.
    pub search_ball: bool,
}

impl GameState {
    pub fn new(field: &FieldSpec) -> Self {
        Self {
            state: GameMode::ScoreGoal,
            ball_target: field.opponent_goal_center(),
            forced_dribble: false,
            dribble_foot: DribbleFoot::Either,
            rotation: 0.0,
            search_ball: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BehaviourMode {
    GoBehindBallFar,
    GoBehindBallNear,
    Dribble,
    Kick,
    WalkToPose,
    SearchBall,
}

impl BehaviourMode {
    pub const ALL: [BehaviourMode; 6] = [
        BehaviourMode::GoBehindBallFar,
        BehaviourMode::GoBehindBallNear,
        BehaviourMode::Dribble,
        BehaviourMode::Kick,
        BehaviourMode::WalkToPose,
        BehaviourMode::SearchBall,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BehaviourMode::GoBehindBallFar => "go_behind_ball_far",
            BehaviourMode::GoBehindBallNear => "go_behind_ball_near",
            BehaviourMode::Dribble => "dribble",
            BehaviourMode::Kick => "kick",
            BehaviourMode::WalkToPose => "walk_to_pose",
            BehaviourMode::SearchBall => "search_ball",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == name)
    }

    pub fn is_approach(self) -> bool {
        matches!(self, BehaviourMode::GoBehindBallFar | BehaviourMode::GoBehindBallNear)
    }
}

/// Every transition the Behaviour FSM may take.
pub const BEHAVIOUR_EDGES: &[(BehaviourMode, BehaviourMode)] = {
    use BehaviourMode::*;
    &[
        (GoBehindBallFar, GoBehindBallNear),
        (GoBehindBallFar, SearchBall),
        (GoBehindBallFar, WalkToPose),
        (GoBehindBallNear, GoBehindBallFar),
        (GoBehindBallNear, Kick),
        (GoBehindBallNear, Dribble),
        (GoBehindBallNear, SearchBall),
        (GoBehindBallNear, WalkToPose),
        (Kick, GoBehindBallFar),
        (Kick, WalkToPose),
        (Dribble, GoBehindBallFar),
        (Dribble, SearchBall),
        (Dribble, WalkToPose),
        (WalkToPose, GoBehindBallFar),
        (WalkToPose, SearchBall),
        (SearchBall, GoBehindBallFar),
        (SearchBall, WalkToPose),
    ]
};

/// Every transition the Game FSM may take.
pub const GAME_EDGES: &[(GameMode, GameMode)] = {
    use GameMode::*;
    &[
        (ScoreGoal, AutoPosition),
        (ScoreGoal, DefendGoal),
        (AutoPosition, ScoreGoal),
        (AutoPosition, DefendGoal),
        (DefendGoal, ScoreGoal),
        (DefendGoal, AutoPosition),
    ]
};

pub fn is_behaviour_edge(from: BehaviourMode, to: BehaviourMode) -> bool {
    BEHAVIOUR_EDGES.contains(&(from, to))
}

pub fn is_game_edge(from: GameMode, to: GameMode) -> bool {
    GAME_EDGES.contains(&(from, to))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BehaviourState {
    pub state: BehaviourMode,
    pub dribble_lock: bool,
    pub halo_radius: f64,
    /// Foot the approach lines up; fixed on entering the near case.
    pub foot: Foot,
    /// Time the kick trigger went out while in the kick state.
    pub kick_started: Option<f64>,
}

impl BehaviourState {
    pub fn new(params: &BehaviorParams) -> Self {
        Self {
            state: BehaviourMode::GoBehindBallFar,
            dribble_lock: false,
            halo_radius: params.halo_radius,
            foot: Foot::Right,
            kick_started: None,
        }
    }
}

/// What a behavior step may look at: estimates, never ground truth.
#[derive(Debug, Clone, Copy)]
pub struct BehaviorContext<'a> {
    /// Team-frame pose estimate (own goal at -x).
    pub pose: Pose2D,
    pub pose_confidence: f64,
    pub ball_ego: Option<Vec2>,
    /// Seconds since the ball was last perceived.
    pub ball_age: f64,
    /// Egocentric obstacle clusters.
    pub obstacles: &'a [ObstacleCluster],
    pub time: f64,
    /// Set while the team walks back to kickoff positions.
    pub positioning: bool,
    pub home_pose: Pose2D,
    pub field: &'a FieldSpec,
    pub body: Body,
}

impl BehaviorContext<'_> {
    pub fn ball_field(&self) -> Option<Vec2> {
        self.ball_ego.map(|b| self.pose.ego_to_field(b))
    }

    /// Egocentric positions of clusters certain enough to act on.
    pub fn obstacle_positions(&self, params: &BehaviorParams) -> Vec<Vec2> {
        self.obstacles
            .iter()
            .filter(|c| c.certainty >= params.obstacle_min_certainty)
            .map(|c| c.position)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallTargetDecision {
    pub target: Vec2,
    pub forced_dribble: bool,
    pub dribble_foot: DribbleFoot,
    pub rotation: f64,
}

/// Whether an obstacle sits in the corridor of half-width `half_width`
/// around the ray from `ball` through `target`, up to the target.
pub fn corridor_blocked(ball: Vec2, target: Vec2, obstacles: &[Vec2], half_width: f64) -> bool {
    let span = target - ball;
    let len = span.norm();
    if len <= 0.0 {
        return false;
    }
    let d = span * (1.0 / len);
    obstacles.iter().any(|&o| blocks(ball, d, len, o, half_width))
}

fn blocks(ball: Vec2, d: Vec2, len: f64, o: Vec2, half_width: f64) -> bool {
    let rel = o - ball;
    let t = rel.dot(d);
    t > 0.0 && t <= len && d.cross(rel).abs() < half_width
}

/// Smallest rotation of the ray in direction `sign` that clears every
/// obstacle, or `None` if none within half a turn.
fn clearing_rotation(ball: Vec2, span: Vec2, obstacles: &[Vec2], half_width: f64, sign: f64) -> Option<f64> {
    let len = span.norm();
    let base = span.angle();
    let mut alpha = 0.0f64;
    for _ in 0..64 {
        let d = Vec2::from_polar(1.0, base + alpha);
        let mut step: f64 = 0.0;
        let mut blocked = false;
        for &o in obstacles {
            if !blocks(ball, d, len, o, half_width) {
                continue;
            }
            blocked = true;
            let rel = o - ball;
            let r = rel.norm();
            let delta = if r > half_width {
                asin(half_width / r)
            } else {
                core::f64::consts::FRAC_PI_2
            };
            let rho = angle_diff(rel.angle(), base + alpha);
            let needed = if sign > 0.0 { rho + delta } else { delta - rho };
            step = step.max(needed);
        }
        if !blocked {
            return Some(alpha);
        }
        alpha += sign * (step + 1e-9);
        if alpha.abs() > core::f64::consts::PI {
            return None;
        }
    }
    None
}

/// Whether the ray from `ball` along `dir` enters the opponent goal mouth
/// at least `margin` inside either post.
pub fn ray_in_goal_mouth(ball: Vec2, dir: Vec2, field: &FieldSpec, margin: f64) -> bool {
    if dir.x <= 1e-12 {
        return false;
    }
    let y = ball.y + dir.y * (field.half_length() - ball.x) / dir.x;
    y.abs() <= field.goal_width / 2.0 - margin
}

/// Rotates the ball target about the ball, by the smallest angle, until the
/// corridor toward it is free; decides whether dribbling is forced and with
/// which foot. Obstacles are team-frame positions.
pub fn adjust_ball_target(
    ball: Vec2,
    goal_target: Vec2,
    obstacles: &[Vec2],
    field: &FieldSpec,
    params: &BehaviorParams,
) -> BallTargetDecision {
    let hw = params.corridor_half_width;
    let span = goal_target - ball;
    let blocking: Vec<Vec2> = if span.norm() > 0.0 {
        let d = span.normalized();
        obstacles
            .iter()
            .copied()
            .filter(|&o| blocks(ball, d, span.norm(), o, hw))
            .collect()
    } else {
        Vec::new()
    };
    let close: Vec<Vec2> = obstacles
        .iter()
        .copied()
        .filter(|o| o.distance(ball) < params.close_threshold)
        .collect();

    let mut rotation = 0.0;
    let mut rotated = false;
    if !blocking.is_empty() {
        let plus = clearing_rotation(ball, span, obstacles, hw, 1.0);
        let minus = clearing_rotation(ball, span, obstacles, hw, -1.0);
        let keeps = |a: f64| ray_in_goal_mouth(ball, span.rotated(a), field, params.goal_margin);
        rotation = match (plus, minus) {
            (Some(p), Some(m)) => {
                if (p.abs() - m.abs()).abs() <= 1e-9 {
                    if !keeps(p) && keeps(m) { m } else { p }
                } else if p.abs() < m.abs() {
                    p
                } else {
                    m
                }
            }
            (Some(p), None) => p,
            (None, Some(m)) => m,
            (None, None) => 0.0,
        };
        rotated = true;
    }
    let target = ball + span.rotated(rotation);
    let misses = rotated && !ray_in_goal_mouth(ball, span.rotated(rotation), field, params.goal_margin);
    let forced_dribble = misses || !close.is_empty();

    let relevant = blocking
        .iter()
        .chain(&close)
        .copied()
        .min_by(|a, b| a.distance(ball).total_cmp(&b.distance(ball)));
    let dribble_foot = match relevant {
        Some(o) if span.cross(o - ball) < 0.0 => DribbleFoot::Left,
        Some(_) => DribbleFoot::Right,
        None => DribbleFoot::Either,
    };
    BallTargetDecision {
        target,
        forced_dribble,
        dribble_foot,
        rotation,
    }
}

pub fn game_fsm_step(gs: &GameState, ctx: &BehaviorContext<'_>, params: &BehaviorParams) -> GameState {
    let field = ctx.field;
    let ball = ctx.ball_field();
    let state = if ctx.positioning {
        GameMode::AutoPosition
    } else if params.last_defender && ball.is_some_and(|b| b.x < -field.length / 6.0) {
        GameMode::DefendGoal
    } else {
        GameMode::ScoreGoal
    };
    let goal = field.opponent_goal_center();
    let (ball_target, forced_dribble, dribble_foot, rotation) = match ball {
        Some(b) => {
            let obstacles: Vec<Vec2> = ctx
                .obstacle_positions(params)
                .into_iter()
                .map(|o| ctx.pose.ego_to_field(o))
                .collect();
            let d = adjust_ball_target(b, goal, &obstacles, field, params);
            (d.target, d.forced_dribble, d.dribble_foot, d.rotation)
        }
        None => (gs.ball_target, false, DribbleFoot::Either, 0.0),
    };
    GameState {
        state,
        ball_target,
        forced_dribble,
        dribble_foot,
        rotation,
        search_ball: ball.is_none() || ctx.ball_age > params.ball_lost_timeout,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ApproachMode {
    Far,
    Near,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Approach {
    pub command: VelocityCommand,
    /// Instantaneous team-frame target point.
    pub target: Vec2,
    /// Lined up behind the ball within the kick tolerances.
    pub complete: bool,
}

/// Alignment of the robot, with `foot`, against the line from `ball` toward
/// `ball_target`: (lateral error of the ball from the foot line, heading
/// error, distance from the robot to the ball along the line).
pub fn alignment(pose: &Pose2D, ball: Vec2, ball_target: Vec2, foot: Foot, body: &Body) -> (f64, f64, f64) {
    let u = (ball_target - ball).normalized();
    let ball_ego = pose.field_to_ego(ball);
    let lateral = ball_ego.y - foot.side() * body.foot_offset;
    let heading = angle_diff(u.angle(), pose.theta);
    let along = (ball - pose.position()).dot(u);
    (lateral, heading, along)
}

/// Point behind the ball on the ball→target line at the halo radius, shifted
/// sideways so that `foot` ends up on the line.
pub fn behind_ball_point(ball: Vec2, ball_target: Vec2, halo_radius: f64, foot: Foot, body: &Body) -> Vec2 {
    let u = (ball_target - ball).normalized();
    ball - u * halo_radius - u.perp() * (foot.side() * body.foot_offset)
}

/// Halo-respecting waypoint from `robot` toward `goal` around `ball`.
pub fn halo_waypoint(robot: Vec2, ball: Vec2, goal: Vec2, halo_radius: f64) -> Vec2 {
    let to_robot = robot - ball;
    let d = to_robot.norm();
    let side_of = |p: Vec2| (p - ball).angle();
    if d <= halo_radius {
        // Inside the halo: slide around it toward the goal point.
        let turn = angle_diff(side_of(goal), to_robot.angle());
        let step = turn.clamp(-0.6, 0.6);
        return ball + Vec2::from_polar(halo_radius, to_robot.angle() + step);
    }
    if point_segment_distance(ball, robot, goal) >= halo_radius - 1e-9 {
        return goal;
    }
    let gamma = to_robot.angle();
    let spread = crate::geometry::atan2(sqrt((d * d - halo_radius * halo_radius).max(0.0)), halo_radius);
    let t1 = ball + Vec2::from_polar(halo_radius, gamma + spread);
    let t2 = ball + Vec2::from_polar(halo_radius, gamma - spread);
    let s = if t1.distance(goal) <= t2.distance(goal) { 1.0 } else { -1.0 };
    // Close to the rim the tangent point collapses onto the robot; look
    // further around the circle, but never past the goal's side.
    let near_rim = (1.0 - (d - halo_radius) / HALO_LOOKAHEAD_BAND).clamp(0.0, 1.0);
    let tangent = gamma + s * spread;
    let remaining = (s * angle_diff(side_of(goal), tangent)).max(0.0);
    let extra = (HALO_LOOKAHEAD * near_rim).min(remaining);
    ball + Vec2::from_polar(halo_radius, tangent + s * extra)
}

const HALO_LOOKAHEAD: f64 = 0.4;
const HALO_LOOKAHEAD_BAND: f64 = 0.2;

/// Ball approach toward the behind-ball point. `None` when the ball is
/// unknown, which the FSM answers with a ball search.
pub fn ball_approach(
    pose: &Pose2D,
    ball: Option<Vec2>,
    ball_target: Vec2,
    halo_radius: f64,
    foot: Foot,
    mode: ApproachMode,
    params: &BehaviorParams,
    body: &Body,
) -> Option<Approach> {
    let ball = ball?;
    let behind = behind_ball_point(ball, ball_target, halo_radius, foot, body);
    let target = halo_waypoint(pose.position(), ball, behind, halo_radius);
    let to_target = target - pose.position();
    let command = match mode {
        ApproachMode::Far => {
            let e = angle_diff(to_target.angle(), pose.theta);
            let c = cos(e).max(0.0);
            let vx = (body.v_max * c * c).min(params.k_position * to_target.norm());
            VelocityCommand::new(vx, 0.0, params.k_omega * e)
        }
        ApproachMode::Near => {
            let ego = pose.field_to_ego(target);
            let u = (ball_target - ball).normalized();
            let remaining = pose.position().distance(behind);
            let w = (remaining / 0.5).clamp(0.0, 1.0);
            let facing_ball = (ball - pose.position()).angle();
            let desired = u.angle() + w * angle_diff(facing_ball, u.angle());
            let v = ego * params.k_position;
            let cap = params.near_speed_factor * body.v_max;
            let v = if v.norm() > cap { v * (cap / v.norm()) } else { v };
            VelocityCommand::new(v.x, v.y, params.k_omega * angle_diff(desired, pose.theta))
        }
    }
    .clamped(body.v_max, body.omega_max);
    let (lateral, heading, along) = alignment(pose, ball, ball_target, foot, body);
    let complete = lateral.abs() <= params.kick_lateral_tol
        && heading.abs() <= params.kick_heading_tol
        && along >= body.foot_reach
        && along <= halo_radius + params.approach_position_tol;
    Some(Approach {
        command,
        target,
        complete,
    })
}

/// The obstacle the avoidance acts on and what it imposed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Avoidance {
    /// Egocentric obstacle position.
    pub obstacle: Vec2,
    pub distance: f64,
    pub cap: f64,
    /// Radial component of the output velocity toward the obstacle.
    pub radial: f64,
}

pub fn nearest_obstacle(obstacles: &[Vec2], influence_radius: f64) -> Option<(Vec2, f64)> {
    obstacles
        .iter()
        .map(|&o| (o, o.norm()))
        .filter(|&(_, d)| d <= influence_radius && d > 0.0)
        .min_by(|a, b| a.1.total_cmp(&b.1))
}

fn avoid_common(
    cmd: &VelocityCommand,
    obstacles: &[Vec2],
    params: &BehaviorParams,
    steer: bool,
) -> Option<(Vec2, f64, f64, VelocityCommand, f64)> {
    let (o, d) = nearest_obstacle(obstacles, params.influence_radius)?;
    let frac = ((d - params.d_repel) / (params.influence_radius - params.d_repel)).clamp(0.0, 1.0);
    let factor = 1.0 - params.avoid_slowdown * (1.0 - frac);
    let away = if o.y > 0.0 { -1.0 } else { 1.0 };
    let mut omega = cmd.omega * factor;
    if steer && o.x > 0.0 {
        omega += away * params.avoid_omega_gain * (1.0 - frac);
    }
    let slowed = VelocityCommand {
        vx: cmd.vx * factor,
        vy: cmd.vy * factor,
        omega,
        trigger: cmd.trigger,
    };
    Some((o, d, params.radial_cap(d), slowed, away))
}

/// Slows the command near the nearest obstacle and rotates the linear
/// velocity so its radial component toward the obstacle stays within the cap.
/// Inside `d_repel` the cap is negative and the output backs away; if the
/// input is slower than the required retreat, the output speed is the retreat
/// speed.
pub fn avoid_obstacle(
    cmd: &VelocityCommand,
    obstacles: &[Vec2],
    params: &BehaviorParams,
) -> (VelocityCommand, Option<Avoidance>) {
    let Some((o, d, cap, mut out, away)) = avoid_common(cmd, obstacles, params, false) else {
        return (*cmd, None);
    };
    let u = o * (1.0 / d);
    let v = out.linear();
    let m = v.norm();
    if v.dot(u) > cap {
        let lin = if cap >= -m {
            let c = v.cross(u);
            let side = if c < 0.0 {
                1.0
            } else if c > 0.0 {
                -1.0
            } else {
                away
            };
            u * cap + u.perp() * (side * sqrt((m * m - cap * cap).max(0.0)))
        } else {
            u * cap
        };
        out.vx = lin.x;
        out.vy = lin.y;
        // Rounding can leave the radial part an ulp above the cap.
        let excess = out.linear().dot(u) - cap;
        if excess > 0.0 {
            out.vx -= u.x * excess * 2.0;
            out.vy -= u.y * excess * 2.0;
        }
    }
    let radial = out.linear().dot(u);
    (
        out,
        Some(Avoidance {
            obstacle: o,
            distance: d,
            cap,
            radial,
        }),
    )
}

/// Variant for forward-only walking (`vy = 0`): the forward speed is scaled
/// instead of rotated and the yaw is biased away from the obstacle. Requires
/// a nonnegative cap; otherwise defers to [`avoid_obstacle`].
pub fn avoid_obstacle_forward(
    cmd: &VelocityCommand,
    obstacles: &[Vec2],
    params: &BehaviorParams,
) -> (VelocityCommand, Option<Avoidance>) {
    let Some((o, d, cap, mut out, _)) = avoid_common(cmd, obstacles, params, true) else {
        return (*cmd, None);
    };
    if cap < 0.0 || out.vy != 0.0 {
        return avoid_obstacle(cmd, obstacles, params);
    }
    let u = o * (1.0 / d);
    if out.vx * u.x > cap {
        out.vx = cap / u.x;
        if out.vx * u.x > cap {
            out.vx = libm::nextafter(out.vx, 0.0);
        }
    }
    let radial = out.vx * u.x;
    (
        out,
        Some(Avoidance {
            obstacle: o,
            distance: d,
            cap,
            radial,
        }),
    )
}

/// Walk through the ball toward the target, correcting lateral offset of the
/// ball from the foot line and heading error proportionally.
pub fn dribble_command(
    pose: &Pose2D,
    ball: Vec2,
    ball_target: Vec2,
    foot: Foot,
    params: &BehaviorParams,
    body: &Body,
) -> VelocityCommand {
    let (lateral, heading, _) = alignment(pose, ball, ball_target, foot, body);
    let vx = params.dribble_speed * cos(heading).max(0.0);
    VelocityCommand::new(vx, params.k_lateral * lateral, params.k_omega * heading)
        .clamped(body.v_max, body.omega_max)
}

/// Walking command toward a team-frame pose: turn-and-walk when far, then
/// holonomic with final heading.
pub fn walk_to_pose(pose: &Pose2D, goal: &Pose2D, params: &BehaviorParams, body: &Body) -> VelocityCommand {
    let to = goal.position() - pose.position();
    let dist = to.norm();
    if dist > 0.5 {
        let e = angle_diff(to.angle(), pose.theta);
        let c = cos(e).max(0.0);
        return VelocityCommand::new(body.v_max * c * c, 0.0, params.k_omega * e)
            .clamped(body.v_max, body.omega_max);
    }
    let heading = angle_diff(goal.theta, pose.theta);
    if dist <= params.pose_tolerance && heading.abs() <= params.pose_tolerance {
        return VelocityCommand::stop();
    }
    let ego = pose.field_to_ego(goal.position()) * params.k_position;
    let cap = params.near_speed_factor * body.v_max;
    let ego = if ego.norm() > cap { ego * (cap / ego.norm()) } else { ego };
    VelocityCommand::new(ego.x, ego.y, params.k_omega * heading).clamped(body.v_max, body.omega_max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub from: BehaviourMode,
    pub to: BehaviourMode,
    pub reason: &'static str,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BehaviourOutput {
    pub state: BehaviourState,
    pub command: VelocityCommand,
    pub transition: Option<Transition>,
    /// Instantaneous approach target, approach states only.
    pub target: Option<Vec2>,
    pub avoidance: Option<Avoidance>,
}

fn defend_guard_point(ctx: &BehaviorContext<'_>, ball: Option<Vec2>, params: &BehaviorParams) -> Pose2D {
    let goal = ctx.field.own_goal_center();
    let toward = ball.map_or(Vec2::new(1.0, 0.0), |b| (b - goal).normalized());
    let p = goal + toward * params.defend_guard_distance;
    Pose2D::new(p.x, p.y, toward.angle())
}

/// One Behaviour FSM step: take at most one transition, then run the
/// policy of the resulting state.
pub fn behaviour_fsm_step(
    bs: &BehaviourState,
    gs: &GameState,
    ctx: &BehaviorContext<'_>,
    params: &BehaviorParams,
) -> BehaviourOutput {
    use BehaviourMode::*;
    let body = &ctx.body;
    let obstacles = ctx.obstacle_positions(params);
    let nearest = nearest_obstacle(&obstacles, params.influence_radius).map(|(_, d)| d);
    let ball = ctx.ball_field();
    let ball_dist = ctx.ball_ego.map(|b| b.norm());
    let defending = gs.state == GameMode::DefendGoal;
    let engaged = !defending
        || ctx.ball_ego.is_some_and(|b| {
            let limit = if bs.state == WalkToPose {
                params.defend_engage_radius
            } else {
                params.defend_engage_radius + 0.3
            };
            b.norm() <= limit
        });
    let wants_pose = gs.state == GameMode::AutoPosition || !engaged;

    let mut next = *bs;
    let mut reason = "";
    let from = bs.state;
    match from {
        GoBehindBallFar | GoBehindBallNear | Dribble if wants_pose => {
            next.state = WalkToPose;
            reason = "positioning";
        }
        GoBehindBallFar | GoBehindBallNear | Dribble if gs.search_ball => {
            next.state = SearchBall;
            reason = "ball_lost";
        }
        GoBehindBallFar => {
            let close_ball = ball_dist.is_some_and(|d| d < params.near_enter);
            let close_obstacle = nearest.is_some_and(|d| d < params.d_repel);
            if close_ball || close_obstacle {
                next.state = GoBehindBallNear;
                reason = if close_ball { "ball_near" } else { "obstacle_near" };
                if let Some(f) = gs.dribble_foot.foot() {
                    next.foot = f;
                } else if let Some(b) = ball {
                    let u = gs.ball_target - b;
                    // Robot left of the line puts the ball on its right.
                    next.foot = if u.cross(ctx.pose.position() - b) > 0.0 {
                        Foot::Right
                    } else {
                        Foot::Left
                    };
                }
            }
        }
        GoBehindBallNear => {
            let far_ball = ball_dist.is_some_and(|d| d > params.near_exit);
            let clear = nearest.is_none_or(|d| d > params.d_repel + 0.15);
            if far_ball && clear {
                next.state = GoBehindBallFar;
                reason = "ball_far";
            } else if let Some(b) = ball {
                if let Some(f) = gs.dribble_foot.foot() {
                    next.foot = f;
                }
                let a = ball_approach(
                    &ctx.pose,
                    Some(b),
                    gs.ball_target,
                    bs.halo_radius,
                    next.foot,
                    ApproachMode::Near,
                    params,
                    body,
                );
                if a.is_some_and(|a| a.complete) {
                    if gs.forced_dribble {
                        next.state = Dribble;
                        next.dribble_lock = true;
                        reason = "aligned_dribble";
                    } else {
                        next.state = Kick;
                        reason = "aligned_kick";
                    }
                }
            }
        }
        Dribble => {
            let lost = match ball {
                None => true,
                Some(b) => {
                    let (lateral, heading, along) = alignment(&ctx.pose, b, gs.ball_target, bs.foot, body);
                    let k = params.dribble_lock_factor;
                    lateral.abs() > k * params.kick_lateral_tol
                        || heading.abs() > k * params.kick_heading_tol
                        || along > bs.halo_radius + k * params.approach_position_tol
                        || along < 0.0
                }
            };
            if lost {
                next.state = GoBehindBallFar;
                next.dribble_lock = false;
                reason = "dribble_lock_lost";
            } else if !gs.forced_dribble {
                next.state = GoBehindBallFar;
                next.dribble_lock = false;
                reason = "dribble_released";
            }
        }
        Kick => {
            if wants_pose {
                next.state = WalkToPose;
                reason = "positioning";
            }
        }
        WalkToPose => {
            if !wants_pose {
                if gs.search_ball {
                    next.state = SearchBall;
                    reason = "ball_lost";
                } else {
                    next.state = GoBehindBallFar;
                    reason = "engage";
                }
            }
        }
        SearchBall => {
            if wants_pose {
                next.state = WalkToPose;
                reason = "positioning";
            } else if !gs.search_ball {
                next.state = GoBehindBallFar;
                reason = "ball_found";
            }
        }
    }

    let mut target = None;
    let mut kick_done = false;
    let mut aborted = false;
    let (command, avoidance) = match next.state {
        GoBehindBallFar | GoBehindBallNear => {
            let mode = if next.state == GoBehindBallFar {
                ApproachMode::Far
            } else {
                ApproachMode::Near
            };
            match ball_approach(
                &ctx.pose,
                ball,
                gs.ball_target,
                next.halo_radius,
                next.foot,
                mode,
                params,
                body,
            ) {
                Some(a) => {
                    target = Some(a.target);
                    if mode == ApproachMode::Far {
                        avoid_obstacle_forward(&a.command, &obstacles, params)
                    } else {
                        avoid_obstacle(&a.command, &obstacles, params)
                    }
                }
                None => avoid_obstacle_forward(&VelocityCommand::stop(), &obstacles, params),
            }
        }
        Dribble => {
            let b = ball.expect("dribble lock requires a ball estimate");
            let foot = next.foot;
            avoid_obstacle(&dribble_command(&ctx.pose, b, gs.ball_target, foot, params, body), &obstacles, params)
        }
        Kick if next.kick_started.is_some() => {
            let t0 = next.kick_started.unwrap_or(ctx.time);
            if ctx.time - t0 >= params.kick_hold - 1e-9 {
                kick_done = true;
                reason = "kick_done";
            }
            (VelocityCommand::stop(), None)
        }
        Kick => match ctx.ball_ego {
            Some(b_ego) => {
                let b = ctx.pose.ego_to_field(b_ego);
                let (lateral, heading, _) = alignment(&ctx.pose, b, gs.ball_target, next.foot, body);
                let reach_ok = b_ego.x <= body.foot_reach + params.kick_trigger_reach;
                if reach_ok && lateral.abs() <= 2.0 * params.kick_lateral_tol && heading.abs() <= 2.0 * params.kick_heading_tol {
                    next.kick_started = Some(ctx.time);
                    (VelocityCommand::stop().with_trigger(next.foot.trigger()), None)
                } else {
                    let k = params.dribble_lock_factor;
                    let escaped = lateral.abs() > k * params.kick_lateral_tol
                        || heading.abs() > k * params.kick_heading_tol
                        || b_ego.x < body.foot_reach - 0.05
                        || b_ego.x > next.halo_radius + 0.3;
                    if escaped {
                        kick_done = true;
                        aborted = true;
                        (VelocityCommand::stop(), None)
                    } else {
                        let mut cmd = dribble_command(&ctx.pose, b, gs.ball_target, next.foot, params, body);
                        cmd.vx = cmd.vx.min(params.kick_walk_speed);
                        avoid_obstacle(&cmd, &obstacles, params)
                    }
                }
            }
            None => {
                kick_done = true;
                aborted = true;
                (VelocityCommand::stop(), None)
            }
        },
        WalkToPose => {
            let goal = if gs.state == GameMode::AutoPosition {
                ctx.home_pose
            } else {
                defend_guard_point(ctx, ball, params)
            };
            let cmd = walk_to_pose(&ctx.pose, &goal, params, body);
            if cmd.vy == 0.0 {
                avoid_obstacle_forward(&cmd, &obstacles, params)
            } else {
                avoid_obstacle(&cmd, &obstacles, params)
            }
        }
        SearchBall => avoid_obstacle(
            &VelocityCommand::new(0.0, 0.0, params.search_omega),
            &obstacles,
            params,
        ),
    };
    // Only one transition per step: a kick entered this step finishes later.
    if kick_done && next.state == Kick && from == Kick {
        next.state = GoBehindBallFar;
        if aborted {
            reason = "kick_aborted";
        }
    }
    if next.state != Kick {
        next.kick_started = None;
    }
    let transition = (next.state != from).then_some(Transition {
        from,
        to: next.state,
        reason,
    });
    BehaviourOutput {
        state: next,
        command,
        transition,
        target,
        avoidance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx<'a>(field: &'a FieldSpec, pose: Pose2D, ball: Option<Vec2>, obstacles: &'a [ObstacleCluster]) -> BehaviorContext<'a> {
        BehaviorContext {
            pose,
            pose_confidence: 1.0,
            ball_ego: ball.map(|b| pose.field_to_ego(b)),
            ball_age: 0.0,
            obstacles,
            time: 0.0,
            positioning: false,
            home_pose: Pose2D::new(-0.85, 0.0, 0.0),
            field,
            body: Body::default(),
        }
    }

    #[test]
    fn score_goal_by_default() {
        let field = FieldSpec::default();
        let p = BehaviorParams::default();
        let c = ctx(&field, Pose2D::new(-1.0, 0.0, 0.0), Some(Vec2::ZERO), &[]);
        let gs = game_fsm_step(&GameState::new(&field), &c, &p);
        assert_eq!(gs.state, GameMode::ScoreGoal);
        assert_eq!(gs.ball_target, field.opponent_goal_center());
        assert!(!gs.forced_dribble && !gs.search_ball);

        let mut c2 = c;
        c2.positioning = true;
        assert_eq!(game_fsm_step(&gs, &c2, &p).state, GameMode::AutoPosition);
        let mut c3 = c;
        c3.ball_age = 5.5;
        assert!(game_fsm_step(&gs, &c3, &p).search_ball);
    }

    #[test]
    fn far_case_walks_forward_only() {
        let field = FieldSpec::default();
        let p = BehaviorParams::default();
        let body = Body::default();
        let ball = Vec2::new(0.0, 0.0);
        let target = field.opponent_goal_center();
        let pose = Pose2D::new(-3.0, -body.foot_offset, 0.0);
        let a = ball_approach(&pose, Some(ball), target, 0.65, Foot::Left, ApproachMode::Far, &p, &body).unwrap();
        assert!(a.command.vx > 0.0);
        assert_eq!(a.command.vy, 0.0);
        assert!(a.command.omega.abs() < 0.05);
    }

    #[test]
    fn near_case_sidesteps_slowly() {
        let field = FieldSpec::default();
        let p = BehaviorParams::default();
        let body = Body::default();
        let ball = Vec2::ZERO;
        let pose = Pose2D::new(0.0, -0.5, 0.0);
        let a = ball_approach(
            &pose,
            Some(ball),
            field.opponent_goal_center(),
            0.65,
            Foot::Right,
            ApproachMode::Near,
            &p,
            &body,
        )
        .unwrap();
        assert!(a.command.vy.abs() > 0.0);
        assert!(a.command.speed() <= p.near_speed_factor * body.v_max + 1e-12);
        assert!(a.target.distance(ball) >= 0.65 - 1e-9);
    }

    #[test]
    fn approach_completes_on_the_behind_ball_point() {
        let field = FieldSpec::default();
        let p = BehaviorParams::default();
        let body = Body::default();
        let ball = Vec2::new(1.0, 0.5);
        let target = field.opponent_goal_center();
        let b = behind_ball_point(ball, target, 0.65, Foot::Right, &body);
        let pose = Pose2D::new(b.x, b.y, (target - ball).angle());
        let a = ball_approach(&pose, Some(ball), target, 0.65, Foot::Right, ApproachMode::Near, &p, &body).unwrap();
        assert!(a.complete);
        assert!(ball_approach(&pose, None, target, 0.65, Foot::Right, ApproachMode::Near, &p, &body).is_none());
    }

    #[test]
    fn halo_waypoints_stay_outside() {
        let ball = Vec2::new(0.3, -0.2);
        let goal = Vec2::new(-0.4, -0.2);
        for k in 0..72 {
            let a = k as f64 * core::f64::consts::TAU / 72.0;
            for r in [0.2, 0.65, 1.0, 3.0] {
                let robot = ball + Vec2::from_polar(r, a);
                let w = halo_waypoint(robot, ball, goal, 0.65);
                assert!(w.distance(ball) >= 0.65 - 1e-9);
            }
        }
    }

    #[test]
    fn no_obstacle_leaves_command_unchanged() {
        let p = BehaviorParams::default();
        let cmd = VelocityCommand::new(0.3, 0.1, 0.2);
        let (out, info) = avoid_obstacle(&cmd, &[Vec2::new(2.0, 0.0)], &p);
        assert_eq!(out, cmd);
        assert!(info.is_none());
    }

    #[test]
    fn obstacle_ahead_caps_radial_speed() {
        let p = BehaviorParams::default();
        let cmd = VelocityCommand::new(0.3, 0.0, 0.0);
        let (out, info) = avoid_obstacle(&cmd, &[Vec2::new(1.0, 0.0)], &p);
        let info = info.unwrap();
        assert!(p.radial_cap(1.0) < 0.3);
        assert!(info.radial <= p.radial_cap(1.0) + 1e-9);
        assert!(out.speed() <= 0.3 + 1e-12);
        assert_eq!(out.omega, 0.0);
        let (out, _) = avoid_obstacle_forward(&cmd, &[Vec2::new(1.0, 0.0)], &p);
        assert_eq!(out.vy, 0.0);
        assert!(out.omega != 0.0);
        assert!(out.vx <= p.radial_cap(1.0) + 1e-12);
    }

    #[test]
    fn negative_cap_pushes_away() {
        let p = BehaviorParams::default();
        let cmd = VelocityCommand::new(0.3, 0.0, 0.0);
        let (_, info) = avoid_obstacle(&cmd, &[Vec2::new(0.25, 0.0)], &p);
        assert!(info.unwrap().radial < 0.0);
    }

    #[test]
    fn cap_is_nonincreasing_in_proximity() {
        let p = BehaviorParams::default();
        let mut last = f64::NEG_INFINITY;
        for k in 0..=150 {
            let c = p.radial_cap(k as f64 * 0.01);
            assert!(c >= last);
            last = c;
        }
    }

    #[test]
    fn unobstructed_target_is_unchanged() {
        let field = FieldSpec::default();
        let p = BehaviorParams::default();
        let d = adjust_ball_target(Vec2::ZERO, field.opponent_goal_center(), &[], &field, &p);
        assert_eq!(d.target, field.opponent_goal_center());
        assert!(!d.forced_dribble);
        assert_eq!(d.dribble_foot, DribbleFoot::Either);
    }

    #[test]
    fn close_obstacle_forces_dribble_with_far_foot() {
        let field = FieldSpec::default();
        let p = BehaviorParams::default();
        let ball = Vec2::ZERO;
        // 0.3 m to the right of the ball as seen along the target ray.
        let o = Vec2::new(0.0, -0.3);
        let d = adjust_ball_target(ball, field.opponent_goal_center(), &[o], &field, &p);
        assert!(d.forced_dribble);
        assert_eq!(d.dribble_foot, DribbleFoot::Left);
    }

    #[test]
    fn rotation_matches_sweep() {
        let field = FieldSpec::default();
        let p = BehaviorParams::default();
        let ball = Vec2::new(1.0, 0.2);
        let goal = field.opponent_goal_center();
        let o = ball + (goal - ball).normalized() * 1.0;
        let d = adjust_ball_target(ball, goal, &[o], &field, &p);
        let span = goal - ball;
        let mut sweep = f64::INFINITY;
        for sign in [1.0, -1.0] {
            for k in 0..=180 {
                let a = sign * (k as f64).to_radians();
                if !corridor_blocked(ball, ball + span.rotated(a), &[o], p.corridor_half_width) {
                    sweep = sweep.min(a.abs());
                    break;
                }
            }
        }
        assert!((d.rotation.abs() - sweep).abs() <= 1f64.to_radians());
        assert!(!corridor_blocked(ball, d.target, &[o], p.corridor_half_width));
    }

    #[test]
    fn dribble_corrections() {
        let p = BehaviorParams::default();
        let body = Body::default();
        let target = Vec2::new(4.5, 0.0);
        let pose = Pose2D::new(0.0, 0.0, 0.0);
        let on_line = Vec2::new(0.2, -body.foot_offset);
        let c = dribble_command(&pose, on_line, Vec2::new(4.5, -body.foot_offset), Foot::Right, &p, &body);
        assert!(c.vx > 0.0 && c.vy.abs() < 1e-12 && c.omega.abs() < 1e-12);
        let left = Vec2::new(0.2, -body.foot_offset + 0.05);
        assert!(dribble_command(&pose, left, target, Foot::Right, &p, &body).vy > 0.0);
        let turned = Pose2D::new(0.0, 0.0, 0.2);
        let ball = turned.ego_to_field(Vec2::new(0.2, -body.foot_offset));
        let tgt = ball + Vec2::new(3.0, 0.0);
        assert!(dribble_command(&turned, ball, tgt, Foot::Right, &p, &body).omega < 0.0);
    }

    fn aligned_setup(field: &FieldSpec) -> (Pose2D, Vec2) {
        let body = Body::default();
        let ball = Vec2::new(1.0, 0.0);
        let b = behind_ball_point(ball, field.opponent_goal_center(), 0.65, Foot::Right, &body);
        (Pose2D::new(b.x, b.y, 0.0), ball)
    }

    #[test]
    fn aligned_near_enters_kick_and_triggers() {
        let field = FieldSpec::default();
        let p = BehaviorParams::default();
        let (pose, ball) = aligned_setup(&field);
        let c = ctx(&field, pose, Some(ball), &[]);
        let gs = game_fsm_step(&GameState::new(&field), &c, &p);
        let bs = BehaviourState {
            state: BehaviourMode::GoBehindBallNear,
            ..BehaviourState::new(&p)
        };
        let out = behaviour_fsm_step(&bs, &gs, &c, &p);
        assert_eq!(out.state.state, BehaviourMode::Kick);

        // At the ball the trigger fires with the foot on the ball's side.
        let at = Pose2D::new(ball.x - 0.22, ball.y + 0.08, 0.0);
        let c = ctx(&field, at, Some(ball), &[]);
        let out = behaviour_fsm_step(&out.state, &gs, &c, &p);
        assert_eq!(out.command.trigger, crate::sim::Trigger::KickRight);
        assert_eq!(out.state.state, BehaviourMode::Kick);

        // The robot holds without re-triggering until the hold has elapsed.
        let mut c = c;
        c.time += p.kick_hold / 2.0;
        let held = behaviour_fsm_step(&out.state, &gs, &c, &p);
        assert_eq!(held.command.trigger, crate::sim::Trigger::None);
        assert_eq!(held.state.state, BehaviourMode::Kick);
        c.time += p.kick_hold;
        let out = behaviour_fsm_step(&held.state, &gs, &c, &p);
        assert_eq!(out.state.state, BehaviourMode::GoBehindBallFar);
        assert_eq!(out.transition.map(|t| t.reason), Some("kick_done"));
        assert!(is_behaviour_edge(BehaviourMode::Kick, BehaviourMode::GoBehindBallFar));
    }

    #[test]
    fn dribble_lock_tolerates_drift_then_releases() {
        let field = FieldSpec::default();
        let p = BehaviorParams::default();
        let body = Body::default();
        let ball = Vec2::new(0.0, 0.0);
        let o = [ObstacleCluster {
            position: Vec2::new(0.3, -0.2),
            label: crate::perception::ObstacleLabel::Rival,
            certainty: 0.9,
            last_seen: 0.0,
        }];
        let bs = BehaviourState {
            state: BehaviourMode::Dribble,
            dribble_lock: true,
            foot: Foot::Right,
            ..BehaviourState::new(&p)
        };
        let target = Vec2::new(4.5, 0.0);
        // Drift of twice the entry tolerance stays locked.
        let pose = Pose2D::new(-0.3, body.foot_offset + 2.0 * p.kick_lateral_tol, 0.0);
        let c = ctx(&field, pose, Some(ball), &o);
        let gs = GameState {
            forced_dribble: true,
            ball_target: target,
            ..GameState::new(&field)
        };
        let out = behaviour_fsm_step(&bs, &gs, &c, &p);
        assert_eq!(out.state.state, BehaviourMode::Dribble);
        let pose = Pose2D::new(-0.3, body.foot_offset + 3.0 * p.kick_lateral_tol, 0.0);
        let c = ctx(&field, pose, Some(ball), &o);
        let out = behaviour_fsm_step(&bs, &gs, &c, &p);
        assert_eq!(out.state.state, BehaviourMode::GoBehindBallFar);
    }

    #[test]
    fn hysteresis_band() {
        let field = FieldSpec::default();
        let p = BehaviorParams::default();
        let gs = GameState::new(&field);
        let ball = Vec2::new(1.15, 0.0);
        let c = ctx(&field, Pose2D::new(0.0, 0.0, 0.0), Some(ball), &[]);
        for s in [BehaviourMode::GoBehindBallFar, BehaviourMode::GoBehindBallNear] {
            let bs = BehaviourState {
                state: s,
                ..BehaviourState::new(&p)
            };
            assert_eq!(behaviour_fsm_step(&bs, &gs, &c, &p).state.state, s);
        }
    }

    #[test]
    fn edge_sets_are_consistent() {
        for &(a, b) in BEHAVIOUR_EDGES {
            assert_ne!(a, b);
        }
        for &(a, b) in GAME_EDGES {
            assert_ne!(a, b);
        }
        assert!(!is_behaviour_edge(BehaviourMode::GoBehindBallFar, BehaviourMode::Kick));
    }
}
