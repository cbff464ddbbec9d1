//! Closed-loop episodes: the world simulation, one agent per robot, sensor
//! models and trace logging.

use soccer_core::agent::{Agent, AgentOutput, Proprioception};
use soccer_core::behaviors::{BehaviourMode, Body};
use soccer_core::checks;
use soccer_core::field::{start_poses, StartPoseLabel};
use soccer_core::geometry::{angle_diff, mirror_point, mirror_pose};
use soccer_core::localization::BankMode;
use soccer_core::perception::{observe, NoiseModel, Observation};
use soccer_core::rng::{substream, Module};
use soccer_core::sim::{spawn_scenario, ScenarioName, SimEvent, Status, Team, WorldState};
use soccer_core::{ConfigError, Pose2D, SimParams, Vec2};

use crate::config::RunConfig;
use crate::report::{GoalRecord, LockRecord, RunReport};
use crate::trace::{EventKind, TraceBuf};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("simulation: {0}")]
    Sim(#[from] soccer_core::Error),
}

pub struct RunOutput {
    pub report: RunReport,
    pub trace: String,
}

/// Runs the configured scenario for one seed.
pub fn run(config: &RunConfig, seed: u64) -> Result<RunOutput, HarnessError> {
    config.validate()?;
    match config.scenario.kind().map_err(|e| e.in_section("scenario"))? {
        ScenarioName::MovingBallChallenge => Ok(crate::challenge::run_challenge(
            config,
            seed,
            config.scenario.layout.d_ramp,
            config.scenario.layout.release_speed,
        )?),
        kind => Episode::new(config, kind, seed)?.run(),
    }
}

pub fn to_team_point(team: Team, p: Vec2) -> Vec2 {
    match team {
        Team::Home => p,
        Team::Away => mirror_point(p),
    }
}

pub fn to_team_pose(team: Team, p: Pose2D) -> Pose2D {
    match team {
        Team::Home => p,
        Team::Away => mirror_pose(p),
    }
}

/// Odometry and gyro readings for the motion from `prev` to `now`.
pub fn sense(config: &RunConfig, seed: u64, step: u64, id: u32, prev: &Pose2D, now: &Pose2D) -> Proprioception {
    let dt = config.sim.dt;
    let loc = &config.localization;
    let delta = prev.relative(now);
    let d = Vec2::new(delta.x, delta.y);
    let mut odo = substream(seed, Module::Odometry, step, id as u64);
    let sigma = loc.odometry_noise_coeff * d.norm();
    let odometry = Vec2::new(d.x + odo.gaussian(sigma), d.y + odo.gaussian(sigma));
    let mut gyro = substream(seed, Module::Gyro, step, id as u64);
    let omega_true = angle_diff(now.theta, prev.theta) / dt;
    Proprioception {
        odometry,
        omega_measured: omega_true + loc.gyro_bias + gyro.gaussian(loc.gyro_noise_std),
        dt,
    }
}

/// Writes the observation rows used for the field-of-view check and returns
/// how many of them lie outside the view.
pub fn log_observation(trace: &mut TraceBuf, now: f64, id: u32, obs: &Observation, view: &NoiseModel) -> u64 {
    let mut outside = 0;
    let mut check = |p: Vec2| outside += u64::from(!checks::within_view(p, view));
    if let Some(b) = obs.ball {
        check(b.r);
        trace
            .row(now, EventKind::Obs, Some(id), Some(b.r.x), Some(b.r.y), None)
            .kv("what", "ball")
            .kv("p", b.p);
    }
    for l in obs.landmarks.iter().filter(|l| l.kind.is_confirming()) {
        check(l.position);
        trace
            .row(now, EventKind::Obs, Some(id), Some(l.position.x), Some(l.position.y), None)
            .kv("what", l.kind.name());
    }
    for c in &obs.obstacle_candidates {
        check(c.position);
        trace
            .row(now, EventKind::Obs, Some(id), Some(c.position.x), Some(c.position.y), None)
            .kv("what", "obstacle");
    }
    outside
}

struct Slot {
    id: u32,
    team: Team,
    agent: Agent,
    prev: Pose2D,
    truth_label: Option<StartPoseLabel>,
    near_far: Vec<(u64, BehaviourMode, BehaviourMode)>,
}

struct Episode<'a> {
    config: &'a RunConfig,
    kind: ScenarioName,
    seed: u64,
    world: WorldState,
    slots: Vec<Slot>,
    trace: TraceBuf,
    report: RunReport,
    positioning_until: f64,
}

impl<'a> Episode<'a> {
    fn new(config: &'a RunConfig, kind: ScenarioName, seed: u64) -> Result<Self, HarnessError> {
        let field = config.field;
        let world = spawn_scenario(kind, &field, &config.sim, &config.scenario.layout, seed)
            .map_err(|e| e.in_section("scenario"))?;
        let body = Body::from(&config.sim);
        let params = config.agent_params();
        let mut slots = Vec::new();
        for robot in &world.robots {
            let (agent, truth_label) = if kind == ScenarioName::Match {
                let label = match robot.team {
                    Team::Home => config.scenario.layout.home_start,
                    Team::Away => config.scenario.layout.away_start,
                };
                (Agent::new(robot.id, field, body, label, params.clone(), 0.0)?, Some(label))
            } else {
                let pose = to_team_pose(robot.team, robot.pose);
                (Agent::with_known_pose(robot.id, field, body, params.clone(), pose, 0.0)?, None)
            };
            slots.push(Slot {
                id: robot.id,
                team: robot.team,
                agent,
                prev: robot.pose,
                truth_label,
                near_far: Vec::new(),
            });
        }
        Ok(Self {
            config,
            kind,
            seed,
            world,
            slots,
            trace: TraceBuf::new(),
            report: RunReport::new(kind.name(), seed),
            positioning_until: 0.0,
        })
    }

    fn log_config(&mut self) {
        let c = self.config;
        let f = &c.field;
        self.trace
            .row(0.0, EventKind::Config, None, None, None, None)
            .kv("scenario", self.kind.name())
            .kv("seed", self.seed)
            .kv("dt", c.sim.dt)
            .kv("length", f.length)
            .kv("width", f.width)
            .kv("goal_width", f.goal_width)
            .kv("goal_area_length", f.goal_area_length)
            .kv("goal_area_width", f.goal_area_width)
            .kv("center_circle_radius", f.center_circle_radius)
            .kv("fov", c.noise.fov)
            .kv("max_range", c.noise.max_range)
            .kv("d_repel", c.behavior.d_repel)
            .kv("influence_radius", c.behavior.influence_radius)
            .kv("v_cap", c.behavior.v_cap)
            .kv("halo_radius", c.behavior.halo_radius);
        for o in &self.world.obstacles {
            self.trace
                .row(0.0, EventKind::Obstacle, Some(o.id), Some(o.position.x), Some(o.position.y), None)
                .kv("radius", o.radius);
        }
    }

    fn violation(&mut self, kind: &str) {
        *self.report.violations.entry(kind.to_string()).or_default() += 1;
    }

    fn total_steps(&self) -> u64 {
        let dt = self.config.sim.dt;
        let s = &self.config.scenario;
        let seconds = match self.kind {
            ScenarioName::Match => s.half_duration * s.halves as f64,
            _ => s.drill_timeout,
        };
        (seconds / dt).round() as u64
    }

    fn run(mut self) -> Result<RunOutput, HarnessError> {
        self.log_config();
        let dt = self.config.sim.dt;
        let half_steps = (self.config.scenario.half_duration / dt).round() as u64;
        let total = self.total_steps();
        let mut restart_pending = self.config.scenario.restart_at;
        let mut finish_at: Option<u64> = None;
        for step in 0..total {
            let now = self.world.time;
            if self.kind == ScenarioName::Match && step > 0 && step % half_steps == 0 {
                self.trace.row(now, EventKind::Half, None, None, None, None).kv("half", step / half_steps + 1);
                self.kickoff(now);
            }
            if restart_pending.is_some_and(|t| now >= t - 1e-9) {
                restart_pending = None;
                self.restart_robot0(now)?;
            }
            let positioning = now < self.positioning_until - 1e-9;
            if positioning {
                self.world.ball.position = Vec2::ZERO;
                self.world.ball.velocity = Vec2::ZERO;
            }
            for i in 0..self.slots.len() {
                self.control(i, step, now, positioning)?;
            }
            for r in &self.world.robots {
                self.trace
                    .row(now, EventKind::Robot, Some(r.id), Some(r.pose.x), Some(r.pose.y), Some(r.pose.theta));
            }
            let b = self.world.ball;
            self.trace
                .row(now, EventKind::Ball, None, Some(b.position.x), Some(b.position.y), None)
                .kv("vx", b.velocity.x)
                .kv("vy", b.velocity.y);

            self.world.step(&self.config.sim)?;
            let kicked = log_events(&mut self.trace, &mut self.report, &self.world, &self.config.sim, now);
            if self.kind != ScenarioName::Match && kicked && finish_at.is_none() {
                finish_at = Some(step + (1.0 / dt).round() as u64);
            }
            match self.world.status {
                Status::Running => {}
                Status::GoalScored if self.kind == ScenarioName::Match => self.kickoff(self.world.time),
                Status::BallOut if self.kind == ScenarioName::Match => {
                    let f = &self.config.field;
                    let p = self.world.ball.position;
                    self.world.ball.position = Vec2::new(
                        p.x.clamp(-f.half_length() + 0.3, f.half_length() - 0.3),
                        p.y.clamp(-f.half_width() + 0.3, f.half_width() - 0.3),
                    );
                    self.world.ball.velocity = Vec2::ZERO;
                    self.world.status = Status::Running;
                }
                _ => break,
            }
            if finish_at.is_some_and(|s| step >= s) {
                break;
            }
        }
        for slot in &self.slots {
            let n = checks::near_far_oscillations(&slot.near_far).len() as u64;
            if n > 0 {
                *self.report.violations.entry("oscillation".into()).or_default() += n;
            }
        }
        Ok(RunOutput {
            report: self.report,
            trace: self.trace.into_string(),
        })
    }

    /// Ball to the center spot and a positioning phase.
    fn kickoff(&mut self, now: f64) {
        self.world.ball.position = Vec2::ZERO;
        self.world.ball.velocity = Vec2::ZERO;
        self.world.pending_kicks.clear();
        self.world.status = Status::Running;
        self.positioning_until = now + self.config.scenario.positioning_duration;
    }

    fn restart_robot0(&mut self, now: f64) -> Result<(), HarnessError> {
        let Some(slot) = self.slots.iter_mut().find(|s| s.id == 0) else {
            return Ok(());
        };
        let label = StartPoseLabel::SidelineLeft;
        let pose = to_team_pose(slot.team, start_poses(&self.config.field)[label.index()].pose);
        self.world.robot_mut(0)?.pose = pose;
        slot.agent.restart(now)?;
        slot.prev = pose;
        slot.truth_label = Some(label);
        self.trace
            .row(now, EventKind::Restart, Some(0), Some(pose.x), Some(pose.y), Some(pose.theta));
        Ok(())
    }

    fn control(&mut self, i: usize, step: u64, now: f64, positioning: bool) -> Result<(), HarnessError> {
        let id = self.slots[i].id;
        let truth = self.world.robot(id)?.pose;
        let sense = sense(self.config, self.seed, step, id, &self.slots[i].prev, &truth);
        let obs = observe(
            &self.world,
            id,
            &self.config.noise,
            self.slots[i].agent.catalog(),
            &self.config.perception.signatures,
        )?;
        let outside = log_observation(&mut self.trace, now, id, &obs, &self.config.noise);
        if outside > 0 {
            *self.report.violations.entry("fov".into()).or_default() += outside;
        }
        let out = self.slots[i].agent.step(&obs, &sense, positioning)?;
        self.log_agent(i, step, now, &out);
        self.world.set_command(id, out.command)?;
        self.slots[i].prev = truth;
        Ok(())
    }

    fn log_agent(&mut self, i: usize, step: u64, now: f64, out: &AgentOutput) {
        let slot = &self.slots[i];
        let (id, team) = (slot.id, slot.team);
        let world = |p: Vec2| to_team_point(team, p);
        let bank = &slot.agent.bank;
        let every = self.config.scenario.loc_trace_every;
        let mut pending: Vec<&'static str> = Vec::new();

        if bank.mode == BankMode::Converging || step.is_multiple_of(every) || out.locked_now {
            for (k, h) in bank.hypotheses.iter().enumerate() {
                let p = to_team_pose(team, h.pose);
                self.trace
                    .row(now, EventKind::Loc, Some(id), Some(p.x), Some(p.y), Some(p.theta))
                    .kv("hyp", k)
                    .kv("label", h.start_label.name())
                    .kv("score", h.score)
                    .kv("alive", h.alive)
                    .kv("mode", bank.mode.name());
            }
        }
        if out.locked_now {
            if let Some(lock) = bank.lock {
                let truth = slot.truth_label.map(|l| l.name());
                let mut row = self
                    .trace
                    .row(now, EventKind::Lock, Some(id), None, None, None)
                    .kv("label", lock.label.name())
                    .kv("confirmed", lock.confirmed);
                if let Some(t) = truth {
                    row = row.kv("truth", t);
                }
                drop(row);
                self.report.locks.push(LockRecord {
                    actor: id,
                    time: now,
                    label: lock.label.name().to_string(),
                    truth: truth.map(str::to_string),
                    confirmed: lock.confirmed,
                });
            }
        }

        for c in &slot.agent.clusters {
            let p = world(out.estimate.pose.ego_to_field(c.position));
            self.trace
                .row(now, EventKind::Cluster, Some(id), Some(p.x), Some(p.y), None)
                .kv("label", c.label.name())
                .kv("certainty", c.certainty);
            if !checks::certainty_in_range(c.certainty) {
                pending.push("certainty");
            }
        }

        if let Some((from, to)) = out.game_transition {
            self.trace
                .row(now, EventKind::Transition, Some(id), None, None, None)
                .kv("fsm", "game")
                .kv("from", from.name())
                .kv("to", to.name())
                .kv("step", step);
            *self
                .report
                .transitions
                .entry(RunReport::transition_key("game", from.name(), to.name()))
                .or_default() += 1;
            if !checks::game_edge_ok(from, to) {
                pending.push("edge");
            }
        }

        let cmd = out.command;
        let state = out.behaviour.map(|b| b.state.state.name()).unwrap_or("standby");
        let mut row = self
            .trace
            .row(now, EventKind::Cmd, Some(id), Some(cmd.vx), Some(cmd.vy), Some(cmd.omega))
            .kv("state", state)
            .kv("trigger", cmd.trigger.name());
        if let Some(b) = out.behaviour {
            if let Some(a) = b.avoidance {
                row = row.kv("ox", a.obstacle.x).kv("oy", a.obstacle.y).kv("cap", a.cap);
                let u = a.obstacle * (1.0 / a.obstacle.norm());
                if !checks::radial_within_cap(cmd.linear().dot(u), a.cap) {
                    pending.push("cap");
                }
            }
            if !checks::far_case_pure(b.state.state, cmd.vy) {
                pending.push("far_purity");
            }
        }
        drop(row);

        if let Some(b) = out.behaviour {
            if let Some(t) = b.transition {
                self.trace
                    .row(now, EventKind::Transition, Some(id), None, None, None)
                    .kv("fsm", "behaviour")
                    .kv("from", t.from.name())
                    .kv("to", t.to.name())
                    .kv("reason", t.reason)
                    .kv("step", step);
                *self
                    .report
                    .transitions
                    .entry(RunReport::transition_key("behaviour", t.from.name(), t.to.name()))
                    .or_default() += 1;
                if !checks::behaviour_edge_ok(t.from, t.to) {
                    pending.push("edge");
                }
                self.slots[i].near_far.push((step, t.from, t.to));
            }
            if let (Some(target), true) = (b.target, b.state.state.is_approach()) {
                let slot = &self.slots[i];
                if let Some(ball) = slot.agent.ball_ego.map(|e| out.estimate.pose.ego_to_field(e)) {
                    let (t, bw) = (world(target), world(ball));
                    self.trace
                        .row(now, EventKind::Halo, Some(id), Some(t.x), Some(t.y), None)
                        .kv("bx", bw.x)
                        .kv("by", bw.y)
                        .kv("radius", b.state.halo_radius);
                    if !checks::target_outside_halo(t, bw, b.state.halo_radius) {
                        pending.push("halo");
                    }
                }
            }
        }
        for kind in pending {
            self.violation(kind);
        }
    }
}

/// Logs the simulator events of the step that started at `now`; returns
/// whether a kick made contact.
pub(crate) fn log_events(
    trace: &mut TraceBuf,
    report: &mut RunReport,
    world: &WorldState,
    sim: &SimParams,
    now: f64,
) -> bool {
    let mut kicked = false;
    for &e in &world.events {
        match e {
            SimEvent::KickTriggered { robot_id, foot, due } => {
                trace
                    .row(now, EventKind::Kick, Some(robot_id), None, None, None)
                    .kv("phase", "triggered")
                    .kv("foot", foot.name())
                    .kv("due", due);
            }
            SimEvent::Kick {
                robot_id,
                foot,
                ball,
                velocity,
            } => {
                let distance = world
                    .robot(robot_id)
                    .map(|r| r.pose.ego_to_field(sim.foot_point(foot)).distance(ball))
                    .unwrap_or(f64::NAN);
                trace
                    .row(now, EventKind::Kick, Some(robot_id), Some(ball.x), Some(ball.y), None)
                    .kv("phase", "contact")
                    .kv("foot", foot.name())
                    .kv("distance", distance)
                    .kv("vx", velocity.x)
                    .kv("vy", velocity.y);
                report.kicks += 1;
                kicked = true;
            }
            SimEvent::KickRejected {
                robot_id,
                foot,
                distance,
            } => {
                trace
                    .row(now, EventKind::Kick, Some(robot_id), None, None, None)
                    .kv("phase", "rejected")
                    .kv("foot", foot.name())
                    .kv("distance", distance);
                report.rejected_kicks += 1;
            }
            SimEvent::Goal { scoring, at } => {
                let team = match scoring {
                    Team::Home => "home",
                    Team::Away => "away",
                };
                trace
                    .row(now, EventKind::Goal, None, Some(at.x), Some(at.y), None)
                    .kv("team", team);
                match scoring {
                    Team::Home => report.score_home += 1,
                    Team::Away => report.score_away += 1,
                }
                report.goals.push(GoalRecord {
                    time: now,
                    team: team.to_string(),
                });
            }
            SimEvent::BallOut { at } => {
                trace.row(now, EventKind::BallOut, None, Some(at.x), Some(at.y), None);
            }
            SimEvent::Collision {
                robot_id,
                other_id,
                distance,
            } => {
                trace
                    .row(now, EventKind::Collision, Some(robot_id), None, None, None)
                    .kv("other", other_id)
                    .kv("distance", distance);
                report.collisions += 1;
            }
            SimEvent::BallContact { .. } => {}
        }
    }
    kicked
}
