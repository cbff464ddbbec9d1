//! Moving-ball challenge: the robot stands with a foot on the kick spot while
//! the ball rolls across it, and the kick timing controller decides when to
//! trigger.

use soccer_core::field::landmark_catalog;
use soccer_core::kick_timing::{kick_controller_step, BallTrack, KickPhase};
use soccer_core::perception::observe;
use soccer_core::sim::{spawn_scenario, ScenarioName, SimEvent, Status, Trigger, VelocityCommand};

use crate::config::RunConfig;
use crate::harness::{log_events, log_observation, HarnessError, RunOutput};
use crate::report::{travel_time, ChallengeOutcome, RunReport};
use crate::trace::{EventKind, TraceBuf};

/// One trial with the ball released `d_ramp` from the kick spot at `speed`.
pub fn run_challenge(config: &RunConfig, seed: u64, d_ramp: f64, speed: f64) -> Result<RunOutput, HarnessError> {
    let mut layout = config.scenario.layout.clone();
    layout.d_ramp = d_ramp;
    layout.release_speed = speed;
    let mut sim = config.sim;
    sim.ball_friction_decel = config.scenario.challenge_friction;
    let friction = sim.ball_friction_decel;
    let mut world = spawn_scenario(ScenarioName::MovingBallChallenge, &config.field, &sim, &layout, seed)
        .map_err(|e| e.in_section("scenario"))?;
    let catalog = landmark_catalog(&config.field).map_err(|e| e.in_section("field"))?;
    let mut params = config.kick_timing;
    params.r_kick = sim.foot_point(layout.kick_foot);
    let latency = sim.kick_latency;

    let mut trace = TraceBuf::new();
    let f = &config.field;
    trace
        .row(0.0, EventKind::Config, None, None, None, None)
        .kv("scenario", ScenarioName::MovingBallChallenge.name())
        .kv("seed", seed)
        .kv("dt", sim.dt)
        .kv("length", f.length)
        .kv("width", f.width)
        .kv("goal_width", f.goal_width)
        .kv("goal_area_length", f.goal_area_length)
        .kv("goal_area_width", f.goal_area_width)
        .kv("center_circle_radius", f.center_circle_radius)
        .kv("fov", config.noise.fov)
        .kv("max_range", config.noise.max_range)
        .kv("d_repel", config.behavior.d_repel)
        .kv("influence_radius", config.behavior.influence_radius)
        .kv("v_cap", config.behavior.v_cap)
        .kv("d_ramp", d_ramp)
        .kv("speed", speed)
        .kv("friction", friction)
        .kv("latency", latency)
        .kv("kick_region_radius", sim.kick_region_radius);

    let mut report = RunReport::new(ScenarioName::MovingBallChallenge.name(), seed);
    let arrival = travel_time(d_ramp, speed, friction);
    let mut outcome = ChallengeOutcome {
        d_ramp,
        speed,
        friction,
        latency,
        kick_region_radius: sim.kick_region_radius,
        ideal_trigger_time: arrival.unwrap_or(f64::INFINITY) - latency,
        trigger_time: None,
        contact_distance: None,
        goal: false,
    };

    let horizon = arrival.unwrap_or(config.scenario.drill_timeout).min(config.scenario.drill_timeout) + 3.0;
    let steps = (horizon / sim.dt).round() as u64;
    let mut track = BallTrack::new(params);
    let mut phase = KickPhase::Standing;
    let mut stop_at: Option<u64> = None;
    for step in 0..steps {
        let now = world.time;
        let obs = observe(&world, 0, &config.noise, &catalog, &config.perception.signatures)?;
        let outside = log_observation(&mut trace, now, 0, &obs, &config.noise);
        if outside > 0 {
            *report.violations.entry("fov".into()).or_default() += outside;
        }
        let (next, trigger) = kick_controller_step(&mut track, phase, &obs, now, params.kick_latency);
        if let Some(e) = track.last_estimate.filter(|e| e.time == now) {
            trace
                .row(now, EventKind::Estimate, Some(0), Some(e.v_smooth), Some(e.t_arrive), None)
                .kv("phase", next.name());
        }
        phase = next;
        world.set_command(0, VelocityCommand::stop().with_trigger(trigger.unwrap_or(Trigger::None)))?;
        let r = world.robot(0)?.pose;
        trace.row(now, EventKind::Robot, Some(0), Some(r.x), Some(r.y), Some(r.theta));
        let b = world.ball;
        trace
            .row(now, EventKind::Ball, None, Some(b.position.x), Some(b.position.y), None)
            .kv("vx", b.velocity.x)
            .kv("vy", b.velocity.y);

        world.step(&sim)?;
        for e in &world.events {
            match *e {
                SimEvent::KickTriggered { .. } => outcome.trigger_time = Some(now),
                SimEvent::KickRejected { distance, .. } => outcome.contact_distance = Some(distance),
                _ => {}
            }
        }
        let kicked = log_events(&mut trace, &mut report, &world, &sim, now);
        if kicked {
            let contact = world.events.iter().find_map(|e| match *e {
                SimEvent::Kick { foot, ball, .. } => Some(world.robot(0).map(|r| r.pose.ego_to_field(sim.foot_point(foot)).distance(ball))),
                _ => None,
            });
            if let Some(d) = contact {
                outcome.contact_distance = Some(d?);
            }
        }
        if outcome.contact_distance.is_some() && stop_at.is_none() {
            stop_at = Some(step + (2.0 / sim.dt).round() as u64);
        }
        if world.status != Status::Running || stop_at.is_some_and(|s| step >= s) {
            break;
        }
    }
    outcome.goal = report.score_home > 0;
    report.challenge = Some(outcome);
    Ok(RunOutput {
        report,
        trace: trace.into_string(),
    })
}
