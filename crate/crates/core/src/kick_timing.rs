//! Kick timing against a rolling ball.
//!
//! Ball detections `⟨p, r, t⟩` are pushed onto a stack. The two most recent
//! measurements that pass the admission rule give a pairwise speed
//! `d(r2, r1) / (t2 - t1)`, each estimate enters a bounded deque whose mean is
//! the smoothed speed, and the time of arrival at the kick position is
//! `d(r_kick, r2) / v_smooth`. The controller stands, executes a pre-kick
//! motion, waits, and fires the kick once the predicted arrival is no later
//! than the kick motion's latency.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, Error, Result};
use crate::geometry::Vec2;
use crate::perception::Observation;
use crate::sim::{Foot, Trigger};

/// One ball detection in the robot-centered frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallMeasurement {
    /// Detection confidence in `[0, 1]`.
    pub p: f64,
    pub r: Vec2,
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AdmissionRule {
    /// Both confidences above `p_min` and the time gap above `delta_t`.
    #[default]
    And,
    /// Both confidences above `p_min`, or the time gap above `delta_t`.
    Or,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KickTimingParams {
    pub p_min: f64,
    pub delta_t: f64,
    /// Maximum size of the velocity deque.
    pub n: usize,
    /// Ball position, robot frame, at which the kick connects best.
    pub r_kick: Vec2,
    /// Smoothed speeds at or below this count as a stationary ball.
    pub v_eps: f64,
    pub admission_rule: AdmissionRule,
    /// Trigger-to-contact delay of the kick motion.
    pub kick_latency: f64,
    pub pre_kick_duration: f64,
    /// Older measurements are discarded beyond this many.
    pub stack_capacity: usize,
}

impl Default for KickTimingParams {
    fn default() -> Self {
        Self {
            p_min: 0.5,
            delta_t: 0.1,
            n: 3,
            r_kick: Vec2::new(0.2, -0.08),
            v_eps: 0.02,
            admission_rule: AdmissionRule::And,
            kick_latency: 0.3,
            pre_kick_duration: 0.5,
            stack_capacity: 64,
        }
    }
}

impl KickTimingParams {
    pub fn validate(&self) -> core::result::Result<(), ConfigError> {
        if !(0.0..=1.0).contains(&self.p_min) {
            return Err(ConfigError::new("p_min", "must lie in [0, 1]"));
        }
        if !self.delta_t.is_finite() || self.delta_t <= 0.0 {
            return Err(ConfigError::new("delta_t", "must be finite and > 0"));
        }
        if self.n == 0 {
            return Err(ConfigError::new("n", "must be >= 1"));
        }
        if !self.r_kick.is_finite() {
            return Err(ConfigError::new("r_kick", "must be finite"));
        }
        if !self.v_eps.is_finite() || self.v_eps < 0.0 {
            return Err(ConfigError::new("v_eps", "must be finite and >= 0"));
        }
        if !self.kick_latency.is_finite() || self.kick_latency < 0.0 {
            return Err(ConfigError::new("kick_latency", "must be finite and >= 0"));
        }
        if !self.pre_kick_duration.is_finite() || self.pre_kick_duration < 0.0 {
            return Err(ConfigError::new("pre_kick_duration", "must be finite and >= 0"));
        }
        if self.stack_capacity < 2 {
            return Err(ConfigError::new("stack_capacity", "must be >= 2"));
        }
        Ok(())
    }

    /// Foot whose side of the body holds `r_kick`.
    pub fn kick_foot(&self) -> Foot {
        if self.r_kick.y >= 0.0 {
            Foot::Left
        } else {
            Foot::Right
        }
    }
}

/// The two most recent measurements `(s1, s2)`, `s1` older, that satisfy the
/// admission rule. Pairs are searched newest-first by `s2`, then by `s1`.
pub fn admit_pair(
    stack: &[BallMeasurement],
    p_min: f64,
    delta_t: f64,
    rule: AdmissionRule,
) -> Option<(BallMeasurement, BallMeasurement)> {
    for j in (1..stack.len()).rev() {
        let s2 = stack[j];
        for i in (0..j).rev() {
            let s1 = stack[i];
            let confident = s1.p > p_min && s2.p > p_min;
            let spaced = s2.t - s1.t > delta_t;
            let ok = match rule {
                AdmissionRule::And => confident && spaced,
                AdmissionRule::Or => confident || spaced,
            };
            if ok {
                return Some((s1, s2));
            }
        }
    }
    None
}

/// Pairwise ball speed, the Euclidean distance over the time difference.
pub fn estimate_velocity(s1: &BallMeasurement, s2: &BallMeasurement) -> Result<f64> {
    if !(s2.t > s1.t) {
        return Err(Error::Ordering { t1: s1.t, t2: s2.t });
    }
    Ok(s2.r.distance(s1.r) / (s2.t - s1.t))
}

/// Mean of the current deque contents.
pub fn smooth_velocity(v: &VecDeque<f64>) -> Result<f64> {
    if v.is_empty() {
        return Err(Error::State("velocity deque is empty"));
    }
    Ok(v.iter().sum::<f64>() / v.len() as f64)
}

/// Time for the ball to cover the distance from `r2` to `r_kick`.
pub fn time_of_arrival(r_kick: Vec2, r2: Vec2, v_smooth: f64, v_eps: f64) -> Result<f64> {
    if !(v_smooth > v_eps) {
        return Err(Error::StalledBall {
            speed: v_smooth,
            floor: v_eps,
        });
    }
    Ok(r_kick.distance(r2) / v_smooth)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub enum KickPhase {
    #[default]
    Standing,
    PreKick,
    Waiting,
    Kicking,
    Done,
}

impl KickPhase {
    pub fn name(self) -> &'static str {
        match self {
            KickPhase::Standing => "standing",
            KickPhase::PreKick => "pre_kick",
            KickPhase::Waiting => "waiting",
            KickPhase::Kicking => "kicking",
            KickPhase::Done => "done",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrivalEstimate {
    pub time: f64,
    pub v_smooth: f64,
    pub t_arrive: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallTrack {
    pub stack: Vec<BallMeasurement>,
    pub velocities: VecDeque<f64>,
    pub params: KickTimingParams,
    /// Timestamps of the last pair turned into a velocity estimate.
    last_pair: Option<(f64, f64)>,
    pre_kick_started: Option<f64>,
    pub last_estimate: Option<ArrivalEstimate>,
}

impl BallTrack {
    pub fn new(params: KickTimingParams) -> Self {
        Self {
            stack: Vec::new(),
            velocities: VecDeque::with_capacity(params.n),
            params,
            last_pair: None,
            pre_kick_started: None,
            last_estimate: None,
        }
    }

    /// Pushes a measurement; out-of-order or duplicate stamps are ignored.
    pub fn push_measurement(&mut self, m: BallMeasurement) {
        if self.stack.last().is_some_and(|last| m.t <= last.t) {
            return;
        }
        self.stack.push(m);
        if self.stack.len() > self.params.stack_capacity {
            let excess = self.stack.len() - self.params.stack_capacity;
            self.stack.drain(..excess);
        }
    }

    pub fn push_velocity(&mut self, v: f64) {
        if self.velocities.len() == self.params.n {
            self.velocities.pop_front();
        }
        self.velocities.push_back(v);
    }

    /// Feeds the newest admitted pair through the speed estimate and the
    /// deque, then predicts the arrival time. Returns the pair and the
    /// prediction when one is available.
    fn update_estimate(&mut self, now: f64) -> Option<(BallMeasurement, BallMeasurement, f64)> {
        let p = &self.params;
        let (s1, s2) = admit_pair(&self.stack, p.p_min, p.delta_t, p.admission_rule)?;
        if self.last_pair != Some((s1.t, s2.t)) {
            let v = estimate_velocity(&s1, &s2).ok()?;
            self.push_velocity(v);
            self.last_pair = Some((s1.t, s2.t));
        }
        let v_smooth = smooth_velocity(&self.velocities).ok()?;
        let t_arrive = time_of_arrival(self.params.r_kick, s2.r, v_smooth, self.params.v_eps).ok()?;
        self.last_estimate = Some(ArrivalEstimate {
            time: now,
            v_smooth,
            t_arrive,
        });
        Some((s1, s2, t_arrive))
    }
}

/// One control cycle of the moving-ball kick.
pub fn kick_controller_step(
    track: &mut BallTrack,
    phase: KickPhase,
    obs: &Observation,
    now: f64,
    kick_latency: f64,
) -> (KickPhase, Option<Trigger>) {
    if phase != KickPhase::Done {
        if let Some(ball) = obs.ball {
            track.push_measurement(ball);
        }
    }
    match phase {
        KickPhase::Standing => {
            track.pre_kick_started = Some(now);
            (KickPhase::PreKick, Some(Trigger::PreKick))
        }
        KickPhase::PreKick => {
            let started = *track.pre_kick_started.get_or_insert(now);
            if now - started >= track.params.pre_kick_duration - 1e-9 {
                (KickPhase::Waiting, None)
            } else {
                (KickPhase::PreKick, None)
            }
        }
        KickPhase::Waiting => {
            let Some((s1, s2, t_arrive)) = track.update_estimate(now) else {
                return (KickPhase::Waiting, None);
            };
            let r_kick = track.params.r_kick;
            let approaching = r_kick.distance(s2.r) < r_kick.distance(s1.r);
            if approaching && t_arrive <= kick_latency {
                (KickPhase::Kicking, Some(track.params.kick_foot().trigger()))
            } else {
                (KickPhase::Waiting, None)
            }
        }
        KickPhase::Kicking | KickPhase::Done => (KickPhase::Done, None),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn m(p: f64, x: f64, y: f64, t: f64) -> BallMeasurement {
        BallMeasurement {
            p,
            r: Vec2::new(x, y),
            t,
        }
    }

    #[test]
    fn admission_examples() {
        let s = [m(0.9, 0.0, 0.0, 0.0), m(0.9, 0.1, 0.0, 0.2)];
        assert!(admit_pair(&s, 0.5, 0.1, AdmissionRule::And).is_some());
        let s = [m(0.9, 0.0, 0.0, 0.0), m(0.3, 0.1, 0.0, 0.2)];
        assert!(admit_pair(&s, 0.5, 0.1, AdmissionRule::And).is_none());
        // The literal reading admits the same pair on the time gap alone.
        assert!(admit_pair(&s, 0.5, 0.1, AdmissionRule::Or).is_some());
        assert!(admit_pair(&s[..1], 0.5, 0.1, AdmissionRule::And).is_none());
    }

    #[test]
    fn and_rule_skips_back_to_a_spaced_pair() {
        let s: Vec<_> = (0..10).map(|k| m(0.9, k as f64 * 0.02, 0.0, k as f64 * 0.02)).collect();
        let (s1, s2) = admit_pair(&s, 0.5, 0.1, AdmissionRule::And).unwrap();
        assert_eq!(s2.t, s[9].t);
        assert!(s2.t - s1.t > 0.1);
        assert_eq!(s1.t, s[3].t);
    }

    #[test]
    fn velocity_examples() {
        let v = estimate_velocity(&m(1.0, 0.0, 0.0, 0.0), &m(1.0, 0.5, 0.0, 0.5)).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        let v = estimate_velocity(&m(1.0, 0.3, 0.3, 0.1), &m(1.0, 0.3, 0.3, 0.7)).unwrap();
        assert_eq!(v, 0.0);
        let v = estimate_velocity(&m(1.0, 0.0, 0.0, 0.0), &m(1.0, 0.3, 0.4, 1.0)).unwrap();
        assert!((v - 0.5).abs() < 1e-12);
        assert!(estimate_velocity(&m(1.0, 0.0, 0.0, 1.0), &m(1.0, 0.0, 0.0, 1.0)).is_err());
    }

    #[test]
    fn smoothing_examples() {
        let dq = |v: &[f64]| v.iter().copied().collect::<VecDeque<_>>();
        assert!((smooth_velocity(&dq(&[1.0, 1.0, 1.0])).unwrap() - 1.0).abs() < 1e-12);
        assert!((smooth_velocity(&dq(&[0.8, 1.0, 1.2])).unwrap() - 1.0).abs() < 1e-12);
        assert!((smooth_velocity(&dq(&[0.6])).unwrap() - 0.6).abs() < 1e-12);
        assert!(smooth_velocity(&dq(&[])).is_err());
    }

    #[test]
    fn arrival_examples() {
        let t = time_of_arrival(Vec2::new(0.6, 0.0), Vec2::ZERO, 1.2, 0.02).unwrap();
        assert!((t - 0.5).abs() < 1e-12);
        let k = Vec2::new(0.2, -0.1);
        assert_eq!(time_of_arrival(k, k, 1.0, 0.02).unwrap(), 0.0);
        assert!(matches!(
            time_of_arrival(k, Vec2::ZERO, 0.0, 0.02),
            Err(Error::StalledBall { .. })
        ));
    }

    #[test]
    fn deque_evicts_oldest() {
        let mut track = BallTrack::new(KickTimingParams::default());
        for v in [1.0, 2.0, 3.0, 4.0] {
            track.push_velocity(v);
        }
        assert_eq!(track.velocities, VecDeque::from(vec![2.0, 3.0, 4.0]));
    }

    #[test]
    fn phases_progress_and_trigger_at_boundary() {
        let params = KickTimingParams {
            r_kick: Vec2::new(0.6, 0.0),
            pre_kick_duration: 0.0,
            ..KickTimingParams::default()
        };
        let mut track = BallTrack::new(params);
        let empty = Observation::empty(0.0);
        let (phase, trig) = kick_controller_step(&mut track, KickPhase::Standing, &empty, 0.0, 0.5);
        assert_eq!((phase, trig), (KickPhase::PreKick, Some(Trigger::PreKick)));
        let (phase, _) = kick_controller_step(&mut track, phase, &empty, 0.0, 0.5);
        assert_eq!(phase, KickPhase::Waiting);

        // Ball rolling along +x at 1.2 m/s toward r_kick; the last sample
        // sits 0.6 m short of it, so the predicted arrival is exactly 0.5 s.
        for v in [1.2, 1.2, 1.2] {
            track.push_velocity(v);
        }
        track.push_measurement(m(0.9, -0.144, 0.0, 0.88));
        let obs = Observation {
            ball: Some(m(0.9, 0.0, 0.0, 1.0)),
            ..Observation::empty(1.0)
        };
        let (phase, trig) = kick_controller_step(&mut track, KickPhase::Waiting, &obs, 1.0, 0.5);
        assert_eq!(phase, KickPhase::Kicking);
        assert_eq!(trig, Some(Trigger::KickLeft));
        let (phase, _) = kick_controller_step(&mut track, phase, &obs, 1.02, 0.5);
        assert_eq!(phase, KickPhase::Done);
    }

    #[test]
    fn receding_ball_never_triggers() {
        let mut track = BallTrack::new(KickTimingParams::default());
        let mut phase = KickPhase::Waiting;
        for k in 0..50 {
            let t = k as f64 * 0.02;
            let obs = Observation {
                ball: Some(m(0.9, 0.3 + t, -0.08, t)),
                ..Observation::empty(t)
            };
            let (next, trig) = kick_controller_step(&mut track, phase, &obs, t, 5.0);
            assert!(trig.is_none());
            phase = next;
        }
        assert_eq!(phase, KickPhase::Waiting);
    }
}
