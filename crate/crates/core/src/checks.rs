//! Invariant checks over logged quantities. The simulator-side assertions
//! and the offline trace verifier share these predicates.

use alloc::vec::Vec;

use crate::behaviors::{corridor_blocked, is_behaviour_edge, is_game_edge, BehaviourMode, GameMode};
use crate::geometry::Vec2;
use crate::perception::NoiseModel;

/// Slack for comparisons that went through text formatting.
pub const TOLERANCE: f64 = 1e-9;

pub fn radial_within_cap(radial: f64, cap: f64) -> bool {
    radial <= cap + TOLERANCE
}

pub fn target_outside_halo(target: Vec2, ball: Vec2, halo_radius: f64) -> bool {
    target.distance(ball) >= halo_radius - TOLERANCE
}

pub fn certainty_in_range(c: f64) -> bool {
    (0.0..=1.0).contains(&c)
}

/// Whether an egocentric position could have been perceived.
pub fn within_view(p: Vec2, noise: &NoiseModel) -> bool {
    let d = p.norm();
    d <= noise.max_range + TOLERANCE && d > 0.0 && p.angle().abs() <= noise.fov / 2.0 + TOLERANCE
}

pub fn behaviour_edge_ok(from: BehaviourMode, to: BehaviourMode) -> bool {
    is_behaviour_edge(from, to)
}

pub fn game_edge_ok(from: GameMode, to: GameMode) -> bool {
    is_game_edge(from, to)
}

/// Far-case purity: no side-stepping while walking in the far case.
pub fn far_case_pure(state: BehaviourMode, vy: f64) -> bool {
    state != BehaviourMode::GoBehindBallFar || vy == 0.0
}

/// A forced dribble must be backed by an obstacle in the corridor toward
/// the original goal target or an obstacle close to the ball.
pub fn forced_dribble_sound(
    ball: Vec2,
    goal_target: Vec2,
    obstacles: &[Vec2],
    corridor_half_width: f64,
    close_threshold: f64,
) -> bool {
    corridor_blocked(ball, goal_target, obstacles, corridor_half_width + TOLERANCE)
        || obstacles
            .iter()
            .any(|o| o.distance(ball) < close_threshold + TOLERANCE)
}

/// Indices into `steps` where a near/far transition is immediately undone on
/// the next step. Entries are `(step_index, from, to)` for one robot.
pub fn near_far_oscillations(steps: &[(u64, BehaviourMode, BehaviourMode)]) -> Vec<usize> {
    use BehaviourMode::{GoBehindBallFar as Far, GoBehindBallNear as Near};
    steps
        .windows(2)
        .enumerate()
        .filter(|(_, w)| {
            let (s0, a0, b0) = w[0];
            let (s1, a1, b1) = w[1];
            s1 == s0 + 1
                && ((a0, b0) == (Far, Near) || (a0, b0) == (Near, Far))
                && (a1, b1) == (b0, a0)
        })
        .map(|(i, _)| i + 1)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use BehaviourMode::*;

    #[test]
    fn detects_oscillation_only_on_consecutive_steps() {
        let steps = [
            (10, GoBehindBallFar, GoBehindBallNear),
            (11, GoBehindBallNear, GoBehindBallFar),
            (40, GoBehindBallFar, GoBehindBallNear),
            (60, GoBehindBallNear, GoBehindBallFar),
        ];
        assert_eq!(near_far_oscillations(&steps), alloc::vec![1]);
    }

    #[test]
    fn predicates() {
        assert!(radial_within_cap(0.2, 0.2));
        assert!(!radial_within_cap(0.21, 0.2));
        assert!(target_outside_halo(Vec2::new(0.65, 0.0), Vec2::ZERO, 0.65));
        assert!(!target_outside_halo(Vec2::new(0.5, 0.0), Vec2::ZERO, 0.65));
        assert!(!certainty_in_range(1.01));
        let noise = NoiseModel::default();
        assert!(within_view(Vec2::new(1.0, 0.0), &noise));
        assert!(!within_view(Vec2::new(-1.0, 0.0), &noise));
        assert!(!far_case_pure(GoBehindBallFar, 0.1));
        assert!(far_case_pure(GoBehindBallNear, 0.1));
    }
}
