//! Field geometry, the landmark catalog and the legal start poses.
//!
//! The field frame has its origin at the center spot, +x toward the opponent
//! goal and +y to the left when looking at it.

use alloc::vec::Vec;
use core::cmp::Ordering;
use core::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::geometry::{Pose2D, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub length: f64,
    pub width: f64,
    pub goal_width: f64,
    pub goal_area_length: f64,
    pub goal_area_width: f64,
    pub center_circle_radius: f64,
    pub penalty_mark_distance: f64,
    pub line_width: f64,
}

impl Default for FieldSpec {
    fn default() -> Self {
        Self {
            length: 9.0,
            width: 6.0,
            goal_width: 2.6,
            goal_area_length: 1.0,
            goal_area_width: 3.0,
            center_circle_radius: 0.75,
            penalty_mark_distance: 2.1,
            line_width: 0.05,
        }
    }
}

impl FieldSpec {
    pub const KEYS: [&'static str; 8] = [
        "length",
        "width",
        "goal_width",
        "goal_area_length",
        "goal_area_width",
        "center_circle_radius",
        "penalty_mark_distance",
        "line_width",
    ];

    pub fn validate(&self) -> Result<(), ConfigError> {
        let values = [
            ("length", self.length),
            ("width", self.width),
            ("goal_width", self.goal_width),
            ("goal_area_length", self.goal_area_length),
            ("goal_area_width", self.goal_area_width),
            ("center_circle_radius", self.center_circle_radius),
            ("penalty_mark_distance", self.penalty_mark_distance),
            ("line_width", self.line_width),
        ];
        for (key, v) in values {
            if !v.is_finite() || v <= 0.0 {
                return Err(ConfigError::new(key, "must be finite and > 0"));
            }
        }
        if self.length <= self.width {
            return Err(ConfigError::new("length", "must exceed width"));
        }
        let half_length = self.length / 2.0;
        let half_width = self.width / 2.0;
        let checks = [
            ("goal_width", self.goal_width < self.width, "must be < width"),
            (
                "goal_area_length",
                self.goal_area_length < half_length,
                "must be < length / 2",
            ),
            (
                "goal_area_width",
                self.goal_area_width < self.width,
                "must be < width",
            ),
            (
                "center_circle_radius",
                self.center_circle_radius < half_width,
                "must be < width / 2",
            ),
            (
                "penalty_mark_distance",
                self.penalty_mark_distance < half_length,
                "must be < length / 2",
            ),
            (
                "line_width",
                self.line_width < self.goal_area_length.min(self.center_circle_radius),
                "must be < goal_area_length and < center_circle_radius",
            ),
        ];
        for (key, ok, constraint) in checks {
            if !ok {
                return Err(ConfigError::new(key, constraint));
            }
        }
        Ok(())
    }

    pub fn half_length(&self) -> f64 {
        self.length / 2.0
    }

    pub fn half_width(&self) -> f64 {
        self.width / 2.0
    }

    /// Goal posts of the goal at `+x` (sign 1) or `-x` (sign -1).
    pub fn goal_posts(&self, sign: f64) -> (Vec2, Vec2) {
        let x = sign * self.half_length();
        (
            Vec2::new(x, -self.goal_width / 2.0),
            Vec2::new(x, self.goal_width / 2.0),
        )
    }

    pub fn opponent_goal_center(&self) -> Vec2 {
        Vec2::new(self.half_length(), 0.0)
    }

    pub fn own_goal_center(&self) -> Vec2 {
        Vec2::new(-self.half_length(), 0.0)
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.x.abs() <= self.half_length() && p.y.abs() <= self.half_width()
    }

    /// Painted straight lines, endpoints ordered lexicographically.
    pub fn line_segments(&self) -> Vec<(Vec2, Vec2)> {
        let hl = self.half_length();
        let hw = self.half_width();
        let gax = hl - self.goal_area_length;
        let gaw = self.goal_area_width / 2.0;
        let mut segs = alloc::vec![
            (Vec2::new(-hl, hw), Vec2::new(hl, hw)),
            (Vec2::new(-hl, -hw), Vec2::new(hl, -hw)),
            (Vec2::new(-hl, -hw), Vec2::new(-hl, hw)),
            (Vec2::new(hl, -hw), Vec2::new(hl, hw)),
            (Vec2::new(0.0, -hw), Vec2::new(0.0, hw)),
        ];
        for sign in [-1.0, 1.0] {
            segs.push((Vec2::new(sign * gax, -gaw), Vec2::new(sign * gax, gaw)));
            for y in [-gaw, gaw] {
                segs.push((Vec2::new(sign * gax, y), Vec2::new(sign * hl, y)));
            }
        }
        segs.into_iter().map(|(a, b)| order_endpoints(a, b)).collect()
    }
}

fn order_endpoints(a: Vec2, b: Vec2) -> (Vec2, Vec2) {
    if cmp_point(a, b) == Ordering::Greater {
        (b, a)
    } else {
        (a, b)
    }
}

fn cmp_point(a: Vec2, b: Vec2) -> Ordering {
    a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LandmarkKind {
    GoalPost,
    PenaltyMark,
    CenterCircle,
    JunctionX,
    JunctionT,
    JunctionL,
    LineSegment,
}

impl LandmarkKind {
    pub const ALL: [LandmarkKind; 7] = [
        LandmarkKind::GoalPost,
        LandmarkKind::PenaltyMark,
        LandmarkKind::CenterCircle,
        LandmarkKind::JunctionX,
        LandmarkKind::JunctionT,
        LandmarkKind::JunctionL,
        LandmarkKind::LineSegment,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LandmarkKind::GoalPost => "goal_post",
            LandmarkKind::PenaltyMark => "penalty_mark",
            LandmarkKind::CenterCircle => "center_circle",
            LandmarkKind::JunctionX => "junction_x",
            LandmarkKind::JunctionT => "junction_t",
            LandmarkKind::JunctionL => "junction_l",
            LandmarkKind::LineSegment => "line",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    /// Landmarks whose sighting can confirm a localization lock.
    pub fn is_confirming(self) -> bool {
        matches!(self, LandmarkKind::GoalPost | LandmarkKind::CenterCircle)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OwnerHalf {
    Own,
    Opponent,
    Neutral,
}

impl OwnerHalf {
    fn of_x(x: f64) -> Self {
        if x < -1e-9 {
            OwnerHalf::Own
        } else if x > 1e-9 {
            OwnerHalf::Opponent
        } else {
            OwnerHalf::Neutral
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            OwnerHalf::Own => OwnerHalf::Opponent,
            OwnerHalf::Opponent => OwnerHalf::Own,
            OwnerHalf::Neutral => OwnerHalf::Neutral,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LandmarkShape {
    Point(Vec2),
    Segment(Vec2, Vec2),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Landmark {
    pub kind: LandmarkKind,
    pub shape: LandmarkShape,
    pub owner_half: OwnerHalf,
}

impl Landmark {
    fn point(kind: LandmarkKind, p: Vec2) -> Self {
        Self {
            kind,
            shape: LandmarkShape::Point(p),
            owner_half: OwnerHalf::of_x(p.x),
        }
    }

    /// The point position, or the first endpoint of a segment.
    pub fn position(&self) -> Vec2 {
        match self.shape {
            LandmarkShape::Point(p) | LandmarkShape::Segment(p, _) => p,
        }
    }

    pub fn segment(&self) -> Option<(Vec2, Vec2)> {
        match self.shape {
            LandmarkShape::Segment(a, b) => Some((a, b)),
            LandmarkShape::Point(_) => None,
        }
    }

    /// 180° rotation about the field center.
    pub fn mirrored(&self) -> Landmark {
        let shape = match self.shape {
            LandmarkShape::Point(p) => LandmarkShape::Point(-p),
            LandmarkShape::Segment(a, b) => {
                let (a, b) = order_endpoints(-a, -b);
                LandmarkShape::Segment(a, b)
            }
        };
        Landmark {
            kind: self.kind,
            shape,
            owner_half: self.owner_half.flipped(),
        }
    }
}

/// Every landmark of the field, sorted by kind, then x, then y.
pub fn landmark_catalog(spec: &FieldSpec) -> Result<Vec<Landmark>, ConfigError> {
    spec.validate()?;
    let hl = spec.half_length();
    let mut out = Vec::new();

    for sign in [-1.0, 1.0] {
        let (a, b) = spec.goal_posts(sign);
        out.push(Landmark::point(LandmarkKind::GoalPost, a));
        out.push(Landmark::point(LandmarkKind::GoalPost, b));
        out.push(Landmark::point(
            LandmarkKind::PenaltyMark,
            Vec2::new(sign * (hl - spec.penalty_mark_distance), 0.0),
        ));
    }
    out.push(Landmark::point(LandmarkKind::CenterCircle, Vec2::ZERO));

    let segments = spec.line_segments();
    for (p, kind) in line_junctions(&segments) {
        out.push(Landmark::point(kind, p));
    }
    // The center line crosses the circle at (0, ±r).
    for y in [-spec.center_circle_radius, spec.center_circle_radius] {
        out.push(Landmark::point(LandmarkKind::JunctionX, Vec2::new(0.0, y)));
    }
    for (a, b) in segments {
        out.push(Landmark {
            kind: LandmarkKind::LineSegment,
            shape: LandmarkShape::Segment(a, b),
            owner_half: OwnerHalf::of_x((a.x + b.x) / 2.0),
        });
    }

    out.sort_by(|l, r| {
        l.kind
            .cmp(&r.kind)
            .then(cmp_point(l.position(), r.position()))
            .then_with(|| match (l.segment(), r.segment()) {
                (Some((_, lb)), Some((_, rb))) => cmp_point(lb, rb),
                _ => Ordering::Equal,
            })
    });
    Ok(out)
}

/// Classifies every pairwise meeting point of axis-aligned or general
/// segments: endpoint of both is an L, endpoint of one is a T, interior of
/// both is an X.
fn line_junctions(segments: &[(Vec2, Vec2)]) -> Vec<(Vec2, LandmarkKind)> {
    const EPS: f64 = 1e-9;
    let mut found: Vec<(Vec2, LandmarkKind)> = Vec::new();
    for (i, &(a0, a1)) in segments.iter().enumerate() {
        for &(b0, b1) in &segments[i + 1..] {
            let Some(p) = meeting_point(a0, a1, b0, b1) else {
                continue;
            };
            let end_a = p.distance(a0) < EPS || p.distance(a1) < EPS;
            let end_b = p.distance(b0) < EPS || p.distance(b1) < EPS;
            let kind = match (end_a, end_b) {
                (true, true) => LandmarkKind::JunctionL,
                (false, false) => LandmarkKind::JunctionX,
                _ => LandmarkKind::JunctionT,
            };
            if let Some(existing) = found.iter_mut().find(|(q, _)| q.distance(p) < EPS) {
                // Three or more lines through one point: keep the most
                // connected classification.
                existing.1 = existing.1.min(kind);
            } else {
                found.push((p, kind));
            }
        }
    }
    found
}

fn meeting_point(a0: Vec2, a1: Vec2, b0: Vec2, b1: Vec2) -> Option<Vec2> {
    let r = a1 - a0;
    let s = b1 - b0;
    let denom = r.cross(s);
    if denom.abs() < 1e-12 {
        return None;
    }
    let qp = b0 - a0;
    let t = qp.cross(s) / denom;
    let u = qp.cross(r) / denom;
    let tol = 1e-9;
    if t < -tol || t > 1.0 + tol || u < -tol || u > 1.0 + tol {
        return None;
    }
    Some(a0 + r * t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StartPoseLabel {
    CenterFacingOpponent,
    GoalAreaFacingOpponent,
    SidelineLeft,
    SidelineRight,
}

impl StartPoseLabel {
    pub const ALL: [StartPoseLabel; 4] = [
        StartPoseLabel::CenterFacingOpponent,
        StartPoseLabel::GoalAreaFacingOpponent,
        StartPoseLabel::SidelineLeft,
        StartPoseLabel::SidelineRight,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StartPoseLabel::CenterFacingOpponent => "center",
            StartPoseLabel::GoalAreaFacingOpponent => "goal_area",
            StartPoseLabel::SidelineLeft => "sideline_left",
            StartPoseLabel::SidelineRight => "sideline_right",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|l| l.name() == name)
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StartPose {
    pub pose: Pose2D,
    pub label: StartPoseLabel,
}

/// The four legal entry poses of the own team, in [`StartPoseLabel::ALL`]
/// order.
pub fn start_poses(spec: &FieldSpec) -> [StartPose; 4] {
    let hl = spec.half_length();
    let hw = spec.half_width();
    [
        StartPose {
            pose: Pose2D::new(-spec.center_circle_radius - 0.1, 0.0, 0.0),
            label: StartPoseLabel::CenterFacingOpponent,
        },
        StartPose {
            pose: Pose2D::new(-hl + spec.goal_area_length, 0.0, 0.0),
            label: StartPoseLabel::GoalAreaFacingOpponent,
        },
        StartPose {
            pose: Pose2D::new(-spec.length / 4.0, hw, -FRAC_PI_2),
            label: StartPoseLabel::SidelineLeft,
        },
        StartPose {
            pose: Pose2D::new(-spec.length / 4.0, -hw, FRAC_PI_2),
            label: StartPoseLabel::SidelineRight,
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn has_point(cat: &[Landmark], kind: LandmarkKind, p: Vec2) -> bool {
        cat.iter()
            .any(|l| l.kind == kind && l.segment().is_none() && l.position().distance(p) < 1e-12)
    }

    #[test]
    fn default_catalog_contents() {
        let spec = FieldSpec::default();
        let cat = landmark_catalog(&spec).unwrap();
        assert!(has_point(&cat, LandmarkKind::GoalPost, Vec2::new(4.5, 1.3)));
        assert!(has_point(&cat, LandmarkKind::GoalPost, Vec2::new(4.5, -1.3)));
        assert!(has_point(&cat, LandmarkKind::CenterCircle, Vec2::ZERO));
        assert!(has_point(&cat, LandmarkKind::PenaltyMark, Vec2::new(2.4, 0.0)));
        assert!(has_point(&cat, LandmarkKind::PenaltyMark, Vec2::new(-2.4, 0.0)));

        let count = |k| cat.iter().filter(|l| l.kind == k).count();
        assert_eq!(count(LandmarkKind::GoalPost), 4);
        assert_eq!(count(LandmarkKind::PenaltyMark), 2);
        assert_eq!(count(LandmarkKind::CenterCircle), 1);
        assert_eq!(count(LandmarkKind::JunctionL), 8);
        assert_eq!(count(LandmarkKind::JunctionT), 6);
        assert_eq!(count(LandmarkKind::JunctionX), 2);
        assert_eq!(count(LandmarkKind::LineSegment), 11);
    }

    #[test]
    fn catalog_is_sorted_and_inside() {
        let spec = FieldSpec::default();
        let cat = landmark_catalog(&spec).unwrap();
        for w in cat.windows(2) {
            assert!(w[0].kind <= w[1].kind);
            if w[0].kind == w[1].kind {
                assert_ne!(cmp_point(w[0].position(), w[1].position()), Ordering::Greater);
            }
        }
        for l in cat.iter().filter(|l| l.segment().is_none()) {
            assert!(spec.contains(l.position()));
        }
    }

    #[test]
    fn invalid_spec_names_key() {
        let spec = FieldSpec {
            width: 10.0,
            ..FieldSpec::default()
        };
        assert_eq!(landmark_catalog(&spec).unwrap_err().key, "length");
        let spec = FieldSpec {
            goal_width: 7.0,
            ..FieldSpec::default()
        };
        assert_eq!(spec.validate().unwrap_err().key, "goal_width");
        let spec = FieldSpec {
            line_width: -1.0,
            ..FieldSpec::default()
        };
        assert_eq!(spec.validate().unwrap_err().key, "line_width");
    }

    #[test]
    fn start_pose_layout() {
        let spec = FieldSpec::default();
        let poses = start_poses(&spec);
        for (p, label) in poses.iter().zip(StartPoseLabel::ALL) {
            assert_eq!(p.label, label);
            assert!(p.pose.x < 0.0);
        }
        assert_eq!(poses[0].pose.theta, 0.0);
        assert_eq!(poses[1].pose.theta, 0.0);
        assert!((poses[2].pose.theta + FRAC_PI_2).abs() < 1e-15);
        assert!((poses[3].pose.theta - FRAC_PI_2).abs() < 1e-15);
        for i in 0..4 {
            for j in i + 1..4 {
                assert!(poses[i].pose.position().distance(poses[j].pose.position()) > 0.1);
            }
        }
    }
}
