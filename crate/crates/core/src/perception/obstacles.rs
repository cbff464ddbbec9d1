//! Obstacle candidate gating, color classification and egocentric clusters
//! with certainty dynamics.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, Error, Result};
use crate::geometry::{Pose2D, Vec2};

use super::ColorSignature;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ObstacleLabel {
    Teammate,
    Rival,
    Referee,
    Unknown,
}

impl ObstacleLabel {
    pub fn name(self) -> &'static str {
        match self {
            ObstacleLabel::Teammate => "teammate",
            ObstacleLabel::Rival => "rival",
            ObstacleLabel::Referee => "referee",
            ObstacleLabel::Unknown => "unknown",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeightClass {
    pub min: f64,
    pub max: f64,
}

impl Default for HeightClass {
    fn default() -> Self {
        Self { min: 0.6, max: 1.4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApparentSize {
    pub min_apparent: f64,
    pub max_apparent: f64,
}

impl ApparentSize {
    pub fn contains(&self, size: f64) -> bool {
        size >= self.min_apparent && size <= self.max_apparent
    }
}

/// Expected apparent size interval of a size class at `distance`:
/// `height_scale * height / distance` for both class bounds.
pub fn expected_obstacle_size(
    distance: f64,
    class: &HeightClass,
    height_scale: f64,
) -> Result<ApparentSize> {
    if !(distance > 0.0) {
        return Err(Error::Domain("distance must be > 0"));
    }
    Ok(ApparentSize {
        min_apparent: height_scale * class.min / distance,
        max_apparent: height_scale * class.max / distance,
    })
}

/// Label of the model nearest to `sig` in L1 distance, or `Unknown` when even
/// the nearest is further than `threshold`. Ties go to the earlier label.
pub fn classify_signature(
    sig: &ColorSignature,
    models: &BTreeMap<ObstacleLabel, ColorSignature>,
    threshold: f64,
) -> core::result::Result<ObstacleLabel, ConfigError> {
    if models.is_empty() {
        return Err(ConfigError::new("models", "at least one signature model is required"));
    }
    let mut best: Option<(ObstacleLabel, f64)> = None;
    for (&label, model) in models {
        let d = sig.l1_distance(model);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((label, d));
        }
    }
    let (label, d) = best.expect("models is nonempty");
    Ok(if d > threshold { ObstacleLabel::Unknown } else { label })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObstacleCluster {
    /// Egocentric position.
    pub position: Vec2,
    pub label: ObstacleLabel,
    pub certainty: f64,
    pub last_seen: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub position: Vec2,
    pub label: ObstacleLabel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClusterParams {
    pub gain_up: f64,
    pub gain_down: f64,
    pub match_radius: f64,
    /// Weight of a matched detection in the position blend.
    pub position_blend: f64,
    /// Clusters whose certainty falls below this are dropped.
    pub drop_floor: f64,
}

impl Default for ClusterParams {
    fn default() -> Self {
        Self {
            gain_up: 0.3,
            gain_down: 0.1,
            match_radius: 0.5,
            position_blend: 0.5,
            drop_floor: 0.05,
        }
    }
}

impl ClusterParams {
    pub fn validate(&self) -> core::result::Result<(), ConfigError> {
        for (key, g) in [("gain_up", self.gain_up), ("gain_down", self.gain_down)] {
            if !(g > 0.0 && g < 1.0) {
                return Err(ConfigError::new(key, "must lie in (0, 1)"));
            }
        }
        if !(self.position_blend > 0.0 && self.position_blend <= 1.0) {
            return Err(ConfigError::new("position_blend", "must lie in (0, 1]"));
        }
        if !self.match_radius.is_finite() || self.match_radius <= 0.0 {
            return Err(ConfigError::new("match_radius", "must be finite and > 0"));
        }
        if !(0.0..1.0).contains(&self.drop_floor) {
            return Err(ConfigError::new("drop_floor", "must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// One tracking cycle: predict every cluster through the robot's own motion,
/// match detections greedily by distance, raise matched certainties, spawn
/// clusters for unmatched detections, decay the rest and drop faded ones.
///
/// `ego_motion` is the robot's displacement since the previous cycle,
/// expressed in the previous robot frame.
pub fn update_clusters(
    clusters: &[ObstacleCluster],
    detections: &[Detection],
    ego_motion: &Pose2D,
    params: &ClusterParams,
    now: f64,
) -> Vec<ObstacleCluster> {
    let mut predicted: Vec<ObstacleCluster> = clusters
        .iter()
        .map(|c| ObstacleCluster {
            position: ego_motion.field_to_ego(c.position),
            ..*c
        })
        .collect();

    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (ci, c) in predicted.iter().enumerate() {
        for (di, d) in detections.iter().enumerate() {
            let dist = c.position.distance(d.position);
            if dist <= params.match_radius {
                pairs.push((dist, ci, di));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut cluster_hit = alloc::vec![false; predicted.len()];
    let mut detection_used = alloc::vec![false; detections.len()];
    for (_, ci, di) in pairs {
        if cluster_hit[ci] || detection_used[di] {
            continue;
        }
        cluster_hit[ci] = true;
        detection_used[di] = true;
        let c = &mut predicted[ci];
        let d = &detections[di];
        c.position = c.position.lerp(d.position, params.position_blend);
        c.certainty += params.gain_up * (1.0 - c.certainty);
        c.last_seen = now;
        if d.label != ObstacleLabel::Unknown {
            c.label = d.label;
        }
    }
    for (c, hit) in predicted.iter_mut().zip(&cluster_hit) {
        if !hit {
            c.certainty *= 1.0 - params.gain_down;
        }
    }
    predicted.retain(|c| c.certainty >= params.drop_floor);
    for (d, used) in detections.iter().zip(&detection_used) {
        if !used {
            predicted.push(ObstacleCluster {
                position: d.position,
                label: d.label,
                certainty: params.gain_up,
                last_seen: now,
            });
        }
    }
    predicted
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn apparent_size_halves_with_distance() {
        let class = HeightClass { min: 1.3, max: 1.3 };
        let near = expected_obstacle_size(2.0, &class, 1.0).unwrap();
        let far = expected_obstacle_size(4.0, &class, 1.0).unwrap();
        assert!((near.min_apparent - 0.65).abs() < 1e-12);
        assert!((far.min_apparent - 0.325).abs() < 1e-12);
        assert!(expected_obstacle_size(0.0, &class, 1.0).is_err());
        assert!(expected_obstacle_size(-1.0, &class, 1.0).is_err());
    }

    #[test]
    fn classification_cases() {
        let models: BTreeMap<_, _> = [
            (ObstacleLabel::Teammate, ColorSignature::teammate_default()),
            (ObstacleLabel::Rival, ColorSignature::rival_default()),
            (ObstacleLabel::Referee, ColorSignature::referee_default()),
        ]
        .into_iter()
        .collect();
        assert_eq!(
            classify_signature(&ColorSignature::rival_default(), &models, 0.2),
            Ok(ObstacleLabel::Rival)
        );
        assert_eq!(
            classify_signature(&ColorSignature::uniform(8), &models, 0.2),
            Ok(ObstacleLabel::Unknown)
        );
        assert!(classify_signature(&ColorSignature::uniform(8), &BTreeMap::new(), 0.2).is_err());
    }

    #[test]
    fn argmin_at_stated_distances() {
        // sig is 0.1 from the teammate model and 0.3 from the rival model.
        let sig = ColorSignature::new(vec![0.5, 0.5, 0.0, 0.0]).unwrap();
        let teammate = ColorSignature::new(vec![0.45, 0.55, 0.0, 0.0]).unwrap();
        let rival = ColorSignature::new(vec![0.35, 0.5, 0.15, 0.0]).unwrap();
        assert!((sig.l1_distance(&teammate) - 0.1).abs() < 1e-12);
        assert!((sig.l1_distance(&rival) - 0.3).abs() < 1e-12);
        let models = [(ObstacleLabel::Teammate, teammate), (ObstacleLabel::Rival, rival)]
            .into_iter()
            .collect();
        assert_eq!(classify_signature(&sig, &models, 0.5), Ok(ObstacleLabel::Teammate));
    }

    fn cluster(x: f64, y: f64, certainty: f64) -> ObstacleCluster {
        ObstacleCluster {
            position: Vec2::new(x, y),
            label: ObstacleLabel::Rival,
            certainty,
            last_seen: 0.0,
        }
    }

    #[test]
    fn certainty_rises_and_decays() {
        let params = ClusterParams {
            gain_up: 0.4,
            gain_down: 0.2,
            ..ClusterParams::default()
        };
        let det = Detection {
            position: Vec2::new(2.0, 0.0),
            label: ObstacleLabel::Rival,
        };
        let up = update_clusters(&[cluster(2.0, 0.0, 0.5)], &[det], &Pose2D::default(), &params, 1.0);
        assert!((up[0].certainty - 0.7).abs() < 1e-12);
        let down = update_clusters(&[cluster(2.0, 0.0, 0.5)], &[], &Pose2D::default(), &params, 1.0);
        assert!((down[0].certainty - 0.4).abs() < 1e-12);
    }

    #[test]
    fn ego_motion_prediction() {
        let moved = update_clusters(
            &[cluster(2.0, 0.0, 0.9)],
            &[],
            &Pose2D::new(1.0, 0.0, 0.0),
            &ClusterParams::default(),
            0.0,
        );
        assert!(moved[0].position.distance(Vec2::new(1.0, 0.0)) < 1e-12);
    }

    #[test]
    fn faded_clusters_dropped_and_new_ones_spawned() {
        let params = ClusterParams::default();
        let det = Detection {
            position: Vec2::new(3.0, 1.0),
            label: ObstacleLabel::Unknown,
        };
        let out = update_clusters(&[cluster(1.0, 0.0, 0.05)], &[det], &Pose2D::default(), &params, 2.0);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].certainty, params.gain_up);
        assert_eq!(out[0].last_seen, 2.0);
    }
}
