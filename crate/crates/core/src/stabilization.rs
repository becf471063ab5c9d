//! Cone covers and stabilization radii.
//!
//! The planar cover uses 12 cones of angular radius pi/12 whose union tiles
//! the circle, each paired with an extended cone of angular radius pi/6
//! around the same axis. The stabilization radius of a point is twice the
//! largest over extended cones of the distance to the nearest (or, for the
//! k-NN variant, k-th nearest) other point in the cone; once every extended
//! cone is occupied within distance R/2, the score at the point cannot see
//! past radius R.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dist, PointConfig};
use crate::scores::{evaluate_score, ScoreKind, ScoreSpec};

/// Directions and half-angles of the stabilization cone construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConeCover {
    pub axes: Vec<[f64; 2]>,
    pub core_half_angle: f64,
    pub extended_half_angle: f64,
}

/// The canonical planar cover: 12 axes at angles `pi j / 6`, core half-angle
/// pi/12, extended half-angle pi/6.
pub fn cone_cover_2d() -> ConeCover {
    let axes = (0..12)
        .map(|j| {
            let a = std::f64::consts::PI * j as f64 / 6.0;
            [a.cos(), a.sin()]
        })
        .collect();
    ConeCover {
        axes,
        core_half_angle: std::f64::consts::PI / 12.0,
        extended_half_angle: std::f64::consts::PI / 6.0,
    }
}

impl ConeCover {
    pub fn count(&self) -> usize {
        self.axes.len()
    }

    /// Closed-cone membership of direction `v` (relative to the apex) in the
    /// extended cone around `axis`. Boundary directions belong to both
    /// adjacent cones.
    fn in_extended(&self, axis: &[f64; 2], v: [f64; 2]) -> bool {
        let norm = (v[0] * v[0] + v[1] * v[1]).sqrt();
        if norm == 0.0 {
            return false;
        }
        let cosine = (v[0] * axis[0] + v[1] * axis[1]) / norm;
        cosine >= self.extended_half_angle.cos() - 1e-12
    }

    /// Whether every direction lies within the core half-angle of some axis
    /// (checked at `resolution` sample directions plus the arc boundaries).
    pub fn covers_circle(&self, resolution: usize) -> bool {
        let cos_core = self.core_half_angle.cos() - 1e-12;
        (0..resolution).all(|i| {
            let a = 2.0 * std::f64::consts::PI * i as f64 / resolution as f64;
            let v = [a.cos(), a.sin()];
            self.axes
                .iter()
                .any(|ax| v[0] * ax[0] + v[1] * ax[1] >= cos_core)
        })
    }
}

/// Per-cone distances from `center` to the other configuration points,
/// sorted ascending within each cone.
fn cone_distances(
    config: &PointConfig,
    center: usize,
    cover: &ConeCover,
) -> Result<Vec<Vec<f64>>> {
    if config.dim() != 2 {
        return Err(Error::Parameter(
            "stabilization radii require d = 2".into(),
        ));
    }
    if center >= config.len() {
        return Err(Error::Parameter(format!(
            "center {center} out of range for {} points",
            config.len()
        )));
    }
    let c = config.point(center);
    let mut per_cone = vec![Vec::new(); cover.count()];
    for j in 0..config.len() {
        if j == center {
            continue;
        }
        let p = config.point(j);
        let v = [p[0] - c[0], p[1] - c[1]];
        let d = dist(p, c);
        for (i, axis) in cover.axes.iter().enumerate() {
            if cover.in_extended(axis, v) {
                per_cone[i].push(d);
            }
        }
    }
    for cone in &mut per_cone {
        cone.sort_by(f64::total_cmp);
    }
    Ok(per_cone)
}

/// Stabilization radius for Voronoi-type scores: twice the largest over
/// extended cones of the distance to the nearest other point in the cone.
/// Infinite when some extended cone is empty.
pub fn stab_radius_voronoi(
    config: &PointConfig,
    center: usize,
    cover: &ConeCover,
) -> Result<f64> {
    stab_radius_knn(config, center, cover, 1)
}

/// k-NN variant: twice the largest over extended cones of the k-th smallest
/// distance to the other points of the cone. Infinite when some cone holds
/// fewer than `k` points.
pub fn stab_radius_knn(
    config: &PointConfig,
    center: usize,
    cover: &ConeCover,
    k: usize,
) -> Result<f64> {
    if k == 0 {
        return Err(Error::Parameter("k must be at least 1".into()));
    }
    let per_cone = cone_distances(config, center, cover)?;
    let mut worst: f64 = 0.0;
    for cone in &per_cone {
        if cone.len() < k {
            return Ok(f64::INFINITY);
        }
        worst = worst.max(cone[k - 1]);
    }
    Ok(2.0 * worst)
}

/// Check the stabilization identity: the score at `center` computed on the
/// full configuration equals the score computed on the configuration
/// intersected with the closed ball of the given radius about the center.
/// Combinatorial scores are compared exactly, real-valued ones at relative
/// tolerance 1e-12.
pub fn verify_stabilization(
    spec: &ScoreSpec,
    config: &PointConfig,
    center: usize,
    radius: f64,
) -> Result<bool> {
    if !radius.is_finite() || radius < 0.0 {
        return Err(Error::Parameter(format!(
            "stabilization radius must be finite and nonnegative, got {radius}"
        )));
    }
    let full = evaluate_score(spec, config, center)?;
    let (restricted, new_center) = restrict_to_ball(config, center, radius);
    let local = evaluate_score(spec, &restricted, new_center)?;
    Ok(match spec.kind() {
        ScoreKind::CliqueCount { .. } => full == local,
        _ => (full - local).abs() <= 1e-12 * full.abs().max(local.abs()).max(1.0),
    })
}

/// Points of `config` within the closed ball of `radius` about point
/// `center`, plus the new index of the center.
pub(crate) fn restrict_to_ball(
    config: &PointConfig,
    center: usize,
    radius: f64,
) -> (PointConfig, usize) {
    let c = config.point(center).to_vec();
    let mut coords = Vec::new();
    let mut new_center = 0;
    let mut kept = 0;
    for i in 0..config.len() {
        let p = config.point(i);
        if dist(p, &c) <= radius {
            if i == center {
                new_center = kept;
            }
            coords.extend_from_slice(p);
            kept += 1;
        }
    }
    (
        PointConfig::from_sampled(config.dim(), coords, config.window().clone()),
        new_center,
    )
}
