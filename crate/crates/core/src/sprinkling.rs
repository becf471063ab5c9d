//! Thinning-plus-sprinkle couplings and the events built on them.
//!
//! A coupling represents the unit-intensity process as an independent
//! thinning of the base (survival `1 - eps`) superposed with an independent
//! sprinkle of intensity `eps`; the union is again unit-intensity Poisson.
//! On top of the couplings sit the dense-point counts `N_{b,n}`, the removal
//! event `E_{b,n}`, the regularity event (all stabilization radii in the
//! window capped at `M` after sprinkling), the one-point-per-cell grid event
//! `A`, and the telescoping increase counts used by the weak-decreasingness
//! argument.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    sample_poisson, superpose, thin, BoxWindow, Point, PointConfig, RngStream,
};
use crate::grid::NeighborIndex;
use crate::scores::ScoreSpec;
use crate::stabilization::{cone_cover_2d, stab_radius_knn, stab_radius_voronoi};

/// The triple realizing a thinning + sprinkle coupling.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CouplingSample {
    pub base: PointConfig,
    pub thinned: PointConfig,
    pub sprinkle: PointConfig,
    pub union: PointConfig,
    pub survival: f64,
    pub sprinkle_intensity: f64,
}

/// Couple with survival `1 - eps` and sprinkle intensity `eps`.
pub fn couple_eps(base: &PointConfig, eps: f64, rng: RngStream) -> Result<CouplingSample> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Parameter(format!(
            "eps must lie strictly in (0, 1), got {eps}"
        )));
    }
    let thinned = thin(base, 1.0 - eps, rng.substream(0))?;
    let sprinkle = sample_poisson(eps, base.window(), rng.substream(1))?;
    let union = superpose(&thinned, &sprinkle)?;
    Ok(CouplingSample {
        base: base.clone(),
        thinned,
        sprinkle,
        union,
        survival: 1.0 - eps,
        sprinkle_intensity: eps,
    })
}

/// Couple with survival `1 - M^{-d}` and sprinkle intensity `M^{-d}`.
/// Requires `M > 1`: at `M = 1` the survival probability degenerates to 0.
pub fn couple_m(base: &PointConfig, m: f64, rng: RngStream) -> Result<CouplingSample> {
    if !(m > 1.0) {
        return Err(Error::Parameter(format!(
            "M must exceed 1 so that M^-d lies in (0, 1), got {m}"
        )));
    }
    let eps = m.powi(-(base.dim() as i32));
    couple_eps(base, eps, rng)
}

/// Shape of the neighborhood in the dense-point test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DenseShape {
    /// `Q_r(x)`: the axis-aligned cube of side `r` centered at the point.
    Cube,
    /// `B_r(x)`: the closed ball of radius `r` (alternate formulation).
    Ball,
}

/// Number of points in the scoring window with strictly more than `b`
/// configuration points in their centered `r`-cube (the point itself
/// counts).
pub fn count_b_dense(config: &PointConfig, scoring_window: &BoxWindow, r: f64, b: f64) -> usize {
    count_b_dense_shaped(config, scoring_window, r, b, DenseShape::Cube)
}

/// Dense-point count with an explicit neighborhood shape.
pub fn count_b_dense_shaped(
    config: &PointConfig,
    scoring_window: &BoxWindow,
    r: f64,
    b: f64,
    shape: DenseShape,
) -> usize {
    debug_assert!(r > 0.0);
    let idx = NeighborIndex::new(config);
    let enclosing = match shape {
        // the cube of side r fits inside the ball of its half-diagonal
        DenseShape::Cube => r * (config.dim() as f64).sqrt() / 2.0,
        DenseShape::Ball => r,
    };
    config
        .indices_in(scoring_window)
        .into_iter()
        .filter(|&i| {
            let c = config.point(i);
            let occupants = match shape {
                DenseShape::Ball => idx.within(c, enclosing, false).len(),
                DenseShape::Cube => idx
                    .within(c, enclosing, false)
                    .into_iter()
                    .filter(|&j| {
                        config
                            .point(j)
                            .iter()
                            .zip(c)
                            .all(|(x, y)| (x - y).abs() <= r / 2.0)
                    })
                    .count(),
            };
            occupants as f64 > b
        })
        .count()
}

/// The removal event `E_{b,n}`: the sprinkle has no points in the window and
/// the thinned process has no b-dense points there.
pub fn event_e_bn(sample: &CouplingSample, scoring_window: &BoxWindow, r: f64, b: f64) -> bool {
    sample.sprinkle.indices_in(scoring_window).is_empty()
        && count_b_dense(&sample.thinned, scoring_window, r, b) == 0
}

/// Which stabilization radius the regularity event uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RadiusKind {
    Voronoi,
    Knn(usize),
}

/// The regularity event: after sprinkling, the stabilization radii of all
/// points of `base ∪ sprinkle` in the window are at most `M`.
pub fn event_e_m_plus(
    sample: &CouplingSample,
    scoring_window: &BoxWindow,
    m: f64,
    kind: RadiusKind,
) -> Result<bool> {
    let union = superpose(&sample.base, &sample.sprinkle)?;
    all_radii_at_most(&union, scoring_window, m, kind)
}

pub(crate) fn all_radii_at_most(
    config: &PointConfig,
    scoring_window: &BoxWindow,
    m: f64,
    kind: RadiusKind,
) -> Result<bool> {
    if config.dim() != 2 {
        return Err(Error::Parameter(
            "stabilization radii require d = 2".into(),
        ));
    }
    let cover = cone_cover_2d();
    for i in config.indices_in(scoring_window) {
        let r = match kind {
            RadiusKind::Voronoi => stab_radius_voronoi(config, i, &cover)?,
            RadiusKind::Knn(k) => stab_radius_knn(config, i, &cover, k)?,
        };
        if !(r <= m) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Geometry of the one-point-per-cell grid: cells of side `M/L` tiling the
/// doubled window, padded outward to the next multiple of the cell side.
#[derive(Debug, Clone, Copy)]
pub struct SprinkleGrid {
    pub cell_side: f64,
    pub cells_per_axis: usize,
    pub padded_side: f64,
}

pub fn sprinkle_grid(window: &BoxWindow, m: f64, l: f64) -> Result<SprinkleGrid> {
    if !(m > 0.0) || !(l >= 1.0) {
        return Err(Error::Parameter(format!(
            "grid needs M > 0 and L >= 1, got M = {m}, L = {l}"
        )));
    }
    let cell_side = m / l;
    let doubled = 2.0 * window.side;
    let cells_per_axis = (doubled / cell_side - 1e-9).ceil().max(1.0) as usize;
    Ok(SprinkleGrid {
        cell_side,
        cells_per_axis,
        padded_side: cells_per_axis as f64 * cell_side,
    })
}

/// The event `A`: every sub-cube of side `M/L` in the (doubled, padded) grid
/// over the window contains exactly one sprinkle point. Points outside the
/// grid are ignored.
pub fn event_a(sprinkle: &PointConfig, window: &BoxWindow, m: f64, l: f64) -> Result<bool> {
    let grid = sprinkle_grid(window, m, l)?;
    let dim = window.dim;
    let cells = grid.cells_per_axis.pow(dim as u32);
    let lo: Vec<f64> = window
        .center
        .iter()
        .map(|c| c - grid.padded_side / 2.0)
        .collect();
    let mut counts = vec![0u32; cells];
    for p in sprinkle.iter_points() {
        let mut flat = 0usize;
        let mut inside = true;
        for a in 0..dim {
            let idx = ((p[a] - lo[a]) / grid.cell_side).floor();
            if idx < 0.0 || idx >= grid.cells_per_axis as f64 {
                inside = false;
                break;
            }
            flat = flat * grid.cells_per_axis + idx as usize;
        }
        if inside {
            counts[flat] += 1;
        }
    }
    Ok(counts.iter().all(|&c| c == 1))
}

/// Sample a sprinkle conditioned on the event `A`: exactly one uniform point
/// in every cell of the (doubled, padded) grid over the window. This is the
/// conditional law of a Poisson sprinkle given `A`.
pub fn sprinkle_conditioned_on_a(
    window: &BoxWindow,
    m: f64,
    l: f64,
    rng: RngStream,
) -> Result<PointConfig> {
    use rand::Rng;
    let grid = sprinkle_grid(window, m, l)?;
    let dim = window.dim;
    let cells = grid.cells_per_axis.pow(dim as u32);
    let lo: Vec<f64> = window
        .center
        .iter()
        .map(|c| c - grid.padded_side / 2.0)
        .collect();
    let mut r = rng.rng();
    let mut coords = Vec::with_capacity(cells * dim);
    let mut cell_idx = vec![0usize; dim];
    for _ in 0..cells {
        for a in 0..dim {
            let cell_lo = lo[a] + cell_idx[a] as f64 * grid.cell_side;
            coords.push(cell_lo + r.gen::<f64>() * grid.cell_side);
        }
        // advance the mixed-radix cell counter
        for a in (0..dim).rev() {
            cell_idx[a] += 1;
            if cell_idx[a] < grid.cells_per_axis {
                break;
            }
            cell_idx[a] = 0;
        }
    }
    let padded = BoxWindow::new(dim, grid.padded_side, window.center.clone())?;
    Ok(PointConfig::from_sampled(dim, coords, padded))
}

/// One regularity trial at the given geometry: draw a base process and an
/// `A`-conditioned sprinkle over the padded doubled window, then check the
/// regularity event on the scoring window.
pub fn regularity_trial(
    scoring_window: &BoxWindow,
    m: f64,
    l: f64,
    kind: RadiusKind,
    rng: RngStream,
) -> Result<bool> {
    let sprinkle = sprinkle_conditioned_on_a(scoring_window, m, l, rng.substream(0))?;
    debug_assert!(event_a(&sprinkle, scoring_window, m, l)?);
    let base = sample_poisson(1.0, sprinkle.window(), rng.substream(1))?;
    let union = superpose(&base, &sprinkle)?;
    all_radii_at_most(&union, scoring_window, m, kind)
}

/// Per-step count of base points in the window whose score strictly
/// increases as the addition points are inserted one by one.
pub fn telescoping_increase_count(
    spec: &ScoreSpec,
    base: &PointConfig,
    additions: &[Point],
    scoring_window: &BoxWindow,
) -> Result<Vec<usize>> {
    let watched = base.indices_in(scoring_window);
    let mut current = base.clone();
    let mut scores: Vec<f64> = Vec::with_capacity(watched.len());
    {
        let eval = crate::scores::Evaluator::new(spec, &current)?;
        for &i in &watched {
            scores.push(eval.score(i)?);
        }
    }
    let mut counts = Vec::with_capacity(additions.len());
    for add in additions {
        let mut pts = current.to_points();
        pts.push(add.clone());
        current = PointConfig::new(pts, current.window().clone())?;
        let eval = crate::scores::Evaluator::new(spec, &current)?;
        let mut increased = 0;
        for (slot, &i) in watched.iter().enumerate() {
            let s = eval.score(i)?;
            if s > scores[slot] {
                increased += 1;
            }
            scores[slot] = s;
        }
        counts.push(increased);
    }
    Ok(counts)
}
