//! Proximity structures underlying the score functions: k-nearest neighbor
//! radii and graphs, relative neighborhood graphs, clique counts in the
//! geometric graph, and planar Voronoi cells with their intrinsic volumes.
//!
//! Boundary conventions follow the defining formulas: geometric-graph
//! adjacency and cliques use strict `< t`; k-NN radii use closed balls (the
//! infimum is attained at the k-th neighbor distance); relative-neighborhood
//! lunes are open.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dist, dist2, PointConfig};
use crate::grid::NeighborIndex;

/// An undirected graph over the points of a configuration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    pub n: usize,
    edges: Vec<[u32; 2]>,
}

impl Graph {
    /// Normalizes pairs to `i < j`, sorts, and deduplicates. Self-loops and
    /// out-of-range indices are rejected.
    pub fn new(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut edges = Vec::new();
        for (a, b) in pairs {
            if a == b {
                return Err(Error::Parameter(format!("self-loop at vertex {a}")));
            }
            if a >= n || b >= n {
                return Err(Error::Parameter(format!(
                    "edge ({a}, {b}) out of range for {n} vertices"
                )));
            }
            let (i, j) = if a < b { (a, b) } else { (b, a) };
            edges.push([i as u32, j as u32]);
        }
        edges.sort_unstable();
        edges.dedup();
        Ok(Self { n, edges })
    }

    pub fn edges(&self) -> &[[u32; 2]] {
        &self.edges
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn contains_edge(&self, a: usize, b: usize) -> bool {
        let (i, j) = if a < b { (a, b) } else { (b, a) };
        self.edges.binary_search(&[i as u32, j as u32]).is_ok()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges
            .iter()
            .filter(|e| e[0] as usize == v || e[1] as usize == v)
            .count()
    }

    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .edges
            .iter()
            .filter_map(|e| {
                if e[0] as usize == v {
                    Some(e[1] as usize)
                } else if e[1] as usize == v {
                    Some(e[0] as usize)
                } else {
                    None
                }
            })
            .collect();
        out.sort_unstable();
        out
    }

    pub fn max_degree(&self) -> usize {
        let mut deg = vec![0usize; self.n];
        for e in &self.edges {
            deg[e[0] as usize] += 1;
            deg[e[1] as usize] += 1;
        }
        deg.into_iter().max().unwrap_or(0)
    }
}

/// Edge-inclusion rule for the k-nearest neighbor graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KnnMode {
    /// Edge when either endpoint reaches the other: `|x - y| <= R_k(x) v R_k(y)`.
    Undirected,
    /// Edge only when both reach: `|x - y| <= R_k(x) ^ R_k(y)`.
    Bidirectional,
}

impl std::fmt::Display for KnnMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            KnnMode::Undirected => write!(f, "undirected"),
            KnnMode::Bidirectional => write!(f, "bidirectional"),
        }
    }
}

/// k-nearest neighbor radius of point `center`: the distance at which the
/// closed ball around it first holds `k` other points. `INFINITY` when fewer
/// than `k` other points exist.
pub fn knn_radius(config: &PointConfig, center: usize, k: usize) -> Result<f64> {
    check_vertex(config, center)?;
    if k == 0 {
        return Err(Error::Parameter("k must be at least 1".into()));
    }
    Ok(NeighborIndex::new(config).kth_nearest(center, k))
}

/// k-NN radii of every point, sharing one spatial index.
pub fn knn_radii_all(config: &PointConfig, k: usize) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::Parameter("k must be at least 1".into()));
    }
    let idx = NeighborIndex::new(config);
    Ok((0..config.len()).map(|i| idx.kth_nearest(i, k)).collect())
}

/// The k-nearest neighbor graph in the requested mode.
///
/// Fails with an insufficient-points error when any vertex has an infinite
/// k-NN radius (fewer than `k + 1` points in total); callers are expected to
/// sample with margin.
pub fn knn_graph(config: &PointConfig, k: usize, mode: KnnMode) -> Result<Graph> {
    let edges = knn_edges(config, k, mode)?;
    Graph::new(
        config.len(),
        edges.into_iter().map(|(i, j, _)| (i as usize, j as usize)),
    )
}

/// k-NN edges `(i, j, dist)` with `i < j`, sorted.
pub(crate) fn knn_edges(
    config: &PointConfig,
    k: usize,
    mode: KnnMode,
) -> Result<Vec<(u32, u32, f64)>> {
    let radii = knn_radii_all(config, k)?;
    if radii.iter().any(|r| r.is_infinite()) {
        return Err(Error::InsufficientPoints(format!(
            "{} points cannot support k = {k} nearest neighbors",
            config.len()
        )));
    }
    let idx = NeighborIndex::new(config);
    let n = config.len();
    let mut edges = Vec::new();
    for i in 0..n {
        // every edge satisfies d <= R_i or d <= R_j, so scanning each
        // endpoint's own radius ball visits it from at least one side
        for j in idx.within(config.point(i), radii[i], false) {
            if j == i {
                continue;
            }
            let d = dist(config.point(i), config.point(j));
            let keep = match mode {
                KnnMode::Undirected => true, // d <= R_i <= max(R_i, R_j)
                KnnMode::Bidirectional => d <= radii[j],
            };
            if keep {
                let (a, b) = if i < j { (i, j) } else { (j, i) };
                edges.push((a as u32, b as u32, d));
            }
        }
    }
    edges.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    edges.dedup_by_key(|e| (e.0, e.1));
    Ok(edges)
}

/// The relative neighborhood graph: edge `{i, j}` when no third point lies
/// in the open lune `B_{|i-j|}(i) ∩ B_{|i-j|}(j)`.
pub fn rng_graph(config: &PointConfig) -> Result<Graph> {
    let edges = rng_edges(config);
    Graph::new(
        config.len(),
        edges.into_iter().map(|(i, j, _)| (i as usize, j as usize)),
    )
}

/// Relative-neighborhood edges `(i, j, dist)` with `i < j`, sorted.
pub(crate) fn rng_edges(config: &PointConfig) -> Vec<(u32, u32, f64)> {
    let n = config.len();
    let idx = NeighborIndex::new(config);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if lune_is_empty(config, &idx, i, j) {
                edges.push((i as u32, j as u32, dist(config.point(i), config.point(j))));
            }
        }
    }
    edges
}

fn lune_is_empty(config: &PointConfig, idx: &NeighborIndex, i: usize, j: usize) -> bool {
    let pi = config.point(i);
    let pj = config.point(j);
    let d = dist(pi, pj);
    for z in idx.within(pi, d, true) {
        if z == i || z == j {
            continue;
        }
        if dist(config.point(z), pj) < d {
            return false;
        }
    }
    true
}

/// Number of `k`-subsets containing `center` whose points are pairwise at
/// distance strictly below `t`.
pub fn clique_count_at(config: &PointConfig, center: usize, k: usize, t: f64) -> Result<usize> {
    check_vertex(config, center)?;
    if k < 2 {
        return Err(Error::Parameter("clique order k must be at least 2".into()));
    }
    if !(t > 0.0) {
        return Err(Error::Parameter("clique radius t must be positive".into()));
    }
    let idx = NeighborIndex::new(config);
    Ok(clique_count_with_index(config, &idx, center, k, t))
}

/// Clique count reusing a caller-owned spatial index.
pub(crate) fn clique_count_with_index(
    config: &PointConfig,
    idx: &NeighborIndex,
    center: usize,
    k: usize,
    t: f64,
) -> usize {
    let neighbors: Vec<usize> = idx
        .within(config.point(center), t, true)
        .into_iter()
        .filter(|&z| z != center)
        .collect();
    if neighbors.len() + 1 < k {
        return 0;
    }
    // extend the clique {center} one neighbor at a time; candidates stay
    // pairwise-compatible by construction
    fn extend(config: &PointConfig, cand: &[usize], need: usize, t2: f64) -> usize {
        if need == 0 {
            return 1;
        }
        if cand.len() < need {
            return 0;
        }
        let mut total = 0;
        for (pos, &v) in cand.iter().enumerate() {
            let rest: Vec<usize> = cand[pos + 1..]
                .iter()
                .copied()
                .filter(|&w| dist2(config.point(v), config.point(w)) < t2)
                .collect();
            total += extend(config, &rest, need - 1, t2);
        }
        total
    }
    extend(config, &neighbors, k - 1, t * t)
}

fn check_vertex(config: &PointConfig, v: usize) -> Result<()> {
    if v >= config.len() {
        return Err(Error::Parameter(format!(
            "vertex {v} out of range for {} points",
            config.len()
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Planar Voronoi cells.
// ---------------------------------------------------------------------------

/// A convex polygon with counter-clockwise vertices.
///
/// `bounded` is false when the cell construction was closed off by the clip
/// square rather than by bisectors alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexPolygon {
    pub vertices: Vec<[f64; 2]>,
    pub bounded: bool,
}

impl ConvexPolygon {
    pub fn area(&self) -> f64 {
        shoelace(&self.vertices)
    }

    pub fn perimeter(&self) -> f64 {
        let n = self.vertices.len();
        (0..n)
            .map(|i| {
                let a = self.vertices[i];
                let b = self.vertices[(i + 1) % n];
                ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
            })
            .sum()
    }
}

fn shoelace(v: &[[f64; 2]]) -> f64 {
    let n = v.len();
    let mut s = 0.0;
    for i in 0..n {
        let a = v[i];
        let b = v[(i + 1) % n];
        s += a[0] * b[1] - b[0] * a[1];
    }
    s / 2.0
}

/// Voronoi cell of point `center` in a planar configuration, i.e. the set of
/// locations at least as close to it as to any other point. The cell is
/// computed by clipping a seed square of half-width `clip_radius` (centered
/// at the point) against the bisector half-planes of all other points;
/// vertices are in absolute coordinates.
pub fn voronoi_cell(config: &PointConfig, center: usize, clip_radius: f64) -> Result<ConvexPolygon> {
    check_vertex(config, center)?;
    if config.dim() != 2 {
        return Err(Error::Parameter("Voronoi cells require d = 2".into()));
    }
    if !(clip_radius > 0.0 && clip_radius.is_finite()) {
        return Err(Error::Parameter(format!(
            "clip radius must be positive and finite, got {clip_radius}"
        )));
    }
    let c = config.point(center);
    let (cx, cy) = (c[0], c[1]);
    let r = clip_radius;
    let mut poly = vec![
        [cx - r, cy - r],
        [cx + r, cy - r],
        [cx + r, cy + r],
        [cx - r, cy + r],
    ];

    // nearest bisectors cut first; once the closest remaining bisector is
    // farther than every current vertex, no later one can cut
    let mut others: Vec<(f64, usize)> = (0..config.len())
        .filter(|&j| j != center)
        .map(|j| (dist2(config.point(j), c), j))
        .collect();
    others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    for (d2, j) in others {
        let max_v2 = poly
            .iter()
            .map(|v| (v[0] - cx).powi(2) + (v[1] - cy).powi(2))
            .fold(0.0f64, f64::max);
        if d2 / 4.0 >= max_v2 {
            break;
        }
        let p = config.point(j);
        // half-plane (x - c) . (p - c) <= |p - c|^2 / 2
        let nx = p[0] - cx;
        let ny = p[1] - cy;
        let bound = d2 / 2.0;
        poly = clip_half_plane(&poly, cx, cy, nx, ny, bound);
        if poly.len() < 3 {
            break;
        }
    }

    let eps = 1e-9 * r.max(1.0);
    let bounded = poly.len() >= 3
        && poly.iter().all(|v| {
            (v[0] - cx).abs() < r - eps && (v[1] - cy).abs() < r - eps
        });
    Ok(ConvexPolygon {
        vertices: poly,
        bounded,
    })
}

/// Sutherland-Hodgman clip of a convex CCW polygon against
/// `(x - c) . n <= bound`.
fn clip_half_plane(
    poly: &[[f64; 2]],
    cx: f64,
    cy: f64,
    nx: f64,
    ny: f64,
    bound: f64,
) -> Vec<[f64; 2]> {
    let side = |v: &[f64; 2]| (v[0] - cx) * nx + (v[1] - cy) * ny - bound;
    let n = poly.len();
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let sa = side(&a);
        let sb = side(&b);
        let a_in = sa <= 0.0;
        let b_in = sb <= 0.0;
        if a_in {
            out.push(a);
        }
        if a_in != b_in {
            let t = sa / (sa - sb);
            out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
    }
    out
}

/// Intrinsic volumes `(v0, v1, v2)` of a bounded planar convex polygon:
/// `(1, perimeter / 2, area)`.
pub fn intrinsic_volumes_2d(cell: &ConvexPolygon) -> Result<(f64, f64, f64)> {
    if !cell.bounded {
        return Err(Error::UnboundedCell);
    }
    if cell.vertices.len() < 3 {
        return Err(Error::Parameter(
            "degenerate polygon: fewer than 3 vertices".into(),
        ));
    }
    Ok((1.0, cell.perimeter() / 2.0, cell.area()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{sample_poisson, BoxWindow, Point, PointConfig, RngStream};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    pub(crate) fn config_2d(pts: &[[f64; 2]], side: f64) -> PointConfig {
        let w = BoxWindow::centered(2, side).unwrap();
        PointConfig::new(
            pts.iter()
                .map(|p| Point::new(p.to_vec()).unwrap())
                .collect(),
            w,
        )
        .unwrap()
    }

    // -- independent O(n^3) direct-definition oracles ------------------------

    fn knn_radius_oracle(cfg: &PointConfig, i: usize, k: usize) -> f64 {
        let mut d: Vec<f64> = (0..cfg.len())
            .filter(|&j| j != i)
            .map(|j| dist(cfg.point(j), cfg.point(i)))
            .collect();
        d.sort_by(f64::total_cmp);
        if d.len() < k {
            f64::INFINITY
        } else {
            d[k - 1]
        }
    }

    fn knn_graph_oracle(cfg: &PointConfig, k: usize, mode: KnnMode) -> Vec<(usize, usize)> {
        let radii: Vec<f64> = (0..cfg.len()).map(|i| knn_radius_oracle(cfg, i, k)).collect();
        let mut edges = Vec::new();
        for i in 0..cfg.len() {
            for j in (i + 1)..cfg.len() {
                let d = dist(cfg.point(i), cfg.point(j));
                let bound = match mode {
                    KnnMode::Undirected => radii[i].max(radii[j]),
                    KnnMode::Bidirectional => radii[i].min(radii[j]),
                };
                if d <= bound {
                    edges.push((i, j));
                }
            }
        }
        edges
    }

    fn rng_graph_oracle(cfg: &PointConfig) -> Vec<(usize, usize)> {
        let mut edges = Vec::new();
        for i in 0..cfg.len() {
            for j in (i + 1)..cfg.len() {
                let d = dist(cfg.point(i), cfg.point(j));
                let blocked = (0..cfg.len()).any(|z| {
                    z != i
                        && z != j
                        && dist(cfg.point(z), cfg.point(i)) < d
                        && dist(cfg.point(z), cfg.point(j)) < d
                });
                if !blocked {
                    edges.push((i, j));
                }
            }
        }
        edges
    }

    #[test]
    fn knn_radius_examples() {
        let cfg = config_2d(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0]], 8.0);
        assert_eq!(knn_radius(&cfg, 0, 2).unwrap(), 2.0);
        let cfg = config_2d(&[[0.0, 0.0], [0.5, 0.0]], 4.0);
        assert_eq!(knn_radius(&cfg, 0, 1).unwrap(), 0.5);
        let cfg = config_2d(&[[0.0, 0.0], [1.0, 0.0]], 4.0);
        assert!(knn_radius(&cfg, 0, 3).unwrap().is_infinite());
        assert!(knn_radius(&cfg, 5, 1).is_err());
    }

    #[test]
    fn knn_graph_three_point_line() {
        // radii (k=1): R(o)=1, R((1,0))=1, R((3,0))=2
        let cfg = config_2d(&[[0.0, 0.0], [1.0, 0.0], [3.0, 0.0]], 8.0);
        let und = knn_graph(&cfg, 1, KnnMode::Undirected).unwrap();
        assert_eq!(und.edges(), &[[0, 1], [1, 2]]);
        let bid = knn_graph(&cfg, 1, KnnMode::Bidirectional).unwrap();
        assert_eq!(bid.edges(), &[[0, 1]]);
    }

    #[test]
    fn knn_graph_large_k_is_complete() {
        let w = BoxWindow::centered(2, 6.0).unwrap();
        let cfg = sample_poisson(0.5, &w, RngStream::new(40)).unwrap();
        let n = cfg.len();
        assert!(n >= 3);
        let g = knn_graph(&cfg, n - 1, KnnMode::Undirected).unwrap();
        assert_eq!(g.n_edges(), n * (n - 1) / 2);
    }

    #[test]
    fn knn_graph_insufficient_points() {
        let cfg = config_2d(&[[0.0, 0.0], [1.0, 0.0]], 4.0);
        assert!(matches!(
            knn_graph(&cfg, 2, KnnMode::Undirected),
            Err(Error::InsufficientPoints(_))
        ));
    }

    #[test]
    fn rng_graph_examples() {
        let cfg = config_2d(&[[0.0, 0.0], [1.0, 0.0]], 4.0);
        assert_eq!(rng_graph(&cfg).unwrap().n_edges(), 1);

        // the middle point sits in the lune of the outer pair
        let cfg = config_2d(&[[0.0, 0.0], [1.0, 0.0], [0.5, 0.1]], 4.0);
        let g = rng_graph(&cfg).unwrap();
        assert!(g.contains_edge(0, 2));
        assert!(g.contains_edge(1, 2));
        assert!(!g.contains_edge(0, 1));
    }

    #[test]
    fn clique_count_examples() {
        let cfg = config_2d(&[[0.0, 0.0], [0.5, 0.0]], 4.0);
        assert_eq!(clique_count_at(&cfg, 0, 2, 1.0).unwrap(), 1);

        let cfg = config_2d(&[[0.0, 0.0], [0.5, 0.0], [0.25, 0.4]], 4.0);
        assert_eq!(clique_count_at(&cfg, 0, 3, 1.0).unwrap(), 1);
        assert_eq!(clique_count_at(&cfg, 0, 2, 1.0).unwrap(), 2);

        let cfg = config_2d(&[[0.0, 0.0], [2.0, 0.0]], 8.0);
        assert_eq!(clique_count_at(&cfg, 0, 2, 1.0).unwrap(), 0);
        // strict inequality: distance exactly t is not an edge
        let cfg = config_2d(&[[0.0, 0.0], [1.0, 0.0]], 8.0);
        assert_eq!(clique_count_at(&cfg, 0, 2, 1.0).unwrap(), 0);
    }

    #[test]
    fn voronoi_cross_is_unit_square() {
        let cfg = config_2d(
            &[[0.0, 0.0], [2.0, 0.0], [-2.0, 0.0], [0.0, 2.0], [0.0, -2.0]],
            8.0,
        );
        let cell = voronoi_cell(&cfg, 0, 10.0).unwrap();
        assert!(cell.bounded);
        let (v0, v1, v2) = intrinsic_volumes_2d(&cell).unwrap();
        assert_eq!(v0, 1.0);
        assert_relative_eq!(v1, 4.0, max_relative = 1e-12);
        assert_relative_eq!(v2, 4.0, max_relative = 1e-12);
    }

    #[test]
    fn voronoi_half_plane_is_unbounded() {
        let cfg = config_2d(&[[0.0, 0.0], [2.0, 0.0]], 8.0);
        let cell = voronoi_cell(&cfg, 0, 10.0).unwrap();
        assert!(!cell.bounded);
        assert!(matches!(
            intrinsic_volumes_2d(&cell),
            Err(Error::UnboundedCell)
        ));
    }

    #[test]
    fn voronoi_cells_tessellate_the_window() {
        // cells of points in Q_n partition the plane; their total area over
        // the scoring box approaches n^2 (the mean is exactly n^2)
        let side = 12.0_f64;
        let margin = 6.0;
        let w = BoxWindow::centered(2, side + 2.0 * margin).unwrap();
        let inner = BoxWindow::centered(2, side).unwrap();
        let mut total = 0.0;
        let reps = 8;
        for rep in 0..reps {
            let cfg = sample_poisson(1.0, &w, RngStream::new(55).substream(rep)).unwrap();
            for i in cfg.indices_in(&inner) {
                let cell = voronoi_cell(&cfg, i, margin).unwrap();
                assert!(cell.bounded, "margin too small for cell {i}");
                total += cell.area();
            }
        }
        let mean_area = total / reps as f64;
        assert_relative_eq!(mean_area, side * side, max_relative = 0.05);
    }

    #[test]
    fn intrinsic_volumes_of_inscribed_720_gon() {
        let n = 720;
        let vertices: Vec<[f64; 2]> = (0..n)
            .map(|i| {
                let a = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                [a.cos(), a.sin()]
            })
            .collect();
        let cell = ConvexPolygon {
            vertices,
            bounded: true,
        };
        let (v0, v1, v2) = intrinsic_volumes_2d(&cell).unwrap();
        assert_eq!(v0, 1.0);
        assert_relative_eq!(v1, std::f64::consts::PI, epsilon = 1e-3);
        assert_relative_eq!(v2, std::f64::consts::PI, epsilon = 1e-3);
    }

    #[test]
    fn degenerate_polygon_is_an_error() {
        let cell = ConvexPolygon {
            vertices: vec![[0.0, 0.0], [1.0, 0.0]],
            bounded: true,
        };
        assert!(intrinsic_volumes_2d(&cell).is_err());
    }

    #[test]
    fn graph_rejects_self_loops_and_range() {
        assert!(Graph::new(3, vec![(0, 0)]).is_err());
        assert!(Graph::new(3, vec![(0, 3)]).is_err());
        let g = Graph::new(3, vec![(2, 0), (0, 2), (1, 2)]).unwrap();
        assert_eq!(g.n_edges(), 2);
        assert!(g.contains_edge(0, 2) && g.contains_edge(2, 0));
    }

    #[test]
    fn rng_angle_and_degree_bounds_on_poisson_configs() {
        let w = BoxWindow::centered(2, 10.0).unwrap();
        for rep in 0..20u64 {
            let cfg = sample_poisson(1.0, &w, RngStream::new(60).substream(rep)).unwrap();
            if cfg.len() < 3 {
                continue;
            }
            let g = rng_graph(&cfg).unwrap();
            assert!(g.max_degree() <= 6, "degree {} > 6", g.max_degree());
            for v in 0..cfg.len() {
                let nb = g.neighbors(v);
                for a in 0..nb.len() {
                    for b in (a + 1)..nb.len() {
                        let u = cfg.point(nb[a]);
                        let t = cfg.point(nb[b]);
                        let c = cfg.point(v);
                        let du = [u[0] - c[0], u[1] - c[1]];
                        let dt = [t[0] - c[0], t[1] - c[1]];
                        let cos = (du[0] * dt[0] + du[1] * dt[1])
                            / ((du[0].powi(2) + du[1].powi(2)).sqrt()
                                * (dt[0].powi(2) + dt[1].powi(2)).sqrt());
                        let angle = cos.clamp(-1.0, 1.0).acos();
                        assert!(
                            angle >= std::f64::consts::FRAC_PI_3 - 1e-9,
                            "angle {angle} at vertex {v}"
                        );
                    }
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn knn_graph_matches_brute_force(
            pts in proptest::collection::vec((-4.0f64..4.0, -4.0f64..4.0), 3..10),
            k in 1usize..3,
        ) {
            let pts: Vec<[f64; 2]> = pts.into_iter().map(|(x, y)| [x, y]).collect();
            let w = BoxWindow::centered(2, 8.0).unwrap();
            let Ok(cfg) = PointConfig::new(
                pts.iter().map(|p| Point::new(p.to_vec()).unwrap()).collect(),
                w,
            ) else { return Ok(()); };
            if cfg.len() <= k { return Ok(()); }
            for mode in [KnnMode::Undirected, KnnMode::Bidirectional] {
                let g = knn_graph(&cfg, k, mode).unwrap();
                let oracle = knn_graph_oracle(&cfg, k, mode);
                let got: Vec<(usize, usize)> =
                    g.edges().iter().map(|e| (e[0] as usize, e[1] as usize)).collect();
                prop_assert_eq!(&got, &oracle);
            }
            // bidirectional graph is a subgraph of the undirected graph
            let bid = knn_graph(&cfg, k, KnnMode::Bidirectional).unwrap();
            let und = knn_graph(&cfg, k, KnnMode::Undirected).unwrap();
            for e in bid.edges() {
                prop_assert!(und.contains_edge(e[0] as usize, e[1] as usize));
            }
        }

        #[test]
        fn rng_graph_matches_brute_force(
            pts in proptest::collection::vec((-4.0f64..4.0, -4.0f64..4.0), 2..10),
        ) {
            let pts: Vec<[f64; 2]> = pts.into_iter().map(|(x, y)| [x, y]).collect();
            let w = BoxWindow::centered(2, 8.0).unwrap();
            let Ok(cfg) = PointConfig::new(
                pts.iter().map(|p| Point::new(p.to_vec()).unwrap()).collect(),
                w,
            ) else { return Ok(()); };
            let g = rng_graph(&cfg).unwrap();
            let got: Vec<(usize, usize)> =
                g.edges().iter().map(|e| (e[0] as usize, e[1] as usize)).collect();
            prop_assert_eq!(got, rng_graph_oracle(&cfg));
        }

        #[test]
        fn knn_radius_monotone_under_addition(
            pts in proptest::collection::vec((-4.0f64..4.0, -4.0f64..4.0), 2..8),
            extra in (-4.0f64..4.0, -4.0f64..4.0),
            k in 1usize..3,
        ) {
            let mut pts: Vec<[f64; 2]> = pts.into_iter().map(|(x, y)| [x, y]).collect();
            let w = BoxWindow::centered(2, 8.0).unwrap();
            let Ok(cfg) = PointConfig::new(
                pts.iter().map(|p| Point::new(p.to_vec()).unwrap()).collect(),
                w.clone(),
            ) else { return Ok(()); };
            let before = knn_radius(&cfg, 0, k).unwrap();
            pts.push([extra.0, extra.1]);
            let Ok(bigger) = PointConfig::new(
                pts.iter().map(|p| Point::new(p.to_vec()).unwrap()).collect(),
                w,
            ) else { return Ok(()); };
            let after = knn_radius(&bigger, 0, k).unwrap();
            prop_assert!(after <= before);
        }

        #[test]
        fn clique_count_monotone_under_addition(
            pts in proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 2..8),
            extra in (-2.0f64..2.0, -2.0f64..2.0),
        ) {
            let mut pts: Vec<[f64; 2]> = pts.into_iter().map(|(x, y)| [x, y]).collect();
            let w = BoxWindow::centered(2, 8.0).unwrap();
            let Ok(cfg) = PointConfig::new(
                pts.iter().map(|p| Point::new(p.to_vec()).unwrap()).collect(),
                w.clone(),
            ) else { return Ok(()); };
            let before = clique_count_at(&cfg, 0, 3, 1.5).unwrap();
            pts.push([extra.0, extra.1]);
            let Ok(bigger) = PointConfig::new(
                pts.iter().map(|p| Point::new(p.to_vec()).unwrap()).collect(),
                w,
            ) else { return Ok(()); };
            let after = clique_count_at(&bigger, 0, 3, 1.5).unwrap();
            prop_assert!(after >= before);
        }
    }
}
