//! Neighbor queries over a point configuration.
//!
//! Below [`BRUTE_FORCE_LIMIT`] points, queries scan all pairs; above it a
//! uniform grid (spatial hash) over the window is built once and queries
//! visit only nearby cells. Query results are sorted by point index, so the
//! two tiers return bit-identical aggregates.

use crate::geometry::{dist2, PointConfig};

/// Configurations up to this size use brute-force pairwise distances.
pub const BRUTE_FORCE_LIMIT: usize = 5_000;

enum Backend {
    Brute,
    Grid {
        cell: f64,
        per_axis: usize,
        origin: Vec<f64>,
        buckets: Vec<Vec<u32>>,
    },
}

/// Read-only neighbor index over one configuration.
pub struct NeighborIndex<'a> {
    config: &'a PointConfig,
    backend: Backend,
}

impl<'a> NeighborIndex<'a> {
    pub fn new(config: &'a PointConfig) -> Self {
        let n = config.len();
        let backend = if n <= BRUTE_FORCE_LIMIT {
            Backend::Brute
        } else {
            let dim = config.dim();
            let w = config.window();
            // aim for O(1) points per cell at the sampled density
            let per_axis = ((n as f64).powf(1.0 / dim as f64).ceil() as usize).max(1);
            let cell = w.side / per_axis as f64;
            let origin: Vec<f64> = w.center.iter().map(|c| c - w.side / 2.0).collect();
            let mut buckets = vec![Vec::new(); per_axis.pow(dim as u32)];
            for i in 0..n {
                let b = bucket_of(config.point(i), &origin, cell, per_axis, dim);
                buckets[b].push(i as u32);
            }
            Backend::Grid {
                cell,
                per_axis,
                origin,
                buckets,
            }
        };
        Self { config, backend }
    }

    pub fn config(&self) -> &PointConfig {
        self.config
    }

    /// Indices of points within distance `r` of `center` (the comparison is
    /// strict when `strict` is set, closed otherwise). The center itself is
    /// included when it is a configuration point at distance zero; callers
    /// filter by index. Results are sorted by index.
    ///
    /// Distances are compared after the square root, so the outcome is
    /// bit-consistent with radii produced by [`Self::kth_nearest`].
    pub fn within(&self, center: &[f64], r: f64, strict: bool) -> Vec<usize> {
        let keep = |d2: f64| {
            let d = d2.sqrt();
            if strict {
                d < r
            } else {
                d <= r
            }
        };
        let mut out = Vec::new();
        match &self.backend {
            Backend::Brute => {
                for i in 0..self.config.len() {
                    if keep(dist2(self.config.point(i), center)) {
                        out.push(i);
                    }
                }
            }
            Backend::Grid {
                cell,
                per_axis,
                origin,
                buckets,
            } => {
                let dim = self.config.dim();
                // widen the scanned box a hair so sqrt rounding at the
                // boundary cannot drop a cell
                let rw = r * (1.0 + 1e-12) + 1e-300;
                let mut lo = [0isize; 3];
                let mut hi = [0isize; 3];
                for a in 0..dim {
                    lo[a] = (((center[a] - rw) - origin[a]) / cell).floor() as isize;
                    hi[a] = (((center[a] + rw) - origin[a]) / cell).floor() as isize;
                }
                for_cells(&lo, &hi, dim, *per_axis, |flat| {
                    for &i in &buckets[flat] {
                        let i = i as usize;
                        if keep(dist2(self.config.point(i), center)) {
                            out.push(i);
                        }
                    }
                });
                out.sort_unstable();
            }
        }
        out
    }

    /// Distance from point `i` to its `k`-th nearest other point, or
    /// `f64::INFINITY` when fewer than `k` other points exist.
    pub fn kth_nearest(&self, i: usize, k: usize) -> f64 {
        debug_assert!(k >= 1);
        let center = self.config.point(i);
        match &self.backend {
            Backend::Brute => {
                let mut d2: Vec<f64> = (0..self.config.len())
                    .filter(|&j| j != i)
                    .map(|j| dist2(self.config.point(j), center))
                    .collect();
                if d2.len() < k {
                    return f64::INFINITY;
                }
                let (_, kth, _) = d2.select_nth_unstable_by(k - 1, f64::total_cmp);
                kth.sqrt()
            }
            Backend::Grid { cell, .. } => {
                // expanding search: all points within radius r are seen once
                // the scanned shell reaches r, so the k-th candidate is exact
                // as soon as its distance is at most the scan radius.
                let mut r = *cell;
                let diam = self.config.window().diameter();
                loop {
                    let mut cand: Vec<f64> = self
                        .within(center, r, false)
                        .into_iter()
                        .filter(|&j| j != i)
                        .map(|j| dist2(self.config.point(j), center))
                        .collect();
                    if cand.len() >= k {
                        let (_, kth, _) = cand.select_nth_unstable_by(k - 1, f64::total_cmp);
                        let d = kth.sqrt();
                        if d <= r {
                            return d;
                        }
                    }
                    if r > diam {
                        return f64::INFINITY;
                    }
                    r *= 2.0;
                }
            }
        }
    }
}

fn bucket_of(p: &[f64], origin: &[f64], cell: f64, per_axis: usize, dim: usize) -> usize {
    let mut flat = 0usize;
    for a in 0..dim {
        let mut idx = ((p[a] - origin[a]) / cell).floor() as isize;
        idx = idx.clamp(0, per_axis as isize - 1);
        flat = flat * per_axis + idx as usize;
    }
    flat
}

fn for_cells(
    lo: &[isize; 3],
    hi: &[isize; 3],
    dim: usize,
    per_axis: usize,
    mut visit: impl FnMut(usize),
) {
    let clamp = |v: isize| v.clamp(0, per_axis as isize - 1) as usize;
    let (x0, x1) = (clamp(lo[0]), clamp(hi[0]));
    match dim {
        1 => {
            for x in x0..=x1 {
                visit(x);
            }
        }
        2 => {
            let (y0, y1) = (clamp(lo[1]), clamp(hi[1]));
            for x in x0..=x1 {
                for y in y0..=y1 {
                    visit(x * per_axis + y);
                }
            }
        }
        _ => {
            let (y0, y1) = (clamp(lo[1]), clamp(hi[1]));
            let (z0, z1) = (clamp(lo[2]), clamp(hi[2]));
            for x in x0..=x1 {
                for y in y0..=y1 {
                    for z in z0..=z1 {
                        visit((x * per_axis + y) * per_axis + z);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{dist, sample_poisson, BoxWindow, RngStream};

    /// Force-grid variant for testing the grid path on small configs.
    fn grid_index(config: &PointConfig) -> NeighborIndex<'_> {
        let n = config.len();
        let dim = config.dim();
        let w = config.window();
        let per_axis = ((n as f64).powf(1.0 / dim as f64).ceil() as usize).max(1);
        let cell = w.side / per_axis as f64;
        let origin: Vec<f64> = w.center.iter().map(|c| c - w.side / 2.0).collect();
        let mut buckets = vec![Vec::new(); per_axis.pow(dim as u32)];
        for i in 0..n {
            buckets[bucket_of(config.point(i), &origin, cell, per_axis, dim)].push(i as u32);
        }
        NeighborIndex {
            config,
            backend: Backend::Grid {
                cell,
                per_axis,
                origin,
                buckets,
            },
        }
    }

    #[test]
    fn grid_matches_brute_force() {
        for d in 1..=3usize {
            let w = BoxWindow::centered(d, 8.0).unwrap();
            let cfg = sample_poisson(1.0, &w, RngStream::new(31).substream(d as u64)).unwrap();
            let brute = NeighborIndex::new(&cfg);
            let grid = grid_index(&cfg);
            for i in 0..cfg.len().min(40) {
                let c = cfg.point(i).to_vec();
                for r in [0.5, 1.0, 2.5] {
                    assert_eq!(brute.within(&c, r, false), grid.within(&c, r, false));
                    assert_eq!(brute.within(&c, r, true), grid.within(&c, r, true));
                }
                for k in 1..=4 {
                    let a = brute.kth_nearest(i, k);
                    let b = grid.kth_nearest(i, k);
                    assert_eq!(a.to_bits(), b.to_bits(), "i={i} k={k} d={d}");
                }
            }
        }
    }

    #[test]
    fn kth_nearest_counts_only_other_points() {
        let w = BoxWindow::centered(2, 10.0).unwrap();
        let cfg = sample_poisson(0.5, &w, RngStream::new(33)).unwrap();
        let idx = NeighborIndex::new(&cfg);
        let n = cfg.len();
        assert!(idx.kth_nearest(0, n).is_infinite());
        let d1 = idx.kth_nearest(0, 1);
        let direct = (1..n)
            .map(|j| dist(cfg.point(j), cfg.point(0)))
            .fold(f64::INFINITY, f64::min);
        assert_eq!(d1, direct);
    }
}
