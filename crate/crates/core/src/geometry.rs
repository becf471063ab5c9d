//! Point configurations, box windows, Poisson sampling, thinning and
//! superposition, all driven by splittable seeded random streams.
//!
//! A [`PointConfig`] is a finite set of points in `R^d` (`1 <= d <= 3`)
//! together with the box window it was sampled in. Every sampling operation
//! is a pure function of its parameters and an [`RngStream`], so results are
//! reproducible regardless of evaluation order or worker count.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A single point in `R^d` with `1 <= d <= 3`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() || coords.len() > 3 {
            return Err(Error::Parameter(format!(
                "point dimension must be 1..=3, got {}",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::Parameter("point coordinates must be finite".into()));
        }
        Ok(Self { coords })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

/// The box `Q_n = [-n/2, n/2]^d`, optionally shifted by a center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxWindow {
    pub dim: usize,
    pub side: f64,
    pub center: Vec<f64>,
}

impl BoxWindow {
    /// Origin-centered box of the given side length.
    pub fn centered(dim: usize, side: f64) -> Result<Self> {
        Self::new(dim, side, vec![0.0; dim])
    }

    pub fn new(dim: usize, side: f64, center: Vec<f64>) -> Result<Self> {
        if dim == 0 || dim > 3 {
            return Err(Error::Parameter(format!(
                "window dimension must be 1..=3, got {dim}"
            )));
        }
        if !(side > 0.0 && side.is_finite()) {
            return Err(Error::Parameter(format!(
                "window side must be positive and finite, got {side}"
            )));
        }
        if center.len() != dim || center.iter().any(|c| !c.is_finite()) {
            return Err(Error::Parameter("window center invalid".into()));
        }
        Ok(Self { dim, side, center })
    }

    pub fn volume(&self) -> f64 {
        self.side.powi(self.dim as i32)
    }

    /// Closed-box membership.
    pub fn contains(&self, p: &[f64]) -> bool {
        let h = self.side / 2.0;
        p.iter()
            .zip(&self.center)
            .all(|(x, c)| (x - c).abs() <= h)
    }

    /// Whether `inner` lies inside `self` (closed containment, same dim).
    pub fn contains_window(&self, inner: &BoxWindow) -> bool {
        if self.dim != inner.dim {
            return false;
        }
        let h = self.side / 2.0;
        let hi = inner.side / 2.0;
        self.center
            .iter()
            .zip(&inner.center)
            .all(|(c, ci)| (ci - c).abs() + hi <= h + 1e-12)
    }

    /// Euclidean diameter of the box.
    pub fn diameter(&self) -> f64 {
        self.side * (self.dim as f64).sqrt()
    }
}

/// A finite point configuration with its sampling window.
///
/// Coordinates are stored flat (`dim * len` values) so hot loops iterate
/// over slices without per-point allocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointConfig {
    dim: usize,
    coords: Vec<f64>,
    window: BoxWindow,
}

impl PointConfig {
    /// Build a configuration from user-supplied points.
    ///
    /// Rejects points outside the window and exact coordinate duplicates
    /// (the nonequidistance policy: coincident points are not representable).
    pub fn new(points: Vec<Point>, window: BoxWindow) -> Result<Self> {
        let dim = window.dim;
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in &points {
            if p.dim() != dim {
                return Err(Error::Parameter(format!(
                    "point dimension {} does not match window dimension {dim}",
                    p.dim()
                )));
            }
            if !window.contains(&p.coords) {
                return Err(Error::Parameter(format!(
                    "point {:?} lies outside the window",
                    p.coords
                )));
            }
            coords.extend_from_slice(&p.coords);
        }
        let cfg = Self { dim, coords, window };
        if cfg.has_duplicates() {
            return Err(Error::Parameter(
                "configuration contains coincident points".into(),
            ));
        }
        Ok(cfg)
    }

    /// Internal constructor for sampled data: points are known to lie in the
    /// window and coincidences have probability zero under continuous
    /// sampling, so no validation pass is made.
    pub(crate) fn from_sampled(dim: usize, coords: Vec<f64>, window: BoxWindow) -> Self {
        debug_assert_eq!(coords.len() % dim, 0);
        Self { dim, coords, window }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn window(&self) -> &BoxWindow {
        &self.window
    }

    /// Coordinate slice of point `i`.
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter_points(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn to_points(&self) -> Vec<Point> {
        self.iter_points()
            .map(|c| Point { coords: c.to_vec() })
            .collect()
    }

    fn has_duplicates(&self) -> bool {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_unstable_by(|&a, &b| lex_cmp(self.point(a), self.point(b)));
        idx.windows(2)
            .any(|w| self.point(w[0]) == self.point(w[1]))
    }

    /// Indices of the points lying in the closed box `window`.
    pub fn indices_in(&self, window: &BoxWindow) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| window.contains(self.point(i)))
            .collect()
    }
}

/// Lexicographic coordinate order, the deterministic tie-breaker.
pub(crate) fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y) {
            Some(std::cmp::Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    std::cmp::Ordering::Equal
}

/// Squared Euclidean distance between coordinate slices.
#[inline]
pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Euclidean distance between coordinate slices.
#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist2(a, b).sqrt()
}

/// A splittable seeded random stream.
///
/// Identical `(seed, stream_id)` pairs reproduce identical byte streams;
/// distinct stream ids index independent ChaCha streams, so per-trial
/// substreams are reproducible no matter how trials are scheduled across
/// workers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self { seed, stream_id: 0 }
    }

    /// Derive the `child`-th substream. Chaining substreams is fine: ids are
    /// mixed through a splitmix64 finalizer, so nested derivations do not
    /// collide in practice.
    pub fn substream(self, child: u64) -> Self {
        Self {
            seed: self.seed,
            stream_id: mix64(self.stream_id, child),
        }
    }

    /// Instantiate the generator for this stream.
    pub fn rng(self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

fn mix64(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Sample a homogeneous Poisson process of the given intensity in a window.
///
/// The point count is Poisson(intensity * side^d); given the count, points
/// are i.i.d. uniform in the window.
pub fn sample_poisson(intensity: f64, window: &BoxWindow, rng: RngStream) -> Result<PointConfig> {
    if !(intensity > 0.0 && intensity.is_finite()) {
        return Err(Error::Parameter(format!(
            "intensity must be positive, got {intensity}"
        )));
    }
    let mean = intensity * window.volume();
    let mut r = rng.rng();
    let count = Poisson::new(mean)
        .map_err(|e| Error::Parameter(format!("invalid Poisson mean {mean}: {e}")))?
        .sample(&mut r) as usize;
    let dim = window.dim;
    let h = window.side / 2.0;
    let mut coords = Vec::with_capacity(count * dim);
    for _ in 0..count {
        for c in &window.center {
            coords.push(c + r.gen_range(-h..=h));
        }
    }
    Ok(PointConfig::from_sampled(dim, coords, window.clone()))
}

/// Independent thinning: each point survives with probability `survival`.
pub fn thin(config: &PointConfig, survival: f64, rng: RngStream) -> Result<PointConfig> {
    if !(0.0..=1.0).contains(&survival) {
        return Err(Error::Parameter(format!(
            "survival probability must lie in [0, 1], got {survival}"
        )));
    }
    let mut r = rng.rng();
    let dim = config.dim;
    let mut coords = Vec::new();
    for p in config.iter_points() {
        if r.gen::<f64>() < survival {
            coords.extend_from_slice(p);
        }
    }
    Ok(PointConfig::from_sampled(dim, coords, config.window.clone()))
}

/// Superpose two configurations over the same window.
///
/// Exact coordinate collisions (measure zero for independent samples) are
/// resolved by keeping the copy from `a`.
pub fn superpose(a: &PointConfig, b: &PointConfig) -> Result<PointConfig> {
    if a.dim != b.dim || a.window != b.window {
        return Err(Error::Parameter(
            "superpose requires matching dimensions and windows".into(),
        ));
    }
    let mut coords = a.coords.clone();
    for p in b.iter_points() {
        if !a.iter_points().any(|q| q == p) {
            coords.extend_from_slice(p);
        }
    }
    Ok(PointConfig::from_sampled(a.dim, coords, a.window.clone()))
}

/// Restrict a configuration to the points inside the closed box `window`.
pub fn restrict(config: &PointConfig, window: &BoxWindow) -> PointConfig {
    let mut coords = Vec::new();
    for p in config.iter_points() {
        if window.contains(p) {
            coords.extend_from_slice(p);
        }
    }
    PointConfig::from_sampled(config.dim, coords, window.clone())
}

// ---------------------------------------------------------------------------
// Serialization: line-oriented text format and JSON.
// ---------------------------------------------------------------------------

/// Serialize to the line-oriented text format: a header line
/// `d <n_points> <side_length> <dimension>` followed by one point per line
/// as whitespace-separated decimal coordinates. Only origin-centered windows
/// are representable in this format; use JSON for shifted windows.
pub fn to_text(config: &PointConfig) -> Result<String> {
    if config.window.center.iter().any(|&c| c != 0.0) {
        return Err(Error::Format(
            "text format supports origin-centered windows only".into(),
        ));
    }
    let mut out = format!(
        "d {} {} {}\n",
        config.len(),
        config.window.side,
        config.dim
    );
    for p in config.iter_points() {
        let line: Vec<String> = p.iter().map(|c| format!("{c}")).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    Ok(out)
}

/// Parse the line-oriented text format produced by [`to_text`].
pub fn from_text(text: &str) -> Result<PointConfig> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty input".into()))?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.len() != 4 || tokens[0] != "d" {
        return Err(Error::Format(
            "header must be `d <n_points> <side_length> <dimension>`".into(),
        ));
    }
    let n_points: usize = tokens[1]
        .parse()
        .map_err(|_| Error::Format("bad point count".into()))?;
    let side: f64 = tokens[2]
        .parse()
        .map_err(|_| Error::Format("bad side length".into()))?;
    let dim: usize = tokens[3]
        .parse()
        .map_err(|_| Error::Format("bad dimension".into()))?;
    let window = BoxWindow::centered(dim, side)?;
    let mut points = Vec::with_capacity(n_points);
    for line in lines {
        let coords: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| Error::Format(format!("bad coordinate `{t}`"))))
            .collect::<Result<_>>()?;
        points.push(Point::new(coords)?);
    }
    if points.len() != n_points {
        return Err(Error::Format(format!(
            "header announced {n_points} points, found {}",
            points.len()
        )));
    }
    PointConfig::new(points, window)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    fn q(side: f64) -> BoxWindow {
        BoxWindow::centered(2, side).unwrap()
    }

    #[test]
    fn rng_stream_is_deterministic() {
        let s = RngStream::new(42).substream(7);
        let mut a = s.rng();
        let mut b = s.rng();
        for _ in 0..64 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn rng_substreams_differ() {
        let s = RngStream::new(42);
        let mut a = s.substream(0).rng();
        let mut b = s.substream(1).rng();
        assert_ne!(a.next_u64(), b.next_u64());
    }

    #[test]
    fn sample_poisson_is_deterministic() {
        let w = q(10.0);
        let s = RngStream::new(7).substream(3);
        let a = sample_poisson(1.0, &w, s).unwrap();
        let b = sample_poisson(1.0, &w, s).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sample_poisson_mean_count() {
        // intensity 1 on Q_10 in d = 2: mean count 100.
        let w = q(10.0);
        let trials = 2000;
        let total: usize = (0..trials)
            .map(|i| {
                sample_poisson(1.0, &w, RngStream::new(11).substream(i))
                    .unwrap()
                    .len()
            })
            .sum();
        let mean = total as f64 / trials as f64;
        // sd of the mean is 10/sqrt(2000) ~ 0.22; allow 5 sigma.
        assert!((mean - 100.0).abs() < 1.2, "mean {mean}");
    }

    #[test]
    fn sample_poisson_void_probability() {
        // intensity 0.1 on Q_2 in d = 2: P(empty) = exp(-0.4).
        let w = q(2.0);
        let trials = 20_000;
        let empty = (0..trials)
            .filter(|&i| {
                sample_poisson(0.1, &w, RngStream::new(5).substream(i))
                    .unwrap()
                    .is_empty()
            })
            .count();
        let p = empty as f64 / trials as f64;
        let expect = (-0.4f64).exp();
        let sigma = (expect * (1.0 - expect) / trials as f64).sqrt();
        assert!((p - expect).abs() < 4.0 * sigma, "p = {p}, expect {expect}");
    }

    #[test]
    fn sample_rejects_bad_parameters() {
        let w = q(2.0);
        assert!(sample_poisson(0.0, &w, RngStream::new(0)).is_err());
        assert!(sample_poisson(-1.0, &w, RngStream::new(0)).is_err());
        assert!(BoxWindow::centered(2, 0.0).is_err());
        assert!(BoxWindow::centered(4, 1.0).is_err());
    }

    #[test]
    fn thin_identity_and_empty() {
        let w = q(5.0);
        let c = sample_poisson(1.0, &w, RngStream::new(1)).unwrap();
        let all = thin(&c, 1.0, RngStream::new(2)).unwrap();
        assert_eq!(all, c);
        let none = thin(&c, 0.0, RngStream::new(2)).unwrap();
        assert!(none.is_empty());
        assert!(thin(&c, 1.5, RngStream::new(2)).is_err());
    }

    #[test]
    fn thin_keeps_half() {
        let w = BoxWindow::centered(2, 100.0).unwrap();
        let c = sample_poisson(1.0, &w, RngStream::new(3)).unwrap();
        let kept = thin(&c, 0.5, RngStream::new(4)).unwrap();
        let frac = kept.len() as f64 / c.len() as f64;
        assert!((frac - 0.5).abs() < 0.02, "kept fraction {frac}");
    }

    #[test]
    fn superpose_identity_and_union() {
        let w = q(4.0);
        let a = PointConfig::new(
            vec![Point::new(vec![0.0, 0.0]).unwrap()],
            w.clone(),
        )
        .unwrap();
        let empty = PointConfig::new(vec![], w.clone()).unwrap();
        assert_eq!(superpose(&a, &empty).unwrap(), a);
        let b = PointConfig::new(
            vec![Point::new(vec![1.0, 0.0]).unwrap()],
            w.clone(),
        )
        .unwrap();
        assert_eq!(superpose(&a, &b).unwrap().len(), 2);
        // duplicate resolution keeps one copy
        assert_eq!(superpose(&a, &a).unwrap().len(), 1);
    }

    #[test]
    fn restrict_nested_boxes() {
        let w = q(6.0);
        let c = PointConfig::new(
            vec![
                Point::new(vec![0.0, 0.0]).unwrap(),
                Point::new(vec![3.0, 3.0]).unwrap(),
            ],
            w.clone(),
        )
        .unwrap();
        let r = restrict(&c, &q(2.0));
        assert_eq!(r.len(), 1);
        assert_eq!(r.point(0), &[0.0, 0.0]);
        // restrict to own window is the identity on the point set
        let same = restrict(&c, &w);
        assert_eq!(same.len(), 2);
        // nested restriction equals restriction to the smaller box
        let ab = restrict(&restrict(&c, &q(4.0)), &q(2.0));
        let direct = restrict(&c, &q(2.0));
        assert_eq!(ab.len(), direct.len());
    }

    #[test]
    fn duplicate_points_rejected() {
        let w = q(4.0);
        let r = PointConfig::new(
            vec![
                Point::new(vec![1.0, 1.0]).unwrap(),
                Point::new(vec![1.0, 1.0]).unwrap(),
            ],
            w,
        );
        assert!(r.is_err());
    }

    #[test]
    fn text_round_trip() {
        let w = q(8.0);
        let c = sample_poisson(0.5, &w, RngStream::new(9)).unwrap();
        let text = to_text(&c).unwrap();
        let back = from_text(&text).unwrap();
        assert_eq!(c, back);
    }

    #[test]
    fn json_round_trip() {
        let w = q(8.0);
        let c = sample_poisson(0.5, &w, RngStream::new(10)).unwrap();
        let json = serde_json::to_string(&c).unwrap();
        let back: PointConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(c, back);
    }
}
