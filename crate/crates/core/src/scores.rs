//! Score functions of recentred configurations, their truncations, and the
//! volume-normalized empirical functional `H_n`.
//!
//! Every score acts on the configuration recentred at a distinguished point:
//! clique counts and power-weighted edge sums in the geometric graph,
//! power-weighted incident-edge sums in the k-nearest-neighbor and relative
//! neighborhood graphs, and intrinsic volumes of the planar Voronoi cell.
//! Per-edge quantities carry the 1/2 prefactor (and clique counts the 1/k
//! prefactor), so per-point scores summed over all points reproduce the
//! edge-sum functionals exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dist, BoxWindow, PointConfig};
use crate::graphs::{knn_edges, rng_edges, voronoi_cell, intrinsic_volumes_2d, KnnMode};
use crate::grid::NeighborIndex;
use crate::stabilization::{cone_cover_2d, stab_radius_knn, stab_radius_voronoi, ConeCover};

/// The base score function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ScoreKind {
    /// `(1/k) #(k-cliques containing the center)` in the geometric graph
    /// with connection radius `t` (strict inequality).
    CliqueCount { k: usize, t: f64 },
    /// `(1/2) sum |x|^alpha` over the other points strictly within `t`.
    PowerEdgeRgg { alpha: f64, t: f64 },
    /// `(1/2) sum |x|^alpha` over edges of the k-NN graph incident to the
    /// center (undirected: either endpoint reaches; bidirectional: both).
    KnnPower { k: usize, alpha: f64, mode: KnnMode },
    /// `(1/2) sum |x|^alpha` over relative-neighborhood edges at the center.
    RngPower { alpha: f64 },
    /// Intrinsic volume `v_j` of the planar Voronoi cell, `j` in `{0, 1, 2}`.
    VoronoiIntrinsic { j: usize },
}

/// Optional truncation wrapper applied to a base score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Truncation {
    /// `xi ^ M`: clamp the value at `M`.
    Cap(f64),
    /// `xi(phi ∩ B_r)`: restrict the recentred configuration to the closed
    /// ball of radius `r` before evaluating.
    Range(f64),
    /// `xi(phi ∩ Q_M) ^ (delta M^d)`: restrict to the centered cube of side
    /// `M`, then clamp at `delta M^d`.
    DeltaM { delta: f64, m: f64 },
}

/// A closed description of one score function: base kind plus optional
/// truncation. This is the unit of dispatch for every evaluator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSpec {
    kind: ScoreKind,
    truncation: Option<Truncation>,
}

impl ScoreSpec {
    pub fn new(kind: ScoreKind) -> Result<Self> {
        match &kind {
            ScoreKind::CliqueCount { k, t } => {
                if *k < 2 {
                    return Err(Error::Parameter("clique order k must be >= 2".into()));
                }
                check_positive("t", *t)?;
            }
            ScoreKind::PowerEdgeRgg { alpha, t } => {
                check_alpha(*alpha)?;
                check_positive("t", *t)?;
            }
            ScoreKind::KnnPower { k, alpha, .. } => {
                if *k < 1 {
                    return Err(Error::Parameter("k must be >= 1".into()));
                }
                check_alpha(*alpha)?;
            }
            ScoreKind::RngPower { alpha } => check_alpha(*alpha)?,
            ScoreKind::VoronoiIntrinsic { j } => {
                if *j > 2 {
                    return Err(Error::Parameter(
                        "intrinsic volume index j must be 0, 1 or 2".into(),
                    ));
                }
            }
        }
        Ok(Self {
            kind,
            truncation: None,
        })
    }

    pub fn clique(k: usize, t: f64) -> Result<Self> {
        Self::new(ScoreKind::CliqueCount { k, t })
    }

    pub fn rgg(alpha: f64, t: f64) -> Result<Self> {
        Self::new(ScoreKind::PowerEdgeRgg { alpha, t })
    }

    pub fn knn(k: usize, alpha: f64, mode: KnnMode) -> Result<Self> {
        Self::new(ScoreKind::KnnPower { k, alpha, mode })
    }

    pub fn rn(alpha: f64) -> Result<Self> {
        Self::new(ScoreKind::RngPower { alpha })
    }

    pub fn voronoi(j: usize) -> Result<Self> {
        Self::new(ScoreKind::VoronoiIntrinsic { j })
    }

    pub fn kind(&self) -> &ScoreKind {
        &self.kind
    }

    pub fn truncation(&self) -> Option<&Truncation> {
        self.truncation.as_ref()
    }

    /// Attach a truncation. The single truncation slot may only be filled
    /// once; truncating an already-truncated spec is a parameter error.
    pub fn truncate(&self, truncation: Truncation) -> Result<Self> {
        if self.truncation.is_some() {
            return Err(Error::Parameter(
                "score spec already carries a truncation".into(),
            ));
        }
        match &truncation {
            Truncation::Cap(m) => check_positive("cap", *m)?,
            Truncation::Range(r) => check_positive("range", *r)?,
            Truncation::DeltaM { delta, m } => {
                check_positive("delta", *delta)?;
                check_positive("M", *m)?;
            }
        }
        Ok(Self {
            kind: self.kind.clone(),
            truncation: Some(truncation),
        })
    }

    /// Whether the base score belongs to the increasing geometric-graph
    /// family (clique counts and power-weighted edges).
    pub fn is_increasing_family(&self) -> bool {
        matches!(
            self.kind,
            ScoreKind::CliqueCount { .. } | ScoreKind::PowerEdgeRgg { .. }
        )
    }

    /// Deterministic dependence range of the score, when it has one: the
    /// value at a center depends only on points within this distance.
    pub fn deterministic_range(&self, dim: usize) -> Option<f64> {
        let base = match self.kind {
            ScoreKind::CliqueCount { t, .. } | ScoreKind::PowerEdgeRgg { t, .. } => Some(t),
            _ => None,
        };
        let trunc = match self.truncation {
            Some(Truncation::Range(r)) => Some(r),
            // the cube Q_M fits in the ball of its half-diagonal
            Some(Truncation::DeltaM { m, .. }) => Some(m * (dim as f64).sqrt() / 2.0),
            _ => None,
        };
        match (base, trunc) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (Some(a), None) => Some(a),
            (None, Some(b)) => Some(b),
            (None, None) => None,
        }
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha >= 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "alpha must be nonnegative and finite, got {alpha}"
        )))
    }
}

// ---------------------------------------------------------------------------
// Canonical string form, e.g. `knn:k=2,alpha=1,mode=undirected;cap=5`.
// ---------------------------------------------------------------------------

impl std::fmt::Display for ScoreSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.kind {
            ScoreKind::CliqueCount { k, t } => write!(f, "clique:k={k},t={t}")?,
            ScoreKind::PowerEdgeRgg { alpha, t } => write!(f, "rgg:alpha={alpha},t={t}")?,
            ScoreKind::KnnPower { k, alpha, mode } => {
                write!(f, "knn:k={k},alpha={alpha},mode={mode}")?
            }
            ScoreKind::RngPower { alpha } => write!(f, "rn:alpha={alpha}")?,
            ScoreKind::VoronoiIntrinsic { j } => write!(f, "voronoi:j={j}")?,
        }
        match &self.truncation {
            None => Ok(()),
            Some(Truncation::Cap(m)) => write!(f, ";cap={m}"),
            Some(Truncation::Range(r)) => write!(f, ";range={r}"),
            Some(Truncation::DeltaM { delta, m }) => write!(f, ";deltam={delta},{m}"),
        }
    }
}

impl std::str::FromStr for ScoreSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (base, trunc) = match s.split_once(';') {
            Some((b, t)) => (b, Some(t)),
            None => (s, None),
        };
        let (kind_name, params) = base
            .split_once(':')
            .ok_or_else(|| Error::Format(format!("score spec `{s}` lacks `kind:params`")))?;
        let kv = parse_params(params)?;
        let get = |key: &str| -> Result<f64> {
            kv.iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| *v)
                .ok_or_else(|| Error::Format(format!("score spec `{s}` is missing `{key}`")))
        };
        let spec = match kind_name {
            "clique" => {
                expect_keys(&kv, &["k", "t"], s)?;
                ScoreSpec::clique(as_count(get("k")?)?, get("t")?)?
            }
            "rgg" => {
                expect_keys(&kv, &["alpha", "t"], s)?;
                ScoreSpec::rgg(get("alpha")?, get("t")?)?
            }
            "knn" => {
                let mode = params
                    .split(',')
                    .find_map(|p| p.strip_prefix("mode="))
                    .ok_or_else(|| Error::Format(format!("score spec `{s}` is missing `mode`")))?;
                let mode = match mode {
                    "undirected" => KnnMode::Undirected,
                    "bidirectional" => KnnMode::Bidirectional,
                    other => {
                        return Err(Error::Format(format!(
                            "unknown knn mode `{other}` (undirected|bidirectional)"
                        )))
                    }
                };
                ScoreSpec::knn(as_count(get("k")?)?, get("alpha")?, mode)?
            }
            "rn" => {
                expect_keys(&kv, &["alpha"], s)?;
                ScoreSpec::rn(get("alpha")?)?
            }
            "voronoi" => {
                expect_keys(&kv, &["j"], s)?;
                ScoreSpec::voronoi(as_count(get("j")?)?)?
            }
            other => {
                return Err(Error::Format(format!(
                    "unknown score kind `{other}` (clique|rgg|knn|rn|voronoi)"
                )))
            }
        };
        match trunc {
            None => Ok(spec),
            Some(t) => {
                let (name, args) = t
                    .split_once('=')
                    .ok_or_else(|| Error::Format(format!("bad truncation `{t}`")))?;
                let trunc = match name {
                    "cap" => Truncation::Cap(parse_f64(args)?),
                    "range" => Truncation::Range(parse_f64(args)?),
                    "deltam" => {
                        let (d, m) = args.split_once(',').ok_or_else(|| {
                            Error::Format("deltam takes two arguments: `deltam=<delta>,<M>`".into())
                        })?;
                        Truncation::DeltaM {
                            delta: parse_f64(d)?,
                            m: parse_f64(m)?,
                        }
                    }
                    other => {
                        return Err(Error::Format(format!(
                            "unknown truncation `{other}` (cap|range|deltam)"
                        )))
                    }
                };
                spec.truncate(trunc)
            }
        }
    }
}

fn parse_params(params: &str) -> Result<Vec<(String, f64)>> {
    params
        .split(',')
        .filter(|p| !p.is_empty())
        .map(|pair| {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("bad parameter `{pair}`")))?;
            if k == "mode" {
                // parsed separately; keep a placeholder entry
                return Ok((k.to_string(), f64::NAN));
            }
            Ok((k.to_string(), parse_f64(v)?))
        })
        .collect()
}

fn parse_f64(s: &str) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| Error::Format(format!("bad number `{s}`")))
}

fn as_count(v: f64) -> Result<usize> {
    if v.fract() == 0.0 && v >= 0.0 && v <= u32::MAX as f64 {
        Ok(v as usize)
    } else {
        Err(Error::Format(format!("expected a small integer, got {v}")))
    }
}

fn expect_keys(kv: &[(String, f64)], keys: &[&str], spec: &str) -> Result<()> {
    for (k, _) in kv {
        if !keys.contains(&k.as_str()) {
            return Err(Error::Format(format!(
                "unknown parameter `{k}` in score spec `{spec}`"
            )));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Evaluation.
// ---------------------------------------------------------------------------

/// Batched score evaluator over one configuration. Construction precomputes
/// whatever the base kind needs (spatial index, k-NN adjacency, RNG edges),
/// so per-point evaluation touches only local data.
pub(crate) struct Evaluator<'a> {
    spec: &'a ScoreSpec,
    config: &'a PointConfig,
    index: NeighborIndex<'a>,
    /// incident `(neighbor, dist)` lists for the k-NN and RNG kinds
    adjacency: Option<Vec<Vec<(u32, f64)>>>,
    knn_insufficient: bool,
    cover: Option<ConeCover>,
}

impl<'a> Evaluator<'a> {
    pub fn new(spec: &'a ScoreSpec, config: &'a PointConfig) -> Result<Self> {
        let index = NeighborIndex::new(config);
        let needs_subconfig = matches!(
            spec.truncation,
            Some(Truncation::Range(_)) | Some(Truncation::DeltaM { .. })
        );
        let mut adjacency = None;
        let mut knn_insufficient = false;
        if !needs_subconfig {
            match spec.kind {
                ScoreKind::KnnPower { k, mode, .. } => {
                    match knn_edges(config, k, mode) {
                        Ok(edges) => adjacency = Some(adjacency_of(config.len(), &edges)),
                        Err(Error::InsufficientPoints(_)) => knn_insufficient = true,
                        Err(e) => return Err(e),
                    }
                }
                ScoreKind::RngPower { .. } => {
                    adjacency = Some(adjacency_of(config.len(), &rng_edges(config)));
                }
                _ => {}
            }
        }
        let cover = match spec.kind {
            ScoreKind::VoronoiIntrinsic { .. } if config.dim() == 2 => Some(cone_cover_2d()),
            _ => None,
        };
        Ok(Self {
            spec,
            config,
            index,
            adjacency,
            knn_insufficient,
            cover,
        })
    }

    /// Score of the configuration recentred at point `center`.
    pub fn score(&self, center: usize) -> Result<f64> {
        if center >= self.config.len() {
            return Err(Error::Parameter(format!(
                "center {center} out of range for {} points",
                self.config.len()
            )));
        }
        match &self.spec.truncation {
            Some(Truncation::Range(r)) => {
                let (sub, c) = crate::stabilization::restrict_to_ball(self.config, center, *r);
                let base = ScoreSpec {
                    kind: self.spec.kind.clone(),
                    truncation: None,
                };
                evaluate_score(&base, &sub, c)
            }
            Some(Truncation::DeltaM { delta, m }) => {
                let (sub, c) = restrict_to_cube(self.config, center, *m);
                let base = ScoreSpec {
                    kind: self.spec.kind.clone(),
                    truncation: None,
                };
                let v = evaluate_score(&base, &sub, c)?;
                Ok(v.min(delta * m.powi(self.config.dim() as i32)))
            }
            Some(Truncation::Cap(cap)) => Ok(self.base_score(center)?.min(*cap)),
            None => self.base_score(center),
        }
    }

    fn base_score(&self, center: usize) -> Result<f64> {
        match self.spec.kind {
            ScoreKind::CliqueCount { k, t } => {
                let count =
                    crate::graphs::clique_count_with_index(self.config, &self.index, center, k, t);
                Ok(count as f64 / k as f64)
            }
            ScoreKind::PowerEdgeRgg { alpha, t } => {
                let c = self.config.point(center);
                let mut sum = 0.0;
                for j in self.index.within(c, t, true) {
                    if j != center {
                        sum += power(dist(self.config.point(j), c), alpha);
                    }
                }
                Ok(0.5 * sum)
            }
            ScoreKind::KnnPower { .. } | ScoreKind::RngPower { .. } => {
                if self.knn_insufficient {
                    return Err(Error::Unstabilized(format!(
                        "k-NN radii are infinite on {} points",
                        self.config.len()
                    )));
                }
                let adj = self.adjacency.as_ref().expect("adjacency precomputed");
                let alpha = match self.spec.kind {
                    ScoreKind::KnnPower { alpha, .. } | ScoreKind::RngPower { alpha } => alpha,
                    _ => unreachable!(),
                };
                Ok(0.5
                    * adj[center]
                        .iter()
                        .map(|&(_, d)| power(d, alpha))
                        .sum::<f64>())
            }
            ScoreKind::VoronoiIntrinsic { j } => {
                if self.config.dim() != 2 {
                    return Err(Error::Parameter(
                        "Voronoi scores require d = 2".into(),
                    ));
                }
                let cover = self.cover.as_ref().expect("cover built for d = 2");
                let r = stab_radius_voronoi(self.config, center, cover)?;
                // the cell is contained in the ball of the stabilization
                // radius; an infinite radius falls back to the window
                // diameter and reports unboundedness through the clip flag
                let clip = if r.is_finite() {
                    r
                } else {
                    self.config.window().diameter()
                };
                let cell = voronoi_cell(self.config, center, clip)?;
                let (v0, v1, v2) = intrinsic_volumes_2d(&cell)?;
                Ok(match j {
                    0 => v0,
                    1 => v1,
                    _ => v2,
                })
            }
        }
    }

    /// Distance beyond which the sampled window cannot change this point's
    /// score: the deterministic range when the spec has one, otherwise the
    /// point's stabilization radius (d = 2 only).
    pub fn guarantee_radius(&self, center: usize) -> Result<f64> {
        if let Some(r) = self.spec.deterministic_range(self.config.dim()) {
            return Ok(r);
        }
        if self.config.dim() != 2 {
            return Err(Error::Unstabilized(
                "stabilization radii require d = 2; use a range truncation".into(),
            ));
        }
        let cover = cone_cover_2d();
        match self.spec.kind {
            ScoreKind::KnnPower { k, .. } => stab_radius_knn(self.config, center, &cover, k),
            _ => stab_radius_voronoi(self.config, center, &cover),
        }
    }
}

fn adjacency_of(n: usize, edges: &[(u32, u32, f64)]) -> Vec<Vec<(u32, f64)>> {
    let mut adj = vec![Vec::new(); n];
    for &(i, j, d) in edges {
        adj[i as usize].push((j, d));
        adj[j as usize].push((i, d));
    }
    adj
}

fn power(d: f64, alpha: f64) -> f64 {
    if alpha == 0.0 {
        1.0
    } else {
        d.powf(alpha)
    }
}

/// Points of `config` within the closed axis-aligned cube of side `m` about
/// point `center`, plus the new index of the center.
fn restrict_to_cube(config: &PointConfig, center: usize, m: f64) -> (PointConfig, usize) {
    let c = config.point(center).to_vec();
    let h = m / 2.0;
    let mut coords = Vec::new();
    let mut new_center = 0;
    let mut kept = 0;
    for i in 0..config.len() {
        let p = config.point(i);
        if p.iter().zip(&c).all(|(x, y)| (x - y).abs() <= h) {
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

/// Evaluate the score of the configuration recentred at point `center`.
pub fn evaluate_score(spec: &ScoreSpec, config: &PointConfig, center: usize) -> Result<f64> {
    Evaluator::new(spec, config)?.score(center)
}

// ---------------------------------------------------------------------------
// Windowed evaluation and H_n.
// ---------------------------------------------------------------------------

/// Per-point scores over a scoring window, with reliability flags.
///
/// A point is flagged when its guarantee radius exceeds the sampling margin
/// (its score might differ from the infinite-volume value) or when its
/// evaluation failed (the score is recorded as 0). Flagged points are
/// counted, never silently dropped.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoredConfig {
    pub config: PointConfig,
    pub scoring_window: BoxWindow,
    /// indices into `config` of the points in the scoring window
    pub point_indices: Vec<usize>,
    pub scores: Vec<f64>,
    pub flags: Vec<bool>,
}

impl ScoredConfig {
    pub fn flagged_count(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }

    pub fn flagged_fraction(&self) -> f64 {
        if self.flags.is_empty() {
            0.0
        } else {
            self.flagged_count() as f64 / self.flags.len() as f64
        }
    }
}

/// Evaluate the score at every configuration point inside `scoring_window`,
/// using the full sampled configuration.
///
/// The scoring window must be concentric with and contained in the sampled
/// window; the margin is half their side difference. Per-point evaluation
/// errors become flags, not failures.
pub fn score_all(
    spec: &ScoreSpec,
    config: PointConfig,
    scoring_window: &BoxWindow,
) -> Result<ScoredConfig> {
    if scoring_window.dim != config.dim() {
        return Err(Error::Parameter(
            "scoring window dimension mismatch".into(),
        ));
    }
    if scoring_window.center != config.window().center {
        return Err(Error::Parameter(
            "scoring window must be concentric with the sampled window".into(),
        ));
    }
    if !config.window().contains_window(scoring_window) {
        return Err(Error::Parameter(
            "scoring window must lie inside the sampled window".into(),
        ));
    }
    let margin = (config.window().side - scoring_window.side) / 2.0;
    let point_indices = config.indices_in(scoring_window);
    let evaluator = Evaluator::new(spec, &config)?;
    let results: Vec<(f64, bool)> = crate::parallel::map_items(&point_indices, |&i| {
        let value = evaluator.score(i);
        let guard = evaluator.guarantee_radius(i);
        match (value, guard) {
            (Ok(v), Ok(g)) => (v, g > margin),
            (Ok(v), Err(_)) => (v, true),
            (Err(_), _) => (0.0, true),
        }
    });
    let (scores, flags) = results.into_iter().unzip();
    Ok(ScoredConfig {
        config,
        scoring_window: scoring_window.clone(),
        point_indices,
        scores,
        flags,
    })
}

/// The empirical functional: sum of per-point scores divided by the scoring
/// window volume.
pub fn h_n(scored: &ScoredConfig) -> f64 {
    scored.scores.iter().sum::<f64>() / scored.scoring_window.volume()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{sample_poisson, BoxWindow, Point, PointConfig, RngStream};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::str::FromStr;

    fn config_2d(pts: &[[f64; 2]], side: f64) -> PointConfig {
        let w = BoxWindow::centered(2, side).unwrap();
        PointConfig::new(
            pts.iter()
                .map(|p| Point::new(p.to_vec()).unwrap())
                .collect(),
            w,
        )
        .unwrap()
    }

    #[test]
    fn spec_string_round_trips() {
        for s in [
            "clique:k=2,t=1",
            "rgg:alpha=0,t=1",
            "rgg:alpha=2.5,t=0.75",
            "knn:k=2,alpha=1,mode=undirected",
            "knn:k=3,alpha=0.5,mode=bidirectional;cap=5",
            "rn:alpha=1",
            "voronoi:j=2",
            "rgg:alpha=0,t=3;range=3",
            "knn:k=1,alpha=0,mode=undirected;deltam=0.01,2",
        ] {
            let spec = ScoreSpec::from_str(s).unwrap();
            assert_eq!(spec.to_string(), s, "canonical form of `{s}`");
            let again = ScoreSpec::from_str(&spec.to_string()).unwrap();
            assert_eq!(spec, again);
        }
    }

    #[test]
    fn spec_string_rejects_garbage() {
        for s in [
            "nope:k=2",
            "clique:k=1,t=1",
            "clique:k=2,t=0",
            "rgg:alpha=-1,t=1",
            "rgg:alpha=0",
            "rgg:alpha=0,t=1,z=3",
            "knn:k=2,alpha=1,mode=sideways",
            "voronoi:j=3",
            "rgg:alpha=0,t=1;cap=0",
            "rgg:alpha=0,t=1;chop=2",
        ] {
            assert!(ScoreSpec::from_str(s).is_err(), "`{s}` should not parse");
        }
    }

    #[test]
    fn double_truncation_is_rejected() {
        let spec = ScoreSpec::rgg(0.0, 1.0).unwrap();
        let capped = spec.truncate(Truncation::Cap(5.0)).unwrap();
        assert!(capped.truncate(Truncation::Range(2.0)).is_err());
    }

    #[test]
    fn rgg_and_clique_examples() {
        let cfg = config_2d(&[[0.0, 0.0], [0.5, 0.0]], 4.0);
        let rgg2 = ScoreSpec::rgg(2.0, 1.0).unwrap();
        assert_eq!(evaluate_score(&rgg2, &cfg, 0).unwrap(), 0.125);
        let clique = ScoreSpec::clique(2, 1.0).unwrap();
        assert_eq!(evaluate_score(&clique, &cfg, 0).unwrap(), 0.5);
    }

    #[test]
    fn knn_power_example() {
        let cfg = config_2d(&[[0.0, 0.0], [1.0, 0.0], [3.0, 0.0]], 8.0);
        let spec = ScoreSpec::knn(1, 1.0, KnnMode::Undirected).unwrap();
        assert_eq!(evaluate_score(&spec, &cfg, 0).unwrap(), 0.5);
        // the long edge (1,0)-(3,0) is incident to both its endpoints
        assert_eq!(evaluate_score(&spec, &cfg, 1).unwrap(), 0.5 + 1.0);
        assert_eq!(evaluate_score(&spec, &cfg, 2).unwrap(), 1.0);
    }

    #[test]
    fn voronoi_example() {
        let cfg = config_2d(
            &[[0.0, 0.0], [2.0, 0.0], [-2.0, 0.0], [0.0, 2.0], [0.0, -2.0]],
            8.0,
        );
        let spec = ScoreSpec::voronoi(2).unwrap();
        assert_relative_eq!(
            evaluate_score(&spec, &cfg, 0).unwrap(),
            4.0,
            max_relative = 1e-12
        );
        let v0 = ScoreSpec::voronoi(0).unwrap();
        assert_eq!(evaluate_score(&v0, &cfg, 0).unwrap(), 1.0);
    }

    #[test]
    fn knn_insufficient_points_is_unstabilized() {
        let cfg = config_2d(&[[0.0, 0.0], [1.0, 0.0]], 4.0);
        let spec = ScoreSpec::knn(2, 0.0, KnnMode::Undirected).unwrap();
        assert!(matches!(
            evaluate_score(&spec, &cfg, 0),
            Err(Error::Unstabilized(_))
        ));
    }

    #[test]
    fn truncation_semantics() {
        let cfg = config_2d(&[[0.0, 0.0], [0.5, 0.0], [0.8, 0.1]], 4.0);
        let base = ScoreSpec::rgg(0.0, 1.0).unwrap();
        let v = evaluate_score(&base, &cfg, 0).unwrap();
        assert_eq!(v, 1.0); // two neighbors within 1

        // cap above the value leaves it unchanged
        let hi = base.truncate(Truncation::Cap(5.0)).unwrap();
        assert_eq!(evaluate_score(&hi, &cfg, 0).unwrap(), v);
        let lo = base.truncate(Truncation::Cap(0.25)).unwrap();
        assert_eq!(evaluate_score(&lo, &cfg, 0).unwrap(), 0.25);

        // deltam clamps at delta * M^d
        let dm = base
            .truncate(Truncation::DeltaM { delta: 0.01, m: 2.0 })
            .unwrap();
        assert_eq!(evaluate_score(&dm, &cfg, 0).unwrap(), 0.04);

        // range below t drops the far neighbor
        let rr = base.truncate(Truncation::Range(0.6)).unwrap();
        assert_eq!(evaluate_score(&rr, &cfg, 0).unwrap(), 0.5);
    }

    #[test]
    fn range_beyond_t_changes_nothing() {
        let base = ScoreSpec::rgg(1.0, 1.0).unwrap();
        let wide = base.truncate(Truncation::Range(1.5)).unwrap();
        for rep in 0..20u64 {
            let w = BoxWindow::centered(2, 6.0).unwrap();
            let cfg = sample_poisson(1.0, &w, RngStream::new(80).substream(rep)).unwrap();
            for i in 0..cfg.len() {
                let a = evaluate_score(&base, &cfg, i).unwrap();
                let b = evaluate_score(&wide, &cfg, i).unwrap();
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn score_all_two_point_example() {
        let cfg = config_2d(&[[0.0, 0.0], [0.5, 0.0]], 2.0);
        let spec = ScoreSpec::rgg(0.0, 1.0).unwrap();
        let scoring = BoxWindow::centered(2, 2.0).unwrap();
        let scored = score_all(&spec, cfg, &scoring).unwrap();
        assert_eq!(scored.scores, vec![0.5, 0.5]);
        assert_eq!(h_n(&scored), 0.25);
        // margin 0 < t: both points flagged as potentially window-dependent
        assert_eq!(scored.flagged_count(), 2);
    }

    #[test]
    fn score_all_empty_window() {
        let w = BoxWindow::centered(2, 6.0).unwrap();
        let cfg = PointConfig::new(
            vec![Point::new(vec![2.5, 2.5]).unwrap()],
            w,
        )
        .unwrap();
        let spec = ScoreSpec::rgg(0.0, 1.0).unwrap();
        let scoring = BoxWindow::centered(2, 2.0).unwrap();
        let scored = score_all(&spec, cfg, &scoring).unwrap();
        assert!(scored.scores.is_empty());
        assert_eq!(h_n(&scored), 0.0);
    }

    #[test]
    fn score_all_flags_clear_with_margin() {
        let w = BoxWindow::centered(2, 8.0).unwrap();
        let cfg = sample_poisson(1.0, &w, RngStream::new(81)).unwrap();
        let spec = ScoreSpec::rgg(0.0, 1.0).unwrap();
        let scoring = BoxWindow::centered(2, 4.0).unwrap();
        let scored = score_all(&spec, cfg, &scoring).unwrap();
        assert_eq!(scored.flagged_count(), 0); // margin 2 > t = 1
    }

    #[test]
    fn h_n_mean_matches_edge_intensity() {
        // per-volume mean of H_n for alpha = 0 edges equals lambda^2 pi t^2 / 2
        let spec = ScoreSpec::rgg(0.0, 1.0).unwrap();
        let scoring = BoxWindow::centered(2, 10.0).unwrap();
        let sampling = BoxWindow::centered(2, 16.0).unwrap();
        let trials = 800u64;
        let sum: f64 = crate::parallel::map_trials(trials, |i| {
            let cfg = sample_poisson(1.0, &sampling, RngStream::new(82).substream(i)).unwrap();
            h_n(&score_all(&spec, cfg, &scoring).unwrap())
        })
        .iter()
        .sum();
        let mean = sum / trials as f64;
        let expect = std::f64::consts::PI / 2.0;
        assert_relative_eq!(mean, expect, max_relative = 0.03);
    }

    // direct-from-definition oracle for the graph-based scores
    fn score_oracle(spec: &ScoreSpec, cfg: &PointConfig, center: usize) -> f64 {
        let n = cfg.len();
        let d = |i: usize, j: usize| dist(cfg.point(i), cfg.point(j));
        match *spec.kind() {
            ScoreKind::PowerEdgeRgg { alpha, t } => {
                0.5 * (0..n)
                    .filter(|&j| j != center && d(center, j) < t)
                    .map(|j| d(center, j).powf(alpha))
                    .sum::<f64>()
            }
            ScoreKind::KnnPower { k, alpha, mode } => {
                let radius = |i: usize| {
                    let mut ds: Vec<f64> =
                        (0..n).filter(|&j| j != i).map(|j| d(i, j)).collect();
                    ds.sort_by(f64::total_cmp);
                    ds[k - 1]
                };
                0.5 * (0..n)
                    .filter(|&j| j != center)
                    .filter(|&j| {
                        let bound = match mode {
                            KnnMode::Undirected => radius(center).max(radius(j)),
                            KnnMode::Bidirectional => radius(center).min(radius(j)),
                        };
                        d(center, j) <= bound
                    })
                    .map(|j| d(center, j).powf(alpha))
                    .sum::<f64>()
            }
            ScoreKind::RngPower { alpha } => {
                0.5 * (0..n)
                    .filter(|&j| j != center)
                    .filter(|&j| {
                        !(0..n).any(|z| {
                            z != center
                                && z != j
                                && d(z, center) < d(center, j)
                                && d(z, j) < d(center, j)
                        })
                    })
                    .map(|j| d(center, j).powf(alpha))
                    .sum::<f64>()
            }
            ScoreKind::CliqueCount { k, t } => {
                // enumerate all (k-1)-subsets of the other points
                fn subsets(
                    items: &[usize],
                    need: usize,
                    chosen: &mut Vec<usize>,
                    check: &dyn Fn(&[usize]) -> bool,
                    count: &mut usize,
                ) {
                    if chosen.len() == need {
                        if check(chosen) {
                            *count += 1;
                        }
                        return;
                    }
                    for (pos, &it) in items.iter().enumerate() {
                        chosen.push(it);
                        subsets(&items[pos + 1..], need, chosen, check, count);
                        chosen.pop();
                    }
                }
                let others: Vec<usize> = (0..n).filter(|&j| j != center).collect();
                let mut count = 0;
                subsets(
                    &others,
                    k - 1,
                    &mut Vec::new(),
                    &|chosen| {
                        let mut all = chosen.to_vec();
                        all.push(center);
                        all.iter().enumerate().all(|(a, &i)| {
                            all[a + 1..].iter().all(|&j| d(i, j) < t)
                        })
                    },
                    &mut count,
                );
                count as f64 / k as f64
            }
            ScoreKind::VoronoiIntrinsic { .. } => unreachable!("not covered by this oracle"),
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn scores_match_direct_definition(
            pts in proptest::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 4..9),
        ) {
            let pts: Vec<[f64; 2]> = pts.into_iter().map(|(x, y)| [x, y]).collect();
            let w = BoxWindow::centered(2, 6.0).unwrap();
            let Ok(cfg) = PointConfig::new(
                pts.iter().map(|p| Point::new(p.to_vec()).unwrap()).collect(),
                w,
            ) else { return Ok(()); };
            let specs = [
                ScoreSpec::rgg(0.0, 1.5).unwrap(),
                ScoreSpec::rgg(1.0, 2.0).unwrap(),
                ScoreSpec::clique(3, 2.0).unwrap(),
                ScoreSpec::knn(1, 0.0, KnnMode::Undirected).unwrap(),
                ScoreSpec::knn(2, 1.0, KnnMode::Bidirectional).unwrap(),
                ScoreSpec::rn(1.0).unwrap(),
            ];
            for spec in &specs {
                for center in 0..cfg.len() {
                    let got = evaluate_score(spec, &cfg, center).unwrap();
                    let want = score_oracle(spec, &cfg, center);
                    prop_assert!(
                        (got - want).abs() <= 1e-12 * want.abs().max(1.0),
                        "{spec} at {center}: got {got}, oracle {want}"
                    );
                    prop_assert!(got >= 0.0);
                }
            }
        }

        #[test]
        fn increasing_family_is_monotone(
            pts in proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 3..8),
            extra in (-2.0f64..2.0, -2.0f64..2.0),
        ) {
            let mut pts: Vec<[f64; 2]> = pts.into_iter().map(|(x, y)| [x, y]).collect();
            let w = BoxWindow::centered(2, 6.0).unwrap();
            let Ok(cfg) = PointConfig::new(
                pts.iter().map(|p| Point::new(p.to_vec()).unwrap()).collect(),
                w.clone(),
            ) else { return Ok(()); };
            pts.push([extra.0, extra.1]);
            let Ok(bigger) = PointConfig::new(
                pts.iter().map(|p| Point::new(p.to_vec()).unwrap()).collect(),
                w,
            ) else { return Ok(()); };
            for spec in [ScoreSpec::rgg(1.0, 1.5).unwrap(), ScoreSpec::clique(2, 1.5).unwrap()] {
                for center in 0..cfg.len() {
                    let small = evaluate_score(&spec, &cfg, center).unwrap();
                    let big = evaluate_score(&spec, &bigger, center).unwrap();
                    prop_assert!(big >= small);
                }
            }
        }

        #[test]
        fn truncation_ordering(
            pts in proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 3..8),
            m1 in 0.1f64..2.0,
            m2 in 0.1f64..2.0,
        ) {
            let pts: Vec<[f64; 2]> = pts.into_iter().map(|(x, y)| [x, y]).collect();
            let w = BoxWindow::centered(2, 6.0).unwrap();
            let Ok(cfg) = PointConfig::new(
                pts.iter().map(|p| Point::new(p.to_vec()).unwrap()).collect(),
                w,
            ) else { return Ok(()); };
            let base = ScoreSpec::rgg(0.0, 1.5).unwrap();
            let (lo, hi) = if m1 <= m2 { (m1, m2) } else { (m2, m1) };
            let cap_lo = base.truncate(Truncation::Cap(lo)).unwrap();
            let cap_hi = base.truncate(Truncation::Cap(hi)).unwrap();
            let rng_lo = base.truncate(Truncation::Range(lo)).unwrap();
            let rng_hi = base.truncate(Truncation::Range(hi)).unwrap();
            for center in 0..cfg.len() {
                let full = evaluate_score(&base, &cfg, center).unwrap();
                let a = evaluate_score(&cap_lo, &cfg, center).unwrap();
                let b = evaluate_score(&cap_hi, &cfg, center).unwrap();
                prop_assert!(a <= b && b <= full);
                // xi^r increasing in r for an increasing score
                let ra = evaluate_score(&rng_lo, &cfg, center).unwrap();
                let rb = evaluate_score(&rng_hi, &cfg, center).unwrap();
                prop_assert!(ra <= rb && rb <= full);
            }
        }
    }

    #[test]
    fn sparse_input_bounds() {
        // with fewer than b recentred points in range: clique <= b^(k-1)/k,
        // rgg <= t^alpha b / 2
        let w = BoxWindow::centered(2, 4.0).unwrap();
        for rep in 0..30u64 {
            let cfg = sample_poisson(0.8, &w, RngStream::new(83).substream(rep)).unwrap();
            if cfg.is_empty() {
                continue;
            }
            let b = cfg.len() as f64;
            let clique = ScoreSpec::clique(3, 1.0).unwrap();
            let rgg = ScoreSpec::rgg(1.5, 1.0).unwrap();
            for i in 0..cfg.len() {
                let c = evaluate_score(&clique, &cfg, i).unwrap();
                assert!(c <= b.powi(2) / 3.0 + 1e-12);
                let e = evaluate_score(&rgg, &cfg, i).unwrap();
                assert!(e <= 1.0f64.powf(1.5) * b / 2.0 + 1e-12);
            }
        }
    }

    #[test]
    fn voronoi_r_bound() {
        // v_j(cell) <= R^j v_j(B_1) with v_1(B_1) = v_2(B_1) = pi in d = 2
        let w = BoxWindow::centered(2, 12.0).unwrap();
        let cover = cone_cover_2d();
        let v1 = ScoreSpec::voronoi(1).unwrap();
        let v2 = ScoreSpec::voronoi(2).unwrap();
        for rep in 0..30u64 {
            let cfg = sample_poisson(1.0, &w, RngStream::new(84).substream(rep)).unwrap();
            if cfg.len() < 20 {
                continue;
            }
            for i in cfg.indices_in(&BoxWindow::centered(2, 4.0).unwrap()) {
                let r = stab_radius_voronoi(&cfg, i, &cover).unwrap();
                if !r.is_finite() {
                    continue;
                }
                let pi = std::f64::consts::PI;
                let a = evaluate_score(&v1, &cfg, i).unwrap();
                assert!(a <= r * pi + 1e-9, "v1 {a} > pi R {r}");
                let b = evaluate_score(&v2, &cfg, i).unwrap();
                assert!(b <= r * r * pi + 1e-9, "v2 {b} > pi R^2");
            }
        }
    }
}
