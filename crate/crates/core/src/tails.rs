//! Monte Carlo estimation of lower-tail probabilities `P(H_n < a)`,
//! empirical rate curves in `n`, and rejection sampling of conditioned
//! realizations.
//!
//! Estimation is plain rejection-free Monte Carlo: couplings are proof
//! devices here, not estimators, so hit counting stays unbiased and the
//! feasibility gates stay honest. Every trial draws from its own substream,
//! making estimates independent of the worker count.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{sample_poisson, BoxWindow, PointConfig, RngStream};
use crate::scores::{h_n, score_all, ScoreSpec};
use crate::stats::wilson_interval_95;

/// A lower-tail estimate with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub spec: String,
    pub n: f64,
    pub dim: usize,
    pub a: f64,
    pub margin: f64,
    pub strict: bool,
    pub trials: u64,
    pub hits: u64,
    pub p_hat: f64,
    pub ci95: (f64, f64),
    /// `-log(p_hat) / n^d`; absent when no hits were seen
    pub empirical_rate: Option<f64>,
    pub seed: RngStream,
    pub flagged_fraction: f64,
    /// false when more than 0.1% of scored points were flagged
    pub reliable: bool,
}

/// One sampled value of `H_n` together with its flag counts.
fn h_trial(
    spec: &ScoreSpec,
    sampling: &BoxWindow,
    scoring: &BoxWindow,
    rng: RngStream,
) -> Result<(f64, usize, usize)> {
    let cfg = sample_poisson(1.0, sampling, rng)?;
    let scored = score_all(spec, cfg, scoring)?;
    Ok((h_n(&scored), scored.flagged_count(), scored.scores.len()))
}

fn windows(n: f64, dim: usize, margin: f64) -> Result<(BoxWindow, BoxWindow)> {
    if !(n > 0.0) {
        return Err(Error::Parameter(format!("window side must be positive, got {n}")));
    }
    if margin < 0.0 {
        return Err(Error::Parameter("margin must be nonnegative".into()));
    }
    Ok((
        BoxWindow::centered(dim, n + 2.0 * margin)?,
        BoxWindow::centered(dim, n)?,
    ))
}

/// Estimate `P(H_n < a)` (strict) or `P(H_n <= a)` by independent sampling.
pub fn estimate_tail(
    spec: &ScoreSpec,
    n: f64,
    dim: usize,
    a: f64,
    margin: f64,
    trials: u64,
    rng: RngStream,
    strict: bool,
) -> Result<TailEstimate> {
    if trials == 0 {
        return Err(Error::Parameter("at least one trial is required".into()));
    }
    if a < 0.0 {
        return Err(Error::Parameter("level a must be nonnegative".into()));
    }
    let (sampling, scoring) = windows(n, dim, margin)?;
    let outcomes: Vec<Result<(bool, usize, usize)>> = crate::parallel::map_trials(trials, |i| {
        let (h, flagged, scored) = h_trial(spec, &sampling, &scoring, rng.substream(i))?;
        let hit = if strict { h < a } else { h <= a };
        Ok((hit, flagged, scored))
    });
    let mut hits = 0u64;
    let mut flagged = 0usize;
    let mut scored_points = 0usize;
    for o in outcomes {
        let (hit, f, s) = o?;
        hits += hit as u64;
        flagged += f;
        scored_points += s;
    }
    let p_hat = hits as f64 / trials as f64;
    let flagged_fraction = if scored_points == 0 {
        0.0
    } else {
        flagged as f64 / scored_points as f64
    };
    Ok(TailEstimate {
        spec: spec.to_string(),
        n,
        dim,
        a,
        margin,
        strict,
        trials,
        hits,
        p_hat,
        ci95: wilson_interval_95(hits, trials),
        empirical_rate: (hits > 0).then(|| -(p_hat.ln()) / n.powi(dim as i32) + 0.0),
        seed: rng,
        flagged_fraction,
        reliable: flagged_fraction <= 1e-3,
    })
}

/// Raw `H_n` samples (used by distribution-level checks and render pilots).
pub fn sample_h_values(
    spec: &ScoreSpec,
    n: f64,
    dim: usize,
    margin: f64,
    trials: u64,
    rng: RngStream,
) -> Result<Vec<f64>> {
    let (sampling, scoring) = windows(n, dim, margin)?;
    crate::parallel::map_trials(trials, |i| {
        h_trial(spec, &sampling, &scoring, rng.substream(i)).map(|(h, _, _)| h)
    })
    .into_iter()
    .collect()
}

/// Number of pilot trials used to gate a full run.
fn pilot_size(trials: u64) -> u64 {
    (trials / 100).clamp(200, trials.max(1))
}

/// Tail estimates along a list of window sides.
///
/// A pilot run (1% of the trial budget, at least 200 trials) gates each `n`:
/// if the projected hit count over the full budget falls below 10 the sweep
/// refuses, reporting the projection.
pub fn rate_curve(
    spec: &ScoreSpec,
    a: f64,
    n_list: &[f64],
    dim: usize,
    margin: f64,
    trials: u64,
    rng: RngStream,
) -> Result<Vec<TailEstimate>> {
    if n_list.is_empty() {
        return Err(Error::Parameter("empty n list".into()));
    }
    let pilot = pilot_size(trials);
    for (idx, &n) in n_list.iter().enumerate() {
        let est = estimate_tail(
            spec,
            n,
            dim,
            a,
            margin,
            pilot,
            rng.substream(1_000 + idx as u64),
            true,
        )?;
        let projected = est.p_hat * trials as f64;
        if projected < 10.0 {
            return Err(Error::PilotInfeasible {
                n,
                projected,
                required: 10.0,
            });
        }
    }
    n_list
        .iter()
        .enumerate()
        .map(|(idx, &n)| {
            estimate_tail(spec, n, dim, a, margin, trials, rng.substream(idx as u64), true)
        })
        .collect()
}

/// A realization conditioned on `H_n < a`, found by rejection sampling.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionedSample {
    pub config: PointConfig,
    pub h_value: f64,
    pub attempts: u64,
}

/// Rejection-sample a configuration with `H_n < a`. Fails with a rare-event
/// exhaustion error carrying the best (lowest-H) configuration seen.
pub fn conditional_sample(
    spec: &ScoreSpec,
    n: f64,
    dim: usize,
    a: f64,
    margin: f64,
    max_attempts: u64,
    rng: RngStream,
) -> Result<ConditionedSample> {
    if max_attempts == 0 {
        return Err(Error::Parameter("at least one attempt is required".into()));
    }
    let (sampling, scoring) = windows(n, dim, margin)?;
    let mut best: Option<(f64, PointConfig)> = None;
    for attempt in 1..=max_attempts {
        let cfg = sample_poisson(1.0, &sampling, rng.substream(attempt))?;
        let scored = score_all(spec, cfg, &scoring)?;
        let h = h_n(&scored);
        if h < a {
            return Ok(ConditionedSample {
                config: scored.config,
                h_value: h,
                attempts: attempt,
            });
        }
        if best.as_ref().map_or(true, |(bh, _)| h < *bh) {
            best = Some((h, scored.config));
        }
    }
    let (best_h, best_cfg) = best.expect("max_attempts >= 1");
    Err(Error::Exhausted {
        attempts: max_attempts,
        best_h,
        best: Box::new(best_cfg),
    })
}
