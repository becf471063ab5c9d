//! Small statistical helpers: chi-square goodness of fit against a Poisson
//! law, Wilson intervals, and a two-sample Kolmogorov-Smirnov distance.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// Outcome of a chi-square goodness-of-fit test.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ChiSquareOutcome {
    pub statistic: f64,
    pub dof: usize,
    pub threshold: f64,
    pub pass: bool,
}

/// Chi-square goodness-of-fit of observed counts against Poisson(`mean`).
///
/// Integer outcomes are binned so that every bin has expected mass >= 5
/// (tails merged). Passes when the statistic stays below the upper
/// `1 - significance` quantile of the chi-square law.
pub fn poisson_counts_chi_square(
    counts: &[u64],
    mean: f64,
    significance: f64,
) -> Result<ChiSquareOutcome> {
    if counts.is_empty() {
        return Err(Error::Parameter("no counts supplied".into()));
    }
    if !(mean > 0.0) || !(0.0..1.0).contains(&significance) {
        return Err(Error::Parameter("bad chi-square parameters".into()));
    }
    let n = counts.len() as f64;
    let max_count = *counts.iter().max().unwrap() as usize;

    // Poisson pmf by the forward recurrence p_{k+1} = p_k * mean / (k+1).
    let upper = max_count.max((mean + 10.0 * mean.sqrt()).ceil() as usize) + 1;
    let mut pmf = Vec::with_capacity(upper + 1);
    let mut p = (-mean).exp();
    pmf.push(p);
    for k in 0..upper {
        p *= mean / (k as f64 + 1.0);
        pmf.push(p);
    }

    // Greedy binning left to right; merge until expected mass >= 5/n.
    let min_mass = 5.0 / n;
    let mut bins: Vec<(usize, usize, f64)> = Vec::new(); // [lo, hi], mass
    let mut lo = 0usize;
    let mut mass = 0.0;
    for k in 0..=upper {
        mass += pmf[k];
        let remaining: f64 = 1.0 - pmf[..=k].iter().sum::<f64>();
        if mass >= min_mass && remaining >= min_mass {
            bins.push((lo, k, mass));
            lo = k + 1;
            mass = 0.0;
        }
    }
    // final open-ended bin soaks up the upper tail
    let closed: f64 = bins.iter().map(|b| b.2).sum();
    bins.push((lo, usize::MAX, 1.0 - closed));

    if bins.len() < 3 {
        return Err(Error::Parameter(
            "too few chi-square bins; increase the sample".into(),
        ));
    }

    let mut observed = vec![0u64; bins.len()];
    'outer: for &c in counts {
        let c = c as usize;
        for (i, &(l, h, _)) in bins.iter().enumerate() {
            if c >= l && c <= h {
                observed[i] += 1;
                continue 'outer;
            }
        }
    }

    let statistic: f64 = bins
        .iter()
        .zip(&observed)
        .map(|(&(_, _, mass), &obs)| {
            let expect = mass * n;
            (obs as f64 - expect).powi(2) / expect
        })
        .sum();
    let dof = bins.len() - 1;
    let dist = ChiSquared::new(dof as f64)
        .map_err(|e| Error::Parameter(format!("chi-square dof {dof}: {e}")))?;
    let threshold = dist.inverse_cdf(1.0 - significance);
    Ok(ChiSquareOutcome {
        statistic,
        dof,
        threshold,
        pass: statistic <= threshold,
    })
}

/// 95% Wilson score interval for a binomial proportion.
pub fn wilson_interval_95(hits: u64, trials: u64) -> (f64, f64) {
    wilson_interval(hits, trials, 1.959_963_984_540_054)
}

/// Wilson score interval at critical value `z`.
pub fn wilson_interval(hits: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = hits as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if hits == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if hits == trials {
        1.0
    } else {
        (center + half).min(1.0)
    };
    (lo, hi)
}

/// Sample mean and standard error of the mean.
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Two-sample Kolmogorov-Smirnov distance sup |F_a - F_b|.
pub fn ks_two_sample_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut a: Vec<f64> = a.to_vec();
    let mut b: Vec<f64> = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let mut d: f64 = 0.0;
    let (mut i, mut j) = (0usize, 0usize);
    while i < a.len() && j < b.len() {
        let t = a[i].min(b[j]);
        while i < a.len() && a[i] <= t {
            i += 1;
        }
        while j < b.len() && b[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic two-sample KS critical distance at the given significance.
pub fn ks_two_sample_critical(n_a: usize, n_b: usize, significance: f64) -> f64 {
    let c = (-(significance / 2.0).ln() / 2.0).sqrt();
    c * ((n_a + n_b) as f64 / (n_a as f64 * n_b as f64)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{sample_poisson, BoxWindow, RngStream};

    #[test]
    fn chi_square_accepts_true_poisson() {
        let w = BoxWindow::centered(2, 10.0).unwrap();
        let counts: Vec<u64> = (0..4000u64)
            .map(|i| {
                sample_poisson(1.0, &w, RngStream::new(21).substream(i))
                    .unwrap()
                    .len() as u64
            })
            .collect();
        let out = poisson_counts_chi_square(&counts, 100.0, 1e-3).unwrap();
        assert!(out.pass, "statistic {} > {}", out.statistic, out.threshold);
    }

    #[test]
    fn chi_square_rejects_wrong_mean() {
        let w = BoxWindow::centered(2, 10.0).unwrap();
        let counts: Vec<u64> = (0..4000u64)
            .map(|i| {
                sample_poisson(1.0, &w, RngStream::new(22).substream(i))
                    .unwrap()
                    .len() as u64
            })
            .collect();
        let out = poisson_counts_chi_square(&counts, 90.0, 1e-3).unwrap();
        assert!(!out.pass);
    }

    #[test]
    fn wilson_interval_basics() {
        let (lo, hi) = wilson_interval_95(50, 100);
        assert!(lo < 0.5 && 0.5 < hi);
        assert!(lo > 0.39 && hi < 0.61);
        let (lo, hi) = wilson_interval_95(0, 100);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0);
    }

    #[test]
    fn ks_distance_identical_samples_is_zero() {
        let a = [1.0, 2.0, 3.0];
        assert_eq!(ks_two_sample_distance(&a, &a), 0.0);
    }

    #[test]
    fn ks_distance_disjoint_samples_is_one() {
        let a = [1.0, 2.0];
        let b = [5.0, 6.0];
        assert_eq!(ks_two_sample_distance(&a, &b), 1.0);
    }
}
