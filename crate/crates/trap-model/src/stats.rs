//! Statistical primitives shared by every verification: empirical CDFs,
//! Kolmogorov-Smirnov distances, empirical Laplace/characteristic
//! transforms, and percentile-bootstrap confidence intervals.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::Stream;

/// A Monte Carlo scalar with its uncertainty.
#[derive(Debug, Clone, Serialize)]
pub struct StatsSummary {
    pub estimate: f64,
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub ci_level: f64,
    pub n_samples: usize,
    pub method: String,
}

impl StatsSummary {
    pub fn assert_invariants(&self) {
        assert!(self.std_error >= 0.0);
        assert!(
            self.ci_low <= self.estimate && self.estimate <= self.ci_high,
            "interval [{}, {}] must contain estimate {}",
            self.ci_low,
            self.ci_high,
            self.estimate
        );
    }

    /// Plain mean and standard error of a sample, with a normal interval.
    pub fn from_sample(sample: &[f64], level: f64, method: &str) -> Result<Self> {
        if sample.is_empty() {
            return Err(Error::EmptyInput("sample"));
        }
        let n = sample.len() as f64;
        let mean = sample.iter().sum::<f64>() / n;
        let var = if sample.len() > 1 {
            sample.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        let se = (var / n).sqrt();
        let z = normal_quantile(0.5 + level / 2.0);
        Ok(StatsSummary {
            estimate: mean,
            std_error: se,
            ci_low: mean - z * se,
            ci_high: mean + z * se,
            ci_level: level,
            n_samples: sample.len(),
            method: method.to_string(),
        })
    }

    /// Binomial proportion with its exact-variance normal interval.
    pub fn from_proportion(successes: usize, trials: usize, level: f64, method: &str) -> Result<Self> {
        if trials == 0 {
            return Err(Error::EmptyInput("trials"));
        }
        let p = successes as f64 / trials as f64;
        let se = (p * (1.0 - p) / trials as f64).sqrt();
        let z = normal_quantile(0.5 + level / 2.0);
        Ok(StatsSummary {
            estimate: p,
            std_error: se,
            ci_low: (p - z * se).max(0.0).min(p),
            ci_high: (p + z * se).min(1.0).max(p),
            ci_level: level,
            n_samples: trials,
            method: method.to_string(),
        })
    }
}

/// Reference distribution for the one-sample KS statistic.
pub enum Reference<'a> {
    Samples(&'a [f64]),
    Cdf(&'a dyn Fn(f64) -> f64),
}

/// Sup-distance between the ECDF of `sample` and a reference (ECDF or CDF).
pub fn ks_statistic(sample: &[f64], reference: Reference<'_>) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::EmptyInput("ks sample"));
    }
    let mut xs = sample.to_vec();
    sort_stable(&mut xs);
    match reference {
        Reference::Cdf(cdf) => {
            let n = xs.len() as f64;
            let mut sup = 0.0f64;
            for (i, &x) in xs.iter().enumerate() {
                let f = cdf(x);
                sup = sup.max((i as f64 / n - f).abs());
                sup = sup.max(((i + 1) as f64 / n - f).abs());
            }
            Ok(sup)
        }
        Reference::Samples(other) => {
            if other.is_empty() {
                return Err(Error::EmptyInput("ks reference sample"));
            }
            let mut ys = other.to_vec();
            sort_stable(&mut ys);
            Ok(two_sample_sup(&xs, &ys))
        }
    }
}

fn two_sample_sup(xs: &[f64], ys: &[f64]) -> f64 {
    let (mut i, mut j) = (0usize, 0usize);
    let (n, m) = (xs.len() as f64, ys.len() as f64);
    let mut sup = 0.0f64;
    while i < xs.len() && j < ys.len() {
        let t = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= t {
            i += 1;
        }
        while j < ys.len() && ys[j] <= t {
            j += 1;
        }
        sup = sup.max((i as f64 / n - j as f64 / m).abs());
    }
    sup
}

/// Stable total order on floats; ties keep input order so repeated runs of
/// the same data produce identical ECDFs bit for bit.
fn sort_stable(xs: &mut [f64]) {
    xs.sort_by(|a, b| a.total_cmp(b));
}

/// CDF of the Kolmogorov distribution, `P[sup |B(t)| <= x]` for the Brownian
/// bridge; used as the quantile oracle for uniformity checks.
pub fn kolmogorov_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let mut sum = 0.0f64;
    for k in 1..200 {
        let k = k as f64;
        let term = (-2.0 * k * k * x * x).exp();
        sum += if (k as i64) % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (1.0 - 2.0 * sum).clamp(0.0, 1.0)
}

/// Empirical Laplace transform `mean(exp(-lambda x))` with a bootstrap interval.
pub fn empirical_laplace(sample: &[f64], lambda: f64, stream: &mut Stream) -> Result<StatsSummary> {
    if lambda < 0.0 {
        return Err(Error::Parameter(format!("lambda must be >= 0, got {lambda}")));
    }
    if sample.is_empty() {
        return Err(Error::EmptyInput("laplace sample"));
    }
    let transformed: Vec<f64> = sample.iter().map(|x| (-lambda * x).exp()).collect();
    bootstrap_ci(&transformed, mean, 0.95, 200, stream).map(|mut s| {
        s.method = format!("empirical-laplace(lambda={lambda})");
        s
    })
}

/// Empirical characteristic function of a vector sample at frequency `xi`.
/// Every law in scope is symmetric, so the real part `mean(cos(xi . x))` is
/// the estimate; the imaginary part is exposed for sanity checks only.
pub fn empirical_charfn<const D: usize>(
    sample: &[[f64; D]],
    xi: &[f64; D],
    stream: &mut Stream,
) -> Result<(StatsSummary, f64)> {
    if sample.is_empty() {
        return Err(Error::EmptyInput("charfn sample"));
    }
    let dots: Vec<f64> = sample
        .iter()
        .map(|x| x.iter().zip(xi.iter()).map(|(a, b)| a * b).sum::<f64>())
        .collect();
    let real: Vec<f64> = dots.iter().map(|t| t.cos()).collect();
    let imag = dots.iter().map(|t| t.sin()).sum::<f64>() / dots.len() as f64;
    let mut summary = bootstrap_ci(&real, mean, 0.95, 200, stream)?;
    summary.method = "empirical-charfn(real)".to_string();
    Ok((summary, imag))
}

/// Percentile bootstrap for an arbitrary statistic. Deterministic for a
/// fixed stream.
pub fn bootstrap_ci(
    sample: &[f64],
    statistic: impl Fn(&[f64]) -> f64,
    level: f64,
    resamples: usize,
    stream: &mut Stream,
) -> Result<StatsSummary> {
    if sample.is_empty() {
        return Err(Error::EmptyInput("bootstrap sample"));
    }
    if resamples < 100 {
        return Err(Error::Parameter(format!(
            "need at least 100 resamples, got {resamples}"
        )));
    }
    let estimate = statistic(sample);
    let n = sample.len();
    let mut stats = Vec::with_capacity(resamples);
    let mut scratch = vec![0.0f64; n];
    for _ in 0..resamples {
        for slot in scratch.iter_mut() {
            *slot = sample[stream.next_below(n as u64) as usize];
        }
        stats.push(statistic(&scratch));
    }
    sort_stable(&mut stats);
    let tail = (1.0 - level) / 2.0;
    let lo_idx = ((resamples as f64) * tail).floor() as usize;
    let hi_idx = (((resamples as f64) * (1.0 - tail)).ceil() as usize).min(resamples - 1);
    let se = {
        let m = mean(&stats);
        (stats.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (resamples as f64 - 1.0)).sqrt()
    };
    Ok(StatsSummary {
        estimate,
        std_error: se,
        ci_low: stats[lo_idx].min(estimate),
        ci_high: stats[hi_idx].max(estimate),
        ci_level: level,
        n_samples: n,
        method: "percentile-bootstrap".to_string(),
    })
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Standard normal quantile (Acklam's rational approximation, |err| < 1.2e-8;
/// ample for confidence-interval construction).
pub fn normal_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0);
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383_577_518_672_69e2,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    let p_low = 0.02425;
    if p < p_low {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - p_low {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -normal_quantile(1.0 - p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;

    #[test]
    fn ks_identical_samples_is_zero() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys = [2.0, 1.0, 4.0, 3.0];
        assert_eq!(ks_statistic(&xs, Reference::Samples(&ys)).unwrap(), 0.0);
    }

    #[test]
    fn ks_disjoint_supports_is_one() {
        assert_eq!(
            ks_statistic(&[0.0], Reference::Samples(&[1.0])).unwrap(),
            1.0
        );
    }

    #[test]
    fn ks_hand_value() {
        // ECDFs of {1,1,4,4} and {1,1,1,4} differ by 1/4 at 1 <= t < 4.
        let d = ks_statistic(&[1.0, 1.0, 4.0, 4.0], Reference::Samples(&[1.0, 1.0, 1.0, 4.0]))
            .unwrap();
        assert!((d - 0.25).abs() < 1e-12);
    }

    #[test]
    fn ks_uniform_quantile_oracle() {
        // 10^5 uniforms against the uniform CDF stay below the 99% quantile
        // 1.63/sqrt(n) in at least 99% of seeds; over 40 seeds allow 1 miss.
        let n = 100_000;
        let bound = 1.63 / (n as f64).sqrt();
        let mut misses = 0;
        for seed in 0..40u64 {
            let mut s = Stream::new(seed, "ks-unif", 0);
            let xs: Vec<f64> = (0..n).map(|_| s.next_f64()).collect();
            let d = ks_statistic(&xs, Reference::Cdf(&|x| x.clamp(0.0, 1.0))).unwrap();
            if d >= bound {
                misses += 1;
            }
        }
        assert!(misses <= 1, "got {misses} misses out of 40 seeds");
    }

    #[test]
    fn kolmogorov_cdf_known_values() {
        // Median of the Kolmogorov distribution is about 0.82757.
        assert!((kolmogorov_cdf(0.8275735) - 0.5).abs() < 1e-4);
        // 99% quantile near 1.6276.
        assert!((kolmogorov_cdf(1.6276) - 0.99).abs() < 1e-4);
        assert_eq!(kolmogorov_cdf(0.0), 0.0);
    }

    #[test]
    fn laplace_of_constant_sample_is_exact() {
        let mut s = Stream::new(1, "t", 0);
        let out = empirical_laplace(&[2.0; 50], 0.7, &mut s).unwrap();
        assert!((out.estimate - (-1.4f64).exp()).abs() < 1e-15);
        assert_eq!(out.ci_low, out.ci_high);
        out.assert_invariants();
    }

    #[test]
    fn laplace_of_exponential_sample() {
        // E[e^{-x}] = 1/2 for mean-one exponentials.
        let mut s = Stream::new(2, "t", 0);
        let sample: Vec<f64> = (0..100_000).map(|_| s.next_exp()).collect();
        let mut bs = Stream::new(3, "t", 0);
        let out = empirical_laplace(&sample, 1.0, &mut bs).unwrap();
        let se = (sample
            .iter()
            .map(|x| ((-x).exp() - out.estimate).powi(2))
            .sum::<f64>()
            / (sample.len() as f64 - 1.0)
            / sample.len() as f64)
            .sqrt();
        assert!((out.estimate - 0.5).abs() < 4.0 * se);
    }

    #[test]
    fn laplace_monotone_in_lambda() {
        let mut s = Stream::new(4, "t", 0);
        let sample: Vec<f64> = (0..2000).map(|_| s.next_exp()).collect();
        let mut prev = f64::INFINITY;
        for lambda in [0.0, 0.5, 1.0, 2.0, 5.0] {
            let mut bs = Stream::new(5, "t", 0);
            let v = empirical_laplace(&sample, lambda, &mut bs).unwrap().estimate;
            assert!(v <= prev + 1e-15);
            prev = v;
        }
    }

    #[test]
    fn charfn_at_zero_is_one() {
        let sample = [[1.0, -2.0], [0.5, 3.0]];
        let mut s = Stream::new(6, "t", 0);
        let (summary, imag) = empirical_charfn(&sample, &[0.0, 0.0], &mut s).unwrap();
        assert_eq!(summary.estimate, 1.0);
        assert_eq!(imag, 0.0);
    }

    #[test]
    fn bootstrap_constant_sample_has_zero_width() {
        let mut s = Stream::new(7, "t", 0);
        let out = bootstrap_ci(&[3.5; 20], mean, 0.95, 200, &mut s).unwrap();
        assert_eq!(out.ci_low, 3.5);
        assert_eq!(out.ci_high, 3.5);
        assert_eq!(out.std_error, 0.0);
    }

    #[test]
    fn bootstrap_is_deterministic() {
        let mut s1 = Stream::new(8, "boot", 0);
        let mut s2 = Stream::new(8, "boot", 0);
        let sample: Vec<f64> = (0..500).map(|i| (i as f64).sin()).collect();
        let a = bootstrap_ci(&sample, mean, 0.95, 300, &mut s1).unwrap();
        let b = bootstrap_ci(&sample, mean, 0.95, 300, &mut s2).unwrap();
        assert_eq!(a.ci_low.to_bits(), b.ci_low.to_bits());
        assert_eq!(a.ci_high.to_bits(), b.ci_high.to_bits());
    }

    #[test]
    fn bootstrap_coverage_on_exponential_mean() {
        // Interval should contain the true mean 1.0 in at least 90% of seeds.
        let mut hits = 0;
        let seeds = 50u64;
        for seed in 0..seeds {
            let mut s = Stream::new(seed, "cover", 0);
            let sample: Vec<f64> = (0..10_000).map(|_| s.next_exp()).collect();
            let mut bs = Stream::new(seed, "cover-resample", 0);
            let out = bootstrap_ci(&sample, mean, 0.95, 200, &mut bs).unwrap();
            if out.ci_low <= 1.0 && 1.0 <= out.ci_high {
                hits += 1;
            }
        }
        assert!(hits * 10 >= seeds * 9, "coverage {hits}/{seeds}");
    }

    #[test]
    fn empty_inputs_are_rejected() {
        let mut s = Stream::new(9, "t", 0);
        assert!(ks_statistic(&[], Reference::Samples(&[1.0])).is_err());
        assert!(empirical_laplace(&[], 1.0, &mut s).is_err());
        assert!(bootstrap_ci(&[], mean, 0.95, 200, &mut s).is_err());
    }

    #[test]
    fn normal_quantile_is_sane() {
        assert!((normal_quantile(0.975) - 1.959964).abs() < 1e-5);
        assert!((normal_quantile(0.5)).abs() < 1e-8);
        assert!((normal_quantile(0.025) + 1.959964).abs() < 1e-5);
    }

    mod properties {
        use super::super::*;
        use proptest::prelude::*;

        fn sample_strategy() -> impl Strategy<Value = Vec<f64>> {
            proptest::collection::vec(-50.0f64..50.0, 1..40)
        }

        proptest! {
            // KS is a metric on ECDFs: bounded, symmetric, triangle
            // inequality on random triples.
            #[test]
            fn ks_is_a_metric(
                a in sample_strategy(),
                b in sample_strategy(),
                c in sample_strategy(),
            ) {
                let dab = ks_statistic(&a, Reference::Samples(&b)).unwrap();
                let dba = ks_statistic(&b, Reference::Samples(&a)).unwrap();
                let dac = ks_statistic(&a, Reference::Samples(&c)).unwrap();
                let dcb = ks_statistic(&c, Reference::Samples(&b)).unwrap();
                prop_assert!((0.0..=1.0).contains(&dab));
                prop_assert!((dab - dba).abs() < 1e-12);
                prop_assert!(dab <= dac + dcb + 1e-12);
            }

            // Every summary satisfies its ordering invariants.
            #[test]
            fn summaries_are_well_formed(sample in sample_strategy()) {
                let s = StatsSummary::from_sample(&sample, 0.95, "prop").unwrap();
                s.assert_invariants();
                let mut stream = Stream::new(7, "prop-boot", 0);
                let b = bootstrap_ci(&sample, mean, 0.9, 120, &mut stream).unwrap();
                b.assert_invariants();
            }
        }
    }
}
