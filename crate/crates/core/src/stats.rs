//! Two-sample test statistics used by the experiment harness.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("samples must be nonempty")]
    EmptyInput,
    #[error("input contains non-finite values")]
    NonFinite,
}

/// Kolmogorov-Smirnov two-sample statistic D = sup |F_a - F_b| together with
/// the asymptotic p-value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n_a: usize,
    pub n_b: usize,
}

/// Two-sample Kolmogorov-Smirnov test. Ties are handled by advancing both
/// empirical CDFs through equal values before comparing.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult, StatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    if a.iter().chain(b.iter()).any(|x| !x.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(|p, q| p.partial_cmp(q).unwrap());
    ys.sort_by(|p, q| p.partial_cmp(q).unwrap());

    let (na, nb) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < xs.len() && j < ys.len() {
        let v = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= v {
            i += 1;
        }
        while j < ys.len() && ys[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    // one sample exhausted: remaining gap is monotone, final value suffices
    d = d.max((1.0 - j as f64 / nb).abs().max((i as f64 / na - 1.0).abs()));

    let n_eff = na * nb / (na + nb);
    let lambda = (n_eff.sqrt() + 0.12 + 0.11 / n_eff.sqrt()) * d;
    Ok(KsResult {
        statistic: d,
        p_value: ks_survival(lambda),
        n_a: xs.len(),
        n_b: ys.len(),
    })
}

/// One-sample Kolmogorov-Smirnov statistic against a continuous CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(a: &[f64], cdf: F) -> Result<KsResult, StatsError> {
    if a.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    let mut xs = a.to_vec();
    xs.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let n = xs.len() as f64;
    let mut d = 0.0f64;
    for (k, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - k as f64 / n).abs());
        d = d.max(((k + 1) as f64 / n - f).abs());
    }
    let lambda = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d;
    Ok(KsResult { statistic: d, p_value: ks_survival(lambda), n_a: xs.len(), n_b: 0 })
}

/// Kolmogorov distribution survival function
/// Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2).
fn ks_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = sign * (-2.0 * (k as f64) * (k as f64) * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Pearson chi-square on a 2x2 contingency table (1 degree of freedom),
/// comparing a binary indicator between two ensembles. Returns
/// (statistic, p_value).
pub fn chi_square_2x2(hits_a: usize, n_a: usize, hits_b: usize, n_b: usize) -> (f64, f64) {
    let (a1, a0) = (hits_a as f64, (n_a - hits_a) as f64);
    let (b1, b0) = (hits_b as f64, (n_b - hits_b) as f64);
    let n = a1 + a0 + b1 + b0;
    let row1 = a1 + b1;
    let row0 = a0 + b0;
    let col_a = a1 + a0;
    let col_b = b1 + b0;
    if row1 == 0.0 || row0 == 0.0 || col_a == 0.0 || col_b == 0.0 {
        return (0.0, 1.0);
    }
    let exp = |r: f64, c: f64| r * c / n;
    let cells = [
        (a1, exp(row1, col_a)),
        (b1, exp(row1, col_b)),
        (a0, exp(row0, col_a)),
        (b0, exp(row0, col_b)),
    ];
    let stat: f64 = cells.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    (stat, chi_square_survival_1df(stat))
}

/// Survival function of the chi-square distribution with 1 df:
/// P(X > x) = erfc(sqrt(x/2)).
fn chi_square_survival_1df(x: f64) -> f64 {
    statrs::function::erf::erfc((x / 2.0).sqrt())
}

/// Standard normal CDF.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn identical_samples_give_p_one() {
        let a = vec![0.3, 1.2, -0.5, 2.2, 0.0];
        let r = ks_two_sample(&a, &a).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn disjoint_supports_give_tiny_p() {
        let a: Vec<f64> = (0..100).map(|i| i as f64 / 100.0).collect();
        let b: Vec<f64> = (0..100).map(|i| 2.0 + i as f64 / 100.0).collect();
        let r = ks_two_sample(&a, &b).unwrap();
        assert_eq!(r.statistic, 1.0);
        assert!(r.p_value < 1e-10);
    }

    #[test]
    fn empty_input_rejected() {
        assert_eq!(ks_two_sample(&[], &[1.0]), Err(StatsError::EmptyInput));
    }

    #[test]
    fn null_distribution_calibration() {
        // two independent standard-normal samples, n=1000 each: the null
        // should survive at alpha = 0.01 in the vast majority of repetitions
        let mut rejects = 0;
        for rep in 0..100u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(0x5eed ^ rep);
            let a: Vec<f64> = (0..1000).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let b: Vec<f64> = (0..1000).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let r = ks_two_sample(&a, &b).unwrap();
            if r.p_value < 0.01 {
                rejects += 1;
            }
        }
        assert!(rejects <= 5, "expected <= 5 false rejections, got {rejects}");
    }

    #[test]
    fn detects_mean_shift() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a: Vec<f64> = (0..800).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let b: Vec<f64> =
            (0..800).map(|_| rng.sample::<f64, _>(StandardNormal) + 0.5).collect();
        let r = ks_two_sample(&a, &b).unwrap();
        assert!(r.p_value < 1e-6);
    }

    #[test]
    fn one_sample_against_normal() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a: Vec<f64> = (0..2000).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let r = ks_one_sample(&a, std_normal_cdf).unwrap();
        assert!(r.p_value > 0.01);
    }

    #[test]
    fn chi_square_balanced_table() {
        let (stat, p) = chi_square_2x2(50, 100, 50, 100);
        assert!(stat.abs() < 1e-12);
        assert!((p - 1.0).abs() < 1e-12);
        let (stat, p) = chi_square_2x2(90, 100, 10, 100);
        assert!(stat > 100.0);
        assert!(p < 1e-10);
    }
}
