//! Small statistical helpers shared by the experiments.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Upper-tail p-value of Pearson's chi-square test against equal expected
/// counts in every cell.
pub fn chi_square_uniform_p(counts: &[u64]) -> f64 {
    let k = counts.len();
    assert!(k >= 2, "need at least two cells");
    let total: u64 = counts.iter().sum();
    let expected = total as f64 / k as f64;
    let stat: f64 = counts
        .iter()
        .map(|&c| {
            let d = c as f64 - expected;
            d * d / expected
        })
        .sum();
    let dist = ChiSquared::new((k - 1) as f64).expect("valid degrees of freedom");
    1.0 - dist.cdf(stat)
}

/// `Pr[Bin(n, 1/2) <= k]`, computed exactly in f64 from the binomial row.
pub fn binomial_half_cdf(n: u32, k: u32) -> f64 {
    let mut row = vec![1.0f64];
    for _ in 0..n {
        let mut next = vec![0.0; row.len() + 1];
        for (i, v) in row.iter().enumerate() {
            next[i] += v / 2.0;
            next[i + 1] += v / 2.0;
        }
        row = next;
    }
    row.iter().take(k as usize + 1).sum()
}

/// Tail bound `exp(-t^2 / (2 (lambda + t/3)))` for a sum of independent
/// indicators with mean `lambda`, deviating by `t`.
pub fn chernoff_tail(lambda: f64, t: f64) -> f64 {
    (-(t * t) / (2.0 * (lambda + t / 3.0))).exp()
}

/// Number of samples so the empirical mean of `[0,1]` values lies within
/// `eps` of its expectation except with probability `2^-tail_log2`
/// (two-sided Hoeffding).
pub fn hoeffding_samples(eps: f64, tail_log2: u32) -> u64 {
    let ln_inv = f64::from(tail_log2) * std::f64::consts::LN_2 + std::f64::consts::LN_2;
    (ln_inv / (2.0 * eps * eps)).ceil() as u64
}

/// Mean and standard error of a Bernoulli sample.
pub fn mean_se(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 0.0);
    }
    let p = successes as f64 / trials as f64;
    (p, (p * (1.0 - p) / trials as f64).sqrt())
}

/// Wilson score interval at the given z.
pub fn wilson(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let denom = 1.0 + z * z / n;
    let center = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi_square_extremes() {
        assert!(chi_square_uniform_p(&[100, 100, 100, 100]) > 0.99);
        assert!(chi_square_uniform_p(&[400, 0, 0, 0]) < 1e-9);
    }

    #[test]
    fn binomial_rows() {
        assert!((binomial_half_cdf(4, 1) - 5.0 / 16.0).abs() < 1e-15);
        assert!((binomial_half_cdf(8, 2) - 37.0 / 256.0).abs() < 1e-15);
        assert!((binomial_half_cdf(3, 3) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn hoeffding_is_monotone() {
        assert!(hoeffding_samples(0.01, 20) > hoeffding_samples(0.02, 20));
        assert!(hoeffding_samples(0.01, 30) > hoeffding_samples(0.01, 20));
    }

    #[test]
    fn chernoff_decreases_in_t() {
        assert!(chernoff_tail(10.0, 5.0) > chernoff_tail(10.0, 10.0));
        assert!(chernoff_tail(10.0, 0.0) == 1.0);
    }

    #[test]
    fn wilson_contains_point() {
        let (lo, hi) = wilson(30, 100, 1.96);
        assert!(lo < 0.3 && 0.3 < hi);
    }
}
