//! Small statistical helpers for Monte Carlo checks.

use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Standard score of `hits` successes out of `n` against probability `p`.
pub fn binomial_z(hits: usize, n: usize, p: f64) -> f64 {
    let n = n as f64;
    let sd = (n * p * (1.0 - p)).sqrt();
    if sd == 0.0 {
        return if (hits as f64 - n * p).abs() < 0.5 { 0.0 } else { f64::INFINITY };
    }
    (hits as f64 - n * p) / sd
}

/// Standard score of a sample mean against `mu`, using the sample variance.
pub fn mean_z(xs: &[f64], mu: f64) -> f64 {
    let (m, v) = mean_var(xs);
    let se = (v / xs.len() as f64).sqrt();
    if se == 0.0 {
        return if (m - mu).abs() < 1e-12 { 0.0 } else { f64::INFINITY };
    }
    (m - mu) / se
}

pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0).max(1.0);
    (m, v)
}

/// Two-sample test for equal proportions.
pub fn two_proportion_z(h1: usize, n1: usize, h2: usize, n2: usize) -> f64 {
    let p1 = h1 as f64 / n1 as f64;
    let p2 = h2 as f64 / n2 as f64;
    let p = (h1 + h2) as f64 / (n1 + n2) as f64;
    let se = (p * (1.0 - p) * (1.0 / n1 as f64 + 1.0 / n2 as f64)).sqrt();
    if se == 0.0 {
        return 0.0;
    }
    (p1 - p2) / se
}

/// Wilson score interval at `z` standard deviations.
pub fn wilson(hits: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = hits as f64 / n;
    let d = 1.0 + z * z / n;
    let c = (p + z * z / (2.0 * n)) / d;
    let h = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / d;
    ((c - h).max(0.0), (c + h).min(1.0))
}

#[derive(Debug, Clone, Copy)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Goodness of fit of `counts` to `probs` (which may omit a remainder).
/// Bins with expected count below 5 are pooled, and the remainder
/// `1 - sum probs` gets its own bin when positive.
pub fn chi_square_gof(counts: &[usize], probs: &[f64]) -> ChiSquareResult {
    assert_eq!(counts.len(), probs.len());
    let n: usize = counts.iter().sum();
    let nf = n as f64;
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut po, mut pe) = (0.0, 0.0);
    for (&c, &p) in counts.iter().zip(probs) {
        po += c as f64;
        pe += p * nf;
        if pe >= 5.0 {
            bins.push((po, pe));
            po = 0.0;
            pe = 0.0;
        }
    }
    let rest = (1.0 - probs.iter().sum::<f64>()).max(0.0) * nf;
    pe += rest;
    if pe > 0.0 || po > 0.0 {
        if pe >= 5.0 || bins.is_empty() {
            bins.push((po, pe));
        } else {
            let last = bins.last_mut().unwrap();
            last.0 += po;
            last.1 += pe;
        }
    }
    let stat: f64 = bins.iter().filter(|b| b.1 > 0.0).map(|(o, e)| (o - e) * (o - e) / e).sum();
    let dof = bins.len().saturating_sub(1).max(1);
    let p_value = 1.0 - ChiSquared::new(dof as f64).expect("dof > 0").cdf(stat);
    ChiSquareResult { statistic: stat, dof, p_value }
}

/// Chi-square test of independence for an `r x c` table.
pub fn chi_square_independence(table: &[Vec<usize>]) -> ChiSquareResult {
    let r = table.len();
    let c = table[0].len();
    let n: f64 = table.iter().flatten().map(|&v| v as f64).sum();
    let rows: Vec<f64> = table.iter().map(|row| row.iter().map(|&v| v as f64).sum()).collect();
    let cols: Vec<f64> = (0..c).map(|j| table.iter().map(|row| row[j] as f64).sum()).collect();
    let mut stat = 0.0;
    for i in 0..r {
        for j in 0..c {
            let e = rows[i] * cols[j] / n;
            if e > 0.0 {
                let o = table[i][j] as f64;
                stat += (o - e) * (o - e) / e;
            }
        }
    }
    let dof = ((r - 1) * (c - 1)).max(1);
    let p_value = 1.0 - ChiSquared::new(dof as f64).expect("dof > 0").cdf(stat);
    ChiSquareResult { statistic: stat, dof, p_value }
}

/// Kolmogorov-Smirnov distance between the sample and a continuous CDF.
pub fn ks_statistic(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    d
}

/// Asymptotic p-value of the Kolmogorov distribution for `sqrt(n) D`.
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    let t = (n as f64).sqrt() * d;
    if t < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..200 {
        let k = k as f64;
        let term = (-2.0 * k * k * t * t).exp();
        s += if k as i64 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

pub fn gumbel_cdf(x: f64) -> f64 {
    (-(-x).exp()).exp()
}

/// Percentile interval of `stat` over `resamples` bootstrap draws.
pub fn bootstrap_interval<R: Rng + ?Sized>(
    sample: &[f64],
    stat: impl Fn(&[f64]) -> f64,
    resamples: usize,
    level: f64,
    rng: &mut R,
) -> (f64, f64) {
    let n = sample.len();
    let mut vals = Vec::with_capacity(resamples);
    let mut buf = vec![0.0; n];
    for _ in 0..resamples {
        for b in buf.iter_mut() {
            *b = sample[rng.gen_range(0..n)];
        }
        vals.push(stat(&buf));
    }
    vals.sort_by(f64::total_cmp);
    let lo = ((1.0 - level) / 2.0 * resamples as f64).floor() as usize;
    let hi = (((1.0 + level) / 2.0) * resamples as f64).ceil() as usize;
    (vals[lo.min(resamples - 1)], vals[hi.min(resamples - 1)])
}

/// Poisson probability mass.
pub fn poisson_pmf(lambda: f64, k: usize) -> f64 {
    let lg = statrs::function::gamma::ln_gamma(k as f64 + 1.0);
    (k as f64 * lambda.ln() - lambda - lg).exp()
}
