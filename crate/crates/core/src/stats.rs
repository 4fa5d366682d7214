//! Small statistics helpers shared by the experiments.

use crate::error::{invalid, Result};

/// Running mean and variance.
#[derive(Clone, Copy, Debug, Default)]
pub struct Welford {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    /// Combines two accumulators as if their samples had been pushed in sequence.
    pub fn merge(&mut self, other: &Welford) {
        if other.n == 0 {
            return;
        }
        let (na, nb) = (self.n as f64, other.n as f64);
        let total = na + nb;
        let d = other.mean - self.mean;
        self.mean += d * nb / total;
        self.m2 += other.m2 + d * d * na * nb / total;
        self.n += other.n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    /// Standard error of the mean.
    pub fn stderr(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

impl FromIterator<f64> for Welford {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut w = Welford::default();
        for x in iter {
            w.push(x);
        }
        w
    }
}

fn sorted(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return invalid("empty sample");
    }
    if samples.iter().any(|x| x.is_nan()) {
        return invalid("sample contains NaN");
    }
    let mut s = samples.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    Ok(s)
}

/// `sup_x |F_n(x) - F(x)|` for a continuous reference CDF.
pub fn ks_one_sample(samples: &[f64], cdf: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    let s = sorted(samples)?;
    let n = s.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in s.iter().enumerate() {
        let f = cdf(x)?;
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    Ok(d)
}

/// Two-sample Kolmogorov-Smirnov distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    let a = sorted(a)?;
    let b = sorted(b)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Empirical CDF evaluated on a grid.
pub fn ecdf(samples: &[f64], grid: &[f64]) -> Result<Vec<f64>> {
    let s = sorted(samples)?;
    let n = s.len() as f64;
    Ok(grid
        .iter()
        .map(|&x| s.partition_point(|&y| y <= x) as f64 / n)
        .collect())
}

/// Pearson correlation; identical inputs give exactly 1.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return invalid("pearson needs two equal-length samples of size >= 2");
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return invalid("pearson of a constant sample");
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Delete-a-block jackknife standard error. `stat` receives the indices kept
/// in each replicate; blocks are contiguous in index order.
pub fn jackknife(n: usize, blocks: usize, stat: impl Fn(&[usize]) -> Result<f64>) -> Result<f64> {
    if blocks < 2 || n < 2 * blocks {
        return invalid("jackknife needs at least two points per block and two blocks");
    }
    let mut vals = Vec::with_capacity(blocks);
    for b in 0..blocks {
        let (lo, hi) = (b * n / blocks, (b + 1) * n / blocks);
        let keep: Vec<usize> = (0..lo).chain(hi..n).collect();
        vals.push(stat(&keep)?);
    }
    let g = blocks as f64;
    let m = vals.iter().sum::<f64>() / g;
    let ss: f64 = vals.iter().map(|v| (v - m) * (v - m)).sum();
    Ok(((g - 1.0) / g * ss).sqrt())
}

/// Jackknife standard error of a statistic computed on paired samples.
pub fn jackknife_se(
    x: &[f64],
    y: &[f64],
    blocks: usize,
    stat: impl Fn(&[f64], &[f64]) -> Result<f64>,
) -> Result<f64> {
    if x.len() != y.len() {
        return invalid("jackknife needs paired samples");
    }
    jackknife(x.len(), blocks, |keep| {
        let xs: Vec<f64> = keep.iter().map(|&i| x[i]).collect();
        let ys: Vec<f64> = keep.iter().map(|&i| y[i]).collect();
        stat(&xs, &ys)
    })
}

/// Ordinary least squares `y = a + b x`.
#[derive(Clone, Copy, Debug)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
    pub slope_stderr: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() || x.len() < 3 {
        return invalid("linear fit needs at least three paired points");
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return invalid("linear fit with constant abscissa");
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - intercept - slope * a;
            r * r
        })
        .sum();
    let slope_stderr = (rss / (n - 2.0) / sxx).sqrt();
    Ok(LinearFit {
        intercept,
        slope,
        slope_stderr,
    })
}
