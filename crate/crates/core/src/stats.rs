//! Sample summaries and the distributional tests used by the simulators'
//! self-checks.

use statrs::function::erf::erfc;

use crate::scalar::Real;

/// Mean, unbiased variance and standard error of a sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary<T> {
    pub n: usize,
    pub mean: T,
    pub variance: T,
    pub stderr: T,
}

impl<T: Real> Summary<T> {
    /// `None` for an empty sample. A single sample has zero variance.
    pub fn of(samples: &[T]) -> Option<Self> {
        let n = samples.len();
        if n == 0 {
            return None;
        }
        let nf = T::from_usize_lossy(n);
        let mean = samples.iter().copied().sum::<T>() / nf;
        let variance = if n > 1 {
            samples.iter().map(|&x| (x - mean) * (x - mean)).sum::<T>() / T::from_usize_lossy(n - 1)
        } else {
            T::zero()
        };
        Some(Self {
            n,
            mean,
            variance,
            stderr: (variance / nf).sqrt(),
        })
    }
}

/// Pearson correlation coefficient of two equally long samples.
pub fn correlation<T: Real>(x: &[T], y: &[T]) -> T {
    let n = T::from_usize_lossy(x.len());
    let mx = x.iter().copied().sum::<T>() / n;
    let my = y.iter().copied().sum::<T>() / n;
    let mut sxy = T::zero();
    let mut sxx = T::zero();
    let mut syy = T::zero();
    for (&a, &b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Standard normal cumulative distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// One-sample Kolmogorov–Smirnov statistic sup |F_n - F|.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        // Ties (lattice-valued samples) jump together.
        let x = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == x {
            j += 1;
        }
        let f = cdf(x);
        d = d
            .max((j as f64 / n - f).abs())
            .max((f - i as f64 / n).abs());
        i = j;
    }
    d
}

/// Large-sample critical value of the one-sample KS statistic at level `alpha`.
pub fn ks_critical_value(n: usize, alpha: f64) -> f64 {
    (-0.5 * (alpha / 2.0).ln()).sqrt() / (n as f64).sqrt()
}
