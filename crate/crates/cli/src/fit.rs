use serde::Serialize;

use metastable_core::sde::HittingTimeBatch;
use metastable_core::Error;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ArrheniusPoint {
    pub epsilon: f64,
    pub mean_tau: f64,
    pub stderr: f64,
    pub n_censored: usize,
}

/// Least-squares line through (1/ε, ln mean τ). The slope estimates the
/// barrier, the intercept the log-prefactor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArrheniusFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: Vec<ArrheniusPoint>,
}

impl ArrheniusFit {
    /// Mean τ predicted by the fitted line at ε.
    pub fn predict(&self, epsilon: f64) -> f64 {
        (self.intercept + self.slope / epsilon).exp()
    }
}

pub fn arrhenius_fit(batches: &[(f64, HittingTimeBatch<f64>)]) -> Result<ArrheniusFit, Error> {
    let mut eps: Vec<f64> = batches.iter().map(|(e, _)| *e).collect();
    eps.sort_by(f64::total_cmp);
    eps.dedup();
    if eps.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "need at least 3 distinct noise intensities, got {}",
            eps.len()
        )));
    }
    let mut points = Vec::with_capacity(batches.len());
    for (e, b) in batches {
        if !(*e > 0.0) || b.samples.is_empty() || !(b.mean > 0.0) {
            return Err(Error::InsufficientData(format!(
                "batch at ε = {e} has no usable hitting times"
            )));
        }
        points.push(ArrheniusPoint {
            epsilon: *e,
            mean_tau: b.mean,
            stderr: b.stderr,
            n_censored: b.n_censored,
        });
    }
    let xs: Vec<f64> = points.iter().map(|p| 1.0 / p.epsilon).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.mean_tau.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - intercept - slope * x;
            r * r
        })
        .sum();
    let r_squared = if syy > 0.0 {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(ArrheniusFit {
        slope,
        intercept,
        r_squared,
        points,
    })
}
