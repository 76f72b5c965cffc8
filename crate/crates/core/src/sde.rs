//! Overdamped Langevin dynamics dx = −∇V(x) dt + √(2ε) dW by Euler–Maruyama,
//! first-hitting-time sampling, and exact Ornstein–Uhlenbeck oracles.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::potentials::Potential;
use crate::rng::{replica_rng, run_replicas, standard_normal};
use crate::scalar::{distance, Real};
use crate::stats::Summary;

/// Parameters of a simulated Langevin run.
#[derive(Debug, Clone)]
pub struct SdeRun<T, P> {
    pub potential: P,
    pub epsilon: T,
    pub dt: T,
    pub x0: Vec<T>,
    pub seed: u64,
    pub t_max: T,
}

impl<T: Real, P: Potential<T>> SdeRun<T, P> {
    /// Validates the parameters; the horizon defaults to 10⁶ steps.
    pub fn new(potential: P, epsilon: T, dt: T, x0: Vec<T>, seed: u64) -> Result<Self> {
        if !(epsilon >= T::zero()) || !epsilon.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "noise intensity ε = {epsilon} must be >= 0"
            )));
        }
        if !(dt > T::zero()) || !dt.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "time step dt = {dt} must be > 0"
            )));
        }
        if x0.len() != potential.dim() {
            return Err(Error::ShapeMismatch(format!(
                "initial point of dimension {} for potential of dimension {}",
                x0.len(),
                potential.dim()
            )));
        }
        let t_max = dt * T::lit(1e6);
        Ok(Self {
            potential,
            epsilon,
            dt,
            x0,
            seed,
            t_max,
        })
    }

    pub fn with_t_max(mut self, t_max: T) -> Self {
        self.t_max = t_max;
        self
    }

    fn noise_scale(&self) -> T {
        (T::lit(2.0) * self.epsilon * self.dt).sqrt()
    }

    fn steps_for(&self, t: T) -> usize {
        (t / self.dt).round().to_usize().unwrap_or(usize::MAX)
    }
}

/// One Euler–Maruyama step: x − ∇V(x) dt + √(2ε dt) g.
pub fn em_step<T: Real, P: Potential<T>>(
    run: &SdeRun<T, P>,
    x: &[T],
    gaussian: &[T],
) -> Result<Vec<T>> {
    let mut out = x.to_vec();
    let mut grad = vec![T::zero(); x.len()];
    let mut draws = gaussian.iter().copied();
    advance(run, &mut out, &mut grad, run.noise_scale(), || {
        draws.next().unwrap_or_else(T::zero)
    });
    if out.iter().all(|v| v.is_finite()) {
        Ok(out)
    } else {
        Err(Error::NonFinite { step: 0 })
    }
}

fn advance<T: Real, P: Potential<T>>(
    run: &SdeRun<T, P>,
    x: &mut [T],
    grad: &mut [T],
    scale: T,
    mut noise: impl FnMut() -> T,
) {
    run.potential.gradient_into(x, grad);
    for (xi, &gi) in x.iter_mut().zip(grad.iter()) {
        *xi = *xi - gi * run.dt + scale * noise();
    }
}

/// Trajectory of replica `replica` sampled every step, starting at x0.
pub fn simulate_path<T: Real, P: Potential<T>>(
    run: &SdeRun<T, P>,
    n_steps: usize,
    replica: u64,
) -> Result<Vec<Vec<T>>> {
    let mut rng = replica_rng(run.seed, replica);
    let scale = run.noise_scale();
    let mut x = run.x0.clone();
    let mut grad = vec![T::zero(); x.len()];
    let mut path = Vec::with_capacity(n_steps + 1);
    path.push(x.clone());
    for step in 1..=n_steps {
        if run.epsilon == T::zero() {
            advance(run, &mut x, &mut grad, scale, T::zero);
        } else {
            advance(run, &mut x, &mut grad, scale, || standard_normal(&mut rng));
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite { step: step as u64 });
        }
        path.push(x.clone());
    }
    Ok(path)
}

/// States x_t of `n` independent replicas at time `t`.
pub fn sample_terminal<T: Real, P: Potential<T>>(
    run: &SdeRun<T, P>,
    t: T,
    n: usize,
    threads: usize,
) -> Result<Vec<Vec<T>>> {
    let n_steps = run.steps_for(t);
    let scale = run.noise_scale();
    run_replicas(n, run.seed, threads, |_, rng| {
        let mut x = run.x0.clone();
        let mut grad = vec![T::zero(); x.len()];
        for step in 1..=n_steps {
            advance(run, &mut x, &mut grad, scale, || standard_normal(rng));
            if !x.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite { step: step as u64 });
            }
        }
        Ok(x)
    })
    .into_iter()
    .collect()
}

/// First-hitting times of a seeded batch of replicas.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HittingTimeBatch<T> {
    /// Hitting times of the uncensored replicas, in replica order.
    pub samples: Vec<T>,
    /// Indices of replicas that reached the horizon without hitting.
    pub censored: Vec<usize>,
    pub n_attempted: usize,
    pub n_censored: usize,
    pub mean: T,
    pub stderr: T,
    pub seed_base: u64,
}

impl<T: Real> HittingTimeBatch<T> {
    /// Aggregates per-replica outcomes (`None` = censored) in index order.
    pub fn from_outcomes(outcomes: Vec<Option<T>>, seed_base: u64) -> Result<Self> {
        let n_attempted = outcomes.len();
        let mut samples = Vec::with_capacity(n_attempted);
        let mut censored = Vec::new();
        for (i, o) in outcomes.into_iter().enumerate() {
            match o {
                Some(t) => samples.push(t),
                None => censored.push(i),
            }
        }
        if samples.is_empty() {
            return Err(Error::AllCensored {
                attempted: n_attempted,
            });
        }
        let s = Summary::of(&samples).expect("nonempty sample");
        Ok(Self {
            n_censored: censored.len(),
            samples,
            censored,
            n_attempted,
            mean: s.mean,
            stderr: s.stderr,
            seed_base,
        })
    }

    pub fn censored_fraction(&self) -> f64 {
        self.n_censored as f64 / self.n_attempted as f64
    }
}

/// Samples τ = inf{t : |x_t − target| < δ} for `n` replicas, censoring at t_max.
pub fn sample_hitting_times<T: Real, P: Potential<T>>(
    run: &SdeRun<T, P>,
    target_center: &[T],
    delta: T,
    n: usize,
    threads: usize,
) -> Result<HittingTimeBatch<T>> {
    if !(delta > T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "ball radius δ = {delta} must be > 0"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidArgument(
            "at least one replica is required".into(),
        ));
    }
    if target_center.len() != run.x0.len() {
        return Err(Error::ShapeMismatch(
            "target and initial point differ in dimension".into(),
        ));
    }
    let max_steps = run.steps_for(run.t_max);
    let scale = run.noise_scale();
    let outcomes: Result<Vec<Option<T>>> = run_replicas(n, run.seed, threads, |_, rng| {
        let mut x = run.x0.clone();
        let mut grad = vec![T::zero(); x.len()];
        if distance(&x, target_center) < delta {
            return Ok(Some(T::zero()));
        }
        for step in 1..=max_steps {
            advance(run, &mut x, &mut grad, scale, || standard_normal(rng));
            let r = distance(&x, target_center);
            if r < delta {
                return Ok(Some(T::from_usize_lossy(step) * run.dt));
            }
            if !r.is_finite() {
                return Err(Error::NonFinite { step: step as u64 });
            }
        }
        Ok(None)
    })
    .into_iter()
    .collect();
    HittingTimeBatch::from_outcomes(outcomes?, run.seed)
}

/// Exact OU transition density p_t(x, y) for V = x²/2.
pub fn ou_density<T: Real>(x: T, y: T, t: T, epsilon: T) -> T {
    let (mean, var) = ou_moments(x, t, epsilon);
    let z = y - mean;
    (-(z * z) / (T::lit(2.0) * var)).exp() / (T::TAU() * var).sqrt()
}

/// Mean x e^{−t} and variance ε(1 − e^{−2t}) of the OU law at time t.
pub fn ou_moments<T: Real>(x: T, t: T, epsilon: T) -> (T, T) {
    (x * (-t).exp(), epsilon * (T::one() - (-(t + t)).exp()))
}

/// Normalized invariant density π(y) = e^{−y²/(2ε)} / √(2πε).
pub fn ou_invariant_density<T: Real>(y: T, epsilon: T) -> T {
    (-(y * y) / (T::lit(2.0) * epsilon)).exp() / (T::TAU() * epsilon).sqrt()
}

/// max over grid pairs of |π(x) p_t(x,y) − π(y) p_t(y,x)|.
pub fn detailed_balance_residual<T: Real>(t: T, epsilon: T, grid: &[T]) -> T {
    let mut worst = T::zero();
    for &x in grid {
        for &y in grid {
            let lhs = ou_invariant_density(x, epsilon) * ou_density(x, y, t, epsilon);
            let rhs = ou_invariant_density(y, epsilon) * ou_density(y, x, t, epsilon);
            worst = worst.max((lhs - rhs).abs());
        }
    }
    worst
}

/// max over `ys` of |∂_t p − ∂_y(y p) − ε ∂²_y p| for the exact OU density
/// started at `x`, with every derivative replaced by a centered difference
/// of step `h`. Vanishes like h² since the density solves the equation.
pub fn fokker_planck_residual<T: Real>(x: T, t: T, epsilon: T, ys: &[T], h: T) -> T {
    let p = |y: T, s: T| ou_density(x, y, s, epsilon);
    let two = T::lit(2.0);
    ys.iter()
        .map(|&y| {
            let dt = (p(y, t + h) - p(y, t - h)) / (two * h);
            let flux = ((y + h) * p(y + h, t) - (y - h) * p(y - h, t)) / (two * h);
            let lap = (p(y + h, t) - two * p(y, t) + p(y - h, t)) / (h * h);
            (dt - flux - epsilon * lap).abs()
        })
        .fold(T::zero(), T::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{quartic_double_well, Quadratic};
    use approx::assert_relative_eq;

    fn ou(eps: f64, dt: f64, x0: f64, seed: u64) -> SdeRun<f64, Quadratic<f64>> {
        SdeRun::new(Quadratic::ornstein_uhlenbeck(), eps, dt, vec![x0], seed).unwrap()
    }

    #[test]
    fn deterministic_step() {
        let r = ou(0.0, 0.01, 1.0, 0);
        assert_relative_eq!(
            em_step(&r, &[1.0], &[0.7]).unwrap()[0],
            0.99,
            epsilon = 1e-15
        );
    }

    #[test]
    fn gradient_flow_reaches_the_minimum() {
        let r = SdeRun::new(quartic_double_well(), 0.0_f64, 1e-3, vec![0.5], 1).unwrap();
        let path = simulate_path(&r, 20_000, 0).unwrap();
        assert!((path.last().unwrap()[0] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn blow_up_is_reported() {
        let r = SdeRun::new(quartic_double_well(), 0.0, 1.0, vec![10.0], 1).unwrap();
        assert!(matches!(
            simulate_path(&r, 50, 0),
            Err(Error::NonFinite { .. })
        ));
        assert!(matches!(
            em_step(&r, &[1e120], &[0.0]),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn invalid_parameters() {
        assert!(SdeRun::new(quartic_double_well(), -0.1, 1e-3, vec![0.0], 1).is_err());
        assert!(SdeRun::new(quartic_double_well(), 0.1, 0.0, vec![0.0], 1).is_err());
        assert!(SdeRun::new(quartic_double_well(), 0.1, 1e-3, vec![0.0, 1.0], 1).is_err());
    }

    #[test]
    fn start_inside_target() {
        let r = SdeRun::new(quartic_double_well(), 0.25, 1e-3, vec![0.95], 7).unwrap();
        let b = sample_hitting_times(&r, &[1.0], 0.2, 10, 1).unwrap();
        assert!(b.samples.iter().all(|&t| t == 0.0));
        assert_eq!(b.n_censored, 0);
    }

    #[test]
    fn all_censored() {
        let r = SdeRun::new(quartic_double_well(), 0.01, 1e-2, vec![-1.0], 7)
            .unwrap()
            .with_t_max(1.0);
        assert!(matches!(
            sample_hitting_times(&r, &[1.0], 0.2, 4, 1),
            Err(Error::AllCensored { attempted: 4 })
        ));
    }

    #[test]
    fn partial_censoring_is_reported() {
        let b = HittingTimeBatch::from_outcomes(vec![Some(1.0), None, Some(3.0)], 5).unwrap();
        assert_eq!(b.n_censored, 1);
        assert_eq!(b.censored, vec![1]);
        assert_eq!(b.mean, 2.0);
    }

    #[test]
    fn batches_do_not_depend_on_thread_count() {
        let r = SdeRun::new(quartic_double_well(), 0.4, 1e-3, vec![-1.0], 11).unwrap();
        let a = sample_hitting_times(&r, &[1.0], 0.2, 24, 1).unwrap();
        let b = sample_hitting_times(&r, &[1.0], 0.2, 24, 4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ou_density_properties() {
        let (m, v) = ou_moments(1.0, std::f64::consts::LN_2, 0.5);
        assert_relative_eq!(m, 0.5, epsilon = 1e-15);
        assert_relative_eq!(v, 0.375, epsilon = 1e-15);
        assert_relative_eq!(
            ou_density(0.7, 0.3, 60.0, 0.3),
            ou_invariant_density(0.3, 0.3),
            max_relative = 1e-12
        );
        assert_eq!(ou_moments(0.0, 2.0, 0.3).0, 0.0);
        // Normalization by a Riemann sum.
        let h = 1e-3;
        let mass: f64 = (-5000..5000)
            .map(|i| ou_density(1.0, i as f64 * h, 0.4, 0.2) * h)
            .sum();
        assert_relative_eq!(mass, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn detailed_balance_holds() {
        let grid: Vec<f64> = (0..=4).map(|i| -2.0 + i as f64).collect();
        assert!(detailed_balance_residual(0.7, 0.3, &grid) < 1e-12);
        assert_eq!(detailed_balance_residual(0.7, 0.3, &[0.4]), 0.0);
    }

    #[test]
    fn fokker_planck_residual_is_second_order() {
        let ys: Vec<f64> = (0..=40).map(|i| -1.0 + 0.05 * i as f64).collect();
        let r = |h| fokker_planck_residual(0.5, 0.8, 0.3, &ys, h);
        let ratio = r(0.02) / r(0.01);
        assert!((ratio - 4.0).abs() < 0.5, "ratio {ratio}");
    }
}
