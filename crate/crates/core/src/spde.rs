//! Spectral-Galerkin integrator for the stochastic Allen–Cahn equation
//! ∂_t φ = Δφ + φ − φ³ (+ 3εC_N φ) + √(2ε) ξ on T^d_L, d = 1, 2.
//!
//! Each step is semi-implicit: Δ + 1 is treated implicitly mode by mode,
//! the cubic term explicitly on the dealiased collocation grid, and every
//! real Fourier mode receives an independent Brownian increment.

use std::io::Write;

use num_complex::Complex;
use rand::RngCore;
use serde::Serialize;

use crate::determinants::counterterm_trace;
use crate::error::{Error, Result};
use crate::field::{Collocation, SpectralField};
use crate::rng::{run_replicas, standard_normal};
use crate::scalar::Real;
use crate::sde::HittingTimeBatch;
use crate::stats::correlation;

/// Parameters of a stochastic Allen–Cahn run.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdeRun<T> {
    pub field0: SpectralField<T>,
    pub epsilon: T,
    pub dt: T,
    pub t_max: T,
    pub seed: u64,
    /// Adds the Wick counterterm 3εC_N φ (on by default in d = 2).
    pub renormalize: bool,
    /// Collocation points per axis as a multiple of 2N + 1 (2 is alias-free).
    pub grid_factor: f64,
    /// Keeps the −φ³ term; switching it off leaves independent OU modes.
    pub cubic: bool,
}

impl<T: Real> SpdeRun<T> {
    /// Validates parameters; the horizon defaults to 10⁶ steps.
    pub fn new(field0: SpectralField<T>, epsilon: T, dt: T, seed: u64) -> Result<Self> {
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
        let renormalize = field0.dim() == 2;
        Ok(Self {
            field0,
            epsilon,
            dt,
            t_max: dt * T::lit(1e6),
            seed,
            renormalize,
            grid_factor: 2.0,
            cubic: true,
        })
    }

    pub fn with_t_max(mut self, t_max: T) -> Self {
        self.t_max = t_max;
        self
    }

    pub fn with_renormalize(mut self, on: bool) -> Self {
        self.renormalize = on;
        self
    }

    pub fn with_grid_factor(mut self, factor: f64) -> Self {
        self.grid_factor = factor;
        self
    }

    pub fn with_cubic(mut self, on: bool) -> Self {
        self.cubic = on;
        self
    }

    /// Configuration warnings worth surfacing to the user.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.field0.dim() == 2 && !self.renormalize && self.epsilon > T::zero() {
            w.push(format!(
                "renormalization is off in d = 2: statistics will drift with the cutoff N = {}",
                self.field0.cutoff()
            ));
        }
        w
    }

    fn steps_for(&self, t: T) -> usize {
        (t / self.dt).round().to_usize().unwrap_or(usize::MAX)
    }
}

/// Precomputed per-mode factors and transforms for one run.
#[derive(Debug, Clone)]
pub struct SpdeStepper<T: Real> {
    run: SpdeRun<T>,
    grid: Collocation<T>,
    implicit: Vec<T>,
    counterterm: T,
    noise_amplitude: T,
}

impl<T: Real> SpdeStepper<T> {
    pub fn new(run: SpdeRun<T>) -> Result<Self> {
        let f = &run.field0;
        let grid = Collocation::with_factor(f.dim(), f.length(), f.cutoff(), run.grid_factor)?;
        let implicit = (0..f.len())
            .map(|i| {
                let mu = T::one() - f.k_squared(i);
                (T::one() - run.dt * mu).recip()
            })
            .collect();
        let counterterm = if run.renormalize {
            T::lit(3.0) * run.epsilon * counterterm_trace(f.dim(), f.length(), f.cutoff())?
        } else {
            T::zero()
        };
        let noise_amplitude = (T::lit(2.0) * run.epsilon * run.dt).sqrt();
        Ok(Self {
            run,
            grid,
            implicit,
            counterterm,
            noise_amplitude,
        })
    }

    pub fn run(&self) -> &SpdeRun<T> {
        &self.run
    }

    pub fn grid(&self) -> &Collocation<T> {
        &self.grid
    }

    /// Per-mode standard complex Gaussians with the law of a real field:
    /// k ≠ 0 gets (g₁ + i g₂)/√2 with η(−k) = conj η(k); k = 0 is real.
    pub fn draw_noise<R: RngCore + ?Sized>(&self, rng: &mut R, out: &mut [Complex<T>]) {
        let last = out.len() - 1;
        let centre = last / 2;
        let s = T::FRAC_1_SQRT_2();
        for i in 0..centre {
            let re: T = standard_normal(rng);
            let im: T = standard_normal(rng);
            out[i] = Complex::new(re * s, im * s);
            out[last - i] = out[i].conj();
        }
        out[centre] = Complex::new(standard_normal(rng), T::zero());
    }

    /// One step given the grid values `u` of `phi` (reused by callers that
    /// already transformed it).
    pub fn step_from_grid(
        &self,
        phi: &SpectralField<T>,
        u: &[T],
        eta: &[Complex<T>],
    ) -> Result<SpectralField<T>> {
        let dt = self.run.dt;
        let cubic = if self.run.cubic {
            let cubes: Vec<T> = u.iter().map(|&v| v * v * v).collect();
            Some(self.grid.from_grid(&cubes, phi)?)
        } else {
            None
        };
        let mut next = phi.clone();
        for (i, c) in next.coeffs_mut().iter_mut().enumerate() {
            let mut drift = c.scale(self.counterterm);
            if let Some(q) = &cubic {
                drift -= q.coeffs()[i];
            }
            *c =
                (*c + drift.scale(dt) + eta[i].scale(self.noise_amplitude)).scale(self.implicit[i]);
        }
        if next
            .coeffs()
            .iter()
            .any(|c| !c.re.is_finite() || !c.im.is_finite())
        {
            return Err(Error::NonFinite { step: 0 });
        }
        Ok(next)
    }

    pub fn step(&self, phi: &SpectralField<T>, eta: &[Complex<T>]) -> Result<SpectralField<T>> {
        let u = if self.run.cubic {
            self.grid.to_grid(phi)?
        } else {
            Vec::new()
        };
        self.step_from_grid(phi, &u, eta)
    }

    /// Trajectory of replica `replica`, recording (t, φ) every `every` steps.
    pub fn simulate<R: RngCore>(
        &self,
        rng: &mut R,
        n_steps: usize,
        every: usize,
    ) -> Result<Vec<(T, SpectralField<T>)>> {
        let every = every.max(1);
        let mut phi = self.run.field0.clone();
        let mut eta = vec![Complex::new(T::zero(), T::zero()); phi.len()];
        let mut out = vec![(T::zero(), phi.clone())];
        for step in 1..=n_steps {
            if self.run.epsilon > T::zero() {
                self.draw_noise(rng, &mut eta);
            }
            phi = self.step(&phi, &eta).map_err(|e| at_step(e, step))?;
            if step % every == 0 {
                out.push((T::from_usize_lossy(step) * self.run.dt, phi.clone()));
            }
        }
        Ok(out)
    }
}

fn at_step(e: Error, step: usize) -> Error {
    match e {
        Error::NonFinite { .. } => Error::NonFinite { step: step as u64 },
        other => other,
    }
}

/// One semi-implicit step
/// φ_k ← [φ_k + dt(−P_N(φ³)_k + 3εC_N φ_k) + √(2ε dt) η_k] / (1 − dt μ_k),
/// μ_k = 1 − (2π|k|/L)². Builds the transforms on every call; use
/// [`SpdeStepper`] in loops.
pub fn spde_step<T: Real>(
    run: &SpdeRun<T>,
    phi: &SpectralField<T>,
    gaussians: &[Complex<T>],
) -> Result<SpectralField<T>> {
    phi.check_compatible(&run.field0)?;
    if gaussians.len() != phi.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} Gaussian draws for {} modes",
            gaussians.len(),
            phi.len()
        )));
    }
    SpdeStepper::new(run.clone())?.step(phi, gaussians)
}

/// Spatial mean of φ averaged over the step times in (0, t_burn] and over
/// `replicas` independent runs.
pub fn time_averaged_mean<T: Real>(
    run: &SpdeRun<T>,
    t_burn: T,
    replicas: usize,
    threads: usize,
) -> Result<T> {
    if replicas == 0 {
        return Err(Error::InvalidArgument(
            "at least one replica is required".into(),
        ));
    }
    let stepper = SpdeStepper::new(run.clone())?;
    let steps = run.steps_for(t_burn).max(1);
    let per_replica: Result<Vec<T>> = run_replicas(replicas, run.seed, threads, |_, rng| {
        let mut phi = run.field0.clone();
        let mut eta = vec![Complex::new(T::zero(), T::zero()); phi.len()];
        let mut acc = T::zero();
        for step in 1..=steps {
            stepper.draw_noise(rng, &mut eta);
            phi = stepper.step(&phi, &eta).map_err(|e| at_step(e, step))?;
            acc += phi.mean_value();
        }
        Ok(acc / T::from_usize_lossy(steps))
    })
    .into_iter()
    .collect();
    let v = per_replica?;
    Ok(v.iter().copied().sum::<T>() / T::from_usize_lossy(v.len()))
}

/// Which constant critical field the hitting ball is centred on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Plus,
    Minus,
}

impl Target {
    pub fn value<T: Real>(self) -> T {
        match self {
            Target::Plus => T::one(),
            Target::Minus => -T::one(),
        }
    }
}

/// Distance used for the hitting ball.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FieldNorm<T> {
    /// Maximum over the collocation grid.
    Linf,
    /// Fourier-weighted Sobolev norm with exponent s < 0.
    Hs(T),
}

fn distance_to_constant<T: Real>(phi: &SpectralField<T>, u: &[T], c: T, norm: FieldNorm<T>) -> T {
    match norm {
        FieldNorm::Linf => u.iter().map(|&v| (v - c).abs()).fold(T::zero(), T::max),
        FieldNorm::Hs(s) => {
            let target = SpectralField::constant(phi.dim(), phi.length(), phi.cutoff(), c)
                .expect("valid shape");
            phi.axpy(-T::one(), &target).expect("same shape").hs_norm(s)
        }
    }
}

/// First time the field enters the ball of radius δ around φ ≡ ±1, per replica.
pub fn sample_spde_hitting_times<T: Real>(
    run: &SpdeRun<T>,
    target: Target,
    delta: T,
    norm: FieldNorm<T>,
    n: usize,
    threads: usize,
) -> Result<HittingTimeBatch<T>> {
    if !(delta > T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "ball radius δ = {delta} must be > 0"
        )));
    }
    if let FieldNorm::Hs(s) = norm {
        if !(s < T::zero()) {
            return Err(Error::InvalidArgument(format!(
                "Sobolev exponent s = {s} must be negative"
            )));
        }
    }
    if n == 0 {
        return Err(Error::InvalidArgument(
            "at least one replica is required".into(),
        ));
    }
    let stepper = SpdeStepper::new(run.clone())?;
    let c = target.value::<T>();
    let max_steps = run.steps_for(run.t_max);
    let outcomes: Result<Vec<Option<T>>> = run_replicas(n, run.seed, threads, |_, rng| {
        let mut phi = run.field0.clone();
        let mut eta = vec![Complex::new(T::zero(), T::zero()); phi.len()];
        for step in 0..=max_steps {
            let u = stepper.grid.to_grid(&phi)?;
            if distance_to_constant(&phi, &u, c, norm) < delta {
                return Ok(Some(T::from_usize_lossy(step) * run.dt));
            }
            if step == max_steps {
                break;
            }
            stepper.draw_noise(rng, &mut eta);
            phi = stepper
                .step_from_grid(&phi, &u, &eta)
                .map_err(|e| at_step(e, step + 1))?;
        }
        Ok(None)
    })
    .into_iter()
    .collect();
    HittingTimeBatch::from_outcomes(outcomes?, run.seed)
}

/// Axis-aligned box [lo, hi] in the torus (second axis ignored when d = 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusBox<T> {
    pub lo: [T; 2],
    pub hi: [T; 2],
}

impl<T: Real> TorusBox<T> {
    pub fn full(length: T) -> Self {
        Self {
            lo: [T::zero(); 2],
            hi: [length; 2],
        }
    }

    pub fn volume(&self, d: usize) -> T {
        (0..d)
            .map(|a| self.hi[a] - self.lo[a])
            .fold(T::one(), |p, w| p * w)
    }

    /// ⟨1_box, e_k⟩ in the orthonormal basis.
    fn coefficient(&self, f: &SpectralField<T>, idx: usize) -> Complex<T> {
        let k = f.wave_vector(idx);
        let w = T::TAU() / f.length();
        let scale = f.length().sqrt().recip();
        let mut acc = Complex::new(T::one(), T::zero());
        for (axis, &ki) in k.iter().enumerate().take(f.dim()) {
            let (a, b) = (self.lo[axis], self.hi[axis]);
            let factor = if ki == 0 {
                Complex::new(b - a, T::zero())
            } else {
                let om = w * T::lit(ki as f64);
                // ∫_a^b e^{−iωx} dx = (e^{−iωb} − e^{−iωa}) / (−iω)
                let diff =
                    Complex::new(T::zero(), -om * b).exp() - Complex::new(T::zero(), -om * a).exp();
                diff / Complex::new(T::zero(), -om)
            };
            acc = acc * factor.scale(scale);
        }
        acc
    }
}

/// Empirical statistics of ⟨ξ_N, 1_{[0,T]×A}⟩ built from the stepper's
/// noise increments.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseCheckReport<T> {
    pub horizon: T,
    pub n_samples: usize,
    /// Sample variance per box.
    pub variances: Vec<T>,
    /// T·‖P_N 1_A‖², the variance of the projected noise pairing.
    pub projected: Vec<T>,
    /// T·|A|, the white-noise isometry value.
    pub isometry: Vec<T>,
    /// Standard error of each sample variance.
    pub stderr: Vec<T>,
    /// Sample correlation between the pairings with the first two boxes.
    pub correlation: Option<T>,
}

impl<T: Real> NoiseCheckReport<T> {
    /// Whether every variance is within `k` standard errors of T·|A|.
    pub fn within(&self, k: T) -> bool {
        self.variances
            .iter()
            .zip(&self.isometry)
            .zip(&self.stderr)
            .all(|((&v, &e), &s)| (v - e).abs() <= k * s)
    }
}

/// Pairs the discrete noise on [0, horizon] with the indicators of `boxes`.
pub fn noise_coefficient_check<T: Real>(
    run: &SpdeRun<T>,
    boxes: &[TorusBox<T>],
    horizon: T,
    n_samples: usize,
    threads: usize,
) -> Result<NoiseCheckReport<T>> {
    if n_samples < 2 || boxes.is_empty() {
        return Err(Error::InvalidArgument(
            "need at least two samples and one box".into(),
        ));
    }
    let stepper = SpdeStepper::new(run.clone())?;
    let f = &run.field0;
    let d = f.dim();
    let coeffs: Vec<Vec<Complex<T>>> = boxes
        .iter()
        .map(|b| (0..f.len()).map(|i| b.coefficient(f, i)).collect())
        .collect();
    let n_steps = run.steps_for(horizon).max(1);
    let sqrt_dt = run.dt.sqrt();
    let pairings: Vec<Vec<T>> = run_replicas(n_samples, run.seed, threads, |_, rng| {
        let mut eta = vec![Complex::new(T::zero(), T::zero()); f.len()];
        let mut w = vec![Complex::new(T::zero(), T::zero()); f.len()];
        for _ in 0..n_steps {
            stepper.draw_noise(rng, &mut eta);
            for (wi, e) in w.iter_mut().zip(&eta) {
                *wi += e.scale(sqrt_dt);
            }
        }
        coeffs
            .iter()
            .map(|fk| {
                w.iter()
                    .zip(fk)
                    .map(|(a, b)| a.re * b.re + a.im * b.im)
                    .sum()
            })
            .collect()
    });
    let t_eff = T::from_usize_lossy(n_steps) * run.dt;
    let mut variances = Vec::new();
    let mut stderr = Vec::new();
    for j in 0..boxes.len() {
        let xs: Vec<T> = pairings.iter().map(|p| p[j]).collect();
        let nn = T::from_usize_lossy(xs.len());
        // The pairing has mean zero by construction.
        let m2 = xs.iter().map(|&x| x * x).sum::<T>() / nn;
        let m4 = xs.iter().map(|&x| x * x * x * x).sum::<T>() / nn;
        variances.push(m2);
        stderr.push(((m4 - m2 * m2) / nn).sqrt());
    }
    let projected = coeffs
        .iter()
        .map(|fk| t_eff * fk.iter().map(|c| c.norm_sqr()).sum::<T>())
        .collect();
    let isometry = boxes.iter().map(|b| t_eff * b.volume(d)).collect();
    let correlation = (boxes.len() >= 2).then(|| {
        let a: Vec<T> = pairings.iter().map(|p| p[0]).collect();
        let b: Vec<T> = pairings.iter().map(|p| p[1]).collect();
        correlation(&a, &b)
    });
    Ok(NoiseCheckReport {
        horizon: t_eff,
        n_samples,
        variances,
        projected,
        isometry,
        stderr,
        correlation,
    })
}

/// Per-snapshot summary for JSON-lines trajectory output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SnapshotSummary {
    pub t: f64,
    pub mean: f64,
    pub l2: f64,
    pub linf_to_plus: f64,
    pub linf_to_minus: f64,
}

pub fn summarize<T: Real>(t: T, phi: &SpectralField<T>) -> Result<SnapshotSummary> {
    let u = Collocation::for_field(phi)?.to_grid(phi)?;
    let dist = |c: T| distance_to_constant(phi, &u, c, FieldNorm::Linf).to_f64_lossy();
    Ok(SnapshotSummary {
        t: t.to_f64_lossy(),
        mean: phi.mean_value().to_f64_lossy(),
        l2: phi.l2_norm().to_f64_lossy(),
        linf_to_plus: dist(T::one()),
        linf_to_minus: dist(-T::one()),
    })
}

/// Writes one JSON line per snapshot summary.
pub fn write_summaries<T: Real, W: Write>(
    out: &mut W,
    snapshots: &[(T, SpectralField<T>)],
) -> Result<()> {
    for (t, phi) in snapshots {
        let line =
            serde_json::to_string(&summarize(*t, phi)?).map_err(|e| Error::Io(e.to_string()))?;
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Grid values of a snapshot as CSV: a `#` line with d, L, N, t, a header,
/// then one row per grid point in row-major order.
pub fn write_snapshot_csv<T: Real, W: Write>(
    out: &mut W,
    t: T,
    phi: &SpectralField<T>,
) -> Result<()> {
    let grid = Collocation::for_field(phi)?;
    let u = grid.to_grid(phi)?;
    writeln!(
        out,
        "# d={},L={},N={},t={}",
        phi.dim(),
        phi.length(),
        phi.cutoff(),
        t
    )?;
    let m = grid.points_per_axis();
    if phi.dim() == 1 {
        writeln!(out, "x,phi")?;
        for (j, v) in u.iter().enumerate() {
            writeln!(out, "{},{}", grid.coordinate(j), v)?;
        }
    } else {
        writeln!(out, "x,y,phi")?;
        for (j, v) in u.iter().enumerate() {
            writeln!(
                out,
                "{},{},{}",
                grid.coordinate(j / m),
                grid.coordinate(j % m),
                v
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{ac_energy, AllenCahnEnergy};
    use crate::rng::replica_rng;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn zeros(d: usize, l: f64, n: usize) -> SpectralField<f64> {
        SpectralField::zeros(d, l, n).unwrap()
    }

    #[test]
    fn minus_one_is_a_fixed_point() {
        for d in [1, 2] {
            let phi = SpectralField::constant(d, 2.0, 6, -1.0).unwrap();
            let run = SpdeRun::new(phi.clone(), 0.0, 1e-2, 0)
                .unwrap()
                .with_renormalize(false);
            let eta = vec![Complex::new(0.0, 0.0); phi.len()];
            let next = spde_step(&run, &phi, &eta).unwrap();
            for (a, b) in next.coeffs().iter().zip(phi.coeffs()) {
                assert!((a - b).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn deterministic_flow_descends_to_plus_one() {
        let l = 2.0_f64;
        let mut phi0 = SpectralField::constant(1, l, 8, 0.1).unwrap();
        phi0.set_mode([1, 0], Complex::new(0.3 * l.sqrt() / 2.0, 0.0))
            .unwrap();
        let run = SpdeRun::new(phi0, 0.0, 1e-3, 0).unwrap();
        let stepper = SpdeStepper::new(run).unwrap();
        let path = stepper
            .simulate(&mut replica_rng(0, 0), 20_000, 100)
            .unwrap();
        let e = AllenCahnEnergy::new(1, l, 8).unwrap();
        let energies: Vec<f64> = path
            .iter()
            .map(|(_, f)| ac_energy(&e, f).unwrap())
            .collect();
        for w in energies.windows(2) {
            assert!(w[1] <= w[0] + 1e-14);
        }
        let last = &path.last().unwrap().1;
        assert!((last.mean_value() - 1.0).abs() < 1e-6);
        assert!(summarize(0.0, last).unwrap().linf_to_plus < 1e-6);
    }

    #[test]
    fn energy_descends_from_random_fields() {
        let l = 3.0;
        let n = 6;
        let e = AllenCahnEnergy::new(1, l, n).unwrap();
        for seed in 0..20u64 {
            let mut rng = replica_rng(seed, 99);
            let mut phi = zeros(1, l, n);
            let probe = SpdeStepper::new(SpdeRun::new(phi.clone(), 0.0, 1e-3, 0).unwrap()).unwrap();
            let mut eta = vec![Complex::new(0.0, 0.0); phi.len()];
            probe.draw_noise(&mut rng, &mut eta);
            for (c, z) in phi.coeffs_mut().iter_mut().zip(&eta) {
                *c = z.scale(0.8);
            }
            let stepper = SpdeStepper::new(SpdeRun::new(phi, 0.0, 1e-3, 0).unwrap()).unwrap();
            let path = stepper.simulate(&mut rng, 2000, 1).unwrap();
            let mut prev = f64::INFINITY;
            for (_, f) in &path {
                let v = ac_energy(&e, f).unwrap();
                assert!(v <= prev + 1e-12, "seed {seed}");
                prev = v;
            }
        }
    }

    #[test]
    fn noise_keeps_the_field_real() {
        let phi = SpectralField::constant(2, 3.0_f64, 5, -1.0).unwrap();
        let run = SpdeRun::new(phi, 0.2, 1e-3, 3).unwrap();
        let stepper = SpdeStepper::new(run).unwrap();
        let path = stepper
            .simulate(&mut replica_rng(3, 0), 10_000, 10_000)
            .unwrap();
        let last = &path.last().unwrap().1;
        let z = stepper.grid().to_grid_complex(last).unwrap();
        assert!(z.iter().all(|v| v.im.abs() < 1e-10));
        assert!(last.conjugate_asymmetry() < 1e-12);
    }

    #[test]
    fn linear_modes_reach_their_stationary_variance() {
        let (l, n, eps, dt) = (2.0, 3, 0.3, 1e-3);
        let run = SpdeRun::new(zeros(1, l, n), eps, dt, 17)
            .unwrap()
            .with_cubic(false);
        let stepper = SpdeStepper::new(run.clone()).unwrap();
        let finals: Vec<SpectralField<f64>> = run_replicas(1000, 17, 0, |i, rng| {
            let _ = i;
            stepper.simulate(rng, 2000, 2000).unwrap().pop().unwrap().1
        });
        for k in 1..=3i64 {
            let nu = (2.0 * PI * k as f64 / l).powi(2) - 1.0;
            let mu = -nu;
            let discrete = 2.0 * eps / (2.0 * nu + dt * mu * mu);
            let xs: Vec<f64> = finals
                .iter()
                .map(|f| f.coeff([k, 0]).unwrap().norm_sqr())
                .collect();
            let s = crate::stats::Summary::of(&xs).unwrap();
            assert!(
                (s.mean - discrete).abs() < 3.0 * s.stderr,
                "k={k}: {} vs {discrete}",
                s.mean
            );
            assert!((discrete / (eps / nu) - 1.0).abs() < dt * nu);
        }
    }

    #[test]
    fn noise_pairing_matches_the_isometry() {
        let l = 2.0;
        let run = SpdeRun::new(zeros(1, l, 64), 1.0, 0.05, 5).unwrap();
        let boxes = [
            TorusBox {
                lo: [0.0, 0.0],
                hi: [0.5, 0.0],
            },
            TorusBox {
                lo: [1.0, 0.0],
                hi: [1.5, 0.0],
            },
            TorusBox::full(l),
        ];
        let r = noise_coefficient_check(&run, &boxes, 1.0, 4000, 0).unwrap();
        assert_relative_eq!(r.isometry[2], 2.0);
        assert_relative_eq!(r.projected[2], 2.0, max_relative = 1e-12);
        assert!(r.within(3.0), "{r:?}");
        let n = r.n_samples as f64;
        assert!(r.correlation.unwrap().abs() < 3.0 / n.sqrt(), "{r:?}");
    }

    #[test]
    fn start_on_target_hits_immediately() {
        let phi = SpectralField::constant(1, 2.0, 8, 1.0).unwrap();
        let run = SpdeRun::new(phi, 0.4, 1e-3, 0).unwrap();
        for norm in [FieldNorm::Linf, FieldNorm::Hs(-0.5)] {
            let b = sample_spde_hitting_times(&run, Target::Plus, 0.1, norm, 5, 1).unwrap();
            assert!(b.samples.iter().all(|&t| t == 0.0));
        }
        assert!(
            sample_spde_hitting_times(&run, Target::Plus, 0.1, FieldNorm::Hs(0.5), 5, 1).is_err()
        );
    }

    #[test]
    fn hitting_times_are_thread_independent() {
        let phi = SpectralField::constant(1, 2.0, 4, -1.0).unwrap();
        let run = SpdeRun::new(phi, 0.6, 2e-3, 9).unwrap().with_t_max(5.0);
        let a = sample_spde_hitting_times(&run, Target::Plus, 0.6, FieldNorm::Linf, 6, 1);
        let b = sample_spde_hitting_times(&run, Target::Plus, 0.6, FieldNorm::Linf, 6, 3);
        assert_eq!(a, b);
    }

    #[test]
    fn warnings_and_validation() {
        let f2 = zeros(2, 3.0, 4);
        assert!(SpdeRun::new(f2.clone(), 0.1, 1e-3, 0)
            .unwrap()
            .warnings()
            .is_empty());
        assert_eq!(
            SpdeRun::new(f2, 0.1, 1e-3, 0)
                .unwrap()
                .with_renormalize(false)
                .warnings()
                .len(),
            1
        );
        assert!(SpdeRun::new(zeros(1, 3.0, 4), 0.1, -1e-3, 0).is_err());
        let run = SpdeRun::new(zeros(1, 3.0, 4), 0.1, 1e-3, 0).unwrap();
        assert!(matches!(
            spde_step(&run, &zeros(1, 3.0, 5), &[Complex::new(0.0, 0.0); 11]),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn blow_up_is_reported() {
        let phi = SpectralField::constant(1, 2.0, 4, 50.0).unwrap();
        let run = SpdeRun::new(phi, 0.0, 1.0, 0).unwrap();
        let stepper = SpdeStepper::new(run).unwrap();
        assert!(matches!(
            stepper.simulate(&mut replica_rng(0, 0), 20, 1),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn snapshot_csv_layout() {
        let phi = SpectralField::constant(2, 2.0, 1, 0.5).unwrap();
        let mut buf = Vec::new();
        write_snapshot_csv(&mut buf, 0.25, &phi).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# d=2,L=2,N=1,t=0.25");
        assert_eq!(lines[1], "x,y,phi");
        assert_eq!(lines.len(), 2 + 36);
        let mut js = Vec::new();
        write_summaries(&mut js, &[(0.0, phi)]).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&js).unwrap();
        assert_relative_eq!(v["mean"].as_f64().unwrap(), 0.5, epsilon = 1e-14);
    }
}
