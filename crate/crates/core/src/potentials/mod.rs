//! Finite-dimensional confining potentials, their critical points, and the
//! Allen–Cahn energy on Galerkin-truncated fields.

mod allen_cahn;

pub use allen_cahn::{
    ac_energy, ac_gateaux_derivative, ac_renormalized_energy, ac_renormalized_energy_gap,
    AllenCahnEnergy, GalerkinAllenCahn1d,
};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{norm2, Real};

/// A smooth potential V: R^dim -> R with gradient and Hessian access.
pub trait Potential<T: Real>: Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[T]) -> T;

    fn gradient(&self, x: &[T]) -> Vec<T>;

    /// Writes ∇V(x) into `out`; override to avoid allocating in hot loops.
    fn gradient_into(&self, x: &[T], out: &mut [T]) {
        out.copy_from_slice(&self.gradient(x));
    }

    /// Hessian; defaults to centered differences of the gradient.
    fn hessian(&self, x: &[T]) -> Matrix<T> {
        finite_difference_hessian(self, x)
    }

    /// Ascending Hessian eigenvalues. Override when the Hessian has
    /// structure that makes a dense decomposition wasteful.
    fn hessian_eigenvalues(&self, x: &[T]) -> Vec<T> {
        self.hessian(x).symmetric_eigenvalues()
    }
}

/// Centered-difference Jacobian of the gradient, symmetrized.
pub fn finite_difference_hessian<T: Real, P: Potential<T> + ?Sized>(p: &P, x: &[T]) -> Matrix<T> {
    let n = p.dim();
    let mut h = Matrix::zeros(n);
    let mut xp = x.to_vec();
    let step0 = T::epsilon().cbrt();
    for j in 0..n {
        let step = step0 * T::one().max(x[j].abs());
        xp[j] = x[j] + step;
        let gp = p.gradient(&xp);
        xp[j] = x[j] - step;
        let gm = p.gradient(&xp);
        xp[j] = x[j];
        for i in 0..n {
            h[(i, j)] = (gp[i] - gm[i]) / (step + step);
        }
    }
    let half = T::lit(0.5);
    for i in 0..n {
        for j in (i + 1)..n {
            let s = half * (h[(i, j)] + h[(j, i)]);
            h[(i, j)] = s;
            h[(j, i)] = s;
        }
    }
    h
}

/// V(x) = x⁴/4 − x²/2: minima at ±1, saddle at 0, barrier 1/4.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct QuarticDoubleWell;

pub fn quartic_double_well() -> QuarticDoubleWell {
    QuarticDoubleWell
}

impl<T: Real> Potential<T> for QuarticDoubleWell {
    fn dim(&self) -> usize {
        1
    }

    fn value(&self, x: &[T]) -> T {
        let x2 = x[0] * x[0];
        x2 * x2 / T::lit(4.0) - x2 / T::lit(2.0)
    }

    fn gradient(&self, x: &[T]) -> Vec<T> {
        vec![x[0] * x[0] * x[0] - x[0]]
    }

    fn gradient_into(&self, x: &[T], out: &mut [T]) {
        out[0] = x[0] * x[0] * x[0] - x[0];
    }

    fn hessian(&self, x: &[T]) -> Matrix<T> {
        Matrix::from_diagonal(&[T::lit(3.0) * x[0] * x[0] - T::one()])
    }
}

/// V(x) = ½ Σ a_i x_i²; with all a_i = 1 the process is Ornstein–Uhlenbeck.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic<T> {
    pub stiffness: Vec<T>,
}

impl<T: Real> Quadratic<T> {
    pub fn new(stiffness: Vec<T>) -> Self {
        Self { stiffness }
    }

    /// ½x² in one dimension.
    pub fn ornstein_uhlenbeck() -> Self {
        Self::new(vec![T::one()])
    }
}

impl<T: Real> Potential<T> for Quadratic<T> {
    fn dim(&self) -> usize {
        self.stiffness.len()
    }

    fn value(&self, x: &[T]) -> T {
        self.stiffness
            .iter()
            .zip(x)
            .map(|(&a, &v)| a * v * v)
            .sum::<T>()
            / T::lit(2.0)
    }

    fn gradient(&self, x: &[T]) -> Vec<T> {
        self.stiffness.iter().zip(x).map(|(&a, &v)| a * v).collect()
    }

    fn gradient_into(&self, x: &[T], out: &mut [T]) {
        for ((o, &a), &v) in out.iter_mut().zip(&self.stiffness).zip(x) {
            *o = a * v;
        }
    }

    fn hessian(&self, _x: &[T]) -> Matrix<T> {
        Matrix::from_diagonal(&self.stiffness)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriticalKind {
    Minimum,
    Saddle,
}

/// A nondegenerate critical point of index 0 or 1.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalPoint<T> {
    pub location: Vec<T>,
    pub kind: CriticalKind,
    /// Ascending.
    pub hessian_eigenvalues: Vec<T>,
    /// The unique negative eigenvalue, present iff `kind` is `Saddle`.
    pub lambda_minus: Option<T>,
    pub energy: T,
    pub gradient_norm: T,
}

impl<T: Real> CriticalPoint<T> {
    /// det Hess V at the point.
    pub fn hessian_determinant(&self) -> T {
        self.hessian_eigenvalues
            .iter()
            .copied()
            .fold(T::one(), |a, b| a * b)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions<T> {
    pub tol_crit: T,
    pub max_iterations: usize,
    /// Eigenvalues with |λ| <= degeneracy count as zero. Absolute, since a
    /// Galerkin Hessian's largest eigenvalue grows like N² and says nothing
    /// about how close the point is to degenerate.
    pub degeneracy: T,
}

impl<T: Real> Default for NewtonOptions<T> {
    fn default() -> Self {
        Self {
            tol_crit: T::lit(1e-10),
            max_iterations: 100,
            degeneracy: T::lit(1e-8),
        }
    }
}

/// Newton refinement of a critical point from `guess`, followed by
/// classification from the Hessian spectrum.
pub fn find_critical_point<T: Real, P: Potential<T> + ?Sized>(
    p: &P,
    guess: &[T],
    tol_crit: T,
) -> Result<CriticalPoint<T>> {
    find_critical_point_with(
        p,
        guess,
        NewtonOptions {
            tol_crit,
            ..NewtonOptions::default()
        },
    )
}

pub fn find_critical_point_with<T: Real, P: Potential<T> + ?Sized>(
    p: &P,
    guess: &[T],
    opts: NewtonOptions<T>,
) -> Result<CriticalPoint<T>> {
    if guess.len() != p.dim() {
        return Err(Error::ShapeMismatch(format!(
            "guess of dimension {} for potential of dimension {}",
            guess.len(),
            p.dim()
        )));
    }
    let mut x = guess.to_vec();
    let mut g = p.gradient(&x);
    let mut gnorm = norm2(&g);
    let mut iterations = 0;
    while gnorm >= opts.tol_crit {
        if iterations == opts.max_iterations || !gnorm.is_finite() {
            return Err(Error::NoConvergence {
                iterations,
                residual: gnorm.to_f64_lossy(),
            });
        }
        iterations += 1;
        let h = p.hessian(&x);
        let step = match h.solve(&g) {
            Ok(s) => s,
            Err(_) => {
                return Err(Error::DegenerateHessian {
                    min_abs_eigenvalue: min_abs(&h.symmetric_eigenvalues()).to_f64_lossy(),
                })
            }
        };
        // Backtrack on |grad| so Newton cannot run away from a nearby root.
        let mut scale = T::one();
        let mut accepted = false;
        for _ in 0..30 {
            let trial: Vec<T> = x.iter().zip(&step).map(|(&a, &s)| a - scale * s).collect();
            let gt = p.gradient(&trial);
            let nt = norm2(&gt);
            if nt.is_finite() && nt < gnorm {
                x = trial;
                g = gt;
                gnorm = nt;
                accepted = true;
                break;
            }
            scale = scale * T::lit(0.5);
        }
        if !accepted {
            return Err(Error::NoConvergence {
                iterations,
                residual: gnorm.to_f64_lossy(),
            });
        }
    }
    classify(p, x, gnorm, opts.degeneracy)
}

fn min_abs<T: Real>(ev: &[T]) -> T {
    ev.iter().map(|v| v.abs()).fold(T::infinity(), T::min)
}

fn classify<T: Real, P: Potential<T> + ?Sized>(
    p: &P,
    x: Vec<T>,
    gradient_norm: T,
    degeneracy: T,
) -> Result<CriticalPoint<T>> {
    let ev = p.hessian_eigenvalues(&x);
    let smallest = min_abs(&ev);
    if smallest <= degeneracy {
        return Err(Error::DegenerateHessian {
            min_abs_eigenvalue: smallest.to_f64_lossy(),
        });
    }
    let negatives = ev.iter().filter(|&&v| v < T::zero()).count();
    let (kind, lambda_minus) = match negatives {
        0 => (CriticalKind::Minimum, None),
        1 => (CriticalKind::Saddle, Some(ev[0])),
        k => {
            return Err(Error::WrongKind(format!(
                "critical point of index {k}; only minima and index-1 saddles are supported"
            )))
        }
    };
    Ok(CriticalPoint {
        energy: p.value(&x),
        location: x,
        kind,
        hessian_eigenvalues: ev,
        lambda_minus,
        gradient_norm,
    })
}
