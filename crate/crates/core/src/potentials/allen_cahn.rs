use num_complex::Complex;

use super::Potential;
use crate::determinants::counterterm_trace;
use crate::error::{Error, Result};
use crate::field::{Collocation, SpectralField};
use crate::linalg::Matrix;
use crate::scalar::Real;

/// V(φ) = ∫_{T^d_L} ½|∇φ|² − ½φ² + ¼φ⁴ restricted to fields with cutoff N.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AllenCahnEnergy<T> {
    pub d: usize,
    pub length: T,
    pub cutoff: usize,
    /// Noise intensity ε entering the Wick-renormalized energy V_N.
    pub wick_epsilon: Option<T>,
}

impl<T: Real> AllenCahnEnergy<T> {
    pub fn new(d: usize, length: T, cutoff: usize) -> Result<Self> {
        SpectralField::<T>::zeros(d, length, cutoff)?;
        Ok(Self {
            d,
            length,
            cutoff,
            wick_epsilon: None,
        })
    }

    pub fn with_wick_epsilon(mut self, epsilon: T) -> Self {
        self.wick_epsilon = Some(epsilon);
        self
    }

    fn check(&self, f: &SpectralField<T>) -> Result<()> {
        if f.dim() != self.d || f.length() != self.length || f.cutoff() != self.cutoff {
            return Err(Error::ShapeMismatch(format!(
                "field (d={}, L={}, N={}) for energy (d={}, L={}, N={})",
                f.dim(),
                f.length(),
                f.cutoff(),
                self.d,
                self.length,
                self.cutoff
            )));
        }
        Ok(())
    }

    /// Energy of the constant field φ ≡ c: L^d (c⁴/4 − c²/2).
    pub fn constant_energy(&self, c: T) -> T {
        let c2 = c * c;
        self.length.powi(self.d as i32) * (c2 * c2 / T::lit(4.0) - c2 / T::lit(2.0))
    }
}

/// Σ_k ½((2π|k|/L)² − 1)|c_k|²: the exact quadratic part.
fn quadratic_part<T: Real>(phi: &SpectralField<T>) -> T {
    phi.coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| (phi.k_squared(i) - T::one()) * c.norm_sqr())
        .sum::<T>()
        / T::lit(2.0)
}

/// Truncated Allen–Cahn energy. Quadratic terms in Fourier space, the
/// quartic term on the dealiased collocation grid (exact for cutoff-N fields).
pub fn ac_energy<T: Real>(e: &AllenCahnEnergy<T>, phi: &SpectralField<T>) -> Result<T> {
    e.check(phi)?;
    let grid = Collocation::for_field(phi)?;
    let u = grid.to_grid(phi)?;
    let quartic: Vec<T> = u.iter().map(|&v| v * v * v * v).collect();
    Ok(quadratic_part(phi) + grid.integrate(&quartic) / T::lit(4.0))
}

/// Wick-renormalized energy V_N(φ) = V(φ) − (3/2) ε C_N ‖φ‖²_{L²} with
/// C_N = Tr(P_N(−Δ−1)^{-1}) / L^d; equals `ac_energy` when no ε is set.
pub fn ac_renormalized_energy<T: Real>(
    e: &AllenCahnEnergy<T>,
    phi: &SpectralField<T>,
) -> Result<T> {
    let bare = ac_energy(e, phi)?;
    match e.wick_epsilon {
        None => Ok(bare),
        Some(eps) => {
            let c_n = counterterm_trace(e.d, e.length, e.cutoff)?;
            let l2 = phi.l2_norm();
            Ok(bare - T::lit(1.5) * eps * c_n * l2 * l2)
        }
    }
}

/// ⟨−Δφ − φ + φ³, ψ⟩_{L²}, the directional derivative of V at φ along ψ.
pub fn ac_gateaux_derivative<T: Real>(
    e: &AllenCahnEnergy<T>,
    phi: &SpectralField<T>,
    psi: &SpectralField<T>,
) -> Result<T> {
    e.check(phi)?;
    e.check(psi)?;
    let linear: T = phi
        .coeffs()
        .iter()
        .zip(psi.coeffs())
        .enumerate()
        .map(|(i, (a, b))| (phi.k_squared(i) - T::one()) * (a.re * b.re + a.im * b.im))
        .sum();
    let grid = Collocation::for_field(phi)?;
    let u = grid.to_grid(phi)?;
    let v = grid.to_grid(psi)?;
    let cubic: Vec<T> = u.iter().zip(&v).map(|(&a, &b)| a * a * a * b).collect();
    Ok(linear + grid.integrate(&cubic))
}

/// V_N(φ⋆_trans) − V_N(φ⋆_−) = L²/4 + (3/2) L² ε C_N in d = 2.
pub fn ac_renormalized_energy_gap<T: Real>(e: &AllenCahnEnergy<T>, cutoff: usize) -> Result<T> {
    if e.d != 2 {
        return Err(Error::DomainError(format!(
            "renormalized energy gap is defined for d = 2, got d = {}",
            e.d
        )));
    }
    let eps = e.wick_epsilon.unwrap_or_else(T::zero);
    let l2 = e.length * e.length;
    let c_n = counterterm_trace(2, e.length, cutoff)?;
    Ok(l2 / T::lit(4.0) + T::lit(1.5) * l2 * eps * c_n)
}

/// The 1D Allen–Cahn energy restricted to the Galerkin space H_N, as a
/// finite-dimensional [`Potential`] in the real orthonormal coordinates
/// (a_0, a_1, b_1, …, a_N, b_N) with
/// φ = a_0/√L + Σ_k √(2/L) (a_k cos(2πkx/L) + b_k sin(2πkx/L)).
#[derive(Debug, Clone)]
pub struct GalerkinAllenCahn1d<T: Real> {
    energy: AllenCahnEnergy<T>,
    grid: Collocation<T>,
}

impl<T: Real> GalerkinAllenCahn1d<T> {
    pub fn new(length: T, cutoff: usize) -> Result<Self> {
        Ok(Self {
            energy: AllenCahnEnergy::new(1, length, cutoff)?,
            grid: Collocation::dealiased(1, length, cutoff)?,
        })
    }

    pub fn cutoff(&self) -> usize {
        self.energy.cutoff
    }

    /// Real coordinates of a field.
    pub fn coordinates(&self, phi: &SpectralField<T>) -> Result<Vec<T>> {
        self.energy.check(phi)?;
        let n = self.cutoff();
        let s2 = T::SQRT_2();
        let mut x = Vec::with_capacity(2 * n + 1);
        x.push(phi.coeff([0, 0]).expect("zero mode").re);
        for k in 1..=n as i64 {
            let c = phi.coeff([k, 0]).expect("mode within cutoff");
            x.push(s2 * c.re);
            x.push(-s2 * c.im);
        }
        Ok(x)
    }

    pub fn field(&self, x: &[T]) -> SpectralField<T> {
        let n = self.cutoff();
        let mut f = SpectralField::zeros(1, self.energy.length, n).expect("validated shape");
        let s2 = T::SQRT_2();
        f.set_mode([0, 0], Complex::new(x[0], T::zero()))
            .expect("zero mode");
        for k in 1..=n {
            let c = Complex::new(x[2 * k - 1] / s2, -x[2 * k] / s2);
            f.set_mode([k as i64, 0], c).expect("mode within cutoff");
        }
        f
    }

    /// Linear eigenvalue (2πk/L)² − 1 attached to coordinate `j`.
    fn nu(&self, j: usize) -> T {
        let k = T::from_usize_lossy(j.div_ceil(2));
        let w = T::TAU() / self.energy.length;
        w * w * k * k - T::one()
    }

    fn basis_on_grid(&self, j: usize) -> Vec<T> {
        let l = self.energy.length;
        let m = self.grid.points_per_axis();
        if j == 0 {
            return vec![l.sqrt().recip(); m];
        }
        let k = T::from_usize_lossy(j.div_ceil(2));
        let amp = (T::lit(2.0) / l).sqrt();
        (0..m)
            .map(|p| {
                let arg = T::TAU() * k * self.grid.coordinate(p) / l;
                amp * if j % 2 == 1 { arg.cos() } else { arg.sin() }
            })
            .collect()
    }
}

impl<T: Real> Potential<T> for GalerkinAllenCahn1d<T> {
    fn dim(&self) -> usize {
        2 * self.cutoff() + 1
    }

    fn value(&self, x: &[T]) -> T {
        ac_energy(&self.energy, &self.field(x)).expect("validated shape")
    }

    fn gradient(&self, x: &[T]) -> Vec<T> {
        let phi = self.field(x);
        let u = self.grid.to_grid(&phi).expect("validated shape");
        let cubes: Vec<T> = u.iter().map(|&v| v * v * v).collect();
        let proj = self.grid.from_grid(&cubes, &phi).expect("validated shape");
        let s2 = T::SQRT_2();
        let mut g = Vec::with_capacity(x.len());
        g.push(self.nu(0) * x[0] + proj.coeff([0, 0]).expect("zero mode").re);
        for k in 1..=self.cutoff() {
            let q = proj.coeff([k as i64, 0]).expect("mode within cutoff");
            g.push(self.nu(2 * k - 1) * x[2 * k - 1] + s2 * q.re);
            g.push(self.nu(2 * k) * x[2 * k] - s2 * q.im);
        }
        g
    }

    fn hessian(&self, x: &[T]) -> Matrix<T> {
        let n = self.dim();
        let u = self.grid.to_grid(&self.field(x)).expect("validated shape");
        let w: Vec<T> = u
            .iter()
            .map(|&v| T::lit(3.0) * v * v * self.grid.cell_volume())
            .collect();
        let basis: Vec<Vec<T>> = (0..n).map(|j| self.basis_on_grid(j)).collect();
        let mut h = Matrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                let mut s: T = basis[i]
                    .iter()
                    .zip(&basis[j])
                    .zip(&w)
                    .map(|((&a, &b), &c)| a * b * c)
                    .sum();
                if i == j {
                    s += self.nu(i);
                }
                h[(i, j)] = s;
                h[(j, i)] = s;
            }
        }
        h
    }

    /// At constant fields the Hessian is diagonal: ν_k + 3c².
    fn hessian_eigenvalues(&self, x: &[T]) -> Vec<T> {
        if x[1..].iter().all(|&v| v == T::zero()) {
            let c = x[0] / self.energy.length.sqrt();
            let shift = T::lit(3.0) * c * c;
            let mut ev: Vec<T> = (0..self.dim()).map(|j| self.nu(j) + shift).collect();
            ev.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
            ev
        } else {
            self.hessian(x).symmetric_eigenvalues()
        }
    }
}
