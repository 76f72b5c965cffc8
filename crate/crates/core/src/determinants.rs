//! Spectra of −Δ − 1 on the torus T^d_L and the determinants built from them:
//! the Fredholm determinant det(1 + 3(−Δ−1)^{-1}), the Carleman–Fredholm
//! determinant det₂, and the Wick counterterm trace.
//!
//! Products are accumulated as (sign, log-magnitude) so that 2D products over
//! (2N+1)² modes neither overflow nor underflow.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Eigenvalues ν_k = (2π|k|/L)² − 1 of −Δ − 1 over the square cutoff max_i |k_i| <= N.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusSpectrum<T> {
    pub d: usize,
    pub length: T,
    pub cutoff: usize,
}

impl<T: Real> TorusSpectrum<T> {
    pub fn new(d: usize, length: T, cutoff: usize) -> Result<Self> {
        if d != 1 && d != 2 {
            return Err(Error::DomainError(format!(
                "dimension d = {d}, expected 1 or 2"
            )));
        }
        if !(length > T::zero()) || !length.is_finite() {
            return Err(Error::DomainError(format!(
                "torus length L = {length} must be positive"
            )));
        }
        Ok(Self { d, length, cutoff })
    }

    /// ν for a squared integer wave number |k|².
    pub fn eigenvalue_of(&self, k_squared: i64) -> T {
        let w = T::TAU() / self.length;
        w * w * T::from_i64(k_squared).expect("wave number representable") - T::one()
    }

    /// Squared wave numbers of every retained mode, in lexicographic order of k.
    pub fn wave_numbers(&self) -> impl Iterator<Item = i64> + '_ {
        let n = self.cutoff as i64;
        let outer = if self.d == 2 { -n..=n } else { 0..=0 };
        outer.flat_map(move |k1| (-n..=n).map(move |k2| k1 * k1 + k2 * k2))
    }

    pub fn eigenvalues(&self) -> Vec<T> {
        self.wave_numbers()
            .map(|k2| self.eigenvalue_of(k2))
            .collect()
    }

    pub fn negative_count(&self) -> usize {
        self.eigenvalues()
            .iter()
            .filter(|&&v| v < T::zero())
            .count()
    }

    fn nonzero_eigenvalues(&self) -> Result<Vec<T>> {
        let ev = self.eigenvalues();
        if ev.iter().any(|&v| v == T::zero()) {
            return Err(Error::DomainError(format!(
                "−Δ − 1 has a zero eigenvalue on the torus of side {}",
                self.length
            )));
        }
        Ok(ev)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DeterminantKind {
    Fredholm,
    CarlemanFredholm,
}

/// A truncated spectral determinant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeterminantResult<T> {
    /// Signed value; may be ±∞ when the magnitude leaves the float range.
    pub value: T,
    pub abs_value: T,
    pub log_abs: T,
    /// ±1.
    pub sign: T,
    pub cutoff: usize,
    /// Upper bound on |log det − log det_N| from the dropped modes
    /// (infinite when the untruncated product diverges).
    pub tail_estimate: T,
    pub kind: DeterminantKind,
}

impl<T: Real> DeterminantResult<T> {
    fn from_log(
        sign: T,
        log_abs: T,
        cutoff: usize,
        tail_estimate: T,
        kind: DeterminantKind,
    ) -> Self {
        let abs_value = log_abs.exp();
        Self {
            value: sign * abs_value,
            abs_value,
            log_abs,
            sign,
            cutoff,
            tail_estimate,
            kind,
        }
    }
}

fn check_subcritical<T: Real>(length: T) -> Result<()> {
    if !(length > T::zero()) || length >= T::TAU() {
        return Err(Error::DomainError(format!(
            "determinants require 0 < L < 2π, got L = {length}"
        )));
    }
    Ok(())
}

/// (sign, Σ log|1 + 3/ν|, Σ 3/ν) over the retained modes.
fn log_product<T: Real>(spec: &TorusSpectrum<T>) -> Result<(T, T, T)> {
    let three = T::lit(3.0);
    let mut sign = T::one();
    let mut log_abs = T::zero();
    let mut trace = T::zero();
    for nu in spec.nonzero_eigenvalues()? {
        let x = three / nu;
        let factor = T::one() + x;
        if factor < T::zero() {
            sign = -sign;
        }
        log_abs += factor.abs().ln();
        trace += x;
    }
    Ok((sign, log_abs, trace))
}

/// Σ_{k > N} f(k) <= f(N+1) + ∫_{N+1}^∞ f for decreasing f.
fn fredholm_tail_1d<T: Real>(length: T, cutoff: usize) -> T {
    let a = T::TAU() / length;
    let x = a * T::from_usize_lossy(cutoff + 1);
    let first = T::one() / (x * x - T::one());
    let integral = ((x + T::one()) / (x - T::one())).ln() / (T::lit(2.0) * a);
    T::lit(6.0) * (first + integral)
}

fn carleman_tail<T: Real>(d: usize, length: T, cutoff: usize) -> T {
    let a = T::TAU() / length;
    let a2 = a * a;
    let m = T::from_usize_lossy(cutoff + 1);
    let q = a2 * m * m - T::one();
    if d == 1 {
        // Two modes per |k|, each bounded by (9/2)/ν².
        let c = (T::one() - T::one() / (a2 * m * m)).powi(2);
        let integral = T::one() / (T::lit(3.0) * c * a2 * a2 * m * m * m);
        T::lit(9.0) * (T::one() / (q * q) + integral)
    } else {
        // 8m modes on the shell max|k_i| = m, each with ν >= a²m² − 1.
        let first = m / (q * q);
        let integral = T::one() / (T::lit(2.0) * a2 * q);
        T::lit(36.0) * (first + integral)
    }
}

/// ∏_{max|k_i| <= N} (1 + 3/ν_k). Finite as N → ∞ only in d = 1.
pub fn fredholm_det<T: Real>(d: usize, length: T, cutoff: usize) -> Result<DeterminantResult<T>> {
    let spec = TorusSpectrum::new(d, length, cutoff)?;
    check_subcritical(length)?;
    let (sign, log_abs, _) = log_product(&spec)?;
    let tail = if d == 1 {
        fredholm_tail_1d(length, cutoff)
    } else {
        T::infinity()
    };
    Ok(DeterminantResult::from_log(
        sign,
        log_abs,
        cutoff,
        tail,
        DeterminantKind::Fredholm,
    ))
}

/// Truncated det(1 + 3(−Δ−1)^{-1}) on the circle of length L.
pub fn fredholm_det_1d<T: Real>(length: T, cutoff: usize) -> Result<DeterminantResult<T>> {
    fredholm_det(1, length, cutoff)
}

/// −sinh²(L/√2) / sin²(L/2).
pub fn fredholm_closed_form<T: Real>(length: T) -> Result<T> {
    check_subcritical(length)?;
    let s = (length / T::SQRT_2()).sinh();
    let t = (length / T::lit(2.0)).sin();
    Ok(-(s * s) / (t * t))
}

/// ∏ (1 + 3/ν_k) e^{−3/ν_k}, accumulated mode by mode.
pub fn carleman_det<T: Real>(d: usize, length: T, cutoff: usize) -> Result<DeterminantResult<T>> {
    let spec = TorusSpectrum::new(d, length, cutoff)?;
    check_subcritical(length)?;
    let three = T::lit(3.0);
    let mut sign = T::one();
    let mut log_abs = T::zero();
    for nu in spec.nonzero_eigenvalues()? {
        let x = three / nu;
        let factor = T::one() + x;
        if factor < T::zero() {
            sign = -sign;
        }
        log_abs += factor.abs().ln() - x;
    }
    Ok(DeterminantResult::from_log(
        sign,
        log_abs,
        cutoff,
        carleman_tail(d, length, cutoff),
        DeterminantKind::CarlemanFredholm,
    ))
}

/// Truncated det₂(1 + 3(−Δ−1)^{-1}) on the 2D torus of side L.
pub fn carleman_det_2d<T: Real>(length: T, cutoff: usize) -> Result<DeterminantResult<T>> {
    carleman_det(2, length, cutoff)
}

/// det₂ assembled from two separate reductions: log|∏(1 + 3/ν)| − 3 Tr.
pub fn carleman_det_split<T: Real>(
    d: usize,
    length: T,
    cutoff: usize,
) -> Result<DeterminantResult<T>> {
    let spec = TorusSpectrum::new(d, length, cutoff)?;
    check_subcritical(length)?;
    let (sign, log_abs, trace) = log_product(&spec)?;
    Ok(DeterminantResult::from_log(
        sign,
        log_abs - trace,
        cutoff,
        carleman_tail(d, length, cutoff),
        DeterminantKind::CarlemanFredholm,
    ))
}

/// Tr(P_N(−Δ−1)^{-1}) = Σ_{max|k_i| <= N} 1/ν_k.
pub fn inverse_trace<T: Real>(d: usize, length: T, cutoff: usize) -> Result<T> {
    let spec = TorusSpectrum::new(d, length, cutoff)?;
    Ok(spec
        .nonzero_eigenvalues()?
        .into_iter()
        .map(|nu| nu.recip())
        .sum())
}

/// Wick counterterm C_N = Tr(P_N(−Δ−1)^{-1}) / L^d; diverges like ln N / (2π) in d = 2.
pub fn counterterm_trace<T: Real>(d: usize, length: T, cutoff: usize) -> Result<T> {
    Ok(inverse_trace(d, length, cutoff)? / length.powi(d as i32))
}
