//! Real scalar fields on the torus T^d_L (d = 1, 2), stored as coefficients
//! in the orthonormal Fourier basis e_k(x) = L^{-d/2} exp(2πi k·x / L),
//! truncated to the square cutoff max_i |k_i| <= N.
//!
//! The same square cutoff is used by the spectral determinants, the
//! counterterm trace and the SPDE integrator.

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde_json::json;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Wave-vector of a stored mode (second component is 0 when d = 1).
pub type WaveVector = [i64; 2];

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField<T> {
    d: usize,
    length: T,
    cutoff: usize,
    coeffs: Vec<Complex<T>>,
}

fn check_shape<T: Real>(d: usize, length: T) -> Result<()> {
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
    Ok(())
}

impl<T: Real> SpectralField<T> {
    pub fn zeros(d: usize, length: T, cutoff: usize) -> Result<Self> {
        check_shape(d, length)?;
        let per_axis = 2 * cutoff + 1;
        Ok(Self {
            d,
            length,
            cutoff,
            coeffs: vec![Complex::new(T::zero(), T::zero()); per_axis.pow(d as u32)],
        })
    }

    /// The constant field φ ≡ c.
    pub fn constant(d: usize, length: T, cutoff: usize, c: T) -> Result<Self> {
        let mut f = Self::zeros(d, length, cutoff)?;
        let idx = f.index_of([0, 0]).expect("zero mode present");
        f.coeffs[idx] = Complex::new(c * f.volume().sqrt(), T::zero());
        Ok(f)
    }

    /// Builds a field from raw coefficients in storage order.
    pub fn from_coeffs(
        d: usize,
        length: T,
        cutoff: usize,
        coeffs: Vec<Complex<T>>,
    ) -> Result<Self> {
        let mut f = Self::zeros(d, length, cutoff)?;
        if coeffs.len() != f.coeffs.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} coefficients for {} modes",
                coeffs.len(),
                f.coeffs.len()
            )));
        }
        f.coeffs = coeffs;
        Ok(f)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn length(&self) -> T {
        self.length
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// L^d.
    pub fn volume(&self) -> T {
        self.length.powi(self.d as i32)
    }

    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    fn per_axis(&self) -> usize {
        2 * self.cutoff + 1
    }

    /// Wave-vector stored at position `idx`.
    pub fn wave_vector(&self, idx: usize) -> WaveVector {
        let n = self.cutoff as i64;
        let p = self.per_axis();
        if self.d == 1 {
            [idx as i64 - n, 0]
        } else {
            [(idx / p) as i64 - n, (idx % p) as i64 - n]
        }
    }

    /// Storage position of wave-vector `k`, if inside the cutoff.
    pub fn index_of(&self, k: WaveVector) -> Option<usize> {
        let n = self.cutoff as i64;
        if k[0].abs() > n || k[1].abs() > n || (self.d == 1 && k[1] != 0) {
            return None;
        }
        let p = self.per_axis();
        Some(if self.d == 1 {
            (k[0] + n) as usize
        } else {
            (k[0] + n) as usize * p + (k[1] + n) as usize
        })
    }

    /// (2π|k|/L)² for the mode stored at `idx`.
    pub fn k_squared(&self, idx: usize) -> T {
        let [a, b] = self.wave_vector(idx);
        let w = T::TAU() / self.length;
        w * w * T::lit((a * a + b * b) as f64)
    }

    pub fn coeff(&self, k: WaveVector) -> Option<Complex<T>> {
        self.index_of(k).map(|i| self.coeffs[i])
    }

    /// Sets the coefficient of `k` and its conjugate partner `-k`, keeping
    /// the field real. The zero mode keeps only the real part.
    pub fn set_mode(&mut self, k: WaveVector, value: Complex<T>) -> Result<()> {
        let i = self.index_of(k).ok_or_else(|| {
            Error::OutOfRange(format!("mode {k:?} outside cutoff {}", self.cutoff))
        })?;
        let j = self.index_of([-k[0], -k[1]]).expect("cutoff is symmetric");
        if i == j {
            self.coeffs[i] = Complex::new(value.re, T::zero());
        } else {
            self.coeffs[i] = value;
            self.coeffs[j] = value.conj();
        }
        Ok(())
    }

    /// Largest |c(-k) - conj c(k)| over all modes (zero for a real field).
    pub fn conjugate_asymmetry(&self) -> T {
        let last = self.coeffs.len() - 1;
        (0..self.coeffs.len())
            .map(|i| (self.coeffs[last - i] - self.coeffs[i].conj()).norm())
            .fold(T::zero(), T::max)
    }

    /// Projects onto real fields: c(k) <- (c(k) + conj c(-k)) / 2.
    pub fn symmetrize(&mut self) {
        let half = T::lit(0.5);
        let old = self.coeffs.clone();
        // Storage is point-symmetric: -k lives at the mirrored position.
        let last = old.len() - 1;
        for (i, c) in self.coeffs.iter_mut().enumerate() {
            *c = (old[i] + old[last - i].conj()).scale(half);
        }
    }

    pub fn is_compatible(&self, other: &Self) -> bool {
        self.d == other.d && self.cutoff == other.cutoff && self.length == other.length
    }

    pub fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.is_compatible(other) {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!(
                "fields (d={}, L={}, N={}) and (d={}, L={}, N={})",
                self.d, self.length, self.cutoff, other.d, other.length, other.cutoff
            )))
        }
    }

    /// Real L² inner product ⟨self, other⟩.
    pub fn inner(&self, other: &Self) -> Result<T> {
        self.check_compatible(other)?;
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.re * b.re + a.im * b.im)
            .sum())
    }

    /// ‖φ‖_{L²} by Parseval.
    pub fn l2_norm(&self) -> T {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<T>().sqrt()
    }

    /// Sobolev norm √(Σ_k (1 + (2π|k|/L)²)^s |c_k|²).
    pub fn hs_norm(&self, s: T) -> T {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| (T::one() + self.k_squared(i)).powf(s) * c.norm_sqr())
            .sum::<T>()
            .sqrt()
    }

    /// Spatial average of the field.
    pub fn mean_value(&self) -> T {
        let i = self.index_of([0, 0]).expect("zero mode present");
        self.coeffs[i].re / self.volume().sqrt()
    }

    /// self + a·other.
    pub fn axpy(&self, a: T, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(x, y)| x + y.scale(a))
            .collect();
        Ok(Self {
            coeffs,
            ..self.clone()
        })
    }

    pub fn scaled(&self, a: T) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| c.scale(a)).collect(),
            ..self.clone()
        }
    }

    /// Evaluates the field at a point by direct summation.
    pub fn eval_at(&self, x: [T; 2]) -> T {
        let w = T::TAU() / self.length;
        let norm = self.volume().sqrt().recip();
        let mut acc = T::zero();
        for (i, c) in self.coeffs.iter().enumerate() {
            let [a, b] = self.wave_vector(i);
            let phase = w * (T::lit(a as f64) * x[0] + T::lit(b as f64) * x[1]);
            acc += c.re * phase.cos() - c.im * phase.sin();
        }
        acc * norm
    }

    /// JSON object describing the field at time `t` (one line of a
    /// JSON-lines snapshot stream).
    pub fn to_json(&self, t: T) -> serde_json::Value {
        json!({
            "t": t.to_f64_lossy(),
            "d": self.d,
            "L": self.length.to_f64_lossy(),
            "N": self.cutoff,
            "re": self.coeffs.iter().map(|c| c.re.to_f64_lossy()).collect::<Vec<_>>(),
            "im": self.coeffs.iter().map(|c| c.im.to_f64_lossy()).collect::<Vec<_>>(),
        })
    }

    /// Inverse of [`SpectralField::to_json`]; returns `(t, field)`.
    pub fn from_json(v: &serde_json::Value) -> Result<(T, Self)> {
        let bad =
            |what: &str| Error::InvalidArgument(format!("snapshot missing or malformed `{what}`"));
        let t = v["t"].as_f64().ok_or_else(|| bad("t"))?;
        let d = v["d"].as_u64().ok_or_else(|| bad("d"))? as usize;
        let length = v["L"].as_f64().ok_or_else(|| bad("L"))?;
        let cutoff = v["N"].as_u64().ok_or_else(|| bad("N"))? as usize;
        let parse = |key: &str| -> Result<Vec<f64>> {
            v[key]
                .as_array()
                .ok_or_else(|| bad(key))?
                .iter()
                .map(|x| x.as_f64().ok_or_else(|| bad(key)))
                .collect()
        };
        let re = parse("re")?;
        let im = parse("im")?;
        if re.len() != im.len() {
            return Err(bad("im"));
        }
        let coeffs = re
            .iter()
            .zip(&im)
            .map(|(&a, &b)| Complex::new(T::lit(a), T::lit(b)))
            .collect();
        Ok((
            T::lit(t),
            Self::from_coeffs(d, T::lit(length), cutoff, coeffs)?,
        ))
    }
}

/// Collocation grid of M points per axis with planned FFTs, used for the
/// pointwise nonlinearities. With M >= 4N + 1 every product of up to four
/// truncated fields integrates exactly and P_N(φ³) is alias-free.
#[derive(Clone)]
pub struct Collocation<T: Real> {
    d: usize,
    cutoff: usize,
    m: usize,
    length: T,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

impl<T: Real> std::fmt::Debug for Collocation<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Collocation")
            .field("d", &self.d)
            .field("cutoff", &self.cutoff)
            .field("m", &self.m)
            .field("length", &self.length)
            .finish()
    }
}

impl<T: Real> Collocation<T> {
    /// Dealiased grid (M = 2(2N+1)) for fields of the given shape.
    pub fn dealiased(d: usize, length: T, cutoff: usize) -> Result<Self> {
        Self::with_points(d, length, cutoff, 2 * (2 * cutoff + 1))
    }

    /// Grid of `ceil(factor·(2N+1))` points per axis.
    pub fn with_factor(d: usize, length: T, cutoff: usize, factor: f64) -> Result<Self> {
        if !(factor >= 1.0) {
            return Err(Error::InvalidArgument(format!("grid factor {factor} < 1")));
        }
        let m = (factor * (2 * cutoff + 1) as f64).ceil() as usize;
        Self::with_points(d, length, cutoff, m)
    }

    pub fn with_points(d: usize, length: T, cutoff: usize, m: usize) -> Result<Self> {
        check_shape(d, length)?;
        if m < 2 * cutoff + 1 {
            return Err(Error::InvalidArgument(format!(
                "{m} grid points cannot resolve cutoff {cutoff}"
            )));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            d,
            cutoff,
            m,
            length,
            forward: planner.plan_fft_forward(m),
            inverse: planner.plan_fft_inverse(m),
        })
    }

    pub fn for_field(field: &SpectralField<T>) -> Result<Self> {
        Self::dealiased(field.dim(), field.length(), field.cutoff())
    }

    pub fn points_per_axis(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.m.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    /// Quadrature weight (L/M)^d of each grid point.
    pub fn cell_volume(&self) -> T {
        (self.length / T::from_usize_lossy(self.m)).powi(self.d as i32)
    }

    /// Grid coordinate of axis index `j`.
    pub fn coordinate(&self, j: usize) -> T {
        self.length * T::from_usize_lossy(j) / T::from_usize_lossy(self.m)
    }

    fn check(&self, f: &SpectralField<T>) -> Result<()> {
        if f.dim() != self.d || f.cutoff() != self.cutoff || f.length() != self.length {
            return Err(Error::ShapeMismatch(format!(
                "field (d={}, N={}) on grid (d={}, N={})",
                f.dim(),
                f.cutoff(),
                self.d,
                self.cutoff
            )));
        }
        Ok(())
    }

    fn slot(&self, k: WaveVector) -> usize {
        let m = self.m as i64;
        let a = k[0].rem_euclid(m) as usize;
        if self.d == 1 {
            a
        } else {
            a * self.m + k[1].rem_euclid(m) as usize
        }
    }

    fn transform(&self, buf: &mut [Complex<T>], fft: &Arc<dyn Fft<T>>) {
        fft.process(buf);
        if self.d == 2 {
            transpose(buf, self.m);
            fft.process(buf);
            transpose(buf, self.m);
        }
    }

    /// Complex grid values (imaginary parts vanish for real fields).
    pub fn to_grid_complex(&self, f: &SpectralField<T>) -> Result<Vec<Complex<T>>> {
        self.check(f)?;
        let mut buf = vec![Complex::new(T::zero(), T::zero()); self.len()];
        let norm = f.volume().sqrt().recip();
        for (i, c) in f.coeffs().iter().enumerate() {
            buf[self.slot(f.wave_vector(i))] = c.scale(norm);
        }
        self.transform(&mut buf, &self.inverse);
        Ok(buf)
    }

    /// Real grid values, row-major (axis 0 slowest).
    pub fn to_grid(&self, f: &SpectralField<T>) -> Result<Vec<T>> {
        Ok(self.to_grid_complex(f)?.into_iter().map(|z| z.re).collect())
    }

    /// Projects grid values onto the modes of `template`'s shape. Exact for
    /// band-limited data; otherwise returns the aliased discrete projection.
    pub fn from_grid(&self, values: &[T], template: &SpectralField<T>) -> Result<SpectralField<T>> {
        self.check(template)?;
        if values.len() != self.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} grid values for {} points",
                values.len(),
                self.len()
            )));
        }
        let mut buf: Vec<Complex<T>> = values.iter().map(|&v| Complex::new(v, T::zero())).collect();
        self.transform(&mut buf, &self.forward);
        let scale = template.volume().sqrt() / T::from_usize_lossy(self.len());
        let mut out = SpectralField::zeros(self.d, self.length, self.cutoff)?;
        for i in 0..out.len() {
            let slot = self.slot(out.wave_vector(i));
            out.coeffs[i] = buf[slot].scale(scale);
        }
        out.symmetrize();
        Ok(out)
    }

    /// ∫ f over the torus by the grid rule (exact for trigonometric
    /// polynomials of degree < M).
    pub fn integrate(&self, values: &[T]) -> T {
        values.iter().copied().sum::<T>() * self.cell_volume()
    }
}

fn transpose<T: Copy>(buf: &mut [T], m: usize) {
    for i in 0..m {
        for j in (i + 1)..m {
            buf.swap(i * m + j, j * m + i);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn cosine_field(d: usize, l: f64, n: usize, amp: f64) -> SpectralField<f64> {
        // amp·cos(2πx/L) = amp·L^{d/2}/2 (e_1 + e_{-1}) / ... in the orthonormal basis.
        let mut f = SpectralField::zeros(d, l, n).unwrap();
        let c = amp * f.volume().sqrt() / 2.0;
        f.set_mode([1, 0], Complex::new(c, 0.0)).unwrap();
        f
    }

    #[test]
    fn constant_field_grid_values() {
        for d in [1, 2] {
            let f = SpectralField::constant(d, 3.0_f64, 4, -1.0).unwrap();
            let g = Collocation::for_field(&f).unwrap();
            for v in g.to_grid(&f).unwrap() {
                assert_relative_eq!(v, -1.0, epsilon = 1e-14);
            }
            assert_relative_eq!(f.mean_value(), -1.0, epsilon = 1e-15);
            assert_relative_eq!(f.l2_norm(), f.volume().sqrt(), epsilon = 1e-14);
        }
    }

    #[test]
    fn cosine_matches_pointwise_evaluation() {
        let l = 2.5;
        let f = cosine_field(2, l, 3, 0.7);
        let g = Collocation::for_field(&f).unwrap();
        let vals = g.to_grid(&f).unwrap();
        let m = g.points_per_axis();
        for i in 0..m {
            for j in 0..m {
                let x = g.coordinate(i);
                let want = 0.7 * (2.0 * PI * x / l).cos();
                assert_relative_eq!(vals[i * m + j], want, epsilon = 1e-13);
                assert_relative_eq!(f.eval_at([x, g.coordinate(j)]), want, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn grid_roundtrip_is_identity_on_band_limited_fields() {
        let mut f = SpectralField::<f64>::zeros(2, 4.0, 3).unwrap();
        f.set_mode([1, -2], Complex::new(0.3, -0.2)).unwrap();
        f.set_mode([0, 3], Complex::new(-0.1, 0.5)).unwrap();
        f.set_mode([0, 0], Complex::new(1.5, 0.0)).unwrap();
        let g = Collocation::for_field(&f).unwrap();
        let back = g.from_grid(&g.to_grid(&f).unwrap(), &f).unwrap();
        for (a, b) in f.coeffs().iter().zip(back.coeffs()) {
            assert!((a - b).norm() < 1e-13);
        }
        assert!(f.conjugate_asymmetry() == 0.0);
    }

    #[test]
    fn hs_norm_of_constant_and_l2_reduction() {
        let f = SpectralField::constant(1, 2.0, 5, 0.5).unwrap();
        assert_relative_eq!(f.hs_norm(-0.5), 0.5 * 2.0f64.sqrt(), epsilon = 1e-15);
        let g = cosine_field(1, 2.0, 5, 1.0).axpy(1.0, &f).unwrap();
        assert_relative_eq!(g.hs_norm(0.0), g.l2_norm(), epsilon = 1e-15);
        assert!(g.hs_norm(-0.5) < g.hs_norm(0.0));
        assert!(g.hs_norm(-1.0) < g.hs_norm(-0.5));
    }

    #[test]
    fn json_roundtrip() {
        let f = cosine_field(1, 2.0, 2, 0.3);
        let (t, back) = SpectralField::<f64>::from_json(&f.to_json(1.25)).unwrap();
        assert_eq!(t, 1.25);
        assert_eq!(back, f);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(SpectralField::<f64>::zeros(3, 1.0, 2).is_err());
        assert!(SpectralField::<f64>::zeros(1, -1.0, 2).is_err());
        let a = SpectralField::<f64>::zeros(1, 1.0, 2).unwrap();
        let b = SpectralField::<f64>::zeros(1, 1.0, 3).unwrap();
        assert!(matches!(a.inner(&b), Err(Error::ShapeMismatch(_))));
        assert!(Collocation::<f64>::with_points(1, 1.0, 4, 8).is_err());
    }
}
