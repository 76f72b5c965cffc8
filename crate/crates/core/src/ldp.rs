//! Freidlin–Wentzell rate functionals I(γ) = ½∫‖γ̇ + ∇V(γ)‖² dt on
//! piecewise-linear discrete paths.
//!
//! Quadrature is the midpoint rule on each segment with the segment's
//! difference quotient as velocity. With that choice the cross term
//! Σ Δγ·∇V(γ_mid) flips sign exactly under time reversal, so
//! I(reverse γ) − I(γ) = 2[V(γ(0)) − V(γ(T))] + O(Δt²).

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::field::{Collocation, SpectralField};
use crate::potentials::Potential;
use crate::scalar::Real;

/// Times t_0 < … < t_K with one state per time.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePath<T, S> {
    times: Vec<T>,
    points: Vec<S>,
}

pub type VectorPath<T> = DiscretePath<T, Vec<T>>;
pub type FieldPath<T> = DiscretePath<T, SpectralField<T>>;

impl<T: Real, S> DiscretePath<T, S> {
    fn validate(times: &[T], n_points: usize) -> Result<()> {
        if times.len() != n_points {
            return Err(Error::ShapeMismatch(format!(
                "{} times for {} states",
                times.len(),
                n_points
            )));
        }
        if times.len() < 2 || times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::DegeneratePath);
        }
        Ok(())
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn points(&self) -> &[S] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn duration(&self) -> T {
        self.times[self.times.len() - 1] - self.times[0]
    }

    pub fn start(&self) -> &S {
        &self.points[0]
    }

    pub fn end(&self) -> &S {
        &self.points[self.points.len() - 1]
    }
}

impl<T: Real, S: Clone> DiscretePath<T, S> {
    /// The path run backwards, s ↦ γ(t_0 + t_K − s).
    pub fn reversed(&self) -> Self {
        let (t0, t1) = (self.times[0], self.times[self.times.len() - 1]);
        Self {
            times: self.times.iter().rev().map(|&t| t0 + t1 - t).collect(),
            points: self.points.iter().rev().cloned().collect(),
        }
    }

    /// Joins `other` after `self`, shifting its clock so it starts where
    /// `self` ends; the first node of `other` is dropped.
    pub fn concat(&self, other: &Self) -> Self {
        let shift = self.times[self.times.len() - 1] - other.times[0];
        let mut out = self.clone();
        out.times
            .extend(other.times.iter().skip(1).map(|&t| t + shift));
        out.points.extend(other.points.iter().skip(1).cloned());
        out
    }
}

impl<T: Real> VectorPath<T> {
    pub fn new(times: Vec<T>, points: Vec<Vec<T>>) -> Result<Self> {
        Self::validate(&times, points.len())?;
        let n = points[0].len();
        if let Some(p) = points.iter().find(|p| p.len() != n) {
            return Err(Error::ShapeMismatch(format!(
                "state of dimension {} in a path of dimension {n}",
                p.len()
            )));
        }
        Ok(Self { times, points })
    }

    /// States sampled every `dt` from t = 0, as produced by the simulators.
    pub fn uniform(dt: T, points: Vec<Vec<T>>) -> Result<Self> {
        let times = (0..points.len())
            .map(|i| T::from_usize_lossy(i) * dt)
            .collect();
        Self::new(times, points)
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    /// Piecewise-linear interpolation, clamped to the end points.
    pub fn at(&self, t: T) -> Vec<T> {
        let k = self.times.partition_point(|&s| s <= t);
        if k == 0 {
            return self.points[0].clone();
        }
        if k == self.times.len() {
            return self.end().clone();
        }
        let (ta, tb) = (self.times[k - 1], self.times[k]);
        let w = (t - ta) / (tb - ta);
        self.points[k - 1]
            .iter()
            .zip(&self.points[k])
            .map(|(&a, &b)| a + w * (b - a))
            .collect()
    }

    /// CSV with a `t,x0,x1,…` header and one row per node.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        let header: Vec<String> = (0..self.dim()).map(|i| format!("x{i}")).collect();
        writeln!(out, "t,{}", header.join(","))?;
        for (t, p) in self.times.iter().zip(&self.points) {
            let row: Vec<String> = p.iter().map(|v| v.to_string()).collect();
            writeln!(out, "{t},{}", row.join(","))?;
        }
        Ok(())
    }

    /// Reads the format of [`VectorPath::write_csv`]; `#` lines are skipped.
    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut times = Vec::new();
        let mut points = Vec::new();
        let mut header_seen = false;
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if !header_seen {
                header_seen = true;
                if line.starts_with('t') {
                    continue;
                }
            }
            let vals: Vec<T> = line
                .split(',')
                .map(|s| {
                    s.trim().parse::<f64>().map(T::lit).map_err(|_| {
                        Error::InvalidArgument(format!("line {}: bad number `{s}`", lineno + 1))
                    })
                })
                .collect::<Result<_>>()?;
            if vals.len() < 2 {
                return Err(Error::InvalidArgument(format!(
                    "line {}: need t and a state",
                    lineno + 1
                )));
            }
            times.push(vals[0]);
            points.push(vals[1..].to_vec());
        }
        Self::new(times, points)
    }
}

impl<T: Real> FieldPath<T> {
    pub fn new(times: Vec<T>, points: Vec<SpectralField<T>>) -> Result<Self> {
        Self::validate(&times, points.len())?;
        for p in &points[1..] {
            points[0].check_compatible(p)?;
        }
        Ok(Self { times, points })
    }

    /// One JSON object per line, as written by [`SpectralField::to_json`].
    pub fn write_json_lines<W: Write>(&self, out: &mut W) -> Result<()> {
        for (t, p) in self.times.iter().zip(&self.points) {
            writeln!(out, "{}", p.to_json(*t))?;
        }
        Ok(())
    }

    pub fn read_json_lines<R: BufRead>(input: R) -> Result<Self> {
        let mut times = Vec::new();
        let mut points = Vec::new();
        for line in input.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let v: serde_json::Value = serde_json::from_str(&line)
                .map_err(|e| Error::InvalidArgument(format!("bad snapshot: {e}")))?;
            let (t, f) = SpectralField::from_json(&v)?;
            times.push(t);
            points.push(f);
        }
        Self::new(times, points)
    }
}

/// ½∫‖γ̇ + ∇V(γ)‖² dt by the midpoint rule on each segment.
pub fn rate_functional_sde<T: Real, P: Potential<T> + ?Sized>(
    path: &VectorPath<T>,
    p: &P,
) -> Result<T> {
    if path.dim() != p.dim() {
        return Err(Error::ShapeMismatch(format!(
            "path in R^{} for a potential on R^{}",
            path.dim(),
            p.dim()
        )));
    }
    let n = path.dim();
    let mut mid = vec![T::zero(); n];
    let mut grad = vec![T::zero(); n];
    let mut total = T::zero();
    for k in 0..path.len() - 1 {
        let dt = path.times[k + 1] - path.times[k];
        let (a, b) = (&path.points[k], &path.points[k + 1]);
        for i in 0..n {
            mid[i] = (a[i] + b[i]) / T::lit(2.0);
        }
        p.gradient_into(&mid, &mut grad);
        let sq: T = (0..n)
            .map(|i| {
                let r = (b[i] - a[i]) / dt + grad[i];
                r * r
            })
            .sum();
        total += sq * dt;
    }
    Ok(total / T::lit(2.0))
}

/// ½∫∫[∂_tγ − ∂²_xγ − γ + γ³]² dx dt for d = 1 fields of a common shape.
/// The cubic is projected onto the path's modes, so the spatial integral
/// is Parseval's sum over the retained modes and the residual vanishes on
/// Galerkin gradient-flow trajectories.
pub fn rate_functional_ac_1d<T: Real>(path: &FieldPath<T>, length: T) -> Result<T> {
    let f0 = path.start();
    if f0.dim() != 1 || f0.length() != length {
        return Err(Error::ShapeMismatch(format!(
            "expected d = 1 fields on a torus of length {length}, got d = {}, L = {}",
            f0.dim(),
            f0.length()
        )));
    }
    let grid = Collocation::for_field(f0)?;
    let mut total = T::zero();
    for k in 0..path.len() - 1 {
        let dt = path.times[k + 1] - path.times[k];
        let (a, b) = (&path.points[k], &path.points[k + 1]);
        let mid = a.axpy(T::one(), b)?.scaled(T::lit(0.5));
        let u = grid.to_grid(&mid)?;
        let cubes: Vec<T> = u.iter().map(|&v| v * v * v).collect();
        let cubic = grid.from_grid(&cubes, &mid)?;
        let sq: T = (0..mid.len())
            .map(|i| {
                let vel = (b.coeffs()[i] - a.coeffs()[i]).unscale(dt);
                let r =
                    vel + mid.coeffs()[i].scale(mid.k_squared(i) - T::one()) + cubic.coeffs()[i];
                r.norm_sqr()
            })
            .sum();
        total += sq * dt;
    }
    Ok(total / T::lit(2.0))
}
