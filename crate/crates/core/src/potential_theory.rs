//! Finite-difference solvers on an interval for the generator
//! 𝓛 = εΔ − V'∇: mean hitting times, committors, capacities, and the
//! identity linking them.
//!
//! The generator is discretized in flux form,
//! (𝓛f)_j = (ε/h²)[e^{(V_j−V_{j+½})/ε}(f_{j+1}−f_j) − e^{(V_j−V_{j−½})/ε}(f_j−f_{j−1})],
//! which is symmetric in ℓ²(e^{−V/ε}) and second-order consistent. Outer
//! nodes outside the Dirichlet sets carry a reflecting half-cell row.

use crate::error::{Error, Result};
use crate::linalg::solve_tridiagonal;
use crate::potentials::Potential;
use crate::scalar::Real;

/// Uniform grid on [a, b] with `m` interior nodes; nodes include both endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D<T> {
    pub a: T,
    pub b: T,
    pub m: usize,
}

impl<T: Real> Grid1D<T> {
    pub fn new(a: T, b: T, m: usize) -> Result<Self> {
        if m < 3 {
            return Err(Error::InvalidArgument(format!(
                "grid needs at least 3 interior nodes, got {m}"
            )));
        }
        if !(b > a) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidArgument(format!("empty interval [{a}, {b}]")));
        }
        Ok(Self { a, b, m })
    }

    pub fn h(&self) -> T {
        (self.b - self.a) / T::from_usize_lossy(self.m + 1)
    }

    /// Number of nodes, endpoints included.
    pub fn len(&self) -> usize {
        self.m + 2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn node(&self, j: usize) -> T {
        self.a + T::from_usize_lossy(j) * self.h()
    }

    pub fn nodes(&self) -> Vec<T> {
        (0..self.len()).map(|j| self.node(j)).collect()
    }

    fn midpoint(&self, j: usize) -> T {
        self.a + (T::from_usize_lossy(j) + T::lit(0.5)) * self.h()
    }
}

/// Finite union of closed intervals; single points are degenerate intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalSet<T> {
    pub intervals: Vec<(T, T)>,
}

impl<T: Real> IntervalSet<T> {
    pub fn interval(lo: T, hi: T) -> Self {
        Self {
            intervals: vec![(lo, hi)],
        }
    }

    pub fn point(x: T) -> Self {
        Self::interval(x, x)
    }

    pub fn union(mut self, other: Self) -> Self {
        self.intervals.extend(other.intervals);
        self
    }

    /// Membership with a snapping tolerance.
    pub fn contains(&self, x: T, tol: T) -> bool {
        self.intervals
            .iter()
            .any(|&(lo, hi)| x >= lo - tol && x <= hi + tol)
    }

    /// Grid nodes belonging to the set.
    pub fn mask(&self, grid: &Grid1D<T>) -> Vec<bool> {
        let tol = grid.h() * T::lit(1e-9);
        grid.nodes()
            .into_iter()
            .map(|x| self.contains(x, tol))
            .collect()
    }
}

/// Discrete committor h_AB: 1 on A, 0 on B, 𝓛-harmonic elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct CommittorSolution<T> {
    pub grid: Grid1D<T>,
    pub values: Vec<T>,
    pub a_set: IntervalSet<T>,
    pub b_set: IntervalSet<T>,
}

fn check_one_dimensional<T: Real, P: Potential<T> + ?Sized>(v: &P) -> Result<()> {
    if v.dim() != 1 {
        return Err(Error::ShapeMismatch(format!(
            "interval solvers need a 1D potential, got dimension {}",
            v.dim()
        )));
    }
    Ok(())
}

fn nonempty(mask: &[bool], name: &str) -> Result<()> {
    if mask.iter().any(|&b| b) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "set {name} contains no grid node"
        )))
    }
}

/// Solves 𝓛f = rhs off the Dirichlet nodes, f = fixed there. Rows are
/// scaled by h²/ε.
fn solve_generator<T: Real, P: Potential<T> + ?Sized>(
    grid: &Grid1D<T>,
    v: &P,
    epsilon: T,
    rhs: T,
    fixed: &[Option<T>],
) -> Result<Vec<T>> {
    if !(epsilon > T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "noise intensity ε = {epsilon} must be > 0"
        )));
    }
    let n = grid.len();
    let h = grid.h();
    let vn: Vec<T> = grid.nodes().iter().map(|&x| v.value(&[x])).collect();
    let vm: Vec<T> = (0..n - 1).map(|j| v.value(&[grid.midpoint(j)])).collect();
    let scaled_rhs = rhs * h * h / epsilon;
    let mut lower = vec![T::zero(); n];
    let mut diag = vec![T::zero(); n];
    let mut upper = vec![T::zero(); n];
    let mut b = vec![T::zero(); n];
    for j in 0..n {
        if let Some(value) = fixed[j] {
            diag[j] = T::one();
            b[j] = value;
            continue;
        }
        let two = T::lit(2.0);
        if j == 0 {
            let w = ((vn[0] - vm[0]) / epsilon).exp() * two;
            diag[j] = -w;
            upper[j] = w;
        } else if j == n - 1 {
            let w = ((vn[j] - vm[j - 1]) / epsilon).exp() * two;
            diag[j] = -w;
            lower[j] = w;
        } else {
            let wp = ((vn[j] - vm[j]) / epsilon).exp();
            let wm = ((vn[j] - vm[j - 1]) / epsilon).exp();
            lower[j] = wm;
            diag[j] = -(wm + wp);
            upper[j] = wp;
        }
        b[j] = scaled_rhs;
    }
    solve_tridiagonal(&lower, &diag, &upper, &b)
}

/// Mean hitting time w_B = E^x[τ_B]: 𝓛w = −1 off B, w = 0 on B.
pub fn solve_poisson<T: Real, P: Potential<T> + ?Sized>(
    grid: &Grid1D<T>,
    v: &P,
    epsilon: T,
    b_set: &IntervalSet<T>,
) -> Result<Vec<T>> {
    check_one_dimensional(v)?;
    let mask = b_set.mask(grid);
    nonempty(&mask, "B")?;
    let fixed: Vec<Option<T>> = mask.iter().map(|&m| m.then(T::zero)).collect();
    solve_generator(grid, v, epsilon, -T::one(), &fixed)
}

/// Committor h_AB = P^x[τ_A < τ_B].
pub fn solve_committor<T: Real, P: Potential<T> + ?Sized>(
    grid: &Grid1D<T>,
    v: &P,
    epsilon: T,
    a_set: &IntervalSet<T>,
    b_set: &IntervalSet<T>,
) -> Result<CommittorSolution<T>> {
    check_one_dimensional(v)?;
    let ma = a_set.mask(grid);
    let mb = b_set.mask(grid);
    nonempty(&ma, "A")?;
    nonempty(&mb, "B")?;
    if ma.iter().zip(&mb).any(|(&x, &y)| x && y) {
        return Err(Error::OverlappingSets);
    }
    let fixed: Vec<Option<T>> = ma
        .iter()
        .zip(&mb)
        .map(|(&in_a, &in_b)| {
            if in_a {
                Some(T::one())
            } else if in_b {
                Some(T::zero())
            } else {
                None
            }
        })
        .collect();
    let values = solve_generator(grid, v, epsilon, T::zero(), &fixed)?;
    Ok(CommittorSolution {
        grid: *grid,
        values,
        a_set: a_set.clone(),
        b_set: b_set.clone(),
    })
}

fn check_same_grid<T: Real>(grid: &Grid1D<T>, c: &CommittorSolution<T>) -> Result<()> {
    if *grid != c.grid || c.values.len() != grid.len() {
        return Err(Error::ShapeMismatch(
            "committor solved on a different grid".into(),
        ));
    }
    Ok(())
}

/// Dirichlet form ε Σ e^{−V_{j+½}/ε} ((h_{j+1}−h_j)/Δx)² Δx of the committor.
pub fn capacity_dirichlet<T: Real, P: Potential<T> + ?Sized>(
    grid: &Grid1D<T>,
    v: &P,
    epsilon: T,
    committor: &CommittorSolution<T>,
) -> Result<T> {
    check_same_grid(grid, committor)?;
    let h = grid.h();
    let sum: T = committor
        .values
        .windows(2)
        .enumerate()
        .map(|(j, w)| {
            let slope = (w[1] - w[0]) / h;
            (-v.value(&[grid.midpoint(j)]) / epsilon).exp() * slope * slope * h
        })
        .sum();
    Ok(epsilon * sum)
}

/// ∫_{B^c} e^{−V/ε} h_AB dx by the trapezoidal rule over the nodes outside B.
pub fn committor_mass<T: Real, P: Potential<T> + ?Sized>(
    grid: &Grid1D<T>,
    v: &P,
    epsilon: T,
    committor: &CommittorSolution<T>,
) -> Result<T> {
    check_same_grid(grid, committor)?;
    let in_b = committor.b_set.mask(grid);
    let h = grid.h();
    let last = grid.len() - 1;
    Ok(grid
        .nodes()
        .iter()
        .enumerate()
        .filter(|&(j, _)| !in_b[j])
        .map(|(j, &x)| {
            let weight = if j == 0 || j == last {
                h / T::lit(2.0)
            } else {
                h
            };
            (-v.value(&[x]) / epsilon).exp() * committor.values[j] * weight
        })
        .sum())
}

/// Both sides of ∫_{∂A} E^x[τ_B] ν_AB(dx) = cap(A,B)^{-1} ∫_{B^c} e^{−V/ε} h_AB,
/// the left side evaluated as w_B at the lowest node of A.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagicIdentityReport<T> {
    pub start: T,
    pub lhs: T,
    pub rhs: T,
    pub capacity: T,
    pub committor_mass: T,
    /// |lhs − rhs| / max(|lhs|, |rhs|), and 0 when both sides vanish.
    pub residual: T,
}

pub fn magic_identity<T: Real, P: Potential<T> + ?Sized>(
    grid: &Grid1D<T>,
    v: &P,
    epsilon: T,
    a_set: &IntervalSet<T>,
    b_set: &IntervalSet<T>,
) -> Result<MagicIdentityReport<T>> {
    let committor = solve_committor(grid, v, epsilon, a_set, b_set)?;
    let w = solve_poisson(grid, v, epsilon, b_set)?;
    let capacity = capacity_dirichlet(grid, v, epsilon, &committor)?;
    let mass = committor_mass(grid, v, epsilon, &committor)?;
    let in_a = a_set.mask(grid);
    let (j_star, _) = grid
        .nodes()
        .iter()
        .enumerate()
        .filter(|&(j, _)| in_a[j])
        .map(|(j, &x)| (j, v.value(&[x])))
        .fold((usize::MAX, T::infinity()), |best, cur| {
            if cur.1 < best.1 {
                cur
            } else {
                best
            }
        });
    let lhs = w[j_star];
    let rhs = mass / capacity;
    let scale = lhs.abs().max(rhs.abs());
    let residual = if scale == T::zero() {
        T::zero()
    } else {
        (lhs - rhs).abs() / scale
    };
    Ok(MagicIdentityReport {
        start: grid.node(j_star),
        lhs,
        rhs,
        capacity,
        committor_mass: mass,
        residual,
    })
}

pub fn magic_identity_residual<T: Real, P: Potential<T> + ?Sized>(
    grid: &Grid1D<T>,
    v: &P,
    epsilon: T,
    a_set: &IntervalSet<T>,
    b_set: &IntervalSet<T>,
) -> Result<T> {
    Ok(magic_identity(grid, v, epsilon, a_set, b_set)?.residual)
}
