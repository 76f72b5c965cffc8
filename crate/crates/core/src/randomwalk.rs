//! Symmetric ±1 random walk on Z and its diffusive rescaling
//! W_t ≈ S_{⌊nt⌋}/√n.

use rand::RngCore;

use crate::error::{Error, Result};
use crate::rng::{replica_rng, run_replicas};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkPath {
    pub steps: Vec<i8>,
    /// Prefix sums S_0 = 0, S_1, …, S_n.
    pub positions: Vec<i64>,
    pub seed: u64,
}

impl WalkPath {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// Draws ±1 steps, one bit each, from `rng`.
fn fill_steps<R: RngCore + ?Sized>(rng: &mut R, steps: &mut [i8]) {
    for chunk in steps.chunks_mut(64) {
        let bits = rng.next_u64();
        for (j, s) in chunk.iter_mut().enumerate() {
            *s = if (bits >> j) & 1 == 1 { 1 } else { -1 };
        }
    }
}

/// Walk of `n` steps with iid fair ±1 increments, seeded by `seed`.
pub fn walk(n: usize, seed: u64) -> WalkPath {
    walk_with(&mut replica_rng(seed, 0), n, seed)
}

fn walk_with<R: RngCore + ?Sized>(rng: &mut R, n: usize, seed: u64) -> WalkPath {
    let mut steps = vec![0i8; n];
    fill_steps(rng, &mut steps);
    let mut positions = Vec::with_capacity(n + 1);
    positions.push(0i64);
    let mut s = 0i64;
    for &x in &steps {
        s += x as i64;
        positions.push(s);
    }
    WalkPath {
        steps,
        positions,
        seed,
    }
}

/// S_{⌊nt⌋}/√n at each requested time; every t must lie in [0, len/n].
pub fn diffusive_rescale<T: Real>(path: &WalkPath, n: usize, t_grid: &[T]) -> Result<Vec<T>> {
    if n == 0 {
        return Err(Error::InvalidArgument("rescaling needs n >= 1".into()));
    }
    let scale = T::from_usize_lossy(n).sqrt().recip();
    let horizon = path.len() as f64 / n as f64;
    t_grid
        .iter()
        .map(|&t| {
            let tf = t.to_f64_lossy();
            if !(0.0..=horizon).contains(&tf) {
                return Err(Error::OutOfRange(format!(
                    "time {tf} outside [0, {horizon}]"
                )));
            }
            let idx = ((n as f64) * tf).floor() as usize;
            Ok(T::lit(path.positions[idx.min(path.len())] as f64) * scale)
        })
        .collect()
}

/// W at the times `t_grid` for `count` independent walks of `ceil(n·t_max)`
/// steps; walk `i` uses replica stream `i` of `seed`.
pub fn sample_rescaled<T: Real>(
    count: usize,
    n: usize,
    t_grid: &[T],
    seed: u64,
    threads: usize,
) -> Result<Vec<Vec<T>>> {
    let t_max = t_grid.iter().fold(0.0f64, |m, t| m.max(t.to_f64_lossy()));
    let len = (n as f64 * t_max).ceil() as usize;
    run_replicas(count, seed, threads, |_, rng| {
        let path = walk_with(rng, len, seed);
        diffusive_rescale(&path, n, t_grid)
    })
    .into_iter()
    .collect()
}
