//! Counter-style replica streams: replica `i` of a run seeded with `seed`
//! always draws from ChaCha8 stream `i` of that seed, so results do not
//! depend on how replicas are scheduled across threads.

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::scalar::Real;

pub type ReplicaRng = ChaCha8Rng;

/// RNG for replica `index` of a run seeded with `seed`.
pub fn replica_rng(seed: u64, index: u64) -> ReplicaRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// One standard normal draw, converted to the working scalar.
pub fn standard_normal<T: Real, R: RngCore + ?Sized>(rng: &mut R) -> T {
    let z: f64 = StandardNormal.sample(rng);
    T::lit(z)
}

/// Fills `out` with independent standard normals.
pub fn fill_standard_normal<T: Real, R: RngCore + ?Sized>(rng: &mut R, out: &mut [T]) {
    for v in out {
        *v = standard_normal(rng);
    }
}

/// Runs `n` replicas on a pool of `threads` workers (0 = rayon default) and
/// returns their results ordered by replica index.
pub fn run_replicas<R, F>(n: usize, seed: u64, threads: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize, &mut ReplicaRng) -> R + Sync + Send,
{
    let job = || {
        (0..n)
            .into_par_iter()
            .map(|i| {
                let mut rng = replica_rng(seed, i as u64);
                f(i, &mut rng)
            })
            .collect::<Vec<R>>()
    };
    if threads == 1 {
        return (0..n)
            .map(|i| {
                let mut rng = replica_rng(seed, i as u64);
                f(i, &mut rng)
            })
            .collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(job),
        Err(_) => job(),
    }
}
