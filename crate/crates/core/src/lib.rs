//! Metastable stochastic gradient systems: overdamped Langevin diffusions and
//! the stochastic Allen–Cahn equation on 1D/2D tori, with independent
//! Arrhenius / Eyring–Kramers predictions to check simulations against.
//!
//! Every numerical routine is generic over the scalar type through [`Real`]
//! (implemented for `f32` and `f64`). The `*64` aliases below fix `f64`.

pub mod determinants;
pub mod error;
pub mod field;
pub mod kramers;
pub mod ldp;
pub mod linalg;
pub mod potential_theory;
pub mod potentials;
pub mod randomwalk;
pub mod rng;
pub mod scalar;
pub mod sde;
pub mod spde;
pub mod stats;

pub use error::{Error, Result};
pub use scalar::Real;

pub type SpectralField64 = field::SpectralField<f64>;
pub type SpectralField32 = field::SpectralField<f32>;
pub type SdeRun64<P> = sde::SdeRun<f64, P>;
pub type SdeRun32<P> = sde::SdeRun<f32, P>;
pub type SpdeRun64 = spde::SpdeRun<f64>;
pub type SpdeRun32 = spde::SpdeRun<f32>;
pub type HittingTimeBatch64 = sde::HittingTimeBatch<f64>;
pub type HittingTimeBatch32 = sde::HittingTimeBatch<f32>;
pub type RatePrediction64 = kramers::RatePrediction<f64>;
pub type RatePrediction32 = kramers::RatePrediction<f32>;
pub type VectorPath64 = ldp::VectorPath<f64>;
pub type FieldPath64 = ldp::FieldPath<f64>;
pub type Grid1D64 = potential_theory::Grid1D<f64>;
