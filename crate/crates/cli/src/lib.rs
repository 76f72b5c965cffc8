//! Experiment harness for `metastable-core`: JSON/flag configuration,
//! seeded parallel runs, CSV/JSON results and a reproducibility manifest.

pub mod config;
pub mod error;
pub mod experiments;
pub mod fit;
pub mod output;

use std::time::Instant;

pub use config::{Experiment, ExperimentConfig, Params};
pub use error::CliError;
pub use fit::{arrhenius_fit, ArrheniusFit, ArrheniusPoint};
pub use output::{manifest_hash, Cell, RunOutput, Table};

/// Runs `config` in memory. Nothing is written; see [`RunOutput::write_to`].
pub fn run(config: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let params = Params::new(config.parameters.clone());
    let threads = params.usize_or("threads", 1)?;
    if params.has("out") {
        params.str("out")?;
    }
    let started = Instant::now();
    let f = match config.experiment {
        Experiment::SdeHitting => experiments::sde_hitting,
        Experiment::SpdeHitting => experiments::spde_hitting,
        Experiment::OuCheck => experiments::ou_check,
        Experiment::PotentialTheory => experiments::potential_theory,
        Experiment::Determinant => experiments::determinant,
        Experiment::KramersPredict => experiments::kramers_predict,
        Experiment::RateFunctional => experiments::rate_functional,
        Experiment::RandomWalk => experiments::random_walk,
        Experiment::ArrheniusSweep => experiments::arrhenius_sweep,
    };
    let outcome = f(&params, threads)?;
    Ok(RunOutput {
        experiment: config.experiment,
        parameters: params.finish()?,
        table: outcome.table,
        summary: outcome.summary,
        comments: outcome.comments,
        warnings: outcome.warnings,
        snapshots: outcome.snapshots,
        wall_time_seconds: started.elapsed().as_secs_f64(),
    })
}
