use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use serde_json::json;

use metastable_cli::{run, CliError, Experiment, ExperimentConfig};

/// Metastability experiments: SDE and stochastic Allen–Cahn hitting times,
/// potential theory, spectral determinants and Eyring–Kramers predictions.
///
/// Parameters are passed as `--key value` after the experiment name (lists
/// as `0.2,0.3` or `[0.2,0.3]`) and override values from `--config`.
#[derive(Debug, Parser)]
#[command(name = "metastable", version)]
struct Cli {
    /// sde-hitting, spde-hitting, ou-check, potential-theory, determinant,
    /// kramers-predict, rate-functional, randomwalk or arrhenius-sweep.
    /// Optional when the config file names the experiment.
    #[arg(allow_hyphen_values = true)]
    experiment: Option<String>,

    /// JSON file of the form {"experiment": ..., "parameters": {...}}.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output directory (default `metastable-out`).
    #[arg(long)]
    out: Option<PathBuf>,

    /// Experiment parameters as `--key value` pairs.
    #[arg(
        trailing_var_arg = true,
        allow_hyphen_values = true,
        value_name = "--KEY VALUE"
    )]
    params: Vec<String>,
}

fn build(cli: &Cli) -> Result<(ExperimentConfig, PathBuf), CliError> {
    // A leading `--key` lands in `experiment` when no name was given.
    let (name, extra) = match &cli.experiment {
        Some(e) if e.starts_with("--") => (None, Some(e.clone())),
        other => (other.clone(), None),
    };
    let experiment = name.map(|n| n.parse::<Experiment>()).transpose()?;
    let mut config = match (&cli.config, experiment) {
        (Some(path), e) => ExperimentConfig::from_file(path, e)?,
        (None, Some(e)) => ExperimentConfig::new(e),
        (None, None) => return Err(CliError::Config("missing required key `experiment`".into())),
    };
    let mut flags: Vec<String> = extra.into_iter().collect();
    flags.extend(cli.params.iter().cloned());
    config.apply_flags(&flags)?;
    let out = match &cli.out {
        Some(p) => {
            config
                .parameters
                .insert("out".into(), json!(p.display().to_string()));
            p.clone()
        }
        None => match config.parameters.get("out") {
            Some(serde_json::Value::String(s)) => PathBuf::from(s),
            Some(v) => {
                return Err(CliError::Config(format!(
                    "`out` must be a path string, got {v}"
                )))
            }
            None => PathBuf::from("metastable-out"),
        },
    };
    Ok((config, out))
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("{}", e.to_json());
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(&CliError::Config(e.to_string().trim().to_string())),
    };
    let (config, out_dir) = match build(&cli) {
        Ok(x) => x,
        Err(e) => return fail(&e),
    };
    let result = match run(&config) {
        Ok(r) => r,
        Err(e) => return fail(&e),
    };
    for w in &result.warnings {
        eprintln!("{}", json!({ "warning": w }));
    }
    if let Err(e) = result.write_to(&out_dir) {
        return fail(&e);
    }
    print!("{}", result.results_csv());
    ExitCode::SUCCESS
}
