//! One function per experiment: read and validate parameters, run, tabulate.

use std::f64::consts::TAU;
use std::io::BufReader;

use serde_json::{json, Value};

use metastable_core::determinants::{carleman_det, fredholm_closed_form, fredholm_det};
use metastable_core::field::SpectralField;
use metastable_core::kramers::{
    ek_allen_cahn_1d, ek_allen_cahn_1d_truncated, ek_allen_cahn_2d, ek_allen_cahn_2d_renormalized,
    ek_finite, RatePrediction,
};
use metastable_core::ldp::{rate_functional_ac_1d, rate_functional_sde, FieldPath, VectorPath};
use metastable_core::potential_theory::{magic_identity, Grid1D, IntervalSet};
use metastable_core::potentials::{
    ac_energy, find_critical_point, quartic_double_well, AllenCahnEnergy, Potential, Quadratic,
    QuarticDoubleWell,
};
use metastable_core::randomwalk::sample_rescaled;
use metastable_core::rng::replica_rng;
use metastable_core::sde::{
    ou_moments, sample_hitting_times, sample_terminal, simulate_path, HittingTimeBatch, SdeRun,
};
use metastable_core::spde::{
    sample_spde_hitting_times, write_snapshot_csv, FieldNorm, SpdeRun, SpdeStepper, Target,
};
use metastable_core::stats::{ks_critical_value, ks_statistic, normal_cdf, Summary};

use crate::config::Params;
use crate::error::CliError;
use crate::fit::arrhenius_fit;
use crate::output::{Cell, Table};

/// What an experiment hands back to the runner.
pub struct Outcome {
    pub table: Table,
    pub summary: Value,
    pub comments: Vec<String>,
    pub warnings: Vec<String>,
    pub snapshots: Vec<(String, String)>,
}

impl Outcome {
    fn new(table: Table) -> Self {
        Self {
            table,
            summary: Value::Null,
            comments: Vec::new(),
            warnings: Vec::new(),
            snapshots: Vec::new(),
        }
    }
}

fn check_epsilons(eps: &[f64]) -> Result<(), CliError> {
    match eps.iter().find(|&&e| !(e > 0.0)) {
        Some(e) => Err(CliError::Config(format!(
            "noise intensities must be > 0, got {e}"
        ))),
        None => Ok(()),
    }
}

fn check_length(l: f64) -> Result<(), CliError> {
    if l > 0.0 && l < TAU {
        Ok(())
    } else {
        Err(CliError::Config(format!(
            "torus length L must lie in (0, 2π), got {l}"
        )))
    }
}

/// Eyring–Kramers law of the quartic double well from its critical points.
pub fn quartic_prediction() -> Result<RatePrediction<f64>, CliError> {
    let p = quartic_double_well();
    let min = find_critical_point(&p, &[-1.0], 1e-12)?;
    let saddle = find_critical_point(&p, &[0.0], 1e-12)?;
    Ok(ek_finite(&min, &saddle, &p)?)
}

struct SdeSweep {
    eps: Vec<f64>,
    n: usize,
    dt: f64,
    delta: f64,
    x0: f64,
    target: f64,
    t_max: f64,
    seed: u64,
}

impl SdeSweep {
    fn read(p: &Params) -> Result<Self, CliError> {
        p.choice("potential", &["quartic"], Some("quartic"))?;
        let eps = p.f64_list("epsilon")?;
        check_epsilons(&eps)?;
        Ok(Self {
            eps,
            n: p.usize("n")?,
            dt: p.positive_or("dt", 1e-3)?,
            delta: p.positive_or("delta", 0.1)?,
            x0: p.f64_or("x0", -1.0)?,
            target: p.f64_or("target", 1.0)?,
            t_max: p.positive_or("t_max", 1e4)?,
            seed: p.u64_or("seed", 0)?,
        })
    }

    /// Batch `i` uses seed `seed + i`.
    fn run(&self, threads: usize) -> Result<Vec<(f64, HittingTimeBatch<f64>)>, CliError> {
        self.eps
            .iter()
            .enumerate()
            .map(|(i, &e)| {
                let run = SdeRun::new(
                    quartic_double_well(),
                    e,
                    self.dt,
                    vec![self.x0],
                    self.seed.wrapping_add(i as u64),
                )?
                .with_t_max(self.t_max);
                Ok((
                    e,
                    sample_hitting_times(&run, &[self.target], self.delta, self.n, threads)?,
                ))
            })
            .collect()
    }
}

struct SpdeSweep {
    eps: Vec<f64>,
    d: usize,
    length: f64,
    cutoff: usize,
    n: usize,
    dt: f64,
    delta: f64,
    norm: FieldNorm<f64>,
    t_max: f64,
    renormalize: bool,
    seed: u64,
}

impl SpdeSweep {
    fn read(p: &Params) -> Result<Self, CliError> {
        let eps = p.f64_list("epsilon")?;
        check_epsilons(&eps)?;
        let d = p.usize_or("d", 1)?;
        if d != 1 && d != 2 {
            return Err(CliError::Config(format!(
                "dimension d must be 1 or 2, got {d}"
            )));
        }
        let length = p.f64("L")?;
        check_length(length)?;
        let norm = match p.choice("norm", &["linf", "hs"], Some("linf"))?.as_str() {
            "linf" => FieldNorm::Linf,
            _ => {
                let s = p.f64_or("s", -0.5)?;
                if !(s < 0.0) {
                    return Err(CliError::Config(format!(
                        "Sobolev exponent s must be < 0, got {s}"
                    )));
                }
                FieldNorm::Hs(s)
            }
        };
        Ok(Self {
            eps,
            d,
            length,
            cutoff: p.usize("N")?,
            n: p.usize("n")?,
            dt: p.positive_or("dt", 1e-3)?,
            delta: p.positive_or("delta", 0.3)?,
            norm,
            t_max: p.positive_or("t_max", 1e4)?,
            renormalize: p.bool_or("renormalize", d == 2)?,
            seed: p.u64_or("seed", 0)?,
        })
    }

    fn spde_run(&self, i: usize) -> Result<SpdeRun<f64>, CliError> {
        let start = SpectralField::constant(self.d, self.length, self.cutoff, -1.0)?;
        Ok(SpdeRun::new(
            start,
            self.eps[i],
            self.dt,
            self.seed.wrapping_add(i as u64),
        )?
        .with_t_max(self.t_max)
        .with_renormalize(self.renormalize))
    }

    fn warnings(&self) -> Result<Vec<String>, CliError> {
        Ok(self.spde_run(0)?.warnings())
    }

    fn run(&self, threads: usize) -> Result<Vec<(f64, HittingTimeBatch<f64>)>, CliError> {
        (0..self.eps.len())
            .map(|i| {
                let run = self.spde_run(i)?;
                let b = sample_spde_hitting_times(
                    &run,
                    Target::Plus,
                    self.delta,
                    self.norm,
                    self.n,
                    threads,
                )?;
                Ok((self.eps[i], b))
            })
            .collect()
    }

    fn prediction(&self, eps: f64) -> Result<f64, CliError> {
        Ok(if self.d == 1 {
            ek_allen_cahn_1d(self.length)?.predict(eps)
        } else if self.renormalize {
            ek_allen_cahn_2d_renormalized(self.length, self.cutoff, eps)?.predict(eps)
        } else {
            ek_allen_cahn_2d(self.length, self.cutoff)?.predict(eps)
        })
    }
}

const HITTING_COLUMNS: [&str; 7] = [
    "epsilon",
    "n_attempted",
    "n_censored",
    "mean_tau",
    "stderr",
    "ek_prediction",
    "ratio",
];

fn hitting_table(
    batches: &[(f64, HittingTimeBatch<f64>)],
    predict: impl Fn(f64) -> Result<f64, CliError>,
) -> Result<Table, CliError> {
    let mut t = Table::new(&HITTING_COLUMNS);
    for (e, b) in batches {
        let ek = predict(*e)?;
        t.push(vec![
            (*e).into(),
            b.n_attempted.into(),
            b.n_censored.into(),
            b.mean.into(),
            b.stderr.into(),
            ek.into(),
            (b.mean / ek).into(),
        ]);
    }
    Ok(t)
}

pub fn sde_hitting(p: &Params, threads: usize) -> Result<Outcome, CliError> {
    let sweep = SdeSweep::read(p)?;
    p.finish()?;
    let ek = quartic_prediction()?;
    let batches = sweep.run(threads)?;
    Ok(Outcome::new(hitting_table(
        &batches,
        |e| Ok(ek.predict(e)),
    )?))
}

pub fn spde_hitting(p: &Params, threads: usize) -> Result<Outcome, CliError> {
    let sweep = SpdeSweep::read(p)?;
    let snapshots = p.usize_or("snapshots", 0)?;
    let snapshot_t = p.positive_or("snapshot_t", 1.0)?;
    p.finish()?;
    let warnings = sweep.warnings()?;
    let batches = sweep.run(threads)?;
    let mut out = Outcome::new(hitting_table(&batches, |e| sweep.prediction(e))?);
    out.warnings = warnings;
    if snapshots > 0 {
        let run = sweep.spde_run(0)?;
        let stepper = SpdeStepper::new(run.clone())?;
        let steps = (snapshot_t / sweep.dt).round() as usize;
        let every = (steps / snapshots).max(1);
        let path = stepper.simulate(&mut replica_rng(run.seed, 0), steps, every)?;
        for (k, (t, phi)) in path.iter().enumerate() {
            let mut buf = Vec::new();
            write_snapshot_csv(&mut buf, *t, phi)?;
            out.snapshots.push((
                format!("snapshot_{k:04}.csv"),
                String::from_utf8(buf).expect("ascii csv"),
            ));
        }
    }
    Ok(out)
}

pub fn ou_check(p: &Params, threads: usize) -> Result<Outcome, CliError> {
    let eps = p.positive("epsilon")?;
    let t = p.positive("t")?;
    let n = p.usize("n")?;
    let dt = p.positive_or("dt", 1e-3)?;
    let x0 = p.f64_or("x0", 1.0)?;
    let seed = p.u64_or("seed", 0)?;
    p.finish()?;
    if n < 2 {
        return Err(CliError::Config("ou-check needs n >= 2".into()));
    }
    let run = SdeRun::new(Quadratic::ornstein_uhlenbeck(), eps, dt, vec![x0], seed)?;
    let xs: Vec<f64> = sample_terminal(&run, t, n, threads)?
        .into_iter()
        .map(|v| v[0])
        .collect();
    let (mean, var) = ou_moments(x0, t, eps);
    let s = Summary::of(&xs).expect("n >= 2");
    let m4 = xs.iter().map(|x| (x - s.mean).powi(4)).sum::<f64>() / n as f64;
    let var_se = ((m4 - s.variance * s.variance) / n as f64).sqrt();
    let mut table = Table::new(&[
        "quantity",
        "empirical",
        "exact",
        "stderr",
        "z_score",
        "within_3_stderr",
    ]);
    for (name, emp, exact, se) in [
        ("mean", s.mean, mean, s.stderr),
        ("variance", s.variance, var, var_se),
    ] {
        let z = (emp - exact) / se;
        table.push(vec![
            name.into(),
            emp.into(),
            exact.into(),
            se.into(),
            z.into(),
            (z.abs() <= 3.0).into(),
        ]);
    }
    Ok(Outcome::new(table))
}

fn interval_param(p: &Params, key: &str, default: [f64; 2]) -> Result<IntervalSet<f64>, CliError> {
    let v = p.f64_list_or(key, &default)?;
    match v.as_slice() {
        [x] => Ok(IntervalSet::point(*x)),
        [lo, hi] if lo <= hi => Ok(IntervalSet::interval(*lo, *hi)),
        _ => Err(CliError::Config(format!(
            "`{key}` must be a point or an interval [lo, hi]"
        ))),
    }
}

pub fn potential_theory(p: &Params, _threads: usize) -> Result<Outcome, CliError> {
    let eps = p.f64_list("epsilon")?;
    check_epsilons(&eps)?;
    let a = p.f64_or("a", -2.0)?;
    let b = p.f64_or("b", 2.0)?;
    let m = p.usize_or("m", 4000)?;
    let set_a = interval_param(p, "A", [-1.05, -0.95])?;
    let set_b = interval_param(p, "B", [0.8, 1.2])?;
    p.finish()?;
    let grid = Grid1D::new(a, b, m)?;
    let v = quartic_double_well();
    let ek = quartic_prediction()?;
    let mut table = Table::new(&[
        "epsilon",
        "start",
        "w_start",
        "capacity",
        "committor_mass",
        "magic_rhs",
        "relative_residual",
        "ek_prediction",
        "laplace_asymptotic",
    ]);
    for e in eps {
        let r = magic_identity(&grid, &v, e, &set_a, &set_b)?;
        let laplace = (TAU * e / 2.0).sqrt() * (-QuarticDoubleWell.value(&[-1.0]) / e).exp();
        table.push(vec![
            e.into(),
            r.start.into(),
            r.lhs.into(),
            r.capacity.into(),
            r.committor_mass.into(),
            r.rhs.into(),
            r.residual.into(),
            ek.predict(e).into(),
            laplace.into(),
        ]);
    }
    Ok(Outcome::new(table))
}

pub fn determinant(p: &Params, _threads: usize) -> Result<Outcome, CliError> {
    let d = p.usize("d")?;
    let length = p.f64("L")?;
    let cutoff = p.usize("N")?;
    let default_kind = if d == 1 { "fredholm" } else { "carleman" };
    let kind = p.choice("kind", &["fredholm", "carleman"], Some(default_kind))?;
    p.finish()?;
    let r = if kind == "fredholm" {
        fredholm_det(d, length, cutoff)?
    } else {
        carleman_det(d, length, cutoff)?
    };
    let closed = (d == 1 && kind == "fredholm")
        .then(|| fredholm_closed_form(length))
        .transpose()?;
    let rel = closed.map(|c| ((r.value - c) / c).abs());
    let mut table = Table::new(&[
        "d",
        "L",
        "N",
        "kind",
        "value",
        "log_abs",
        "sign",
        "tail_estimate",
        "closed_form",
        "relative_error",
    ]);
    table.push(vec![
        d.into(),
        length.into(),
        cutoff.into(),
        kind.as_str().into(),
        r.value.into(),
        r.log_abs.into(),
        r.sign.into(),
        r.tail_estimate.into(),
        closed.into(),
        rel.into(),
    ]);
    Ok(Outcome::new(table))
}

pub fn kramers_predict(p: &Params, _threads: usize) -> Result<Outcome, CliError> {
    let system = p.choice(
        "system",
        &["quartic", "allen-cahn-1d", "allen-cahn-2d"],
        None,
    )?;
    let pred = match system.as_str() {
        "quartic" => quartic_prediction()?,
        "allen-cahn-1d" => {
            let l = p.f64("L")?;
            check_length(l)?;
            if p.has("N") {
                ek_allen_cahn_1d_truncated(l, p.usize("N")?)?
            } else {
                ek_allen_cahn_1d(l)?
            }
        }
        _ => {
            let l = p.f64("L")?;
            check_length(l)?;
            ek_allen_cahn_2d(l, p.usize("N")?)?
        }
    };
    let eps = if p.has("epsilon") {
        let e = p.f64_list("epsilon")?;
        check_epsilons(&e)?;
        e
    } else {
        Vec::new()
    };
    p.finish()?;
    let mut table = Table::new(&[
        "system",
        "barrier",
        "prefactor",
        "lambda_minus",
        "determinant_factor",
        "prefactor_lo",
        "prefactor_hi",
        "epsilon",
        "prediction",
    ]);
    let row = |e: Option<f64>| -> Vec<Cell> {
        vec![
            system.as_str().into(),
            pred.barrier.into(),
            pred.prefactor.into(),
            pred.lambda_minus.into(),
            pred.determinant_factor.into(),
            pred.prefactor_interval.0.into(),
            pred.prefactor_interval.1.into(),
            e.into(),
            e.map(|e| pred.predict(e)).into(),
        ]
    };
    if eps.is_empty() {
        table.push(row(None));
    } else {
        for e in eps {
            table.push(row(Some(e)));
        }
    }
    let mut out = Outcome::new(table);
    out.summary = json!({ "provenance": pred.provenance });
    Ok(out)
}

pub fn rate_functional(p: &Params, _threads: usize) -> Result<Outcome, CliError> {
    let system = p.choice("system", &["quartic", "allen-cahn-1d"], None)?;
    let mut table = Table::new(&[
        "system",
        "direction",
        "nodes",
        "duration",
        "rate",
        "v_start",
        "v_end",
    ]);
    let path_file = if p.has("path") {
        Some(p.str("path")?)
    } else {
        None
    };
    let open = |f: &str| -> Result<BufReader<std::fs::File>, CliError> {
        Ok(BufReader::new(std::fs::File::open(f).map_err(|e| {
            CliError::Config(format!("cannot open path file {f}: {e}"))
        })?))
    };
    if system == "quartic" {
        let v = quartic_double_well();
        let path = match &path_file {
            Some(f) => {
                p.finish()?;
                VectorPath::read_csv(open(f)?)?
            }
            None => {
                let x0 = p.f64_or("x0", -1e-6)?;
                let dt = p.positive_or("dt", 1e-3)?;
                let t = p.positive_or("t", 30.0)?;
                p.finish()?;
                let run = SdeRun::new(v, 0.0, dt, vec![x0], 0)?;
                VectorPath::uniform(dt, simulate_path(&run, (t / dt).round() as usize, 0)?)?
            }
        };
        for (dir, path) in [("forward", path.clone()), ("reversed", path.reversed())] {
            table.push(vec![
                system.as_str().into(),
                dir.into(),
                path.len().into(),
                path.duration().into(),
                rate_functional_sde(&path, &v)?.into(),
                v.value(path.start()).into(),
                v.value(path.end()).into(),
            ]);
        }
    } else {
        let l = p.f64("L")?;
        check_length(l)?;
        let path = match &path_file {
            Some(f) => {
                p.finish()?;
                FieldPath::read_json_lines(open(f)?)?
            }
            None => {
                let n = p.usize_or("N", 8)?;
                let c0 = p.f64_or("c0", -1e-4)?;
                let dt = p.positive_or("dt", 1e-3)?;
                let t = p.positive_or("t", 25.0)?;
                p.finish()?;
                let start = SpectralField::constant(1, l, n, c0)?;
                let stepper = SpdeStepper::new(SpdeRun::new(start, 0.0, dt, 0)?)?;
                let snaps =
                    stepper.simulate(&mut replica_rng(0, 0), (t / dt).round() as usize, 1)?;
                let (times, fields): (Vec<f64>, Vec<_>) = snaps.into_iter().unzip();
                FieldPath::new(times, fields)?
            }
        };
        let f0 = path.start();
        let energy = AllenCahnEnergy::new(1, f0.length(), f0.cutoff())?;
        for (dir, path) in [("forward", path.clone()), ("reversed", path.reversed())] {
            table.push(vec![
                system.as_str().into(),
                dir.into(),
                path.len().into(),
                path.duration().into(),
                rate_functional_ac_1d(&path, l)?.into(),
                ac_energy(&energy, path.start())?.into(),
                ac_energy(&energy, path.end())?.into(),
            ]);
        }
    }
    Ok(Outcome::new(table))
}

pub fn random_walk(p: &Params, threads: usize) -> Result<Outcome, CliError> {
    let n = p.usize("n")?;
    let walks = p.usize("walks")?;
    let s = p.f64_or("s", 0.25)?;
    let t = p.f64_or("t", 1.0)?;
    let alpha = p.positive_or("alpha", 0.05)?;
    let seed = p.u64_or("seed", 0)?;
    p.finish()?;
    if !(0.0 <= s && s < t) {
        return Err(CliError::Config(format!(
            "need 0 <= s < t, got s = {s}, t = {t}"
        )));
    }
    if walks < 2 || n == 0 {
        return Err(CliError::Config("need n >= 1 and walks >= 2".into()));
    }
    let w = sample_rescaled::<f64>(walks, n, &[s, t], seed, threads)?;
    let inc: Vec<f64> = w.iter().map(|v| v[1] - v[0]).collect();
    let sum = Summary::of(&inc).expect("walks >= 2");
    let var_se = sum.variance * (2.0 / (walks - 1) as f64).sqrt();
    let z: Vec<f64> = w.iter().map(|v| v[1] / t.sqrt()).collect();
    let ks = ks_statistic(&z, normal_cdf);
    let crit = ks_critical_value(walks, alpha);
    let mut table = Table::new(&[
        "walks",
        "n",
        "s",
        "t",
        "increment_mean",
        "increment_variance",
        "expected_variance",
        "variance_stderr",
        "ks_statistic",
        "ks_critical",
        "ks_pass",
    ]);
    table.push(vec![
        walks.into(),
        n.into(),
        s.into(),
        t.into(),
        sum.mean.into(),
        sum.variance.into(),
        (t - s).into(),
        var_se.into(),
        ks.into(),
        crit.into(),
        (ks < crit).into(),
    ]);
    Ok(Outcome::new(table))
}

pub fn arrhenius_sweep(p: &Params, threads: usize) -> Result<Outcome, CliError> {
    let system = p.choice("system", &["sde", "allen-cahn-1d"], Some("sde"))?;
    let (batches, table, barrier, warnings) = if system == "sde" {
        let sweep = SdeSweep::read(p)?;
        p.finish()?;
        let ek = quartic_prediction()?;
        let batches = sweep.run(threads)?;
        let table = hitting_table(&batches, |e| Ok(ek.predict(e)))?;
        (batches, table, ek.barrier, Vec::new())
    } else {
        let sweep = SpdeSweep::read(p)?;
        p.finish()?;
        if sweep.d != 1 {
            return Err(CliError::Config(
                "arrhenius-sweep for allen-cahn-1d needs d = 1".into(),
            ));
        }
        let warnings = sweep.warnings()?;
        let batches = sweep.run(threads)?;
        let table = hitting_table(&batches, |e| sweep.prediction(e))?;
        (batches, table, sweep.length / 4.0, warnings)
    };
    let fit = arrhenius_fit(&batches)?;
    let mut out = Outcome::new(table);
    out.comments.push(format!(
        "fit slope={} intercept={} r_squared={} barrier={}",
        fit.slope, fit.intercept, fit.r_squared, barrier
    ));
    out.summary = json!({
        "fit": fit,
        "barrier": barrier,
        "slope_relative_error": (fit.slope - barrier) / barrier,
    });
    out.warnings = warnings;
    Ok(out)
}
