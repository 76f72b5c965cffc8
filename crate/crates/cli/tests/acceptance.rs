//! Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
//! criterion fails. Long-running, so it is not part of `cargo test`; run it
//! with `cargo test --release -p metastable-cli --test acceptance`.

use std::f64::consts::{LN_2, PI, SQRT_2, TAU};
use std::process::{Command, ExitCode};
use std::time::Instant;

use metastable_cli::arrhenius_fit;
use metastable_core::determinants::{
    carleman_det_2d, counterterm_trace, fredholm_closed_form, fredholm_det_1d,
};
use metastable_core::field::SpectralField;
use metastable_core::kramers::{
    ek_allen_cahn_1d, ek_allen_cahn_2d, ek_allen_cahn_2d_renormalized, ek_finite,
};
use metastable_core::ldp::{rate_functional_ac_1d, rate_functional_sde, FieldPath, VectorPath};
use metastable_core::potential_theory::{
    committor_mass, magic_identity, solve_committor, solve_poisson, Grid1D, IntervalSet,
};
use metastable_core::potentials::{
    find_critical_point, quartic_double_well, GalerkinAllenCahn1d, Potential, Quadratic,
};
use metastable_core::randomwalk::sample_rescaled;
use metastable_core::rng::replica_rng;
use metastable_core::sde::{
    detailed_balance_residual, fokker_planck_residual, ou_moments, sample_hitting_times,
    sample_terminal, simulate_path, HittingTimeBatch, SdeRun,
};
use metastable_core::spde::{
    sample_spde_hitting_times, time_averaged_mean, FieldNorm, SpdeRun, SpdeStepper, Target,
};
use metastable_core::stats::{ks_critical_value, ks_statistic, normal_cdf, Summary};
use num_complex::Complex;

type Check = Result<(bool, String), Box<dyn std::error::Error>>;

fn threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Quartic well on [−2, 2] with node 1000 at −1.
fn quartic_grid() -> Grid1D<f64> {
    Grid1D::new(-2.0, 2.0, 3999).unwrap()
}

fn quartic_b() -> IntervalSet<f64> {
    IntervalSet::interval(0.8, 1.2)
}

fn quartic_batch(
    eps: f64,
    n: usize,
    seed: u64,
) -> Result<HittingTimeBatch<f64>, metastable_core::error::Error> {
    let run = SdeRun::new(quartic_double_well(), eps, 1e-3, vec![-1.0], seed)?.with_t_max(1e4);
    sample_hitting_times(&run, &[1.0], 0.2, n, threads())
}

fn c1_ou() -> Check {
    let started = Instant::now();
    let (eps, t, n) = (0.1, 1.0, 100_000);
    let run = SdeRun::new(Quadratic::ornstein_uhlenbeck(), eps, 1e-3, vec![1.0], 1)?;
    let xs: Vec<f64> = sample_terminal(&run, t, n, threads())?
        .into_iter()
        .map(|v| v[0])
        .collect();
    let s = Summary::of(&xs).unwrap();
    let m4 = xs.iter().map(|x| (x - s.mean).powi(4)).sum::<f64>() / n as f64;
    let var_se = ((m4 - s.variance * s.variance) / n as f64).sqrt();
    let (mean, var) = ou_moments(1.0, t, eps);
    let zm = (s.mean - mean) / s.stderr;
    let zv = (s.variance - var) / var_se;
    let secs = started.elapsed().as_secs_f64();
    Ok((
        zm.abs() <= 3.0 && zv.abs() <= 3.0 && secs <= 60.0,
        format!("mean z = {zm:.2}, variance z = {zv:.2}, {secs:.1} s"),
    ))
}

fn c2_detailed_balance() -> Check {
    let grid: Vec<f64> = (0..41).map(|i| -2.0 + 0.1 * i as f64).collect();
    let r = detailed_balance_residual(1.0, 0.1, &grid);
    Ok((r < 1e-12, format!("max residual {r:.2e}")))
}

fn c3_fokker_planck() -> Check {
    let ys: Vec<f64> = (0..=40).map(|i| -1.0 + 0.05 * i as f64).collect();
    let r = |h| fokker_planck_residual(0.5, 0.8, 0.3, &ys, h);
    let ratios: Vec<f64> = [0.04, 0.02, 0.01]
        .iter()
        .map(|&h| r(h) / r(h / 2.0))
        .collect();
    let ok = ratios.iter().all(|q| (q - 4.0).abs() <= 0.5);
    Ok((ok, format!("Richardson ratios {ratios:.3?}")))
}

fn c4_kramers_triangle() -> Check {
    let started = Instant::now();
    let eps = 0.25;
    let mc = quartic_batch(eps, 2000, 4)?;
    let w = solve_poisson(&quartic_grid(), &quartic_double_well(), eps, &quartic_b())?[1000];
    let ek = PI * SQRT_2 * (0.25 / eps).exp();
    let z = (mc.mean - w) / mc.stderr;
    let gap = (w / ek - 1.0).abs();
    let secs = started.elapsed().as_secs_f64();
    Ok((
        z.abs() <= 3.0 && gap <= 0.15 && secs <= 600.0,
        format!(
            "MC {:.3} ± {:.3}, PDE {w:.3}, EK {ek:.3}: MC-PDE z = {z:.2}, |PDE/EK - 1| = {gap:.3}, {secs:.1} s",
            mc.mean, mc.stderr
        ),
    ))
}

fn c5_sde_slope() -> Check {
    let mut batches = Vec::new();
    for (i, eps) in [0.2, 0.25, 0.3, 0.35].into_iter().enumerate() {
        batches.push((eps, quartic_batch(eps, 2000, 50 + i as u64)?));
    }
    let fit = arrhenius_fit(&batches)?;
    Ok((
        (fit.slope - 0.25).abs() <= 0.025,
        format!(
            "slope {:.4} (r² {:.4}), band 0.25 ± 0.025",
            fit.slope, fit.r_squared
        ),
    ))
}

fn c6_magic_identity() -> Check {
    let (grid, v) = (quartic_grid(), quartic_double_well());
    let a = IntervalSet::interval(-1.05, -0.95);
    let r = magic_identity(&grid, &v, 0.2, &a, &quartic_b())?;
    let eps = 0.1;
    let h = solve_committor(&grid, &v, eps, &a, &quartic_b())?;
    let mass = committor_mass(&grid, &v, eps, &h)?;
    let laplace = (TAU * eps / 2.0).sqrt() * (-v.value(&[-1.0]) / eps).exp();
    let ratio = mass / laplace;
    Ok((
        r.residual <= 0.1 && (ratio - 1.0).abs() <= 0.1,
        format!(
            "residual {:.2e} at ε = 0.2; Laplace ratio {ratio:.4} at ε = 0.1",
            r.residual
        ),
    ))
}

fn c7_fredholm() -> Check {
    let started = Instant::now();
    let mut worst: f64 = 0.0;
    let mut orders = Vec::new();
    for l in [1.0, 2.0, PI, 5.0] {
        let exact = fredholm_closed_form(l)?;
        let err = |n| -> Result<f64, metastable_core::error::Error> {
            Ok((fredholm_det_1d(l, n)?.value / exact - 1.0).abs())
        };
        worst = worst.max(err(4096)?);
        orders.push((err(2048)? / err(4096)?).log2());
    }
    let secs = started.elapsed().as_secs_f64();
    let ok = worst < 1e-3 && orders.iter().all(|p| (p - 1.0).abs() < 0.1) && secs <= 1.0;
    Ok((
        ok,
        format!("max rel. error {worst:.2e} at N = 4096, orders {orders:.3?}, {secs:.3} s"),
    ))
}

fn c8_carleman() -> Check {
    let l = 3.0_f64;
    let v = |n| carleman_det_2d(l, n).map(|d| d.value);
    let diff = |n: usize| -> Result<f64, metastable_core::error::Error> {
        Ok(((v(2 * n)? - v(n)?) / v(n)?).abs())
    };
    let mut ratios = Vec::new();
    for n in [8, 16, 32] {
        ratios.push(diff(n)? / diff(2 * n)?);
    }
    let zero = v(0)?;
    let zero_err = (zero / (-2.0 * 3f64.exp()) - 1.0).abs();
    let ok = ratios.iter().all(|q| (q - 4.0).abs() <= 1.0) && zero_err <= 1e-12;
    Ok((
        ok,
        format!("ratios {ratios:.3?}, N = 0 value {zero:.12} (rel. error {zero_err:.1e})"),
    ))
}

fn c9_counterterm() -> Check {
    let d = counterterm_trace(2, 3.0, 1024)? - counterterm_trace(2, 3.0, 512)?;
    let target = LN_2 / TAU;
    let gap = (d / target - 1.0).abs();
    Ok((
        gap <= 0.05,
        format!("C_1024 - C_512 = {d:.5}, ln2/(2π) = {target:.5}, rel. gap {gap:.3}"),
    ))
}

fn c10_compensation() -> Check {
    let mut worst: f64 = 0.0;
    for n in 4..=128 {
        for eps in [0.05, 0.1, 0.2] {
            let bare = ek_allen_cahn_2d(3.0_f64, n)?.log_predict(eps);
            let ren = ek_allen_cahn_2d_renormalized(3.0, n, eps)?.log_predict(eps);
            worst = worst.max(((bare - ren) / bare).abs());
        }
    }
    Ok((
        worst <= 1e-10,
        format!("max rel. log gap {worst:.2e} over N = 4..128"),
    ))
}

fn c11_spde() -> Check {
    let started = Instant::now();
    let (l, n) = (2.0, 16);
    let ek = ek_allen_cahn_1d(l)?;
    let mut batches = Vec::new();
    for (i, eps) in [0.3, 0.4, 0.5].into_iter().enumerate() {
        let phi = SpectralField::constant(1, l, n, -1.0)?;
        let run = SpdeRun::new(phi, eps, 1e-3, 110 + i as u64)?.with_t_max(1e4);
        batches.push((
            eps,
            sample_spde_hitting_times(&run, Target::Plus, 0.3, FieldNorm::Linf, 500, threads())?,
        ));
    }
    let at = &batches[1].1;
    let ratio = at.mean / ek.predict(0.4);
    let fit = arrhenius_fit(&batches)?;
    let secs = started.elapsed().as_secs_f64();
    let ok = (0.5..=2.0).contains(&ratio)
        && (fit.slope - l / 4.0).abs() <= 0.2 * l / 4.0
        && secs <= 7200.0;
    Ok((
        ok,
        format!(
            "ε = 0.4: mean {:.3} ± {:.3}, EK {:.3}, ratio {ratio:.3}; slope {:.3} vs 0.5 ± 0.1; {secs:.0} s",
            at.mean,
            at.stderr,
            ek.predict(0.4),
            fit.slope
        ),
    ))
}

fn c12_galerkin() -> Check {
    let (l, n) = (2.0, 4096);
    let p = GalerkinAllenCahn1d::new(l, n)?;
    let at = |c: f64| -> Result<_, metastable_core::error::Error> {
        let x = p.coordinates(&SpectralField::constant(1, l, n, c)?)?;
        find_critical_point(&p, &x, 1e-10)
    };
    let pred = ek_finite(&at(-1.0)?, &at(0.0)?, &p)?;
    let gap = (pred.prefactor / ek_allen_cahn_1d(l)?.prefactor - 1.0).abs();
    Ok((
        gap < 1e-3,
        format!(
            "prefactor gap {gap:.2e} at N = 4096, barrier {:.6}",
            pred.barrier
        ),
    ))
}

fn downhill(x0: f64, dt: f64, t: f64) -> Result<VectorPath<f64>, metastable_core::error::Error> {
    let run = SdeRun::new(quartic_double_well(), 0.0, dt, vec![x0], 0)?;
    VectorPath::uniform(dt, simulate_path(&run, (t / dt).round() as usize, 0)?)
}

fn ac_downhill(l: f64, dt: f64, t: f64) -> Result<FieldPath<f64>, metastable_core::error::Error> {
    let mut phi0 = SpectralField::constant(1, l, 8, -1e-4)?;
    phi0.set_mode([1, 0], Complex::new(1e-5, 0.0))?;
    let stepper = SpdeStepper::new(SpdeRun::new(phi0, 0.0, dt, 0)?)?;
    let snaps = stepper.simulate(&mut replica_rng(0, 0), (t / dt).round() as usize, 1)?;
    let (times, fields): (Vec<f64>, Vec<_>) = snaps.into_iter().unzip();
    FieldPath::new(times, fields)
}

fn c13_rate_functionals() -> Check {
    let v = quartic_double_well();
    let sde_flow = rate_functional_sde(&downhill(0.3, 5e-3, 10.0)?, &v)?;
    let sde_up = rate_functional_sde(&downhill(-1e-6, 1e-3, 30.0)?.reversed(), &v)?;
    let l = 2.0;
    let ac = ac_downhill(l, 1e-3, 25.0)?;
    let ac_flow = rate_functional_ac_1d(&ac, l)?;
    let ac_up = rate_functional_ac_1d(&ac.reversed(), l)?;
    let ok = sde_flow <= 1e-4
        && ac_flow <= 1e-4
        && (sde_up / 0.5 - 1.0).abs() <= 0.02
        && (ac_up / (l / 2.0) - 1.0).abs() <= 0.02;
    Ok((
        ok,
        format!("flow SDE {sde_flow:.1e}, AC {ac_flow:.1e}; uphill SDE {sde_up:.4} (0.5), AC {ac_up:.4} ({})", l / 2.0),
    ))
}

fn c14_random_walk() -> Check {
    let (n, walks, s, t) = (10_000, 10_000, 0.25, 1.0);
    let w = sample_rescaled::<f64>(walks, n, &[s, t], 14, threads())?;
    let inc: Vec<f64> = w.iter().map(|v| v[1] - v[0]).collect();
    let sum = Summary::of(&inc).unwrap();
    let sigma = (t - s) * (2.0 / (walks - 1) as f64).sqrt();
    let z = (sum.variance - (t - s)) / sigma;
    let w1: Vec<f64> = w.iter().map(|v| v[1]).collect();
    let ks = ks_statistic(&w1, normal_cdf);
    let crit = ks_critical_value(walks, 0.05);
    Ok((
        z.abs() <= 3.0 && ks < crit,
        format!(
            "Var[W_1 - W_0.25] = {:.4} (z = {z:.2}), KS {ks:.4} < {crit:.4}",
            sum.variance
        ),
    ))
}

fn c15_reproducibility() -> Check {
    let tmp = tempfile::TempDir::new()?;
    let runs: [&[&str]; 2] = [
        &[
            "sde-hitting",
            "--epsilon",
            "0.3,0.4",
            "--n",
            "64",
            "--seed",
            "15",
        ],
        &[
            "spde-hitting",
            "--epsilon",
            "0.5",
            "--L",
            "2",
            "--N",
            "8",
            "--n",
            "24",
            "--dt",
            "0.002",
            "--seed",
            "15",
        ],
    ];
    let mut detail = Vec::new();
    let mut ok = true;
    for (r, args) in runs.iter().enumerate() {
        let mut outputs = Vec::new();
        for threads in ["1", "4", "8"] {
            let out = tmp.path().join(format!("{r}-{threads}"));
            let status = Command::new(env!("CARGO_BIN_EXE_metastable"))
                .args(*args)
                .args(["--threads", threads, "--out", out.to_str().unwrap()])
                .output()?
                .status;
            if !status.success() {
                return Ok((false, format!("{} exited with {status}", args[0])));
            }
            let manifest: serde_json::Value =
                serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json"))?)?;
            outputs.push((
                std::fs::read(out.join("results.csv"))?,
                std::fs::read(out.join("results.json"))?,
                manifest["manifest_sha256"].clone(),
            ));
        }
        let same = outputs.windows(2).all(|w| w[0] == w[1]);
        ok &= same;
        detail.push(format!(
            "{}: {}",
            args[0],
            if same { "identical" } else { "differ" }
        ));
    }
    Ok((ok, format!("threads 1/4/8, {}", detail.join(", "))))
}

/// Time-averaged spatial mean at φ ≡ −1 on the 2D torus of side 4, ε = 0.1,
/// with dt_N = 1/(ω²N²) so the semi-implicit damping is the same for every N.
fn d2_mean(n: usize, renormalize: bool) -> Result<f64, metastable_core::error::Error> {
    let w = TAU / 4.0;
    let phi = SpectralField::constant(2, 4.0, n, -1.0)?;
    let run =
        SpdeRun::new(phi, 0.1, 1.0 / (w * w * (n * n) as f64), 16)?.with_renormalize(renormalize);
    time_averaged_mean(&run, 5.0, 16, threads())
}

fn c16_d2_invariant() -> Check {
    let ns = [8, 16, 32];
    let mut with = Vec::new();
    let mut without = Vec::new();
    for n in ns {
        with.push(d2_mean(n, true)?);
        without.push(d2_mean(n, false)?);
    }
    let spread = |xs: &[f64]| {
        xs.iter().copied().fold(f64::MIN, f64::max) - xs.iter().copied().fold(f64::MAX, f64::min)
    };
    let ok = with.iter().all(|m| (m + 1.0).abs() <= 0.2)
        && spread(&with) < spread(&without)
        && without.windows(2).all(|w| w[1] > w[0]);
    Ok((
        ok,
        format!(
            "d=2 hitting times not gating (covered by 8-10); N = 8/16/32 means renormalized {with:.4?} \
             (spread {:.4}), bare {without:.4?} (spread {:.4})",
            spread(&with),
            spread(&without)
        ),
    ))
}

fn main() -> ExitCode {
    let criteria: [(u32, fn() -> Check); 16] = [
        (1, c1_ou),
        (2, c2_detailed_balance),
        (3, c3_fokker_planck),
        (4, c4_kramers_triangle),
        (5, c5_sde_slope),
        (6, c6_magic_identity),
        (7, c7_fredholm),
        (8, c8_carleman),
        (9, c9_counterterm),
        (10, c10_compensation),
        (11, c11_spde),
        (12, c12_galerkin),
        (13, c13_rate_functionals),
        (14, c14_random_walk),
        (15, c15_reproducibility),
        (16, c16_d2_invariant),
    ];
    let only: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = 0;
    for (k, check) in criteria {
        if !only.is_empty() && !only.contains(&k) {
            continue;
        }
        let (pass, detail) = check().unwrap_or_else(|e| (false, format!("error: {e}")));
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {k}: {} ({detail})",
            if pass { "PASS" } else { "FAIL" }
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
