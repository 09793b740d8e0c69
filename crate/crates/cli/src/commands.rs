use std::f64::consts::PI;
use std::path::Path;

use nalgebra::DVector;
use piezo_lab_core::discretization::assemble_scalar;
use piezo_lab_core::spectral::{
    self, branch_asymptote, linear_grid, resolvent_sweep, PowerFit, SpectrumReport,
};
use piezo_lab_core::timestepper::{default_dt, run, run_conservative, RunConfig, Trajectory};
use piezo_lab_core::verification::{
    check_tail_guard, decay_fit, multiplier_check, resolvent_identity_check, static_solve,
    AffineMultiplier,
};
use piezo_lab_core::{
    assemble, generator, project_initial_data, BeamParameters, Complex64, Field, Forcing, Mesh,
    SemiDiscreteSystem,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::output::{emit, fmt_f64, json_report, Csv, Metadata};

pub const CSV_HEADER: [&str; 14] = [
    "step",
    "t",
    "E_total",
    "E_kin_v",
    "E_kin_p",
    "E_elastic",
    "E_magnetic",
    "E_tip_v",
    "E_tip_p",
    "u",
    "eta",
    "Vx_L",
    "Px_L",
    "cum_dissipation",
];

fn system(params: &BeamParameters, n: usize) -> CliResult<SemiDiscreteSystem> {
    let mesh = Mesh::new(n, params.length)?;
    Ok(assemble(&mesh, params)?)
}

fn time_step(cfg: &ExperimentConfig, sys: &SemiDiscreteSystem) -> f64 {
    cfg.dt.unwrap_or_else(|| default_dt(sys))
}

fn simulate_with(
    cfg: &ExperimentConfig,
    sys: &SemiDiscreteSystem,
    t_end: f64,
    record_every: usize,
    keep_states: bool,
) -> CliResult<Trajectory> {
    let x0 = project_initial_data(&cfg.initial_condition.into(), sys)?;
    let run_cfg = RunConfig {
        record_every,
        keep_states,
        ..RunConfig::new(time_step(cfg, sys), t_end)
    };
    Ok(run(sys, &x0, &run_cfg)?)
}

/// `exponent`, `constant`, `band`, `residual`, `points` of a power fit.
fn fit_json(fit: &PowerFit) -> Value {
    json!({
        "exponent": fit.slope,
        "constant": fit.intercept.exp(),
        "band": fit.band,
        "residual": fit.residual,
        "points": fit.points,
    })
}

fn fit_or_reason(fit: piezo_lab_core::Result<PowerFit>) -> Value {
    match fit {
        Ok(f) => fit_json(&f),
        Err(e) => json!({ "exponent": null, "reason": e.to_string() }),
    }
}

pub fn simulate(cfg: &ExperimentConfig, out: Option<&Path>) -> CliResult<()> {
    let sys = system(&cfg.params, cfg.n_elements)?;
    let traj = simulate_with(cfg, &sys, cfg.t_end, cfg.record_every, false)?;
    let meta = Metadata::new("simulate", cfg);
    let extra = json!({
        "dt": traj.dt,
        "steps": traj.steps.last().copied().unwrap_or(0),
        "max_step_residual": traj.max_step_residual,
        "balance_residual": traj.balance_residual(),
    });
    let mut csv = Csv::new(&meta, Some(&extra), &CSV_HEADER);
    for k in 0..traj.len() {
        let e = &traj.energies[k];
        let tr = &traj.traces[k];
        let mut cells = vec![traj.steps[k].to_string()];
        cells.extend(
            [
                traj.times[k],
                e.total,
                e.kinetic_v,
                e.kinetic_p,
                e.elastic,
                e.magnetic_coupling,
                e.tip_v,
                e.tip_p,
                tr.u,
                tr.eta,
                tr.vx_l,
                tr.px_l,
                traj.cumulative_dissipation[k],
            ]
            .map(fmt_f64),
        );
        csv.row(&cells);
    }
    emit(out, &csv.finish())
}

#[derive(Serialize)]
struct SpectrumOut {
    n_elements: usize,
    eigenvalues: Vec<[f64; 2]>,
    spectral_abscissa: f64,
    resolved_abscissa: f64,
    cutoff: f64,
    conjugation_defect: f64,
    branch_fit: Value,
    branch_fit_auto: Value,
}

fn spectrum_of(params: &BeamParameters, n: usize) -> CliResult<SpectrumReport> {
    let gen = generator(&system(params, n)?)?;
    Ok(spectral::spectrum(&gen)?)
}

pub fn spectrum(cfg: &ExperimentConfig, out: Option<&Path>) -> CliResult<()> {
    let rep = spectrum_of(&cfg.params, cfg.n_elements)?;
    let body = SpectrumOut {
        n_elements: cfg.n_elements,
        eigenvalues: rep.eigenvalues.iter().map(|z| [z.re, z.im]).collect(),
        spectral_abscissa: rep.spectral_abscissa,
        resolved_abscissa: rep.resolved_abscissa,
        cutoff: rep.cutoff,
        conjugation_defect: rep.conjugation_defect(),
        branch_fit: fit_or_reason(branch_asymptote(&rep, cfg.fit_band)),
        branch_fit_auto: rep.branch_fit.as_ref().map_or(Value::Null, fit_json),
    };
    emit(out, &json_report(&Metadata::new("spectrum", cfg), &body))
}

pub fn resolvent(cfg: &ExperimentConfig, out: Option<&Path>) -> CliResult<()> {
    let gen = generator(&system(&cfg.params, cfg.n_elements)?)?;
    let grid = linear_grid(cfg.lambda_min, cfg.lambda_max, cfg.lambda_points);
    let sweep = resolvent_sweep(&gen, &grid)?;
    let growth = fit_or_reason(sweep.growth_fit(cfg.fit_band));
    let peaks: Vec<[f64; 2]> = sweep.peaks.iter().map(|&(l, r)| [l, r]).collect();
    let meta = Metadata::new("resolvent", cfg);
    let as_json = out.is_some_and(|p| p.extension().is_some_and(|e| e == "json"));
    let text = if as_json {
        json_report(
            &meta,
            &json!({
                "lambdas": sweep.lambdas,
                "norms": sweep.norms,
                "peaks": peaks,
                "growth_fit": growth,
                "cutoff": spectral::frequency_cutoff(gen.system()),
            }),
        )
    } else {
        let extra = json!({
            "growth_fit": growth,
            "peaks": peaks,
            "cutoff": spectral::frequency_cutoff(gen.system()),
        });
        let mut csv = Csv::new(&meta, Some(&extra), &["lambda", "resolvent_norm"]);
        for (l, r) in sweep.lambdas.iter().zip(&sweep.norms) {
            csv.row(&[fmt_f64(*l), fmt_f64(*r)]);
        }
        csv.finish()
    };
    emit(out, &text)
}

pub fn abscissa_trend(cfg: &ExperimentConfig, out: Option<&Path>) -> CliResult<()> {
    let reports: Vec<SpectrumReport> = cfg
        .n_list
        .par_iter()
        .map(|&n| spectrum_of(&cfg.params, n))
        .collect::<CliResult<_>>()?;
    let rows: Vec<Value> = cfg
        .n_list
        .iter()
        .zip(&reports)
        .map(|(n, r)| {
            json!({
                "n": n,
                "spectral_abscissa": r.spectral_abscissa,
                "resolved_abscissa": r.resolved_abscissa,
                "cutoff": r.cutoff,
            })
        })
        .collect();
    let increasing = reports
        .windows(2)
        .all(|w| w[1].spectral_abscissa > w[0].spectral_abscissa);
    let body = json!({ "trend": rows, "strictly_increasing": increasing });
    emit(
        out,
        &json_report(&Metadata::new("abscissa-trend", cfg), &body),
    )
}

/// Simulates up to the window end and fits the energy envelope inside it.
pub fn decay(cfg: &ExperimentConfig, out: Option<&Path>) -> CliResult<()> {
    let sys = system(&cfg.params, cfg.n_elements)?;
    let abscissa = spectral::spectrum(&generator(&sys)?)?.spectral_abscissa;
    check_tail_guard(cfg.window, abscissa)?;
    let traj = simulate_with(cfg, &sys, cfg.window[1], cfg.record_every, false)?;
    let fit = decay_fit(&traj, cfg.window, Some(abscissa))?;
    let body = json!({
        "fit": fit,
        "envelope_ratio": fit.envelope_ratio(),
        "spectral_abscissa": abscissa,
        "dt": traj.dt,
        "times": traj.times,
        "energies": traj.energies.iter().map(|e| e.total).collect::<Vec<_>>(),
    });
    emit(out, &json_report(&Metadata::new("decay", cfg), &body))
}

/// Records every step, whatever `record_every` says.
pub fn multiplier(cfg: &ExperimentConfig, out: Option<&Path>) -> CliResult<()> {
    let sys = system(&cfg.params, cfg.n_elements)?;
    let traj = simulate_with(cfg, &sys, cfg.t_end, 1, true)?;
    let q = AffineMultiplier::normalized(cfg.params.length);
    let rep = multiplier_check(&traj, &sys, q, [0.0, cfg.params.length])?;
    let body = json!({ "report": rep, "steps": traj.steps.last(), "dt": traj.dt });
    emit(
        out,
        &json_report(&Metadata::new("multiplier-check", cfg), &body),
    )
}

/// Fixed smooth forcing used by the identity and static studies.
pub fn smooth_forcing(mesh: &Mesh) -> Forcing<Complex64> {
    let l = mesh.length();
    let c = Complex64::new;
    let field =
        |f: &dyn Fn(f64) -> Complex64| mesh.nodes().iter().map(|&x| f(x / l)).collect::<Vec<_>>();
    Forcing {
        f1: field(&|s| c((0.5 * PI * s).sin(), 0.3 * s * s)),
        f2: field(&|s| c(1.0 + s, -(2.0 * s).cos())),
        f3: field(&|s| c(s * (1.0 - s), 0.5 * (3.0 * s).sin())),
        f4: field(&|s| c(s.exp(), 0.2)),
        f5: c(0.4, -0.1),
        f6: c(-0.2, 0.7),
    }
}

fn real_part(f: &Forcing<Complex64>) -> Forcing<f64> {
    let re = |v: &[Complex64]| v.iter().map(|z| z.re).collect();
    Forcing {
        f1: re(&f.f1),
        f2: re(&f.f2),
        f3: re(&f.f3),
        f4: re(&f.f4),
        f5: f.f5.re,
        f6: f.f6.re,
    }
}

pub fn resolvent_identity(cfg: &ExperimentConfig, out: Option<&Path>) -> CliResult<()> {
    let reports = cfg
        .n_list
        .iter()
        .map(|&n| {
            let gen = generator(&system(&cfg.params, n)?)?;
            let f = smooth_forcing(gen.system().mesh());
            Ok(resolvent_identity_check(&gen, cfg.identity_lambda, &f)?)
        })
        .collect::<CliResult<Vec<_>>>()?;
    let decreasing = reports.windows(2).all(|w| w[1].residual < w[0].residual);
    let estimates = reports
        .iter()
        .all(|r| r.estimate_holds && r.dissipation_bound_holds);
    let rows: Vec<Value> = cfg
        .n_list
        .iter()
        .zip(&reports)
        .map(|(n, r)| json!({ "n": n, "report": r }))
        .collect();
    let body = json!({
        "lambda": cfg.identity_lambda,
        "studies": rows,
        "residual_decreasing": decreasing,
        "estimates_hold": estimates,
    });
    emit(
        out,
        &json_report(&Metadata::new("resolvent-identity", cfg), &body),
    )
}

pub fn static_study(cfg: &ExperimentConfig, out: Option<&Path>) -> CliResult<()> {
    let sols = cfg
        .n_list
        .iter()
        .map(|&n| {
            let sys = system(&cfg.params, n)?;
            let f = real_part(&smooth_forcing(sys.mesh()));
            Ok(static_solve(&sys, &f)?)
        })
        .collect::<CliResult<Vec<_>>>()?;
    let ratios: Vec<f64> = sols.iter().map(|s| s.norm_ratio).collect();
    let hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let rows: Vec<Value> = cfg
        .n_list
        .iter()
        .zip(&sols)
        .map(|(n, s)| json!({ "n": n, "residual": s.residual, "norm_ratio": s.norm_ratio }))
        .collect();
    let body = json!({
        "studies": rows,
        "max_residual": sols.iter().map(|s| s.residual).fold(0.0, f64::max),
        "ratio_variation": hi / lo - 1.0,
    });
    emit(
        out,
        &json_report(&Metadata::new("static-solve", cfg), &body),
    )
}

pub const SUITES: [&str; 8] = [
    "energy",
    "conservative",
    "dissipativity",
    "spectrum",
    "static",
    "multiplier",
    "identity",
    "decoupling",
];

#[derive(Serialize)]
struct SuiteResult {
    suite: &'static str,
    passed: bool,
    detail: Value,
}

fn suite(name: &'static str, cfg: &ExperimentConfig) -> CliResult<SuiteResult> {
    let p = &cfg.params;
    let n = cfg.n_elements;
    let (passed, detail) = match name {
        "energy" => {
            let sys = system(p, n)?;
            let traj = simulate_with(cfg, &sys, cfg.t_end, cfg.record_every, false)?;
            let rel = traj.max_step_residual / traj.initial_energy();
            (
                rel <= 1e-10,
                json!({ "max_step_residual_over_e0": rel, "tolerance": 1e-10 }),
            )
        }
        "conservative" => {
            let sys = system(p, n)?;
            let x0 = project_initial_data(&cfg.initial_condition.into(), &sys)?;
            let run_cfg = RunConfig::new(time_step(cfg, &sys), cfg.t_end);
            let traj = run_conservative(&sys, &x0, &run_cfg)?;
            let e0 = traj.initial_energy();
            let drift = traj
                .energies
                .iter()
                .map(|e| (e.total - e0).abs() / e0)
                .fold(0.0, f64::max);
            (
                drift <= 1e-10,
                json!({ "max_relative_drift": drift, "tolerance": 1e-10 }),
            )
        }
        "dissipativity" => {
            let gen = generator(&system(p, n)?)?;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let mut worst: f64 = 0.0;
            for _ in 0..100 {
                let x = DVector::from_fn(gen.dim(), |_, _| rng.gen_range(-1.0..1.0));
                let (lhs, rhs) = gen.dissipativity_pair(&x);
                let scale = gen.w_norm(&x) * gen.w_norm(&gen.apply(&x));
                worst = worst.max((lhs - rhs).abs() / scale);
            }
            (
                worst <= 1e-12,
                json!({ "max_relative_defect": worst, "samples": 100, "tolerance": 1e-12 }),
            )
        }
        "spectrum" => {
            let rep = spectrum_of(p, n)?;
            let scale = rep.eigenvalues.iter().map(|z| z.norm()).fold(1.0, f64::max);
            let defect = rep.conjugation_defect();
            let ok = rep.spectral_abscissa <= 1e-10 && defect <= 1e-10 * scale;
            (
                ok,
                json!({ "spectral_abscissa": rep.spectral_abscissa, "conjugation_defect": defect }),
            )
        }
        "static" => {
            let sols = cfg
                .n_list
                .iter()
                .map(|&m| {
                    let sys = system(p, m)?;
                    Ok(static_solve(&sys, &real_part(&smooth_forcing(sys.mesh())))?)
                })
                .collect::<CliResult<Vec<_>>>()?;
            let worst = sols.iter().map(|s| s.residual).fold(0.0, f64::max);
            let hi = sols
                .iter()
                .map(|s| s.norm_ratio)
                .fold(f64::NEG_INFINITY, f64::max);
            let lo = sols
                .iter()
                .map(|s| s.norm_ratio)
                .fold(f64::INFINITY, f64::min);
            let var = hi / lo - 1.0;
            (
                worst <= 1e-10 && var <= 0.1,
                json!({ "max_residual": worst, "ratio_variation": var }),
            )
        }
        "multiplier" => {
            let sys = system(p, n)?;
            let traj = simulate_with(cfg, &sys, cfg.t_end, 1, true)?;
            let rep = multiplier_check(
                &traj,
                &sys,
                AffineMultiplier::normalized(p.length),
                [0.0, p.length],
            )?;
            (
                rep.satisfied,
                json!({ "lhs": rep.lhs, "bound": rep.bound, "constant": rep.constant }),
            )
        }
        "identity" => {
            let reports = cfg
                .n_list
                .iter()
                .map(|&m| {
                    let gen = generator(&system(p, m)?)?;
                    let f = smooth_forcing(gen.system().mesh());
                    Ok(resolvent_identity_check(&gen, cfg.identity_lambda, &f)?)
                })
                .collect::<CliResult<Vec<_>>>()?;
            let dec = reports.windows(2).all(|w| w[1].residual < w[0].residual);
            let est = reports
                .iter()
                .all(|r| r.estimate_holds && r.dissipation_bound_holds);
            let res: Vec<f64> = reports.iter().map(|r| r.residual).collect();
            (
                dec && est,
                json!({ "residuals": res, "residual_decreasing": dec, "estimates_hold": est }),
            )
        }
        "decoupling" => {
            let q = BeamParameters { gamma: 0.0, ..*p };
            let sys = system(&q, n)?;
            let x0 = project_initial_data(&cfg.initial_condition.into(), &sys)?;
            let dt = time_step(cfg, &sys);
            let run_cfg = RunConfig {
                keep_states: true,
                ..RunConfig::new(dt, 500.0 * dt)
            };
            let coupled = run(&sys, &x0, &run_cfg)?;
            let mut worst: f64 = 0.0;
            for (fi, field) in [Field::V, Field::P].into_iter().enumerate() {
                let scalar = assemble_scalar(sys.mesh(), &q.scalar_field(field))?;
                let pick = |x: &[f64]| {
                    let mut v = x[fi * n..(fi + 1) * n].to_vec();
                    v.extend_from_slice(&x[(2 + fi) * n..(3 + fi) * n]);
                    v
                };
                let traj = run(&scalar, &DVector::from_vec(pick(x0.as_slice())), &run_cfg)?;
                for (a, b) in coupled.states.iter().zip(&traj.states) {
                    for (u, v) in pick(a).iter().zip(b) {
                        worst = worst.max((u - v).abs());
                    }
                }
            }
            (
                worst <= 1e-12,
                json!({ "max_entrywise_difference": worst, "steps": 500, "tolerance": 1e-12 }),
            )
        }
        other => return Err(CliError::Input(format!("unknown suite {other:?}"))),
    };
    Ok(SuiteResult {
        suite: name,
        passed,
        detail,
    })
}

pub fn verify(cfg: &ExperimentConfig, suite_name: &str, out: Option<&Path>) -> CliResult<()> {
    let names: Vec<&'static str> = if suite_name == "all" {
        SUITES.to_vec()
    } else {
        match SUITES.iter().find(|s| **s == suite_name) {
            Some(s) => vec![*s],
            None => {
                return Err(CliError::Input(format!(
                    "unknown suite {suite_name:?}; expected all or one of {}",
                    SUITES.join(", ")
                )))
            }
        }
    };
    let results = names
        .iter()
        .map(|s| suite(s, cfg))
        .collect::<CliResult<Vec<_>>>()?;
    let failed = results.iter().filter(|r| !r.passed).count();
    let body = json!({ "suite": suite_name, "all_passed": failed == 0, "results": results });
    emit(out, &json_report(&Metadata::new("verify", cfg), &body))?;
    if failed > 0 {
        return Err(CliError::Verification { failed });
    }
    Ok(())
}
