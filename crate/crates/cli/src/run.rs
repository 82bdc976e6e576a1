// Copyright 2026 bgl-sff Contributors
// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use bgl_sff::spectral::DEFAULT_DEGENERACY_TOL;
use bgl_sff::{
    coherent_gibbs, eigensystem_of, ensemble_plateau, integrate_bgl_ode_energy_basis, ramp_metrics,
    realization_spectra, run_ensemble, sweep, AnalysisConfig, Basis, DensityMatrix, EnsembleSpec, OdeConfig,
    PlateauMode, PlateauReference, SffCurve, XSource,
};

use crate::config::{parse_config, Echo, Job, ParseOutcome, RunConfig};
use crate::csvio::{self, MetricsRow, OutputSet};
use crate::plot::{self, Series, Style};
use crate::CliError;

/// Parses `args` (including the program name), runs the job and returns the
/// exit code. Diagnostics go to `err`, informational output to `out`.
pub fn main_with_args(args: Vec<String>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cfg = match parse_config(args) {
        Ok(ParseOutcome::Run(cfg)) => cfg,
        Ok(ParseOutcome::Info(text)) => {
            let _ = write!(out, "{text}");
            return 0;
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return e.exit_code();
        }
    };
    if cfg.print_config {
        let _ = write!(out, "{}", cfg.to_config_text());
        return 0;
    }
    match execute(&cfg, err) {
        Ok(written) => {
            for p in written {
                let _ = writeln!(err, "wrote {}", p.display());
            }
            0
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

/// Runs a resolved job. On failure every output written so far is removed.
pub fn execute(cfg: &RunConfig, log: &mut dyn Write) -> Result<Vec<PathBuf>, CliError> {
    let mut outputs = OutputSet::default();
    match run_job(cfg, &mut outputs, log) {
        Ok(()) => Ok(outputs.paths().to_vec()),
        Err(e) => {
            outputs.rollback();
            Err(e)
        }
    }
}

fn run_job(cfg: &RunConfig, outputs: &mut OutputSet, log: &mut dyn Write) -> Result<(), CliError> {
    match &cfg.job {
        Job::Sff { spec, analysis, formula, out, metrics } => {
            let curve = run_ensemble(spec)?;
            report_failures(&curve, log);
            outputs.write(out, &csvio::curve_bytes(&curve, &cfg.echo)?)?;
            if let Some(mpath) = metrics {
                let analysis = with_formula(analysis, *formula, spec)?;
                let row = match ramp_metrics(&curve, &analysis) {
                    Ok(m) => MetricsRow { parameter: "none".into(), value: None, metrics: Some(m), error: None },
                    Err(e) => {
                        MetricsRow { parameter: "none".into(), value: None, metrics: None, error: Some(e.to_string()) }
                    }
                };
                outputs.write(mpath, &csvio::metrics_bytes(&[row], &cfg.echo, &spec.metadata())?)?;
            }
            Ok(())
        }
        Job::Sweep { template, parameter, values, analysis, formula, out, curves_dir } => {
            let analysis = with_formula(analysis, *formula, template)?;
            let result = sweep(template, *parameter, values, &analysis)?;
            if let Some(dir) = curves_dir {
                fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
            }
            let mut rows = Vec::with_capacity(result.entries.len());
            for (i, entry) in result.entries.iter().enumerate() {
                if let (Some(dir), Some(curve)) = (curves_dir, &entry.curve) {
                    report_failures(curve, log);
                    let mut echo = sweep_point_echo(&cfg.echo, parameter.name(), entry.value);
                    echo.retain(|(k, _)| k != "curves-dir");
                    let path = dir.join(format!("curve_{i:03}_{}_{}.csv", parameter.name(), entry.value));
                    echo.push(("out".into(), path.display().to_string()));
                    outputs.write(&path, &csvio::curve_bytes(curve, &echo)?)?;
                }
                if let Some(e) = &entry.error {
                    let _ = writeln!(log, "warning: {} = {}: {e}", parameter.name(), entry.value);
                }
                rows.push(MetricsRow {
                    parameter: parameter.name().into(),
                    value: Some(entry.value),
                    metrics: entry.metrics.clone(),
                    error: entry.error.clone(),
                });
            }
            let mut meta = template.metadata();
            if let Some(i) = result.argmax_ratio() {
                meta.push(("argmax_ratio".into(), result.entries[i].value.to_string()));
            }
            outputs.write(out, &csvio::metrics_bytes(&rows, &cfg.echo, &meta)?)?;
            Ok(())
        }
        Job::Evolve { model, beta, gamma, x_source, dt, renormalize_every, grid, seed, out } => {
            let realization = bgl_sff::derive_seed(*seed, 0);
            let h = model.hamiltonian(realization)?;
            let eig = eigensystem_of(&h)?;
            let x = match x_source {
                XSource::FromModel => model.x_operator(realization)?.matrix,
                XSource::ScaledH0(c) => h.matrix.map(|z| z * *c),
            };
            let x_e = eig.to_energy_basis(&x);
            let psi = coherent_gibbs(&eig.spectrum, *beta)?;
            let rho0: DensityMatrix<f64> = psi.projector();
            debug_assert_eq!(rho0.basis(), Basis::Energy);
            let ode = OdeConfig { renormalize_every: *renormalize_every, ..OdeConfig::new(*dt, grid.times()) };
            let traj = bgl_sff::ensemble::with_workers(cfg.workers, || {
                integrate_bgl_ode_energy_basis(&rho0, &eig.spectrum, &x_e, *gamma, &ode)
            })??;
            let rows = traj.observables(&psi, &eig.spectrum)?;
            let meta = vec![
                ("version".to_string(), env!("CARGO_PKG_VERSION").to_string()),
                ("dim".to_string(), eig.spectrum.dim().to_string()),
                ("realization_seed".to_string(), realization.to_string()),
            ];
            outputs.write(out, &csvio::trajectory_bytes(&rows, &cfg.echo, &meta)?)?;
            Ok(())
        }
        Job::Analyze { input, analysis, out } => {
            let (curve, pre) = csvio::read_curve(input)?;
            let m = ramp_metrics(&curve, analysis)?;
            for w in &m.warnings {
                let _ = writeln!(log, "warning: {w}");
            }
            let (parameter, value) = sweep_point_of(&curve);
            let row = MetricsRow { parameter, value, metrics: Some(m), error: None };
            outputs.write(out, &csvio::metrics_bytes(&[row], &cfg.echo, &pre.meta)?)?;
            Ok(())
        }
        Job::Plot { inputs, out, title } => {
            let svg = render_plot(inputs, title.as_deref())?;
            outputs.write(out, svg.as_bytes())?;
            Ok(())
        }
    }
}

fn report_failures(curve: &SffCurve<f64>, log: &mut dyn Write) {
    for (i, msg) in &curve.failures {
        let _ = writeln!(log, "warning: realization {i} skipped: {msg}");
    }
}

/// The echo of a sweep, rewritten as the single-value `sff` run it contains.
fn sweep_point_echo(echo: &Echo, parameter: &str, value: f64) -> Echo {
    let mut out: Echo =
        echo.iter().filter(|(k, _)| !matches!(k.as_str(), "param" | "values" | "out")).cloned().collect();
    let set = |out: &mut Echo, k: &str, v: String| match out.iter_mut().find(|(key, _)| key == k) {
        Some(e) => e.1 = v,
        None => out.push((k.to_string(), v)),
    };
    match parameter {
        "gamma" => set(&mut out, "gamma", value.to_string()),
        _ => {
            if value == 2.0 {
                set(&mut out, "evaluator", "bgl".into());
                out.retain(|(k, _)| k != "filter" && k != "delta");
            } else {
                set(&mut out, "evaluator", "filtered".into());
                set(&mut out, "filter", "power".into());
                set(&mut out, "delta", value.to_string());
            }
        }
    }
    out
}

fn sweep_point_of(curve: &SffCurve<f64>) -> (String, Option<f64>) {
    match (curve.meta("sweep_parameter"), curve.meta("sweep_value").and_then(|v| v.parse().ok())) {
        (Some(p), Some(v)) => (p.to_string(), Some(v)),
        _ => ("none".into(), None),
    }
}

/// Replaces the placeholder plateau of a formula mode by its ensemble value.
fn with_formula(
    analysis: &AnalysisConfig<f64>,
    formula: Option<PlateauMode>,
    spec: &EnsembleSpec<f64>,
) -> Result<AnalysisConfig<f64>, CliError> {
    let Some(mode) = formula else { return Ok(*analysis) };
    let spectra = realization_spectra(&spec.model, spec.master_seed, spec.n_realizations, spec.workers)?;
    let f_p = ensemble_plateau(&spectra, spec.beta, mode, DEFAULT_DEGENERACY_TOL)?;
    Ok(AnalysisConfig { plateau: PlateauReference::Value(f_p), ..*analysis })
}

fn render_plot(inputs: &[PathBuf], title: Option<&str>) -> Result<String, CliError> {
    let headers: Vec<String> = inputs.iter().map(|p| csvio::sniff_header(p)).collect::<Result<_, _>>()?;
    let is_metrics = |h: &String| h.starts_with("parameter,");
    if headers.iter().all(is_metrics) {
        let mut series = Vec::new();
        let mut pname = String::from("value");
        for p in inputs {
            let (rows, _) = csvio::read_metrics(p)?;
            let mut s = Series { label: file_label(p), x: Vec::new(), y: Vec::new() };
            for r in &rows {
                if let (Some(v), Some(m)) = (r.value, &r.metrics) {
                    s.x.push(v);
                    s.y.push(m.ratio);
                    pname = r.parameter.clone();
                }
            }
            series.push(s);
        }
        let log_x = pname == "gamma";
        Ok(plot::render(&series, Style::Markers, log_x, false, &pname, "t_p / t_d", title.unwrap_or("ramp ratio")))
    } else if headers.iter().any(is_metrics) {
        Err(CliError::Usage("plot inputs must be all curve files or all metrics files".into()))
    } else {
        let mut series = Vec::new();
        for p in inputs {
            let (curve, _) = csvio::read_curve(p)?;
            series.push(Series { label: file_label(p), x: curve.times.clone(), y: curve.mean.clone() });
        }
        Ok(plot::render(&series, Style::Lines, true, true, "t", "F(t)", title.unwrap_or("spectral form factor")))
    }
}

fn file_label(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}
