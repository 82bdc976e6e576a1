// Copyright 2026 bgl-sff Contributors
// SPDX-License-Identifier: Apache-2.0

//! Acceptance suite: one `[PASS]`/`[FAIL]` line per criterion.
//!
//! Runs as a plain binary (`harness = false`). Set `BGLSFF_FULL_SCALE=1` to
//! include the full-scale run, otherwise it is reported as `[SKIP]`.

use std::f64::consts::SQRT_2;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use bgl_sff::analysis::specialize;
use bgl_sff::spectral::DEFAULT_DEGENERACY_TOL;
use bgl_sff::{
    coherent_gibbs, eigensystem_of, ensemble_plateau, evolve_bgl_closed, fidelity, find_dip, goe_instance,
    integrate_bgl_ode, integrate_bgl_ode_energy_basis, integrate_bgl_pure, overlap, purity, realization_spectra,
    run_ensemble, sff_bgl, sff_via_kernel, smooth_curve, sweep, syk_instance, tail_average, AnalysisConfig,
    EnsembleSpec, Evaluator, GoeParams, Model, OdeConfig, OdeSettings, PlateauMode, Spectrum, SweepParameter,
    SweepResult, SykParams, TimeGrid, WFunction, XSource,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

type Outcome = Result<(bool, String), String>;
type Criterion = (&'static str, &'static str, fn() -> Outcome);

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn syk(n_majorana: usize) -> Model<f64> {
    Model::Syk(SykParams { n_majorana, j_scale: 1.0, seed: 0 })
}

fn ensemble(model: Model<f64>, evaluator: Evaluator<f64>, beta: f64, gamma: f64, n: usize) -> EnsembleSpec<f64> {
    EnsembleSpec { n_realizations: n, master_seed: 42, ..EnsembleSpec::new(model, evaluator, beta, gamma) }
}

fn random_spectrum(rng: &mut ChaCha20Rng, max_dim: usize, half_width: f64) -> Spectrum<f64> {
    let d = rng.random_range(1..=max_dim);
    let mut e: Vec<f64> = (0..d).map(|_| rng.random_range(-half_width..half_width)).collect();
    // some spectra get an exact degeneracy
    if d > 1 && rng.random_bool(0.2) {
        e[1] = e[0];
    }
    Spectrum::new(e).unwrap()
}

/// Fidelity of the closed-form BGL state, summed directly:
/// `|sum_n p_n g_n e^{-i E_n t}|^2 / sum_n p_n g_n^2` with Gibbs weights `p_n`
/// and `g_n = e^{-gamma t (E_n^2 - E_ref^2)}`; F does not depend on `E_ref`.
fn direct_bgl_fidelity(e: &[f64], beta: f64, gamma: f64, t: f64) -> f64 {
    let emin = e.iter().cloned().fold(f64::INFINITY, f64::min);
    let eref2 = e.iter().map(|x| x * x).fold(f64::INFINITY, f64::min);
    let z: f64 = e.iter().map(|&x| (-beta * (x - emin)).exp()).sum();
    let (mut re, mut im, mut den) = (0.0, 0.0, 0.0);
    for &x in e {
        let p = (-beta * (x - emin)).exp() / z;
        let g = (-gamma * t * (x * x - eref2)).exp();
        re += p * g * (x * t).cos();
        im -= p * g * (x * t).sin();
        den += p * g * g;
    }
    (re * re + im * im) / den
}

fn ac1() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let times = [0.0, 0.01, 0.1, 0.5, 1.0, 3.0, 10.0, 30.0, 100.0, 1000.0];
    let (mut worst_direct, mut worst_state, mut checks) = (0.0f64, 0.0f64, 0usize);
    for _ in 0..100 {
        let s = random_spectrum(&mut rng, 8, 3.0);
        for beta in [0.0, 1.0, 5.0] {
            let psi = coherent_gibbs(&s, beta).map_err(err)?;
            let rho0 = psi.projector();
            for gamma in [0.0, 1e-3, 1.0] {
                for &t in &times {
                    let f = sff_bgl(&s, beta, gamma, t).map_err(err)?;
                    let rho_t = evolve_bgl_closed(&rho0, &s, gamma, t, &WFunction::Identity).map_err(err)?;
                    let via_state = fidelity(&psi, &rho_t).map_err(err)?;
                    worst_state = worst_state.max((f - via_state).abs());
                    worst_direct = worst_direct.max((f - direct_bgl_fidelity(s.energies(), beta, gamma, t)).abs());
                    checks += 1;
                }
            }
        }
    }
    let worst = worst_state.max(worst_direct);
    Ok((
        worst <= 1e-12,
        format!(
            "{checks} points; max |sff_bgl - <psi|rho_t|psi>| = {worst_state:.2e}, vs direct sum {worst_direct:.2e} (tol 1e-12)"
        ),
    ))
}

fn ac2() -> Outcome {
    let h = goe_instance(&GoeParams { dim: 16, seed: 7, scale: 1.0 }, 0).map_err(err)?;
    let s = eigensystem_of(&h).map_err(err)?.spectrum;
    let rho0 = coherent_gibbs(&s, 1.0).map_err(err)?.projector();
    let c = SQRT_2;
    let x = h.matrix.map(|z| z * c);
    let gamma = 0.1;
    let grid: Vec<f64> = (0..=50).map(|k| k as f64 * 0.2 / gamma).collect();
    let max_err = |dt: f64| -> Result<f64, String> {
        let traj = integrate_bgl_ode(&rho0, &h, &x, gamma, &OdeConfig::new(dt, grid.clone())).map_err(err)?;
        let mut worst = 0.0f64;
        for (t, st) in traj.times.iter().zip(&traj.states) {
            let exact = evolve_bgl_closed(&rho0, &s, gamma, *t, &WFunction::Linear(c)).map_err(err)?;
            let diff = st.matrix() - exact.matrix();
            worst = diff.iter().map(|z| z.norm()).fold(worst, f64::max);
        }
        Ok(worst)
    };
    let fine = max_err(0.01)?;
    let coarse = max_err(0.1)?;
    let half = max_err(0.05)?;
    let order_ratio = coarse / half;
    let pass = fine <= 1e-6 && (8.0..=32.0).contains(&order_ratio);
    Ok((
        pass,
        format!(
            "d=16, t in [0, 10/gamma]: max error {fine:.2e} at dt=0.01 (tol 1e-6); error(0.1)/error(0.05) = {order_ratio:.2} (want 16 within x2)"
        ),
    ))
}

fn ac3() -> Outcome {
    // closed-form path, commuting dephasing
    let h = syk_instance(&SykParams { n_majorana: 12, j_scale: 1.0, seed: 3 }).map_err(err)?;
    let s = eigensystem_of(&h).map_err(err)?.spectrum;
    let rho0 = coherent_gibbs(&s, 1.0).map_err(err)?.projector();
    let mut closed_worst = 0.0f64;
    for k in 0..=60 {
        let t = 10f64.powf(-1.0 + k as f64 / 10.0);
        let rho = evolve_bgl_closed(&rho0, &s, 1e-2, t, &WFunction::Identity).map_err(err)?;
        closed_worst = closed_worst.max((purity(&rho) - 1.0).abs());
    }

    // ODE paths, non-commuting dephasing
    let params = GoeParams { dim: 50, seed: 11, scale: 1.0 };
    let h = goe_instance(&params, 0).map_err(err)?;
    let x = goe_instance(&params, 1).map_err(err)?.matrix;
    let eig = eigensystem_of(&h).map_err(err)?;
    let x_e = eig.to_energy_basis(&x);
    let psi = coherent_gibbs(&eig.spectrum, 1.0).map_err(err)?;
    let grid: Vec<f64> = (0..=50).map(|k| k as f64).collect();
    let cfg = OdeConfig::new(0.01, grid);
    let (mut dens_worst, mut pure_worst, mut agree) = (0.0f64, 0.0f64, 0.0f64);
    for gamma in [0.05, 0.2] {
        let traj = integrate_bgl_ode_energy_basis(&psi.projector(), &eig.spectrum, &x_e, gamma, &cfg).map_err(err)?;
        let pure = integrate_bgl_pure(&psi, &eig.spectrum, &x_e, gamma, &cfg).map_err(err)?;
        for (rho, phi) in traj.states.iter().zip(&pure.states) {
            dens_worst = dens_worst.max((purity(rho) - 1.0).abs());
            pure_worst = pure_worst.max((purity(&phi.projector()) - 1.0).abs());
            let f_rho = fidelity(&psi, rho).map_err(err)?;
            let f_phi = overlap(&psi, phi).map_err(err)?;
            agree = agree.max((f_rho - f_phi).abs());
        }
    }
    let worst = closed_worst.max(dens_worst).max(pure_worst);
    Ok((
        worst <= 1e-7,
        format!(
            "max |Tr rho^2 - 1|: closed form {closed_worst:.1e}, density ODE (GOE d=50, non-commuting X) {dens_worst:.1e}, \
             pure-state ODE {pure_worst:.1e} (tol 1e-7); density vs pure fidelity gap {agree:.1e}"
        ),
    ))
}

fn ac4() -> Outcome {
    let n = 50;
    let model = syk(12);
    let spectra = realization_spectra(&model, 42, n, None).map_err(err)?;

    let unitary = run_ensemble(&ensemble(model, Evaluator::Unitary, 0.0, 0.0, n)).map_err(err)?;
    let tail_u = tail_average(&unitary, 1.0).map_err(err)?;
    let formula_u = ensemble_plateau(&spectra, 0.0, PlateauMode::Unitary, DEFAULT_DEGENERACY_TOL).map_err(err)?;
    let rel_u = (tail_u / formula_u - 1.0).abs();

    let bgl = run_ensemble(&ensemble(model, Evaluator::Bgl, 5.0, 1e-3, n)).map_err(err)?;
    let tail_b = tail_average(&bgl, 1.0).map_err(err)?;
    let formula_b = ensemble_plateau(&spectra, 5.0, PlateauMode::BglAsymptotic, DEFAULT_DEGENERACY_TOL).map_err(err)?;
    let rel_b = (tail_b / formula_b - 1.0).abs();

    Ok((
        rel_u <= 0.15 && rel_b <= 0.15,
        format!(
            "unitary beta=0: tail {tail_u:.4e} vs degeneracy-aware formula {formula_u:.4e} ({:.1}%, 1/d = {:.4e}); \
             bgl beta=5 gamma=1e-3: tail {tail_b:.4e} vs asymptotic formula {formula_b:.4e} ({:.1}%) (tol 15%)",
            100.0 * rel_u,
            1.0 / 64.0,
            100.0 * rel_b
        ),
    ))
}

fn ratio_list(r: &SweepResult<f64>) -> String {
    r.entries
        .iter()
        .map(|e| match &e.metrics {
            Some(m) if m.resolved() => format!("{}:{:.3}", e.value, m.ratio),
            Some(m) => format!("{}:{:.3}({})", e.value, m.ratio, m.warnings.join("+")),
            None => format!("{}:err", e.value),
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn resolved_ratio(r: &SweepResult<f64>, i: usize) -> Option<f64> {
    r.entries[i].metrics.as_ref().filter(|m| m.resolved()).map(|m| m.ratio)
}

fn ac5() -> Outcome {
    let gammas = [0.0, 1e-4, 1e-3, 1e-2];
    let cfg = AnalysisConfig::default();
    let mut pass = true;
    let mut parts = Vec::new();
    for n_majorana in [12, 14] {
        let template = ensemble(syk(n_majorana), Evaluator::Bgl, 5.0, 0.0, 200);
        let r = sweep(&template, SweepParameter::Gamma, &gammas, &cfg).map_err(err)?;
        let base = resolved_ratio(&r, 0);
        let best = (1..gammas.len()).filter_map(|i| resolved_ratio(&r, i)).fold(f64::NAN, f64::max);
        let argmax = r.argmax_ratio();
        let gain = base.map(|b| best / b).unwrap_or(f64::NAN);
        let interior = matches!(argmax, Some(i) if i > 0 && i + 1 < gammas.len());
        let ok = gain >= 3.0 && interior;
        pass &= ok;
        parts.push(format!(
            "N={n_majorana}: ratios [{}], best/gamma0 = {gain:.2} (want >= 3), argmax gamma = {}",
            ratio_list(&r),
            argmax.map(|i| gammas[i].to_string()).unwrap_or("none".into())
        ));
    }
    Ok((pass, parts.join("; ")))
}

/// Filters are compared at each beta's best BGL rate: gamma is first swept
/// with the Gaussian filter and the argmax is used for the delta sweep.
fn ac6() -> Outcome {
    let gammas = [1e-4, 1e-3, 1e-2, 1e-1, 0.3, 1.0, 3.0];
    let deltas = [0.0, 0.5, 1.0, 2.0, 4.0, 6.0];
    let cfg = AnalysisConfig::default();
    let mut pass = true;
    let mut parts = Vec::new();
    for beta in [1.0, 5.0] {
        let template = ensemble(syk(12), Evaluator::Bgl, beta, 0.0, 200);
        let g = sweep(&template, SweepParameter::Gamma, &gammas, &cfg).map_err(err)?;
        let gamma = g.argmax_ratio().map(|i| gammas[i]).ok_or("no resolved ratio in the gamma sweep")?;
        let template = EnsembleSpec { gamma, ..template };
        let r = sweep(&template, SweepParameter::Delta, &deltas, &cfg).map_err(err)?;
        let argmax = r.argmax_ratio().map(|i| deltas[i]);
        let r2 = resolved_ratio(&r, 3);
        // an unresolved ratio (no plateau entry) cannot exceed delta = 2
        let below = [1, 2].iter().all(|&i| match (r.entries[i].metrics.as_ref().map(|m| m.ratio), r2) {
            (Some(x), Some(y)) => x < y,
            (None, Some(_)) => true,
            _ => false,
        });
        let ok = argmax == Some(2.0) && below;
        pass &= ok;
        parts.push(format!(
            "beta={beta} (best gamma {gamma}): ratios [{}], argmax delta = {}, delta in {{1/2, 1}} below delta=2: {below}",
            ratio_list(&r),
            argmax.map(|d| d.to_string()).unwrap_or("none".into())
        ));
    }
    Ok((pass, parts.join("; ")))
}

fn ac7() -> Outcome {
    let model = Model::GoeWithX { h0: GoeParams { dim: 50, seed: 0, scale: 1.0 }, x_scale: 1.0 };
    let ode = Evaluator::Ode(OdeSettings { x_source: XSource::FromModel, dt: 0.05, renormalize_every: 1 });
    let grid = TimeGrid::new(0.1, 1e3, 16).map_err(err)?;
    let mut pass = true;
    let mut parts = Vec::new();
    for beta in [0.0, 1.0] {
        let mut depths = Vec::new();
        for gamma in [0.0, 0.05, 0.2] {
            let spec = EnsembleSpec { grid, ..ensemble(model, ode.clone(), beta, gamma, 100) };
            let curve = run_ensemble(&spec).map_err(err)?;
            let smooth = smooth_curve(&curve, 0.5).map_err(err)?;
            let dip = find_dip(&smooth, curve.times[0]).map_err(err)?;
            let f_p = tail_average(&curve, 1.0).map_err(err)?;
            depths.push(f_p / dip.f_d);
        }
        let monotone = depths.windows(2).all(|w| w[1] < w[0]);
        let toward_one = (depths[2] - 1.0).abs() < (depths[0] - 1.0).abs();
        pass &= monotone && toward_one;
        parts.push(format!(
            "beta={beta}: F_p/F_d = {:.3} / {:.3} / {:.3} at gamma = 0 / 0.05 / 0.2",
            depths[0], depths[1], depths[2]
        ));
    }
    Ok((pass, format!("{} (want strictly decreasing toward 1)", parts.join("; "))))
}

fn ac8() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(8);
    let (mut worst, mut converged, mut max_nodes) = (0.0f64, 0, 0);
    for _ in 0..50 {
        let s = random_spectrum(&mut rng, 32, 2.0);
        let beta = rng.random_range(0.0..5.0);
        let gamma = 10f64.powf(rng.random_range(-4.0..1.0));
        let gt = 10f64.powf(rng.random_range(-4.0..2.0));
        let t = gt / gamma;
        let k = sff_via_kernel(&s, beta, gamma, t, bgl_sff::sff::DEFAULT_KERNEL_NODES).map_err(err)?;
        let f = sff_bgl(&s, beta, gamma, t).map_err(err)?;
        let rel = (k.value - f).abs() / f.abs().max(f64::MIN_POSITIVE);
        worst = worst.max(rel);
        converged += usize::from(k.converged);
        max_nodes = max_nodes.max(k.nodes);
    }
    Ok((
        worst <= 1e-6,
        format!(
            "50 samples, gamma t in [1e-4, 1e2]: max relative error {worst:.2e} (tol 1e-6); \
             {converged}/50 converged, at most {max_nodes} nodes"
        ),
    ))
}

fn data_section(path: &Path) -> Result<String, String> {
    let text = std::fs::read_to_string(path).map_err(err)?;
    Ok(text.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n"))
}

fn ac9() -> Outcome {
    let dir = tempfile::tempdir().map_err(err)?;
    let jobs: [(&str, &[&str]); 3] = [
        (
            "syk-bgl",
            &["sff", "--model", "syk", "--majoranas", "10", "--beta", "5", "--gamma", "1e-3", "--realizations", "40"],
        ),
        (
            "goe-ode",
            &[
                "sff",
                "--model",
                "goe-with-x",
                "--dim",
                "12",
                "--evaluator",
                "ode",
                "--gamma",
                "0.1",
                "--beta",
                "1",
                "--realizations",
                "12",
                "--t-max",
                "30",
                "--points-per-decade",
                "8",
            ],
        ),
        (
            "sweep",
            &[
                "sweep",
                "--model",
                "syk",
                "--majoranas",
                "10",
                "--beta",
                "5",
                "--param",
                "gamma",
                "--values",
                "0,1e-3,1e-2",
                "--realizations",
                "16",
            ],
        ),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, args) in jobs {
        let mut sections = Vec::new();
        let mut whole = Vec::new();
        for workers in [1, 4, 8] {
            let sub = dir.path().join(format!("w{workers}"));
            std::fs::create_dir_all(&sub).map_err(err)?;
            let out = sub.join(format!("{name}.csv"));
            let status = Command::new(env!("CARGO_BIN_EXE_bglsff"))
                .current_dir(&sub)
                .args(args)
                .args(["--workers", &workers.to_string(), "--out", &format!("{name}.csv")])
                .output()
                .map_err(err)?;
            if !status.status.success() {
                return Err(format!("{name} failed: {}", String::from_utf8_lossy(&status.stderr)));
            }
            sections.push(data_section(&out)?);
            whole.push(std::fs::read(&out).map_err(err)?);
        }
        let same = sections.windows(2).all(|w| w[0] == w[1]);
        let same_file = whole.windows(2).all(|w| w[0] == w[1]);
        pass &= same;
        parts.push(format!("{name}: data identical {same}, whole file identical {same_file}"));
    }
    Ok((pass, format!("workers 1/4/8 via the CLI; {}", parts.join("; "))))
}

fn ac10() -> Outcome {
    let mut parts = Vec::new();
    for beta in [0.0, 1.0, 5.0] {
        let spec = ensemble(syk(26), Evaluator::Bgl, beta, 1e-3, 100);
        let unitary = specialize(&spec, SweepParameter::Gamma, 0.0).map_err(err)?;
        let c0 = run_ensemble(&unitary).map_err(err)?;
        let c1 = run_ensemble(&spec).map_err(err)?;
        let cfg = AnalysisConfig::default();
        let m0 = bgl_sff::ramp_metrics(&c0, &cfg).map_err(err)?;
        let m1 = bgl_sff::ramp_metrics(&c1, &cfg).map_err(err)?;
        parts.push(format!("beta={beta}: ratio {:.3} (gamma=0) -> {:.3} (gamma=1e-3)", m0.ratio, m1.ratio));
    }
    Ok((true, format!("qualitative only; {}", parts.join("; "))))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("AC-1", "closed form equals fidelity of the evolved state", ac1),
        ("AC-2", "ODE matches closed form for X proportional to H0", ac2),
        ("AC-3", "purity preservation", ac3),
        ("AC-4", "plateau values", ac4),
        ("AC-5", "chaos enhancement versus gamma", ac5),
        ("AC-6", "Gaussian filter optimality", ac6),
        ("AC-7", "non-commuting dephasing suppresses the dip", ac7),
        ("AC-8", "kernel representation", ac8),
        ("AC-9", "determinism across worker counts", ac9),
        ("AC-10", "full-scale run (optional)", ac10),
    ];
    let full_scale = std::env::var("BGLSFF_FULL_SCALE").is_ok_and(|v| v == "1");
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (id, title, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| id.eq_ignore_ascii_case(f)) {
            continue;
        }
        if id == "AC-10" && !full_scale {
            println!("[SKIP] {id} {title}: set BGLSFF_FULL_SCALE=1 (SYK N=26, d=8192; hours on a workstation)");
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or(p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default())
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok((true, detail)) => println!("[PASS] {id} {title}: {detail} [{secs:.1}s]"),
            Ok((false, detail)) => {
                failed += 1;
                println!("[FAIL] {id} {title}: {detail} [{secs:.1}s]");
            }
            Err(e) => {
                failed += 1;
                println!("[FAIL] {id} {title}: error: {e} [{secs:.1}s]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
