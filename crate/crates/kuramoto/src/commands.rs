//! Subcommand implementations. Each writes its result files into the output
//! directory and returns a short human-readable summary.

use kuramoto_core::bifurcation::{self, SweepMode, SweepOptions};
use kuramoto_core::ensemble::{self, PhaseInit};
use kuramoto_core::freqdist::{FrequencyMarginal, WeightSpec};
use kuramoto_core::oa::{self, ReducedOA};
use kuramoto_core::pls::{self, PlsBranchPoint, PlsStability};
use kuramoto_core::spectral::{self, Grid, GridSpec, Perturbation, Profile, RunOptions};
use kuramoto_core::volterra::{self, KernelOptions, VolterraSystem};
use kuramoto_core::{linstab, Complex64};
use rayon::prelude::*;
use std::path::Path;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::exec::Parallel;
use crate::output::{self, num, OutDir};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Stability,
    Pls,
    Simulate,
    Ensemble,
    Volterra,
    OaCheck,
    OaReduce,
    Bifurcate,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Stability => "stability",
            Command::Pls => "pls",
            Command::Simulate => "simulate",
            Command::Ensemble => "ensemble",
            Command::Volterra => "volterra",
            Command::OaCheck => "oa-check",
            Command::OaReduce => "oa-reduce",
            Command::Bifurcate => "bifurcate",
        }
    }
}

/// Runs one subcommand; the effective config is written first.
pub fn dispatch(cmd: Command, cfg: &RunConfig, base: Option<&Path>, out: &OutDir) -> Result<String, CliError> {
    out.write_bytes("config.toml", cfg.to_toml().as_bytes())?;
    let g = cfg.marginal(base)?;
    match cmd {
        Command::Stability => stability(cfg, &g, out),
        Command::Pls => pls_cmd(cfg, &g, out),
        Command::Simulate => simulate(cfg, &g, out),
        Command::Ensemble => ensemble_cmd(cfg, &g, out),
        Command::Volterra => volterra_cmd(cfg, &g, out),
        Command::OaCheck => oa_check(cfg, &g, out),
        Command::OaReduce => oa_reduce(cfg, &g, out),
        Command::Bifurcate => bifurcate(cfg, &g, out),
    }
}

fn leading(roots: &[Complex64]) -> Option<Complex64> {
    roots.iter().copied().max_by(|a, b| a.re.total_cmp(&b.re))
}

fn root_cols(z: Option<Complex64>) -> [String; 2] {
    match z {
        Some(z) => [num(z.re), num(z.im)],
        None => [String::new(), String::new()],
    }
}

fn stability(cfg: &RunConfig, g: &FrequencyMarginal, out: &OutDir) -> Result<String, CliError> {
    let ks = cfg.resolved().stability.couplings;
    let reports: Vec<_> = ks.par_iter().map(|&k| linstab::check_homog_stability(g, k)).collect();
    let mut rows = Vec::new();
    let mut summary = String::new();
    for rep in reports {
        let rep = rep?;
        let root = leading(&rep.unstable_roots);
        let [re, im] = root_cols(root);
        rows.push(vec![num(rep.coupling), rep.stable.to_string(), rep.winding_number.to_string(), re, im, num(rep.boundary_margin)]);
        summary += &format!(
            "K = {}: {}{}\n",
            rep.coupling,
            if rep.stable { "stable" } else { "unstable" },
            root.map(|z| format!(", leading root {:.6} {:+.6}i", z.re, z.im)).unwrap_or_default()
        );
    }
    out.write_csv("stability.csv", &["K", "stable", "winding", "root_re", "root_im", "margin"], &rows)?;
    Ok(summary)
}

fn classified_pls(cfg: &RunConfig, g: &FrequencyMarginal, k: f64) -> Result<Vec<PlsBranchPoint>, CliError> {
    let seeds: Vec<(f64, f64)> = cfg.pls.seeds.iter().map(|s| (s[0], s[1])).collect();
    let found = pls::solve_pls(g, k, &seeds)?;
    found.par_iter().map(|p| pls::pls_stability(g, k, p).map_err(CliError::from)).collect()
}

fn pls_cmd(cfg: &RunConfig, g: &FrequencyMarginal, out: &OutDir) -> Result<String, CliError> {
    let k = cfg.coupling;
    let sols = classified_pls(cfg, g, k)?;
    let rows: Vec<Vec<String>> = sols
        .iter()
        .map(|p| {
            let [re, im] = root_cols(p.leading_root);
            vec![num(k), num(p.r), num(p.omega), num(p.residual), p.stability.as_str().to_string(), re, im]
        })
        .collect();
    out.write_csv("pls.csv", &["K", "r", "omega", "residual", "stability", "root_re", "root_im"], &rows)?;
    let mut s = format!("K = {k}: {} PLS found\n", sols.len());
    for p in &sols {
        s += &format!("  r = {:.9}, Omega = {:+.9}, {}\n", p.r, p.omega, p.stability.as_str());
    }
    Ok(s)
}

fn perturbation(cfg: &RunConfig) -> Perturbation {
    let p = &cfg.perturbation;
    let profile = if p.profile == "harmonic" { Profile::Harmonic(p.eps) } else { Profile::Bump(p.eps) };
    Perturbation { mode: p.mode, profile }
}

fn simulate(cfg: &RunConfig, g: &FrequencyMarginal, out: &OutDir) -> Result<String, CliError> {
    let spec = cfg.grid_spec();
    let mut state = spectral::init_state(g, cfg.coupling, spec, &[perturbation(cfg)])?;
    let mut opts = RunOptions::new(cfg.run.t_end, cfg.spectral_dt(), cfg.run.sample_every);
    opts.norm = cfg.run.norm_rate.map(WeightSpec::Exponential);
    let rec = spectral::run(&mut state, &opts)?;
    let (header, rows) = output::trajectory_rows(&rec);
    out.write_csv("trajectory.csv", &header, &rows)?;
    out.write_bytes("trajectory.gp", output::trajectory_gp("trajectory.csv", "trajectory.png").as_bytes())?;
    if cfg.run.snapshot {
        let mut rows = Vec::new();
        for l in 0..=spec.modes {
            for (k, w) in state.mode(l).iter().enumerate() {
                rows.push(vec![l.to_string(), num(spec.tau(k)), num(w.re), num(w.im)]);
            }
        }
        out.write_csv("snapshot.csv", &["l", "tau", "re", "im"], &rows)?;
    }
    let r = rec.r_values.last().copied().unwrap_or_default();
    Ok(format!("t = {}: |r| = {:.9}\n", rec.times.last().copied().unwrap_or(0.0), r.norm()))
}

fn ensemble_cmd(cfg: &RunConfig, g: &FrequencyMarginal, out: &OutDir) -> Result<String, CliError> {
    let en = &cfg.ensemble;
    let init = if en.init == "uniform" { PhaseInit::Uniform } else { PhaseInit::Bump(en.eps) };
    let mut e = ensemble::sample_ensemble(g, en.n, en.seed, init)?.with_coupling(cfg.coupling);
    let t_end = en.t_end.unwrap_or(cfg.run.t_end);
    let rec = ensemble::integrate_ensemble_with(&mut e, t_end, cfg.ensemble_dt(), en.sample_every, &Parallel)?;
    let (header, rows) = output::trajectory_rows(&rec);
    out.write_csv("trajectory.csv", &header, &rows)?;
    out.write_bytes("trajectory.gp", output::trajectory_gp("trajectory.csv", "trajectory.png").as_bytes())?;
    let r = rec.r_values.last().copied().unwrap_or_default();
    Ok(format!("N = {}, t = {t_end}: |r| = {:.9}\n", en.n, r.norm()))
}

/// The stationary PLS with the largest r (the candidate for stability).
fn main_pls(cfg: &RunConfig, g: &FrequencyMarginal) -> Result<PlsBranchPoint, CliError> {
    let sols = classified_pls(cfg, g, cfg.coupling)?;
    sols.into_iter()
        .filter(|p| p.omega.abs() < 1e-9)
        .max_by(|a, b| a.r.total_cmp(&b.r))
        .ok_or_else(|| CliError::Validation(vec![format!("no stationary PLS exists at coupling {}", cfg.coupling)]))
}

fn volterra_cmd(cfg: &RunConfig, g: &FrequencyMarginal, out: &OutDir) -> Result<String, CliError> {
    let v = &cfg.volterra;
    let k = cfg.coupling;
    let mut summary = String::new();
    let (sys, pls_point) = if v.kernel == "hom" {
        let n = (v.horizon / v.h).round() as usize + 1;
        let kernel: Vec<Complex64> = (0..n).map(|i| volterra::kernel_hom(g, k, i as f64 * v.h)).collect();
        // Free transport of the bump ε·e^{−|τ|}ĝ in mode 1, read at τ = 0.
        let forcing: Vec<Complex64> =
            (0..n).map(|i| i as f64 * v.h).map(|t| g.fourier(t) * (v.eps * (-t).exp())).collect();
        (VolterraSystem::scalar(v.h, &kernel, &forcing)?, None)
    } else {
        let p = main_pls(cfg, g)?;
        let mut opts = KernelOptions::for_grid(GridSpec { grid: Grid::HalfLine, ..cfg.grid_spec() }, v.horizon);
        opts.stride = ((v.h / opts.dt).round() as usize).max(1);
        (volterra::kernel_pls(g, &p, &opts)?, Some(p))
    };
    let sys = volterra::resolvent(volterra::solve_volterra(sys)?)?;
    let x = sys.solution.as_ref().expect("solved");
    let r = sys.resolvent.as_ref().expect("resolvent computed");
    let d = sys.dim;
    let mut header = vec!["t".to_string()];
    for i in 1..=d {
        header.push(format!("x{i}_re"));
        header.push(format!("x{i}_im"));
    }
    for i in 1..=d {
        for j in 1..=d {
            header.push(format!("R{i}{j}_re"));
            header.push(format!("R{i}{j}_im"));
        }
    }
    let rows: Vec<Vec<String>> = sys
        .times()
        .iter()
        .enumerate()
        .map(|(n, t)| {
            let mut row = vec![num(*t)];
            for i in 0..d {
                row.push(num(x[n][i].re));
                row.push(num(x[n][i].im));
            }
            for i in 0..d {
                for j in 0..d {
                    row.push(num(r[n][i][j].re));
                    row.push(num(r[n][i][j].im));
                }
            }
            row
        })
        .collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    out.write_csv("volterra.csv", &header, &rows)?;
    summary += &format!(
        "samples = {}, solution residual = {:.3e}, resolvent residual = {:.3e}\n",
        sys.len(),
        sys.residual().unwrap_or(f64::NAN),
        sys.resolvent_residual().unwrap_or(f64::NAN)
    );
    if let Some(split) = volterra::split_resolvent(&sys) {
        summary += &format!("resolvent: ∫|R − C| = {:.6e}, |C| = {:.6e}\n", split.q_l1, split.constant[0][0].norm());
    }
    if v.laplace_check {
        let mut rows = Vec::new();
        for zz in &v.z {
            let z = Complex64::new(zz[0], zz[1]);
            let lap = volterra::kernel_laplace(&sys, z);
            let want: [[Complex64; 2]; 2] = match &pls_point {
                Some(p) => pls::stability_matrix(g, k, z, p.r, p.omega)?.entries.map(|row| row.map(|e| e * (0.5 * k))),
                None => {
                    let z0 = Complex64::new(0.0, 0.0);
                    [[g.laplace(z)? * (0.5 * k), z0], [z0, z0]]
                }
            };
            let err = (0..d)
                .flat_map(|i| (0..d).map(move |j| (i, j)))
                .map(|(i, j)| (lap[i][j] - want[i][j]).norm())
                .fold(0.0, f64::max);
            summary += &format!("laplace check z = {z}: max entry error {err:.3e}\n");
            rows.push(vec![num(z.re), num(z.im), num(err)]);
        }
        out.write_csv("laplace_check.csv", &["z_re", "z_im", "max_error"], &rows)?;
    }
    Ok(summary)
}

fn oa_check(cfg: &RunConfig, g: &FrequencyMarginal, out: &OutDir) -> Result<String, CliError> {
    let o = &cfg.oa;
    let spec = GridSpec { modes: cfg.grid.modes.max(2 * o.n_max), nodes: o.nodes, tau_max: o.tau_max, grid: Grid::FullLine };
    let mut state = spectral::init_state(g, cfg.coupling, spec, &[Perturbation::bump(1, o.eps)])?;
    let dt = cfg.run.dt.unwrap_or(0.5 * spec.dtau()).min(spec.dtau());
    let every = ((o.sample_dt / dt).round() as usize).max(1);
    let mut samples: Vec<(f64, f64)> = Vec::new();
    spectral::run_with(&mut state, &RunOptions::new(cfg.run.t_end, dt, every), |st| {
        samples.push((st.time(), oa::deviation(st, o.a, o.n_max)?.norm));
        Ok(())
    })?;
    let rows: Vec<Vec<String>> = (0..samples.len())
        .map(|i| {
            let rate = if i >= 2 { running_rate(&samples[..=i]).map(num).unwrap_or_default() } else { String::new() };
            vec![num(samples[i].0), num(samples[i].1), rate]
        })
        .collect();
    out.write_csv("oa_check.csv", &["t", "norm_w", "fitted_rate"], &rows)?;
    out.write_bytes(
        "oa_check.gp",
        b"set datafile separator ','\nset terminal pngcairo size 900,600\nset output 'oa_check.png'\nset xlabel 't'\nset ylabel '||w||'\nset logscale y\nplot 'oa_check.csv' skip 1 using 1:2 with linespoints title '||w(t)||'\n",
    )?;
    let check = oa::decay_check(&samples, o.a)?;
    Ok(format!(
        "fitted rate {:.6} (required {:.6}): {}; pointwise bound {}\n",
        check.rate,
        0.9 * o.a,
        if check.passed { "pass" } else { "fail" },
        if check.inequality_holds { "holds" } else { "violated" }
    ))
}

fn running_rate(s: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = s.iter().filter(|p| p.1 > 0.0).map(|&(t, w)| (t, w.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    Some(-sxy / sxx)
}

fn oa_reduce(cfg: &RunConfig, g: &FrequencyMarginal, out: &OutDir) -> Result<String, CliError> {
    let ncomp = g.components().map(|c| c.len()).unwrap_or(0);
    let amps: Vec<Complex64> = if cfg.oa.amplitudes.len() == 1 {
        vec![Complex64::new(cfg.oa.amplitudes[0][0], cfg.oa.amplitudes[0][1]); ncomp.max(1)]
    } else {
        cfg.oa.amplitudes.iter().map(|a| Complex64::new(a[0], a[1])).collect()
    };
    let mut red = ReducedOA::new(g, cfg.coupling, amps)?;
    let dt = cfg.run.dt.unwrap_or(0.01);
    let rec = red.integrate(cfg.run.t_end, dt, cfg.run.sample_every)?;
    let rows: Vec<Vec<String>> = rec.times.iter().zip(&rec.r_values).map(|(t, r)| vec![num(*t), num(r.re), num(r.im)]).collect();
    out.write_csv("oa_reduce.csv", &["t", "re_r", "im_r"], &rows)?;
    let r = rec.r_values.last().copied().unwrap_or_default();
    Ok(format!("t = {}: |r| = {:.9}\n", cfg.run.t_end, r.norm()))
}

fn bifurcate(cfg: &RunConfig, g: &FrequencyMarginal, out: &OutDir) -> Result<String, CliError> {
    let b = &cfg.bifurcate;
    let mode = SweepMode::parse(&b.mode).expect("validated");
    let opts = SweepOptions { mode, ..SweepOptions::default() };
    let d = match mode {
        SweepMode::Continuation => bifurcation::sweep_with(g, b.k_min, b.k_max, b.step, &opts)?,
        SweepMode::Multistart => {
            let ks = bifurcation::k_grid(b.k_min, b.k_max, b.step)?;
            let points = ks.par_iter().map(|&k| bifurcation::solve_point(g, k, &[])).collect();
            bifurcation::assemble(g, b.k_min, b.k_max, b.step, points, &opts)?
        }
    };
    output::emit_diagram(&d, out)?;
    let branches = d.rows.iter().map(|r| r.branch).max().unwrap_or(0);
    let stable = d.rows.iter().filter(|r| r.branch != 0 && r.stability == PlsStability::Stable).count();
    let mut s = format!("{} rows, {branches} PLS branches ({stable} stable rows), {} events\n", d.rows.len(), d.events.len());
    for e in &d.events {
        s += &format!("  {:<12} K = {:.4} (bracket {:.1e})\n", e.kind.as_str(), e.coupling, e.bracket);
    }
    Ok(s)
}
