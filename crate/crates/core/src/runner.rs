//! Configuration-driven experiments: trajectories, steady states, sweeps,
//! kernel and coefficient dumps, and their output files.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use thiserror::Error;

use crate::bath::{BathError, SpectralDensity};
use crate::config::{ConfigError, ExperimentConfig, InitialState, Method, Provenance};
use crate::generators::{
    build_coupled_system, mean_force_state, BuildOptions, Ccqme, CoupledSystem, GenError, GeneratorAction, Lindblad,
    Redfield,
};
use crate::io::{self, IoError};
use crate::linalg::{c, gibbs_state, min_eigenvalue, trace_distance, CMat, LinalgError};
use crate::models::{sigma_z, site_operator, ModelError, ModelSpec};
use crate::oracle::{exact_coefficients, influence_kernels, memory_kernel_green, ExactHo, OracleError};
use crate::propagate::{
    distance_series, integrate, steady_state_of, sweep as run_sweep, time_averaged_distance, IntegrateOptions, PropagateError,
    SweepResult, Trajectory,
};

/// Larger systems keep only diagonals in trajectory snapshots.
const FULL_SNAPSHOT_MAX_DIM: usize = 256;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Bath(#[from] BathError),
    #[error(transparent)]
    Generator(#[from] GenError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("{method}: {source}")]
    Propagate { method: &'static str, source: PropagateError },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("output: {0}")]
    Output(#[from] std::io::Error),
}

impl RunError {
    /// 2 for invalid input, 3 for numerical failures, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Model(_) => 2,
            RunError::Io(_) | RunError::Output(_) => 1,
            _ => 3,
        }
    }
}

/// One resolved experiment: the system, its couplings and its baths.
pub struct Experiment {
    pub cfg: ExperimentConfig,
    pub sys: CoupledSystem,
}

impl Experiment {
    pub fn new(cfg: ExperimentConfig) -> Result<Self, RunError> {
        cfg.validate()?;
        let model = cfg.model.build()?;
        let baths = cfg.bath_specs()?;
        let mut couplings = Vec::with_capacity(baths.len());
        for (b, spec) in cfg.baths.iter().zip(baths) {
            let s = match (cfg.model, b.site) {
                (ModelSpec::IsingChain { length, .. }, Some(site)) => site_operator(&sigma_z(), site, length),
                _ => model.s.clone(),
            };
            couplings.push((s, spec));
        }
        let opts = BuildOptions { eps_deg_rel: cfg.tolerances.eps_deg_rel, eps_den_rel: cfg.tolerances.eps_den_rel };
        let sys = build_coupled_system(&model.h, &couplings, opts)?;
        Ok(Experiment { cfg, sys })
    }

    pub fn generator(&self, m: Method) -> Result<Box<dyn GeneratorAction>, RunError> {
        Ok(match m {
            Method::Redfield => Box::new(Redfield::new(self.sys.clone(), self.cfg.horizon)),
            Method::Lindblad => Box::new(Lindblad::new(self.sys.clone())),
            Method::Ccqme => Box::new(Ccqme::new(self.sys.clone(), self.cfg.horizon)?),
            Method::ExactHo => Box::new(self.exact()?),
        })
    }

    pub fn exact(&self) -> Result<ExactHo, RunError> {
        let ModelSpec::HarmonicOscillator { omega, levels } = self.cfg.model else {
            return Err(ConfigError::Invalid("exact_ho needs the harmonic_oscillator model".into()).into());
        };
        let baths: Vec<_> = self.sys.couplings.iter().map(|b| b.bath).collect();
        Ok(ExactHo::new(omega, levels, &baths)?.with_horizon(self.cfg.horizon)?)
    }

    /// Initial state in the eigenbasis.
    pub fn initial_state(&self) -> Result<CMat, RunError> {
        let dim = self.sys.dim();
        Ok(match &self.cfg.initial {
            InitialState::Gibbs { beta0 } => gibbs_state(self.sys.energies(), *beta0),
            InitialState::Fock { n } => {
                let mut r = CMat::zeros((dim, dim));
                r[[*n, *n]] = c(1.0, 0.0);
                r
            }
            InitialState::Superposition { n, m } => {
                let mut r = CMat::zeros((dim, dim));
                for &i in &[*n, *m] {
                    for &j in &[*n, *m] {
                        r[[i, j]] = c(0.5, 0.0);
                    }
                }
                r
            }
            InitialState::File { path } => read_state(path, dim)?,
        })
    }

    pub fn integrate_options(&self) -> IntegrateOptions {
        let t = &self.cfg.time;
        let tol = &self.cfg.tolerances;
        let mut o = IntegrateOptions::new(t.h, t.t_max, t.stride);
        o.stepper = t.stepper;
        o.trace_tol = tol.trace_tol;
        o.local_tol = tol.local_tol;
        o.self_check = tol.self_check;
        o.store_full = self.sys.dim() <= FULL_SNAPSHOT_MAX_DIM;
        o
    }

    pub fn run_method(&self, m: Method, opts: &IntegrateOptions) -> Result<Trajectory, RunError> {
        let gen = self.generator(m)?;
        let rho0 = self.initial_state()?;
        integrate(gen.as_ref(), &rho0, opts).map_err(|source| RunError::Propagate { method: m.as_str(), source })
    }

    /// Every configured method, concurrently; distances to the oracle when present.
    pub fn run_all(&self) -> RunOutput {
        let opts = self.integrate_options();
        let results: Vec<(Method, Result<Trajectory, RunError>)> =
            self.cfg.methods.par_iter().map(|&m| (m, self.run_method(m, &opts))).collect();
        let mut out = RunOutput { trajectories: Vec::new(), diagnostics: self.sys.diagnostics.iter().map(|d| d.to_string()).collect() };
        let exact = results.iter().find(|(m, _)| *m == Method::ExactHo).and_then(|(_, r)| r.as_ref().ok()).cloned();
        for (m, r) in results {
            let traj = match r {
                Ok(t) => Ok(t),
                Err(RunError::Propagate { method, source: PropagateError::Diverged { t, what, partial } }) => {
                    out.diagnostics.push(format!("{method}: numerical failure at t = {t}: {what}"));
                    Err((t, *partial))
                }
                Err(e) => {
                    out.diagnostics.push(format!("{}: {e}", m.as_str()));
                    continue;
                }
            };
            let dist = match (&exact, &traj) {
                (Some(ex), Ok(tr)) | (Some(ex), Err((_, tr))) => distance_series(tr, ex).ok(),
                _ => None,
            };
            out.trajectories.push(MethodRun { method: m, traj, dist });
        }
        if let ModelSpec::HarmonicOscillator { levels, .. } = self.cfg.model {
            for r in &out.trajectories {
                let tr = match &r.traj {
                    Ok(t) | Err((_, t)) => t,
                };
                let edge = tr.populations.iter().map(|p| p.iter().skip(levels - 5).map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max);
                if edge > 1e-6 {
                    out.diagnostics.push(format!("{}: truncation warning, top-5-level population reaches {edge:.3e}", r.method.as_str()));
                }
            }
        }
        out
    }

    /// Steady state of a method in the eigenbasis.
    pub fn steady(&self, m: Method) -> Result<CMat, RunError> {
        if m == Method::ExactHo {
            return Ok(self.exact()?.steady_state()?);
        }
        let gen = self.generator(m)?;
        let mut o = self.integrate_options();
        o.t_max = self.cfg.tolerances.steady_horizon / self.cfg.gamma_total();
        o.self_check = false;
        let rho0 = self.initial_state()?;
        steady_state_of(gen.as_ref(), self.cfg.tolerances.max_lu_dim, &rho0, &o)
            .map_err(|source| RunError::Propagate { method: m.as_str(), source })
    }

    /// Second-order mean-force state of the first bath.
    pub fn mean_force(&self) -> Result<CMat, RunError> {
        Ok(mean_force_state(&self.sys, 0)?)
    }

    /// Averaging window `2/gamma_total` times the configured factor.
    pub fn relaxation_time(&self) -> f64 {
        let w = self.cfg.sweep.as_ref().map(|s| s.window).unwrap_or(1.0);
        w * 2.0 / self.cfg.gamma_total()
    }
}

pub struct MethodRun {
    pub method: Method,
    /// `Err((t, partial))` when the integration diverged at `t`.
    pub traj: Result<Trajectory, (f64, Trajectory)>,
    pub dist: Option<Vec<f64>>,
}

impl MethodRun {
    pub fn trajectory(&self) -> &Trajectory {
        match &self.traj {
            Ok(t) | Err((_, t)) => t,
        }
    }
}

pub struct RunOutput {
    pub trajectories: Vec<MethodRun>,
    pub diagnostics: Vec<String>,
}

impl RunOutput {
    pub fn get(&self, m: Method) -> Option<&MethodRun> {
        self.trajectories.iter().find(|r| r.method == m)
    }

    pub fn failed(&self) -> bool {
        self.trajectories.iter().any(|r| r.traj.is_err())
    }
}

fn read_state(path: &Path, dim: usize) -> Result<CMat, RunError> {
    // `row,col,re,im` with a header line
    let text = fs::read_to_string(path)?;
    let mut rho = CMat::zeros((dim, dim));
    for (k, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(|s| s.trim()).collect();
        let bad = || ConfigError::Invalid(format!("{}: line {} must be `row,col,re,im`", path.display(), k + 1));
        if f.len() != 4 {
            return Err(bad().into());
        }
        let i: usize = f[0].parse().map_err(|_| bad())?;
        let j: usize = f[1].parse().map_err(|_| bad())?;
        let re: f64 = f[2].parse().map_err(|_| bad())?;
        let im: f64 = f[3].parse().map_err(|_| bad())?;
        if i >= dim || j >= dim {
            return Err(bad().into());
        }
        rho[[i, j]] = c(re, im);
    }
    Ok(rho)
}

fn provenance(cfg: &ExperimentConfig, command: &str, status: &str) -> ExperimentConfig {
    let mut c = cfg.clone();
    c.provenance = Some(Provenance { version: env!("CARGO_PKG_VERSION").into(), command: command.into(), status: status.into() });
    c
}

fn write_manifest(dir: &Path, cfg: &ExperimentConfig, command: &str) -> Result<(), RunError> {
    fs::write(dir.join("manifest.toml"), provenance(cfg, command, "complete").to_toml())?;
    Ok(())
}

fn write_warnings(dir: &Path, lines: &[String]) -> Result<(), RunError> {
    if !lines.is_empty() {
        fs::write(dir.join("warnings.txt"), lines.join("\n") + "\n")?;
    }
    Ok(())
}

/// `run`: one CSV per method, warnings, manifest last.
pub fn run_and_write(exp: &Experiment, dir: &Path) -> Result<RunOutput, RunError> {
    fs::create_dir_all(dir)?;
    let out = exp.run_all();
    let energies: Vec<f64> = exp.sys.energies().to_vec();
    for r in &out.trajectories {
        let name = r.method.as_str();
        io::write_trajectory(&dir.join(format!("{name}.csv")), r.trajectory(), r.dist.as_deref())?;
        io::write_final_populations(&dir.join(format!("{name}_populations.csv")), r.trajectory(), &energies)?;
    }
    write_warnings(dir, &out.diagnostics)?;
    let fatal = out.trajectories.iter().find_map(|r| r.traj.as_ref().err().map(|(t, _)| (r.method, *t)));
    if let Some((m, t)) = fatal {
        return Err(RunError::Propagate {
            method: m.as_str(),
            source: PropagateError::Diverged { t, what: "see warnings.txt".into(), partial: Box::default() },
        });
    }
    if out.trajectories.len() < exp.cfg.methods.len() {
        return Err(RunError::Propagate {
            method: "run",
            source: PropagateError::InvalidOptions(out.diagnostics.last().cloned().unwrap_or_default()),
        });
    }
    write_manifest(dir, &exp.cfg, "run")?;
    Ok(out)
}

/// Steady-state summary of one method.
#[derive(Debug, Clone)]
pub struct SteadyRow {
    pub method: Method,
    pub ground_pop: f64,
    pub min_eig: f64,
    pub dist_to_exact: f64,
    pub dist_to_mean_force: f64,
    pub neg_mass: f64,
}

pub fn steady_rows(exp: &Experiment) -> Result<Vec<SteadyRow>, RunError> {
    let exact = if exp.cfg.methods.contains(&Method::ExactHo) { Some(exp.steady(Method::ExactHo)?) } else { None };
    let mf = exp.mean_force()?;
    let mut rows = Vec::new();
    for &m in &exp.cfg.methods {
        let s = exp.steady(m)?;
        rows.push(SteadyRow {
            method: m,
            ground_pop: s[[0, 0]].re,
            min_eig: min_eigenvalue(&s)?,
            dist_to_exact: match &exact {
                Some(e) => trace_distance(&s, e)?,
                None => f64::NAN,
            },
            dist_to_mean_force: trace_distance(&s, &mf)?,
            neg_mass: crate::propagate::negative_population_mass(&s),
        });
    }
    Ok(rows)
}

pub fn steady_and_write(exp: &Experiment, dir: &Path) -> Result<Vec<SteadyRow>, RunError> {
    fs::create_dir_all(dir)?;
    let rows = steady_rows(exp)?;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(dir.join("steady.csv")).map_err(IoError::from)?;
    w.write_record(["method", "ground_pop", "min_eig", "dist_to_exact", "dist_to_mean_force", "neg_mass"]).map_err(IoError::from)?;
    for r in &rows {
        w.write_record([
            r.method.as_str().to_string(),
            io::fmt(r.ground_pop),
            io::fmt(r.min_eig),
            io::fmt(r.dist_to_exact),
            io::fmt(r.dist_to_mean_force),
            io::fmt(r.neg_mass),
        ])
        .map_err(IoError::from)?;
    }
    w.flush()?;
    write_warnings(dir, &exp.sys.diagnostics.iter().map(|d| d.to_string()).collect::<Vec<_>>())?;
    write_manifest(dir, &exp.cfg, "steady")?;
    Ok(rows)
}

/// Metrics of one sweep cell: time-averaged and maximal distance to the oracle
/// over the relaxation window, and steady-state ground population and minimum eigenvalue.
pub fn sweep_cell(cfg: &ExperimentConfig) -> Result<Vec<(String, f64)>, String> {
    let exp = Experiment::new(cfg.clone()).map_err(|e| e.to_string())?;
    let tau = exp.relaxation_time();
    let mut opts = exp.integrate_options();
    opts.t_max = opts.t_max.max(tau);
    let has_exact = cfg.methods.contains(&Method::ExactHo);
    let exact = if has_exact { Some(exp.run_method(Method::ExactHo, &opts).map_err(|e| e.to_string())?) } else { None };
    let mut metrics = Vec::new();
    for &m in cfg.methods.iter().filter(|&&m| m != Method::ExactHo) {
        let name = m.as_str();
        let (avg, max) = match (exp.run_method(m, &opts), &exact) {
            (Ok(tr), Some(ex)) => {
                let d = distance_series(&tr, ex).map_err(|e| e.to_string())?;
                let avg = time_averaged_distance(&tr.t, &d, tau).map_err(|e| e.to_string())?;
                let max = d.iter().zip(&tr.t).filter(|(_, &t)| t <= tau * (1.0 + 1e-12)).map(|(x, _)| *x).fold(0.0, f64::max);
                (avg, max)
            }
            _ => (f64::NAN, f64::NAN),
        };
        metrics.push((format!("avg_dist_{name}"), avg));
        metrics.push((format!("max_dist_{name}"), max));
        match exp.steady(m) {
            Ok(s) => {
                metrics.push((format!("ss_ground_{name}"), s[[0, 0]].re));
                metrics.push((format!("ss_min_eig_{name}"), min_eigenvalue(&s).map_err(|e| e.to_string())?));
            }
            Err(_) => {
                metrics.push((format!("ss_ground_{name}"), f64::NAN));
                metrics.push((format!("ss_min_eig_{name}"), f64::NAN));
            }
        }
    }
    Ok(metrics)
}

pub fn sweep(cfg: &ExperimentConfig) -> Result<SweepResult, RunError> {
    let s = cfg.sweep.as_ref().ok_or_else(|| ConfigError::Invalid("config has no [sweep] block".into()))?;
    let (xs, ys) = (s.x.points()?, s.y.points()?);
    let name = |p| match p {
        crate::config::SweepParam::Temperature => "temperature",
        crate::config::SweepParam::Gamma => "gamma",
    };
    let base = cfg.clone();
    let (px, py, window) = (s.x.param, s.y.param, s.window);
    Ok(run_sweep((name(px), name(py)), &xs, &ys, move |x, y| {
        let mut c = base.with_param(px, x).and_then(|c| c.with_param(py, y)).map_err(|e| e.to_string())?;
        c.sweep = Some(crate::config::SweepConfig { window, ..base.sweep.clone().expect("sweep block") });
        sweep_cell(&c)
    }))
}

pub fn sweep_and_write(cfg: &ExperimentConfig, dir: &Path) -> Result<SweepResult, RunError> {
    fs::create_dir_all(dir)?;
    let res = sweep(cfg)?;
    let keys: Vec<String> = res
        .cells
        .iter()
        .find_map(|c| c.metrics.as_ref().ok().map(|m| m.iter().map(|(k, _)| k.clone()).collect()))
        .unwrap_or_default();
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(dir.join("sweep.csv")).map_err(IoError::from)?;
    let mut header = vec!["ix".to_string(), "iy".to_string(), res.axis_names.0.clone(), res.axis_names.1.clone()];
    header.extend(keys.iter().cloned());
    header.push("error".into());
    w.write_record(&header).map_err(IoError::from)?;
    for cell in &res.cells {
        let mut rec = vec![cell.index.0.to_string(), cell.index.1.to_string(), io::fmt(cell.x), io::fmt(cell.y)];
        match &cell.metrics {
            Ok(m) => {
                rec.extend(keys.iter().map(|k| io::fmt(m.iter().find(|(n, _)| n == k).map(|(_, v)| *v).unwrap_or(f64::NAN))));
                rec.push(String::new());
            }
            Err(e) => {
                rec.extend(keys.iter().map(|_| io::fmt(f64::NAN)));
                rec.push(e.replace(['\n', ','], " "));
            }
        }
        w.write_record(&rec).map_err(IoError::from)?;
    }
    w.flush()?;
    write_manifest(dir, cfg, "sweep")?;
    Ok(res)
}

fn step_times(cfg: &ExperimentConfig) -> Vec<f64> {
    let t = &cfg.time;
    let steps = (t.t_max / t.h).round() as usize;
    (0..=steps).map(|i| i as f64 * t.h).collect()
}

fn output_times(cfg: &ExperimentConfig) -> Vec<f64> {
    step_times(cfg).into_iter().step_by(cfg.time.stride).collect()
}

/// Energy grid `[start, stop]` with `count` points, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyGrid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl EnergyGrid {
    /// `[-3 s, 3 s]` with 121 points for model energy scale `s`.
    pub fn around(scale: f64) -> Self {
        EnergyGrid { start: -3.0 * scale, stop: 3.0 * scale, count: 121 }
    }

    pub fn points(&self) -> Vec<f64> {
        match self.count {
            0 => vec![],
            1 => vec![self.start],
            n => (0..n).map(|i| self.start + (self.stop - self.start) * i as f64 / (n - 1) as f64).collect(),
        }
    }
}

/// `kernels`: per bath `C(t)` on the output grid and `W', W'', V', V''` on
/// `energies`; for the oscillator also the influence kernels
/// `Kq, Kq', Kq'', Kp, Kp'`.
pub fn kernels_and_write(exp: &Experiment, energies: &EnergyGrid, dir: &Path) -> Result<(), RunError> {
    fs::create_dir_all(dir)?;
    let times = output_times(&exp.cfg);
    let es = energies.points();
    let mut corr = Vec::new();
    let mut rates = Vec::new();
    for (i, b) in exp.sys.couplings.iter().enumerate() {
        let bath = &b.bath;
        let c_t: Vec<_> = times.par_iter().map(|&t| bath.correlator(t).map(|z| vec![i as f64, t, z.re, z.im])).collect();
        corr.extend(c_t.into_iter().collect::<Result<Vec<_>, _>>()?);
        let wv: Vec<_> = es
            .par_iter()
            .map(|&e| Ok::<_, BathError>(vec![i as f64, e, bath.w(e)?.re, bath.w(e)?.im, bath.v(e)?.re, bath.v(e)?.im]))
            .collect();
        rates.extend(wv.into_iter().collect::<Result<Vec<_>, _>>()?);
    }
    let names = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    io::write_table(&dir.join("correlator.csv"), &names(&["bath", "t", "re_c", "im_c"]), &corr)?;
    io::write_table(&dir.join("rates.csv"), &names(&["bath", "energy", "w_re", "w_im", "v_re", "v_im"]), &rates)?;
    if let ModelSpec::HarmonicOscillator { .. } = exp.cfg.model {
        let ex = exp.exact()?;
        // the finite-difference check runs on the integration grid
        let k = influence_kernels(&ex.eval, &step_times(&exp.cfg))?;
        let rows: Vec<Vec<f64>> =
            k.values.iter().step_by(exp.cfg.time.stride).map(|v| vec![v.t, v.kq, v.kq_dot, v.kq_ddot, v.kp, v.kp_dot]).collect();
        io::write_table(&dir.join("kernels.csv"), &names(&["t", "kq", "kq_dot", "kq_ddot", "kp", "kp_dot"]), &rows)?;
    }
    write_manifest(dir, &exp.cfg, "kernels")
}

/// `coeffs`: `gamma_q, gamma_p, D_q, D_p` on the output grid; singular points skipped.
pub fn coeffs_and_write(exp: &Experiment, dir: &Path) -> Result<Vec<f64>, RunError> {
    fs::create_dir_all(dir)?;
    let ex = exp.exact()?;
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for t in output_times(&exp.cfg) {
        match exact_coefficients(&ex.eval.green, &ex.eval.at(t)) {
            Ok(k) => rows.push(vec![t, k.gamma_q, k.gamma_p, k.d_q, k.d_p]),
            Err(OracleError::CoefficientSingularity(t)) => skipped.push(t),
            Err(e) => return Err(e.into()),
        }
    }
    let h: Vec<String> = ["t", "gamma_q", "gamma_p", "d_q", "d_p"].iter().map(|s| s.to_string()).collect();
    io::write_table(&dir.join("coeffs.csv"), &h, &rows)?;
    write_warnings(dir, &skipped.iter().map(|t| format!("coefficient singularity at t = {t}")).collect::<Vec<_>>())?;
    write_manifest(dir, &exp.cfg, "coeffs")?;
    Ok(skipped)
}

/// Expensive cross-checks enabled by `--verify`; returns report lines.
pub fn verify(exp: &Experiment) -> Result<Vec<String>, RunError> {
    let mut lines = Vec::new();
    for (i, b) in exp.sys.couplings.iter().enumerate() {
        if let SpectralDensity::LorentzDrude { .. } = b.bath.spectral {
            let mut worst = 0.0_f64;
            for e in b.rates.entries.iter().take(50) {
                if let Some((w, v)) = b.bath.matsubara_wv(e.delta, 20000) {
                    let dw = (w - e.w).norm() / (1.0 + e.w.norm());
                    let dv = (v - e.v).norm() / (1.0 + e.v.norm());
                    worst = worst.max(dw).max(dv);
                }
            }
            lines.push(format!("bath {i}: Matsubara vs quadrature rates, max relative difference {worst:.3e}"));
        }
    }
    if let ModelSpec::HarmonicOscillator { .. } = exp.cfg.model {
        if let Ok(ex) = exp.exact() {
            let g = &ex.eval.green;
            let t_end = exp.cfg.time.t_max.min(50.0);
            let err = memory_kernel_green(g.omega, g.omega_d, g.gamma, t_end, 1e-3)
                .iter()
                .map(|&(t, v)| (g.eval(t) - v).abs())
                .fold(0.0, f64::max);
            lines.push(format!("oracle: root-form Green function vs memory-kernel ODE, max abs error {err:.3e}"));
            match influence_kernels(&ex.eval, &step_times(&exp.cfg)) {
                Ok(_) => lines.push("oracle: kernel derivatives agree with finite differences".into()),
                Err(e) => lines.push(format!("oracle: {e}")),
            }
        }
    }
    Ok(lines)
}
