//! Fixed-step time integration, observables, distances and sweeps.

use rayon::prelude::*;
use thiserror::Error;

use ndarray::Array1;

use crate::generators::GeneratorAction;
use crate::linalg::{fro_norm, min_eigenvalue, steady_state, trace, trace_distance, CMat, LinalgError, C64};

#[derive(Debug, Error)]
pub enum PropagateError {
    #[error("trace drifted by {drift:.3e} at t = {t}")]
    TraceDrift { t: f64, drift: f64 },
    #[error("step h = {h} too large: local error {err:.3e} on the self-check")]
    StepTooLarge { h: f64, err: f64 },
    #[error("numerical failure at t = {t}: {what}")]
    Diverged { t: f64, what: String, partial: Box<Trajectory> },
    #[error("time grids differ")]
    GridMismatch,
    #[error("trajectory ends at {end} before the averaging window {tau}")]
    WindowTooLong { end: f64, tau: f64 },
    #[error("invalid integration options: {0}")]
    InvalidOptions(String),
    #[error("snapshots were not stored")]
    NoSnapshots,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Stepper {
    /// Classical RK4 on the full generator.
    Rk4,
    /// RK4 in the interaction picture of `H_S` (free phases applied exactly).
    #[default]
    InteractionRk4,
}

#[derive(Debug, Clone, Copy)]
pub struct IntegrateOptions {
    pub h: f64,
    pub t_max: f64,
    /// Record every `stride`-th step.
    pub stride: usize,
    pub stepper: Stepper,
    pub store_full: bool,
    /// Compare one step against two half steps for the first ten steps.
    pub self_check: bool,
    pub trace_tol: f64,
    pub local_tol: f64,
    /// Norm beyond which the state counts as diverged.
    pub blowup: f64,
}

impl IntegrateOptions {
    pub fn new(h: f64, t_max: f64, stride: usize) -> Self {
        IntegrateOptions {
            h,
            t_max,
            stride,
            stepper: Stepper::default(),
            store_full: true,
            self_check: true,
            trace_tol: 1e-8,
            local_tol: 1e-6,
            blowup: 1e3,
        }
    }
}

/// States are expressed in the eigenbasis of `H_S`.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub snapshots: Vec<CMat>,
    pub populations: Vec<Array1<f64>>,
    pub min_eig: Vec<f64>,
    pub trace: Vec<f64>,
}

impl Trajectory {
    fn record(&mut self, t: f64, rho: &CMat, full: bool) -> Result<(), LinalgError> {
        self.t.push(t);
        self.populations.push(Array1::from_iter((0..rho.nrows()).map(|n| rho[[n, n]].re)));
        self.min_eig.push(min_eigenvalue(rho)?);
        self.trace.push(trace(rho).re);
        if full {
            self.snapshots.push(rho.clone());
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn last_state(&self) -> Option<&CMat> {
        self.snapshots.last()
    }
}

fn phases(e: &Array1<f64>, tau: f64) -> CMat {
    CMat::from_shape_fn((e.len(), e.len()), |(n, m)| C64::from_polar(1.0, -(e[n] - e[m]) * tau))
}

/// Advances one step of size `h` starting at `t`.
pub struct StepKernel<'a, G: GeneratorAction + ?Sized> {
    gen: &'a G,
    stepper: Stepper,
    half: CMat,
    full: CMat,
}

impl<'a, G: GeneratorAction + ?Sized> StepKernel<'a, G> {
    pub fn new(gen: &'a G, stepper: Stepper, h: f64) -> Self {
        let e = gen.energies();
        StepKernel { gen, stepper, half: phases(e, 0.5 * h), full: phases(e, h) }
    }

    pub fn step(&self, rho: &CMat, t: f64, h: f64) -> CMat {
        let g = self.gen;
        match self.stepper {
            Stepper::Rk4 => {
                let k1 = g.apply(rho, t);
                let k2 = g.apply(&(rho + &(&k1 * (0.5 * h))), t + 0.5 * h);
                let k3 = g.apply(&(rho + &(&k2 * (0.5 * h))), t + 0.5 * h);
                let k4 = g.apply(&(rho + &(&k3 * h)), t + h);
                rho + &((k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0))
            }
            Stepper::InteractionRk4 => {
                let (p2, p1) = (&self.half, &self.full);
                let k1 = g.dissipative(rho, t);
                let a = (rho + &(&k1 * (0.5 * h))) * p2;
                let k2 = g.dissipative(&a, t + 0.5 * h);
                let b = rho * p2 + &k2 * (0.5 * h);
                let k3 = g.dissipative(&b, t + 0.5 * h);
                let cst = rho * p1 + (&k3 * p2) * h;
                let k4 = g.dissipative(&cst, t + h);
                (rho + &(&k1 * (h / 6.0))) * p1 + ((k2 + k3) * p2) * (h / 3.0) + k4 * (h / 6.0)
            }
        }
    }
}

/// Integrates `d rho/dt = L_t[rho]` from `t = 0`.
pub fn integrate<G: GeneratorAction + ?Sized>(gen: &G, rho0: &CMat, opts: &IntegrateOptions) -> Result<Trajectory, PropagateError> {
    if !(opts.h > 0.0) || !(opts.t_max >= 0.0) || opts.stride == 0 {
        return Err(PropagateError::InvalidOptions(format!("h={}, t_max={}, stride={}", opts.h, opts.t_max, opts.stride)));
    }
    if rho0.nrows() != gen.dim() {
        return Err(PropagateError::InvalidOptions(format!("state dim {} vs generator dim {}", rho0.nrows(), gen.dim())));
    }
    let h = opts.h;
    let steps = (opts.t_max / h).round() as usize;
    let kern = StepKernel::new(gen, opts.stepper, h);
    let half = StepKernel::new(gen, opts.stepper, 0.5 * h);
    let mut traj = Trajectory::default();
    let mut rho = rho0.clone();
    traj.record(0.0, &rho, opts.store_full)?;
    // time-dependent coefficients switch on non-smoothly at t = 0, so the
    // step-doubling check starts one step later for them
    let first = usize::from(gen.time_dependent());
    for i in 0..steps {
        let t = i as f64 * h;
        let next = kern.step(&rho, t, h);
        if opts.self_check && (first..first + 10).contains(&i) {
            let mid = half.step(&rho, t, 0.5 * h);
            let two = half.step(&mid, t + 0.5 * h, 0.5 * h);
            let err = fro_norm(&(&next - &two));
            if err > opts.local_tol {
                return Err(PropagateError::StepTooLarge { h, err });
            }
        }
        rho = next;
        let tn = (i + 1) as f64 * h;
        let norm = fro_norm(&rho);
        if !norm.is_finite() || norm > opts.blowup {
            let what = if norm.is_finite() { format!("state norm {norm:.3e}") } else { "non-finite state".into() };
            return Err(PropagateError::Diverged { t: tn, what, partial: Box::new(traj) });
        }
        let drift = (trace(&rho) - 1.0).norm();
        if drift > opts.trace_tol {
            return Err(PropagateError::TraceDrift { t: tn, drift });
        }
        if (i + 1) % opts.stride == 0 {
            traj.record(tn, &rho, opts.store_full)?;
        }
    }
    Ok(traj)
}

pub fn ground_state_population(traj: &Trajectory) -> Vec<f64> {
    traj.populations.iter().map(|p| p[0]).collect()
}

/// Sum of the strictly negative eigenbasis populations.
pub fn negative_population_mass(rho: &CMat) -> f64 {
    (0..rho.nrows()).map(|n| rho[[n, n]].re).filter(|&x| x < 0.0).sum::<f64>() + 0.0
}

/// Pointwise trace distance between two trajectories on the same grid.
///
/// A shorter trajectory (a diverged run) is compared on the common prefix.
pub fn distance_series(a: &Trajectory, b: &Trajectory) -> Result<Vec<f64>, PropagateError> {
    let n = a.len().min(b.len());
    if a.t[..n].iter().zip(&b.t[..n]).any(|(x, y)| (x - y).abs() > 1e-12 * (1.0 + x.abs())) {
        return Err(PropagateError::GridMismatch);
    }
    if a.snapshots.len() < n || b.snapshots.len() < n {
        return Err(PropagateError::NoSnapshots);
    }
    (0..n).map(|i| Ok(trace_distance(&a.snapshots[i], &b.snapshots[i])?)).collect()
}

/// `tau^-1 int_0^tau dist dt` by the trapezoid rule.
pub fn time_averaged_distance(t: &[f64], series: &[f64], tau: f64) -> Result<f64, PropagateError> {
    let end = t.last().copied().unwrap_or(0.0);
    if t.len() != series.len() {
        return Err(PropagateError::GridMismatch);
    }
    if end < tau * (1.0 - 1e-12) || !(tau > 0.0) {
        return Err(PropagateError::WindowTooLong { end, tau });
    }
    let mut acc = 0.0;
    for i in 1..t.len() {
        let (t0, t1) = (t[i - 1], t[i].min(tau));
        if t0 >= tau {
            break;
        }
        let frac = (t1 - t0) / (t[i] - t[i - 1]);
        let y1 = series[i - 1] + frac * (series[i] - series[i - 1]);
        acc += 0.5 * (series[i - 1] + y1) * (t1 - t0);
    }
    Ok(acc / tau)
}

/// Null-space steady state for small dimensions, long-time propagation otherwise.
pub fn steady_state_of<G: GeneratorAction + ?Sized>(gen: &G, max_lu_dim: usize, rho0: &CMat, opts: &IntegrateOptions) -> Result<CMat, PropagateError> {
    if gen.dim() <= max_lu_dim {
        return Ok(steady_state(&gen.vectorize(f64::INFINITY))?);
    }
    let mut o = *opts;
    o.store_full = true;
    o.stride = (o.t_max / o.h).round().max(1.0) as usize;
    let traj = integrate(gen, rho0, &o)?;
    traj.last_state().cloned().ok_or(PropagateError::NoSnapshots)
}

/// One cell of a two-axis sweep.
#[derive(Debug, Clone)]
pub struct SweepCell {
    pub index: (usize, usize),
    pub x: f64,
    pub y: f64,
    pub metrics: Result<Vec<(String, f64)>, String>,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub axis_names: (String, String),
    pub axes: (Vec<f64>, Vec<f64>),
    pub cells: Vec<SweepCell>,
}

/// Evaluates `f(x, y)` on the grid `xs x ys` (row-major, `x` slow).
pub fn sweep<F>(names: (&str, &str), xs: &[f64], ys: &[f64], f: F) -> SweepResult
where
    F: Fn(f64, f64) -> Result<Vec<(String, f64)>, String> + Sync,
{
    let idx: Vec<(usize, usize)> = (0..xs.len()).flat_map(|i| (0..ys.len()).map(move |j| (i, j))).collect();
    let cells = idx
        .par_iter()
        .map(|&(i, j)| SweepCell { index: (i, j), x: xs[i], y: ys[j], metrics: f(xs[i], ys[j]) })
        .collect();
    SweepResult { axis_names: (names.0.into(), names.1.into()), axes: (xs.to_vec(), ys.to_vec()), cells }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    struct Free {
        e: Array1<f64>,
    }

    impl GeneratorAction for Free {
        fn dim(&self) -> usize {
            self.e.len()
        }
        fn energies(&self) -> &Array1<f64> {
            &self.e
        }
        fn dissipative(&self, rho: &CMat, _t: f64) -> CMat {
            CMat::zeros(rho.dim())
        }
        fn name(&self) -> &str {
            "free"
        }
    }

    /// Free evolution plus a weak decay of coherences.
    struct Damped {
        e: Array1<f64>,
        g: f64,
    }

    impl GeneratorAction for Damped {
        fn dim(&self) -> usize {
            self.e.len()
        }
        fn energies(&self) -> &Array1<f64> {
            &self.e
        }
        fn dissipative(&self, rho: &CMat, t: f64) -> CMat {
            let r = self.g * (1.0 + 0.5 * (t).sin());
            CMat::from_shape_fn(rho.dim(), |(n, m)| if n == m { c(0.0, 0.0) } else { -r * rho[[n, m]] })
        }
        fn name(&self) -> &str {
            "damped"
        }
    }

    fn plus() -> CMat {
        CMat::from_elem((2, 2), c(0.5, 0.0))
    }

    #[test]
    fn unitary_rotation() {
        let gen = Free { e: Array1::from(vec![0.0, 1.3]) };
        for stepper in [Stepper::Rk4, Stepper::InteractionRk4] {
            let mut o = IntegrateOptions::new(0.01, 10.0, 10);
            o.stepper = stepper;
            let tr = integrate(&gen, &plus(), &o).unwrap();
            for (t, s) in tr.t.iter().zip(&tr.snapshots) {
                assert!((s[[0, 1]].norm() - 0.5).abs() < 1e-8);
                let want = C64::from_polar(0.5, 1.3 * t);
                assert!((s[[0, 1]] - want).norm() < 1e-7, "{stepper:?} t={t}");
            }
        }
    }

    #[test]
    fn fourth_order_convergence() {
        let gen = Damped { e: Array1::from(vec![0.0, 1.0]), g: 0.3 };
        // reference with a much finer step
        let run = |h: f64, s: Stepper| {
            let mut o = IntegrateOptions::new(h, 4.0, 1);
            o.stepper = s;
            o.self_check = false;
            integrate(&gen, &plus(), &o).unwrap().snapshots.last().unwrap().clone()
        };
        for s in [Stepper::Rk4, Stepper::InteractionRk4] {
            let reference = run(0.001, s);
            let e1 = fro_norm(&(&run(0.1, s) - &reference));
            let e2 = fro_norm(&(&run(0.05, s) - &reference));
            let ratio = e1 / e2;
            assert!(ratio > 12.0 && ratio < 20.0, "{s:?}: {ratio}");
        }
    }

    #[test]
    fn step_too_large_detected() {
        let gen = Damped { e: Array1::from(vec![0.0, 40.0]), g: 0.3 };
        let mut o = IntegrateOptions::new(0.5, 5.0, 1);
        o.stepper = Stepper::Rk4;
        assert!(matches!(integrate(&gen, &plus(), &o), Err(PropagateError::StepTooLarge { .. })));
    }

    #[test]
    fn observables() {
        let mut g = CMat::zeros((3, 3));
        g[[0, 0]] = c(1.0, 0.0);
        let mut tr = Trajectory::default();
        tr.record(0.0, &g, true).unwrap();
        assert_eq!(ground_state_population(&tr), vec![1.0]);
        let mut x = CMat::zeros((3, 3));
        x[[0, 0]] = c(1.1, 0.0);
        x[[1, 1]] = c(-0.07, 0.0);
        x[[2, 2]] = c(-0.03, 0.0);
        assert!((negative_population_mass(&x) + 0.1).abs() < 1e-15);
        assert_eq!(negative_population_mass(&g), 0.0);
        let d = distance_series(&tr, &tr).unwrap();
        assert_eq!(d, vec![0.0]);
    }

    #[test]
    fn time_average() {
        let t: Vec<f64> = (0..=100).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = t.iter().map(|x| 2.0 * x).collect();
        // mean of 2t over [0, 5] = 5
        assert!((time_averaged_distance(&t, &y, 5.0).unwrap() - 5.0).abs() < 1e-12);
        assert!((time_averaged_distance(&t, &y, 4.95).unwrap() - 4.95).abs() < 1e-12);
        assert!(time_averaged_distance(&t, &y, 11.0).is_err());
    }

    #[test]
    fn sweep_order_and_single_cell() {
        let f = |x: f64, y: f64| Ok(vec![("s".to_string(), x * 10.0 + y)]);
        let r = sweep(("a", "b"), &[1.0, 2.0], &[3.0, 4.0, 5.0], f);
        let idx: Vec<_> = r.cells.iter().map(|c| c.index).collect();
        assert_eq!(idx, vec![(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 2)]);
        let one = sweep(("a", "b"), &[1.5], &[2.5], f);
        assert_eq!(one.cells[0].metrics.as_ref().unwrap()[0].1, f(1.5, 2.5).unwrap()[0].1);
    }
}
