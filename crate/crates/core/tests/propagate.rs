mod common;

use ccqme::config::ExperimentConfig;
use ccqme::generators::{Ccqme, GeneratorAction, Horizon, Lindblad, Redfield};
use ccqme::linalg::{c, gibbs_state, steady_state, trace_distance, CMat};
use ccqme::propagate::{
    distance_series, ground_state_population, integrate, negative_population_mass, time_averaged_distance, IntegrateOptions,
    PropagateError, Stepper,
};
use ccqme::runner;
use common::*;
use ndarray::Array1;

fn one_point(rho: CMat) -> ccqme::propagate::Trajectory {
    let gen = Lindblad::new(ho(0.2, rho.nrows()));
    integrate(&gen, &rho, &IntegrateOptions::new(0.01, 0.0, 1)).unwrap()
}

#[test]
fn ground_population_examples() {
    let e = Array1::from_iter((0..60).map(|k| k as f64 + 0.5));
    let g = one_point(gibbs_state(&e, 1.0 / 0.3));
    let expect = 1.0 - (-1.0f64 / 0.3).exp();
    assert!((ground_state_population(&g)[0] - expect).abs() < 1e-12);
    assert!((expect - 0.9643).abs() < 1e-4);

    let mut pure = CMat::zeros((4, 4));
    pure[[0, 0]] = c(1.0, 0.0);
    assert_eq!(ground_state_population(&one_point(pure))[0], 1.0);

    let mut sup = CMat::zeros((4, 4));
    for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
        sup[[i, j]] = c(0.5, 0.0);
    }
    assert!((ground_state_population(&one_point(sup))[0] - 0.5).abs() < 1e-15);
}

#[test]
fn distances_of_identical_runs_vanish() {
    let mut g = rng(4);
    let rho = random_density(&mut g, 6);
    let gen = Redfield::new(ho(0.2, 6), Horizon::Infinite);
    let o = IntegrateOptions::new(0.01, 2.0, 10);
    let a = integrate(&gen, &rho, &o).unwrap();
    let b = integrate(&gen, &rho, &o).unwrap();
    let d = distance_series(&a, &b).unwrap();
    assert!(d.iter().all(|&x| x == 0.0));
    assert_eq!(time_averaged_distance(&a.t, &d, 2.0).unwrap(), 0.0);

    let short = integrate(&gen, &rho, &IntegrateOptions::new(0.01, 1.0, 10)).unwrap();
    assert_eq!(distance_series(&a, &short).unwrap().len(), short.len());
    let other = integrate(&gen, &rho, &IntegrateOptions::new(0.01, 2.0, 5)).unwrap();
    assert!(matches!(distance_series(&a, &other), Err(PropagateError::GridMismatch)));
}

#[test]
fn positive_states_have_no_negative_mass() {
    let mut g = rng(8);
    for _ in 0..20 {
        assert_eq!(negative_population_mass(&random_density(&mut g, 7)), 0.0);
    }
    let mut x = CMat::zeros((3, 3));
    x[[0, 0]] = c(1.1, 0.0);
    x[[1, 1]] = c(-0.04, 0.0);
    x[[2, 2]] = c(-0.06, 0.0);
    assert!((negative_population_mass(&x) + 0.1).abs() < 1e-15);
}

#[test]
fn long_time_limit_is_null_space_steady_state() {
    // the printed CCQME is unstable on the truncated oscillator once gamma N is
    // large (positive generator eigenvalues from N = 8 at gamma = 0.2)
    let gamma = 0.2;
    let n = 6;
    let rho0 = gibbs_state(&Array1::from_iter((0..n).map(|k| k as f64 + 0.5)), 1.0);
    let gens: Vec<Box<dyn GeneratorAction>> = vec![
        Box::new(Redfield::new(ho(gamma, n), Horizon::Infinite)),
        Box::new(Lindblad::new(ho(gamma, n))),
        Box::new(Ccqme::new(ho(gamma, n), Horizon::Infinite).unwrap()),
    ];
    let o = IntegrateOptions::new(0.01, 20.0 / gamma, 1000);
    for gen in gens {
        let ss = steady_state(&gen.vectorize(f64::INFINITY)).unwrap();
        let tr = integrate(gen.as_ref(), &rho0, &o).unwrap_or_else(|e| panic!("{}: {e}", gen.name()));
        let d = trace_distance(tr.last_state().unwrap(), &ss).unwrap();
        assert!(d < 1e-6, "{}: {d}", gen.name());
    }
}

#[test]
fn classical_and_interaction_picture_rk4_agree() {
    let mut g = rng(12);
    let rho = random_density(&mut g, 8);
    let gen = Ccqme::new(ho(0.2, 8), Horizon::Infinite).unwrap();
    let mut o = IntegrateOptions::new(0.005, 5.0, 1000);
    let a = integrate(&gen, &rho, &o).unwrap();
    o.stepper = Stepper::Rk4;
    let b = integrate(&gen, &rho, &o).unwrap();
    let d = trace_distance(a.last_state().unwrap(), b.last_state().unwrap()).unwrap();
    assert!(d < 1e-8, "{d}");
}

#[test]
fn unitary_error_shrinks_sixteenfold() {
    // zero dissipator: the exact solution is a pure phase rotation
    struct Free(Array1<f64>);
    impl GeneratorAction for Free {
        fn dim(&self) -> usize {
            2
        }
        fn energies(&self) -> &Array1<f64> {
            &self.0
        }
        fn dissipative(&self, rho: &CMat, _t: f64) -> CMat {
            CMat::zeros(rho.dim())
        }
        fn name(&self) -> &str {
            "free"
        }
    }
    let gen = Free(Array1::from(vec![0.0, 1.0]));
    let mut plus = CMat::from_elem((2, 2), c(0.5, 0.0));
    plus[[0, 1]] = c(0.5, 0.0);
    let err = |h: f64| {
        let mut o = IntegrateOptions::new(h, 10.0, 1);
        o.stepper = Stepper::Rk4;
        o.self_check = false;
        let tr = integrate(&gen, &plus, &o).unwrap();
        let last = tr.last_state().unwrap();
        (last[[0, 1]] - c(0.5, 0.0) * c(0.0, 10.0).exp()).norm()
    };
    let ratio = err(0.2) / err(0.1);
    assert!((12.0..20.0).contains(&ratio), "ratio {ratio}");
}

fn sweep_config() -> ExperimentConfig {
    ExperimentConfig::from_toml(
        r#"
methods = ["redfield", "ccqme", "exact_ho"]
[model]
variant = "harmonic_oscillator"
omega = 1.0
levels = 10
[[baths]]
family = "lorentz_drude"
gamma = 0.2
omega_d = 5.0
temperature = 0.3
[initial]
kind = "gibbs"
beta0 = 1.0
[time]
t_max = 3.0
h = 0.01
stride = 10
[sweep]
x = { param = "temperature", values = [0.3, 0.6] }
y = { param = "gamma", values = [0.1, 0.2, 0.4] }
window = 0.2
"#,
    )
    .unwrap()
}

#[test]
fn sweep_output_independent_of_worker_count() {
    let cfg = sweep_config();
    let base = std::env::temp_dir().join(format!("ccqme-sweep-{}", std::process::id()));
    let mut outputs = Vec::new();
    for threads in [1, 3] {
        let dir = base.join(threads.to_string());
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let res = pool.install(|| runner::sweep_and_write(&cfg, &dir)).unwrap();
        assert_eq!(res.cells.len(), 6);
        outputs.push(std::fs::read(dir.join("sweep.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    std::fs::remove_dir_all(&base).ok();
}
