mod common;

use ccqme::bath::{BathSpec, Normalization, SpectralDensity};
use ccqme::generators::{formal_energy_derivative, Ccqme, GeneratorAction, Horizon, Lindblad, Redfield};
use ccqme::linalg::{c, dagger, diagonalize, trace, trace_distance, CMat};
use common::*;
use ndarray::Array1;
use proptest::prelude::*;

fn matrix(dim: usize) -> impl Strategy<Value = CMat> {
    prop::collection::vec(-1.0f64..1.0, 2 * dim * dim)
        .prop_map(move |v| CMat::from_shape_fn((dim, dim), |(i, j)| c(v[2 * (i * dim + j)], v[2 * (i * dim + j) + 1])))
}

fn hermitian(dim: usize) -> impl Strategy<Value = CMat> {
    matrix(dim).prop_map(|a| (&a + &dagger(&a)).mapv(|z| z * 0.5))
}

fn density(dim: usize) -> impl Strategy<Value = CMat> {
    matrix(dim).prop_map(|a| {
        let r = a.dot(&dagger(&a));
        let t = trace(&r);
        r.mapv(|z| z / t)
    })
}

fn drude(temperature: f64) -> BathSpec {
    BathSpec::new(SpectralDensity::LorentzDrude { gamma: 0.2, omega_d: 5.0 }, temperature, true, Normalization::CaldeiraLeggett).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn trace_distance_is_a_metric(a in density(5), b in density(5), x in density(5)) {
        let ab = trace_distance(&a, &b).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&ab));
        prop_assert!((ab - trace_distance(&b, &a).unwrap()).abs() < 1e-12);
        prop_assert!(trace_distance(&a, &a).unwrap() < 1e-12);
        prop_assert!(ab <= trace_distance(&a, &x).unwrap() + trace_distance(&x, &b).unwrap() + 1e-12);
    }

    #[test]
    fn diagonalization_reconstructs(dim in 1usize..=64, seed in any::<u64>()) {
        let mut g = rng(seed);
        let h = random_hermitian(&mut g, dim);
        let eig = diagonalize(&h, 1e-9).unwrap();
        let back = eig.from_eigenbasis(&CMat::from_diag(&eig.energies.mapv(|e| c(e, 0.0))));
        prop_assert!(max_abs(&(&back - &h)) < 1e-10 * dim as f64);
        prop_assert!(eig.energies.windows(2).into_iter().all(|w| w[0] <= w[1]));
    }

    #[test]
    fn generators_preserve_trace_and_hermiticity(rho in hermitian(6)) {
        let gens: Vec<Box<dyn GeneratorAction>> = vec![
            Box::new(Redfield::new(ho(0.2, 6), Horizon::Infinite)),
            Box::new(Lindblad::new(ho(0.2, 6))),
            Box::new(Ccqme::new(ho(0.2, 6), Horizon::Infinite).unwrap()),
            Box::new(Ccqme::new(ho_two_baths(6), Horizon::Infinite).unwrap()),
        ];
        for gen in gens {
            let out = gen.apply(&rho, f64::INFINITY);
            prop_assert!(trace(&out).norm() < 1e-9, "{}", gen.name());
            prop_assert!(max_abs(&(&out - &dagger(&out))) < 1e-10, "{}", gen.name());
        }
    }

    #[test]
    fn running_redfield_preserves_trace(rho in hermitian(2), t in 0.0f64..20.0) {
        let gen = Redfield::new(spin_boson(1.5), Horizon::Running);
        let out = gen.apply(&rho, t);
        prop_assert!(trace(&out).norm() < 1e-9);
        prop_assert!(max_abs(&(&out - &dagger(&out))) < 1e-10);
    }

    #[test]
    fn kms_detailed_balance(e in 0.05f64..3.0, temperature in 0.2f64..2.0) {
        let b = drude(temperature);
        let beta = b.beta();
        prop_assume!(beta * e < 30.0);
        let ratio = b.w(-e).unwrap().re / b.w(e).unwrap().re;
        prop_assert!((ratio / (beta * e).exp() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn gibbs_formal_derivative(temperature in 0.2f64..2.0, eps in 0.3f64..2.5) {
        let m = ccqme::models::build_spin_boson(eps).unwrap();
        let bath = BathSpec::new(SpectralDensity::OhmicExp { lambda: 0.01485, omega_c: 2.2 }, temperature, false, Normalization::Coupling).unwrap();
        let sys = ccqme::generators::build_coupled_system(&m.h, &[(m.s, bath)], Default::default()).unwrap();
        let beta = sys.couplings[0].bath.beta();
        let p = ccqme::linalg::gibbs_populations(sys.energies(), beta);
        let (d, _) = formal_energy_derivative(&sys, 0, &p).unwrap();
        for n in 0..2 {
            prop_assert!((d[n] + beta * p[n]).abs() < 1e-8);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    #[test]
    fn imaginary_time_identity(e in -2.0f64..2.0) {
        let b = BathSpec::new(SpectralDensity::LorentzDrude { gamma: 0.2, omega_d: 5.0 }, 0.3, false, Normalization::CaldeiraLeggett).unwrap();
        let lhs = b.imag_time_transform(e).unwrap();
        let rhs = b.w(e).unwrap().im + (-b.beta() * e).exp() * b.w(-e).unwrap().im;
        prop_assert!((lhs - rhs).abs() < 1e-5 * rhs.abs());
    }

    #[test]
    fn rk4_is_fourth_order(omega in 0.5f64..2.0) {
        use ccqme::propagate::{integrate, IntegrateOptions, Stepper};
        struct Damped(Array1<f64>);
        impl GeneratorAction for Damped {
            fn dim(&self) -> usize { 2 }
            fn energies(&self) -> &Array1<f64> { &self.0 }
            fn dissipative(&self, rho: &CMat, _t: f64) -> CMat {
                // pure dephasing of the coherence
                CMat::from_shape_fn((2, 2), |(i, j)| if i == j { c(0.0, 0.0) } else { -0.3 * rho[[i, j]] })
            }
            fn name(&self) -> &str { "dephasing" }
        }
        let gen = Damped(Array1::from(vec![0.0, omega]));
        let rho0 = CMat::from_elem((2, 2), c(0.5, 0.0));
        let exact = c(0.5, 0.0) * (c(-0.3, omega) * 5.0).exp();
        let err = |h: f64| {
            let mut o = IntegrateOptions::new(h, 5.0, 1);
            o.stepper = Stepper::Rk4;
            o.self_check = false;
            let tr = integrate(&gen, &rho0, &o).unwrap();
            (tr.last_state().unwrap()[[0, 1]] - exact).norm()
        };
        let ratio = err(0.1) / err(0.05);
        prop_assert!((12.0..20.0).contains(&ratio), "ratio {}", ratio);
    }
}
