use std::f64::consts::PI;

use ccqme::bath::{build_rate_table, BathSpec, Normalization, SpectralDensity};
use ndarray::{array, Array2};
use num_complex::Complex64;

fn cl() -> BathSpec {
    BathSpec::caldeira_leggett(0.2, 5.0, 0.3).unwrap()
}

fn cl_bare(t: f64) -> BathSpec {
    BathSpec::new(SpectralDensity::LorentzDrude { gamma: 0.2, omega_d: 5.0 }, t, false, Normalization::CaldeiraLeggett).unwrap()
}

fn spin_boson() -> BathSpec {
    let s = SpectralDensity::OhmicExp { lambda: 0.01485, omega_c: 2.2 };
    BathSpec::new(s, 6.546, false, Normalization::Coupling).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// Composite Simpson on `[a, b]` with `n` (even) panels.
fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        s += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn correlator_is_hermitian_in_time() {
    for b in [cl(), spin_boson()] {
        for k in 0..20 {
            let t = 0.137 + 0.61 * k as f64;
            let p = b.correlator(t).unwrap();
            let m = b.correlator(-t).unwrap();
            assert!((p.conj() - m).norm() < 1e-12 * (1.0 + p.norm()));
        }
    }
}

#[test]
fn drude_imaginary_part_is_single_exponential() {
    let b = cl();
    let r = b.correlator(2.0 / 5.0).unwrap().im / b.correlator(1.0 / 5.0).unwrap().im;
    assert!((r - (-1.0f64).exp()).abs() < 1e-4, "ratio {r}");
}

#[test]
fn drude_correlator_diverges_at_zero() {
    assert!(cl().correlator(0.0).unwrap().re.is_infinite());
}

#[test]
fn correlator_at_zero_matches_independent_quadrature() {
    // the Drude value is log-divergent, so the Gaussian-cutoff density stands in
    let b = spin_boson();
    let beta = b.beta();
    let j = |w: f64| 0.01485 * (w / 2.2) * (-(w / 2.2).powi(2)).exp();
    let f = |w: f64| if w == 0.0 { 0.01485 / 2.2 * 2.0 / beta } else { j(w) / (0.5 * beta * w).tanh() };
    let oracle = simpson(f, 0.0, 30.0, 200_000);
    let c0 = b.correlator(0.0).unwrap();
    assert!(rel(c0.re, oracle) < 1e-8, "{} vs {oracle}", c0.re);
    assert_eq!(c0.im, 0.0);
}

#[test]
fn imaginary_part_temperature_independent() {
    for &t in &[0.4, 1.3, 3.0] {
        let base = cl_bare(0.3).correlator(t).unwrap().im;
        for &temp in &[1.0, 10.0] {
            let other = cl_bare(temp).correlator(t).unwrap().im;
            assert!((base - other).abs() < 1e-8, "t={t} T={temp}");
        }
    }
}

/// Matsubara-frequency series of the Drude imaginary-time correlator,
/// `C(-iu) = (1/(pi beta)) sum_n pi gamma wD^2 / (wD + |nu_n|) cos(nu_n u)`,
/// averaged over consecutive partial sums.
fn matsubara_imag_time(gamma: f64, wd: f64, beta: f64, u: f64) -> f64 {
    let term = |n: usize| {
        let nu = 2.0 * PI * n as f64 / beta;
        gamma * wd * wd / (wd + nu) * (nu * u).cos() / beta
    };
    let mut s = term(0);
    let mut prev = s;
    for n in 1..2_000_000 {
        prev = s;
        s += 2.0 * term(n);
    }
    0.5 * (s + prev)
}

#[test]
fn imaginary_time_correlator_vs_matsubara_series() {
    let b = cl_bare(0.3);
    let beta = b.beta();
    let u = 0.5 * beta;
    let v = b.imag_time_correlator(u).unwrap();
    assert!(v > 0.0);
    let m = matsubara_imag_time(0.2, 5.0, beta, u);
    assert!(rel(v, m) < 1e-5, "{v} vs {m}");
}

#[test]
fn imaginary_time_symmetry_and_domain() {
    let b = cl_bare(0.3);
    let beta = b.beta();
    let a = b.imag_time_correlator(0.25 * beta).unwrap();
    let c = b.imag_time_correlator(0.75 * beta).unwrap();
    assert!(rel(a, c) < 1e-9);
    assert!(b.imag_time_correlator(1.1 * beta).is_err());
    assert!(b.imag_time_correlator(-0.1).is_err());
}

#[test]
fn high_temperature_imaginary_time_is_flat() {
    let b = cl_bare(100.0);
    let beta = b.beta();
    let mid = b.imag_time_correlator(0.5 * beta).unwrap();
    for k in 0..=8 {
        let u = (0.3 + 0.05 * k as f64) * beta;
        assert!(rel(b.imag_time_correlator(u).unwrap(), mid) < 0.01);
    }
}

#[test]
fn detailed_balance() {
    for b in [cl(), spin_boson()] {
        let beta = b.beta();
        for &d in &[0.3, 1.0, PI / 2.0, 2.0] {
            if d * beta > 30.0 {
                continue;
            }
            let ratio = b.w(-d).unwrap().re / b.w(d).unwrap().re;
            assert!(rel(ratio, (beta * d).exp()) < 1e-6, "d={d}");
        }
    }
}

#[test]
fn finite_horizon_converges() {
    let b = cl();
    for &e in &[-1.0, 1.0] {
        let inf = b.w(e).unwrap();
        let fin = b.w_finite(e, 200.0 / 5.0).unwrap();
        assert!((fin - inf).norm() < 1e-6 * inf.norm(), "E={e}: {fin} vs {inf}");
    }
}

#[test]
fn finite_horizon_against_time_quadrature() {
    // direct time integral of C(t) e^{-iEt} using the Gaussian-cutoff bath (C finite at 0)
    let b = spin_boson();
    let (e, t) = (1.2, 3.0);
    let cvals: Vec<_> = (0..=600).map(|k| b.correlator(t * k as f64 / 600.0).unwrap()).collect();
    let h = t / 600.0;
    let mut s = Complex64::new(0.0, 0.0);
    for (k, cv) in cvals.iter().enumerate() {
        let tau = k as f64 * h;
        let w = if k == 0 || k == 600 { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
        s += cv * Complex64::new(0.0, -e * tau).exp() * w;
    }
    s *= h / 3.0;
    let fin = b.w_finite(e, t).unwrap();
    assert!((fin - s).norm() < 1e-8 * s.norm(), "{fin} vs {s}");
}

#[test]
fn imaginary_time_identity() {
    // without counter-term: -int C(-iu) e^{-uE} du = W''(E) + e^{-beta E} W''(-E)
    let b = cl_bare(0.3);
    let beta = b.beta();
    let mut es = vec![1.0];
    let mut x = 0.3141_f64;
    for _ in 0..10 {
        x = (x * 9301.0 + 0.49297).fract();
        es.push(-2.0 + 4.0 * x);
    }
    for e in es {
        let lhs = b.imag_time_transform(e).unwrap();
        let rhs = b.w(e).unwrap().im + (-beta * e).exp() * b.w(-e).unwrap().im;
        assert!(rel(lhs, rhs) < 1e-5, "E={e}: {lhs} vs {rhs}");
    }
}

#[test]
fn v_is_energy_derivative_of_w() {
    let h = 1e-4;
    for b in [cl(), spin_boson()] {
        for &e in &[-1.7, -0.4, 0.6, 1.0, 2.3] {
            let v = b.v(e).unwrap();
            let wp = b.w(e + h).unwrap();
            let wm = b.w(e - h).unwrap();
            let d = (wp - wm) / (2.0 * h);
            assert!(rel(v.re, d.re) < 1e-5, "V' at {e}: {} vs {}", v.re, d.re);
            assert!(rel(v.im, d.im) < 1e-5, "V'' at {e}: {} vs {}", v.im, d.im);
        }
    }
}

#[test]
fn v_finite_at_zero() {
    let v = cl().v(0.0).unwrap();
    assert!(v.re.is_finite() && v.im.is_finite());
}

#[test]
fn rate_tables() {
    let b = spin_boson();
    let empty = build_rate_table(&b, &Array2::zeros((0, 0)), &Array2::from_elem((0, 0), false), None).unwrap();
    assert!(empty.is_empty());

    let eps = PI / 2.0;
    let bohr = array![[0.0, -eps], [eps, 0.0]];
    let needed = array![[false, true], [true, false]];
    let t = build_rate_table(&b, &bohr, &needed, None).unwrap();
    assert_eq!(t.len(), 2);
    let ratio = t.w[[0, 1]].re / t.w[[1, 0]].re;
    assert!(rel(ratio, (b.beta() * eps).exp()) < 1e-6);

    // oscillator ladder: position couples neighbours only, so only +-Omega appear
    let bohr = Array2::from_shape_fn((4, 4), |(i, j)| i as f64 - j as f64);
    let needed = Array2::from_shape_fn((4, 4), |(i, j)| i.abs_diff(j) == 1);
    let t = build_rate_table(&cl(), &bohr, &needed, None).unwrap();
    assert_eq!(t.len(), 2);
}
