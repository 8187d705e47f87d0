#![allow(dead_code)]

use ccqme::bath::{BathSpec, Normalization, SpectralDensity};
use ccqme::generators::{build_coupled_system, BuildOptions, CoupledSystem};
use ccqme::linalg::{dagger, trace, CMat, C64};
use ccqme::models::{build_harmonic, build_ising_chain, build_spin_boson};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut StdRng, dim: usize) -> CMat {
    CMat::from_shape_fn((dim, dim), |_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

pub fn random_hermitian(rng: &mut StdRng, dim: usize) -> CMat {
    let a = random_matrix(rng, dim);
    (&a + &dagger(&a)).mapv(|z| z * 0.5)
}

/// `A A^+ / Tr(A A^+)`.
pub fn random_density(rng: &mut StdRng, dim: usize) -> CMat {
    let a = random_matrix(rng, dim);
    let r = a.dot(&dagger(&a));
    let t = trace(&r);
    r.mapv(|z| z / t)
}

pub fn cl(gamma: f64, temperature: f64) -> BathSpec {
    BathSpec::caldeira_leggett(gamma, 5.0, temperature).unwrap()
}

pub fn ho(gamma: f64, n: usize) -> CoupledSystem {
    let (m, _) = build_harmonic(1.0, n).unwrap();
    build_coupled_system(&m.h, &[(m.s, cl(gamma, 0.3))], BuildOptions::default()).unwrap()
}

pub fn ho_two_baths(n: usize) -> CoupledSystem {
    let (m, _) = build_harmonic(1.0, n).unwrap();
    let couplings = [(m.s.clone(), cl(0.2, 0.3)), (m.s, cl(0.2, 0.5))];
    build_coupled_system(&m.h, &couplings, BuildOptions::default()).unwrap()
}

pub fn spin_boson_bath() -> BathSpec {
    let s = SpectralDensity::OhmicExp { lambda: 0.01485, omega_c: 2.2 };
    BathSpec::new(s, 6.546, false, Normalization::Coupling).unwrap()
}

pub fn spin_boson(epsilon: f64) -> CoupledSystem {
    let m = build_spin_boson(epsilon).unwrap();
    build_coupled_system(&m.h, &[(m.s, spin_boson_bath())], BuildOptions::default()).unwrap()
}

pub fn ising(l: usize) -> CoupledSystem {
    let m = build_ising_chain(l, 1.0).unwrap();
    let b = BathSpec::new(SpectralDensity::LorentzDrude { gamma: 0.04, omega_d: 5.0 }, 0.9, false, Normalization::Coupling).unwrap();
    build_coupled_system(&m.h, &[(m.s, b)], BuildOptions::default()).unwrap()
}

pub fn max_abs(a: &CMat) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}
