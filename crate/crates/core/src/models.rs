//! Benchmark systems: damped harmonic oscillator in a truncated Fock basis,
//! the spin-boson two-level system and the open Ising chain with twisting
//! fields. Plus temperature unit conversion.

use ndarray::Array1;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{c, real_diag, CMat, C64};

#[derive(Debug, Error, Clone)]
pub enum ModelError {
    #[error("invalid model parameter: {0}")]
    InvalidParameter(String),
    #[error("chain length {0} outside the supported range 2..=12")]
    ChainTooLong(usize),
    #[error("negative temperature {0}")]
    NegativeTemperature(f64),
}

/// Boltzmann constant (J/K), exact SI value.
pub const K_B: f64 = 1.380649e-23;
/// Reduced Planck constant (J s), CODATA 2018.
pub const HBAR: f64 = 1.054571817e-34;

/// `k_B / hbar` in inverse picoseconds per kelvin.
pub fn kb_over_hbar_per_ps() -> f64 {
    K_B / HBAR * 1e-12
}

/// Temperature in kelvin to an energy in `ps^-1` (`hbar = k_B = 1`).
pub fn kelvin_to_energy(t_kelvin: f64) -> Result<f64, ModelError> {
    if t_kelvin < 0.0 {
        return Err(ModelError::NegativeTemperature(t_kelvin));
    }
    Ok(t_kelvin * kb_over_hbar_per_ps())
}

pub fn energy_to_kelvin(e: f64) -> Result<f64, ModelError> {
    if e < 0.0 {
        return Err(ModelError::NegativeTemperature(e));
    }
    Ok(e / kb_over_hbar_per_ps())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum ModelSpec {
    HarmonicOscillator { omega: f64, levels: usize },
    SpinBoson { epsilon: f64 },
    IsingChain { length: usize, coupling: f64 },
}

/// System Hamiltonian and coupling operator in the lab basis.
#[derive(Debug, Clone)]
pub struct Model {
    pub h: CMat,
    pub s: CMat,
}

/// Truncated ladder operators of an oscillator with unit mass.
#[derive(Debug, Clone)]
pub struct Ladder {
    pub q: CMat,
    pub p: CMat,
}

pub fn ladder(omega: f64, n: usize) -> Ladder {
    let mut a = CMat::zeros((n, n));
    for k in 1..n {
        a[[k - 1, k]] = c((k as f64).sqrt(), 0.0);
    }
    let ad = a.t().to_owned();
    let q = (&a + &ad).mapv(|z| z / (2.0 * omega).sqrt());
    let p = (&ad - &a).mapv(|z| z * c(0.0, (omega / 2.0).sqrt()));
    Ladder { q, p }
}

/// `H = p^2/2 + Omega^2 q^2/2 = diag((n + 1/2) Omega)`, `S = q`.
pub fn build_harmonic(omega: f64, n: usize) -> Result<(Model, Ladder), ModelError> {
    if n < 2 || !(omega > 0.0) {
        return Err(ModelError::InvalidParameter(format!("oscillator needs N >= 2 and Omega > 0 (got N={n}, Omega={omega})")));
    }
    let lad = ladder(omega, n);
    let h = real_diag(&Array1::from_iter((0..n).map(|k| (k as f64 + 0.5) * omega)));
    Ok((Model { h, s: lad.q.clone() }, lad))
}

pub fn sigma_x() -> CMat {
    let mut m = CMat::zeros((2, 2));
    m[[0, 1]] = c(1.0, 0.0);
    m[[1, 0]] = c(1.0, 0.0);
    m
}

pub fn sigma_z() -> CMat {
    real_diag(&Array1::from(vec![1.0, -1.0]))
}

/// `H = (eps/2) sigma_x`, `S = sigma_z`.
pub fn build_spin_boson(epsilon: f64) -> Result<Model, ModelError> {
    if !(epsilon > 0.0) {
        return Err(ModelError::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
    }
    Ok(Model { h: sigma_x().mapv(|z| z * (epsilon / 2.0)), s: sigma_z() })
}

/// Operator `op` acting on site `site` (1-based) of an `l`-site chain.
pub fn site_operator(op: &CMat, site: usize, l: usize) -> CMat {
    let dim = 1usize << l;
    let mut out = CMat::zeros((dim, dim));
    // site 1 is the most significant bit
    let shift = l - site;
    for col in 0..dim {
        let b = (col >> shift) & 1;
        for b2 in 0..2 {
            let v = op[[b2, b]];
            if v != C64::new(0.0, 0.0) {
                let row = (col & !(1 << shift)) | (b2 << shift);
                out[[row, col]] += v;
            }
        }
    }
    out
}

/// Twisting fields `(h_x^i, h_z^i)` for sites `i = 1..=L`.
pub fn ising_fields(l: usize, j: f64) -> Vec<(f64, f64)> {
    (1..=l)
        .map(|i| {
            let r = (i as f64 - 1.0) / (l as f64 - 1.0);
            (0.8 * j + r * 0.2 * j, 0.7 * j - r * 0.2 * j)
        })
        .collect()
}

/// Open Ising chain `-J sum sz sz + sum (hx sx + hz sz)`, `S = sigma_z` on site `L/2`.
pub fn build_ising_chain(l: usize, j: f64) -> Result<Model, ModelError> {
    if !(2..=12).contains(&l) {
        return Err(ModelError::ChainTooLong(l));
    }
    let dim = 1usize << l;
    let sz = sigma_z();
    let sx = sigma_x();
    let fields = ising_fields(l, j);
    // diagonal part from sigma_z terms, built bitwise
    let mut diag = vec![0.0; dim];
    for (state, d) in diag.iter_mut().enumerate() {
        let z = |i: usize| if (state >> (l - i)) & 1 == 0 { 1.0 } else { -1.0 };
        for i in 1..l {
            *d -= j * z(i) * z(i + 1);
        }
        for (i, &(_, hz)) in fields.iter().enumerate() {
            *d += hz * z(i + 1);
        }
    }
    let mut h = real_diag(&Array1::from(diag));
    for (i, &(hx, _)) in fields.iter().enumerate() {
        h = h + site_operator(&sx, i + 1, l).mapv(|z| z * hx);
    }
    let s = site_operator(&sz, l / 2, l);
    Ok(Model { h, s })
}

impl ModelSpec {
    pub fn build(&self) -> Result<Model, ModelError> {
        match *self {
            ModelSpec::HarmonicOscillator { omega, levels } => Ok(build_harmonic(omega, levels)?.0),
            ModelSpec::SpinBoson { epsilon } => build_spin_boson(epsilon),
            ModelSpec::IsingChain { length, coupling } => build_ising_chain(length, coupling),
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        match *self {
            ModelSpec::HarmonicOscillator { levels, omega } => {
                if levels < 10 {
                    return Err(ModelError::InvalidParameter(format!("oscillator truncation must be >= 10 levels, got {levels}")));
                }
                if !(omega > 0.0) {
                    return Err(ModelError::InvalidParameter("omega must be positive".into()));
                }
            }
            ModelSpec::SpinBoson { epsilon } => {
                if !(epsilon > 0.0) {
                    return Err(ModelError::InvalidParameter("epsilon must be positive".into()));
                }
            }
            ModelSpec::IsingChain { length, coupling } => {
                if !(2..=12).contains(&length) {
                    return Err(ModelError::ChainTooLong(length));
                }
                if length % 2 != 0 {
                    return Err(ModelError::InvalidParameter(format!("chain length must be even, got {length}")));
                }
                if !(coupling > 0.0) {
                    return Err(ModelError::InvalidParameter("coupling must be positive".into()));
                }
            }
        }
        Ok(())
    }

    /// Natural energy unit: `Omega`, `epsilon` or `J`.
    pub fn energy_scale(&self) -> f64 {
        match *self {
            ModelSpec::HarmonicOscillator { omega, .. } => omega,
            ModelSpec::SpinBoson { epsilon } => epsilon,
            ModelSpec::IsingChain { coupling, .. } => coupling,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{commutator, diagonalize, max_abs};

    #[test]
    fn two_level_oscillator() {
        let (m, lad) = build_harmonic(1.0, 2).unwrap();
        assert!((m.h[[0, 0]].re - 0.5).abs() < 1e-15);
        assert!((m.h[[1, 1]].re - 1.5).abs() < 1e-15);
        assert!((lad.q[[0, 1]].re - 1.0 / 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn position_has_no_diagonal_and_canonical_commutator_holds_inside() {
        let (_, lad) = build_harmonic(1.3, 12).unwrap();
        for k in 0..12 {
            assert_eq!(lad.q[[k, k]], c(0.0, 0.0));
        }
        let comm = commutator(&lad.q, &lad.p);
        for k in 0..11 {
            assert!((comm[[k, k]] - c(0.0, 1.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn spin_boson_eigenbasis_coupling() {
        let m = build_spin_boson(std::f64::consts::FRAC_PI_2).unwrap();
        let es = diagonalize(&m.h, 1e-9).unwrap();
        assert!((es.energies[1] - es.energies[0] - std::f64::consts::FRAC_PI_2).abs() < 1e-14);
        let s = es.to_eigenbasis(&m.s);
        assert!(s[[0, 0]].norm() < 1e-14 && s[[1, 1]].norm() < 1e-14);
        assert!((s[[0, 1]].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn ising_fields_l2() {
        let f = ising_fields(2, 1.0);
        assert!((f[0].0 - 0.8).abs() < 1e-15 && (f[0].1 - 0.7).abs() < 1e-15);
        assert!((f[1].0 - 1.0).abs() < 1e-15 && (f[1].1 - 0.5).abs() < 1e-15);
    }

    fn kron(a: &CMat, b: &CMat) -> CMat {
        let (n, m) = (a.nrows(), b.nrows());
        CMat::from_shape_fn((n * m, n * m), |(i, j)| a[[i / m, j / m]] * b[[i % m, j % m]])
    }

    #[test]
    fn ising_matches_kronecker_construction() {
        for l in [2usize, 4] {
            let jj = 1.0;
            let m = build_ising_chain(l, jj).unwrap();
            let id = crate::linalg::identity(2);
            let op_at = |op: &CMat, site: usize| {
                let mut acc = if site == 1 { op.clone() } else { id.clone() };
                for k in 2..=l {
                    acc = kron(&acc, if k == site { op } else { &id });
                }
                acc
            };
            let (sx, sz) = (sigma_x(), sigma_z());
            let mut h = CMat::zeros((1 << l, 1 << l));
            for i in 1..l {
                h = h - op_at(&sz, i).dot(&op_at(&sz, i + 1)).mapv(|z| z * jj);
            }
            for (i, (hx, hz)) in ising_fields(l, jj).into_iter().enumerate() {
                h = h + op_at(&sx, i + 1).mapv(|z| z * hx) + op_at(&sz, i + 1).mapv(|z| z * hz);
            }
            assert!(max_abs(&(&h - &m.h)) < 1e-14);
            assert!(max_abs(&(&op_at(&sz, l / 2) - &m.s)) < 1e-15);
        }
    }

    #[test]
    fn ising_l6_nondegenerate() {
        let m = build_ising_chain(6, 1.0).unwrap();
        let es = diagonalize(&m.h, 1e-9).unwrap();
        assert!(es.degeneracy_gap > 0.0 && !es.degenerate);
    }

    #[test]
    fn chain_length_limits() {
        assert!(matches!(build_ising_chain(13, 1.0), Err(ModelError::ChainTooLong(13))));
    }

    #[test]
    fn kelvin_conversion() {
        assert_eq!(kelvin_to_energy(0.0).unwrap(), 0.0);
        let e = kelvin_to_energy(50.0).unwrap();
        assert!((e - 6.546).abs() < 1e-3, "{e}");
        assert!((energy_to_kelvin(e).unwrap() - 50.0).abs() < 1e-12);
        assert!(kelvin_to_energy(-1.0).is_err());
    }
}
