use ccqme::linalg::{diagonalize, eigvalsh, CMat};
use ccqme::models::{build_ising_chain, build_spin_boson, energy_to_kelvin, ising_fields, kelvin_to_energy, sigma_x, sigma_z};
use ndarray::linalg::kron;

#[test]
fn spin_boson_bohr_frequencies() {
    let eps = std::f64::consts::FRAC_PI_2;
    let m = build_spin_boson(eps).unwrap();
    let eig = diagonalize(&m.h, 1e-9).unwrap();
    let b = eig.bohr();
    assert!((b[[1, 0]] - eps).abs() < 1e-12 && (b[[0, 1]] + eps).abs() < 1e-12);
}

#[test]
fn two_site_chain_against_brute_force() {
    let f = ising_fields(2, 1.0);
    assert!((f[0].0 - 0.8).abs() < 1e-15 && (f[1].0 - 1.0).abs() < 1e-15);
    assert!((f[0].1 - 0.7).abs() < 1e-15 && (f[1].1 - 0.5).abs() < 1e-15);

    let id = CMat::eye(2);
    let (sx, sz) = (sigma_x(), sigma_z());
    let term = |op: &CMat, site: usize| if site == 1 { kron(op, &id) } else { kron(&id, op) };
    let mut h = kron(&sz, &sz).mapv(|z| -z);
    for (i, &(hx, hz)) in f.iter().enumerate() {
        h = h + term(&sx, i + 1).mapv(|z| z * hx) + term(&sz, i + 1).mapv(|z| z * hz);
    }
    let brute = eigvalsh(&h).unwrap();
    let built = eigvalsh(&build_ising_chain(2, 1.0).unwrap().h).unwrap();
    assert!((brute[0] - built[0]).abs() < 1e-12);
}

#[test]
fn kelvin_examples() {
    assert_eq!(kelvin_to_energy(0.0).unwrap(), 0.0);
    // k_B / hbar in ps^-1 K^-1 from CODATA: 1.380649e-23 / 1.054571817e-34 * 1e-12
    let oracle = 50.0 * 1.380649e-23 / 1.054571817e-34 * 1e-12;
    let e = kelvin_to_energy(50.0).unwrap();
    assert!((e - oracle).abs() < 1e-12 * oracle);
    assert!((e - 6.546).abs() < 1e-3);
    for t in [0.3, 50.0, 300.0] {
        assert!((energy_to_kelvin(kelvin_to_energy(t).unwrap()).unwrap() - t).abs() < 1e-12 * t);
    }
    assert!(kelvin_to_energy(-1.0).is_err());
}
