//! Dense complex linear algebra shared by every other module.
//!
//! Matrices are `Array2<C64>`. Vectorization is row-major: the entry
//! `(i, j)` of a `dim x dim` matrix sits at index `i * dim + j`.

use ndarray::{Array1, Array2, ShapeBuilder};
use ndarray_linalg::{EigValsh, Eigh, FactorizeInto, Solve, UPLO};
use num_complex::Complex64;
use thiserror::Error;

pub type C64 = Complex64;
pub type CMat = Array2<C64>;

pub const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix is not Hermitian (relative deviation {deviation:.3e})")]
    NonHermitianInput { deviation: f64 },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("steady state is not unique (estimated null-space dimension {dim})")]
    NonUniqueSteadyState { dim: usize },
    #[error("iterative steady state did not converge (last change {residual:.3e})")]
    NoConvergence { residual: f64 },
    #[error("LAPACK failure: {0}")]
    Lapack(String),
}

impl From<ndarray_linalg::error::LinalgError> for LinalgError {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        LinalgError::Lapack(e.to_string())
    }
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn dagger(a: &CMat) -> CMat {
    a.t().mapv(|z| z.conj())
}

pub fn trace(a: &CMat) -> C64 {
    a.diag().iter().sum()
}

pub fn identity(dim: usize) -> CMat {
    Array2::eye(dim)
}

pub fn real_diag(v: &Array1<f64>) -> CMat {
    Array2::from_diag(&v.mapv(|x| c(x, 0.0)))
}

/// `max |A - A^dagger|` relative to `max |A|` (absolute when A vanishes).
pub fn hermiticity_deviation(a: &CMat) -> f64 {
    let n = a.nrows();
    let mut dev: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            dev = dev.max((a[[i, j]] - a[[j, i]].conj()).norm());
            scale = scale.max(a[[i, j]].norm());
        }
    }
    if scale > 0.0 {
        dev / scale
    } else {
        dev
    }
}

pub fn hermitize(a: &CMat) -> CMat {
    (a + &dagger(a)).mapv(|z| z * 0.5)
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a.dot(b) - b.dot(a)
}

pub fn anticommutator(a: &CMat, b: &CMat) -> CMat {
    a.dot(b) + b.dot(a)
}

/// Frobenius norm.
pub fn fro_norm(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(a: &CMat) -> f64 {
    a.iter().fold(0.0_f64, |m, z| m.max(z.norm()))
}

/// Eigenvalues of a Hermitian matrix, ascending. Only the lower triangle is read.
pub fn eigvalsh(a: &CMat) -> Result<Array1<f64>, LinalgError> {
    Ok(a.eigvalsh(UPLO::Lower)?)
}

/// Eigen-decomposition of a Hermitian system operator.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub energies: Array1<f64>,
    pub basis: CMat,
    /// Smallest spacing between distinct eigenvalue indices.
    pub degeneracy_gap: f64,
    /// Set when `degeneracy_gap` fell below the configured threshold.
    pub degenerate: bool,
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// `V^dagger A V`: lab-frame operator in the eigenbasis.
    pub fn to_eigenbasis(&self, a: &CMat) -> CMat {
        dagger(&self.basis).dot(a).dot(&self.basis)
    }

    /// `V A V^dagger`: eigenbasis operator back in the lab frame.
    pub fn from_eigenbasis(&self, a: &CMat) -> CMat {
        self.basis.dot(a).dot(&dagger(&self.basis))
    }

    /// Bohr frequencies `Delta_nm = E_n - E_m`.
    pub fn bohr(&self) -> Array2<f64> {
        let n = self.dim();
        Array2::from_shape_fn((n, n), |(i, j)| self.energies[i] - self.energies[j])
    }

    pub fn spectral_span(&self) -> f64 {
        let n = self.dim();
        if n == 0 {
            0.0
        } else {
            self.energies[n - 1] - self.energies[0]
        }
    }
}

/// Diagonalizes `h`. `eps_deg_rel` is the degeneracy threshold relative to the spectral span.
pub fn diagonalize(h: &CMat, eps_deg_rel: f64) -> Result<EigenSystem, LinalgError> {
    let deviation = hermiticity_deviation(h);
    if deviation > 1e-12 {
        return Err(LinalgError::NonHermitianInput { deviation });
    }
    // LAPACK sees a row-major complex matrix as its transpose (the conjugate
    // for Hermitian input); hand it column-major data instead
    let mut hf = CMat::zeros(h.dim().f());
    hf.assign(h);
    let (energies, mut basis) = hf.eigh(UPLO::Lower)?;
    let n = energies.len();
    // fix the phase: largest component of each eigenvector real and positive
    for mut col in basis.columns_mut() {
        let big = col.iter().fold(C64::new(0.0, 0.0), |m, z| if z.norm() > m.norm() + 1e-12 { *z } else { m });
        if big.norm() > 0.0 {
            let ph = big.conj() / big.norm();
            col.mapv_inplace(|z| z * ph);
        }
    }
    let mut gap = f64::INFINITY;
    for k in 1..n {
        gap = gap.min(energies[k] - energies[k - 1]);
    }
    let span = if n > 0 { energies[n - 1] - energies[0] } else { 0.0 };
    let degenerate = n > 1 && gap < eps_deg_rel * span.max(f64::MIN_POSITIVE);
    Ok(EigenSystem { energies, basis, degeneracy_gap: gap, degenerate })
}

/// `(1/2) sum |lambda_i|` over the eigenvalues of `a - b`.
pub fn trace_distance(a: &CMat, b: &CMat) -> Result<f64, LinalgError> {
    if a.dim() != b.dim() {
        return Err(LinalgError::DimensionMismatch { left: a.nrows(), right: b.nrows() });
    }
    let d = hermitize(&(a - b));
    Ok(0.5 * eigvalsh(&d)?.iter().map(|x| x.abs()).sum::<f64>())
}

pub fn min_eigenvalue(rho: &CMat) -> Result<f64, LinalgError> {
    let ev = eigvalsh(&hermitize(rho))?;
    Ok(ev.iter().cloned().fold(f64::INFINITY, f64::min))
}

/// Normalized Boltzmann weights `exp(-beta E_n) / Z`, shifted for stability.
pub fn gibbs_populations(energies: &Array1<f64>, beta: f64) -> Array1<f64> {
    let e0 = energies.iter().cloned().fold(f64::INFINITY, f64::min);
    let w = energies.mapv(|e| (-beta * (e - e0)).exp());
    let z: f64 = w.sum();
    w / z
}

/// Gibbs state as a diagonal matrix in the eigenbasis.
pub fn gibbs_state(energies: &Array1<f64>, beta: f64) -> CMat {
    real_diag(&gibbs_populations(energies, beta))
}

/// Hermitize and normalize the trace to one.
pub fn normalize_density(rho: &CMat) -> CMat {
    let h = hermitize(rho);
    let tr = trace(&h).re;
    h.mapv(|z| z / tr)
}

/// A linear map on `dim x dim` matrices stored as a `dim^2 x dim^2` matrix.
#[derive(Debug, Clone)]
pub struct VectorizedGenerator {
    pub dim: usize,
    pub matrix: CMat,
}

impl VectorizedGenerator {
    /// Builds the matrix column by column from the action on basis matrices `|i><j|`.
    pub fn from_action<F: Fn(&CMat) -> CMat>(dim: usize, f: F) -> Self {
        let d2 = dim * dim;
        let mut m = CMat::zeros((d2, d2));
        let mut e = CMat::zeros((dim, dim));
        for i in 0..dim {
            for j in 0..dim {
                e[[i, j]] = c(1.0, 0.0);
                let out = f(&e);
                e[[i, j]] = c(0.0, 0.0);
                let col = i * dim + j;
                for (k, z) in out.iter().enumerate() {
                    m[[k, col]] = *z;
                }
            }
        }
        VectorizedGenerator { dim, matrix: m }
    }

    pub fn apply(&self, rho: &CMat) -> CMat {
        let v = Array1::from_iter(rho.iter().cloned());
        let out = self.matrix.dot(&v);
        out.into_shape_with_order((self.dim, self.dim)).expect("square")
    }

    /// Largest magnitude of the trace functional applied to the columns.
    pub fn trace_defect(&self) -> f64 {
        let d = self.dim;
        let d2 = d * d;
        let mut worst: f64 = 0.0;
        for col in 0..d2 {
            let s: C64 = (0..d).map(|k| self.matrix[[k * d + k, col]]).sum();
            worst = worst.max(s.norm());
        }
        worst
    }
}

/// Stationary state from the trace-bordered linear system.
///
/// The population equation of `(0,0)` is replaced by the trace condition. A
/// unique stationary state makes this system regular; a non-finite, huge or
/// inaccurate solution signals a degenerate null space.
pub fn steady_state(gen: &VectorizedGenerator) -> Result<CMat, LinalgError> {
    let d = gen.dim;
    let d2 = d * d;
    let mut a = gen.matrix.clone();
    for col in 0..d2 {
        a[[0, col]] = c(0.0, 0.0);
    }
    for k in 0..d {
        a[[0, k * d + k]] = c(1.0, 0.0);
    }
    let mut b = Array1::<C64>::zeros(d2);
    b[0] = c(1.0, 0.0);
    let lu = match a.factorize_into() {
        Ok(lu) => lu,
        Err(_) => return Err(LinalgError::NonUniqueSteadyState { dim: 2 }),
    };
    // a degenerate null space leaves the bordered system singular: the
    // solution blows up or fails to annihilate the generator
    let x = lu.solve(&b)?;
    let xn = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let scale = gen.matrix.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let res = gen.matrix.dot(&x).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if !xn.is_finite() || xn > 1e6 || !(res <= 1e-10 * scale * xn) {
        return Err(LinalgError::NonUniqueSteadyState { dim: null_dim_estimate(gen) });
    }
    let rho = x.into_shape_with_order((d, d)).expect("square");
    Ok(normalize_density(&rho))
}

/// Rough null-space dimension from singular values (small generators only).
fn null_dim_estimate(gen: &VectorizedGenerator) -> usize {
    use ndarray_linalg::SVD;
    if gen.dim > 16 {
        return 2;
    }
    match gen.matrix.svd(false, false) {
        Ok((_, s, _)) => {
            let smax = s.iter().cloned().fold(0.0, f64::max);
            s.iter().filter(|&&x| x <= 1e-10 * smax.max(1.0)).count().max(2)
        }
        Err(_) => 2,
    }
}

/// Residual `|L rho| / |L|` in Frobenius norm, used to certify steady states.
pub fn stationarity_residual(gen: &VectorizedGenerator, rho: &CMat) -> f64 {
    let r = gen.apply(rho);
    fro_norm(&r) / fro_norm(&gen.matrix).max(f64::MIN_POSITIVE)
}
