//! Redfield, secular Lindblad, the Q-bar correction and the CCQME, all
//! expressed in the eigenbasis of the system Hamiltonian.
//!
//! Every generator is a matrix-function action `rho -> L[rho]` written as
//! `-i[diag(E), rho] + D[rho]`; the propagator may treat the commutator
//! exactly and integrate only `D`.

use std::collections::HashMap;
use std::sync::Mutex;

use ndarray::{Array1, Array2};
use thiserror::Error;

use crate::bath::{build_rate_table, BathError, BathSpec, RateTable};
use crate::linalg::{
    c, dagger, diagonalize, hermiticity_deviation, hermitize, normalize_density, CMat, EigenSystem, LinalgError,
    VectorizedGenerator, C64, I,
};

#[derive(Debug, Error)]
pub enum GenError {
    #[error(transparent)]
    Bath(#[from] BathError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("coupling operator {index} has dimension {got}, system has {want}")]
    DimensionMismatch { index: usize, got: usize, want: usize },
    #[error("coupling operator {index} is not Hermitian (deviation {deviation:.3e})")]
    NonHermitianCoupling { index: usize, deviation: f64 },
    #[error("bath index {0} out of range")]
    NoSuchBath(usize),
}

/// Non-fatal findings recorded while building or applying generators.
#[derive(Debug, Clone, PartialEq)]
pub enum Diagnostic {
    DegenerateSpectrum { gap: f64 },
    DegeneratePairSkipped { pairs: Vec<(usize, usize)> },
    DecoupledLevel { bath: usize, level: usize },
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Diagnostic::DegenerateSpectrum { gap } => write!(f, "degenerate spectrum (smallest gap {gap:.3e})"),
            Diagnostic::DegeneratePairSkipped { pairs } => {
                write!(f, "{} degenerate level pairs excluded from the coherence inverse", pairs.len())
            }
            Diagnostic::DecoupledLevel { bath, level } => {
                write!(f, "level {level} has no rates to bath {bath}; formal derivative set to zero")
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BuildOptions {
    /// Degeneracy threshold relative to the spectral span.
    pub eps_deg_rel: f64,
    /// Decoupled-level threshold relative to the largest rate.
    pub eps_den_rel: f64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions { eps_deg_rel: 1e-9, eps_den_rel: 1e-12 }
    }
}

/// One bath: coupling operator in the eigenbasis plus its infinite-horizon tables.
#[derive(Debug, Clone)]
pub struct BathCoupling {
    pub bath: BathSpec,
    pub s: CMat,
    pub needed: Array2<bool>,
    pub rates: RateTable,
    /// Convolution operator `S_nm W(Delta_nm)`.
    pub conv: CMat,
    /// `S conv`.
    pub k: CMat,
}

impl BathCoupling {
    fn new(bath: BathSpec, s: CMat, bohr: &Array2<f64>) -> Result<Self, GenError> {
        let smax = s.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
        let needed = s.mapv(|z| z.norm() > 1e-14 * smax);
        let rates = build_rate_table(&bath, bohr, &needed, None)?;
        let conv = convolution(&s, &rates.w);
        let k = s.dot(&conv);
        Ok(BathCoupling { bath, s, needed, rates, conv, k })
    }
}

pub fn convolution(s: &CMat, w: &CMat) -> CMat {
    s * w
}

#[derive(Debug, Clone)]
pub struct CoupledSystem {
    pub eig: EigenSystem,
    pub bohr: Array2<f64>,
    pub couplings: Vec<BathCoupling>,
    pub eps_deg: f64,
    pub eps_den_rel: f64,
    pub diagnostics: Vec<Diagnostic>,
}

/// Diagonalizes `h`, rotates each coupling into the eigenbasis and tabulates rates.
pub fn build_coupled_system(h: &CMat, couplings: &[(CMat, BathSpec)], opts: BuildOptions) -> Result<CoupledSystem, GenError> {
    let eig = diagonalize(h, opts.eps_deg_rel)?;
    let dim = eig.dim();
    let mut diagnostics = Vec::new();
    if eig.degenerate {
        diagnostics.push(Diagnostic::DegenerateSpectrum { gap: eig.degeneracy_gap });
    }
    let bohr = eig.bohr();
    let mut out = Vec::with_capacity(couplings.len());
    for (index, (s, bath)) in couplings.iter().enumerate() {
        if s.nrows() != dim || s.ncols() != dim {
            return Err(GenError::DimensionMismatch { index, got: s.nrows(), want: dim });
        }
        let deviation = hermiticity_deviation(s);
        if deviation > 1e-10 {
            return Err(GenError::NonHermitianCoupling { index, deviation });
        }
        let se = hermitize(&eig.to_eigenbasis(s));
        out.push(BathCoupling::new(*bath, se, &bohr)?);
    }
    let eps_deg = opts.eps_deg_rel * eig.spectral_span();
    let mut skipped = Vec::new();
    for n in 0..dim {
        for m in 0..dim {
            if n != m && bohr[[n, m]].abs() <= eps_deg {
                skipped.push((n, m));
            }
        }
    }
    if !skipped.is_empty() {
        diagnostics.push(Diagnostic::DegeneratePairSkipped { pairs: skipped });
    }
    Ok(CoupledSystem { eig, bohr, couplings: out, eps_deg, eps_den_rel: opts.eps_den_rel, diagnostics })
}

impl CoupledSystem {
    pub fn dim(&self) -> usize {
        self.eig.dim()
    }

    pub fn energies(&self) -> &Array1<f64> {
        &self.eig.energies
    }

    pub fn coupling(&self, i: usize) -> Result<&BathCoupling, GenError> {
        self.couplings.get(i).ok_or(GenError::NoSuchBath(i))
    }

    /// `-i[diag(E), rho]`
    pub fn free(&self, rho: &CMat) -> CMat {
        let e = &self.eig.energies;
        CMat::from_shape_fn(rho.dim(), |(n, m)| -I * (e[n] - e[m]) * rho[[n, m]])
    }

    pub fn gibbs(&self, beta: f64) -> CMat {
        crate::linalg::gibbs_state(&self.eig.energies, beta)
    }
}

/// Redfield action for one convolution operator, Hermitian input.
///
/// `R[rho] = -S conv rho + S rho conv^+ - rho conv^+ S + conv rho S`
pub fn redfield_with(s: &CMat, conv: &CMat, k: &CMat, rho: &CMat) -> CMat {
    let kr = k.dot(rho);
    let x = conv.dot(rho).dot(s);
    let mut out = x.clone() - &kr;
    out = out + dagger(&x) - dagger(&kr);
    out
}

/// Apply a Hermiticity-preserving map to an arbitrary matrix by splitting it
/// into Hermitian and anti-Hermitian parts.
pub fn apply_linear<F: Fn(&CMat) -> CMat>(f: F, x: &CMat) -> CMat {
    let xd = dagger(x);
    let a = (x + &xd).mapv(|z| z * 0.5);
    let b = (x - &xd).mapv(|z| z * c(0.0, -0.5));
    if b.iter().all(|z| *z == C64::new(0.0, 0.0)) {
        return f(&a);
    }
    f(&a) + f(&b).mapv(|z| z * I)
}

/// Static Redfield action `R_inf` of bath `i`.
pub fn redfield_apply(sys: &CoupledSystem, i: usize, rho: &CMat) -> Result<CMat, GenError> {
    let b = sys.coupling(i)?;
    Ok(redfield_with(&b.s, &b.conv, &b.k, rho))
}

/// Secular Lindblad dissipator plus Lamb-shift commutator of bath `i`.
pub fn lindblad_secular_apply(sys: &CoupledSystem, i: usize, rho: &CMat) -> Result<CMat, GenError> {
    let lp = LindbladParts::new(sys.coupling(i)?);
    Ok(lp.apply(rho))
}

#[derive(Debug, Clone)]
struct LindbladParts {
    /// rate of the jump m -> n at `[n, m]`
    rates: Array2<f64>,
    escape: Array1<f64>,
    lamb: Array1<f64>,
}

impl LindbladParts {
    fn new(b: &BathCoupling) -> Self {
        let dim = b.s.nrows();
        let rates = Array2::from_shape_fn((dim, dim), |(n, m)| 2.0 * b.s[[n, m]].norm_sqr() * b.rates.w[[n, m]].re);
        let escape = Array1::from_shape_fn(dim, |m| (0..dim).map(|n| rates[[n, m]]).sum());
        let lamb = Array1::from_shape_fn(dim, |m| (0..dim).map(|n| b.s[[n, m]].norm_sqr() * b.rates.w[[n, m]].im).sum());
        LindbladParts { rates, escape, lamb }
    }

    fn apply(&self, rho: &CMat) -> CMat {
        let dim = rho.nrows();
        let mut out = CMat::from_shape_fn((dim, dim), |(a, b)| {
            -I * (self.lamb[a] - self.lamb[b]) * rho[[a, b]] - 0.5 * (self.escape[a] + self.escape[b]) * rho[[a, b]]
        });
        for n in 0..dim {
            let gain: C64 = (0..dim).map(|m| self.rates[[n, m]] * rho[[m, m]]).sum();
            out[[n, n]] += gain;
        }
        out
    }
}

/// Precomputed pieces of the Q-bar superoperator for one bath.
#[derive(Debug, Clone)]
pub struct QBarAction {
    /// `1/(i Delta_nm)` off the diagonal, zero on skipped pairs and the diagonal.
    inv: CMat,
    /// `|S_nl|^2 V''(Delta_nl)`
    gain: Array2<f64>,
    /// `sum_l |S_nl|^2 V''(Delta_ln)`
    loss: Array1<f64>,
    /// `sum_l |S_nl|^2 W''(Delta_ln)`
    wsum: Array1<f64>,
    /// `|S_nl|^2 V'(Delta_nl)` for `l != n`
    dnum: Array2<f64>,
    /// `sum_{l != n} |S_ln|^2 W'(Delta_ln)`, zero for decoupled levels
    dden: Array1<f64>,
    pub decoupled: Vec<usize>,
}

impl QBarAction {
    pub fn new(sys: &CoupledSystem, i: usize) -> Result<Self, GenError> {
        let b = sys.coupling(i)?;
        let dim = sys.dim();
        let s2 = b.s.mapv(|z| z.norm_sqr());
        let w = &b.rates.w;
        let v = &b.rates.v;
        let inv = CMat::from_shape_fn((dim, dim), |(n, m)| {
            let d = sys.bohr[[n, m]];
            if n == m || d.abs() <= sys.eps_deg {
                c(0.0, 0.0)
            } else {
                c(0.0, -1.0 / d)
            }
        });
        let gain = Array2::from_shape_fn((dim, dim), |(n, l)| s2[[n, l]] * v[[n, l]].im);
        let loss = Array1::from_shape_fn(dim, |n| (0..dim).map(|l| s2[[n, l]] * v[[l, n]].im).sum());
        let wsum = Array1::from_shape_fn(dim, |n| (0..dim).map(|l| s2[[n, l]] * w[[l, n]].im).sum());
        let dnum = Array2::from_shape_fn((dim, dim), |(n, l)| if n == l { 0.0 } else { s2[[n, l]] * v[[n, l]].re });
        let mut dden = Array1::from_shape_fn(dim, |n| (0..dim).filter(|&l| l != n).map(|l| s2[[l, n]] * w[[l, n]].re).sum());
        let maxrate = dden.iter().fold(0.0_f64, |m: f64, x: &f64| m.max(x.abs()));
        let mut decoupled = Vec::new();
        for n in 0..dim {
            if dden[n].abs() < sys.eps_den_rel * maxrate || maxrate == 0.0 {
                dden[n] = 0.0;
                decoupled.push(n);
            }
        }
        Ok(QBarAction { inv, gain, loss, wsum, dnum, dden, decoupled })
    }

    /// Formal energy derivative `D_n` of the populations `p`.
    pub fn formal_derivative(&self, p: &Array1<C64>) -> Array1<C64> {
        let dim = p.len();
        Array1::from_shape_fn(dim, |n| {
            if self.dden[n] == 0.0 {
                return c(0.0, 0.0);
            }
            // sum_{l != n} |S_nl|^2 [V'_nl p_l + V'_ln p_n]; V'_ln enters through dnum[l, n]
            let mut num = c(0.0, 0.0);
            for l in 0..dim {
                if l != n {
                    num += self.dnum[[n, l]] * p[l] + self.dnum[[l, n]] * p[n];
                }
            }
            num / self.dden[n]
        })
    }

    /// Q-bar applied to `rho`; `r_inf` must be `R_inf[rho]` of the same bath.
    pub fn apply_with(&self, rho: &CMat, r_inf: &CMat) -> CMat {
        let dim = rho.nrows();
        let mut out = r_inf * &self.inv;
        let p = Array1::from_shape_fn(dim, |n| rho[[n, n]]);
        let dn = self.formal_derivative(&p);
        for n in 0..dim {
            let mut acc = -self.loss[n] * p[n] + self.wsum[n] * dn[n];
            for l in 0..dim {
                acc += self.gain[[n, l]] * p[l];
            }
            out[[n, n]] = acc;
        }
        out
    }
}

/// `dnum` uses `|S_nl|^2 = |S_ln|^2`, so `V'_ln` terms are read from the transposed slot.
pub fn formal_energy_derivative(sys: &CoupledSystem, i: usize, p: &Array1<f64>) -> Result<(Array1<f64>, Vec<Diagnostic>), GenError> {
    let q = QBarAction::new(sys, i)?;
    let pc = p.mapv(|x| c(x, 0.0));
    let d = q.formal_derivative(&pc).mapv(|z| z.re);
    let diags = q.decoupled.iter().map(|&level| Diagnostic::DecoupledLevel { bath: i, level }).collect();
    Ok((d, diags))
}

pub fn qbar_apply(sys: &CoupledSystem, i: usize, rho: &CMat) -> Result<CMat, GenError> {
    let q = QBarAction::new(sys, i)?;
    let r = redfield_apply(sys, i, rho)?;
    Ok(q.apply_with(rho, &r))
}

/// `(I + Qbar)[rho_G]`, hermitized and trace-normalized.
pub fn mean_force_state(sys: &CoupledSystem, i: usize) -> Result<CMat, GenError> {
    let beta = sys.coupling(i)?.bath.beta();
    let g = sys.gibbs(beta);
    let q = qbar_apply(sys, i, &g)?;
    Ok(normalize_density(&(g + q)))
}

/// A (possibly time-dependent) generator in the system eigenbasis.
pub trait GeneratorAction: Send + Sync {
    fn dim(&self) -> usize;
    /// Energies `E_n`; the full generator is `-i[diag(E), rho] + dissipative(rho, t)`.
    fn energies(&self) -> &Array1<f64>;
    /// Non-commutator part for Hermitian `rho`.
    fn dissipative(&self, rho: &CMat, t: f64) -> CMat;
    fn time_dependent(&self) -> bool {
        false
    }
    fn name(&self) -> &str;

    fn apply(&self, rho: &CMat, t: f64) -> CMat {
        let e = self.energies();
        let mut out = self.dissipative(rho, t);
        for ((n, m), z) in out.indexed_iter_mut() {
            *z += -I * (e[n] - e[m]) * rho[[n, m]];
        }
        out
    }

    /// Action on an arbitrary (non-Hermitian) matrix.
    fn apply_general(&self, x: &CMat, t: f64) -> CMat {
        apply_linear(|a| self.apply(a, t), x)
    }

    /// Dense `dim^2 x dim^2` representation at time `t`.
    fn vectorize(&self, t: f64) -> VectorizedGenerator {
        VectorizedGenerator::from_action(self.dim(), |x| self.apply_general(x, t))
    }
}

/// Time-dependent convolution operators `S_nm W(Delta_nm, t)`, memoized per time.
#[derive(Debug)]
pub struct HorizonCache {
    cache: Mutex<HashMap<u64, Vec<(CMat, CMat)>>>,
}

impl HorizonCache {
    fn new() -> Self {
        HorizonCache { cache: Mutex::new(HashMap::new()) }
    }

    fn get(&self, sys: &CoupledSystem, t: f64) -> Result<Vec<(CMat, CMat)>, GenError> {
        let key = t.to_bits();
        if let Some(v) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(v.clone());
        }
        let mut v = Vec::with_capacity(sys.couplings.len());
        for b in &sys.couplings {
            let w = horizon_table(&b.bath, &sys.bohr, &b.needed, t)?;
            let conv = convolution(&b.s, &w);
            let k = b.s.dot(&conv);
            v.push((conv, k));
        }
        self.cache.lock().expect("cache lock").insert(key, v.clone());
        Ok(v)
    }
}

/// `W(Delta_nm, t)` on the grid, evaluated once per distinct frequency.
pub fn horizon_table(bath: &BathSpec, bohr: &Array2<f64>, needed: &Array2<bool>, t: f64) -> Result<CMat, GenError> {
    let mut seen: HashMap<u64, C64> = HashMap::new();
    let mut w = CMat::zeros(bohr.dim());
    for ((i, j), &d) in bohr.indexed_iter() {
        if needed[[i, j]] {
            let val = match seen.get(&d.to_bits()) {
                Some(v) => *v,
                None => {
                    let v = bath.w_finite(d, t)?;
                    seen.insert(d.to_bits(), v);
                    v
                }
            };
            w[[i, j]] = val;
        }
    }
    Ok(w)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Horizon {
    Infinite,
    /// Rates `W(E, t)` at the current time.
    Running,
}

/// Time-local Redfield equation, static or with running rates.
pub struct Redfield {
    sys: CoupledSystem,
    horizon: Horizon,
    cache: HorizonCache,
    pub failures: Mutex<Vec<String>>,
}

impl Redfield {
    pub fn new(sys: CoupledSystem, horizon: Horizon) -> Self {
        Redfield { sys, horizon, cache: HorizonCache::new(), failures: Mutex::new(Vec::new()) }
    }

    pub fn system(&self) -> &CoupledSystem {
        &self.sys
    }

    fn dissipator_sum(&self, rho: &CMat, t: f64) -> CMat {
        let mut out = CMat::zeros(rho.dim());
        let horizon = if t.is_finite() { self.horizon } else { Horizon::Infinite };
        match horizon {
            Horizon::Infinite => {
                for b in &self.sys.couplings {
                    out = out + redfield_with(&b.s, &b.conv, &b.k, rho);
                }
            }
            Horizon::Running => match self.cache.get(&self.sys, t) {
                Ok(ops) => {
                    for (b, (conv, k)) in self.sys.couplings.iter().zip(ops.iter()) {
                        out = out + redfield_with(&b.s, conv, k, rho);
                    }
                }
                Err(e) => {
                    self.failures.lock().expect("lock").push(e.to_string());
                    out.fill(c(f64::NAN, f64::NAN));
                }
            },
        }
        out
    }
}

impl GeneratorAction for Redfield {
    fn dim(&self) -> usize {
        self.sys.dim()
    }
    fn energies(&self) -> &Array1<f64> {
        self.sys.energies()
    }
    fn dissipative(&self, rho: &CMat, t: f64) -> CMat {
        self.dissipator_sum(rho, t)
    }
    fn time_dependent(&self) -> bool {
        self.horizon == Horizon::Running
    }
    fn name(&self) -> &str {
        "redfield"
    }
}

/// Secular (quantum-optical) Lindblad equation with Lamb shift.
pub struct Lindblad {
    sys: CoupledSystem,
    parts: Vec<LindbladParts>,
}

impl Lindblad {
    pub fn new(sys: CoupledSystem) -> Self {
        let parts = sys.couplings.iter().map(LindbladParts::new).collect();
        Lindblad { sys, parts }
    }
}

impl GeneratorAction for Lindblad {
    fn dim(&self) -> usize {
        self.sys.dim()
    }
    fn energies(&self) -> &Array1<f64> {
        self.sys.energies()
    }
    fn dissipative(&self, rho: &CMat, _t: f64) -> CMat {
        let mut out = CMat::zeros(rho.dim());
        for p in &self.parts {
            out = out + p.apply(rho);
        }
        out
    }
    fn name(&self) -> &str {
        "lindblad"
    }
}

/// `d rho/dt = -i[H, rho] + sum_i R_t^i[(I - sum_j Qbar^j)[rho]]`.
pub struct Ccqme {
    red: Redfield,
    qbars: Vec<QBarAction>,
    use_qbar: bool,
}

impl Ccqme {
    pub fn new(sys: CoupledSystem, horizon: Horizon) -> Result<Self, GenError> {
        let qbars = (0..sys.couplings.len()).map(|i| QBarAction::new(&sys, i)).collect::<Result<Vec<_>, _>>()?;
        Ok(Ccqme { red: Redfield::new(sys, horizon), qbars, use_qbar: true })
    }

    /// Replace every Q-bar by zero (reduces to Redfield).
    pub fn without_qbar(mut self) -> Self {
        self.use_qbar = false;
        self
    }

    pub fn system(&self) -> &CoupledSystem {
        &self.red.sys
    }

    pub fn diagnostics(&self) -> Vec<Diagnostic> {
        let mut d = self.red.sys.diagnostics.clone();
        for (bath, q) in self.qbars.iter().enumerate() {
            d.extend(q.decoupled.iter().map(|&level| Diagnostic::DecoupledLevel { bath, level }));
        }
        d
    }

    /// `sum_j Qbar^j[rho]`.
    pub fn qbar_sum(&self, rho: &CMat) -> CMat {
        let mut out = CMat::zeros(rho.dim());
        for (b, q) in self.red.sys.couplings.iter().zip(&self.qbars) {
            let r = redfield_with(&b.s, &b.conv, &b.k, rho);
            out = out + q.apply_with(rho, &r);
        }
        out
    }

    pub fn failures(&self) -> Vec<String> {
        self.red.failures.lock().expect("lock").clone()
    }
}

impl GeneratorAction for Ccqme {
    fn dim(&self) -> usize {
        self.red.dim()
    }
    fn energies(&self) -> &Array1<f64> {
        self.red.energies()
    }
    fn dissipative(&self, rho: &CMat, t: f64) -> CMat {
        if !self.use_qbar {
            return self.red.dissipator_sum(rho, t);
        }
        let x = rho - &self.qbar_sum(rho);
        self.red.dissipator_sum(&x, t)
    }
    fn time_dependent(&self) -> bool {
        self.red.time_dependent()
    }
    fn name(&self) -> &str {
        "ccqme"
    }
}

/// `||L[rho]||_F` at infinite horizon.
pub fn stationarity_residual<G: GeneratorAction + ?Sized>(gen: &G, rho: &CMat) -> f64 {
    crate::linalg::fro_norm(&gen.apply(rho, f64::INFINITY))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs, trace};
    use crate::models::build_harmonic;

    fn ho(gamma: f64, n: usize) -> CoupledSystem {
        let (m, _) = build_harmonic(1.0, n).unwrap();
        let bath = BathSpec::caldeira_leggett(gamma, 5.0, 0.3).unwrap();
        build_coupled_system(&m.h, &[(m.s, bath)], BuildOptions::default()).unwrap()
    }

    #[test]
    fn ladder_selection_rule() {
        let sys = ho(0.2, 3);
        let s = &sys.couplings[0].s;
        for n in 0..3 {
            for m in 0..3 {
                if (n as i64 - m as i64).abs() != 1 {
                    assert!(s[[n, m]].norm() < 1e-14);
                }
            }
        }
        let mut ds: Vec<f64> = sys.couplings[0].rates.entries.iter().map(|e| e.delta).collect();
        ds.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(ds.len(), 2);
        assert!((ds[0] + 1.0).abs() < 1e-12 && (ds[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gibbs_populations_stationary_under_redfield() {
        let sys = ho(0.2, 12);
        let g = sys.gibbs(1.0 / 0.3);
        let r = redfield_apply(&sys, 0, &g).unwrap();
        let scale = max_abs(&sys.couplings[0].k);
        for n in 0..12 {
            assert!(r[[n, n]].norm() < 1e-8 * scale);
        }
    }

    #[test]
    fn coherence_identity() {
        let sys = ho(0.1, 10);
        let rho = hermitize(&CMat::from_shape_fn((10, 10), |(i, j)| c((i * 3 + j) as f64 * 0.01, (i as f64 - j as f64) * 0.02)));
        let q = qbar_apply(&sys, 0, &rho).unwrap();
        let r = redfield_apply(&sys, 0, &rho).unwrap();
        for n in 0..10 {
            for m in 0..10 {
                if n != m {
                    let lhs = I * sys.bohr[[n, m]] * q[[n, m]];
                    assert!((lhs - r[[n, m]]).norm() < 1e-12 * (1.0 + r[[n, m]].norm()));
                }
            }
        }
    }

    #[test]
    fn formal_derivative_of_gibbs() {
        let sys = ho(0.2, 14);
        let beta = 1.0 / 0.3;
        let p = crate::linalg::gibbs_populations(sys.energies(), beta);
        let (d, diags) = formal_energy_derivative(&sys, 0, &p).unwrap();
        assert!(diags.is_empty());
        for n in 0..14 {
            assert!((d[n] + beta * p[n]).abs() < 1e-8, "n={n}: {} vs {}", d[n], -beta * p[n]);
        }
    }

    #[test]
    fn decoupled_level_reported() {
        let (m, _) = build_harmonic(1.0, 4).unwrap();
        // couple only levels 0 and 1
        let mut s = CMat::zeros((4, 4));
        s[[0, 1]] = c(1.0, 0.0);
        s[[1, 0]] = c(1.0, 0.0);
        let bath = BathSpec::caldeira_leggett(0.1, 5.0, 0.5).unwrap();
        let sys = build_coupled_system(&m.h, &[(s, bath)], BuildOptions::default()).unwrap();
        let p = Array1::from(vec![0.4, 0.3, 0.2, 0.1]);
        let (d, diags) = formal_energy_derivative(&sys, 0, &p).unwrap();
        assert_eq!(d[2], 0.0);
        assert_eq!(d[3], 0.0);
        assert!(diags.contains(&Diagnostic::DecoupledLevel { bath: 0, level: 2 }));
    }

    #[test]
    fn ccqme_without_qbar_is_redfield_bitwise() {
        let sys = ho(0.2, 10);
        let rho = hermitize(&CMat::from_shape_fn((10, 10), |(i, j)| c(1.0 / (1.0 + (i + j) as f64), 0.1 * i as f64 - 0.05 * j as f64)));
        let red = Redfield::new(sys.clone(), Horizon::Infinite);
        let cc = Ccqme::new(sys, Horizon::Infinite).unwrap().without_qbar();
        assert_eq!(red.apply(&rho, 0.0), cc.apply(&rho, 0.0));
    }

    #[test]
    fn generators_are_traceless() {
        let sys = ho(0.2, 10);
        let rho = hermitize(&CMat::from_shape_fn((10, 10), |(i, j)| c((i + 2 * j) as f64 * 0.03, (j as f64) * 0.01)));
        let gens: Vec<Box<dyn GeneratorAction>> = vec![
            Box::new(Redfield::new(sys.clone(), Horizon::Infinite)),
            Box::new(Lindblad::new(sys.clone())),
            Box::new(Ccqme::new(sys, Horizon::Infinite).unwrap()),
        ];
        for g in gens {
            let out = g.apply(&rho, 0.0);
            assert!(trace(&out).norm() < 1e-12, "{}", g.name());
            assert!(hermiticity_deviation(&out) < 1e-12, "{}", g.name());
        }
    }
}
