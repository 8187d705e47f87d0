//! Exact master equation of the damped harmonic oscillator with Drude baths.
//!
//! The Green function is a sum of three exponentials. The real part of the
//! bath correlator is expanded in its Drude pole plus Matsubara poles, so all
//! influence kernels reduce to closed-form sums.

use std::f64::consts::PI;
use std::sync::Mutex;

use ndarray::Array1;
use thiserror::Error;

use crate::bath::{BathSpec, Normalization, SpectralDensity};
use crate::generators::{GeneratorAction, Horizon};
use crate::linalg::{anticommutator, c, commutator, diagonalize, normalize_density, CMat, LinalgError, C64, I};
use crate::models::{ladder, Ladder};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("cubic has a repeated root near {0}; confluent residues are not supported")]
    RepeatedRoots(C64),
    #[error("unsupported bath combination: {0}")]
    UnsupportedBathCombination(String),
    #[error("coefficient denominator vanishes at t = {0}")]
    CoefficientSingularity(f64),
    #[error("kernel grid too coarse: finite-difference mismatch {rel:.3e} at t = {t}")]
    GridTooCoarse { t: f64, rel: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// `G(t) = sum_i r_i exp(z_i t)`.
#[derive(Debug, Clone)]
pub struct GreenFunction {
    pub omega: f64,
    pub omega_d: f64,
    pub gamma: f64,
    pub roots: [C64; 3],
    pub residues: [C64; 3],
}

fn cubic_roots(a2: f64, a1: f64, a0: f64) -> [C64; 3] {
    let p = |z: C64| ((z + a2) * z + a1) * z + a0;
    let dp = |z: C64| (3.0 * z + 2.0 * a2) * z + a1;
    let scale = 1.0 + a2.abs().max(a1.abs().sqrt()).max(a0.abs().cbrt());
    let seed = C64::new(0.4, 0.9) * scale;
    let mut z = [seed, seed * seed / scale, seed * seed * seed / (scale * scale)];
    for _ in 0..500 {
        let mut delta = 0.0_f64;
        for i in 0..3 {
            let mut den = C64::new(1.0, 0.0);
            for j in 0..3 {
                if i != j {
                    den *= z[i] - z[j];
                }
            }
            let step = p(z[i]) / den;
            z[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-15 * scale {
            break;
        }
    }
    for zi in z.iter_mut() {
        for _ in 0..3 {
            let d = dp(*zi);
            if d.norm() > 0.0 {
                *zi -= p(*zi) / d;
            }
        }
    }
    z
}

impl GreenFunction {
    pub fn new(omega: f64, omega_d: f64, gamma: f64) -> Result<Self, OracleError> {
        if !(omega > 0.0 && omega_d > 0.0 && gamma >= 0.0) {
            return Err(OracleError::InvalidParameter(format!("omega={omega}, omega_d={omega_d}, gamma={gamma}")));
        }
        let roots = cubic_roots(omega_d, omega * omega + gamma * omega_d, omega_d * omega * omega);
        let scale = omega.max(omega_d);
        for i in 0..3 {
            for j in 0..i {
                if (roots[i] - roots[j]).norm() < 1e-4 * scale {
                    return Err(OracleError::RepeatedRoots(roots[i]));
                }
            }
        }
        let mut residues = [C64::new(0.0, 0.0); 3];
        for i in 0..3 {
            let mut den = C64::new(1.0, 0.0);
            for j in 0..3 {
                if i != j {
                    den *= roots[i] - roots[j];
                }
            }
            residues[i] = (roots[i] + omega_d) / den;
        }
        Ok(GreenFunction { omega, omega_d, gamma, roots, residues })
    }

    /// `d^k G / dt^k` at `t`.
    pub fn deriv(&self, t: f64, k: i32) -> f64 {
        self.roots.iter().zip(&self.residues).map(|(z, r)| r * z.powi(k) * (z * t).exp()).sum::<C64>().re
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.deriv(t, 0)
    }

    /// `(G, G', G'', G''')`
    pub fn derivatives(&self, t: f64) -> [f64; 4] {
        [self.deriv(t, 0), self.deriv(t, 1), self.deriv(t, 2), self.deriv(t, 3)]
    }

    /// Laplace transform `(w_D + z)/P(z)`.
    pub fn laplace(&self, z: C64) -> C64 {
        let (o2, wd, g) = (self.omega * self.omega, self.omega_d, self.gamma);
        (wd + z) / (((z + wd) * z + (o2 + g * wd)) * z + wd * o2)
    }

    /// Largest real part among the roots.
    pub fn max_real_root(&self) -> f64 {
        self.roots.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
    }

    /// The two roots with the largest real part.
    fn slow_pair(&self) -> (C64, C64) {
        let mut r = self.roots;
        r.sort_by(|a, b| b.re.partial_cmp(&a.re).unwrap_or(std::cmp::Ordering::Equal));
        (r[0], r[1])
    }
}

fn check_baths(baths: &[BathSpec]) -> Result<f64, OracleError> {
    if baths.is_empty() {
        return Err(OracleError::UnsupportedBathCombination("no bath".into()));
    }
    let mut wd0 = None;
    for b in baths {
        let SpectralDensity::LorentzDrude { omega_d, .. } = b.spectral else {
            return Err(OracleError::UnsupportedBathCombination("oracle needs Lorentz-Drude baths".into()));
        };
        if b.normalization != Normalization::CaldeiraLeggett {
            return Err(OracleError::UnsupportedBathCombination("oracle needs Caldeira-Leggett normalization".into()));
        }
        match wd0 {
            None => wd0 = Some(omega_d),
            Some(w) if (w - omega_d).abs() > 1e-12 * w => {
                return Err(OracleError::UnsupportedBathCombination(format!("differing cutoffs {w} and {omega_d}")));
            }
            _ => {}
        }
    }
    Ok(wd0.unwrap_or(1.0))
}

/// Green function for one or more Drude baths sharing a cutoff.
pub fn green_function(omega: f64, baths: &[BathSpec]) -> Result<GreenFunction, OracleError> {
    let wd = check_baths(baths)?;
    let gamma = baths.iter().map(|b| b.spectral.strength()).sum();
    GreenFunction::new(omega, wd, gamma)
}

/// `Re C(tau) = sum_k c_k exp(-nu_k tau)` for `tau > 0`, summed over baths.
#[derive(Debug, Clone)]
pub struct CorrelatorPoles {
    /// Drude poles, one per bath.
    pub drude: Vec<(f64, f64)>,
    /// Matsubara poles `(c_k, nu_k)` with `k = 1..=terms`, per bath.
    pub matsubara: Vec<Vec<(f64, f64)>>,
}

pub const DEFAULT_MATSUBARA_TERMS: usize = 20000;

impl CorrelatorPoles {
    pub fn new(baths: &[BathSpec], terms: usize) -> Result<Self, OracleError> {
        check_baths(baths)?;
        let mut drude = Vec::new();
        let mut matsubara = Vec::new();
        for b in baths {
            let SpectralDensity::LorentzDrude { gamma, omega_d } = b.spectral else { unreachable!() };
            let nf = b.normalization.factor();
            let beta = b.beta();
            let x = 0.5 * beta * omega_d;
            let c0 = nf * gamma * omega_d * omega_d * 0.5 * PI / x.tan();
            drude.push((c0, omega_d));
            let mut m = Vec::with_capacity(terms);
            for k in 1..=terms {
                let nu = 2.0 * PI * k as f64 / beta;
                let ck = 2.0 * PI * nf * gamma * omega_d * omega_d * nu / (beta * (nu * nu - omega_d * omega_d));
                m.push((ck, nu));
            }
            matsubara.push(m);
        }
        Ok(CorrelatorPoles { drude, matsubara })
    }

    /// `Re C(tau)` for `tau > 0` (sum of all poles, tail not included).
    pub fn re_correlator(&self, tau: f64) -> f64 {
        let mut s = 0.0;
        for (d, m) in self.drude.iter().zip(&self.matsubara) {
            s += d.0 * (-d.1 * tau).exp();
            s += m.iter().map(|(ck, nu)| ck * (-nu * tau).exp()).sum::<f64>();
        }
        s
    }
}

/// Kernel values at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelValues {
    pub t: f64,
    pub kq: f64,
    pub kq_dot: f64,
    pub kq_ddot: f64,
    pub kp: f64,
    pub kp_dot: f64,
}

/// Pole data of one bath with the time-independent sums already taken.
#[derive(Debug, Clone)]
struct PoleTable {
    /// `(c_k, nu_k)`, Drude pole first.
    poles: Vec<(f64, f64)>,
    /// Matsubara ratio `exp(-nu_1 t)` is `exp(-step t)`.
    step: f64,
    /// `sum_i r_i/(z_i + nu)` and `sum_i r_i z_i/(z_i + nu)`
    pr: Vec<C64>,
    prz: Vec<C64>,
    /// `1/(z_j - nu)`
    injn: Vec<[C64; 3]>,
    /// `sum_k c_k/(z_i + nu_k)`
    s1: [C64; 3],
    /// `sum_k c_k P_k Q_k` for both weights
    sk_r: C64,
    sk_rz: C64,
}

/// Tail `sum_{k > K}` of a series from its last two terms, assuming a power law.
fn power_tail(prev: C64, last: C64, kk: f64) -> C64 {
    let (a, b) = (prev.norm(), last.norm());
    if b == 0.0 || a <= b {
        return C64::new(0.0, 0.0);
    }
    let p = (a / b).ln() / (kk / (kk - 1.0)).ln();
    if p <= 1.05 {
        return C64::new(0.0, 0.0);
    }
    last * kk.powf(p) * (kk + 0.5).powf(1.0 - p) / (p - 1.0)
}

impl PoleTable {
    fn new(g: &GreenFunction, drude: (f64, f64), matsubara: &[(f64, f64)]) -> Self {
        let (z, r) = (&g.roots, &g.residues);
        let mut poles = vec![drude];
        poles.extend_from_slice(matsubara);
        let step = matsubara.first().map(|p| p.1).unwrap_or(0.0);
        let n = poles.len();
        let mut pr = Vec::with_capacity(n);
        let mut prz = Vec::with_capacity(n);
        let mut injn = Vec::with_capacity(n);
        let zero = C64::new(0.0, 0.0);
        let mut s1 = [zero; 3];
        let (mut sk_r, mut sk_rz) = (zero, zero);
        let mut last_s1 = [[zero; 3]; 2];
        let mut last_sk = [[zero; 2]; 2];
        for (k, &(ck, nu)) in poles.iter().enumerate() {
            let inv: [C64; 3] = [1.0 / (z[0] + nu), 1.0 / (z[1] + nu), 1.0 / (z[2] + nu)];
            let jn: [C64; 3] = [1.0 / (z[0] - nu), 1.0 / (z[1] - nu), 1.0 / (z[2] - nu)];
            let p_r: C64 = (0..3).map(|i| r[i] * inv[i]).sum();
            let p_rz: C64 = (0..3).map(|i| r[i] * z[i] * inv[i]).sum();
            let q_r: C64 = (0..3).map(|j| r[j] * jn[j]).sum();
            let q_rz: C64 = (0..3).map(|j| r[j] * z[j] * jn[j]).sum();
            let t1 = [ck * inv[0], ck * inv[1], ck * inv[2]];
            let tk = [ck * p_r * q_r, ck * p_rz * q_rz];
            for i in 0..3 {
                s1[i] += t1[i];
            }
            sk_r += tk[0];
            sk_rz += tk[1];
            if k >= 1 {
                last_s1 = [last_s1[1], t1];
                last_sk = [last_sk[1], tk];
            }
            pr.push(p_r);
            prz.push(p_rz);
            injn.push(jn);
        }
        let kk = matsubara.len() as f64;
        if kk >= 2.0 {
            for i in 0..3 {
                s1[i] += power_tail(last_s1[0][i], last_s1[1][i], kk);
            }
            sk_r += power_tail(last_sk[0][0], last_sk[1][0], kk);
            sk_rz += power_tail(last_sk[0][1], last_sk[1][1], kk);
        }
        PoleTable { poles, step, pr, prz, injn, s1, sk_r, sk_rz }
    }
}

/// Closed-form kernel evaluator.
#[derive(Debug, Clone)]
pub struct KernelEvaluator {
    pub green: GreenFunction,
    pub poles: CorrelatorPoles,
    tables: Vec<PoleTable>,
}

/// `(exp(x t) - 1)/x`
fn expm1_over(x: C64, t: f64) -> C64 {
    let xt = x * t;
    if xt.norm() < 1e-4 {
        t * (1.0 + xt / 2.0 + xt * xt / 6.0 + xt * xt * xt / 24.0)
    } else {
        ((xt).exp() - 1.0) / x
    }
}

impl KernelEvaluator {
    pub fn new(omega: f64, baths: &[BathSpec], terms: usize) -> Result<Self, OracleError> {
        Self::with_green(green_function(omega, baths)?, baths, terms)
    }

    /// Kernels of `baths` propagated with an externally supplied Green function.
    pub fn with_green(green: GreenFunction, baths: &[BathSpec], terms: usize) -> Result<Self, OracleError> {
        let poles = CorrelatorPoles::new(baths, terms)?;
        let tables = poles.drude.iter().zip(&poles.matsubara).map(|(d, m)| PoleTable::new(&green, *d, m)).collect();
        Ok(KernelEvaluator { green, poles, tables })
    }

    /// Kernels at `t` (use `f64::INFINITY` for the asymptotic limit).
    pub fn at(&self, t: f64) -> KernelValues {
        if t == 0.0 {
            return KernelValues { t, kq: 0.0, kq_dot: 0.0, kq_ddot: 0.0, kp: 0.0, kp_dot: 0.0 };
        }
        let g = &self.green;
        let (z, r) = (&g.roots, &g.residues);
        let fin = t.is_finite();
        let zero = C64::new(0.0, 0.0);
        let ez: [C64; 3] = if fin { [(z[0] * t).exp(), (z[1] * t).exp(), (z[2] * t).exp()] } else { [zero; 3] };
        // X_i = 2 w_i sum_j w_j int_0^t exp((z_i + z_j) s) ds
        let mut x_r = [zero; 3];
        let mut x_rz = [zero; 3];
        for i in 0..3 {
            for j in 0..3 {
                let e = if fin { expm1_over(z[i] + z[j], t) } else { -1.0 / (z[i] + z[j]) };
                x_r[i] += 2.0 * r[i] * r[j] * e;
                x_rz[i] += 2.0 * r[i] * z[i] * r[j] * z[j] * e;
            }
        }
        let (mut a, mut b, mut kq, mut kp) = (zero, zero, zero, zero);
        for tab in &self.tables {
            for i in 0..3 {
                a += r[i] * ez[i] * tab.s1[i];
                b += r[i] * z[i] * ez[i] * tab.s1[i];
                kq += x_r[i] * tab.s1[i];
                kp += x_rz[i] * tab.s1[i];
            }
            kq += 2.0 * tab.sk_r;
            kp += 2.0 * tab.sk_rz;
            if !fin {
                continue;
            }
            let ratio = (-tab.step * t).exp();
            let mut e_k = 1.0;
            for (k, &(ck, nu)) in tab.poles.iter().enumerate() {
                e_k = if k == 0 { (-nu * t).exp() } else if k == 1 { ratio } else { e_k * ratio };
                if k >= 1 && e_k < 1e-22 {
                    break;
                }
                let w = ck * e_k;
                let jn = &tab.injn[k];
                let rr: C64 = (0..3).map(|j| r[j] * jn[j] * ez[j]).sum();
                let rrz: C64 = (0..3).map(|j| r[j] * z[j] * jn[j] * ez[j]).sum();
                a -= w * tab.pr[k];
                b -= w * tab.prz[k];
                kq -= 2.0 * w * tab.pr[k] * rr;
                kp -= 2.0 * w * tab.prz[k] * rrz;
            }
        }
        let (a, b, kq, kp) = (a.re, b.re, kq.re, kp.re);
        if !fin {
            return KernelValues { t, kq, kq_dot: 0.0, kq_ddot: 0.0, kp, kp_dot: 0.0 };
        }
        let [g0, g1, _, _] = g.derivatives(t);
        KernelValues { t, kq, kq_dot: 2.0 * g0 * a, kq_ddot: 2.0 * g1 * a + 2.0 * g0 * b, kp, kp_dot: 2.0 * g1 * b }
    }
}

#[derive(Debug, Clone)]
pub struct InfluenceKernels {
    pub values: Vec<KernelValues>,
}

/// Kernels on a uniform grid, cross-checked against centered differences.
pub fn influence_kernels(eval: &KernelEvaluator, t_grid: &[f64]) -> Result<InfluenceKernels, OracleError> {
    let values: Vec<KernelValues> = t_grid.iter().map(|&t| eval.at(t)).collect();
    for i in 1..values.len().saturating_sub(1) {
        let h = values[i + 1].t - values[i - 1].t;
        let fd = (values[i + 1].kq - values[i - 1].kq) / h;
        let an = values[i].kq_dot;
        let scale = values.iter().map(|v| v.kq_dot.abs()).fold(0.0, f64::max).max(1e-300);
        let rel = (fd - an).abs() / scale;
        if rel > 1e-3 {
            return Err(OracleError::GridTooCoarse { t: values[i].t, rel });
        }
    }
    Ok(InfluenceKernels { values })
}

/// Exact coefficients at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactCoefficients {
    pub t: f64,
    pub gamma_q: f64,
    pub gamma_p: f64,
    pub d_q: f64,
    pub d_p: f64,
}

pub const EPS_SING: f64 = 1e-12;

pub fn exact_coefficients(green: &GreenFunction, k: &KernelValues) -> Result<ExactCoefficients, OracleError> {
    let t = k.t;
    let (gamma_q, gamma_p) = if t.is_finite() {
        let [g0, g1, g2, g3] = green.derivatives(t);
        let den = g1 * g1 - g0 * g2;
        let scale = g1 * g1 + (g0 * g2).abs();
        if den.abs() < EPS_SING * scale.max(1e-300) || scale == 0.0 {
            return Err(OracleError::CoefficientSingularity(t));
        }
        ((g2 * g2 - g1 * g3) / den, (g0 * g3 - g1 * g2) / den)
    } else {
        let (za, zb) = green.slow_pair();
        ((za * zb).re, -(za + zb).re)
    };
    let d_q = 0.5 * k.kq_ddot - k.kp + gamma_q * k.kq + 0.5 * gamma_p * k.kq_dot;
    let d_p = 0.5 * k.kp_dot + 0.5 * gamma_q * k.kq_dot + gamma_p * k.kp;
    Ok(ExactCoefficients { t, gamma_q, gamma_p, d_q, d_p })
}

/// `-i[p^2/2 + gq q^2/2, rho] - Dp[q,[q,rho]] - (i/2) gp [q,{p,rho}] + Dq [q,[p,rho]]`
pub fn exact_generator_apply(k: &ExactCoefficients, rho: &CMat, q: &CMat, p: &CMat) -> CMat {
    let h = (p.dot(p) + q.dot(q).mapv(|z| z * k.gamma_q)).mapv(|z| z * 0.5);
    exact_apply_with(k, &h, rho, q, p)
}

fn exact_apply_with(k: &ExactCoefficients, h: &CMat, rho: &CMat, q: &CMat, p: &CMat) -> CMat {
    let mut out = commutator(h, rho).mapv(|z| -I * z);
    out = out - commutator(q, &commutator(q, rho)).mapv(|z| z * k.d_p);
    out = out - commutator(q, &anticommutator(p, rho)).mapv(|z| z * (0.5 * k.gamma_p) * I);
    out + commutator(q, &commutator(p, rho)).mapv(|z| z * k.d_q)
}

/// Exact generator in the truncated Fock basis (which is the eigenbasis of `H_S`).
pub struct ExactHo {
    pub eval: KernelEvaluator,
    pub lad: Ladder,
    energies: Array1<f64>,
    p2: CMat,
    q2: CMat,
    last: Mutex<Option<ExactCoefficients>>,
    /// Set when the coefficients are frozen at their asymptotic values.
    frozen: Option<ExactCoefficients>,
    pub singular_times: Mutex<Vec<f64>>,
}

impl ExactHo {
    pub fn new(omega: f64, levels: usize, baths: &[BathSpec]) -> Result<Self, OracleError> {
        let eval = KernelEvaluator::new(omega, baths, DEFAULT_MATSUBARA_TERMS)?;
        let lad = ladder(omega, levels);
        let energies = Array1::from_iter((0..levels).map(|k| (k as f64 + 0.5) * omega));
        let p2 = lad.p.dot(&lad.p);
        let q2 = lad.q.dot(&lad.q);
        Ok(ExactHo { eval, lad, energies, p2, q2, last: Mutex::new(None), frozen: None, singular_times: Mutex::new(Vec::new()) })
    }

    /// `Infinite` freezes `gamma_q, gamma_p, D_q, D_p` at their `t -> inf` limits
    /// (the Markovian benchmark); `Running` keeps the full time dependence.
    pub fn with_horizon(mut self, horizon: Horizon) -> Result<Self, OracleError> {
        self.frozen = match horizon {
            Horizon::Infinite => Some(self.coefficients(f64::INFINITY)?),
            Horizon::Running => None,
        };
        Ok(self)
    }

    pub fn coefficients(&self, t: f64) -> Result<ExactCoefficients, OracleError> {
        exact_coefficients(&self.eval.green, &self.eval.at(t))
    }

    /// Gaussian steady state with `<q^2> = Kq(inf)`, `<p^2> = Kp(inf)`.
    pub fn steady_state(&self) -> Result<CMat, OracleError> {
        let k = self.eval.at(f64::INFINITY);
        gaussian_state(self.eval.green.omega, k.kq, k.kp, self.energies.len())
    }
}

/// Zero-mean Gaussian state with the given second moments and no `qp` correlation,
/// expressed in the Fock basis of frequency `omega` truncated to `n` levels.
pub fn gaussian_state(omega: f64, q2: f64, p2: f64, n: usize) -> Result<CMat, OracleError> {
    let nu = (q2 * p2).sqrt();
    if !(nu > 0.5) {
        return Err(OracleError::InvalidParameter(format!("moments violate uncertainty: sqrt(q2 p2) = {nu}")));
    }
    let w_eff = (p2 / q2).sqrt();
    // coth(b w / 2) = 2 nu
    let bw = 2.0 * (1.0 / (2.0 * nu)).atanh();
    let big = n + 60;
    let lad = ladder(omega, big);
    let h = (lad.p.dot(&lad.p) + lad.q.dot(&lad.q).mapv(|z| z * w_eff * w_eff)).mapv(|z| z * 0.5);
    let eig = diagonalize(&h, 1e-12)?;
    let e0 = eig.energies[0];
    let w = eig.energies.mapv(|e| (-(bw / w_eff) * (e - e0)).exp());
    let v = &eig.basis;
    let mut rho = CMat::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            let mut s = c(0.0, 0.0);
            for k in 0..big {
                s += v[[i, k]] * w[k] * v[[j, k]].conj();
            }
            rho[[i, j]] = s;
        }
    }
    Ok(normalize_density(&rho))
}

impl GeneratorAction for ExactHo {
    fn dim(&self) -> usize {
        self.energies.len()
    }
    fn energies(&self) -> &Array1<f64> {
        &self.energies
    }
    fn time_dependent(&self) -> bool {
        self.frozen.is_none()
    }
    fn name(&self) -> &str {
        "exact_ho"
    }
    fn dissipative(&self, rho: &CMat, t: f64) -> CMat {
        let k = match self.frozen.map_or_else(|| self.coefficients(t), Ok) {
            Ok(k) => {
                *self.last.lock().expect("lock") = Some(k);
                k
            }
            Err(_) => {
                self.singular_times.lock().expect("lock").push(t);
                match *self.last.lock().expect("lock") {
                    Some(k) => k,
                    None => return CMat::from_elem(rho.dim(), c(f64::NAN, f64::NAN)),
                }
            }
        };
        let n = self.energies.len();
        let mut h = (&self.p2 + &self.q2.mapv(|z| z * k.gamma_q)).mapv(|z| z * 0.5);
        for i in 0..n {
            h[[i, i]] -= self.energies[i];
        }
        exact_apply_with(&k, &h, rho, &self.lad.q, &self.lad.p)
    }
}

/// Green function from the memory-kernel equation `G'' + int kappa G' + W^2 G = 0`,
/// written as `G'' + y + W^2 G = 0`, `y' = g wD G' - wD y` and integrated by RK4.
pub fn memory_kernel_green(omega: f64, wd: f64, gamma: f64, t_end: f64, h: f64) -> Vec<(f64, f64)> {
    let f = |s: [f64; 3]| [s[1], -s[2] - omega * omega * s[0], gamma * wd * s[1] - wd * s[2]];
    let mut s = [0.0, 1.0, 0.0];
    let mut out = vec![(0.0, 0.0)];
    let n = (t_end / h).round() as usize;
    for i in 0..n {
        let k1 = f(s);
        let k2 = f([s[0] + 0.5 * h * k1[0], s[1] + 0.5 * h * k1[1], s[2] + 0.5 * h * k1[2]]);
        let k3 = f([s[0] + 0.5 * h * k2[0], s[1] + 0.5 * h * k2[1], s[2] + 0.5 * h * k2[2]]);
        let k4 = f([s[0] + h * k3[0], s[1] + h * k3[1], s[2] + h * k3[2]]);
        for q in 0..3 {
            s[q] += h / 6.0 * (k1[q] + 2.0 * k2[q] + 2.0 * k3[q] + k4[q]);
        }
        out.push(((i + 1) as f64 * h, s[0]));
    }
    out
}
