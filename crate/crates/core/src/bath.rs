//! Spectral densities, thermal correlation functions and their half-sided
//! Fourier transforms.
//!
//! Conventions. With the odd extension `J(-w) = -J(w)` the bath spectrum is
//! `g(w) = N J(w) / (1 - exp(-beta w))` and
//!
//! * `C(t) = int_R g(w) exp(-i w t) dw`
//! * `W(E) = int_0^inf C(t) exp(-i E t) dt`, so `W'(E) = pi g(-E)` and
//!   `W''(E) = -PV int_R g(w) / (w + E) dw`
//! * `V(E) = dW/dE`.
//!
//! `N` is the [`Normalization`]: `1/pi` for the Caldeira-Leggett oscillator
//! (so that the damping kernel Laplace transform is `gamma w_D / (z + w_D)`),
//! `1` when `J(w) = sum_k g_k^2 delta(w - w_k)`.

use std::collections::HashMap;
use std::f64::consts::PI;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{c, CMat, C64};
use crate::quad::{integrate_fourier, integrate_points, integrate_to_inf, QuadError, QuadTol, Trig};

#[derive(Debug, Error, Clone)]
pub enum BathError {
    #[error("invalid bath parameter: {0}")]
    InvalidParameter(String),
    #[error("spectral density evaluated at negative frequency {0}")]
    NegativeFrequency(f64),
    #[error("imaginary time u = {u} outside [0, beta = {beta}]")]
    OutOfDomain { u: f64, beta: f64 },
    #[error("quadrature failure in {what}: {source}")]
    Quadrature {
        what: String,
        #[source]
        source: QuadError,
    },
}

fn quad_err(what: impl Into<String>) -> impl FnOnce(QuadError) -> BathError {
    let what = what.into();
    move |source| BathError::Quadrature { what, source }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum SpectralDensity {
    /// `J(w) = gamma w / (1 + w^2 / w_D^2)`
    LorentzDrude { gamma: f64, omega_d: f64 },
    /// `J(w) = lambda (w / w_c) exp(-w^2 / w_c^2)`; printed as "exponential cutoff"
    OhmicExp { lambda: f64, omega_c: f64 },
}

impl SpectralDensity {
    pub fn validate(&self) -> Result<(), BathError> {
        let ok = match *self {
            SpectralDensity::LorentzDrude { gamma, omega_d } => gamma > 0.0 && omega_d > 0.0,
            SpectralDensity::OhmicExp { lambda, omega_c } => lambda > 0.0 && omega_c > 0.0,
        };
        if ok && self.params().iter().all(|x| x.is_finite()) {
            Ok(())
        } else {
            Err(BathError::InvalidParameter(format!("{self:?}: strengths and cutoffs must be positive")))
        }
    }

    fn params(&self) -> [f64; 2] {
        match *self {
            SpectralDensity::LorentzDrude { gamma, omega_d } => [gamma, omega_d],
            SpectralDensity::OhmicExp { lambda, omega_c } => [lambda, omega_c],
        }
    }

    pub fn cutoff(&self) -> f64 {
        self.params()[1]
    }

    pub fn strength(&self) -> f64 {
        self.params()[0]
    }

    pub fn with_strength(&self, s: f64) -> Self {
        match *self {
            SpectralDensity::LorentzDrude { omega_d, .. } => SpectralDensity::LorentzDrude { gamma: s, omega_d },
            SpectralDensity::OhmicExp { omega_c, .. } => SpectralDensity::OhmicExp { lambda: s, omega_c },
        }
    }

    /// `J(w)` for `w >= 0`.
    pub fn eval_j(&self, w: f64) -> Result<f64, BathError> {
        if w < 0.0 {
            return Err(BathError::NegativeFrequency(w));
        }
        Ok(w * self.j_over_w(w))
    }

    /// `J(w)/w`, an even smooth function.
    pub fn j_over_w(&self, w: f64) -> f64 {
        match *self {
            SpectralDensity::LorentzDrude { gamma, omega_d } => {
                let x = w / omega_d;
                gamma / (1.0 + x * x)
            }
            SpectralDensity::OhmicExp { lambda, omega_c } => {
                let x = w / omega_c;
                lambda / omega_c * (-x * x).exp()
            }
        }
    }

    /// Derivative of `J(w)/w`.
    pub fn j_over_w_deriv(&self, w: f64) -> f64 {
        match *self {
            SpectralDensity::LorentzDrude { gamma, omega_d } => {
                let x = w / omega_d;
                let d = 1.0 + x * x;
                -2.0 * gamma * w / (omega_d * omega_d * d * d)
            }
            SpectralDensity::OhmicExp { omega_c, .. } => -2.0 * w / (omega_c * omega_c) * self.j_over_w(w),
        }
    }

    /// `int_0^inf J(w)/w dw`.
    pub fn reorganization_integral(&self) -> f64 {
        match *self {
            SpectralDensity::LorentzDrude { gamma, omega_d } => gamma * omega_d * PI / 2.0,
            SpectralDensity::OhmicExp { lambda, .. } => lambda * PI.sqrt() / 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// `C(t) = (1/pi) int J [coth cos - i sin]`
    #[default]
    CaldeiraLeggett,
    /// `C(t) = int J [coth cos - i sin]`
    Coupling,
}

impl Normalization {
    pub fn factor(&self) -> f64 {
        match self {
            Normalization::CaldeiraLeggett => 1.0 / PI,
            Normalization::Coupling => 1.0,
        }
    }
}

/// `x / (1 - exp(-x))`
pub fn phi(x: f64) -> f64 {
    if x.abs() < 1e-3 {
        let x2 = x * x;
        1.0 + 0.5 * x + x2 / 12.0 - x2 * x2 / 720.0
    } else {
        x / -(-x).exp_m1()
    }
}

/// Derivative of [`phi`].
pub fn phi_deriv(x: f64) -> f64 {
    if x.abs() < 1e-3 {
        0.5 + x / 6.0 - x * x * x / 180.0
    } else if x > 0.0 {
        let z = (-x).exp();
        let om = -(-x).exp_m1();
        (1.0 - z - x * z) / (om * om)
    } else {
        let y = x.exp();
        let ym = x.exp_m1();
        y * (ym - x) / (ym * ym)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BathSpec {
    pub spectral: SpectralDensity,
    pub temperature: f64,
    /// Caldeira-Leggett renormalization `mu S^2 / 2` active.
    pub counterterm: bool,
    pub normalization: Normalization,
    pub tol: QuadTol,
}

impl BathSpec {
    pub fn new(spectral: SpectralDensity, temperature: f64, counterterm: bool, normalization: Normalization) -> Result<Self, BathError> {
        spectral.validate()?;
        if !(temperature > 0.0 && temperature.is_finite()) {
            return Err(BathError::InvalidParameter(format!("temperature must be positive, got {temperature}")));
        }
        Ok(BathSpec { spectral, temperature, counterterm, normalization, tol: QuadTol::default() })
    }

    /// Caldeira-Leggett oscillator bath: Drude density, `1/pi` normalization, counter-term on.
    pub fn caldeira_leggett(gamma: f64, omega_d: f64, temperature: f64) -> Result<Self, BathError> {
        Self::new(SpectralDensity::LorentzDrude { gamma, omega_d }, temperature, true, Normalization::CaldeiraLeggett)
    }

    pub fn with_tol(mut self, tol: QuadTol) -> Self {
        self.tol = tol;
        self
    }

    pub fn beta(&self) -> f64 {
        1.0 / self.temperature
    }

    fn nf(&self) -> f64 {
        self.normalization.factor()
    }

    /// Bath spectrum `g(w) = N J(w) / (1 - exp(-beta w))` on the whole real line.
    pub fn g(&self, w: f64) -> f64 {
        let b = self.beta();
        self.nf() * self.spectral.j_over_w(w) * phi(b * w) / b
    }

    pub fn g_deriv(&self, w: f64) -> f64 {
        let b = self.beta();
        let s = &self.spectral;
        self.nf() * (s.j_over_w_deriv(w) * phi(b * w) / b + s.j_over_w(w) * phi_deriv(b * w))
    }

    /// Constant added to `W''` by the counter-term: `N int_0^inf J/w`.
    pub fn counterterm_shift(&self) -> f64 {
        if self.counterterm {
            self.nf() * self.spectral.reorganization_integral()
        } else {
            0.0
        }
    }

    /// Strength `mu` of the renormalization Hamiltonian `mu S^2 / 2`.
    pub fn counterterm_mu(&self) -> f64 {
        2.0 * self.nf() * self.spectral.reorganization_integral()
    }

    fn breakpoints(&self, e: f64) -> Vec<f64> {
        let wc = self.spectral.cutoff();
        let t = self.temperature;
        let ea = e.abs();
        let mut p = vec![0.0, 0.5 * t.min(wc), ea, ea + 2.0 * t, wc, ea + wc, ea + 4.0 * wc, ea + 20.0 * wc];
        p.retain(|x| x.is_finite());
        p.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        p.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + b.abs()));
        p
    }

    fn small_s(&self) -> f64 {
        1e-7 * self.spectral.cutoff().min(self.temperature)
    }

    /// `PV int_R f(w)/(w + E) dw` written as `int_0^inf [f(s-E) - f(-s-E)]/s ds`.
    fn pv_integral<F: Fn(f64) -> f64 + Sync>(&self, f: &F, e: f64, what: &str) -> Result<f64, BathError> {
        let s0 = self.small_s();
        let lim = (f(s0 - e) - f(-s0 - e)) / s0;
        let h = |s: f64| if s < s0 { lim } else { (f(s - e) - f(-s - e)) / s };
        let r = integrate_to_inf(&h, &self.breakpoints(e), &self.tol).map_err(quad_err(what))?;
        Ok(r.value)
    }

    /// Infinite-horizon `W(E)`, counter-term included when flagged.
    pub fn w(&self, e: f64) -> Result<C64, BathError> {
        let re = PI * self.g(-e);
        let im = -self.pv_integral(&|w| self.g(w), e, "W''")? + self.counterterm_shift();
        Ok(c(re, im))
    }

    /// Infinite-horizon `V(E) = dW/dE`.
    pub fn v(&self, e: f64) -> Result<C64, BathError> {
        let re = -PI * self.g_deriv(-e);
        let im = self.pv_integral(&|w| self.g_deriv(w), e, "V''")?;
        Ok(c(re, im))
    }

    /// Finite-horizon `W(E, t) = int_0^t C(tau) exp(-i E tau) dtau`.
    ///
    /// Evaluated in the frequency domain:
    /// `int_R g(w) [sin((w+E)t) - i(1 - cos((w+E)t))]/(w+E) dw`.
    pub fn w_finite(&self, e: f64, t: f64) -> Result<C64, BathError> {
        if t.is_infinite() {
            return self.w(e);
        }
        if t <= 0.0 {
            return Ok(c(0.0, if t == 0.0 { self.counterterm_shift() } else { f64::NAN }));
        }
        let pts = self.breakpoints(e);
        let s0 = self.small_s();
        let even = |s: f64| (self.g(s - e) + self.g(-s - e)) / s.max(1e-300);
        let re = integrate_fourier(&even, t, Trig::Sin, &pts, &self.tol).map_err(quad_err("Re W(E,t)"))?.value;
        let lim = (self.g(s0 - e) - self.g(-s0 - e)) / s0;
        let odd = |s: f64| if s < s0 { lim } else { (self.g(s - e) - self.g(-s - e)) / s };
        let cosine = integrate_fourier(&odd, t, Trig::Cos, &pts, &self.tol).map_err(quad_err("Im W(E,t)"))?.value;
        let w_inf_im = -self.pv_integral(&|w| self.g(w), e, "W''")?;
        Ok(c(re, w_inf_im + cosine + self.counterterm_shift()))
    }

    /// `C(t) = N int_0^inf J(w) [coth(beta w/2) cos(w t) - i sin(w t)] dw`.
    ///
    /// The Drude tail `J ~ 1/w` makes `Re C(0)` diverge logarithmically;
    /// it is returned as `+inf`.
    pub fn correlator(&self, t: f64) -> Result<C64, BathError> {
        if t < 0.0 {
            return self.correlator(-t).map(|z| z.conj());
        }
        if t == 0.0 {
            if let SpectralDensity::LorentzDrude { .. } = self.spectral {
                return Ok(c(f64::INFINITY, 0.0));
            }
        }
        let b = self.beta();
        let nf = self.nf();
        let s = self.spectral;
        // w coth(beta w / 2) = (2/beta) y coth y with y = beta w / 2
        let re_f = |w: f64| {
            let y = 0.5 * b * w;
            let ycoth = if y < 1e-4 { 1.0 + y * y / 3.0 } else { y / y.tanh() };
            nf * s.j_over_w(w) * 2.0 * ycoth / b
        };
        let im_f = |w: f64| nf * w * s.j_over_w(w);
        let pts = self.breakpoints(0.0);
        let re = integrate_fourier(&re_f, t, Trig::Cos, &pts, &self.tol).map_err(quad_err("Re C(t)"))?.value;
        let im = -integrate_fourier(&im_f, t, Trig::Sin, &pts, &self.tol).map_err(quad_err("Im C(t)"))?.value;
        Ok(c(re, im))
    }

    /// `C(-iu) = N int_0^inf J(w) [exp(-w u) + exp(-(beta-u) w)] / (1 - exp(-beta w)) dw`,
    /// without the counter-term delta.
    pub fn imag_time_correlator(&self, u: f64) -> Result<f64, BathError> {
        let b = self.beta();
        if !(0.0..=b).contains(&u) {
            return Err(BathError::OutOfDomain { u, beta: b });
        }
        let nf = self.nf();
        let s = self.spectral;
        let f = |w: f64| nf * s.j_over_w(w) * phi(b * w) / b * ((-w * u).exp() + (-(b - u) * w).exp());
        let r = integrate_to_inf(&f, &self.breakpoints(0.0), &self.tol).map_err(quad_err("C(-iu)"))?;
        Ok(r.value)
    }

    /// `-int_0^beta C(-iu) exp(-u E) du`, the left side of the imaginary-time identity.
    pub fn imag_time_transform(&self, e: f64) -> Result<f64, BathError> {
        let b = self.beta();
        let inner = |u: f64| match self.imag_time_correlator(u) {
            Ok(v) => v * (-u * e).exp(),
            Err(_) => f64::NAN,
        };
        let tol = QuadTol { abs: self.tol.abs * 1e2, rel: self.tol.rel * 1e2, max_intervals: self.tol.max_intervals };
        let r = integrate_points(&inner, &[0.0, 0.5 * b, b], &tol).map_err(quad_err("imaginary-time transform"))?;
        Ok(-r.value)
    }

    /// Drude closed form of `W` and `V` from the Matsubara expansion (verification only).
    pub fn matsubara_wv(&self, e: f64, terms: usize) -> Option<(C64, C64)> {
        let SpectralDensity::LorentzDrude { gamma, omega_d } = self.spectral else {
            return None;
        };
        let b = self.beta();
        let scale = PI * self.nf();
        let c0 = c(gamma * omega_d * omega_d / 2.0 / (b * omega_d / 2.0).tan(), -gamma * omega_d * omega_d / 2.0) * scale;
        let iz = c(0.0, e);
        let mut w = c0 / (omega_d + iz);
        let mut v = c(0.0, -1.0) * c0 / ((omega_d + iz) * (omega_d + iz));
        let a = 2.0 * gamma * omega_d * omega_d / b * scale;
        for k in (1..=terms).rev() {
            let nu = 2.0 * PI * k as f64 / b;
            let ck = a * nu / (nu * nu - omega_d * omega_d);
            let den = nu + iz;
            w += ck / den;
            v += c(0.0, -1.0) * ck / (den * den);
        }
        // remainder: c_k/(nu_k + iE) ~ a / nu_k^2
        let kk = terms as f64 + 0.5;
        w += a * (b / (2.0 * PI)).powi(2) / kk;
        Some((c(w.re, w.im + self.counterterm_shift()), v))
    }
}

/// `W` and `V` tabulated on the Bohr frequencies of a system.
#[derive(Debug, Clone)]
pub struct RateEntry {
    pub delta: f64,
    pub w: C64,
    pub v: C64,
}

#[derive(Debug, Clone)]
pub struct RateTable {
    pub entries: Vec<RateEntry>,
    /// `W(Delta_nm)` on the `(n, m)` grid (zero where not required).
    pub w: CMat,
    /// `V(Delta_nm)` on the `(n, m)` grid.
    pub v: CMat,
}

impl RateTable {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Tabulates `W` and `V` at every Bohr frequency in `bohr` flagged by `needed`.
///
/// Equal frequencies (bitwise) are evaluated once. `horizon = None` means
/// infinite horizon; a finite horizon only affects `W`.
pub fn build_rate_table(
    bath: &BathSpec,
    bohr: &Array2<f64>,
    needed: &Array2<bool>,
    horizon: Option<f64>,
) -> Result<RateTable, BathError> {
    let mut keys: Vec<u64> = Vec::new();
    let mut seen: HashMap<u64, usize> = HashMap::new();
    for ((i, j), &d) in bohr.indexed_iter() {
        if needed[[i, j]] {
            let k = d.to_bits();
            if let std::collections::hash_map::Entry::Vacant(e) = seen.entry(k) {
                e.insert(keys.len());
                keys.push(k);
            }
        }
    }
    let entries: Result<Vec<RateEntry>, BathError> = keys
        .par_iter()
        .map(|&k| {
            let d = f64::from_bits(k);
            let w = match horizon {
                None => bath.w(d)?,
                Some(t) => bath.w_finite(d, t)?,
            };
            let v = bath.v(d)?;
            Ok(RateEntry { delta: d, w, v })
        })
        .collect();
    let entries = entries?;
    let dim = bohr.nrows();
    let mut w = CMat::zeros((dim, dim));
    let mut v = CMat::zeros((dim, dim));
    for ((i, j), &d) in bohr.indexed_iter() {
        if needed[[i, j]] {
            let e = &entries[seen[&d.to_bits()]];
            w[[i, j]] = e.w;
            v[[i, j]] = e.v;
        }
    }
    Ok(RateTable { entries, w, v })
}
