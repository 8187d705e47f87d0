//! Adaptive Gauss-Kronrod quadrature (21-point rule) with semi-infinite
//! tails and an oscillatory tail driver accelerated by Wynn's epsilon table.
//!
//! Everything is deterministic: intervals are bisected in a fixed order and
//! no work is shared between threads.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QuadTol {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for QuadTol {
    fn default() -> Self {
        QuadTol { abs: 1e-13, rel: 1e-11, max_intervals: 4000 }
    }
}

impl QuadTol {
    pub fn new(abs: f64, rel: f64) -> Self {
        QuadTol { abs, rel, ..Default::default() }
    }
}

#[derive(Debug, Error, Clone)]
pub enum QuadError {
    #[error("quadrature did not converge: value {value:.6e}, error estimate {error:.3e}")]
    NoConvergence { value: f64, error: f64 },
    #[error("integrand returned a non-finite value at x = {x}")]
    NonFinite { x: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
}

const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
];

const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077208703846230,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];

const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

/// One 21-point Kronrod panel with the QUADPACK error heuristic.
fn qk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<(f64, f64, f64), QuadError> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    if !fc.is_finite() {
        return Err(QuadError::NonFinite { x: center });
    }
    let mut resk = fc * WGK[10];
    let mut resg = 0.0;
    let mut resabs = resk.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        if !f1.is_finite() {
            return Err(QuadError::NonFinite { x: center - dx });
        }
        if !f2.is_finite() {
            return Err(QuadError::NonFinite { x: center + dx });
        }
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = resk * 0.5;
    let mut resasc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        resasc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let result = resk * half;
    let resabs = resabs * half.abs();
    let resasc = resasc * half.abs();
    let mut err = ((resk - resg) * half).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    let eps = f64::EPSILON;
    if resabs > f64::MIN_POSITIVE / (50.0 * eps) {
        err = err.max(50.0 * eps * resabs);
    }
    Ok((result, err, resabs))
}

const ROUNDOFF_STALLS: usize = 20;
const ROUNDOFF_SLACK: f64 = 1e3;

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    abs: f64,
}

/// Globally adaptive integration over consecutive segments `points[k]..points[k+1]`.
pub fn integrate_points<F: Fn(f64) -> f64>(
    f: &F,
    points: &[f64],
    tol: &QuadTol,
) -> Result<QuadResult, QuadError> {
    let mut panels: Vec<Panel> = Vec::new();
    for w in points.windows(2) {
        if w[1] == w[0] {
            continue;
        }
        let (v, e, m) = qk21(f, w[0], w[1])?;
        panels.push(Panel { a: w[0], b: w[1], value: v, error: e, abs: m });
    }
    if panels.is_empty() {
        return Ok(QuadResult { value: 0.0, error: 0.0 });
    }
    // bisections that failed to reduce the error: the integrand is noisy
    let mut stalled = 0usize;
    loop {
        let total: f64 = panels.iter().map(|p| p.value).sum();
        let err: f64 = panels.iter().map(|p| p.error).sum();
        // cancelling integrands cannot beat the rounding floor of int |f|
        let floor = 100.0 * f64::EPSILON * panels.iter().map(|p| p.abs).sum::<f64>();
        let target = tol.abs.max(tol.rel * total.abs()).max(floor);
        if err <= target {
            return Ok(QuadResult { value: total, error: err });
        }
        if stalled >= ROUNDOFF_STALLS && err <= ROUNDOFF_SLACK * target {
            return Ok(QuadResult { value: total, error: err });
        }
        if panels.len() >= tol.max_intervals {
            return Err(QuadError::NoConvergence { value: total, error: err });
        }
        let (idx, _) = panels
            .iter()
            .enumerate()
            .fold((0, -1.0), |(bi, be), (i, p)| if p.error > be { (i, p.error) } else { (bi, be) });
        let p = panels.swap_remove(idx);
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b {
            // interval exhausted at machine precision; accept what we have
            let total: f64 = panels.iter().map(|q| q.value).sum::<f64>() + p.value;
            let err: f64 = panels.iter().map(|q| q.error).sum::<f64>() + p.error;
            return Err(QuadError::NoConvergence { value: total, error: err });
        }
        let (v1, e1, m1) = qk21(f, p.a, mid)?;
        let (v2, e2, m2) = qk21(f, mid, p.b)?;
        if e1 + e2 >= 0.99 * p.error && (v1 + v2 - p.value).abs() <= 1e-5 * (v1 + v2).abs() {
            stalled += 1;
        }
        panels.push(Panel { a: p.a, b: mid, value: v1, error: e1, abs: m1 });
        panels.push(Panel { a: mid, b: p.b, value: v2, error: e2, abs: m2 });
    }
}

pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: &QuadTol) -> Result<QuadResult, QuadError> {
    integrate_points(f, &[a, b], tol)
}

/// `int_{points[0]}^inf f`. Finite segments between the points, then the tail
/// `[last, inf)` mapped onto `[0, 1)` through `x = last + s / (1 - s)`.
pub fn integrate_to_inf<F: Fn(f64) -> f64>(
    f: &F,
    points: &[f64],
    tol: &QuadTol,
) -> Result<QuadResult, QuadError> {
    let last = *points.last().expect("at least one point");
    let n = points.len() - 1;
    // finite segments live on [0, n); the tail lives on [n, n + 1)
    let g = |u: f64| -> f64 {
        if u < n as f64 {
            let k = (u.floor() as usize).min(n - 1);
            let (a, b) = (points[k], points[k + 1]);
            let s = u - k as f64;
            (b - a) * f(a + s * (b - a))
        } else {
            let s = u - n as f64;
            let om = 1.0 - s;
            if om <= 0.0 {
                return 0.0;
            }
            f(last + s / om) / (om * om)
        }
    };
    let virt: Vec<f64> = (0..=n + 1).map(|k| k as f64).collect();
    integrate_points(&g, &virt, tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trig {
    Sin,
    Cos,
}

/// `int_a^inf f(x) trig(w x) dx` for slowly decaying `f`.
///
/// The range is integrated over `[a, start]` and then in half periods of the
/// oscillation; the partial sums are extrapolated with Wynn's epsilon
/// algorithm. `start` should sit beyond the structure of `f`.
pub fn integrate_fourier<F: Fn(f64) -> f64>(
    f: &F,
    w: f64,
    trig: Trig,
    points: &[f64],
    tol: &QuadTol,
) -> Result<QuadResult, QuadError> {
    let osc = |x: f64| match trig {
        Trig::Sin => (w * x).sin(),
        Trig::Cos => (w * x).cos(),
    };
    let h = |x: f64| f(x) * osc(x);
    if w == 0.0 {
        return match trig {
            Trig::Sin => Ok(QuadResult { value: 0.0, error: 0.0 }),
            Trig::Cos => integrate_to_inf(&f, points, tol),
        };
    }
    let w = w.abs();
    let head = integrate_points(&h, points, tol)?;
    let start = *points.last().expect("points");
    let half = std::f64::consts::PI / w;
    // align chunk boundaries with zeros of the oscillation
    let phase0 = match trig {
        Trig::Sin => 0.0,
        Trig::Cos => 0.5,
    };
    let k0 = (start / half - phase0).ceil();
    let mut edge = ((k0 + phase0) * half).max(start);
    let mut sum = head.value;
    let mut err = head.error;
    if edge > start {
        let r = integrate(&h, start, edge, tol)?;
        sum += r.value;
        err += r.error;
    }
    let chunk_tol = QuadTol { abs: tol.abs * 0.1, rel: tol.rel * 0.1, max_intervals: tol.max_intervals };
    let mut partial = vec![sum];
    let mut last_est = f64::NAN;
    let mut stable = 0;
    for k in 0..2000 {
        let r = integrate(&h, edge, edge + half, &chunk_tol)?;
        edge += half;
        sum += r.value;
        err += r.error;
        partial.push(sum);
        if r.value.abs() <= tol.abs * 1e-3 && k > 3 {
            return Ok(QuadResult { value: sum, error: err });
        }
        let tail = if partial.len() > 40 { &partial[partial.len() - 40..] } else { &partial[..] };
        let est = wynn_epsilon(tail);
        if partial.len() >= 8 {
            let d = (est - last_est).abs();
            if d <= tol.abs.max(tol.rel * est.abs()) {
                stable += 1;
                if stable >= 2 {
                    return Ok(QuadResult { value: est, error: err + d });
                }
            } else {
                stable = 0;
            }
        }
        last_est = est;
    }
    Err(QuadError::NoConvergence { value: last_est, error: err })
}

/// Wynn's epsilon extrapolation of a sequence of partial sums.
pub fn wynn_epsilon(s: &[f64]) -> f64 {
    let n = s.len();
    if n < 3 {
        return s[n - 1];
    }
    let mut prev: Vec<f64> = vec![0.0; n + 1];
    let mut cur: Vec<f64> = s.to_vec();
    let mut best = s[n - 1];
    let mut k = 0usize;
    while cur.len() > 1 {
        let mut next = Vec::with_capacity(cur.len() - 1);
        for i in 0..cur.len() - 1 {
            let d = cur[i + 1] - cur[i];
            if d == 0.0 || !d.is_finite() {
                return if k % 2 == 0 { cur[i + 1] } else { best };
            }
            next.push(prev[i + 1] + 1.0 / d);
        }
        k += 1;
        if k % 2 == 0 {
            let v = *next.last().expect("nonempty");
            if v.is_finite() {
                best = v;
            }
        }
        prev = cur;
        cur = next;
    }
    best
}
