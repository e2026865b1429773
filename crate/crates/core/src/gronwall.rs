//! Numerical checkers for Gronwall-type integral inequalities on sampled,
//! nonincreasing functions.
//!
//! Integrals `int_t^inf f^r` are exact for power laws in `1 + t`: between
//! samples `f` is interpolated log-log in `1 + t`, and beyond the last sample
//! an analytic tail is appended.

use serde::Serialize;

use crate::error::{invalid, Result, WaveError};
use crate::weights::TimeWeight;

/// Behaviour of `f` after the last sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum TailModel {
    /// `f(t) = f_N ((1+t)/(1+t_N))^{-k}`.
    PowerLaw(f64),
    /// `f(t) = f_N exp(-rate (t - t_N))`.
    Exponential(f64),
    /// `f = 0` after `t_N`.
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampledDecayFn {
    pub t: Vec<f64>,
    pub f: Vec<f64>,
    pub tail: TailModel,
}

impl SampledDecayFn {
    pub fn new(t: Vec<f64>, f: Vec<f64>, tail: TailModel) -> Result<Self> {
        if t.len() != f.len() || t.is_empty() {
            return Err(WaveError::Samples("times and values must be nonempty and of equal length".into()));
        }
        if t[0] < 0.0 || t.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(WaveError::Samples("times must be nonnegative and strictly increasing".into()));
        }
        if f.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(WaveError::Samples("values must be finite and nonnegative".into()));
        }
        if f.windows(2).any(|w| w[1] > w[0] * (1.0 + 1e-12)) {
            return Err(WaveError::Samples("values must be nonincreasing".into()));
        }
        match tail {
            TailModel::PowerLaw(k) if !(k > 0.0) => {
                return Err(WaveError::Samples(format!("tail exponent must be positive, got {k}")))
            }
            TailModel::Exponential(r) if !(r > 0.0) => {
                return Err(WaveError::Samples(format!("tail rate must be positive, got {r}")))
            }
            _ => {}
        }
        Ok(Self { t, f, tail })
    }

    /// Samples an analytic function on `n` log-spaced points of `[0, t_end]`.
    pub fn from_fn(g: impl Fn(f64) -> f64, t_end: f64, n: usize, tail: TailModel) -> Result<Self> {
        if n < 2 || !(t_end > 0.0) {
            return invalid("need at least two samples on a positive horizon");
        }
        let l = t_end.ln_1p();
        let t: Vec<f64> = (0..n).map(|k| (l * k as f64 / (n - 1) as f64).exp_m1()).collect();
        let f = t.iter().map(|&s| g(s)).collect();
        Self::new(t, f, tail)
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    fn segment_integral(&self, i: usize, r: f64) -> f64 {
        let (f0, f1) = (self.f[i], self.f[i + 1]);
        let (t0, t1) = (self.t[i], self.t[i + 1]);
        if f0 == 0.0 {
            return 0.0;
        }
        if f1 == 0.0 {
            return f0.powf(r) * (t1 - t0) / (r + 1.0);
        }
        let lt = ((1.0 + t1) / (1.0 + t0)).ln();
        let kappa = (f0 / f1).ln() / lt;
        let e = 1.0 - r * kappa;
        // int_{t0}^{t1} f0^r ((1+t)/(1+t0))^{-r kappa} dt
        let base = f0.powf(r) * (1.0 + t0);
        if e.abs() < 1e-12 {
            base * lt
        } else {
            base * (e * lt).exp_m1() / e
        }
    }

    fn tail_integral(&self, r: f64) -> f64 {
        let n = self.t.len() - 1;
        let fn_ = self.f[n];
        if fn_ == 0.0 {
            return 0.0;
        }
        match self.tail {
            TailModel::Zero => 0.0,
            TailModel::Exponential(rate) => fn_.powf(r) / (r * rate),
            TailModel::PowerLaw(k) => {
                if r * k <= 1.0 {
                    f64::INFINITY
                } else {
                    fn_.powf(r) * (1.0 + self.t[n]) / (r * k - 1.0)
                }
            }
        }
    }

    /// `int_{t_i}^inf f^r` for every sample index `i`.
    pub fn tail_integrals(&self, r: f64) -> Vec<f64> {
        let n = self.t.len();
        let mut out = vec![0.0; n];
        out[n - 1] = self.tail_integral(r);
        for i in (0..n - 1).rev() {
            out[i] = out[i + 1] + self.segment_integral(i, r);
        }
        out
    }

    /// Same samples seen on the clock `u = phi(t)`; the tail model is read
    /// in the new clock.
    pub fn reparametrize<W: TimeWeight + ?Sized>(&self, phi: &W) -> Result<Self> {
        let t: Vec<f64> = self.t.iter().map(|&s| phi.phi(s)).collect();
        Self::new(t, self.f.clone(), self.tail)
    }

    /// `sup f (1+t)^k / f(0)` and whether it stays bounded: the sup over the
    /// last decade of samples may exceed the earlier sup by at most 2x, and a
    /// power-law tail must decay at least as fast as `k`.
    fn weighted_sup(&self, k: f64) -> (f64, bool) {
        let f0 = self.f[0];
        if f0 == 0.0 {
            return (0.0, true);
        }
        let t_end = *self.t.last().unwrap();
        let mut early: f64 = 0.0;
        let mut late: f64 = 0.0;
        for (&t, &f) in self.t.iter().zip(&self.f) {
            let v = f * (1.0 + t).powf(k) / f0;
            if 10.0 * (1.0 + t) >= 1.0 + t_end {
                late = late.max(v);
            } else {
                early = early.max(v);
            }
        }
        let tail_ok = match self.tail {
            TailModel::PowerLaw(a) => a >= k || *self.f.last().unwrap() == 0.0,
            _ => true,
        };
        (early.max(late), tail_ok && late <= 2.0 * early.max(f64::MIN_POSITIVE))
    }
}

/// Verdict of the two-exponent lemma.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma2Verdict {
    pub hypothesis_holds: bool,
    pub first_violation: Option<f64>,
    /// Smallest `c` for which the hypothesis holds on the samples.
    pub minimal_c: f64,
    /// `sup f(t) (1+t)^{(1+sigma')/sigma} / f(0)`.
    pub conclusion_constant: f64,
    pub conclusion_bounded: bool,
}

const REL_TOL: f64 = 1e-9;

/// Checks `int_t^inf f^{1+s} <= c f(t)^{1+s} + c (1+t)^{-s'} f(0)^s f(t)` at
/// every sample and fits the constant of `f(t) <= C f(0) (1+t)^{-(1+s')/s}`.
pub fn check_lemma2_cocv(f: &SampledDecayFn, sigma: f64, sigma_prime: f64, c: f64) -> Result<Lemma2Verdict> {
    if !(sigma > 0.0 && sigma_prime > 0.0 && c > 0.0) {
        return invalid("sigma, sigma' and c must be positive");
    }
    let r = 1.0 + sigma;
    let ints = f.tail_integrals(r);
    let f0s = f.f[0].powf(sigma);
    let mut first = None;
    let mut minimal_c: f64 = 0.0;
    for i in 0..f.len() {
        let unit = f.f[i].powf(r) + f0s * f.f[i] / (1.0 + f.t[i]).powf(sigma_prime);
        let lhs = ints[i];
        if lhs > 0.0 {
            minimal_c = if unit > 0.0 { minimal_c.max(lhs / unit) } else { f64::INFINITY };
        }
        if lhs > c * unit * (1.0 + REL_TOL) && first.is_none() {
            first = Some(f.t[i]);
        }
    }
    let (constant, bounded) = f.weighted_sup((1.0 + sigma_prime) / sigma);
    Ok(Lemma2Verdict {
        hypothesis_holds: first.is_none(),
        first_violation: first,
        minimal_c,
        conclusion_constant: constant,
        conclusion_bounded: bounded,
    })
}

/// The same check on the clock `phi`; `phi(t) = t` reproduces
/// [`check_lemma2_cocv`] exactly.
pub fn check_lemma3_cocv<W: TimeWeight + ?Sized>(
    e: &SampledDecayFn,
    phi: &W,
    sigma: f64,
    sigma_prime: f64,
    c: f64,
) -> Result<Lemma2Verdict> {
    check_lemma2_cocv(&e.reparametrize(phi)?, sigma, sigma_prime, c)
}

/// `e_0 = 2m`, `e_{n+1} = 2m + theta e_n` with `theta = (p-2)/p`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapSequence {
    pub p: f64,
    pub m: u32,
    pub exponents: Vec<f64>,
    pub limit: f64,
}

pub fn bootstrap_exponents(p: f64, m: u32, n_stages: usize) -> Result<BootstrapSequence> {
    if !(p > 2.0 && p.is_finite()) {
        return invalid(format!("bootstrap needs p > 2, got {p}"));
    }
    if m == 0 {
        return invalid("m must be at least 1");
    }
    let theta = (p - 2.0) / p;
    let two_m = 2.0 * m as f64;
    let mut exponents = Vec::with_capacity(n_stages + 1);
    let mut e = two_m;
    exponents.push(e);
    for _ in 0..n_stages {
        e = two_m + theta * e;
        exponents.push(e);
    }
    Ok(BootstrapSequence { p, m, exponents, limit: m as f64 * p })
}

/// Closed form `m p (1 - theta^{n+1})` of stage `n`.
pub fn bootstrap_closed_form(p: f64, m: u32, n: usize) -> f64 {
    let theta = (p - 2.0) / p;
    m as f64 * p * (1.0 - theta.powi(n as i32 + 1))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageFit {
    pub exponent: f64,
    /// `sup f(t) (1+t)^{exponent}`.
    pub constant: f64,
}

/// Verdict of the three-term lemma.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaCocvVerdict {
    pub hypothesis_holds: bool,
    pub first_violation: Option<f64>,
    pub minimal_c: f64,
    pub stages: Vec<StageFit>,
    pub delta: f64,
    /// `sup f(t) (1+t)^{m(p-delta)} / f(0)`.
    pub decay_bound: f64,
    pub conclusion_bounded: bool,
}

/// Default slack in the conclusion exponent.
pub const DEFAULT_DELTA: f64 = 0.25;

/// Checks
/// `int_t^inf f^2 <= c f^2 + c f^{1+theta} (1+t)^{1-2m} + c f (1+t)^{1-mp}`
/// and the decay `f(t) <= C f(0) (1+t)^{-m(p-delta)}`.
pub fn check_lemma_cocv(f: &SampledDecayFn, p: f64, m: u32, c: f64, delta: f64) -> Result<LemmaCocvVerdict> {
    let seq = bootstrap_exponents(p, m, 12)?;
    if !(c > 0.0 && delta > 0.0) {
        return invalid("c and delta must be positive");
    }
    let mf = m as f64;
    let theta = (p - 2.0) / p;
    let ints = f.tail_integrals(2.0);
    let mut first = None;
    let mut minimal_c: f64 = 0.0;
    for i in 0..f.len() {
        let (t, v) = (f.t[i], f.f[i]);
        let unit = v * v + v.powf(1.0 + theta) / (1.0 + t).powf(2.0 * mf - 1.0) + v / (1.0 + t).powf(mf * p - 1.0);
        let lhs = ints[i];
        if lhs > 0.0 {
            minimal_c = if unit > 0.0 { minimal_c.max(lhs / unit) } else { f64::INFINITY };
        }
        if lhs > c * unit * (1.0 + REL_TOL) && first.is_none() {
            first = Some(t);
        }
    }
    let stages = seq
        .exponents
        .iter()
        .map(|&e| StageFit {
            exponent: e,
            constant: f.t.iter().zip(&f.f).map(|(&t, &v)| v * (1.0 + t).powf(e)).fold(0.0, f64::max),
        })
        .collect();
    let (bound, bounded) = f.weighted_sup(mf * (p - delta));
    Ok(LemmaCocvVerdict {
        hypothesis_holds: first.is_none(),
        first_violation: first,
        minimal_c,
        stages,
        delta,
        decay_bound: bound,
        conclusion_bounded: bounded,
    })
}
