//! Damping nonlinearities, the coefficient profile `a(x)` and the smooth
//! cutoffs used by the multiplier identities.
//!
//! Every preset is odd, nondecreasing and globally Lipschitz. On `[-1, 1]`
//! the comparison function `g0` coincides with `g`; outside it each preset
//! saturates to a linear law so that the sector bound
//! `alpha |s| <= |g(s)| <= beta |s|` holds for `|s| >= 1`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, WaveError};
use crate::quadrature::bisect;

/// The three supported damping families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DampingKind {
    /// `g(s) = slope * s`.
    Linear { slope: f64 },
    /// `alpha * sgn(s) |s|^q` on `|s| <= 1`, `alpha * s` beyond.
    PolynomialNearZero { q: f64, alpha: f64 },
    /// `sgn(s) alpha exp(-alpha / |s|^q)` on `|s| <= 1`, `g(1) * s` beyond.
    ExpFlatNearZero { q: f64, alpha: f64 },
}

/// Behaviour of `g` at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OriginClass {
    PositiveDerivative,
    ZeroDerivative,
}

/// A validated damping law together with its sector constants.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DampingSpec {
    pub kind: DampingKind,
    /// `beta`: global bound on `|g(s)| / |s|`.
    pub lipschitz_bound: f64,
    /// `alpha`: lower bound on `|g(s)| / |s|` for `|s| >= 1`.
    pub linear_lower_at_infinity: f64,
    /// Upper end of the interval on which `H` is nondecreasing.
    pub eta: f64,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        invalid(format!("{name} must be positive and finite, got {v}"))
    }
}

impl DampingSpec {
    pub fn linear(slope: f64) -> Result<Self> {
        positive("slope", slope)?;
        Ok(Self {
            kind: DampingKind::Linear { slope },
            lipschitz_bound: slope,
            linear_lower_at_infinity: slope,
            eta: 1.0,
        })
    }

    pub fn polynomial(q: f64, alpha: f64) -> Result<Self> {
        positive("alpha", alpha)?;
        if !(q.is_finite() && q >= 1.0) {
            return invalid(format!("polynomial exponent q must be >= 1, got {q}"));
        }
        Ok(Self {
            kind: DampingKind::PolynomialNearZero { q, alpha },
            lipschitz_bound: alpha,
            linear_lower_at_infinity: alpha,
            eta: 1.0,
        })
    }

    pub fn exp_flat(q: f64, alpha: f64) -> Result<Self> {
        positive("alpha", alpha)?;
        positive("q", q)?;
        let g1 = alpha * (-alpha).exp();
        if g1 <= 0.0 {
            return invalid("exp-flat damping underflows at s = 1; reduce alpha");
        }
        // H peaks at (alpha q)^{1/q} when that point lies inside (0, 1).
        let s_peak = (alpha * q).powf(1.0 / q).min(1.0);
        let beta = alpha * (-alpha / s_peak.powf(q)).exp() / s_peak;
        Ok(Self {
            kind: DampingKind::ExpFlatNearZero { q, alpha },
            lipschitz_bound: beta.max(g1),
            linear_lower_at_infinity: g1,
            eta: s_peak,
        })
    }

    pub fn from_kind(kind: DampingKind) -> Result<Self> {
        match kind {
            DampingKind::Linear { slope } => Self::linear(slope),
            DampingKind::PolynomialNearZero { q, alpha } => Self::polynomial(q, alpha),
            DampingKind::ExpFlatNearZero { q, alpha } => Self::exp_flat(q, alpha),
        }
    }

    /// Sets `eta` and checks that `H` is nondecreasing on `(0, eta]`.
    pub fn with_eta(mut self, eta: f64) -> Result<Self> {
        positive("eta", eta)?;
        if eta > 1.0 {
            return invalid(format!("eta must lie in (0, 1], got {eta}"));
        }
        self.eta = eta;
        self.check_h_monotone()?;
        Ok(self)
    }

    /// `g(s)` without argument checks. Callers guarantee finite input.
    #[inline]
    pub fn g(&self, s: f64) -> f64 {
        match self.kind {
            DampingKind::Linear { slope } => slope * s,
            DampingKind::PolynomialNearZero { q, alpha } => {
                let a = s.abs();
                if a >= 1.0 {
                    alpha * s
                } else {
                    alpha * s.signum() * int_or_real_pow(a, q)
                }
            }
            DampingKind::ExpFlatNearZero { q, alpha } => {
                let a = s.abs();
                if a == 0.0 {
                    0.0
                } else if a >= 1.0 {
                    self.linear_lower_at_infinity * s
                } else {
                    s.signum() * alpha * (-alpha / int_or_real_pow(a, q)).exp()
                }
            }
        }
    }

    /// Checked evaluation of `g`.
    pub fn eval_g(&self, s: f64) -> Result<f64> {
        if !s.is_finite() {
            return Err(WaveError::Domain(format!("g evaluated at non-finite {s}")));
        }
        Ok(self.g(s))
    }

    /// Comparison function on `[-1, 1]`; equals `g` for every preset.
    pub fn g0(&self, s: f64) -> f64 {
        self.g(s)
    }

    /// `H(s) = g0(s) / s` for `s > 0`, unchecked.
    #[inline]
    pub fn h(&self, s: f64) -> f64 {
        match self.kind {
            DampingKind::Linear { slope } => slope,
            DampingKind::PolynomialNearZero { q, alpha } => {
                if s >= 1.0 {
                    alpha
                } else {
                    alpha * int_or_real_pow(s, q - 1.0)
                }
            }
            DampingKind::ExpFlatNearZero { .. } => self.g(s) / s,
        }
    }

    /// Checked evaluation of `H`.
    pub fn eval_h(&self, s: f64) -> Result<f64> {
        if !(s.is_finite() && s > 0.0) {
            return Err(WaveError::Domain(format!("H requires s > 0, got {s}")));
        }
        Ok(self.h(s))
    }

    /// `H'(s)` for `0 < s < 1`.
    pub fn dh(&self, s: f64) -> f64 {
        match self.kind {
            DampingKind::Linear { .. } => 0.0,
            DampingKind::PolynomialNearZero { q, alpha } => {
                if s >= 1.0 || q == 1.0 {
                    0.0
                } else {
                    alpha * (q - 1.0) * int_or_real_pow(s, q - 2.0)
                }
            }
            DampingKind::ExpFlatNearZero { q, alpha } => {
                if s >= 1.0 {
                    0.0
                } else {
                    let h = self.h(s);
                    h * (alpha * q * s.powf(-q - 1.0) - 1.0 / s)
                }
            }
        }
    }

    /// `H^{-1}(y)` on `(0, eta]`. `None` when `H` is constant.
    pub fn h_inverse(&self, y: f64) -> Option<f64> {
        if y <= 0.0 {
            return match self.kind {
                DampingKind::Linear { .. } => None,
                _ => Some(0.0),
            };
        }
        match self.kind {
            DampingKind::Linear { .. } => None,
            DampingKind::PolynomialNearZero { q, alpha } => {
                if q == 1.0 {
                    None
                } else {
                    Some((y / alpha).powf(1.0 / (q - 1.0)))
                }
            }
            DampingKind::ExpFlatNearZero { .. } => {
                let ly = y.ln();
                if ly >= self.h(self.eta).ln() {
                    return Some(self.eta);
                }
                // ln H is increasing on (0, eta]; work in logs to survive underflow.
                let mut lo = 0.5 * self.eta;
                while self.ln_h(lo) >= ly {
                    lo *= 0.5;
                    if lo < 1e-300 {
                        return Some(0.0);
                    }
                }
                bisect(|s| self.ln_h(s) - ly, lo, self.eta, 2000)
            }
        }
    }

    fn ln_h(&self, s: f64) -> f64 {
        match self.kind {
            DampingKind::ExpFlatNearZero { q, alpha } if s < 1.0 => {
                alpha.ln() - alpha / s.powf(q) - s.ln()
            }
            _ => self.h(s).ln(),
        }
    }

    /// Inverse of `g0` on `[0, g0(1)]`.
    pub fn g0_inverse(&self, y: f64) -> Option<f64> {
        if y < 0.0 || y > self.g0(1.0) {
            return None;
        }
        if y == 0.0 {
            return Some(0.0);
        }
        match self.kind {
            DampingKind::Linear { slope } => Some(y / slope),
            DampingKind::PolynomialNearZero { q, alpha } => Some((y / alpha).powf(1.0 / q)),
            DampingKind::ExpFlatNearZero { q, alpha } => Some((alpha / (alpha / y).ln()).powf(1.0 / q)),
        }
    }

    pub fn classify_origin(&self) -> OriginClass {
        match self.kind {
            DampingKind::Linear { .. } => OriginClass::PositiveDerivative,
            DampingKind::PolynomialNearZero { q: 1.0, .. } => OriginClass::PositiveDerivative,
            _ => OriginClass::ZeroDerivative,
        }
    }

    fn check_h_monotone(&self) -> Result<()> {
        let n = 4000;
        let mut prev = 0.0;
        for k in 1..=n {
            let s = self.eta * k as f64 / n as f64;
            let h = self.h(s);
            if h < prev * (1.0 - 1e-12) {
                return Err(WaveError::Hypothesis(format!(
                    "H decreases near s = {s}; choose a smaller eta"
                )));
            }
            prev = h;
        }
        Ok(())
    }

    /// Probes oddness, monotonicity and the sector bounds.
    pub fn validate(&self) -> Result<()> {
        let n = 2000;
        let mut prev = f64::NEG_INFINITY;
        for k in 0..=n {
            let s = -4.0 + 8.0 * k as f64 / n as f64;
            let v = self.g(s);
            if v < prev {
                return Err(WaveError::Hypothesis(format!("g not monotone near {s}")));
            }
            if (v + self.g(-s)).abs() > 1e-15 * v.abs().max(1.0) {
                return Err(WaveError::Hypothesis(format!("g not odd at {s}")));
            }
            if s != 0.0 && s * v <= 0.0 && v.abs() > 0.0 {
                return Err(WaveError::Hypothesis(format!("s g(s) <= 0 at {s}")));
            }
            let tol = 1e-12 * s.abs();
            if v.abs() > self.lipschitz_bound * s.abs() + tol {
                return Err(WaveError::Hypothesis(format!("|g(s)| > beta |s| at {s}")));
            }
            if s.abs() >= 1.0 && v.abs() < self.linear_lower_at_infinity * s.abs() - tol {
                return Err(WaveError::Hypothesis(format!("|g(s)| < alpha |s| at {s}")));
            }
            prev = v;
        }
        self.check_h_monotone()
    }
}

#[inline]
fn int_or_real_pow(a: f64, e: f64) -> f64 {
    if e == e.trunc() && e.abs() < 32.0 {
        a.powi(e as i32)
    } else {
        a.powf(e)
    }
}

/// Uniform grid on `[0, 1]` with `dt = dx`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Grid {
    pub n_cells: usize,
}

impl Grid {
    pub fn new(n_cells: usize) -> Result<Self> {
        if n_cells < 2 {
            return invalid(format!("n_cells must be at least 2, got {n_cells}"));
        }
        Ok(Self { n_cells })
    }
    pub fn dx(&self) -> f64 {
        1.0 / self.n_cells as f64
    }
    pub fn dt(&self) -> f64 {
        self.dx()
    }
    pub fn n_nodes(&self) -> usize {
        self.n_cells + 1
    }
    pub fn x(&self, j: usize) -> f64 {
        j as f64 / self.n_cells as f64
    }
    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_nodes()).map(|j| self.x(j)).collect()
    }
}

/// Node values of the damping coefficient `a(x)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientProfile {
    pub a_values: Vec<f64>,
    pub omega: (f64, f64),
    pub a0: f64,
}

impl CoefficientProfile {
    /// `a = a0` on `omega`, linear ramps of width `ramp` outside, zero elsewhere.
    pub fn trapezoid(grid: &Grid, omega: (f64, f64), a0: f64, ramp: f64) -> Result<Self> {
        let (b, c) = omega;
        if !(0.0 <= b - ramp && b < c && c + ramp <= 1.0) {
            return invalid(format!("omega {omega:?} with ramp {ramp} must fit in [0, 1]"));
        }
        positive("a0", a0)?;
        if !(ramp >= 0.0) {
            return invalid("ramp must be nonnegative");
        }
        let a_values = grid
            .nodes()
            .into_iter()
            .map(|x| {
                if x >= b && x <= c {
                    a0
                } else if ramp > 0.0 && x > b - ramp && x < b {
                    a0 * (x - (b - ramp)) / ramp
                } else if ramp > 0.0 && x > c && x < c + ramp {
                    a0 * ((c + ramp) - x) / ramp
                } else {
                    0.0
                }
            })
            .collect();
        Ok(Self { a_values, omega, a0 })
    }

    /// `a = 0` everywhere; used for conservative and boundary-damped runs.
    pub fn zero(grid: &Grid) -> Self {
        Self { a_values: vec![0.0; grid.n_nodes()], omega: (0.25, 0.75), a0: 0.0 }
    }

    pub fn is_zero(&self) -> bool {
        self.a_values.iter().all(|&a| a == 0.0)
    }

    pub fn n_nodes(&self) -> usize {
        self.a_values.len()
    }
}

/// Smooth bridge from 0 (at x <= 0) to 1 (at x >= 1).
pub fn smooth_step(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / x).exp();
        let b = (-1.0 / (1.0 - x)).exp();
        a / (a + b)
    }
}

/// Derivative of [`smooth_step`].
pub fn smooth_step_derivative(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        0.0
    } else {
        let a = (-1.0 / x).exp();
        let b = (-1.0 / (1.0 - x)).exp();
        let da = a / (x * x);
        let db = -b / ((1.0 - x) * (1.0 - x));
        (da * b - a * db) / ((a + b) * (a + b))
    }
}

/// Eight nested cut points `a3 < a2 < a1 < a0 < b0 < b1 < b2 < b3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CutoffSet {
    pub points: [f64; 8],
}

impl Default for CutoffSet {
    fn default() -> Self {
        Self { points: [0.30, 0.35, 0.40, 0.45, 0.55, 0.60, 0.65, 0.70] }
    }
}

/// Cutoff values and the derivatives the identities need.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffValues {
    pub psi1: f64,
    pub psi2: f64,
    pub psi3: f64,
    pub dpsi1: f64,
    pub dpsi2: f64,
}

impl CutoffSet {
    pub fn new(points: [f64; 8], omega: (f64, f64)) -> Result<Self> {
        if points.windows(2).any(|w| !(w[0] < w[1])) {
            return invalid("cut points must be strictly increasing");
        }
        if !(points[0] > omega.0 && points[7] < omega.1) {
            return invalid("cut points must lie inside omega");
        }
        Ok(Self { points })
    }

    /// Rising bridge over `[lo, hi]`: value and derivative.
    fn rise(x: f64, lo: f64, hi: f64) -> (f64, f64) {
        let w = hi - lo;
        let u = (x - lo) / w;
        (smooth_step(u), smooth_step_derivative(u) / w)
    }

    pub fn eval(&self, x: f64) -> CutoffValues {
        let [a3, a2, a1, a0, b0, b1, b2, b3] = self.points;
        let (l1, dl1) = Self::rise(x, a1, a0);
        let (r1, dr1) = Self::rise(x, b0, b1);
        let (l2, dl2) = Self::rise(x, a2, a1);
        let (r2, dr2) = Self::rise(x, b1, b2);
        let (l3, _) = Self::rise(x, a3, a2);
        let (r3, _) = Self::rise(x, b2, b3);
        let mid = 0.5 * (a0 + b0);
        let (psi1, dpsi1) = if x <= mid { (1.0 - l1, -dl1) } else { (r1, dr1) };
        let (psi2, dpsi2) = if x <= mid { (l2, dl2) } else { (1.0 - r2, -dr2) };
        let psi3 = if x <= mid { l3 } else { 1.0 - r3 };
        CutoffValues { psi1, psi2, psi3, dpsi1, dpsi2 }
    }

    /// Smallest `C` with `psi3 <= C a` at every node.
    pub fn domination_constant(&self, grid: &Grid, a: &CoefficientProfile) -> Result<f64> {
        let mut c: f64 = 0.0;
        for j in 0..grid.n_nodes() {
            let psi3 = self.eval(grid.x(j)).psi3;
            if psi3 > 0.0 {
                if a.a_values[j] <= 0.0 {
                    return Err(WaveError::Hypothesis(format!(
                        "psi3 > 0 where a = 0 at x = {}",
                        grid.x(j)
                    )));
                }
                c = c.max(psi3 / a.a_values[j]);
            }
        }
        Ok(c)
    }
}
