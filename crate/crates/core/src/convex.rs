//! The modified potential `F~(y) = ((|y|+1)^p - 1)/p - |y|`, its derivative
//! `f~`, the inverse `f~^{-1}` and the convex conjugate `F~*`, together with
//! empirical constant finders for the inequalities built on them.
//!
//! All formulas are written with `expm1`/`ln_1p` so they stay accurate for
//! arguments spanning twenty decades.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::quadrature::gauss_legendre8;

/// An exponent `p > 1` with its conjugate `q` and `theta = (p-2)/p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PExponent {
    pub p: f64,
    pub q: f64,
    pub theta: f64,
}

impl PExponent {
    pub fn new(p: f64) -> Result<Self> {
        if !(p.is_finite() && p > 1.0) {
            return invalid(format!("exponent must satisfy 1 < p < inf, got {p}"));
        }
        Ok(Self { p, q: p / (p - 1.0), theta: (p - 2.0) / p })
    }
}

pub(crate) fn check_sub_quadratic(p: f64) -> Result<()> {
    if p > 1.0 && p < 2.0 {
        Ok(())
    } else {
        invalid(format!("modified potential needs 1 < p < 2, got {p}"))
    }
}

/// `f~(y) = sgn(y) ((|y|+1)^{p-1} - 1)`, unchecked.
#[inline]
pub fn f_tilde(y: f64, p: f64) -> f64 {
    y.signum() * ((p - 1.0) * y.abs().ln_1p()).exp_m1()
}

/// `f~'(y) = (p-1)(|y|+1)^{p-2}`.
#[inline]
pub fn f_tilde_prime(y: f64, p: f64) -> f64 {
    (p - 1.0) * ((p - 2.0) * y.abs().ln_1p()).exp()
}

/// `((|y|+1)^r - 1)/r - |y|` for any `r > 1`.
pub(crate) fn shifted_power_potential(y: f64, r: f64) -> f64 {
    let a = y.abs();
    if a < 0.125 {
        // sum_{k>=2} binom(r, k) a^k / r
        let mut coef = r * (r - 1.0) / 2.0;
        let mut pw = a * a;
        let mut acc = 0.0;
        let mut k = 2.0;
        while k < 60.0 {
            let term = coef * pw;
            acc += term;
            if term.abs() <= 1e-18 * acc.abs() {
                break;
            }
            coef *= (r - k) / (k + 1.0);
            pw *= a;
            k += 1.0;
        }
        acc / r
    } else {
        (r * a.ln_1p()).exp_m1() / r - a
    }
}

/// `F~(y)`, unchecked.
#[inline]
pub fn big_f_tilde(y: f64, p: f64) -> f64 {
    shifted_power_potential(y, p)
}

/// `f~^{-1}(b) = sgn(b) ((|b|+1)^{1/(p-1)} - 1)`.
#[inline]
pub fn f_tilde_inverse(b: f64, p: f64) -> f64 {
    if b == 0.0 {
        return 0.0;
    }
    b.signum() * (b.abs().ln_1p() / (p - 1.0)).exp_m1()
}

/// `F~*(b)`. Integrating `f~^{-1}` gives the same shifted-power form with
/// the conjugate exponent, which avoids cancellation near `b = 0`.
#[inline]
pub fn big_f_tilde_star(b: f64, p: f64) -> f64 {
    shifted_power_potential(b, p / (p - 1.0))
}

pub fn checked_f_tilde(y: f64, p: f64) -> Result<f64> {
    check_sub_quadratic(p)?;
    Ok(f_tilde(y, p))
}

pub fn checked_big_f_tilde(y: f64, p: f64) -> Result<f64> {
    check_sub_quadratic(p)?;
    Ok(big_f_tilde(y, p))
}

pub fn checked_f_tilde_inverse(b: f64, p: f64) -> Result<f64> {
    check_sub_quadratic(p)?;
    Ok(f_tilde_inverse(b, p))
}

pub fn checked_big_f_tilde_star(b: f64, p: f64) -> Result<f64> {
    check_sub_quadratic(p)?;
    Ok(big_f_tilde_star(b, p))
}

/// Outcome of a Fenchel inequality sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FenchelReport {
    pub samples: usize,
    pub violations: usize,
    /// Largest `(|ab| - F~(|a|) - F~*(|b|)) / max(1, |ab|)` seen.
    pub max_relative_excess: f64,
}

/// Counts pairs with `|ab| > F~(|a|) + F~*(|b|)` beyond `1e-12 max(1, |ab|)`.
pub fn check_fenchel(samples: &[(f64, f64)], p: f64) -> Result<FenchelReport> {
    check_sub_quadratic(p)?;
    let mut violations = 0;
    let mut worst = f64::NEG_INFINITY;
    for &(a, b) in samples {
        let lhs = (a * b).abs();
        let rhs = big_f_tilde(a.abs(), p) + big_f_tilde_star(b.abs(), p);
        let excess = (lhs - rhs) / lhs.max(1.0);
        worst = worst.max(excess);
        if excess > 1e-12 {
            violations += 1;
        }
    }
    Ok(FenchelReport { samples: samples.len(), violations, max_relative_excess: worst })
}

/// Ratio families compared against their power-law envelopes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SandwichKind {
    /// `F~(y) / min(y^2, y^p)`.
    FTilde,
    /// `F~*(b) / max(b^2, b^q)`.
    FStar,
    /// `max(f~(y)^2, f~(y)^q) / min(y^2, y^p)`.
    FMix,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SandwichReport {
    pub kind: SandwichKind,
    pub p: f64,
    pub inf_ratio: f64,
    pub sup_ratio: f64,
    pub ratio_at_small_end: f64,
    pub ratio_at_large_end: f64,
    pub grid_points: usize,
}

pub fn sandwich_ratio(kind: SandwichKind, y: f64, p: f64) -> f64 {
    let q = p / (p - 1.0);
    match kind {
        SandwichKind::FTilde => big_f_tilde(y, p) / (y * y).min(y.powf(p)),
        SandwichKind::FStar => big_f_tilde_star(y, p) / (y * y).max(y.powf(q)),
        SandwichKind::FMix => {
            let f = f_tilde(y, p);
            (f * f).max(f.powf(q)) / (y * y).min(y.powf(p))
        }
    }
}

/// Ratios over a log grid on `[1e-8, 1e8]`.
pub fn sandwich_constants(kind: SandwichKind, p: f64, grid_points: usize) -> Result<SandwichReport> {
    check_sub_quadratic(p)?;
    if grid_points < 2 {
        return invalid("sandwich grid needs at least two points");
    }
    let mut inf = f64::INFINITY;
    let mut sup: f64 = 0.0;
    let mut first = 0.0;
    let mut last = 0.0;
    for k in 0..grid_points {
        let y = 10f64.powf(-8.0 + 16.0 * k as f64 / (grid_points - 1) as f64);
        let r = sandwich_ratio(kind, y, p);
        inf = inf.min(r);
        sup = sup.max(r);
        if k == 0 {
            first = r;
        }
        last = r;
    }
    Ok(SandwichReport {
        kind,
        p,
        inf_ratio: inf,
        sup_ratio: sup,
        ratio_at_small_end: first,
        ratio_at_large_end: last,
        grid_points,
    })
}

/// Which side of the paired Fenchel bound carries the small weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FenchelDirection {
    /// `|a f~(y)| <= C (eta^-2 F~(a) + eta^2 F~(y))`.
    Small,
    /// `|a f~(y)| <= C (eta^p F~(a) + eta^-q F~(y))`.
    Large,
}

/// Returns `(|a f~(y)|, unit right side)`; the minimal constant is their ratio.
pub fn lemma_fenchel_cons(a: f64, y: f64, eta: f64, p: f64, dir: FenchelDirection) -> Result<(f64, f64)> {
    check_sub_quadratic(p)?;
    if !(eta > 0.0 && eta < 1.0) {
        return invalid(format!("eta must lie in (0, 1), got {eta}"));
    }
    let q = p / (p - 1.0);
    let lhs = (a * f_tilde(y, p)).abs();
    let fa = big_f_tilde(a, p);
    let fy = big_f_tilde(y, p);
    let rhs = match dir {
        FenchelDirection::Small => fa / (eta * eta) + eta * eta * fy,
        FenchelDirection::Large => eta.powf(p) * fa + fy / eta.powf(q),
    };
    Ok((lhs, rhs))
}

fn log_magnitudes(count: usize, lo_exp: f64, hi_exp: f64) -> Vec<f64> {
    if count == 1 {
        return vec![10f64.powf(hi_exp)];
    }
    (0..count)
        .map(|k| 10f64.powf(lo_exp + (hi_exp - lo_exp) * k as f64 / (count - 1) as f64))
        .collect()
}

/// Symmetric grid `{-m_k} ∪ {0} ∪ {m_k}` with log-spaced magnitudes.
pub fn symmetric_log_grid(n_points: usize, lo_exp: f64, hi_exp: f64) -> Vec<f64> {
    let k = (n_points.max(3) - 1) / 2;
    let mags = log_magnitudes(k, lo_exp, hi_exp);
    let mut g: Vec<f64> = mags.iter().rev().map(|m| -m).collect();
    g.push(0.0);
    g.extend(mags);
    g
}

/// Minimal constant of the paired Fenchel bound for one `eta`, swept over
/// `a, y` in a log grid on `[1e-6, 1e6]`.
pub fn fit_fenchel_cons_constant(p: f64, eta: f64, dir: FenchelDirection, per_axis: usize) -> Result<f64> {
    check_sub_quadratic(p)?;
    let mags = log_magnitudes(per_axis, -6.0, 6.0);
    let mut c: f64 = 0.0;
    for &a in &mags {
        for &y in &mags {
            let (l, r) = lemma_fenchel_cons(a, y, eta, p, dir)?;
            c = c.max(l / r);
        }
    }
    Ok(c)
}

/// `(lhs, rhs, ratio)` of the generalized Poincare bound
/// `int F~(z) <= C int F~(z')` for piecewise-linear `z` with `z(0) = 0`.
/// Returns `None` when both sides vanish.
pub fn check_generalized_poincare(z: &[f64], p: f64) -> Result<Option<(f64, f64, f64)>> {
    check_sub_quadratic(p)?;
    if z.len() < 2 {
        return invalid("profile needs at least two nodes");
    }
    if z[0] != 0.0 {
        return invalid("profile must vanish at x = 0");
    }
    let dx = 1.0 / (z.len() - 1) as f64;
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for w in z.windows(2) {
        let slope = (w[1] - w[0]) / dx;
        rhs += dx * big_f_tilde(slope, p);
        lhs += gauss_legendre8(|s| big_f_tilde(w[0] + slope * s, p), 0.0, dx);
    }
    if rhs == 0.0 {
        if lhs == 0.0 {
            return Ok(None);
        }
        return invalid("nonzero profile with vanishing derivative energy");
    }
    Ok(Some((lhs, rhs, lhs / rhs)))
}

/// Sup over a symmetric log grid of
/// `F~(r - x) / (M^-p (F~(r) + F~(x)) + M^{2-p} (r - x)(f~(r) - f~(x)))`
/// for each requested `M`. Pair symmetries reduce the sweep to `r > x`,
/// `r + x >= 0`.
pub fn two_point_inequality_constants(p: f64, ms: &[f64], n_grid: usize) -> Result<Vec<f64>> {
    check_sub_quadratic(p)?;
    if ms.iter().any(|&m| !(m >= 1.0)) {
        return invalid("M must be at least 1");
    }
    let grid = symmetric_log_grid(n_grid, -8.0, 4.0);
    let fv: Vec<f64> = grid.iter().map(|&v| f_tilde(v, p)).collect();
    let bf: Vec<f64> = grid.iter().map(|&v| big_f_tilde(v, p)).collect();
    let wa: Vec<f64> = ms.iter().map(|&m| m.powf(-p)).collect();
    let wb: Vec<f64> = ms.iter().map(|&m| m.powf(2.0 - p)).collect();
    let mut sup = vec![0.0f64; ms.len()];
    let mid = grid.len() / 2;
    for i in mid + 1..grid.len() {
        let r = grid[i];
        for j in (grid.len() - 1 - i)..i {
            let x = grid[j];
            let d = r - x;
            let num = big_f_tilde(d, p);
            let a = bf[i] + bf[j];
            let b = d * (fv[i] - fv[j]);
            for k in 0..ms.len() {
                let ratio = num / (wa[k] * a + wb[k] * b);
                if ratio > sup[k] {
                    sup[k] = ratio;
                }
            }
        }
    }
    Ok(sup)
}

pub fn two_point_inequality_constant(p: f64, m: f64, n_grid: usize) -> Result<f64> {
    Ok(two_point_inequality_constants(p, &[m], n_grid)?[0])
}

/// Sup of `|a-b|^p / ((a-b)(f(a)-f(b)))` with `f(s) = sgn(s)|s|^{p-1}`.
/// The ratio is scale invariant, so `a = 1` and `b` sweeps `[-1, 1)` on a
/// grid that is log-refined towards `b = -1`.
pub fn p_power_difference_constant(p: f64, n_grid: usize) -> Result<f64> {
    if !(p > 2.0 && p.is_finite()) {
        return invalid(format!("difference bound needs p > 2, got {p}"));
    }
    let f = |s: f64| s.signum() * s.abs().powf(p - 1.0);
    let grid = symmetric_log_grid(n_grid, -8.0, 0.0);
    let mut sup: f64 = 0.0;
    for &v in &grid {
        let b = v.clamp(-1.0, 1.0);
        if b == 1.0 {
            continue;
        }
        let d = 1.0 - b;
        let ratio = d.powf(p) / (d * (1.0 - f(b)));
        sup = sup.max(ratio);
    }
    Ok(sup)
}

/// One row of the constants report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantsReport {
    pub inequality: String,
    pub p: f64,
    #[serde(rename = "M", skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    pub empirical_constant: f64,
    pub grid_points: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        let p = 1.5;
        assert_eq!(f_tilde(0.0, p), 0.0);
        assert_eq!(big_f_tilde(0.0, p), 0.0);
        assert!((f_tilde(1.0, p) - (2f64.sqrt() - 1.0)).abs() < 1e-15);
        assert!((big_f_tilde(1.0, p) - 0.218_951).abs() < 1e-6);
        assert!((f_tilde_inverse(2f64.sqrt() - 1.0, p) - 1.0).abs() < 1e-14);
        let b = f_tilde(1.0, p);
        assert!((big_f_tilde_star(b, p) - 0.195_262).abs() < 1e-6);
        assert_eq!(big_f_tilde_star(0.0, p), 0.0);
    }

    #[test]
    fn conjugate_matches_legendre_identity() {
        for &p in &[1.2, 1.5, 1.8] {
            for &b in &[0.3, 1.0, 7.0, 1e3] {
                let y = f_tilde_inverse(b, p);
                let via = b * y - big_f_tilde(y, p);
                assert!((via - big_f_tilde_star(b, p)).abs() < 1e-12 * via.abs().max(1.0));
            }
        }
    }

    #[test]
    fn potential_derivative_matches_differences() {
        for &p in &[1.1, 1.5, 1.9] {
            for &y in &[-3.0, -0.1, 0.05, 0.124, 0.126, 2.0] {
                let e = 1e-6;
                let fd = (big_f_tilde(y + e, p) - big_f_tilde(y - e, p)) / (2.0 * e);
                assert!((fd - f_tilde(y, p)).abs() < 1e-8);
                let fd2 = (f_tilde(y + e, p) - f_tilde(y - e, p)) / (2.0 * e);
                assert!((fd2 - f_tilde_prime(y, p)).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn series_and_closed_form_agree_at_switch() {
        for &p in &[1.1, 1.5, 1.9, 3.0] {
            let y = 0.125;
            let series = {
                let a: f64 = y;
                let mut coef = p * (p - 1.0) / 2.0;
                let mut pw = a * a;
                let mut acc = 0.0;
                for k in 2..80 {
                    acc += coef * pw;
                    coef *= (p - k as f64) / (k as f64 + 1.0);
                    pw *= a;
                }
                acc / p
            };
            assert!((series - shifted_power_potential(y, p)).abs() < 1e-15);
        }
    }

    #[test]
    fn domain_checks() {
        assert!(checked_f_tilde(1.0, 2.0).is_err());
        assert!(checked_big_f_tilde(1.0, 1.0).is_err());
        assert!(PExponent::new(1.0).is_err());
        let e = PExponent::new(4.0).unwrap();
        assert!((1.0 / e.p + 1.0 / e.q - 1.0).abs() < 1e-15);
        assert_eq!(e.theta, 0.5);
    }

    #[test]
    fn touching_case_is_equality() {
        let p = 1.5;
        let samples: Vec<(f64, f64)> = [0.0, 1e-5, 0.3, 2.0, 50.0, 1e4].iter().map(|&a| (a, f_tilde(a, p))).collect();
        let rep = check_fenchel(&samples, p).unwrap();
        assert_eq!(rep.violations, 0);
        assert!(rep.max_relative_excess.abs() < 1e-12);
    }

    #[test]
    fn sandwich_asymptotes() {
        let p = 1.5;
        let q = 3.0;
        let r = sandwich_constants(SandwichKind::FTilde, p, 2001).unwrap();
        assert!((r.ratio_at_small_end - (p - 1.0) / 2.0).abs() < 1e-6);
        assert!((r.ratio_at_large_end - 1.0 / p).abs() < 1e-3);
        let r = sandwich_constants(SandwichKind::FStar, p, 2001).unwrap();
        assert!((r.ratio_at_small_end - 1.0 / (2.0 * (p - 1.0))).abs() < 1e-6);
        assert!((r.ratio_at_large_end - (p - 1.0) / p).abs() < 1e-3);
        let r = sandwich_constants(SandwichKind::FMix, p, 2001).unwrap();
        assert!((r.ratio_at_small_end - (p - 1.0) * (p - 1.0)).abs() < 1e-6);
        assert!((r.ratio_at_large_end - 1.0).abs() < 1e-2);
        let _ = q;
        for kind in [SandwichKind::FTilde, SandwichKind::FStar, SandwichKind::FMix] {
            for &p in &[1.2, 1.5, 1.8] {
                let r = sandwich_constants(kind, p, 4001).unwrap();
                let lo = r.ratio_at_small_end.min(r.ratio_at_large_end);
                let hi = r.ratio_at_small_end.max(r.ratio_at_large_end);
                assert!(r.inf_ratio > 0.0 && r.sup_ratio.is_finite());
                // Near p = 1 the crossover bump of F~* and f_mix leaves the
                // factor-two band around the asymptotes.
                if p >= 1.5 {
                    assert!(r.inf_ratio >= lo / 2.0 && r.sup_ratio <= 2.0 * hi, "{kind:?} {p}");
                }
            }
        }
    }

    #[test]
    fn fenchel_cons_edges() {
        let (l, _) = lemma_fenchel_cons(0.0, 3.0, 0.5, 1.5, FenchelDirection::Small).unwrap();
        assert_eq!(l, 0.0);
        let (l, _) = lemma_fenchel_cons(3.0, 0.0, 0.5, 1.5, FenchelDirection::Large).unwrap();
        assert_eq!(l, 0.0);
        assert!(lemma_fenchel_cons(1.0, 1.0, 1.0, 1.5, FenchelDirection::Small).is_err());
        let c = fit_fenchel_cons_constant(1.5, 0.5, FenchelDirection::Small, 121).unwrap();
        assert!(c.is_finite() && c > 0.0);
    }

    #[test]
    fn poincare_linear_profile() {
        let p = 1.5;
        let n = 64;
        let z: Vec<f64> = (0..=n).map(|j| j as f64 / n as f64).collect();
        let (lhs, rhs, ratio) = check_generalized_poincare(&z, p).unwrap().unwrap();
        let exact = ((2f64.powf(p + 1.0) - 1.0) / (p + 1.0) - 1.0) / p - 0.5;
        assert!((lhs - exact).abs() < 1e-12);
        assert!((rhs - big_f_tilde(1.0, p)).abs() < 1e-14);
        assert!(ratio <= 1.0);
        assert!(check_generalized_poincare(&[0.0; 5], p).unwrap().is_none());
    }

    #[test]
    fn p_power_difference_reaches_antisymmetric_value() {
        for &p in &[2.5, 3.0, 4.0] {
            let c = p_power_difference_constant(p, 4001).unwrap();
            assert!((c - 2f64.powf(p - 2.0)).abs() < 1e-12 * c);
        }
        // b = 0 gives exactly 1.
        let p: f64 = 3.0;
        let a: f64 = 1.7;
        let ratio = a.powf(p) / (a * a.powf(p - 1.0));
        assert!((ratio - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_point_constant_is_finite() {
        let c = two_point_inequality_constants(1.5, &[1.0, 2.0], 401).unwrap();
        assert!(c.iter().all(|v| v.is_finite() && *v > 0.0));
    }
}
