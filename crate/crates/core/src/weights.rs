//! Concave time weights built from `H(s) = g0(s)/s`.
//!
//! With `A = eta^{-1/m}`,
//! `psi_m(s) = int_0^s dsigma / H((sigma + A)^{-m})`, `phi_m = psi_m^{-1}` and
//! `eps_m = H^{-1}(phi_m')`. Along the family `eps_m(t) = (phi_m(t) + A)^{-m}`.

use serde::Serialize;

use crate::damping::DampingSpec;
use crate::error::{invalid, Result, WaveError};
use crate::quadrature::{adaptive_simpson, bisect, gauss_legendre8};

/// A clock `phi` with its first two derivatives.
pub trait TimeWeight {
    fn phi(&self, t: f64) -> f64;
    fn dphi(&self, t: f64) -> f64;
    fn ddphi(&self, t: f64) -> f64;
}

/// `phi(t) = t`.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityClock;

impl TimeWeight for IdentityClock {
    fn phi(&self, t: f64) -> f64 {
        t
    }
    fn dphi(&self, _t: f64) -> f64 {
        1.0
    }
    fn ddphi(&self, _t: f64) -> f64 {
        0.0
    }
}

const TABLE_CELLS: usize = 4000;
/// Largest admissible `ln psi_m'` in the table.
const LOG_SLOPE_CAP: f64 = 600.0;

#[derive(Debug, Clone)]
pub struct WeightFamily {
    pub m: u32,
    pub eta: f64,
    pub a: f64,
    pub damping: DampingSpec,
    /// Upper end of the tabulated `s` range.
    pub s_max: f64,
    s: Vec<f64>,
    psi: Vec<f64>,
    /// `phi_m'` at the table nodes, `1 / psi_m'(s_k)`.
    slope: Vec<f64>,
}

impl WeightFamily {
    /// Tabulates `psi_m` on `[0, s_max]`, capped where `psi_m'` would overflow.
    pub fn build(m: u32, eta: f64, damping: &DampingSpec, s_max: f64) -> Result<Self> {
        if m == 0 {
            return invalid("weight index m must be at least 1");
        }
        if !(s_max.is_finite() && s_max > 0.0) {
            return invalid(format!("s_max must be positive, got {s_max}"));
        }
        let damping = damping.clone().with_eta(eta)?;
        let a = eta.powf(-1.0 / m as f64);
        let mf = m as f64;
        let u_of = |s: f64| (s + a).powf(-mf);
        let mut s_cap = s_max;
        // Stop once ln(1/H(u)) exceeds the cap.
        if -(damping.h(u_of(s_cap))).ln() > LOG_SLOPE_CAP || damping.h(u_of(s_cap)) == 0.0 {
            s_cap = bisect(
                |s| {
                    let h = damping.h(u_of(s));
                    if h == 0.0 {
                        f64::MAX
                    } else {
                        -h.ln() - LOG_SLOPE_CAP
                    }
                },
                0.0,
                s_max,
                200,
            )
            .ok_or_else(|| WaveError::Hypothesis("psi_m slope overflows at s = 0".into()))?;
        }
        let h_step = (1.0 + s_cap / a).ln() / TABLE_CELLS as f64;
        let mut s: Vec<f64> = (0..=TABLE_CELLS).map(|k| a * (k as f64 * h_step).exp_m1()).collect();
        s[TABLE_CELLS] = s_cap;
        let dpsi = |sig: f64| 1.0 / damping.h(u_of(sig));
        let mut psi = Vec::with_capacity(s.len());
        psi.push(0.0);
        for k in 0..TABLE_CELLS {
            let (lo, hi) = (s[k], s[k + 1]);
            let scale = dpsi(0.5 * (lo + hi)) * (hi - lo);
            let inc = adaptive_simpson(dpsi, lo, hi, 1e-14 * scale);
            psi.push(psi[k] + inc);
        }
        if psi.iter().any(|v| !v.is_finite()) {
            return Err(WaveError::Hypothesis("psi_m table is not finite".into()));
        }
        let slope = s.iter().map(|&v| damping.h(u_of(v))).collect();
        Ok(Self { m, eta, a, damping, s_max: s_cap, s, psi, slope })
    }

    fn u(&self, s: f64) -> f64 {
        (s + self.a).powf(-(self.m as f64))
    }

    /// `psi_m'(s) = 1 / H((s + A)^{-m})`.
    pub fn dpsi(&self, s: f64) -> f64 {
        1.0 / self.damping.h(self.u(s))
    }

    /// `psi_m(s)`; exact integration on the cell containing `s`.
    pub fn psi(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        let k = self.s.partition_point(|&v| v <= s).saturating_sub(1).min(TABLE_CELLS);
        let lo = self.s[k];
        if s == lo {
            return self.psi[k];
        }
        let scale = self.dpsi(s) * (s - lo);
        self.psi[k] + adaptive_simpson(|v| self.dpsi(v), lo, s, 1e-14 * scale)
    }

    /// `phi_m(t)`; zero for `t <= 0`.
    pub fn phi_m(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let last = self.psi[TABLE_CELLS];
        if t >= last {
            return self.phi_beyond(t);
        }
        let guess = self.hermite(t);
        // Newton polish against the exactly integrated psi_m.
        let mut s = guess;
        for _ in 0..2 {
            let r = self.psi(s) - t;
            if r == 0.0 {
                break;
            }
            s = (s - r / self.dpsi(s)).max(0.0);
        }
        s
    }

    /// Shape-preserving cubic Hermite interpolant of the inverse table.
    fn hermite(&self, t: f64) -> f64 {
        let k = self.psi.partition_point(|&v| v <= t) - 1;
        let (t0, t1) = (self.psi[k], self.psi[k + 1]);
        let (s0, s1) = (self.s[k], self.s[k + 1]);
        let ht = t1 - t0;
        let delta = (s1 - s0) / ht;
        let (mut m0, mut m1) = (self.slope[k], self.slope[k + 1]);
        // Fritsch-Carlson limiter.
        let al = m0 / delta;
        let be = m1 / delta;
        let r2 = al * al + be * be;
        if r2 > 9.0 {
            let tau = 3.0 / r2.sqrt();
            m0 = tau * al * delta;
            m1 = tau * be * delta;
        }
        let x = (t - t0) / ht;
        let x2 = x * x;
        let x3 = x2 * x;
        let h00 = 2.0 * x3 - 3.0 * x2 + 1.0;
        let h10 = x3 - 2.0 * x2 + x;
        let h01 = -2.0 * x3 + 3.0 * x2;
        let h11 = x3 - x2;
        h00 * s0 + h10 * ht * m0 + h01 * s1 + h11 * ht * m1
    }

    fn phi_beyond(&self, t: f64) -> f64 {
        let s_n = self.s[TABLE_CELLS];
        let t_n = self.psi[TABLE_CELLS];
        let tail = |s: f64| {
            let scale = self.dpsi(s) * (s - s_n);
            t_n + adaptive_simpson(|v| self.dpsi(v), s_n, s, 1e-13 * scale.max(f64::MIN_POSITIVE)) - t
        };
        let mut hi = 2.0 * (s_n + self.a);
        while tail(hi) < 0.0 {
            hi *= 2.0;
            if !hi.is_finite() {
                return f64::INFINITY;
            }
        }
        bisect(tail, s_n, hi, 200).unwrap_or(hi)
    }

    /// `phi_m'(t) = H((phi_m(t) + A)^{-m})`.
    pub fn phi_m_prime(&self, t: f64) -> f64 {
        self.damping.h(self.u(self.phi_m(t)))
    }

    /// `phi_m''(t) = -m H'(u) (phi_m + A)^{-m-1} phi_m'`.
    pub fn phi_m_second(&self, t: f64) -> f64 {
        let s = self.phi_m(t);
        let u = self.u(s);
        let d1 = self.damping.h(u);
        -(self.m as f64) * self.damping.dh(u) * (s + self.a).powf(-(self.m as f64) - 1.0) * d1
    }

    /// `eps_m(t) = H^{-1}(phi_m'(t))`; when `H` is constant the family value
    /// `(phi_m + A)^{-m}` is used.
    pub fn eps_m(&self, t: f64) -> f64 {
        let s = self.phi_m(t);
        match self.damping.h_inverse(self.damping.h(self.u(s))) {
            Some(e) if e < self.eta => e,
            _ => self.u(s),
        }
    }

    pub fn t_m(&self) -> f64 {
        t_m_value(self.m, self.eta, &self.damping)
    }

    /// Tabulated nodes `(s_k, psi_m(s_k))`.
    pub fn table(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.s.iter().copied().zip(self.psi.iter().copied())
    }

    /// Largest `t` covered by the table.
    pub fn t_table_end(&self) -> f64 {
        self.psi[TABLE_CELLS]
    }

    /// CSV with columns `s,psi_m`.
    pub fn psi_csv(&self) -> String {
        let mut out = String::from("s,psi_m\n");
        for (s, p) in self.table() {
            out.push_str(&format!("{s},{p}\n"));
        }
        out
    }

    /// CSV with columns `t,phi_m,phi_m_prime,eps_m` at the given times.
    pub fn phi_csv(&self, times: &[f64]) -> String {
        let mut out = String::from("t,phi_m,phi_m_prime,eps_m\n");
        for &t in times {
            out.push_str(&format!("{t},{},{},{}\n", self.phi_m(t), self.phi_m_prime(t), self.eps_m(t)));
        }
        out
    }
}

impl TimeWeight for WeightFamily {
    fn phi(&self, t: f64) -> f64 {
        self.phi_m(t)
    }
    fn dphi(&self, t: f64) -> f64 {
        self.phi_m_prime(t)
    }
    fn ddphi(&self, t: f64) -> f64 {
        self.phi_m_second(t)
    }
}

/// `t_m = (2 / eta^{1/m}) / H(eta / 2^m)`.
pub fn t_m_value(m: u32, eta: f64, damping: &DampingSpec) -> f64 {
    let mf = m as f64;
    (2.0 / eta.powf(1.0 / mf)) / damping.h(eta / 2f64.powf(mf))
}

/// Quadrature and closed form of `int_S^inf phi_m' eps_m^k dt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegralCheck {
    pub quadrature: f64,
    pub closed_form: f64,
    pub relative_error: f64,
}

/// Compares `int_S^inf phi_m' eps_m^power dt` with
/// `1 / ((m power - 1)(phi_m(S) + A)^{m power - 1})`.
///
/// The substitution `s = phi_m(t)` turns the integral into
/// `int eps_m(psi_m(s))^power ds`, which is integrated panel by panel over the
/// table; the remainder beyond the table uses the exact power-law tail.
pub fn closed_form_integral_check(family: &WeightFamily, big_s: f64, power: f64) -> Result<IntegralCheck> {
    if !(big_s >= 0.0) {
        return invalid(format!("S must be nonnegative, got {big_s}"));
    }
    let mk = family.m as f64 * power;
    if !(mk > 1.0) {
        return invalid("integral diverges unless m * power > 1");
    }
    let s0 = family.phi_m(big_s);
    let closed = 1.0 / ((mk - 1.0) * (s0 + family.a).powf(mk - 1.0));
    let nodes = &family.s;
    let end = *nodes.last().unwrap();
    let mut quad = 0.0;
    if s0 < end {
        let start = nodes.partition_point(|&v| v <= s0);
        let mut lo = s0;
        for &hi in nodes[start..].iter() {
            if hi > lo {
                quad += gauss_legendre8(|s| family.eps_m(family.psi(s)).powf(power), lo, hi);
                lo = hi;
            }
        }
    }
    let from = s0.max(end);
    quad += (from + family.a).powf(1.0 - mk) / (mk - 1.0);
    Ok(IntegralCheck { quadrature: quad, closed_form: closed, relative_error: (quad - closed).abs() / closed })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthReport {
    pub checked: usize,
    pub violations: usize,
    /// Samples `s` where `phi_m(t(s)) < s`.
    pub failing_s: Vec<f64>,
}

/// For each `s >= A` with `t(s) = 2s / H((2s)^{-m})`, checks
/// `phi_m(t(s)) >= s`; polynomial presets also check
/// `phi_m(t) >= (alpha t)^{1/(m(q-1)+1)} / 2`.
pub fn growth_bound_check(family: &WeightFamily, s_samples: &[f64]) -> Result<GrowthReport> {
    let mf = family.m as f64;
    let mut failing = Vec::new();
    let mut checked = 0;
    for &s in s_samples {
        if s < family.a {
            return invalid(format!("growth samples must satisfy s >= A = {}, got {s}", family.a));
        }
        let t = 2.0 * s / family.damping.h((2.0 * s).powf(-mf));
        let phi = family.phi_m(t);
        let mut ok = phi >= s * (1.0 - 1e-10);
        if let crate::damping::DampingKind::PolynomialNearZero { q, alpha } = family.damping.kind {
            let k = mf * (q - 1.0) + 1.0;
            ok &= phi >= 0.5 * (alpha * t).powf(1.0 / k) * (1.0 - 1e-10);
        }
        checked += 1;
        if !ok {
            failing.push(s);
        }
    }
    Ok(GrowthReport { checked, violations: failing.len(), failing_s: failing })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad_family(m: u32) -> WeightFamily {
        WeightFamily::build(m, 1.0, &DampingSpec::polynomial(2.0, 1.0).unwrap(), 1e6).unwrap()
    }

    #[test]
    fn quadratic_closed_form() {
        let f = quad_family(1);
        assert!((f.psi(1.0) - 1.5).abs() < 1e-12);
        assert!((f.phi_m(1.5) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn linear_psi_is_scaled_identity() {
        let f = WeightFamily::build(2, 1.0, &DampingSpec::linear(2.0).unwrap(), 1e6).unwrap();
        for &s in &[0.1, 3.0, 1e4] {
            assert!((f.psi(s) - s / 2.0).abs() < 1e-10 * s);
            assert!((f.phi_m(s / 2.0) - s).abs() < 1e-8 * s);
        }
    }

    #[test]
    fn polynomial_inverse_matches_closed_form() {
        for m in 1..=3u32 {
            let d = DampingSpec::polynomial(3.0, 1.0).unwrap();
            let f = WeightFamily::build(m, 1.0, &d, 1e6).unwrap();
            let k = m as f64 * 2.0 + 1.0;
            for &t in &[0.01, 1.0, 37.0, 1e4, 1e9] {
                let exact = (k * t + 1.0).powf(1.0 / k) - 1.0;
                assert!((f.phi_m(t) - exact).abs() < 1e-8 * exact.max(1e-3), "m={m} t={t}");
            }
        }
    }

    #[test]
    fn round_trip_and_initial_values() {
        for d in [
            DampingSpec::polynomial(3.0, 1.0).unwrap(),
            DampingSpec::exp_flat(1.0, 1.0).unwrap(),
            DampingSpec::linear(1.0).unwrap(),
        ] {
            let f = WeightFamily::build(2, 1.0, &d, 1e6).unwrap();
            for &s in &[1e-3, 0.5, 4.0, 0.9 * f.s_max] {
                let r = f.phi_m(f.psi(s));
                assert!((r - s).abs() <= 1e-8 * s.max(1.0), "{d:?} {s}");
            }
            assert!((f.phi_m_prime(0.0) - d.h(1.0)).abs() < 1e-14);
            assert!((f.eps_m(0.0) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn eps_decreasing_and_inverse_derivative_identity() {
        let d = DampingSpec::polynomial(3.0, 1.0).unwrap();
        let f = WeightFamily::build(1, 1.0, &d, 1e6).unwrap();
        let mut prev = f64::INFINITY;
        for k in 0..200 {
            let t = 10f64.powf(-2.0 + 8.0 * k as f64 / 199.0);
            let e = f.eps_m(t);
            assert!(e < prev);
            prev = e;
            let prod = f.phi_m_prime(t) * f.dpsi(f.phi_m(t));
            assert!((prod - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn convexity_and_concavity() {
        let d = DampingSpec::exp_flat(2.0, 1.0).unwrap();
        let f = WeightFamily::build(1, 1.0, &d, 1e6).unwrap();
        let ts: Vec<f64> = (1..400).map(|k| k as f64 * 0.5).collect();
        for w in ts.windows(3) {
            let (a, b, c) = (f.phi_m(w[0]), f.phi_m(w[1]), f.phi_m(w[2]));
            assert!(a - 2.0 * b + c <= 1e-12);
        }
        let ss: Vec<f64> = (1..400).map(|k| k as f64 * 0.01).collect();
        for w in ss.windows(3) {
            assert!(f.psi(w[0]) - 2.0 * f.psi(w[1]) + f.psi(w[2]) >= -1e-10);
        }
        for &t in &[0.5, 3.0, 40.0] {
            let e = 1e-4;
            let fd = (f.phi_m_prime(t + e) - f.phi_m_prime(t - e)) / (2.0 * e);
            assert!((fd - f.phi_m_second(t)).abs() < 1e-5 * fd.abs().max(1e-6));
        }
    }

    #[test]
    fn t_m_examples() {
        let d = DampingSpec::polynomial(2.0, 1.0).unwrap();
        assert!((t_m_value(1, 1.0, &d) - 4.0).abs() < 1e-14);
        assert!((t_m_value(2, 1.0, &d) - 8.0).abs() < 1e-14);
        let l = DampingSpec::linear(3.0).unwrap();
        assert!((t_m_value(1, 1.0, &l) - 2.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn closed_form_integrals() {
        for m in 1..=3u32 {
            let f = quad_family(m);
            for &(s, pw) in &[(0.0, 2.0), (5.0, 2.0), (0.0, 3.0), (100.0, 3.0)] {
                let c = closed_form_integral_check(&f, s, pw).unwrap();
                assert!(c.relative_error < 1e-6, "m={m} S={s} k={pw}: {c:?}");
            }
        }
    }

    #[test]
    fn growth_bounds_hold() {
        for (m, q) in [(1u32, 2.0), (3, 3.0)] {
            let f = WeightFamily::build(m, 1.0, &DampingSpec::polynomial(q, 1.0).unwrap(), 1e6).unwrap();
            let s: Vec<f64> = (0..100).map(|k| f.a * 10f64.powf(3.0 * k as f64 / 99.0)).collect();
            let r = growth_bound_check(&f, &s).unwrap();
            assert_eq!(r.violations, 0, "{r:?}");
        }
        let f = WeightFamily::build(1, 1.0, &DampingSpec::linear(1.0).unwrap(), 1e6).unwrap();
        assert_eq!(growth_bound_check(&f, &[1.0, 10.0, 1e3]).unwrap().violations, 0);
    }

    #[test]
    fn rejects_decreasing_h() {
        let d = DampingSpec::exp_flat(1.0, 0.5).unwrap();
        assert!(matches!(WeightFamily::build(1, 1.0, &d, 1e6), Err(WaveError::Hypothesis(_))));
        assert!(WeightFamily::build(1, 0.4, &d, 1e6).is_ok());
    }
}
