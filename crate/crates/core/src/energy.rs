//! Energy functionals, the dissipation rate and the discrete residual of the
//! energy balance `E' = -D`.

use serde::Serialize;

use crate::convex::{big_f_tilde, check_sub_quadratic, f_tilde, f_tilde_prime};
use crate::damping::{CoefficientProfile, DampingSpec};
use crate::error::{invalid, Result, WaveError};
use crate::quadrature::trapz_by;
use crate::sim::{SimState, Trajectory};

/// `sgn(x) |x|^r`, unchecked.
#[inline]
pub fn spow(x: f64, r: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else if r == 1.0 {
        x
    } else if r == 2.0 {
        x * x.abs()
    } else {
        x.signum() * x.abs().powf(r)
    }
}

pub fn signed_power(x: f64, r: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(WaveError::Domain(format!("signed power needs r >= 0, got {r}")));
    }
    if r == 0.0 {
        return Ok(if x == 0.0 { 0.0 } else { x.signum() });
    }
    Ok(spow(x, r))
}

#[inline]
fn abs_pow(x: f64, p: f64) -> f64 {
    let a = x.abs();
    if p == 2.0 {
        a * a
    } else if p == 3.0 {
        a * a * a
    } else if p == 4.0 {
        let b = a * a;
        b * b
    } else {
        a.powf(p)
    }
}

fn check_p(p: f64) -> Result<()> {
    if p.is_finite() && p > 1.0 {
        Ok(())
    } else {
        Err(WaveError::Domain(format!("energy exponent must satisfy 1 < p < inf, got {p}")))
    }
}

fn dx_of(state: &SimState) -> f64 {
    1.0 / (state.rho.len() - 1) as f64
}

/// A convex, even potential `F` with `F' = f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Potential {
    /// `F(y) = |y|^p / p`.
    Power(f64),
    /// The shifted potential `F~` for `1 < p < 2`.
    Modified(f64),
    /// `F(y) = cosh(y) - 1`.
    Cosh,
}

impl Potential {
    /// `Power(p)` for `p >= 2`, `Modified(p)` below.
    pub fn natural(p: f64) -> Result<Self> {
        check_p(p)?;
        Ok(if p >= 2.0 { Potential::Power(p) } else { Potential::Modified(p) })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Potential::Power(p) => check_p(p),
            Potential::Modified(p) => check_sub_quadratic(p),
            Potential::Cosh => Ok(()),
        }
    }

    #[inline]
    pub fn big_f(&self, y: f64) -> f64 {
        match *self {
            Potential::Power(p) => abs_pow(y, p) / p,
            Potential::Modified(p) => big_f_tilde(y, p),
            Potential::Cosh => y.cosh() - 1.0,
        }
    }

    #[inline]
    pub fn f(&self, y: f64) -> f64 {
        match *self {
            Potential::Power(p) => spow(y, p - 1.0),
            Potential::Modified(p) => f_tilde(y, p),
            Potential::Cosh => y.sinh(),
        }
    }

    /// `f'(y)`; for `Power(p)` with `p < 2` this is singular at 0.
    #[inline]
    pub fn f_prime(&self, y: f64) -> f64 {
        match *self {
            Potential::Power(p) => {
                if p == 2.0 {
                    1.0
                } else {
                    (p - 1.0) * abs_pow(y, p - 2.0)
                }
            }
            Potential::Modified(p) => f_tilde_prime(y, p),
            Potential::Cosh => y.cosh(),
        }
    }
}

/// `int F(rho) + F(xi)` by the trapezoid rule.
pub fn potential_energy(state: &SimState, pot: Potential) -> f64 {
    let dx = dx_of(state);
    trapz_by(state.rho.len(), dx, |j| pot.big_f(state.rho[j]) + pot.big_f(state.xi[j]))
}

/// `int a g((rho-xi)/2) (f(rho) - f(xi))`.
pub fn potential_dissipation(
    state: &SimState,
    damping: &DampingSpec,
    a: &CoefficientProfile,
    pot: Potential,
) -> f64 {
    let dx = dx_of(state);
    trapz_by(state.rho.len(), dx, |j| {
        let aj = a.a_values[j];
        if aj == 0.0 {
            return 0.0;
        }
        let (r, x) = (state.rho[j], state.xi[j]);
        aj * damping.g(0.5 * (r - x)) * (pot.f(r) - pot.f(x))
    })
}

/// `E_p = (1/p) int |rho|^p + |xi|^p`.
pub fn energy_ep(state: &SimState, p: f64) -> Result<f64> {
    check_p(p)?;
    Ok(potential_energy(state, Potential::Power(p)))
}

/// `(1/p) int |z_x|^p + |z_t|^p`.
pub fn energy_cal_ep(state: &SimState, p: f64) -> Result<f64> {
    check_p(p)?;
    let dx = dx_of(state);
    Ok(trapz_by(state.rho.len(), dx, |j| abs_pow(state.zx(j), p) + abs_pow(state.zt(j), p)) / p)
}

/// `int F~(rho) + F~(xi)`, defined for `1 < p < 2`.
pub fn energy_etilde(state: &SimState, p: f64) -> Result<f64> {
    if !(p > 1.0 && p < 2.0) {
        return Err(WaveError::Domain(format!("modified energy needs 1 < p < 2, got {p}")));
    }
    Ok(potential_energy(state, Potential::Modified(p)))
}

/// `D = int a g((rho-xi)/2) (sgn(rho)|rho|^{p-1} - sgn(xi)|xi|^{p-1})`.
pub fn dissipation_rate(state: &SimState, damping: &DampingSpec, a: &CoefficientProfile, p: f64) -> Result<f64> {
    check_p(p)?;
    Ok(potential_dissipation(state, damping, a, Potential::Power(p)))
}

/// Boundary dissipation `F(xi(1)) - F(rho(1))` of the damped boundary.
pub fn boundary_flux(state: &SimState, p: f64) -> Result<f64> {
    check_p(p)?;
    let n = state.rho.len() - 1;
    let pot = Potential::Power(p);
    Ok(pot.big_f(state.xi[n]) - pot.big_f(state.rho[n]))
}

/// Node fractions of `|rho-xi| <= 2 eps`, `2 eps < |rho-xi| <= 2 eta` and
/// `|rho-xi| > 2 eta`.
pub fn region_measures(state: &SimState, eps: f64, eta: f64) -> Result<(f64, f64, f64)> {
    if !(eps > 0.0 && eps <= eta) {
        return Err(WaveError::Domain(format!("need 0 < eps <= eta, got eps = {eps}, eta = {eta}")));
    }
    let n = state.rho.len();
    let (mut c1, mut c2, mut c3) = (0usize, 0usize, 0usize);
    for j in 0..n {
        let d = (state.rho[j] - state.xi[j]).abs();
        if d <= 2.0 * eps {
            c1 += 1;
        } else if d <= 2.0 * eta {
            c2 += 1;
        } else {
            c3 += 1;
        }
    }
    let nf = n as f64;
    Ok((c1 as f64 / nf, c2 as f64 / nf, c3 as f64 / nf))
}

/// Per-step residuals of the energy balance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualSeries {
    pub values: Vec<f64>,
    pub max: f64,
    /// `sqrt(sum r_n^2 dt)`.
    pub l2: f64,
}

/// `r_n = |(E(t_{n+1}) - E(t_n))/dt + (D(t_n) + D(t_{n+1}))/2|` between
/// consecutive snapshots. Boundary-damped trajectories use the boundary flux
/// in place of `D`.
pub fn dissipation_residual(traj: &Trajectory, p: f64) -> Result<ResidualSeries> {
    dissipation_residual_with(traj, Potential::Power(p))
}

pub fn dissipation_residual_with(traj: &Trajectory, pot: Potential) -> Result<ResidualSeries> {
    pot.validate()?;
    if traj.snapshots.len() < 2 {
        return invalid("dissipation residual needs at least two snapshots");
    }
    let rate = |s: &SimState| match traj.mode {
        crate::sim::BoundaryMode::Dirichlet => potential_dissipation(s, &traj.damping, &traj.coeff, pot),
        crate::sim::BoundaryMode::Damped => {
            let n = s.rho.len() - 1;
            pot.big_f(s.xi[n]) - pot.big_f(s.rho[n])
        }
    };
    let mut prev_e = potential_energy(&traj.snapshots[0], pot);
    let mut prev_d = rate(&traj.snapshots[0]);
    let mut values = Vec::with_capacity(traj.snapshots.len() - 1);
    for w in traj.snapshots.windows(2) {
        let dt = w[1].t - w[0].t;
        let e = potential_energy(&w[1], pot);
        let d = rate(&w[1]);
        values.push(((e - prev_e) / dt + 0.5 * (prev_d + d)).abs());
        prev_e = e;
        prev_d = d;
    }
    let dt = traj.snapshot_dt();
    let max = values.iter().cloned().fold(0.0, f64::max);
    let l2 = (values.iter().map(|r| r * r).sum::<f64>() * dt).sqrt();
    Ok(ResidualSeries { values, max, l2 })
}

/// One row of the energy trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub t: f64,
    pub e_p: f64,
    pub cal_e_p: f64,
    /// `None` outside `1 < p < 2`.
    pub etilde_p: Option<f64>,
    pub dissipation: f64,
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
}

/// Energies, dissipation and region measures per snapshot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyTrace {
    pub p: f64,
    pub rows: Vec<TraceRow>,
}

impl EnergyTrace {
    pub fn new(p: f64) -> Result<Self> {
        check_p(p)?;
        Ok(Self { p, rows: Vec::new() })
    }

    /// Appends one row; `eps` is the partition threshold at `state.t`.
    pub fn push(
        &mut self,
        state: &SimState,
        damping: &DampingSpec,
        a: &CoefficientProfile,
        eps: f64,
    ) -> Result<()> {
        let p = self.p;
        let eta = damping.eta;
        let (m1, m2, m3) = region_measures(state, eps.min(eta), eta)?;
        self.rows.push(TraceRow {
            t: state.t,
            e_p: energy_ep(state, p)?,
            cal_e_p: energy_cal_ep(state, p)?,
            etilde_p: if p < 2.0 { Some(energy_etilde(state, p)?) } else { None },
            dissipation: dissipation_rate(state, damping, a, p)?,
            m1,
            m2,
            m3,
        });
        Ok(())
    }

    /// Builds a trace with a fixed partition threshold `eps`.
    pub fn from_trajectory(traj: &Trajectory, p: f64, eps: f64) -> Result<Self> {
        let mut tr = Self::new(p)?;
        for s in &traj.snapshots {
            tr.push(s, &traj.damping, &traj.coeff, eps)?;
        }
        Ok(tr)
    }

    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }

    pub fn energies(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.e_p).collect()
    }

    /// Largest single-step increase of `E_p` relative to `E_p(0)`.
    pub fn max_relative_increase(&self) -> f64 {
        let e0 = self.rows.first().map(|r| r.e_p).unwrap_or(0.0);
        if e0 == 0.0 {
            return 0.0;
        }
        self.rows.windows(2).map(|w| (w[1].e_p - w[0].e_p) / e0).fold(f64::NEG_INFINITY, f64::max)
    }

    /// CSV with columns `t,E_p,calE_p,Etilde_p,dissipation,m1,m2,m3`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,E_p,calE_p,Etilde_p,dissipation,m1,m2,m3\n");
        for r in &self.rows {
            let et = r.etilde_p.map(|v| v.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.t, r.e_p, r.cal_e_p, et, r.dissipation, r.m1, r.m2, r.m3
            ));
        }
        out
    }
}
