//! Both sides of the three multiplier identities along a simulated
//! trajectory, and the auxiliary elliptic problem `v_xx = psi3 f(z)`.
//!
//! Every identity is an exact integration by parts in `t` and `x`, so the
//! reported residual measures discretisation error only. The time weight is
//! `W(t) = E(t) phi'(t)` with `W' = -D phi' + E phi''`, where `E` and `D`
//! are the energy and dissipation of the chosen potential.

use serde::Serialize;

use crate::damping::{CutoffSet, CutoffValues, Grid};
use crate::energy::{potential_dissipation, potential_energy, Potential};
use crate::error::{invalid, Result, WaveError};
use crate::quadrature::{trapz, trapz_nonuniform};
use crate::sim::{BoundaryMode, SimState, Trajectory};
use crate::weights::TimeWeight;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IdentityId {
    First,
    Second,
    Third,
}

impl IdentityId {
    pub const ALL: [IdentityId; 3] = [IdentityId::First, IdentityId::Second, IdentityId::Third];

    pub fn name(self) -> &'static str {
        match self {
            IdentityId::First => "first",
            IdentityId::Second => "second",
            IdentityId::Third => "third",
        }
    }
}

/// Node values of the solution of `v'' = s`, `v(0) = v(1) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EllipticSolution {
    pub v: Vec<f64>,
    pub source: Vec<f64>,
}

/// Green formula `v(x) = -x int_x^1 (1-y) s + (x-1) int_0^x y s` with
/// cumulative trapezoid sums.
pub fn solve_elliptic(source: &[f64]) -> Result<EllipticSolution> {
    let n_nodes = source.len();
    if n_nodes < 3 {
        return invalid("elliptic solve needs at least three nodes");
    }
    if source.iter().any(|s| !s.is_finite()) {
        return Err(WaveError::Domain("elliptic source is not finite".into()));
    }
    let n = n_nodes - 1;
    let dx = 1.0 / n as f64;
    let x = |j: usize| j as f64 * dx;
    let mut left = vec![0.0; n_nodes];
    for j in 1..n_nodes {
        left[j] = left[j - 1] + 0.5 * dx * (x(j - 1) * source[j - 1] + x(j) * source[j]);
    }
    let mut right = vec![0.0; n_nodes];
    for j in (0..n).rev() {
        right[j] = right[j + 1] + 0.5 * dx * ((1.0 - x(j)) * source[j] + (1.0 - x(j + 1)) * source[j + 1]);
    }
    let mut v: Vec<f64> = (0..n_nodes).map(|j| -x(j) * right[j] + (x(j) - 1.0) * left[j]).collect();
    v[0] = 0.0;
    v[n] = 0.0;
    Ok(EllipticSolution { v, source: source.to_vec() })
}

fn cutoff_table(cutoffs: &CutoffSet, n_nodes: usize) -> Vec<CutoffValues> {
    let dx = 1.0 / (n_nodes - 1) as f64;
    (0..n_nodes).map(|j| cutoffs.eval(j as f64 * dx)).collect()
}

fn check_f_prime(pot: Potential) -> Result<()> {
    pot.validate()?;
    if let Potential::Power(p) = pot {
        if p < 2.0 {
            return Err(WaveError::Domain(format!(
                "f' is singular for the power potential with p = {p} < 2; use the modified potential"
            )));
        }
    }
    Ok(())
}

/// `v` with source `psi3 f(z)`.
pub fn elliptic_v(state: &SimState, pot: Potential, cutoffs: &CutoffSet) -> Result<EllipticSolution> {
    let psi = cutoff_table(cutoffs, state.z.len());
    let source: Vec<f64> = state.z.iter().zip(&psi).map(|(&z, c)| c.psi3 * pot.f(z)).collect();
    solve_elliptic(&source)
}

/// `v_t` with source `psi3 f'(z) z_t`.
pub fn elliptic_time_derivative(state: &SimState, pot: Potential, cutoffs: &CutoffSet) -> Result<EllipticSolution> {
    check_f_prime(pot)?;
    let psi = cutoff_table(cutoffs, state.z.len());
    let source: Vec<f64> = (0..state.z.len()).map(|j| psi[j].psi3 * pot.f_prime(state.z[j]) * state.zt(j)).collect();
    solve_elliptic(&source)
}

/// Potential, cutoffs and time interval shared by the identity evaluations.
#[derive(Debug, Clone, Copy)]
pub struct IdentitySetup {
    pub pot: Potential,
    pub cutoffs: CutoffSet,
    pub s: f64,
    pub t: f64,
}

impl IdentitySetup {
    pub fn new(p: f64, s: f64, t: f64) -> Result<Self> {
        Ok(Self { pot: Potential::natural(p)?, cutoffs: CutoffSet::default(), s, t })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiplierReport {
    pub id: IdentityId,
    #[serde(rename = "S")]
    pub s: f64,
    #[serde(rename = "T")]
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    /// Residual over `E(S)^2 phi'(S)`.
    pub normalized: f64,
    pub n_cells: usize,
}

/// Space integrals of one snapshot.
#[derive(Debug, Clone, Copy, Default)]
struct SliceTerms {
    t: f64,
    e: f64,
    d: f64,
    x1: f64,
    a1: f64,
    y1: f64,
    b1: f64,
    l2: f64,
    x2: f64,
    p2: f64,
    q2: f64,
    r2: f64,
    l3: f64,
    x3: f64,
    v3: f64,
    a3: f64,
}

fn slice_terms(
    state: &SimState,
    traj: &Trajectory,
    pot: Potential,
    cutoffs: &CutoffSet,
    psi: &[CutoffValues],
) -> Result<SliceTerms> {
    let n_nodes = state.rho.len();
    let dx = traj.grid.dx();
    let a = &traj.coeff.a_values;
    let v = elliptic_v(state, pot, cutoffs)?.v;
    let vt = elliptic_time_derivative(state, pot, cutoffs)?.v;
    let mut cols = vec![[0.0f64; 12]; n_nodes];
    for j in 0..n_nodes {
        let x = j as f64 * dx;
        let c = psi[j];
        let (r, xi, z) = (state.rho[j], state.xi[j], state.z[j]);
        let w = 0.5 * (r - xi);
        let gw = traj.damping.g(w);
        let (fr, fx) = (pot.f(r), pot.f(xi));
        let (big_r, big_x) = (pot.big_f(r), pot.big_f(xi));
        cols[j] = [
            x * c.psi1 * (big_x - big_r),
            (1.0 - c.psi1 - x * c.dpsi1) * (big_r + big_x),
            x * a[j] * c.psi1 * gw * (fr + fx),
            c.psi2 * (r * fr + xi * fx),
            c.psi2 * z * (fx - fr),
            c.dpsi2 * z * (fr + fx),
            c.psi2 * a[j] * gw * z * (pot.f_prime(r) + pot.f_prime(xi)),
            c.psi2 * w * (fr - fx),
            2.0 * c.psi3 * z * pot.f(z),
            v[j] * (r - xi),
            vt[j] * (r - xi),
            2.0 * a[j] * v[j] * gw,
        ];
    }
    let col = |k: usize| trapz(&cols.iter().map(|c| c[k]).collect::<Vec<_>>(), dx);
    let n = n_nodes - 1;
    Ok(SliceTerms {
        t: state.t,
        e: potential_energy(state, pot),
        d: potential_dissipation(state, &traj.damping, &traj.coeff, pot),
        x1: col(0),
        a1: col(1),
        y1: col(2),
        b1: psi[n].psi1 * (pot.big_f(state.rho[n]) + pot.big_f(state.xi[n])),
        l2: col(3),
        x2: col(4),
        p2: col(5),
        q2: col(6),
        r2: col(7),
        l3: col(8),
        x3: col(9),
        v3: col(10),
        a3: col(11),
    })
}

/// Snapshot terms on `[S, T]` together with `W` and `W'`.
struct Window {
    terms: Vec<SliceTerms>,
    times: Vec<f64>,
    w: Vec<f64>,
    dw: Vec<f64>,
    scale: f64,
}

impl Window {
    fn integral(&self, f: impl Fn(&SliceTerms, f64, f64) -> f64) -> f64 {
        let y: Vec<f64> = self.terms.iter().zip(self.w.iter().zip(&self.dw)).map(|(s, (&w, &dw))| f(s, w, dw)).collect();
        trapz_nonuniform(&self.times, &y)
    }

    fn bracket(&self, f: impl Fn(&SliceTerms) -> f64) -> f64 {
        let k = self.terms.len() - 1;
        self.w[k] * f(&self.terms[k]) - self.w[0] * f(&self.terms[0])
    }
}

fn build_window<W: TimeWeight + ?Sized>(traj: &Trajectory, weight: &W, setup: &IdentitySetup) -> Result<Window> {
    if traj.mode != BoundaryMode::Dirichlet {
        return invalid("multiplier identities are stated for the distributed-damping problem");
    }
    setup.pot.validate()?;
    check_f_prime(setup.pot)?;
    let (s, t) = (setup.s, setup.t);
    if !(s >= 0.0 && t > s) {
        return invalid(format!("need 0 <= S < T, got S = {s}, T = {t}"));
    }
    let tol = 1e-9 * traj.grid.dt();
    let inside: Vec<&SimState> = traj.snapshots.iter().filter(|st| st.t >= s - tol && st.t <= t + tol).collect();
    let dt_snap = traj.snapshot_dt();
    let on_grid = |v: f64| inside.iter().any(|st| (st.t - v).abs() <= tol);
    if inside.len() < 3 || !on_grid(s) || !on_grid(t) {
        let needed = ((t - s) / (2.0 * traj.grid.dt())).floor().max(1.0);
        return Err(WaveError::Samples(format!(
            "[S, T] = [{s}, {t}] needs snapshots at both ends and at least three inside; \
             have spacing {dt_snap}, use a stride dividing the interval with stride <= {needed}"
        )));
    }
    let psi = cutoff_table(&setup.cutoffs, traj.grid.n_nodes());
    let terms = inside
        .iter()
        .map(|st| slice_terms(st, traj, setup.pot, &setup.cutoffs, &psi))
        .collect::<Result<Vec<_>>>()?;
    let times: Vec<f64> = terms.iter().map(|x| x.t).collect();
    let w: Vec<f64> = terms.iter().map(|x| x.e * weight.dphi(x.t)).collect();
    let dw: Vec<f64> = terms.iter().map(|x| -x.d * weight.dphi(x.t) + x.e * weight.ddphi(x.t)).collect();
    let scale = terms[0].e * terms[0].e * weight.dphi(terms[0].t);
    Ok(Window { terms, times, w, dw, scale })
}

fn report(win: &Window, id: IdentityId, setup: &IdentitySetup, grid: &Grid) -> MultiplierReport {
    let (lhs, rhs) = match id {
        IdentityId::First => (
            win.integral(|s, w, _| w * s.e),
            win.bracket(|s| s.x1) + win.integral(|s, w, dw| w * s.a1 - dw * s.x1 - w * s.y1 + w * s.b1),
        ),
        IdentityId::Second => (
            win.integral(|s, w, _| w * s.l2),
            win.bracket(|s| s.x2) + win.integral(|s, w, dw| -dw * s.x2 - w * s.p2 - w * s.q2 + 2.0 * w * s.r2),
        ),
        IdentityId::Third => (
            win.integral(|s, w, _| w * s.l3),
            win.bracket(|s| s.x3) + win.integral(|s, w, dw| -dw * s.x3 - w * s.v3 + w * s.a3),
        ),
    };
    let residual = (lhs - rhs).abs();
    let normalized = if win.scale > 0.0 { residual / win.scale } else { 0.0 };
    MultiplierReport { id, s: setup.s, t: setup.t, lhs, rhs, residual, normalized, n_cells: grid.n_cells }
}

/// Evaluates one identity on `[S, T]`; both ends must be snapshot times.
pub fn identity_residual<W: TimeWeight + ?Sized>(
    traj: &Trajectory,
    id: IdentityId,
    weight: &W,
    setup: &IdentitySetup,
) -> Result<MultiplierReport> {
    let win = build_window(traj, weight, setup)?;
    Ok(report(&win, id, setup, &traj.grid))
}

/// All three identities sharing one pass over the snapshots.
pub fn all_identity_residuals<W: TimeWeight + ?Sized>(
    traj: &Trajectory,
    weight: &W,
    setup: &IdentitySetup,
) -> Result<Vec<MultiplierReport>> {
    let win = build_window(traj, weight, setup)?;
    Ok(IdentityId::ALL.iter().map(|&id| report(&win, id, setup, &traj.grid)).collect())
}

/// The first estimate evaluated term by term. `slack >= 0` means it holds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FirstEstimateSlack {
    pub lhs: f64,
    pub initial_term: f64,
    /// `sup |1 - (x psi1)'|`.
    pub c1: f64,
    pub localized_term: f64,
    pub damping_term: f64,
    /// `int W (F(rho) + F(xi))` at `x = 1`, absent from the estimate as stated.
    pub boundary_term: f64,
    pub slack: f64,
}

pub fn first_estimate_slack<W: TimeWeight + ?Sized>(
    traj: &Trajectory,
    weight: &W,
    setup: &IdentitySetup,
) -> Result<FirstEstimateSlack> {
    let win = build_window(traj, weight, setup)?;
    let dx = traj.grid.dx();
    let c1 = (0..traj.grid.n_nodes())
        .map(|j| {
            let x = j as f64 * dx;
            let c = setup.cutoffs.eval(x);
            (1.0 - c.psi1 - x * c.dpsi1).abs()
        })
        .fold(0.0, f64::max);
    let lhs = win.integral(|s, w, _| w * s.e);
    let initial_term = 3.5 * win.scale;
    let localized_term = c1 * win.integral(|s, w, _| w * s.l2);
    let damping_term = -win.integral(|s, w, _| w * s.y1);
    let boundary_term = win.integral(|s, w, _| w * s.b1);
    Ok(FirstEstimateSlack {
        lhs,
        initial_term,
        c1,
        localized_term,
        damping_term,
        boundary_term,
        slack: initial_term + localized_term + damping_term - lhs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LqRatioReport {
    pub q: f64,
    pub max_ratio: f64,
    /// Ratio at the first snapshot with nonzero energy.
    pub initial_ratio: Option<f64>,
    pub samples: usize,
    pub skipped: usize,
}

/// `int |v|^q dx / E_p` for one state; `None` when `E_p < 1e-300`.
pub fn vlq_ratio(state: &SimState, p: f64, cutoffs: &CutoffSet) -> Result<Option<f64>> {
    if !(p > 2.0 && p.is_finite()) {
        return invalid(format!("the L^q bound on v needs p > 2, got {p}"));
    }
    let pot = Potential::Power(p);
    let e = potential_energy(state, pot);
    if e < 1e-300 {
        return Ok(None);
    }
    let q = p / (p - 1.0);
    let v = elliptic_v(state, pot, cutoffs)?.v;
    let dx = 1.0 / (v.len() - 1) as f64;
    let vq: Vec<f64> = v.iter().map(|x| x.abs().powf(q)).collect();
    Ok(Some(trapz(&vq, dx) / e))
}

/// `max_t int |v|^q / E_p(t)` over the snapshots, `q = p/(p-1)`.
pub fn estimate_ratio_vlq(traj: &Trajectory, p: f64, cutoffs: &CutoffSet) -> Result<LqRatioReport> {
    let mut max_ratio: f64 = 0.0;
    let mut initial_ratio = None;
    let (mut samples, mut skipped) = (0, 0);
    for st in &traj.snapshots {
        match vlq_ratio(st, p, cutoffs)? {
            Some(r) => {
                initial_ratio.get_or_insert(r);
                max_ratio = max_ratio.max(r);
                samples += 1;
            }
            None => skipped += 1,
        }
    }
    Ok(LqRatioReport { q: p / (p - 1.0), max_ratio, initial_ratio, samples, skipped })
}
