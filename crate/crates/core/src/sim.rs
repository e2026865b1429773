//! Riemann-invariant time stepper.
//!
//! With `dt = dx` transport is an exact index shift: `rho` moves one cell
//! left and `xi` one cell right. The damping source acts pointwise on
//! `w = (rho - xi) / 2` while `u = (rho + xi) / 2` is frozen, and is applied
//! as half steps on either side of the shift. The primitive `z` is advanced
//! with `z_t = w` evaluated at the half step.

use serde::Serialize;

use crate::damping::{CoefficientProfile, DampingSpec, Grid};
use crate::error::{invalid, Result, WaveError};
use crate::quadrature::bisect;

/// How the boundary at `x = 1` closes the system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BoundaryMode {
    /// Homogeneous Dirichlet at both ends; damping acts through `a(x)`.
    Dirichlet,
    /// Dirichlet at `x = 0`, `z_x + g(z_t) = 0` at `x = 1`; requires `a = 0`.
    Damped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimState {
    pub t: f64,
    pub step: u64,
    pub rho: Vec<f64>,
    pub xi: Vec<f64>,
    pub z: Vec<f64>,
}

impl SimState {
    pub fn zeros(grid: &Grid) -> Self {
        let n = grid.n_nodes();
        Self { t: 0.0, step: 0, rho: vec![0.0; n], xi: vec![0.0; n], z: vec![0.0; n] }
    }

    /// `z_t = (rho - xi) / 2` at node `j`.
    pub fn zt(&self, j: usize) -> f64 {
        0.5 * (self.rho[j] - self.xi[j])
    }

    /// `z_x = (rho + xi) / 2` at node `j`.
    pub fn zx(&self, j: usize) -> f64 {
        0.5 * (self.rho[j] + self.xi[j])
    }

    pub fn is_finite(&self) -> bool {
        self.rho.iter().chain(&self.xi).chain(&self.z).all(|v| v.is_finite())
    }
}

/// Initial profiles sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    pub grid: Grid,
    pub z0: Vec<f64>,
    pub rho0: Vec<f64>,
    pub xi0: Vec<f64>,
}

impl InitialData {
    /// Builds `rho0 = z0' + z1`, `xi0 = z0' - z1` from analytic profiles.
    pub fn from_profiles(
        grid: Grid,
        z0: impl Fn(f64) -> f64,
        dz0: impl Fn(f64) -> f64,
        z1: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let xs = grid.nodes();
        let z0v: Vec<f64> = xs.iter().map(|&x| z0(x)).collect();
        if z0v[0].abs() > 1e-14 || z1(0.0).abs() > 1e-14 {
            return invalid("initial data must vanish at x = 0");
        }
        let rho0: Vec<f64> = xs.iter().map(|&x| dz0(x) + z1(x)).collect();
        let xi0: Vec<f64> = xs.iter().map(|&x| dz0(x) - z1(x)).collect();
        if rho0.iter().chain(&xi0).chain(&z0v).any(|v| !v.is_finite()) {
            return invalid("initial data must be finite");
        }
        let mut z0v = z0v;
        z0v[0] = 0.0;
        Ok(Self { grid, z0: z0v, rho0, xi0 })
    }

    /// `z0 = A sin(pi x)`, `z1 = B sin(2 pi x)`.
    pub fn standing(grid: Grid, amplitude: f64, velocity_amplitude: f64) -> Result<Self> {
        use std::f64::consts::PI;
        let mut d = Self::from_profiles(
            grid,
            |x| amplitude * (PI * x).sin(),
            |x| amplitude * PI * (PI * x).cos(),
            |x| velocity_amplitude * (2.0 * PI * x).sin(),
        )?;
        // sin(pi) is not exactly zero in floating point.
        let n = grid.n_cells;
        d.z0[n] = 0.0;
        let v = 0.5 * (d.rho0[n] + d.xi0[n]);
        d.rho0[n] = v;
        d.xi0[n] = v;
        let v = 0.5 * (d.rho0[0] + d.xi0[0]);
        d.rho0[0] = v;
        d.xi0[0] = v;
        Ok(d)
    }

    /// `z0 = A sin(pi x / 2)`, `z1 = 0`; compatible with the damped boundary.
    pub fn quarter_wave(grid: Grid, amplitude: f64) -> Result<Self> {
        use std::f64::consts::FRAC_PI_2;
        let mut d = Self::from_profiles(
            grid,
            |x| amplitude * (FRAC_PI_2 * x).sin(),
            |x| amplitude * FRAC_PI_2 * (FRAC_PI_2 * x).cos(),
            |_| 0.0,
        )?;
        let n = grid.n_cells;
        d.rho0[n] = 0.0;
        d.xi0[n] = 0.0;
        Ok(d)
    }

    pub fn zeros(grid: Grid) -> Self {
        let n = grid.n_nodes();
        Self { grid, z0: vec![0.0; n], rho0: vec![0.0; n], xi0: vec![0.0; n] }
    }

    pub fn state(&self) -> SimState {
        SimState {
            t: 0.0,
            step: 0,
            rho: self.rho0.clone(),
            xi: self.xi0.clone(),
            z: self.z0.clone(),
        }
    }
}

/// Solves `rho + xi + 2 g((rho - xi) / 2) = 0` for `rho`.
pub fn damped_reflection(damping: &DampingSpec, xi: f64) -> Result<f64> {
    if xi == 0.0 {
        return Ok(0.0);
    }
    // The residual is increasing in rho and changes sign on [-|xi|, |xi|].
    let r = |rho: f64| rho + xi + 2.0 * damping.g(0.5 * (rho - xi));
    let m = xi.abs();
    bisect(r, -m, m, 200).ok_or_else(|| {
        WaveError::RootSolve(format!("boundary reflection did not bracket a root for xi = {xi}"))
    })
}

/// Owns a state and advances it one step at a time.
#[derive(Debug, Clone)]
pub struct Simulator {
    pub grid: Grid,
    pub damping: DampingSpec,
    pub coeff: CoefficientProfile,
    pub mode: BoundaryMode,
    state: SimState,
    active: Vec<usize>,
}

impl Simulator {
    pub fn new(
        init: &InitialData,
        damping: DampingSpec,
        coeff: CoefficientProfile,
        mode: BoundaryMode,
    ) -> Result<Self> {
        Self::from_state(init.grid, init.state(), damping, coeff, mode)
    }

    pub fn from_state(
        grid: Grid,
        state: SimState,
        damping: DampingSpec,
        coeff: CoefficientProfile,
        mode: BoundaryMode,
    ) -> Result<Self> {
        let n = grid.n_nodes();
        if state.rho.len() != n || state.xi.len() != n || state.z.len() != n {
            return invalid("state length does not match grid");
        }
        if coeff.n_nodes() != n {
            return invalid("coefficient profile does not match grid");
        }
        if mode == BoundaryMode::Damped && !coeff.is_zero() {
            return invalid("boundary-damped mode requires a = 0");
        }
        let active = (0..n).filter(|&j| coeff.a_values[j] > 0.0).collect();
        Ok(Self { grid, damping, coeff, mode, state, active })
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    /// Mutable access for fault injection and restarts.
    pub fn state_mut(&mut self) -> &mut SimState {
        &mut self.state
    }

    pub fn into_state(self) -> SimState {
        self.state
    }

    fn half_source(&mut self) {
        let tau = 0.5 * self.grid.dt();
        let g = &self.damping;
        let s = &mut self.state;
        for &j in &self.active {
            let w = 0.5 * (s.rho[j] - s.xi[j]);
            if w == 0.0 {
                continue;
            }
            let u = 0.5 * (s.rho[j] + s.xi[j]);
            let k = tau * self.coeff.a_values[j];
            let k1 = -g.g(w);
            let k2 = -g.g(w + 0.5 * k * k1);
            let k3 = -g.g(w + 0.5 * k * k2);
            let k4 = -g.g(w + k * k3);
            let w_new = w + k / 6.0 * (k1 + 2.0 * (k2 + k3) + k4);
            s.rho[j] = u + w_new;
            s.xi[j] = u - w_new;
        }
    }

    fn reflect_right(&self, xi: f64) -> Result<f64> {
        match self.mode {
            BoundaryMode::Dirichlet => Ok(xi),
            BoundaryMode::Damped => damped_reflection(&self.damping, xi),
        }
    }

    /// Advances one time step of length `dt`.
    pub fn step(&mut self) -> Result<()> {
        let n = self.grid.n_cells;
        let dt = self.grid.dt();
        self.half_source();

        // z at the half step; ghost values come from the reflections.
        let ghost_right = self.reflect_right(self.state.xi[n - 1])?;
        {
            let s = &mut self.state;
            for j in 0..=n {
                let rho_r = if j < n { s.rho[j + 1] } else { ghost_right };
                let xi_l = if j > 0 { s.xi[j - 1] } else { s.rho[1] };
                let w_mid = 0.25 * ((s.rho[j] + rho_r) - (s.xi[j] + xi_l));
                s.z[j] += dt * w_mid;
            }
            s.z[0] = 0.0;
            if self.mode == BoundaryMode::Dirichlet {
                s.z[n] = 0.0;
            }

            s.rho.copy_within(1..=n, 0);
            s.xi.copy_within(0..n, 1);
            s.xi[0] = s.rho[0];
        }
        self.state.rho[n] = self.reflect_right(self.state.xi[n])?;

        self.half_source();
        let s = &mut self.state;
        s.step += 1;
        s.t = s.step as f64 * dt;
        if !s.is_finite() {
            return Err(WaveError::Blowup { t: s.t, what: format!("non-finite state at step {}", s.step) });
        }
        Ok(())
    }
}

/// One distributed-damping step on a copy of `state`.
pub fn step(
    state: &SimState,
    damping: &DampingSpec,
    a: &CoefficientProfile,
    grid: &Grid,
) -> Result<SimState> {
    if !state.is_finite() {
        return Err(WaveError::Blowup { t: state.t, what: format!("non-finite input at step {}", state.step) });
    }
    let mut sim = Simulator::from_state(*grid, state.clone(), damping.clone(), a.clone(), BoundaryMode::Dirichlet)?;
    sim.step()?;
    Ok(sim.into_state())
}

/// One boundary-damped step on a copy of `state`.
pub fn step_boundary_damped(state: &SimState, damping: &DampingSpec, grid: &Grid) -> Result<SimState> {
    if !state.is_finite() {
        return Err(WaveError::Blowup { t: state.t, what: format!("non-finite input at step {}", state.step) });
    }
    let a = CoefficientProfile::zero(grid);
    let mut sim = Simulator::from_state(*grid, state.clone(), damping.clone(), a, BoundaryMode::Damped)?;
    sim.step()?;
    Ok(sim.into_state())
}

/// Everything needed to reproduce a run besides the initial data.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub damping: DampingSpec,
    pub coeff: CoefficientProfile,
    pub mode: BoundaryMode,
    pub t_final: f64,
    pub stride: usize,
}

impl RunSpec {
    pub fn n_steps(&self, grid: &Grid) -> Result<u64> {
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return invalid(format!("t_final must be finite and nonnegative, got {}", self.t_final));
        }
        if self.stride == 0 {
            return invalid("snapshot stride must be positive");
        }
        Ok((self.t_final / grid.dt()).round() as u64)
    }
}

/// Snapshots plus the data needed to evaluate identities along them.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: Grid,
    pub damping: DampingSpec,
    pub coeff: CoefficientProfile,
    pub mode: BoundaryMode,
    /// Number of steps between consecutive snapshots.
    pub stride: usize,
    pub snapshots: Vec<SimState>,
}

impl Trajectory {
    /// Time between consecutive snapshots.
    pub fn snapshot_dt(&self) -> f64 {
        self.stride as f64 * self.grid.dt()
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    /// Snapshot CSV with columns `t,x,rho,xi,z`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,x,rho,xi,z\n");
        for s in &self.snapshots {
            for j in 0..self.grid.n_nodes() {
                out.push_str(&format!("{},{},{},{},{}\n", s.t, self.grid.x(j), s.rho[j], s.xi[j], s.z[j]));
            }
        }
        out
    }
}

/// Runs to `t_final`, calling `observe` on the initial state and after
/// every `stride` steps. The final state is always observed.
pub fn run_with<F: FnMut(&SimState) -> Result<()>>(
    init: &InitialData,
    spec: &RunSpec,
    mut observe: F,
) -> Result<SimState> {
    let n_steps = spec.n_steps(&init.grid)?;
    let mut sim = Simulator::new(init, spec.damping.clone(), spec.coeff.clone(), spec.mode)?;
    observe(sim.state())?;
    for k in 1..=n_steps {
        sim.step()?;
        if k % spec.stride as u64 == 0 || k == n_steps {
            observe(sim.state())?;
        }
    }
    Ok(sim.into_state())
}

/// Runs and collects every observed snapshot.
pub fn run(init: &InitialData, spec: &RunSpec) -> Result<Trajectory> {
    let mut snapshots = Vec::new();
    run_with(init, spec, |s| {
        snapshots.push(s.clone());
        Ok(())
    })?;
    Ok(Trajectory {
        grid: init.grid,
        damping: spec.damping.clone(),
        coeff: spec.coeff.clone(),
        mode: spec.mode,
        stride: spec.stride,
        snapshots,
    })
}
