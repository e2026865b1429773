//! `wavelab run`: simulate one scenario and write its artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use wavelab::decay::{default_window, fit, theoretical_target, DecayFitReport, DecayModel, DecayTarget, FitWindow, Regime};
use wavelab::energy::{energy_ep, EnergyTrace};
use wavelab::multiplier::{all_identity_residuals, IdentitySetup, MultiplierReport};
use wavelab::sim::{run, Simulator};
use wavelab::weights::WeightFamily;
use wavelab::{BoundaryMode, RunSpec};

use crate::config::{RunConfig, Scenario};
use crate::CliError;

/// Step increases of `E_p` above this fraction of `E_p(0)` count as
/// monotonicity failures.
pub const MONOTONE_TOL: f64 = 1e-12;

/// Raw output of the stepping loop.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub trace: EnergyTrace,
    /// Snapshot CSV, when requested.
    pub snapshots_csv: Option<String>,
    pub n_steps: u64,
    /// Largest `(E_p(t_{n+1}) - E_p(t_n)) / E_p(0)` over every step.
    pub max_step_increase: f64,
}

/// Steps the scenario, recording the trace every `stride` steps and the
/// energy change at every step.
pub fn simulate(sc: &Scenario, keep_snapshots: bool) -> Result<Simulation, CliError> {
    let cfg = &sc.config;
    let p = cfg.p;
    let n_steps = sc.spec.n_steps(&sc.grid)?;
    let stride = sc.spec.stride as u64;
    let inject = cfg.debug.as_ref().map(|d| d.inject_nan_at_step);
    let mut sim = Simulator::new(&sc.init, sc.damping.clone(), sc.spec.coeff.clone(), sc.spec.mode)?;
    let mut trace = EnergyTrace::new(p)?;
    let mut csv = keep_snapshots.then(|| String::from("t,x,rho,xi,z\n"));
    let observe = |sim: &Simulator, trace: &mut EnergyTrace, csv: &mut Option<String>| -> Result<(), CliError> {
        let s = sim.state();
        trace.push(s, &sc.damping, &sc.spec.coeff, cfg.weights.eps)?;
        if let Some(out) = csv.as_mut() {
            for j in 0..sc.grid.n_nodes() {
                let _ = writeln!(out, "{},{},{},{},{}", s.t, sc.grid.x(j), s.rho[j], s.xi[j], s.z[j]);
            }
        }
        Ok(())
    };
    observe(&sim, &mut trace, &mut csv)?;
    let e0 = energy_ep(sim.state(), p)?;
    let mut prev = e0;
    let mut max_inc = f64::NEG_INFINITY;
    for k in 1..=n_steps {
        if inject == Some(k) {
            let mid = sc.grid.n_cells / 2;
            sim.state_mut().rho[mid] = f64::NAN;
        }
        sim.step()?;
        let e = energy_ep(sim.state(), p)?;
        if e0 > 0.0 {
            max_inc = max_inc.max((e - prev) / e0);
        }
        prev = e;
        if k % stride == 0 || k == n_steps {
            observe(&sim, &mut trace, &mut csv)?;
        }
    }
    if !max_inc.is_finite() {
        max_inc = 0.0;
    }
    Ok(Simulation { trace, snapshots_csv: csv, n_steps, max_step_increase: max_inc })
}

/// Outcome of one model fit; failed fits keep the error text.
#[derive(Debug, Clone, Serialize)]
pub struct FitEntry {
    pub model: DecayModel,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<DecayFitReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitSection {
    pub target: DecayTarget,
    pub window: Option<FitWindow>,
    pub fits: Vec<FitEntry>,
}

impl FitSection {
    /// The fit of the model the theory predicts.
    pub fn headline(&self) -> Option<&DecayFitReport> {
        self.fits.iter().find(|f| f.model == self.target.model()).and_then(|f| f.report.as_ref())
    }
}

/// Fits all three models on the configured or default window.
pub fn fit_section(cfg: &RunConfig, sc: &Scenario, trace: &EnergyTrace) -> Result<FitSection, CliError> {
    let target = theoretical_target(cfg.p, &sc.damping, Regime::for_p(cfg.p)?)?;
    let (t, e) = (trace.times(), trace.energies());
    let window = match (cfg.fit.t_lo, cfg.fit.t_hi) {
        (None, None) => default_window(&t, &e),
        (lo, hi) => {
            let t_end = *t.last().unwrap_or(&0.0);
            FitWindow::new(lo.unwrap_or(t_end / 10.0), hi.unwrap_or(t_end))
        }
    };
    let window = match window {
        Ok(w) => w,
        Err(err) => {
            let fits = DecayModel::ALL
                .iter()
                .map(|&model| FitEntry { model, report: None, error: Some(err.to_string()) })
                .collect();
            return Ok(FitSection { target, window: None, fits });
        }
    };
    let fits = DecayModel::ALL
        .iter()
        .map(|&model| match fit(model, &t, &e, window) {
            Ok(r) => FitEntry { model, report: Some(r.with_target(target)), error: None },
            Err(err) => FitEntry { model, report: None, error: Some(err.to_string()) },
        })
        .collect();
    Ok(FitSection { target, window: Some(window), fits })
}

/// Identity residuals on `[S, T]` from a stride-one run with `phi_m`.
/// Empty for boundary damping or when disabled.
pub fn multiplier_section(cfg: &RunConfig, sc: &Scenario) -> Result<Vec<MultiplierReport>, CliError> {
    let m = &cfg.multipliers;
    if !m.enabled || sc.spec.mode != BoundaryMode::Dirichlet {
        return Ok(Vec::new());
    }
    let spec = RunSpec { t_final: m.t, stride: 1, ..sc.spec.clone() };
    let traj = run(&sc.init, &spec)?;
    let weight = WeightFamily::build(cfg.weights.m, cfg.weights.eta, &sc.damping, 1e8)?;
    let mut setup = IdentitySetup::new(cfg.p, m.s, m.t)?;
    setup.cutoffs = sc.cutoffs;
    Ok(all_identity_residuals(&traj, &weight, &setup)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub name: String,
    pub p: f64,
    pub n_cells: usize,
    pub n_steps: u64,
    pub t_final: f64,
    pub e_p_initial: f64,
    pub e_p_final: f64,
    /// Largest step increase of `E_p` relative to `E_p(0)`.
    pub max_step_increase: f64,
    pub monotone: bool,
    pub target: DecayTarget,
    pub fitted_model: DecayModel,
    pub fitted_parameter: Option<f64>,
    pub r_squared: Option<f64>,
    pub verdict: Option<String>,
    pub max_identity_residual: Option<f64>,
    #[serde(skip)]
    pub output_dir: PathBuf,
}

impl RunSummary {
    pub fn to_text(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.6e}")).unwrap_or_else(|| "n/a".into());
        let mut s = String::new();
        let _ = writeln!(s, "scenario        {}", self.name);
        let _ = writeln!(s, "p               {}", self.p);
        let _ = writeln!(s, "n_cells         {}", self.n_cells);
        let _ = writeln!(s, "steps           {}", self.n_steps);
        let _ = writeln!(s, "T               {}", self.t_final);
        let _ = writeln!(s, "E_p(0)          {:.6e}", self.e_p_initial);
        let _ = writeln!(s, "E_p(T)          {:.6e}", self.e_p_final);
        let _ = writeln!(s, "max step rise   {:.3e} ({})", self.max_step_increase, if self.monotone { "monotone" } else { "NOT monotone" });
        let _ = writeln!(s, "target          {:?}", self.target);
        let _ = writeln!(s, "fit ({})  {}  R2 {}", self.fitted_model.name(), opt(self.fitted_parameter), opt(self.r_squared));
        let _ = writeln!(s, "verdict         {}", self.verdict.as_deref().unwrap_or("n/a"));
        let _ = writeln!(s, "identity resid  {}", opt(self.max_identity_residual));
        s
    }
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    fs::write(dir.join(name), contents)?;
    Ok(())
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

/// Runs the scenario and writes `energy.csv`, `trajectory.csv` (optional),
/// `fit.json`, `multipliers.json`, `summary.json` and `summary.txt`.
pub fn run_scenario(cfg: &RunConfig) -> Result<RunSummary, CliError> {
    let sc = cfg.build()?;
    let sim = simulate(&sc, cfg.output.snapshots)?;
    let fits = fit_section(cfg, &sc, &sim.trace)?;
    let identities = multiplier_section(cfg, &sc)?;

    let dir = cfg.output_dir();
    fs::create_dir_all(&dir)?;
    write(&dir, "energy.csv", &sim.trace.to_csv())?;
    if let Some(csv) = &sim.snapshots_csv {
        write(&dir, "trajectory.csv", csv)?;
    }
    write(&dir, "fit.json", &json(&fits))?;
    write(&dir, "multipliers.json", &json(&identities))?;

    let rows = &sim.trace.rows;
    let head = fits.headline();
    let summary = RunSummary {
        name: cfg.name.clone(),
        p: cfg.p,
        n_cells: sc.grid.n_cells,
        n_steps: sim.n_steps,
        t_final: rows.last().map_or(0.0, |r| r.t),
        e_p_initial: rows.first().map_or(0.0, |r| r.e_p),
        e_p_final: rows.last().map_or(0.0, |r| r.e_p),
        max_step_increase: sim.max_step_increase,
        monotone: sim.max_step_increase <= MONOTONE_TOL,
        target: fits.target,
        fitted_model: fits.target.model(),
        fitted_parameter: head.map(|r| r.parameter),
        r_squared: head.map(|r| r.r_squared),
        verdict: head.and_then(|r| r.verdict).map(|v| v.name().to_string()),
        max_identity_residual: identities.iter().map(|r| r.normalized).reduce(f64::max),
        output_dir: dir.clone(),
    };
    write(&dir, "summary.json", &json(&summary))?;
    write(&dir, "summary.txt", &summary.to_text())?;
    Ok(summary)
}
