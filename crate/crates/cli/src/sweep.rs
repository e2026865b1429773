//! `wavelab sweep`: decay fits over a `(p, q)` grid.

use std::fmt::Write as _;
use std::fs;

use serde::Serialize;

use wavelab::decay::{default_window, fit, theoretical_target, Regime};
use wavelab::DampingKind;

use crate::config::RunConfig;
use crate::run::simulate;
use crate::CliError;

/// Cells allowed without `--allow-large`.
pub const MAX_SWEEP_CELLS: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub p: f64,
    pub q: f64,
    pub model: String,
    pub fitted: Option<f64>,
    pub target_lo: Option<f64>,
    pub target_hi: Option<f64>,
    pub r_squared: Option<f64>,
    pub verdict: String,
}

/// `(p, q)` pairs in first-occurrence order with duplicates removed.
pub fn sweep_cells(cfg: &RunConfig) -> Result<Vec<(f64, f64)>, CliError> {
    let grid = cfg.sweep.as_ref().ok_or_else(|| CliError::Config("sweep needs a [sweep] section".into()))?;
    if grid.p.is_empty() || grid.q.is_empty() {
        return Err(CliError::Config("sweep.p and sweep.q must be nonempty".into()));
    }
    let mut cells: Vec<(f64, f64)> = Vec::new();
    for &p in &grid.p {
        for &q in &grid.q {
            if !cells.iter().any(|&(a, b)| a.to_bits() == p.to_bits() && b.to_bits() == q.to_bits()) {
                cells.push((p, q));
            }
        }
    }
    Ok(cells)
}

fn cell_config(base: &RunConfig, p: f64, q: f64) -> Result<RunConfig, CliError> {
    let mut cfg = base.clone();
    cfg.p = p;
    cfg.damping = match base.damping {
        DampingKind::PolynomialNearZero { alpha, .. } => DampingKind::PolynomialNearZero { q, alpha },
        DampingKind::ExpFlatNearZero { alpha, .. } => DampingKind::ExpFlatNearZero { q, alpha },
        DampingKind::Linear { .. } => {
            return Err(CliError::Config("sweep over q needs polynomial or exp-flat damping".into()))
        }
    };
    cfg.multipliers.enabled = false;
    cfg.debug = None;
    Ok(cfg)
}

fn run_cell(base: &RunConfig, p: f64, q: f64) -> Result<SweepRow, CliError> {
    let cfg = cell_config(base, p, q)?;
    let sc = cfg.build()?;
    let target = theoretical_target(p, &sc.damping, Regime::for_p(p)?)?;
    let sim = simulate(&sc, false)?;
    let (t, e) = (sim.trace.times(), sim.trace.energies());
    let report = match (cfg.fit.t_lo, cfg.fit.t_hi) {
        (Some(lo), Some(hi)) => wavelab::decay::FitWindow::new(lo, hi),
        _ => default_window(&t, &e),
    }
    .and_then(|w| fit(target.model(), &t, &e, w))
    .map(|r| r.with_target(target));
    let (lo, hi) = target.bounds();
    let finite = |v: f64| v.is_finite().then_some(v);
    Ok(match report {
        Ok(r) => SweepRow {
            p,
            q,
            model: target.model().name().to_string(),
            fitted: Some(r.parameter),
            target_lo: finite(lo),
            target_hi: finite(hi),
            r_squared: Some(r.r_squared),
            verdict: r.verdict.map_or("inconclusive", |v| v.name()).to_string(),
        },
        Err(_) => SweepRow {
            p,
            q,
            model: target.model().name().to_string(),
            fitted: None,
            target_lo: finite(lo),
            target_hi: finite(hi),
            r_squared: None,
            verdict: "inconclusive".into(),
        },
    })
}

/// CSV with columns `p,q,model,fitted,target_lo,target_hi,R2,verdict`;
/// missing values are empty.
pub fn rows_to_csv(rows: &[SweepRow]) -> String {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut out = String::from("p,q,model,fitted,target_lo,target_hi,R2,verdict\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.p,
            r.q,
            r.model,
            opt(r.fitted),
            opt(r.target_lo),
            opt(r.target_hi),
            opt(r.r_squared),
            r.verdict
        );
    }
    out
}

/// Runs every cell in order and writes `sweep.csv` to the output directory.
pub fn run_sweep(cfg: &RunConfig, allow_large: bool) -> Result<Vec<SweepRow>, CliError> {
    let cells = sweep_cells(cfg)?;
    if cells.len() > MAX_SWEEP_CELLS && !allow_large {
        return Err(CliError::Config(format!(
            "sweep has {} cells, more than {MAX_SWEEP_CELLS}; pass --allow-large to run it",
            cells.len()
        )));
    }
    // Validate every cell before spending time on any run.
    for &(p, q) in &cells {
        cell_config(cfg, p, q)?.build()?;
    }
    let rows = cells.iter().map(|&(p, q)| run_cell(cfg, p, q)).collect::<Result<Vec<_>, _>>()?;
    let dir = cfg.output_dir();
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("sweep.csv"), rows_to_csv(&rows))?;
    Ok(rows)
}
