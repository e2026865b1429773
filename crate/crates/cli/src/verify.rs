//! `wavelab verify <suite>`: property suites at default sizes.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use wavelab::convex::{
    big_f_tilde, big_f_tilde_star, check_fenchel, f_tilde, sandwich_constants, two_point_inequality_constants,
    SandwichKind,
};
use wavelab::gronwall::{
    bootstrap_closed_form, bootstrap_exponents, check_lemma2_cocv, check_lemma3_cocv, check_lemma_cocv,
    SampledDecayFn, TailModel, DEFAULT_DELTA,
};
use wavelab::multiplier::{all_identity_residuals, estimate_ratio_vlq, solve_elliptic, IdentitySetup};
use wavelab::sim::run;
use wavelab::weights::{closed_form_integral_check, growth_bound_check, IdentityClock, WeightFamily};
use wavelab::{BoundaryMode, CoefficientProfile, CutoffSet, DampingSpec, Grid, InitialData, RunSpec};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Convex,
    Gronwall,
    Weights,
    Multipliers,
    All,
}

impl Suite {
    pub const NAMES: [&'static str; 5] = ["convex", "gronwall", "weights", "multipliers", "all"];
}

impl FromStr for Suite {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "convex" => Ok(Suite::Convex),
            "gronwall" => Ok(Suite::Gronwall),
            "weights" => Ok(Suite::Weights),
            "multipliers" => Ok(Suite::Multipliers),
            "all" => Ok(Suite::All),
            other => Err(CliError::Config(format!(
                "unknown suite '{other}'; expected one of {}",
                Suite::NAMES.join(", ")
            ))),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let i = match self {
            Suite::Convex => 0,
            Suite::Gronwall => 1,
            Suite::Weights => 2,
            Suite::Multipliers => 3,
            Suite::All => 4,
        };
        f.write_str(Suite::NAMES[i])
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckRow {
    pub suite: &'static str,
    pub check: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckRow {
    fn new(suite: &'static str, check: impl Into<String>, passed: bool, detail: String) -> Self {
        Self { suite, check: check.into(), passed, detail }
    }
}

/// Fixed-width pass/fail table.
pub fn format_table(rows: &[CheckRow]) -> String {
    let w = rows.iter().map(|r| r.check.len()).max().unwrap_or(5).max(5);
    let mut out = format!("{:<12} {:<w$} {:<6} detail\n", "suite", "check", "result");
    for r in rows {
        let status = if r.passed { "PASS" } else { "FAIL" };
        out.push_str(&format!("{:<12} {:<w$} {:<6} {}\n", r.suite, r.check, status, r.detail));
    }
    out
}

pub fn run_suite(suite: Suite) -> Result<Vec<CheckRow>, CliError> {
    match suite {
        Suite::Convex => convex_suite(),
        Suite::Gronwall => gronwall_suite(),
        Suite::Weights => weights_suite(),
        Suite::Multipliers => multipliers_suite(),
        Suite::All => {
            let mut rows = convex_suite()?;
            rows.extend(gronwall_suite()?);
            rows.extend(weights_suite()?);
            rows.extend(multipliers_suite()?);
            Ok(rows)
        }
    }
}

/// `sup_y (b y - F~(y))` by golden-section search; the objective is concave.
pub fn conjugate_by_search(b: f64, p: f64) -> f64 {
    let b = b.abs();
    if b == 0.0 {
        return 0.0;
    }
    let mut hi = 1.0;
    while f_tilde(hi, p) < b {
        hi *= 2.0;
    }
    let obj = |y: f64| b * y - big_f_tilde(y, p);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (0.0, hi);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (obj(x1), obj(x2));
    for _ in 0..200 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = obj(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = obj(x1);
        }
    }
    f1.max(f2)
}

/// Log-uniform pairs in `[1e-6, 1e6]^2` with random signs.
pub fn fenchel_samples(n: usize, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| {
        let m = 10f64.powf(rng.gen_range(-6.0..6.0));
        if rng.gen_bool(0.5) {
            m
        } else {
            -m
        }
    };
    (0..n).map(|_| (draw(&mut rng), draw(&mut rng))).collect()
}

/// Relative change of the two-point constant between two grid sizes.
pub fn two_point_stability(p: f64, ms: &[f64], coarse: usize, fine: usize) -> Result<Vec<(f64, f64, f64)>, CliError> {
    let a = two_point_inequality_constants(p, ms, coarse)?;
    let b = two_point_inequality_constants(p, ms, fine)?;
    Ok(a.iter().zip(&b).map(|(&x, &y)| (x, y, (x - y).abs() / y.abs())).collect())
}

fn convex_suite() -> Result<Vec<CheckRow>, CliError> {
    const S: &str = "convex";
    let mut rows = Vec::new();
    let samples = fenchel_samples(100_000, 11);
    for p in [1.2, 1.5, 1.8] {
        let r = check_fenchel(&samples, p)?;
        rows.push(CheckRow::new(
            S,
            format!("fenchel p={p}"),
            r.violations == 0,
            format!("{} violations in {} samples", r.violations, r.samples),
        ));
    }
    for p in [1.2, 1.5, 1.8] {
        let worst = (0..1000)
            .map(|k| {
                let b = 10f64.powf(-3.0 + 5.0 * k as f64 / 999.0);
                let exact = big_f_tilde_star(b, p);
                (exact - conjugate_by_search(b, p)).abs() / exact.abs().max(1.0)
            })
            .fold(0.0, f64::max);
        rows.push(CheckRow::new(S, format!("conjugate p={p}"), worst <= 1e-8, format!("max rel diff {worst:.2e}")));
    }
    for p in [1.2, 1.5, 1.8] {
        for kind in [SandwichKind::FTilde, SandwichKind::FStar, SandwichKind::FMix] {
            let r = sandwich_constants(kind, p, 4001)?;
            let lo = r.ratio_at_small_end.min(r.ratio_at_large_end);
            let hi = r.ratio_at_small_end.max(r.ratio_at_large_end);
            let finite = r.inf_ratio > 0.0 && r.sup_ratio.is_finite();
            let ok = if p >= 1.5 { finite && r.inf_ratio >= lo / 2.0 && r.sup_ratio <= 2.0 * hi } else { finite };
            rows.push(CheckRow::new(
                S,
                format!("sandwich {kind:?} p={p}"),
                ok,
                format!("ratios in [{:.3e}, {:.3e}]", r.inf_ratio, r.sup_ratio),
            ));
        }
    }
    for p in [1.2, 1.5, 1.8] {
        let ms = [1.0, 2.0, 4.0];
        let stab = two_point_stability(p, &ms, 1001, 4001)?;
        let worst = stab.iter().map(|s| s.2).fold(0.0, f64::max);
        rows.push(CheckRow::new(
            S,
            format!("two-point constant p={p}"),
            worst <= 0.05 && stab.iter().all(|s| s.1.is_finite()),
            format!("M=1,2,4 -> {:.4}, {:.4}, {:.4}; grid change {worst:.2e}", stab[0].1, stab[1].1, stab[2].1),
        ));
    }
    Ok(rows)
}

fn power_law(k: f64, t_end: f64) -> Result<SampledDecayFn, CliError> {
    Ok(SampledDecayFn::from_fn(|t| (1.0 + t).powf(-k), t_end, 400, TailModel::PowerLaw(k))?)
}

fn gronwall_suite() -> Result<Vec<CheckRow>, CliError> {
    const S: &str = "gronwall";
    let mut rows = Vec::new();
    for p in [2.5, 3.0, 4.0, 8.0] {
        for m in 1..=3u32 {
            let seq = bootstrap_exponents(p, m, 200)?;
            let last = *seq.exponents.last().unwrap();
            let closed = (0..20).map(|n| (seq.exponents[n] - bootstrap_closed_form(p, m, n)).abs()).fold(0.0, f64::max);
            let err = (last - m as f64 * p).abs();
            rows.push(CheckRow::new(
                S,
                format!("bootstrap p={p} m={m}"),
                err <= 1e-12 && closed <= 1e-12,
                format!("limit {last} vs {}, closed form diff {closed:.1e}", m as f64 * p),
            ));
        }
    }
    let v = check_lemma2_cocv(&power_law(2.0, 1e5)?, 1.0, 1.0, 1.0 / 3.0)?;
    rows.push(CheckRow::new(
        S,
        "two-exponent lemma, power law",
        v.hypothesis_holds && v.conclusion_bounded,
        format!("minimal c {:.4}, constant {:.4}", v.minimal_c, v.conclusion_constant),
    ));
    let v = check_lemma2_cocv(&power_law(1.0, 1e5)?, 1.0, 1.0, 1.0)?;
    rows.push(CheckRow::new(
        S,
        "two-exponent lemma, negative control",
        !v.hypothesis_holds && !v.conclusion_bounded,
        format!("first violation at t = {:?}", v.first_violation),
    ));
    let f = power_law(2.0, 1e3)?;
    let same = check_lemma2_cocv(&f, 1.0, 1.0, 0.5)? == check_lemma3_cocv(&f, &IdentityClock, 1.0, 1.0, 0.5)?;
    rows.push(CheckRow::new(S, "clock version with identity clock", same, String::new()));
    let v = check_lemma_cocv(&power_law(3.0, 1e5)?, 3.0, 1, 0.2, DEFAULT_DELTA)?;
    rows.push(CheckRow::new(
        S,
        "three-term lemma, power law",
        v.hypothesis_holds && v.conclusion_bounded,
        format!("minimal c {:.4}", v.minimal_c),
    ));
    let v = check_lemma_cocv(&power_law(2.0, 1e5)?, 4.0, 1, 1.0, DEFAULT_DELTA)?;
    rows.push(CheckRow::new(
        S,
        "three-term lemma, negative control",
        !v.hypothesis_holds && !v.conclusion_bounded,
        format!("first violation at t = {:?}", v.first_violation),
    ));
    Ok(rows)
}

fn weights_suite() -> Result<Vec<CheckRow>, CliError> {
    const S: &str = "weights";
    let mut rows = Vec::new();
    let presets = [("linear", DampingSpec::linear(1.0)?), ("polynomial q=3", DampingSpec::polynomial(3.0, 1.0)?)];
    for (label, d) in &presets {
        for m in 1..=3u32 {
            let w = WeightFamily::build(m, 0.5, d, 1e8)?;
            let mut worst: f64 = 0.0;
            for s in [0.0, 1.0, 50.0] {
                for power in [2.0, 3.0] {
                    worst = worst.max(closed_form_integral_check(&w, s, power)?.relative_error);
                }
            }
            rows.push(CheckRow::new(
                S,
                format!("closed-form integrals {label} m={m}"),
                worst <= 1e-6,
                format!("max rel error {worst:.2e}"),
            ));
            let times: Vec<f64> = (0..60).map(|k| 10f64.powf(-2.0 + 8.0 * k as f64 / 59.0)).collect();
            let inv = times.iter().map(|&t| (w.phi_m_prime(t) * w.dpsi(w.phi_m(t)) - 1.0).abs()).fold(0.0, f64::max);
            let concave = times.iter().all(|&t| w.phi_m_second(t) <= 0.0);
            rows.push(CheckRow::new(
                S,
                format!("inverse and concavity {label} m={m}"),
                inv <= 1e-8 && concave,
                format!("max |phi' psi'(phi) - 1| {inv:.2e}"),
            ));
            let ss: Vec<f64> = (0..40).map(|k| w.a * 10f64.powf(3.0 * k as f64 / 39.0)).collect();
            let g = growth_bound_check(&w, &ss)?;
            rows.push(CheckRow::new(
                S,
                format!("growth bound {label} m={m}"),
                g.violations == 0,
                format!("{} of {} samples fail", g.violations, g.checked),
            ));
        }
    }
    Ok(rows)
}

/// Tridiagonal solve of `v'' = s`, `v(0) = v(1) = 0`, with the fourth-order
/// right-hand side `dx^2 (s_{j-1} + 10 s_j + s_{j+1}) / 12`.
pub fn numerov_solve(source: &[f64]) -> Vec<f64> {
    let n = source.len() - 1;
    let dx = 1.0 / n as f64;
    let m = n - 1;
    let d: Vec<f64> = (1..n).map(|j| (source[j - 1] + 10.0 * source[j] + source[j + 1]) / 12.0 * dx * dx).collect();
    let mut c = vec![0.0; m];
    let mut y = vec![0.0; m];
    c[0] = -0.5;
    y[0] = -0.5 * d[0];
    for i in 1..m {
        let den = -2.0 - c[i - 1];
        c[i] = 1.0 / den;
        y[i] = (d[i] - y[i - 1]) / den;
    }
    let mut v = vec![0.0; n + 1];
    v[m] = y[m - 1];
    for i in (1..m).rev() {
        v[i] = y[i - 1] - c[i - 1] * v[i + 1];
    }
    v
}

/// Max difference between the Green-formula solve and the Numerov oracle
/// for a smooth source on `n` cells.
pub fn elliptic_oracle_gap(n: usize) -> Result<f64, CliError> {
    let s: Vec<f64> = (0..=n)
        .map(|j| {
            let x = j as f64 / n as f64;
            x.exp() * (3.0 * x).cos() + x * x
        })
        .collect();
    let v = solve_elliptic(&s)?.v;
    Ok(v.iter().zip(numerov_solve(&s)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

/// Linear damping on `(0.25, 0.75)`, `a0 = 1`, `z0 = sin(pi x)`,
/// `z1 = sin(2 pi x)`.
pub fn linear_reference(n: usize, t_final: f64, stride: usize) -> Result<(InitialData, RunSpec), CliError> {
    let grid = Grid::new(n)?;
    let init = InitialData::standing(grid, 1.0, 1.0)?;
    let spec = RunSpec {
        damping: DampingSpec::linear(1.0)?,
        coeff: CoefficientProfile::trapezoid(&grid, (0.25, 0.75), 1.0, 0.05)?,
        mode: BoundaryMode::Dirichlet,
        t_final,
        stride,
    };
    Ok((init, spec))
}

fn multipliers_suite() -> Result<Vec<CheckRow>, CliError> {
    const S: &str = "multipliers";
    let mut rows = Vec::new();
    let gaps = [64, 128, 256].iter().map(|&n| elliptic_oracle_gap(n)).collect::<Result<Vec<_>, _>>()?;
    let ratios = [gaps[0] / gaps[1], gaps[1] / gaps[2]];
    rows.push(CheckRow::new(
        S,
        "elliptic order two",
        ratios.iter().all(|r| (3.3..=4.7).contains(r)),
        format!("ratios {:.3}, {:.3}", ratios[0], ratios[1]),
    ));
    for p in [1.5, 3.0] {
        let (init, spec) = linear_reference(256, 1.0, 1)?;
        let traj = run(&init, &spec)?;
        let weight = WeightFamily::build(1, 0.5, &spec.damping, 1e8)?;
        let setup = IdentitySetup::new(p, 0.0, 1.0)?;
        let reports = all_identity_residuals(&traj, &weight, &setup)?;
        let worst = reports.iter().map(|r| r.normalized).fold(0.0, f64::max);
        rows.push(CheckRow::new(
            S,
            format!("identities p={p} n=256"),
            worst <= 1e-3,
            format!("max normalized residual {worst:.2e}"),
        ));
    }
    let (init, spec) = linear_reference(128, 10.0, 16)?;
    let traj = run(&init, &spec)?;
    let r = estimate_ratio_vlq(&traj, 3.0, &CutoffSet::default())?;
    let init_ratio = r.initial_ratio.unwrap_or(0.0);
    rows.push(CheckRow::new(
        S,
        "L^q bound on v, p=3",
        r.max_ratio.is_finite() && r.max_ratio <= 2.0 * init_ratio,
        format!("max {:.3e}, initial {:.3e}", r.max_ratio, init_ratio),
    ));
    Ok(rows)
}
