//! Acceptance criteria, one pass/fail line each. Exits nonzero on any failure.

use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use wavelab::convex::{big_f_tilde_star, check_fenchel};
use wavelab::decay::{default_window, fit, fit_algebraic, fit_exponential, DecayModel};
use wavelab::energy::{dissipation_residual, energy_ep, EnergyTrace};
use wavelab::gronwall::{bootstrap_exponents, check_lemma2_cocv, SampledDecayFn, TailModel};
use wavelab::multiplier::{all_identity_residuals, IdentitySetup};
use wavelab::sim::{run, run_with};
use wavelab::weights::{closed_form_integral_check, WeightFamily};
use wavelab::{BoundaryMode, CoefficientProfile, DampingSpec, Grid, InitialData, RunSpec};
use wavelab_cli::run::{simulate, MONOTONE_TOL};
use wavelab_cli::verify::{conjugate_by_search, elliptic_oracle_gap, fenchel_samples, linear_reference, two_point_stability};
use wavelab_cli::RunConfig;

type Outcome = Result<(bool, String), String>;

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn conservation() -> Outcome {
    let grid = Grid::new(512).map_err(err)?;
    let init = InitialData::standing(grid, 1.0, 1.0).map_err(err)?;
    let spec = RunSpec {
        damping: DampingSpec::linear(1.0).map_err(err)?,
        coeff: CoefficientProfile::zero(&grid),
        mode: BoundaryMode::Dirichlet,
        t_final: 20.0,
        stride: 1 << 20,
    };
    let end = run_with(&init, &spec, |_| Ok(())).map_err(err)?;
    let mut worst: f64 = 0.0;
    for p in [1.5, 2.0, 3.0] {
        let e0 = energy_ep(&init.state(), p).map_err(err)?;
        let e1 = energy_ep(&end, p).map_err(err)?;
        worst = worst.max((e1 - e0).abs() / e0);
    }
    Ok((worst <= 1e-10, format!("max relative drift {worst:.2e} (<= 1e-10)")))
}

fn monotonicity() -> Outcome {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../presets");
    let mut names: Vec<_> = std::fs::read_dir(&dir).map_err(err)?.map(|e| e.unwrap().path()).collect();
    names.sort();
    let mut worst = f64::NEG_INFINITY;
    let mut detail = Vec::new();
    for path in &names {
        let sc = RunConfig::load(path).map_err(err)?.build().map_err(err)?;
        let sim = simulate(&sc, false).map_err(err)?;
        worst = worst.max(sim.max_step_increase);
        detail.push(format!("{}: {:.1e}", sc.config.name, sim.max_step_increase));
    }
    Ok((worst <= MONOTONE_TOL && !names.is_empty(), format!("max step rise / E_p(0): {}", detail.join(", "))))
}

fn dissipation_order() -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for p in [1.5, 3.0] {
        let mut maxes = Vec::new();
        for n in [128, 256, 512] {
            let (init, spec) = linear_reference(n, 2.0, 1).map_err(err)?;
            let traj = run(&init, &spec).map_err(err)?;
            maxes.push(dissipation_residual(&traj, p).map_err(err)?.max);
        }
        let ratios = [maxes[0] / maxes[1], maxes[1] / maxes[2]];
        ok &= ratios.iter().all(|&r| r >= 1.8);
        detail.push(format!("p={p}: ratios {:.2}, {:.2}", ratios[0], ratios[1]));
    }
    Ok((ok, format!("{} (>= 1.8)", detail.join("; "))))
}

fn exponential_decay() -> Outcome {
    let (init, spec) = linear_reference(1024, 60.0, 64).map_err(err)?;
    let traj = run(&init, &spec).map_err(err)?;
    let trace = EnergyTrace::from_trajectory(&traj, 3.0, 0.1).map_err(err)?;
    let (t, e) = (trace.times(), trace.energies());
    let win = default_window(&t, &e).map_err(err)?;
    let ex = fit_exponential(&t, &e, win).map_err(err)?;
    let al = fit_algebraic(&t, &e, win).map_err(err)?;
    let ok = ex.r_squared >= 0.99 && ex.parameter > 0.0 && al.mismatch;
    Ok((
        ok,
        format!(
            "window [{:.2}, {:.2}], rate {:.4}, R2 {:.5}, algebraic halves {:?} mismatch {}",
            win.t_lo, win.t_hi, ex.parameter, ex.r_squared, al.half_parameters, al.mismatch
        ),
    ))
}

fn polynomial_band() -> Outcome {
    let (p, q) = (4.0, 3.0);
    let grid = Grid::new(1024).map_err(err)?;
    let init = InitialData::standing(grid, 1.0, 1.0).map_err(err)?;
    let damping = DampingSpec::polynomial(q, 1.0).map_err(err)?;
    let coeff = CoefficientProfile::trapezoid(&grid, (0.25, 0.75), 1.0, 0.05).map_err(err)?;
    let spec = RunSpec { damping: damping.clone(), coeff: coeff.clone(), mode: BoundaryMode::Dirichlet, t_final: 400.0, stride: 64 };
    let mut trace = EnergyTrace::new(p).map_err(err)?;
    run_with(&init, &spec, |s| trace.push(s, &damping, &coeff, 0.1)).map_err(err)?;
    let (t, e) = (trace.times(), trace.energies());
    let r = fit(DecayModel::Algebraic, &t, &e, default_window(&t, &e).map_err(err)?).map_err(err)?;
    let upper = p / (q - 1.0);
    let t_end = *t.last().unwrap();
    let scaled: Vec<f64> = t.iter().zip(&e).filter(|(&s, _)| s >= t_end / 10.0).map(|(&s, &v)| v * s.powf(upper)).collect();
    let growth = scaled.iter().cloned().fold(0.0, f64::max) / scaled[0];
    let ok = r.parameter >= p / q - 0.3 && growth <= 2.0;
    Ok((
        ok,
        format!(
            "exponent {:.4} (>= {:.2}), R2 {:.5}; E t^{upper} over last decade {:.3} -> {:.3}, growth {growth:.3} (<= 2)",
            r.parameter,
            p / q - 0.3,
            r.r_squared,
            scaled[0],
            scaled.last().unwrap()
        ),
    ))
}

fn multiplier_identities() -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for p in [3.0, 1.5] {
        let mut series: Vec<[f64; 3]> = Vec::new();
        for n in [128, 256, 512] {
            let (init, spec) = linear_reference(n, 2.0, 1).map_err(err)?;
            let traj = run(&init, &spec).map_err(err)?;
            let weight = WeightFamily::build(1, 0.5, &spec.damping, 1e8).map_err(err)?;
            let setup = IdentitySetup::new(p, 0.0, 2.0).map_err(err)?;
            let reps = all_identity_residuals(&traj, &weight, &setup).map_err(err)?;
            series.push([reps[0].normalized, reps[1].normalized, reps[2].normalized]);
        }
        for id in 0..3 {
            let monotone = series[1][id] < series[0][id] && series[2][id] < series[1][id];
            ok &= monotone && series[2][id] <= 1e-3;
            detail.push(format!(
                "p={p} id{}: {:.1e} > {:.1e} > {:.1e}",
                id + 1,
                series[0][id],
                series[1][id],
                series[2][id]
            ));
        }
    }
    Ok((ok, format!("{} (final <= 1e-3)", detail.join("; "))))
}

fn weight_integrals() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for d in [DampingSpec::linear(1.0).map_err(err)?, DampingSpec::polynomial(3.0, 1.0).map_err(err)?] {
        for m in 1..=3u32 {
            let w = WeightFamily::build(m, 0.5, &d, 1e8).map_err(err)?;
            for s in [0.0, 1.0, 10.0, 100.0] {
                for power in [2.0, 3.0, 4.0] {
                    worst = worst.max(closed_form_integral_check(&w, s, power).map_err(err)?.relative_error);
                    count += 1;
                }
            }
        }
    }
    Ok((worst <= 1e-6, format!("{count} integrals, max relative error {worst:.2e} (<= 1e-6)")))
}

fn convex_suite() -> Outcome {
    let samples = fenchel_samples(100_000, 2024);
    let mut violations = 0;
    for p in [1.2, 1.5, 1.8] {
        violations += check_fenchel(&samples, p).map_err(err)?.violations;
    }
    let mut conj: f64 = 0.0;
    for p in [1.2, 1.5, 1.8] {
        for k in 0..1000 {
            let b = 10f64.powf(-3.0 + 5.0 * k as f64 / 999.0);
            let exact = big_f_tilde_star(b, p);
            conj = conj.max((exact - conjugate_by_search(b, p)).abs() / exact.abs().max(1.0));
        }
    }
    let mut stab: f64 = 0.0;
    for p in [1.2, 1.5, 1.8] {
        for (_, _, rel) in two_point_stability(p, &[1.0, 2.0, 4.0], 1_000, 10_000).map_err(err)? {
            stab = stab.max(rel);
        }
    }
    let ok = violations == 0 && conj <= 1e-8 && stab <= 0.05;
    Ok((
        ok,
        format!(
            "Fenchel violations {violations} in 3 x 1e5 samples; conjugate vs search {conj:.1e} (<= 1e-8); two-point constant grid change {stab:.1e} (<= 0.05)"
        ),
    ))
}

fn gronwall_suite() -> Outcome {
    let mut worst: f64 = 0.0;
    for p in [2.5, 3.0, 4.0, 8.0] {
        for m in 1..=3u32 {
            let s = bootstrap_exponents(p, m, 200).map_err(err)?;
            worst = worst.max((s.exponents.last().unwrap() - m as f64 * p).abs());
        }
    }
    let power = |k: f64| SampledDecayFn::from_fn(|t| (1.0 + t).powf(-k), 1e5, 400, TailModel::PowerLaw(k));
    let pos = check_lemma2_cocv(&power(2.0).map_err(err)?, 1.0, 1.0, 1.0 / 3.0).map_err(err)?;
    let neg = check_lemma2_cocv(&power(1.0).map_err(err)?, 1.0, 1.0, 1.0).map_err(err)?;
    let pos_ok = pos.hypothesis_holds && pos.conclusion_bounded;
    let neg_ok = !neg.hypothesis_holds && !neg.conclusion_bounded;
    Ok((
        worst <= 1e-12 && pos_ok && neg_ok,
        format!("bootstrap limit error {worst:.1e} (<= 1e-12); power-law instance passes {pos_ok}; negative control rejected {neg_ok}"),
    ))
}

fn elliptic_order() -> Outcome {
    let gaps = [64, 128, 256].iter().map(|&n| elliptic_oracle_gap(n)).collect::<Result<Vec<_>, _>>().map_err(err)?;
    let ratios = [gaps[0] / gaps[1], gaps[1] / gaps[2]];
    Ok((ratios.iter().all(|r| (3.3..=4.7).contains(r)), format!("ratios {:.3}, {:.3} (in [3.3, 4.7])", ratios[0], ratios[1])))
}

type Criterion = (u32, &'static str, f64, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        (1, "conservation", 1.0, conservation),
        (2, "per-step monotonicity on presets", 10.0, monotonicity),
        (3, "dissipation residual order", 30.0, dissipation_order),
        (4, "exponential decay, linear damping", 20.0, exponential_decay),
        (5, "polynomial damping decay band", 60.0, polynomial_band),
        (6, "multiplier identities", 60.0, multiplier_identities),
        (7, "closed-form weight integrals", 5.0, weight_integrals),
        (8, "convex suite", 30.0, convex_suite),
        (9, "Gronwall suite", 5.0, gronwall_suite),
        (10, "elliptic solver order", 2.0, elliptic_order),
    ];
    let mut failed = 0;
    for (id, name, budget, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        let (ok, detail) = match outcome {
            Ok((ok, detail)) => (ok && secs < budget, detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "[{}] criterion {id}: {name}: {detail} [{secs:.2} s, budget {budget} s]",
            if ok { "PASS" } else { "FAIL" }
        );
    }
    println!("acceptance: {} of 10 criteria passed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
