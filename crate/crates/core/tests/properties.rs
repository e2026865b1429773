use proptest::prelude::*;

use wavelab::convex::{big_f_tilde, big_f_tilde_star, f_tilde, f_tilde_prime};
use wavelab::energy::{dissipation_rate, energy_cal_ep, energy_ep, potential_energy, Potential};
use wavelab::gronwall::{check_lemma2_cocv, check_lemma_cocv, SampledDecayFn, TailModel, DEFAULT_DELTA};
use wavelab::sim::{run_with, Simulator};
use wavelab::weights::WeightFamily;
use wavelab::*;

fn damping_strategy() -> impl Strategy<Value = DampingSpec> {
    prop_oneof![
        (0.1f64..5.0).prop_map(|s| DampingSpec::linear(s).unwrap()),
        (1.0f64..5.0, 0.1f64..3.0).prop_map(|(q, a)| DampingSpec::polynomial(q, a).unwrap()),
        (0.5f64..3.0, 0.1f64..3.0).prop_map(|(q, a)| DampingSpec::exp_flat(q, a).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn damping_is_monotone(d in damping_strategy(), a in -50.0f64..50.0, b in -50.0f64..50.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(d.g(lo) <= d.g(hi));
        prop_assert!(d.g(a) * a >= 0.0);
    }

    #[test]
    fn damping_sector_bounds(d in damping_strategy(), s in 1.0f64..1e4, neg in any::<bool>()) {
        let s = if neg { -s } else { s };
        let r = d.g(s).abs() / s.abs();
        prop_assert!(r >= d.linear_lower_at_infinity * (1.0 - 1e-12));
        prop_assert!(r <= d.lipschitz_bound * (1.0 + 1e-12));
    }

    #[test]
    fn h_nondecreasing_near_zero(d in damping_strategy(), mut xs in prop::collection::vec(1e-6f64..1.0, 2..40)) {
        xs.sort_by(f64::total_cmp);
        let eta = d.eta;
        let hs: Vec<f64> = xs.iter().map(|&x| d.h(x * eta)).collect();
        for w in hs.windows(2) {
            prop_assert!(w[1] >= w[0] * (1.0 - 1e-12));
        }
    }

    #[test]
    fn f_tilde_concave_and_dominated(p in 1.05f64..1.95, y in 0.0f64..1e3, h in 1e-3f64..1.0) {
        prop_assert!(f_tilde(y, p).abs() <= (p - 1.0) * y.abs() * (1.0 + 1e-12));
        let mid = f_tilde(y + h, p);
        prop_assert!(2.0 * mid >= f_tilde(y, p) + f_tilde(y + 2.0 * h, p) - 1e-12 * mid.abs().max(1.0));
    }

    #[test]
    fn f_tilde_potential_convex(p in 1.05f64..1.95, y in -1e3f64..1e3, h in 1e-3f64..1.0) {
        let c = big_f_tilde(y, p);
        let s = big_f_tilde(y - h, p) + big_f_tilde(y + h, p) - 2.0 * c;
        prop_assert!(s >= -1e-12 * c.abs().max(1.0));
    }

    #[test]
    fn conjugate_even_convex_zero(p in 1.05f64..1.95, b in -20.0f64..20.0, h in 1e-3f64..1.0) {
        prop_assert_eq!(big_f_tilde_star(0.0, p), 0.0);
        prop_assert_eq!(big_f_tilde_star(b, p), big_f_tilde_star(-b, p));
        let c = big_f_tilde_star(b, p);
        let s = big_f_tilde_star(b - h, p) + big_f_tilde_star(b + h, p) - 2.0 * c;
        prop_assert!(s >= -1e-12 * c.abs().max(1.0));
    }

    #[test]
    fn fenchel_equality_on_graph(p in 1.05f64..1.95, a in -1e3f64..1e3) {
        let b = f_tilde(a, p);
        let lhs = a * b;
        let rhs = big_f_tilde(a, p) + big_f_tilde_star(b, p);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
    }

    #[test]
    fn fenchel_inequality(p in 1.05f64..1.95, a in -1e3f64..1e3, b in -50.0f64..50.0) {
        let lhs = a * b;
        let rhs = big_f_tilde(a, p) + big_f_tilde_star(b, p);
        prop_assert!(lhs <= rhs + 1e-12 * lhs.abs().max(1.0));
        prop_assert!(f_tilde_prime(a, p) > 0.0);
    }

    #[test]
    fn sampled_power_law_meets_its_hypothesis(k in 1.2f64..4.0, t_end in 1e2f64..1e5) {
        // sigma = sigma' = 1: the two-exponent hypothesis holds for k >= 2 with c = 1.
        let f = SampledDecayFn::from_fn(|t| (1.0 + t).powf(-k), t_end, 200, TailModel::PowerLaw(k)).unwrap();
        let v = check_lemma2_cocv(&f, 1.0, 1.0, 1.0).unwrap();
        if k >= 2.0 {
            prop_assert!(v.hypothesis_holds);
            prop_assert!(v.conclusion_bounded);
        }
        if k <= 1.5 {
            prop_assert!(!v.conclusion_bounded);
            prop_assert!(!v.hypothesis_holds);
        }
    }
}

fn random_state(n: usize, amp: f64, coeffs: &[f64]) -> InitialData {
    let grid = Grid::new(n).unwrap();
    let c = coeffs.to_vec();
    let c2 = coeffs.to_vec();
    let pi = std::f64::consts::PI;
    let mut d = InitialData::from_profiles(
        grid,
        move |x| amp * c.iter().enumerate().map(|(k, a)| a * ((k + 1) as f64 * pi * x).sin()).sum::<f64>(),
        move |x| {
            amp * c2.iter().enumerate().map(|(k, a)| a * (k + 1) as f64 * pi * ((k + 1) as f64 * pi * x).cos()).sum::<f64>()
        },
        move |x| amp * (2.0 * pi * x).sin(),
    )
    .unwrap();
    let last = n;
    d.z0[last] = 0.0;
    for j in [0, last] {
        let v = 0.5 * (d.rho0[j] + d.xi0[j]);
        d.rho0[j] = v;
        d.xi0[j] = v;
    }
    d
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn undamped_runs_conserve_energy(
        p in prop::sample::select(vec![1.5, 2.0, 3.0, 4.5]),
        amp in 0.1f64..3.0,
        coeffs in prop::collection::vec(-1.0f64..1.0, 1..4),
        t_final in 0.1f64..8.0,
    ) {
        let init = random_state(64, amp, &coeffs);
        let grid = init.grid;
        let spec = RunSpec {
            damping: DampingSpec::linear(1.0).unwrap(),
            coeff: CoefficientProfile::zero(&grid),
            mode: BoundaryMode::Dirichlet,
            t_final,
            stride: 1,
        };
        let e0 = energy_ep(&init.state(), p).unwrap();
        let end = run_with(&init, &spec, |s| {
            assert_eq!(s.rho[0], s.xi[0]);
            Ok(())
        }).unwrap();
        let e1 = energy_ep(&end, p).unwrap();
        prop_assert!((e1 - e0).abs() <= 1e-10 * e0);
    }

    #[test]
    fn damped_runs_dissipate_every_functional(
        d in damping_strategy(),
        amp in 0.05f64..3.0,
        coeffs in prop::collection::vec(-1.0f64..1.0, 1..4),
        p in 1.2f64..5.0,
    ) {
        let init = random_state(64, amp, &coeffs);
        let grid = init.grid;
        let coeff = CoefficientProfile::trapezoid(&grid, (0.25, 0.75), 1.0, 0.05).unwrap();
        let mut sim = Simulator::new(&init, d.clone(), coeff.clone(), BoundaryMode::Dirichlet).unwrap();
        let mut pots = vec![Potential::Power(p), Potential::Cosh];
        if p < 2.0 {
            pots.push(Potential::Modified(p));
        }
        let e0: Vec<f64> = pots.iter().map(|&f| potential_energy(sim.state(), f)).collect();
        let mut prev = e0.clone();
        for _ in 0..256 {
            sim.step().unwrap();
            let s = sim.state();
            for (k, &f) in pots.iter().enumerate() {
                let e = potential_energy(s, f);
                prop_assert!(e <= prev[k] + 1e-12 * e0[k], "{f:?}: {} -> {e}", prev[k]);
                prev[k] = e;
            }
            prop_assert!(dissipation_rate(s, &d, &coeff, p).unwrap() >= -1e-14);
            let (ep, cal) = (energy_ep(s, p).unwrap(), energy_cal_ep(s, p).unwrap());
            prop_assert!(cal <= ep * (1.0 + 1e-12) && cal >= 2f64.powf(-p) * ep * (1.0 - 1e-12));
            prop_assert_eq!(s.rho[0], s.xi[0]);
        }
    }

    #[test]
    fn weight_inverse_derivative_identity(m in 1u32..4, t in 0.01f64..1e4, q in 1.5f64..4.0) {
        let d = DampingSpec::polynomial(q, 1.0).unwrap();
        let w = WeightFamily::build(m, 0.5, &d, 1e8).unwrap();
        let s = w.phi_m(t);
        prop_assert!((w.phi_m_prime(t) * w.dpsi(s) - 1.0).abs() < 1e-8);
        prop_assert!(w.phi_m_second(t) <= 0.0);
        prop_assert!(w.eps_m(t) < w.eps_m(0.0));
    }
}

#[test]
fn conclusion_violations_also_violate_hypotheses() {
    let pw = |k: f64| SampledDecayFn::from_fn(|t| (1.0 + t).powf(-k), 1e5, 300, TailModel::PowerLaw(k)).unwrap();
    let slow = SampledDecayFn::from_fn(|t| 1.0 / (std::f64::consts::E + t).ln(), 1e5, 300, TailModel::PowerLaw(0.1)).unwrap();
    let two_exp = [(pw(1.0), 1.0, 1.0), (pw(1.5), 1.0, 1.0), (slow, 1.0, 1.0)];
    for (f, s, sp) in &two_exp {
        let v = check_lemma2_cocv(f, *s, *sp, 1.0).unwrap();
        assert!(!v.conclusion_bounded && !v.hypothesis_holds, "{v:?}");
    }
    for (f, p, m) in [(pw(2.0), 4.0, 1), (pw(3.0), 4.0, 2)] {
        let v = check_lemma_cocv(&f, p, m, 1.0, DEFAULT_DELTA).unwrap();
        assert!(!v.conclusion_bounded && !v.hypothesis_holds, "{v:?}");
    }
}
