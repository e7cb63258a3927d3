use proptest::prelude::*;

use multibump::grid::{Field2D, Grid2D};
use multibump::linear::LinearizedOperator2D;
use multibump::profile1d::{interaction_sequence, HomoclinicProfile};
use multibump::quad::linear_fit;
use multibump::reduction::resonance_check;
use multibump::toda::{hamiltonian, integrate_toda, solve_k2_closed_form, TodaConfig};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn profile_solves_ode(p in 2.0f64..6.0, x in -25.0f64..25.0) {
        let prof = HomoclinicProfile::new(p).unwrap();
        let [w, _, wpp] = prof.w_all(x);
        prop_assert!((wpp - w + w.powf(p)).abs() < 1e-12);
    }

    #[test]
    fn profile_is_even_positive_decreasing(p in 2.0f64..6.0, x in 0.01f64..20.0, dx in 0.01f64..1.0) {
        let prof = HomoclinicProfile::new(p).unwrap();
        prop_assert_eq!(prof.w(x), prof.w(-x));
        prop_assert!(prof.w(x) > 0.0);
        prop_assert!(prof.w(x + dx) < prof.w(x));
        prop_assert!(prof.wp(x) < 0.0);
        prop_assert!(prof.z(x) > 0.0);
    }

    #[test]
    fn translation_mode_is_in_kernel(p in 2.0f64..5.0, x in -12.0f64..12.0) {
        // w''' by fourth-order differences of the analytic w''.
        let prof = HomoclinicProfile::new(p).unwrap();
        let h = 1e-3;
        let wppp = (8.0 * (prof.wpp(x + h) - prof.wpp(x - h)) - (prof.wpp(x + 2.0 * h) - prof.wpp(x - 2.0 * h))) / (12.0 * h);
        let l0 = wppp + prof.potential(x) * prof.wp(x);
        prop_assert!(l0.abs() < 1e-10, "L0 w' = {:e}", l0);
    }

    #[test]
    fn interaction_sequence_is_monotone(p in 2.0f64..4.0, s in 10.0f64..30.0, ds in 0.5f64..5.0) {
        let prof = HomoclinicProfile::new(p).unwrap();
        let (a, b, c) = (interaction_sequence(&prof, s), interaction_sequence(&prof, s + ds), interaction_sequence(&prof, s + 2.0 * ds));
        // Once the increments reach rounding level the sign is noise.
        let floor = 1e-11 * a.abs();
        prop_assert!((b - a) * (c - b) >= 0.0 || (b - a).abs().max((c - b).abs()) < floor);
        prop_assert!((c - b).abs() <= (b - a).abs() + floor);
    }

    #[test]
    fn toda_conserves_energy_and_order(
        k in 2usize..5,
        gaps in proptest::collection::vec(0.5f64..3.0, 4),
        alpha in 0.1f64..1.0,
    ) {
        let mut a = vec![0.0];
        for g in &gaps[..k - 1] {
            a.push(a.last().unwrap() + g);
        }
        let mean = a.iter().sum::<f64>() / k as f64;
        a.iter_mut().for_each(|v| *v -= mean);
        let cp = 60.0;
        let t = integrate_toda(&TodaConfig::new(a, cp, alpha, 10.0 / alpha)).unwrap();
        prop_assert!(t.energy_drift < 1e-8);
        for i in 0..t.z.len() {
            let q: Vec<f64> = (0..k).map(|j| t.f[j][i]).collect();
            let pm: f64 = (0..k).map(|j| t.fp[j][i]).sum();
            prop_assert!(q.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(pm.abs() < 1e-8);
        }
        let q0: Vec<f64> = (0..k).map(|j| t.f[j][0]).collect();
        let p0: Vec<f64> = (0..k).map(|j| t.fp[j][0]).collect();
        let last = t.z.len() - 1;
        let q1: Vec<f64> = (0..k).map(|j| t.f[j][last]).collect();
        let p1: Vec<f64> = (0..k).map(|j| t.fp[j][last]).collect();
        let (h0, h1) = (hamiltonian(cp, &q0, &p0), hamiltonian(cp, &q1, &p1));
        prop_assert!((h0 - h1).abs() < 1e-8 * h0.abs().max(1.0));
    }

    #[test]
    fn toda_k2_matches_closed_form(gap in 0.5f64..4.0, alpha in 0.1f64..1.0) {
        let (a1, a2) = (-gap / 2.0, gap / 2.0);
        let t = integrate_toda(&TodaConfig::new(vec![a1, a2], 60.0, alpha, 20.0 / alpha)).unwrap();
        for (i, &z) in t.z.iter().enumerate() {
            let s = solve_k2_closed_form(a1, a2, 60.0, alpha, z);
            prop_assert!((t.f[0][i] - s[0][0]).abs() < 1e-6);
            prop_assert!((t.f[1][i] - s[1][0]).abs() < 1e-6);
        }
    }

    #[test]
    fn closed_form_is_even(gap in 0.5f64..4.0, alpha in 0.05f64..1.0, z in 0.0f64..200.0) {
        let a = solve_k2_closed_form(-gap / 2.0, gap / 2.0, 60.0, alpha, z);
        let b = solve_k2_closed_form(-gap / 2.0, gap / 2.0, 60.0, alpha, -z);
        for j in 0..2 {
            prop_assert!((a[j][0] - b[j][0]).abs() <= 1e-12 * a[j][0].abs().max(1.0));
            prop_assert!((a[j][1] + b[j][1]).abs() <= 1e-12 * a[j][1].abs().max(1.0));
        }
    }

    #[test]
    fn linear_fit_recovers_lines(m in -5.0f64..5.0, c in -5.0f64..5.0, n in 3usize..20) {
        let x: Vec<f64> = (0..n).map(|i| i as f64 * 0.37 - 1.0).collect();
        let y: Vec<f64> = x.iter().map(|v| m * v + c).collect();
        let (mm, cc) = linear_fit(&x, &y);
        prop_assert!((mm - m).abs() < 1e-10 && (cc - c).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn discrete_operator_is_symmetric(seed_a in proptest::collection::vec(-1.0f64..1.0, 6), seed_b in proptest::collection::vec(-1.0f64..1.0, 6)) {
        let prof = HomoclinicProfile::new(2.0).unwrap();
        let grid = Grid2D::new(6.0, 4.0, 0.2, 0.25).unwrap();
        let op = LinearizedOperator2D::single_bump(&prof, grid);
        let make = |s: &[f64]| {
            let mut f = Field2D::from_fn(grid, |x, z| {
                s[0] * (s[1] * x).sin() * (-0.1 * x * x).exp() * (1.0 + s[2] * (s[3] * z).cos()) + s[4] * (-(x - s[5]).powi(2)).exp()
            });
            for k in 0..grid.nz {
                for i in 0..grid.nx {
                    if !op.is_unknown(k, i) {
                        f.data[grid.idx(k, i)] = 0.0;
                    }
                }
            }
            f
        };
        let (a, b) = (make(&seed_a), make(&seed_b));
        let lhs = op.inner(&op.apply(&a), &b);
        let rhs = op.inner(&a, &op.apply(&b));
        prop_assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0), "{} vs {}", lhs, rhs);
    }

    #[test]
    fn resonance_check_holds_at_any_resolution(h in 0.005f64..0.02) {
        let r = resonance_check(1.25, h).unwrap();
        prop_assert!(r.solution_error < 1e-8 && r.violation_detected);
    }
}
