//! End-to-end runs across modules at small sizes.

use multibump::ansatz::{error_scaling_row, AnsatzParams};
use multibump::corrector::{newton_grid, newton_solve, verify_solution_profile, NewtonConfig};
use multibump::dancer::{continue_dancer_branch, BranchConfig, StripResolution};
use multibump::grid::EvenSeries;
use multibump::profile1d::{constants, HomoclinicProfile, QuadratureSpec};
use multibump::reduction::{project_error, projection_grid};

#[test]
fn single_bump_newton_stays_on_the_bump() {
    let params = AnsatzParams::single_bump(HomoclinicProfile::new(2.0).unwrap(), 0.2, 40.0).unwrap();
    let grid = newton_grid(&params, 0.1).unwrap();
    let (u, rep) = newton_solve(&params, grid, NewtonConfig::default()).unwrap();
    assert!(rep.iterations <= 2, "{} iterations", rep.iterations);
    assert!(rep.positive);
    let d = verify_solution_profile(&u, &params);
    assert!(d.ridge_deviation[0] < 1e-8);
    // The discrete solution differs from w only by the discretization error.
    assert!(rep.distance_sup < 1e-3);
}

#[test]
fn two_bump_newton_is_quadratic_and_ignores_small_e() {
    let alpha = 0.15;
    let params = AnsatzParams::toda_datum(2.0, 2, alpha).unwrap();
    let grid = newton_grid(&params, 0.1).unwrap();
    let (u, rep) = newton_solve(&params, grid, NewtonConfig::default()).unwrap();
    assert!(rep.iterations <= 8 && *rep.residual_sup.last().unwrap() < 1e-9);
    // Last steps: r_{n+1} <= C r_n^2.
    let r = &rep.residual_sup;
    let n = r.len();
    assert!(r[n - 1] / (r[n - 2] * r[n - 2]) < 1e3 || r[n - 1] < 1e-12);
    assert!(r[n - 2] / (r[n - 3] * r[n - 3]) < 1e3);

    let mut perturbed = params.clone();
    let amp = 0.1 * alpha * alpha;
    let h = perturbed.trajectory.h;
    let m = perturbed.trajectory.z.len();
    // Gaussian in z, negligible at the window edge so the boundary data is unchanged.
    let g = |i: usize| {
        let s = alpha * i as f64 * h;
        (s, amp * (-s * s).exp())
    };
    let bump = EvenSeries {
        h,
        v: (0..m).map(|i| g(i).1).collect(),
        d1: (0..m).map(|i| -2.0 * alpha * g(i).0 * g(i).1).collect(),
        d2: (0..m).map(|i| alpha * alpha * (4.0 * g(i).0.powi(2) - 2.0) * g(i).1).collect(),
    };
    perturbed.e = vec![bump; 2];
    let (u2, rep2) = newton_solve(&perturbed, grid, NewtonConfig::default()).unwrap();
    assert!(*rep2.residual_sup.last().unwrap() < 1e-9);
    let diff = u.max_abs_diff(&u2);
    assert!(diff < 1e-8, "solutions differ by {diff:e}");
}

#[test]
fn projections_converge_under_x_refinement() {
    let c = constants(2.0, QuadratureSpec::default()).unwrap();
    let params = AnsatzParams::toda_datum(2.0, 2, 0.1).unwrap();
    let z_window = 20.0;
    let run = |hx: f64| project_error(&params, &projection_grid(&params, z_window, hx, 0.5).unwrap(), &c).unwrap();
    let (a, b, r) = (run(0.2), run(0.1), run(0.05));
    let diff = |x: &Vec<Vec<f64>>, y: &Vec<Vec<f64>>| {
        x.iter().flatten().zip(y.iter().flatten()).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()))
    };
    let (d1, d2) = (diff(&a.pi_f, &r.pi_f), diff(&b.pi_f, &r.pi_f));
    assert!(d2 < 1e-6 || d1 / d2 > 3.5, "errors {d1:e} -> {d2:e}");
}

#[test]
fn midline_residual_scales_like_alpha_squared() {
    let rows: Vec<_> = [0.1, 0.05].iter().map(|&a| error_scaling_row(2, 2.0, 0.1, a, 0.1).unwrap()).collect();
    let (c1, c2) = (rows[0].midline_over_alpha2, rows[1].midline_over_alpha2);
    assert!(c1 > 0.0 && c2 > 0.0);
    assert!(c1.max(c2) / c1.min(c2) < 3.0, "{c1} vs {c2}");
}

#[test]
fn dancer_defect_is_localized_and_quadratic() {
    let cfg = BranchConfig { resolution: StripResolution { x_max: 30.0, hx: 0.05, modes: 6 }, ..BranchConfig::default() };
    let branch = continue_dancer_branch(2.0, 0.08, 2, cfg).unwrap();
    for b in &branch[1..] {
        assert!(b.residual < 1e-10);
        // sup e^{|x|} |defect| stays comparable to sup |defect|.
        assert!(b.defect_weighted.is_finite() && b.defect_weighted < 20.0 * b.defect_norm);
        assert!(b.defect_norm / (b.delta * b.delta) < 1.0);
    }
}
