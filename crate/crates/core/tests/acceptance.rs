//! Acceptance suite: each criterion prints one PASS/FAIL line with the
//! measured values. Exits non-zero if any criterion fails.
//!
//! Run with `cargo test --release -p multibump --test acceptance`.

use std::f64::consts::PI;
use std::time::Instant;

use multibump::ansatz::{error_scaling_row, fit_error_scaling, AnsatzParams};
use multibump::corrector::{newton_grid, newton_solve, verify_solution_profile, NewtonConfig};
use multibump::dancer::{bifurcation_period, continue_on_strip, BranchConfig, DancerStrip};
use multibump::linear::kernel_convergence;
use multibump::profile1d::{constants, discrete_spectrum, lambda1, HomoclinicProfile, QuadratureSpec};
use multibump::quad::integrate_line;
use multibump::reduction::{linear_toda_check, projection_agreement, reduced_fixed_point_iterate, resonance_check, ReductionConfig};
use multibump::toda::{integrate_toda, solve_k2_closed_form, toda_force, TodaConfig};

fn sci(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.2e}")).collect();
    format!("[{}]", parts.join(", "))
}

type Outcome = Result<(bool, String), String>;

fn samples(l: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| -l + 2.0 * l * i as f64 / (n - 1) as f64)
}

fn profile_correctness() -> Outcome {
    let t = Instant::now();
    let mut worst = 0.0f64;
    for p in [2.0, 3.0] {
        let prof = HomoclinicProfile::new(p).map_err(|e| e.to_string())?;
        for x in samples(20.0, 1000) {
            let [w, _, wpp] = prof.w_all(x);
            worst = worst.max((wpp - w + w.powf(p)).abs());
        }
    }
    let secs = t.elapsed().as_secs_f64();
    Ok((worst < 1e-12 && secs < 1.0, format!("max |w''-w+w^p| = {worst:.2e}, {secs:.3} s")))
}

fn eigenpair() -> Outcome {
    let mut ok = true;
    let mut msg = Vec::new();
    for p in [2.0, 3.0] {
        let spec = discrete_spectrum(p, 20.0, 0.01).map_err(|e| e.to_string())?;
        let err = (spec.extrapolated[0] - (p - 1.0) * (p + 3.0) / 4.0).abs();
        let prof = HomoclinicProfile::new(p).map_err(|e| e.to_string())?;
        let defect = samples(20.0, 1000).map(|x| prof.eigen_defect(x).abs()).fold(0.0, f64::max);
        ok &= err < 1e-6 && defect < 1e-8;
        msg.push(format!("p={p}: |lambda-hat - lambda1| = {err:.2e}, |L0 Z - lambda1 Z| = {defect:.2e}"));
    }
    Ok((ok, msg.join("; ")))
}

fn profile_constants() -> Outcome {
    let prof = HomoclinicProfile::new(2.0).map_err(|e| e.to_string())?;
    let zz = integrate_line(|x| prof.z(x).powi(2), 2.0 * (1.0 + lambda1(2.0)).sqrt(), 1e-14).map_err(|e| e.to_string())?;
    let c = constants(2.0, QuadratureSpec::default()).map_err(|e| e.to_string())?;
    let norm = (zz - 1.0).abs();
    let c0 = (c.c0 - 1.2).abs();
    let cp = (c.cp_limit - 72.0).abs();
    let routes = (c.cp_limit - c.cp_amplitude).abs();
    Ok((
        norm < 1e-10 && c0 < 1e-10 && cp < 1e-6 && (c.cp_amplitude - 72.0).abs() < 1e-6 && routes < 1e-8,
        format!("|int Z^2 - 1| = {norm:.1e}, |c0 - 1.2| = {c0:.1e}, |C_p - 72| = {cp:.1e}, |limit - 2A^2| = {routes:.1e}"),
    ))
}

fn toda_k2() -> Outcome {
    let t = Instant::now();
    let cp = 60.0;
    let mut ode = 0.0f64;
    let mut force = [0.0; 2];
    for z in samples(40.0, 8001) {
        let s = solve_k2_closed_form(-1.0, 1.0, cp, 1.0, z);
        toda_force(cp, &[s[0][0], s[1][0]], &mut force);
        ode = ode.max((s[0][2] - force[0]).abs()).max((s[1][2] - force[1]).abs());
    }
    let traj = integrate_toda(&TodaConfig::new(vec![-1.0, 1.0], cp, 1.0, 40.0)).map_err(|e| e.to_string())?;
    let mut dev = 0.0f64;
    for (i, &z) in traj.z.iter().enumerate() {
        let s = solve_k2_closed_form(-1.0, 1.0, cp, 1.0, z);
        for j in 0..2 {
            dev = dev.max((traj.f[j][i] - s[j][0]).abs()).max((traj.fp[j][i] - s[j][1]).abs());
        }
    }
    let secs = t.elapsed().as_secs_f64();
    Ok((
        ode < 1e-10 && dev < 1e-6 && traj.energy_drift < 1e-8 && secs < 5.0,
        format!("closed-form residual {ode:.1e}, integrator vs closed form {dev:.1e}, energy drift {:.1e}, {secs:.2} s", traj.energy_drift),
    ))
}

fn toda_k3() -> Outcome {
    let traj = integrate_toda(&TodaConfig::new(vec![-2.0, 0.0, 2.0], 60.0, 1.0, 40.0))
        .and_then(|t| t.with_asymptotics())
        .map_err(|e| e.to_string())?;
    let middle = traj.f[1].iter().chain(&traj.fp[1]).fold(0.0f64, |m, v| m.max(v.abs()));
    let a = traj.asymptotics.as_ref().ok_or("no asymptotics")?;
    let sum: f64 = a.beta.iter().sum();
    let ordered = a.beta.windows(2).all(|w| w[0] < w[1]);
    let rates: Vec<f64> = a.decay_rates.iter().flatten().copied().collect();
    let positive = !rates.is_empty() && rates.iter().all(|r| *r > 0.0);
    Ok((
        middle < 1e-10 && sum.abs() < 1e-8 && ordered && positive,
        format!("sup |f_2| = {middle:.1e}, sum beta = {sum:.1e}, beta = {:?}, remainder rates = {rates:?}", a.beta),
    ))
}

fn kernel() -> Outcome {
    let (coarse, fine, ratios) = kernel_convergence(2.0, 0.1).map_err(|e| e.to_string())?;
    let ok = ratios.iter().all(|r| (3.5..=4.5).contains(r));
    Ok((ok, format!("h=0.1 {}, h=0.05 {}, ratios {ratios:.3?}", sci(&coarse.residuals), sci(&fine.residuals))))
}

fn error_law() -> Outcome {
    let t = Instant::now();
    let rows = [0.1, 0.07, 0.05]
        .iter()
        .map(|&a| error_scaling_row(2, 2.0, 0.1, a, 0.1))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let rep = fit_error_scaling(2, 2.0, 0.1, 0.1, rows).map_err(|e| e.to_string())?;
    let secs = t.elapsed().as_secs_f64();
    Ok((
        (1.5..=2.3).contains(&rep.slope) && rep.constant_spread < 3.0 && secs < 600.0,
        format!("slope {:.3}, constant spread {:.3}, {secs:.1} s", rep.slope, rep.constant_spread),
    ))
}

fn projection() -> Outcome {
    let c = constants(2.0, QuadratureSpec::default()).map_err(|e| e.to_string())?;
    let rep = projection_agreement(2.0, 2, &[0.1, 0.05], 0.05, 0.25, &c).map_err(|e| e.to_string())?;
    let (a, b) = (rep.rows[0].discrepancy_f_over_alpha2, rep.rows[1].discrepancy_f_over_alpha2);
    let drop = 1.0 - b / a;
    Ok((drop >= 0.25, format!("discrepancy/alpha^2: {a:.3e} -> {b:.3e} (drop {:.0}%)", 100.0 * drop)))
}

fn linearized_toda() -> Outcome {
    let c = constants(2.0, QuadratureSpec::default()).map_err(|e| e.to_string())?;
    let r = linear_toda_check(c.small_cp, 0.1, 0.02, 400.0).map_err(|e| e.to_string())?;
    let kernel = r.kernel.translation.max(r.kernel.scaling);
    let w_err = (r.wronskian - r.wronskian_expected).abs();
    Ok((
        kernel < 1e-10 && r.round_trip_error < 1e-8 && r.apply_residual < 1e-8 && r.wronskian_spread < 1e-10 && w_err < 1e-10,
        format!(
            "kernel {kernel:.1e}, round trip {:.1e}, Wronskian spread {:.1e} (value {:.10} vs {:.10})",
            r.round_trip_error, r.wronskian_spread, r.wronskian, r.wronskian_expected
        ),
    ))
}

fn resonance() -> Outcome {
    let r = resonance_check(lambda1(2.0), 0.01).map_err(|e| e.to_string())?;
    Ok((
        r.solution_error < 1e-8 && r.equation_residual < 1e-8 && r.violation_detected,
        format!(
            "solution error {:.1e}, equation residual {:.1e}, violation detected: {}",
            r.solution_error, r.equation_residual, r.violation_detected
        ),
    ))
}

fn fixed_point() -> Outcome {
    let c = constants(2.0, QuadratureSpec::default()).map_err(|e| e.to_string())?;
    let params = AnsatzParams::toda_datum(2.0, 2, 0.1).map_err(|e| e.to_string())?;
    let cfg = ReductionConfig { max_iters: 3, ..ReductionConfig::default() };
    let (_, rep) = reduced_fixed_point_iterate(&params, &c, cfg).map_err(|e| e.to_string())?;
    let decreasing = rep.increments.windows(2).all(|w| w[1] < w[0]);
    let contracting = !rep.contraction.is_empty() && rep.contraction.iter().all(|q| *q < 1.0);
    let dmax = rep.delta.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    Ok((
        decreasing && contracting && dmax < 0.1,
        format!("increments {}, contraction {:.3?}, max |delta| {dmax:.3e}", sci(&rep.increments), rep.contraction),
    ))
}

fn newton_witness() -> Outcome {
    let t = Instant::now();
    let mut dist = Vec::new();
    let mut ok = true;
    let mut msg = Vec::new();
    for alpha in [0.1, 0.07] {
        let params = AnsatzParams::toda_datum(2.0, 2, alpha).map_err(|e| e.to_string())?;
        let grid = newton_grid(&params, 0.1).map_err(|e| e.to_string())?;
        let (u, rep) = newton_solve(&params, grid, NewtonConfig::default()).map_err(|e| e.to_string())?;
        let diag = verify_solution_profile(&u, &params);
        let res = *rep.residual_sup.last().unwrap_or(&f64::INFINITY);
        ok &= rep.iterations <= 8 && res < 1e-9 && rep.positive && diag.margin_max < 1e-6;
        msg.push(format!(
            "alpha={alpha}: {} iterations, residual {res:.1e}, min {:.1e}, margin {:.1e}, ||u-W||_* {:.3}",
            rep.iterations, rep.min_value, diag.margin_max, rep.distance_star
        ));
        dist.push(rep.distance_star);
    }
    let secs = t.elapsed().as_secs_f64();
    ok &= dist[1] < dist[0] && secs < 600.0;
    Ok((ok, format!("{}; {secs:.1} s", msg.join("; "))))
}

fn dancer_branch() -> Outcome {
    let strip = DancerStrip::new(2.0, Default::default()).map_err(|e| e.to_string())?;
    let t_star = bifurcation_period(&strip).map_err(|e| e.to_string())?;
    let t_lin = 2.0 * PI / lambda1(2.0).sqrt();
    let branch = continue_on_strip(&strip, 0.1, 2, BranchConfig::default()).map_err(|e| e.to_string())?;
    let ratio = branch[2].defect_norm / branch[1].defect_norm;
    let err = (t_star - t_lin).abs();
    Ok((
        err < 1e-3 && (3.5..=4.5).contains(&ratio),
        format!("T* = {t_star:.6} (|T* - 2pi/sqrt(lambda1)| = {err:.1e}), defect ratio {ratio:.3}"),
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 13] = [
        ("profile correctness", profile_correctness),
        ("eigenpair", eigenpair),
        ("constants", profile_constants),
        ("toda k=2", toda_k2),
        ("toda k=3", toda_k3),
        ("kernel convergence", kernel),
        ("error law", error_law),
        ("projection agreement", projection),
        ("linearized toda", linearized_toda),
        ("resonance solver", resonance),
        ("delta selection and fixed point", fixed_point),
        ("newton witness", newton_witness),
        ("dancer branch", dancer_branch),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let (pass, detail) = match f() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!("{} {:>2} {name}: {detail}", if pass { "PASS" } else { "FAIL" }, i + 1);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
