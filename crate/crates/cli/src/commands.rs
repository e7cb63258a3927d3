//! One function per subcommand: resolve the configuration, run, write
//! artifacts and the manifest, print a summary to stdout.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use statrs::distribution::{ContinuousCDF, StudentsT};

use multibump::ansatz::{
    assemble_w, error_scaling_row, fit_error_scaling, residual_from, weighted_norm, AnsatzParams, ErrorScalingReport, ResidualMethod,
    WeightedNormSpec,
};
use multibump::corrector::{newton_grid, newton_solve, verify_solution_profile, NewtonConfig};
use multibump::dancer::{bifurcation_period, continue_on_strip, BranchConfig, DancerStrip, StripResolution};
use multibump::linear::kernel_convergence;
use multibump::profile1d::{constants, discrete_spectrum, lambda1, HomoclinicProfile, QuadratureSpec};
use multibump::reduction::{
    linear_toda_check, project_error, projection_grid, reduced_fixed_point_iterate, resonance_check, DeltaConfig, ReductionConfig,
};
use multibump::toda::{integrate_toda, TodaConfig};

use crate::config::resolve;
use crate::output::{csv, Outputs};
use crate::CliError;

pub struct Ctx {
    pub out: PathBuf,
    pub file: Option<Value>,
    pub threads: usize,
    pub start: Instant,
}

impl Ctx {
    fn finish<C: Serialize>(&self, outs: &mut Outputs, command: &str, config: &C, summary: Value) -> Result<(), CliError> {
        let path = outs.manifest(command, config, self.start.elapsed().as_secs_f64(), self.threads)?;
        let mut summary = summary;
        summary["manifest"] = json!(path.display().to_string());
        println!("{}", serde_json::to_string_pretty(&summary).map_err(|e| CliError::Io(e.to_string()))?);
        Ok(())
    }
}

fn check(cond: bool, field: &str, msg: &str) -> Result<(), CliError> {
    if cond {
        Ok(())
    } else {
        Err(CliError::Config(format!("field `{field}`: {msg}")))
    }
}

fn check_common(p: f64, alpha: Option<f64>) -> Result<(), CliError> {
    check(p.is_finite() && p > 1.0, "p", "must be a real number above 1")?;
    if let Some(a) = alpha {
        check(a > 0.0 && a < 1.0, "alpha", "must lie in (0, 1)")?;
    }
    Ok(())
}

fn datum(k: usize, p: f64, alpha: f64, a: &Option<Vec<f64>>) -> Result<AnsatzParams, CliError> {
    check(k >= 1, "k", "must be at least 1")?;
    if k == 1 {
        return Ok(AnsatzParams::single_bump(HomoclinicProfile::new(p)?, alpha, 8.0 / alpha)?);
    }
    match a {
        Some(a) => {
            check(a.len() == k, "a", &format!("needs k = {k} entries, got {}", a.len()))?;
            check(a.windows(2).all(|w| w[0] < w[1]), "a", "must be strictly increasing")?;
            Ok(AnsatzParams::toda_datum_with(p, a, alpha)?)
        }
        None => Ok(AnsatzParams::toda_datum(p, k, alpha)?),
    }
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

// ---------------------------------------------------------------- profile

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileEmit {
    Constants,
    Samples,
}

#[derive(Args, Debug, Serialize)]
pub struct ProfileArgs {
    #[arg(long)]
    p: Option<f64>,
    #[arg(long, value_enum)]
    emit: Option<ProfileEmit>,
    /// Half-width of the sample window.
    #[arg(long)]
    xmax: Option<f64>,
    /// Sample spacing.
    #[arg(long)]
    h: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProfileConfig {
    p: f64,
    emit: ProfileEmit,
    xmax: f64,
    h: f64,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        Self { p: 2.0, emit: ProfileEmit::Constants, xmax: 20.0, h: 0.01 }
    }
}

pub fn profile(ctx: &Ctx, args: &ProfileArgs) -> Result<(), CliError> {
    let cfg: ProfileConfig = resolve("profile", ctx.file.as_ref(), args)?;
    check_common(cfg.p, None)?;
    check(cfg.xmax > 0.0, "xmax", "must be positive")?;
    check(cfg.h > 0.0 && cfg.h < cfg.xmax, "h", "must be positive and below xmax")?;
    let prof = HomoclinicProfile::new(cfg.p)?;
    let mut outs = Outputs::new(&ctx.out)?;
    let summary = match cfg.emit {
        ProfileEmit::Constants => {
            let c = constants(cfg.p, QuadratureSpec::default())?;
            let xs: Vec<f64> = (0..1000).map(|i| -cfg.xmax + 2.0 * cfg.xmax * i as f64 / 999.0).collect();
            let ode = xs.iter().map(|&x| prof.ode_residual(x).abs()).fold(0.0, f64::max);
            let eig = xs.iter().map(|&x| prof.eigen_defect(x).abs()).fold(0.0, f64::max);
            let spec = discrete_spectrum(cfg.p, cfg.xmax, cfg.h.max(0.01))?;
            let rec = json!({
                "schema": "multibump.profile.constants/v1",
                "p": cfg.p,
                "lambda1": lambda1(cfg.p),
                "lambda1_discrete": spec.extrapolated[0],
                "spectrum": spec,
                "ode_residual_max": ode,
                "eigen_defect_max": eig,
                "constants": c,
            });
            outs.write_json("profile_constants.json", &rec)?;
            rec
        }
        ProfileEmit::Samples => {
            let n = (2.0 * cfg.xmax / cfg.h).round() as usize;
            let rows = (0..=n).map(|i| {
                let x = -cfg.xmax + i as f64 * cfg.h;
                let [w, wp, wpp] = prof.w_all(x);
                vec![x, w, wp, wpp, prof.z(x)]
            });
            let cols = ["x", "w", "wp", "wpp", "Z"].map(String::from);
            let meta = [("p", cfg.p.to_string()), ("h", cfg.h.to_string()), ("xmax", cfg.xmax.to_string())];
            let path = outs.write("profile_samples.csv", csv("profile", &meta, &cols, rows).as_bytes())?;
            json!({"schema": "multibump.profile.samples/v1", "rows": n + 1, "csv": path.display().to_string()})
        }
    };
    ctx.finish(&mut outs, "profile", &cfg, summary)
}

// ---------------------------------------------------------------- toda

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TodaEmit {
    Trajectory,
    Asymptotics,
}

#[derive(Args, Debug, Serialize)]
pub struct TodaArgs {
    #[arg(long)]
    k: Option<usize>,
    /// Initial positions, comma separated (default `2j - k - 1`).
    #[arg(long, value_delimiter = ',')]
    a: Option<Vec<f64>>,
    /// Coupling `c_p` (default from the profile constants of `p`).
    #[arg(long)]
    cp: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    zmax: Option<f64>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long, value_enum)]
    emit: Option<TodaEmit>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TodaCmdConfig {
    k: usize,
    a: Option<Vec<f64>>,
    cp: Option<f64>,
    p: f64,
    alpha: f64,
    zmax: Option<f64>,
    step: Option<f64>,
    emit: TodaEmit,
}

impl Default for TodaCmdConfig {
    fn default() -> Self {
        Self { k: 2, a: None, cp: None, p: 2.0, alpha: 0.1, zmax: None, step: None, emit: TodaEmit::Trajectory }
    }
}

pub fn toda(ctx: &Ctx, args: &TodaArgs) -> Result<(), CliError> {
    let mut cfg: TodaCmdConfig = resolve("toda", ctx.file.as_ref(), args)?;
    check_common(cfg.p, None)?;
    check(cfg.alpha > 0.0 && cfg.alpha.is_finite(), "alpha", "must be positive")?;
    check(cfg.k >= 1, "k", "must be at least 1")?;
    let a = cfg.a.clone().unwrap_or_else(|| (1..=cfg.k).map(|j| 2.0 * j as f64 - cfg.k as f64 - 1.0).collect());
    check(a.len() == cfg.k, "a", &format!("needs k = {} entries, got {}", cfg.k, a.len()))?;
    let cp = match cfg.cp {
        Some(c) => c,
        None => constants(cfg.p, QuadratureSpec::default())?.small_cp,
    };
    check(cp > 0.0, "cp", "must be positive")?;
    let zmax = cfg.zmax.unwrap_or(40.0 / cfg.alpha);
    check(zmax > 0.0, "zmax", "must be positive")?;
    if let Some(s) = cfg.step {
        check(s > 0.0, "step", "must be positive")?;
    }
    cfg.a = Some(a.clone());
    cfg.cp = Some(cp);
    cfg.zmax = Some(zmax);
    let mut tc = TodaConfig::new(a, cp, cfg.alpha, zmax);
    tc.step = cfg.step;
    let mut traj = integrate_toda(&tc)?;
    if cfg.k >= 2 {
        traj = traj.with_asymptotics()?;
    }
    let mut outs = Outputs::new(&ctx.out)?;
    let summary = match cfg.emit {
        TodaEmit::Trajectory => {
            let k = traj.k;
            let mut cols = vec!["z".to_string()];
            cols.extend((1..=k).map(|j| format!("f_{j}")));
            cols.extend((1..=k).map(|j| format!("fp_{j}")));
            let rows = (0..traj.z.len()).map(|i| {
                let mut r = vec![traj.z[i]];
                r.extend((0..k).map(|j| traj.f[j][i]));
                r.extend((0..k).map(|j| traj.fp[j][i]));
                r
            });
            let meta = [("k", k.to_string()), ("alpha", cfg.alpha.to_string()), ("cp", cp.to_string()), ("h", traj.h.to_string())];
            let path = outs.write("toda_trajectory.csv", csv("toda", &meta, &cols, rows).as_bytes())?;
            json!({
                "schema": "multibump.toda.trajectory/v1",
                "samples": traj.z.len(),
                "energy_drift": traj.energy_drift,
                "ode_residual": traj.ode_residual(),
                "csv": path.display().to_string(),
            })
        }
        TodaEmit::Asymptotics => {
            let rec = json!({
                "schema": "multibump.toda.asymptotics/v1",
                "k": traj.k,
                "alpha": cfg.alpha,
                "cp": cp,
                "energy_drift": traj.energy_drift,
                "asymptotics": traj.asymptotics,
            });
            outs.write_json("toda_asymptotics.json", &rec)?;
            rec
        }
    };
    ctx.finish(&mut outs, "toda", &cfg, summary)
}

// ---------------------------------------------------------------- dancer

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DancerEmit {
    Branch,
}

#[derive(Args, Debug, Serialize)]
pub struct DancerArgs {
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    delta_target: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long, value_enum)]
    emit: Option<DancerEmit>,
    #[arg(long)]
    hx: Option<f64>,
    #[arg(long)]
    xmax: Option<f64>,
    /// Cosine modes in `z` (collocation points minus one).
    #[arg(long)]
    modes: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DancerConfig {
    p: f64,
    delta_target: f64,
    steps: usize,
    emit: DancerEmit,
    hx: f64,
    xmax: f64,
    modes: usize,
}

impl Default for DancerConfig {
    fn default() -> Self {
        let r = StripResolution::default();
        Self { p: 2.0, delta_target: 0.1, steps: 4, emit: DancerEmit::Branch, hx: r.hx, xmax: r.x_max, modes: r.modes }
    }
}

pub fn dancer(ctx: &Ctx, args: &DancerArgs) -> Result<(), CliError> {
    let cfg: DancerConfig = resolve("dancer", ctx.file.as_ref(), args)?;
    check_common(cfg.p, None)?;
    check(cfg.steps >= 1, "steps", "must be at least 1")?;
    check(cfg.delta_target.is_finite(), "delta_target", "must be finite")?;
    let bc = BranchConfig { resolution: StripResolution { x_max: cfg.xmax, hx: cfg.hx, modes: cfg.modes }, ..BranchConfig::default() };
    let strip = DancerStrip::new(cfg.p, bc.resolution)?;
    let t_star = bifurcation_period(&strip)?;
    let branch = continue_on_strip(&strip, cfg.delta_target, cfg.steps, bc)?;
    let mut outs = Outputs::new(&ctx.out)?;
    let cols = ["delta", "T", "residual", "defect_norm"].map(String::from);
    let rows = branch.iter().map(|b| vec![b.delta, b.period, b.residual, b.defect_norm]);
    let meta = [("p", cfg.p.to_string()), ("T_star", format!("{t_star:.15e}")), ("hx", cfg.hx.to_string()), ("modes", cfg.modes.to_string())];
    let path = outs.write("dancer_branch.csv", csv("dancer", &meta, &cols, rows).as_bytes())?;
    let summary = json!({
        "schema": "multibump.dancer/v1",
        "T_star": t_star,
        "T_linear": 2.0 * std::f64::consts::PI / lambda1(cfg.p).sqrt(),
        "lambda1_discrete": strip.lambda1,
        "points": branch.iter().map(|b| json!({
            "delta": b.delta, "T": b.period, "residual": b.residual, "defect_norm": b.defect_norm,
            "defect_weighted": b.defect_weighted, "newton_iterations": b.newton_iterations,
        })).collect::<Vec<_>>(),
        "csv": path.display().to_string(),
    });
    ctx.finish(&mut outs, "dancer", &cfg, summary)
}

// ---------------------------------------------------------------- ansatz

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldEmit {
    Report,
    Csv,
    Binary,
}

#[derive(Args, Debug, Serialize)]
pub struct AnsatzArgs {
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    a: Option<Vec<f64>>,
    /// Grid spacing.
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, value_enum)]
    emit: Option<FieldEmit>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnsatzConfig {
    k: usize,
    p: f64,
    alpha: f64,
    a: Option<Vec<f64>>,
    h: f64,
    sigma: f64,
    emit: FieldEmit,
}

impl Default for AnsatzConfig {
    fn default() -> Self {
        Self { k: 2, p: 2.0, alpha: 0.1, a: None, h: 0.1, sigma: 0.1, emit: FieldEmit::Report }
    }
}

pub fn ansatz(ctx: &Ctx, args: &AnsatzArgs) -> Result<(), CliError> {
    let cfg: AnsatzConfig = resolve("ansatz", ctx.file.as_ref(), args)?;
    check_common(cfg.p, Some(cfg.alpha))?;
    check(cfg.h > 0.0, "h", "must be positive")?;
    check(cfg.sigma > 0.0 && cfg.sigma < 1.0, "sigma", "must lie in (0, 1)")?;
    let params = datum(cfg.k, cfg.p, cfg.alpha, &cfg.a)?;
    let grid = params.default_grid(cfg.h)?;
    let field = assemble_w(&params, &grid)?;
    let s = residual_from(&field, cfg.p, ResidualMethod::Analytic);
    let estar = weighted_norm(&s, &WeightedNormSpec::new(&params, &grid, cfg.sigma)?);
    let mut outs = Outputs::new(&ctx.out)?;
    let mut files = Vec::new();
    match cfg.emit {
        FieldEmit::Report => {}
        FieldEmit::Csv => {
            files.push(outs.write("ansatz_W.csv", field.w.to_csv("W").as_bytes())?);
            files.push(outs.write("ansatz_S.csv", s.to_csv("S").as_bytes())?);
        }
        FieldEmit::Binary => {
            files.push(outs.write("ansatz_W.bin", &field.w.to_bytes())?);
            files.push(outs.write("ansatz_S.bin", &s.to_bytes())?);
        }
    }
    let rec = json!({
        "schema": "multibump.ansatz/v1",
        "k": cfg.k,
        "alpha": cfg.alpha,
        "grid": grid,
        "Estar": estar,
        "residual_sup": s.sup(),
        "W_min": field.w.data.iter().cloned().fold(f64::INFINITY, f64::min),
        "bounds": params.bounds(10.0),
        "beta": params.beta,
        "theta0": params.theta0,
        "fields": files.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
    });
    outs.write_json("ansatz.json", &rec)?;
    ctx.finish(&mut outs, "ansatz", &cfg, rec)
}

// ---------------------------------------------------------------- residual-sweep

#[derive(Args, Debug, Serialize)]
pub struct SweepArgs {
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    /// Comma separated list of alpha values.
    #[arg(long, value_delimiter = ',')]
    alphas: Option<Vec<f64>>,
    #[arg(long)]
    h: Option<f64>,
    /// Also run the Newton correction at each alpha.
    #[arg(long)]
    newton: Option<bool>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    k: usize,
    p: f64,
    sigma: f64,
    alphas: Vec<f64>,
    h: f64,
    newton: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { k: 2, p: 2.0, sigma: 0.1, alphas: vec![0.1, 0.07, 0.05], h: 0.1, newton: false }
    }
}

#[derive(Debug, Serialize)]
struct SweepRow {
    alpha: f64,
    estar: f64,
    estar_constant: f64,
    phi_star: Option<f64>,
    delta: f64,
    newton_iterations: Option<usize>,
    final_residual: Option<f64>,
}

#[derive(Debug, Serialize)]
struct Exponent {
    slope: f64,
    /// 95% interval from the least-squares standard error (absent with two points).
    ci95: Option<[f64; 2]>,
}

fn fit_exponent(alphas: &[f64], ys: &[f64]) -> Exponent {
    let x: Vec<f64> = alphas.iter().map(|a| a.ln()).collect();
    let y: Vec<f64> = ys.iter().map(|v| v.max(1e-300).ln()).collect();
    let (slope, icpt) = multibump::quad::linear_fit(&x, &y);
    let n = x.len();
    let ci95 = if n > 2 {
        let mx = x.iter().sum::<f64>() / n as f64;
        let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
        let rss: f64 = x.iter().zip(&y).map(|(a, b)| (b - slope * a - icpt).powi(2)).sum();
        let se = (rss / (n - 2) as f64 / sxx).sqrt();
        StudentsT::new(0.0, 1.0, (n - 2) as f64).ok().map(|t| {
            let q = t.inverse_cdf(0.975);
            [slope - q * se, slope + q * se]
        })
    } else {
        None
    };
    Exponent { slope, ci95 }
}

/// True when `v` does not increase as alpha decreases.
fn decreasing_with_alpha(alphas: &[f64], v: &[f64]) -> bool {
    let mut idx: Vec<usize> = (0..alphas.len()).collect();
    idx.sort_by(|&a, &b| alphas[b].total_cmp(&alphas[a]));
    idx.windows(2).all(|w| v[w[1]] <= v[w[0]])
}

pub fn residual_sweep(ctx: &Ctx, args: &SweepArgs) -> Result<(), CliError> {
    let cfg: SweepConfig = resolve("residual-sweep", ctx.file.as_ref(), args)?;
    check_common(cfg.p, None)?;
    check(cfg.alphas.len() >= 2, "alphas", "needs at least two values")?;
    check(cfg.alphas.iter().all(|a| *a > 0.0 && *a < 1.0), "alphas", "values must lie in (0, 1)")?;
    check(cfg.sigma > 0.0 && cfg.sigma < 1.0, "sigma", "must lie in (0, 1)")?;
    check(cfg.h > 0.0, "h", "must be positive")?;
    let entries: Vec<(multibump::ansatz::ErrorScalingRow, SweepRow)> = cfg
        .alphas
        .par_iter()
        .map(|&alpha| -> Result<_, CliError> {
            let row = error_scaling_row(cfg.k, cfg.p, cfg.sigma, alpha, cfg.h)?;
            let mut sr = SweepRow {
                alpha,
                estar: row.estar,
                estar_constant: row.constant,
                phi_star: None,
                delta: 0.0,
                newton_iterations: None,
                final_residual: None,
            };
            if cfg.newton {
                let params = datum(cfg.k, cfg.p, alpha, &None)?;
                sr.delta = sup(&params.delta);
                let grid = newton_grid(&params, cfg.h)?;
                let (_, rep) = newton_solve(&params, grid, NewtonConfig { sigma: cfg.sigma, ..NewtonConfig::default() })?;
                sr.phi_star = Some(rep.distance_star);
                sr.newton_iterations = Some(rep.iterations);
                sr.final_residual = rep.residual_sup.last().copied();
            }
            Ok((row, sr))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let (rows, sweep): (Vec<_>, Vec<_>) = entries.into_iter().unzip();
    let report: ErrorScalingReport = fit_error_scaling(cfg.k, cfg.p, cfg.sigma, cfg.h, rows)?;
    let estars: Vec<f64> = sweep.iter().map(|r| r.estar).collect();
    let phis: Option<Vec<f64>> = sweep.iter().map(|r| r.phi_star).collect();
    let rec = json!({
        "schema": "multibump.sweep/v1",
        "k": cfg.k,
        "p": cfg.p,
        "sigma": cfg.sigma,
        "rows": sweep,
        "slope": report.slope,
        "estar_exponent": fit_exponent(&cfg.alphas, &estars),
        "phi_exponent": phis.as_ref().map(|v| fit_exponent(&cfg.alphas, v)),
        "constant_spread": report.constant_spread,
        "estar_decreasing": decreasing_with_alpha(&cfg.alphas, &estars),
        "phi_decreasing": phis.as_ref().map(|v| decreasing_with_alpha(&cfg.alphas, v)),
        "error_scaling": report,
    });
    let mut outs = Outputs::new(&ctx.out)?;
    outs.write_json("residual_sweep.json", &rec)?;
    ctx.finish(&mut outs, "residual-sweep", &cfg, rec)
}

// ---------------------------------------------------------------- linear-check

#[derive(Args, Debug, Serialize)]
pub struct LinearArgs {
    #[arg(long)]
    p: Option<f64>,
    /// Spacing of the coarse kernel check (the fine one uses half).
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    toda_h: Option<f64>,
    #[arg(long)]
    toda_zmax: Option<f64>,
    #[arg(long)]
    resonance_h: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinearConfig {
    p: f64,
    h: f64,
    alpha: f64,
    toda_h: f64,
    toda_zmax: f64,
    resonance_h: f64,
}

impl Default for LinearConfig {
    fn default() -> Self {
        Self { p: 2.0, h: 0.1, alpha: 0.1, toda_h: 0.02, toda_zmax: 400.0, resonance_h: 0.01 }
    }
}

pub fn linear_check(ctx: &Ctx, args: &LinearArgs) -> Result<(), CliError> {
    let cfg: LinearConfig = resolve("linear-check", ctx.file.as_ref(), args)?;
    check_common(cfg.p, Some(cfg.alpha))?;
    check(cfg.h > 0.0, "h", "must be positive")?;
    check(cfg.toda_h > 0.0 && cfg.toda_zmax > 10.0 * cfg.toda_h, "toda_h", "must be positive and well below toda_zmax")?;
    check(cfg.resonance_h > 0.0 && cfg.resonance_h < 1.0, "resonance_h", "must lie in (0, 1)")?;
    let (coarse, fine, ratios) = kernel_convergence(cfg.p, cfg.h)?;
    let c = constants(cfg.p, QuadratureSpec::default())?;
    let toda = linear_toda_check(c.small_cp, cfg.alpha, cfg.toda_h, cfg.toda_zmax)?;
    let res = resonance_check(c.lambda1, cfg.resonance_h)?;
    let rec = json!({
        "schema": "multibump.linear-check/v1",
        "kernel": {"coarse": coarse, "fine": fine, "ratios": ratios},
        "linearized_toda": toda,
        "resonance": res,
    });
    let mut outs = Outputs::new(&ctx.out)?;
    outs.write_json("linear_check.json", &rec)?;
    ctx.finish(&mut outs, "linear-check", &cfg, rec)
}

// ---------------------------------------------------------------- reduce

#[derive(Args, Debug, Serialize)]
pub struct ReduceArgs {
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    a: Option<Vec<f64>>,
    #[arg(long)]
    nu: Option<f64>,
    /// x-step of the projection quadrature.
    #[arg(long)]
    hx: Option<f64>,
    #[arg(long)]
    window_tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    b_min: Option<f64>,
    /// Switch thresholds `(T1, T2)` of the bending cutoff.
    #[arg(long, value_delimiter = ',')]
    cutoff: Option<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReduceConfig {
    k: usize,
    p: f64,
    alpha: f64,
    a: Option<Vec<f64>>,
    nu: f64,
    hx: f64,
    window_tol: f64,
    max_iters: usize,
    tol: f64,
    b_min: f64,
    cutoff: Option<Vec<f64>>,
}

impl Default for ReduceConfig {
    fn default() -> Self {
        let r = ReductionConfig::default();
        Self {
            k: 2,
            p: 2.0,
            alpha: 0.1,
            a: None,
            nu: r.nu,
            hx: r.hx,
            window_tol: r.window_tol,
            max_iters: r.max_iters,
            tol: r.tol,
            b_min: r.delta.b_min,
            cutoff: None,
        }
    }
}

pub fn reduce(ctx: &Ctx, args: &ReduceArgs) -> Result<(), CliError> {
    let cfg: ReduceConfig = resolve("reduce", ctx.file.as_ref(), args)?;
    check_common(cfg.p, Some(cfg.alpha))?;
    check(cfg.k >= 2, "k", "the reduced system needs k >= 2")?;
    check(cfg.nu > 0.0 && cfg.nu < 1.0, "nu", "must lie in (0, 1)")?;
    check(cfg.window_tol > 0.0 && cfg.window_tol < 1.0, "window_tol", "must lie in (0, 1)")?;
    check(cfg.max_iters >= 1, "max_iters", "must be at least 1")?;
    let mut params = datum(cfg.k, cfg.p, cfg.alpha, &cfg.a)?;
    if let Some(c) = &cfg.cutoff {
        check(c.len() == 2 && 0.0 < c[0] && c[0] < c[1], "cutoff", "needs two thresholds 0 < T1 < T2")?;
        params.switch.t1 = c[0];
        params.switch.t2 = c[1];
    }
    let consts = constants(cfg.p, QuadratureSpec::default())?;
    let rc = ReductionConfig {
        nu: cfg.nu,
        hx: cfg.hx,
        window_tol: cfg.window_tol,
        max_iters: cfg.max_iters,
        tol: cfg.tol,
        delta: DeltaConfig { b_min: cfg.b_min, ..DeltaConfig::default() },
        ..ReductionConfig::default()
    };
    // Discrepancy of the leading-order projections on the plain datum.
    let z_window = 8.0 / (params.theta0 * params.alpha);
    let base_rec = project_error(&params, &projection_grid(&params, z_window, cfg.hx, 0.25)?, &consts)?;
    let (state, rep) = reduced_fixed_point_iterate(&params, &consts, rc)?;

    let mut fin = params.clone();
    fin.f1 = state.f1.clone();
    fin.e = state.e.clone();
    fin.delta = state.delta.clone();
    fin.switch = rep.switch;
    let h = state.f1[0].h;
    let grid = projection_grid(&fin, rep.z_max, cfg.hx, h)?;
    let rec_fin = project_error(&fin, &grid, &consts)?;
    let k = cfg.k;
    let mut cols = vec!["z".to_string()];
    for name in ["pi_f", "pi_e", "leading_f", "leading_e"] {
        cols.extend((1..=k).map(|j| format!("{name}_{j}")));
    }
    let rows = (0..rec_fin.z.len()).map(|i| {
        let mut r = vec![rec_fin.z[i]];
        for ch in [&rec_fin.pi_f, &rec_fin.pi_e, &rec_fin.leading.f, &rec_fin.leading.e] {
            r.extend((0..k).map(|j| ch[j][i]));
        }
        r
    });
    let mut outs = Outputs::new(&ctx.out)?;
    let meta = [("k", k.to_string()), ("alpha", cfg.alpha.to_string()), ("hx", cfg.hx.to_string())];
    let path = outs.write("reduce_channels.csv", csv("reduce", &meta, &cols, rows).as_bytes())?;
    let a2 = cfg.alpha * cfg.alpha;
    let summary = json!({
        "schema": "multibump.reduce/v1",
        "alpha": cfg.alpha,
        "delta": rep.delta,
        "contraction_history": rep.contraction,
        "increment_history": rep.increments,
        "norm_history": rep.norms.iter().map(|n| n.total).collect::<Vec<_>>(),
        "projection_discrepancy": {
            "f": base_rec.discrepancy_f,
            "e": base_rec.discrepancy_e,
            "f_over_alpha2": base_rec.discrepancy_f / a2,
            "e_over_alpha2": base_rec.discrepancy_e / a2,
        },
        "final_projection_sup": rep.projection_sup.last(),
        "denominators": rep.denominators,
        "switch": rep.switch,
        "widenings": rep.widenings,
        "window": rep.z_max,
        "channels_csv": path.display().to_string(),
    });
    outs.write_json("reduce.json", &summary)?;
    ctx.finish(&mut outs, "reduce", &cfg, summary)
}

// ---------------------------------------------------------------- solve

#[derive(Args, Debug, Serialize)]
pub struct SolveArgs {
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    a: Option<Vec<f64>>,
    /// Newton stops when the sup of the discrete residual is below this.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long, value_enum)]
    emit: Option<FieldEmit>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveConfig {
    k: usize,
    p: f64,
    alpha: f64,
    a: Option<Vec<f64>>,
    tol: f64,
    h: f64,
    sigma: f64,
    max_iter: usize,
    emit: FieldEmit,
}

impl Default for SolveConfig {
    fn default() -> Self {
        let n = NewtonConfig::default();
        Self { k: 2, p: 2.0, alpha: 0.1, a: None, tol: n.tol, h: 0.1, sigma: n.sigma, max_iter: 8, emit: FieldEmit::Report }
    }
}

pub fn solve(ctx: &Ctx, args: &SolveArgs) -> Result<(), CliError> {
    let cfg: SolveConfig = resolve("solve", ctx.file.as_ref(), args)?;
    check_common(cfg.p, Some(cfg.alpha))?;
    check(cfg.tol > 0.0, "tol", "must be positive")?;
    check(cfg.h > 0.0, "h", "must be positive")?;
    check(cfg.sigma > 0.0 && cfg.sigma < 1.0, "sigma", "must lie in (0, 1)")?;
    let params = datum(cfg.k, cfg.p, cfg.alpha, &cfg.a)?;
    let grid = newton_grid(&params, cfg.h)?;
    let nc = NewtonConfig { tol: cfg.tol, max_iter: cfg.max_iter, sigma: cfg.sigma, ..NewtonConfig::default() };
    let (u, rep) = newton_solve(&params, grid, nc)?;
    let diag = verify_solution_profile(&u, &params);
    let mut outs = Outputs::new(&ctx.out)?;
    let mut files = Vec::new();
    match cfg.emit {
        FieldEmit::Report => {}
        FieldEmit::Csv => files.push(outs.write("solve_u.csv", u.to_csv("u").as_bytes())?),
        FieldEmit::Binary => files.push(outs.write("solve_u.bin", &u.to_bytes())?),
    }
    let rec = json!({
        "schema": "multibump.solve/v1",
        "k": cfg.k,
        "alpha": cfg.alpha,
        "grid": grid,
        "newton": rep,
        "profile": {
            "margin_max": diag.margin_max,
            "ridge_deviation": diag.ridge_deviation,
            "separation_fit": diag.separation_fit,
            "top_midline_max": diag.top_midline_max,
        },
        "fields": files.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
    });
    outs.write_json("solve.json", &rec)?;
    ctx.finish(&mut outs, "solve", &cfg, rec)
}
