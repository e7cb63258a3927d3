//! Bent coordinates around each trajectory, assembly of the multi-bump
//! approximation `W`, its residual `S[W] = Delta W + W^p - W`, and the
//! weighted sup norms used to measure it.

use rayon::prelude::*;
use serde::Serialize;

use crate::cutoff::Switch;
use crate::dancer::wdelta_jet;
use crate::error::{Error, Result};
use crate::grid::{EvenSeries, Field2D, Grid2D};
use crate::profile1d::{constants, HomoclinicProfile, QuadratureSpec};
use crate::quad;
use crate::toda::{integrate_toda, TodaConfig, TodaTrajectory};

/// Beyond this distance from a centre a bump contributes below 1e-16.
const BUMP_SUPPORT: f64 = 42.0;

/// Change of variables attached to one bump: centre line `f`, slope `beta`,
/// and the switch `eta(alpha |z|)` that turns the rotation on.
#[derive(Debug, Clone, Copy)]
pub struct BentCoordinateMap<F: Fn(f64) -> [f64; 3]> {
    pub f: F,
    pub beta: f64,
    pub alpha: f64,
    pub switch: Switch,
}

impl<F: Fn(f64) -> [f64; 3]> BentCoordinateMap<F> {
    pub fn row(&self, z: f64) -> BentRow {
        BentRow::new(self.beta, self.alpha, &self.switch, z, (self.f)(z.abs()))
    }

    /// `(X, Z)` at `(x, z)`.
    pub fn bent_coords(&self, x: f64, z: f64) -> (f64, f64) {
        let p = self.row(z).at(x);
        (p.x, p.z)
    }

    /// Jacobian `[[X_x, X_z], [Z_x, Z_z]]` with the sign of `z` accounted for.
    pub fn jacobian(&self, x: f64, z: f64) -> [[f64; 2]; 2] {
        let p = self.row(z).at(x);
        let s = if z < 0.0 { -1.0 } else { 1.0 };
        [[p.xx, s * p.xz], [p.zx, s * p.zz]]
    }
}

/// `z`-dependent part of a bent coordinate map, evaluated for `z >= 0`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BentRow {
    pub z: f64,
    /// Centre `[f, f', f'']`.
    pub f: [f64; 3],
    /// `g = beta eta(alpha z)` and its `z` derivatives.
    pub g: [f64; 3],
    /// `a0 = sqrt(1 + g^2)` and derivatives.
    pub a0: [f64; 3],
    /// `a1 = 1 / a0` and derivatives.
    pub a1: [f64; 3],
}

/// Bent coordinates with their first partials and Laplacians.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct BentPoint {
    pub x: f64,
    pub z: f64,
    /// `X_x`, `X_z`, `Z_x`, `Z_z`.
    pub xx: f64,
    pub xz: f64,
    pub zx: f64,
    pub zz: f64,
    pub lap_x: f64,
    pub lap_z: f64,
}

impl BentPoint {
    pub fn grad_x_sq(&self) -> f64 {
        self.xx * self.xx + self.xz * self.xz
    }

    pub fn grad_z_sq(&self) -> f64 {
        self.zx * self.zx + self.zz * self.zz
    }

    pub fn grad_dot(&self) -> f64 {
        self.xx * self.zx + self.xz * self.zz
    }
}

impl BentRow {
    pub fn new(beta: f64, alpha: f64, switch: &Switch, z: f64, f: [f64; 3]) -> Self {
        let z = z.abs();
        let [e, ep, epp] = switch.eval(alpha * z);
        let g = [beta * e, beta * alpha * ep, beta * alpha * alpha * epp];
        let a0v = (1.0 + g[0] * g[0]).sqrt();
        let gg = g[1] * g[1] + g[0] * g[2];
        let a0 = [a0v, g[0] * g[1] / a0v, gg / a0v - (g[0] * g[1]).powi(2) / a0v.powi(3)];
        let a1 = [
            1.0 / a0v,
            -g[0] * g[1] / a0v.powi(3),
            -gg / a0v.powi(3) + 3.0 * (g[0] * g[1]).powi(2) / a0v.powi(5),
        ];
        Self { z, f, g, a0, a1 }
    }

    pub fn at(&self, x: f64) -> BentPoint {
        let [f, fp, fpp] = self.f;
        let [g, gp, gpp] = self.g;
        let [a0, a0p, a0pp] = self.a0;
        let [a1, a1p, a1pp] = self.a1;
        let z = self.z;
        let xi = x - f;
        let bx = xi * a1;
        let xx = a1;
        let xz = -fp * a1 + xi * a1p;
        let lap_x = -fpp * a1 - 2.0 * fp * a1p + xi * a1pp;
        let bz = z * a0 + g * bx;
        let zx = g * a1;
        let zz = a0 + z * a0p + gp * bx + g * xz;
        let lap_z = 2.0 * a0p + z * a0pp + gpp * bx + 2.0 * gp * xz + g * lap_x;
        BentPoint { x: bx, z: bz, xx, xz, zx, zz, lap_x, lap_z }
    }
}

/// Full gluing datum.
#[derive(Debug, Clone, Serialize)]
pub struct AnsatzParams {
    pub k: usize,
    pub alpha: f64,
    pub p: f64,
    pub profile: HomoclinicProfile,
    pub trajectory: TodaTrajectory,
    /// Corrections added to the trajectory centres (may be empty).
    pub f1: Vec<EvenSeries>,
    /// Coefficients of `Z(X_j)` (may be empty).
    pub e: Vec<EvenSeries>,
    pub delta: Vec<f64>,
    pub switch: Switch,
    pub d_star: f64,
    pub beta: Vec<f64>,
    pub theta0: f64,
}

/// Size checks on the datum against a constant `M`.
#[derive(Debug, Clone, Serialize)]
pub struct DatumBounds {
    /// `max_j (|e_j| + |e_j'| + |e_j''|)` in the `theta0 alpha` weighted sup, over `alpha^2`.
    pub e_over_alpha2: f64,
    /// `max_j |delta_j| / alpha`.
    pub delta_over_alpha: f64,
    /// `min_j min_z (f_{j+1} - f_j) - 2 d*`.
    pub gap_minus_2dstar: f64,
    pub holds: bool,
}

impl AnsatzParams {
    /// Datum built on a trajectory with all corrections zero. Slopes come
    /// from the fitted asymptotics.
    pub fn new(profile: HomoclinicProfile, trajectory: TodaTrajectory) -> Result<Self> {
        let k = trajectory.k;
        let alpha = trajectory.alpha;
        let (beta, theta0) = if k >= 2 {
            let asy = trajectory.asymptotics()?;
            (asy.beta.clone(), asy.theta0)
        } else {
            (vec![0.0], 1.0)
        };
        Ok(Self {
            k,
            alpha,
            p: profile.p,
            profile,
            trajectory,
            f1: Vec::new(),
            e: Vec::new(),
            delta: vec![0.0; k],
            switch: Switch::default(),
            d_star: (1.0 / alpha).ln(),
            beta,
            theta0,
        })
    }

    /// One straight bump `w(x)` along the `z` axis.
    pub fn single_bump(profile: HomoclinicProfile, alpha: f64, z_max: f64) -> Result<Self> {
        let n = 64;
        let h = z_max / n as f64;
        let t = TodaTrajectory {
            k: 1,
            cp: 0.0,
            alpha,
            h,
            z: (0..=n).map(|i| i as f64 * h).collect(),
            f: vec![vec![0.0; n + 1]],
            fp: vec![vec![0.0; n + 1]],
            fpp: vec![vec![0.0; n + 1]],
            energy_drift: 0.0,
            asymptotics: None,
        };
        Self::new(profile, t)
    }

    /// Standard two-or-more bump datum: `p`, equally spaced initial data
    /// `a_j = 2j - k - 1`, `c_p` from the profile constants, and a Toda
    /// trajectory covering the default window.
    pub fn toda_datum(p: f64, k: usize, alpha: f64) -> Result<Self> {
        let a: Vec<f64> = (1..=k).map(|j| 2.0 * j as f64 - k as f64 - 1.0).collect();
        Self::toda_datum_with(p, &a, alpha)
    }

    pub fn toda_datum_with(p: f64, a: &[f64], alpha: f64) -> Result<Self> {
        let prof = HomoclinicProfile::new(p)?;
        let consts = constants(p, QuadratureSpec::default())?;
        let k = a.len();
        if k < 2 {
            return Err(Error::ConfigInvalid("toda_datum needs k >= 2".into()));
        }
        // The trajectory window must contain the ansatz window 8/(theta0 alpha)
        // with margin; theta0 is not known before the fit, so bound it from
        // the slopes of a short probe run.
        let probe = integrate_toda(&TodaConfig::new(a.to_vec(), consts.small_cp, 1.0, 60.0))?.with_asymptotics()?;
        let theta0 = probe.asymptotics.as_ref().map(|s| s.theta0).unwrap_or(1.0);
        let z_max = 2.0 * 8.0 / (theta0 * alpha) + 40.0 / alpha;
        let traj = if k == 2 {
            TodaTrajectory::from_closed_form_k2(a[0], a[1], consts.small_cp, alpha, z_max, 1e-2 / alpha)
        } else {
            integrate_toda(&TodaConfig::new(a.to_vec(), consts.small_cp, alpha, z_max))?
        };
        Self::new(prof, traj.with_asymptotics()?)
    }

    /// Centre `[f_j, f_j', f_j'']` including the correction.
    pub fn center(&self, j: usize, z: f64) -> [f64; 3] {
        let mut c = self.trajectory.eval(j, z);
        if let Some(s) = self.f1.get(j) {
            let d = s.eval(z);
            for i in 0..3 {
                c[i] += d[i];
            }
        }
        c
    }

    pub fn map(&self, j: usize) -> BentCoordinateMap<impl Fn(f64) -> [f64; 3] + '_> {
        BentCoordinateMap { f: move |z| self.center(j, z), beta: self.beta[j], alpha: self.alpha, switch: self.switch }
    }

    pub fn row(&self, j: usize, z: f64) -> BentRow {
        BentRow::new(self.beta[j], self.alpha, &self.switch, z, self.center(j, z.abs()))
    }

    pub fn e_at(&self, j: usize, z: f64) -> [f64; 3] {
        self.e.get(j).map(|s| s.eval(z)).unwrap_or([0.0; 3])
    }

    pub fn bounds(&self, m: f64) -> DatumBounds {
        let a = self.theta0 * self.alpha;
        let e = self.e.iter().map(|s| s.weighted_sups(a).iter().sum::<f64>()).fold(0.0, f64::max);
        let d = self.delta.iter().fold(0.0f64, |x, v| x.max(v.abs()));
        let mut gap = f64::INFINITY;
        let zmax = self.trajectory.z_max();
        for i in 0..=200 {
            let z = zmax * i as f64 / 200.0;
            for j in 0..self.k.saturating_sub(1) {
                gap = gap.min(self.center(j + 1, z)[0] - self.center(j, z)[0]);
            }
        }
        let gap = if self.k > 1 { gap - 2.0 * self.d_star } else { f64::INFINITY };
        let e2 = e / (self.alpha * self.alpha);
        let da = d / self.alpha;
        DatumBounds { e_over_alpha2: e2, delta_over_alpha: da, gap_minus_2dstar: gap, holds: e2 <= m && da <= m && gap >= -m }
    }

    /// Default grid: spacing `h`, `Z_max = 8/(theta0 alpha)` and
    /// `X_max = max_j |f_j| + 25` over that window.
    pub fn default_grid(&self, h: f64) -> Result<Grid2D> {
        let z_max = 8.0 / (self.theta0 * self.alpha);
        self.grid_with(h, z_max)
    }

    pub fn grid_with(&self, h: f64, z_max: f64) -> Result<Grid2D> {
        let mut fm: f64 = 0.0;
        for i in 0..=400 {
            let z = z_max * i as f64 / 400.0;
            for j in 0..self.k {
                fm = fm.max(self.center(j, z)[0].abs());
            }
        }
        Grid2D::new(fm + 25.0, z_max, h, h)
    }

    pub(crate) fn check_grid(&self, grid: &Grid2D) -> Result<()> {
        for kk in 0..grid.nz {
            let z = grid.z(kk);
            for j in 0..self.k {
                let c = self.center(j, z)[0];
                if c.abs() >= grid.x_max {
                    return Err(Error::GridTooSmall(format!(
                        "bump {j} centre {c:.3} at z = {z:.3} outside |x| <= {}",
                        grid.x_max
                    )));
                }
            }
        }
        Ok(())
    }
}

/// `W` with analytic first derivatives and Laplacian.
#[derive(Debug, Clone)]
pub struct AnsatzField {
    pub w: Field2D,
    pub wx: Field2D,
    pub wz: Field2D,
    pub lap: Field2D,
}

/// Contribution of one bent bump to `(W, W_x, W_z, Delta W)` at one point.
#[inline]
fn bump_point(prof: &HomoclinicProfile, delta: f64, e: [f64; 3], b: &BentPoint) -> [f64; 4] {
    let j = wdelta_jet(prof, delta, b.x, b.z);
    let mut v = j.v;
    let mut vx = j.x * b.xx + j.z * b.zx;
    let mut vz = j.x * b.xz + j.z * b.zz;
    let mut lap = j.xx * b.grad_x_sq() + 2.0 * j.xz * b.grad_dot() + j.zz * b.grad_z_sq() + j.x * b.lap_x + j.z * b.lap_z;
    if e != [0.0; 3] {
        let [zv, zp, zpp] = prof.z_all(b.x);
        v += e[0] * zv;
        vx += e[0] * zp * b.xx;
        vz += e[1] * zv + e[0] * zp * b.xz;
        lap += e[2] * zv + 2.0 * e[1] * zp * b.xz + e[0] * (zpp * b.grad_x_sq() + zp * b.lap_x);
    }
    [v, vx, vz, lap]
}

/// Assemble `W = sum_j w_{delta_j}(X_j, Z_j) + sum_j e_j(z) Z(X_j)` on the
/// grid (z >= 0; the field is even in z).
pub fn assemble_w(params: &AnsatzParams, grid: &Grid2D) -> Result<AnsatzField> {
    params.check_grid(grid)?;
    let nx = grid.nx;
    let xs = grid.xs();
    let rows: Vec<[Vec<f64>; 4]> = (0..grid.nz).into_par_iter().map(|kk| row_values(params, grid.z(kk), &xs)).collect();
    let mut fields = [Field2D::zeros(*grid), Field2D::zeros(*grid), Field2D::zeros(*grid), Field2D::zeros(*grid)];
    for (kk, r) in rows.into_iter().enumerate() {
        for q in 0..4 {
            fields[q].data[kk * nx..(kk + 1) * nx].copy_from_slice(&r[q]);
        }
    }
    let [w, wx, wz, lap] = fields;
    Ok(AnsatzField { w, wx, wz, lap })
}

/// `(W, W_x, W_z, Delta W)` along one row `z` at the abscissae `xs`.
pub fn row_values(params: &AnsatzParams, z: f64, xs: &[f64]) -> [Vec<f64>; 4] {
    let n = xs.len();
    let mut out = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for j in 0..params.k {
        let row = params.row(j, z);
        let e = params.e_at(j, z);
        let c = row.f[0];
        for (i, &x) in xs.iter().enumerate() {
            if (x - c).abs() > BUMP_SUPPORT {
                continue;
            }
            let b = row.at(x);
            let v = bump_point(&params.profile, params.delta[j], e, &b);
            for q in 0..4 {
                out[q][i] += v[q];
            }
        }
    }
    out
}

/// Analytic `S[W]` along one row.
pub fn residual_row(params: &AnsatzParams, z: f64, xs: &[f64]) -> Vec<f64> {
    let [w, _, _, lap] = row_values(params, z, xs);
    w.iter().zip(&lap).map(|(w, l)| l + w.max(0.0).powf(params.p) - w).collect()
}

/// Quadratic defect of the first-order Dancer expansion along one row:
/// `sum_j (w + v)^p - w^p - p w^{p-1} v` with `w = w(X_j)` and
/// `v = delta_j Z(X_j) cos(sqrt(lambda1) Z_j)`. The true Dancer line cancels
/// it with its `delta^2` correction; the first-order ansatz does not, and it
/// does not decay in `z`.
pub fn dancer_defect_row(params: &AnsatzParams, z: f64, xs: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; xs.len()];
    let om = crate::profile1d::lambda1(params.p).sqrt();
    let p = params.p;
    for j in 0..params.k {
        let d = params.delta[j];
        if d == 0.0 {
            continue;
        }
        let row = params.row(j, z);
        let c = row.f[0];
        for (i, &x) in xs.iter().enumerate() {
            if (x - c).abs() > BUMP_SUPPORT {
                continue;
            }
            let b = row.at(x);
            let w = params.profile.w(b.x);
            let v = d * params.profile.z(b.x) * (om * b.z).cos();
            out[i] += (w + v).max(0.0).powf(p) - w.powf(p) - p * w.powf(p - 1.0) * v;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ResidualMethod {
    Analytic,
    FiniteDifference,
}

/// `S[W] = Delta W + W^p - W` with `W^p` taken as `max(W, 0)^p`. The
/// finite-difference variant uses the 5-point Laplacian and is zero on
/// boundary nodes.
pub fn residual_s(params: &AnsatzParams, grid: &Grid2D, method: ResidualMethod) -> Result<Field2D> {
    let a = assemble_w(params, grid)?;
    Ok(residual_from(&a, params.p, method))
}

pub fn residual_from(a: &AnsatzField, p: f64, method: ResidualMethod) -> Field2D {
    let lap = match method {
        ResidualMethod::Analytic => a.lap.clone(),
        ResidualMethod::FiniteDifference => a.w.laplacian(),
    };
    let g = a.w.grid;
    let mut out = Field2D::zeros(g);
    for kk in 0..g.nz {
        for i in 0..g.nx {
            let id = g.idx(kk, i);
            if method == ResidualMethod::FiniteDifference && !a.w.is_interior(kk, i) {
                continue;
            }
            let w = a.w.data[id];
            out.data[id] = lap.data[id] + w.max(0.0).powf(p) - w;
        }
    }
    out
}

/// Weight data for `||phi||_{sigma, theta0 alpha, *}`: centres sampled per
/// grid row.
#[derive(Debug, Clone, Serialize)]
pub struct WeightedNormSpec {
    pub sigma: f64,
    pub theta0: f64,
    pub alpha: f64,
    /// `centers[row][j]`.
    pub centers: Vec<Vec<f64>>,
}

impl WeightedNormSpec {
    pub fn new(params: &AnsatzParams, grid: &Grid2D, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma < 1.0) {
            return Err(Error::ConfigInvalid(format!("sigma must lie in (0,1), got {sigma}")));
        }
        let centers = (0..grid.nz).map(|kk| (0..params.k).map(|j| params.center(j, grid.z(kk))[0]).collect()).collect();
        Ok(Self { sigma, theta0: params.theta0, alpha: params.alpha, centers })
    }

    pub fn weight(&self, kk: usize, x: f64, z: f64) -> f64 {
        let damp = (-self.theta0 * self.alpha * z.abs()).exp();
        self.centers[kk].iter().map(|c| (-self.sigma * (x - c).abs()).exp()).sum::<f64>() * damp
    }
}

/// `sup |phi| / sum_j exp(-sigma |x - f_j(z)| - theta0 alpha |z|)` over the grid.
pub fn weighted_norm(field: &Field2D, spec: &WeightedNormSpec) -> f64 {
    let g = field.grid;
    (0..g.nz)
        .into_par_iter()
        .map(|kk| {
            let z = g.z(kk);
            let mut m: f64 = 0.0;
            for i in 0..g.nx {
                let v = field.at(kk, i);
                if v != 0.0 {
                    m = m.max(v.abs() / spec.weight(kk, g.x(i), z));
                }
            }
            m
        })
        .reduce(|| 0.0, f64::max)
}

/// Single-bump norm `sup e^{sigma |x| + a |z|} |phi|`.
pub fn single_bump_norm(field: &Field2D, sigma: f64, a: f64) -> f64 {
    let g = field.grid;
    let mut m: f64 = 0.0;
    for kk in 0..g.nz {
        for i in 0..g.nx {
            let v = field.at(kk, i);
            if v != 0.0 {
                m = m.max(v.abs() * (sigma * g.x(i).abs() + a * g.z(kk)).exp());
            }
        }
    }
    m
}

/// Largest `|S[W]|` on the line `x = (f_1 + f_2)/2` (nearest grid column).
pub fn midline_residual(params: &AnsatzParams, s: &Field2D) -> f64 {
    if params.k < 2 {
        return 0.0;
    }
    let g = s.grid;
    let mut m: f64 = 0.0;
    for kk in 0..g.nz {
        let z = g.z(kk);
        let mid = 0.5 * (params.center(0, z)[0] + params.center(1, z)[0]);
        let i = ((mid + g.x_max) / g.hx).round() as usize;
        if i < g.nx {
            m = m.max(s.at(kk, i).abs());
        }
    }
    m
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorScalingRow {
    pub alpha: f64,
    pub estar: f64,
    /// `E_* / alpha^{2 - 2 sigma}`.
    pub constant: f64,
    /// Largest residual on the mid-line over `alpha^2`.
    pub midline_over_alpha2: f64,
    pub nx: usize,
    pub nz: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorScalingReport {
    pub k: usize,
    pub p: f64,
    pub sigma: f64,
    pub h: f64,
    pub rows: Vec<ErrorScalingRow>,
    /// Least-squares slope of `log E_*` against `log alpha`.
    pub slope: f64,
    /// Ratio of the largest to smallest implied constant.
    pub constant_spread: f64,
}

/// `E_* = ||S[W]||_{sigma, theta0 alpha, *}` for the plain Toda datum
/// (no corrections) at each `alpha`, with a fitted power law.
pub fn verify_error_scaling(k: usize, p: f64, sigma: f64, alphas: &[f64], h: f64) -> Result<ErrorScalingReport> {
    let rows = alphas.iter().map(|&a| error_scaling_row(k, p, sigma, a, h)).collect::<Result<Vec<_>>>()?;
    fit_error_scaling(k, p, sigma, h, rows)
}

/// `E_*` for one `alpha`.
pub fn error_scaling_row(k: usize, p: f64, sigma: f64, alpha: f64, h: f64) -> Result<ErrorScalingRow> {
    let params = if k == 1 {
        AnsatzParams::single_bump(HomoclinicProfile::new(p)?, alpha, 8.0 / alpha)?
    } else {
        AnsatzParams::toda_datum(p, k, alpha)?
    };
    let grid = params.default_grid(h)?;
    let s = residual_s(&params, &grid, ResidualMethod::Analytic)?;
    let spec = WeightedNormSpec::new(&params, &grid, sigma)?;
    let estar = weighted_norm(&s, &spec);
    Ok(ErrorScalingRow {
        alpha,
        estar,
        constant: estar / alpha.powf(2.0 - 2.0 * sigma),
        midline_over_alpha2: midline_residual(&params, &s) / (alpha * alpha),
        nx: grid.nx,
        nz: grid.nz,
    })
}

/// Power-law fit over rows from [`error_scaling_row`].
pub fn fit_error_scaling(k: usize, p: f64, sigma: f64, h: f64, rows: Vec<ErrorScalingRow>) -> Result<ErrorScalingReport> {
    if rows.len() < 2 {
        return Err(Error::ConfigInvalid("need at least two alpha values".into()));
    }
    let lx: Vec<f64> = rows.iter().map(|r| r.alpha.ln()).collect();
    let ly: Vec<f64> = rows.iter().map(|r| r.estar.max(1e-300).ln()).collect();
    let (slope, _) = quad::linear_fit(&lx, &ly);
    let cmax = rows.iter().map(|r| r.constant).fold(0.0, f64::max);
    let cmin = rows.iter().map(|r| r.constant).fold(f64::INFINITY, f64::min);
    Ok(ErrorScalingReport { k, p, sigma, h, rows, slope, constant_spread: cmax / cmin })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn straight(beta: f64, b: f64) -> impl Fn(f64) -> [f64; 3] {
        move |z: f64| [beta * z.abs() + b, beta, 0.0]
    }

    #[test]
    fn flat_map_collapses() {
        let m = BentCoordinateMap { f: |_z: f64| [0.3, 0.0, 0.0], beta: 0.0, alpha: 0.1, switch: Switch::default() };
        let (x, z) = m.bent_coords(1.0, -2.0);
        assert!((x - 0.7).abs() < 1e-15 && (z - 2.0).abs() < 1e-15);
    }

    #[test]
    fn rotation_region_is_rigid() {
        let m = BentCoordinateMap { f: straight(0.4, 1.0), beta: 0.4, alpha: 0.1, switch: Switch::default() };
        for (x, z) in [(0.0, 25.0), (3.0, 40.0), (-7.0, 30.0)] {
            let j = m.jacobian(x, z);
            let dot = j[0][0] * j[1][0] + j[0][1] * j[1][1];
            let nx = j[0][0].hypot(j[0][1]);
            let nz = j[1][0].hypot(j[1][1]);
            assert!(dot.abs() < 1e-10 && (nx - 1.0).abs() < 1e-10 && (nz - 1.0).abs() < 1e-10);
            let p = m.row(z).at(x);
            assert!(p.lap_x.abs() < 1e-12 && p.lap_z.abs() < 1e-12);
        }
    }

    #[test]
    fn map_derivatives_match_differences() {
        let f = |z: f64| {
            let s = (0.2 * z).sin();
            [s, 0.2 * (0.2 * z).cos(), -0.04 * s]
        };
        let m = BentCoordinateMap { f, beta: 0.3, alpha: 0.5, switch: Switch::default() };
        let h = 1e-4;
        for (x, z) in [(0.5, 2.5), (-1.0, 3.1), (2.0, 3.9)] {
            let p = m.row(z).at(x);
            let c = |x: f64, z: f64| m.bent_coords(x, z);
            let xz = (c(x, z + h).0 - c(x, z - h).0) / (2.0 * h);
            let zz = (c(x, z + h).1 - c(x, z - h).1) / (2.0 * h);
            let xzz = (c(x, z + h).0 - 2.0 * c(x, z).0 + c(x, z - h).0) / (h * h);
            let zzz = (c(x, z + h).1 - 2.0 * c(x, z).1 + c(x, z - h).1) / (h * h);
            assert!((xz - p.xz).abs() < 1e-7, "{xz} {}", p.xz);
            assert!((zz - p.zz).abs() < 1e-7);
            assert!((xzz - p.lap_x).abs() < 1e-4);
            assert!((zzz - p.lap_z).abs() < 1e-4);
        }
    }

    #[test]
    fn single_bump_is_exact() {
        let prof = HomoclinicProfile::new(2.0).unwrap();
        let params = AnsatzParams::single_bump(prof, 0.2, 10.0).unwrap();
        let grid = Grid2D::new(20.0, 10.0, 0.1, 0.1).unwrap();
        let a = assemble_w(&params, &grid).unwrap();
        for kk in [0, 50, 100] {
            for i in [0, 100, 150] {
                assert_eq!(a.w.at(kk, i), prof.w(grid.x(i)));
            }
        }
        let s = residual_from(&a, 2.0, ResidualMethod::Analytic);
        assert!(s.sup() < 1e-12);
    }

    #[test]
    fn grid_too_small_is_reported() {
        let params = AnsatzParams::toda_datum(2.0, 2, 0.3).unwrap();
        let grid = Grid2D::new(3.0, 5.0, 0.1, 0.1).unwrap();
        assert!(matches!(assemble_w(&params, &grid), Err(Error::GridTooSmall(_))));
    }

    #[test]
    fn symmetric_datum_gives_even_field() {
        let params = AnsatzParams::toda_datum(2.0, 2, 0.3).unwrap();
        let grid = params.grid_with(0.1, 20.0).unwrap();
        let a = assemble_w(&params, &grid).unwrap();
        let mut worst: f64 = 0.0;
        for kk in 0..grid.nz {
            for i in 0..grid.nx {
                worst = worst.max((a.w.at(kk, i) - a.w.at(kk, grid.nx - 1 - i)).abs());
            }
        }
        assert!(worst < 1e-12, "{worst}");
        assert!(a.w.data.iter().all(|v| *v > 0.0));
    }

    #[test]
    fn norm_of_weight_is_one() {
        let params = AnsatzParams::toda_datum(2.0, 2, 0.3).unwrap();
        let grid = params.grid_with(0.2, 20.0).unwrap();
        let spec = WeightedNormSpec::new(&params, &grid, 0.1).unwrap();
        let f = Field2D::from_fn(grid, |_, _| 0.0);
        let mut phi = f.clone();
        for kk in 0..grid.nz {
            for i in 0..grid.nx {
                phi.data[grid.idx(kk, i)] = spec.weight(kk, grid.x(i), grid.z(kk));
            }
        }
        assert!((weighted_norm(&phi, &spec) - 1.0).abs() < 1e-14);
        assert_eq!(weighted_norm(&f, &spec), 0.0);
        let n = weighted_norm(&phi.scaled(3.7), &spec);
        assert!((n - 3.7).abs() < 1e-13);
    }
}
