//! Projections of `S[W]` onto `w'(X_j)` and `Z(X_j)`, their leading-order
//! expressions, and the reduced equations for the corrections
//! `(f1, e, delta)`: linearized Toda inverse, resonance inverse, choice of
//! `delta`, and the fixed-point loop tying them together.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::ansatz::{dancer_defect_row, residual_row, AnsatzParams};
use crate::cutoff::Switch;
use crate::error::{Error, Result};
use crate::grid::{EvenSeries, Grid2D};
use crate::profile1d::ProfileConstants;
use crate::quad;
use crate::toda::TodaTrajectory;

/// Half-width of the x-window used for each projection integral.
const PROJECTION_REACH: f64 = 40.0;

/// Leading-order expressions for the two projections, sampled in `z`.
#[derive(Debug, Clone, Serialize)]
pub struct LeadingOrder {
    /// `-f_j'' (c0 + c1 e_j)`.
    pub curvature: Vec<Vec<f64>>,
    /// `C_p (e^{-|f_j - f_{j-1}|} - e^{-|f_j - f_{j+1}|})`.
    pub interaction: Vec<Vec<f64>>,
    pub f: Vec<Vec<f64>>,
    pub e: Vec<Vec<f64>>,
    /// Coefficient of `delta_j` in the `Z` projection (`B_{0j}`).
    pub b0: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy)]
struct BendCoefficients {
    a0: f64,
    a1: f64,
    g: f64,
    a11: f64,
    a12: f64,
    a22: f64,
}

fn bend_coefficients(params: &AnsatzParams, j: usize, z: f64, fp: f64) -> BendCoefficients {
    let beta = params.beta[j];
    let [eta, eta_p, _] = params.switch.eval(params.alpha * z);
    let g = beta * eta;
    let a0 = (1.0 + g * g).sqrt();
    let a1 = 1.0 / a0;
    let a11 = a1 * a1 * (fp * fp - g * g);
    let a12 = g - fp + a11;
    let a22 = 2.0 * g * (g - fp) + (fp * fp - g * g) + 2.0 * params.alpha * beta * beta * z * eta_p * eta;
    BendCoefficients { a0, a1, g, a11, a12, a22 }
}

/// Evaluate the leading-order projection formulas at the given `z`.
pub fn leading_order_projection(params: &AnsatzParams, consts: &ProfileConstants, z: &[f64]) -> LeadingOrder {
    let k = params.k;
    let om = consts.lambda1.sqrt();
    let mut out = LeadingOrder {
        curvature: vec![vec![0.0; z.len()]; k],
        interaction: vec![vec![0.0; z.len()]; k],
        f: vec![vec![0.0; z.len()]; k],
        e: vec![vec![0.0; z.len()]; k],
        b0: vec![vec![0.0; z.len()]; k],
    };
    for (i, &zz) in z.iter().enumerate() {
        let c: Vec<[f64; 3]> = (0..k).map(|j| params.center(j, zz)).collect();
        for j in 0..k {
            let [f, fp, fpp] = c[j];
            let e = params.e_at(j, zz);
            let d = params.delta[j];
            let b = bend_coefficients(params, j, zz, fp);
            let curv = -fpp * (consts.c0 + consts.c1 * e[0]);
            let mut inter = 0.0;
            if j > 0 {
                inter += (-(f - c[j - 1][0]).abs()).exp();
            }
            if j + 1 < k {
                inter -= (-(f - c[j + 1][0]).abs()).exp();
            }
            inter *= consts.big_cp;
            let (sn, cs) = (om * b.a0 * zz).sin_cos();
            let dterm = 2.0 * om * b.a0 * d * (fp - b.g) * sn;
            out.curvature[j][i] = curv;
            out.interaction[j][i] = inter;
            out.f[j][i] = curv + inter + dterm - 2.0 * consts.c1 * fp * e[1];
            let h0 = b.a11 * b.a0 * consts.wpp_z
                + d * (b.a11 * cs * consts.d2 - 2.0 * b.a12 * b.a0 * om * sn * consts.zp_sq - consts.lambda1 * b.a22 * b.a0 * cs * consts.d0);
            out.e[j][i] = (e[2] + consts.lambda1 * e[0]) * consts.d0 + h0 + d * fpp * b.a1 * b.g * sn * consts.d0;
            out.b0[j][i] = (b.a11 * consts.d2 - consts.lambda1 * b.a22 * consts.d0) * cs;
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct ProjectionRecord {
    pub z: Vec<f64>,
    pub hx: f64,
    /// `int S[W] w'(X_j) dx` per bump and row.
    pub pi_f: Vec<Vec<f64>>,
    /// `int S[W] Z(X_j) dx` per bump and row.
    pub pi_e: Vec<Vec<f64>>,
    pub leading: LeadingOrder,
    /// Numeric minus leading order.
    pub remainder_f: Vec<Vec<f64>>,
    pub remainder_e: Vec<Vec<f64>>,
    /// `max_{j,z} |remainder_f|`.
    pub discrepancy_f: f64,
    pub discrepancy_e: f64,
}

/// Row-wise projections of the analytic `S[W]` only (no leading-order
/// comparison).
pub fn project_numeric(params: &AnsatzParams, grid: &Grid2D) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    project_rows(params, grid, |z, xs| residual_row(params, z, xs))
}

/// As [`project_numeric`], with the quadratic defect of the first-order
/// Dancer expansion ([`dancer_defect_row`]) removed from `S[W]`. This is the
/// error of the ansatz built on the true Dancer lines, up to `O(delta^3)`.
pub fn project_numeric_exact_dancer(params: &AnsatzParams, grid: &Grid2D) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    project_rows(params, grid, |z, xs| {
        let mut s = residual_row(params, z, xs);
        for (a, d) in s.iter_mut().zip(dancer_defect_row(params, z, xs)) {
            *a -= d;
        }
        s
    })
}

fn project_rows<F>(params: &AnsatzParams, grid: &Grid2D, residual: F) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)>
where
    F: Fn(f64, &[f64]) -> Vec<f64> + Sync,
{
    params.check_grid(grid)?;
    let xs = grid.xs();
    let k = params.k;
    let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..grid.nz)
        .into_par_iter()
        .map(|kk| {
            let z = grid.z(kk);
            let s = residual(z, &xs);
            let mut pf = vec![0.0; k];
            let mut pe = vec![0.0; k];
            for j in 0..k {
                let row = params.row(j, z);
                let c = row.f[0];
                let (mut af, mut ae) = (0.0, 0.0);
                for (i, &x) in xs.iter().enumerate() {
                    if (x - c).abs() > PROJECTION_REACH || s[i] == 0.0 {
                        continue;
                    }
                    let xj = row.at(x).x;
                    af += s[i] * params.profile.wp(xj);
                    ae += s[i] * params.profile.z(xj);
                }
                pf[j] = af * grid.hx;
                pe[j] = ae * grid.hx;
            }
            (pf, pe)
        })
        .collect();
    let mut pi_f = vec![vec![0.0; grid.nz]; k];
    let mut pi_e = vec![vec![0.0; grid.nz]; k];
    for (kk, (pf, pe)) in rows.into_iter().enumerate() {
        for j in 0..k {
            if !(pf[j].is_finite() && pe[j].is_finite()) {
                return Err(Error::QuadratureNotConverged(format!("projection of bump {j} at z = {} is not finite", grid.z(kk))));
            }
            pi_f[j][kk] = pf[j];
            pi_e[j][kk] = pe[j];
        }
    }
    Ok((pi_f, pi_e))
}

/// Projections of `S[W]` on every grid row, with the leading-order
/// prediction and the remainder channels.
pub fn project_error(params: &AnsatzParams, grid: &Grid2D, consts: &ProfileConstants) -> Result<ProjectionRecord> {
    let (pi_f, pi_e) = project_numeric(params, grid)?;
    let z = grid.zs();
    let leading = leading_order_projection(params, consts, &z);
    let diff = |a: &[Vec<f64>], b: &[Vec<f64>]| -> Vec<Vec<f64>> {
        a.iter().zip(b).map(|(x, y)| x.iter().zip(y).map(|(p, q)| p - q).collect()).collect()
    };
    let remainder_f = diff(&pi_f, &leading.f);
    let remainder_e = diff(&pi_e, &leading.e);
    let sup = |a: &[Vec<f64>]| a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(ProjectionRecord {
        discrepancy_f: sup(&remainder_f),
        discrepancy_e: sup(&remainder_e),
        z,
        hx: grid.hx,
        pi_f,
        pi_e,
        leading,
        remainder_f,
        remainder_e,
    })
}

/// Projection grid for a datum: `z` in `[0, z_max]` with step `hz`, x-window
/// `max |f_j| + 25` with step `hx`.
pub fn projection_grid(params: &AnsatzParams, z_max: f64, hx: f64, hz: f64) -> Result<Grid2D> {
    let mut fm: f64 = 0.0;
    for i in 0..=400 {
        let z = z_max * i as f64 / 400.0;
        for j in 0..params.k {
            fm = fm.max(params.center(j, z)[0].abs());
        }
    }
    Grid2D::new(fm + 25.0, z_max, hx, hz)
}

#[derive(Debug, Clone, Serialize)]
pub struct ProjectionAgreementRow {
    pub alpha: f64,
    pub discrepancy_f: f64,
    pub discrepancy_f_over_alpha2: f64,
    pub discrepancy_e: f64,
    /// `max |Pi_f|` (the leading order vanishes on a Toda trajectory, so
    /// this is the scale the discrepancy is compared against).
    pub pi_f_sup: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProjectionAgreementReport {
    pub k: usize,
    pub p: f64,
    pub rows: Vec<ProjectionAgreementRow>,
    /// Two-point exponent `mu` in `discrepancy ~ alpha^{2 + mu}` from the
    /// first and last rows.
    pub mu_hat: f64,
}

/// Leading-order agreement of the `w'` projection across an `alpha` sweep,
/// on the window `z <= 8 / (theta0 alpha)`.
pub fn projection_agreement(p: f64, k: usize, alphas: &[f64], hx: f64, hz: f64, consts: &ProfileConstants) -> Result<ProjectionAgreementReport> {
    let mut rows = Vec::new();
    for &alpha in alphas {
        let params = AnsatzParams::toda_datum(p, k, alpha)?;
        let grid = projection_grid(&params, 8.0 / (params.theta0 * alpha), hx, hz)?;
        let rec = project_error(&params, &grid, consts)?;
        let pi_f_sup = rec.pi_f.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        rows.push(ProjectionAgreementRow {
            alpha,
            discrepancy_f: rec.discrepancy_f,
            discrepancy_f_over_alpha2: rec.discrepancy_f / (alpha * alpha),
            discrepancy_e: rec.discrepancy_e,
            pi_f_sup,
        });
    }
    let mu_hat = match (rows.first(), rows.last()) {
        (Some(a), Some(b)) if rows.len() >= 2 => {
            (a.discrepancy_f_over_alpha2 / b.discrepancy_f_over_alpha2).ln() / (a.alpha / b.alpha).ln()
        }
        _ => f64::NAN,
    };
    Ok(ProjectionAgreementReport { k, p, rows, mu_hat })
}

/// Eighth-order central first derivative of uniform samples of an even
/// function (reflected across index 0). The last four samples use a
/// fourth-order one-sided stencil.
fn derivative_of_even(v: &[f64], h: f64) -> Vec<f64> {
    let n = v.len();
    let c = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];
    let at = |i: isize| v[i.unsigned_abs()];
    (0..n)
        .map(|i| {
            if i + 4 < n {
                let ii = i as isize;
                (1..=4).map(|m| c[m - 1] * (at(ii + m as isize) - at(ii - m as isize))).sum::<f64>() / h
            } else {
                (25.0 * v[i] - 48.0 * v[i - 1] + 36.0 * v[i - 2] - 16.0 * v[i - 3] + 3.0 * v[i - 4]) / (12.0 * h)
            }
        })
        .collect()
}

/// `L h = h'' + 2 c_p e^{-u} h` around the gap `u = f_2 - f_1` of a two-bump
/// Toda trajectory.
#[derive(Debug, Clone, Serialize)]
pub struct LinearizedTodaK2 {
    pub alpha: f64,
    pub cp: f64,
    pub h: f64,
    pub u: Vec<f64>,
    pub up: Vec<f64>,
    pub upp: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct KernelResiduals {
    /// `max |L u'|`.
    pub translation: f64,
    /// `max |L (z u' - 2)|`.
    pub scaling: f64,
    /// `max |L (z u' + 2) - 8 c_p e^{-u}|`, confirming the `+2` variant is
    /// not in the kernel.
    pub plus_two_defect: f64,
    /// `min 8 c_p e^{-u}` over the checked range.
    pub plus_two_min: f64,
    /// Samples checked (the last four use one-sided differences and are
    /// excluded).
    pub checked: usize,
}

impl LinearizedTodaK2 {
    /// First `n` samples of the trajectory's gap.
    pub fn from_trajectory(traj: &TodaTrajectory, n: usize) -> Result<Self> {
        if traj.k != 2 {
            return Err(Error::ConfigInvalid(format!("two-bump linearization needs k = 2, got {}", traj.k)));
        }
        if n > traj.z.len() || n < 9 {
            return Err(Error::ConfigInvalid(format!("window of {n} samples does not fit the trajectory")));
        }
        let gap = |a: &Vec<Vec<f64>>| -> Vec<f64> { (0..n).map(|i| a[1][i] - a[0][i]).collect() };
        Ok(Self { alpha: traj.alpha, cp: traj.cp, h: traj.h, u: gap(&traj.f), up: gap(&traj.fp), upp: gap(&traj.fpp) })
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn z(&self, i: usize) -> f64 {
        i as f64 * self.h
    }

    pub fn potential(&self, i: usize) -> f64 {
        2.0 * self.cp * (-self.u[i]).exp()
    }

    pub fn apply(&self, h: &EvenSeries) -> Vec<f64> {
        (0..self.len()).map(|i| h.d2[i] + self.potential(i) * h.v[i]).collect()
    }

    /// `u'` and `z u' - 2` with two derivatives; the third derivative of `u`
    /// is taken by finite differences of the sampled `u''`.
    pub fn kernel(&self) -> [EvenSeries; 2] {
        let uppp = derivative_of_even(&self.upp, self.h);
        let n = self.len();
        let z: Vec<f64> = (0..n).map(|i| self.z(i)).collect();
        let psi1 = EvenSeries { h: self.h, v: self.up.clone(), d1: self.upp.clone(), d2: uppp.clone() };
        let psi2 = EvenSeries {
            h: self.h,
            v: (0..n).map(|i| z[i] * self.up[i] - 2.0).collect(),
            d1: (0..n).map(|i| self.up[i] + z[i] * self.upp[i]).collect(),
            d2: (0..n).map(|i| 2.0 * self.upp[i] + z[i] * uppp[i]).collect(),
        };
        [psi1, psi2]
    }

    pub fn kernel_residuals(&self) -> KernelResiduals {
        let [psi1, psi2] = self.kernel();
        let l1 = self.apply(&psi1);
        let l2 = self.apply(&psi2);
        let m = self.len() - 4;
        let mut r = KernelResiduals { translation: 0.0, scaling: 0.0, plus_two_defect: 0.0, plus_two_min: f64::INFINITY, checked: m };
        for i in 0..m {
            let pot = self.potential(i);
            r.translation = r.translation.max(l1[i].abs());
            r.scaling = r.scaling.max(l2[i].abs());
            // z u' + 2 = psi2 + 4
            let plus = l2[i] + 4.0 * pot;
            r.plus_two_defect = r.plus_two_defect.max((plus - 8.0 * self.cp * (-self.u[i]).exp()).abs());
            r.plus_two_min = r.plus_two_min.min(8.0 * self.cp * (-self.u[i]).exp());
        }
        r
    }

    /// `W(u', z u' - 2) = u'^2 + 2 u''` at every sample.
    pub fn wronskian(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.up[i] * self.up[i] + 2.0 * self.upp[i]).collect()
    }

    /// Bounded even solution of `L h = p` by variation of parameters, with
    /// the linearly growing mode removed.
    pub fn solve(&self, p: &[f64]) -> Result<EvenSeries> {
        let n = self.len();
        if p.len() != n {
            return Err(Error::ConfigInvalid(format!("right-hand side has {} samples, expected {n}", p.len())));
        }
        check_decay(p)?;
        let wr = self.wronskian();
        let w = wr.iter().sum::<f64>() / n as f64;
        let z: Vec<f64> = (0..n).map(|i| self.z(i)).collect();
        let g1: Vec<f64> = (0..n).map(|i| self.up[i] * p[i]).collect();
        let g2: Vec<f64> = (0..n).map(|i| (z[i] * self.up[i] - 2.0) * p[i]).collect();
        let t1 = quad::cumulative_tail(&g1, self.h);
        let i2 = quad::cumulative(&g2, self.h);
        let mut out = EvenSeries::zeros(self.h, n);
        for i in 0..n {
            let psi2 = z[i] * self.up[i] - 2.0;
            let dpsi2 = self.up[i] + z[i] * self.upp[i];
            out.v[i] = -(psi2 * t1[i] + self.up[i] * i2[i]) / w;
            out.d1[i] = -(dpsi2 * t1[i] + self.upp[i] * i2[i]) / w;
            out.d2[i] = p[i] - self.potential(i) * out.v[i];
        }
        Ok(out)
    }
}

fn check_decay(p: &[f64]) -> Result<()> {
    let m = p.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let last = p.last().map(|v| v.abs()).unwrap_or(0.0);
    if !p.iter().all(|v| v.is_finite()) || last > 1e-6 * m {
        return Err(Error::ResonantRHS(format!(
            "right-hand side has not decayed at the window end ({last:.3e} against max {m:.3e})"
        )));
    }
    Ok(())
}

/// Linearized Toda system for `k` bumps around a trajectory. Gaps
/// `y_i = phi_{i+1} - phi_i` satisfy `y'' + c_p M(z) y = q` with
/// `M = tridiag(-1, 2, -1) diag(E)`, `E_i = e^{-(f_{i+1} - f_i)}`; the mean
/// `m = sum phi_j / k` satisfies `m'' = mean(P)`.
#[derive(Debug, Clone)]
pub struct LinearizedTodaSystem {
    pub k: usize,
    pub cp: f64,
    pub h: f64,
    pub n: usize,
    coupling: Vec<Vec<f64>>,
    fundamental: Vec<DMatrix<f64>>,
    /// `max |det Phi - 1|` (Liouville: the system is trace free).
    pub det_defect: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SystemDiagnostics {
    /// Singular values of the slope block `dy/dz (Z)` over position data.
    pub slope_singular_values: Vec<f64>,
    /// Fitted growth rate of each column of the position block over the
    /// second half of the window.
    pub column_growth: Vec<f64>,
    pub det_defect: f64,
}

fn coupling_at(traj: &TodaTrajectory, z: f64) -> Vec<f64> {
    let f: Vec<f64> = (0..traj.k).map(|j| traj.eval(j, z)[0]).collect();
    (0..traj.k - 1).map(|i| (-(f[i + 1] - f[i])).exp()).collect()
}

fn system_matrix(cp: f64, e: &[f64]) -> DMatrix<f64> {
    let m = e.len();
    let mut a = DMatrix::zeros(2 * m, 2 * m);
    for i in 0..m {
        a[(i, m + i)] = 1.0;
        // -(c_p M)_{i,*}
        a[(m + i, i)] = -2.0 * cp * e[i];
        if i + 1 < m {
            a[(m + i, i + 1)] = cp * e[i + 1];
        }
        if i > 0 {
            a[(m + i, i - 1)] = cp * e[i - 1];
        }
    }
    a
}

impl LinearizedTodaSystem {
    /// Integrate the fundamental matrix (identity at `z = 0`) with classical
    /// RK4, `substeps` per sample interval, over the first `n` samples.
    pub fn new(traj: &TodaTrajectory, n: usize, substeps: usize) -> Result<Self> {
        if traj.k < 2 {
            return Err(Error::ConfigInvalid("linearized Toda system needs k >= 2".into()));
        }
        if n > traj.z.len() || n < 9 {
            return Err(Error::ConfigInvalid(format!("window of {n} samples does not fit the trajectory")));
        }
        let m = traj.k - 1;
        let h = traj.h;
        let cp = traj.cp;
        let coupling: Vec<Vec<f64>> = (0..n).map(|i| coupling_at(traj, i as f64 * h)).collect();
        let mut phi = DMatrix::<f64>::identity(2 * m, 2 * m);
        let mut fundamental = Vec::with_capacity(n);
        fundamental.push(phi.clone());
        let dt = h / substeps.max(1) as f64;
        let mut det_defect: f64 = 0.0;
        for i in 0..n - 1 {
            for s in 0..substeps.max(1) {
                let t = i as f64 * h + s as f64 * dt;
                let a0 = system_matrix(cp, &coupling_at(traj, t));
                let am = system_matrix(cp, &coupling_at(traj, t + 0.5 * dt));
                let a1 = system_matrix(cp, &coupling_at(traj, t + dt));
                let k1 = &a0 * &phi;
                let k2 = &am * (&phi + &k1 * (0.5 * dt));
                let k3 = &am * (&phi + &k2 * (0.5 * dt));
                let k4 = &a1 * (&phi + &k3 * dt);
                phi += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
            }
            det_defect = det_defect.max((phi.determinant() - 1.0).abs());
            fundamental.push(phi.clone());
        }
        if !phi.iter().all(|v| v.is_finite()) {
            return Err(Error::FundamentalMatrixIllConditioned("fundamental matrix overflowed".into()));
        }
        Ok(Self { k: traj.k, cp, h, n, coupling, fundamental, det_defect })
    }

    pub fn fundamental(&self, i: usize) -> &DMatrix<f64> {
        &self.fundamental[i]
    }

    pub fn diagnostics(&self) -> SystemDiagnostics {
        let m = self.k - 1;
        let last = &self.fundamental[self.n - 1];
        let slope = last.view((m, 0), (m, m)).into_owned();
        let sv = slope.singular_values().iter().cloned().collect();
        let half = self.n / 2;
        let zs: Vec<f64> = (half..self.n).map(|i| i as f64 * self.h).collect();
        let column_growth = (0..2 * m)
            .map(|c| {
                let ys: Vec<f64> = (half..self.n).map(|i| self.fundamental[i].view((0, c), (m, 1)).norm()).collect();
                quad::linear_fit(&zs, &ys).0
            })
            .collect();
        SystemDiagnostics { slope_singular_values: sv, column_growth, det_defect: self.det_defect }
    }

    /// `P_j = phi_j'' - c_p (E_j y_j - E_{j-1} y_{j-1})`.
    pub fn apply(&self, phi: &[EvenSeries]) -> Vec<Vec<f64>> {
        let k = self.k;
        let mut out = vec![vec![0.0; self.n]; k];
        for i in 0..self.n {
            let e = &self.coupling[i];
            let y: Vec<f64> = (0..k - 1).map(|q| phi[q + 1].v[i] - phi[q].v[i]).collect();
            for j in 0..k {
                let mut force = 0.0;
                if j + 1 < k {
                    force += e[j] * y[j];
                }
                if j > 0 {
                    force -= e[j - 1] * y[j - 1];
                }
                out[j][i] = phi[j].d2[i] - self.cp * force;
            }
        }
        out
    }

    /// Even solution of `phi_j'' = c_p (E_j y_j - E_{j-1} y_{j-1}) + P_j`
    /// whose gaps stay bounded. The mean starts at rest from zero.
    pub fn solve(&self, p: &[Vec<f64>]) -> Result<Vec<EvenSeries>> {
        let k = self.k;
        let m = k - 1;
        let n = self.n;
        if p.len() != k || p.iter().any(|r| r.len() != n) {
            return Err(Error::ConfigInvalid(format!("right-hand side must be {k} rows of {n} samples")));
        }
        for r in p {
            check_decay(r)?;
        }
        let q: Vec<Vec<f64>> = (0..m).map(|i| (0..n).map(|s| p[i + 1][s] - p[i][s]).collect()).collect();
        // Integrand Phi^{-1}(s) (0, q(s)).
        let mut g = vec![vec![0.0; n]; 2 * m];
        for s in 0..n {
            let inv = self.fundamental[s]
                .clone()
                .try_inverse()
                .ok_or_else(|| Error::FundamentalMatrixIllConditioned(format!("singular at sample {s}")))?;
            let qv = DVector::from_fn(m, |i, _| q[i][s]);
            let gv = inv.view((0, m), (2 * m, m)) * qv;
            for r in 0..2 * m {
                g[r][s] = gv[r];
            }
        }
        let cum: Vec<Vec<f64>> = g.iter().map(|r| quad::cumulative(r, self.h)).collect();
        let mut yp = vec![DVector::<f64>::zeros(2 * m); n];
        for s in 0..n {
            let v = DVector::from_fn(2 * m, |r, _| cum[r][s]);
            yp[s] = &self.fundamental[s] * v;
        }
        // Remove the growing modes: final slope of y must vanish.
        let last = &self.fundamental[n - 1];
        let slope = last.view((m, 0), (m, m)).into_owned();
        let sv = slope.singular_values();
        let (smax, smin) = (sv.max(), sv.min());
        if !(smin > 0.0) || smax / smin > 1e12 {
            return Err(Error::FundamentalMatrixIllConditioned(format!(
                "slope block condition number {:.3e}",
                smax / smin
            )));
        }
        let rhs = -yp[n - 1].rows(m, m).into_owned();
        let c = slope
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::FundamentalMatrixIllConditioned("slope block is singular".into()))?;
        let mut y = vec![vec![0.0; n]; m];
        let mut yd = vec![vec![0.0; n]; m];
        for s in 0..n {
            let phi = &self.fundamental[s];
            let corr = phi.view((0, 0), (2 * m, m)) * &c;
            for i in 0..m {
                y[i][s] = yp[s][i] + corr[i];
                yd[i][s] = yp[s][m + i] + corr[m + i];
            }
        }
        let mean_p: Vec<f64> = (0..n).map(|s| p.iter().map(|r| r[s]).sum::<f64>() / k as f64).collect();
        let mean_d = quad::cumulative(&mean_p, self.h);
        let mean_v = quad::cumulative(&mean_d, self.h);
        let mut out = vec![EvenSeries::zeros(self.h, n); k];
        for s in 0..n {
            // phi_j = mean + partial gap sums shifted to zero mean.
            let mut part = vec![0.0; k];
            let mut part_d = vec![0.0; k];
            for j in 1..k {
                part[j] = part[j - 1] + y[j - 1][s];
                part_d[j] = part_d[j - 1] + yd[j - 1][s];
            }
            let avg = part.iter().sum::<f64>() / k as f64;
            let avg_d = part_d.iter().sum::<f64>() / k as f64;
            for j in 0..k {
                out[j].v[s] = mean_v[s] + part[j] - avg;
                out[j].d1[s] = mean_d[s] + part_d[j] - avg_d;
            }
            let e = &self.coupling[s];
            for j in 0..k {
                let mut force = 0.0;
                if j + 1 < k {
                    force += e[j] * y[j][s];
                }
                if j > 0 {
                    force -= e[j - 1] * y[j - 1][s];
                }
                out[j].d2[s] = self.cp * force + p[j][s];
            }
        }
        Ok(out)
    }
}

/// `int_0^Z q cos(sqrt(lambda1) z) dz` and `int_0^Z |q|`.
pub fn resonance_projection(q: &[f64], h: f64, lambda1: f64) -> (f64, f64) {
    let om = lambda1.sqrt();
    let qc: Vec<f64> = q.iter().enumerate().map(|(i, v)| v * (om * i as f64 * h).cos()).collect();
    let qa: Vec<f64> = q.iter().map(|v| v.abs()).collect();
    (quad::simpson_like(&qc, h), quad::simpson_like(&qa, h))
}

/// The decaying even solution of `e'' + lambda1 e = q`, written as
/// `e(z) = (1/w) int_z^inf q(t) sin(w (t - z)) dt`, without checking the
/// solvability condition. When it fails the result oscillates without
/// decay.
pub fn resonance_unconstrained(q: &[f64], h: f64, lambda1: f64) -> EvenSeries {
    let om = lambda1.sqrt();
    let n = q.len();
    let qs: Vec<f64> = (0..n).map(|i| q[i] * (om * i as f64 * h).sin()).collect();
    let qc: Vec<f64> = (0..n).map(|i| q[i] * (om * i as f64 * h).cos()).collect();
    let ts = quad::cumulative_tail(&qs, h);
    let tc = quad::cumulative_tail(&qc, h);
    let mut e = EvenSeries::zeros(h, n);
    for i in 0..n {
        let (sn, cs) = (om * i as f64 * h).sin_cos();
        e.v[i] = (cs * ts[i] - sn * tc[i]) / om;
        e.d1[i] = cs * tc[i] + sn * ts[i];
        e.d2[i] = q[i] - lambda1 * e.v[i];
    }
    e
}

/// Decaying even solution of `e'' + lambda1 e = q`. The solvability
/// condition `int_0^inf q cos(sqrt(lambda1) z) = 0` must hold to `tol`
/// relative to `int |q|`.
pub fn solve_resonance(q: &[f64], h: f64, lambda1: f64, tol: f64) -> Result<EvenSeries> {
    let (proj, scale) = resonance_projection(q, h, lambda1);
    if scale > 0.0 && proj.abs() > tol * scale {
        return Err(Error::OrthogonalityViolated(format!(
            "int q cos = {proj:.3e} exceeds {tol:.1e} x int |q| = {scale:.3e}"
        )));
    }
    Ok(resonance_unconstrained(q, h, lambda1))
}

/// Estimate constants for the resonance inverse at weight `a`:
/// `(|e| + |e'| + |e''|) <= C1 / alpha |q|` and
/// `<= C2 (|q| + |q'| / alpha)`.
pub fn resonance_constants(q: &[f64], e: &EvenSeries, a: f64, alpha: f64) -> (f64, f64) {
    let h = e.h;
    let wsup = |v: &[f64]| v.iter().enumerate().fold(0.0f64, |m, (i, x)| m.max((a * i as f64 * h).exp() * x.abs()));
    let qn = wsup(q);
    let dq: Vec<f64> = (0..q.len())
        .map(|i| {
            if i == 0 {
                0.0
            } else if i + 1 == q.len() {
                (q[i] - q[i - 1]) / h
            } else {
                (q[i + 1] - q[i - 1]) / (2.0 * h)
            }
        })
        .collect();
    let dqn = wsup(&dq);
    let en: f64 = e.weighted_sups(a).iter().sum();
    let c1 = if qn > 0.0 { en * alpha / qn } else { 0.0 };
    let c2 = if qn + dqn > 0.0 { en / (qn + dqn / alpha) } else { 0.0 };
    (c1, c2)
}

#[derive(Debug, Clone, Serialize)]
pub struct DeltaChoice {
    pub delta: Vec<f64>,
    /// `int B_{0j} cos(sqrt(lambda1) z)`.
    pub denominators: Vec<f64>,
    pub numerators: Vec<f64>,
    pub switch: Switch,
    pub widenings: usize,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DeltaConfig {
    /// Required `|int B_{0j} cos| >= b_min alpha`.
    pub b_min: f64,
    /// Added to `t2` of the switch on each retry.
    pub widen_step: f64,
    pub max_widenings: usize,
}

impl Default for DeltaConfig {
    fn default() -> Self {
        Self { b_min: 0.05, widen_step: 1.0, max_widenings: 8 }
    }
}

/// `int_0^Z B_{0j} cos(sqrt(lambda1) z)` for each bump.
pub fn delta_denominators(params: &AnsatzParams, consts: &ProfileConstants, h: f64, n: usize) -> Vec<f64> {
    let z: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
    let lead = leading_order_projection(params, consts, &z);
    lead.b0.iter().map(|b| resonance_projection(b, h, consts.lambda1).0).collect()
}

/// Solve the scalar solvability condition `delta_j int B_{0j} cos = int rhs_j cos`
/// for each bump. When a denominator is below `b_min alpha` the switch is
/// widened and the denominators recomputed.
pub fn choose_delta(params: &AnsatzParams, consts: &ProfileConstants, rhs: &[Vec<f64>], h: f64, cfg: DeltaConfig) -> Result<DeltaChoice> {
    let n = rhs.first().map(|r| r.len()).unwrap_or(0);
    let mut p = params.clone();
    let numerators: Vec<f64> = rhs.iter().map(|r| resonance_projection(r, h, consts.lambda1).0).collect();
    for widenings in 0..=cfg.max_widenings {
        let den = delta_denominators(&p, consts, h, n);
        if den.iter().all(|d| d.abs() >= cfg.b_min * p.alpha) {
            let delta = numerators.iter().zip(&den).map(|(a, b)| a / b).collect();
            return Ok(DeltaChoice { delta, denominators: den, numerators, switch: p.switch, widenings });
        }
        p.switch.t2 += cfg.widen_step;
    }
    Err(Error::DegenerateDenominator(format!(
        "denominator stayed below {} alpha after {} widenings",
        cfg.b_min, cfg.max_widenings
    )))
}

/// Corrections around the Toda datum.
#[derive(Debug, Clone, Serialize)]
pub struct ReducedState {
    pub f1: Vec<EvenSeries>,
    pub e: Vec<EvenSeries>,
    pub delta: Vec<f64>,
}

impl ReducedState {
    pub fn zeros(k: usize, h: f64, n: usize) -> Self {
        Self { f1: vec![EvenSeries::zeros(h, n); k], e: vec![EvenSeries::zeros(h, n); k], delta: vec![0.0; k] }
    }

    fn add(&self, o: &ReducedState) -> ReducedState {
        ReducedState {
            f1: self.f1.iter().zip(&o.f1).map(|(a, b)| a.add(b)).collect(),
            e: self.e.iter().zip(&o.e).map(|(a, b)| a.add(b)).collect(),
            delta: self.delta.iter().zip(&o.delta).map(|(a, b)| a + b).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct YNorm {
    pub f_part: f64,
    pub e_part: f64,
    pub delta_part: f64,
    pub total: f64,
}

/// `a^{-2}(|f1''| + a|f1'| + a^2 |f1|_inf) + a^{-2+nu}(|e''| + |e'| + |e|) + a^{-1}|delta|`
/// with the `theta0 alpha` weight on the derivative terms (`a = alpha`).
pub fn y_norm(s: &ReducedState, alpha: f64, theta0: f64, nu: f64) -> YNorm {
    let a = theta0 * alpha;
    let f_part = s
        .f1
        .iter()
        .map(|f| {
            let w = f.weighted_sups(a);
            w[2] + alpha * w[1] + alpha * alpha * f.sup()
        })
        .fold(0.0, f64::max)
        / (alpha * alpha);
    let e_part = s.e.iter().map(|e| e.weighted_sups(a).iter().sum::<f64>()).fold(0.0, f64::max) * alpha.powf(nu - 2.0);
    let delta_part = s.delta.iter().fold(0.0f64, |m, d| m.max(d.abs())) / alpha;
    YNorm { f_part, e_part, delta_part, total: f_part + e_part + delta_part }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ReductionConfig {
    /// Exponent `nu` in the norm (between 1/8 and 1/4).
    pub nu: f64,
    /// x-step of the projection quadrature.
    pub hx: f64,
    /// Window end where `e^{-theta0 alpha Z} = window_tol`.
    pub window_tol: f64,
    pub orth_tol: f64,
    pub max_iters: usize,
    /// Stop once the increment norm falls below this.
    pub tol: f64,
    pub delta: DeltaConfig,
    /// RK4 substeps per sample for the general-k fundamental matrix.
    pub substeps: usize,
    /// Remove the quadratic defect of the first-order Dancer expansion from
    /// the projections. Without it the projections keep an `O(delta^2)` tail
    /// and the linear solves report a non-decaying right-hand side.
    pub exact_dancer: bool,
}

impl Default for ReductionConfig {
    fn default() -> Self {
        Self { nu: 0.1875, hx: 0.05, window_tol: 1e-8, orth_tol: 1e-10, max_iters: 8, tol: 1e-6, delta: DeltaConfig::default(), substeps: 16, exact_dancer: true }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FixedPointReport {
    pub alpha: f64,
    pub z_max: f64,
    pub nz: usize,
    /// `Y`-norm of each iterate.
    pub norms: Vec<YNorm>,
    /// `Y`-norm of each increment.
    pub increments: Vec<f64>,
    pub increment_parts: Vec<YNorm>,
    /// Ratios of consecutive increments.
    pub contraction: Vec<f64>,
    /// `max |Pi_f|`, `max |Pi_e|` before each update.
    pub projection_sup: Vec<[f64; 2]>,
    pub delta: Vec<f64>,
    pub denominators: Vec<f64>,
    pub switch: Switch,
    pub widenings: usize,
    /// Tail weight `e^{-theta0 alpha Z}` at the window end.
    pub tail_bound: f64,
}

enum TodaInverse {
    Two(LinearizedTodaK2),
    General(LinearizedTodaSystem),
}

impl TodaInverse {
    fn solve(&self, p: &[Vec<f64>]) -> Result<Vec<EvenSeries>> {
        match self {
            // h = phi_1 - phi_2 with L h = P_1 - P_2; the mean starts at rest.
            TodaInverse::Two(l) => {
                let n = l.len();
                let hp: Vec<f64> = (0..n).map(|i| p[0][i] - p[1][i]).collect();
                let gap = l.solve(&hp)?;
                let mean_p: Vec<f64> = (0..n).map(|i| 0.5 * (p[0][i] + p[1][i])).collect();
                let md = quad::cumulative(&mean_p, l.h);
                let mv = quad::cumulative(&md, l.h);
                let mk = |s: f64| EvenSeries {
                    h: l.h,
                    v: (0..n).map(|i| mv[i] + s * 0.5 * gap.v[i]).collect(),
                    d1: (0..n).map(|i| md[i] + s * 0.5 * gap.d1[i]).collect(),
                    d2: (0..n).map(|i| mean_p[i] + s * 0.5 * gap.d2[i]).collect(),
                };
                Ok(vec![mk(1.0), mk(-1.0)])
            }
            TodaInverse::General(s) => s.solve(p),
        }
    }
}

/// Reduction window for a datum: samples of the trajectory grid up to the
/// point where the weight `e^{-theta0 alpha z}` reaches `window_tol`.
pub fn reduction_window(params: &AnsatzParams, window_tol: f64) -> Result<(f64, usize)> {
    let h = params.trajectory.h;
    let z_max = (1.0 / window_tol).ln() / (params.theta0 * params.alpha);
    let n = (z_max / h).ceil() as usize + 1;
    if n > params.trajectory.z.len() {
        return Err(Error::WindowTooShort(format!(
            "reduction window {z_max:.1} exceeds the trajectory window {:.1}",
            params.trajectory.z_max()
        )));
    }
    Ok((h, n))
}

/// Fixed-point iteration on the reduced equations with the numerically
/// projected error.
pub fn reduced_fixed_point_iterate(base: &AnsatzParams, consts: &ProfileConstants, cfg: ReductionConfig) -> Result<(ReducedState, FixedPointReport)> {
    if cfg.exact_dancer {
        reduced_fixed_point_with(base, consts, cfg, project_numeric_exact_dancer)
    } else {
        reduced_fixed_point_with(base, consts, cfg, project_numeric)
    }
}

/// Each step solves, with `Pi` evaluated at the current iterate,
///
/// * `-c0 df'' + C_p(E_j dy_j - E_{j-1} dy_{j-1}) = -Pi_f` (linearized Toda),
/// * `d0 (de'' + lambda1 de) + ddelta B_0 = -Pi_e` with `ddelta` fixed by
///   the solvability condition,
///
/// and adds the increments. `project` returns `(Pi_f, Pi_e)` on the grid
/// rows.
pub fn reduced_fixed_point_with<P>(base: &AnsatzParams, consts: &ProfileConstants, cfg: ReductionConfig, project: P) -> Result<(ReducedState, FixedPointReport)>
where
    P: Fn(&AnsatzParams, &Grid2D) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)>,
{
    let k = base.k;
    if k < 2 {
        return Err(Error::ConfigInvalid("the reduced system needs k >= 2".into()));
    }
    let alpha = base.alpha;
    let (h, n) = reduction_window(base, cfg.window_tol)?;
    let z_max = (n - 1) as f64 * h;
    let inverse = if k == 2 {
        TodaInverse::Two(LinearizedTodaK2::from_trajectory(&base.trajectory, n)?)
    } else {
        TodaInverse::General(LinearizedTodaSystem::new(&base.trajectory, n, cfg.substeps)?)
    };
    let lambda1 = consts.lambda1;
    let zeros = vec![vec![0.0; n]; k];
    let probe = choose_delta(base, consts, &zeros, h, cfg.delta)?;
    let mut params = base.clone();
    params.switch = probe.switch;
    let z: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
    let b0 = leading_order_projection(&params, consts, &z).b0;

    let mut state = ReducedState::zeros(k, h, n);
    let mut rep = FixedPointReport {
        alpha,
        z_max,
        nz: n,
        norms: Vec::new(),
        increments: Vec::new(),
        increment_parts: Vec::new(),
        contraction: Vec::new(),
        projection_sup: Vec::new(),
        delta: Vec::new(),
        denominators: probe.denominators.clone(),
        switch: probe.switch,
        widenings: probe.widenings,
        tail_bound: (-base.theta0 * alpha * z_max).exp(),
    };
    let mut rising = 0;
    for _ in 0..cfg.max_iters {
        params.f1 = state.f1.clone();
        params.e = state.e.clone();
        params.delta = state.delta.clone();
        let grid = projection_grid(&params, z_max, cfg.hx, h)?;
        let (pi_f, pi_e) = project(&params, &grid)?;
        if pi_f.len() != k || pi_f.iter().chain(&pi_e).any(|r| r.len() != n) {
            return Err(Error::ConfigInvalid("projection rows do not match the reduction window".into()));
        }
        let sup = |a: &[Vec<f64>]| a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        rep.projection_sup.push([sup(&pi_f), sup(&pi_e)]);

        let pf: Vec<Vec<f64>> = pi_f.iter().map(|r| r.iter().map(|v| v / consts.c0).collect()).collect();
        let df = inverse.solve(&pf)?;
        let r: Vec<Vec<f64>> = pi_e.iter().map(|row| row.iter().map(|v| -v).collect()).collect();
        // Chord step: B_0 and its denominators stay those of the base datum.
        let ddelta: Vec<f64> =
            r.iter().zip(&probe.denominators).map(|(row, den)| resonance_projection(row, h, lambda1).0 / den).collect();
        let mut de = Vec::with_capacity(k);
        for j in 0..k {
            let q: Vec<f64> = (0..n).map(|i| (r[j][i] - ddelta[j] * b0[j][i]) / consts.d0).collect();
            de.push(solve_resonance(&q, h, lambda1, cfg.orth_tol)?);
        }
        let inc = ReducedState { f1: df, e: de, delta: ddelta };
        let parts = y_norm(&inc, alpha, base.theta0, cfg.nu);
        let inc_norm = parts.total;
        rep.increment_parts.push(parts);
        state = state.add(&inc);
        rep.norms.push(y_norm(&state, alpha, base.theta0, cfg.nu));
        if let Some(&prev) = rep.increments.last() {
            rep.contraction.push(inc_norm / prev);
            if inc_norm > prev {
                rising += 1;
                if rising >= 3 {
                    return Err(Error::ContractionFailed(format!(
                        "increment norm grew for 3 consecutive iterations (last {inc_norm:.3e})"
                    )));
                }
            } else {
                rising = 0;
            }
        }
        rep.increments.push(inc_norm);
        if inc_norm < cfg.tol {
            break;
        }
    }
    rep.delta = state.delta.clone();
    Ok((state, rep))
}

/// Kernel, Wronskian and round-trip checks of the two-bump linearized Toda
/// operator on the closed-form trajectory `a = (-1, 1)`.
#[derive(Debug, Clone, Serialize)]
pub struct LinearTodaCheck {
    pub alpha: f64,
    pub h: f64,
    pub z_max: f64,
    pub kernel: KernelResiduals,
    /// Mean of `u'^2 + 2u''` and its spread `max - min`.
    pub wronskian: f64,
    pub wronskian_spread: f64,
    /// `(lambda alpha)^2` from the closed form.
    pub wronskian_expected: f64,
    /// `max |solve(apply(phi)) - phi|` for `phi = tanh^2(alpha z) + 0.3 sech(alpha z)`.
    pub round_trip_error: f64,
    /// `max |apply(solve(p)) - p|`.
    pub apply_residual: f64,
}

pub fn linear_toda_check(cp: f64, alpha: f64, h: f64, z_max: f64) -> Result<LinearTodaCheck> {
    let t = TodaTrajectory::from_closed_form_k2(-1.0, 1.0, cp, alpha, z_max, h);
    let l = LinearizedTodaK2::from_trajectory(&t, t.z.len())?;
    let kernel = l.kernel_residuals();
    let w = l.wronskian();
    let (lo, hi) = w.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    let lam = crate::toda::k2_lambda(-1.0, 1.0, cp);
    let n = l.len();
    let mut phi = EvenSeries::zeros(l.h, n);
    for i in 0..n {
        let s = alpha * l.z(i);
        let (th, sh) = (s.tanh(), 1.0 / s.cosh());
        phi.v[i] = th * th + 0.3 * sh;
        phi.d1[i] = alpha * (2.0 * th * sh * sh - 0.3 * sh * th);
        phi.d2[i] = alpha * alpha * (2.0 * sh.powi(4) - 4.0 * th * th * sh * sh - 0.3 * sh * (sh * sh - th * th));
    }
    let p = l.apply(&phi);
    let back = l.solve(&p)?;
    let round_trip_error = back.v.iter().zip(&phi.v).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let again = l.apply(&back);
    let apply_residual = again.iter().zip(&p).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    Ok(LinearTodaCheck {
        alpha,
        h,
        z_max: l.z(n - 1),
        kernel,
        wronskian: w.iter().sum::<f64>() / n as f64,
        wronskian_spread: hi - lo,
        wronskian_expected: (lam * alpha).powi(2),
        round_trip_error,
        apply_residual,
    })
}

/// Manufactured check of the resonance solver with
/// `e = e^{-(a z)^2} cos(2z)`, `a = 0.05`, on `[0, 400]`.
#[derive(Debug, Clone, Serialize)]
pub struct ResonanceCheck {
    pub h: f64,
    /// `max |e - e_exact|`.
    pub solution_error: f64,
    /// `max |e'' + lambda1 e - q|` with `e''` from fourth-order differences
    /// of the computed `e`.
    pub equation_residual: f64,
    /// The solver refused `q = e^{-a z}`, which violates the orthogonality
    /// condition.
    pub violation_detected: bool,
}

pub fn resonance_check(lambda1: f64, h: f64) -> Result<ResonanceCheck> {
    let a = 0.05;
    let n = (400.0 / h) as usize;
    let z = |i: usize| i as f64 * h;
    let q: Vec<f64> = (0..n)
        .map(|i| {
            let z = z(i);
            let g = (-(a * z).powi(2)).exp();
            let gp = -2.0 * a * a * z * g;
            let gpp = (4.0 * a.powi(4) * z * z - 2.0 * a * a) * g;
            let (s2, c2) = (2.0 * z).sin_cos();
            gpp * c2 - 4.0 * gp * s2 - 4.0 * g * c2 + lambda1 * g * c2
        })
        .collect();
    let e = solve_resonance(&q, h, lambda1, 1e-10)?;
    let solution_error = (0..n).fold(0.0f64, |m, i| m.max((e.v[i] - (-(a * z(i)).powi(2)).exp() * (2.0 * z(i)).cos()).abs()));
    let mut equation_residual = 0.0f64;
    for i in 2..n - 2 {
        let epp = (-e.v[i - 2] + 16.0 * e.v[i - 1] - 30.0 * e.v[i] + 16.0 * e.v[i + 1] - e.v[i + 2]) / (12.0 * h * h);
        equation_residual = equation_residual.max((epp + lambda1 * e.v[i] - q[i]).abs());
    }
    let bad: Vec<f64> = (0..n).map(|i| (-a * z(i)).exp()).collect();
    let violation_detected = matches!(solve_resonance(&bad, h, lambda1, 1e-10), Err(Error::OrthogonalityViolated(_)));
    Ok(ResonanceCheck { h, solution_error, equation_residual, violation_detected })
}
