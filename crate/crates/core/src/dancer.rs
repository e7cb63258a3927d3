//! Wiggling bump-lines bifurcating from `w(x)` at period `2 pi / sqrt(lambda_1)`:
//! the first-order expansion used by the ansatz and a continuation of the
//! true periodic branch.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::profile1d::{lambda1, HomoclinicProfile};
use crate::sparse::SparseBuilder;

/// Parameters of the first-order expansion `w(x) + delta Z(x) cos(sqrt(lambda_1) z)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DancerParams {
    pub delta: f64,
    pub p: f64,
    pub lambda1: f64,
}

impl DancerParams {
    pub fn new(p: f64, delta: f64) -> Self {
        Self { delta, p, lambda1: lambda1(p) }
    }
}

/// Value and partial derivatives of the expansion at one point.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Jet {
    pub v: f64,
    pub x: f64,
    pub xx: f64,
    pub z: f64,
    pub zz: f64,
    pub xz: f64,
}

/// Which partial derivative to return from [`eval_wdelta_expansion`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Derivative {
    Value,
    X,
    XX,
    Z,
    ZZ,
    XZ,
}

/// Full jet of `w(x) + delta Z(x) cos(sqrt(lambda_1) z)`.
pub fn wdelta_jet(prof: &HomoclinicProfile, delta: f64, x: f64, z: f64) -> Jet {
    let [w, wp, wpp] = prof.w_all(x);
    let om = lambda1(prof.p).sqrt();
    if delta == 0.0 {
        return Jet { v: w, x: wp, xx: wpp, ..Jet::default() };
    }
    let [zz, zp, zpp] = prof.z_all(x);
    let (s, c) = (om * z).sin_cos();
    Jet {
        v: w + delta * zz * c,
        x: wp + delta * zp * c,
        xx: wpp + delta * zpp * c,
        z: -delta * om * zz * s,
        zz: -delta * om * om * zz * c,
        xz: -delta * om * zp * s,
    }
}

pub fn eval_wdelta_expansion(prof: &HomoclinicProfile, params: &DancerParams, x: f64, z: f64, d: Derivative) -> f64 {
    let j = wdelta_jet(prof, params.delta, x, z);
    match d {
        Derivative::Value => j.v,
        Derivative::X => j.x,
        Derivative::XX => j.xx,
        Derivative::Z => j.z,
        Derivative::ZZ => j.zz,
        Derivative::XZ => j.xz,
    }
}

/// Discretization of one period strip. In `x` the strip is `[0, x_max]`
/// (solutions are even in `x`) with second-order differences, reflection at
/// `x = 0` and `u = 0` at `x_max`. In `z` the period is rescaled to
/// `s = 2 pi z / T` and `u` is collocated at `modes + 1` points of
/// `(0, pi)` in the even cosine basis.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct StripResolution {
    pub x_max: f64,
    pub hx: f64,
    pub modes: usize,
}

impl Default for StripResolution {
    fn default() -> Self {
        Self { x_max: 40.0, hx: 0.025, modes: 8 }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BranchConfig {
    pub resolution: StripResolution,
    /// Newton stops when the sup of the discrete residual is below this.
    pub newton_tol: f64,
    pub max_newton: usize,
    /// Step halvings allowed before the continuation gives up.
    pub max_bisections: usize,
}

impl Default for BranchConfig {
    fn default() -> Self {
        Self { resolution: StripResolution::default(), newton_tol: 1e-10, max_newton: 30, max_bisections: 10 }
    }
}

/// One converged point of the periodic branch.
#[derive(Debug, Clone, Serialize)]
pub struct PeriodicBranchPoint {
    pub delta: f64,
    pub period: f64,
    /// `coeffs[m][i]`: coefficient of `cos(2 pi m z / T)` at `x_i = i hx`.
    pub coeffs: Vec<Vec<f64>>,
    /// Sup of the discrete residual.
    pub residual: f64,
    /// `sup |u - w - delta Z cos(2 pi z / T)|` over the collocation nodes.
    pub defect_norm: f64,
    /// `sup e^{x} |u - w - delta Z cos|` over `x <= x_max - 10`.
    pub defect_weighted: f64,
    pub newton_iterations: usize,
}

/// Discrete operators on the strip together with the discrete bump and
/// its principal eigenfunction.
#[derive(Debug, Clone)]
pub struct DancerStrip {
    pub p: f64,
    pub res: StripResolution,
    pub nx: usize,
    pub ns: usize,
    /// Collocation points in `s`.
    pub s: Vec<f64>,
    /// `d2[l][l']`: second `s` derivative on the collocation points.
    d2: Vec<Vec<f64>>,
    /// Nodal values to cosine coefficients.
    to_coeffs: DMatrix<f64>,
    /// Trapezoid weights on `[0, x_max]`.
    weights: Vec<f64>,
    /// Discrete bump (residual of the 1D difference equation at roundoff).
    pub w: Vec<f64>,
    /// Discrete principal eigenfunction, `2 sum weights Z^2 = 1`, `Z(0) > 0`.
    pub z: Vec<f64>,
    /// Principal eigenvalue of the discrete `L0`.
    pub lambda1: f64,
    /// Residual of the discrete bump.
    pub w_residual: f64,
}

impl DancerStrip {
    pub fn new(p: f64, res: StripResolution) -> Result<Self> {
        if !(res.hx > 0.0 && res.x_max > 10.0 * res.hx) || res.modes < 2 {
            return Err(Error::ConfigInvalid(format!(
                "strip resolution needs hx > 0, x_max > 10 hx and at least 2 modes, got {res:?}"
            )));
        }
        let prof = HomoclinicProfile::new(p)?;
        let nx = (res.x_max / res.hx).round() as usize;
        let h = res.hx;
        let ns = res.modes + 1;
        let s: Vec<f64> = (0..ns).map(|l| PI * (l as f64 + 0.5) / ns as f64).collect();
        let basis = DMatrix::from_fn(ns, ns, |l, m| (m as f64 * s[l]).cos());
        let to_coeffs = basis
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::SolverSingular("cosine collocation matrix is singular".into()))?;
        let diag = DMatrix::from_fn(ns, ns, |a, b| if a == b { -((a * a) as f64) } else { 0.0 });
        let d2m = &basis * diag * &to_coeffs;
        let d2 = (0..ns).map(|a| (0..ns).map(|b| d2m[(a, b)]).collect()).collect();
        let mut weights = vec![h; nx];
        weights[0] = 0.5 * h;

        // Discrete bump by Newton from the exact profile.
        let mut w: Vec<f64> = (0..nx).map(|i| prof.w(i as f64 * h)).collect();
        let ih2 = 1.0 / (h * h);
        let bump_residual = |w: &[f64]| -> Vec<f64> {
            (0..nx)
                .map(|i| {
                    let left = if i == 0 { w[1] } else { w[i - 1] };
                    let right = if i + 1 < nx { w[i + 1] } else { 0.0 };
                    (left - 2.0 * w[i] + right) * ih2 - w[i] + w[i].max(0.0).powf(p)
                })
                .collect()
        };
        let sup = |v: &[f64]| v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        let mut r = bump_residual(&w);
        for _ in 0..20 {
            if sup(&r) < 1e-13 {
                break;
            }
            let mut a = SparseBuilder::with_capacity(nx, 3 * nx);
            for i in 0..nx {
                a.push(i, i, -2.0 * ih2 - 1.0 + p * w[i].max(0.0).powf(p - 1.0));
                if i == 0 {
                    a.push(0, 1, 2.0 * ih2);
                } else {
                    a.push(i, i - 1, ih2);
                    if i + 1 < nx {
                        a.push(i, i + 1, ih2);
                    }
                }
            }
            let dw = a.factor()?.solve(&r)?;
            for i in 0..nx {
                w[i] -= dw[i];
            }
            r = bump_residual(&w);
        }
        let w_residual = sup(&r);

        // Principal eigenpair of the discrete L0 by shifted inverse iteration.
        let pot: Vec<f64> = w.iter().map(|v| -1.0 + p * v.max(0.0).powf(p - 1.0)).collect();
        let mut lam = lambda1(p);
        let mut z: Vec<f64> = (0..nx).map(|i| prof.z(i as f64 * h)).collect();
        for _ in 0..50 {
            let shift = lam + 1e-3;
            let mut a = SparseBuilder::with_capacity(nx, 3 * nx);
            for i in 0..nx {
                a.push(i, i, -2.0 * ih2 + pot[i] - shift);
                if i == 0 {
                    a.push(0, 1, 2.0 * ih2);
                } else {
                    a.push(i, i - 1, ih2);
                    if i + 1 < nx {
                        a.push(i, i + 1, ih2);
                    }
                }
            }
            let y = a.factor()?.solve(&z)?;
            let norm = (2.0 * (0..nx).map(|i| weights[i] * y[i] * y[i]).sum::<f64>()).sqrt();
            let sg = if y[0] < 0.0 { -1.0 } else { 1.0 };
            let znew: Vec<f64> = y.iter().map(|v| sg * v / norm).collect();
            // Rayleigh quotient in the weighted inner product.
            let lz = apply_l0(&znew, &pot, ih2);
            let num: f64 = (0..nx).map(|i| weights[i] * znew[i] * lz[i]).sum();
            let den: f64 = (0..nx).map(|i| weights[i] * znew[i] * znew[i]).sum();
            let change = (0..nx).fold(0.0f64, |m, i| m.max((znew[i] - z[i]).abs()));
            z = znew;
            lam = num / den;
            if change < 1e-14 {
                break;
            }
        }
        Ok(Self { p, res, nx, ns, s, d2, to_coeffs, weights, w, z, lambda1: lam, w_residual })
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.res.hx
    }

    fn unknowns(&self) -> usize {
        self.nx * self.ns
    }

    /// Residual `u_xx + kappa u_ss - u + u_+^p` at every node, `kappa = (2 pi / T)^2`.
    pub fn residual(&self, u: &[f64], kappa: f64) -> Vec<f64> {
        let (nx, ns) = (self.nx, self.ns);
        let ih2 = 1.0 / (self.res.hx * self.res.hx);
        let mut out = vec![0.0; nx * ns];
        for i in 0..nx {
            for l in 0..ns {
                let c = u[i * ns + l];
                let left = if i == 0 { u[ns + l] } else { u[(i - 1) * ns + l] };
                let right = if i + 1 < nx { u[(i + 1) * ns + l] } else { 0.0 };
                let mut uss = 0.0;
                for (m, d) in self.d2[l].iter().enumerate() {
                    uss += d * u[i * ns + m];
                }
                out[i * ns + l] = (left - 2.0 * c + right) * ih2 + kappa * uss - c + c.max(0.0).powf(self.p);
            }
        }
        out
    }

    /// Amplitude of the `Z cos s` component of `u - w`.
    pub fn amplitude(&self, u: &[f64]) -> f64 {
        let a = self.amplitude_row();
        (0..self.unknowns()).map(|q| a[q] * (u[q] - self.w[q / self.ns])).sum()
    }

    fn amplitude_row(&self) -> Vec<f64> {
        let ns = self.ns;
        // 2 sum weights Z^2 = 1 and sum_l cos^2 s_l = ns / 2.
        let scale = 2.0 * 2.0 / ns as f64;
        (0..self.unknowns()).map(|q| scale * self.weights[q / ns] * self.z[q / ns] * self.s[q % ns].cos()).collect()
    }

    /// `u = w + delta Z cos s` on the nodes.
    pub fn first_order(&self, delta: f64) -> Vec<f64> {
        (0..self.unknowns()).map(|q| self.w[q / self.ns] + delta * self.z[q / self.ns] * self.s[q % self.ns].cos()).collect()
    }

    /// Sign of the determinant of the trivial-branch Jacobian at `kappa`.
    /// At `u = w` the Jacobian splits into the blocks `L0 - kappa m^2`, one per
    /// cosine mode, each a tridiagonal matrix.
    pub fn trivial_det_sign(&self, kappa: f64) -> f64 {
        let h = self.res.hx;
        let ih2 = 1.0 / (h * h);
        let p = self.p;
        let mut sign = 1.0;
        for m in 0..self.ns {
            let shift = kappa * (m * m) as f64;
            // LU of the tridiagonal block; only the pivot signs matter.
            let mut piv = 0.0;
            for i in 0..self.nx {
                let d = -2.0 * ih2 - 1.0 + p * self.w[i].max(0.0).powf(p - 1.0) - shift;
                let coupling = if i == 1 { 2.0 * ih2 * ih2 } else { ih2 * ih2 };
                piv = if i == 0 { d } else { d - coupling / piv };
                if piv < 0.0 {
                    sign = -sign;
                }
            }
        }
        sign
    }

    fn solve_point(&self, delta: f64, mut u: Vec<f64>, mut kappa: f64, cfg: &BranchConfig) -> Result<(Vec<f64>, f64, f64, usize)> {
        let (nx, ns) = (self.nx, self.ns);
        let n = nx * ns;
        let ih2 = 1.0 / (self.res.hx * self.res.hx);
        let a = self.amplitude_row();
        let sup = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let full = |u: &[f64], kappa: f64| {
            let mut r = self.residual(u, kappa);
            r.push(self.amplitude(u) - delta);
            r
        };
        let mut r = full(&u, kappa);
        let mut norm = sup(&r);
        let start = norm;
        for it in 0..=cfg.max_newton {
            if !norm.is_finite() || norm > 1e3 * start.max(1e-6) {
                return Err(Error::Diverged(format!("Newton residual {norm:.3e} at delta = {delta}")));
            }
            if norm < cfg.newton_tol {
                return Ok((u, kappa, norm, it));
            }
            if it == cfg.max_newton {
                break;
            }
            let mut jac = SparseBuilder::with_capacity(n + 1, n * (ns + 4) + n);
            for i in 0..nx {
                for l in 0..ns {
                    let row = i * ns + l;
                    let c = u[row];
                    let mut uss = 0.0;
                    for (m, d) in self.d2[l].iter().enumerate() {
                        uss += d * u[i * ns + m];
                        let mut v = kappa * d;
                        if m == l {
                            v += -2.0 * ih2 - 1.0 + self.p * c.max(0.0).powf(self.p - 1.0);
                        }
                        jac.push(row, i * ns + m, v);
                    }
                    if i == 0 {
                        jac.push(row, ns + l, 2.0 * ih2);
                    } else {
                        jac.push(row, (i - 1) * ns + l, ih2);
                        if i + 1 < nx {
                            jac.push(row, (i + 1) * ns + l, ih2);
                        }
                    }
                    jac.push(row, n, uss);
                    jac.push(n, row, a[row]);
                }
            }
            let step = jac.factor()?.solve(&r)?;
            for q in 0..n {
                u[q] -= step[q];
            }
            kappa -= step[n];
            r = full(&u, kappa);
            norm = sup(&r);
        }
        Err(Error::Diverged(format!("Newton did not reach {:.1e} in {} iterations at delta = {delta} (residual {norm:.3e})", cfg.newton_tol, cfg.max_newton)))
    }

    fn point(&self, delta: f64, u: &[f64], kappa: f64, residual: f64, iterations: usize) -> PeriodicBranchPoint {
        let (nx, ns) = (self.nx, self.ns);
        let first = self.first_order(delta);
        let far = self.res.x_max - 10.0;
        let mut defect_norm = 0.0f64;
        let mut defect_weighted = 0.0f64;
        for q in 0..nx * ns {
            let d = (u[q] - first[q]).abs();
            defect_norm = defect_norm.max(d);
            let x = self.x(q / ns);
            if x <= far {
                defect_weighted = defect_weighted.max(x.exp() * d);
            }
        }
        let mut coeffs = vec![vec![0.0; nx]; ns];
        for i in 0..nx {
            for m in 0..ns {
                coeffs[m][i] = (0..ns).map(|l| self.to_coeffs[(m, l)] * u[i * ns + l]).sum();
            }
        }
        PeriodicBranchPoint {
            delta,
            period: 2.0 * PI / kappa.sqrt(),
            coeffs,
            residual,
            defect_norm,
            defect_weighted,
            newton_iterations: iterations,
        }
    }
}

fn apply_l0(v: &[f64], pot: &[f64], ih2: f64) -> Vec<f64> {
    let n = v.len();
    (0..n)
        .map(|i| {
            let left = if i == 0 { v[1] } else { v[i - 1] };
            let right = if i + 1 < n { v[i + 1] } else { 0.0 };
            (left - 2.0 * v[i] + right) * ih2 + pot[i] * v[i]
        })
        .collect()
}

/// Period at which the branch leaves `w`: the sign change of the
/// trivial-branch determinant within 5% of `2 pi / sqrt(lambda_1)`, refined
/// by bisection.
pub fn bifurcation_period(strip: &DancerStrip) -> Result<f64> {
    let t0 = 2.0 * PI / lambda1(strip.p).sqrt();
    let sign_at = |t: f64| strip.trivial_det_sign((2.0 * PI / t).powi(2));
    let samples = 200;
    let ts: Vec<f64> = (0..=samples).map(|i| t0 * (0.95 + 0.1 * i as f64 / samples as f64)).collect();
    let mut bracket = None;
    for pair in ts.windows(2) {
        if sign_at(pair[0]) != sign_at(pair[1]) {
            bracket = Some((pair[0], pair[1]));
            break;
        }
    }
    let (mut lo, mut hi) = bracket.ok_or_else(|| {
        Error::BifurcationNotFound(format!("determinant keeps its sign on [{:.4}, {:.4}]", ts[0], ts[samples]))
    })?;
    let slo = sign_at(lo);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sign_at(mid) == slo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Continue the branch from `(w, T*)` to amplitude `delta_target` in
/// `n_steps` equal amplitude steps. The amplitude of the `Z cos` component
/// is pinned at each point, so the amplitude is the arclength parameter
/// along the branch. A step whose Newton solve fails is halved, at most
/// `max_bisections` times in a row.
pub fn continue_dancer_branch(p: f64, delta_target: f64, n_steps: usize, cfg: BranchConfig) -> Result<Vec<PeriodicBranchPoint>> {
    if n_steps == 0 || !delta_target.is_finite() {
        return Err(Error::ConfigInvalid("continuation needs n_steps >= 1 and a finite target".into()));
    }
    let strip = DancerStrip::new(p, cfg.resolution)?;
    continue_on_strip(&strip, delta_target, n_steps, cfg)
}

pub fn continue_on_strip(strip: &DancerStrip, delta_target: f64, n_steps: usize, cfg: BranchConfig) -> Result<Vec<PeriodicBranchPoint>> {
    let t_star = bifurcation_period(strip)?;
    let kappa0 = (2.0 * PI / t_star).powi(2);
    let u_w = strip.first_order(0.0);
    let r0 = strip.residual(&u_w, kappa0);
    let r0 = r0.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut out = vec![strip.point(0.0, &u_w, kappa0, r0, 0)];
    let mut prev: Option<(f64, Vec<f64>, f64)> = None;
    let (mut d_cur, mut u_cur, mut k_cur) = (0.0, u_w, kappa0);
    let full_step = delta_target / n_steps as f64;
    for target_idx in 1..=n_steps {
        let target = full_step * target_idx as f64;
        let mut step = target - d_cur;
        let mut halvings = 0;
        while (target - d_cur).abs() > 1e-15 * delta_target.abs().max(1.0) {
            step = if step.abs() > (target - d_cur).abs() { target - d_cur } else { step };
            let d_new = d_cur + step;
            // Secant predictor once two points are known, otherwise the
            // first-order expansion.
            let (u0, k0) = match &prev {
                Some((dp, up, kp)) if (d_cur - dp).abs() > 0.0 => {
                    let t = step / (d_cur - dp);
                    (u_cur.iter().zip(up).map(|(a, b)| a + t * (a - b)).collect(), k_cur + t * (k_cur - kp))
                }
                _ => {
                    let lin = strip.first_order(step);
                    let base = strip.first_order(0.0);
                    (u_cur.iter().zip(&lin).zip(&base).map(|((a, l), w)| a + l - w).collect(), k_cur)
                }
            };
            match strip.solve_point(d_new, u0, k0, &cfg) {
                Ok((u, k, res, its)) => {
                    prev = Some((d_cur, std::mem::take(&mut u_cur), k_cur));
                    d_cur = d_new;
                    u_cur = u;
                    k_cur = k;
                    halvings = 0;
                    if (target - d_cur).abs() <= 1e-15 * delta_target.abs().max(1.0) {
                        out.push(strip.point(d_cur, &u_cur, k_cur, res, its));
                    }
                }
                Err(e) => {
                    halvings += 1;
                    if halvings > cfg.max_bisections {
                        return Err(Error::ContinuationStalled(format!(
                            "step at delta = {d_cur:.4e} failed after {} halvings: {e}",
                            cfg.max_bisections
                        )));
                    }
                    step *= 0.5;
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_amplitude_is_the_bump() {
        let prof = HomoclinicProfile::new(2.0).unwrap();
        let par = DancerParams::new(2.0, 0.0);
        for z in [0.0, 1.3, -7.0] {
            assert_eq!(eval_wdelta_expansion(&prof, &par, 0.7, z, Derivative::Value), prof.w(0.7));
        }
        let par = DancerParams::new(2.0, 0.2);
        assert_eq!(eval_wdelta_expansion(&prof, &par, 0.7, 0.0, Derivative::Z), 0.0);
    }

    #[test]
    fn second_z_derivative_matches_differences() {
        let prof = HomoclinicProfile::new(2.0).unwrap();
        let par = DancerParams::new(2.0, 0.3);
        let err = |h: f64| {
            let mut worst: f64 = 0.0;
            for i in 0..40 {
                let x = -4.0 + 0.2 * i as f64;
                let f = |z: f64| eval_wdelta_expansion(&prof, &par, x, z, Derivative::Value);
                let fd = (f(h) - 2.0 * f(0.0) + f(-h)) / (h * h);
                let exact = eval_wdelta_expansion(&prof, &par, x, 0.0, Derivative::ZZ);
                assert!((exact + par.lambda1 * par.delta * prof.z(x)).abs() < 1e-14);
                worst = worst.max((fd - exact).abs());
            }
            worst
        };
        let r = err(0.02) / err(0.01);
        assert!((r - 4.0).abs() < 0.1, "ratio {r}");
    }

    #[test]
    fn mixed_derivative_matches_differences() {
        let prof = HomoclinicProfile::new(3.0).unwrap();
        let d = 0.1;
        let h = 1e-4;
        let (x, z) = (0.4, 0.9);
        let f = |x: f64, z: f64| wdelta_jet(&prof, d, x, z).v;
        let fd = (f(x + h, z + h) - f(x + h, z - h) - f(x - h, z + h) + f(x - h, z - h)) / (4.0 * h * h);
        assert!((fd - wdelta_jet(&prof, d, x, z).xz).abs() < 1e-6);
    }

    fn coarse() -> BranchConfig {
        BranchConfig { resolution: StripResolution { x_max: 40.0, hx: 0.05, modes: 8 }, ..BranchConfig::default() }
    }

    #[test]
    fn branch_leaves_the_bump_at_the_eigenvalue_period() {
        let strip = DancerStrip::new(2.0, coarse().resolution).unwrap();
        let t = bifurcation_period(&strip).unwrap();
        assert!((t - 2.0 * PI / 1.25f64.sqrt()).abs() < 1e-3, "{t}");
        assert!((t - 2.0 * PI / strip.lambda1.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn defect_is_quadratic_and_period_is_even() {
        let cfg = coarse();
        let up = continue_dancer_branch(2.0, 0.1, 2, cfg).unwrap();
        let down = continue_dancer_branch(2.0, -0.1, 2, cfg).unwrap();
        assert!(up[0].residual < 1e-12 && up[0].defect_norm == 0.0);
        let r = up[2].defect_norm / up[1].defect_norm;
        assert!((3.5..=4.5).contains(&r), "ratio {r}");
        for (a, b) in up.iter().zip(&down) {
            assert!((a.period - b.period).abs() < 1e-9, "{} vs {}", a.period, b.period);
            assert!(a.residual < 1e-10);
        }
        assert!(up[2].coeffs[0].iter().all(|v| *v > -1e-12));
    }

    #[test]
    fn unresolved_strip_is_rejected() {
        let bad = StripResolution { x_max: 0.1, hx: 0.05, modes: 8 };
        assert!(matches!(DancerStrip::new(2.0, bad), Err(Error::ConfigInvalid(_))));
    }

}
