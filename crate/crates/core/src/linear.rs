//! Discrete linearized operators `Delta + V` (plus an optional small
//! perturbation `B`) on the half-strip grid, the kernel check for the
//! single bump-line, and the projected saddle-point solvers.
//!
//! Unknowns live on interior nodes: `1 <= i <= nx-2`, `0 <= k <= nz-2`.
//! Row `k = 0` is the symmetry line (even reflection), the other edges are
//! Dirichlet.

use rayon::prelude::*;
use serde::Serialize;

use crate::ansatz::{assemble_w, AnsatzParams, WeightedNormSpec};
use crate::cutoff::{cutoffs_etaj, Plateau, RHO};
use crate::error::{Error, Result};
use crate::grid::{Field2D, Grid2D};
use crate::profile1d::{lambda1, HomoclinicProfile};
use crate::quad;
use crate::sparse::SparseBuilder;

/// Coefficients of `B(phi) = b1 phi_xx + b2 phi_xz + b3 phi_x + b4 phi_z + b5 phi`.
#[derive(Debug, Clone)]
pub struct BCoeffs {
    pub b: [Field2D; 5],
}

impl BCoeffs {
    /// `sum_j |b_j|_inf + |grad b1|_inf + |grad b2|_inf` (gradients by
    /// central differences).
    pub fn small_norm(&self) -> f64 {
        let mut s: f64 = self.b.iter().map(|f| f.sup()).sum();
        for f in &self.b[..2] {
            let g = f.grid;
            let mut m: f64 = 0.0;
            for k in 1..g.nz - 1 {
                for i in 1..g.nx - 1 {
                    let dx = (f.at(k, i + 1) - f.at(k, i - 1)) / (2.0 * g.hx);
                    let dz = (f.at(k + 1, i) - f.at(k - 1, i)) / (2.0 * g.hz);
                    m = m.max(dx.hypot(dz));
                }
            }
            s += m;
        }
        s
    }
}

/// `Delta + potential (+ B)` on a grid.
#[derive(Debug, Clone)]
pub struct LinearizedOperator2D {
    pub grid: Grid2D,
    pub potential: Field2D,
    pub b: Option<BCoeffs>,
}

/// Up to nine stencil entries `(k, i, coefficient)`.
type Stencil = ([(usize, usize, f64); 9], usize);

impl LinearizedOperator2D {
    /// `L = L0 + d_zz` with potential `p w(x)^{p-1} - 1`.
    pub fn single_bump(prof: &HomoclinicProfile, grid: Grid2D) -> Self {
        let potential = Field2D::from_fn(grid, |x, _| prof.potential(x));
        Self { grid, potential, b: None }
    }

    /// Linearization `Delta + p W^{p-1} - 1` around a field.
    pub fn around(w: &Field2D, p: f64) -> Self {
        let potential = Field2D { grid: w.grid, data: w.data.iter().map(|v| p * v.max(0.0).powf(p - 1.0) - 1.0).collect() };
        Self { grid: w.grid, potential, b: None }
    }

    pub fn with_b(mut self, b: BCoeffs) -> Self {
        self.b = Some(b);
        self
    }

    pub fn n_interior(&self) -> usize {
        (self.grid.nz - 1) * (self.grid.nx - 2)
    }

    #[inline]
    pub fn interior_index(&self, k: usize, i: usize) -> usize {
        k * (self.grid.nx - 2) + i - 1
    }

    #[inline]
    pub fn is_unknown(&self, k: usize, i: usize) -> bool {
        k + 1 < self.grid.nz && i > 0 && i + 1 < self.grid.nx
    }

    fn stencil(&self, k: usize, i: usize) -> Stencil {
        let g = &self.grid;
        let (ihx2, ihz2) = (1.0 / (g.hx * g.hx), 1.0 / (g.hz * g.hz));
        let id = g.idx(k, i);
        let [b1, b2, b3, b4, b5] = match &self.b {
            Some(b) => [b.b[0].data[id], b.b[1].data[id], b.b[2].data[id], b.b[3].data[id], b.b[4].data[id]],
            None => [0.0; 5],
        };
        let mut out = [(0, 0, 0.0); 9];
        let mut n = 0;
        let mut put = |kk: usize, ii: usize, c: f64| {
            if c != 0.0 {
                out[n] = (kk, ii, c);
                n += 1;
            }
        };
        put(k, i, -2.0 * ihx2 * (1.0 + b1) - 2.0 * ihz2 + self.potential.data[id] + b5);
        put(k, i - 1, ihx2 * (1.0 + b1) - b3 / (2.0 * g.hx));
        put(k, i + 1, ihx2 * (1.0 + b1) + b3 / (2.0 * g.hx));
        if k == 0 {
            put(1, i, 2.0 * ihz2);
        } else {
            put(k + 1, i, ihz2 + b4 / (2.0 * g.hz));
            put(k - 1, i, ihz2 - b4 / (2.0 * g.hz));
            if b2 != 0.0 {
                let c = b2 / (4.0 * g.hx * g.hz);
                put(k + 1, i + 1, c);
                put(k + 1, i - 1, -c);
                put(k - 1, i + 1, -c);
                put(k - 1, i - 1, c);
            }
        }
        (out, n)
    }

    /// Apply the operator at interior nodes, using the field's own values
    /// on boundary nodes. Output is zero on boundary nodes.
    pub fn apply(&self, phi: &Field2D) -> Field2D {
        let g = self.grid;
        let rows: Vec<Vec<f64>> = (0..g.nz)
            .into_par_iter()
            .map(|k| {
                let mut r = vec![0.0; g.nx];
                if k + 1 == g.nz {
                    return r;
                }
                for (i, ri) in r.iter_mut().enumerate().take(g.nx - 1).skip(1) {
                    let (s, n) = self.stencil(k, i);
                    *ri = s[..n].iter().map(|(kk, ii, c)| c * phi.at(*kk, *ii)).sum();
                }
                r
            })
            .collect();
        Field2D { grid: g, data: rows.concat() }
    }

    /// Rows of the operator on interior unknowns (boundary neighbours are
    /// dropped, i.e. homogeneous Dirichlet data).
    pub fn assemble(&self, builder: &mut SparseBuilder) {
        let g = self.grid;
        let parts: Vec<Vec<(usize, usize, f64)>> = (0..g.nz - 1)
            .into_par_iter()
            .map(|k| {
                let mut v = Vec::with_capacity(5 * g.nx);
                for i in 1..g.nx - 1 {
                    let row = self.interior_index(k, i);
                    let (s, n) = self.stencil(k, i);
                    for (kk, ii, c) in &s[..n] {
                        if self.is_unknown(*kk, *ii) {
                            v.push((row, self.interior_index(*kk, *ii), *c));
                        }
                    }
                }
                v
            })
            .collect();
        for v in parts {
            for (r, c, x) in v {
                builder.push(r, c, x);
            }
        }
    }

    /// Contribution of known boundary values to interior equations.
    pub fn boundary_lift(&self, data: &Field2D) -> Field2D {
        let g = self.grid;
        let mut out = Field2D::zeros(g);
        for k in 0..g.nz - 1 {
            for i in 1..g.nx - 1 {
                let (s, n) = self.stencil(k, i);
                let mut acc = 0.0;
                for (kk, ii, c) in &s[..n] {
                    if !self.is_unknown(*kk, *ii) {
                        acc += c * data.at(*kk, *ii);
                    }
                }
                out.data[g.idx(k, i)] = acc;
            }
        }
        out
    }

    /// `<L phi, psi>` with trapezoid weights in `z` (half weight on the
    /// symmetry row), over interior nodes.
    pub fn inner(&self, a: &Field2D, b: &Field2D) -> f64 {
        let g = self.grid;
        let mut s = 0.0;
        for k in 0..g.nz - 1 {
            let wk = if k == 0 { 0.5 } else { 1.0 };
            for i in 1..g.nx - 1 {
                s += wk * a.at(k, i) * b.at(k, i);
            }
        }
        s * g.hx * g.hz
    }
}

/// Residual sup norms of `L` on the three bounded kernel elements.
#[derive(Debug, Clone, Serialize)]
pub struct KernelCheck {
    pub h: f64,
    /// `w_x`, `Z cos(sqrt(lambda1) z)`, `Z sin(sqrt(lambda1) z)`.
    pub residuals: [f64; 3],
}

/// Apply the 5-point `L = L0 + d_zz` to an analytic function at every node
/// of `[-x_max, x_max] x [0, z_max]` (stencil points taken from the
/// function itself).
pub fn apply_l_analytic<F: Fn(f64, f64) -> f64 + Sync>(prof: &HomoclinicProfile, grid: &Grid2D, f: F) -> Field2D {
    let (hx, hz) = (grid.hx, grid.hz);
    let rows: Vec<Vec<f64>> = (0..grid.nz)
        .into_par_iter()
        .map(|k| {
            let z = grid.z(k);
            (0..grid.nx)
                .map(|i| {
                    let x = grid.x(i);
                    let c = f(x, z);
                    (f(x - hx, z) - 2.0 * c + f(x + hx, z)) / (hx * hx)
                        + (f(x, z - hz) - 2.0 * c + f(x, z + hz)) / (hz * hz)
                        + prof.potential(x) * c
                })
                .collect()
        })
        .collect();
    Field2D { grid: *grid, data: rows.concat() }
}

/// Kernel residuals at spacing `h` on `[-x_max, x_max] x [0, z_max]`.
pub fn kernel_check(p: f64, h: f64, x_max: f64, z_max: f64) -> Result<KernelCheck> {
    let prof = HomoclinicProfile::new(p)?;
    let grid = Grid2D::new(x_max, z_max, h, h)?;
    let om = lambda1(p).sqrt();
    let r0 = apply_l_analytic(&prof, &grid, |x, _| prof.wp(x)).sup();
    let r1 = apply_l_analytic(&prof, &grid, |x, z| prof.z(x) * (om * z).cos()).sup();
    let r2 = apply_l_analytic(&prof, &grid, |x, z| prof.z(x) * (om * z).sin()).sup();
    Ok(KernelCheck { h, residuals: [r0, r1, r2] })
}

/// Kernel check at `h` and `h/2`, with the three reduction ratios.
pub fn kernel_convergence(p: f64, h: f64) -> Result<(KernelCheck, KernelCheck, [f64; 3])> {
    let a = kernel_check(p, h, 20.0, 2.0 * std::f64::consts::PI / lambda1(p).sqrt())?;
    let b = kernel_check(p, h / 2.0, 20.0, 2.0 * std::f64::consts::PI / lambda1(p).sqrt())?;
    let r = [a.residuals[0] / b.residuals[0], a.residuals[1] / b.residuals[1], a.residuals[2] / b.residuals[2]];
    Ok((a, b, r))
}

/// One multiplier family: the field multiplying the row multiplier in the
/// equation, and the weight of the row orthogonality condition.
#[derive(Debug, Clone)]
pub struct Constraint {
    pub mult: Field2D,
    pub orth: Field2D,
}

/// Solution of a projected problem `L phi = h + sum_q m_q(z) M_q` with
/// `sum_x phi O_q hx = 0` on every row.
#[derive(Debug, Clone)]
pub struct ProjectedSolution {
    pub phi: Field2D,
    /// `multipliers[q][k]`.
    pub multipliers: Vec<Vec<f64>>,
    /// Largest row orthogonality defect, relative to `max(|phi|, |h|) |O_q|_1`.
    pub orthogonality_residual: f64,
    /// `|L phi - h - sum m M|_inf` on interior nodes.
    pub consistency_residual: f64,
}

/// Build and solve the bordered system.
pub fn solve_bordered(op: &LinearizedOperator2D, h: &Field2D, cons: &[Constraint]) -> Result<ProjectedSolution> {
    let g = op.grid;
    let n = op.n_interior();
    let nrows = g.nz - 1;
    let q = cons.len();
    let total = n + nrows * q;
    let mut bld = SparseBuilder::with_capacity(total, 6 * n);
    op.assemble(&mut bld);
    let mut rhs = vec![0.0; total];
    for k in 0..nrows {
        for i in 1..g.nx - 1 {
            rhs[op.interior_index(k, i)] = h.at(k, i);
        }
    }
    for (qi, c) in cons.iter().enumerate() {
        for k in 0..nrows {
            let col = n + k * q + qi;
            let mut any = false;
            for i in 1..g.nx - 1 {
                let m = c.mult.at(k, i);
                let o = c.orth.at(k, i);
                if m != 0.0 {
                    bld.push(op.interior_index(k, i), col, -m);
                }
                if o != 0.0 {
                    bld.push(col, op.interior_index(k, i), o * g.hx);
                    any = true;
                }
            }
            if !any {
                bld.push(col, col, 1.0);
            }
        }
    }
    let sol = bld.factor()?.solve(&rhs)?;
    let mut phi = Field2D::zeros(g);
    for k in 0..nrows {
        for i in 1..g.nx - 1 {
            phi.data[g.idx(k, i)] = sol[op.interior_index(k, i)];
        }
    }
    let multipliers: Vec<Vec<f64>> = (0..q).map(|qi| (0..nrows).map(|k| sol[n + k * q + qi]).collect()).collect();
    // diagnostics
    let lphi = op.apply(&phi);
    let mut cons_res: f64 = 0.0;
    for k in 0..nrows {
        for i in 1..g.nx - 1 {
            let mut v = lphi.at(k, i) - h.at(k, i);
            for (qi, c) in cons.iter().enumerate() {
                v -= multipliers[qi][k] * c.mult.at(k, i);
            }
            cons_res = cons_res.max(v.abs());
        }
    }
    let psup = phi.sup().max(h.sup()).max(1e-300);
    let mut orth: f64 = 0.0;
    for c in cons {
        for k in 0..nrows {
            let (mut s, mut l1) = (0.0, 0.0);
            for i in 1..g.nx - 1 {
                s += phi.at(k, i) * c.orth.at(k, i);
                l1 += c.orth.at(k, i).abs();
            }
            if l1 > 0.0 {
                orth = orth.max(s.abs() / (psup * l1));
            }
        }
    }
    if orth > 1e-8 {
        return Err(Error::ConstraintViolation(format!("row orthogonality defect {orth:.2e}")));
    }
    Ok(ProjectedSolution { phi, multipliers, orthogonality_residual: orth, consistency_residual: cons_res })
}

/// Measure `rho(x) dx` for the single bump-line: a plateau of `|x|/radius`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RhoMeasure {
    pub window: Plateau,
    pub radius: f64,
}

impl Default for RhoMeasure {
    fn default() -> Self {
        Self { window: RHO, radius: 12.0 }
    }
}

impl RhoMeasure {
    pub fn eval_all(&self, x: f64) -> [f64; 3] {
        let [v, d, dd] = self.window.eval_all(x / self.radius);
        [v, d / self.radius, dd / (self.radius * self.radius)]
    }

    /// Left side of the smallness condition on the measure:
    /// `int e^{-sigma|x|} [(|w_x|+|Z|)|rho''| + 2(|w_xx|+|Z_x|)|rho'|] dx`.
    pub fn smallness(&self, prof: &HomoclinicProfile, sigma: f64) -> Result<f64> {
        let f = |x: f64| {
            let [_, d, dd] = self.eval_all(x);
            let [_, wp, wpp] = prof.w_all(x);
            let [z, zp, _] = prof.z_all(x);
            (-sigma * x.abs()).exp() * ((wp.abs() + z.abs()) * dd.abs() + 2.0 * (wpp.abs() + zp.abs()) * d.abs())
        };
        let a = self.window.a * self.radius;
        let b = self.window.b * self.radius;
        Ok(2.0 * quad::integrate(f, a, b, 1e-14)?)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SingleReport {
    pub h_norm: f64,
    pub phi_norm: f64,
    /// `|phi|_{sigma,a} / |h|_{sigma,a}`.
    pub stability: f64,
    /// `max_z (|c(z)| + |d(z)|) e^{a z} / |h|_{sigma,a}`.
    pub multiplier_decay_constant: f64,
    pub measure_smallness: f64,
    pub b_norm: f64,
    pub orthogonality_residual: f64,
    pub consistency_residual: f64,
}

/// Projected problem around one straight bump-line:
/// `(L + B) phi = h + c(z) w_x + d(z) Z` with `int phi w_x rho = 0 = int phi Z rho`.
pub fn solve_projected_single(
    prof: &HomoclinicProfile,
    grid: Grid2D,
    h: &Field2D,
    rho: RhoMeasure,
    b: Option<BCoeffs>,
    sigma: f64,
    a: f64,
) -> Result<(ProjectedSolution, SingleReport)> {
    let mut op = LinearizedOperator2D::single_bump(prof, grid);
    let b_norm = b.as_ref().map(|b| b.small_norm()).unwrap_or(0.0);
    if let Some(b) = b {
        op = op.with_b(b);
    }
    let wx = Field2D::from_fn(grid, |x, _| prof.wp(x));
    let zf = Field2D::from_fn(grid, |x, _| prof.z(x));
    let rw = Field2D::from_fn(grid, |x, _| prof.wp(x) * rho.eval_all(x)[0]);
    let rz = Field2D::from_fn(grid, |x, _| prof.z(x) * rho.eval_all(x)[0]);
    let sol = solve_bordered(&op, h, &[Constraint { mult: wx, orth: rw }, Constraint { mult: zf, orth: rz }])?;
    let h_norm = crate::ansatz::single_bump_norm(h, sigma, a);
    let phi_norm = crate::ansatz::single_bump_norm(&sol.phi, sigma, a);
    let mut md: f64 = 0.0;
    for k in 0..grid.nz - 1 {
        let v = sol.multipliers[0][k].abs() + sol.multipliers[1][k].abs();
        md = md.max(v * (a * grid.z(k)).exp());
    }
    let rep = SingleReport {
        h_norm,
        phi_norm,
        stability: if h_norm > 0.0 { phi_norm / h_norm } else { 0.0 },
        multiplier_decay_constant: if h_norm > 0.0 { md / h_norm } else { 0.0 },
        measure_smallness: rho.smallness(prof, sigma)?,
        b_norm,
        orthogonality_residual: sol.orthogonality_residual,
        consistency_residual: sol.consistency_residual,
    };
    Ok((sol, rep))
}

#[derive(Debug, Clone, Serialize)]
pub struct MultiReport {
    pub h_star: f64,
    pub phi_star: f64,
    pub stability: f64,
    /// Fitted slope of `log |c_j(z)|` per bump (`None` if unresolved).
    pub multiplier_slopes: Vec<Option<f64>>,
    pub theta0_alpha: f64,
    pub orthogonality_residual: f64,
    pub consistency_residual: f64,
}

/// Multi-bump projected problem around `W`:
/// `L phi = h + sum_j c_j eta_j w_{j,x} + d_j eta_j Z_j` with the
/// orthogonality conditions weighted by `rho_j`.
pub fn solve_projected_multibump(
    params: &AnsatzParams,
    grid: Grid2D,
    h: &Field2D,
    sigma: f64,
) -> Result<(ProjectedSolution, MultiReport)> {
    let w = assemble_w(params, &grid)?;
    let op = LinearizedOperator2D::around(&w.w, params.p);
    let cons = multibump_constraints(params, &grid);
    let sol = solve_bordered(&op, h, &cons)?;
    let spec = WeightedNormSpec::new(params, &grid, sigma)?;
    let h_star = crate::ansatz::weighted_norm(h, &spec);
    let phi_star = crate::ansatz::weighted_norm(&sol.phi, &spec);
    let zs = grid.zs();
    let slopes = (0..params.k).map(|j| decay_slope(&zs[..grid.nz - 1], &sol.multipliers[2 * j])).collect();
    Ok((
        sol.clone(),
        MultiReport {
            h_star,
            phi_star,
            stability: if h_star > 0.0 { phi_star / h_star } else { 0.0 },
            multiplier_slopes: slopes,
            theta0_alpha: params.theta0 * params.alpha,
            orthogonality_residual: sol.orthogonality_residual,
            consistency_residual: sol.consistency_residual,
        },
    ))
}

/// The `2k` constraint families of the multi-bump problem.
pub fn multibump_constraints(params: &AnsatzParams, grid: &Grid2D) -> Vec<Constraint> {
    let prof = &params.profile;
    let mut out = Vec::with_capacity(2 * params.k);
    for j in 0..params.k {
        let mut cw = Field2D::zeros(*grid);
        let mut cz = Field2D::zeros(*grid);
        let mut ow = Field2D::zeros(*grid);
        let mut oz = Field2D::zeros(*grid);
        for k in 0..grid.nz {
            let z = grid.z(k);
            let row = params.row(j, z);
            let c = row.f[0];
            for i in 0..grid.nx {
                let x = grid.x(i);
                let bx = row.at(x).x;
                if bx.abs() >= params.d_star {
                    continue;
                }
                let [rho, _, eta, _] = cutoffs_etaj(bx, params.d_star);
                let wp = prof.wp(x - c);
                let zz = prof.z(x - c);
                let id = grid.idx(k, i);
                cw.data[id] = eta * wp;
                cz.data[id] = eta * zz;
                ow.data[id] = rho * wp;
                oz.data[id] = rho * zz;
            }
        }
        out.push(Constraint { mult: cw, orth: ow });
        out.push(Constraint { mult: cz, orth: oz });
    }
    out
}

/// Least-squares slope of `log |c|` over samples above `1e-9 max |c|`.
pub fn decay_slope(z: &[f64], c: &[f64]) -> Option<f64> {
    let m = c.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if m == 0.0 {
        return None;
    }
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (zz, v) in z.iter().zip(c) {
        if v.abs() > 1e-9 * m {
            xs.push(*zz);
            ys.push(v.abs().ln());
        }
    }
    if xs.len() < 8 {
        return None;
    }
    Some(quad::linear_fit(&xs, &ys).0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_residuals_are_second_order() {
        let (a, b, r) = kernel_convergence(2.0, 0.1).unwrap();
        assert!(a.residuals.iter().all(|v| *v < 1e-2));
        assert!(b.residuals.iter().all(|v| *v < 3e-3));
        for x in r {
            assert!((3.5..=4.5).contains(&x), "{r:?}");
        }
    }

    #[test]
    fn z_times_exponential_picks_up_one_plus_lambda() {
        let prof = HomoclinicProfile::new(2.0).unwrap();
        let grid = Grid2D::new(10.0, 2.0, 0.01, 0.01).unwrap();
        let lf = apply_l_analytic(&prof, &grid, |x, z| prof.z(x) * z.exp());
        let mut worst: f64 = 0.0;
        for k in 0..grid.nz {
            for i in 0..grid.nx {
                let phi = prof.z(grid.x(i)) * grid.z(k).exp();
                worst = worst.max((lf.at(k, i) - 2.25 * phi).abs());
            }
        }
        assert!(worst < 1e-3, "{worst}");
    }

    #[test]
    fn discrete_operator_is_symmetric_in_trapezoid_product() {
        let prof = HomoclinicProfile::new(2.0).unwrap();
        let grid = Grid2D::new(6.0, 4.0, 0.2, 0.25).unwrap();
        let op = LinearizedOperator2D::single_bump(&prof, grid);
        let bump = |x: f64, z: f64, c: f64| {
            let r2 = (x - c) * (x - c) + z * z;
            if r2 < 9.0 {
                (1.0 - r2 / 9.0).powi(3)
            } else {
                0.0
            }
        };
        let phi = Field2D::from_fn(grid, |x, z| bump(x, z, 0.5));
        let psi = Field2D::from_fn(grid, |x, z| bump(x, z, -0.7) * (1.0 + x));
        let a = op.inner(&op.apply(&phi), &psi);
        let b = op.inner(&phi, &op.apply(&psi));
        assert!((a - b).abs() < 1e-12 * a.abs().max(1.0), "{a} {b}");
    }

    #[test]
    fn solve_recovers_orthogonal_field() {
        let prof = HomoclinicProfile::new(2.0).unwrap();
        let grid = Grid2D::new(10.0, 6.0, 0.2, 0.2).unwrap();
        let rho = RhoMeasure { radius: 8.0, ..RhoMeasure::default() };
        // psi orthogonal to w' (odd vs even) and made orthogonal to Z row by row
        let base = Field2D::from_fn(grid, |x, z| {
            let s = (1.0 - (z / 6.0).powi(2)) * (x / 10.0 * std::f64::consts::PI).cos().powi(2);
            s * (-x * x / 4.0).exp() * (1.0 + 0.3 * x.powi(2))
        });
        let mut psi = base.clone();
        for k in 0..grid.nz - 1 {
            let (mut num, mut den) = (0.0, 0.0);
            for i in 1..grid.nx - 1 {
                let x = grid.x(i);
                let r = prof.z(x) * rho.eval_all(x)[0];
                num += base.at(k, i) * r;
                den += prof.z(x) * r;
            }
            for i in 1..grid.nx - 1 {
                let x = grid.x(i);
                psi.data[grid.idx(k, i)] -= num / den * prof.z(x);
            }
        }
        for k in 0..grid.nz {
            for i in 0..grid.nx {
                if !(k + 1 < grid.nz && i > 0 && i + 1 < grid.nx) {
                    psi.data[grid.idx(k, i)] = 0.0;
                }
            }
        }
        let op = LinearizedOperator2D::single_bump(&prof, grid);
        let h = op.apply(&psi);
        let (sol, rep) = solve_projected_single(&prof, grid, &h, rho, None, 0.5, 0.1).unwrap();
        assert!(sol.phi.max_abs_diff(&psi) < 1e-9);
        assert!(sol.multipliers.iter().flatten().all(|c| c.abs() < 1e-9));
        assert!(rep.consistency_residual < 1e-9);
    }

    #[test]
    fn translation_source_is_absorbed() {
        let prof = HomoclinicProfile::new(2.0).unwrap();
        let grid = Grid2D::new(12.0, 8.0, 0.2, 0.2).unwrap();
        let a = 0.3;
        let h = Field2D::from_fn(grid, |x, z| prof.wp(x) * (-a * z).exp());
        let (sol, rep) = solve_projected_single(&prof, grid, &h, RhoMeasure::default(), None, 0.5, a).unwrap();
        assert!(sol.phi.sup() < 1e-10 * h.sup());
        for k in 0..grid.nz - 1 {
            assert!((sol.multipliers[0][k] + (-a * grid.z(k)).exp()).abs() < 1e-9);
        }
        assert!(rep.multiplier_decay_constant.is_finite());
    }

    #[test]
    fn zero_source_gives_zero() {
        let params = AnsatzParams::toda_datum(2.0, 2, 0.3).unwrap();
        let grid = params.grid_with(0.25, 12.0).unwrap();
        let h = Field2D::zeros(grid);
        let (sol, _) = solve_projected_multibump(&params, grid, &h, 0.1).unwrap();
        assert_eq!(sol.phi.sup(), 0.0);
        assert!(sol.multipliers.iter().flatten().all(|c| *c == 0.0));
    }
}
