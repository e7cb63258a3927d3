//! Repulsive Toda lattice `f_j'' = c_p (e^{f_{j-1}-f_j} - e^{f_j-f_{j+1}})`
//! governing the bump centres: closed form for two bumps, symplectic
//! integration for any number, the alpha-scaling family and the
//! scattering asymptotics (slopes, offsets, decay rate).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad;

/// Input of [`integrate_toda`].
#[derive(Debug, Clone, Serialize)]
pub struct TodaConfig {
    pub k: usize,
    /// Initial positions at `z = 0` of the unscaled (`alpha = 1`) member.
    pub a: Vec<f64>,
    pub cp: f64,
    pub alpha: f64,
    /// Trajectories are computed on `[0, z_max]` and extended evenly.
    pub z_max: f64,
    /// Integrator step; `None` means `1e-3 / alpha`.
    pub step: Option<f64>,
    /// Order of the Verlet composition: 2, 4 or 6.
    pub order: u8,
    /// Allowed deviation of the Hamiltonian from its initial value.
    pub energy_tol: f64,
}

impl TodaConfig {
    pub fn new(a: Vec<f64>, cp: f64, alpha: f64, z_max: f64) -> Self {
        Self { k: a.len(), a, cp, alpha, z_max, step: None, order: 6, energy_tol: 1e-8 }
    }

    pub fn step(&self) -> f64 {
        self.step.unwrap_or(1e-3 / self.alpha)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::ConfigInvalid(m));
        if self.k < 2 || self.a.len() != self.k {
            return bad(format!("need k >= 2 positions, got k={} and {} values", self.k, self.a.len()));
        }
        if self.a.windows(2).any(|w| w[0] >= w[1]) {
            return bad("positions a must be strictly increasing".into());
        }
        let sum: f64 = self.a.iter().sum();
        if sum.abs() > 1e-12 * (1.0 + self.a.iter().map(|v| v.abs()).sum::<f64>()) {
            return bad(format!("positions a must sum to zero, sum = {sum:e}"));
        }
        if !(self.cp > 0.0) || !(self.alpha > 0.0) || !(self.z_max > 0.0) || !(self.step() > 0.0) {
            return bad("cp, alpha, z_max and step must be positive".into());
        }
        if ![2, 4, 6].contains(&self.order) {
            return bad(format!("integrator order must be 2, 4 or 6, got {}", self.order));
        }
        Ok(())
    }
}

/// Phase-space point of the lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct TodaState {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub t: f64,
}

/// Asymptotic data of an even trajectory.
#[derive(Debug, Clone, Serialize)]
pub struct Asymptotics {
    /// Slopes `f_j'(+inf)`.
    pub beta: Vec<f64>,
    /// Offsets: `f_j(z) ~ beta_j |z| + offset_j`.
    pub offset: Vec<f64>,
    /// Offsets fitted on the positive and negative tails separately.
    pub tau_plus: Vec<f64>,
    pub tau_minus: Vec<f64>,
    /// Fitted exponential decay rate of the remainder (per bump, `None`
    /// when the remainder vanishes identically).
    pub decay_rates: Vec<Option<f64>>,
    /// Smallest resolved decay rate.
    pub theta_hat: f64,
    /// Minimal slope gap divided by alpha.
    pub vartheta: f64,
    pub theta0: f64,
    pub theta1: f64,
}

/// Sampled even trajectory on `z in [0, z_max]` with spacing `h`.
#[derive(Debug, Clone, Serialize)]
pub struct TodaTrajectory {
    pub k: usize,
    pub cp: f64,
    pub alpha: f64,
    pub h: f64,
    pub z: Vec<f64>,
    /// `f[j][i]`, `fp[j][i]`, `fpp[j][i]` at `z[i]`.
    pub f: Vec<Vec<f64>>,
    pub fp: Vec<Vec<f64>>,
    pub fpp: Vec<Vec<f64>>,
    /// Largest deviation of the Hamiltonian from its value at `z = 0`.
    pub energy_drift: f64,
    pub asymptotics: Option<Asymptotics>,
}

/// Forces of the lattice.
pub fn toda_force(cp: f64, q: &[f64], out: &mut [f64]) {
    let k = q.len();
    for j in 0..k {
        let left = if j > 0 { (q[j - 1] - q[j]).exp() } else { 0.0 };
        let right = if j + 1 < k { (q[j] - q[j + 1]).exp() } else { 0.0 };
        out[j] = cp * (left - right);
    }
}

/// `H = sum p^2/2 + c_p sum e^{q_j - q_{j+1}}`.
pub fn hamiltonian(cp: f64, q: &[f64], p: &[f64]) -> f64 {
    let kin: f64 = p.iter().map(|v| 0.5 * v * v).sum();
    let pot: f64 = q.windows(2).map(|w| (w[0] - w[1]).exp()).sum();
    kin + cp * pot
}

fn composition(order: u8) -> Vec<f64> {
    match order {
        2 => vec![1.0],
        4 => {
            let c = 2f64.powf(1.0 / 3.0);
            let x1 = 1.0 / (2.0 - c);
            vec![x1, -c * x1, x1]
        }
        _ => {
            let w1 = -1.177_679_984_178_87;
            let w2 = 0.235_573_213_359_357;
            let w3 = 0.784_513_610_477_560;
            let w0 = 1.0 - 2.0 * (w1 + w2 + w3);
            vec![w3, w2, w1, w0, w1, w2, w3]
        }
    }
}

/// One Stormer-Verlet (kick-drift-kick) step of size `h`.
fn verlet(cp: f64, st: &mut TodaState, h: f64, force: &mut [f64]) {
    toda_force(cp, &st.q, force);
    for (p, f) in st.p.iter_mut().zip(force.iter()) {
        *p += 0.5 * h * f;
    }
    for (q, p) in st.q.iter_mut().zip(st.p.iter()) {
        *q += h * p;
    }
    toda_force(cp, &st.q, force);
    for (p, f) in st.p.iter_mut().zip(force.iter()) {
        *p += 0.5 * h * f;
    }
    st.t += h;
}

/// Advance by one composed step (symmetric composition of Verlet steps).
pub fn composed_step(cp: f64, st: &mut TodaState, h: f64, order: u8) {
    let mut force = vec![0.0; st.q.len()];
    for c in composition(order) {
        verlet(cp, st, c * h, &mut force);
    }
}

/// Integrate the alpha-member of the lattice from rest at `z = 0`.
///
/// Initial positions are `a_j + (2j - k - 1) log(1/alpha)` (1-based `j`),
/// which is the alpha-scaling of the data `a`.
pub fn integrate_toda(cfg: &TodaConfig) -> Result<TodaTrajectory> {
    cfg.validate()?;
    let k = cfg.k;
    let step = cfg.step();
    let n = (cfg.z_max / step).ceil() as usize;
    let h = cfg.z_max / n as f64;
    let shift = scaling_shift(k, cfg.alpha);
    let mut st = TodaState {
        q: cfg.a.iter().zip(&shift).map(|(a, s)| a + s).collect(),
        p: vec![0.0; k],
        t: 0.0,
    };
    let h0 = hamiltonian(cfg.cp, &st.q, &st.p);
    let mut f = vec![Vec::with_capacity(n + 1); k];
    let mut fp = vec![Vec::with_capacity(n + 1); k];
    let mut fpp = vec![Vec::with_capacity(n + 1); k];
    let mut force = vec![0.0; k];
    let mut drift: f64 = 0.0;
    let mut z = Vec::with_capacity(n + 1);
    for i in 0..=n {
        if i > 0 {
            composed_step(cfg.cp, &mut st, h, cfg.order);
        }
        toda_force(cfg.cp, &st.q, &mut force);
        for j in 0..k {
            f[j].push(st.q[j]);
            fp[j].push(st.p[j]);
            fpp[j].push(force[j]);
        }
        z.push(i as f64 * h);
        drift = drift.max((hamiltonian(cfg.cp, &st.q, &st.p) - h0).abs());
        if st.q.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::OrderingViolated(format!("trajectories cross at z = {}", i as f64 * h)));
        }
    }
    if drift > cfg.energy_tol {
        return Err(Error::StepTooLarge(format!(
            "energy drift {drift:.3e} exceeds {:.1e} with step {h:.3e}",
            cfg.energy_tol
        )));
    }
    Ok(TodaTrajectory { k, cp: cfg.cp, alpha: cfg.alpha, h, z, f, fp, fpp, energy_drift: drift, asymptotics: None })
}

/// Offsets `(2j - k - 1) log(1/alpha)` of the scaling family.
pub fn scaling_shift(k: usize, alpha: f64) -> Vec<f64> {
    (1..=k).map(|j| (2.0 * j as f64 - k as f64 - 1.0) * (1.0 / alpha).ln()).collect()
}

/// `log cosh(y)` without overflow.
fn log_cosh(y: f64) -> f64 {
    let a = y.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// Slope parameter `lambda = 2 sqrt(c_p e^{a1 - a2})` of the two-bump solution.
pub fn k2_lambda(a1: f64, a2: f64, cp: f64) -> f64 {
    2.0 * (cp * (a1 - a2).exp()).sqrt()
}

/// Two-bump closed form. Returns `[f, f', f'']` for both bumps at `z`.
///
/// With `u = f2 - f1`,
/// `u(z) = 2 log(1/alpha) + log(4 c_p / lambda^2) + 2 log cosh(lambda alpha z / 2)`,
/// which satisfies `u'' = 2 c_p e^{-u}` and `u(0) = a2 - a1 + 2 log(1/alpha)`.
pub fn solve_k2_closed_form(a1: f64, a2: f64, cp: f64, alpha: f64, z: f64) -> [[f64; 3]; 2] {
    let lam = k2_lambda(a1, a2, cp);
    let mean = 0.5 * (a1 + a2);
    let y = 0.5 * lam * alpha * z;
    let u = 2.0 * (1.0 / alpha).ln() + (4.0 * cp / (lam * lam)).ln() + 2.0 * log_cosh(y);
    let up = lam * alpha * y.tanh();
    let sech = 1.0 / y.cosh();
    let upp = 0.5 * (lam * alpha).powi(2) * sech * sech;
    [[mean - 0.5 * u, -0.5 * up, -0.5 * upp], [mean + 0.5 * u, 0.5 * up, 0.5 * upp]]
}

impl TodaTrajectory {
    /// Sample the two-bump closed form on `[0, z_max]`.
    pub fn from_closed_form_k2(a1: f64, a2: f64, cp: f64, alpha: f64, z_max: f64, h: f64) -> Self {
        let n = (z_max / h).ceil() as usize;
        let h = z_max / n as f64;
        let mut t = TodaTrajectory {
            k: 2,
            cp,
            alpha,
            h,
            z: Vec::new(),
            f: vec![Vec::new(); 2],
            fp: vec![Vec::new(); 2],
            fpp: vec![Vec::new(); 2],
            energy_drift: 0.0,
            asymptotics: None,
        };
        for i in 0..=n {
            let z = i as f64 * h;
            let s = solve_k2_closed_form(a1, a2, cp, alpha, z);
            t.z.push(z);
            for j in 0..2 {
                t.f[j].push(s[j][0]);
                t.fp[j].push(s[j][1]);
                t.fpp[j].push(s[j][2]);
            }
        }
        t
    }

    pub fn z_max(&self) -> f64 {
        *self.z.last().unwrap()
    }

    /// `[f_j, f_j', f_j'']` at any real `z` (even extension). Inside the
    /// window cubic Hermite interpolation is used; beyond it the straight
    /// asymptote is continued.
    pub fn eval(&self, j: usize, z: f64) -> [f64; 3] {
        let sgn = if z < 0.0 { -1.0 } else { 1.0 };
        let a = z.abs();
        let n = self.z.len() - 1;
        if a >= self.z[n] {
            let d = a - self.z[n];
            return [self.f[j][n] + d * self.fp[j][n], sgn * self.fp[j][n], 0.0];
        }
        let s = a / self.h;
        let i = (s.floor() as usize).min(n - 1);
        let t = s - i as f64;
        let h = self.h;
        let (y0, y1) = (self.f[j][i], self.f[j][i + 1]);
        let (m0, m1) = (self.fp[j][i] * h, self.fp[j][i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let val = (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + t) * m0 + (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * m1;
        let (g0, g1) = (self.fp[j][i], self.fp[j][i + 1]);
        let (c0, c1) = (self.fpp[j][i] * h, self.fpp[j][i + 1] * h);
        let der = (2.0 * t3 - 3.0 * t2 + 1.0) * g0 + (t3 - 2.0 * t2 + t) * c0 + (-2.0 * t3 + 3.0 * t2) * g1 + (t3 - t2) * c1;
        let mut q = vec![0.0; self.k];
        for (jj, qq) in q.iter_mut().enumerate() {
            *qq = if jj == j { val } else { self.interp_value(jj, i, t) };
        }
        let mut force = vec![0.0; self.k];
        toda_force(self.cp, &q, &mut force);
        [val, sgn * der, force[j]]
    }

    fn interp_value(&self, j: usize, i: usize, t: f64) -> f64 {
        let h = self.h;
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * self.f[j][i]
            + (t3 - 2.0 * t2 + t) * self.fp[j][i] * h
            + (-2.0 * t3 + 3.0 * t2) * self.f[j][i + 1]
            + (t3 - t2) * self.fp[j][i + 1] * h
    }

    /// Largest `|f_j'' - c_p (e^{f_{j-1}-f_j} - e^{f_j-f_{j+1}})|` over the samples.
    pub fn ode_residual(&self) -> f64 {
        let mut q = vec![0.0; self.k];
        let mut force = vec![0.0; self.k];
        let mut worst: f64 = 0.0;
        for i in 0..self.z.len() {
            for j in 0..self.k {
                q[j] = self.f[j][i];
            }
            toda_force(self.cp, &q, &mut force);
            for j in 0..self.k {
                worst = worst.max((self.fpp[j][i] - force[j]).abs());
            }
        }
        worst
    }

    /// Even extension on `[-z_max, z_max]`: rows `(z, f_1..f_k, f_1'..f_k')`.
    pub fn symmetric_rows(&self) -> Vec<Vec<f64>> {
        let n = self.z.len();
        let mut rows = Vec::with_capacity(2 * n - 1);
        for i in (1..n).rev() {
            let mut r = vec![-self.z[i]];
            r.extend((0..self.k).map(|j| self.f[j][i]));
            r.extend((0..self.k).map(|j| -self.fp[j][i]));
            rows.push(r);
        }
        for i in 0..n {
            let mut r = vec![self.z[i]];
            r.extend((0..self.k).map(|j| self.f[j][i]));
            r.extend((0..self.k).map(|j| self.fp[j][i]));
            rows.push(r);
        }
        rows
    }

    /// Attach fitted asymptotics.
    pub fn with_asymptotics(mut self) -> Result<Self> {
        self.asymptotics = Some(extract_asymptotics(&self)?);
        Ok(self)
    }

    pub fn asymptotics(&self) -> Result<Asymptotics> {
        match &self.asymptotics {
            Some(a) => Ok(a.clone()),
            None => extract_asymptotics(self),
        }
    }
}

/// Rescale an `alpha = 1` trajectory to the alpha-member:
/// `f_{alpha j}(z) = f_j(alpha z) + (2j - k - 1) log(1/alpha)`.
pub fn scale_family(base: &TodaTrajectory, alpha: f64, z_max: f64) -> Result<TodaTrajectory> {
    if (base.alpha - 1.0).abs() > 1e-14 {
        return Err(Error::ConfigInvalid("scale_family expects an alpha = 1 trajectory".into()));
    }
    if !(alpha > 0.0) {
        return Err(Error::ConfigInvalid(format!("alpha must be positive, got {alpha}")));
    }
    if alpha * z_max > base.z_max() * (1.0 + 1e-12) {
        return Err(Error::WindowTooShort(format!(
            "base covers |z| <= {}, need {}",
            base.z_max(),
            alpha * z_max
        )));
    }
    let shift = scaling_shift(base.k, alpha);
    let h = base.h / alpha;
    let n = ((z_max / h) + 1e-9).floor() as usize;
    let mut t = TodaTrajectory {
        k: base.k,
        cp: base.cp,
        alpha,
        h,
        z: (0..=n).map(|i| i as f64 * h).collect(),
        f: vec![Vec::with_capacity(n + 1); base.k],
        fp: vec![Vec::with_capacity(n + 1); base.k],
        fpp: vec![Vec::with_capacity(n + 1); base.k],
        energy_drift: base.energy_drift,
        asymptotics: None,
    };
    for j in 0..base.k {
        for i in 0..=n {
            t.f[j].push(base.f[j][i] + shift[j]);
            t.fp[j].push(alpha * base.fp[j][i]);
            t.fpp[j].push(alpha * alpha * base.fpp[j][i]);
        }
    }
    Ok(t)
}

/// Least-squares asymptotes on the tail `z > z_max/2` and an exponential
/// fit of the remainder.
pub fn extract_asymptotics(t: &TodaTrajectory) -> Result<Asymptotics> {
    let n = t.z.len();
    let start = n / 2;
    let mut q = vec![0.0; t.k];
    let mut force = vec![0.0; t.k];
    for j in 0..t.k {
        q[j] = t.f[j][start];
    }
    toda_force(t.cp, &q, &mut force);
    let fmax = force.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if fmax > 1e-10 {
        return Err(Error::FitUnresolved(format!(
            "force {fmax:.2e} at z = {} is not negligible; enlarge the window",
            t.z[start]
        )));
    }
    let tail_z = &t.z[start..];
    let mut beta = Vec::with_capacity(t.k);
    let mut offset = Vec::with_capacity(t.k);
    for j in 0..t.k {
        let (b, c) = quad::linear_fit(tail_z, &t.f[j][start..]);
        beta.push(b);
        offset.push(c);
    }
    if beta.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::OrderingViolated(format!("asymptotic slopes not ordered: {beta:?}")));
    }
    let mut rates = Vec::with_capacity(t.k);
    for j in 0..t.k {
        rates.push(remainder_rate(t, j, beta[j], offset[j], 0.0));
    }
    let theta_hat = rates.iter().flatten().cloned().fold(f64::INFINITY, f64::min);
    if !theta_hat.is_finite() || theta_hat <= 0.0 {
        return Err(Error::FitUnresolved("remainder does not decay inside the window".into()));
    }
    let vartheta = beta.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min) / t.alpha;
    Ok(Asymptotics {
        beta,
        tau_plus: offset.clone(),
        tau_minus: offset.clone(),
        offset,
        decay_rates: rates,
        theta_hat,
        vartheta,
        theta0: 0.25 * vartheta,
        theta1: 0.5 * vartheta,
    })
}

/// Fitted decay rate of `|f_j - beta z - offset|` over samples with
/// `z >= z_from` where the remainder is between 1e-8 and 1e-2 times the
/// trajectory scale.
pub fn remainder_rate(t: &TodaTrajectory, j: usize, beta: f64, offset: f64, z_from: f64) -> Option<f64> {
    let scale = 1.0 + offset.abs();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..t.z.len() {
        if t.z[i] < z_from {
            continue;
        }
        let r = (t.f[j][i] - beta * t.z[i] - offset).abs();
        if r > 1e-8 * scale && r < 1e-2 * scale {
            xs.push(t.z[i]);
            ys.push(r.ln());
        }
    }
    if xs.len() < 8 {
        return None;
    }
    let (slope, _) = quad::linear_fit(&xs, &ys);
    Some(-slope)
}
