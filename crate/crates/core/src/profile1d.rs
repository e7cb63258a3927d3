//! The one-dimensional homoclinic `w'' - w + w^p = 0`, the principal
//! eigenpair of `L0 = d^2/dx^2 + p w^{p-1} - 1`, and the integral constants
//! used by the projection formulas.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad;

/// Power nonlinearity `u^p` with `p >= 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerNonlinearity {
    pub p: f64,
}

impl PowerNonlinearity {
    pub fn new(p: f64) -> Result<Self> {
        if !(p >= 2.0) || !p.is_finite() {
            return Err(Error::ConfigInvalid(format!("p must be >= 2, got {p}")));
        }
        Ok(Self { p })
    }
}

/// `sech(y)^q` evaluated through `exp(-|y|)` so that large arguments do not
/// overflow.
fn sech_pow(y: f64, q: f64) -> f64 {
    let e = (-2.0 * y.abs()).exp();
    (2.0f64).powf(q) * (-q * y.abs()).exp() / (1.0 + e).powf(q)
}

/// Value and two derivatives of `K sech(m x)^r`.
fn sech_family(k: f64, m: f64, r: f64, x: f64) -> [f64; 3] {
    let s = sech_pow(m * x, r);
    let t = (m * x).tanh();
    let s2 = sech_pow(m * x, 2.0);
    [k * s, -k * r * m * s * t, k * r * m * m * s * (r * t * t - s2)]
}

/// Closed-form homoclinic and normalized principal eigenfunction.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct HomoclinicProfile {
    pub p: f64,
    /// Leading coefficient of `w(x) ~ A_p exp(-|x|)`.
    pub amplitude: f64,
    /// `w(0)`.
    peak: f64,
    /// Prefactor of `Z = zeta_peak sech(m x)^r`.
    zeta_peak: f64,
}

impl HomoclinicProfile {
    pub fn new(p: f64) -> Result<Self> {
        PowerNonlinearity::new(p)?;
        let q = 2.0 / (p - 1.0);
        let peak = ((p + 1.0) / 2.0).powf(1.0 / (p - 1.0));
        let amplitude = peak * (2.0f64).powf(q);
        let mut prof = Self { p, amplitude, peak, zeta_peak: 1.0 };
        let r = (p + 1.0) / (p - 1.0);
        let m = (p - 1.0) / 2.0;
        let norm2 = quad::integrate_line(|x| sech_pow(m * x, 2.0 * r), r * m, 1e-15)?;
        prof.zeta_peak = 1.0 / norm2.sqrt();
        Ok(prof)
    }

    fn m(&self) -> f64 {
        (self.p - 1.0) / 2.0
    }

    /// `(w, w', w'')` at `x`.
    pub fn w_all(&self, x: f64) -> [f64; 3] {
        sech_family(self.peak, self.m(), 2.0 / (self.p - 1.0), x)
    }

    pub fn w(&self, x: f64) -> f64 {
        self.w_all(x)[0]
    }

    pub fn wp(&self, x: f64) -> f64 {
        self.w_all(x)[1]
    }

    pub fn wpp(&self, x: f64) -> f64 {
        self.w_all(x)[2]
    }

    /// `(Z, Z', Z'')` at `x`.
    pub fn z_all(&self, x: f64) -> [f64; 3] {
        sech_family(self.zeta_peak, self.m(), (self.p + 1.0) / (self.p - 1.0), x)
    }

    pub fn z(&self, x: f64) -> f64 {
        self.z_all(x)[0]
    }

    /// Potential `p w^{p-1} - 1` of `L0`.
    pub fn potential(&self, x: f64) -> f64 {
        self.p * self.w(x).powf(self.p - 1.0) - 1.0
    }

    /// `L0 Z - lambda_1 Z` at `x` using analytic derivatives.
    pub fn eigen_defect(&self, x: f64) -> f64 {
        let [z, _, zpp] = self.z_all(x);
        zpp + self.potential(x) * z - lambda1(self.p) * z
    }

    /// `w'' - w + w^p` at `x`.
    pub fn ode_residual(&self, x: f64) -> f64 {
        let [w, _, wpp] = self.w_all(x);
        wpp - w + w.powf(self.p)
    }
}

/// Principal eigenvalue `(p-1)(p+3)/4` of `L0`.
pub fn lambda1(p: f64) -> f64 {
    (p - 1.0) * (p + 3.0) / 4.0
}

/// Integral constants consumed by the reduction.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ProfileConstants {
    pub p: f64,
    pub lambda1: f64,
    pub c0: f64,
    pub c1: f64,
    pub d0: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    /// Interaction constant from the extrapolated limit sequence.
    pub cp_limit: f64,
    /// Interaction constant `2 A_p^2` from the fitted amplitude.
    pub cp_amplitude: f64,
    /// Interaction constant used downstream (the limit value).
    pub big_cp: f64,
    /// `C_p / c0`.
    pub small_cp: f64,
    pub amplitude: f64,
    /// `int w^{p+1}`.
    pub w_pow_integral: f64,
    /// `int Z'^2`.
    pub zp_sq: f64,
    /// `int w'' Z`.
    pub wpp_z: f64,
}

/// Quadrature settings for [`constants`].
#[derive(Debug, Clone, Copy)]
pub struct QuadratureSpec {
    pub tol: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { tol: 1e-13 }
    }
}

/// The interaction sequence `exp(s) [w(s/2)^2 + w'(s/2)^2]`.
pub fn interaction_sequence(prof: &HomoclinicProfile, s: f64) -> f64 {
    let [w, wp, _] = prof.w_all(0.5 * s);
    s.exp() * (w * w + wp * wp)
}

/// Amplitude fit: `w(x) exp(x)` at x = 10, 20, 30 extrapolated.
pub fn fitted_amplitude(prof: &HomoclinicProfile) -> f64 {
    let v: Vec<f64> = [10.0, 20.0, 30.0].iter().map(|&x: &f64| prof.w(x) * x.exp()).collect();
    quad::aitken(v[0], v[1], v[2])
}

pub fn constants(p: f64, spec: QuadratureSpec) -> Result<ProfileConstants> {
    let prof = HomoclinicProfile::new(p)?;
    let tol = spec.tol;
    let line = |f: &dyn Fn(f64) -> f64| quad::integrate_line(f, 1.0, tol);
    let c0 = line(&|x| prof.wp(x).powi(2))?;
    let c1 = line(&|x| prof.wp(x) * prof.z_all(x)[1])?;
    let d0 = line(&|x| prof.z(x).powi(2))?;
    let d1 = line(&|x| x * prof.z_all(x)[1] * prof.z(x))?;
    let d2 = line(&|x| prof.z_all(x)[2] * prof.z(x))?;
    let d3 = line(&|x| prof.potential(x) * prof.z(x).powi(2))?;
    let zp_sq = line(&|x| prof.z_all(x)[1].powi(2))?;
    let wpp_z = line(&|x| prof.wpp(x) * prof.z(x))?;
    let w_pow_integral = line(&|x| prof.w(x).powf(p + 1.0))?;
    let seq: Vec<f64> = [20.0, 30.0, 40.0].iter().map(|&s| interaction_sequence(&prof, s)).collect();
    let cp_limit = quad::aitken(seq[0], seq[1], seq[2]);
    let amp = fitted_amplitude(&prof);
    let cp_amplitude = 2.0 * amp * amp;
    Ok(ProfileConstants {
        p,
        lambda1: lambda1(p),
        c0,
        c1,
        d0,
        d1,
        d2,
        d3,
        cp_limit,
        cp_amplitude,
        big_cp: cp_limit,
        small_cp: cp_limit / c0,
        amplitude: amp,
        w_pow_integral,
        zp_sq,
        wpp_z,
    })
}

/// Number of eigenvalues of the symmetric tridiagonal matrix
/// (`diag`, `off`) strictly greater than `x` (Sturm count).
pub fn sturm_count_above(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count_below = 0;
    let mut q = diag[0] - x;
    if q < 0.0 {
        count_below += 1;
    }
    for i in 1..diag.len() {
        let qq = if q == 0.0 { 1e-300 } else { q };
        q = diag[i] - x - off[i - 1] * off[i - 1] / qq;
        if q < 0.0 {
            count_below += 1;
        }
    }
    diag.len() - count_below
}

/// The `idx`-th largest eigenvalue (0-based) of a symmetric tridiagonal
/// matrix, by bisection on the Sturm count.
pub fn tridiagonal_eigenvalue_desc(diag: &[f64], off: &[f64], idx: usize) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..diag.len() {
        let r = if i > 0 { off[i - 1].abs() } else { 0.0 } + if i < off.len() { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count_above(diag, off, mid) > idx {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Dirichlet three-point discretization of `L0` on `[-l, l]` with spacing `h`.
pub fn discrete_l0(prof: &HomoclinicProfile, l: f64, h: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = (2.0 * l / h).round() as usize - 1;
    let xs: Vec<f64> = (1..=n).map(|i| -l + i as f64 * h).collect();
    let diag = xs.iter().map(|&x| -2.0 / (h * h) + prof.potential(x)).collect();
    let off = vec![1.0 / (h * h); n - 1];
    (xs, diag, off)
}

/// Result of the discrete spectral check of `L0`.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    pub h: f64,
    /// Top three eigenvalues at spacing `h`.
    pub top_h: [f64; 3],
    /// Top three eigenvalues at spacing `2h`.
    pub top_2h: [f64; 3],
    /// Richardson-extrapolated top three eigenvalues.
    pub extrapolated: [f64; 3],
}

/// Top of the spectrum of `L0` on `[-l, l]` from two tridiagonal
/// eigensolves (spacings `h` and `2h`) combined by Richardson extrapolation.
pub fn discrete_spectrum(p: f64, l: f64, h: f64) -> Result<SpectrumReport> {
    let prof = HomoclinicProfile::new(p)?;
    let top = |hh: f64| {
        let (_, d, o) = discrete_l0(&prof, l, hh);
        [0, 1, 2].map(|i| tridiagonal_eigenvalue_desc(&d, &o, i))
    };
    let a = top(h);
    let b = top(2.0 * h);
    let extrapolated = [0, 1, 2].map(|i| (4.0 * a[i] - b[i]) / 3.0);
    Ok(SpectrumReport { h, top_h: a, top_2h: b, extrapolated })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn peak_values() {
        assert!((HomoclinicProfile::new(2.0).unwrap().w(0.0) - 1.5).abs() < 1e-15);
        assert!((HomoclinicProfile::new(3.0).unwrap().w(0.0) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn rejects_small_exponent() {
        assert!(HomoclinicProfile::new(1.5).is_err());
    }

    #[test]
    fn decay_amplitude_p2() {
        let prof = HomoclinicProfile::new(2.0).unwrap();
        // w(x) e^x = 6 (1 + e^{-x})^{-2}
        for x in [10.0, 20.0, 30.0] {
            let exact = 6.0 / (1.0 + (-x as f64).exp()).powi(2);
            assert!((prof.w(x) * f64::exp(x) - exact).abs() < 1e-12);
        }
        assert!((prof.w(10.0) * 10f64.exp() - 6.0).abs() < 1e-3);
        assert!((fitted_amplitude(&prof) - 6.0).abs() < 1e-10);
    }

    #[test]
    fn translation_mode_in_kernel() {
        let prof = HomoclinicProfile::new(2.0).unwrap();
        // d/dx of the ODE residual: w''' - w' + p w^{p-1} w'; w''' by differencing w''
        for i in 0..200 {
            let x = -20.0 + 0.2 * i as f64;
            let h = 1e-4;
            let wppp = (prof.wpp(x + h) - prof.wpp(x - h)) / (2.0 * h);
            let r = wppp + prof.potential(x) * prof.wp(x);
            assert!(r.abs() < 1e-7, "x={x} r={r}");
        }
    }

    #[test]
    fn w_cubed_integral_p2() {
        let c = constants(2.0, QuadratureSpec::default()).unwrap();
        // (27/8) * 2 * int sech^6 = 7.2
        assert!((c.w_pow_integral - 7.2).abs() < 1e-12);
        assert!((c.d2 + c.d3 - c.lambda1 * c.d0).abs() < 1e-11);
    }

    #[test]
    fn sturm_on_known_matrix() {
        // tridiag(-1, 2, -1) of size n has eigenvalues 2 - 2 cos(k pi/(n+1))
        let n = 50;
        let d = vec![2.0; n];
        let o = vec![-1.0; n - 1];
        let top = tridiagonal_eigenvalue_desc(&d, &o, 0);
        let exact = 2.0 - 2.0 * (n as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos();
        assert!((top - exact).abs() < 1e-12);
    }
}
