//! Quadrature helpers: adaptive Gauss-Kronrod on intervals and
//! fourth-order cumulative rules on uniform samples.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Adaptive 15-point Gauss-Kronrod integration of `f` over `[a, b]`.
///
/// Intervals are bisected until the Gauss/Kronrod difference of each leaf is
/// below its share of `tol`; fails if `max_depth` bisections do not suffice.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    integrate_depth(&f, a, b, tol, 0)
}

fn integrate_depth<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: usize) -> Result<f64> {
    let (val, err) = gk15(f, a, b);
    if err <= tol.max(1e-15 * val.abs()) {
        return Ok(val);
    }
    if depth >= 40 {
        return Err(Error::QuadratureNotConverged(format!(
            "error estimate {err:.3e} on [{a}, {b}] above {tol:.3e}"
        )));
    }
    let m = 0.5 * (a + b);
    Ok(integrate_depth(f, a, m, 0.5 * tol, depth + 1)? + integrate_depth(f, m, b, 0.5 * tol, depth + 1)?)
}

/// Integral over the real line of a function decaying at least like
/// `exp(-rate |x|)`, truncated where that envelope falls below 1e-17.
pub fn integrate_line<F: Fn(f64) -> f64>(f: F, rate: f64, tol: f64) -> Result<f64> {
    let l = 39.0 / rate;
    let pieces = 16;
    let mut total = 0.0;
    for i in 0..pieces {
        let a = -l + 2.0 * l * i as f64 / pieces as f64;
        let b = -l + 2.0 * l * (i + 1) as f64 / pieces as f64;
        total += integrate(&f, a, b, tol / pieces as f64)?;
    }
    Ok(total)
}

/// Cumulative integral `F[i] = int_{x_0}^{x_i} f` of uniformly spaced
/// samples: sixth-order panel rules (six-point stencils, one-sided near the
/// ends), falling back to lower order for short inputs.
pub fn cumulative(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    if n < 6 {
        for i in 1..n {
            out[i] = out[i - 1] + 0.5 * h * (f[i - 1] + f[i]);
        }
        return out;
    }
    const END0: [f64; 6] = [475.0, 1427.0, -798.0, 482.0, -173.0, 27.0];
    const END1: [f64; 6] = [-27.0, 637.0, 1022.0, -258.0, 77.0, -11.0];
    const MID: [f64; 6] = [11.0, -93.0, 802.0, 802.0, -93.0, 11.0];
    let c = h / 1440.0;
    let dot = |w: &[f64; 6], start: usize, rev: bool| -> f64 {
        (0..6).map(|m| w[m] * if rev { f[start - m] } else { f[start + m] }).sum::<f64>()
    };
    for i in 0..n - 1 {
        let piece = if i == 0 {
            dot(&END0, 0, false)
        } else if i == 1 {
            dot(&END1, 0, false)
        } else if i == n - 2 {
            dot(&END0, n - 1, true)
        } else if i == n - 3 {
            dot(&END1, n - 1, true)
        } else {
            dot(&MID, i - 2, false)
        };
        out[i + 1] = out[i] + c * piece;
    }
    out
}

/// Tail integrals `T[i] = int_{x_i}^{x_{n-1}} f` of uniform samples.
pub fn cumulative_tail(f: &[f64], h: f64) -> Vec<f64> {
    let c = cumulative(f, h);
    let total = *c.last().unwrap_or(&0.0);
    c.iter().map(|v| total - v).collect()
}

/// Composite trapezoid rule on uniform samples.
pub fn trapezoid(f: &[f64], h: f64) -> f64 {
    match f.len() {
        0 | 1 => 0.0,
        n => h * (f.iter().sum::<f64>() - 0.5 * (f[0] + f[n - 1])),
    }
}

/// Sixth-order integral of uniform samples over the full range.
pub fn simpson_like(f: &[f64], h: f64) -> f64 {
    *cumulative(f, h).last().unwrap_or(&0.0)
}

/// Aitken extrapolation of three terms of a geometrically converging sequence.
pub fn aitken(s0: f64, s1: f64, s2: f64) -> f64 {
    let d1 = s2 - s1;
    let d0 = s1 - s0;
    let denom = d1 - d0;
    if denom.abs() < 1e-300 || d1 == 0.0 {
        return s2;
    }
    s2 - d1 * d1 / denom
}

/// Least-squares line fit `y ~ slope*x + intercept`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}
