//! Smooth cut-off functions: the bending switch `eta(t)` and the nested
//! plateau windows localizing each bump.

use serde::Serialize;

/// Quintic smoothstep: 0 for `s <= 0`, 1 for `s >= 1`, C^2 in between.
/// Returns value and first two derivatives in `s`.
pub fn smoothstep(s: f64) -> [f64; 3] {
    if s <= 0.0 {
        [0.0, 0.0, 0.0]
    } else if s >= 1.0 {
        [1.0, 0.0, 0.0]
    } else {
        let s2 = s * s;
        let s3 = s2 * s;
        [
            s3 * (10.0 - 15.0 * s + 6.0 * s2),
            30.0 * s2 * (1.0 - s) * (1.0 - s),
            60.0 * s * (1.0 - s) * (1.0 - 2.0 * s),
        ]
    }
}

/// Switch `eta(t)` with `eta = 0` for `t < t1` and `eta = 1` for `t > t2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Switch {
    pub t1: f64,
    pub t2: f64,
}

impl Default for Switch {
    fn default() -> Self {
        Self { t1: 1.0, t2: 2.0 }
    }
}

impl Switch {
    /// `[eta, eta', eta'']` at `t`.
    pub fn eval(&self, t: f64) -> [f64; 3] {
        let w = self.t2 - self.t1;
        let [v, d, dd] = smoothstep((t - self.t1) / w);
        [v, d / w, dd / (w * w)]
    }
}

/// Plateau window: 1 for `|s| <= a`, 0 for `|s| >= b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Plateau {
    pub a: f64,
    pub b: f64,
}

impl Plateau {
    pub fn eval(&self, s: f64) -> f64 {
        let t = s.abs();
        if t <= self.a {
            1.0
        } else if t >= self.b {
            0.0
        } else {
            1.0 - smoothstep((t - self.a) / (self.b - self.a))[0]
        }
    }

    /// `[value, d/ds, d^2/ds^2]`.
    pub fn eval_all(&self, s: f64) -> [f64; 3] {
        let t = s.abs();
        let sg = if s < 0.0 { -1.0 } else { 1.0 };
        let w = self.b - self.a;
        let [v, d, dd] = smoothstep((t - self.a) / w);
        [1.0 - v, -sg * d / w, -dd / (w * w)]
    }
}

fn dyadic(n: i32) -> f64 {
    let p = 2f64.powi(n);
    (p - 1.0) / p
}

/// The four nested windows: rho, eta^-, eta, eta^+.
pub const RHO: Plateau = Plateau { a: 31.0 / 32.0, b: 63.0 / 64.0 };
pub const ETA_MINUS: Plateau = Plateau { a: 63.0 / 64.0, b: 127.0 / 128.0 };
pub const ETA: Plateau = Plateau { a: 127.0 / 128.0, b: 255.0 / 256.0 };
pub const ETA_PLUS: Plateau = Plateau { a: 255.0 / 256.0, b: 511.0 / 512.0 };

/// Values of `(rho_j, eta_j^-, eta_j, eta_j^+)` at bent coordinate `x_j`.
pub fn cutoffs_etaj(x_j: f64, d_star: f64) -> [f64; 4] {
    let s = x_j.abs() / d_star;
    [RHO.eval(s), ETA_MINUS.eval(s), ETA.eval(s), ETA_PLUS.eval(s)]
}

/// Thresholds `(2^n - 1)/2^n` used by the windows, for reporting.
pub fn thresholds() -> [(f64, f64); 4] {
    [(dyadic(5), dyadic(6)), (dyadic(6), dyadic(7)), (dyadic(7), dyadic(8)), (dyadic(8), dyadic(9))]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn thresholds_match_constants() {
        let t = thresholds();
        assert_eq!((RHO.a, RHO.b), t[0]);
        assert_eq!((ETA_PLUS.a, ETA_PLUS.b), t[3]);
    }

    #[test]
    fn endpoints() {
        assert_eq!(cutoffs_etaj(0.0, 2.3), [1.0; 4]);
        assert_eq!(cutoffs_etaj(2.3, 2.3), [0.0; 4]);
    }

    #[test]
    fn switch_derivatives_match_differences() {
        let sw = Switch { t1: 1.0, t2: 2.5 };
        for i in 1..30 {
            let t = 0.9 + 0.06 * i as f64;
            let h = 1e-5;
            let [_, d, dd] = sw.eval(t);
            let fd = (sw.eval(t + h)[0] - sw.eval(t - h)[0]) / (2.0 * h);
            let fdd = (sw.eval(t + h)[1] - sw.eval(t - h)[1]) / (2.0 * h);
            assert!((d - fd).abs() < 1e-8 && (dd - fdd).abs() < 1e-6);
        }
    }

    proptest! {
        #[test]
        fn nesting_identities(x in -3.0f64..3.0, d in 0.5f64..5.0) {
            let [rho, em, e, ep] = cutoffs_etaj(x, d);
            prop_assert_eq!(e * em, em);
            prop_assert_eq!(ep * e, e);
            prop_assert_eq!(rho * em, rho);
        }

        #[test]
        fn switch_is_monotone(a in 0.0f64..4.0, b in 0.0f64..4.0) {
            let sw = Switch::default();
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(sw.eval(lo)[0] <= sw.eval(hi)[0]);
        }
    }
}
