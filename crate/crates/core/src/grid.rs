//! Uniform grids on the truncated half-strip `[-x_max, x_max] x [0, z_max]`
//! (fields are even in `z`) and sampled even functions of `z`.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid2D {
    pub x_max: f64,
    pub z_max: f64,
    pub nx: usize,
    pub nz: usize,
    pub hx: f64,
    pub hz: f64,
}

impl Grid2D {
    /// Grid with spacing close to `hx`, `hz`; `x = 0` is always a node.
    pub fn new(x_max: f64, z_max: f64, hx: f64, hz: f64) -> Result<Self> {
        if !(x_max > 0.0 && z_max > 0.0 && hx > 0.0 && hz > 0.0) {
            return Err(Error::ConfigInvalid("grid extents and spacings must be positive".into()));
        }
        let half = (x_max / hx).round().max(2.0) as usize;
        let nzi = (z_max / hz).round().max(2.0) as usize;
        let x_max = half as f64 * hx;
        let z_max = nzi as f64 * hz;
        Ok(Self { x_max, z_max, nx: 2 * half + 1, nz: nzi + 1, hx, hz })
    }

    pub fn x(&self, i: usize) -> f64 {
        -self.x_max + i as f64 * self.hx
    }

    pub fn z(&self, k: usize) -> f64 {
        k as f64 * self.hz
    }

    pub fn len(&self) -> usize {
        self.nx * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn idx(&self, k: usize, i: usize) -> usize {
        k * self.nx + i
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.nx).map(|i| self.x(i)).collect()
    }

    pub fn zs(&self) -> Vec<f64> {
        (0..self.nz).map(|k| self.z(k)).collect()
    }
}

/// Scalar field on a [`Grid2D`], stored row by row (one row per `z`).
#[derive(Debug, Clone, PartialEq)]
pub struct Field2D {
    pub grid: Grid2D,
    pub data: Vec<f64>,
}

impl Field2D {
    pub fn zeros(grid: Grid2D) -> Self {
        Self { grid, data: vec![0.0; grid.len()] }
    }

    pub fn from_fn<F: Fn(f64, f64) -> f64>(grid: Grid2D, f: F) -> Self {
        let mut data = Vec::with_capacity(grid.len());
        for k in 0..grid.nz {
            for i in 0..grid.nx {
                data.push(f(grid.x(i), grid.z(k)));
            }
        }
        Self { grid, data }
    }

    pub fn at(&self, k: usize, i: usize) -> f64 {
        self.data[self.grid.idx(k, i)]
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.data[k * self.grid.nx..(k + 1) * self.grid.nx]
    }

    pub fn sup(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Field2D) -> f64 {
        self.data.iter().zip(&other.data).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn scaled(&self, c: f64) -> Field2D {
        Field2D { grid: self.grid, data: self.data.iter().map(|v| c * v).collect() }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Five-point Laplacian with even reflection across `z = 0`. Boundary
    /// nodes (`|x| = x_max`, `z = z_max`) are set to zero.
    pub fn laplacian(&self) -> Field2D {
        let g = self.grid;
        let mut out = Field2D::zeros(g);
        let (ihx2, ihz2) = (1.0 / (g.hx * g.hx), 1.0 / (g.hz * g.hz));
        for k in 0..g.nz - 1 {
            let below = if k == 0 { 1 } else { k - 1 };
            for i in 1..g.nx - 1 {
                let c = self.at(k, i);
                let v = (self.at(k, i - 1) - 2.0 * c + self.at(k, i + 1)) * ihx2
                    + (self.at(below, i) - 2.0 * c + self.at(k + 1, i)) * ihz2;
                out.data[g.idx(k, i)] = v;
            }
        }
        out
    }

    /// Mask of interior nodes (those where [`Field2D::laplacian`] is defined).
    pub fn is_interior(&self, k: usize, i: usize) -> bool {
        k + 1 < self.grid.nz && i > 0 && i + 1 < self.grid.nx
    }

    /// Row-major CSV with a commented metadata header.
    pub fn to_csv(&self, name: &str) -> String {
        let g = self.grid;
        let mut s = format!(
            "# multibump-field v1 name={name} nx={} nz={} x_max={} z_max={} hx={} hz={}\nx,z,{name}\n",
            g.nx, g.nz, g.x_max, g.z_max, g.hx, g.hz
        );
        for k in 0..g.nz {
            for i in 0..g.nx {
                s.push_str(&format!("{},{},{:.17e}\n", g.x(i), g.z(k), self.at(k, i)));
            }
        }
        s
    }

    /// Little-endian binary dump: 8-byte magic, grid metadata, then values.
    pub fn to_bytes(&self) -> Vec<u8> {
        let g = self.grid;
        let mut out = b"MBFIELD1".to_vec();
        for v in [g.nx as f64, g.nz as f64, g.x_max, g.z_max, g.hx, g.hz] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }
}

/// Even function of `z` sampled on `[0, z_max]` with spacing `h`, with
/// its first two derivatives.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvenSeries {
    pub h: f64,
    pub v: Vec<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
}

impl EvenSeries {
    pub fn zeros(h: f64, n: usize) -> Self {
        Self { h, v: vec![0.0; n], d1: vec![0.0; n], d2: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    pub fn z_max(&self) -> f64 {
        (self.v.len() - 1) as f64 * self.h
    }

    pub fn is_zero(&self) -> bool {
        self.v.iter().chain(&self.d1).chain(&self.d2).all(|x| *x == 0.0)
    }

    /// `[v, v', v'']` at `z` (even extension, zero beyond the window).
    pub fn eval(&self, z: f64) -> [f64; 3] {
        let sg = if z < 0.0 { -1.0 } else { 1.0 };
        let a = z.abs();
        let n = self.v.len() - 1;
        if a > n as f64 * self.h {
            return [0.0; 3];
        }
        let s = a / self.h;
        let i = (s.floor() as usize).min(n.saturating_sub(1));
        let t = s - i as f64;
        if n == 0 {
            return [self.v[0], 0.0, self.d2[0]];
        }
        let h = self.h;
        let herm = |y0: f64, y1: f64, m0: f64, m1: f64| {
            let t2 = t * t;
            let t3 = t2 * t;
            (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + t) * m0 * h + (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * m1 * h
        };
        let v = herm(self.v[i], self.v[i + 1], self.d1[i], self.d1[i + 1]);
        let d1 = herm(self.d1[i], self.d1[i + 1], self.d2[i], self.d2[i + 1]);
        let d2 = (1.0 - t) * self.d2[i] + t * self.d2[i + 1];
        [v, sg * d1, d2]
    }

    /// Weighted sup norms `sup e^{a z} |v|`, same for `v'` and `v''`.
    pub fn weighted_sups(&self, a: f64) -> [f64; 3] {
        let mut out = [0.0f64; 3];
        for i in 0..self.v.len() {
            let w = (a * i as f64 * self.h).exp();
            out[0] = out[0].max(w * self.v[i].abs());
            out[1] = out[1].max(w * self.d1[i].abs());
            out[2] = out[2].max(w * self.d2[i].abs());
        }
        out
    }

    pub fn sup(&self) -> f64 {
        self.v.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn add(&self, o: &EvenSeries) -> EvenSeries {
        let d = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x + y).collect();
        EvenSeries { h: self.h, v: d(&self.v, &o.v), d1: d(&self.d1, &o.d1), d2: d(&self.d2, &o.d2) }
    }

    pub fn sub(&self, o: &EvenSeries) -> EvenSeries {
        let d = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x - y).collect();
        EvenSeries { h: self.h, v: d(&self.v, &o.v), d1: d(&self.d1, &o.d1), d2: d(&self.d2, &o.d2) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_contains_origin_and_ends() {
        let g = Grid2D::new(10.0, 5.0, 0.1, 0.1).unwrap();
        assert_eq!(g.nx, 201);
        assert!((g.x((g.nx - 1) / 2)).abs() < 1e-14);
        assert!((g.z(g.nz - 1) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn laplacian_of_quadratic_is_exact() {
        let g = Grid2D::new(3.0, 2.0, 0.1, 0.2).unwrap();
        let f = Field2D::from_fn(g, |x, z| x * x + 3.0 * z * z);
        let l = f.laplacian();
        for k in 0..g.nz - 1 {
            for i in 1..g.nx - 1 {
                assert!((l.at(k, i) - 8.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn even_series_interpolates_cosine() {
        let h = 0.05;
        let n = 201;
        let s = EvenSeries {
            h,
            v: (0..n).map(|i| (i as f64 * h).cos()).collect(),
            d1: (0..n).map(|i| -(i as f64 * h).sin()).collect(),
            d2: (0..n).map(|i| -(i as f64 * h).cos()).collect(),
        };
        for z in [-3.33, 0.017, 4.999] {
            let e = s.eval(z);
            assert!((e[0] - z.cos()).abs() < 5e-8);
            assert!((e[1] + z.sin()).abs() < 5e-8);
            assert!((e[2] + z.cos()).abs() < 1e-3);
        }
    }
}
