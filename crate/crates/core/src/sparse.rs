//! Thin wrapper over faer's sparse LU for the square systems assembled
//! here.

use faer::linalg::solvers::Solve;
use faer::sparse::{linalg::solvers::Lu, SparseColMat, Triplet};
use faer::Mat;

use crate::error::{Error, Result};

/// Triplet accumulator for an `n x n` matrix. Duplicate entries are summed.
#[derive(Debug, Clone)]
pub struct SparseBuilder {
    pub n: usize,
    entries: Vec<Triplet<usize, usize, f64>>,
}

impl SparseBuilder {
    pub fn new(n: usize) -> Self {
        Self { n, entries: Vec::new() }
    }

    pub fn with_capacity(n: usize, nnz: usize) -> Self {
        Self { n, entries: Vec::with_capacity(nnz) }
    }

    #[inline]
    pub fn push(&mut self, row: usize, col: usize, val: f64) {
        if val != 0.0 {
            self.entries.push(Triplet::new(row, col, val));
        }
    }

    pub fn extend(&mut self, other: SparseBuilder) {
        self.entries.extend(other.entries);
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// Matrix-vector product straight from the triplets.
    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for t in &self.entries {
            y[t.row] += t.val * x[t.col];
        }
        y
    }

    pub fn factor(&self) -> Result<Factored> {
        let a = SparseColMat::<usize, f64>::try_new_from_triplets(self.n, self.n, &self.entries)
            .map_err(|e| Error::SolverSingular(format!("matrix assembly failed: {e:?}")))?;
        let lu = a.sp_lu().map_err(|e| Error::SolverSingular(format!("sparse LU failed: {e:?}")))?;
        Ok(Factored { n: self.n, lu })
    }
}

pub struct Factored {
    n: usize,
    lu: Lu<usize, f64>,
}

impl Factored {
    /// Solve `A x = b`; a non-finite result is reported as singular.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        assert_eq!(b.len(), self.n);
        let mut rhs = Mat::<f64>::from_fn(self.n, 1, |i, _| b[i]);
        self.lu.solve_in_place(rhs.as_mut());
        let x: Vec<f64> = (0..self.n).map(|i| rhs[(i, 0)]).collect();
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::SolverSingular("factorization produced non-finite values".into()));
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        let mut b = SparseBuilder::new(3);
        for (r, c, v) in [(0, 0, 2.0), (0, 1, 1.0), (1, 1, 3.0), (2, 0, 1.0), (2, 2, 4.0), (2, 2, 1.0)] {
            b.push(r, c, v);
        }
        let x = b.factor().unwrap().solve(&[3.0, 3.0, 6.0]).unwrap();
        let y = b.mul(&x);
        for (a, e) in y.iter().zip([3.0, 3.0, 6.0]) {
            assert!((a - e).abs() < 1e-14);
        }
    }
}
