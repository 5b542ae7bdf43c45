//! Symmetric positive definite sparse solves over faer's Cholesky.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Llt;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};

use crate::error::{Error, Result};

/// Accumulates `(row, col, value)` entries; duplicates are summed.
#[derive(Debug, Clone, Default)]
pub struct TripletBuilder {
    n: usize,
    entries: Vec<Triplet<usize, usize, f64>>,
}

impl TripletBuilder {
    pub fn new(n: usize) -> Self {
        TripletBuilder { n, entries: Vec::new() }
    }

    pub fn add(&mut self, r: usize, c: usize, v: f64) {
        self.entries.push(Triplet::new(r, c, v));
    }

    /// Adds weight `w` to the graph Laplacian block of edge `(i, j)`.
    pub fn add_edge(&mut self, i: usize, j: usize, w: f64) {
        self.add(i, i, w);
        self.add(j, j, w);
        self.add(i, j, -w);
        self.add(j, i, -w);
    }

    pub fn factor(&self) -> Result<Cholesky> {
        let m = SparseColMat::<usize, f64>::try_new_from_triplets(self.n, self.n, &self.entries)
            .map_err(|e| Error::Solver(format!("{e:?}")))?;
        let llt = m.sp_cholesky(Side::Lower).map_err(|e| Error::Solver(format!("{e:?}")))?;
        Ok(Cholesky { n: self.n, llt })
    }
}

/// A factored SPD matrix, reusable across right-hand sides.
pub struct Cholesky {
    n: usize,
    llt: Llt<usize, f64>,
}

impl Cholesky {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves for several right-hand sides given as columns.
    pub fn solve_columns(&self, rhs: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let mut b = Mat::<f64>::from_fn(self.n, rhs.len(), |i, j| rhs[j][i]);
        self.llt.solve_in_place(b.as_mut());
        (0..rhs.len()).map(|j| (0..self.n).map(|i| b[(i, j)]).collect()).collect()
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        self.solve_columns(std::slice::from_ref(&rhs.to_vec())).pop().expect("one column")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_laplacian_with_anchor() {
        // 0 - 1 - 2 with vertex 0 pinned by an extra diagonal term.
        let mut t = TripletBuilder::new(3);
        t.add_edge(0, 1, 1.0);
        t.add_edge(1, 2, 1.0);
        t.add(0, 0, 1.0);
        let x = t.factor().unwrap().solve(&[0.0, 0.0, 1.0]);
        assert!((x[0] - 1.0).abs() < 1e-12);
        assert!((x[1] - 2.0).abs() < 1e-12);
        assert!((x[2] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn singular_matrix_is_an_error() {
        let mut t = TripletBuilder::new(2);
        t.add_edge(0, 1, 1.0);
        assert!(t.factor().is_err());
    }
}
