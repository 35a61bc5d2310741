//! Small dense linear algebra.
//!
//! Row-major `Vec<S>` solves are generic over [`Scalar`] so that metric
//! inverses can carry dual-number derivatives. Everything spectral (SVD,
//! symmetric eigenvalues, Cholesky) goes through `nalgebra` on plain `f64`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::scalar_field::Scalar;

/// LU factorization with partial pivoting of a row-major `n×n` matrix.
#[derive(Debug, Clone)]
pub struct Lu<S> {
    n: usize,
    lu: Vec<S>,
    perm: Vec<usize>,
    odd: bool,
}

impl<S: Scalar> Lu<S> {
    /// Factor `a`. Returns `None` when a pivot is exactly zero or below
    /// `rel_tol` times the largest entry.
    pub fn new(a: &[S], n: usize, rel_tol: f64) -> Option<Self> {
        assert_eq!(a.len(), n * n);
        let scale = a.iter().fold(0.0f64, |m, v| m.max(v.re().abs()));
        if scale == 0.0 && n > 0 {
            return None;
        }
        let mut lu = a.to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut odd = false;
        for col in 0..n {
            let (pivot_row, pivot_abs) =
                (col..n)
                    .map(|r| (r, lu[r * n + col].re().abs()))
                    .fold(
                        (col, -1.0),
                        |best, cur| if cur.1 > best.1 { cur } else { best },
                    );
            if pivot_abs <= rel_tol * scale {
                return None;
            }
            if pivot_row != col {
                for c in 0..n {
                    lu.swap(col * n + c, pivot_row * n + c);
                }
                perm.swap(col, pivot_row);
                odd = !odd;
            }
            let pivot = lu[col * n + col];
            for r in col + 1..n {
                let factor = lu[r * n + col] / pivot;
                lu[r * n + col] = factor;
                for c in col + 1..n {
                    lu[r * n + c] = lu[r * n + c] - factor * lu[col * n + c];
                }
            }
        }
        Some(Lu { n, lu, perm, odd })
    }

    pub fn solve(&self, b: &[S]) -> Vec<S> {
        let n = self.n;
        let mut x: Vec<S> = self.perm.iter().map(|&p| b[p]).collect();
        for r in 0..n {
            for c in 0..r {
                x[r] = x[r] - self.lu[r * n + c] * x[c];
            }
        }
        for r in (0..n).rev() {
            for c in r + 1..n {
                x[r] = x[r] - self.lu[r * n + c] * x[c];
            }
            x[r] = x[r] / self.lu[r * n + r];
        }
        x
    }

    /// Row-major inverse.
    pub fn inverse(&self) -> Vec<S> {
        let n = self.n;
        let mut inv = vec![S::zero(); n * n];
        let mut e = vec![S::zero(); n];
        for col in 0..n {
            e.iter_mut().for_each(|v| *v = S::zero());
            e[col] = S::one();
            let x = self.solve(&e);
            for r in 0..n {
                inv[r * n + col] = x[r];
            }
        }
        inv
    }

    pub fn determinant(&self) -> S {
        let n = self.n;
        let mut det = if self.odd { -S::one() } else { S::one() };
        for i in 0..n {
            det = det * self.lu[i * n + i];
        }
        det
    }
}

/// Moore-Penrose pseudo-inverse. Singular values below `rel_cutoff·σ_max`
/// are treated as zero.
pub fn pseudo_inverse(a: &DMatrix<f64>, rel_cutoff: f64) -> DMatrix<f64> {
    let (rows, cols) = a.shape();
    if rows == 0 || cols == 0 {
        return DMatrix::zeros(cols, rows);
    }
    let svd = a.clone().svd(true, true);
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let s_max = svd.singular_values.max();
    let mut out = DMatrix::zeros(cols, rows);
    if s_max == 0.0 {
        return out;
    }
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > rel_cutoff * s_max {
            out += (v_t.row(k).transpose() / s) * u.column(k).transpose();
        }
    }
    out
}

/// Orthonormal basis (as columns) of the numerical null space of `a`:
/// right singular vectors with singular value `≤ rel_eps·σ_max`. A zero
/// matrix has the whole space as its null space.
pub fn null_space(a: &DMatrix<f64>, rel_eps: f64) -> DMatrix<f64> {
    let (rows, cols) = a.shape();
    if cols == 0 {
        return DMatrix::zeros(0, 0);
    }
    // pad to at least square so the SVD returns a full V
    let padded = if rows < cols {
        let mut p = DMatrix::zeros(cols, cols);
        p.view_mut((0, 0), (rows, cols)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let s_max = svd.singular_values.max();
    let keep: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s_max == 0.0 || s <= rel_eps * s_max)
        .map(|(k, _)| k)
        .collect();
    let mut basis = DMatrix::zeros(cols, keep.len());
    for (j, &k) in keep.iter().enumerate() {
        basis.set_column(j, &v_t.row(k).transpose());
    }
    basis
}

/// Numerical rank with relative cutoff.
pub fn rank(a: &DMatrix<f64>, rel_cutoff: f64) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    let s = a.clone().singular_values();
    let s_max = s.max();
    s.iter()
        .filter(|&&v| s_max > 0.0 && v > rel_cutoff * s_max)
        .count()
}

/// Eigen-decomposition of the symmetric part of `a`, eigenvalues ascending.
pub fn symmetric_eigen(a: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let sym = (a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = DVector::from_iterator(order.len(), order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(a.nrows(), order.len());
    for (j, &i) in order.iter().enumerate() {
        vectors.set_column(j, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

pub fn min_eigenvalue(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 {
        return f64::INFINITY;
    }
    symmetric_eigen(a).0[0]
}

/// Upper-triangular `C` with `G = Cᵀ C`, if `G` is positive definite.
pub fn cholesky_upper(g: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    g.clone().cholesky().map(|c| c.l().transpose())
}

pub fn max_abs(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Build a `DMatrix` from a row-major slice.
pub fn from_row_major(rows: usize, cols: usize, data: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(rows, cols, data)
}
