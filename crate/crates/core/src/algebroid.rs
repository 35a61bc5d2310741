//! Lie algebroids in a single chart.
//!
//! An algebroid of base dimension `n` and fiber rank `m` is given by its
//! anchor components `ρ_a^i(x)` and bracket structure functions `L^c_ab(x)`,
//! with `ρ(s_a) = ρ_a^i ∂_i` and `[s_a, s_b] = L^c_ab s_c`. The defining
//! identities are checked numerically at sample points:
//!
//! ```text
//! ρ_a^i ∂_i ρ_b^j − ρ_b^i ∂_i ρ_a^j = ρ_c^j L^c_ab
//! L^c_ab + L^c_ba = 0
//! Σ_cycl(abc) ( L^d_ab L^e_dc + ρ_c^i ∂_i L^e_ab ) = 0
//! ```

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar_field::{Expr, Node, Scalar};

#[derive(Debug, Clone)]
pub struct LieAlgebroid {
    name: String,
    n: usize,
    m: usize,
    /// `ρ_a^i` at `a * n + i`
    rho: Vec<Expr>,
    /// `L^c_ab` at `(c * m + a) * m + b`
    brackets: Vec<Expr>,
}

fn negated(e: &Expr) -> Expr {
    if e.is_zero() {
        return e.clone();
    }
    Expr::from_node(Node::Neg(Box::new(e.node().clone())), e.n_x(), 0)
}

impl LieAlgebroid {
    /// Algebroid with the given anchor rows (`anchor[a][i] = ρ_a^i`) and a
    /// zero bracket.
    pub fn new(
        name: impl Into<String>,
        n: usize,
        m: usize,
        anchor: Vec<Vec<Expr>>,
    ) -> Result<Self> {
        if m == 0 {
            return Err(Error::Dimension("fiber rank must be at least 1".into()));
        }
        if anchor.len() != m || anchor.iter().any(|row| row.len() != n) {
            return Err(Error::Dimension(format!(
                "anchor must be {m} rows of {n} expressions"
            )));
        }
        let rho: Vec<Expr> = anchor.into_iter().flatten().collect();
        if let Some(e) = rho.iter().find(|e| e.n_x() != n || e.n_y() != 0) {
            return Err(Error::Dimension(format!(
                "anchor expression `{e}` is not a function of x1..x{n}"
            )));
        }
        Ok(LieAlgebroid {
            name: name.into(),
            n,
            m,
            rho,
            brackets: vec![Expr::constant(0.0, n); m * m * m],
        })
    }

    /// Parse anchor rows and the bracket entries `(c, a, b, L^c_ab)` (0-based);
    /// each entry is mirrored to `L^c_ba = −L^c_ab`.
    pub fn parse(
        name: impl Into<String>,
        n: usize,
        m: usize,
        anchor: &[&[&str]],
        brackets: &[(usize, usize, usize, &str)],
    ) -> Result<Self> {
        let parse = |t: &str| {
            Expr::parse(t, n).map_err(|source| Error::Parse {
                context: format!("`{t}`"),
                source,
            })
        };
        let rows = anchor
            .iter()
            .map(|row| row.iter().map(|t| parse(t)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let mut alg = LieAlgebroid::new(name, n, m, rows)?;
        for &(c, a, b, t) in brackets {
            alg = alg.with_bracket(c, a, b, parse(t)?)?;
        }
        Ok(alg)
    }

    /// Tangent bundle of `R^n`: identity anchor, zero bracket.
    pub fn tangent_bundle(name: impl Into<String>, n: usize) -> Self {
        let anchor = (0..n)
            .map(|a| {
                (0..n)
                    .map(|i| Expr::constant(if a == i { 1.0 } else { 0.0 }, n))
                    .collect()
            })
            .collect();
        LieAlgebroid::new(name, n, n.max(1), anchor).expect("consistent shape")
    }

    fn check_indices(&self, c: usize, a: usize, b: usize) -> Result<()> {
        if c >= self.m || a >= self.m || b >= self.m {
            return Err(Error::Dimension(format!(
                "bracket index ({c},{a},{b}) out of range for rank {}",
                self.m
            )));
        }
        Ok(())
    }

    /// Set `L^c_ab = expr` and `L^c_ba = −expr`.
    pub fn with_bracket(mut self, c: usize, a: usize, b: usize, expr: Expr) -> Result<Self> {
        self.check_indices(c, a, b)?;
        if a == b {
            return Err(Error::InvalidArgument(format!(
                "bracket L^{c}_{a}{a} is zero by antisymmetry and cannot be set"
            )));
        }
        if expr.n_x() != self.n || expr.n_y() != 0 {
            return Err(Error::Dimension(format!(
                "bracket `{expr}` is not a function of x"
            )));
        }
        let (m, mirror) = (self.m, negated(&expr));
        self.brackets[(c * m + a) * m + b] = expr;
        self.brackets[(c * m + b) * m + a] = mirror;
        Ok(self)
    }

    /// Set the single table entry `L^c_ab` without touching `L^c_ba`.
    ///
    /// Used for bracket tables supplied in full, whose antisymmetry is then
    /// a property to verify rather than a given.
    pub fn with_raw_bracket(mut self, c: usize, a: usize, b: usize, expr: Expr) -> Result<Self> {
        self.check_indices(c, a, b)?;
        if expr.n_x() != self.n || expr.n_y() != 0 {
            return Err(Error::Dimension(format!(
                "bracket `{expr}` is not a function of x"
            )));
        }
        let m = self.m;
        self.brackets[(c * m + a) * m + b] = expr;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn base_dim(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.m
    }

    pub fn anchor_expr(&self, a: usize, i: usize) -> &Expr {
        &self.rho[a * self.n + i]
    }

    pub fn bracket_expr(&self, c: usize, a: usize, b: usize) -> &Expr {
        &self.brackets[(c * self.m + a) * self.m + b]
    }

    fn eval_all<S: Scalar>(&self, exprs: &[Expr], x: &[S]) -> Result<Vec<S>> {
        if x.len() != self.n {
            return Err(Error::Dimension(format!(
                "point has {} coordinates, base dimension is {}",
                x.len(),
                self.n
            )));
        }
        exprs
            .iter()
            .map(|e| {
                e.eval_with(x, &[])
                    .map_err(|err| Error::eval(&x.iter().map(Scalar::re).collect::<Vec<_>>(), err))
            })
            .collect()
    }

    /// `ρ_a^i(x)` laid out at `a * n + i`.
    pub fn anchor_at<S: Scalar>(&self, x: &[S]) -> Result<Vec<S>> {
        self.eval_all(&self.rho, x)
    }

    /// `L^c_ab(x)` laid out at `(c * m + a) * m + b`.
    pub fn brackets_at<S: Scalar>(&self, x: &[S]) -> Result<Vec<S>> {
        self.eval_all(&self.brackets, x)
    }

    /// Anchor as an `n×m` matrix with entry `(i, a) = ρ_a^i(x)`.
    pub fn anchor_matrix(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let rho = self.anchor_at(x)?;
        Ok(DMatrix::from_fn(self.n, self.m, |i, a| rho[a * self.n + i]))
    }

    /// `ρ_a^i(x) y^a`, the base velocity of the fiber vector `y`.
    pub fn push_forward<S: Scalar>(&self, x: &[S], y: &[S]) -> Result<Vec<S>> {
        let rho = self.anchor_at(x)?;
        Ok((0..self.n)
            .map(|i| (0..self.m).fold(S::zero(), |acc, a| acc + rho[a * self.n + i] * y[a]))
            .collect())
    }

    /// Residuals of the three structure identities at one point.
    fn residuals_at(&self, x: &[f64]) -> Result<[f64; 3]> {
        let (n, m) = (self.n, self.m);
        let rho = self.anchor_at(x)?;
        let lb = self.brackets_at(x)?;
        let grad = |e: &Expr| -> Result<Vec<f64>> {
            e.gradient_x(x, &[]).map_err(|err| Error::eval(x, err))
        };
        // ∂_i ρ_a^j at (a * n + j) * n + i
        let mut drho = vec![0.0; m * n * n];
        for (k, e) in self.rho.iter().enumerate() {
            for (i, g) in grad(e)?.into_iter().enumerate() {
                drho[k * n + i] = g;
            }
        }
        // ρ_c^i ∂_i L^e_ab at ((c * m + e) * m + a) * m + b
        let mut rho_dl = vec![0.0; m * m * m * m];
        for (k, e) in self.brackets.iter().enumerate() {
            if e.is_zero() {
                continue;
            }
            let g = grad(e)?;
            for c in 0..m {
                rho_dl[c * m * m * m + k] = (0..n).map(|i| rho[c * n + i] * g[i]).sum();
            }
        }
        let l = |c: usize, a: usize, b: usize| lb[(c * m + a) * m + b];

        let mut anchor_res = 0.0f64;
        for a in 0..m {
            for b in a + 1..m {
                for j in 0..n {
                    let mut lhs = 0.0;
                    for i in 0..n {
                        lhs += rho[a * n + i] * drho[(b * n + j) * n + i]
                            - rho[b * n + i] * drho[(a * n + j) * n + i];
                    }
                    let rhs: f64 = (0..m).map(|c| rho[c * n + j] * l(c, a, b)).sum();
                    anchor_res = anchor_res.max((lhs - rhs).abs());
                }
            }
        }

        let mut antisym_res = 0.0f64;
        for c in 0..m {
            for a in 0..m {
                for b in a..m {
                    antisym_res = antisym_res.max((l(c, a, b) + l(c, b, a)).abs());
                }
            }
        }

        let mut jacobi_res = 0.0f64;
        for a in 0..m {
            for b in a + 1..m {
                for c in b + 1..m {
                    for e in 0..m {
                        let mut total = 0.0;
                        for (p, q, r) in [(a, b, c), (b, c, a), (c, a, b)] {
                            for d in 0..m {
                                total += l(d, p, q) * l(e, d, r);
                            }
                            total += rho_dl[((r * m + e) * m + p) * m + q];
                        }
                        jacobi_res = jacobi_res.max(total.abs());
                    }
                }
            }
        }
        Ok([anchor_res, antisym_res, jacobi_res])
    }

    /// Check the structure identities on `sample`. Evaluation is parallel
    /// over points; the report is independent of the worker count.
    pub fn check_structure_identities(
        &self,
        sample: &[Vec<f64>],
        tol: f64,
    ) -> Result<ValidationReport> {
        if sample.is_empty() {
            return Err(Error::InvalidArgument("sample set is empty".into()));
        }
        let per_point: Vec<Result<[f64; 3]>> =
            sample.par_iter().map(|x| self.residuals_at(x)).collect();
        let mut worst = [
            IdentityResidual::default(),
            IdentityResidual::default(),
            IdentityResidual::default(),
        ];
        for (x, res) in sample.iter().zip(per_point) {
            let res = res?;
            for (slot, value) in worst.iter_mut().zip(res) {
                if value > slot.max || slot.worst_point.is_none() {
                    slot.max = slot.max.max(value);
                    slot.worst_point = Some(x.clone());
                }
            }
        }
        let [anchor, antisymmetry, jacobi] = worst;
        let pass = anchor.max <= tol && antisymmetry.max <= tol && jacobi.max <= tol;
        Ok(ValidationReport {
            algebroid: self.name.clone(),
            samples: sample.len(),
            tolerance: tol,
            anchor,
            antisymmetry,
            jacobi,
            pass,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IdentityResidual {
    /// Largest absolute residual over the sample.
    pub max: f64,
    pub worst_point: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub algebroid: String,
    pub samples: usize,
    pub tolerance: f64,
    pub anchor: IdentityResidual,
    pub antisymmetry: IdentityResidual,
    pub jacobi: IdentityResidual,
    pub pass: bool,
}

impl ValidationReport {
    pub fn max_residual(&self) -> f64 {
        self.anchor
            .max
            .max(self.antisymmetry.max)
            .max(self.jacobi.max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn so3() -> LieAlgebroid {
        LieAlgebroid::parse(
            "so3",
            0,
            3,
            &[&[], &[], &[]],
            &[(2, 0, 1, "1"), (0, 1, 2, "1"), (1, 2, 0, "1")],
        )
        .unwrap()
    }

    #[test]
    fn tangent_bundle_anchor_is_identity() {
        let tm = LieAlgebroid::tangent_bundle("tm", 2);
        assert_eq!(
            tm.anchor_matrix(&[0.3, -2.0]).unwrap(),
            DMatrix::identity(2, 2)
        );
    }

    #[test]
    fn point_base_anchor_is_empty() {
        let a = so3().anchor_matrix(&[]).unwrap();
        assert_eq!(a.shape(), (0, 3));
    }

    #[test]
    fn anchor_matrix_layout() {
        let alg = LieAlgebroid::parse("t", 2, 2, &[&["1", "0"], &["x1", "1"]], &[]).unwrap();
        let a = alg.anchor_matrix(&[2.0, 0.0]).unwrap();
        // rows of the input are ρ_a; the matrix holds (i, a)
        assert_eq!(a, DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]));
    }

    #[test]
    fn tangent_bundle_residuals_vanish() {
        let tm = LieAlgebroid::tangent_bundle("tm", 2);
        let r = tm
            .check_structure_identities(&[vec![0.1, 0.2], vec![-1.0, 3.0]], 0.0)
            .unwrap();
        assert_eq!(r.max_residual(), 0.0);
        assert!(r.pass);
    }

    #[test]
    fn so3_passes() {
        let r = so3().check_structure_identities(&[vec![]], 1e-12).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn raw_perturbation_breaks_antisymmetry() {
        let alg = so3()
            .with_raw_bracket(2, 0, 1, Expr::constant(1.01, 0))
            .unwrap();
        let r = alg.check_structure_identities(&[vec![]], 1e-8).unwrap();
        assert!(!r.pass);
        assert!((r.antisymmetry.max - 0.01).abs() < 1e-12);
    }

    #[test]
    fn non_integrable_frame_fails_anchor_identity() {
        // X1 = ∂1, X2 = ∂2 + x1 ∂3 with zero bracket: [X1, X2] = ∂3 ≠ 0
        let alg =
            LieAlgebroid::parse("heis", 3, 2, &[&["1", "0", "0"], &["0", "1", "x1"]], &[]).unwrap();
        let r = alg
            .check_structure_identities(&[vec![0.0, 0.0, 0.0]], 1e-8)
            .unwrap();
        assert!((r.anchor.max - 1.0).abs() < 1e-15);
        assert!(!r.pass);
    }

    #[test]
    fn domain_error_names_point() {
        let alg = LieAlgebroid::parse("bad", 1, 1, &[&["log(x1)"]], &[]).unwrap();
        match alg.check_structure_identities(&[vec![1.0], vec![-1.0]], 1e-8) {
            Err(Error::Eval { at, .. }) => assert_eq!(at, vec![-1.0]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn diagonal_bracket_rejected() {
        assert!(so3().with_bracket(0, 1, 1, Expr::constant(1.0, 0)).is_err());
    }
}
