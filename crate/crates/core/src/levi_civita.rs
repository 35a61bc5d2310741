//! Levi-Civita connection of a fiber metric on a Lie algebroid, and the
//! semispray of a regular Lagrangian.
//!
//! ```text
//! Γ^a_bc = ½ g^{ad} ( ρ_b(g_cd) + ρ_c(g_bd) − ρ_d(g_bc) + L^e_dc g_eb + L^e_db g_ec − L^e_bc g_ed )
//!
//! G^a = ¼ g^{ab} ( ∂²L/∂y^b∂x^i ρ_c^i y^c − ρ_b^i ∂L/∂x^i + L^c_bd y^d ∂L/∂y^c ),
//! g_ab = ½ ∂²L/∂y^a∂y^b
//! ```
//!
//! Second derivatives of the Lagrangian use nested dual numbers, so both
//! formulas are exact up to rounding.

use crate::algebroid::LieAlgebroid;
use crate::connection::{AConnection, RiemannMetric};
use crate::error::{Error, Result};
use crate::linalg::Lu;
use crate::scalar_field::{Dual, Expr, Node, Scalar};
use crate::tensor::Tensor3;

/// Pivot threshold, relative to the largest entry, below which a metric is
/// treated as singular.
const SINGULAR_REL_TOL: f64 = 1e-14;

fn reals<S: Scalar>(x: &[S]) -> Vec<f64> {
    x.iter().map(Scalar::re).collect()
}

/// Flat `Γ^a_bc` at `(a * m + b) * m + c`, the layout of
/// [`AConnection::coefficients_at`].
pub fn coefficients_generic<S: Scalar>(
    alg: &LieAlgebroid,
    metric: &RiemannMetric,
    x: &[S],
) -> Result<Vec<S>> {
    let (n, m) = (alg.base_dim(), alg.rank());
    if metric.rank() != m {
        return Err(Error::NotLinear {
            k: metric.rank(),
            m,
        });
    }
    let rho = alg.anchor_at(x)?;
    let l = alg.brackets_at(x)?;
    // ρ_b(g_cd) at (b * m + c) * m + d
    let mut g = Vec::new();
    let mut rho_dg = Vec::with_capacity(m * m * m);
    for b in 0..m {
        let (vals, deriv) = metric.directional_at(x, &rho[b * n..(b + 1) * n])?;
        g = vals;
        rho_dg.extend(deriv);
    }
    let lu =
        Lu::new(&g, m, SINGULAR_REL_TOL).ok_or_else(|| Error::SingularMetric { at: reals(x) })?;
    let gm = |a: usize, b: usize| g[a * m + b];
    let lb = |c: usize, a: usize, b: usize| l[(c * m + a) * m + b];
    let dg = |b: usize, c: usize, d: usize| rho_dg[(b * m + c) * m + d];

    let mut out = vec![S::zero(); m * m * m];
    let mut rhs = vec![S::zero(); m];
    for b in 0..m {
        for c in 0..m {
            for (d, slot) in rhs.iter_mut().enumerate() {
                let mut v = dg(b, c, d) + dg(c, b, d) - dg(d, b, c);
                for e in 0..m {
                    v = v + lb(e, d, c) * gm(e, b) + lb(e, d, b) * gm(e, c)
                        - lb(e, b, c) * gm(e, d);
                }
                *slot = v.scale(0.5);
            }
            for (a, v) in lu.solve(&rhs).into_iter().enumerate() {
                out[(a * m + b) * m + c] = v;
            }
        }
    }
    Ok(out)
}

/// `Γ^a_bc(x)` indexed `[a, b, c]`.
pub fn levi_civita_coeffs(
    alg: &LieAlgebroid,
    metric: &RiemannMetric,
    x: &[f64],
) -> Result<Tensor3> {
    let m = alg.rank();
    Ok(Tensor3::from_vec(
        [m, m, m],
        coefficients_generic(alg, metric, x)?,
    ))
}

/// The energy `E(x, y) = g_ab(x) y^a y^b` as an expression in `(x, y)`.
pub fn energy_lagrangian(metric: &RiemannMetric) -> Expr {
    let (n, k) = (metric.base_dim(), metric.rank());
    let mut terms: Option<Node> = None;
    for a in 0..k {
        for b in 0..k {
            let g = metric.entry(a, b);
            if g.is_zero() {
                continue;
            }
            let term = Node::Mul(
                Box::new(Node::Mul(Box::new(g.node().clone()), Box::new(Node::Y(a)))),
                Box::new(Node::Y(b)),
            );
            terms = Some(match terms {
                None => term,
                Some(acc) => Node::Add(Box::new(acc), Box::new(term)),
            });
        }
    }
    Expr::from_node(terms.unwrap_or(Node::Const(0.0)), n, k)
}

fn lift1(v: &[f64], seed: Option<&[f64]>) -> Vec<Dual<f64>> {
    match seed {
        Some(d) => v.iter().zip(d).map(|(&a, &b)| Dual::new(a, b)).collect(),
        None => v.iter().map(|&a| Dual::constant(a)).collect(),
    }
}

fn lift2(v: &[f64], inner: Option<&[f64]>, outer: Option<&[f64]>) -> Vec<Dual<Dual<f64>>> {
    (0..v.len())
        .map(|i| {
            let inner_d = inner.map_or(0.0, |d| d[i]);
            let outer_d = outer.map_or(0.0, |d| d[i]);
            Dual::new(Dual::new(v[i], inner_d), Dual::constant(outer_d))
        })
        .collect()
}

fn unit(len: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; len];
    e[i] = 1.0;
    e
}

/// Fiber Hessian `g_ab = ½ ∂²L/∂y^a∂y^b`, row-major.
pub fn lagrangian_metric(lag: &Expr, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    let m = y.len();
    let mut g = vec![0.0; m * m];
    for a in 0..m {
        for b in a..m {
            let ea = unit(m, a);
            let eb = unit(m, b);
            let v = lag
                .eval_with(&lift2(x, None, None), &lift2(y, Some(&ea), Some(&eb)))
                .map_err(|e| Error::eval(x, e))?;
            g[a * m + b] = 0.5 * v.eps.eps;
            g[b * m + a] = 0.5 * v.eps.eps;
        }
    }
    Ok(g)
}

/// Semispray coefficients `G^a_L(x, y)` of a regular Lagrangian.
pub fn semispray_coeffs(alg: &LieAlgebroid, lag: &Expr, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    let (n, m) = (alg.base_dim(), alg.rank());
    if lag.n_x() != n || lag.n_y() != m || y.len() != m {
        return Err(Error::Dimension(format!(
            "Lagrangian must be a function of x1..x{n}, y1..y{m}"
        )));
    }
    let rho = alg.anchor_at(x)?;
    let l = alg.brackets_at(x)?;
    let ev = |e: crate::error::EvalError| Error::eval(x, e);

    let g = lagrangian_metric(lag, x, y)?;
    let lu = Lu::new(&g, m, SINGULAR_REL_TOL).ok_or_else(|| Error::SingularLagrangian {
        at: x.to_vec(),
        y: y.to_vec(),
    })?;

    // base velocity v^i = ρ_c^i y^c
    let v = alg.push_forward(x, y)?;
    let mut rhs = vec![0.0; m];
    for (b, slot) in rhs.iter_mut().enumerate() {
        let eb = unit(m, b);
        // ∂/∂x along v of ∂L/∂y^b
        let mixed = lag
            .eval_with(&lift2(x, None, Some(&v)), &lift2(y, Some(&eb), None))
            .map_err(ev)?
            .eps
            .eps;
        // ρ_b^i ∂L/∂x^i
        let along_rho = lag
            .eval_with(&lift1(x, Some(&rho[b * n..(b + 1) * n])), &lift1(y, None))
            .map_err(ev)?
            .eps;
        let mut bracket_term = 0.0;
        for c in 0..m {
            let coeff: f64 = (0..m).map(|d| l[(c * m + b) * m + d] * y[d]).sum();
            if coeff != 0.0 {
                let dl_dyc = lag.partial_with(n + c, x, y).map_err(ev)?;
                bracket_term += coeff * dl_dyc;
            }
        }
        *slot = 0.25 * (mixed - along_rho + bracket_term);
    }
    Ok(lu.solve(&rhs))
}

/// The energy spray of a metric: `G^a(x, y)` from the energy Lagrangian,
/// alongside the Levi-Civita coefficients it must reproduce.
#[derive(Debug, Clone)]
pub struct SprayCoefficients {
    alg: LieAlgebroid,
    lagrangian: Expr,
    connection: AConnection,
}

impl SprayCoefficients {
    pub fn energy(alg: &LieAlgebroid, metric: &RiemannMetric) -> Self {
        SprayCoefficients {
            alg: alg.clone(),
            lagrangian: energy_lagrangian(metric),
            connection: AConnection::levi_civita(metric.clone()),
        }
    }

    pub fn lagrangian(&self) -> &Expr {
        &self.lagrangian
    }

    pub fn connection(&self) -> &AConnection {
        &self.connection
    }

    /// `G^a(x, y)` from the Lagrangian formula.
    pub fn g(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        semispray_coeffs(&self.alg, &self.lagrangian, x, y)
    }

    /// `½ Γ^a_bc y^b y^c` from the Levi-Civita coefficients.
    pub fn half_gamma_yy(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        let m = self.alg.rank();
        let gamma = self.connection.coefficients_at(&self.alg, x)?;
        Ok((0..m)
            .map(|a| {
                let mut s = 0.0;
                for b in 0..m {
                    for c in 0..m {
                        s += gamma[(a * m + b) * m + c] * y[b] * y[c];
                    }
                }
                0.5 * s
            })
            .collect())
    }
}
