//! A-connections on an auxiliary bundle `F` of rank `k`, fiber metrics, and
//! the local quantities built from them.
//!
//! Index convention: `Γ^β_{αa}` has the section index `α` first and the
//! direction index `a` second, i.e. `D_{s_a} σ_α = Γ^β_{αa} σ_β`. Flat
//! storage puts `Γ^β_{αa}` at `(β * k + α) * m + a`.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::algebroid::LieAlgebroid;
use crate::error::{Error, Result};
use crate::levi_civita;
use crate::linalg;
use crate::scalar_field::{Dual, Expr, Scalar};
use crate::tensor::{Tensor3, Tensor4};

fn parse_grid(n: usize, text: &str) -> Result<Expr> {
    Expr::parse(text, n).map_err(|source| Error::Parse {
        context: format!("`{text}`"),
        source,
    })
}

fn eval_exprs<S: Scalar>(exprs: &[Expr], x: &[S]) -> Result<Vec<S>> {
    exprs
        .iter()
        .map(|e| {
            e.eval_with(x, &[])
                .map_err(|err| Error::eval(&x.iter().map(Scalar::re).collect::<Vec<_>>(), err))
        })
        .collect()
}

/// Symmetric fiber metric `g_αβ(x)` on a rank-`k` bundle.
#[derive(Debug, Clone)]
pub struct RiemannMetric {
    n: usize,
    k: usize,
    /// full `k×k`, mirrored from the upper triangle
    entries: Vec<Expr>,
}

impl RiemannMetric {
    /// `upper[α]` lists `g_αβ` for `β = α..k`.
    pub fn new(n: usize, upper: Vec<Vec<Expr>>) -> Result<Self> {
        let k = upper.len();
        if k == 0 {
            return Err(Error::Dimension("metric must have rank at least 1".into()));
        }
        let mut entries = vec![Expr::constant(0.0, n); k * k];
        for (alpha, row) in upper.into_iter().enumerate() {
            if row.len() != k - alpha {
                return Err(Error::Dimension(format!(
                    "metric row {} must hold {} upper-triangular entries",
                    alpha + 1,
                    k - alpha
                )));
            }
            for (off, e) in row.into_iter().enumerate() {
                if e.n_x() != n || e.n_y() != 0 {
                    return Err(Error::Dimension(format!(
                        "metric entry `{e}` is not a function of x"
                    )));
                }
                let beta = alpha + off;
                entries[beta * k + alpha] = e.clone();
                entries[alpha * k + beta] = e;
            }
        }
        Ok(RiemannMetric { n, k, entries })
    }

    pub fn parse(n: usize, upper: &[&[&str]]) -> Result<Self> {
        let rows = upper
            .iter()
            .map(|row| {
                row.iter()
                    .map(|t| parse_grid(n, t))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        RiemannMetric::new(n, rows)
    }

    /// Constant identity metric.
    pub fn euclidean(n: usize, k: usize) -> Self {
        let upper = (0..k)
            .map(|a| {
                (a..k)
                    .map(|b| Expr::constant(if a == b { 1.0 } else { 0.0 }, n))
                    .collect()
            })
            .collect();
        RiemannMetric::new(n, upper).expect("consistent shape")
    }

    pub fn rank(&self) -> usize {
        self.k
    }

    pub fn base_dim(&self) -> usize {
        self.n
    }

    pub fn entry(&self, alpha: usize, beta: usize) -> &Expr {
        &self.entries[alpha * self.k + beta]
    }

    /// Row-major `g_αβ(x)`.
    pub fn values_at<S: Scalar>(&self, x: &[S]) -> Result<Vec<S>> {
        eval_exprs(&self.entries, x)
    }

    /// `g(x)` and its derivative along `dx`, both row-major.
    pub fn directional_at<S: Scalar>(&self, x: &[S], dx: &[S]) -> Result<(Vec<S>, Vec<S>)> {
        let xd: Vec<Dual<S>> = x.iter().zip(dx).map(|(&v, &d)| Dual::new(v, d)).collect();
        let vals = eval_exprs(&self.entries, &xd)?;
        Ok((
            vals.iter().map(|d| d.re).collect(),
            vals.iter().map(|d| d.eps).collect(),
        ))
    }

    pub fn matrix(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        Ok(DMatrix::from_row_slice(self.k, self.k, &self.values_at(x)?))
    }

    /// Smallest eigenvalue of `g` over `sample`; errors if any is at or below
    /// `threshold`.
    pub fn check_positive_definite(&self, sample: &[Vec<f64>], threshold: f64) -> Result<f64> {
        let mins: Vec<Result<f64>> = sample
            .par_iter()
            .map(|x| Ok(linalg::min_eigenvalue(&self.matrix(x)?)))
            .collect();
        let mut lowest = f64::INFINITY;
        for (x, m) in sample.iter().zip(mins) {
            let m = m?;
            if m <= threshold {
                return Err(Error::NotPositiveDefinite {
                    at: x.clone(),
                    min_eigenvalue: m,
                });
            }
            lowest = lowest.min(m);
        }
        Ok(lowest)
    }
}

/// A local section `σ = z^α(x) σ_α` of `F`.
#[derive(Debug, Clone)]
pub struct SectionField {
    components: Vec<Expr>,
}

impl SectionField {
    pub fn new(components: Vec<Expr>) -> Self {
        SectionField { components }
    }

    pub fn parse(n: usize, components: &[&str]) -> Result<Self> {
        Ok(SectionField {
            components: components
                .iter()
                .map(|t| parse_grid(n, t))
                .collect::<Result<_>>()?,
        })
    }

    pub fn rank(&self) -> usize {
        self.components.len()
    }

    pub fn values_at<S: Scalar>(&self, x: &[S]) -> Result<Vec<S>> {
        eval_exprs(&self.components, x)
    }

    pub fn directional_at(&self, x: &[f64], dx: &[f64]) -> Result<Vec<f64>> {
        Ok(self.directional_full(x, dx)?.1)
    }

    fn directional_full(&self, x: &[f64], dx: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let xd: Vec<Dual<f64>> = x.iter().zip(dx).map(|(&v, &d)| Dual::new(v, d)).collect();
        let vals = eval_exprs(&self.components, &xd)?;
        Ok((
            vals.iter().map(|d| d.re).collect(),
            vals.iter().map(|d| d.eps).collect(),
        ))
    }
}

/// Where the connection coefficients come from.
#[derive(Debug, Clone)]
pub enum CoefficientSource {
    /// Closed-form `Γ^β_{αa}(x)` at `(β * k + α) * m + a`.
    Expressions(Vec<Expr>),
    /// Levi-Civita connection of a metric on the algebroid itself.
    LeviCivita(RiemannMetric),
}

/// An A-connection in a rank-`k` bundle over an algebroid of rank `m`.
#[derive(Debug, Clone)]
pub struct AConnection {
    n: usize,
    k: usize,
    m: usize,
    linear: bool,
    source: CoefficientSource,
}

impl AConnection {
    /// From `gamma[β][α][a]`. `linear` marks a connection on the algebroid
    /// itself (`F = E`), which requires `k = m`.
    pub fn from_exprs(
        n: usize,
        m: usize,
        gamma: Vec<Vec<Vec<Expr>>>,
        linear: bool,
    ) -> Result<Self> {
        let k = gamma.len();
        if k == 0 {
            return Err(Error::Dimension(
                "connection must have bundle rank at least 1".into(),
            ));
        }
        if linear && k != m {
            return Err(Error::NotLinear { k, m });
        }
        let mut flat = Vec::with_capacity(k * k * m);
        for (beta, plane) in gamma.into_iter().enumerate() {
            if plane.len() != k || plane.iter().any(|row| row.len() != m) {
                return Err(Error::Dimension(format!(
                    "gamma[{beta}] must be a {k}×{m} grid of expressions"
                )));
            }
            for e in plane.into_iter().flatten() {
                if e.n_x() != n || e.n_y() != 0 {
                    return Err(Error::Dimension(format!(
                        "connection entry `{e}` is not a function of x"
                    )));
                }
                flat.push(e);
            }
        }
        Ok(AConnection {
            n,
            k,
            m,
            linear,
            source: CoefficientSource::Expressions(flat),
        })
    }

    pub fn parse(n: usize, m: usize, gamma: &[&[&[&str]]], linear: bool) -> Result<Self> {
        let grid = gamma
            .iter()
            .map(|plane| {
                plane
                    .iter()
                    .map(|row| {
                        row.iter()
                            .map(|t| parse_grid(n, t))
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        AConnection::from_exprs(n, m, grid, linear)
    }

    /// `Γ = 0`.
    pub fn flat(n: usize, k: usize, m: usize, linear: bool) -> Result<Self> {
        let grid = vec![vec![vec![Expr::constant(0.0, n); m]; k]; k];
        AConnection::from_exprs(n, m, grid, linear)
    }

    /// The Levi-Civita connection of `metric` on an algebroid of rank `k`.
    pub fn levi_civita(metric: RiemannMetric) -> Self {
        AConnection {
            n: metric.base_dim(),
            k: metric.rank(),
            m: metric.rank(),
            linear: true,
            source: CoefficientSource::LeviCivita(metric),
        }
    }

    pub fn bundle_rank(&self) -> usize {
        self.k
    }

    pub fn direction_rank(&self) -> usize {
        self.m
    }

    pub fn is_linear(&self) -> bool {
        self.linear
    }

    pub fn source(&self) -> &CoefficientSource {
        &self.source
    }

    fn check(&self, alg: &LieAlgebroid) -> Result<()> {
        if alg.rank() != self.m || alg.base_dim() != self.n {
            return Err(Error::Dimension(format!(
                "connection expects an algebroid with n = {}, m = {} (got n = {}, m = {})",
                self.n,
                self.m,
                alg.base_dim(),
                alg.rank()
            )));
        }
        Ok(())
    }

    /// Flat `Γ^β_{αa}(x)` at `(β * k + α) * m + a`, over any scalar type.
    pub fn coefficients_at<S: Scalar>(&self, alg: &LieAlgebroid, x: &[S]) -> Result<Vec<S>> {
        self.check(alg)?;
        match &self.source {
            CoefficientSource::Expressions(exprs) => eval_exprs(exprs, x),
            CoefficientSource::LeviCivita(metric) => {
                levi_civita::coefficients_generic(alg, metric, x)
            }
        }
    }

    /// `Γ^β_{αa}(x)` indexed `[β, α, a]`.
    pub fn gamma(&self, alg: &LieAlgebroid, x: &[f64]) -> Result<Tensor3> {
        Ok(Tensor3::from_vec(
            [self.k, self.k, self.m],
            self.coefficients_at(alg, x)?,
        ))
    }

    /// `M^β_α = Γ^β_{αa}(x) y^a` as a row-major `k×k` matrix.
    pub fn contracted(&self, alg: &LieAlgebroid, x: &[f64], y: &[f64]) -> Result<DMatrix<f64>> {
        let g = self.coefficients_at(alg, x)?;
        let (k, m) = (self.k, self.m);
        Ok(DMatrix::from_fn(k, k, |beta, alpha| {
            (0..m).map(|a| g[(beta * k + alpha) * m + a] * y[a]).sum()
        }))
    }
}

/// `(D_a z)^β = ρ_a^i ∂_i z^β + Γ^β_{αa} z^α` at `x`.
pub fn covariant_derivative(
    conn: &AConnection,
    alg: &LieAlgebroid,
    sigma: &SectionField,
    a: usize,
    x: &[f64],
) -> Result<Vec<f64>> {
    let (k, m, n) = (conn.k, conn.m, conn.n);
    if a >= m {
        return Err(Error::InvalidArgument(format!(
            "direction index {a} out of range for rank {m}"
        )));
    }
    if sigma.rank() != k {
        return Err(Error::Dimension(format!(
            "section has {} components, bundle rank is {k}",
            sigma.rank()
        )));
    }
    let rho = alg.anchor_at(x)?;
    let (z, dz) = sigma.directional_full(x, &rho[a * n..(a + 1) * n])?;
    let gamma = conn.coefficients_at(alg, x)?;
    Ok((0..k)
        .map(|beta| {
            dz[beta]
                + (0..k)
                    .map(|alpha| gamma[(beta * k + alpha) * m + a] * z[alpha])
                    .sum::<f64>()
        })
        .collect())
}

/// `(a, α, β) ↦ ρ_a^i ∂_i g_αβ − Γ^γ_{αa} g_γβ − Γ^γ_{βa} g_αγ`, which vanishes
/// identically exactly when `g` is parallel.
pub fn compatibility_residual(
    conn: &AConnection,
    metric: &RiemannMetric,
    alg: &LieAlgebroid,
    x: &[f64],
) -> Result<Tensor3> {
    let (k, m, n) = (conn.k, conn.m, conn.n);
    if metric.rank() != k {
        return Err(Error::Dimension(format!(
            "metric rank {} differs from bundle rank {k}",
            metric.rank()
        )));
    }
    let rho = alg.anchor_at(x)?;
    let gamma = conn.coefficients_at(alg, x)?;
    let mut out = Tensor3::zeros([m, k, k]);
    for a in 0..m {
        let (g, dg) = metric.directional_at(x, &rho[a * n..(a + 1) * n])?;
        for alpha in 0..k {
            for beta in 0..k {
                let mut v = dg[alpha * k + beta];
                for c in 0..k {
                    v -= gamma[(c * k + alpha) * m + a] * g[c * k + beta];
                    v -= gamma[(c * k + beta) * m + a] * g[alpha * k + c];
                }
                out[[a, alpha, beta]] = v;
            }
        }
    }
    Ok(out)
}

/// `T^a_bc = Γ^a_{cb} − Γ^a_{bc} − L^a_bc`, the components of
/// `∇_{s_b} s_c − ∇_{s_c} s_b − [s_b, s_c]`.
pub fn torsion(conn: &AConnection, alg: &LieAlgebroid, x: &[f64]) -> Result<Tensor3> {
    if !conn.linear {
        return Err(Error::NotLinear {
            k: conn.k,
            m: conn.m,
        });
    }
    let m = conn.m;
    let gamma = conn.coefficients_at(alg, x)?;
    let l = alg.brackets_at(x)?;
    Ok(Tensor3::from_fn([m, m, m], |[a, b, c]| {
        gamma[(a * m + c) * m + b] - gamma[(a * m + b) * m + c] - l[(a * m + b) * m + c]
    }))
}

/// Curvature components `R^β_{αab}`, indexed `[β, α, a, b]`, of
/// `R(s_a, s_b) σ_α = D_a D_b σ_α − D_b D_a σ_α − D_{[s_a, s_b]} σ_α`:
///
/// ```text
/// R^β_{αab} = ρ_a(Γ^β_{αb}) − ρ_b(Γ^β_{αa}) + Γ^γ_{αb} Γ^β_{γa} − Γ^γ_{αa} Γ^β_{γb} − L^c_ab Γ^β_{αc}
/// ```
///
/// Derivatives of `Γ` along the anchor directions are exact (dual numbers,
/// nested once more for Levi-Civita coefficients).
pub fn curvature(conn: &AConnection, alg: &LieAlgebroid, x: &[f64]) -> Result<Tensor4> {
    let (k, m, n) = (conn.k, conn.m, conn.n);
    let rho = alg.anchor_at(x)?;
    let gamma = conn.coefficients_at(alg, x)?;
    let l = alg.brackets_at(x)?;
    // ρ_a(Γ) for every direction a
    let mut dgamma = Vec::with_capacity(m);
    for a in 0..m {
        let xd: Vec<Dual<f64>> = (0..n).map(|i| Dual::new(x[i], rho[a * n + i])).collect();
        let gd = conn.coefficients_at(alg, &xd)?;
        dgamma.push(gd.into_iter().map(|d| d.eps).collect::<Vec<f64>>());
    }
    let g = |beta: usize, alpha: usize, a: usize| gamma[(beta * k + alpha) * m + a];
    Ok(Tensor4::from_fn([k, k, m, m], |[beta, alpha, a, b]| {
        let mut v = dgamma[a][(beta * k + alpha) * m + b] - dgamma[b][(beta * k + alpha) * m + a];
        for c in 0..k {
            v += g(c, alpha, b) * g(beta, c, a) - g(c, alpha, a) * g(beta, c, b);
        }
        for c in 0..m {
            v -= l[(c * m + a) * m + b] * g(beta, alpha, c);
        }
        v
    }))
}
